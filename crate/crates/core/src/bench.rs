//! Wall-clock comparison of the four engines over a range of sequence lengths.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{fit_engine, EngineConfig};
use crate::error::{config, input, Result};
use crate::model::ReturnSeries;
use crate::report::{EmSettings, Engine, FitReport};

pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_REPETITIONS: usize = 3;
/// Minimum particle count the filters accept.
pub const DEFAULT_PARTICLES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub engine: Engine,
    pub sequence_length: usize,
    pub iterations: usize,
    /// Filter size for C2/C4, absent for the variational engines.
    pub particles: Option<usize>,
    pub estep_seconds: f64,
    pub mstep_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub engines: Vec<Engine>,
    /// Ascending prefix lengths of the input series.
    pub lengths: Vec<usize>,
    pub iterations: usize,
    pub particles: usize,
    pub repetitions: usize,
    /// Rounds of the untimed warm-up fit; 0 skips it.
    pub warmup_iterations: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            engines: Engine::ALL.to_vec(),
            lengths: vec![10_000, 20_000, 40_000],
            iterations: DEFAULT_ITERATIONS,
            particles: DEFAULT_PARTICLES,
            repetitions: DEFAULT_REPETITIONS,
            warmup_iterations: 5,
            seed: 0,
        }
    }
}

impl BenchConfig {
    fn validate(&self, available: usize) -> Result<()> {
        if self.engines.is_empty() || self.lengths.is_empty() {
            return Err(config("benchmark needs at least one engine and one length"));
        }
        if self.iterations == 0 || self.repetitions == 0 {
            return Err(config("iterations and repetitions must be at least 1"));
        }
        if self.lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(config("benchmark lengths must be strictly ascending"));
        }
        let longest = *self.lengths.last().unwrap();
        if longest > available {
            return Err(input(format!(
                "benchmark length {longest} exceeds the input length {available}"
            )));
        }
        if self.lengths[0] < 2 {
            return Err(config("benchmark lengths must be at least 2"));
        }
        Ok(())
    }

    fn engine_config(&self, rounds: usize) -> EngineConfig {
        let mut cfg = EngineConfig::default().with_em(EmSettings::benchmark(rounds));
        cfg.mc.particles = self.particles;
        cfg.mc.seed = self.seed;
        cfg
    }
}

fn timed_fit(series: &ReturnSeries, engine: Engine, cfg: &EngineConfig) -> Result<FitReport> {
    let (report, _) = fit_engine(series, engine, cfg)?;
    Ok(report)
}

/// Fixed-round fits of every engine on prefixes of `series`. Each cell is
/// the repetition with the median total time.
pub fn run_benchmark(series: &ReturnSeries, cfg: &BenchConfig) -> Result<Vec<BenchReport>> {
    cfg.validate(series.len())?;
    let timed = cfg.engine_config(cfg.iterations);
    let warm = cfg.engine_config(cfg.warmup_iterations.max(1));
    let mut out = Vec::with_capacity(cfg.lengths.len() * cfg.engines.len());
    for &len in &cfg.lengths {
        let prefix = series.truncated(len)?;
        for &engine in &cfg.engines {
            if cfg.warmup_iterations > 0 {
                timed_fit(&prefix, engine, &warm)?;
            }
            let mut reps = Vec::with_capacity(cfg.repetitions);
            for _ in 0..cfg.repetitions {
                reps.push(timed_fit(&prefix, engine, &timed)?.timings);
            }
            reps.sort_by(|a, b| a.total_seconds.total_cmp(&b.total_seconds));
            let mid = reps[reps.len() / 2];
            log::info!("bench {engine} T={len}: {:.3}s", mid.total_seconds);
            out.push(BenchReport {
                engine,
                sequence_length: len,
                iterations: cfg.iterations,
                particles: engine.is_monte_carlo().then_some(cfg.particles),
                estep_seconds: mid.estep_seconds,
                mstep_seconds: mid.mstep_seconds,
                total_seconds: mid.total_seconds,
            });
        }
    }
    Ok(out)
}

/// Least-squares line through `(x, y)`: returns `(slope, intercept)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 2 {
        return Err(input("a line fit needs at least two points"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(input("a line fit needs at least two distinct x values"));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

fn points_for(reports: &[BenchReport], engine: Engine) -> Vec<(f64, f64)> {
    reports
        .iter()
        .filter(|r| r.engine == engine)
        .map(|r| (r.sequence_length as f64, r.total_seconds))
        .collect()
}

/// Seconds of total time added per extra time step.
pub fn growth_rate(reports: &[BenchReport], engine: Engine) -> Result<f64> {
    linear_fit(&points_for(reports, engine)).map(|(slope, _)| slope)
}

/// Largest relative distance of a measured total time from the engine's
/// least-squares line.
pub fn linearity_error(reports: &[BenchReport], engine: Engine) -> Result<f64> {
    let points = points_for(reports, engine);
    let (slope, intercept) = linear_fit(&points)?;
    Ok(points
        .iter()
        .map(|&(x, y)| ((slope * x + intercept) - y).abs() / y)
        .fold(0.0, f64::max))
}

pub fn write_bench_csv(path: &Path, reports: &[BenchReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "engine",
        "sequence_length",
        "iterations",
        "particles",
        "estep_seconds",
        "mstep_seconds",
        "total_seconds",
    ])?;
    for r in reports {
        w.write_record([
            r.engine.label().to_string(),
            r.sequence_length.to_string(),
            r.iterations.to_string(),
            r.particles.map(|p| p.to_string()).unwrap_or_default(),
            format!("{:.6e}", r.estep_seconds),
            format!("{:.6e}", r.mstep_seconds),
            format!("{:.6e}", r.total_seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}
