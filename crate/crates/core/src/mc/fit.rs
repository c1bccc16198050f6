use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::model::{GamChainParams, LogNParams, ReturnSeries};
use crate::numerics::ln_gamma;
use crate::numerics::sampling::substream;
use crate::report::{EmSettings, Engine, FitReport, FittedParams, StageTimings};
use crate::vi::{maximize_shape, ShapeAscent};

use super::gam::{backward_smooth_gam, forward_filter_gam, SmoothedPaths};
use super::logn::{forward_backward_logn, logn_mstep};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum McVariant {
    Gam,
    LogN,
}

impl McVariant {
    pub fn engine(self) -> Engine {
        match self {
            McVariant::Gam => Engine::C4,
            McVariant::LogN => Engine::C2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub em: EmSettings,
    pub particles: usize,
    /// Backward trajectories per E-step; `None` means one per particle.
    pub trajectories: Option<usize>,
    pub seed: u64,
    pub initial_shape: f64,
    pub initial_step_variance: f64,
    pub ascent: ShapeAscent,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            em: EmSettings::default(),
            particles: 20,
            trajectories: None,
            seed: 0,
            initial_shape: 1.0,
            initial_step_variance: 1.0,
            ascent: ShapeAscent::default(),
        }
    }
}

impl McConfig {
    fn trajectory_count(&self) -> usize {
        self.trajectories.unwrap_or(self.particles)
    }
}

/// EM with a particle-smoothing E-step. Round `r` draws from substream `r`
/// of the configured seed, so a report is reproducible from the seed alone.
///
/// Returns the report and the smoothed trajectories of the final E-step.
pub fn fit_mc(series: &ReturnSeries, variant: McVariant, cfg: &McConfig) -> Result<(FitReport, SmoothedPaths)> {
    cfg.em.validate()?;
    if cfg.particles < 2 {
        return Err(config(format!("at least 2 particles are required, got {}", cfg.particles)));
    }
    if cfg.trajectory_count() == 0 {
        return Err(config("at least one backward trajectory is required"));
    }
    let start = Instant::now();
    let n = series.len();
    let m = cfg.trajectory_count();
    let mut theta = match variant {
        McVariant::Gam => GamChainParams::new(cfg.initial_shape)?.shape_a,
        McVariant::LogN => LogNParams::new(cfg.initial_step_variance)?.step_variance,
    };
    let mut timings = StageTimings::default();
    let mut objective_trace = Vec::new();
    let mut param_trace = Vec::new();
    let mut converged = false;
    let mut rounds = 0;
    let mut paths = None;

    while rounds < cfg.em.max_rounds {
        let mut rng = substream(cfg.seed, rounds as u64);
        rounds += 1;
        let t0 = Instant::now();
        let (next, objective) = match variant {
            McVariant::Gam => {
                let params = GamChainParams { shape_a: theta };
                let cloud = forward_filter_gam(series, params, cfg.particles, &mut rng)?;
                let sm = backward_smooth_gam(&cloud, params, m, &mut rng)?;
                let t1 = Instant::now();
                timings.estep_seconds += (t1 - t0).as_secs_f64();
                let (s, e) = crate::vi::edge_statistic(&sm.expectations, n)?;
                let a = maximize_shape(s / e, theta, cfg.ascent);
                timings.mstep_seconds += t1.elapsed().as_secs_f64();
                paths = Some(sm.paths);
                (a, a * s - e * ln_gamma(a))
            }
            McVariant::LogN => {
                let params = LogNParams { step_variance: theta };
                let sm = forward_backward_logn(series, params, cfg.particles, m, &mut rng)?;
                let t1 = Instant::now();
                timings.estep_seconds += (t1 - t0).as_secs_f64();
                let s2 = logn_mstep(&sm.expectations, n)?.step_variance;
                timings.mstep_seconds += t1.elapsed().as_secs_f64();
                paths = Some(sm.paths);
                let steps = (n - 1) as f64;
                (s2, -0.5 * steps * (2.0 * PI * s2).ln() - 0.5 * n as f64)
            }
        };
        if !(next.is_finite() && next > 0.0) {
            return Err(Error::Numerical(format!("M-step produced {next} in round {rounds}")));
        }
        if cfg.em.track_objective {
            objective_trace.push(objective);
        }
        param_trace.push(next);
        let done = cfg.em.has_converged(theta, next);
        theta = next;
        if done {
            converged = true;
            break;
        }
    }
    timings.total_seconds = start.elapsed().as_secs_f64();
    let params = match variant {
        McVariant::Gam => FittedParams::GamChain { shape_a: theta },
        McVariant::LogN => FittedParams::LogNormal { step_variance: theta },
    };
    let report = FitReport {
        engine: variant.engine(),
        params,
        objective_trace,
        param_trace,
        iterations: rounds,
        converged,
        timings,
    };
    Ok((report, paths.expect("at least one round ran")))
}
