//! Forward sampling of the gamma chain and the lognormal chain.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, domain, Result};
use crate::model::{GamChainParams, LatentPath, LogNParams, ReturnSeries};
use crate::numerics::sampling::{sample_ln_gamma_unit, standard_normal};
use crate::numerics::{seeded_rng, SvRng};

/// Steps discarded before recording.
pub const BURN_IN: usize = 100;

/// Spacing of the synthetic timestamps (one-minute bars).
const BAR_MILLIS: i64 = 60_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    GamChain { shape_a: f64 },
    LogNormal { step_variance: f64 },
}

/// A simulated series with the latent path that generated it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDataset {
    pub series: ReturnSeries,
    pub latents: LatentPath,
    pub params: ModelParams,
    pub seed: u64,
    pub u0: f64,
}

fn check_len(len: usize) -> Result<()> {
    if len < 2 {
        return Err(domain(format!("series length must be at least 2, got {len}")));
    }
    Ok(())
}

/// `v_t ~ Ga(A, u_t)`, `u_{t+1} ~ Ga(A, v_t)`, `Δy_t ~ N(0, 1/u_t)`, started at
/// `u0` and run for [`BURN_IN`] unrecorded steps. Sampling is done on the log
/// scale because the precision path wanders over hundreds of e-folds.
pub fn simulate_gamchain(params: GamChainParams, len: usize, u0: f64, seed: u64) -> Result<SyntheticDataset> {
    check_len(len)?;
    check_positive("shape A", params.shape_a)?;
    check_positive("u0", u0)?;
    let a = params.shape_a;
    let mut rng = seeded_rng(seed);
    let mut lu = u0.ln();
    for _ in 0..BURN_IN {
        lu = gam_step(a, lu, &mut rng).1;
    }
    let mut log_u = Vec::with_capacity(len);
    let mut log_v = Vec::with_capacity(len - 1);
    let mut returns = Vec::with_capacity(len);
    for t in 0..len {
        log_u.push(lu);
        returns.push(standard_normal(&mut rng) * (-0.5 * lu).exp());
        if t + 1 < len {
            let (lv, next) = gam_step(a, lu, &mut rng);
            log_v.push(lv);
            lu = next;
        }
    }
    Ok(SyntheticDataset {
        series: ReturnSeries::new(returns, format!("gamchain-{seed}"), "1m")?,
        latents: LatentPath { log_u, log_v },
        params: ModelParams::GamChain { shape_a: a },
        seed,
        u0,
    })
}

#[inline]
fn gam_step(a: f64, lu: f64, rng: &mut SvRng) -> (f64, f64) {
    let lv = sample_ln_gamma_unit(a, rng) - lu;
    (lv, sample_ln_gamma_unit(a, rng) - lv)
}

/// Increments `w_t = ln u_{t+1} - ln u_t` of a gamma chain, without the
/// returns; suitable for very long runs.
pub fn simulate_gamchain_increments(params: GamChainParams, len: usize, seed: u64) -> Result<Vec<f64>> {
    check_positive("shape A", params.shape_a)?;
    let a = params.shape_a;
    let mut rng = seeded_rng(seed);
    Ok((0..len)
        .map(|_| {
            let (_, w) = gam_step(a, 0.0, &mut rng);
            w
        })
        .collect())
}

/// `ln u_t = ln u_{t-1} + N(0, S²)`, `Δy_t ~ N(0, 1/u_t)`.
pub fn simulate_logn(params: LogNParams, len: usize, u0: f64, seed: u64) -> Result<SyntheticDataset> {
    check_len(len)?;
    check_positive("step variance S²", params.step_variance)?;
    check_positive("u0", u0)?;
    let s = params.step_variance.sqrt();
    let mut rng = seeded_rng(seed);
    let mut lu = u0.ln();
    for _ in 0..BURN_IN {
        lu += s * standard_normal(&mut rng);
    }
    let mut log_u = Vec::with_capacity(len);
    let mut returns = Vec::with_capacity(len);
    for t in 0..len {
        log_u.push(lu);
        returns.push(standard_normal(&mut rng) * (-0.5 * lu).exp());
        if t + 1 < len {
            lu += s * standard_normal(&mut rng);
        }
    }
    Ok(SyntheticDataset {
        series: ReturnSeries::new(returns, format!("logn-{seed}"), "1m")?,
        latents: LatentPath { log_u, log_v: Vec::new() },
        params: ModelParams::LogNormal {
            step_variance: params.step_variance,
        },
        seed,
        u0,
    })
}

impl SyntheticDataset {
    /// Writes the returns as `timestamp,return` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
        w.write_record(["timestamp", "return"])?;
        for (t, r) in self.series.returns().iter().enumerate() {
            w.write_record([(t as i64 * BAR_MILLIS).to_string(), format!("{r:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes the full dataset (parameters, seed, latents) as JSON.
    pub fn write_sidecar(&self, path: &Path) -> Result<()> {
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    pub fn read_sidecar(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }
}
