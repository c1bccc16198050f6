use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{config, input, Result};
use crate::model::{LogNParams, ReturnSeries};
use crate::numerics::sampling::standard_normal;
use crate::numerics::SvRng;

use super::cloud::{ln_half_square, log_obs_weight, needs_resampling, normalise, sample_log_categorical, systematic_resample, CloudKind, ParticleCloud};
use super::gam::{check_particles, SmoothedPaths};

/// Smallest step variance the M-step will return.
pub const STEP_VARIANCE_FLOOR: f64 = 1e-10;

/// Smoothed moments of `x_t = ln u_t` needed by the lognormal M-step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LognExpectations {
    /// `E[ln u_t]`
    pub mean_log_u: Vec<f64>,
    /// `E[ln² u_t]`
    pub mean_log_u_sq: Vec<f64>,
    /// `cross[t] = E[ln u_{t+1} ln u_t]`, length `T - 1`.
    pub cross: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LognSmoothing {
    pub expectations: LognExpectations,
    pub paths: SmoothedPaths,
}

/// Bootstrap filter for the Gaussian random walk on `ln u_t`, started from
/// `N(ln(1 / Δy_1²), 1)` with equal weights.
pub fn forward_filter_logn(series: &ReturnSeries, params: LogNParams, particles: usize, rng: &mut SvRng) -> Result<ParticleCloud> {
    check_particles(particles)?;
    let n = particles;
    let len = series.len();
    let s = params.step_variance.sqrt();
    let y = series.returns();
    let centre = -series.floored_squares()[0].ln();

    let mut log_u = vec![0.0; len * n];
    let mut weights = vec![0.0; len * n];
    let mut log_w = vec![0.0; n];
    let mut base = vec![0.0; n];
    let mut ancestors: Vec<usize> = (0..n).collect();
    let mut resampled_at = Vec::new();

    for x in log_u[..n].iter_mut() {
        *x = centre + standard_normal(rng);
    }
    weights[..n].fill(1.0 / n as f64);

    for t in 1..len {
        let prev = &weights[(t - 1) * n..t * n];
        if needs_resampling(prev) {
            systematic_resample(prev, rng, &mut ancestors);
            base.fill(0.0);
            resampled_at.push(t);
        } else {
            for (i, a) in ancestors.iter_mut().enumerate() {
                *a = i;
            }
            base.copy_from_slice(&log_w);
        }
        let ln_half_y2 = ln_half_square(y[t]);
        for i in 0..n {
            let x = log_u[(t - 1) * n + ancestors[i]] + s * standard_normal(rng);
            log_u[t * n + i] = x;
            log_w[i] = base[ancestors[i]] + log_obs_weight(x, ln_half_y2);
        }
        normalise(&mut log_w, &mut weights[t * n..(t + 1) * n], t)?;
    }
    Ok(ParticleCloud {
        kind: CloudKind::UChain,
        particles: n,
        log_u,
        log_v: Vec::new(),
        weights,
        resampled_at,
    })
}

/// Backward simulation with weights `∝ w_t N(x̃_{t+1}; x_t, S²)`.
///
/// The cross moment is the double sum `Σ_i Σ_j w_t^i w_{t-1}^j x_t^i x_{t-1}^j`
/// over the smoothed weights, which is the product of the smoothed means.
pub fn backward_smooth_logn(cloud: &ParticleCloud, params: LogNParams, trajectories: usize, rng: &mut SvRng) -> Result<LognSmoothing> {
    if cloud.kind != CloudKind::UChain {
        return Err(input("backward_smooth_logn needs a lognormal-chain cloud"));
    }
    if trajectories == 0 {
        return Err(config("at least one backward trajectory is required"));
    }
    let n = cloud.particles;
    let m = trajectories;
    let len = cloud.len();
    let inv_2s2 = 0.5 / params.step_variance;

    let mut path = vec![0.0; len * m];
    let mut scratch = vec![0.0; n];
    let mut lw = vec![0.0; n];
    let mut logits = vec![0.0; n];

    for (l, w) in lw.iter_mut().zip(cloud.weight_row(len - 1)) {
        *l = w.ln();
    }
    for k in 0..m {
        let j = sample_log_categorical(&lw, &mut scratch, rng)?;
        path[(len - 1) * m + k] = cloud.log_u_row(len - 1)[j];
    }
    for t in (0..len - 1).rev() {
        let xs = cloud.log_u_row(t);
        for (l, w) in lw.iter_mut().zip(cloud.weight_row(t)) {
            *l = w.ln();
        }
        for k in 0..m {
            let next = path[(t + 1) * m + k];
            for i in 0..n {
                let d = next - xs[i];
                logits[i] = lw[i] - d * d * inv_2s2;
            }
            let j = sample_log_categorical(&logits, &mut scratch, rng)?;
            path[t * m + k] = xs[j];
        }
    }

    let inv_m = 1.0 / m as f64;
    let mut mean_log_u = Vec::with_capacity(len);
    let mut mean_log_u_sq = Vec::with_capacity(len);
    for row in path.chunks_exact(m) {
        mean_log_u.push(row.iter().sum::<f64>() * inv_m);
        mean_log_u_sq.push(row.iter().map(|x| x * x).sum::<f64>() * inv_m);
    }
    let cross = mean_log_u.windows(2).map(|w| w[0] * w[1]).collect();
    Ok(LognSmoothing {
        expectations: LognExpectations {
            mean_log_u,
            mean_log_u_sq,
            cross,
        },
        paths: SmoothedPaths {
            trajectories: m,
            log_u: path,
        },
    })
}

/// Forward filter followed by backward simulation with `trajectories` draws.
pub fn forward_backward_logn(
    series: &ReturnSeries,
    params: LogNParams,
    particles: usize,
    trajectories: usize,
    rng: &mut SvRng,
) -> Result<LognSmoothing> {
    let cloud = forward_filter_logn(series, params, particles, rng)?;
    backward_smooth_logn(&cloud, params, trajectories, rng)
}

/// `S² = (1/T) Σ_{t≥2} (E[x_t²] - 2E[x_t x_{t-1}] + E[x_{t-1}²])`, floored at
/// [`STEP_VARIANCE_FLOOR`].
pub fn logn_mstep(ex: &LognExpectations, len: usize) -> Result<LogNParams> {
    if len < 2 || ex.mean_log_u_sq.len() != len || ex.cross.len() != len - 1 {
        return Err(input(format!("expectation tables do not match T = {len}")));
    }
    let sq = &ex.mean_log_u_sq;
    let total: f64 = (1..len).map(|t| sq[t] - 2.0 * ex.cross[t - 1] + sq[t - 1]).sum();
    let s2 = total / len as f64;
    if !(s2 > STEP_VARIANCE_FLOOR) {
        warn!("step variance estimate {s2:e} floored at {STEP_VARIANCE_FLOOR:e}");
        return Ok(LogNParams {
            step_variance: STEP_VARIANCE_FLOOR,
        });
    }
    Ok(LogNParams { step_variance: s2 })
}
