use serde::{Deserialize, Serialize};

use crate::error::{config, input, Result};
use crate::model::{GamChainParams, ReturnSeries};
use crate::numerics::sampling::sample_ln_gamma_unit;
use crate::numerics::SvRng;
use crate::vi::Expectations;

use super::cloud::{ln_half_square, log_obs_weight, needs_resampling, normalise, sample_log_categorical, systematic_resample, CloudKind, ParticleCloud};

/// Backward-simulated trajectories, stored step-major (`T × M`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedPaths {
    pub trajectories: usize,
    pub log_u: Vec<f64>,
}

impl SmoothedPaths {
    pub fn len(&self) -> usize {
        self.log_u.len() / self.trajectories
    }

    pub fn is_empty(&self) -> bool {
        self.log_u.is_empty()
    }

    /// `ln u` along trajectory `m`.
    pub fn path(&self, m: usize) -> Vec<f64> {
        (0..self.len()).map(|t| self.log_u[t * self.trajectories + m]).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GamSmoothing {
    pub expectations: Expectations,
    pub paths: SmoothedPaths,
}

pub(crate) fn check_particles(n: usize) -> Result<()> {
    if n < 2 {
        return Err(config(format!("at least 2 particles are required, got {n}")));
    }
    Ok(())
}

/// Bootstrap particle filter for the gamma chain.
///
/// `u_1` starts from `Ga(1/2, Δy_1²/2)`, the posterior of the first return
/// alone, with equal weights. Each later `u_t` is drawn from `Ga(A, v_{t-1})`
/// and weighted by `N(Δy_t; 0, 1/u_t)`; `v_t ~ Ga(A, u_t)` keeps the weight of
/// its `u_t`. Systematic resampling runs whenever the ESS drops below `N/2`.
pub fn forward_filter_gam(series: &ReturnSeries, params: GamChainParams, particles: usize, rng: &mut SvRng) -> Result<ParticleCloud> {
    check_particles(particles)?;
    let n = particles;
    let len = series.len();
    let a = params.shape_a;
    let y = series.returns();
    let half_y2_0 = 0.5 * series.floored_squares()[0];

    let mut log_u = vec![0.0; len * n];
    let mut log_v = vec![0.0; (len - 1) * n];
    let mut weights = vec![0.0; len * n];
    let mut log_w = vec![0.0; n];
    let mut base = vec![0.0; n];
    let mut ancestors: Vec<usize> = (0..n).collect();
    let mut resampled_at = Vec::new();

    let ln_rate0 = half_y2_0.ln();
    for i in 0..n {
        let lu = sample_ln_gamma_unit(0.5, rng) - ln_rate0;
        log_u[i] = lu;
        log_v[i] = sample_ln_gamma_unit(a, rng) - lu;
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
        let has_v = t + 1 < len;
        for i in 0..n {
            let lv_parent = log_v[(t - 1) * n + ancestors[i]];
            let lu = sample_ln_gamma_unit(a, rng) - lv_parent;
            log_u[t * n + i] = lu;
            log_w[i] = base[ancestors[i]] + log_obs_weight(lu, ln_half_y2);
            if has_v {
                log_v[t * n + i] = sample_ln_gamma_unit(a, rng) - lu;
            }
        }
        normalise(&mut log_w, &mut weights[t * n..(t + 1) * n], t)?;
    }
    Ok(ParticleCloud {
        kind: CloudKind::UvChain,
        particles: n,
        log_u,
        log_v,
        weights,
        resampled_at,
    })
}

/// Backward simulation over a gamma-chain cloud.
///
/// Walking back from a draw of the last filtered marginal, each step picks
/// `ṽ_t` with probability `∝ w_t p(ũ_{t+1} | v_t)` and then `ũ_t` with
/// probability `∝ w_t p(ṽ_t | u_t)`. The expectation tables are averages over
/// the `trajectories` draws.
pub fn backward_smooth_gam(cloud: &ParticleCloud, params: GamChainParams, trajectories: usize, rng: &mut SvRng) -> Result<GamSmoothing> {
    if cloud.kind != CloudKind::UvChain {
        return Err(input("backward_smooth_gam needs a gamma-chain cloud"));
    }
    if trajectories == 0 {
        return Err(config("at least one backward trajectory is required"));
    }
    let n = cloud.particles;
    let m = trajectories;
    let len = cloud.len();
    let a = params.shape_a;

    let mut path_lu = vec![0.0; len * m];
    let mut log_v_sum = vec![0.0; len - 1];
    let mut scratch = vec![0.0; n];
    let mut lw = vec![0.0; n];
    let mut u_row = vec![0.0; n];
    let mut v_row = vec![0.0; n];
    let mut logits = vec![0.0; n];
    let mut cur_u = vec![0.0; m];

    let last = cloud.weight_row(len - 1);
    for (i, l) in lw.iter_mut().enumerate() {
        *l = last[i].ln();
    }
    for k in 0..m {
        let j = sample_log_categorical(&lw, &mut scratch, rng)?;
        let lu = cloud.log_u_row(len - 1)[j];
        path_lu[(len - 1) * m + k] = lu;
        cur_u[k] = lu.exp();
    }

    for t in (0..len - 1).rev() {
        let lu_t = cloud.log_u_row(t);
        let lv_t = cloud.log_v_row(t);
        for i in 0..n {
            lw[i] = cloud.weight_row(t)[i].ln();
            u_row[i] = lu_t[i].exp();
            v_row[i] = lv_t[i].exp();
        }
        let mut lv_acc = 0.0;
        for k in 0..m {
            let u_next = cur_u[k];
            for i in 0..n {
                logits[i] = lw[i] + a * lv_t[i] - v_row[i] * u_next;
            }
            let jv = sample_log_categorical(&logits, &mut scratch, rng)?;
            let v_tilde = v_row[jv];
            lv_acc += lv_t[jv];
            for i in 0..n {
                logits[i] = lw[i] + a * lu_t[i] - u_row[i] * v_tilde;
            }
            let ju = sample_log_categorical(&logits, &mut scratch, rng)?;
            path_lu[t * m + k] = lu_t[ju];
            cur_u[k] = u_row[ju];
        }
        log_v_sum[t] = lv_acc;
    }

    let inv_m = 1.0 / m as f64;
    let mut mean_u = Vec::with_capacity(len);
    let mut log_u = Vec::with_capacity(len);
    for row in path_lu.chunks_exact(m) {
        mean_u.push(row.iter().map(|l| l.exp()).sum::<f64>() * inv_m);
        log_u.push(row.iter().sum::<f64>() * inv_m);
    }
    let log_v = log_v_sum.into_iter().map(|s| s * inv_m).collect();
    Ok(GamSmoothing {
        expectations: Expectations { mean_u, log_u, log_v },
        paths: SmoothedPaths {
            trajectories: m,
            log_u: path_lu,
        },
    })
}
