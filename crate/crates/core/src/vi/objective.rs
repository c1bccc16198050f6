use crate::error::{config, input, Result};
use crate::model::{GamChainParams, ReturnSeries};
use crate::numerics::{digamma, gamma_entropy, ln_gamma};

use super::estep::ChainState;
use super::posterior::{Expectations, GammaPosterior, Topology};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Evidence lower bound of a chain-topology posterior: expected complete-data
/// log-density plus the entropies of all factors. `u_1` carries a flat prior.
pub fn elbo(posterior: &GammaPosterior, series: &ReturnSeries, params: GamChainParams) -> Result<f64> {
    posterior.validate()?;
    if posterior.topology() != Topology::Chain {
        return Err(config("the ELBO is only defined for the chain topology"));
    }
    let n = posterior.len();
    if series.len() != n {
        return Err(input(format!("posterior covers {n} nodes but the series has {} returns", series.len())));
    }
    let a = params.shape_a;
    let sq = series.floored_squares();
    let lu: Vec<f64> = (0..n).map(|t| digamma(posterior.a_u[t]) - posterior.b_u[t].ln()).collect();
    let lv: Vec<f64> = (0..n - 1).map(|t| digamma(posterior.a_v[t]) - posterior.b_v[t].ln()).collect();

    let mut total = 0.0;
    for t in 0..n {
        total += 0.5 * lu[t] - HALF_LN_2PI - 0.5 * sq[t] * posterior.mean_u(t);
        total += gamma_entropy(posterior.a_u[t], posterior.b_u[t]);
    }
    let lg = ln_gamma(a);
    for t in 0..n - 1 {
        let ev = posterior.mean_v(t);
        total += a * lu[t] + (a - 1.0) * lv[t] - posterior.mean_u(t) * ev - lg;
        total += a * lv[t] + (a - 1.0) * lu[t + 1] - ev * posterior.mean_u(t + 1) - lg;
        total += gamma_entropy(posterior.a_v[t], posterior.b_v[t]);
    }
    Ok(total)
}

impl ChainState {
    /// Same value as [`elbo`], using the per-class shapes.
    pub(crate) fn elbo(&self, a: f64) -> f64 {
        let n = self.b_u.len();
        let s = self.shapes;
        let class = |shape: f64| (digamma(shape), shape + ln_gamma(shape) + (1.0 - shape) * digamma(shape));
        let cu = [class(s.u_first), class(s.u_inner), class(s.u_last)];
        let cv = class(s.v_inner);
        let lg = ln_gamma(a);
        let mut total = -(n as f64) * HALF_LN_2PI - 2.0 * (n - 1) as f64 * lg;
        let mut lu_prev = 0.0;
        for t in 0..n {
            let k = if t == 0 {
                0
            } else if t + 1 == n {
                2
            } else {
                1
            };
            let ln_b = self.b_u[t].ln();
            let lu = cu[k].0 - ln_b;
            total += 0.5 * lu - self.half_y2[t] * self.e_u[t] + cu[k].1 - ln_b;
            if t > 0 {
                let ln_bv = self.b_v[t - 1].ln();
                let lv = cv.0 - ln_bv;
                let ev = self.e_v[t - 1];
                total += a * lu_prev + (a - 1.0) * lv - self.e_u[t - 1] * ev;
                total += a * lv + (a - 1.0) * lu - ev * self.e_u[t];
                total += cv.1 - ln_bv;
            }
            lu_prev = lu;
        }
        total
    }
}

/// Sufficient statistic `S` and number of gamma edges `E` such that the
/// `A`-dependent part of the expected log-density is `A·S - E·lnΓ(A)`.
pub(crate) fn edge_statistic(ex: &Expectations, len: usize) -> Result<(f64, f64)> {
    if len < 2 || ex.log_u.len() != len || ex.mean_u.len() != len {
        return Err(input(format!("expectation tables do not match T = {len}")));
    }
    let (lu, lv) = (&ex.log_u, &ex.log_v);
    if lv.len() == len - 1 {
        let s: f64 = (0..len - 1).map(|t| lu[t] + 2.0 * lv[t] + lu[t + 1]).sum();
        Ok((s, 2.0 * (len - 1) as f64))
    } else if lv.len() == len {
        let s: f64 = (0..len).map(|t| 2.0 * lu[t] + lv[t]).sum::<f64>() + lv[..len - 1].iter().sum::<f64>();
        Ok((s, 2.0 * len as f64))
    } else {
        Err(input(format!("E[ln v] table has length {} for T = {len}", lv.len())))
    }
}

/// `A`-dependent part of the M-step objective, `Q(A) = A·S - E·lnΓ(A)`.
pub fn em_objective(ex: &Expectations, params: GamChainParams, len: usize) -> Result<f64> {
    let (s, e) = edge_statistic(ex, len)?;
    Ok(params.shape_a * s - e * ln_gamma(params.shape_a))
}

/// `dQ/dA = S - E·ψ(A)`, summed edge by edge.
pub fn em_gradient(ex: &Expectations, params: GamChainParams, len: usize) -> Result<f64> {
    let (s, e) = edge_statistic(ex, len)?;
    Ok(s - e * digamma(params.shape_a))
}

/// Settings of the projected gradient ascent on `η = ln A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeAscent {
    pub initial_step: f64,
    pub max_iterations: usize,
    pub tol: f64,
    /// Largest change of `ln A` per iteration.
    pub max_log_step: f64,
}

impl Default for ShapeAscent {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_iterations: 200,
            tol: 1e-12,
            max_log_step: 2.0,
        }
    }
}

const MAX_HALVINGS: usize = 60;

/// Maximises `A·s̄ - lnΓ(A)` (the objective per edge, `s̄ = S/E`) starting from `a0`.
/// Every accepted step increases the objective.
pub fn maximize_shape(s_bar: f64, a0: f64, opts: ShapeAscent) -> f64 {
    let q = |a: f64| a * s_bar - ln_gamma(a);
    let mut eta = a0.ln();
    let mut a = a0;
    let mut qa = q(a);
    for _ in 0..opts.max_iterations {
        let g = a * (s_bar - digamma(a));
        let mut lambda = opts.initial_step;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let step = (lambda * g).clamp(-opts.max_log_step, opts.max_log_step);
            let cand_eta = eta + step;
            let cand = cand_eta.exp();
            if cand.is_finite() && cand > 0.0 {
                let qc = q(cand);
                // The objective is unimodal in ln A, so a step that stays on
                // the same side of the stationary point is an ascent step even
                // when rounding hides the gain.
                let same_side = (s_bar - digamma(cand)) * g > 0.0;
                if qc > qa || (same_side && qc >= qa) {
                    let done = step.abs() < opts.tol;
                    eta = cand_eta;
                    a = cand;
                    qa = qc;
                    accepted = true;
                    if done {
                        return a;
                    }
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    a
}
