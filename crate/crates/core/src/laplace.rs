//! Laplace / mean-field inference for the lognormal chain.
//!
//! Each `q(ln u_t)` is the Gaussian at the mode of its local log-posterior;
//! the mode has a closed form through the Lambert W function.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{config, input, Error, Result};
use crate::model::{LogNParams, ReturnSeries};
use crate::numerics::lambert_w0_exp;
use crate::report::{EmSettings, Engine, FitReport, FittedParams, StageTimings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior {
    /// Posterior mean of `ln u_t`.
    pub mu: Vec<f64>,
    /// Posterior variance of `ln u_t`.
    pub sigma2: Vec<f64>,
}

impl GaussianPosterior {
    /// `μ_t = ln(1 / Δy_t²)` (floored squares), `σ²_t = 1`.
    pub fn init(series: &ReturnSeries) -> Self {
        let mu: Vec<f64> = series.floored_squares().iter().map(|s| -s.ln()).collect();
        let sigma2 = vec![1.0; mu.len()];
        Self { mu, sigma2 }
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

/// Mode and curvature of `½x - ½y²eˣ - (x - m)² / (4c)`:
/// `x = m + c - W(c y² e^{m+c})`, `σ² = 1 / (½y²eˣ + 1/(2c))`.
#[inline]
fn local_mode(m: f64, c: f64, y2: f64) -> (f64, f64) {
    let w = if y2 > 0.0 {
        lambert_w0_exp(c.ln() + y2.ln() + m + c)
    } else {
        0.0
    };
    let mu = m + c - w;
    let curvature = 0.5 * y2 * mu.exp() + 0.5 / c;
    (mu, 1.0 / curvature)
}

#[inline]
fn neighbour_terms(mu: &[f64], t: usize, s2: f64) -> (f64, f64) {
    let n = mu.len();
    if t == 0 {
        (mu[1], 0.5 * s2)
    } else if t + 1 == n {
        (mu[n - 2], 0.5 * s2)
    } else {
        (0.5 * (mu[t - 1] + mu[t + 1]), 0.25 * s2)
    }
}

/// Laplace update of node `t` (zero-based). Interior nodes see two random-walk
/// neighbours (`S²/4` inside the W argument); the two ends see one (`S²/2`).
pub fn laplace_update(posterior: &mut GaussianPosterior, series: &ReturnSeries, params: LogNParams, t: usize) -> Result<(f64, f64)> {
    let n = posterior.len();
    if t >= n || series.len() != n || posterior.sigma2.len() != n {
        return Err(input(format!("node index {t} out of range for T = {n}")));
    }
    let y = series.returns()[t];
    let (m, c) = neighbour_terms(&posterior.mu, t, params.step_variance);
    let (mu, s2) = local_mode(m, c, y * y);
    posterior.mu[t] = mu;
    posterior.sigma2[t] = s2;
    Ok((mu, s2))
}

/// `S² = (1/T) Σ_{t≥2} (μ_t² + σ²_t - 2μ_tμ_{t-1} + μ²_{t-1} + σ²_{t-1})`.
pub fn logn_vi_mstep(posterior: &GaussianPosterior, len: usize) -> Result<LogNParams> {
    if len < 2 || posterior.len() != len || posterior.sigma2.len() != len {
        return Err(input(format!("posterior does not match T = {len}")));
    }
    let (mu, s2) = (&posterior.mu, &posterior.sigma2);
    let total: f64 = (1..len).map(|t| (mu[t] - mu[t - 1]).powi(2) + s2[t] + s2[t - 1]).sum();
    LogNParams::new(total / len as f64)
}

/// Gaussian-approximation lower bound used as the C1 objective trace.
fn approximate_elbo(post: &GaussianPosterior, y: &[f64], s2: f64) -> f64 {
    let n = post.len();
    let mut total = -0.5 * (n - 1) as f64 * (2.0 * PI * s2).ln();
    let mut walk = 0.0;
    for t in 0..n {
        let (m, v) = (post.mu[t], post.sigma2[t]);
        total += 0.5 * m - 0.5 * (2.0 * PI).ln() - 0.5 * y[t] * y[t] * (m + 0.5 * v).exp();
        total += 0.5 * (2.0 * PI * std::f64::consts::E * v).ln();
        if t > 0 {
            walk += (m - post.mu[t - 1]).powi(2) + v + post.sigma2[t - 1];
        }
    }
    total - walk / (2.0 * s2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceConfig {
    pub em: EmSettings,
    /// Sweeps per E-step.
    pub sweeps: usize,
    /// `μ ← μ + damping·(μ* - μ)`; 1 is the plain update.
    pub damping: f64,
    pub initial_step_variance: f64,
}

impl Default for LaplaceConfig {
    fn default() -> Self {
        Self {
            em: EmSettings::default(),
            sweeps: 1,
            damping: 1.0,
            initial_step_variance: 1.0,
        }
    }
}

/// EM for the lognormal chain with Laplace sweeps as the E-step.
pub fn fit_logn_vi(series: &ReturnSeries, cfg: &LaplaceConfig) -> Result<(FitReport, GaussianPosterior)> {
    cfg.em.validate()?;
    if cfg.sweeps == 0 {
        return Err(config("sweeps must be at least 1"));
    }
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(config(format!("damping must lie in (0, 1], got {}", cfg.damping)));
    }
    let start = Instant::now();
    let n = series.len();
    let y = series.returns();
    let y2: Vec<f64> = y.iter().map(|r| r * r).collect();
    let mut s2 = LogNParams::new(cfg.initial_step_variance)?.step_variance;
    let mut post = GaussianPosterior::init(series);
    let mut timings = StageTimings::default();
    let mut objective_trace = Vec::new();
    let mut param_trace = Vec::new();
    let mut converged = false;
    let mut rounds = 0;

    while rounds < cfg.em.max_rounds {
        rounds += 1;
        let t0 = Instant::now();
        for _ in 0..cfg.sweeps {
            for t in 0..n {
                let (m, c) = neighbour_terms(&post.mu, t, s2);
                let (mode, var) = local_mode(m, c, y2[t]);
                post.mu[t] += cfg.damping * (mode - post.mu[t]);
                post.sigma2[t] = var;
            }
        }
        let t1 = Instant::now();
        if let Some(t) = post.mu.iter().position(|m| !m.is_finite()) {
            return Err(Error::Numerical(format!("μ_{t} became non-finite in round {rounds} (S² = {s2})")));
        }
        let next = logn_vi_mstep(&post, n)?.step_variance;
        timings.estep_seconds += (t1 - t0).as_secs_f64();
        timings.mstep_seconds += t1.elapsed().as_secs_f64();
        if cfg.em.track_objective {
            objective_trace.push(approximate_elbo(&post, y, next));
        }
        param_trace.push(next);
        let done = cfg.em.has_converged(s2, next);
        s2 = next;
        if done {
            converged = true;
            break;
        }
    }
    timings.total_seconds = start.elapsed().as_secs_f64();
    let report = FitReport {
        engine: Engine::C1,
        params: FittedParams::LogNormal { step_variance: s2 },
        objective_trace,
        param_trace,
        iterations: rounds,
        converged,
        timings,
    };
    Ok((report, post))
}
