use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::numerics::sampling::open_unit;
use crate::numerics::SvRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudKind {
    /// Precision nodes only (lognormal chain).
    UChain,
    /// Precision nodes and the interleaved dummy nodes (gamma chain).
    UvChain,
}

/// Filtered particles of one forward pass, stored row-major (`T × N`).
///
/// States are held as logarithms so that `u_t` and `v_t` are positive by
/// construction; `weights` are the normalised filtering weights before any
/// resampling at that step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleCloud {
    pub kind: CloudKind,
    pub particles: usize,
    pub log_u: Vec<f64>,
    /// `(T-1) × N` for [`CloudKind::UvChain`], empty otherwise.
    pub log_v: Vec<f64>,
    pub weights: Vec<f64>,
    /// Steps whose incoming weights were reset by resampling, so that their
    /// weights are the likelihood of that step alone.
    pub resampled_at: Vec<usize>,
}

impl ParticleCloud {
    pub fn len(&self) -> usize {
        self.log_u.len() / self.particles
    }

    pub fn is_empty(&self) -> bool {
        self.log_u.is_empty()
    }

    pub fn log_u_row(&self, t: usize) -> &[f64] {
        &self.log_u[t * self.particles..(t + 1) * self.particles]
    }

    pub fn log_v_row(&self, t: usize) -> &[f64] {
        &self.log_v[t * self.particles..(t + 1) * self.particles]
    }

    pub fn weight_row(&self, t: usize) -> &[f64] {
        &self.weights[t * self.particles..(t + 1) * self.particles]
    }

    /// Effective sample size `1 / Σ w²` of the filtering weights at `t`.
    pub fn ess(&self, t: usize) -> f64 {
        ess(self.weight_row(t))
    }

    /// Filtered `E[u_t | y_1..y_t]`.
    pub fn filtered_mean_u(&self, t: usize) -> f64 {
        self.weight_row(t).iter().zip(self.log_u_row(t)).map(|(w, l)| w * l.exp()).sum()
    }

    /// The cloud of the first `len` steps, as if the series ended there.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.len() {
            return Err(input(format!("prefix length {len} outside 1..={}", self.len())));
        }
        let n = self.particles;
        let log_v = match self.kind {
            CloudKind::UvChain => self.log_v[..(len - 1) * n].to_vec(),
            CloudKind::UChain => Vec::new(),
        };
        Ok(Self {
            kind: self.kind,
            particles: n,
            log_u: self.log_u[..len * n].to_vec(),
            log_v,
            weights: self.weights[..len * n].to_vec(),
            resampled_at: self.resampled_at.iter().copied().filter(|&t| t < len).collect(),
        })
    }

    /// Checks shapes, finiteness and row normalisation (to 1e-12).
    pub fn validate(&self) -> Result<()> {
        let n = self.particles;
        if n < 2 || self.log_u.is_empty() || !self.log_u.len().is_multiple_of(n) || self.weights.len() != self.log_u.len() {
            return Err(input("particle cloud arrays are inconsistent"));
        }
        let t = self.len();
        let want_v = match self.kind {
            CloudKind::UvChain => (t - 1) * n,
            CloudKind::UChain => 0,
        };
        if self.log_v.len() != want_v {
            return Err(input("particle cloud v-array has the wrong length"));
        }
        if !self.log_u.iter().chain(&self.log_v).all(|x| x.is_finite()) {
            return Err(Error::Numerical("non-finite particle".into()));
        }
        for r in 0..t {
            let s: f64 = self.weight_row(r).iter().sum();
            if (s - 1.0).abs() > 1e-12 || self.weight_row(r).iter().any(|w| !(*w >= 0.0)) {
                return Err(Error::Numerical(format!("weights at step {r} sum to {s}")));
            }
        }
        Ok(())
    }
}

/// `ln(y²/2)`, or `-inf` for a zero return. Computed from `ln|y|` so that
/// tiny returns do not underflow when squared.
pub(crate) fn ln_half_square(y: f64) -> f64 {
    2.0 * y.abs().ln() - std::f64::consts::LN_2
}

/// Log-likelihood of `y ~ N(0, 1/u)` up to a constant, given `ln u` and
/// `ln(y²/2)`. The product `u·y²/2` is formed in log space.
#[inline]
pub(crate) fn log_obs_weight(ln_u: f64, ln_half_y2: f64) -> f64 {
    0.5 * ln_u - (ln_half_y2 + ln_u).exp()
}

/// Resample when the ESS drops below `N/2`. With two particles the ESS never
/// falls below 1, so that rule cannot fire and the filter resamples every step.
pub(crate) fn needs_resampling(weights: &[f64]) -> bool {
    let n = weights.len();
    n == 2 || ess(weights) < 0.5 * n as f64
}

pub(crate) fn ess(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Normalises log-weights in place, writing probabilities to `out` and
/// re-centring `log_w` so that it stays bounded.
pub(crate) fn normalise(log_w: &mut [f64], out: &mut [f64], step: usize) -> Result<()> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical(format!(
            "all particle weights vanished at step {step} (max log-weight {max})"
        )));
    }
    let mut total = 0.0;
    for (o, l) in out.iter_mut().zip(log_w.iter()) {
        *o = (l - max).exp();
        total += *o;
    }
    let log_total = total.ln();
    for (o, l) in out.iter_mut().zip(log_w.iter_mut()) {
        *o /= total;
        *l -= max + log_total;
    }
    Ok(())
}

/// Systematic resampling: one uniform, `N` evenly spaced pointers.
pub(crate) fn systematic_resample(weights: &[f64], rng: &mut SvRng, ancestors: &mut [usize]) {
    let n = ancestors.len();
    let step = 1.0 / n as f64;
    let mut pointer = open_unit(rng) * step;
    let mut cum = weights[0];
    let mut j = 0;
    for a in ancestors.iter_mut() {
        while pointer > cum && j + 1 < weights.len() {
            j += 1;
            cum += weights[j];
        }
        *a = j;
        pointer += step;
    }
}

/// Draws an index with probability proportional to `exp(log_w)`; `scratch`
/// must have the same length.
pub(crate) fn sample_log_categorical(log_w: &[f64], scratch: &mut [f64], rng: &mut SvRng) -> Result<usize> {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical("backward weights are all zero".into()));
    }
    let mut total = 0.0;
    for (s, l) in scratch.iter_mut().zip(log_w) {
        total += (l - max).exp();
        *s = total;
    }
    let target = open_unit(rng) * total;
    Ok(scratch.iter().position(|c| *c >= target).unwrap_or(log_w.len() - 1))
}
