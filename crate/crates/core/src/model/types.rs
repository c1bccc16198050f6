use serde::{Deserialize, Serialize};

use crate::error::{check_positive, input, Result};

/// Observed log-returns `Δy_1..Δy_T` of one instrument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    returns: Vec<f64>,
    pub instrument_id: String,
    /// Bar resolution label, e.g. `1m`, `1h`, `1d`.
    pub period: String,
}

impl ReturnSeries {
    pub fn new(returns: Vec<f64>, instrument_id: impl Into<String>, period: impl Into<String>) -> Result<Self> {
        if returns.len() < 2 {
            return Err(input(format!("a return series needs at least 2 entries, got {}", returns.len())));
        }
        if let Some(i) = returns.iter().position(|r| !r.is_finite()) {
            return Err(input(format!("return {} is not finite ({})", i, returns[i])));
        }
        Ok(Self {
            returns,
            instrument_id: instrument_id.into(),
            period: period.into(),
        })
    }

    /// Unlabelled series, convenient in tests and for synthetic data.
    pub fn from_returns(returns: Vec<f64>) -> Result<Self> {
        Self::new(returns, "series", "")
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    /// `Δy_t²` with exact zeros replaced by `ZERO_FLOOR_REL · median(Δy²)`,
    /// so that every gamma rate built from them stays strictly positive.
    pub fn floored_squares(&self) -> Vec<f64> {
        let squares: Vec<f64> = self.returns.iter().map(|r| r * r).collect();
        let floor = zero_floor(&squares);
        squares.into_iter().map(|s| s.max(floor)).collect()
    }

    /// First `len` returns as a new series.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len > self.len() {
            return Err(input(format!("cannot truncate a series of length {} to {len}", self.len())));
        }
        Self::new(self.returns[..len].to_vec(), self.instrument_id.clone(), self.period.clone())
    }
}

/// Relative size of the floor substituted for zero squared returns.
pub const ZERO_FLOOR_REL: f64 = 1e-12;

fn zero_floor(squares: &[f64]) -> f64 {
    let mut sorted = squares.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let reference = if median > 0.0 {
        median
    } else {
        // more than half the returns are zero: fall back to the mean of the rest
        let nonzero: Vec<f64> = sorted.into_iter().filter(|&s| s > 0.0).collect();
        if nonzero.is_empty() {
            return f64::MIN_POSITIVE;
        }
        nonzero.iter().sum::<f64>() / nonzero.len() as f64
    };
    (ZERO_FLOOR_REL * reference).max(f64::MIN_POSITIVE)
}

/// Shape parameter `A` of the gamma chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GamChainParams {
    pub shape_a: f64,
}

impl GamChainParams {
    pub fn new(shape_a: f64) -> Result<Self> {
        check_positive("shape A", shape_a)?;
        Ok(Self { shape_a })
    }
}

/// Step variance `S²` of the log-precision random walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNParams {
    pub step_variance: f64,
}

impl LogNParams {
    pub fn new(step_variance: f64) -> Result<Self> {
        check_positive("step variance S²", step_variance)?;
        Ok(Self { step_variance })
    }
}

/// Latent precision path, stored as logarithms.
///
/// `log_u[t]` is `ln u_t`; `log_v[t]` is the dummy node between `u_t` and
/// `u_{t+1}`, so `log_v` is one shorter. Long simulated chains wander far
/// enough that `u_t` itself leaves the range of `f64`, hence the log storage.
/// For the lognormal chain `log_v` is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentPath {
    pub log_u: Vec<f64>,
    pub log_v: Vec<f64>,
}

impl LatentPath {
    pub fn u(&self) -> Vec<f64> {
        self.log_u.iter().map(|l| l.exp()).collect()
    }

    pub fn v(&self) -> Vec<f64> {
        self.log_v.iter().map(|l| l.exp()).collect()
    }

    /// Increments `w_t = ln u_{t+1} - ln u_t`.
    pub fn increments(&self) -> Vec<f64> {
        self.log_u.windows(2).map(|w| w[1] - w[0]).collect()
    }
}
