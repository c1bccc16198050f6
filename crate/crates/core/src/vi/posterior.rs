use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::model::ReturnSeries;

/// How the dummy nodes are wired to the precision nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    /// `u_1 - v_1 - u_2 - ... - v_{T-1} - u_T`, with boundary rows derived
    /// from the joint density. `T - 1` dummy nodes.
    #[default]
    Chain,
    /// The update rows exactly as usually printed, including a dangling
    /// `v_T` of shape `A`. `T` dummy nodes; kept for comparison only.
    TrailingDummy,
}

impl Topology {
    pub fn dummy_count(self, len: usize) -> usize {
        match self {
            Topology::Chain => len - 1,
            Topology::TrailingDummy => len,
        }
    }
}

/// Mean-field factors `q(u_t) = Ga(a_u[t], b_u[t])`, `q(v_t) = Ga(a_v[t], b_v[t])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaPosterior {
    pub a_u: Vec<f64>,
    pub b_u: Vec<f64>,
    pub a_v: Vec<f64>,
    pub b_v: Vec<f64>,
}

impl GammaPosterior {
    pub fn len(&self) -> usize {
        self.a_u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a_u.is_empty()
    }

    pub fn topology(&self) -> Topology {
        if self.a_v.len() == self.a_u.len() {
            Topology::TrailingDummy
        } else {
            Topology::Chain
        }
    }

    pub fn mean_u(&self, t: usize) -> f64 {
        self.a_u[t] / self.b_u[t]
    }

    pub fn mean_v(&self, t: usize) -> f64 {
        self.a_v[t] / self.b_v[t]
    }

    /// Checks lengths, positivity and finiteness of every shape and rate.
    pub fn validate(&self) -> Result<()> {
        let n = self.a_u.len();
        if n < 2 || self.b_u.len() != n {
            return Err(input(format!("u-factor arrays have inconsistent lengths ({n}, {})", self.b_u.len())));
        }
        let m = self.a_v.len();
        if self.b_v.len() != m || (m != n - 1 && m != n) {
            return Err(input(format!("v-factor arrays have length {m}/{} for T = {n}", self.b_v.len())));
        }
        let all = self.a_u.iter().chain(&self.b_u).chain(&self.a_v).chain(&self.b_v);
        if let Some(bad) = all.copied().find(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::Numerical(format!("posterior contains a non-positive or non-finite parameter ({bad})")));
        }
        Ok(())
    }
}

/// Posterior expectations consumed by the M-step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    /// `E[u_t]`
    pub mean_u: Vec<f64>,
    /// `E[ln u_t]`
    pub log_u: Vec<f64>,
    /// `E[ln v_t]`
    pub log_v: Vec<f64>,
}

/// Starting point of the coordinate ascent: each `q(u_t)` is the posterior of
/// its single observation under a `Ga(0, 0)` prior, `Ga(1/2, Δy_t²/2)`; each
/// `q(v_t)` applies the same rule to the mean of its neighbours' rates.
pub fn init_posterior(series: &ReturnSeries) -> Result<GammaPosterior> {
    init_posterior_with(series, Topology::Chain)
}

pub fn init_posterior_with(series: &ReturnSeries, topology: Topology) -> Result<GammaPosterior> {
    let n = series.len();
    if n < 2 {
        return Err(input("at least two returns are required"));
    }
    let b_u: Vec<f64> = series.floored_squares().into_iter().map(|s| 0.5 * s).collect();
    let mut b_v: Vec<f64> = b_u.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    if topology == Topology::TrailingDummy {
        b_v.push(b_u[n - 1]);
    }
    Ok(GammaPosterior {
        a_u: vec![0.5; n],
        a_v: vec![0.5; b_v.len()],
        b_u,
        b_v,
    })
}
