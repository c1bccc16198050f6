use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::Posterior;
use crate::error::{input, Result};
use crate::model::ReturnSeries;
use crate::numerics::sampling::{sample_ln_gamma_unit, standard_normal};
use crate::numerics::SvRng;

use super::ks::ks_test_standard_normal;

/// Normalised residuals `e_t = Δy_t √u_t^s` with one posterior draw `u_t^s`
/// per step.
pub fn draw_residuals(posterior: &Posterior, series: &ReturnSeries, rng: &mut SvRng) -> Result<Vec<f64>> {
    let n = series.len();
    if posterior.len() != n {
        return Err(input(format!("posterior covers {} steps but the series has {n}", posterior.len())));
    }
    let y = series.returns();
    let log_u: Vec<f64> = match posterior {
        Posterior::Gamma(p) => (0..n).map(|t| sample_ln_gamma_unit(p.a_u[t], rng) - p.b_u[t].ln()).collect(),
        Posterior::Gaussian(p) => (0..n).map(|t| p.mu[t] + p.sigma2[t].sqrt() * standard_normal(rng)).collect(),
        Posterior::Particles(p) => {
            let m = p.trajectories;
            (0..n).map(|t| p.log_u[t * m + rng.random_range(0..m)]).collect()
        }
        Posterior::Exact(p) => p.log_u.clone(),
    };
    Ok(y.iter().zip(log_u).map(|(r, l)| r * (0.5 * l).exp()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub instrument_id: String,
    /// `c1`..`c4`, `raw` for unscaled returns, `exact` for true latents.
    pub engine: String,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub passed: bool,
    pub residual_count: usize,
}

impl ResidualReport {
    pub fn from_residuals(instrument_id: &str, engine: &str, residuals: &[f64], alpha: f64) -> Result<Self> {
        let ks = ks_test_standard_normal(residuals, alpha)?;
        Ok(Self {
            instrument_id: instrument_id.to_string(),
            engine: engine.to_string(),
            ks_statistic: ks.statistic,
            p_value: ks.p_value,
            passed: ks.passed,
            residual_count: ks.n,
        })
    }
}

/// Fraction of reports that pass.
pub fn residual_pass_rate(reports: &[ResidualReport]) -> Result<f64> {
    if reports.is_empty() {
        return Err(input("no residual reports to aggregate"));
    }
    Ok(reports.iter().filter(|r| r.passed).count() as f64 / reports.len() as f64)
}
