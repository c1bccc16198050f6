//! Numerical re-derivation of the gamma-chain identities: the dummy-node
//! marginalisation, the increment MGF and its moments, and the kurtosis bound.
//!
//! Each check is deterministic and returns a [`DerivationCheck`]; the whole
//! suite renders to a markdown table.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::model::{increment_kurtosis, increment_mgf, GamChainParams};
use crate::numerics::{ln_gamma, polygamma3, trigamma};
use crate::quadrature::integrate_positive;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivationCheck {
    pub name: String,
    pub tolerance: f64,
    pub status: Status,
    pub detail: String,
}

impl DerivationCheck {
    fn new(name: &str, tolerance: f64, ok: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            tolerance,
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

pub const MARGINAL_TOL: f64 = 1e-6;
pub const MOMENT_REL_TOL: f64 = 1e-4;
pub const ODD_MOMENT_TOL: f64 = 1e-6;
pub const KURTOSIS_ENDPOINT_TOL: f64 = 1e-2;

/// `p(u_t | u_{t-1})` after integrating out the dummy node:
/// `u_{t-1}^A u_t^{A-1} (u_{t-1}+u_t)^{-2A} Γ(2A)/Γ(A)²`.
pub fn marginal_transition(u_prev: f64, u: f64, params: GamChainParams) -> f64 {
    let a = params.shape_a;
    (a * u_prev.ln() + (a - 1.0) * u.ln() - 2.0 * a * (u_prev + u).ln() + ln_gamma(2.0 * a)
        - 2.0 * ln_gamma(a))
    .exp()
}

/// `∫ Ga(u | A, v) Ga(v | A, u_prev) dv` by adaptive quadrature.
pub fn marginal_transition_quadrature(u_prev: f64, u: f64, params: GamChainParams) -> Result<f64> {
    let a = params.shape_a;
    let norm = -2.0 * ln_gamma(a) + a * u_prev.ln() + (a - 1.0) * u.ln();
    let q = integrate_positive(
        |v| ((2.0 * a - 1.0) * v.ln() - v * (u + u_prev) + norm).exp(),
        0.0,
        1e-12,
    )?;
    Ok(q.value)
}

/// Default evaluation points `(u_{t-1}, u_t)`: 20 pairs spanning two decades.
pub fn default_marginal_grid() -> Vec<(f64, f64)> {
    let prev = [0.1, 0.5, 1.0, 3.0, 10.0];
    let next = [0.2, 1.0, 2.5, 8.0];
    prev.iter().flat_map(|&p| next.iter().map(move |&n| (p, n))).collect()
}

/// Quadrature against the closed form on `grid`, plus the exact asymmetry
/// `f(a, b) / f(b, a) = a / b` of the two exponents.
pub fn check_marginalization(params: GamChainParams, grid: &[(f64, f64)]) -> Result<DerivationCheck> {
    if grid.is_empty() {
        return Err(config("marginalisation grid is empty"));
    }
    let mut worst = 0.0f64;
    for &(up, u) in grid {
        let closed = marginal_transition(up, u, params);
        let quad = marginal_transition_quadrature(up, u, params)?;
        worst = worst.max(((quad - closed) / closed).abs());
    }
    let mut worst_asym = 0.0f64;
    for &(up, u) in grid {
        let ratio = marginal_transition(up, u, params) / marginal_transition(u, up, params);
        worst_asym = worst_asym.max((ratio / (up / u) - 1.0).abs());
    }
    let ok = worst <= MARGINAL_TOL && worst_asym <= MARGINAL_TOL;
    Ok(DerivationCheck::new(
        "marginalization",
        MARGINAL_TOL,
        ok,
        format!(
            "A={}: max relative error {worst:.3e} over {} points, asymmetry error {worst_asym:.3e}",
            params.shape_a,
            grid.len()
        ),
    ))
}

fn central_difference(f: &impl Fn(f64) -> f64, order: u32, h: f64) -> f64 {
    match order {
        1 => (f(h) - f(-h)) / (2.0 * h),
        2 => (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h),
        3 => (f(2.0 * h) - 2.0 * f(h) + 2.0 * f(-h) - f(-2.0 * h)) / (2.0 * h.powi(3)),
        4 => (f(2.0 * h) - 4.0 * f(h) + 6.0 * f(0.0) - 4.0 * f(-h) + f(-2.0 * h)) / h.powi(4),
        _ => unreachable!("stencils exist for orders 1 to 4"),
    }
}

/// Richardson-extrapolated derivative at 0. All stencils above have error
/// series in even powers of `h`.
pub fn richardson_derivative(f: impl Fn(f64) -> f64, order: u32, h0: f64, levels: usize) -> f64 {
    let mut table: Vec<f64> = (0..levels)
        .map(|k| central_difference(&f, order, h0 / f64::from(1u32 << k)))
        .collect();
    for j in 1..levels {
        let factor = 4f64.powi(j as i32);
        for k in (j..levels).rev() {
            table[k] = (factor * table[k] - table[k - 1]) / (factor - 1.0);
        }
    }
    table[levels - 1]
}

/// Raw moments 1 to 4 of the increment from its closed form:
/// `(0, 2ψ⁽¹⁾, 0, 2(6ψ⁽¹⁾² + ψ⁽³⁾))`.
pub fn increment_moments(params: GamChainParams) -> [f64; 4] {
    let t1 = trigamma(params.shape_a);
    [0.0, 2.0 * t1, 0.0, 2.0 * (6.0 * t1 * t1 + polygamma3(params.shape_a))]
}

/// Derivatives of the MGF at zero, numerically.
pub fn mgf_derivatives(params: GamChainParams) -> Result<[f64; 4]> {
    // keep the widest stencil point, 2·h0, inside |λ| < A
    let h0 = (params.shape_a / 8.0).min(0.2);
    increment_mgf(2.0 * h0, params)?;
    let mgf = |l: f64| increment_mgf(l, params).unwrap_or(f64::NAN);
    Ok([1, 2, 3, 4].map(|n| richardson_derivative(mgf, n, h0, 4)))
}

pub fn check_mgf_and_moments(params: GamChainParams) -> Result<DerivationCheck> {
    if params.shape_a <= 1.5 {
        return Err(config(format!(
            "moment check needs A > 1.5, got {}",
            params.shape_a
        )));
    }
    let numeric = mgf_derivatives(params)?;
    let closed = increment_moments(params);
    let odd = numeric[0].abs().max(numeric[2].abs());
    let rel2 = (numeric[1] / closed[1] - 1.0).abs();
    let rel4 = (numeric[3] / closed[3] - 1.0).abs();
    let ok = odd <= ODD_MOMENT_TOL && rel2 <= MOMENT_REL_TOL && rel4 <= MOMENT_REL_TOL;
    Ok(DerivationCheck::new(
        "mgf_and_moments",
        MOMENT_REL_TOL,
        ok,
        format!(
            "A={}: odd derivatives {odd:.1e}, second {:.9} vs {:.9} (rel {rel2:.1e}), fourth {:.9} vs {:.9} (rel {rel4:.1e})",
            params.shape_a, numeric[1], closed[1], numeric[3], closed[3]
        ),
    ))
}

/// `points` values of `A` spaced evenly in `ln A` between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && points >= 2) {
        return Err(config(format!("invalid log grid {lo}..{hi} with {points} points")));
    }
    let (l0, l1) = (lo.ln(), hi.ln());
    Ok((0..points)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (points - 1) as f64).exp())
        .collect())
}

/// Kurtosis strictly inside (3, 6) and strictly decreasing on the grid,
/// the grid ends within [`KURTOSIS_ENDPOINT_TOL`] of 6 and 3, and the
/// far points `K(1e-4) > 5.99`, `K(1e4) < 3.001`.
pub fn check_kurtosis_bound(grid: &[f64]) -> Result<DerivationCheck> {
    if grid.len() < 2 {
        return Err(config("kurtosis grid needs at least two points"));
    }
    let k = |a: f64| GamChainParams::new(a).map(increment_kurtosis);
    let values = grid.iter().map(|&a| k(a)).collect::<Result<Vec<f64>>>()?;
    let inside = values.iter().all(|&v| v > 3.0 && v < 6.0);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let (first, last) = (values[0], values[values.len() - 1]);
    let ends = (6.0 - first).abs() <= KURTOSIS_ENDPOINT_TOL && (last - 3.0).abs() <= KURTOSIS_ENDPOINT_TOL;
    let (k_lo, k_hi) = (k(1e-4)?, k(1e4)?);
    let far = k_lo > 5.99 && k_hi < 3.001;
    Ok(DerivationCheck::new(
        "kurtosis_bound",
        KURTOSIS_ENDPOINT_TOL,
        inside && decreasing && ends && far,
        format!(
            "{} points in [{:.0e}, {:.0e}]: inside (3,6) {inside}, decreasing {decreasing}, K(first)={first:.6}, K(last)={last:.6}, K(1e-4)={k_lo:.6}, K(1e4)={k_hi:.6}",
            grid.len(),
            grid[0],
            grid[grid.len() - 1]
        ),
    ))
}

/// The full suite at its pinned parameters.
pub fn run_all() -> Result<Vec<DerivationCheck>> {
    let mut checks = Vec::new();
    let grid = default_marginal_grid();
    for a in [0.3, 1.0, 2.0, 7.5] {
        checks.push(check_marginalization(GamChainParams::new(a)?, &grid)?);
    }
    for a in [2.0, 3.0, 10.0] {
        checks.push(check_mgf_and_moments(GamChainParams::new(a)?)?);
    }
    checks.push(check_kurtosis_bound(&log_grid(1e-3, 1e4, 200)?)?);
    Ok(checks)
}

pub fn render_markdown(checks: &[DerivationCheck]) -> String {
    let mut out = String::from("# Derivation checks\n\n| check | tolerance | status | detail |\n|---|---|---|---|\n");
    for c in checks {
        let status = if c.passed() { "pass" } else { "FAIL" };
        let _ = writeln!(out, "| {} | {:.0e} | {status} | {} |", c.name, c.tolerance, c.detail);
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    let _ = writeln!(out, "\n{passed}/{} checks passed.", checks.len());
    out
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn p(a: f64) -> GamChainParams {
        GamChainParams::new(a).unwrap()
    }

    #[test]
    fn closed_form_spot_value() {
        assert!((marginal_transition(1.0, 1.0, p(1.0)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn transition_is_asymmetric() {
        let f12 = marginal_transition(1.0, 2.0, p(2.0));
        let f21 = marginal_transition(2.0, 1.0, p(2.0));
        assert!((f12 / f21 - 0.5).abs() < 1e-14);
    }

    #[test]
    fn transition_integrates_to_one() {
        for a in [0.4, 1.0, 3.0] {
            let q = integrate_positive(|u| marginal_transition(2.0, u, p(a)), 0.0, 1e-10).unwrap();
            assert!((q.value - 1.0).abs() < 1e-8, "A={a}: {}", q.value);
        }
    }

    #[test]
    fn marginalization_passes() {
        let c = check_marginalization(p(1.0), &default_marginal_grid()).unwrap();
        assert!(c.passed(), "{}", c.detail);
        assert!(check_marginalization(p(1.0), &[]).is_err());
    }

    #[test]
    fn richardson_on_polynomials_and_exp() {
        let d = richardson_derivative(|x| x.powi(4) + 3.0 * x * x, 4, 0.1, 3);
        assert!((d - 24.0).abs() < 1e-8);
        for n in 1..=4 {
            let d = richardson_derivative(f64::exp, n, 0.2, 4);
            // rounding grows like eps / h^n
            let tol = [1e-11, 1e-10, 1e-9, 1e-8][n as usize - 1];
            assert!((d - 1.0).abs() < tol, "order {n}: {d}");
        }
    }

    #[test]
    fn second_moment_at_two() {
        let num = mgf_derivatives(p(2.0)).unwrap();
        let expected = 2.0 * (PI * PI / 6.0 - 1.0);
        assert!((expected - 1.289_868_1).abs() < 1e-7);
        assert!((num[1] - expected).abs() < 1e-4 * expected);
        assert!(num[0].abs() < 1e-6 && num[2].abs() < 1e-6);
    }

    #[test]
    fn fourth_moment_matches_kurtosis() {
        let m = increment_moments(p(2.0));
        let v = m[1];
        assert!((m[3] / (v * v) - increment_kurtosis(p(2.0))).abs() < 1e-12);
    }

    #[test]
    fn moment_check_domain() {
        assert!(check_mgf_and_moments(p(1.5)).is_err());
        assert!(check_mgf_and_moments(p(4.0)).unwrap().passed());
    }

    #[test]
    fn kurtosis_grid() {
        let c = check_kurtosis_bound(&log_grid(1e-3, 1e4, 200).unwrap()).unwrap();
        assert!(c.passed(), "{}", c.detail);
        // a grid that stops short of the asymptotes fails the endpoint rule
        let c = check_kurtosis_bound(&log_grid(0.5, 2.0, 10).unwrap()).unwrap();
        assert!(!c.passed());
        assert!(log_grid(1.0, 0.5, 10).is_err());
    }

    #[test]
    fn suite_and_markdown() {
        let checks = run_all().unwrap();
        assert!(checks.iter().all(DerivationCheck::passed), "{checks:#?}");
        let md = render_markdown(&checks);
        assert!(md.contains("| marginalization |"));
        assert!(md.contains(&format!("{0}/{0} checks passed", checks.len())));
    }
}
