//! Law of the log-precision increment `w_t = ln u_t - ln u_{t-1}`.
//!
//! Marginalising the dummy node out of `u_t ~ Ga(A, v)`, `v ~ Ga(A, u_{t-1})`
//! gives the symmetric density
//!
//! ```text
//! p(w) = Γ(2A)/Γ(A)² · e^{A w} (1 + e^w)^{-2A}
//! ```
//!
//! with moment generating function `Γ(A-λ)Γ(A+λ)/Γ(A)²`, variance `2ψ⁽¹⁾(A)`
//! and kurtosis `3 + ψ⁽³⁾(A) / (2ψ⁽¹⁾(A)²)`, which always lies in (3, 6).
//!
//! The often-quoted form with `e^{-A w}` in place of `e^{A w}` cannot be
//! normalised; both forms agree on every even moment.

use super::types::GamChainParams;
use crate::error::{check_finite, check_positive, domain, Result};
use crate::numerics::{ln_gamma, polygamma3, trigamma};

/// Density of the increment under the dummy-node chain.
pub fn increment_density(w: f64, params: GamChainParams) -> Result<f64> {
    check_finite("increment w", w)?;
    let a = params.shape_a;
    let x = w.abs();
    let log_p = ln_gamma(2.0 * a) - 2.0 * ln_gamma(a) - a * x - 2.0 * a * (-x).exp().ln_1p();
    Ok(log_p.exp())
}

/// Density of the increment under the plain chain `u_t ~ Ga(A, u_{t-1})`.
///
/// Depends on `u_{t-1}`, so it is not a time-invariant increment law.
pub fn naive_increment_density(w: f64, u_prev: f64, params: GamChainParams) -> Result<f64> {
    check_finite("increment w", w)?;
    check_positive("previous precision u_prev", u_prev)?;
    let a = params.shape_a;
    let log_s = w + 2.0 * u_prev.ln();
    Ok((-log_s.exp() + a * log_s - ln_gamma(a)).exp())
}

/// `E[e^{λ w}] = Γ(A-λ)Γ(A+λ)/Γ(A)²`, finite for `|λ| < A`.
pub fn increment_mgf(lambda: f64, params: GamChainParams) -> Result<f64> {
    check_finite("lambda", lambda)?;
    let a = params.shape_a;
    if lambda.abs() >= a {
        return Err(domain(format!("MGF diverges for |lambda| >= A (lambda={lambda}, A={a})")));
    }
    Ok((ln_gamma(a - lambda) + ln_gamma(a + lambda) - 2.0 * ln_gamma(a)).exp())
}

pub fn increment_variance(params: GamChainParams) -> f64 {
    2.0 * trigamma(params.shape_a)
}

/// Non-excess kurtosis of the increment.
pub fn increment_kurtosis(params: GamChainParams) -> f64 {
    let t1 = trigamma(params.shape_a);
    3.0 + polygamma3(params.shape_a) / (2.0 * t1 * t1)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::quadrature::{integrate, integrate_positive, integrate_real_line};

    fn p(a: f64) -> GamChainParams {
        GamChainParams::new(a).unwrap()
    }

    #[test]
    fn density_at_zero() {
        assert!((increment_density(0.0, p(1.0)).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn density_is_symmetric() {
        for &a in &[0.2, 1.0, 7.5] {
            for &w in &[0.1, 1.0, 5.0, 30.0] {
                let l = increment_density(w, p(a)).unwrap();
                let r = increment_density(-w, p(a)).unwrap();
                assert!((l - r).abs() <= 1e-14 * l.max(1e-300), "a={a} w={w}");
            }
        }
    }

    #[test]
    fn density_normalises() {
        let q = integrate(|w| increment_density(w, p(0.5)).unwrap(), -40.0, 40.0, 1e-12, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-8, "{}", q.value);
    }

    #[test]
    fn density_matches_change_of_variables_of_transition() {
        // p(w) = p(u_t | u_{t-1}) · u_t with u_t = u_{t-1} e^w, from the v-integral
        let a = 1.3;
        for &w in &[-2.0, 0.0, 0.7] {
            let u_prev: f64 = 0.8;
            let u = u_prev * f64::exp(w);
            let inner = integrate_positive(
                |v| {
                    let gv = (a * u_prev.ln() - ln_gamma(a) + (a - 1.0) * v.ln() - u_prev * v).exp();
                    let gu = (a * v.ln() - ln_gamma(a) + (a - 1.0) * u.ln() - v * u).exp();
                    gv * gu
                },
                1e-15,
                1e-12,
            )
            .unwrap();
            let want = inner.value * u;
            let got = increment_density(w, p(a)).unwrap();
            assert!(((got - want) / want).abs() < 1e-9);
        }
    }

    #[test]
    fn naive_density_properties() {
        let q = integrate_real_line(|w| naive_increment_density(w, 1.7, p(0.8)).unwrap(), 1e-13, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-9);
        let d1 = naive_increment_density(0.3, 1.0, p(1.0)).unwrap();
        let d2 = naive_increment_density(0.3, 2.0, p(1.0)).unwrap();
        assert!((d1 - d2).abs() > 1e-3);
        assert!((naive_increment_density(0.0, 1.0, p(1.0)).unwrap() - (-1f64).exp()).abs() < 1e-15);
        assert!(naive_increment_density(0.0, 0.0, p(1.0)).is_err());
    }

    #[test]
    fn mgf_values_and_poles() {
        assert!((increment_mgf(0.0, p(3.3)).unwrap() - 1.0).abs() < 1e-15);
        assert!((increment_mgf(0.5, p(1.0)).unwrap() - PI / 2.0).abs() < 1e-13);
        assert!(increment_mgf(1.0, p(1.0)).is_err());
        assert!(increment_mgf(-1.2, p(1.0)).is_err());
    }

    #[test]
    fn variance_values() {
        assert!((increment_variance(p(1.0)) - 3.289_868_133_7).abs() < 1e-9);
        assert!(increment_variance(p(0.01)) > increment_variance(p(100.0)));
        assert!((increment_variance(p(100.0)) - 0.020_100_7).abs() < 1e-6);
    }

    #[test]
    fn kurtosis_values() {
        assert!((increment_kurtosis(p(1.0)) - 4.2).abs() < 1e-9);
        let k_small = increment_kurtosis(p(1e-4));
        assert!(k_small > 5.9 && k_small < 6.0);
        let k_big = increment_kurtosis(p(1e4));
        assert!(k_big > 3.0 && k_big < 3.001);
    }

    #[test]
    fn quadrature_moments_match_closed_forms() {
        for &a in &[0.3, 1.0, 3.0, 10.0] {
            let m = |k: i32| {
                integrate_real_line(|w| w.powi(k) * increment_density(w, p(a)).unwrap(), 1e-14, 1e-12)
                    .unwrap()
                    .value
            };
            let var = increment_variance(p(a));
            let k4 = increment_kurtosis(p(a)) * var * var;
            assert!(((m(2) - var) / var).abs() < 1e-5, "a={a}");
            assert!(((m(4) - k4) / k4).abs() < 1e-5, "a={a}");
        }
    }

    #[test]
    fn mgf_second_difference_gives_variance() {
        let a = 1.7;
        let d2 = |h: f64| {
            (increment_mgf(h, p(a)).unwrap() - 2.0 + increment_mgf(-h, p(a)).unwrap()) / (h * h)
        };
        let h = 0.02;
        let richardson = (4.0 * d2(h / 2.0) - d2(h)) / 3.0;
        let var = increment_variance(p(a));
        assert!(((richardson - var) / var).abs() < 1e-4);
    }
}
