//! Return law with the dummy rate held fixed: integrating `u ~ Ga(A, B)` out
//! of `y ~ N(0, 1/u)` gives a non-standardised Student-t with `2A` degrees of
//! freedom.

use std::f64::consts::PI;

use super::types::GamChainParams;
use crate::error::{check_finite, check_positive, domain, Result};
use crate::numerics::ln_gamma;

/// `2^A B^A (2B + y²)^{-A-1/2} Γ(A+1/2) / (√π Γ(A))`.
pub fn marginal_return_density(y: f64, fixed_rate_b: f64, params: GamChainParams) -> Result<f64> {
    check_finite("return y", y)?;
    check_positive("fixed rate B", fixed_rate_b)?;
    let a = params.shape_a;
    let two_b = 2.0 * fixed_rate_b;
    let log_p = a * two_b.ln() - (a + 0.5) * (two_b + y * y).ln() + ln_gamma(a + 0.5)
        - 0.5 * PI.ln()
        - ln_gamma(a);
    Ok(log_p.exp())
}

/// `3Γ(A-2)Γ(A)/Γ(A-1)²`, defined for `A > 2`.
///
/// The gamma ratio collapses to `3(A-1)/(A-2)`, which is what gets evaluated.
pub fn marginal_return_kurtosis(params: GamChainParams) -> Result<f64> {
    let a = params.shape_a;
    if a <= 2.0 {
        return Err(domain(format!("return kurtosis is infinite for A <= 2 (A={a})")));
    }
    Ok(3.0 * (a - 1.0) / (a - 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_positive};

    fn p(a: f64) -> GamChainParams {
        GamChainParams::new(a).unwrap()
    }

    #[test]
    fn value_at_origin() {
        let v = marginal_return_density(0.0, 1.0, p(1.0)).unwrap();
        assert!((v - 2f64.powf(-1.5)).abs() < 1e-15);
        assert!((v - 0.353_553_4).abs() < 1e-7);
    }

    #[test]
    fn symmetric_and_normalised() {
        for &y in &[0.1, 2.0, 13.0] {
            assert_eq!(
                marginal_return_density(y, 0.7, p(2.5)).unwrap(),
                marginal_return_density(-y, 0.7, p(2.5)).unwrap()
            );
        }
        let q = integrate(|y| marginal_return_density(y, 1.0, p(1.5)).unwrap(), -200.0, 200.0, 1e-12, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equals_normal_gamma_compound() {
        for &(a, b) in &[(0.7, 0.3), (1.0, 1.0), (4.0, 2.5)] {
            for &y in &[0.0, 0.4, 3.0] {
                let q = integrate_positive(
                    |u| {
                        let normal = (0.5 * u.ln() - 0.5 * u * y * y).exp() / (2.0 * PI).sqrt();
                        let gamma = (a * f64::ln(b) - ln_gamma(a) + (a - 1.0) * u.ln() - b * u).exp();
                        normal * gamma
                    },
                    1e-15,
                    1e-12,
                )
                .unwrap();
                let closed = marginal_return_density(y, b, p(a)).unwrap();
                assert!((q.value - closed).abs() < 1e-7, "a={a} b={b} y={y}");
            }
        }
    }

    #[test]
    fn kurtosis_values_and_domain() {
        assert!((marginal_return_kurtosis(p(3.0)).unwrap() - 6.0).abs() < 1e-9);
        assert!((marginal_return_kurtosis(p(10.0)).unwrap() - 3.375).abs() < 1e-9);
        assert!(marginal_return_kurtosis(p(2.0)).is_err());
        // the literal gamma-function expression
        for &a in &[2.5, 3.0, 10.0, 40.0] {
            let lit = 3.0 * (ln_gamma(a - 2.0) + ln_gamma(a) - 2.0 * ln_gamma(a - 1.0)).exp();
            assert!((marginal_return_kurtosis(p(a)).unwrap() - lit).abs() < 1e-9);
        }
        assert!(marginal_return_kurtosis(p(4.0)).unwrap() > marginal_return_kurtosis(p(5.0)).unwrap());
    }

    #[test]
    fn bad_rate() {
        assert!(marginal_return_density(0.0, 0.0, p(1.0)).is_err());
    }
}
