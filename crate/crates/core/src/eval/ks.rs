use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{config, input, Result};
use crate::numerics::{normal_cdf, standard_normal_quantile};

/// Smallest sample the KS test accepts.
pub const MIN_KS_SAMPLE: usize = 8;

/// Significance level used throughout when none is given.
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
    pub passed: bool,
    pub n: usize,
}

/// One-sample two-sided Kolmogorov–Smirnov test against N(0, 1).
///
/// The p-value is the asymptotic Kolmogorov tail evaluated at Stephens'
/// finite-sample scaling `(√n + 0.12 + 0.11/√n)·D`.
pub fn ks_test_standard_normal(sample: &[f64], alpha: f64) -> Result<KsOutcome> {
    let n = sample.len();
    if n < MIN_KS_SAMPLE {
        return Err(input(format!("KS test needs at least {MIN_KS_SAMPLE} values, got {n}")));
    }
    if let Some(i) = sample.iter().position(|x| !x.is_finite()) {
        return Err(input(format!("sample value {i} is not finite ({})", sample[i])));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let nf = n as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x);
            ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
        })
        .fold(0.0, f64::max);
    let root = nf.sqrt();
    let p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * statistic);
    Ok(KsOutcome {
        statistic,
        p_value,
        passed: p_value > alpha,
        n,
    })
}

/// `P(K > λ)` for the Kolmogorov distribution.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Jacobi theta form, fast for small λ.
        let c = -PI * PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20 {
            let j = (2 * k - 1) as f64;
            s += (c * j * j).exp();
        }
        1.0 - (2.0 * PI).sqrt() / lambda * s
    } else {
        let mut s = 0.0;
        let mut sign = 1.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            s += sign * term;
            if term < 1e-300 {
                break;
            }
            sign = -sign;
        }
        2.0 * s
    };
    p.clamp(0.0, 1.0)
}

/// Quantile pairs `(Φ⁻¹((i - ½)/n), x_(i))` for a normal Q-Q plot.
pub fn qq_pairs(sample: &[f64]) -> Result<Vec<(f64, f64)>> {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| Ok((standard_normal_quantile((i as f64 + 0.5) / n)?, x)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sampling::standard_normal;
    use crate::numerics::seeded_rng;

    fn plotting_positions(n: usize) -> Vec<f64> {
        (1..=n).map(|i| standard_normal_quantile((i as f64 - 0.5) / n as f64).unwrap()).collect()
    }

    #[test]
    fn plotting_positions_give_half_step() {
        let r = ks_test_standard_normal(&plotting_positions(100), 0.05).unwrap();
        assert!((r.statistic - 0.005).abs() < 1e-12);
        assert!(r.passed && r.p_value > 0.99);
    }

    #[test]
    fn shifted_sample_fails() {
        let s: Vec<f64> = plotting_positions(100).iter().map(|x| x + 5.0).collect();
        let r = ks_test_standard_normal(&s, 0.05).unwrap();
        assert!(r.p_value < 1e-10 && !r.passed);
    }

    #[test]
    fn order_invariant_and_bounded() {
        let mut rng = seeded_rng(3);
        let mut s: Vec<f64> = (0..50).map(|_| standard_normal(&mut rng) * 1.5).collect();
        let a = ks_test_standard_normal(&s, 0.05).unwrap();
        s.reverse();
        let b = ks_test_standard_normal(&s, 0.05).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.statistic));
    }

    #[test]
    fn survival_function_is_monotone_and_continuous() {
        let mut prev = 1.0;
        let mut l = 0.05;
        while l < 4.0 {
            let p = kolmogorov_survival(l);
            assert!(p <= prev + 1e-15);
            prev = p;
            l += 0.01;
        }
        // both branches agree at the switch point
        let lo = {
            let c = -PI * PI / (8.0 * 1.18 * 1.18);
            1.0 - (2.0 * PI).sqrt() / 1.18 * (1..=20).map(|k| (c * ((2 * k - 1) as f64).powi(2)).exp()).sum::<f64>()
        };
        let hi: f64 = 2.0 * (1..=100).map(|k| (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * 1.18 * 1.18).exp()).sum::<f64>();
        assert!((lo - hi).abs() < 1e-14);
        // classical critical value
        assert!((kolmogorov_survival(1.358) - 0.05).abs() < 2e-4);
    }

    #[test]
    fn calibrated_rejection_rate() {
        let mut rng = seeded_rng(11);
        let mut rejections = 0;
        for _ in 0..1000 {
            let s: Vec<f64> = (0..1000).map(|_| standard_normal(&mut rng)).collect();
            if !ks_test_standard_normal(&s, 0.05).unwrap().passed {
                rejections += 1;
            }
        }
        let rate = rejections as f64 / 1000.0;
        assert!((rate - 0.05).abs() <= 0.015, "rejection rate {rate}");
    }

    #[test]
    fn input_errors() {
        assert!(ks_test_standard_normal(&[0.0; 7], 0.05).is_err());
        assert!(ks_test_standard_normal(&[0.0, 1.0, f64::NAN, 0.0, 0.0, 0.0, 0.0, 0.0], 0.05).is_err());
        assert!(ks_test_standard_normal(&[0.0; 8], 1.5).is_err());
    }

    #[test]
    fn qq_pairs_are_sorted() {
        let q = qq_pairs(&[3.0, -1.0, 0.5, 0.0]).unwrap();
        assert_eq!(q.iter().map(|p| p.1).collect::<Vec<_>>(), vec![-1.0, 0.0, 0.5, 3.0]);
        assert!(q.windows(2).all(|w| w[0].0 < w[1].0));
        assert!((q[0].0 + q[3].0).abs() < 1e-12);
    }
}
