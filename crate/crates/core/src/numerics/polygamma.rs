//! Digamma, trigamma and ψ⁽³⁾.
//!
//! All three shift the argument up to `x >= 10` with the recurrence
//! `ψ⁽ⁿ⁾(x) = ψ⁽ⁿ⁾(x + 1) - (-1)ⁿ n! / x^(n+1)` and then evaluate the
//! Bernoulli-number asymptotic expansion.

use crate::error::{domain, Result};

const SHIFT_TO: f64 = 10.0;

/// ψ⁽⁰⁾(x), unchecked; NaN outside `x > 0`.
pub fn digamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_TO {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // sum_k B_2k / (2k x^2k)
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    acc + x.ln() - 0.5 / x - tail
}

/// ψ⁽¹⁾(x), unchecked.
pub fn trigamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_TO {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/(2x²) + sum_k B_2k / x^(2k+1)
    let tail = inv2
        * inv
        * (1.0 / 6.0
            - inv2
                * (1.0 / 30.0
                    - inv2
                        * (1.0 / 42.0
                            - inv2
                                * (1.0 / 30.0
                                    - inv2 * (5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0))))));
    acc + inv + 0.5 * inv2 + tail
}

/// ψ⁽³⁾(x), unchecked.
pub fn polygamma3(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < SHIFT_TO {
        let x2 = x * x;
        acc += 6.0 / (x2 * x2);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let inv3 = inv2 * inv;
    // 2/x³ + 3/x⁴ + sum_k B_2k (2k+1)(2k+2) / x^(2k+3)
    let tail = inv3
        * inv2
        * (2.0
            - inv2
                * (1.0
                    - inv2
                        * (4.0 / 3.0
                            - inv2 * (3.0 - inv2 * (10.0 - inv2 * (691.0 / 15.0 - inv2 * 280.0))))));
    acc + 2.0 * inv3 + 3.0 * inv3 * inv + tail
}

/// ψ⁽ⁿ⁾(x) for the orders the model needs: 0, 1 and 3.
pub fn polygamma(n: u32, x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain(format!("polygamma requires finite x > 0, got {x}")));
    }
    match n {
        0 => Ok(digamma(x)),
        1 => Ok(trigamma(x)),
        3 => Ok(polygamma3(x)),
        _ => Err(domain(format!("polygamma order {n} is not supported (use 0, 1 or 3)"))),
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::numerics::gamma::EULER_GAMMA;

    /// Direct series: ψ⁽ⁿ⁾(x) = (-1)^(n+1) n! Σ_k 1/(x+k)^(n+1) for n >= 1,
    /// ψ(x) = -γ + Σ_k (1/(k+1) - 1/(k+x)). Tail replaced by the midpoint integral.
    fn series_oracle(n: u32, x: f64) -> f64 {
        const TERMS: usize = 10_000_000;
        let big_n = TERMS as f64;
        if n == 0 {
            let mut s = 0.0;
            for k in (0..TERMS).rev() {
                let k = k as f64;
                s += 1.0 / (k + 1.0) - 1.0 / (k + x);
            }
            let tail = ((big_n - 0.5 + x) / (big_n + 0.5)).ln();
            return -EULER_GAMMA + s + tail;
        }
        let m = (n + 1) as i32;
        let mut s = 0.0;
        for k in (0..TERMS).rev() {
            s += (x + k as f64).powi(-m);
        }
        let tail = (x + big_n - 0.5).powi(1 - m) / f64::from(m - 1);
        let fact: f64 = (1..=n).map(f64::from).product();
        fact * (s + tail)
    }

    #[test]
    fn spot_values_at_one() {
        assert!((digamma(1.0) + 0.577_215_664_9).abs() < 1e-10);
        assert!((trigamma(1.0) - 1.644_934_066_8).abs() < 1e-10);
        assert!((polygamma3(1.0) - 6.493_939_402_3).abs() < 1e-9);
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((polygamma3(1.0) - PI.powi(4) / 15.0).abs() < 1e-13);
    }

    #[test]
    fn agrees_with_direct_series() {
        for &x in &[0.1, 0.5, 1.0, 2.0, 10.0] {
            for n in [0u32, 1, 3] {
                let got = polygamma(n, x).unwrap();
                let want = series_oracle(n, x);
                let err = ((got - want) / want).abs();
                assert!(err < 1e-8, "n={n} x={x} got={got} want={want}");
            }
        }
    }

    #[test]
    fn digamma_recurrence() {
        let mut x = 0.1;
        while x <= 100.0 {
            let d = digamma(x + 1.0) - digamma(x) - 1.0 / x;
            assert!(d.abs() <= 1e-10, "x={x} d={d}");
            x += 0.173;
        }
    }

    #[test]
    fn higher_order_recurrences() {
        for &x in &[1e-3, 0.3, 3.7, 9.99, 10.0, 57.0, 1e4] {
            let r1 = (trigamma(x) - trigamma(x + 1.0) - 1.0 / (x * x)) / trigamma(x);
            assert!(r1.abs() < 1e-13, "x={x}");
            let r3 = (polygamma3(x) - polygamma3(x + 1.0) - 6.0 / x.powi(4)) / polygamma3(x);
            assert!(r3.abs() < 1e-13, "x={x}");
        }
    }

    #[test]
    fn large_argument_asymptotics() {
        let x = 1e6;
        assert!((trigamma(x) * x - 1.0).abs() < 1e-6);
        assert!((polygamma3(x) * x.powi(3) / 2.0 - 1.0).abs() < 1e-5);
        assert!((digamma(x) - x.ln()).abs() < 1e-6);
    }

    #[test]
    fn unsupported_order_and_bad_argument() {
        assert!(polygamma(2, 1.0).is_err());
        assert!(polygamma(0, 0.0).is_err());
        assert!(polygamma(1, -3.0).is_err());
        assert!(polygamma(3, f64::NAN).is_err());
    }
}
