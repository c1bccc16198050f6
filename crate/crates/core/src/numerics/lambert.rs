//! Principal branch of the Lambert W function on `[0, ∞)`.

use crate::error::{domain, Result};

const TOL: f64 = 1e-14;
const MAX_ITER: usize = 50;

/// Winitzki's global approximation, within a few percent on `[0, ∞)`.
fn initial_guess(x: f64) -> f64 {
    let l = x.ln_1p();
    l * (1.0 - l.ln_1p() / (2.0 + l))
}

/// W₀(x) for finite `x >= 0`, unchecked. Halley iteration.
pub fn lambert_w0_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut w = initial_guess(x);
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= TOL * (1.0 + w.abs()) {
            break;
        }
    }
    w
}

/// W₀(x) with domain checking (`x` finite and non-negative).
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(domain(format!("lambert_w0 requires finite x >= 0, got {x}")));
    }
    Ok(lambert_w0_unchecked(x))
}

/// W₀(eˡ) without forming `eˡ`, for arguments that would overflow.
pub fn lambert_w0_exp(l: f64) -> f64 {
    if l < 700.0 {
        return lambert_w0_unchecked(l.exp());
    }
    // solve w + ln w = l
    let mut w = l - l.ln();
    for _ in 0..MAX_ITER {
        let step = (w + w.ln() - l) / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= TOL * w {
            break;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use std::f64::consts::E;

    use super::*;

    #[test]
    fn spot_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        // omega constant via plain Newton on w e^w = 1
        let mut w: f64 = 0.5;
        for _ in 0..100 {
            w -= (w * w.exp() - 1.0) / ((w + 1.0) * w.exp());
        }
        assert!((lambert_w0(1.0).unwrap() - w).abs() < 1e-15);
        assert!((w - 0.567_143_290_4).abs() < 1e-10);
    }

    #[test]
    fn round_trip_on_log_grid() {
        let mut x = 1e-12;
        while x <= 1e6 {
            let w = lambert_w0(x).unwrap();
            let resid = (w * w.exp() - x).abs();
            assert!(resid <= 1e-12 * x.max(1.0), "x={x} resid={resid}");
            x *= 1.21;
        }
    }

    #[test]
    fn huge_arguments_via_log() {
        for &l in &[10.0, 300.0, 699.0, 701.0, 5_000.0, 1e6] {
            let w = lambert_w0_exp(l);
            // w + ln w = l
            assert!(((w + w.ln() - l) / l).abs() < 1e-14, "l={l}");
        }
    }

    #[test]
    fn rejects_negative_and_non_finite() {
        assert!(lambert_w0(-0.1).is_err());
        assert!(lambert_w0(f64::NAN).is_err());
        assert!(lambert_w0(f64::INFINITY).is_err());
    }
}
