use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{domain, Result};

/// Φ(x), unchecked. Accurate in both tails because it goes through `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal CDF with a finiteness check.
pub fn standard_normal_cdf(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(domain(format!("standard_normal_cdf requires finite x, got {x}")));
    }
    Ok(normal_cdf(x))
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Φ⁻¹(p) for `0 < p < 1`: bisection on the lower tail, then Newton polish.
pub fn standard_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(domain(format!("quantile requires 0 < p < 1, got {p}")));
    }
    if p > 0.5 {
        return Ok(-standard_normal_quantile(1.0 - p)?);
    }
    let (mut lo, mut hi) = (-40.0f64, 0.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let dens = normal_pdf(x);
        if dens <= 0.0 {
            break;
        }
        x -= (normal_cdf(x) - p) / dens;
    }
    Ok(x)
}
