//! Log-gamma and gamma functions.
//!
//! Regions:
//! - `x < 0.5`: `ln Γ(x) = ln Γ(x + 1) - ln x`
//! - `0.5 <= x <= 2.5`: power series of `ln Γ(1 + z)` around 1 (or 2) built from
//!   `ζ(k) - 1`, which keeps full relative accuracy near the zeros at 1 and 2
//! - `2.5 < x < 10`: upward shift to the Stirling region
//! - `x >= 10`: Stirling series with Bernoulli corrections

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{domain, Result};

pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SERIES_TERMS: usize = 40;
const STIRLING_MIN: f64 = 10.0;

/// `ζ(k) - 1` for `k = 2..SERIES_TERMS + 2`, indexed by `k - 2`.
fn zeta_minus_one() -> &'static [f64; SERIES_TERMS] {
    static TABLE: OnceLock<[f64; SERIES_TERMS]> = OnceLock::new();
    TABLE.get_or_init(|| {
        const N: i32 = 64;
        let mut out = [0.0; SERIES_TERMS];
        for (i, slot) in out.iter_mut().enumerate() {
            let k = (i + 2) as i32;
            let kf = f64::from(k);
            // direct part, smallest terms first
            let mut s = 0.0;
            for n in (2..N).rev() {
                s += f64::from(n).powi(-k);
            }
            // Euler-Maclaurin tail from N
            let nf = f64::from(N);
            let tail = nf.powi(1 - k) / (kf - 1.0) + 0.5 * nf.powi(-k) + kf * nf.powi(-k - 1) / 12.0
                - kf * (kf + 1.0) * (kf + 2.0) * nf.powi(-k - 3) / 720.0
                + kf * (kf + 1.0) * (kf + 2.0) * (kf + 3.0) * (kf + 4.0) * nf.powi(-k - 5) / 30240.0;
            *slot = s + tail;
        }
        out
    })
}

/// `ln Γ(1 + z)` for `|z| <= 0.5`.
fn ln_gamma_1p(z: f64) -> f64 {
    let zeta = zeta_minus_one();
    let mut acc = 0.0;
    // Horner over k = 2..: sum (-1)^k (ζ(k)-1) z^k / k
    for i in (0..SERIES_TERMS).rev() {
        let k = (i + 2) as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc * z + sign * zeta[i] / k;
    }
    -z.ln_1p() + z * (1.0 - EULER_GAMMA) + acc * z * z
}

fn stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 360.0
                    + inv2
                        * (1.0 / 1260.0
                            + inv2
                                * (-1.0 / 1680.0
                                    + inv2 * (1.0 / 1188.0 + inv2 * (-691.0 / 360_360.0 + inv2 / 156.0))))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * PI).ln() + series
}

/// Unchecked `ln Γ(x)` for `x > 0`. NaN for anything else.
pub fn ln_gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x == 1.0 || x == 2.0 {
        return 0.0;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return ln_gamma_1p(x) - x.ln();
    }
    if x <= 1.5 {
        return ln_gamma_1p(x - 1.0);
    }
    if x <= 2.5 {
        let z = x - 2.0;
        return z.ln_1p() + ln_gamma_1p(z);
    }
    if x < STIRLING_MIN {
        let mut shifted = x;
        let mut prod = 1.0;
        while shifted < STIRLING_MIN {
            prod *= shifted;
            shifted += 1.0;
        }
        return stirling(shifted) - prod.ln();
    }
    stirling(x)
}

/// `ln Γ(x)` with domain checking.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(domain(format!("log_gamma requires finite x > 0, got {x}")));
    }
    Ok(ln_gamma(x))
}

/// `Γ(x)` for `x > 0`; overflows to infinity above ~171.6.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}
