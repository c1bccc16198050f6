//! Special functions, sampling and timing shared by every estimator.

mod gamma;
mod lambert;
mod normal;
mod polygamma;
pub mod sampling;
pub mod timing;

pub use gamma::{gamma, ln_gamma, log_gamma};
pub use lambert::{lambert_w0, lambert_w0_exp, lambert_w0_unchecked};
pub use normal::{normal_cdf, normal_pdf, standard_normal_cdf, standard_normal_quantile};
pub use polygamma::{digamma, polygamma, polygamma3, trigamma};
pub use sampling::{sample_gamma, seeded_rng, SvRng};
pub use timing::{time_function, FunctionTimingRecord, TimedFunction};

#[cfg(test)]
pub(crate) use gamma::EULER_GAMMA;

/// `ln(1 + eˣ)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log-density of `Ga(shape, rate)` at `x`.
#[inline]
pub fn gamma_ln_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Differential entropy of `Ga(shape, rate)`.
#[inline]
pub fn gamma_entropy(shape: f64, rate: f64) -> f64 {
    shape - rate.ln() + ln_gamma(shape) + (1.0 - shape) * digamma(shape)
}
