//! Per-call timing of the scalar functions the estimators lean on.
//!
//! Recipe: fill a buffer with `LogN(0, 1)` arguments, time one pass applying
//! the function to every element, time an identical pass applying the
//! identity, and report the difference divided by the element count.

use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::sampling::{seeded_rng, standard_normal};
use super::{digamma, gamma, lambert_w0_unchecked};
use crate::error::{config, Error, Result};

pub const MIN_EVALUATIONS: usize = 1_000_000;

/// Smallest reportable per-call time; differences below the loop baseline clamp here.
pub const TIMING_FLOOR_SECONDS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimedFunction {
    Add,
    Mul,
    Exp,
    Log,
    Pow,
    Gamma,
    Digamma,
    LambertW,
}

impl TimedFunction {
    pub const ALL: [TimedFunction; 8] = [
        TimedFunction::Add,
        TimedFunction::Mul,
        TimedFunction::Exp,
        TimedFunction::Log,
        TimedFunction::Pow,
        TimedFunction::Gamma,
        TimedFunction::Digamma,
        TimedFunction::LambertW,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TimedFunction::Add => "add",
            TimedFunction::Mul => "mul",
            TimedFunction::Exp => "exp",
            TimedFunction::Log => "log",
            TimedFunction::Pow => "pow",
            TimedFunction::Gamma => "gamma",
            TimedFunction::Digamma => "digamma",
            TimedFunction::LambertW => "lambert_w",
        }
    }
}

impl FromStr for TimedFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TimedFunction::ALL
            .into_iter()
            .find(|f| f.label() == s)
            .ok_or_else(|| config(format!("unknown function label '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionTimingRecord {
    pub function_name: String,
    /// Seconds per call.
    pub mean_eval_time: f64,
    pub sample_count: usize,
}

fn lognormal_buffer(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded_rng(seed);
    (0..n).map(|_| standard_normal(&mut rng).exp()).collect()
}

#[inline(never)]
fn run_pass(buf: &[f64], f: impl Fn(f64, f64) -> f64) -> f64 {
    // second operand for the binary operations, hidden from the optimiser
    let other = black_box(1.000_001);
    let start = Instant::now();
    for &x in buf {
        black_box(f(black_box(x), other));
    }
    start.elapsed().as_secs_f64()
}

fn pass_for(func: TimedFunction, buf: &[f64]) -> f64 {
    match func {
        TimedFunction::Add => run_pass(buf, |x, y| x + y),
        TimedFunction::Mul => run_pass(buf, |x, y| x * y),
        TimedFunction::Exp => run_pass(buf, |x, _| x.exp()),
        TimedFunction::Log => run_pass(buf, |x, _| x.ln()),
        TimedFunction::Pow => run_pass(buf, |x, y| x.powf(y)),
        TimedFunction::Gamma => run_pass(buf, |x, _| gamma(x)),
        TimedFunction::Digamma => run_pass(buf, |x, _| digamma(x)),
        TimedFunction::LambertW => run_pass(buf, |x, _| lambert_w0_unchecked(x)),
    }
}

/// Mean time per call of `function_name` over `evaluations` lognormal arguments.
pub fn time_function(function_name: &str, evaluations: usize) -> Result<FunctionTimingRecord> {
    let func: TimedFunction = function_name.parse()?;
    time_timed_function(func, evaluations)
}

pub fn time_timed_function(func: TimedFunction, evaluations: usize) -> Result<FunctionTimingRecord> {
    if evaluations < MIN_EVALUATIONS {
        return Err(config(format!(
            "timing needs at least {MIN_EVALUATIONS} evaluations, got {evaluations}"
        )));
    }
    let buf = lognormal_buffer(evaluations, 0x5eed);
    // warm caches and branch predictors
    pass_for(func, &buf[..buf.len().min(100_000)]);
    let baseline = run_pass(&buf, |x, _| x);
    let elapsed = pass_for(func, &buf);
    let per_call = ((elapsed - baseline) / evaluations as f64).max(TIMING_FLOOR_SECONDS);
    Ok(FunctionTimingRecord {
        function_name: func.label().to_string(),
        mean_eval_time: per_call,
        sample_count: evaluations,
    })
}
