//! Estimation reports shared by all four engines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};

/// The four estimator combinations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Lognormal chain, Laplace / mean-field.
    C1,
    /// Lognormal chain, particle smoothing.
    C2,
    /// Gamma chain, closed-form coordinate ascent.
    C3,
    /// Gamma chain, particle smoothing.
    C4,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::C1, Engine::C2, Engine::C3, Engine::C4];

    pub fn label(self) -> &'static str {
        match self {
            Engine::C1 => "c1",
            Engine::C2 => "c2",
            Engine::C3 => "c3",
            Engine::C4 => "c4",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Engine::C1 => "LogN-Chain/VI",
            Engine::C2 => "LogN-Chain/MC",
            Engine::C3 => "Gam-Chain/VI",
            Engine::C4 => "Gam-Chain/MC",
        }
    }

    pub fn is_monte_carlo(self) -> bool {
        matches!(self, Engine::C2 | Engine::C4)
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Engine::ALL
            .into_iter()
            .find(|e| e.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| config(format!("unknown engine '{s}' (expected c1, c2, c3 or c4)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FittedParams {
    GamChain { shape_a: f64 },
    LogNormal { step_variance: f64 },
}

impl FittedParams {
    pub fn value(&self) -> f64 {
        match *self {
            FittedParams::GamChain { shape_a } => shape_a,
            FittedParams::LogNormal { step_variance } => step_variance,
        }
    }
}

/// Wall-clock bookkeeping; kept out of the serialised report so that reports
/// are reproducible byte for byte.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub estep_seconds: f64,
    pub mstep_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub engine: Engine,
    pub params: FittedParams,
    /// ELBO (C3), expected complete-data log-likelihood (C2/C4) or the
    /// Gaussian random-walk objective (C1), one entry per EM round.
    pub objective_trace: Vec<f64>,
    /// `A` (gamma chain) or `S²` (lognormal chain) after each round.
    pub param_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip)]
    pub timings: StageTimings,
}

impl FitReport {
    /// Pretty JSON without timing data.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Settings common to every EM loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmSettings {
    pub max_rounds: usize,
    /// Relative change of the parameter below which the loop stops.
    pub tol: f64,
    /// Record the objective each round (costs one extra pass per round).
    pub track_objective: bool,
    /// Ignore the tolerance and run exactly `max_rounds` (benchmark mode).
    pub fixed_rounds: bool,
}

impl Default for EmSettings {
    fn default() -> Self {
        Self {
            max_rounds: 1000,
            tol: 1e-6,
            track_objective: true,
            fixed_rounds: false,
        }
    }
}

impl EmSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(config("max_rounds must be at least 1"));
        }
        if !(self.tol.is_finite() && self.tol >= 0.0) {
            return Err(config(format!("tolerance must be finite and >= 0, got {}", self.tol)));
        }
        Ok(())
    }

    /// Benchmark configuration: a fixed number of rounds, no objective tracking.
    pub fn benchmark(rounds: usize) -> Self {
        Self {
            max_rounds: rounds,
            tol: 0.0,
            track_objective: false,
            fixed_rounds: true,
        }
    }

    pub(crate) fn has_converged(&self, old: f64, new: f64) -> bool {
        !self.fixed_rounds && (new - old).abs() <= self.tol * old.abs()
    }
}
