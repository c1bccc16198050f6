//! One entry point for all four estimators.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};
use crate::laplace::{fit_logn_vi, GaussianPosterior, LaplaceConfig};
use crate::mc::{fit_mc, McConfig, McVariant, SmoothedPaths};
use crate::model::{LatentPath, ReturnSeries};
use crate::report::{EmSettings, Engine, FitReport};
use crate::vi::{fit, GammaPosterior, VariationalConfig};

/// What an engine knows about the latent precisions after fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "snake_case")]
pub enum Posterior {
    /// Mean-field gamma factors (C3).
    Gamma(GammaPosterior),
    /// Gaussian factors on `ln u_t` (C1).
    Gaussian(GaussianPosterior),
    /// Backward-simulated trajectories (C2, C4).
    Particles(SmoothedPaths),
    /// The true latent path, for simulated data.
    Exact(LatentPath),
}

impl Posterior {
    pub fn len(&self) -> usize {
        match self {
            Posterior::Gamma(p) => p.len(),
            Posterior::Gaussian(p) => p.len(),
            Posterior::Particles(p) => p.len(),
            Posterior::Exact(p) => p.log_u.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        serde_json::to_writer(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| input(format!("cannot open posterior {}: {e}", path.display())))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EngineConfig {
    pub vi: VariationalConfig,
    pub mc: McConfig,
    pub laplace: LaplaceConfig,
}

impl EngineConfig {
    /// Applies the same EM settings to every engine.
    pub fn with_em(mut self, em: EmSettings) -> Self {
        self.vi.em = em;
        self.mc.em = em;
        self.laplace.em = em;
        self
    }
}

pub fn fit_engine(series: &ReturnSeries, engine: Engine, cfg: &EngineConfig) -> Result<(FitReport, Posterior)> {
    match engine {
        Engine::C1 => fit_logn_vi(series, &cfg.laplace).map(|(r, p)| (r, Posterior::Gaussian(p))),
        Engine::C2 => fit_mc(series, McVariant::LogN, &cfg.mc).map(|(r, p)| (r, Posterior::Particles(p))),
        Engine::C3 => fit(series, &cfg.vi).map(|(r, p)| (r, Posterior::Gamma(p))),
        Engine::C4 => fit_mc(series, McVariant::Gam, &cfg.mc).map(|(r, p)| (r, Posterior::Particles(p))),
    }
}
