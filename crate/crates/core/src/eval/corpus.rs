use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{fit_engine, EngineConfig, Posterior};
use crate::error::{input, Result};
use crate::model::{LatentPath, ReturnSeries};
use crate::numerics::sampling::substream;
use crate::report::{Engine, FitReport};

use super::ks::DEFAULT_ALPHA;
use super::residuals::{draw_residuals, residual_pass_rate, ResidualReport};

/// A column of the pass-rate table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    /// Unscaled returns.
    Raw,
    /// Returns scaled by the true latent precisions.
    Exact,
    Fitted(Engine),
}

impl Column {
    pub fn label(self) -> String {
        match self {
            Column::Raw => "raw".into(),
            Column::Exact => "exact".into(),
            Column::Fitted(e) => e.label().into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusConfig {
    pub engines: EngineConfig,
    pub alpha: f64,
    /// Seeds the residual draws; series `i` uses substream `i`.
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            engines: EngineConfig::default(),
            alpha: DEFAULT_ALPHA,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusResult {
    pub column: Column,
    pub reports: Vec<ResidualReport>,
    pub fits: Vec<FitReport>,
    pub pass_rate: f64,
}

/// Fits (when needed), normalises and KS-tests every series of a corpus.
///
/// Particle engines use seed `mc.seed + i` for series `i`, so each series is
/// reproducible on its own.
pub fn evaluate_corpus(series: &[ReturnSeries], latents: Option<&[LatentPath]>, column: Column, cfg: &CorpusConfig) -> Result<CorpusResult> {
    if series.is_empty() {
        return Err(input("empty corpus"));
    }
    let mut reports = Vec::with_capacity(series.len());
    let mut fits = Vec::new();
    for (i, s) in series.iter().enumerate() {
        let mut rng = substream(cfg.seed, i as u64);
        let residuals = match column {
            Column::Raw => s.returns().to_vec(),
            Column::Exact => {
                let paths = latents.ok_or_else(|| input("exact residuals need the true latent paths"))?;
                let path = paths.get(i).ok_or_else(|| input(format!("no latent path for series {i}")))?;
                draw_residuals(&Posterior::Exact(path.clone()), s, &mut rng)?
            }
            Column::Fitted(engine) => {
                let mut engines = cfg.engines;
                engines.mc.seed = engines.mc.seed.wrapping_add(i as u64);
                let (report, posterior) = fit_engine(s, engine, &engines)?;
                fits.push(report);
                draw_residuals(&posterior, s, &mut rng)?
            }
        };
        let id = if s.instrument_id.is_empty() { format!("series-{i}") } else { s.instrument_id.clone() };
        reports.push(ResidualReport::from_residuals(&id, &column.label(), &residuals, cfg.alpha)?);
    }
    let pass_rate = residual_pass_rate(&reports)?;
    Ok(CorpusResult {
        column,
        reports,
        fits,
        pass_rate,
    })
}

/// Writes a pass-rate table with one row per dataset and one column per
/// estimator, e.g. `dataset,raw,c1,c2,c3,c4`.
pub fn write_pass_rate_csv(path: &Path, columns: &[String], rows: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let mut header = vec!["dataset".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header)?;
    for (name, rates) in rows {
        if rates.len() != columns.len() {
            return Err(input(format!("row '{name}' has {} rates for {} columns", rates.len(), columns.len())));
        }
        let mut rec = vec![name.clone()];
        rec.extend(rates.iter().map(|r| format!("{r:.4}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
