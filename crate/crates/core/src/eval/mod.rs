//! Residual normality checks, pass rates and summary statistics.

mod corpus;
mod ks;
mod residuals;
mod stats;

pub use corpus::{evaluate_corpus, write_pass_rate_csv, Column, CorpusConfig, CorpusResult};
pub use ks::{kolmogorov_survival, ks_test_standard_normal, qq_pairs, KsOutcome, DEFAULT_ALPHA, MIN_KS_SAMPLE};
pub use residuals::{draw_residuals, residual_pass_rate, ResidualReport};
pub use stats::{series_stats, SeriesStats};
