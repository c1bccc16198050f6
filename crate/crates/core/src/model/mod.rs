//! Domain types and closed-form analytics of the gamma chain.

mod increment;
mod marginal;
mod types;

pub use increment::{increment_density, increment_kurtosis, increment_mgf, increment_variance, naive_increment_density};
pub use marginal::{marginal_return_density, marginal_return_kurtosis};
pub use types::{GamChainParams, LatentPath, LogNParams, ReturnSeries};
