//! Closed-form coordinate-ascent inference for the gamma chain and the
//! variational EM estimate of its shape `A`.

mod estep;
mod fit;
mod objective;
mod posterior;

pub use estep::{estep, update_u, update_v};
pub use fit::{fit, VariationalConfig};
pub use objective::{elbo, em_gradient, em_objective, maximize_shape, ShapeAscent};
pub(crate) use objective::edge_statistic;
pub use posterior::{init_posterior, init_posterior_with, Expectations, GammaPosterior, Topology};
