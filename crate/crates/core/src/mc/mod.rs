//! Particle-smoothing E-steps for both chains and the Monte Carlo EM loop.

mod cloud;
mod fit;
mod gam;
mod logn;

pub use cloud::{CloudKind, ParticleCloud};
pub use fit::{fit_mc, McConfig, McVariant};
pub use gam::{backward_smooth_gam, forward_filter_gam, GamSmoothing, SmoothedPaths};
pub use logn::{backward_smooth_logn, forward_backward_logn, forward_filter_logn, logn_mstep, LognExpectations, LognSmoothing, STEP_VARIANCE_FLOOR};
