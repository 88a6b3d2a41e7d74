//! Data types of the model: weighted phase-space clouds, the alignment
//! kernel, the compactly supported source bump, external forces, and
//! evaluators for every explicit constant entering the quantitative bounds.

mod bump;
mod config;
mod constants;
mod density;
mod ensemble;
mod force;
mod kernel;

pub use bump::BumpSource;
pub use config::{BumpSpec, FieldInit, ForceSpec, GridSpec, KernelSpec, SimConfig};
pub use constants::{rate_cd, support_radius, BoundConstants};
pub use density::{Density1d, InitialSpec, VelocityField};
pub use ensemble::ParticleEnsemble;
pub use force::ExternalForce;
pub use kernel::AlignmentKernel;

/// Probability weights must sum to one within this slack.
pub const WEIGHT_TOL: f64 = 1e-12;
