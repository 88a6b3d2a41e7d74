//! Numerical laboratory for interacting particle systems with chemotaxis.
//!
//! The crate couples three descriptions of the same collective dynamics and
//! the machinery to compare them quantitatively in Wasserstein distance:
//!
//! * [`dynamics`] — the N-particle system driven by a pairwise alignment
//!   kernel, the gradient of a self-consistently produced chemical field, and
//!   an external force; plus a weighted-characteristics realization of the
//!   associated Vlasov dynamics.
//! * [`fields`] — the chemoattractant diffusion/decay equation on a periodic
//!   grid with an exact spectral stepper and an independent Duhamel-formula
//!   oracle.
//! * [`hydro`] — the 1-d pressureless nonlocal Euler system obtained in the
//!   monokinetic regime.
//! * [`transport`] — exact discrete optimal transport (W1/W2) with a
//!   brute-force oracle and an entropic accelerator.
//! * [`experiments`] — rate and stability studies confronting the dynamics
//!   with explicit convergence-rate and Gronwall-envelope bounds evaluated by
//!   [`model`] constants.
//!
//! Everything is deterministic: a run is a pure function of `(config, seed)`
//! independent of thread count. Data parallelism (feature `parallel`, on by
//! default) uses fixed-order per-item reductions only.

pub mod error;
pub mod experiments;
pub mod fields;
pub mod hydro;
pub mod io;
pub mod model;
pub mod par;
pub mod transport;

pub mod dynamics;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
