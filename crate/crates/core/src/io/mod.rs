//! Configuration parsing, deterministic seeding, run manifests, and
//! bit-stable serialization shared by all modules.

pub mod config;
pub mod output;
pub mod rng;

pub use config::parse_config;
pub use output::{write_outputs, CsvTable, RunManifest};
