use serde::{Deserialize, Serialize};

use crate::error::ConfigCode;
use crate::fields::ChemGrid;
use crate::{Error, Result};

use super::{AlignmentKernel, BoundConstants, BumpSource, ExternalForce, InitialSpec};

/// Kernel specification as read from the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Zero,
    CuckerSmale {
        beta: f64,
        sigma: f64,
        length_scale: f64,
        /// Radius of the phase ball on which Lip(gamma) is certified; the
        /// monitors abort if pair separations ever leave it.
        #[serde(default = "default_probe_radius")]
        probe_radius: f64,
    },
}

fn default_probe_radius() -> f64 {
    4.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ForceSpec {
    Zero,
    Harmonic { stiffness: f64 },
}

/// Periodic-box geometry: domain `[-half_width, half_width)^d` with
/// `cells_per_axis` cells per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub cells_per_axis: usize,
}

/// Initial chemical field. A nonzero field must declare the Lipschitz
/// constant of its gradient, which enters M'.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldInit {
    Zero,
    Constant { value: f64 },
}

impl FieldInit {
    pub fn lip_grad(&self) -> f64 {
        match self {
            FieldInit::Zero | FieldInit::Constant { .. } => 0.0,
        }
    }
}

/// Full simulation configuration. Parsed from a single declarative TOML
/// file (see `docs/config.md`); unknown keys are a hard error, defaults are
/// materialized into the echo written next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub dim: usize,
    pub particles: usize,
    pub dt: f64,
    pub horizon: f64,
    /// Chemotaxis strength eta.
    pub eta: f64,
    /// Field diffusivity D.
    pub diffusivity: f64,
    /// Field decay kappa.
    pub decay: f64,
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    /// Interval between recorded states; defaults to horizon/10.
    #[serde(default)]
    pub report_dt: Option<f64>,
    pub kernel: KernelSpec,
    pub bump: BumpSpec,
    #[serde(default = "default_force")]
    pub force: ForceSpec,
    pub initial: InitialSpec,
    pub grid: GridSpec,
    #[serde(default = "default_field")]
    pub field: FieldInit,
}

fn default_replicates() -> usize {
    1
}

fn default_force() -> ForceSpec {
    ForceSpec::Zero
}

fn default_field() -> FieldInit {
    FieldInit::Zero
}

impl SimConfig {
    pub fn kernel(&self) -> Result<AlignmentKernel> {
        match &self.kernel {
            KernelSpec::Zero => Ok(AlignmentKernel::zero(self.dim)),
            KernelSpec::CuckerSmale {
                beta,
                sigma,
                length_scale,
                probe_radius,
            } => AlignmentKernel::cucker_smale(self.dim, *beta, *length_scale, *sigma, *probe_radius),
        }
    }

    pub fn bump(&self) -> Result<BumpSource> {
        BumpSource::new(self.dim, self.bump.radius, self.bump.amplitude)
    }

    pub fn force(&self) -> ExternalForce {
        match &self.force {
            ForceSpec::Zero => ExternalForce::Zero,
            ForceSpec::Harmonic { stiffness } => ExternalForce::Harmonic {
                stiffness: *stiffness,
            },
        }
    }

    /// Explicit constants at the configured horizon.
    pub fn constants(&self) -> Result<BoundConstants> {
        Ok(BoundConstants::from_components(
            &self.kernel()?,
            &self.bump()?,
            &self.force(),
            self.eta,
            self.dim,
            self.grid.half_width,
            self.field.lip_grad(),
            self.horizon,
        ))
    }

    /// Phase-space radius of the initial support.
    pub fn initial_radius(&self) -> f64 {
        self.initial.support_radius(self.dim)
    }

    /// Box half-width the support bound demands: the support envelope over
    /// the horizon, plus the bump radius, plus three diffusion lengths.
    pub fn required_half_width(&self) -> Result<f64> {
        let consts = self.constants()?;
        let r_t = consts.support_radius_monitor(self.initial_radius(), self.horizon);
        Ok(r_t + self.bump.radius + 3.0 * (2.0 * self.diffusivity * self.horizon).sqrt())
    }

    pub fn report_dt(&self) -> f64 {
        self.report_dt.unwrap_or(self.horizon / 10.0)
    }

    /// Initial chemical grid per the field spec.
    pub fn chem_grid(&self) -> Result<ChemGrid> {
        let mut grid = ChemGrid::zeros(
            self.dim,
            self.grid.half_width,
            self.grid.cells_per_axis,
            self.diffusivity,
            self.decay,
            self.eta,
        )?;
        if let FieldInit::Constant { value } = self.field {
            grid.values_mut().iter_mut().for_each(|v| *v = value);
        }
        Ok(grid)
    }

    /// Validates every config invariant; errors carry distinct codes.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Error::config(ConfigCode::BadValue, msg);
        if !(1..=3).contains(&self.dim) {
            return Err(bad(format!("dim must be 1..3, got {}", self.dim)));
        }
        if self.particles == 0 {
            return Err(bad("particles must be >= 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(bad(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0) {
            return Err(bad(format!("horizon must be >= 0, got {}", self.horizon)));
        }
        if !(self.eta >= 0.0 && self.diffusivity >= 0.0 && self.decay >= 0.0) {
            return Err(bad("eta, diffusivity and decay must be >= 0".into()));
        }
        if self.grid.cells_per_axis < 8 || self.grid.cells_per_axis % 2 != 0 {
            return Err(bad(format!(
                "grid cells_per_axis must be even and >= 8, got {}",
                self.grid.cells_per_axis
            )));
        }
        self.kernel()?;
        self.bump()?;
        let required = self.required_half_width()?;
        let h = 2.0 * self.grid.half_width / self.grid.cells_per_axis as f64;
        if self.grid.half_width < required + 2.0 * h {
            return Err(Error::config(
                ConfigCode::BoxTooSmall,
                format!(
                    "grid half_width {} is below the computed requirement {:.6} \
                     (support envelope + bump radius + 3 diffusion lengths + 2 cells)",
                    self.grid.half_width,
                    required + 2.0 * h
                ),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Density1d;

    pub(crate) fn small_config() -> SimConfig {
        SimConfig {
            dim: 1,
            particles: 16,
            dt: 0.01,
            horizon: 0.5,
            eta: 0.0,
            diffusivity: 0.05,
            decay: 0.2,
            seed: 1,
            replicates: 1,
            report_dt: None,
            kernel: KernelSpec::Zero,
            bump: BumpSpec {
                radius: 0.5,
                amplitude: 0.0,
            },
            force: ForceSpec::Zero,
            initial: InitialSpec::Product {
                x: Density1d::Uniform {
                    center: 0.0,
                    half_width: 0.5,
                },
                v: Density1d::Uniform {
                    center: 0.0,
                    half_width: 0.25,
                },
            },
            grid: GridSpec {
                half_width: 4.0,
                cells_per_axis: 64,
            },
            field: FieldInit::Zero,
        }
    }

    #[test]
    fn valid_config_passes() {
        small_config().validate().unwrap();
    }

    #[test]
    fn box_too_small_is_rejected_with_requirement() {
        let mut c = small_config();
        c.grid.half_width = 0.9; // below support radius ~ (0.56 + 1) e^{0.5}
        let err = c.validate().unwrap_err();
        match err {
            Error::Config { code, message } => {
                assert_eq!(code, ConfigCode::BoxTooSmall);
                assert!(message.contains("requirement"));
            }
            other => panic!("expected BoxTooSmall, got {other}"),
        }
    }

    #[test]
    fn toml_round_trip_preserves_fields() {
        let c = small_config();
        let text = toml::to_string_pretty(&c).unwrap();
        let back: SimConfig = toml::from_str(&text).unwrap();
        assert_eq!(c, back);
    }
}
