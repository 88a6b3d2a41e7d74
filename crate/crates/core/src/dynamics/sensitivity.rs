//! Finite-difference flow derivatives.
//!
//! Central differences of the particle flow with respect to one particle's
//! initial phase coordinates, holding the initial field fixed. Entries are
//! compared against the exponential envelope `e^{(gamma1 + gamma2 T) t}`.

use crate::fields::ChemGrid;
use crate::model::ParticleEnsemble;
use crate::Result;

use super::{run, Model, SimState};

/// Estimated block `d z_i(t) / d z_j(0)` of the flow derivative, a
/// `2d x 2d` matrix in row-major order (x-rows first, then v-rows).
pub struct SensitivityBlock {
    pub dim: usize,
    pub entries: Vec<f64>,
    pub epsilon: f64,
}

impl SensitivityBlock {
    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.abs()))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * 2 * self.dim + col]
    }
}

/// Central-difference estimate of `d z_i(t) / d z_j(0)`.
///
/// Every perturbed run integrates the full coupled system from the same
/// initial field; `epsilon` defaults (when not positive) to `1e-5` times
/// the initial support radius.
#[allow(clippy::too_many_arguments)]
pub fn flow_sensitivity(
    ensemble: &ParticleEnsemble,
    grid: &ChemGrid,
    model: &Model,
    i: usize,
    j: usize,
    epsilon: f64,
    dt: f64,
    horizon: f64,
) -> Result<SensitivityBlock> {
    let d = ensemble.dim();
    let eps = if epsilon > 0.0 {
        epsilon
    } else {
        1e-5 * ensemble.max_phase_norm().max(1.0)
    };
    let mut entries = vec![0.0; 4 * d * d];
    for col in 0..2 * d {
        let plus = perturbed_final(ensemble, grid, model, j, col, eps, dt, horizon)?;
        let minus = perturbed_final(ensemble, grid, model, j, col, -eps, dt, horizon)?;
        for row in 0..2 * d {
            let zp = phase_coord(&plus, i, row, d);
            let zm = phase_coord(&minus, i, row, d);
            entries[row * 2 * d + col] = (zp - zm) / (2.0 * eps);
        }
    }
    Ok(SensitivityBlock {
        dim: d,
        entries,
        epsilon: eps,
    })
}

#[allow(clippy::too_many_arguments)]
fn perturbed_final(
    ensemble: &ParticleEnsemble,
    grid: &ChemGrid,
    model: &Model,
    j: usize,
    coord: usize,
    delta: f64,
    dt: f64,
    horizon: f64,
) -> Result<ParticleEnsemble> {
    let d = ensemble.dim();
    let mut x = ensemble.positions().to_vec();
    let mut v = ensemble.velocities().to_vec();
    if coord < d {
        x[j * d + coord] += delta;
    } else {
        v[j * d + coord - d] += delta;
    }
    let perturbed = ensemble.with_state(x, v)?;
    let state = SimState::new(perturbed, grid.clone());
    let traj = run(state, model, dt, horizon, horizon.max(dt))?;
    Ok(traj.final_state().ensemble.clone())
}

fn phase_coord(e: &ParticleEnsemble, i: usize, row: usize, d: usize) -> f64 {
    if row < d {
        e.position(i)[row]
    } else {
        e.velocity(i)[row - d]
    }
}
