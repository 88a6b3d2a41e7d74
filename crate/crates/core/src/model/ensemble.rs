use crate::{Error, Result};

use super::WEIGHT_TOL;

/// A weighted point cloud in phase space R^d x R^d.
///
/// Uniform weights `1/N` recover the empirical measure of a particle
/// configuration; general weights represent quadrature discretizations of a
/// continuum density. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    positions: Vec<f64>,
    velocities: Vec<f64>,
    weights: Vec<f64>,
}

impl ParticleEnsemble {
    /// Builds an ensemble, enforcing the type invariants: equal lengths,
    /// N >= 1, finite coordinates, nonnegative weights summing to one.
    pub fn new(
        dim: usize,
        positions: Vec<f64>,
        velocities: Vec<f64>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::domain(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        let n = weights.len();
        if n == 0 {
            return Err(Error::domain("ensemble must hold at least one particle"));
        }
        if positions.len() != n * dim || velocities.len() != n * dim {
            return Err(Error::domain(format!(
                "length mismatch: {} positions, {} velocities for N={n}, d={dim}",
                positions.len(),
                velocities.len()
            )));
        }
        if positions.iter().chain(&velocities).any(|x| !x.is_finite()) {
            return Err(Error::domain("non-finite coordinate in ensemble"));
        }
        if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
            return Err(Error::domain("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::domain(format!(
                "weights sum to {total}, expected 1 within {WEIGHT_TOL:e}"
            )));
        }
        Ok(Self {
            dim,
            positions,
            velocities,
            weights,
        })
    }

    /// Uniform-weight ensemble (`1/N` each).
    pub fn uniform(dim: usize, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        let n = positions.len() / dim.max(1);
        // Exact dyadic-friendly normalization: w_i = 1/N.
        let w = 1.0 / n as f64;
        Self::new(dim, positions, velocities, vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false // N >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.velocities[i * self.dim..(i + 1) * self.dim]
    }

    /// Largest particle speed.
    pub fn max_speed(&self) -> f64 {
        (0..self.len())
            .map(|i| norm(self.velocity(i)))
            .fold(0.0, f64::max)
    }

    /// Largest phase-space norm sqrt(|x|^2 + |v|^2).
    pub fn max_phase_norm(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let x2 = sq_norm(self.position(i));
                let v2 = sq_norm(self.velocity(i));
                (x2 + v2).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest single position coordinate in absolute value.
    pub fn max_abs_coordinate(&self) -> f64 {
        self.positions.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Weighted mean velocity (momentum of the cloud).
    pub fn mean_velocity(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..self.len() {
            let w = self.weights[i];
            for (o, v) in out.iter_mut().zip(self.velocity(i)) {
                *o += w * v;
            }
        }
        out
    }

    /// Phase-space points `(x, v)` flattened to length `N * 2d`, the layout
    /// the transport solvers consume.
    pub fn phase_points(&self) -> Vec<f64> {
        let d = self.dim;
        let mut pts = Vec::with_capacity(self.len() * 2 * d);
        for i in 0..self.len() {
            pts.extend_from_slice(self.position(i));
            pts.extend_from_slice(self.velocity(i));
        }
        pts
    }

    /// Replaces positions and velocities, keeping weights. Used by steppers;
    /// re-validates finiteness.
    pub fn with_state(&self, positions: Vec<f64>, velocities: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, positions, velocities, self.weights.clone())
    }
}

pub(crate) fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    sq_norm(x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weights() {
        let e = ParticleEnsemble::new(1, vec![0.0, 1.0], vec![0.0, 0.0], vec![0.5, 0.6]);
        assert!(e.is_err());
        let e = ParticleEnsemble::new(1, vec![0.0, 1.0], vec![0.0, 0.0], vec![-0.1, 1.1]);
        assert!(e.is_err());
    }

    #[test]
    fn rejects_non_finite() {
        let e = ParticleEnsemble::uniform(1, vec![f64::NAN], vec![0.0]);
        assert!(e.is_err());
    }

    #[test]
    fn uniform_weights_sum_to_one() {
        let e = ParticleEnsemble::uniform(2, vec![0.0; 6], vec![0.0; 6]).unwrap();
        assert_eq!(e.len(), 3);
        let s: f64 = e.weights().iter().sum();
        assert!((s - 1.0).abs() < WEIGHT_TOL);
    }
}
