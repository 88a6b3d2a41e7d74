//! Chemoattractant field on a periodic grid.
//!
//! The field equation `d phi/dt = D lap phi - kappa phi + source` is stepped
//! with the exact semigroup on the periodic box: every discrete Fourier mode
//! is multiplied by `exp(-kappa dt) exp(-D |k|^2 dt)`. Sources are deposited
//! by direct evaluation of the bump at grid nodes, gradients are sampled by
//! centered differences plus multilinear interpolation, and an independent
//! free-space Duhamel oracle cross-checks the stepper.

mod duhamel;

pub use duhamel::{duhamel_oracle, FieldHistory, InitialField};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::model::{BumpSource, ParticleEnsemble};
use crate::{Error, Result};

/// Periodic uniform grid holding the chemical field and its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChemGrid {
    dim: usize,
    half_width: f64,
    n: usize,
    values: Vec<f64>,
    pub diffusivity: f64,
    pub decay: f64,
    pub eta: f64,
}

impl ChemGrid {
    pub fn zeros(
        dim: usize,
        half_width: f64,
        cells_per_axis: usize,
        diffusivity: f64,
        decay: f64,
        eta: f64,
    ) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::domain("grid dim must be 1, 2 or 3"));
        }
        if cells_per_axis < 8 || cells_per_axis % 2 != 0 {
            return Err(Error::domain(format!(
                "cells_per_axis must be even and >= 8, got {cells_per_axis}"
            )));
        }
        if !(half_width > 0.0) || diffusivity < 0.0 || decay < 0.0 {
            return Err(Error::domain("bad grid parameters"));
        }
        let len = cells_per_axis.pow(dim as u32);
        Ok(Self {
            dim,
            half_width,
            n: cells_per_axis,
            values: vec![0.0; len],
            diffusivity,
            decay,
            eta,
        })
    }

    /// Fills the grid from a function of the node coordinate.
    pub fn fill_with<F: Fn(&[f64]) -> f64>(&mut self, f: F) {
        let (dim, n, a, h) = (self.dim, self.n, self.half_width, self.spacing());
        let mut coord = vec![0.0; dim];
        for (flat, v) in self.values.iter_mut().enumerate() {
            let mut rem = flat;
            for ax in (0..dim).rev() {
                coord[ax] = -a + (rem % n) as f64 * h;
                rem /= n;
            }
            *v = f(&coord);
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cells_per_axis(&self) -> usize {
        self.n
    }

    /// Grid spacing `h = 2a/n`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Coordinates of the node with flat index `flat`, written into `out`.
    pub fn node_coord(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        // last axis is fastest (row-major)
        for a in (0..self.dim).rev() {
            let i = rem % self.n;
            rem /= self.n;
            out[a] = -self.half_width + i as f64 * self.spacing();
        }
    }

    /// Grid sum times cell volume.
    pub fn total_mass(&self) -> f64 {
        let hv = self.spacing().powi(self.dim as i32);
        self.values.iter().sum::<f64>() * hv
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn same_geometry(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.half_width == other.half_width
    }

    /// Exact spectral semigroup step: every Fourier mode `m` is multiplied
    /// by `exp(-kappa dt) exp(-D |k_m|^2 dt)`. Linear and, for `dt >= 0`, a
    /// contraction in the max norm that conserves the grid sum up to the
    /// decay factor.
    pub fn diffuse_step(&self, dt: f64) -> Result<Self> {
        if dt < 0.0 {
            return Err(Error::domain("diffuse_step needs dt >= 0"));
        }
        let mut out = self.clone();
        if dt == 0.0 {
            return Ok(out);
        }
        let decay = (-self.decay * dt).exp();
        if self.diffusivity == 0.0 {
            out.values.iter_mut().for_each(|v| *v *= decay);
            return Ok(out);
        }

        let n = self.n;
        let mut buf: Vec<Complex<f64>> = self.values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);

        // Forward along every axis.
        for axis in 0..self.dim {
            apply_fft_along_axis(&mut buf, self.dim, n, axis, |line| fwd.process(line));
        }

        // Mode multipliers: k = pi * m~ / a with m~ in [-n/2, n/2).
        let base_k = std::f64::consts::PI / self.half_width;
        let factors: Vec<f64> = (0..n)
            .map(|m| {
                let m_signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                let k = base_k * m_signed;
                (-self.diffusivity * k * k * dt).exp()
            })
            .collect();
        let mut idx = vec![0usize; self.dim];
        for c in buf.iter_mut() {
            let mut f = decay;
            for &i in idx.iter() {
                f *= factors[i];
            }
            *c *= f;
            for a in (0..self.dim).rev() {
                idx[a] += 1;
                if idx[a] < n {
                    break;
                }
                idx[a] = 0;
            }
        }

        // Inverse along every axis, then normalize by n^dim.
        for axis in 0..self.dim {
            apply_fft_along_axis(&mut buf, self.dim, n, axis, |line| inv.process(line));
        }
        let norm = 1.0 / (n as f64).powi(self.dim as i32);
        for (o, c) in out.values.iter_mut().zip(&buf) {
            *o = c.re * norm;
        }
        Ok(out)
    }

    /// Deposits the particle-driven source `sum_j w_j chi(x - x_j)` on the
    /// grid nodes by direct evaluation (no spreading approximation).
    ///
    /// Errors if any particle sits within the bump radius of the periodic
    /// boundary: wraparound would corrupt the free-space model.
    pub fn deposit_source(&self, ensemble: &ParticleEnsemble, bump: &BumpSource) -> Result<Vec<f64>> {
        if ensemble.dim() != self.dim || bump.dim() != self.dim {
            return Err(Error::GridMismatch(
                "ensemble/bump dimension differs from grid".into(),
            ));
        }
        let a = self.half_width;
        let r = bump.radius();
        if bump.amplitude() != 0.0 {
            for i in 0..ensemble.len() {
                let x = ensemble.position(i);
                if x.iter().any(|&c| c.abs() > a - r) {
                    return Err(Error::SourceWrapAround {
                        position: x.to_vec(),
                        radius: r,
                        half_width: a,
                    });
                }
            }
        }
        let mut source = vec![0.0; self.values.len()];
        if bump.amplitude() == 0.0 {
            return Ok(source);
        }
        let h = self.spacing();
        let n = self.n;
        let d = self.dim;
        let mut lo = vec![0usize; d];
        let mut hi = vec![0usize; d];
        let mut offset = vec![0.0; d];
        'particles: for p in 0..ensemble.len() {
            let xp = ensemble.position(p);
            let w = ensemble.weights()[p];
            for ax in 0..d {
                let flo = ((xp[ax] - r + a) / h).ceil() as i64;
                let fhi = ((xp[ax] + r + a) / h).floor() as i64;
                let l = flo.max(0);
                let u = fhi.min(n as i64 - 1);
                if u < l {
                    continue 'particles; // support falls between nodes
                }
                lo[ax] = l as usize;
                hi[ax] = u as usize;
            }
            let mut idx = lo.clone();
            loop {
                for ax in 0..d {
                    offset[ax] = -a + idx[ax] as f64 * h - xp[ax];
                }
                let val = bump.eval(&offset);
                if val != 0.0 {
                    let mut flat = 0usize;
                    for ax in 0..d {
                        flat = flat * n + idx[ax];
                    }
                    source[flat] += w * val;
                }
                let mut carried = true;
                for ax in (0..d).rev() {
                    idx[ax] += 1;
                    if idx[ax] <= hi[ax] {
                        carried = false;
                        break;
                    }
                    idx[ax] = lo[ax];
                }
                if carried {
                    break;
                }
            }
        }
        Ok(source)
    }

    /// One Duhamel step: `phi <- diffuse(phi, dt) + dt * diffuse(source, dt/2)`
    /// (midpoint rule on the source integral), locally O(dt^2) consistent.
    pub fn field_step(
        &self,
        ensemble: &ParticleEnsemble,
        bump: &BumpSource,
        dt: f64,
    ) -> Result<Self> {
        let source = self.deposit_source(ensemble, bump)?;
        self.field_step_with_source(&source, dt)
    }

    /// Same as [`field_step`](Self::field_step) with a precomputed source.
    pub fn field_step_with_source(&self, source: &[f64], dt: f64) -> Result<Self> {
        let mut decayed = self.diffuse_step(dt)?;
        let mut src_grid = self.clone();
        src_grid.values.copy_from_slice(source);
        let half = src_grid.diffuse_step(dt / 2.0)?;
        for (o, s) in decayed.values.iter_mut().zip(&half.values) {
            *o += dt * s;
        }
        Ok(decayed)
    }

    /// Centered-difference gradient, multilinearly interpolated to `x`.
    /// Exact for constant fields; O(h^2) for smooth fields.
    pub fn sample_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::domain("gradient sample dimension mismatch"));
        }
        if x.iter().any(|&c| c.abs() > self.half_width) {
            return Err(Error::domain(format!(
                "gradient sample {x:?} outside the box (half-width {})",
                self.half_width
            )));
        }
        let mut out = vec![0.0; self.dim];
        self.sample_gradient_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked hot-path version of [`sample_gradient`](Self::sample_gradient).
    pub fn sample_gradient_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n;
        let h = self.spacing();
        let d = self.dim;
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..d {
            let f = (x[a] + self.half_width) / h;
            let i = f.floor();
            base[a] = (i as i64).rem_euclid(n as i64) as usize;
            frac[a] = f - i;
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        // Multilinear combination over the 2^d corners.
        for corner in 0..(1usize << d) {
            let mut weight = 1.0;
            let mut idx = [0usize; 3];
            for a in 0..d {
                if corner & (1 << a) != 0 {
                    idx[a] = (base[a] + 1) % n;
                    weight *= frac[a];
                } else {
                    idx[a] = base[a];
                    weight *= 1.0 - frac[a];
                }
            }
            if weight == 0.0 {
                continue;
            }
            for b in 0..d {
                out[b] += weight * self.node_gradient_component(&idx[..d], b);
            }
        }
    }

    /// Centered difference along axis `b` at the node `idx`.
    fn node_gradient_component(&self, idx: &[usize], b: usize) -> f64 {
        let n = self.n;
        let h = self.spacing();
        let flat = |ix: &[usize]| -> usize {
            let mut f = 0usize;
            for a in 0..self.dim {
                f = f * n + ix[a];
            }
            f
        };
        let mut up = [0usize; 3];
        let mut dn = [0usize; 3];
        up[..self.dim].copy_from_slice(idx);
        dn[..self.dim].copy_from_slice(idx);
        up[b] = (idx[b] + 1) % n;
        dn[b] = (idx[b] + n - 1) % n;
        (self.values[flat(&up[..self.dim])] - self.values[flat(&dn[..self.dim])]) / (2.0 * h)
    }

    /// Max over grid nodes of the Euclidean norm of the node-gradient
    /// difference between two fields on identical geometry.
    pub fn grad_gap_sup(&self, other: &Self) -> Result<f64> {
        if !self.same_geometry(other) {
            return Err(Error::GridMismatch(format!(
                "dim {} vs {}, n {} vs {}, half-width {} vs {}",
                self.dim, other.dim, self.n, other.n, self.half_width, other.half_width
            )));
        }
        let d = self.dim;
        let n = self.n;
        let total = self.values.len();
        let mut worst = 0.0f64;
        let mut idx = [0usize; 3];
        for flat in 0..total {
            let mut rem = flat;
            for a in (0..d).rev() {
                idx[a] = rem % n;
                rem /= n;
            }
            let mut acc = 0.0;
            for b in 0..d {
                let g = self.node_gradient_component(&idx[..d], b)
                    - other.node_gradient_component(&idx[..d], b);
                acc += g * g;
            }
            worst = worst.max(acc);
        }
        Ok(worst.sqrt())
    }
}

/// Applies an in-place FFT to every 1-d line of `buf` along `axis`.
fn apply_fft_along_axis<F: Fn(&mut [Complex<f64>])>(
    buf: &mut [Complex<f64>],
    dim: usize,
    n: usize,
    axis: usize,
    fft: F,
) {
    if dim == 1 {
        fft(buf);
        return;
    }
    // stride of `axis` in row-major layout with the last axis fastest
    let stride = n.pow((dim - 1 - axis) as u32);
    let total = buf.len();
    let mut line = vec![Complex::new(0.0, 0.0); n];
    let lines = total / n;
    for l in 0..lines {
        // Decompose line index into (outer, inner) around the axis.
        let inner = l % stride;
        let outer = l / stride;
        let start = outer * stride * n + inner;
        for (k, slot) in line.iter_mut().enumerate() {
            *slot = buf[start + k * stride];
        }
        fft(&mut line);
        for (k, slot) in line.iter().enumerate() {
            buf[start + k * stride] = *slot;
        }
    }
}

#[cfg(test)]
mod tests;
