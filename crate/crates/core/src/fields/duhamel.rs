//! Independent free-space reference solution of the field equation.
//!
//! `phi^t(x) = e^{-kappa t} (e^{t D lap} phi_in)(x)
//!           + int_0^t e^{-kappa (t-s)} (G_{D(t-s)} * f(., X(s)))(x) ds`
//! with the free-space Gaussian kernel, evaluated by trapezoidal quadrature
//! in `s` and adaptive-window Simpson quadrature of the Gaussian-bump
//! convolution. Serves as the reference for `field_step`; shares no code
//! with the spectral path.

use crate::model::{BumpSource, ParticleEnsemble};
use crate::par;
use crate::{Error, Result};

/// Stored particle trajectory driving the source term, at uniform spacing.
#[derive(Debug, Clone)]
pub struct FieldHistory {
    step: f64,
    ensembles: Vec<ParticleEnsemble>,
}

impl FieldHistory {
    pub fn new(step: f64, ensembles: Vec<ParticleEnsemble>) -> Result<Self> {
        if !(step > 0.0) || ensembles.is_empty() {
            return Err(Error::domain("history needs step > 0 and at least one state"));
        }
        Ok(Self { step, ensembles })
    }

    /// Constant-in-time history for a frozen configuration.
    pub fn frozen(ensemble: ParticleEnsemble, step: f64, horizon: f64) -> Result<Self> {
        let count = (horizon / step).round() as usize + 1;
        Ok(Self {
            step,
            ensembles: vec![ensemble; count],
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn covered(&self) -> f64 {
        self.step * (self.ensembles.len() - 1) as f64
    }

    pub fn at(&self, idx: usize) -> &ParticleEnsemble {
        &self.ensembles[idx]
    }

    pub fn push(&mut self, ensemble: ParticleEnsemble) {
        self.ensembles.push(ensemble);
    }
}

/// Initial field admitted by the oracle: zero or spatially constant (whose
/// free-space heat evolution is itself).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialField {
    Zero,
    Constant(f64),
}

/// Evaluates the exact free-space Duhamel formula at the query points
/// (d = 1).
///
/// `max_time_nodes` caps the s-quadrature resolution; the history is
/// subsampled on a uniform stride when it is finer than that.
pub fn duhamel_oracle(
    history: &FieldHistory,
    bump: &BumpSource,
    phi_in: InitialField,
    diffusivity: f64,
    decay: f64,
    t: f64,
    queries: &[f64],
    max_time_nodes: usize,
) -> Result<Vec<f64>> {
    if bump.dim() != 1 {
        return Err(Error::domain("duhamel oracle is implemented for d = 1"));
    }
    if t < 0.0 {
        return Err(Error::domain("oracle needs t >= 0"));
    }
    if history.covered() + 1e-12 < t {
        return Err(Error::HistoryTooShort {
            t,
            covered: history.covered(),
        });
    }
    let steps_f = t / history.step();
    let steps = steps_f.round() as usize;
    if (steps_f - steps as f64).abs() > 1e-9 {
        return Err(Error::domain(format!(
            "oracle time {t} is not a multiple of the history step {}",
            history.step()
        )));
    }

    let base = match phi_in {
        InitialField::Zero => 0.0,
        InitialField::Constant(c) => c * (-decay * t).exp(),
    };

    if steps == 0 {
        return Ok(vec![base; queries.len()]);
    }

    // Subsample the history so the trapezoid uses at most max_time_nodes
    // intervals (must divide `steps` to land on stored states).
    let mut stride = 1usize;
    while steps / stride > max_time_nodes.max(2) {
        stride *= 2;
    }
    while steps % stride != 0 {
        stride /= 2;
    }
    let m = steps / stride; // trapezoid intervals
    let ds = history.step() * stride as f64;

    let values = par::map_indexed(queries.len(), |qi| {
        let q = queries[qi];
        let mut acc = 0.0;
        for k in 0..=m {
            let s = k as f64 * ds;
            let ens = history.at(k * stride);
            let tau = t - s;
            let mut f = 0.0;
            for p in 0..ens.len() {
                let y = q - ens.position(p)[0];
                f += ens.weights()[p] * gauss_bump_convolution(bump, diffusivity, tau, y);
            }
            let w = if k == 0 || k == m { 0.5 } else { 1.0 };
            acc += w * (-decay * tau).exp() * f;
        }
        acc * ds
    });

    Ok(values.into_iter().map(|v| v + base).collect())
}

/// `(G_{D tau} * chi)(y)` with `G` the free-space heat kernel of variance
/// `2 D tau`, by Simpson quadrature on the intersection of the bump support
/// with an 8-sigma Gaussian window.
fn gauss_bump_convolution(bump: &BumpSource, diffusivity: f64, tau: f64, y: f64) -> f64 {
    let var = 2.0 * diffusivity * tau;
    if var < 1e-300 {
        return bump.eval(&[y]);
    }
    let sigma = var.sqrt();
    let r = bump.radius();
    // integrate over w (Gaussian variable): chi(y - w) G(w)
    let lo = (-8.0 * sigma).max(y - r);
    let hi = (8.0 * sigma).min(y + r);
    if hi <= lo {
        return 0.0;
    }
    const NODES: usize = 257; // odd; Simpson
    let h = (hi - lo) / (NODES - 1) as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI * var).sqrt();
    let mut acc = 0.0;
    for (k, w) in simpson_weights(NODES) {
        let wpt = lo + k as f64 * h;
        let g = norm * (-wpt * wpt / (2.0 * var)).exp();
        acc += w * g * bump.eval(&[y - wpt]);
    }
    acc * h / 3.0
}

fn simpson_weights(nodes: usize) -> impl Iterator<Item = (usize, f64)> {
    (0..nodes).map(move |k| {
        let w = if k == 0 || k == nodes - 1 {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        (k, w)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ParticleEnsemble;
    use approx::assert_abs_diff_eq;

    fn frozen_particle_history(x: f64, step: f64, horizon: f64) -> FieldHistory {
        let ens = ParticleEnsemble::uniform(1, vec![x], vec![0.0]).unwrap();
        FieldHistory::frozen(ens, step, horizon).unwrap()
    }

    #[test]
    fn zero_amplitude_gives_zero_everywhere() {
        let bump = BumpSource::new(1, 0.5, 0.0).unwrap();
        let h = frozen_particle_history(0.0, 0.01, 1.0);
        let v = duhamel_oracle(&h, &bump, InitialField::Zero, 0.1, 0.3, 1.0, &[0.0, 0.3], 256)
            .unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn no_diffusion_closed_form() {
        // D = 0, frozen particle: phi^t(x) = (1 - e^{-kappa t})/kappa chi(x).
        let bump = BumpSource::new(1, 0.5, 1.0).unwrap();
        let kappa = 0.7;
        let t = 0.8;
        let h = frozen_particle_history(0.1, 1e-3, t);
        let queries = [-0.2, 0.0, 0.1, 0.35, 0.9];
        let v = duhamel_oracle(&h, &bump, InitialField::Zero, 0.0, kappa, t, &queries, 1024)
            .unwrap();
        let factor = (1.0 - (-kappa * t).exp()) / kappa;
        for (q, got) in queries.iter().zip(&v) {
            let expect = factor * bump.eval(&[q - 0.1]);
            assert_abs_diff_eq!(*got, expect, epsilon = 1e-6);
        }
    }

    #[test]
    fn insufficient_history_is_rejected() {
        let bump = BumpSource::new(1, 0.5, 1.0).unwrap();
        let h = frozen_particle_history(0.0, 0.01, 0.5);
        let err = duhamel_oracle(&h, &bump, InitialField::Zero, 0.1, 0.3, 1.0, &[0.0], 64);
        assert!(matches!(err, Err(Error::HistoryTooShort { .. })));
    }

    #[test]
    fn gaussian_convolution_preserves_mass() {
        // integral of G * chi equals integral of chi for any tau.
        let bump = BumpSource::new(1, 0.4, 1.3).unwrap();
        for tau in [1e-6, 0.01, 0.3] {
            let n = 4000;
            let (lo, hi) = (-4.0, 4.0);
            let h = (hi - lo) / n as f64;
            let mass: f64 = (0..n)
                .map(|i| {
                    let y = lo + (i as f64 + 0.5) * h;
                    gauss_bump_convolution(&bump, 0.25, tau, y) * h
                })
                .sum();
            assert_abs_diff_eq!(mass, bump.mass(), epsilon = 2e-5);
        }
    }
}
