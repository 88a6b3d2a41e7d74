use std::f64::consts::PI;

use crate::{Error, Result};

use super::ensemble::sq_norm;
use super::kernel::LIP_SAFETY;

const RADIAL_SAMPLES: usize = 8192;

/// The C^1 compactly supported source bump
/// `chi(x) = c (1 - |x|^2/r^2)^2` for `|x| < r`, zero outside.
///
/// Chosen quartic so the gradient is closed-form and the Lipschitz
/// constants are computable by dense radial sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpSource {
    dim: usize,
    radius: f64,
    amplitude: f64,
    lip_chi: f64,
    lip_grad_chi: f64,
    mass: f64,
}

impl BumpSource {
    pub fn new(dim: usize, radius: f64, amplitude: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::domain("bump dim must be 1, 2 or 3"));
        }
        if !(radius > 0.0 && radius.is_finite() && amplitude.is_finite()) {
            return Err(Error::domain("bump radius must be positive and finite"));
        }
        let (lip_chi, lip_grad_chi) = certify_lipschitz(dim, radius, amplitude);
        let mass = bump_mass(dim, radius, amplitude);
        Ok(Self {
            dim,
            radius,
            amplitude,
            lip_chi,
            lip_grad_chi,
            mass,
        })
    }

    /// Zero-amplitude bump (chemotaxis source off).
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, 1.0, 0.0).expect("zero bump parameters are valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Certified upper bound for Lip(chi).
    pub fn lip_chi(&self) -> f64 {
        self.lip_chi
    }

    /// Certified upper bound for Lip(grad chi), root-sum-square over
    /// components.
    pub fn lip_grad_chi(&self) -> f64 {
        self.lip_grad_chi
    }

    /// Total mass `integral of chi` (closed form for the quartic bump).
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Evaluates `chi(x)`; zero at and outside `|x| = r`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let s2 = sq_norm(x) / (self.radius * self.radius);
        if s2 >= 1.0 {
            0.0
        } else {
            let q = 1.0 - s2;
            self.amplitude * q * q
        }
    }

    /// Evaluates `grad chi(x)` into `out`; the closed form
    /// `-4c (1 - |x|^2/r^2) x / r^2` vanishes continuously at the support
    /// boundary.
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        let r2 = self.radius * self.radius;
        let s2 = sq_norm(x) / r2;
        if s2 >= 1.0 {
            out.iter_mut().for_each(|o| *o = 0.0);
        } else {
            let f = -4.0 * self.amplitude * (1.0 - s2) / r2;
            for (o, xi) in out.iter_mut().zip(x) {
                *o = f * xi;
            }
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.grad_into(x, &mut out);
        out
    }

    /// Radial profile value at distance `s` from the center.
    pub fn radial(&self, s: f64) -> f64 {
        let s2 = (s * s) / (self.radius * self.radius);
        if s2 >= 1.0 {
            0.0
        } else {
            let q = 1.0 - s2;
            self.amplitude * q * q
        }
    }
}

/// Certified `(Lip(chi), Lip(grad chi))` by dense sampling of the radial
/// derivatives with a 1% safety factor.
///
/// `|grad chi| = |chi'(s)|`, so Lip(chi) = max_s |chi'|. The gradient map
/// has operator Lipschitz constant `max(max|chi''|, max|chi'(s)/s|)`; the
/// root-sum-square component convention inflates it by at most `sqrt(d)`.
fn certify_lipschitz(dim: usize, radius: f64, amplitude: f64) -> (f64, f64) {
    let c = amplitude.abs();
    if c == 0.0 {
        return (0.0, 0.0);
    }
    let r2 = radius * radius;
    let mut max_d1 = 0.0f64;
    let mut max_d2 = 0.0f64;
    let mut max_ratio = 0.0f64;
    for k in 0..=RADIAL_SAMPLES {
        let s = radius * k as f64 / RADIAL_SAMPLES as f64;
        let q = 1.0 - s * s / r2;
        // chi'(s)  = -4 c s q / r^2
        // chi''(s) = -4 c (1 - 3 s^2/r^2) / r^2
        // chi'(s)/s = -4 c q / r^2
        max_d1 = max_d1.max(4.0 * c * s * q / r2);
        max_d2 = max_d2.max((4.0 * c * (1.0 - 3.0 * s * s / r2) / r2).abs());
        max_ratio = max_ratio.max(4.0 * c * q / r2);
    }
    let lip_chi = max_d1 * LIP_SAFETY;
    let op = max_d2.max(max_ratio);
    let lip_grad = (dim as f64).sqrt() * op * LIP_SAFETY;
    (lip_chi, lip_grad)
}

fn bump_mass(dim: usize, r: f64, c: f64) -> f64 {
    match dim {
        1 => c * r * 16.0 / 15.0,
        2 => PI * c * r * r / 3.0,
        3 => 32.0 * PI * c * r * r * r / 105.0,
        _ => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn boundary_and_center_values() {
        let b = BumpSource::new(2, 1.5, 0.7).unwrap();
        assert_eq!(b.eval(&[1.5, 0.0]), 0.0);
        assert_eq!(b.grad(&[0.0, 1.5]), vec![0.0, 0.0]);
        assert_abs_diff_eq!(b.eval(&[0.0, 0.0]), 0.7, epsilon = 1e-15);
        assert_eq!(b.grad(&[0.0, 0.0]), vec![0.0, 0.0]);
    }

    #[test]
    fn quarter_point_value() {
        // r = 1, c = 1, x = 0.5 e1 in d = 1: chi = (1 - 0.25)^2 = 0.5625.
        let b = BumpSource::new(1, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(b.eval(&[0.5]), 0.5625, epsilon = 1e-15);
    }

    #[test]
    fn c1_across_the_boundary() {
        // chi and grad chi vanish continuously at |x| = r: finite differences
        // straddling the boundary stay O(h).
        let b = BumpSource::new(1, 1.0, 2.0).unwrap();
        let h = 1e-6;
        let inner = b.eval(&[1.0 - h]);
        let outer = b.eval(&[1.0 + h]);
        assert!(inner.abs() < 4.0 * 2.0 * h * h / 1.0 + 1e-15); // chi ~ c (2h)^2 near edge
        assert_eq!(outer, 0.0);
        let gi = b.grad(&[1.0 - h])[0];
        assert!(gi.abs() < 8.0 * 2.0 * h + 1e-12); // grad ~ 8c h near edge
    }

    #[test]
    fn zero_amplitude_constants() {
        let b = BumpSource::new(1, 1.0, 0.0).unwrap();
        assert_eq!(b.lip_chi(), 0.0);
        assert_eq!(b.lip_grad_chi(), 0.0);
    }

    #[test]
    fn lip_chi_matches_dense_maximization() {
        // d = 1, r = 1, c = 1: max |chi'| = max 4s(1-s^2) over [0,1]
        // = 8/(3 sqrt 3), frozen from the closed-form optimum s = 1/sqrt(3).
        let b = BumpSource::new(1, 1.0, 1.0).unwrap();
        let exact = 8.0 / (3.0 * 3.0f64.sqrt());
        assert!(b.lip_chi() >= exact);
        assert!(b.lip_chi() <= exact * 1.02);
    }

    #[test]
    fn constants_scale_linearly_in_amplitude() {
        let b1 = BumpSource::new(2, 0.8, 0.4).unwrap();
        let b2 = BumpSource::new(2, 0.8, 0.8).unwrap();
        assert_abs_diff_eq!(2.0 * b1.lip_chi(), b2.lip_chi(), epsilon = 1e-12);
        assert_abs_diff_eq!(2.0 * b1.lip_grad_chi(), b2.lip_grad_chi(), epsilon = 1e-12);
        assert_abs_diff_eq!(2.0 * b1.mass(), b2.mass(), epsilon = 1e-12);
    }

    #[test]
    fn sampled_quotients_below_certified_constants() {
        use rand::{Rng, SeedableRng};
        let b = BumpSource::new(2, 1.3, 0.9).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut worst_chi = 0.0f64;
        let mut worst_grad = 0.0f64;
        for _ in 0..10_000 {
            let a = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let c = [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)];
            let dist = ((a[0] - c[0]).powi(2) + (a[1] - c[1]).powi(2)).sqrt();
            if dist < 1e-9 {
                continue;
            }
            worst_chi = worst_chi.max((b.eval(&a) - b.eval(&c)).abs() / dist);
            let ga = b.grad(&a);
            let gc = b.grad(&c);
            let gd = ((ga[0] - gc[0]).powi(2) + (ga[1] - gc[1]).powi(2)).sqrt();
            worst_grad = worst_grad.max(gd / dist);
        }
        assert!(worst_chi <= b.lip_chi());
        assert!(worst_grad <= b.lip_grad_chi());
    }

    #[test]
    fn mass_matches_quadrature_d1() {
        let b = BumpSource::new(1, 0.6, 1.7).unwrap();
        let n = 400_000;
        let h = 2.0 * b.radius() / n as f64;
        let q: f64 = (0..n)
            .map(|i| b.eval(&[-b.radius() + (i as f64 + 0.5) * h]) * h)
            .sum();
        assert_abs_diff_eq!(q, b.mass(), epsilon = 1e-9);
    }
}
