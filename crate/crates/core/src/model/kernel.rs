use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

use super::ensemble::{norm, sq_norm};

/// Table-kernel evaluation: writes `gamma(dv, dx)` into `out`.
pub type KernelFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum Form {
    /// Cucker-Smale alignment: `gamma(dv, dx) = -beta (1 + |dx|^2/R^2)^-sigma dv`,
    /// so that summing `-gamma` over pairs reproduces the classical
    /// `(beta/N) sum psi(x_j - x_i)(v_j - v_i)` force.
    CuckerSmale { beta: f64, r: f64, sigma: f64 },
    /// User-supplied Lipschitz kernel with declared constants.
    Table {
        eval: KernelFn,
        lip: f64,
        sup_at_origin: f64,
    },
}

/// The pairwise interaction function `gamma(dv, dx)` with certified
/// Lipschitz metadata on a probe ball.
///
/// `lip` is an upper bound for the Lipschitz constant of `gamma` on the
/// centered phase ball of radius `probe_radius` (root-sum-square over
/// components for vector values). The dynamics monitors that pair
/// separations stay inside the probe ball, which keeps every constant
/// derived from `lip` valid along the run.
#[derive(Clone)]
pub struct AlignmentKernel {
    form: Form,
    dim: usize,
    probe_radius: f64,
    lip: f64,
}

impl fmt::Debug for AlignmentKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.form {
            Form::CuckerSmale { beta, r, sigma } => f
                .debug_struct("AlignmentKernel::CuckerSmale")
                .field("beta", beta)
                .field("r", r)
                .field("sigma", sigma)
                .field("lip", &self.lip)
                .field("probe_radius", &self.probe_radius)
                .finish(),
            Form::Table { lip, .. } => f
                .debug_struct("AlignmentKernel::Table")
                .field("lip", lip)
                .finish(),
        }
    }
}

/// Safety factor applied on top of sampled extrema when certifying
/// Lipschitz constants numerically.
pub const LIP_SAFETY: f64 = 1.01;

const RADIAL_SAMPLES: usize = 4096;

impl AlignmentKernel {
    /// Cucker-Smale kernel with Lipschitz constant certified on the phase
    /// ball of radius `probe_radius`.
    pub fn cucker_smale(
        dim: usize,
        beta: f64,
        length_scale: f64,
        sigma: f64,
        probe_radius: f64,
    ) -> Result<Self> {
        if !(beta.is_finite() && length_scale > 0.0 && sigma >= 0.0 && probe_radius > 0.0) {
            return Err(Error::domain("bad Cucker-Smale parameters"));
        }
        // |psi'| maximum over [0, probe] by dense radial sampling; psi <= 1.
        let psi_d_max = (0..=RADIAL_SAMPLES)
            .map(|k| {
                let s = probe_radius * k as f64 / RADIAL_SAMPLES as f64;
                let u = 1.0 + (s / length_scale).powi(2);
                // |d/ds (u^-sigma)| = 2 sigma s / R^2 * u^(-sigma-1)
                2.0 * sigma * s / (length_scale * length_scale) * u.powf(-sigma - 1.0)
            })
            .fold(0.0, f64::max);
        let per_component = beta.abs() * (1.0 + (probe_radius * psi_d_max).powi(2)).sqrt();
        let lip = (dim as f64).sqrt() * per_component * LIP_SAFETY;
        Ok(Self {
            form: Form::CuckerSmale {
                beta,
                r: length_scale,
                sigma,
            },
            dim,
            probe_radius,
            lip,
        })
    }

    /// Zero kernel (all couplings off); encoded as Cucker-Smale with beta = 0.
    pub fn zero(dim: usize) -> Self {
        Self::cucker_smale(dim, 0.0, 1.0, 1.0, 1.0).expect("zero kernel parameters are valid")
    }

    /// Arbitrary Lipschitz kernel with user-declared constants.
    pub fn table(
        dim: usize,
        eval: KernelFn,
        lip: f64,
        sup_at_origin: f64,
        probe_radius: f64,
    ) -> Self {
        Self {
            form: Form::Table {
                eval,
                lip,
                sup_at_origin,
            },
            dim,
            probe_radius,
            lip,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Certified `Lip(gamma)` on the probe ball.
    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn probe_radius(&self) -> f64 {
        self.probe_radius
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.form, Form::CuckerSmale { beta, .. } if beta == 0.0)
    }

    /// `(beta, 1/R^2)` when this is a Cucker-Smale kernel with sigma = 1,
    /// the case the force loop fast-paths.
    pub fn cs_sigma_one(&self) -> Option<(f64, f64)> {
        match &self.form {
            Form::CuckerSmale { beta, r, sigma } if *sigma == 1.0 && *beta != 0.0 => {
                Some((*beta, 1.0 / (r * r)))
            }
            _ => None,
        }
    }

    /// sup of |gamma| on the centered phase ball of radius `rho`.
    ///
    /// For the Cucker-Smale form the supremum is attained at dx = 0 and
    /// equals `|beta| * rho`; for tables the generic bound
    /// `|gamma(0,0)| + lip * rho` is returned.
    pub fn sup_on_ball(&self, rho: f64) -> f64 {
        match &self.form {
            Form::CuckerSmale { beta, .. } => beta.abs() * rho,
            Form::Table { lip, sup_at_origin, .. } => sup_at_origin + lip * rho,
        }
    }

    /// Checked per-pair contribution as it enters the force sum
    /// (`cs_kernel_eval` for the Cucker-Smale form).
    ///
    /// Antisymmetric under `(dv, dx) -> (-dv, -dx)`; rejects non-finite
    /// input with a domain error.
    pub fn eval(&self, dv: &[f64], dx: &[f64]) -> Result<Vec<f64>> {
        if dv.iter().chain(dx).any(|x| !x.is_finite()) {
            return Err(Error::domain("non-finite kernel input"));
        }
        if dv.len() != self.dim || dx.len() != self.dim {
            return Err(Error::domain("kernel input dimension mismatch"));
        }
        let mut out = vec![0.0; self.dim];
        self.eval_into(dv, dx, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into a caller buffer (hot path; inputs come from
    /// ensembles whose coordinates are finite by construction).
    #[inline]
    pub fn eval_into(&self, dv: &[f64], dx: &[f64], out: &mut [f64]) {
        match &self.form {
            Form::CuckerSmale { beta, r, sigma } => {
                let u = 1.0 + sq_norm(dx) / (r * r);
                let w = if *sigma == 1.0 {
                    -beta / u
                } else {
                    -beta * u.powf(-sigma)
                };
                for (o, v) in out.iter_mut().zip(dv) {
                    *o = w * v;
                }
            }
            Form::Table { eval, .. } => eval(dv, dx, out),
        }
    }

    /// Weight factor of the Cucker-Smale form at separation `dx`
    /// (`beta (1+|dx|^2/R^2)^-sigma`); handy in the nonlocal Euler source.
    pub fn scalar_weight(&self, dist_sq: f64) -> f64 {
        match &self.form {
            Form::CuckerSmale { beta, r, sigma } => {
                let u = 1.0 + dist_sq / (r * r);
                if *sigma == 1.0 {
                    beta / u
                } else {
                    beta * u.powf(-sigma)
                }
            }
            Form::Table { .. } => f64::NAN,
        }
    }

    /// Samples Lipschitz difference quotients on the probe ball and returns
    /// the largest one. Test support for the certification invariant.
    pub fn probe_lipschitz_quotient(&self, pairs: usize, seed: u64) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let d = self.dim;
        let mut worst = 0.0f64;
        let mut ga = vec![0.0; d];
        let mut gb = vec![0.0; d];
        for _ in 0..pairs {
            let a: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..2 * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (a, b) = (self.clip_to_ball(a), self.clip_to_ball(b));
            let dist = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            if dist < 1e-12 {
                continue;
            }
            self.eval_into(&a[..d], &a[d..], &mut ga);
            self.eval_into(&b[..d], &b[d..], &mut gb);
            let diff = ga
                .iter()
                .zip(&gb)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(diff / dist);
        }
        worst
    }

    fn clip_to_ball(&self, mut z: Vec<f64>) -> Vec<f64> {
        let n = norm(&z);
        if n > self.probe_radius {
            let s = self.probe_radius / n;
            z.iter_mut().for_each(|x| *x *= s);
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_velocity_difference_gives_zero() {
        let k = AlignmentKernel::cucker_smale(2, 1.3, 1.0, 1.5, 4.0).unwrap();
        let out = k.eval(&[0.0, 0.0], &[0.7, -0.2]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn zero_separation_unit_velocity() {
        // dx = 0, dv = e1, beta = 1 -> -e1 (weight (1+0)^-sigma = 1).
        let k = AlignmentKernel::cucker_smale(2, 1.0, 1.0, 2.0, 4.0).unwrap();
        let out = k.eval(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(out[0], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn half_weight_at_length_scale() {
        // |dx| = R, sigma = 1, beta = 2, dv = e1 -> -e1 (weight 1/2).
        let k = AlignmentKernel::cucker_smale(1, 2.0, 0.5, 1.0, 4.0).unwrap();
        let out = k.eval(&[1.0], &[0.5]).unwrap();
        assert_abs_diff_eq!(out[0], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn antisymmetry_is_exact() {
        let k = AlignmentKernel::cucker_smale(3, 0.8, 1.2, 1.0, 5.0).unwrap();
        let dv = [0.3, -0.4, 0.1];
        let dx = [1.0, 0.2, -0.7];
        let a = k.eval(&dv, &dx).unwrap();
        let ndv: Vec<f64> = dv.iter().map(|x| -x).collect();
        let ndx: Vec<f64> = dx.iter().map(|x| -x).collect();
        let b = k.eval(&ndv, &ndx).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(*p, -*q); // exact in floating point
        }
    }

    #[test]
    fn rejects_non_finite() {
        let k = AlignmentKernel::cucker_smale(1, 1.0, 1.0, 1.0, 4.0).unwrap();
        assert!(k.eval(&[f64::NAN], &[0.0]).is_err());
    }

    #[test]
    fn certified_lip_dominates_sampled_quotients() {
        for sigma in [0.5, 1.0, 2.0] {
            let k = AlignmentKernel::cucker_smale(2, 1.0, 1.0, sigma, 3.0).unwrap();
            let sampled = k.probe_lipschitz_quotient(10_000, 7);
            assert!(
                sampled <= k.lip(),
                "sampled {sampled} exceeds certified {} (sigma={sigma})",
                k.lip()
            );
        }
    }
}
