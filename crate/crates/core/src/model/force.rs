use crate::{Error, Result};

use super::kernel::LIP_SAFETY;

/// External force field `F_ext(x)` with certified Lipschitz constant and
/// sup norm on the simulation box.
#[derive(Debug, Clone)]
pub enum ExternalForce {
    Zero,
    /// `F(x) = -k x`.
    Harmonic { stiffness: f64 },
}

impl ExternalForce {
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            ExternalForce::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            ExternalForce::Harmonic { stiffness } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = -stiffness * xi;
                }
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.eval_into(x, &mut out);
        out
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ExternalForce::Zero => true,
            ExternalForce::Harmonic { stiffness } => *stiffness == 0.0,
        }
    }

    /// Lip(F_ext), root-sum-square over components.
    pub fn lip(&self, dim: usize) -> f64 {
        match self {
            ExternalForce::Zero => 0.0,
            ExternalForce::Harmonic { stiffness } => {
                stiffness.abs() * (dim as f64).sqrt() * LIP_SAFETY
            }
        }
    }

    /// Sup norm of |F_ext| on the centered box of the given half-width.
    pub fn sup_on_box(&self, dim: usize, half_width: f64) -> f64 {
        match self {
            ExternalForce::Zero => 0.0,
            ExternalForce::Harmonic { stiffness } => {
                stiffness.abs() * half_width * (dim as f64).sqrt()
            }
        }
    }

    pub fn from_spec(form: &str, stiffness: Option<f64>) -> Result<Self> {
        match form {
            "zero" => Ok(ExternalForce::Zero),
            "harmonic" => Ok(ExternalForce::Harmonic {
                stiffness: stiffness
                    .ok_or_else(|| Error::domain("harmonic force needs a stiffness"))?,
            }),
            other => Err(Error::domain(format!("unknown force form `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_bounds_cover_samples() {
        use rand::{Rng, SeedableRng};
        let f = ExternalForce::Harmonic { stiffness: 0.7 };
        let lip = f.lip(2);
        let sup = f.sup_on_box(2, 2.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            let a = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let b = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let fa = f.eval(&a);
            let fb = f.eval(&b);
            let num: f64 = fa
                .iter()
                .zip(&fb)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            let den: f64 = a
                .iter()
                .zip(&b)
                .map(|(p, q)| (p - q) * (p - q))
                .sum::<f64>()
                .sqrt();
            if den > 1e-12 {
                assert!(num <= lip * den * (1.0 + 1e-12));
            }
            let mag = (fa[0] * fa[0] + fa[1] * fa[1]).sqrt();
            assert!(mag <= sup * (1.0 + 1e-12));
        }
    }
}
