//! Exact atom-level check of the marginal identity: the first marginal of
//! the symmetrized delta `rho_Z = (1/N!) sum_sigma delta_{sigma(Z)}` equals
//! the empirical measure `mu_Z = (1/N) sum_k delta_{z_k}`.
//!
//! Bookkeeping is exact: atoms are keyed by their coordinate bit patterns
//! and masses are compared as integer permutation counts, so repeated atoms
//! must add up exactly.

use std::collections::HashMap;

use crate::model::ParticleEnsemble;
use crate::transport::permutations;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct MarginalReport {
    pub n_particles: usize,
    pub distinct_atoms: usize,
    pub exact_equal: bool,
}

/// Builds the symmetrized measure on configuration space, marginalizes it
/// onto the first particle slot by exact atom bookkeeping, and compares
/// with the empirical measure. `N <= 5` so that N! stays enumerable.
pub fn marginal_lemma_check(ensemble: &ParticleEnsemble) -> Result<MarginalReport> {
    let n = ensemble.len();
    if n > 5 {
        return Err(Error::Experiment(format!(
            "marginal check enumerates N! permutations; N={n} > 5 rejected"
        )));
    }
    let d = ensemble.dim();
    let key_of = |i: usize| -> Vec<u64> {
        ensemble.position(i)
            .iter()
            .chain(ensemble.velocity(i))
            .map(|x| x.to_bits())
            .collect()
    };

    // empirical multiplicities: mu_Z puts mass mult/N on each distinct atom
    let mut empirical: HashMap<Vec<u64>, u64> = HashMap::new();
    for i in 0..n {
        *empirical.entry(key_of(i)).or_insert(0) += 1;
    }

    // first marginal of rho_Z: each permutation sigma contributes the atom
    // z_{sigma(0)} with mass 1/N!; integer counts over all sigma
    let mut marginal: HashMap<Vec<u64>, u64> = HashMap::new();
    for sigma in permutations(n)? {
        *marginal.entry(key_of(sigma[0])).or_insert(0) += 1;
    }

    // mu_Z mass mult/N vs marginal count/N!: equality iff
    // count == mult * (N-1)! for every atom, with identical atom sets.
    let fact_nm1: u64 = (1..n as u64).product();
    let mut exact = empirical.len() == marginal.len();
    if exact {
        for (key, mult) in &empirical {
            match marginal.get(key) {
                Some(&count) if count == mult * fact_nm1 => {}
                _ => {
                    exact = false;
                    break;
                }
            }
        }
    }
    Ok(MarginalReport {
        n_particles: n,
        distinct_atoms: empirical.len(),
        exact_equal: exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_particle() {
        let e = ParticleEnsemble::uniform(1, vec![0.3], vec![-0.1]).unwrap();
        let r = marginal_lemma_check(&e).unwrap();
        assert!(r.exact_equal);
        assert_eq!(r.distinct_atoms, 1);
    }

    #[test]
    fn two_distinct_atoms() {
        let e = ParticleEnsemble::uniform(1, vec![0.0, 1.0], vec![0.5, -0.5]).unwrap();
        let r = marginal_lemma_check(&e).unwrap();
        assert!(r.exact_equal);
        assert_eq!(r.distinct_atoms, 2);
    }

    #[test]
    fn repeated_atom_masses_add() {
        // three particles, one atom repeated twice: masses 2/3 and 1/3
        let e = ParticleEnsemble::uniform(1, vec![0.7, 0.7, -0.2], vec![0.1, 0.1, 0.4]).unwrap();
        let r = marginal_lemma_check(&e).unwrap();
        assert!(r.exact_equal);
        assert_eq!(r.distinct_atoms, 2);
    }

    #[test]
    fn five_particles_d2() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let xs: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vs: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let e = ParticleEnsemble::uniform(2, xs, vs).unwrap();
        let r = marginal_lemma_check(&e).unwrap();
        assert!(r.exact_equal);
        assert_eq!(r.distinct_atoms, 5);
    }

    #[test]
    fn oversize_rejected() {
        let e = ParticleEnsemble::uniform(1, vec![0.0; 6], vec![0.0; 6]).unwrap();
        assert!(marginal_lemma_check(&e).is_err());
    }
}
