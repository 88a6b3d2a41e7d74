//! Exhaustive optimal-transport oracle for tiny instances.
//!
//! Uniform equal-size instances are solved by enumerating all N!
//! permutations. General weighted instances use exhaustive
//! flow-decomposition search: at every step some pair `(i, j)` with
//! remaining mass ships `min(a_i, b_j)`, which exhausts a row or a column;
//! branching over all pairs enumerates every vertex of the transportation
//! polytope. Admissible row/column bounds and arrival-cost dominance prune
//! the search without losing exactness.

use std::collections::HashMap;

use crate::{Error, Result};

use super::{pair_cost, permutations, CostExponent, PointCloud, TransportPlan};

const CAP: usize = 8;

/// Exact optimum by exhaustive search; instances above 8 atoms per side are
/// rejected.
pub fn brute_force_ot(
    mu: &PointCloud,
    nu: &PointCloud,
    exponent: CostExponent,
) -> Result<(f64, TransportPlan)> {
    if mu.dim != nu.dim {
        return Err(Error::Transport("cloud dimensions differ".into()));
    }
    let (n, m) = (mu.len(), nu.len());
    if n > CAP || m > CAP {
        return Err(Error::OracleTooLarge {
            atoms: n.max(m),
            cap: CAP,
        });
    }
    let cost = |i: usize, j: usize| pair_cost(mu.point(i), nu.point(j), exponent);

    let uniform = n == m
        && mu
            .weights
            .iter()
            .chain(&nu.weights)
            .all(|&w| (w - 1.0 / n as f64).abs() <= 1e-15);

    let (best_cost, entries) = if uniform {
        permutation_search(n, &cost)
    } else {
        flow_decomposition_search(&mu.weights, &nu.weights, &cost)
    };

    let (si, ti, ms): (Vec<u32>, Vec<u32>, Vec<f64>) = {
        let mut si = Vec::new();
        let mut ti = Vec::new();
        let mut ms = Vec::new();
        for (i, j, f) in entries {
            si.push(i as u32);
            ti.push(j as u32);
            ms.push(f);
        }
        (si, ti, ms)
    };
    let plan = TransportPlan::assemble(exponent, si, ti, ms, mu, nu, (0, 0));
    let dist = match exponent {
        CostExponent::Linear => best_cost,
        CostExponent::Quadratic => best_cost.sqrt(),
    };
    Ok((dist, plan))
}

fn permutation_search(
    n: usize,
    cost: &impl Fn(usize, usize) -> f64,
) -> (f64, Vec<(usize, usize, f64)>) {
    let w = 1.0 / n as f64;
    let mut best = f64::INFINITY;
    let mut best_perm = Vec::new();
    for p in permutations(n).expect("n <= 8") {
        let c: f64 = p.iter().enumerate().map(|(i, &j)| cost(i, j)).sum();
        if c < best {
            best = c;
            best_perm = p;
        }
    }
    let entries = best_perm
        .iter()
        .enumerate()
        .map(|(i, &j)| (i, j, w))
        .collect();
    (best * w, entries)
}

struct Search<'a> {
    cost: &'a dyn Fn(usize, usize) -> f64,
    n: usize,
    m: usize,
    best: f64,
    best_entries: Vec<(usize, usize, f64)>,
    stack: Vec<(usize, usize, f64)>,
    /// best arrival cost per remaining-mass state
    seen: HashMap<Vec<u64>, f64>,
}

fn flow_decomposition_search(
    a: &[f64],
    b: &[f64],
    cost: &impl Fn(usize, usize) -> f64,
) -> (f64, Vec<(usize, usize, f64)>) {
    let mut s = Search {
        cost,
        n: a.len(),
        m: b.len(),
        best: f64::INFINITY,
        best_entries: Vec::new(),
        stack: Vec::new(),
        seen: HashMap::new(),
    };
    // warm incumbent: greedy cheapest-pair shipping
    let (g_cost, g_entries) = greedy(a, b, cost);
    s.best = g_cost;
    s.best_entries = g_entries;

    let mut rem_a = a.to_vec();
    let mut rem_b = b.to_vec();
    s.recurse(&mut rem_a, &mut rem_b, 0.0);
    (s.best, s.best_entries)
}

impl Search<'_> {
    fn recurse(&mut self, rem_a: &mut [f64], rem_b: &mut [f64], acc: f64) {
        // admissible lower bound: each remaining unit must pay at least its
        // cheapest feasible arc, row-wise and column-wise.
        let mut lb_row = 0.0;
        let mut active_rows = 0;
        for i in 0..self.n {
            if rem_a[i] > 0.0 {
                active_rows += 1;
                let mut c = f64::INFINITY;
                for j in 0..self.m {
                    if rem_b[j] > 0.0 {
                        c = c.min((self.cost)(i, j));
                    }
                }
                lb_row += rem_a[i] * c;
            }
        }
        if active_rows == 0 {
            if acc < self.best {
                self.best = acc;
                self.best_entries = self.stack.clone();
            }
            return;
        }
        let mut lb_col = 0.0;
        for j in 0..self.m {
            if rem_b[j] > 0.0 {
                let mut c = f64::INFINITY;
                for i in 0..self.n {
                    if rem_a[i] > 0.0 {
                        c = c.min((self.cost)(i, j));
                    }
                }
                lb_col += rem_b[j] * c;
            }
        }
        let lb = lb_row.max(lb_col);
        if acc + lb >= self.best - 1e-15 {
            return;
        }
        // dominance: reaching the same remaining-mass state at a higher
        // accumulated cost cannot improve any completion
        let key: Vec<u64> = rem_a
            .iter()
            .chain(rem_b.iter())
            .map(|x| x.to_bits())
            .collect();
        if let Some(&prev) = self.seen.get(&key) {
            if acc >= prev - 1e-18 {
                return;
            }
        }
        self.seen.insert(key, acc);

        for i in 0..self.n {
            if rem_a[i] <= 0.0 {
                continue;
            }
            for j in 0..self.m {
                if rem_b[j] <= 0.0 {
                    continue;
                }
                let delta = rem_a[i].min(rem_b[j]);
                let (oa, ob) = (rem_a[i], rem_b[j]);
                rem_a[i] = oa - delta;
                rem_b[j] = ob - delta;
                // exhaust exactly one side on ties to keep states canonical
                if oa <= ob {
                    rem_a[i] = 0.0;
                } else {
                    rem_b[j] = 0.0;
                }
                self.stack.push((i, j, delta));
                self.recurse(rem_a, rem_b, acc + delta * (self.cost)(i, j));
                self.stack.pop();
                rem_a[i] = oa;
                rem_b[j] = ob;
            }
        }
    }
}

fn greedy(
    a: &[f64],
    b: &[f64],
    cost: &impl Fn(usize, usize) -> f64,
) -> (f64, Vec<(usize, usize, f64)>) {
    let mut rem_a = a.to_vec();
    let mut rem_b = b.to_vec();
    let mut entries = Vec::new();
    let mut total = 0.0;
    loop {
        let mut best = f64::INFINITY;
        let mut arg = None;
        for i in 0..a.len() {
            if rem_a[i] <= 0.0 {
                continue;
            }
            for j in 0..b.len() {
                if rem_b[j] <= 0.0 {
                    continue;
                }
                let c = cost(i, j);
                if c < best {
                    best = c;
                    arg = Some((i, j));
                }
            }
        }
        let Some((i, j)) = arg else { break };
        let delta = rem_a[i].min(rem_b[j]);
        if rem_a[i] <= rem_b[j] {
            rem_b[j] -= rem_a[i];
            rem_a[i] = 0.0;
        } else {
            rem_a[i] -= rem_b[j];
            rem_b[j] = 0.0;
        }
        entries.push((i, j, delta));
        total += delta * best;
    }
    (total, entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_singletons() {
        let a = PointCloud::uniform(1, vec![0.3]).unwrap();
        let (d, _) = brute_force_ot(&a, &a, CostExponent::Quadratic).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn one_d_uniform_picks_monotone_matching() {
        // crossing pairs in 1-d: the optimum is the sorted (non-crossing)
        // matching.
        let a = PointCloud::uniform(1, vec![0.0, 1.0]).unwrap();
        let b = PointCloud::uniform(1, vec![1.2, 0.1]).unwrap();
        let (d, plan) = brute_force_ot(&a, &b, CostExponent::Quadratic).unwrap();
        // sorted matching: 0.0 -> 0.1, 1.0 -> 1.2
        let expect = 0.5 * (0.1f64.powi(2) + 0.2f64.powi(2));
        assert_abs_diff_eq!(d * d, expect, epsilon = 1e-12);
        for k in 0..plan.mass.len() {
            let (i, j) = (plan.source_idx[k], plan.target_idx[k]);
            assert!((i == 0 && j == 1) || (i == 1 && j == 0));
        }
    }

    #[test]
    fn beats_any_feasible_plan() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.gen_range(2..=5);
            let m = rng.gen_range(2..=5);
            let a = random_cloud(&mut rng, n, 2);
            let b = random_cloud(&mut rng, m, 2);
            let (_, plan) = brute_force_ot(&a, &b, CostExponent::Quadratic).unwrap();
            // identity-ish feasible plan: greedy north-west corner
            let mut rem_a = a.weights.clone();
            let mut rem_b = b.weights.clone();
            let (mut i, mut j, mut nw_cost) = (0usize, 0usize, 0.0);
            while i < n && j < m {
                let delta = rem_a[i].min(rem_b[j]);
                nw_cost += delta * pair_cost(a.point(i), b.point(j), CostExponent::Quadratic);
                rem_a[i] -= delta;
                rem_b[j] -= delta;
                if rem_a[i] <= 1e-17 {
                    i += 1;
                } else {
                    j += 1;
                }
            }
            assert!(plan.cost <= nw_cost + 1e-12);
            assert!(plan.marginal_residual < 1e-12);
        }
    }

    pub(crate) fn random_cloud(
        rng: &mut rand_chacha::ChaCha8Rng,
        n: usize,
        dim: usize,
    ) -> PointCloud {
        use rand::Rng;
        let points: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= s);
        PointCloud::new(dim, points, weights).unwrap()
    }
}
