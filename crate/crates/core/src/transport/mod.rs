//! Exact W1/W2 distances between weighted point clouds, optimal plans, a
//! brute-force oracle, and an entropic accelerator.

mod brute;
mod simplex;
mod sinkhorn;

pub use brute::brute_force_ot;
pub use simplex::CostExponent;
pub use sinkhorn::{sinkhorn, SinkhornResult};

use crate::model::ParticleEnsemble;
use crate::{Error, Result};

/// Weights below this are treated as degenerate zero atoms and dropped.
const ZERO_ATOM: f64 = 1e-300;

/// An owned weighted point cloud in R^dim (flat storage).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 || points.len() != weights.len() * dim {
            return Err(Error::Transport("cloud shape mismatch".into()));
        }
        Ok(Self {
            dim,
            points,
            weights,
        })
    }

    /// Uniform weights 1/N.
    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        let n = points.len() / dim;
        Self::new(dim, points, vec![1.0 / n as f64; n])
    }

    /// Phase-space cloud (x, v) of an ensemble, dimension 2d.
    pub fn phase(ensemble: &ParticleEnsemble) -> Self {
        Self {
            dim: 2 * ensemble.dim(),
            points: ensemble.phase_points(),
            weights: ensemble.weights().to_vec(),
        }
    }

    /// Spatial cloud (x only) of an ensemble.
    pub fn spatial(ensemble: &ParticleEnsemble) -> Self {
        Self {
            dim: ensemble.dim(),
            points: ensemble.positions().to_vec(),
            weights: ensemble.weights().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for p in out.points.chunks_mut(self.dim) {
            for (c, s) in p.iter_mut().zip(shift) {
                *c += s;
            }
        }
        out
    }

    fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Drops zero-weight atoms, returning the cleaned cloud and how many
    /// atoms were removed.
    fn without_zero_atoms(&self) -> (Self, usize) {
        let dropped = self.weights.iter().filter(|&&w| w <= ZERO_ATOM).count();
        if dropped == 0 {
            return (self.clone(), 0);
        }
        let mut points = Vec::with_capacity((self.len() - dropped) * self.dim);
        let mut weights = Vec::with_capacity(self.len() - dropped);
        for i in 0..self.len() {
            if self.weights[i] > ZERO_ATOM {
                points.extend_from_slice(self.point(i));
                weights.push(self.weights[i]);
            }
        }
        (
            Self {
                dim: self.dim,
                points,
                weights,
            },
            dropped,
        )
    }
}

fn pair_cost(a: &[f64], b: &[f64], exponent: CostExponent) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    exponent.apply(s)
}

/// A discrete coupling between two weighted clouds.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub exponent: CostExponent,
    pub source_idx: Vec<u32>,
    pub target_idx: Vec<u32>,
    pub mass: Vec<f64>,
    /// Total transport cost (squared distance for the quadratic exponent).
    pub cost: f64,
    /// Max deviation of row/column sums from the input weights.
    pub marginal_residual: f64,
    /// Zero-weight atoms dropped from (source, target) before solving.
    pub dropped_atoms: (usize, usize),
}

impl TransportPlan {
    fn assemble(
        exponent: CostExponent,
        source_idx: Vec<u32>,
        target_idx: Vec<u32>,
        mass: Vec<f64>,
        mu: &PointCloud,
        nu: &PointCloud,
        dropped: (usize, usize),
    ) -> Self {
        let mut row = vec![0.0; mu.len()];
        let mut col = vec![0.0; nu.len()];
        let mut cost = 0.0;
        for k in 0..mass.len() {
            let i = source_idx[k] as usize;
            let j = target_idx[k] as usize;
            row[i] += mass[k];
            col[j] += mass[k];
            cost += mass[k] * pair_cost(mu.point(i), nu.point(j), exponent);
        }
        let mut resid = 0.0f64;
        for i in 0..mu.len() {
            resid = resid.max((row[i] - mu.weights[i]).abs());
        }
        for j in 0..nu.len() {
            resid = resid.max((col[j] - nu.weights[j]).abs());
        }
        Self {
            exponent,
            source_idx,
            target_idx,
            mass,
            cost,
            marginal_residual: resid,
            dropped_atoms: dropped,
        }
    }

    /// Recomputes the total cost from scratch against the given clouds.
    pub fn cost_against(&self, mu: &PointCloud, nu: &PointCloud) -> f64 {
        let mut cost = 0.0;
        for k in 0..self.mass.len() {
            cost += self.mass[k]
                * pair_cost(
                    mu.point(self.source_idx[k] as usize),
                    nu.point(self.target_idx[k] as usize),
                    self.exponent,
                );
        }
        cost
    }

    /// Distance this plan certifies: sqrt of the cost for the quadratic
    /// exponent, the cost itself for the linear one.
    pub fn distance(&self) -> f64 {
        match self.exponent {
            CostExponent::Linear => self.cost,
            CostExponent::Quadratic => self.cost.sqrt(),
        }
    }
}

fn check_probability(cloud: &PointCloud, name: &str) -> Result<()> {
    let s = cloud.weight_sum();
    if (s - 1.0).abs() > 1e-12 {
        return Err(Error::Transport(format!(
            "{name} weights sum to {s}, expected 1 within 1e-12"
        )));
    }
    Ok(())
}

fn solve(mu: &PointCloud, nu: &PointCloud, exponent: CostExponent) -> Result<(f64, TransportPlan)> {
    if mu.dim != nu.dim {
        return Err(Error::Transport("cloud dimensions differ".into()));
    }
    check_probability(mu, "source")?;
    check_probability(nu, "target")?;
    let (cmu, dropped_mu) = mu.without_zero_atoms();
    let (cnu, dropped_nu) = nu.without_zero_atoms();
    let sol = simplex::solve_transport(
        cmu.dim,
        &cmu.points,
        &cmu.weights,
        &cnu.points,
        &cnu.weights,
        exponent,
    )?;
    // Map indices back to the original clouds when atoms were dropped.
    let (src_map, dst_map): (Vec<u32>, Vec<u32>) = (
        index_map(&mu.weights),
        index_map(&nu.weights),
    );
    let source_idx: Vec<u32> = sol.source_idx.iter().map(|&i| src_map[i as usize]).collect();
    let target_idx: Vec<u32> = sol.target_idx.iter().map(|&j| dst_map[j as usize]).collect();
    let plan = TransportPlan::assemble(
        exponent,
        source_idx,
        target_idx,
        sol.mass,
        mu,
        nu,
        (dropped_mu, dropped_nu),
    );
    let dist = plan.distance();
    Ok((dist, plan))
}

fn index_map(weights: &[f64]) -> Vec<u32> {
    let mut map = Vec::new();
    for (i, &w) in weights.iter().enumerate() {
        if w > ZERO_ATOM {
            map.push(i as u32);
        }
    }
    map
}

/// Exact quadratic Wasserstein distance between weighted clouds
/// (general discrete OT by network simplex). Returns the unsquared
/// distance and the optimal plan (whose `cost` is the squared value).
pub fn w2_weighted(mu: &PointCloud, nu: &PointCloud) -> Result<(f64, TransportPlan)> {
    solve(mu, nu, CostExponent::Quadratic)
}

/// Exact order-1 Wasserstein distance (primal form with cost |x - y|).
pub fn w1(mu: &PointCloud, nu: &PointCloud) -> Result<(f64, TransportPlan)> {
    solve(mu, nu, CostExponent::Linear)
}

/// Exact W2 for equal-size uniform-weight clouds; the optimum is attained
/// at a permutation, which the returned plan encodes.
pub fn w2_exact_uniform(a: &PointCloud, b: &PointCloud) -> Result<(f64, TransportPlan)> {
    if a.len() != b.len() {
        return Err(Error::Transport(format!(
            "uniform solver needs equal sizes, got {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    let w = 1.0 / n as f64;
    if a.weights.iter().chain(&b.weights).any(|&x| (x - w).abs() > 1e-12) {
        return Err(Error::Transport("uniform solver needs uniform weights".into()));
    }
    let (dist, plan) = solve(a, b, CostExponent::Quadratic)?;
    debug_assert!(
        plan.mass.len() == n,
        "uniform optimal plan is not a permutation ({} entries for N={n})",
        plan.mass.len()
    );
    Ok((dist, plan))
}

/// Builds the symmetrized configuration cloud of `Z = (z_1..z_N)` in
/// R^{2dN}: one atom `sigma(Z)` of mass 1/N! per permutation, enumerated in
/// lexicographic order.
pub fn symmetrized_config_cloud(ensemble: &ParticleEnsemble) -> Result<PointCloud> {
    let n = ensemble.len();
    let d = ensemble.dim();
    let perms = permutations(n)?;
    let dim = 2 * d * n;
    let mut points = Vec::with_capacity(perms.len() * dim);
    for sigma in &perms {
        // sigma(Z) = (x_{sigma(1)}, ..., x_{sigma(N)}, v_{sigma(1)}, ...)
        for &k in sigma {
            points.extend_from_slice(ensemble.position(k));
        }
        for &k in sigma {
            points.extend_from_slice(ensemble.velocity(k));
        }
    }
    let w = 1.0 / perms.len() as f64;
    PointCloud::new(dim, points, vec![w; perms.len()])
}

/// Averages an optimal plan between two symmetrized configuration clouds
/// over simultaneous permutations. For exchangeable marginals the average
/// is again a coupling with identical cost, hence optimal.
///
/// Both clouds must be in the canonical lexicographic atom order produced
/// by [`symmetrized_config_cloud`]. Enumeration is factorial, so `n > 5`
/// is rejected.
pub fn symmetrize_plan(
    plan: &TransportPlan,
    mu: &PointCloud,
    nu: &PointCloud,
    n: usize,
) -> Result<TransportPlan> {
    if n > 5 {
        return Err(Error::Transport(format!(
            "symmetrize_plan enumerates N! permutations; N={n} > 5 rejected"
        )));
    }
    let perms = permutations(n)?;
    let nf = perms.len();
    if mu.len() != nf || nu.len() != nf {
        return Err(Error::Transport(format!(
            "expected symmetrized clouds with {nf} atoms, got {} and {}",
            mu.len(),
            nu.len()
        )));
    }
    // compose[s][t] = index of perms[s] o perms[t]
    let index_of: std::collections::HashMap<&[usize], usize> = perms
        .iter()
        .enumerate()
        .map(|(i, p)| (p.as_slice(), i))
        .collect();
    let mut dense = vec![0.0; nf * nf];
    for s in &perms {
        for k in 0..plan.mass.len() {
            let t1 = &perms[plan.source_idx[k] as usize];
            let t2 = &perms[plan.target_idx[k] as usize];
            let c1: Vec<usize> = t1.iter().map(|&x| s[x]).collect();
            let c2: Vec<usize> = t2.iter().map(|&x| s[x]).collect();
            let i = index_of[c1.as_slice()];
            let j = index_of[c2.as_slice()];
            dense[i * nf + j] += plan.mass[k] / nf as f64;
        }
    }
    let mut source_idx = Vec::new();
    let mut target_idx = Vec::new();
    let mut mass = Vec::new();
    for i in 0..nf {
        for j in 0..nf {
            let m = dense[i * nf + j];
            if m > 0.0 {
                source_idx.push(i as u32);
                target_idx.push(j as u32);
                mass.push(m);
            }
        }
    }
    Ok(TransportPlan::assemble(
        plan.exponent,
        source_idx,
        target_idx,
        mass,
        mu,
        nu,
        (0, 0),
    ))
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Result<Vec<Vec<usize>>> {
    if n == 0 || n > 8 {
        return Err(Error::Transport(format!(
            "permutation enumeration limited to 1..=8 elements, got {n}"
        )));
    }
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..n).collect();
    loop {
        out.push(cur.clone());
        // next_permutation
        let mut i = n as i64 - 2;
        while i >= 0 && cur[i as usize] >= cur[i as usize + 1] {
            i -= 1;
        }
        if i < 0 {
            break;
        }
        let i = i as usize;
        let mut j = n - 1;
        while cur[j] <= cur[i] {
            j -= 1;
        }
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
