//! Exact transportation network simplex, specialized for dense bipartite
//! optimal transport between weighted point clouds.
//!
//! Basis bookkeeping (thread/reverse-thread spanning tree, block-search
//! pricing, artificial root initialization) follows the LEMON network
//! simplex. Two adaptations for point-cloud OT:
//!
//! * arcs are implicit: ground costs `|a_i - b_j|^p` are computed from
//!   coordinates on demand, never stored densely;
//! * the simplex works on a dynamic candidate pool seeded with near
//!   neighbours; full pricing sweeps over all `n*m` implicit arcs add
//!   violating arcs until none remain, which certifies global optimality.
//!
//! A final pass recomputes tree flows directly from the marginals, so the
//! reported plan satisfies the mass balances to roundoff regardless of how
//! many pivots were taken.

use crate::{Error, Result};

const INVALID: usize = usize::MAX;
const EPS_REL: f64 = 1e-12;

/// Ground cost exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostExponent {
    /// |x - y| (W1)
    Linear,
    /// |x - y|^2 (W2 squared)
    Quadratic,
}

impl CostExponent {
    #[inline]
    pub fn apply(&self, dist_sq: f64) -> f64 {
        match self {
            CostExponent::Linear => dist_sq.sqrt(),
            CostExponent::Quadratic => dist_sq,
        }
    }
}

/// Sparse optimal solution of one transportation instance.
pub struct SimplexSolution {
    pub source_idx: Vec<u32>,
    pub target_idx: Vec<u32>,
    pub mass: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
    /// Largest flow left on an artificial arc (roundoff-sized when the
    /// marginals balance).
    pub artificial_residual: f64,
}

struct Instance<'a> {
    dim: usize,
    src_pts: &'a [f64],
    dst_pts: &'a [f64],
    exponent: CostExponent,
}

impl Instance<'_> {
    #[inline]
    fn cost(&self, i: usize, j: usize) -> f64 {
        let d = self.dim;
        let a = &self.src_pts[i * d..(i + 1) * d];
        let b = &self.dst_pts[j * d..(j + 1) * d];
        let mut s = 0.0;
        for k in 0..d {
            let t = a[k] - b[k];
            s += t * t;
        }
        self.exponent.apply(s)
    }
}

/// Solves `min sum f_ij c_ij` over couplings of `(src_weights, dst_weights)`
/// with ground cost `|src - dst|^p`. Point arrays are flat, `dim` entries
/// per point. Weights must be positive (callers drop zero atoms).
pub fn solve_transport(
    dim: usize,
    src_pts: &[f64],
    src_weights: &[f64],
    dst_pts: &[f64],
    dst_weights: &[f64],
    exponent: CostExponent,
) -> Result<SimplexSolution> {
    let ns = src_weights.len();
    let nt = dst_weights.len();
    if ns == 0 || nt == 0 {
        return Err(Error::Transport("empty marginal".into()));
    }
    if src_pts.len() != ns * dim || dst_pts.len() != nt * dim {
        return Err(Error::Transport("point array length mismatch".into()));
    }
    let inst = Instance {
        dim,
        src_pts,
        dst_pts,
        exponent,
    };
    let mut s = Solver::new(&inst, src_weights, dst_weights);
    s.seed_near_neighbours(8);
    let mut pivots = 0usize;
    loop {
        pivots += s.run_to_pool_optimality()?;
        if !s.price_full_sweep(4096) {
            break;
        }
    }
    let mut sol = s.extract();
    sol.pivots = pivots;
    if sol.artificial_residual > 1e-9 {
        return Err(Error::Transport(format!(
            "artificial arcs kept flow {:.3e}; marginals not balanced",
            sol.artificial_residual
        )));
    }
    Ok(sol)
}

struct Solver<'a> {
    inst: &'a Instance<'a>,
    ns: usize,
    n_nodes: usize, // ns + nt
    root: usize,
    supply: Vec<f64>,

    // arcs: ids [0, n_nodes) artificial (node <-> root), pool arcs after
    arc_src: Vec<usize>,
    arc_dst: Vec<usize>,
    arc_cost: Vec<f64>,
    flow: Vec<f64>,
    in_tree: Vec<bool>,
    pool_set: std::collections::HashSet<u64>,

    pi: Vec<f64>,

    parent: Vec<usize>,
    pred_arc: Vec<usize>,
    /// +1 if the predecessor arc is oriented node -> parent, -1 otherwise.
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,

    next_arc: usize,
    art_cost: f64,

    // pivot scratch
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
}

impl<'a> Solver<'a> {
    fn new(inst: &'a Instance<'a>, src_w: &[f64], dst_w: &[f64]) -> Self {
        let ns = src_w.len();
        let nt = dst_w.len();
        let n_nodes = ns + nt;
        let root = n_nodes;
        let mut supply = Vec::with_capacity(n_nodes);
        supply.extend_from_slice(src_w);
        supply.extend(dst_w.iter().map(|w| -w));

        // Artificial cost dominating any shortest path through real arcs.
        let mut max_abs_cost = 0.0f64;
        // cheap bound: max pairwise cost <= (diam of the union)^p
        let mut lo = vec![f64::INFINITY; inst.dim];
        let mut hi = vec![f64::NEG_INFINITY; inst.dim];
        for pts in [inst.src_pts, inst.dst_pts] {
            for p in pts.chunks(inst.dim) {
                for (k, &c) in p.iter().enumerate() {
                    lo[k] = lo[k].min(c);
                    hi[k] = hi[k].max(c);
                }
            }
        }
        let diam_sq: f64 = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum();
        max_abs_cost = max_abs_cost.max(inst.exponent.apply(diam_sq));
        let art_cost = (max_abs_cost + 1.0) * (n_nodes as f64);

        let mut s = Self {
            inst,
            ns,
            n_nodes,
            root,
            supply,
            arc_src: Vec::new(),
            arc_dst: Vec::new(),
            arc_cost: Vec::new(),
            flow: Vec::new(),
            in_tree: Vec::new(),
            pool_set: std::collections::HashSet::new(),
            pi: vec![0.0; n_nodes + 1],
            parent: vec![INVALID; n_nodes + 1],
            pred_arc: vec![INVALID; n_nodes + 1],
            pred_dir: vec![0; n_nodes + 1],
            thread: vec![0; n_nodes + 1],
            rev_thread: vec![0; n_nodes + 1],
            succ_num: vec![0; n_nodes + 1],
            last_succ: vec![0; n_nodes + 1],
            dirty_revs: Vec::new(),
            next_arc: 0,
            art_cost,
            in_arc: INVALID,
            join: INVALID,
            u_in: INVALID,
            v_in: INVALID,
            u_out: INVALID,
            delta: 0.0,
        };
        s.init_artificial_basis();
        s
    }

    fn init_artificial_basis(&mut self) {
        let n = self.n_nodes;
        let root = self.root;
        self.arc_src.resize(n, 0);
        self.arc_dst.resize(n, 0);
        self.arc_cost.resize(n, 0.0);
        self.flow.resize(n, 0.0);
        self.in_tree.resize(n, true);

        self.parent[root] = INVALID;
        self.pred_arc[root] = INVALID;
        self.thread[root] = 0;
        self.rev_thread[0] = root;
        self.succ_num[root] = n + 1;
        self.last_succ[root] = n - 1;
        self.pi[root] = 0.0;

        for u in 0..n {
            self.parent[u] = root;
            self.pred_arc[u] = u;
            self.thread[u] = u + 1; // node n-1 threads to root via index n
            self.rev_thread[u + 1] = u;
            self.succ_num[u] = 1;
            self.last_succ[u] = u;
            if self.supply[u] >= 0.0 {
                // supply node: arc u -> root at zero cost
                self.pred_dir[u] = 1;
                self.pi[u] = 0.0;
                self.arc_src[u] = u;
                self.arc_dst[u] = root;
                self.flow[u] = self.supply[u];
                self.arc_cost[u] = 0.0;
            } else {
                // demand node: arc root -> u at the big cost
                self.pred_dir[u] = -1;
                self.pi[u] = self.art_cost;
                self.arc_src[u] = root;
                self.arc_dst[u] = u;
                self.flow[u] = -self.supply[u];
                self.arc_cost[u] = self.art_cost;
            }
        }
        self.thread[n - 1] = root;
        self.rev_thread[root] = n - 1;
        self.thread[root] = 0;
        self.rev_thread[0] = root;
    }

    fn add_pool_arc(&mut self, i: usize, j: usize) -> bool {
        let key = (i as u64) << 32 | j as u64;
        if !self.pool_set.insert(key) {
            return false;
        }
        self.arc_src.push(i);
        self.arc_dst.push(self.ns + j);
        self.arc_cost.push(self.inst.cost(i, j));
        self.flow.push(0.0);
        self.in_tree.push(false);
        true
    }

    /// Seeds the pool with `k` nearest targets per source (and vice versa)
    /// found through a uniform bucket grid. Deterministic: candidates are
    /// ranked by (distance, index).
    fn seed_near_neighbours(&mut self, k: usize) {
        let dim = self.inst.dim;
        let nt = self.n_nodes - self.ns;
        // bucket the targets
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in self.inst.dst_pts.chunks(dim) {
            for (a, &c) in p.iter().enumerate() {
                lo[a] = lo[a].min(c);
                hi[a] = hi[a].max(c);
            }
        }
        let cells_per_axis = ((nt as f64).powf(1.0 / dim as f64) / 2.0).ceil().max(1.0) as usize;
        let mut width = vec![0.0; dim];
        for a in 0..dim {
            width[a] = ((hi[a] - lo[a]) / cells_per_axis as f64).max(1e-300);
        }
        let cell_of = |p: &[f64]| -> Vec<usize> {
            (0..dim)
                .map(|a| {
                    (((p[a] - lo[a]) / width[a]) as usize).min(cells_per_axis - 1)
                })
                .collect()
        };
        let total_cells = cells_per_axis.pow(dim as u32);
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); total_cells];
        for (j, p) in self.inst.dst_pts.chunks(dim).enumerate() {
            let c = cell_of(p);
            let mut flat = 0usize;
            for a in 0..dim {
                flat = flat * cells_per_axis + c[a];
            }
            buckets[flat].push(j as u32);
        }

        let mut cand: Vec<(f64, u32)> = Vec::new();
        for i in 0..self.ns {
            let p = &self.inst.src_pts[i * dim..(i + 1) * dim];
            let c = cell_of(p);
            cand.clear();
            let mut ring = 0usize;
            while cand.len() < k && ring <= cells_per_axis {
                // scan cells with Chebyshev distance == ring from c
                let mut idx = vec![0i64; dim];
                let ranges: Vec<(i64, i64)> = (0..dim)
                    .map(|a| (c[a] as i64 - ring as i64, c[a] as i64 + ring as i64))
                    .collect();
                for a in 0..dim {
                    idx[a] = ranges[a].0;
                }
                loop {
                    let on_shell = (0..dim)
                        .any(|a| idx[a] == ranges[a].0 || idx[a] == ranges[a].1)
                        || ring == 0;
                    let in_box = (0..dim)
                        .all(|a| idx[a] >= 0 && (idx[a] as usize) < cells_per_axis);
                    if on_shell && in_box {
                        let mut flat = 0usize;
                        for a in 0..dim {
                            flat = flat * cells_per_axis + idx[a] as usize;
                        }
                        for &j in &buckets[flat] {
                            let q =
                                &self.inst.dst_pts[j as usize * dim..(j as usize + 1) * dim];
                            let d2: f64 = p
                                .iter()
                                .zip(q)
                                .map(|(x, y)| (x - y) * (x - y))
                                .sum();
                            cand.push((d2, j));
                        }
                    }
                    let mut carried = true;
                    for a in (0..dim).rev() {
                        idx[a] += 1;
                        if idx[a] <= ranges[a].1 {
                            carried = false;
                            break;
                        }
                        idx[a] = ranges[a].0;
                    }
                    if carried {
                        break;
                    }
                }
                ring += 1;
            }
            cand.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for &(_, j) in cand.iter().take(k) {
                self.add_pool_arc(i, j as usize);
            }
        }
    }

    #[inline]
    fn reduced_cost(&self, e: usize) -> f64 {
        self.arc_cost[e] + self.pi[self.arc_src[e]] - self.pi[self.arc_dst[e]]
    }

    /// Block-search pricing over the pool. Returns false at pool optimality.
    fn find_entering_arc(&mut self) -> bool {
        let first_pool = self.n_nodes;
        let m = self.arc_src.len();
        if m == first_pool {
            return false;
        }
        let pool_len = m - first_pool;
        let block = ((pool_len as f64).sqrt() as usize).max(16);
        let mut min_cost = 0.0f64;
        let mut min_arc = INVALID;
        let mut count = block;
        let start = self.next_arc.clamp(first_pool, m - 1);
        let mut scanned = 0usize;
        let mut e = start;
        while scanned < pool_len {
            if !self.in_tree[e] {
                let rc = self.reduced_cost(e);
                if rc < min_cost {
                    min_cost = rc;
                    min_arc = e;
                }
            }
            scanned += 1;
            count -= 1;
            if count == 0 {
                if min_arc != INVALID && self.accept(min_arc, min_cost) {
                    self.in_arc = min_arc;
                    self.next_arc = if e + 1 >= m { first_pool } else { e + 1 };
                    return true;
                }
                min_cost = 0.0;
                min_arc = INVALID;
                count = block;
            }
            e += 1;
            if e >= m {
                e = first_pool;
            }
        }
        if min_arc != INVALID && self.accept(min_arc, min_cost) {
            self.in_arc = min_arc;
            self.next_arc = first_pool;
            return true;
        }
        false
    }

    #[inline]
    fn accept(&self, e: usize, rc: f64) -> bool {
        let scale = self.pi[self.arc_src[e]]
            .abs()
            .max(self.pi[self.arc_dst[e]].abs())
            .max(self.arc_cost[e].abs())
            .max(1.0);
        rc < -EPS_REL * scale
    }

    fn find_join(&mut self) {
        let mut u = self.arc_src[self.in_arc];
        let mut v = self.arc_dst[self.in_arc];
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    /// Finds the blocking arc along the cycle; returns false if unbounded.
    fn find_leaving_arc(&mut self) -> bool {
        // entering arc at lower bound: orientation source -> target
        let first = self.arc_src[self.in_arc];
        let second = self.arc_dst[self.in_arc];
        self.delta = f64::INFINITY;
        let mut found = 0u8;

        let mut u = first;
        while u != self.join {
            // flow decreases on arcs pointing up along the source branch
            if self.pred_dir[u] == 1 {
                let d = self.flow[self.pred_arc[u]];
                if d < self.delta {
                    self.delta = d;
                    self.u_out = u;
                    found = 1;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            // flow decreases on arcs pointing down along the target branch
            if self.pred_dir[u] == -1 {
                let d = self.flow[self.pred_arc[u]];
                if d <= self.delta {
                    self.delta = d;
                    self.u_out = u;
                    found = 2;
                }
            }
            u = self.parent[u];
        }
        match found {
            1 => {
                self.u_in = first;
                self.v_in = second;
                true
            }
            2 => {
                self.u_in = second;
                self.v_in = first;
                true
            }
            _ => false,
        }
    }

    fn change_flow(&mut self) {
        let delta = self.delta;
        if delta > 0.0 {
            self.flow[self.in_arc] += delta;
            let mut u = self.arc_src[self.in_arc];
            while u != self.join {
                let e = self.pred_arc[u];
                if self.pred_dir[u] == 1 {
                    self.flow[e] -= delta;
                } else {
                    self.flow[e] += delta;
                }
                u = self.parent[u];
            }
            let mut u = self.arc_dst[self.in_arc];
            while u != self.join {
                let e = self.pred_arc[u];
                if self.pred_dir[u] == 1 {
                    self.flow[e] += delta;
                } else {
                    self.flow[e] -= delta;
                }
                u = self.parent[u];
            }
        }
        // The leaving arc exits with exactly zero flow.
        let out_arc = self.pred_arc[self.u_out];
        self.flow[out_arc] = 0.0;
        self.in_tree[out_arc] = false;
        self.in_tree[self.in_arc] = true;
    }

    /// LEMON's subtree re-rooting: the subtree hanging at `u_out` is
    /// re-rooted at `u_in` and re-attached below `v_in`.
    fn update_tree_structure(&mut self) {
        let u_out = self.u_out;
        let u_in = self.u_in;
        let v_in = self.v_in;
        let old_rev_thread = self.rev_thread[u_out];
        let old_succ_num = self.succ_num[u_out];
        let old_last_succ = self.last_succ[u_out];
        let v_out = self.parent[u_out];

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred_arc[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.arc_src[self.in_arc] { 1 } else { -1 };

            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };

            let mut stem = u_in;
            let mut stem_parent = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);

                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;

                self.parent[stem] = stem_parent;
                stem_parent = stem;
                stem = next_stem;

                last = if self.last_succ[stem] == self.last_succ[stem_parent] {
                    self.rev_thread[stem_parent]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = stem_parent;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;

            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }

            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                self.rev_thread[self.thread[u]] = u;
            }

            // predecessors, directions and successor counts along the stem
            let mut temp_succ_num = 0usize;
            let temp_last_succ = self.last_succ[u_out];
            let mut u = u_out;
            let mut p = self.parent[u];
            while u != u_in {
                self.pred_arc[u] = self.pred_arc[p];
                self.pred_dir[u] = -self.pred_dir[p];
                temp_succ_num += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = temp_succ_num;
                self.last_succ[p] = temp_last_succ;
                u = p;
                p = self.parent[u];
            }
            self.pred_arc[u_in] = self.in_arc;
            self.pred_dir[u_in] = if u_in == self.arc_src[self.in_arc] { 1 } else { -1 };
            self.succ_num[u_in] = old_succ_num;
        }

        // last_succ from v_in towards the root
        let up_limit_out = if self.last_succ[self.join] == v_in {
            self.join
        } else {
            INVALID
        };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != INVALID && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }

        // last_succ from v_out towards the root
        if self.join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != INVALID && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != INVALID && u != up_limit_out && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }

        // successor counts on the two join branches
        let mut u = v_in;
        while u != self.join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != self.join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let u_in = self.u_in;
        let sigma = -self.arc_cost[self.in_arc] * self.pred_dir[u_in] as f64
            + self.pi[self.v_in]
            - self.pi[u_in];
        let end = self.thread[self.last_succ[u_in]];
        let mut u = u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }

    fn run_to_pool_optimality(&mut self) -> Result<usize> {
        let max_pivots = 400 * (self.n_nodes + 1024);
        let mut pivots = 0usize;
        while self.find_entering_arc() {
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::Transport(format!(
                    "pivot limit exceeded ({max_pivots})"
                )));
            }
            self.find_join();
            if !self.find_leaving_arc() {
                return Err(Error::Transport("unbounded instance".into()));
            }
            self.change_flow();
            self.update_tree_structure();
            self.update_potential();
        }
        Ok(pivots)
    }

    /// One full pricing sweep over every implicit arc. Adds up to `cap`
    /// strongest violators (at most 4 per source) to the pool; returns
    /// whether any were added.
    fn price_full_sweep(&mut self, cap: usize) -> bool {
        let nt = self.n_nodes - self.ns;
        let mut violators: Vec<(f64, u32, u32)> = Vec::new();
        for i in 0..self.ns {
            let pi_i = self.pi[i];
            let mut best: [(f64, u32); 4] = [(0.0, u32::MAX); 4];
            for j in 0..nt {
                let c = self.inst.cost(i, j);
                let rc = c + pi_i - self.pi[self.ns + j];
                let scale = pi_i.abs().max(self.pi[self.ns + j].abs()).max(c).max(1.0);
                if rc < -EPS_REL * scale && rc < best[3].0 {
                    // insertion into the per-source top-4
                    let mut k = 3;
                    while k > 0 && rc < best[k - 1].0 {
                        best[k] = best[k - 1];
                        k -= 1;
                    }
                    best[k] = (rc, j as u32);
                }
            }
            for &(rc, j) in best.iter() {
                if j != u32::MAX {
                    violators.push((rc, i as u32, j));
                }
            }
        }
        if violators.is_empty() {
            return false;
        }
        violators.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap()
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        let mut added = false;
        for &(_, i, j) in violators.iter().take(cap) {
            added |= self.add_pool_arc(i as usize, j as usize);
        }
        added
    }

    /// Recomputes tree flows bottom-up from the exact marginals, checks the
    /// artificial arcs are dry, and assembles the sparse plan.
    fn extract(&mut self) -> SimplexSolution {
        let n = self.n_nodes;
        // depth-ordered traversal via thread: thread order visits parents
        // before their subtrees, so accumulate net supplies in reverse.
        let mut order = Vec::with_capacity(n + 1);
        let mut u = self.root;
        loop {
            order.push(u);
            u = self.thread[u];
            if u == self.root {
                break;
            }
        }
        let mut net = self.supply.clone();
        net.push(-net.iter().sum::<f64>()); // root balances the total
        for &u in order.iter().rev() {
            if u == self.root {
                continue;
            }
            let f = if self.pred_dir[u] == 1 { net[u] } else { -net[u] };
            self.flow[self.pred_arc[u]] = f;
            net[self.parent[u]] += net[u];
        }

        let mut source_idx = Vec::new();
        let mut target_idx = Vec::new();
        let mut mass = Vec::new();
        let mut cost = 0.0;
        let mut artificial_residual = 0.0f64;
        for u in 0..n {
            let e = self.pred_arc[u];
            let f = self.flow[e];
            if e < n {
                artificial_residual = artificial_residual.max(f.abs());
                continue;
            }
            debug_assert!(f > -1e-9, "negative basic flow {f}");
            if f > 0.0 {
                let i = self.arc_src[e];
                let j = self.arc_dst[e] - self.ns;
                source_idx.push(i as u32);
                target_idx.push(j as u32);
                mass.push(f);
                cost += f * self.arc_cost[e];
            }
        }
        SimplexSolution {
            source_idx,
            target_idx,
            mass,
            cost,
            pivots: 0,
            artificial_residual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn singleton_pair() {
        let s = solve_transport(
            1,
            &[0.0],
            &[1.0],
            &[3.0],
            &[1.0],
            CostExponent::Quadratic,
        )
        .unwrap();
        assert_abs_diff_eq!(s.cost, 9.0, epsilon = 1e-12);
        assert_eq!(s.mass, vec![1.0]);
    }

    #[test]
    fn forced_split() {
        // delta_0 vs (delta_-1 + delta_1)/2 in 1-d: cost 1/2 + 1/2 = 1.
        let s = solve_transport(
            1,
            &[0.0],
            &[1.0],
            &[-1.0, 1.0],
            &[0.5, 0.5],
            CostExponent::Quadratic,
        )
        .unwrap();
        assert_abs_diff_eq!(s.cost, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sorted_matching_in_1d() {
        // uniform clouds in 1-d: optimal W2 coupling is the sorted matching
        let xs = [0.1, 0.9, 0.4, 0.6];
        let ys = [0.0, 0.5, 0.2, 1.1];
        let w = [0.25; 4];
        let s = solve_transport(1, &xs, &w, &ys, &w, CostExponent::Quadratic).unwrap();
        let mut a = xs.to_vec();
        let mut b = ys.to_vec();
        a.sort_by(|p, q| p.partial_cmp(q).unwrap());
        b.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let expect: f64 = a
            .iter()
            .zip(&b)
            .map(|(p, q)| 0.25 * (p - q) * (p - q))
            .sum();
        assert_abs_diff_eq!(s.cost, expect, epsilon = 1e-12);
    }

    #[test]
    fn marginals_are_exact() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let ns = 37;
        let nt = 53;
        let src: Vec<f64> = (0..ns * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dst: Vec<f64> = (0..nt * 2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut aw: Vec<f64> = (0..ns).map(|_| rng.gen_range(0.1..1.0)).collect();
        let mut bw: Vec<f64> = (0..nt).map(|_| rng.gen_range(0.1..1.0)).collect();
        let sa: f64 = aw.iter().sum();
        aw.iter_mut().for_each(|w| *w /= sa);
        let sb: f64 = bw.iter().sum();
        bw.iter_mut().for_each(|w| *w /= sb);

        let s = solve_transport(2, &src, &aw, &dst, &bw, CostExponent::Quadratic).unwrap();
        let mut row = vec![0.0; ns];
        let mut col = vec![0.0; nt];
        for k in 0..s.mass.len() {
            row[s.source_idx[k] as usize] += s.mass[k];
            col[s.target_idx[k] as usize] += s.mass[k];
        }
        for i in 0..ns {
            assert_abs_diff_eq!(row[i], aw[i], epsilon = 1e-12);
        }
        for j in 0..nt {
            assert_abs_diff_eq!(col[j], bw[j], epsilon = 1e-12);
        }
    }
}
