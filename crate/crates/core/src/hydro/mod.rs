//! 1-d pressureless nonlocal Euler system with chemotaxis.
//!
//! Finite-volume solver: local Lax-Friedrichs fluxes for the pressureless
//! convective part, then the source terms (nonlocal alignment integral by
//! direct cell-pair summation, chemotaxis, external force), then one field
//! step for the chemical density driven by `chi * mu`. Runs stop at the
//! first crossing indicator: past a velocity crossing the monokinetic
//! ansatz leaves the regime the solver models.

use crate::dynamics::force_field_at;
use crate::fields::ChemGrid;
use crate::io::rng::particle_stream;
use crate::model::{
    AlignmentKernel, BumpSource, Density1d, ExternalForce, ParticleEnsemble, VelocityField,
};
use crate::transport::{w2_weighted, PointCloud};
use crate::{Error, Result};

/// Density floor below which a cell counts as vacuum and carries u = 0.
pub const MU_FLOOR: f64 = 1e-12;

const CFL_LIMIT: f64 = 0.5;

/// Cell-averaged `(mu, q = mu u)` on a periodic 1-d grid plus the chemical
/// field on the same box.
#[derive(Debug, Clone)]
pub struct EulerState {
    half_width: f64,
    pub mu: Vec<f64>,
    pub q: Vec<f64>,
    pub psi: ChemGrid,
    pub time: f64,
}

impl EulerState {
    /// Discretizes `mu_spec` (cell-centered, normalized to unit mass) and
    /// `u_spec` on `m` cells over `[-a, a)`; `psi` must share the box.
    pub fn init(
        m: usize,
        half_width: f64,
        mu_spec: &Density1d,
        u_spec: &VelocityField,
        psi: ChemGrid,
    ) -> Result<Self> {
        if psi.dim() != 1 || psi.cells_per_axis() != m || psi.half_width() != half_width {
            return Err(Error::GridMismatch(
                "psi grid must match the Euler grid (1-d, same m and box)".into(),
            ));
        }
        let h = 2.0 * half_width / m as f64;
        let mut mu: Vec<f64> = (0..m)
            .map(|c| {
                let x = -half_width + (c as f64 + 0.5) * h;
                density_value(mu_spec, x)
            })
            .collect();
        let total: f64 = mu.iter().sum::<f64>() * h;
        if total <= 0.0 {
            return Err(Error::domain("initial density has no mass on the grid"));
        }
        mu.iter_mut().for_each(|v| *v /= total);
        let q: Vec<f64> = mu
            .iter()
            .enumerate()
            .map(|(c, &m_c)| {
                let x = -half_width + (c as f64 + 0.5) * h;
                m_c * u_spec.eval(x)
            })
            .collect();
        Ok(Self {
            half_width,
            mu,
            q,
            psi,
            time: 0.0,
        })
    }

    pub fn cells(&self) -> usize {
        self.mu.len()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.cells() as f64
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn cell_center(&self, c: usize) -> f64 {
        -self.half_width + (c as f64 + 0.5) * self.spacing()
    }

    /// Velocity with the vacuum convention `u = 0` where `mu < floor`.
    pub fn velocity(&self, c: usize) -> f64 {
        if self.mu[c] < MU_FLOOR {
            0.0
        } else {
            self.q[c] / self.mu[c]
        }
    }

    pub fn mass(&self) -> f64 {
        self.mu.iter().sum::<f64>() * self.spacing()
    }

    pub fn momentum(&self) -> f64 {
        self.q.iter().sum::<f64>() * self.spacing()
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.cells()).map(|c| self.velocity(c).abs()).fold(0.0, f64::max)
    }

    /// Max |du/dx| over neighbouring non-vacuum cells: the crossing
    /// indicator.
    pub fn max_velocity_slope(&self) -> f64 {
        let m = self.cells();
        let h = self.spacing();
        let mut worst = 0.0f64;
        for c in 0..m {
            let cn = (c + 1) % m;
            if self.mu[c] >= MU_FLOOR && self.mu[cn] >= MU_FLOOR {
                worst = worst.max((self.velocity(cn) - self.velocity(c)).abs() / h);
            }
        }
        worst
    }

    /// Weighted ensemble of non-vacuum cell centers carrying `mu_c h`,
    /// exactly renormalized; drives the field source and the phase cloud.
    fn cell_ensemble(&self) -> Result<ParticleEnsemble> {
        let h = self.spacing();
        let mut xs = Vec::new();
        let mut vs = Vec::new();
        let mut ws = Vec::new();
        for c in 0..self.cells() {
            if self.mu[c] > 0.0 {
                xs.push(self.cell_center(c));
                vs.push(self.velocity(c));
                ws.push(self.mu[c] * h);
            }
        }
        let total: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= total);
        ParticleEnsemble::new(1, xs, vs, ws)
    }

    /// Phase-space quadrature cloud `{(x_c, u_c), mu_c h}` of the graph
    /// measure `mu(x) delta(v - u(x))`.
    pub fn graph_cloud(&self) -> Result<PointCloud> {
        let e = self.cell_ensemble()?;
        Ok(PointCloud::phase(&e))
    }
}

fn density_value(spec: &Density1d, x: f64) -> f64 {
    match spec {
        Density1d::Uniform { center, half_width } => {
            if (x - center).abs() <= *half_width {
                1.0
            } else {
                0.0
            }
        }
        Density1d::Bump { center, radius } => {
            let s2 = ((x - center) / radius).powi(2);
            if s2 >= 1.0 {
                0.0
            } else {
                (1.0 - s2) * (1.0 - s2)
            }
        }
        Density1d::Point { .. } => 0.0,
    }
}

/// One finite-volume step. Errors on CFL violation, negative density
/// beyond roundoff, and at the first crossing indicator.
pub fn euler_step(
    state: &EulerState,
    dt: f64,
    kernel: &AlignmentKernel,
    bump: &BumpSource,
    eta: f64,
    force: &ExternalForce,
) -> Result<EulerState> {
    let m = state.cells();
    let h = state.spacing();
    let umax = state.max_speed();
    let cfl = dt * umax / h;
    if cfl > CFL_LIMIT {
        return Err(Error::CflViolation {
            number: cfl,
            limit: CFL_LIMIT,
        });
    }
    let slope = state.max_velocity_slope();
    let slope_limit = 1.0 / (10.0 * dt);
    if slope > slope_limit {
        return Err(Error::CrossingDetected {
            t: state.time,
            slope,
            limit: slope_limit,
        });
    }

    // local Lax-Friedrichs fluxes for (mu, q)
    let u: Vec<f64> = (0..m).map(|c| state.velocity(c)).collect();
    let mut flux_mu = vec![0.0; m]; // flux at interface c+1/2
    let mut flux_q = vec![0.0; m];
    for c in 0..m {
        let cn = (c + 1) % m;
        let a = u[c].abs().max(u[cn].abs());
        let f_mu_l = state.q[c];
        let f_mu_r = state.q[cn];
        let f_q_l = state.q[c] * u[c];
        let f_q_r = state.q[cn] * u[cn];
        flux_mu[c] = 0.5 * (f_mu_l + f_mu_r) - 0.5 * a * (state.mu[cn] - state.mu[c]);
        flux_q[c] = 0.5 * (f_q_l + f_q_r) - 0.5 * a * (state.q[cn] - state.q[c]);
    }
    let lam = dt / h;
    let mut mu_new = vec![0.0; m];
    let mut q_new = vec![0.0; m];
    for c in 0..m {
        let cp = (c + m - 1) % m;
        mu_new[c] = state.mu[c] - lam * (flux_mu[c] - flux_mu[cp]);
        q_new[c] = state.q[c] - lam * (flux_q[c] - flux_q[cp]);
        if mu_new[c] < -1e-12 {
            return Err(Error::NegativeDensity {
                value: mu_new[c],
                cell: c,
            });
        }
        if mu_new[c] < 0.0 {
            mu_new[c] = 0.0;
        }
    }

    // source terms on the post-flux state under the frozen field:
    // q += dt mu (nonlocal alignment + eta d psi/dx + F)
    let mut post = EulerState {
        half_width: state.half_width,
        mu: mu_new,
        q: q_new,
        psi: state.psi.clone(),
        time: state.time,
    };
    let n_src: Vec<usize> = (0..m).filter(|&c| post.mu[c] > 0.0).collect();
    if !n_src.is_empty() {
        let src_x: Vec<f64> = n_src.iter().map(|&c| post.cell_center(c)).collect();
        let src_v: Vec<f64> = n_src.iter().map(|&c| post.velocity(c)).collect();
        let src_w: Vec<f64> = n_src.iter().map(|&c| post.mu[c] * h).collect();
        let eval_x: Vec<f64> = (0..m).map(|c| post.cell_center(c)).collect();
        let eval_v: Vec<f64> = (0..m).map(|c| post.velocity(c)).collect();
        let mut accel = vec![0.0; m];
        force_field_at(
            1,
            &src_x,
            &src_v,
            &src_w,
            &eval_x,
            &eval_v,
            kernel,
            force,
            eta,
            Some(&post.psi),
            &mut accel,
        );
        for c in 0..m {
            post.q[c] += dt * post.mu[c] * accel[c];
        }
    }

    // chemical field step driven by chi * mu
    let cell_cloud = post.cell_ensemble()?;
    post.psi = post.psi.field_step(&cell_cloud, bump, dt)?;
    post.time = state.time + dt;
    Ok(post)
}

/// Integrates to `horizon` with uniform steps landing exactly on it.
pub fn euler_run(
    mut state: EulerState,
    dt: f64,
    horizon: f64,
    kernel: &AlignmentKernel,
    bump: &BumpSource,
    eta: f64,
    force: &ExternalForce,
) -> Result<EulerState> {
    if horizon <= 0.0 {
        return Ok(state);
    }
    let n_steps = (horizon / dt).round().max(1.0) as u64;
    let dt_eff = horizon / n_steps as f64;
    for _ in 0..n_steps {
        state = euler_step(&state, dt_eff, kernel, bump, eta, force)?;
    }
    Ok(state)
}

/// iid monokinetic sample: `x_i ~ mu`, `v_i = u(x_i)`, uniform weights.
pub fn monokinetic_sample(
    mu: &Density1d,
    u: &VelocityField,
    n: usize,
    seed: u64,
) -> Result<ParticleEnsemble> {
    use rand::Rng;
    let mut xs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = particle_stream(seed, 0, i as u64);
        let x = mu.inverse_cdf(rng.gen::<f64>());
        xs.push(x);
        vs.push(u.eval(x));
    }
    ParticleEnsemble::uniform(1, xs, vs)
}

/// Phase-space W2 between a particle ensemble and the Euler graph measure
/// `mu^t(x) delta(v - u^t(x))`.
pub fn monokinetic_distance(ensemble: &ParticleEnsemble, state: &EulerState) -> Result<f64> {
    let cloud = PointCloud::phase(ensemble);
    let graph = state.graph_cloud()?;
    let (d, _) = w2_weighted(&cloud, &graph)?;
    Ok(d)
}

#[cfg(test)]
mod tests;
