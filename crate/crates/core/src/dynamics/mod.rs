//! Particle system integration, the Vlasov dynamics as weighted-particle
//! characteristics, synchronously coupled pairs, and flow sensitivity.
//!
//! One step freezes the chemical field, advances the particles with
//! classical RK4 under the frozen field, then advances the field one
//! Duhamel step driven by the midpoint ensemble. With weights `1/N` this
//! integrates the particle system; with quadrature weights it integrates
//! the Vlasov characteristics, which is what makes the mean-field
//! comparisons possible with a single stepper.

mod coupling;
mod sensitivity;
mod vlasov;

pub use coupling::{coupled_pair_evolution, expand_plan, CouplingSample};
pub use sensitivity::flow_sensitivity;
pub use vlasov::{monokinetic_scatter, vlasov_reference};

use crate::fields::ChemGrid;
use crate::model::{
    AlignmentKernel, BoundConstants, BumpSource, ExternalForce, ParticleEnsemble, SimConfig,
};
use crate::par;
use crate::{Error, Result};

/// Everything needed to evaluate forces and bounds.
#[derive(Debug, Clone)]
pub struct Model {
    pub kernel: AlignmentKernel,
    pub bump: BumpSource,
    pub force: ExternalForce,
    pub eta: f64,
    pub constants: BoundConstants,
}

impl Model {
    pub fn from_config(cfg: &SimConfig) -> Result<Self> {
        Ok(Self {
            kernel: cfg.kernel()?,
            bump: cfg.bump()?,
            force: cfg.force(),
            eta: cfg.eta,
            constants: cfg.constants()?,
        })
    }
}

/// Joint particle/field state. Treating `(ensemble, grid)` together as the
/// state restores the flow property that the particle map alone lacks.
#[derive(Debug, Clone)]
pub struct SimState {
    pub time: f64,
    pub ensemble: ParticleEnsemble,
    pub grid: ChemGrid,
    pub step_count: u64,
    /// Initial max speed, anchor of the velocity envelope.
    pub vmax0: f64,
    /// Initial max phase norm, anchor of the support envelope.
    pub r0: f64,
}

impl SimState {
    pub fn new(ensemble: ParticleEnsemble, grid: ChemGrid) -> Self {
        let vmax0 = ensemble.max_speed();
        let r0 = ensemble.max_phase_norm();
        Self {
            time: 0.0,
            ensemble,
            grid,
            step_count: 0,
            vmax0,
            r0,
        }
    }
}

/// One per-step record of every monitored quantity and its bound.
#[derive(Debug, Clone, Copy)]
pub struct MonitorSample {
    pub time: f64,
    pub vmax: f64,
    pub vmax_bound: f64,
    pub zmax: f64,
    pub support_bound: f64,
    pub field_max: f64,
}

impl MonitorSample {
    pub fn velocity_slack(&self) -> f64 {
        self.vmax_bound - self.vmax
    }

    pub fn support_slack(&self) -> f64 {
        self.support_bound - self.zmax
    }
}

/// Discretization allowance on the theorem envelopes.
const MONITOR_SLACK: f64 = 0.01;

/// Evaluates the force field of `(kernel, field, force)` generated by the
/// source cloud `(src_x, src_v, weights)` at the evaluation points
/// `(eval_x, eval_v)`, writing accelerations into `out`.
///
/// The sum runs over all sources in index order for every evaluation point
/// (fixed-order reduction), so results do not depend on parallelism.
#[allow(clippy::too_many_arguments)]
pub fn force_field_at(
    dim: usize,
    src_x: &[f64],
    src_v: &[f64],
    weights: &[f64],
    eval_x: &[f64],
    eval_v: &[f64],
    kernel: &AlignmentKernel,
    force: &ExternalForce,
    eta: f64,
    grid: Option<&ChemGrid>,
    out: &mut [f64],
) {
    let n_src = weights.len();
    let cs1 = kernel.cs_sigma_one();
    par::for_each_chunk_mut(out, dim, |i, acc| {
        let xi = &eval_x[i * dim..(i + 1) * dim];
        let vi = &eval_v[i * dim..(i + 1) * dim];
        acc.iter_mut().for_each(|a| *a = 0.0);
        if let Some((beta, inv_r2)) = cs1 {
            if dim == 1 {
                let (xi, vi) = (xi[0], vi[0]);
                let mut s = 0.0;
                for j in 0..n_src {
                    let dx = xi - src_x[j];
                    let dv = vi - src_v[j];
                    s += weights[j] * dv / (1.0 + dx * dx * inv_r2);
                }
                acc[0] = -beta * s;
            } else {
                for j in 0..n_src {
                    let xj = &src_x[j * dim..(j + 1) * dim];
                    let vj = &src_v[j * dim..(j + 1) * dim];
                    let mut d2 = 0.0;
                    for k in 0..dim {
                        let t = xi[k] - xj[k];
                        d2 += t * t;
                    }
                    let w = -beta * weights[j] / (1.0 + d2 * inv_r2);
                    for k in 0..dim {
                        acc[k] += w * (vi[k] - vj[k]);
                    }
                }
            }
        } else if !kernel.is_zero() {
            let mut dv = [0.0f64; 3];
            let mut dx = [0.0f64; 3];
            let mut g = [0.0f64; 3];
            for j in 0..n_src {
                let xj = &src_x[j * dim..(j + 1) * dim];
                let vj = &src_v[j * dim..(j + 1) * dim];
                for k in 0..dim {
                    dx[k] = xi[k] - xj[k];
                    dv[k] = vi[k] - vj[k];
                }
                kernel.eval_into(&dv[..dim], &dx[..dim], &mut g[..dim]);
                for k in 0..dim {
                    acc[k] += weights[j] * g[k];
                }
            }
        }
        if eta != 0.0 {
            if let Some(grid) = grid {
                let mut g = [0.0f64; 3];
                grid.sample_gradient_into(xi, &mut g[..dim]);
                for k in 0..dim {
                    acc[k] += eta * g[k];
                }
            }
        }
        if !force.is_zero() {
            let mut g = [0.0f64; 3];
            force.eval_into(xi, &mut g[..dim]);
            for k in 0..dim {
                acc[k] += g[k];
            }
        }
    });
}

/// Accelerations of every particle of the ensemble under its own mean
/// field: the exact pairwise sum with weights, the chemical gradient, and
/// the external force. The self-term `j = i` contributes `gamma(0,0) = 0`
/// and is kept in the sum.
pub fn particle_rhs(
    ensemble: &ParticleEnsemble,
    kernel: &AlignmentKernel,
    grid: Option<&ChemGrid>,
    eta: f64,
    force: &ExternalForce,
) -> Vec<f64> {
    let dim = ensemble.dim();
    let mut out = vec![0.0; ensemble.len() * dim];
    force_field_at(
        dim,
        ensemble.positions(),
        ensemble.velocities(),
        ensemble.weights(),
        ensemble.positions(),
        ensemble.velocities(),
        kernel,
        force,
        eta,
        grid,
        &mut out,
    );
    out
}

/// One splitting step: RK4 for the particles under the frozen field, then
/// one field step driven by the midpoint ensemble. Deterministic; the
/// theorem monitors are re-checked on the result.
pub fn step(state: &SimState, model: &Model, dt: f64) -> Result<SimState> {
    let dim = state.ensemble.dim();
    let n = state.ensemble.len();
    let len = n * dim;
    let x0 = state.ensemble.positions();
    let v0 = state.ensemble.velocities();
    let w = state.ensemble.weights();
    let grid = Some(&state.grid);

    let eval = |x: &[f64], v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; len];
        force_field_at(
            dim, x, v, w, x, v, &model.kernel, &model.force, model.eta, grid, &mut out,
        );
        out
    };

    let a1 = eval(x0, v0);
    let mut x2 = vec![0.0; len];
    let mut v2 = vec![0.0; len];
    axpy(&mut x2, x0, v0, 0.5 * dt);
    axpy(&mut v2, v0, &a1, 0.5 * dt);
    let a2 = eval(&x2, &v2);
    let mut x3 = vec![0.0; len];
    let mut v3 = vec![0.0; len];
    axpy(&mut x3, x0, &v2, 0.5 * dt);
    axpy(&mut v3, v0, &a2, 0.5 * dt);
    let a3 = eval(&x3, &v3);
    let mut x4 = vec![0.0; len];
    let mut v4 = vec![0.0; len];
    axpy(&mut x4, x0, &v3, dt);
    axpy(&mut v4, v0, &a3, dt);
    let a4 = eval(&x4, &v4);

    let mut xn = vec![0.0; len];
    let mut vn = vec![0.0; len];
    for k in 0..len {
        xn[k] = x0[k] + dt / 6.0 * (v0[k] + 2.0 * v2[k] + 2.0 * v3[k] + v4[k]);
        vn[k] = v0[k] + dt / 6.0 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k]);
    }

    // Midpoint ensemble (stage-3 positions are midpoint-accurate) drives
    // the field source over this step.
    let mid = state.ensemble.with_state(x3, v3)?;
    let grid_new = state.grid.field_step(&mid, &model.bump, dt)?;

    let ensemble_new = state.ensemble.with_state(xn, vn)?;
    let new_state = SimState {
        time: state.time + dt,
        ensemble: ensemble_new,
        grid: grid_new,
        step_count: state.step_count + 1,
        vmax0: state.vmax0,
        r0: state.r0,
    };
    Ok(new_state)
}

fn axpy(out: &mut [f64], base: &[f64], rate: &[f64], dt: f64) {
    for k in 0..out.len() {
        out[k] = base[k] + dt * rate[k];
    }
}

/// Checks the velocity and support envelopes (theorems, so violations
/// beyond the 1% discretization slack abort the run) and records the
/// monitored sample.
pub fn check_invariants(state: &SimState, model: &Model) -> Result<MonitorSample> {
    let consts = &model.constants;
    let t = state.time;
    let vmax = state.ensemble.max_speed();
    let vmax_bound = consts.velocity_envelope(state.vmax0, t) * (1.0 + MONITOR_SLACK);
    let zmax = state.ensemble.max_phase_norm();
    let support_bound = consts.support_radius_monitor(state.r0, t) * (1.0 + MONITOR_SLACK);
    let field_max = state.grid.max_abs();
    let sample = MonitorSample {
        time: t,
        vmax,
        vmax_bound,
        zmax,
        support_bound,
        field_max,
    };
    if vmax > vmax_bound {
        return Err(Error::InvariantViolated {
            name: "velocity envelope",
            t,
            value: vmax,
            bound: vmax_bound,
        });
    }
    if zmax > support_bound {
        return Err(Error::InvariantViolated {
            name: "support envelope",
            t,
            value: zmax,
            bound: support_bound,
        });
    }
    if !model.kernel.is_zero() && 2.0 * zmax > model.kernel.probe_radius() {
        return Err(Error::InvariantViolated {
            name: "kernel probe ball",
            t,
            value: 2.0 * zmax,
            bound: model.kernel.probe_radius(),
        });
    }
    if !field_max.is_finite() {
        return Err(Error::InvariantViolated {
            name: "field finiteness",
            t,
            value: field_max,
            bound: f64::INFINITY,
        });
    }
    Ok(sample)
}

/// A recorded run: reported states plus the per-step monitor series.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<SimState>,
    pub monitors: Vec<MonitorSample>,
}

impl Trajectory {
    pub fn final_state(&self) -> &SimState {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn min_velocity_slack(&self) -> f64 {
        self.monitors
            .iter()
            .map(MonitorSample::velocity_slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_support_slack(&self) -> f64 {
        self.monitors
            .iter()
            .map(MonitorSample::support_slack)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Integrates an initial state to `horizon`, recording states every
/// `report_dt` and monitors every step. The step count is
/// `round(horizon/dt)` so the last step lands exactly on the horizon.
pub fn run(
    mut state: SimState,
    model: &Model,
    dt: f64,
    horizon: f64,
    report_dt: f64,
) -> Result<Trajectory> {
    let mut monitors = Vec::new();
    let mut states = Vec::new();
    monitors.push(check_invariants(&state, model)?);
    states.push(state.clone());
    if horizon <= 0.0 {
        return Ok(Trajectory { states, monitors });
    }
    let n_steps = (horizon / dt).round().max(1.0) as u64;
    let dt_eff = horizon / n_steps as f64;
    let report_every = (report_dt / dt_eff).round().max(1.0) as u64;
    for k in 1..=n_steps {
        state = step(&state, model, dt_eff)?;
        monitors.push(check_invariants(&state, model)?);
        if k % report_every == 0 || k == n_steps {
            states.push(state.clone());
        }
    }
    Ok(Trajectory { states, monitors })
}

/// Full simulation from a config: samples the initial ensemble for the
/// given replicate, builds the field, and integrates to the horizon.
pub fn simulate(cfg: &SimConfig, replicate: u64) -> Result<Trajectory> {
    let model = Model::from_config(cfg)?;
    let ensemble = cfg
        .initial
        .sample(cfg.dim, cfg.particles, cfg.seed, replicate)?;
    let grid = cfg.chem_grid()?;
    let state = SimState::new(ensemble, grid);
    run(state, &model, cfg.dt, cfg.horizon, cfg.report_dt())
}

#[cfg(test)]
mod tests;
