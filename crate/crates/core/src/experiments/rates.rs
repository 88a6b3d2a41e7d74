//! Empirical-measure, mean-field, and chemical-gradient rate studies.

use crate::dynamics::{run, vlasov_reference, Model, SimState, Trajectory};
use crate::model::{InitialSpec, SimConfig};
use crate::par;
use crate::transport::{w2_weighted, PointCloud};
use crate::{Error, Result};

use super::{mean_stderr, RateRow, RateTable};

/// A rate table plus run-level evidence: the worst monitor slacks seen
/// across every replicate, and the quadrature floor when one was measured.
#[derive(Debug, Clone)]
pub struct RateExperimentOutput {
    pub table: RateTable,
    pub min_velocity_slack: f64,
    pub min_support_slack: f64,
    pub quadrature_floor: Option<f64>,
}

/// Empirical-measure convergence: for each `N`, draws `reps` iid clouds
/// from the initial measure and averages the squared phase-space W2 to a
/// fine quadrature cloud of the same measure.
pub fn fg_rate_experiment(
    spec: &InitialSpec,
    dim: usize,
    ns: &[usize],
    reps: usize,
    seed: u64,
    quadrature_size: usize,
) -> Result<RateExperimentOutput> {
    if ns.is_empty() || reps == 0 {
        return Err(Error::Experiment("need at least one N and one replicate".into()));
    }
    let reference = PointCloud::phase(&spec.quadrature(dim, quadrature_size)?);
    let finer = PointCloud::phase(&spec.quadrature(dim, 4 * quadrature_size)?);
    let (floor, _) = w2_weighted(&reference, &finer)?;

    let mut rows = Vec::new();
    for &n in ns {
        let sq: Vec<f64> = par::map_indexed(reps, |r| {
            let cloud = spec
                .sample(dim, n, seed, r as u64)
                .expect("sampling from a validated spec");
            let phase = PointCloud::phase(&cloud);
            let (d, _) = w2_weighted(&phase, &reference).expect("exact OT solve");
            d * d
        });
        let (mean, se) = mean_stderr(&sq);
        rows.push(RateRow {
            n,
            replicates: reps,
            mean_sq: mean,
            std_err: se,
        });
    }
    let table = RateTable::from_rows("rates_fg", dim, rows)?;

    let smallest_distance = table
        .rows
        .iter()
        .map(|r| r.mean_sq.sqrt())
        .fold(f64::INFINITY, f64::min);
    if floor > 0.1 * smallest_distance {
        return Err(Error::Experiment(format!(
            "quadrature floor {floor:.3e} exceeds 10% of the smallest measured \
             distance {smallest_distance:.3e}; increase the quadrature size"
        )));
    }
    Ok(RateExperimentOutput {
        table,
        min_velocity_slack: f64::INFINITY,
        min_support_slack: f64::INFINITY,
        quadrature_floor: Some(floor),
    })
}

fn reference_trajectory(cfg: &SimConfig, m_ref: usize, ns: &[usize]) -> Result<Trajectory> {
    let max_n = ns.iter().copied().max().unwrap_or(0);
    if m_ref < 4 * max_n {
        return Err(Error::Experiment(format!(
            "reference quadrature M = {m_ref} must be at least 4 * max(N) = {}",
            4 * max_n
        )));
    }
    vlasov_reference(cfg, m_ref)
}

/// Mean-field convergence: squared phase-space W2 between the final
/// particle empirical cloud and the Vlasov reference cloud at the horizon,
/// averaged over replicates, for each N.
pub fn meanfield_experiment(
    cfg: &SimConfig,
    ns: &[usize],
    m_ref: usize,
    reps: usize,
) -> Result<RateExperimentOutput> {
    let reference = reference_trajectory(cfg, m_ref, ns)?;
    let ref_cloud = PointCloud::phase(&reference.final_state().ensemble);
    let model = Model::from_config(cfg)?;

    let mut rows = Vec::new();
    let mut min_v = reference.min_velocity_slack();
    let mut min_s = reference.min_support_slack();
    for &n in ns {
        let results: Vec<(f64, f64, f64)> = par::map_indexed(reps, |r| {
            let traj = simulate_replicate(cfg, &model, n, r as u64).expect("replicate run");
            let cloud = PointCloud::phase(&traj.final_state().ensemble);
            let (d, _) = w2_weighted(&cloud, &ref_cloud).expect("exact OT solve");
            (d * d, traj.min_velocity_slack(), traj.min_support_slack())
        });
        let sq: Vec<f64> = results.iter().map(|r| r.0).collect();
        for r in &results {
            min_v = min_v.min(r.1);
            min_s = min_s.min(r.2);
        }
        let (mean, se) = mean_stderr(&sq);
        rows.push(RateRow {
            n,
            replicates: reps,
            mean_sq: mean,
            std_err: se,
        });
    }
    Ok(RateExperimentOutput {
        table: RateTable::from_rows("rates_meanfield", cfg.dim, rows)?,
        min_velocity_slack: min_v,
        min_support_slack: min_s,
        quadrature_floor: None,
    })
}

/// Chemical-gradient gap: per replicate, the squared sup-norm gap between
/// the particle-driven field and the reference field at the horizon.
pub fn chem_gap_experiment(
    cfg: &SimConfig,
    ns: &[usize],
    m_ref: usize,
    reps: usize,
) -> Result<RateExperimentOutput> {
    let reference = reference_trajectory(cfg, m_ref, ns)?;
    let ref_grid = &reference.final_state().grid;
    let model = Model::from_config(cfg)?;

    let mut rows = Vec::new();
    let mut min_v = reference.min_velocity_slack();
    let mut min_s = reference.min_support_slack();
    for &n in ns {
        let results: Vec<(f64, f64, f64)> = par::map_indexed(reps, |r| {
            let traj = simulate_replicate(cfg, &model, n, r as u64).expect("replicate run");
            let gap = traj
                .final_state()
                .grid
                .grad_gap_sup(ref_grid)
                .expect("shared grid geometry");
            (gap * gap, traj.min_velocity_slack(), traj.min_support_slack())
        });
        let sq: Vec<f64> = results.iter().map(|r| r.0).collect();
        for r in &results {
            min_v = min_v.min(r.1);
            min_s = min_s.min(r.2);
        }
        let (mean, se) = mean_stderr(&sq);
        rows.push(RateRow {
            n,
            replicates: reps,
            mean_sq: mean,
            std_err: se,
        });
    }
    Ok(RateExperimentOutput {
        table: RateTable::from_rows("rates_chemgap", cfg.dim, rows)?,
        min_velocity_slack: min_v,
        min_support_slack: min_s,
        quadrature_floor: None,
    })
}

fn simulate_replicate(
    cfg: &SimConfig,
    model: &Model,
    n: usize,
    replicate: u64,
) -> Result<Trajectory> {
    let ensemble = cfg.initial.sample(cfg.dim, n, cfg.seed, replicate)?;
    let grid = cfg.chem_grid()?;
    run(
        SimState::new(ensemble, grid),
        model,
        cfg.dt,
        cfg.horizon,
        cfg.report_dt(),
    )
}
