//! Quantitative studies confronting the implemented dynamics with the
//! convergence-rate and stability estimates: empirical-measure rates,
//! mean-field rates, the chemical-gradient gap, Dobrushin stability, and
//! the symmetrized-delta marginal identity.

mod dobrushin;
mod lemmas;
mod rates;

pub use dobrushin::{dobrushin_experiment, jittered_cloud, DobrushinSample};
pub use lemmas::{marginal_lemma_check, MarginalReport};
pub use rates::{
    chem_gap_experiment, fg_rate_experiment, meanfield_experiment, RateExperimentOutput,
};

use crate::io::output::{fmt_f64, CsvTable};
use crate::model::rate_cd;
use crate::{Error, Result};

/// One row of a rate study.
#[derive(Debug, Clone, Copy)]
pub struct RateRow {
    pub n: usize,
    pub replicates: usize,
    /// Mean squared distance (or squared sup gap) across replicates.
    pub mean_sq: f64,
    /// Standard error of the mean.
    pub std_err: f64,
}

/// Measured N-dependence of a squared Wasserstein (or gap) statistic with
/// its fitted log-log slope.
#[derive(Debug, Clone)]
pub struct RateTable {
    pub experiment: String,
    pub dim: usize,
    pub rows: Vec<RateRow>,
    pub slope: f64,
    pub slope_stderr: f64,
    pub intercept: f64,
    /// Slope of the printed rate shape over the same N (for reference).
    pub theory_slope: f64,
}

impl RateTable {
    /// Builds a table and fits the slope; enforces strictly increasing N
    /// and positive means.
    pub fn from_rows(experiment: &str, dim: usize, rows: Vec<RateRow>) -> Result<Self> {
        for w in rows.windows(2) {
            if w[1].n <= w[0].n {
                return Err(Error::Experiment("rate rows must have increasing N".into()));
            }
        }
        if rows.iter().any(|r| !(r.mean_sq > 0.0)) {
            return Err(Error::Experiment("rate means must be positive".into()));
        }
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| ((r.n as f64).ln(), r.mean_sq.ln()))
            .collect();
        let (slope, slope_stderr, intercept) = fit_slope(&pts)?;
        let tpts: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| Ok(((r.n as f64).ln(), rate_cd(r.n, dim)?.ln())))
            .collect::<Result<_>>()?;
        let (theory_slope, _, _) = fit_slope(&tpts)?;
        Ok(Self {
            experiment: experiment.to_string(),
            dim,
            rows,
            slope,
            slope_stderr,
            intercept,
            theory_slope,
        })
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].mean_sq < w[0].mean_sq)
    }

    /// Smallest constant making `mean <= C * rate_cd(N)` hold on every row,
    /// with the N attaining it.
    pub fn fitted_constant(&self) -> Result<(f64, usize)> {
        let mut best = (0.0f64, 0usize);
        for r in &self.rows {
            let c = r.mean_sq / rate_cd(r.n, self.dim)?;
            if c > best.0 {
                best = (c, r.n);
            }
        }
        Ok(best)
    }

    /// Constant anchored at the largest N: `mean(N_max) / rate_cd(N_max)`.
    pub fn constant_anchored_at_largest(&self) -> Result<f64> {
        let last = self.rows.last().ok_or_else(|| Error::Experiment("empty table".into()))?;
        Ok(last.mean_sq / rate_cd(last.n, self.dim)?)
    }

    /// Checks `mean(N) <= C * rate_cd(N)` for all rows with the given C.
    pub fn bounded_by(&self, c: f64) -> Result<bool> {
        for r in &self.rows {
            if r.mean_sq > c * rate_cd(r.n, self.dim)? * (1.0 + 1e-12) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(
            &self.experiment,
            &["n", "replicates", "mean_sq", "std_err", "rate_cd"],
        );
        for r in &self.rows {
            t.push_row(vec![
                r.n.to_string(),
                r.replicates.to_string(),
                fmt_f64(r.mean_sq),
                fmt_f64(r.std_err),
                fmt_f64(rate_cd(r.n, self.dim).unwrap_or(f64::NAN)),
            ]);
        }
        t
    }
}

/// Ordinary least squares on `(x, y)` points; returns
/// `(slope, slope standard error, intercept)`. Fewer than 3 points is a
/// hard error.
pub fn fit_slope(pts: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = pts.len();
    if n < 3 {
        return Err(Error::Experiment(format!(
            "slope fit needs at least 3 points, got {n}"
        )));
    }
    let nf = n as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let mx = sx / nf;
    let my = sy / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Experiment("degenerate abscissas in slope fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| {
            let r = p.1 - (intercept + slope * p.0);
            r * r
        })
        .sum();
    let stderr = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok((slope, stderr, intercept))
}

/// Mean and standard error of a sample.
pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_power_law_slope() {
        let pts: Vec<(f64, f64)> = (4..12)
            .map(|k| {
                let n = (1usize << k) as f64;
                (n.ln(), (n.powf(-0.5)).ln())
            })
            .collect();
        let (slope, stderr, _) = fit_slope(&pts).unwrap();
        assert_abs_diff_eq!(slope, -0.5, epsilon = 1e-12);
        assert!(stderr < 1e-12);
    }

    #[test]
    fn constant_column_slope_zero() {
        let pts: Vec<(f64, f64)> = (1..=6).map(|k| ((k as f64).ln(), 3.7)).collect();
        let (slope, _, _) = fit_slope(&pts).unwrap();
        assert_abs_diff_eq!(slope, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn noisy_power_law_recovered() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<(f64, f64)> = (4..14)
            .map(|k| {
                let n = (1usize << k) as f64;
                let noise = 1.0 + rng.gen_range(-0.05..0.05);
                (n.ln(), (noise / n).ln())
            })
            .collect();
        let (slope, _, _) = fit_slope(&pts).unwrap();
        assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
    }

    #[test]
    fn too_few_rows_rejected() {
        assert!(fit_slope(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
    }
}
