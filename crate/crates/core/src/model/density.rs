use serde::{Deserialize, Serialize};

use crate::io::rng::particle_stream;
use crate::{Error, Result};

use super::ParticleEnsemble;

/// One-dimensional compactly supported density used as a factor of initial
/// measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Density1d {
    Uniform { center: f64, half_width: f64 },
    /// Normalized quartic bump `(1 - (x-c)^2/r^2)^2` restricted to its
    /// support.
    Bump { center: f64, radius: f64 },
    Point { at: f64 },
}

impl Density1d {
    pub fn support(&self) -> (f64, f64) {
        match self {
            Density1d::Uniform { center, half_width } => {
                (center - half_width, center + half_width)
            }
            Density1d::Bump { center, radius } => (center - radius, center + radius),
            Density1d::Point { at } => (*at, *at),
        }
    }

    /// Unnormalized density value (normalization handled by quadrature).
    fn raw(&self, x: f64) -> f64 {
        match self {
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

    /// Inverse CDF at `u` in [0, 1); exact for uniform and point masses,
    /// bisection on the closed-form CDF for the bump.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        match self {
            Density1d::Uniform { center, half_width } => {
                center - half_width + 2.0 * half_width * u
            }
            Density1d::Point { at } => *at,
            Density1d::Bump { center, radius } => {
                // CDF on s in [-1,1]: (s - 2s^3/3 + s^5/5 + 8/15) / (16/15).
                let target = u;
                let (mut lo, mut hi) = (-1.0f64, 1.0f64);
                for _ in 0..64 {
                    let mid = 0.5 * (lo + hi);
                    let cdf =
                        (mid - 2.0 * mid.powi(3) / 3.0 + mid.powi(5) / 5.0 + 8.0 / 15.0) / (16.0 / 15.0);
                    if cdf < target {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                center + radius * 0.5 * (lo + hi)
            }
        }
    }

    /// Midpoint-rule quadrature: `m` nodes with weights proportional to the
    /// density, normalized to sum exactly to the node-weight total.
    pub fn quadrature(&self, m: usize) -> (Vec<f64>, Vec<f64>) {
        if let Density1d::Point { at } = self {
            return (vec![*at], vec![1.0]);
        }
        let (lo, hi) = self.support();
        let h = (hi - lo) / m as f64;
        let nodes: Vec<f64> = (0..m).map(|i| lo + (i as f64 + 0.5) * h).collect();
        let mut weights: Vec<f64> = nodes.iter().map(|&x| self.raw(x)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        (nodes, weights)
    }

    pub fn is_point(&self) -> bool {
        matches!(self, Density1d::Point { .. })
    }
}

/// Smooth velocity profile for monokinetic data `v = u(x)` (d = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum VelocityField {
    Zero,
    /// `u(x) = offset + slope x`.
    Affine { offset: f64, slope: f64 },
    /// `u(x) = amplitude sin(wavenumber x)`.
    Sine { amplitude: f64, wavenumber: f64 },
}

impl VelocityField {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            VelocityField::Zero => 0.0,
            VelocityField::Affine { offset, slope } => offset + slope * x,
            VelocityField::Sine {
                amplitude,
                wavenumber,
            } => amplitude * (wavenumber * x).sin(),
        }
    }
}

/// Initial phase-space measure specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Product measure: every position axis iid from `x`, every velocity
    /// axis iid from `v`.
    Product { x: Density1d, v: Density1d },
    /// `mu(x) delta(v - u(x))` (d = 1).
    Monokinetic { mu: Density1d, u: VelocityField },
    /// Explicit weighted cloud.
    Cloud {
        positions: Vec<f64>,
        velocities: Vec<f64>,
        weights: Vec<f64>,
    },
}

impl InitialSpec {
    /// Draws `n` iid particles with uniform weights. Each particle consumes
    /// its own counter-keyed stream, so the draw is independent of ordering
    /// and parallelism.
    pub fn sample(&self, dim: usize, n: usize, seed: u64, replicate: u64) -> Result<ParticleEnsemble> {
        use rand::Rng;
        let mut xs = Vec::with_capacity(n * dim);
        let mut vs = Vec::with_capacity(n * dim);
        match self {
            InitialSpec::Product { x, v } => {
                for i in 0..n {
                    let mut rng = particle_stream(seed, replicate, i as u64);
                    for _ in 0..dim {
                        xs.push(x.inverse_cdf(rng.gen::<f64>()));
                    }
                    for _ in 0..dim {
                        vs.push(v.inverse_cdf(rng.gen::<f64>()));
                    }
                }
            }
            InitialSpec::Monokinetic { mu, u } => {
                if dim != 1 {
                    return Err(Error::domain("monokinetic initial data is 1-d"));
                }
                for i in 0..n {
                    let mut rng = particle_stream(seed, replicate, i as u64);
                    let x = mu.inverse_cdf(rng.gen::<f64>());
                    xs.push(x);
                    vs.push(u.eval(x));
                }
            }
            InitialSpec::Cloud {
                positions,
                velocities,
                weights,
            } => {
                // iid draws from the discrete measure by inverse CDF on the
                // weight vector.
                let cum: Vec<f64> = weights
                    .iter()
                    .scan(0.0, |acc, w| {
                        *acc += w;
                        Some(*acc)
                    })
                    .collect();
                for i in 0..n {
                    let mut rng = particle_stream(seed, replicate, i as u64);
                    let u: f64 = rng.gen();
                    let k = cum.partition_point(|&c| c < u).min(weights.len() - 1);
                    xs.extend_from_slice(&positions[k * dim..(k + 1) * dim]);
                    vs.extend_from_slice(&velocities[k * dim..(k + 1) * dim]);
                }
            }
        }
        ParticleEnsemble::uniform(dim, xs, vs)
    }

    /// Deterministic weighted quadrature cloud with roughly `target` atoms.
    /// Degenerate (point-mass) axes carry a single node.
    pub fn quadrature(&self, dim: usize, target: usize) -> Result<ParticleEnsemble> {
        match self {
            InitialSpec::Product { x, v } => {
                let active_x = if x.is_point() { 0 } else { dim };
                let active_v = if v.is_point() { 0 } else { dim };
                let active = (active_x + active_v).max(1);
                let per_axis = (target as f64).powf(1.0 / active as f64).round() as usize;
                let per_axis = per_axis.max(1);
                let (xn, xw) = x.quadrature(if x.is_point() { 1 } else { per_axis });
                let (vn, vw) = v.quadrature(if v.is_point() { 1 } else { per_axis });
                product_cloud(dim, &xn, &xw, &vn, &vw)
            }
            InitialSpec::Monokinetic { mu, u } => {
                if dim != 1 {
                    return Err(Error::domain("monokinetic initial data is 1-d"));
                }
                let (xn, xw) = mu.quadrature(target);
                let vn: Vec<f64> = xn.iter().map(|&x| u.eval(x)).collect();
                ParticleEnsemble::new(1, xn, vn, xw)
            }
            InitialSpec::Cloud {
                positions,
                velocities,
                weights,
            } => ParticleEnsemble::new(dim, positions.clone(), velocities.clone(), weights.clone()),
        }
    }

    /// Radius of the smallest centered phase ball containing the support.
    pub fn support_radius(&self, dim: usize) -> f64 {
        match self {
            InitialSpec::Product { x, v } => {
                let (xl, xh) = x.support();
                let (vl, vh) = v.support();
                let mx = xl.abs().max(xh.abs());
                let mv = vl.abs().max(vh.abs());
                ((dim as f64) * (mx * mx + mv * mv)).sqrt()
            }
            InitialSpec::Monokinetic { mu, u } => {
                let (lo, hi) = mu.support();
                (0..=512)
                    .map(|k| {
                        let x = lo + (hi - lo) * k as f64 / 512.0;
                        let v = u.eval(x);
                        (x * x + v * v).sqrt()
                    })
                    .fold(0.0, f64::max)
            }
            InitialSpec::Cloud {
                positions,
                velocities,
                weights,
            } => {
                let n = weights.len();
                (0..n)
                    .map(|i| {
                        let x2: f64 = positions[i * dim..(i + 1) * dim].iter().map(|a| a * a).sum();
                        let v2: f64 = velocities[i * dim..(i + 1) * dim].iter().map(|a| a * a).sum();
                        (x2 + v2).sqrt()
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    /// Second moment `integral (|x|^2 + |v|^2) d rho`, evaluated on a fine
    /// quadrature.
    pub fn second_moment(&self, dim: usize) -> Result<f64> {
        let q = self.quadrature(dim, 4096)?;
        let mut m2 = 0.0;
        for i in 0..q.len() {
            let x2: f64 = q.position(i).iter().map(|a| a * a).sum();
            let v2: f64 = q.velocity(i).iter().map(|a| a * a).sum();
            m2 += q.weights()[i] * (x2 + v2);
        }
        Ok(m2)
    }
}

fn product_cloud(
    dim: usize,
    xn: &[f64],
    xw: &[f64],
    vn: &[f64],
    vw: &[f64],
) -> Result<ParticleEnsemble> {
    // Tensor the per-axis rules over `dim` position axes and `dim` velocity
    // axes. For d = 1 this is the (x, v) grid; higher d multiplies counts.
    let mut axes_nodes: Vec<&[f64]> = Vec::new();
    let mut axes_weights: Vec<&[f64]> = Vec::new();
    for _ in 0..dim {
        axes_nodes.push(xn);
        axes_weights.push(xw);
    }
    for _ in 0..dim {
        axes_nodes.push(vn);
        axes_weights.push(vw);
    }
    let total: usize = axes_nodes.iter().map(|a| a.len()).product();
    let mut pos = Vec::with_capacity(total * dim);
    let mut vel = Vec::with_capacity(total * dim);
    let mut wts = Vec::with_capacity(total);
    let mut idx = vec![0usize; 2 * dim];
    for _ in 0..total {
        let mut w = 1.0;
        for (a, &i) in idx.iter().enumerate() {
            w *= axes_weights[a][i];
        }
        for a in 0..dim {
            pos.push(axes_nodes[a][idx[a]]);
        }
        for a in 0..dim {
            vel.push(axes_nodes[dim + a][idx[dim + a]]);
        }
        wts.push(w);
        // odometer increment
        for a in (0..2 * dim).rev() {
            idx[a] += 1;
            if idx[a] < axes_nodes[a].len() {
                break;
            }
            idx[a] = 0;
        }
    }
    let total_w: f64 = wts.iter().sum();
    wts.iter_mut().for_each(|w| *w /= total_w);
    ParticleEnsemble::new(dim, pos, vel, wts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_inverse_cdf_is_affine() {
        let d = Density1d::Uniform {
            center: 0.5,
            half_width: 0.5,
        };
        assert_abs_diff_eq!(d.inverse_cdf(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d.inverse_cdf(0.5), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.inverse_cdf(1.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn bump_inverse_cdf_hits_median_at_center() {
        let d = Density1d::Bump {
            center: 2.0,
            radius: 0.5,
        };
        assert_abs_diff_eq!(d.inverse_cdf(0.5), 2.0, epsilon = 1e-12);
        // Monotone
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=20 {
            let x = d.inverse_cdf(k as f64 / 20.0);
            assert!(x >= prev);
            prev = x;
        }
    }

    #[test]
    fn sampling_is_reproducible_and_in_support() {
        let spec = InitialSpec::Product {
            x: Density1d::Uniform {
                center: 0.0,
                half_width: 0.5,
            },
            v: Density1d::Uniform {
                center: 0.0,
                half_width: 0.25,
            },
        };
        let a = spec.sample(1, 64, 9, 0).unwrap();
        let b = spec.sample(1, 64, 9, 0).unwrap();
        assert_eq!(a, b);
        let c = spec.sample(1, 64, 9, 1).unwrap();
        assert_ne!(a, c);
        assert!(a.positions().iter().all(|x| x.abs() <= 0.5));
        assert!(a.velocities().iter().all(|v| v.abs() <= 0.25));
    }

    #[test]
    fn quadrature_weights_normalized() {
        let spec = InitialSpec::Product {
            x: Density1d::Bump {
                center: 0.0,
                radius: 1.0,
            },
            v: Density1d::Uniform {
                center: 0.0,
                half_width: 0.5,
            },
        };
        let q = spec.quadrature(1, 1024).unwrap();
        let s: f64 = q.weights().iter().sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        assert_eq!(q.len(), 32 * 32);
    }

    #[test]
    fn degenerate_velocity_axis_collapses() {
        let spec = InitialSpec::Product {
            x: Density1d::Uniform {
                center: 0.5,
                half_width: 0.5,
            },
            v: Density1d::Point { at: 0.0 },
        };
        let q = spec.quadrature(1, 512).unwrap();
        assert_eq!(q.len(), 512);
        assert!(q.velocities().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn monokinetic_sampling_puts_v_on_graph() {
        let spec = InitialSpec::Monokinetic {
            mu: Density1d::Uniform {
                center: 0.0,
                half_width: 1.0,
            },
            u: VelocityField::Affine {
                offset: 0.0,
                slope: 1.0,
            },
        };
        let e = spec.sample(1, 32, 4, 0).unwrap();
        for i in 0..e.len() {
            assert_abs_diff_eq!(e.velocity(i)[0], e.position(i)[0], epsilon = 1e-15);
        }
    }

    #[test]
    fn product_uniform_second_moment() {
        // x, v ~ U[-1, 1]: E x^2 = E v^2 = 1/3, so M2 = 2/3.
        let spec = InitialSpec::Product {
            x: Density1d::Uniform {
                center: 0.0,
                half_width: 1.0,
            },
            v: Density1d::Uniform {
                center: 0.0,
                half_width: 1.0,
            },
        };
        let m2 = spec.second_moment(1).unwrap();
        assert_abs_diff_eq!(m2, 2.0 / 3.0, epsilon = 1e-3);
    }
}
