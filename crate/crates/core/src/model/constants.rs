use crate::{Error, Result};

use super::{AlignmentKernel, BumpSource, ExternalForce};

/// Evaluators for every explicit constant appearing in the quantitative
/// estimates: the velocity-growth rate, flow-derivative rates, the
/// field-splitting constants L', M', K', the Gronwall exponent Gamma(t),
/// and the support growth rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundConstants {
    /// Lip(gamma) + Lip(grad chi); velocity bound rate.
    pub gamma0: f64,
    /// Lip(gamma).
    pub gamma1: f64,
    /// Lip(grad chi).
    pub gamma2: f64,
    /// Lip(gamma) + Lip(F_ext) + T eta Lip(grad chi), frozen at the horizon.
    pub l_prime: f64,
    /// Lip(gamma) + sup|F_ext| + eta Lip(chi) + Lip(grad phi_in).
    pub m_prime: f64,
    /// Lip(gamma) + eta Lip(chi).
    pub k_prime: f64,
    /// Support growth rate Lip(gamma) + sup|F_ext| + eta Lip(chi).
    pub c_r: f64,
    /// Horizon the T-dependent constants were evaluated at.
    pub horizon: f64,
}

impl BoundConstants {
    /// Assembles the constants from the model components at horizon `T`.
    ///
    /// `lip_grad_phi_in` is the Lipschitz constant of the initial chemical
    /// gradient; zero initial field (the default) contributes nothing.
    pub fn from_components(
        kernel: &AlignmentKernel,
        bump: &BumpSource,
        force: &ExternalForce,
        eta: f64,
        dim: usize,
        box_half_width: f64,
        lip_grad_phi_in: f64,
        horizon: f64,
    ) -> Self {
        let lip_gamma = kernel.lip();
        let lip_chi = bump.lip_chi();
        let lip_grad_chi = bump.lip_grad_chi();
        let lip_fext = force.lip(dim);
        let sup_fext = force.sup_on_box(dim, box_half_width);
        Self {
            gamma0: lip_gamma + lip_grad_chi,
            gamma1: lip_gamma,
            gamma2: lip_grad_chi,
            l_prime: lip_gamma + lip_fext + horizon * eta * lip_grad_chi,
            m_prime: lip_gamma + sup_fext + eta * lip_chi + lip_grad_phi_in,
            k_prime: lip_gamma + eta * lip_chi,
            c_r: lip_gamma + sup_fext + eta * lip_chi,
            horizon,
        }
    }

    /// All-zero constants (every coupling off).
    pub fn zeros() -> Self {
        Self {
            gamma0: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            l_prime: 0.0,
            m_prime: 0.0,
            k_prime: 0.0,
            c_r: 0.0,
            horizon: 0.0,
        }
    }

    /// Gronwall exponent `Gamma(t) = t (2 + 2 L'^2 + (2K')^2 e^{2t(1+L'^2)})`.
    pub fn gamma_of_t(&self, t: f64) -> f64 {
        let l2 = self.l_prime * self.l_prime;
        let k2 = 4.0 * self.k_prime * self.k_prime;
        t * (2.0 + 2.0 * l2 + k2 * (2.0 * t * (1.0 + l2)).exp())
    }

    /// Natural log of the Dobrushin factor `2 e^{Gamma(t)}`; the factor
    /// itself overflows f64 for realistic constants, so comparisons happen
    /// in log space.
    pub fn dobrushin_log_factor(&self, t: f64) -> f64 {
        std::f64::consts::LN_2 + self.gamma_of_t(t)
    }

    /// Coupling-evolution rate `L_1 = 2 (1 + L'^2)` that drives the D_N
    /// Gronwall envelope.
    pub fn coupling_rate(&self) -> f64 {
        2.0 * (1.0 + self.l_prime * self.l_prime)
    }

    /// Velocity envelope `vmax(0) e^{2 gamma0 t}`.
    pub fn velocity_envelope(&self, vmax0: f64, t: f64) -> f64 {
        vmax0 * (2.0 * self.gamma0 * t).exp()
    }

    /// Flow-derivative envelope `e^{(gamma1 + gamma2 T) t}`.
    pub fn flow_derivative_envelope(&self, t: f64) -> f64 {
        ((self.gamma1 + self.gamma2 * self.horizon) * t).exp()
    }

    /// Support envelope with the growth rate as printed.
    pub fn support_radius(&self, r0: f64, t: f64) -> f64 {
        support_radius(r0, t, self.c_r)
    }

    /// Support envelope used by the runtime monitors. The printed growth
    /// rate bounds only the force part of the phase-space speed; the
    /// kinematic `dx/dt = v` transport adds one, without which the envelope
    /// is violated already by free streaming.
    pub fn support_radius_monitor(&self, r0: f64, t: f64) -> f64 {
        support_radius(r0, t, 1.0 + self.c_r)
    }
}

/// Support radius envelope `R^t = e^{c t} (R^0 + c)` with growth rate `c`.
pub fn support_radius(r0: f64, t: f64, rate: f64) -> f64 {
    (rate * t).exp() * (r0 + rate)
}

/// Dimension-dependent empirical-measure rate shape:
/// `N^{-1/2}` (d = 1), `N^{-1/2} log N` (d = 2), `N^{-1/d}` (d > 2).
/// The prefactor is normalized to one and fitted by the experiments.
pub fn rate_cd(n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("rate_cd needs N >= 2, got {n}")));
    }
    if d == 0 {
        return Err(Error::domain("rate_cd needs d >= 1"));
    }
    let nf = n as f64;
    Ok(match d {
        1 => nf.powf(-0.5),
        2 => nf.powf(-0.5) * nf.ln(),
        _ => nf.powf(-1.0 / d as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_constants_give_linear_gamma() {
        // gamma = chi = F_ext = 0 -> L' = K' = M' = 0 and Gamma(t) = 2t.
        let c = BoundConstants::zeros();
        assert_abs_diff_eq!(c.gamma_of_t(1.7), 3.4, epsilon = 1e-15);
        assert_eq!(c.gamma_of_t(0.0), 0.0);
    }

    #[test]
    fn gamma_printed_arithmetic() {
        // L' = 1, K' = 1, t = 1 -> Gamma(1) = 2 + 2 + 4 e^4.
        let c = BoundConstants {
            gamma0: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            l_prime: 1.0,
            m_prime: 0.0,
            k_prime: 1.0,
            c_r: 0.0,
            horizon: 1.0,
        };
        assert_abs_diff_eq!(
            c.gamma_of_t(1.0),
            4.0 + 4.0 * 4.0f64.exp(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gamma_nondecreasing() {
        let c = BoundConstants {
            gamma0: 0.0,
            gamma1: 0.0,
            gamma2: 0.0,
            l_prime: 0.8,
            m_prime: 0.0,
            k_prime: 1.3,
            c_r: 0.0,
            horizon: 2.0,
        };
        let mut prev = 0.0;
        for k in 0..=50 {
            let t = 2.0 * k as f64 / 50.0;
            let g = c.gamma_of_t(t);
            assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn support_radius_examples() {
        assert_abs_diff_eq!(support_radius(0.7, 3.0, 0.0), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(
            support_radius(0.0, std::f64::consts::LN_2, 1.0),
            2.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(support_radius(1.0, 0.0, 1.0), 2.0, epsilon = 1e-15);
        // nondecreasing in both arguments
        assert!(support_radius(1.0, 0.5, 1.0) <= support_radius(1.0, 0.8, 1.0));
        assert!(support_radius(1.0, 0.5, 1.0) <= support_radius(1.2, 0.5, 1.0));
    }

    #[test]
    fn rate_cd_examples() {
        assert_abs_diff_eq!(rate_cd(16, 1).unwrap(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(rate_cd(8, 3).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(
            rate_cd(7, 2).unwrap(),
            7.0f64.ln() / 7.0f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(rate_cd(1, 1).is_err());
    }

    #[test]
    fn rate_cd_decreasing_from_eight() {
        for d in 1..=4 {
            let mut prev = rate_cd(8, d).unwrap();
            for n in 9..200 {
                let r = rate_cd(n, d).unwrap();
                assert!(r > 0.0);
                assert!(r < prev, "rate_cd not decreasing at N={n}, d={d}");
                prev = r;
            }
        }
    }

    #[test]
    fn rate_cd_loglog_slopes() {
        // Dyadic N: slope of log rate vs log N is -1/2 (d=1), -1/d (d>2),
        // and -1/2 up to the log factor for d=2.
        let ns: Vec<usize> = (6..14).map(|k| 1 << k).collect();
        for (d, want) in [(1usize, -0.5), (3, -1.0 / 3.0), (5, -0.2)] {
            let pts: Vec<(f64, f64)> = ns
                .iter()
                .map(|&n| ((n as f64).ln(), rate_cd(n, d).unwrap().ln()))
                .collect();
            let slope = ls_slope(&pts);
            assert_abs_diff_eq!(slope, want, epsilon = 1e-12);
        }
        // d = 2: remove the log factor analytically and the slope is -1/2.
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let nf = n as f64;
                (nf.ln(), (rate_cd(n, 2).unwrap() / nf.ln()).ln())
            })
            .collect();
        assert_abs_diff_eq!(ls_slope(&pts), -0.5, epsilon = 1e-12);
    }

    fn ls_slope(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}
