//! Lossy two-level loop around an exceptional point, integrated exactly.
//!
//! `H(g, δ) = [[0, g], [g, δ - iγ]]` has its EP at `g = γ/2, δ = 0`.
//! The loop mirrors the pulse contour: `g = g_max sin(φ/2)`,
//! `δ = δ₀ ± δ_r sin φ` with `φ = 2πt/T`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::expm_symmetric_2x2;
use crate::pulse::Orientation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossyLoop {
    /// Loss rate of the second bare state.
    pub gamma: f64,
    pub g_max: f64,
    pub delta0: f64,
    pub delta_r: f64,
    pub orientation: Orientation,
}

impl LossyLoop {
    /// Coupling and detuning at phase `φ`.
    pub fn point(&self, phase: f64) -> (f64, f64) {
        let sign = match self.orientation {
            Orientation::Clockwise => 1.0,
            Orientation::Counterclockwise => -1.0,
        };
        (
            (self.g_max * (0.5 * phase).sin()).max(0.0),
            self.delta0 + sign * self.delta_r * phase.sin(),
        )
    }

    /// `(g, δ)` of the exceptional point.
    pub fn exceptional_point(&self) -> (f64, f64) {
        (0.5 * self.gamma, 0.0)
    }

    /// Whether the loop winds around the EP.
    pub fn encloses_ep(&self) -> bool {
        let (g_ep, d_ep) = self.exceptional_point();
        // The loop crosses δ = δ₀ at g = 0 and g = g_max only; it encloses
        // the EP when the EP lies between the two lobes.
        g_ep < self.g_max
            && self.delta0 - self.delta_r.abs() < d_ep
            && d_ep < self.delta0 + self.delta_r.abs()
            && {
                // vertical extent of the loop at g = g_ep
                let phi = 2.0 * (g_ep / self.g_max).asin();
                let a = self.delta0 + self.delta_r * phi.sin();
                let b = self.delta0 + self.delta_r * (2.0 * PI - phi).sin();
                a.min(b) < d_ep && d_ep < a.max(b)
            }
    }

    fn matrix(&self, g: f64, delta: f64) -> [Complex64; 3] {
        [
            Complex64::new(0.0, 0.0),
            Complex64::new(delta, -self.gamma),
            Complex64::new(g, 0.0),
        ]
    }
}

/// Eigenpairs of `[[0, g], [g, δ - iγ]]`, less dissipative first.
///
/// Vectors are scaled to unit Hermitian norm.
pub fn lossy_eigen(g: f64, delta: f64, gamma: f64) -> ([Complex64; 2], [[Complex64; 2]; 2]) {
    let d = Complex64::new(delta, -gamma);
    let root = (d * d * 0.25 + g * g).sqrt();
    let mut values = [d * 0.5 + root, d * 0.5 - root];
    if values[1].im > values[0].im {
        values.swap(0, 1);
    }
    let vectors = values.map(|e| {
        // (H - e) x = 0 → x = (g, e) or (e - d, g) when g is tiny
        let v = if e.norm() >= (e - d).norm() {
            [Complex64::new(g, 0.0), e]
        } else {
            [e - d, Complex64::new(g, 0.0)]
        };
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        if n == 0.0 {
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
        } else {
            [v[0] / n, v[1] / n]
        }
    });
    (values, vectors)
}

/// Normalised weights on the instantaneous branches at the loop end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPopulations {
    pub less_dissipative: f64,
    pub more_dissipative: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopIntegration {
    pub final_state: [Complex64; 2],
    pub populations: BranchPopulations,
    /// `‖ψ(T)‖²`.
    pub norm: f64,
}

impl LoopIntegration {
    pub fn p_diss(&self) -> f64 {
        1.0 - self.norm
    }
}

/// Integrates `i dψ/dt = H(t) ψ` around the loop in `steps` exact 2×2
/// midpoint exponentials, starting on branch `start` (0 = less dissipative).
pub fn flip_asymmetry_model(
    lossy: &LossyLoop,
    duration: f64,
    start: usize,
    steps: usize,
) -> Result<LoopIntegration> {
    if start > 1 {
        return Err(Error::IndexOutOfRange {
            what: "branch",
            index: start,
            len: 2,
        });
    }
    if !(duration > 0.0) || steps == 0 {
        return Err(Error::Domain {
            quantity: "duration",
            value: duration,
            reason: "loop duration and step count must be positive",
        });
    }
    let (g0, d0) = lossy.point(0.0);
    let (_, vecs) = lossy_eigen(g0, d0, lossy.gamma);
    let mut psi = vecs[start];
    let dt = duration / steps as f64;
    for k in 0..steps {
        let phase = 2.0 * PI * (k as f64 + 0.5) / steps as f64;
        let (g, delta) = lossy.point(phase);
        let [a, b, c] = lossy.matrix(g, delta);
        let [u00, u01, u11] = expm_symmetric_2x2(a, b, c, dt);
        psi = [u00 * psi[0] + u01 * psi[1], u01 * psi[0] + u11 * psi[1]];
        if !psi[0].is_finite() || !psi[1].is_finite() {
            return Err(Error::Numerical {
                time: (k + 1) as f64 * dt,
                message: "two-level state is not finite".into(),
            });
        }
    }
    let norm = psi[0].norm_sqr() + psi[1].norm_sqr();
    let (g1, d1) = lossy.point(2.0 * PI);
    let (_, vecs) = lossy_eigen(g1, d1, lossy.gamma);
    // Biorthogonal coefficients: left eigenvectors of a complex-symmetric
    // matrix are the transposed right ones.
    let weights = vecs.map(|r| {
        let num = r[0] * psi[0] + r[1] * psi[1];
        let den = r[0] * r[0] + r[1] * r[1];
        (num / den).norm_sqr()
    });
    let total = weights[0] + weights[1];
    Ok(LoopIntegration {
        final_state: psi,
        populations: BranchPopulations {
            less_dissipative: weights[0] / total,
            more_dissipative: weights[1] / total,
        },
        norm,
    })
}

/// Widths `Γ = -2 Im E` along the loop for the branch that starts as
/// `start`, followed by eigenvalue continuity over `samples` points.
pub fn loop_branch_widths(
    lossy: &LossyLoop,
    duration: f64,
    start: usize,
    samples: usize,
) -> (Vec<f64>, Vec<f64>) {
    let samples = samples.max(2);
    let mut times = Vec::with_capacity(samples);
    let mut widths = Vec::with_capacity(samples);
    let (g, d) = lossy.point(0.0);
    let mut e = lossy_eigen(g, d, lossy.gamma).0[start.min(1)];
    for k in 0..samples {
        let frac = k as f64 / (samples - 1) as f64;
        let (g, d) = lossy.point(2.0 * PI * frac);
        let (vals, _) = lossy_eigen(g, d, lossy.gamma);
        e = if (vals[0] - e).norm() <= (vals[1] - e).norm() {
            vals[0]
        } else {
            vals[1]
        };
        times.push(frac * duration);
        widths.push(super::width_of(e));
    }
    (times, widths)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encircling() -> LossyLoop {
        LossyLoop {
            gamma: 1.0,
            g_max: 1.0,
            delta0: 0.0,
            delta_r: 1.0,
            orientation: Orientation::Clockwise,
        }
    }

    #[test]
    fn eigenpairs_solve_the_matrix() {
        for (g, d) in [(0.0, 0.3), (0.2, -0.4), (0.7, 0.0), (0.5, 1e-3)] {
            let (vals, vecs) = lossy_eigen(g, d, 1.0);
            assert!(vals[0].im >= vals[1].im);
            for (e, x) in vals.iter().zip(vecs) {
                let r0 = Complex64::new(g, 0.0) * x[1] - e * x[0];
                let r1 = Complex64::new(g, 0.0) * x[0] + (Complex64::new(d, -1.0) - e) * x[1];
                assert!(r0.norm() + r1.norm() < 1e-12, "{g} {d}");
            }
        }
    }

    #[test]
    fn ep_geometry() {
        assert!(encircling().encloses_ep());
        let small = LossyLoop {
            g_max: 0.3,
            ..encircling()
        };
        assert!(!small.encloses_ep());
        let shifted = LossyLoop {
            delta0: 3.0,
            ..encircling()
        };
        assert!(!shifted.encloses_ep());
        let (vals, _) = lossy_eigen(0.5, 0.0, 1.0);
        assert!((vals[0] - vals[1]).norm() < 1e-7);
    }

    #[test]
    fn loop_closes_at_zero_coupling() {
        let l = encircling();
        let (g, d) = l.point(2.0 * PI);
        assert!(g.abs() < 1e-15);
        assert!((d - l.delta0).abs() < 1e-12);
    }

    #[test]
    fn lossless_small_loop_returns_to_start() {
        let l = LossyLoop {
            gamma: 0.0,
            g_max: 0.05,
            delta0: 1.0,
            delta_r: 0.1,
            orientation: Orientation::Clockwise,
        };
        for start in 0..2 {
            let r = flip_asymmetry_model(&l, 400.0, start, 20_000).unwrap();
            let stay = if start == 0 {
                r.populations.less_dissipative
            } else {
                r.populations.more_dissipative
            };
            assert!(stay > 1.0 - 1e-4, "{start}: {r:?}");
            assert!((r.norm - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn slow_encircling_ends_on_less_dissipative_branch() {
        for orientation in [Orientation::Clockwise, Orientation::Counterclockwise] {
            let l = LossyLoop {
                orientation,
                ..encircling()
            };
            for start in 0..2 {
                let r = flip_asymmetry_model(&l, 100.0, start, 20_000).unwrap();
                assert!(r.populations.more_dissipative < 0.05, "{start}: {r:?}");
            }
        }
    }

    #[test]
    fn continuity_swaps_branches_only_around_the_ep() {
        let (_, w) = loop_branch_widths(&encircling(), 1.0, 0, 4001);
        assert!(w[0].abs() < 1e-12);
        assert!((w[4000] - 2.0).abs() < 1e-9, "{}", w[4000]);
        let outside = LossyLoop {
            g_max: 0.3,
            delta0: 2.0,
            ..encircling()
        };
        let (_, w) = loop_branch_widths(&outside, 1.0, 0, 4001);
        assert!(w[4000].abs() < 1e-9);
    }

    #[test]
    fn adiabatic_formula_holds_only_for_slow_loops() {
        let l = LossyLoop {
            gamma: 1.0,
            g_max: 0.3,
            delta0: 2.0,
            delta_r: 1.0,
            orientation: Orientation::Clockwise,
        };
        let compare = |t: f64| {
            let exact = flip_asymmetry_model(&l, t, 0, 20_000).unwrap().p_diss();
            let (ts, ws) = loop_branch_widths(&l, t, 0, 4001);
            let adiabatic = super::super::adiabatic_pdiss(&ts, &ws).unwrap();
            (adiabatic - exact).abs() / exact
        };
        assert!(compare(20.0) < 0.05);
        assert!(compare(1.0) > 0.2);
    }

    #[test]
    fn bad_arguments() {
        assert!(flip_asymmetry_model(&encircling(), 10.0, 2, 10).is_err());
        assert!(flip_asymmetry_model(&encircling(), 0.0, 0, 10).is_err());
        assert!(flip_asymmetry_model(&encircling(), 10.0, 0, 0).is_err());
    }
}
