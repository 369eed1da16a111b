//! Uniform radial grid, Fourier kinetic operator and polynomial absorbing potential.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Power of the absorbing-potential ramp.
pub const CAP_EXPONENT: i32 = 16;

/// Uniform grid `R_i = r_min + i·ΔR`, `i = 0..n`, whose last point is `r_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite()) || r_min >= r_max {
            return Err(Error::InvalidInput(format!(
                "grid extent [{r_min}, {r_max}] is empty"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2 points, got {n}")));
        }
        Ok(Self { r_min, r_max, n })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        (self.r_max - self.r_min) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.r_max
        } else {
            self.r_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.point(i))
    }

    /// Momenta in discrete-Fourier order: `0, Δk, …, (n/2-1)Δk, -n/2·Δk, …, -Δk`.
    pub fn momenta(&self) -> Vec<f64> {
        let dk = 2.0 * PI / (self.n as f64 * self.spacing());
        let n = self.n as isize;
        (0..n)
            .map(|j| {
                let j = if j < (n + 1) / 2 { j } else { j - n };
                j as f64 * dk
            })
            .collect()
    }

    /// ΔR-weighted inner product `⟨a|b⟩`.
    pub fn inner(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<Complex64>() * self.spacing()
    }

    pub fn norm_sqr(&self, a: &[Complex64]) -> f64 {
        a.iter().map(|x| x.norm_sqr()).sum::<f64>() * self.spacing()
    }
}

/// Kinetic operator `T = -1/(2m) d²/dR²` applied spectrally.
///
/// Holds FFT plans; each call allocates its own scratch, so a shared
/// instance can be used from several threads.
#[derive(Clone)]
pub struct KineticOperator {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `k²/(2m)` per Fourier mode.
    energies: Vec<f64>,
}

impl std::fmt::Debug for KineticOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KineticOperator")
            .field("len", &self.energies.len())
            .finish()
    }
}

impl KineticOperator {
    pub fn new(grid: &RadialGrid, mass: f64) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.len();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            energies: grid
                .momenta()
                .into_iter()
                .map(|k| k * k / (2.0 * mass))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn mode_energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn max_energy(&self) -> f64 {
        self.energies.iter().cloned().fold(0.0, f64::max)
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    /// Unnormalised inverse transform.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
    }

    pub fn apply(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        if psi.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: psi.len(),
            });
        }
        let mut out = psi.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }

    pub fn apply_in_place(&self, data: &mut [Complex64]) {
        let scale = 1.0 / data.len() as f64;
        self.forward.process(data);
        for (x, e) in data.iter_mut().zip(&self.energies) {
            *x *= e * scale;
        }
        self.inverse.process(data);
    }

    /// First column of the dense (circulant) kinetic matrix.
    pub fn matrix_column(&self) -> Vec<f64> {
        let mut e0 = vec![Complex64::new(0.0, 0.0); self.len()];
        e0[0] = Complex64::new(1.0, 0.0);
        self.apply_in_place(&mut e0);
        e0.into_iter().map(|z| z.re).collect()
    }
}

/// Applies the kinetic operator for reduced mass `mass` to `psi`.
pub fn apply_kinetic(grid: &RadialGrid, mass: f64, psi: &[Complex64]) -> Result<Vec<Complex64>> {
    KineticOperator::new(grid, mass).apply(psi)
}

/// `V(R) = -iA((R - R_start)/(R_max - R_start))^16` beyond `R_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingPotential {
    pub strength: f64,
    pub r_start: f64,
}

impl AbsorbingPotential {
    pub fn new(strength: f64, r_start: f64) -> Result<Self> {
        if !(strength >= 0.0) || !strength.is_finite() {
            return Err(Error::Domain {
                quantity: "cap strength",
                value: strength,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self { strength, r_start })
    }

    /// No absorption anywhere.
    pub fn none(grid: &RadialGrid) -> Self {
        Self {
            strength: 0.0,
            r_start: grid.r_min(),
        }
    }

    pub fn value(&self, r: f64, r_max: f64) -> Complex64 {
        if r <= self.r_start {
            return Complex64::new(0.0, 0.0);
        }
        let x = (r - self.r_start) / (r_max - self.r_start);
        Complex64::new(0.0, -self.strength * x.powi(CAP_EXPONENT))
    }
}

pub fn cap_values(grid: &RadialGrid, cap: &AbsorbingPotential) -> Result<Vec<Complex64>> {
    if !(cap.r_start >= grid.r_min() && cap.r_start < grid.r_max()) {
        return Err(Error::Domain {
            quantity: "cap r_start",
            value: cap.r_start,
            reason: "must lie in [r_min, r_max)",
        });
    }
    Ok(grid.points().map(|r| cap.value(r, grid.r_max())).collect())
}
