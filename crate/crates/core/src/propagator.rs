//! Split-operator integrator for the two-channel nuclear wavepacket.
//!
//! One step is `e^{-iVΔt/2} e^{-iTΔt} e^{-iVΔt/2}` where `V` is the 2×2
//! potential-plus-coupling matrix at the step midpoint, exponentiated in
//! closed form at every grid point.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{cap_values, AbsorbingPotential, KineticOperator, RadialGrid};
use crate::linalg::expm_symmetric_2x2;
use crate::potentials::PotentialSet;
use crate::pulse::Field;

/// Nuclear amplitudes on the bound (`chi1`) and repulsive (`chi2`) channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelWavepacket {
    pub grid: RadialGrid,
    pub chi1: Vec<Complex64>,
    pub chi2: Vec<Complex64>,
    pub t: f64,
}

impl ChannelWavepacket {
    pub fn new(grid: RadialGrid, chi1: Vec<Complex64>, chi2: Vec<Complex64>) -> Self {
        Self {
            grid,
            chi1,
            chi2,
            t: 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        self.grid.norm_sqr(&self.chi1) + self.grid.norm_sqr(&self.chi2)
    }

    /// `⟨self|other⟩` over both channels.
    pub fn inner(&self, other: &ChannelWavepacket) -> Complex64 {
        self.grid.inner(&self.chi1, &other.chi1) + self.grid.inner(&self.chi2, &other.chi2)
    }

    /// `a·self + b·other`, timestamp taken from `self`.
    pub fn combine(&self, a: Complex64, other: &ChannelWavepacket, b: Complex64) -> Self {
        let mix = |x: &[Complex64], y: &[Complex64]| -> Vec<Complex64> {
            x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
        };
        Self {
            grid: self.grid,
            chi1: mix(&self.chi1, &other.chi1),
            chi2: mix(&self.chi2, &other.chi2),
            t: self.t,
        }
    }

    fn is_finite(&self) -> bool {
        self.chi1.iter().chain(&self.chi2).all(|z| z.is_finite())
    }
}

/// Sampled observables plus the final state of one propagation.
#[derive(Debug, Clone)]
pub struct PropagationTrace<R> {
    pub times: Vec<f64>,
    pub records: Vec<R>,
    pub final_state: ChannelWavepacket,
}

/// Grid operators prepared once for repeated stepping.
#[derive(Debug)]
pub struct Propagator {
    grid: RadialGrid,
    kinetic: KineticOperator,
    v1: Vec<Complex64>,
    v2: Vec<Complex64>,
    dipole: Vec<f64>,
    kinetic_phases: HashMap<u64, Vec<Complex64>>,
    potential_phases: HashMap<u64, Vec<Complex64>>,
    /// Grid points where either curve carries an absorbing part.
    absorbing: Vec<bool>,
}

impl Propagator {
    pub fn new(grid: &RadialGrid, pot: &PotentialSet, cap: &AbsorbingPotential) -> Result<Self> {
        let absorb = cap_values(grid, cap)?;
        let v1: Vec<Complex64> = grid
            .points()
            .zip(&absorb)
            .map(|(r, w)| w + pot.bound.eval(r))
            .collect();
        let v2: Vec<Complex64> = grid
            .points()
            .zip(&absorb)
            .map(|(r, w)| w + pot.repulsive.eval(r))
            .collect();
        let absorbing = v1.iter().zip(&v2).map(|(a, b)| a.im != 0.0 || b.im != 0.0).collect();
        Ok(Self {
            grid: *grid,
            kinetic: KineticOperator::new(grid, pot.mass),
            v1,
            v2,
            dipole: pot.dipole.sample(grid),
            kinetic_phases: HashMap::new(),
            potential_phases: HashMap::new(),
            absorbing,
        })
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn kinetic(&self) -> &KineticOperator {
        &self.kinetic
    }

    fn check_state(&self, state: &ChannelWavepacket) -> Result<()> {
        let n = self.grid.len();
        for len in [state.chi1.len(), state.chi2.len()] {
            if len != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: len,
                });
            }
        }
        Ok(())
    }

    fn apply_potential(&mut self, state: &mut ChannelWavepacket, field: f64, tau: f64) {
        let key = tau.to_bits();
        if !self.potential_phases.contains_key(&key) {
            let phases = self
                .v1
                .iter()
                .zip(&self.v2)
                .map(|(&a, &b)| (Complex64::new(0.0, -tau) * (a + b) * 0.5).exp())
                .collect();
            self.potential_phases.insert(key, phases);
        }
        let phases = &self.potential_phases[&key];
        for i in 0..self.grid.len() {
            let c = -self.dipole[i] * field;
            let (x, y) = (state.chi1[i], state.chi2[i]);
            if self.absorbing[i] {
                let [u00, u01, u11] =
                    expm_symmetric_2x2(self.v1[i], self.v2[i], Complex64::new(c, 0.0), tau);
                state.chi1[i] = u00 * x + u01 * y;
                state.chi2[i] = u01 * x + u11 * y;
                continue;
            }
            // Real symmetric block: exp(-iτH) = e^{-iτm}(cos sτ - i sin sτ (H - m)/s).
            let d = 0.5 * (self.v1[i].re - self.v2[i].re);
            let s = (d * d + c * c).sqrt();
            let (sin, cos) = (s * tau).sin_cos();
            let sinc = if s * tau.abs() < 1e-8 { tau } else { sin / s };
            let ph = phases[i];
            let u00 = ph * Complex64::new(cos, -sinc * d);
            let u11 = ph * Complex64::new(cos, sinc * d);
            let u01 = ph * Complex64::new(0.0, -sinc * c);
            state.chi1[i] = u00 * x + u01 * y;
            state.chi2[i] = u01 * x + u11 * y;
        }
    }

    fn apply_kinetic_step(&mut self, state: &mut ChannelWavepacket, dt: f64) {
        let key = dt.to_bits();
        if !self.kinetic_phases.contains_key(&key) {
            let n = self.grid.len() as f64;
            let phases = self
                .kinetic
                .mode_energies()
                .iter()
                .map(|e| Complex64::from_polar(1.0 / n, -e * dt))
                .collect();
            self.kinetic_phases.insert(key, phases);
        }
        let phases = &self.kinetic_phases[&key];
        for chi in [&mut state.chi1, &mut state.chi2] {
            self.kinetic.forward(chi);
            for (x, p) in chi.iter_mut().zip(phases) {
                *x *= p;
            }
            self.kinetic.inverse(chi);
        }
    }

    /// Advances `state` by `dt` (negative `dt` runs backwards).
    pub fn step(&mut self, state: &mut ChannelWavepacket, field: &dyn Field, dt: f64) -> Result<()> {
        self.check_state(state)?;
        let e = field.value(state.t + 0.5 * dt);
        self.apply_potential(state, e, 0.5 * dt);
        self.apply_kinetic_step(state, dt);
        self.apply_potential(state, e, 0.5 * dt);
        state.t += dt;
        if !state.is_finite() {
            return Err(Error::Numerical {
                time: state.t,
                message: format!(
                    "non-finite amplitude after step dt = {dt}; reduce the step or check the potentials"
                ),
            });
        }
        Ok(())
    }

    /// `H(t)|ψ⟩` for the full instantaneous Hamiltonian (kinetic, curves,
    /// absorber and dipole coupling).
    pub fn apply_hamiltonian(
        &self,
        state: &ChannelWavepacket,
        field_value: f64,
    ) -> Result<ChannelWavepacket> {
        self.check_state(state)?;
        let mut out = state.clone();
        self.kinetic.apply_in_place(&mut out.chi1);
        self.kinetic.apply_in_place(&mut out.chi2);
        for i in 0..self.grid.len() {
            let c = -self.dipole[i] * field_value;
            out.chi1[i] += self.v1[i] * state.chi1[i] + state.chi2[i] * c;
            out.chi2[i] += self.v2[i] * state.chi2[i] + state.chi1[i] * c;
        }
        Ok(out)
    }

    /// Integrates from `initial.t = 0` to `field.duration()`.
    ///
    /// `sample` runs at `t = 0`, after every `sample_every` steps and at the
    /// end; the last step is shortened so the run ends exactly on the duration.
    pub fn propagate<R>(
        &mut self,
        initial: &ChannelWavepacket,
        field: &dyn Field,
        dt: f64,
        sample_every: usize,
        mut sample: impl FnMut(&Self, &ChannelWavepacket) -> Result<R>,
    ) -> Result<PropagationTrace<R>> {
        self.check_state(initial)?;
        if !(dt > 0.0) {
            return Err(Error::Domain {
                quantity: "dt",
                value: dt,
                reason: "must be positive",
            });
        }
        let sample_every = sample_every.max(1);
        let t_end = field.duration();
        let full_steps = (t_end / dt).floor() as usize;
        let remainder = t_end - full_steps as f64 * dt;
        let tail = remainder > 1e-12 * t_end.max(1.0);
        let total = full_steps + usize::from(tail);

        let mut state = initial.clone();
        state.t = 0.0;
        let mut times = vec![0.0];
        let mut records = vec![sample(self, &state)?];
        for k in 1..=total {
            let h = if k <= full_steps { dt } else { remainder };
            self.step(&mut state, field, h)?;
            state.t = if k <= full_steps { k as f64 * dt } else { t_end };
            if k == total {
                state.t = t_end;
            }
            if k % sample_every == 0 || k == total {
                times.push(state.t);
                records.push(sample(self, &state)?);
            }
        }
        Ok(PropagationTrace {
            times,
            records,
            final_state: state,
        })
    }
}
