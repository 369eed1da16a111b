//! Field-free vibrational eigenpairs of the bound channel.

use std::io::Write;

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{KineticOperator, RadialGrid};
use crate::linalg;
use crate::potentials::{Curve, PotentialSet};
use crate::propagator::ChannelWavepacket;

/// Eigenpairs of the grid Hamiltonian `T + V` for a single channel.
///
/// Vectors are real, normalised with the ΔR weight: `Σ φ_i² ΔR = 1`.
#[derive(Debug, Clone)]
pub struct ChannelSpectrum {
    pub grid: RadialGrid,
    pub energies: Vec<f64>,
    /// One state per entry, sampled on `grid`.
    pub states: Vec<Vec<f64>>,
}

/// Dense Fourier-grid Hamiltonian `T + diag(V)`.
pub fn grid_hamiltonian(grid: &RadialGrid, mass: f64, potential: &[f64]) -> Mat<f64> {
    let n = grid.len();
    let column = KineticOperator::new(grid, mass).matrix_column();
    Mat::from_fn(n, n, |i, j| {
        let t = column[(i + n - j) % n];
        if i == j {
            t + potential[i]
        } else {
            t
        }
    })
}

/// Diagonalises `T + curve` and keeps the eigenpairs with energy below `cutoff`.
pub fn channel_spectrum(
    grid: &RadialGrid,
    mass: f64,
    curve: &Curve,
    cutoff: f64,
) -> Result<ChannelSpectrum> {
    let v = curve.sample(grid);
    let h = grid_hamiltonian(grid, mass, &v);
    let (values, vectors) = linalg::symmetric_eigen(&h)?;
    let scale = 1.0 / grid.spacing().sqrt();
    let mut energies = Vec::new();
    let mut states = Vec::new();
    for (j, &e) in values.iter().enumerate() {
        if e >= cutoff {
            break;
        }
        let mut phi: Vec<f64> = (0..grid.len()).map(|i| vectors[(i, j)] * scale).collect();
        fix_phase(&mut phi);
        energies.push(e);
        states.push(phi);
    }
    Ok(ChannelSpectrum {
        grid: *grid,
        energies,
        states,
    })
}

/// Makes the first lobe that rises above 1e-3 of the peak positive.
fn fix_phase(phi: &mut [f64]) {
    let peak = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = phi.iter().find(|x| x.abs() > 1e-3 * peak) {
        if *first < 0.0 {
            phi.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Vibrational levels of the bound channel, below its asymptote.
#[derive(Debug, Clone)]
pub struct BoundStateBasis {
    pub grid: RadialGrid,
    pub energies: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub asymptote: f64,
}

impl BoundStateBasis {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn state(&self, v: usize) -> Result<&[f64]> {
        self.states
            .get(v)
            .map(Vec::as_slice)
            .ok_or(Error::IndexOutOfRange {
                what: "vibrational level",
                index: v,
                len: self.len(),
            })
    }

    /// `⟨φ_v|χ⟩` with the ΔR weight.
    pub fn project(&self, v: usize, chi: &[Complex64]) -> Complex64 {
        let dr = self.grid.spacing();
        self.states[v]
            .iter()
            .zip(chi)
            .map(|(p, c)| c * *p)
            .sum::<Complex64>()
            * dr
    }

    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "v,energy")?;
        for (v, e) in self.energies.iter().enumerate() {
            writeln!(out, "{v},{e:.15e}")?;
        }
        Ok(())
    }
}

pub fn solve_bound(grid: &RadialGrid, pot: &PotentialSet) -> Result<BoundStateBasis> {
    let asymptote = pot.bound_asymptote();
    // a flat continuum edge sits exactly at the asymptote; keep it out
    let cutoff = asymptote - 1e-12 * asymptote.abs().max(1.0);
    let spec = channel_spectrum(grid, pot.mass, &pot.bound, cutoff)?;
    if spec.energies.is_empty() {
        return Err(Error::NoBoundStates { asymptote });
    }
    Ok(BoundStateBasis {
        grid: *grid,
        energies: spec.energies,
        states: spec.states,
        asymptote,
    })
}

/// Wavepacket with `χ1 = φ_v`, `χ2 = 0` at `t = 0`.
pub fn initial_state(basis: &BoundStateBasis, v: usize) -> Result<ChannelWavepacket> {
    let phi = basis.state(v)?;
    let chi1 = phi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    Ok(ChannelWavepacket::new(
        basis.grid,
        chi1,
        vec![Complex64::new(0.0, 0.0); phi.len()],
    ))
}

/// Sign changes of `phi`, ignoring samples below `1e-4` of its peak.
pub fn count_nodes(phi: &[f64]) -> usize {
    let peak = phi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut last = 0.0f64;
    let mut nodes = 0;
    for &x in phi {
        if x.abs() < 1e-4 * peak {
            continue;
        }
        if last != 0.0 && x.signum() != last.signum() {
            nodes += 1;
        }
        last = x;
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::builtin_h2plus;

    fn morse_set() -> PotentialSet {
        PotentialSet {
            name: "morse".into(),
            bound: Curve::Morse {
                depth: 0.1,
                r_e: 2.0,
                a: 1.0,
                asymptote: 0.0,
            },
            repulsive: Curve::Constant(0.0),
            dipole: Curve::Constant(0.0),
            mass: 1000.0,
        }
    }

    /// Closed-form Morse levels measured from the dissociation limit.
    fn morse_levels(d: f64, a: f64, m: f64) -> Vec<f64> {
        let lambda = (2.0 * m * d).sqrt() / a;
        let omega0 = a * (2.0 * d / m).sqrt();
        (0..)
            .map(|v| v as f64 + 0.5)
            .take_while(|x| *x < lambda)
            .map(|x| -d + omega0 * x - (omega0 * x).powi(2) / (4.0 * d))
            .collect()
    }

    #[test]
    fn morse_oracle() {
        let grid = RadialGrid::new(0.0, 30.0, 512).unwrap();
        let basis = solve_bound(&grid, &morse_set()).unwrap();
        let exact = morse_levels(0.1, 1.0, 1000.0);
        assert_eq!(basis.len(), exact.len());
        for (v, (e, x)) in basis.energies.iter().zip(&exact).enumerate() {
            assert!((e - x).abs() < 1e-6, "v={v}: {e} vs {x}");
        }
        let omega0 = (2.0 * 0.1 / 1000.0f64).sqrt();
        let x = omega0 / (4.0 * 0.1);
        let spacing = basis.energies[1] - basis.energies[0];
        assert!((spacing - omega0 * (1.0 - 2.0 * x)).abs() < 1e-7);
    }

    #[test]
    fn orthonormal_nodes_and_residual() {
        let grid = RadialGrid::new(0.5, 25.0, 512).unwrap();
        let pot = builtin_h2plus();
        let basis = solve_bound(&grid, &pot).unwrap();
        assert!(basis.len() >= 13, "{}", basis.len());
        let dr = grid.spacing();
        let kin = KineticOperator::new(&grid, pot.mass);
        let v1 = pot.bound.sample(&grid);
        for v in 0..basis.len() {
            for w in 0..=v {
                let s: f64 = basis.states[v]
                    .iter()
                    .zip(&basis.states[w])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    * dr;
                let expect = if v == w { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10, "<{v}|{w}> = {s}");
            }
            assert!(basis.energies[v] < basis.asymptote);
            assert_eq!(count_nodes(&basis.states[v]), v);
            let psi: Vec<Complex64> =
                basis.states[v].iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let t = kin.apply(&psi).unwrap();
            let res: f64 = (0..grid.len())
                .map(|i| (t[i] + psi[i] * v1[i] - psi[i] * basis.energies[v]).norm_sqr())
                .sum::<f64>()
                * dr;
            assert!(res.sqrt() < 1e-8, "v={v} residual {}", res.sqrt());
        }
    }

    #[test]
    fn grid_doubling_converged() {
        let pot = builtin_h2plus();
        let a = solve_bound(&RadialGrid::new(0.5, 25.0, 512).unwrap(), &pot).unwrap();
        let b = solve_bound(&RadialGrid::new(0.5, 25.0, 1024).unwrap(), &pot).unwrap();
        for v in 0..13 {
            assert!((a.energies[v] - b.energies[v]).abs() < 1e-9, "v={v}");
        }
    }

    #[test]
    fn initial_states() {
        let grid = RadialGrid::new(0.5, 25.0, 256).unwrap();
        let basis = solve_bound(&grid, &builtin_h2plus()).unwrap();
        let s0 = initial_state(&basis, 0).unwrap();
        let re: Vec<f64> = s0.chi1.iter().map(|z| z.re).collect();
        assert_eq!(count_nodes(&re), 0);
        let s8 = initial_state(&basis, 8).unwrap();
        let re: Vec<f64> = s8.chi1.iter().map(|z| z.re).collect();
        assert_eq!(count_nodes(&re), 8);
        assert!((s8.norm() - 1.0).abs() < 1e-12);
        assert!(matches!(
            initial_state(&basis, 400),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn no_bound_states_is_reported() {
        let mut pot = morse_set();
        pot.bound = Curve::Constant(0.0);
        let grid = RadialGrid::new(0.0, 10.0, 64).unwrap();
        assert!(matches!(
            solve_bound(&grid, &pot),
            Err(Error::NoBoundStates { .. })
        ));
    }
}
