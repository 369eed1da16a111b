//! Vibrational populations, dissociation probability, surviving fractions
//! and the effective-eigenenergy diagnostic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bound_states::BoundStateBasis;
use crate::error::{Error, Result};
use crate::propagator::ChannelWavepacket;

/// Default floor on `|⟨i|Ψ⟩|` below which the effective energy is undefined.
pub const EFFECTIVE_ENERGY_FLOOR: f64 = 1e-8;

/// Share of the non-dissociated population in the initial level, the
/// target level and everything else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivingFractions {
    pub initial: f64,
    pub target: f64,
    pub other: f64,
}

/// Observables at one sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservableRecord {
    pub t: f64,
    pub populations: Vec<f64>,
    pub p_diss: f64,
    /// `None` when every bound level is empty.
    pub fractions: Option<SurvivingFractions>,
    /// `None` when the initial-state overlap fell below the floor.
    pub effective_energy: Option<Complex64>,
}

/// `P_v = |⟨φ_v|χ1⟩|²` for every bound level and `P_diss = 1 - Σ P_v`.
pub fn populations(state: &ChannelWavepacket, basis: &BoundStateBasis) -> Result<(Vec<f64>, f64)> {
    if state.grid != basis.grid || state.chi1.len() != basis.grid.len() {
        return Err(Error::InvalidInput(
            "wavepacket and bound-state basis live on different grids".into(),
        ));
    }
    let p: Vec<f64> = (0..basis.len())
        .map(|v| basis.project(v, &state.chi1).norm_sqr())
        .collect();
    let p_diss = 1.0 - p.iter().sum::<f64>();
    Ok((p, p_diss))
}

pub fn surviving_fractions(
    populations: &[f64],
    initial: usize,
    target: usize,
) -> Result<SurvivingFractions> {
    for (what, v) in [("initial level", initial), ("target level", target)] {
        if v >= populations.len() {
            return Err(Error::IndexOutOfRange {
                what,
                index: v,
                len: populations.len(),
            });
        }
    }
    let total: f64 = populations.iter().sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedFraction { total });
    }
    let f_initial = populations[initial] / total;
    let f_target = if target == initial {
        0.0
    } else {
        populations[target] / total
    };
    Ok(SurvivingFractions {
        initial: f_initial,
        target: f_target,
        other: 1.0 - f_initial - f_target,
    })
}

/// `E_eff = ⟨i|H|Ψ⟩ / ⟨i|Ψ⟩` given `H|Ψ⟩`; `None` when `|⟨i|Ψ⟩| < floor`.
pub fn effective_energy(
    state: &ChannelWavepacket,
    h_state: &ChannelWavepacket,
    initial: &ChannelWavepacket,
    floor: f64,
) -> Option<Complex64> {
    let overlap = initial.inner(state);
    if overlap.norm() < floor {
        return None;
    }
    Some(initial.inner(h_state) / overlap)
}

/// Same ratio for plain amplitude vectors (unit weight).
pub fn effective_energy_ratio(
    initial: &[Complex64],
    state: &[Complex64],
    h_state: &[Complex64],
    floor: f64,
) -> Option<Complex64> {
    let dot = |a: &[Complex64], b: &[Complex64]| -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    };
    let overlap = dot(initial, state);
    if overlap.norm() < floor {
        return None;
    }
    Some(dot(initial, h_state) / overlap)
}

/// CSV header matching [`ObservableRecord::csv_row`].
pub fn csv_header(n_levels: usize) -> String {
    let mut h = String::from("t,P_diss");
    for v in 0..n_levels {
        h.push_str(&format!(",P_{v}"));
    }
    h.push_str(",f_initial,f_target,f_other,Re_E_eff,Im_E_eff");
    h
}

impl ObservableRecord {
    pub fn csv_row(&self) -> String {
        let mut row = format!("{:.10e},{:.10e}", self.t, self.p_diss);
        for p in &self.populations {
            row.push_str(&format!(",{p:.10e}"));
        }
        match self.fractions {
            Some(f) => row.push_str(&format!(",{:.10e},{:.10e},{:.10e}", f.initial, f.target, f.other)),
            None => row.push_str(",nan,nan,nan"),
        }
        match self.effective_energy {
            Some(e) => row.push_str(&format!(",{:.10e},{:.10e}", e.re, e.im)),
            None => row.push_str(",nan,nan"),
        }
        row
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bound_states::{initial_state, solve_bound};
    use crate::grid::{AbsorbingPotential, RadialGrid};
    use crate::potentials::builtin_h2plus;
    use crate::propagator::Propagator;
    use proptest::prelude::*;

    fn setup() -> (RadialGrid, BoundStateBasis) {
        let grid = RadialGrid::new(0.5, 25.0, 256).unwrap();
        let basis = solve_bound(&grid, &builtin_h2plus()).unwrap();
        (grid, basis)
    }

    #[test]
    fn basis_state_projection() {
        let (_, basis) = setup();
        let s = initial_state(&basis, 9).unwrap();
        let (p, p_diss) = populations(&s, &basis).unwrap();
        assert!((p[9] - 1.0).abs() < 1e-10);
        assert!(p_diss.abs() < 1e-10);
        assert!((p.iter().sum::<f64>() + p_diss - 1.0).abs() < 1e-15);
    }

    #[test]
    fn superposition_splits_evenly() {
        let (_, basis) = setup();
        let a = initial_state(&basis, 8).unwrap();
        let b = initial_state(&basis, 9).unwrap();
        let h = Complex64::new(0.5f64.sqrt(), 0.0);
        let s = a.combine(h, &b, h * Complex64::new(0.0, 1.0));
        let (p, p_diss) = populations(&s, &basis).unwrap();
        assert!((p[8] - 0.5).abs() < 1e-10 && (p[9] - 0.5).abs() < 1e-10);
        assert!(p_diss.abs() < 1e-10);
    }

    #[test]
    fn packet_beyond_well_counts_as_dissociated() {
        let (grid, basis) = setup();
        let chi1: Vec<Complex64> = grid
            .points()
            .map(|r| Complex64::new((-(r - 21.0f64).powi(2) / 0.5).exp(), 0.0))
            .collect();
        let mut s = ChannelWavepacket::new(grid, chi1, vec![Complex64::new(0.0, 0.0); grid.len()]);
        let n = s.norm();
        s.chi1.iter_mut().for_each(|z| *z /= n.sqrt());
        // the tracked levels (v <= 12) have no support out there; the two
        // highest, barely bound levels reach a little further
        for v in 0..=12 {
            assert!(basis.project(v, &s.chi1).norm() < 1e-6, "v={v}");
        }
        let (_, p_diss) = populations(&s, &basis).unwrap();
        assert!((p_diss - 1.0).abs() < 1e-3, "{p_diss}");
    }

    #[test]
    fn grid_mismatch() {
        let (_, basis) = setup();
        let other = RadialGrid::new(0.5, 25.0, 128).unwrap();
        let s = ChannelWavepacket::new(other, vec![Complex64::new(0.0, 0.0); 128], vec![Complex64::new(0.0, 0.0); 128]);
        assert!(populations(&s, &basis).is_err());
    }

    #[test]
    fn fraction_examples() {
        let mut p = vec![0.0; 12];
        p[8] = 0.3;
        let f = surviving_fractions(&p, 8, 9).unwrap();
        assert_eq!((f.initial, f.target, f.other), (1.0, 0.0, 0.0));
        let mut p = vec![0.0; 5];
        p[1] = 0.2;
        p[2] = 0.2;
        p[4] = 0.1;
        let f = surviving_fractions(&p, 1, 2).unwrap();
        assert!((f.initial - 0.4).abs() < 1e-15);
        assert!((f.target - 0.4).abs() < 1e-15);
        assert!((f.other - 0.2).abs() < 1e-15);
        assert!(matches!(
            surviving_fractions(&[0.0; 4], 1, 2),
            Err(Error::UndefinedFraction { .. })
        ));
    }

    #[test]
    fn effective_energy_of_eigenstate() {
        let (grid, basis) = setup();
        let pot = builtin_h2plus();
        let prop = Propagator::new(&grid, &pot, &AbsorbingPotential::none(&grid)).unwrap();
        let s = initial_state(&basis, 4).unwrap();
        let hs = prop.apply_hamiltonian(&s, 0.0).unwrap();
        let e = effective_energy(&s, &hs, &s, EFFECTIVE_ENERGY_FLOOR).unwrap();
        assert!((e.re - basis.energies[4]).abs() < 1e-10);
        assert!(e.im.abs() < 1e-12);
        let orth = initial_state(&basis, 5).unwrap();
        assert!(effective_energy(&s, &hs, &orth, EFFECTIVE_ENERGY_FLOOR).is_none());
    }

    #[test]
    fn csv_layout() {
        let r = ObservableRecord {
            t: 1.0,
            populations: vec![0.5, 0.25],
            p_diss: 0.25,
            fractions: None,
            effective_energy: Some(Complex64::new(-0.1, -0.01)),
        };
        assert_eq!(csv_header(2).split(',').count(), r.csv_row().split(',').count());
        assert!(r.csv_row().contains("nan,nan,nan"));
    }

    proptest! {
        #[test]
        fn projection_never_overcounts(seed in prop::collection::vec(-1.0f64..1.0, 512)) {
            let grid = RadialGrid::new(0.5, 25.0, 256).unwrap();
            let basis = solve_bound(&grid, &builtin_h2plus()).unwrap();
            let chi1: Vec<Complex64> = seed.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect();
            let mut s = ChannelWavepacket::new(grid, chi1, vec![Complex64::new(0.0, 0.0); 256]);
            let n = s.norm();
            s.chi1.iter_mut().for_each(|z| *z /= n.sqrt());
            let (p, p_diss) = populations(&s, &basis).unwrap();
            prop_assert!(p_diss >= -1e-12);
            prop_assert!(p.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
    }
}
