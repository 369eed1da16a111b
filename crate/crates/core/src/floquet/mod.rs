//! Non-Hermitian Floquet quasienergies of the two-channel molecule.
//!
//! Each channel is expanded in its own field-free eigenbasis on a coarse
//! grid, with the absorber projected into that basis. The dressed operator
//! couples channel 1 with `k` photons to channel 2 with `k ± 1` photons, so
//! only one photon parity per channel is kept: channel 1 on even blocks,
//! channel 2 on odd blocks, `k ∈ [-n_photon, n_photon]`. Block `k` carries
//! the shift `+kω`; adjacent blocks couple through `-(E₀/2) μ`.

pub mod ep;
mod two_level;

pub use ep::{locate_ep, EpCandidate, EpOutcome, EpSearch};
pub use two_level::{
    flip_asymmetry_model, loop_branch_widths, lossy_eigen, BranchPopulations, LoopIntegration,
    LossyLoop,
};

use std::io::Write;

use faer::Mat;
use num_complex::Complex64;

use crate::bound_states::channel_spectrum;
use crate::error::{Error, Result};
use crate::grid::{cap_values, AbsorbingPotential, RadialGrid};
use crate::potentials::PotentialSet;
use crate::pulse::PulseContour;
use crate::{linalg, units};

/// Widths below this magnitude but negative are roundoff and read as zero.
const WIDTH_ROUNDOFF: f64 = 1e-10;

/// Channel Hamiltonians and coupling in the contracted basis.
#[derive(Debug, Clone)]
pub struct FloquetModel {
    h1: Mat<Complex64>,
    h2: Mat<Complex64>,
    dipole: Mat<Complex64>,
    n_levels: usize,
}

impl FloquetModel {
    /// Builds the contracted model on `grid`.
    ///
    /// Channel 1 keeps eigenstates up to `bound_cutoff` above its asymptote,
    /// channel 2 up to `repulsive_cutoff` above its own.
    pub fn from_potentials(
        pot: &PotentialSet,
        grid: &RadialGrid,
        cap: &AbsorbingPotential,
        bound_cutoff: f64,
        repulsive_cutoff: f64,
    ) -> Result<Self> {
        let a1 = pot.bound_asymptote();
        let s1 = channel_spectrum(grid, pot.mass, &pot.bound, a1 + bound_cutoff)?;
        let s2 = channel_spectrum(
            grid,
            pot.mass,
            &pot.repulsive,
            pot.repulsive_asymptote() + repulsive_cutoff,
        )?;
        let n_levels = s1.energies.iter().filter(|&&e| e < a1).count();
        if n_levels == 0 {
            return Err(Error::NoBoundStates { asymptote: a1 });
        }
        if s2.energies.is_empty() {
            return Err(Error::InvalidInput(
                "repulsive cutoff keeps no channel-2 states".into(),
            ));
        }
        let w = cap_values(grid, cap)?;
        let dr = grid.spacing();
        let mu = pot.dipole.sample(grid);
        let project = |a: &[f64], b: &[f64], f: &dyn Fn(usize) -> Complex64| -> Complex64 {
            a.iter()
                .zip(b)
                .enumerate()
                .map(|(i, (x, y))| f(i) * (x * y))
                .sum::<Complex64>()
                * dr
        };
        let channel = |s: &crate::bound_states::ChannelSpectrum| {
            let n = s.energies.len();
            Mat::from_fn(n, n, |i, j| {
                let wij = project(&s.states[i], &s.states[j], &|k| w[k]);
                if i == j {
                    wij + s.energies[i]
                } else {
                    wij
                }
            })
        };
        let h1 = channel(&s1);
        let h2 = channel(&s2);
        let dipole = Mat::from_fn(s1.energies.len(), s2.energies.len(), |i, j| {
            project(&s1.states[i], &s2.states[j], &|k| Complex64::from(mu[k]))
        });
        Ok(Self {
            h1,
            h2,
            dipole,
            n_levels,
        })
    }

    /// Model from explicit channel matrices; every channel-1 state is a level.
    pub fn from_matrices(
        h1: Mat<Complex64>,
        h2: Mat<Complex64>,
        dipole: Mat<Complex64>,
    ) -> Result<Self> {
        if h1.nrows() != h1.ncols() || h2.nrows() != h2.ncols() {
            return Err(Error::InvalidInput("channel matrices must be square".into()));
        }
        if dipole.nrows() != h1.nrows() || dipole.ncols() != h2.nrows() {
            return Err(Error::LengthMismatch {
                expected: h1.nrows() * h2.nrows(),
                found: dipole.nrows() * dipole.ncols(),
            });
        }
        if h1.nrows() == 0 || h2.nrows() == 0 {
            return Err(Error::InvalidInput("empty channel".into()));
        }
        let n_levels = h1.nrows();
        Ok(Self {
            h1,
            h2,
            dipole,
            n_levels,
        })
    }

    /// Number of labelled vibrational levels.
    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn channel_sizes(&self) -> (usize, usize) {
        (self.h1.nrows(), self.h2.nrows())
    }

    /// Field-free level energies (real parts of the channel-1 diagonal).
    pub fn level_energies(&self) -> Vec<f64> {
        (0..self.n_levels).map(|v| self.h1[(v, v)].re).collect()
    }

    pub fn operator(&self, field: f64, omega: f64, n_photon: usize) -> Result<FloquetOperator> {
        if n_photon == 0 {
            return Err(Error::Domain {
                quantity: "n_photon",
                value: 0.0,
                reason: "at least one photon block on each side is required",
            });
        }
        if !(omega > 0.0) || !field.is_finite() {
            return Err(Error::Domain {
                quantity: "omega",
                value: omega,
                reason: "Floquet frequency must be positive",
            });
        }
        let (n1, n2) = self.channel_sizes();
        let blocks: Vec<(i64, usize)> = {
            let mut offset = 0;
            (-(n_photon as i64)..=n_photon as i64)
                .map(|k| {
                    let start = offset;
                    offset += if k % 2 == 0 { n1 } else { n2 };
                    (k, start)
                })
                .collect()
        };
        let dim = blocks
            .last()
            .map(|&(k, s)| s + if k % 2 == 0 { n1 } else { n2 })
            .unwrap_or(0);
        let mut m = Mat::<Complex64>::zeros(dim, dim);
        let half = Complex64::from(-0.5 * field);
        for (idx, &(k, s)) in blocks.iter().enumerate() {
            let (h, n) = if k % 2 == 0 { (&self.h1, n1) } else { (&self.h2, n2) };
            let shift = k as f64 * omega;
            for i in 0..n {
                for j in 0..n {
                    m[(s + i, s + j)] = h[(i, j)];
                }
                m[(s + i, s + i)] += shift;
            }
            if let Some(&(_, t)) = blocks.get(idx + 1) {
                if field != 0.0 {
                    for a in 0..n1 {
                        for b in 0..n2 {
                            let c = half * self.dipole[(a, b)];
                            let (r, col) = if k % 2 == 0 { (s + a, t + b) } else { (t + a, s + b) };
                            m[(r, col)] = c;
                            m[(col, r)] = c;
                        }
                    }
                }
            }
        }
        Ok(FloquetOperator {
            field,
            omega,
            n_photon,
            zero_offset: blocks[n_photon].1,
            matrix: m,
        })
    }
}

/// Truncated dressed Hamiltonian at fixed field amplitude and frequency.
#[derive(Debug, Clone)]
pub struct FloquetOperator {
    pub field: f64,
    pub omega: f64,
    pub n_photon: usize,
    zero_offset: usize,
    matrix: Mat<Complex64>,
}

impl FloquetOperator {
    pub fn matrix(&self) -> &Mat<Complex64> {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn diagonalize(&self) -> Result<RawSpectrum> {
        let (energies, vectors) = linalg::complex_eigen(&self.matrix)?;
        Ok(RawSpectrum {
            energies,
            vectors,
            zero_offset: self.zero_offset,
        })
    }
}

/// Unlabelled eigenpairs of one Floquet operator.
#[derive(Debug, Clone)]
pub struct RawSpectrum {
    pub energies: Vec<Complex64>,
    /// Hermitian-normalised eigenvectors as columns.
    pub vectors: Mat<Complex64>,
    zero_offset: usize,
}

impl RawSpectrum {
    /// Weight of eigenvector `j` on level `v` of the zero-photon block.
    pub fn level_weight(&self, j: usize, v: usize) -> f64 {
        self.vectors[(self.zero_offset + v, j)].norm_sqr()
    }

    /// Eigenvector with the largest zero-photon weight on level `v`.
    pub fn dominant(&self, v: usize) -> usize {
        (0..self.energies.len())
            .max_by(|&a, &b| self.level_weight(a, v).total_cmp(&self.level_weight(b, v)))
            .unwrap_or(0)
    }

    /// `|⟨x|col j⟩|` for a unit vector `x` of matching dimension.
    fn overlap(&self, x: &[Complex64], j: usize) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, xi)| xi.conj() * self.vectors[(i, j)])
            .sum::<Complex64>()
            .norm()
    }

    fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.vectors.nrows()).map(|i| self.vectors[(i, j)]).collect()
    }

    /// Continues a branch known by its previous eigenpair.
    ///
    /// Picks the nearest eigenvalue. The sample is flagged when the runner-up
    /// lies within `tie_tolerance` of the same distance or when a different
    /// eigenvector has the larger overlap with the previous one.
    pub fn follow(&self, energy: Complex64, vector: &[Complex64], tie_tolerance: f64) -> Match {
        let mut order: Vec<usize> = (0..self.energies.len()).collect();
        order.sort_by(|&a, &b| {
            (self.energies[a] - energy)
                .norm()
                .total_cmp(&(self.energies[b] - energy).norm())
        });
        let best = order[0];
        let mut flagged = false;
        if let Some(&second) = order.get(1) {
            let d1 = (self.energies[best] - energy).norm();
            let d2 = (self.energies[second] - energy).norm();
            if d2 - d1 <= tie_tolerance {
                flagged = true;
            }
        }
        let o_best = self.overlap(vector, best);
        if order
            .iter()
            .skip(1)
            .take(3)
            .any(|&j| self.overlap(vector, j) > o_best)
        {
            flagged = true;
        }
        Match {
            index: best,
            flagged,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Match {
    pub index: usize,
    pub flagged: bool,
}

/// Branch bookkeeping options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingOptions {
    pub n_photon: usize,
    /// Intensity steps used when continuing labels from zero field, and
    /// subdivisions retried between contour samples after a flagged match.
    pub continuation_steps: usize,
    pub tie_tolerance: f64,
    /// Use `d(ωt)/dt` instead of `ω(t)` as the dressing frequency.
    pub use_effective_frequency: bool,
}

impl Default for TrackingOptions {
    fn default() -> Self {
        Self {
            n_photon: 6,
            continuation_steps: 8,
            tie_tolerance: 1e-6,
            use_effective_frequency: true,
        }
    }
}

/// One labelled quasienergy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub level: usize,
    pub energy: Complex64,
    /// Index into the eigenpairs of the parent spectrum.
    pub index: usize,
    /// Continuation met a near-tie somewhere on the way.
    pub flagged: bool,
}

impl Branch {
    pub fn width(&self) -> f64 {
        width_of(self.energy)
    }
}

/// Labelled quasienergies at one `(E₀, ω)`.
#[derive(Debug, Clone)]
pub struct QuasienergySpectrum {
    pub field: f64,
    pub omega: f64,
    pub n_photon: usize,
    pub raw: RawSpectrum,
    pub branches: Vec<Branch>,
}

impl QuasienergySpectrum {
    pub fn branch(&self, level: usize) -> Option<&Branch> {
        self.branches.iter().find(|b| b.level == level)
    }

    /// Every eigenvalue with its real part folded into the zone around `reference`.
    pub fn folded(&self, reference: f64) -> Vec<Complex64> {
        self.raw
            .energies
            .iter()
            .map(|&e| Complex64::new(fold_to_zone(e.re, reference, self.omega), e.im))
            .collect()
    }

    /// CSV rows `level,Re_E,Im_E,Re_E_folded,Gamma,flagged`.
    pub fn write_csv(&self, reference: f64, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "level,Re_E,Im_E,Re_E_folded,Gamma,flagged")?;
        for b in &self.branches {
            writeln!(
                out,
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{}",
                b.level,
                b.energy.re,
                b.energy.im,
                fold_to_zone(b.energy.re, reference, self.omega),
                b.width(),
                b.flagged as u8
            )?;
        }
        Ok(())
    }
}

/// Maps `x` into `(reference - ω/2, reference + ω/2]`.
pub fn fold_to_zone(x: f64, reference: f64, omega: f64) -> f64 {
    let half = 0.5 * omega;
    let shifted = x - reference + half;
    let mut y = shifted - omega * (shifted / omega).floor();
    if y == 0.0 {
        y = omega;
    }
    // y ∈ (0, ω]
    y + reference - half
}

/// `Γ = -2 Im E`, with roundoff-level negatives read as zero.
pub fn width_of(energy: Complex64) -> f64 {
    let g = -2.0 * energy.im;
    if g < 0.0 && g > -WIDTH_ROUNDOFF {
        0.0
    } else {
        g
    }
}

/// Labelled quasienergies at field amplitude `field` and frequency `omega`.
///
/// Labels come from the field-free spectrum and are continued to `field` in
/// `continuation_steps` equal amplitude steps.
pub fn quasienergies(
    model: &FloquetModel,
    field: f64,
    omega: f64,
    options: &TrackingOptions,
) -> Result<QuasienergySpectrum> {
    let zero = model.operator(0.0, omega, options.n_photon)?.diagonalize()?;
    let mut state: Vec<(Branch, Vec<Complex64>)> = (0..model.n_levels())
        .map(|v| {
            let j = zero.dominant(v);
            (
                Branch {
                    level: v,
                    energy: zero.energies[j],
                    index: j,
                    flagged: false,
                },
                zero.column(j),
            )
        })
        .collect();
    let steps = if field == 0.0 {
        0
    } else {
        options.continuation_steps.max(1)
    };
    let mut raw = zero;
    for s in 1..=steps {
        let f = field * s as f64 / steps as f64;
        raw = model.operator(f, omega, options.n_photon)?.diagonalize()?;
        for (b, vec) in state.iter_mut() {
            let m = raw.follow(b.energy, vec, options.tie_tolerance);
            b.index = m.index;
            b.energy = raw.energies[m.index];
            b.flagged |= m.flagged;
            *vec = raw.column(m.index);
        }
    }
    Ok(QuasienergySpectrum {
        field,
        omega,
        n_photon: options.n_photon,
        raw,
        branches: state.into_iter().map(|(b, _)| b).collect(),
    })
}

/// Same as [`quasienergies`] with the field given as intensity (W/cm²) and
/// the frequency as wavelength (nm).
pub fn quasienergies_at(
    model: &FloquetModel,
    intensity: f64,
    wavelength: f64,
    options: &TrackingOptions,
) -> Result<QuasienergySpectrum> {
    quasienergies(
        model,
        units::intensity_to_field(intensity)?,
        units::wavelength_to_omega(wavelength)?,
        options,
    )
}

/// Largest move of any labelled quasienergy when one more photon block is
/// added on each side; errors if it exceeds `tolerance`.
pub fn photon_convergence(
    model: &FloquetModel,
    field: f64,
    omega: f64,
    options: &TrackingOptions,
    tolerance: f64,
) -> Result<f64> {
    let a = quasienergies(model, field, omega, options)?;
    let wider = TrackingOptions {
        n_photon: options.n_photon + 1,
        ..*options
    };
    let b = quasienergies(model, field, omega, &wider)?;
    let shift = a
        .branches
        .iter()
        .zip(&b.branches)
        .map(|(x, y)| (x.energy - y.energy).norm())
        .fold(0.0, f64::max);
    if shift > tolerance {
        return Err(Error::PhotonConvergence { shift, tolerance });
    }
    Ok(shift)
}

/// A quasienergy branch followed along a pulse contour.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchTrack {
    pub level: usize,
    pub times: Vec<f64>,
    pub intensities: Vec<f64>,
    pub wavelengths: Vec<f64>,
    pub omegas: Vec<f64>,
    pub energies: Vec<Complex64>,
    pub widths: Vec<f64>,
    /// Samples whose match was ambiguous even after subdivision.
    pub flagged: Vec<bool>,
}

impl BranchTrack {
    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }

    /// CSV rows `t,I,lambda,omega,Re_E,Im_E,Gamma,flagged`.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,I,lambda,omega,Re_E,Im_E,Gamma,flagged")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{:.10e},{:.10e},{:.10e},{:.10e},{:.12e},{:.12e},{:.12e},{}",
                self.times[i],
                self.intensities[i],
                self.wavelengths[i],
                self.omegas[i],
                self.energies[i].re,
                self.energies[i].im,
                self.widths[i],
                self.flagged[i] as u8
            )?;
        }
        Ok(())
    }
}

/// Follows the quasienergy of `level` around `contour` at `samples` equally
/// spaced times, starting from the field-free level at `t = 0`.
pub fn track_branch(
    model: &FloquetModel,
    contour: &PulseContour,
    level: usize,
    samples: usize,
    options: &TrackingOptions,
) -> Result<BranchTrack> {
    if samples < 100 {
        return Err(Error::Domain {
            quantity: "samples",
            value: samples as f64,
            reason: "branch tracking needs at least 100 contour samples",
        });
    }
    if level >= model.n_levels() {
        return Err(Error::IndexOutOfRange {
            what: "vibrational level",
            index: level,
            len: model.n_levels(),
        });
    }
    let point = |t: f64| -> Result<(f64, f64, f64, f64)> {
        let s = contour.sample(t)?;
        let omega = if options.use_effective_frequency {
            s.omega_eff
        } else {
            s.omega
        };
        Ok((s.intensity, s.wavelength, s.amplitude, omega))
    };
    let spectrum_at = |t: f64| -> Result<RawSpectrum> {
        let (_, _, e0, w) = point(t)?;
        model.operator(e0, w, options.n_photon)?.diagonalize()
    };

    let t_tot = contour.t_tot;
    let mut track = BranchTrack {
        level,
        times: Vec::with_capacity(samples),
        intensities: Vec::with_capacity(samples),
        wavelengths: Vec::with_capacity(samples),
        omegas: Vec::with_capacity(samples),
        energies: Vec::with_capacity(samples),
        widths: Vec::with_capacity(samples),
        flagged: Vec::with_capacity(samples),
    };
    let first = spectrum_at(0.0)?;
    let j0 = first.dominant(level);
    let mut energy = first.energies[j0];
    let mut vector = first.column(j0);
    let push = |track: &mut BranchTrack, t: f64, e: Complex64, flag: bool| -> Result<()> {
        let (i, l, _, w) = point(t)?;
        track.times.push(t);
        track.intensities.push(i);
        track.wavelengths.push(l);
        track.omegas.push(w);
        track.energies.push(e);
        track.widths.push(width_of(e));
        track.flagged.push(flag);
        Ok(())
    };
    push(&mut track, 0.0, energy, false)?;
    let dt = t_tot / (samples - 1) as f64;
    for i in 1..samples {
        let t = if i == samples - 1 { t_tot } else { i as f64 * dt };
        let raw = spectrum_at(t)?;
        let m = raw.follow(energy, &vector, options.tie_tolerance);
        let (e, v, flagged) = if m.flagged && options.continuation_steps > 1 {
            // Retry through intermediate contour points.
            let t_prev = track.times[i - 1];
            let sub = options.continuation_steps;
            let (mut e, mut v) = (energy, vector.clone());
            let mut flagged = false;
            for s in 1..=sub {
                let ts = t_prev + (t - t_prev) * s as f64 / sub as f64;
                let r = if s == sub { raw.clone() } else { spectrum_at(ts)? };
                let ms = r.follow(e, &v, options.tie_tolerance);
                flagged |= ms.flagged;
                e = r.energies[ms.index];
                v = r.column(ms.index);
            }
            (e, v, flagged)
        } else {
            (raw.energies[m.index], raw.column(m.index), m.flagged)
        };
        energy = e;
        vector = v;
        push(&mut track, t, energy, flagged)?;
    }
    Ok(track)
}

/// `1 - exp(-∫Γ dt)` by the trapezoidal rule over the sampled widths.
pub fn adiabatic_pdiss(times: &[f64], widths: &[f64]) -> Result<f64> {
    if times.len() != widths.len() {
        return Err(Error::LengthMismatch {
            expected: times.len(),
            found: widths.len(),
        });
    }
    if let Some((i, g)) = widths
        .iter()
        .enumerate()
        .find(|(_, g)| !(**g >= 0.0) || !g.is_finite())
    {
        return Err(Error::InvalidInput(format!(
            "width sample {i} is {g}; widths must be finite and nonnegative"
        )));
    }
    let integral: f64 = times
        .windows(2)
        .zip(widths.windows(2))
        .map(|(t, g)| 0.5 * (t[1] - t[0]) * (g[0] + g[1]))
        .sum();
    Ok(-(-integral).exp_m1())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::builtin_h2plus;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(x: Complex64) -> Mat<Complex64> {
        Mat::from_fn(1, 1, |_, _| x)
    }

    fn two_level(delta: f64, mu: f64) -> FloquetModel {
        FloquetModel::from_matrices(scalar(c(0.0, 0.0)), scalar(c(delta, 0.0)), scalar(c(mu, 0.0)))
            .unwrap()
    }

    fn small_h2plus() -> FloquetModel {
        let grid = RadialGrid::new(0.5, 14.0, 128).unwrap();
        let cap = AbsorbingPotential::new(0.5, 10.0).unwrap();
        FloquetModel::from_potentials(&builtin_h2plus(), &grid, &cap, 0.005, 0.15).unwrap()
    }

    #[test]
    fn zero_field_gives_levels_modulo_photons() {
        let model = small_h2plus();
        let omega = units::wavelength_to_omega(420.0).unwrap();
        let opts = TrackingOptions {
            n_photon: 2,
            ..Default::default()
        };
        let s = quasienergies(&model, 0.0, omega, &opts).unwrap();
        let levels = model.level_energies();
        assert_eq!(s.branches.len(), levels.len());
        let block = linalg::complex_eigenvalues(&model.h1).unwrap();
        for b in s.branches.iter().filter(|b| b.level < 10) {
            let nearest = block
                .iter()
                .map(|e| (e - b.energy).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-12, "{b:?}");
            assert!((b.energy.re - levels[b.level]).abs() < 1e-9, "{b:?}");
            assert!(b.width().abs() < 1e-9, "{b:?}");
        }
        // every eigenvalue of a field-free block sits on a level plus 2kω
        for e in &s.raw.energies {
            assert!(e.im <= 1e-12);
        }
    }

    #[test]
    fn operator_layout_and_symmetry() {
        let model = two_level(1.0, 0.5);
        let op = model.operator(0.2, 0.9, 3).unwrap();
        // blocks k = -3..3 → channel 2,1,2,1,2,1,2
        assert_eq!(op.dimension(), 7);
        let m = op.matrix();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(m[(i, j)], m[(j, i)]);
            }
            if i + 1 < 7 {
                assert_relative_eq!(m[(i, i + 1)].re, -0.05, epsilon = 1e-15);
            }
        }
        let k0 = m[(3, 3)];
        assert_eq!(k0, c(0.0, 0.0));
        assert_relative_eq!(m[(2, 2)].re, 1.0 - 0.9, epsilon = 1e-15);
        assert!(model.operator(0.2, 0.9, 0).is_err());
        assert!(model.operator(0.2, -1.0, 2).is_err());
    }

    #[test]
    fn driven_two_level_splitting_matches_generalized_rabi() {
        let (delta, omega, coupling) = (1.0, 0.95, 0.02);
        let model = two_level(delta, 1.0);
        let opts = TrackingOptions {
            n_photon: 6,
            ..Default::default()
        };
        let s = quasienergies(&model, coupling, omega, &opts).unwrap();
        let e_ground = s.branch(0).unwrap().energy.re;
        // partner: the dressed excited state nearest Δ - ω
        let partner = s
            .raw
            .energies
            .iter()
            .map(|e| e.re)
            .filter(|&e| (e - e_ground).abs() > 1e-6)
            .min_by(|a, b| (a - (delta - omega)).abs().total_cmp(&(b - (delta - omega)).abs()))
            .unwrap();
        let split = (partner - e_ground).abs();
        let rabi = ((delta - omega).powi(2) + coupling.powi(2)).sqrt();
        let margin = coupling * coupling / (delta + omega);
        assert!((split - rabi).abs() < margin, "{split} vs {rabi} ± {margin}");
    }

    #[test]
    fn photon_truncation_converges() {
        let model = two_level(1.0, 1.0);
        let opts = TrackingOptions {
            n_photon: 6,
            ..Default::default()
        };
        let shift = photon_convergence(&model, 0.02, 0.95, &opts, 1e-9).unwrap();
        assert!(shift < 1e-9);
        let coarse = TrackingOptions { n_photon: 1, ..opts };
        assert!(matches!(
            photon_convergence(&model, 0.3, 0.4, &coarse, 1e-12),
            Err(Error::PhotonConvergence { .. })
        ));
    }

    #[test]
    fn weak_field_width_is_linear_in_intensity() {
        let model = small_h2plus();
        let omega = units::wavelength_to_omega(420.0).unwrap();
        let opts = TrackingOptions {
            n_photon: 2,
            continuation_steps: 2,
            ..Default::default()
        };
        let width = |intensity: f64| {
            let f = units::intensity_to_field(intensity).unwrap();
            quasienergies(&model, f, omega, &opts).unwrap().branch(8).unwrap().width()
        };
        let (i1, i2) = (1e10, 5e9);
        let slope1 = width(i1) / i1;
        let slope2 = width(i2) / i2;
        assert!(slope1 > 0.0);
        assert!((slope1 / slope2 - 1.0).abs() < 1e-2, "{slope1} {slope2}");
    }

    #[test]
    fn widths_are_nonnegative_in_the_dressed_spectrum() {
        let model = small_h2plus();
        let f = units::intensity_to_field(3e12).unwrap();
        let opts = TrackingOptions {
            n_photon: 2,
            continuation_steps: 2,
            ..Default::default()
        };
        let s = quasienergies(&model, f, 0.1, &opts).unwrap();
        for e in &s.raw.energies {
            assert!(width_of(*e) >= 0.0, "{e}");
        }
    }

    #[test]
    fn trivial_loop_returns_to_start() {
        let model = two_level(1.0, 1.0);
        let contour = PulseContour::new(1e10, 600.0, 5.0, 2000.0).unwrap();
        let opts = TrackingOptions {
            n_photon: 3,
            ..Default::default()
        };
        let track = track_branch(&model, &contour, 0, 128, &opts).unwrap();
        assert_eq!(track.times.len(), 128);
        assert_eq!(*track.times.last().unwrap(), 2000.0);
        assert!((track.energies[127] - track.energies[0]).norm() < 1e-12);
        assert_eq!(track.flagged_count(), 0);
        assert!(track.widths.iter().all(|&g| g >= 0.0));
        assert!(track_branch(&model, &contour, 0, 99, &opts).is_err());
        assert!(track_branch(&model, &contour, 1, 128, &opts).is_err());
    }

    #[test]
    fn tracking_around_a_resonant_ep_flips_the_branch() {
        // Level at 0 dressed against a lossy state one photon up: the pair
        // coalesces where Δ = ω and μE₀ = γ.
        let (delta, gamma) = (0.1, 0.002);
        let model = FloquetModel::from_matrices(
            scalar(c(0.0, 0.0)),
            scalar(c(delta, -gamma)),
            scalar(c(1.0, 0.0)),
        )
        .unwrap();
        let lambda0 = units::omega_to_wavelength(delta).unwrap();
        let i_ep = units::field_to_intensity(gamma);
        let contour = PulseContour::new(3.0 * i_ep, lambda0, 20.0, 1000.0).unwrap();
        let opts = TrackingOptions {
            n_photon: 1,
            use_effective_frequency: false,
            ..Default::default()
        };
        let track = track_branch(&model, &contour, 0, 400, &opts).unwrap();
        assert!(track.energies[0].norm() < 1e-15);
        // field-free end point: the lossy copy sits at Δ - ω = -iγ exactly
        let end = *track.energies.last().unwrap();
        assert!((end - c(0.0, -gamma)).norm() < 1e-12, "{end}");
        assert_relative_eq!(track.widths[399], 2.0 * gamma, epsilon = 1e-10);

        let small = PulseContour::new(0.1 * i_ep, lambda0, 20.0, 1000.0).unwrap();
        let track = track_branch(&model, &small, 0, 400, &opts).unwrap();
        assert!(track.energies[399].norm() < 1e-12);
    }

    #[test]
    fn adiabatic_formula_closed_forms() {
        let t: Vec<f64> = (0..101).map(|i| i as f64).collect();
        assert_eq!(adiabatic_pdiss(&t, &vec![0.0; 101]).unwrap(), 0.0);
        let p = adiabatic_pdiss(&t, &vec![0.01; 101]).unwrap();
        assert_relative_eq!(p, 1.0 - (-1.0f64).exp(), epsilon = 1e-14);
        let mut bad = vec![0.01; 101];
        bad[40] = -1e-3;
        assert!(matches!(adiabatic_pdiss(&t, &bad), Err(Error::InvalidInput(_))));
        assert!(adiabatic_pdiss(&t, &[0.0]).is_err());
    }

    #[test]
    fn fold_examples() {
        assert_relative_eq!(fold_to_zone(0.25, 0.0, 0.1), 0.05, epsilon = 1e-15);
        assert_relative_eq!(fold_to_zone(0.05, 0.0, 0.1), 0.05, epsilon = 1e-15);
        assert_relative_eq!(fold_to_zone(-0.05, 0.0, 0.1), 0.05, epsilon = 1e-15);
        assert_relative_eq!(fold_to_zone(-0.04, 0.0, 0.1), -0.04, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn fold_lands_in_zone(x in -10.0f64..10.0, r in -1.0f64..1.0, w in 0.01f64..1.0) {
            let y = fold_to_zone(x, r, w);
            prop_assert!(y > r - 0.5 * w - 1e-12 && y <= r + 0.5 * w + 1e-12);
            let k = ((x - y) / w).round();
            prop_assert!((x - y - k * w).abs() < 1e-9);
        }

        #[test]
        fn zone_shift_by_omega_permutes_spectrum(
            xs in proptest::collection::vec(-3.0f64..3.0, 1..12),
            r in -0.5f64..0.5,
            w in 0.05f64..0.5,
        ) {
            let mut a: Vec<f64> = xs.iter().map(|&x| fold_to_zone(x, r, w) + w).collect();
            let mut b: Vec<f64> = xs.iter().map(|&x| fold_to_zone(x, r + w, w)).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
