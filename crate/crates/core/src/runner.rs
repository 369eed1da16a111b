//! Drivers behind the command-line subcommands.
//!
//! Every output file starts with `# `-prefixed lines holding the program
//! version and the resolved configuration, so a trace can be rerun from its
//! own header.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound_states::{initial_state, solve_bound, BoundStateBasis};
use crate::config::{Preset, RunConfig};
use crate::error::{Error, Result};
use crate::floquet::{
    adiabatic_pdiss, ep, locate_ep, quasienergies, track_branch, BranchTrack, EpOutcome,
    EpSearch, FloquetModel, QuasienergySpectrum, TrackingOptions,
};
use crate::grid::{AbsorbingPotential, RadialGrid};
use crate::observables::{
    csv_header, effective_energy, populations, surviving_fractions, ObservableRecord,
    SurvivingFractions,
};
use crate::propagator::Propagator;
use crate::pulse::Field;
use crate::units;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Unit (W/cm²) of the intensity axis in EP search boxes and reports.
pub fn ep_intensity_unit(preset: Preset) -> f64 {
    match preset {
        Preset::Na2 => 1e9,
        Preset::H2plus | Preset::H2plusExact | Preset::Tabulated => 1e13,
    }
}

/// Sensitivity of the final dissociation probability to numerical settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// `|ΔP_diss|` when the time step is halved.
    pub dt_halved_delta: f64,
    /// Largest `|ΔP_diss|` over doubling the absorber strength and moving
    /// its onset by 10 %.
    pub cap_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub version: String,
    pub p_diss: f64,
    pub populations: Vec<f64>,
    pub wall_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fractions: Option<SurvivingFractions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceReport>,
    pub config: RunConfig,
}

impl RunSummary {
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("summary serialises")
    }
}

/// Lines `# version` followed by the config as `# `-prefixed TOML.
pub fn config_header(cfg: &RunConfig) -> String {
    let mut h = format!("# epflip {VERSION}\n");
    for line in cfg.to_toml_string().lines() {
        h.push_str("# ");
        h.push_str(line);
        h.push('\n');
    }
    h
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(text.as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}

/// Everything a propagation needs, built once from a config.
pub struct PreparedRun {
    pub grid: RadialGrid,
    pub basis: BoundStateBasis,
    pub propagator: Propagator,
}

pub fn prepare(cfg: &RunConfig, base: &Path) -> Result<PreparedRun> {
    let grid = cfg.radial_grid()?;
    let pot = cfg.potentials(base)?;
    pot.validate(&grid)
        .map_err(|e| Error::config("molecule", e.to_string()))?;
    cfg.check_stability(&pot)?;
    let basis = solve_bound(&grid, &pot)?;
    for (field, v) in [("run.initial_v", cfg.run.initial_v), ("run.target_v", cfg.run.target_v)] {
        if v >= basis.len() {
            return Err(Error::config(
                field,
                format!("level {v} is not bound; the grid holds {} levels", basis.len()),
            ));
        }
    }
    let propagator = Propagator::new(&grid, &pot, &cfg.absorber()?)?;
    Ok(PreparedRun {
        grid,
        basis,
        propagator,
    })
}

/// Propagates the configured run, handing each sampled record to `on_record`.
pub fn run_propagation(
    cfg: &RunConfig,
    base: &Path,
    mut on_record: impl FnMut(&ObservableRecord) -> Result<()>,
) -> Result<RunSummary> {
    let started = Instant::now();
    let PreparedRun {
        basis,
        mut propagator,
        ..
    } = prepare(cfg, base)?;
    let pulse = cfg.pulse()?;
    let initial = initial_state(&basis, cfg.run.initial_v)?;
    let (vi, vt) = (cfg.run.initial_v, cfg.run.target_v);
    let floor = cfg.run.effective_energy_floor;
    let trace = propagator.propagate(
        &initial,
        &pulse,
        cfg.run.dt,
        cfg.run.sample_every,
        |prop, state| {
            let (p, p_diss) = populations(state, &basis)?;
            let fractions = surviving_fractions(&p, vi, vt).ok();
            let h_state = prop.apply_hamiltonian(state, pulse.value(state.t))?;
            let record = ObservableRecord {
                t: state.t,
                effective_energy: effective_energy(state, &h_state, &initial, floor),
                populations: p,
                p_diss,
                fractions,
            };
            on_record(&record)?;
            Ok((record.p_diss, record.populations, record.fractions))
        },
    )?;
    let (p_diss, populations, fractions) = trace.records.into_iter().last().expect("end sample");
    Ok(RunSummary {
        version: VERSION.into(),
        p_diss,
        populations,
        wall_time_s: started.elapsed().as_secs_f64(),
        fractions,
        convergence: None,
        config: cfg.clone(),
    })
}

/// Final `P_diss` only.
pub fn final_pdiss(cfg: &RunConfig, base: &Path) -> Result<f64> {
    Ok(run_propagation(cfg, base, |_| Ok(()))?.p_diss)
}

/// Reruns with `Δt/2`, with doubled absorber strength and with the absorber
/// onset moved by 10 % (outwards when it fits on the grid, else inwards).
pub fn convergence_check(cfg: &RunConfig, base: &Path, reference: f64) -> Result<ConvergenceReport> {
    let mut half = cfg.clone();
    half.run.dt *= 0.5;
    half.run.sample_every *= 2;
    let dt_halved_delta = (final_pdiss(&half, base)? - reference).abs();

    let mut cap_delta = 0.0f64;
    for variant in cap_variants(cfg) {
        cap_delta = cap_delta.max((final_pdiss(&variant, base)? - reference).abs());
    }
    Ok(ConvergenceReport {
        dt_halved_delta,
        cap_delta,
    })
}

/// Configs with the absorber strength doubled and with its onset shifted.
pub fn cap_variants(cfg: &RunConfig) -> Vec<RunConfig> {
    let mut strong = cfg.clone();
    strong.cap.strength *= 2.0;
    let mut moved = cfg.clone();
    let out = cfg.cap.r_start * 1.1;
    moved.cap.r_start = if out < cfg.grid.r_max {
        out
    } else {
        cfg.cap.r_start * 0.9
    };
    vec![strong, moved]
}

/// Output locations of a propagation.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagateOutputs {
    pub trace: PathBuf,
    pub summary: PathBuf,
}

/// Runs one propagation, streaming the trace CSV and writing the summary.
pub fn cmd_propagate(
    cfg: &RunConfig,
    base: &Path,
    out_dir: &Path,
    check_convergence: bool,
) -> Result<(RunSummary, PropagateOutputs)> {
    let trace_path = out_dir.join(&cfg.output.trace);
    let summary_path = out_dir.join(&cfg.output.summary);
    let mut out = create(&trace_path)?;
    let io = |e| Error::io(&trace_path, e);
    out.write_all(config_header(cfg).as_bytes()).map_err(io)?;
    let mut header_written = false;
    let mut summary = run_propagation(cfg, base, |rec| {
        if !header_written {
            writeln!(out, "{}", csv_header(rec.populations.len())).map_err(io)?;
            header_written = true;
        }
        writeln!(out, "{}", rec.csv_row()).map_err(io)
    })?;
    out.flush().map_err(io)?;
    if check_convergence {
        summary.convergence = Some(convergence_check(cfg, base, summary.p_diss)?);
    }
    write_text(&summary_path, &summary.to_toml_string())?;
    Ok((
        summary,
        PropagateOutputs {
            trace: trace_path,
            summary: summary_path,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub t_tot: f64,
    pub p_diss: f64,
    pub fractions: Option<SurvivingFractions>,
}

impl ScanRow {
    pub fn csv_row(&self) -> String {
        let f = match self.fractions {
            Some(f) => format!("{:.10e},{:.10e},{:.10e}", f.initial, f.target, f.other),
            None => "nan,nan,nan".into(),
        };
        format!("{:.10e},{:.10e},{f}", self.t_tot, self.p_diss)
    }
}

/// Independent propagations at each total duration, in input order.
pub fn duration_scan(
    cfg: &RunConfig,
    base: &Path,
    durations: &[f64],
    parallel: bool,
) -> Result<Vec<ScanRow>> {
    if durations.len() < 2 {
        return Err(Error::config("durations", "a scan needs at least two durations"));
    }
    let configs: Vec<RunConfig> = durations
        .iter()
        .map(|&t| {
            let mut c = cfg.clone();
            c.contour.t_tot = t;
            c.validate().map(|_| c)
        })
        .collect::<Result<_>>()?;
    let run = |c: &RunConfig| -> Result<ScanRow> {
        let s = run_propagation(c, base, |_| Ok(()))?;
        Ok(ScanRow {
            t_tot: c.contour.t_tot,
            p_diss: s.p_diss,
            fractions: s.fractions,
        })
    };
    if parallel {
        configs.par_iter().map(run).collect()
    } else {
        configs.iter().map(run).collect()
    }
}

pub fn cmd_duration_scan(
    cfg: &RunConfig,
    base: &Path,
    out_dir: &Path,
    durations: &[f64],
    parallel: bool,
) -> Result<(Vec<ScanRow>, PathBuf)> {
    let rows = duration_scan(cfg, base, durations, parallel)?;
    let path = out_dir.join("scan.csv");
    let mut text = config_header(cfg);
    text.push_str("T_tot,P_diss,f_initial,f_target,f_other\n");
    for r in &rows {
        text.push_str(&r.csv_row());
        text.push('\n');
    }
    write_text(&path, &text)?;
    Ok((rows, path))
}

/// Contracted Floquet model on the configured Floquet grid.
pub fn floquet_model(cfg: &RunConfig, base: &Path) -> Result<FloquetModel> {
    let f = &cfg.floquet;
    let grid = RadialGrid::new(f.grid.r_min, f.grid.r_max, f.grid.n)?;
    let cap = AbsorbingPotential::new(f.cap.strength, f.cap.r_start)?;
    FloquetModel::from_potentials(
        &cfg.potentials(base)?,
        &grid,
        &cap,
        f.bound_cutoff,
        f.repulsive_cutoff,
    )
}

pub fn tracking_options(cfg: &RunConfig) -> TrackingOptions {
    TrackingOptions {
        n_photon: cfg.floquet.n_photon,
        continuation_steps: cfg.floquet.continuation_steps,
        tie_tolerance: cfg.floquet.tie_tolerance,
        use_effective_frequency: cfg.floquet.use_effective_frequency,
    }
}

/// Labelled quasienergies at `(intensity, wavelength)`, folded around the
/// initial level.
pub fn cmd_floquet(
    cfg: &RunConfig,
    base: &Path,
    out_dir: &Path,
    intensity: f64,
    wavelength: f64,
) -> Result<(QuasienergySpectrum, PathBuf)> {
    let model = floquet_model(cfg, base)?;
    let field = units::intensity_to_field(intensity)?;
    let omega = units::wavelength_to_omega(wavelength)?;
    let spectrum = quasienergies(&model, field, omega, &tracking_options(cfg))?;
    let reference = model
        .level_energies()
        .get(cfg.run.initial_v)
        .copied()
        .unwrap_or(0.0);
    let path = out_dir.join("floquet.csv");
    let mut out = create(&path)?;
    let io = |e| Error::io(&path, e);
    out.write_all(config_header(cfg).as_bytes()).map_err(io)?;
    writeln!(
        out,
        "# intensity = {intensity:e} W/cm2, wavelength = {wavelength} nm, reference = {reference:.12e}"
    )
    .map_err(io)?;
    spectrum.write_csv(reference, &mut out).map_err(io)?;
    out.flush().map_err(io)?;
    Ok((spectrum, path))
}

/// What an EP search runs on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpTarget {
    /// `[[0, x + iy], [1, 0]]`, EP at the origin.
    Analytic,
    /// Dressed levels `a` and `b`; `x` is intensity in units of
    /// [`ep_intensity_unit`], `y` is wavelength in nm.
    Molecular { levels: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpReport {
    pub version: String,
    pub outcome: String,
    pub x: f64,
    pub y: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intensity_w_cm2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavelength_nm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<[usize; 2]>,
    pub separation: f64,
    pub exponent: f64,
    pub local_minimum: bool,
    pub evaluations: usize,
    pub search_box: [f64; 4],
    pub config: RunConfig,
}

pub fn analytic_ep_pair(x: f64, y: f64) -> Result<(Complex64, Complex64)> {
    let m = faer::Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => Complex64::new(x, y),
        (1, 0) => Complex64::new(1.0, 0.0),
        _ => Complex64::new(0.0, 0.0),
    });
    let e = crate::linalg::complex_eigenvalues(&m)?;
    Ok((e[0], e[1]))
}

pub fn cmd_ep_search(
    cfg: &RunConfig,
    base: &Path,
    out_dir: &Path,
    target: EpTarget,
    search: &EpSearch,
) -> Result<(EpOutcome, PathBuf)> {
    let unit = ep_intensity_unit(cfg.molecule.preset);
    let outcome = match target {
        EpTarget::Analytic => locate_ep(search, analytic_ep_pair)?,
        EpTarget::Molecular { levels } => {
            let model = floquet_model(cfg, base)?;
            let n_photon = cfg.floquet.n_photon;
            locate_ep(search, |x, y| {
                ep::molecular_pair(&model, n_photon, levels, unit, x, y)
            })?
        }
    };
    let c = outcome.candidate();
    let molecular = match target {
        EpTarget::Molecular { levels } => Some(levels),
        EpTarget::Analytic => None,
    };
    let report = EpReport {
        version: VERSION.into(),
        outcome: outcome.kind().into(),
        x: c.x,
        y: c.y,
        intensity_w_cm2: molecular.map(|_| c.x * unit),
        wavelength_nm: molecular.map(|_| c.y),
        levels: molecular.map(|(a, b)| [a, b]),
        separation: c.separation,
        exponent: c.exponent,
        local_minimum: c.local_minimum,
        evaluations: c.evaluations,
        search_box: [
            search.x_range.0,
            search.x_range.1,
            search.y_range.0,
            search.y_range.1,
        ],
        config: cfg.clone(),
    };
    let path = out_dir.join("ep.toml");
    write_text(&path, &toml::to_string(&report).expect("report serialises"))?;
    Ok((outcome, path))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdiabaticReport {
    pub version: String,
    pub level: usize,
    pub predicted_p_diss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub propagated_p_diss: Option<f64>,
    pub flagged_samples: usize,
    pub config: RunConfig,
}

/// Tracks the initial level's quasienergy around the contour and applies
/// the adiabatic formula; with `compare`, also propagates the same run.
pub fn cmd_adiabatic_predict(
    cfg: &RunConfig,
    base: &Path,
    out_dir: &Path,
    compare: bool,
) -> Result<(AdiabaticReport, BranchTrack)> {
    let model = floquet_model(cfg, base)?;
    let track = track_branch(
        &model,
        &cfg.pulse()?,
        cfg.run.initial_v,
        cfg.floquet.track_samples,
        &tracking_options(cfg),
    )?;
    let predicted = adiabatic_pdiss(&track.times, &track.widths)
        .map_err(|e| Error::Numerical {
            time: f64::NAN,
            message: format!("adiabatic prediction: {e}"),
        })?;
    let propagated = if compare {
        Some(final_pdiss(cfg, base)?)
    } else {
        None
    };
    let report = AdiabaticReport {
        version: VERSION.into(),
        level: cfg.run.initial_v,
        predicted_p_diss: predicted,
        propagated_p_diss: propagated,
        flagged_samples: track.flagged_count(),
        config: cfg.clone(),
    };
    let csv = out_dir.join("adiabatic.csv");
    let mut out = create(&csv)?;
    let io = |e| Error::io(&csv, e);
    out.write_all(config_header(cfg).as_bytes()).map_err(io)?;
    track.write_csv(&mut out).map_err(io)?;
    out.flush().map_err(io)?;
    write_text(
        &out_dir.join("adiabatic.toml"),
        &toml::to_string(&report).expect("report serialises"),
    )?;
    Ok((report, track))
}

/// Field-free vibrational levels on the propagation grid.
pub fn cmd_bound_states(cfg: &RunConfig, base: &Path, out_dir: &Path) -> Result<(BoundStateBasis, PathBuf)> {
    let grid = cfg.radial_grid()?;
    let pot = cfg.potentials(base)?;
    let basis = solve_bound(&grid, &pot)?;
    let path = out_dir.join("bound_states.csv");
    let mut out = create(&path)?;
    let io = |e| Error::io(&path, e);
    out.write_all(config_header(cfg).as_bytes()).map_err(io)?;
    basis.write_csv(&mut out).map_err(io)?;
    out.flush().map_err(io)?;
    Ok((basis, path))
}

/// The pulse contour sampled at `samples` points.
pub fn cmd_contour(cfg: &RunConfig, out_dir: &Path, samples: usize) -> Result<PathBuf> {
    let pulse = cfg.pulse()?;
    let path = out_dir.join("contour.csv");
    let mut out = create(&path)?;
    let io = |e| Error::io(&path, e);
    out.write_all(config_header(cfg).as_bytes()).map_err(io)?;
    pulse.write_csv(samples, &mut out)?;
    out.flush().map_err(io)?;
    Ok(path)
}
