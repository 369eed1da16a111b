//! Run configuration: a TOML file with one section per subsystem.
//!
//! ```toml
//! [molecule]
//! preset = "h2plus-exact"  # h2plus | h2plus-exact | na2 | tabulated
//!
//! [contour]
//! i_max = 0.3e13           # W/cm^2
//! lambda0 = 420.0          # nm
//! delta_lambda = 30.0      # nm
//! t_tot = 2315.0           # a.u.
//!
//! [run]
//! initial_v = 8
//! ```
//!
//! Grid, absorber, time step and Floquet settings fall back to per-molecule
//! defaults when omitted. A resolved configuration serialises back to a file
//! that reproduces the run exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{AbsorbingPotential, RadialGrid};
use crate::potentials::{builtin_h2plus, builtin_h2plus_exact, builtin_na2, PotentialSet};
use crate::pulse::{Orientation, PulseContour};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Analytic Morse / screened-Coulomb stand-in.
    H2plus,
    /// Tabulated exact Born–Oppenheimer curves.
    H2plusExact,
    Na2,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MoleculeConfig {
    pub preset: Preset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_curve: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repulsive_curve: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipole_curve: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_mass: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapConfig {
    pub strength: f64,
    pub r_start: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    pub i_max: f64,
    pub lambda0: f64,
    pub delta_lambda: f64,
    pub t_tot: f64,
    #[serde(default)]
    pub orientation: Orientation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    pub initial_v: usize,
    pub target_v: usize,
    pub dt: f64,
    pub sample_every: usize,
    pub effective_energy_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetConfig {
    /// Photon blocks run from `-n_photon` to `n_photon`.
    pub n_photon: usize,
    pub grid: GridConfig,
    pub cap: CapConfig,
    /// Bound-channel basis kept up to this energy above its asymptote.
    pub bound_cutoff: f64,
    /// Repulsive-channel basis kept up to this energy above its asymptote.
    pub repulsive_cutoff: f64,
    pub use_effective_frequency: bool,
    pub continuation_steps: usize,
    pub track_samples: usize,
    pub tie_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub trace: PathBuf,
    pub summary: PathBuf,
}

/// Fully resolved, validated configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub molecule: MoleculeConfig,
    pub grid: GridConfig,
    pub cap: CapConfig,
    pub contour: ContourConfig,
    pub run: RunSettings,
    pub floquet: FloquetConfig,
    pub output: OutputConfig,
}

// Partially specified sections as they appear on disk.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    initial_v: Option<usize>,
    target_v: Option<usize>,
    dt: Option<f64>,
    sample_every: Option<usize>,
    effective_energy_floor: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFloquet {
    n_photon: Option<usize>,
    grid: Option<GridConfig>,
    cap: Option<CapConfig>,
    bound_cutoff: Option<f64>,
    repulsive_cutoff: Option<f64>,
    use_effective_frequency: Option<bool>,
    continuation_steps: Option<usize>,
    track_samples: Option<usize>,
    tie_tolerance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    trace: Option<PathBuf>,
    summary: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    molecule: MoleculeConfig,
    grid: Option<GridConfig>,
    cap: Option<CapConfig>,
    contour: ContourConfig,
    #[serde(default)]
    run: RawRun,
    #[serde(default)]
    floquet: RawFloquet,
    #[serde(default)]
    output: RawOutput,
}

/// Per-molecule numerical defaults.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub grid: GridConfig,
    pub cap: CapConfig,
    pub dt: f64,
    pub sample_every: usize,
    pub floquet: FloquetConfig,
}

impl Defaults {
    pub fn for_preset(preset: Preset) -> Self {
        match preset {
            Preset::H2plus | Preset::H2plusExact | Preset::Tabulated => Self {
                grid: GridConfig { r_min: 0.5, r_max: 25.0, n: 1024 },
                cap: CapConfig { strength: 0.5, r_start: 20.0 },
                dt: 0.05,
                sample_every: 50,
                floquet: FloquetConfig {
                    n_photon: 6,
                    grid: GridConfig { r_min: 0.5, r_max: 14.0, n: 128 },
                    cap: CapConfig { strength: 0.5, r_start: 10.0 },
                    bound_cutoff: 0.02,
                    repulsive_cutoff: 0.2,
                    use_effective_frequency: true,
                    continuation_steps: 8,
                    track_samples: 128,
                    tie_tolerance: 1e-6,
                },
            },
            Preset::Na2 => Self {
                grid: GridConfig { r_min: 4.0, r_max: 60.0, n: 2048 },
                cap: CapConfig { strength: 0.02, r_start: 50.0 },
                dt: 0.25,
                sample_every: 400,
                floquet: FloquetConfig {
                    n_photon: 2,
                    grid: GridConfig { r_min: 6.0, r_max: 30.0, n: 256 },
                    cap: CapConfig { strength: 0.02, r_start: 24.0 },
                    bound_cutoff: 2e-4,
                    repulsive_cutoff: 0.008,
                    use_effective_frequency: true,
                    continuation_steps: 8,
                    track_samples: 128,
                    tie_tolerance: 1e-9,
                },
            },
        }
    }
}

impl RunConfig {
    /// Resolves defaults for `preset` around a contour and initial level.
    pub fn with_defaults(preset: Preset, contour: ContourConfig, initial_v: usize) -> Result<Self> {
        let d = Defaults::for_preset(preset);
        let cfg = Self {
            molecule: MoleculeConfig {
                preset,
                bound_curve: None,
                repulsive_curve: None,
                dipole_curve: None,
                reduced_mass: None,
            },
            grid: d.grid,
            cap: d.cap,
            contour,
            run: RunSettings {
                initial_v,
                target_v: default_target(initial_v),
                dt: d.dt,
                sample_every: d.sample_every,
                effective_energy_floor: crate::observables::EFFECTIVE_ENERGY_FLOOR,
            },
            floquet: d.floquet,
            output: OutputConfig {
                trace: "trace.csv".into(),
                summary: "summary.toml".into(),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| {
            let field = e
                .span()
                .map(|s| {
                    let upto = &text[..s.start.min(text.len())];
                    upto.lines().count().to_string()
                })
                .unwrap_or_else(|| "?".into());
            Error::config(format!("line {field}"), e.message().to_string())
        })?;
        let d = Defaults::for_preset(raw.molecule.preset);
        let initial_v = raw
            .run
            .initial_v
            .ok_or_else(|| Error::config("run.initial_v", "required"))?;
        let rf = raw.floquet;
        let cfg = Self {
            molecule: raw.molecule,
            grid: raw.grid.unwrap_or(d.grid),
            cap: raw.cap.unwrap_or(d.cap),
            contour: raw.contour,
            run: RunSettings {
                initial_v,
                target_v: raw.run.target_v.unwrap_or(default_target(initial_v)),
                dt: raw.run.dt.unwrap_or(d.dt),
                sample_every: raw.run.sample_every.unwrap_or(d.sample_every),
                effective_energy_floor: raw
                    .run
                    .effective_energy_floor
                    .unwrap_or(crate::observables::EFFECTIVE_ENERGY_FLOOR),
            },
            floquet: FloquetConfig {
                n_photon: rf.n_photon.unwrap_or(d.floquet.n_photon),
                grid: rf.grid.unwrap_or(d.floquet.grid),
                cap: rf.cap.unwrap_or(d.floquet.cap),
                bound_cutoff: rf.bound_cutoff.unwrap_or(d.floquet.bound_cutoff),
                repulsive_cutoff: rf.repulsive_cutoff.unwrap_or(d.floquet.repulsive_cutoff),
                use_effective_frequency: rf
                    .use_effective_frequency
                    .unwrap_or(d.floquet.use_effective_frequency),
                continuation_steps: rf
                    .continuation_steps
                    .unwrap_or(d.floquet.continuation_steps),
                track_samples: rf.track_samples.unwrap_or(d.floquet.track_samples),
                tie_tolerance: rf.tie_tolerance.unwrap_or(d.floquet.tie_tolerance),
            },
            output: OutputConfig {
                trace: raw.output.trace.unwrap_or_else(|| "trace.csv".into()),
                summary: raw.output.summary.unwrap_or_else(|| "summary.toml".into()),
            },
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        check_grid("grid", &self.grid)?;
        check_cap("cap", &self.cap, &self.grid)?;
        self.pulse()?;
        let r = &self.run;
        if !(r.dt > 0.0) || !r.dt.is_finite() {
            return Err(Error::config("run.dt", "must be finite and > 0"));
        }
        if r.sample_every == 0 {
            return Err(Error::config("run.sample_every", "must be >= 1"));
        }
        if !(r.effective_energy_floor >= 0.0) {
            return Err(Error::config("run.effective_energy_floor", "must be >= 0"));
        }
        let f = &self.floquet;
        if f.n_photon == 0 {
            return Err(Error::config("floquet.n_photon", "must be >= 1"));
        }
        check_grid("floquet.grid", &f.grid)?;
        check_cap("floquet.cap", &f.cap, &f.grid)?;
        if !(f.bound_cutoff > 0.0) {
            return Err(Error::config("floquet.bound_cutoff", "must be > 0"));
        }
        if !(f.repulsive_cutoff > 0.0) {
            return Err(Error::config("floquet.repulsive_cutoff", "must be > 0"));
        }
        if f.track_samples < 100 {
            return Err(Error::config("floquet.track_samples", "must be >= 100"));
        }
        if !(f.tie_tolerance >= 0.0) {
            return Err(Error::config("floquet.tie_tolerance", "must be >= 0"));
        }
        let m = &self.molecule;
        if m.preset == Preset::Tabulated {
            for (name, v) in [
                ("molecule.bound_curve", &m.bound_curve),
                ("molecule.repulsive_curve", &m.repulsive_curve),
                ("molecule.dipole_curve", &m.dipole_curve),
            ] {
                if v.is_none() {
                    return Err(Error::config(name, "required for the tabulated preset"));
                }
            }
            match m.reduced_mass {
                Some(x) if x > 0.0 => {}
                _ => return Err(Error::config("molecule.reduced_mass", "required and > 0")),
            }
        }
        Ok(())
    }

    /// Rejects time steps that resolve the potential phase too coarsely.
    pub fn check_stability(&self, potentials: &PotentialSet) -> Result<()> {
        let grid = self.radial_grid()?;
        let e0 = crate::units::intensity_to_field(self.contour.i_max)?;
        let scale = potentials.energy_scale(&grid, e0);
        if self.run.dt * scale >= 0.5 {
            return Err(Error::config(
                "run.dt",
                format!("dt * energy scale = {:.3} must stay below 0.5", self.run.dt * scale),
            ));
        }
        Ok(())
    }

    pub fn radial_grid(&self) -> Result<RadialGrid> {
        RadialGrid::new(self.grid.r_min, self.grid.r_max, self.grid.n)
    }

    pub fn absorber(&self) -> Result<AbsorbingPotential> {
        AbsorbingPotential::new(self.cap.strength, self.cap.r_start)
    }

    pub fn pulse(&self) -> Result<PulseContour> {
        let c = &self.contour;
        Ok(PulseContour::new(c.i_max, c.lambda0, c.delta_lambda, c.t_tot)?
            .with_orientation(c.orientation))
    }

    /// Potentials for the configured molecule; curve paths resolve against `base`.
    pub fn potentials(&self, base: &Path) -> Result<PotentialSet> {
        let m = &self.molecule;
        match m.preset {
            Preset::H2plus => Ok(builtin_h2plus()),
            Preset::H2plusExact => Ok(builtin_h2plus_exact()),
            Preset::Na2 => Ok(builtin_na2()),
            Preset::Tabulated => {
                let path = |p: &Option<PathBuf>| base.join(p.as_ref().expect("validated"));
                PotentialSet::from_files(
                    path(&m.bound_curve),
                    path(&m.repulsive_curve),
                    path(&m.dipole_curve),
                    m.reduced_mass.expect("validated"),
                )
            }
        }
    }
}

fn default_target(initial_v: usize) -> usize {
    if initial_v == 0 {
        1
    } else {
        initial_v - 1
    }
}

fn check_grid(section: &str, g: &GridConfig) -> Result<()> {
    if !(g.r_min < g.r_max) || !g.r_min.is_finite() || !g.r_max.is_finite() {
        return Err(Error::config(format!("{section}.r_min"), "must be finite and below r_max"));
    }
    if g.n < 4 || !g.n.is_power_of_two() {
        return Err(Error::config(format!("{section}.n"), format!("{} is not a power of two >= 4", g.n)));
    }
    Ok(())
}

fn check_cap(section: &str, c: &CapConfig, g: &GridConfig) -> Result<()> {
    if !(c.r_start > g.r_min && c.r_start < g.r_max) {
        return Err(Error::config(
            format!("{section}.r_start"),
            format!("{} must lie strictly between r_min {} and r_max {}", c.r_start, g.r_min, g.r_max),
        ));
    }
    if !(c.strength >= 0.0) || !c.strength.is_finite() {
        return Err(Error::config(format!("{section}.strength"), "must be finite and >= 0"));
    }
    Ok(())
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RUN_A: &str = r#"
[molecule]
preset = "h2plus"

[grid]
r_min = 0.5
r_max = 25.0
n = 1024

[cap]
strength = 0.5
r_start = 20.0

[contour]
i_max = 0.3e13
lambda0 = 420.0
delta_lambda = 30.0
t_tot = 2315.0

[run]
initial_v = 8
"#;

    #[test]
    fn run_a_round_trip() {
        let cfg = RunConfig::from_toml_str(RUN_A).unwrap();
        assert_eq!(cfg.contour.i_max, 0.3e13);
        assert_eq!(cfg.contour.lambda0, 420.0);
        assert_eq!(cfg.contour.delta_lambda, 30.0);
        assert_eq!(cfg.run.initial_v, 8);
        assert_eq!(cfg.run.target_v, 7);
        assert_eq!(cfg.run.dt, 0.05);
        assert_eq!(cfg.floquet.n_photon, 6);
        let echo = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(echo, cfg);
    }

    #[test]
    fn cap_outside_grid_names_field() {
        let bad = RUN_A.replace("r_start = 20.0", "r_start = 26.0");
        match RunConfig::from_toml_str(&bad) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "cap.r_start"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn invariant_violations() {
        let cases = [
            ("n = 1024", "n = 1000", "grid.n"),
            ("[run]\ninitial_v = 8", "[run]\ninitial_v = 8\ndt = -1.0", "run.dt"),
            ("t_tot = 2315.0", "t_tot = 0.0", "contour.t_tot"),
            ("[run]\ninitial_v = 8", "[run]\n", "run.initial_v"),
        ];
        for (from, to, field) in cases {
            match RunConfig::from_toml_str(&RUN_A.replace(from, to)) {
                Err(Error::Config { field: f, .. }) => assert_eq!(f, field),
                other => panic!("{to}: {other:?}"),
            }
        }
    }

    #[test]
    fn parse_failures_are_diagnostics() {
        for text in ["", "[molecule]\npreset = 3", "garbage ===", &RUN_A.replace("lambda0", "lambda_zero")] {
            assert!(matches!(RunConfig::from_toml_str(text), Err(Error::Config { .. })));
        }
        assert!(matches!(load_config("/nonexistent/cfg.toml"), Err(Error::Io { .. })));
    }

    #[test]
    fn tabulated_requires_paths() {
        let t = RUN_A.replace("preset = \"h2plus\"", "preset = \"tabulated\"");
        match RunConfig::from_toml_str(&t) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "molecule.bound_curve"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn na2_defaults() {
        let contour = ContourConfig {
            i_max: 0.37e9,
            lambda0: 559.0,
            delta_lambda: 1.3,
            t_tot: 33073.0,
            orientation: Orientation::Clockwise,
        };
        let cfg = RunConfig::with_defaults(Preset::Na2, contour, 3).unwrap();
        assert_eq!(cfg.grid.n, 2048);
        assert_eq!(cfg.run.dt, 0.25);
        assert_eq!(cfg.run.target_v, 2);
        cfg.check_stability(&cfg.potentials(Path::new(".")).unwrap()).unwrap();
    }

    #[test]
    fn coarse_step_is_rejected() {
        let mut cfg = RunConfig::from_toml_str(RUN_A).unwrap();
        let pot = cfg.potentials(Path::new(".")).unwrap();
        cfg.check_stability(&pot).unwrap();
        cfg.run.dt = 50.0;
        match cfg.check_stability(&pot) {
            Err(Error::Config { field, .. }) => assert_eq!(field, "run.dt"),
            other => panic!("{other:?}"),
        }
    }
}
