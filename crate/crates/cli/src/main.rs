//! `epflip`: chirped-pulse wavepacket and Floquet experiments on diatomics.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use epflip_core::config::{load_config, RunConfig};
use epflip_core::floquet::EpSearch;
use epflip_core::runner::{self, EpTarget};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "epflip", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Propagate the wavepacket along the pulse; writes a trace CSV and a summary.
    Propagate {
        #[command(flatten)]
        common: Common,
        /// Rerun with a halved time step and perturbed absorber.
        #[arg(long)]
        check_convergence: bool,
    },
    /// Repeat the propagation for several total durations.
    DurationScan {
        #[command(flatten)]
        common: Common,
        /// Comma-separated pulse durations in atomic units.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        durations: Vec<f64>,
        /// Run the durations concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Labelled Floquet quasienergies at one intensity and wavelength.
    Floquet {
        #[command(flatten)]
        common: Common,
        /// Intensity in W/cm².
        #[arg(long)]
        intensity: f64,
        /// Wavelength in nm.
        #[arg(long)]
        wavelength: f64,
    },
    /// Search a box in the (intensity, wavelength) plane for an exceptional point.
    EpSearch {
        #[command(flatten)]
        common: Common,
        /// `x_min,x_max,y_min,y_max`; x is intensity in units of 1e13 W/cm²
        /// (1e9 for Na2), y is wavelength in nm.
        #[arg(long = "box", value_delimiter = ',', required = true, allow_hyphen_values = true)]
        search_box: Vec<f64>,
        /// The two vibrational levels whose resonances should coalesce.
        #[arg(long, value_delimiter = ',', default_values_t = [8, 9])]
        levels: Vec<usize>,
        /// Search the analytic 2×2 model instead (EP at the origin).
        #[arg(long)]
        analytic_model: bool,
    },
    /// Adiabatic dissociation estimate from the tracked Floquet width.
    AdiabaticPredict {
        #[command(flatten)]
        common: Common,
        /// Also propagate and report both numbers.
        #[arg(long)]
        compare: bool,
    },
    /// Field-free vibrational levels of the bound channel.
    BoundStates {
        #[command(flatten)]
        common: Common,
    },
    /// Sample the pulse contour.
    Contour {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 512)]
        samples: usize,
    },
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<epflip_core::Error> for Failure {
    fn from(e: epflip_core::Error) -> Self {
        let code = if e.is_config_error() {
            EXIT_CONFIG
        } else {
            EXIT_NUMERICAL
        };
        Failure {
            code,
            error: e.into(),
        }
    }
}

fn usage(error: anyhow::Error) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        error,
    }
}

fn load(common: &Common) -> Result<(RunConfig, PathBuf), Failure> {
    let cfg = load_config(&common.config)
        .map_err(|e| usage(anyhow::Error::new(e).context(format!("loading {}", common.config.display()))))?;
    let base = common
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    Ok((cfg, base))
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Propagate {
            common,
            check_convergence,
        } => {
            let (cfg, base) = load(&common)?;
            let (summary, paths) =
                runner::cmd_propagate(&cfg, &base, &common.out_dir, check_convergence)?;
            println!("P_diss = {:.6}", summary.p_diss);
            if let Some(f) = summary.fractions {
                println!(
                    "surviving fractions: initial {:.4}, target {:.4}, other {:.4}",
                    f.initial, f.target, f.other
                );
            }
            if let Some(c) = summary.convergence {
                println!(
                    "convergence: dt halved {:.2e}, absorber {:.2e}",
                    c.dt_halved_delta, c.cap_delta
                );
            }
            println!("wrote {} and {}", paths.trace.display(), paths.summary.display());
        }
        Command::DurationScan {
            common,
            durations,
            parallel,
        } => {
            let (cfg, base) = load(&common)?;
            let (rows, path) =
                runner::cmd_duration_scan(&cfg, &base, &common.out_dir, &durations, parallel)?;
            for r in &rows {
                println!("{}", r.csv_row());
            }
            println!("wrote {}", path.display());
        }
        Command::Floquet {
            common,
            intensity,
            wavelength,
        } => {
            let (cfg, base) = load(&common)?;
            let (spectrum, path) =
                runner::cmd_floquet(&cfg, &base, &common.out_dir, intensity, wavelength)?;
            println!("{} labelled levels", spectrum.branches.len());
            println!("wrote {}", path.display());
        }
        Command::EpSearch {
            common,
            search_box,
            levels,
            analytic_model,
        } => {
            let (cfg, base) = load(&common)?;
            let [x0, x1, y0, y1] = search_box[..] else {
                return Err(usage(anyhow!("--box takes four values")));
            };
            let [a, b] = levels[..] else {
                return Err(usage(anyhow!("--levels takes two values")));
            };
            let target = if analytic_model {
                EpTarget::Analytic
            } else {
                EpTarget::Molecular { levels: (a, b) }
            };
            let search = EpSearch::new((x0, x1), (y0, y1));
            let (outcome, path) =
                runner::cmd_ep_search(&cfg, &base, &common.out_dir, target, &search)?;
            let c = outcome.candidate();
            println!(
                "{}: x = {:.9}, y = {:.9}, separation {:.3e}, exponent {:.3}",
                outcome.kind(),
                c.x,
                c.y,
                c.separation,
                c.exponent
            );
            println!("wrote {}", path.display());
        }
        Command::AdiabaticPredict { common, compare } => {
            let (cfg, base) = load(&common)?;
            let (report, _) = runner::cmd_adiabatic_predict(&cfg, &base, &common.out_dir, compare)?;
            println!("adiabatic P_diss = {:.6}", report.predicted_p_diss);
            if let Some(p) = report.propagated_p_diss {
                println!("propagated P_diss = {p:.6}");
            }
            if report.flagged_samples > 0 {
                println!("{} ambiguous tracking samples", report.flagged_samples);
            }
        }
        Command::BoundStates { common } => {
            let (cfg, base) = load(&common)?;
            let (basis, path) = runner::cmd_bound_states(&cfg, &base, &common.out_dir)?;
            for (v, e) in basis.energies.iter().enumerate() {
                println!("v = {v:2}  E = {e:.10e}");
            }
            println!("wrote {}", path.display());
        }
        Command::Contour { common, samples } => {
            let (cfg, _) = load(&common)?;
            let path = runner::cmd_contour(&cfg, &common.out_dir, samples)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
