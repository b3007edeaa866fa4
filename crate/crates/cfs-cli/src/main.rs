//! `cfs`: command-line front end for the regularized Dirac-sea numerics.
//!
//! Exit codes: 0 ok, 1 failed invariant, 2 configuration error, 3 domain
//! error, 4 non-convergence.

mod commands;
mod config;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cfs_core::verify::Suite;
use clap::{Parser, Subcommand, ValueEnum};

use commands::{CliError, Grid, Integral, PotentialChoice};
use config::{ConfigError, RunConfig};
use table::Table;

#[derive(Parser, Debug)]
#[command(name = "cfs", version, about = "Kernels, causal structure, integrability and perturbation numerics of the regularized Dirac sea")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override a configuration key (repeatable).
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Write output here instead of standard output.
    #[arg(long, short = 'o', global = true, value_name = "PATH")]
    output: Option<PathBuf>,

    /// Fill the `seconds` column with wall-clock time (breaks bitwise
    /// reproducibility of that column).
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate the regularized kernel at a list of separation vectors.
    Kernel {
        /// Points `t,x,y,z` separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        xi: Option<String>,
        /// File with one point `t,x,y,z` per line.
        #[arg(long, value_name = "FILE")]
        xi_file: Option<PathBuf>,
    },
    /// Classify separations on a uniform (t, r) grid.
    ConeScan {
        #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
        t_min: f64,
        #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
        t_max: f64,
        #[arg(long, default_value_t = 101)]
        nt: usize,
        #[arg(long, default_value_t = 0.0)]
        r_min: f64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long, default_value_t = 101)]
        nr: usize,
    },
    /// Integrate a density over Minkowski space.
    Integrate {
        #[arg(value_enum)]
        which: Which,
        /// Additional regularization for `ell`.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        lambda_var: f64,
    },
    /// Hölder sweep of the Lagrangian along the regularization rescaling.
    Holder {
        /// Comma-separated shifts (default: epsilon times ±0.2, ±0.1, ±0.05, ±0.025).
        #[arg(long, allow_hyphen_values = true)]
        lambdas: Option<String>,
    },
    /// First-order electromagnetic perturbation matrix elements.
    Em {
        /// Evaluation points `t,x,y,z` separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Base point of the frame vectors.
        #[arg(long, default_value = "0,0,0,0", allow_hyphen_values = true)]
        z: String,
        #[arg(long, value_enum, default_value_t = PotentialArg::Default)]
        potential: PotentialArg,
    },
    /// Run verification suites (a name, a number 1-8, or `all`).
    Verify {
        #[arg(default_value = "all")]
        suite: String,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Which {
    P4,
    Lagrangian,
    Ell,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PotentialArg {
    Default,
    Second,
}

fn configure_threads() -> Result<(), ConfigError> {
    let Ok(v) = std::env::var("CFS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ConfigError(format!("CFS_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| ConfigError(format!("cannot configure thread pool: {e}")))
}

fn load_config(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(p) = &cli.output {
        cfg.output_path = Some(p.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

enum Output {
    Table(Table),
    Lines(Vec<String>),
}

fn emit(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let mut buf = Vec::new();
    match out {
        Output::Table(t) => t.write(&mut buf).map_err(|e| CliError::Io(e.to_string()))?,
        Output::Lines(lines) => {
            for l in lines {
                buf.extend_from_slice(l.as_bytes());
                buf.push(b'\n');
            }
        }
    }
    let res = match &cfg.output_path {
        Some(p) => std::fs::write(p, &buf).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().lock().write_all(&buf).map_err(|e| e.to_string()),
    };
    res.map_err(CliError::Io)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    configure_threads()?;
    let cfg = load_config(cli)?;
    let out = match &cli.command {
        Command::Kernel { xi, xi_file } => {
            let mut points = match xi {
                Some(s) => commands::parse_points(s, "xi")?,
                None => Vec::new(),
            };
            if let Some(path) = xi_file {
                points.extend(commands::read_points(path)?);
            }
            Output::Table(commands::kernel(&cfg, &points)?)
        }
        Command::ConeScan { t_min, t_max, nt, r_min, r_max, nr } => {
            let g = Grid { t_min: *t_min, t_max: *t_max, nt: *nt, r_min: *r_min, r_max: *r_max, nr: *nr };
            Output::Table(commands::cone_scan(&cfg, &g)?)
        }
        Command::Integrate { which, lambda_var } => {
            let w = match which {
                Which::P4 => Integral::P4,
                Which::Lagrangian => Integral::Lagrangian,
                Which::Ell => Integral::Ell { lambda_var: *lambda_var },
            };
            Output::Table(commands::integrate(&cfg, w, cli.timing)?)
        }
        Command::Holder { lambdas } => {
            let list = lambdas.as_deref().map(|s| commands::parse_reals(s, "lambdas")).transpose()?;
            Output::Table(commands::holder(&cfg, list.as_deref())?)
        }
        Command::Em { x, z, potential } => {
            let points = match x {
                Some(s) => commands::parse_points(s, "x")?,
                None => Vec::new(),
            };
            let z = commands::parse_points(z, "z")?;
            let [z] = z[..] else {
                return Err(ConfigError("option 'z': expected exactly one point t,x,y,z".into()).into());
            };
            let choice = match potential {
                PotentialArg::Default => PotentialChoice::Default,
                PotentialArg::Second => PotentialChoice::Second,
            };
            Output::Table(commands::em(&cfg, &points, z, choice)?)
        }
        Command::Verify { suite } => {
            let suites = if suite.trim().eq_ignore_ascii_case("all") {
                Suite::ALL.to_vec()
            } else {
                vec![Suite::from_name(suite)?]
            };
            let (lines, failed) = commands::verify(&cfg, &suites, cli.timing);
            emit(&cfg, &Output::Lines(lines))?;
            if !failed.is_empty() {
                return Err(CliError::Failed(failed));
            }
            return Ok(());
        }
    };
    emit(&cfg, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cfs: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
