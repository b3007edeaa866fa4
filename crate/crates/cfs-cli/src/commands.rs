//! The subcommands. Each returns a finished table (or report lines) so that
//! nothing is written unless the whole computation succeeded.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use cfs_core::chain::chain_invariants;
use cfs_core::em_perturb::{calibrate_green, default_calibration_grid, f1_block, EmSetup, Potential};
use cfs_core::error::CfsError;
use cfs_core::kernel::{kernel_p_xi, RegKernelParams};
use cfs_core::quadrature::{ell_varied, integrate_lagrangian, integrate_p4, QuadratureReport};
use cfs_core::sea_variation::{default_lambda_list, holder_sweep};
use cfs_core::spinor::FourVector;
use cfs_core::verify::{run_suite, Suite, VerifyConfig};
use rayon::prelude::*;

use crate::config::{ConfigError, RunConfig};
use crate::table::{num, Table};

/// Largest cone-scan grid.
pub const MAX_GRID_POINTS: usize = 10_000_000;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Core(CfsError),
    Io(String),
    /// Verification checks failed (names listed).
    Failed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Failed(_) => 1,
            CliError::Core(e) => match e {
                CfsError::InvalidParameter { .. } => 2,
                CfsError::Domain(_) => 3,
                CfsError::NonConvergence(_) => 4,
                CfsError::Invariant(_) => 1,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Failed(names) => write!(f, "failed checks: {}", names.join(", ")),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<CfsError> for CliError {
    fn from(e: CfsError) -> Self {
        CliError::Core(e)
    }
}

fn params(cfg: &RunConfig) -> Result<RegKernelParams, CliError> {
    Ok(RegKernelParams::new(cfg.mass, cfg.epsilon)?)
}

fn parse_point(s: &str, option: &str) -> Result<FourVector, ConfigError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || ConfigError(format!("option '{option}': cannot parse point '{s}', expected t,x,y,z"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let mut v = [0.0; 4];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.parse::<f64>().map_err(|_| bad())?;
    }
    Ok(FourVector(v))
}

/// Points separated by `;`, each `t,x,y,z`. An empty string is an empty list.
/// Non-finite coordinates parse and are rejected downstream as domain errors.
pub fn parse_points(s: &str, option: &str) -> Result<Vec<FourVector>, ConfigError> {
    s.split(';').map(str::trim).filter(|p| !p.is_empty()).map(|p| parse_point(p, option)).collect()
}

/// One point `t,x,y,z` per line; blank lines and `#` comments skipped.
pub fn read_points(path: &Path) -> Result<Vec<FourVector>, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read point file {}: {e}", path.display())))?;
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| parse_point(l, "xi-file"))
        .collect()
}

pub fn parse_reals(s: &str, option: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ConfigError(format!("option '{option}': cannot parse '{p}' as a real number")))
        })
        .collect()
}

pub fn kernel(cfg: &RunConfig, points: &[FourVector]) -> Result<Table, CliError> {
    let p = params(cfg)?;
    let rows: Result<Vec<Vec<String>>, CfsError> = points
        .par_iter()
        .map(|&xi| {
            let k = kernel_p_xi(xi, p)?;
            Ok(vec![
                num(xi.t()),
                num(xi.spatial_norm()),
                num(k.f.re),
                num(k.f.im),
                num(k.g.re),
                num(k.g.im),
                num(k.spectral_norm()),
            ])
        })
        .collect();
    let mut t = Table::new(&["t", "r", "f_re", "f_im", "g_re", "g_im", "p_norm"]);
    rows?.into_iter().for_each(|r| t.push(r));
    Ok(t)
}

/// Uniform grid of the `(t, r)` half plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub t_min: f64,
    pub t_max: f64,
    pub nt: usize,
    pub r_min: f64,
    pub r_max: f64,
    pub nr: usize,
}

fn linspace(a: f64, b: f64, n: usize) -> impl Fn(usize) -> f64 {
    move |i| if n == 1 { a } else { a + (b - a) * i as f64 / (n - 1) as f64 }
}

pub fn cone_scan(cfg: &RunConfig, g: &Grid) -> Result<Table, CliError> {
    let p = params(cfg)?;
    let finite = [g.t_min, g.t_max, g.r_min, g.r_max].iter().all(|v| v.is_finite());
    if !finite || g.r_min < 0.0 || g.t_max < g.t_min || g.r_max < g.r_min {
        return Err(ConfigError("cone-scan: need finite ranges with t_min <= t_max and 0 <= r_min <= r_max".into()).into());
    }
    let total = g.nt.checked_mul(g.nr).filter(|&n| n <= MAX_GRID_POINTS);
    let total = total.ok_or_else(|| {
        ConfigError(format!("cone-scan: grid too large ({} x {} points, limit {MAX_GRID_POINTS})", g.nt, g.nr))
    })?;
    let (ts, rs) = (linspace(g.t_min, g.t_max, g.nt), linspace(g.r_min, g.r_max, g.nr));
    let rows: Result<Vec<Vec<String>>, CfsError> = (0..total)
        .into_par_iter()
        .map(|k| {
            let (t, r) = (ts(k / g.nr), rs(k % g.nr));
            let inv = chain_invariants(FourVector::new(t, r, 0.0, 0.0), FourVector::ZERO, p)?;
            Ok(vec![
                num(t),
                num(r),
                num(inv.a),
                num(inv.b),
                inv.classify().code().to_string(),
                num(inv.lagrangian()),
            ])
        })
        .collect();
    let mut table = Table::new(&["t", "r", "a", "b", "class", "lagrangian"]);
    rows?.into_iter().for_each(|r| table.push(r));
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Integral {
    P4,
    Lagrangian,
    Ell { lambda_var: f64 },
}

pub fn integrate(cfg: &RunConfig, which: Integral, timing: bool) -> Result<Table, CliError> {
    let p = params(cfg)?;
    let q = cfg.quad();
    let rep: QuadratureReport = match which {
        Integral::P4 => integrate_p4(p, &q)?,
        Integral::Lagrangian => integrate_lagrangian(p, &q)?,
        Integral::Ell { lambda_var } => ell_varied(lambda_var, p, &q)?,
    };
    let mut t = Table::new(&[
        "integral_name",
        "m",
        "epsilon",
        "lambda_region",
        "lambda_var",
        "value",
        "abs_err",
        "trunc_radius",
        "tail_bound",
        "panels",
        "seconds",
    ]);
    t.push(vec![
        rep.name.clone(),
        num(rep.m),
        num(rep.epsilon),
        num(rep.lambda_region),
        num(rep.lambda_var),
        num(rep.value),
        num(rep.abs_error_estimate),
        num(rep.truncation_radius),
        num(rep.tail_bound),
        rep.regions_evaluated.to_string(),
        num(if timing { rep.wall_time } else { 0.0 }),
    ]);
    Ok(t)
}

pub fn holder(cfg: &RunConfig, lambdas: Option<&[f64]>) -> Result<Table, CliError> {
    let p = params(cfg)?;
    let list = lambdas.map_or_else(|| default_lambda_list(cfg.epsilon), <[f64]>::to_vec);
    let sweep = holder_sweep(&list, p, &cfg.quad(), FourVector::ZERO)?;
    let mut t = Table::new(&["lambda", "dF_norm", "dEll", "ell_value", "alpha_fit_running"]);
    for r in &sweep.rows {
        t.push(vec![num(r.lambda), num(r.df_norm), num(r.d_ell), num(r.ell_value), num(r.alpha_fit_running)]);
    }
    Ok(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PotentialChoice {
    Default,
    Second,
}

pub fn em(cfg: &RunConfig, points: &[FourVector], z: FourVector, choice: PotentialChoice) -> Result<Table, CliError> {
    let p = params(cfg)?;
    let pot = match choice {
        PotentialChoice::Default => Potential::default_test(),
        PotentialChoice::Second => Potential::second_test(),
    };
    let rule = cfg.em_rule.rule();
    let grid = default_calibration_grid(&pot);
    let cal = calibrate_green(p, &pot, z, &grid, cfg.fd_step, &rule)?;
    let setup = EmSetup { params: p, green: cal.green, rule };
    let blocks: Result<Vec<_>, CfsError> = points.par_iter().map(|&x| f1_block(x, z, &pot, &setup)).collect();
    let mut header: Vec<String> = ["t", "x", "y", "z", "region", "alpha", "beta", "cauchy_residual"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for mu in 0..4 {
        for nu in 0..4 {
            header.push(format!("e{mu}{nu}_re"));
            header.push(format!("e{mu}{nu}_im"));
        }
    }
    let mut t = Table { header, rows: Vec::new() };
    for (x, block) in points.iter().zip(blocks?) {
        let region = if pot.support.causal_margin(*x) < 0.0 { "causal_exterior" } else { "causal_future" };
        let mut row = vec![num(x.0[0]), num(x.0[1]), num(x.0[2]), num(x.0[3]), region.to_string()];
        row.extend([num(cal.green.alpha), num(cal.green.beta), num(cal.relative_residual)]);
        for mu in 0..4 {
            for nu in 0..4 {
                row.push(num(block[(mu, nu)].re));
                row.push(num(block[(mu, nu)].im));
            }
        }
        t.push(row);
    }
    Ok(t)
}

/// Run the named suites. Returns the summary lines and the names of the
/// failed checks.
pub fn verify(cfg: &RunConfig, suites: &[Suite], timing: bool) -> (Vec<String>, Vec<String>) {
    let vc = VerifyConfig {
        seed: cfg.seed,
        m: cfg.mass,
        eps: cfg.epsilon,
        quad: cfg.quad(),
        mc_samples: cfg.mc_samples,
        em_rule: cfg.em_rule.rule(),
        fd_step: cfg.fd_step,
    };
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    let mut total = 0;
    for &suite in suites {
        let start = Instant::now();
        let report = run_suite(suite, &vc);
        if timing {
            eprintln!("suite {} finished in {:.2} s", suite.name(), start.elapsed().as_secs_f64());
        }
        for c in &report.checks {
            total += 1;
            lines.push(c.summary_line());
            if !c.passed {
                failed.push(format!("{}/{}", suite.name(), c.name));
            }
        }
    }
    let status = if failed.is_empty() { "PASS" } else { "FAIL" };
    lines.push(format!(
        "summary status={status} suites={} checks={total} failed={}",
        suites.len(),
        failed.len()
    ));
    (lines, failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_lists() {
        assert!(parse_points("", "xi").unwrap().is_empty());
        let p = parse_points("0,0,0,0; 1,-2,0.5,3", "xi").unwrap();
        assert_eq!(p[1], FourVector::new(1.0, -2.0, 0.5, 3.0));
        assert!(parse_points("1,2,3", "xi").unwrap_err().0.contains("'xi'"));
        assert_eq!(parse_reals("0.1, -0.2", "lambdas").unwrap(), vec![0.1, -0.2]);
        assert!(parse_reals("x", "lambdas").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Core(CfsError::Domain("x".into())).exit_code(), 3);
        assert_eq!(CliError::Core(CfsError::NonConvergence("x".into())).exit_code(), 4);
        assert_eq!(CliError::Core(CfsError::Invariant("x".into())).exit_code(), 1);
        assert_eq!(CliError::Config(ConfigError("x".into())).exit_code(), 2);
        assert_eq!(CliError::Failed(vec![]).exit_code(), 1);
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let g = Grid { t_min: 0.0, t_max: 1.0, nt: 10_000, r_min: 0.0, r_max: 1.0, nr: 10_000 };
        assert_eq!(cone_scan(&RunConfig::default(), &g).unwrap_err().exit_code(), 2);
    }
}
