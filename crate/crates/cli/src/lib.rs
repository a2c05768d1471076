//! Subcommands of the `carleman` executable.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use carleman_core::audit::run_property_audit;
use carleman_core::diffusion::{self, steady_state};
use carleman_core::harness::{run_sweep_with_artifacts, tol_quad, write_audit_csv, ResidualStats};
use carleman_core::io::{create_file, write_diffusion_snapshots, write_kinetic_snapshots};
use carleman_core::kinetic;
use carleman_core::{Error, TimeFn};
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "carleman",
    version,
    about = "Kinetic and diffusion solvers for the generalized Carleman diffusion limit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Run directory (default ./runs/<unix-time>)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Maximum number of concurrent solver runs
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Seed for randomized suites
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output stride override (steps between recorded rows)
    #[arg(long)]
    pub stride: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One kinetic run
    Kinetic {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// One run of the limiting diffusion equation
    Diffusion {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Epsilon sweep against the diffusion reference
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Seeded property checks of the entropy layer
    Audit {
        /// Samples per check
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Table of closed-form steady states
    Steady {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of x points in the table
        #[arg(long, default_value_t = 11)]
        points: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Kinetic { .. } => "kinetic",
            Command::Diffusion { .. } => "diffusion",
            Command::Sweep { .. } => "sweep",
            Command::Audit { .. } => "audit",
            Command::Steady { .. } => "steady",
        }
    }

    pub fn common(&self) -> &CommonArgs {
        match self {
            Command::Kinetic { common, .. }
            | Command::Diffusion { common, .. }
            | Command::Sweep { common, .. }
            | Command::Audit { common, .. }
            | Command::Steady { common, .. } => common,
        }
    }
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NumericalAbort { .. } | Error::NewtonFailure { .. } => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: format!("io error: {e}"),
        }
    }
}

/// What a subcommand reports back for the manifest.
#[derive(Debug, Default)]
pub struct Outcome {
    pub config_echo: String,
    pub lines: Vec<String>,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn default_out_dir() -> PathBuf {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    PathBuf::from("runs").join(secs.to_string())
}

fn load(path: &Path, stride: Option<usize>) -> Result<RunConfig, Failure> {
    let mut cfg = parse_config(path)?;
    if stride.is_some() {
        cfg.output_stride = stride;
    }
    Ok(cfg)
}

fn cmd_kinetic(
    path: &Path,
    common: &CommonArgs,
    out: &Path,
    echo: &mut String,
) -> Result<Outcome, Failure> {
    let cfg = load(path, common.stride)?;
    *echo = format!("{cfg:?}");
    let kcfg = cfg.kinetic_config()?;
    let result = kinetic::run(&kcfg)?;
    write_kinetic_snapshots(
        &out.join("fields"),
        &result.snapshots,
        &kcfg.grid,
        kcfg.epsilon,
    )?;
    let tol = tol_quad(kcfg.grid.dx(), result.dt);
    let mut lines = vec![format!(
        "steps {} dt {} mass defect {:.3e}",
        result.steps,
        result.dt,
        result.mass.relative_defect()
    )];
    for ledger in &result.ledgers {
        ledger.write_csv(create_file(
            &out.join(format!("ledger_beta{}.csv", ledger.beta)),
        )?)?;
        let s = ResidualStats::from_ledger(ledger, tol);
        lines.push(format!(
            "beta {}: residual within tol {}/{} (max {:.3e}, tol {:.3e})",
            s.beta, s.within_tol, s.steps, s.max_residual, s.tol
        ));
    }
    Ok(Outcome {
        config_echo: echo.clone(),
        lines,
    })
}

fn cmd_diffusion(
    path: &Path,
    common: &CommonArgs,
    out: &Path,
    echo: &mut String,
) -> Result<Outcome, Failure> {
    let cfg = load(path, common.stride)?;
    *echo = format!("{cfg:?}");
    let dcfg = cfg.diffusion_config()?;
    let result = diffusion::solve(&dcfg)?;
    write_diffusion_snapshots(&out.join("fields"), &result.trajectory, dcfg.stride)?;
    let defect = (result.final_mass - result.initial_mass - result.flux_mass).abs();
    Ok(Outcome {
        config_echo: echo.clone(),
        lines: vec![format!(
            "steps {} max newton iterations {} mass bookkeeping defect {:.3e}",
            result.steps, result.max_newton_iterations, defect
        )],
    })
}

fn cmd_sweep(
    path: &Path,
    common: &CommonArgs,
    out: &Path,
    echo: &mut String,
) -> Result<Outcome, Failure> {
    let cfg = load(path, common.stride)?;
    *echo = format!("{cfg:?}");
    let mut scfg = cfg.sweep_config()?;
    scfg.jobs = common.jobs.max(1);
    let art = run_sweep_with_artifacts(&scfg)?;
    let rep = &art.report;
    rep.write_csv(create_file(&out.join("convergence.csv"))?)?;
    write_audit_csv(&rep.audit, create_file(&out.join("audit.csv"))?)?;

    let mut res = create_file(&out.join("entropy_residuals.csv"))?;
    writeln!(res, "epsilon,beta,steps,within_tol,max_residual,tol")?;
    for row in &rep.rows {
        for s in &row.residual_stats {
            writeln!(
                res,
                "{},{},{},{},{},{}",
                row.epsilon, s.beta, s.steps, s.within_tol, s.max_residual, s.tol
            )?;
        }
    }
    for (eps, run) in scfg.epsilons.iter().zip(&art.runs) {
        if let Ok(run) = run {
            for ledger in &run.ledgers {
                let name = format!("eps{eps}/ledger_beta{}.csv", ledger.beta);
                ledger.write_csv(create_file(&out.join(name))?)?;
            }
        }
    }

    let f = rep.flags;
    let mut lines: Vec<String> = rep
        .rows
        .iter()
        .map(|r| {
            format!(
                "eps {:<8} l2 {:.4e} left {:.4e} right {:.4e}{}",
                r.epsilon,
                r.l2_err,
                r.boundary_err_left,
                r.boundary_err_right,
                r.failure
                    .as_deref()
                    .map(|m| format!(" FAILED: {m}"))
                    .unwrap_or_default()
            )
        })
        .collect();
    lines.push(format!("flags {f:?}"));
    let outcome = Outcome {
        config_echo: echo.clone(),
        lines,
    };
    if !f.all_runs_ok {
        let msg = rep
            .rows
            .iter()
            .filter_map(|r| r.failure.clone())
            .next()
            .unwrap_or_default();
        print_lines(&outcome);
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: msg,
        });
    }
    if !f.all() {
        print_lines(&outcome);
        return Err(Failure {
            code: EXIT_ACCEPTANCE,
            message: format!("sweep acceptance flags failed: {f:?}"),
        });
    }
    Ok(outcome)
}

fn cmd_audit(
    samples: usize,
    common: &CommonArgs,
    out: &Path,
    echo: &mut String,
) -> Result<Outcome, Failure> {
    *echo = format!("seed={} samples={samples}", common.seed);
    let summary = run_property_audit(common.seed, samples);
    let mut f = create_file(&out.join("audit_properties.csv"))?;
    writeln!(f, "check,samples,passed,worst_margin")?;
    for c in &summary.checks {
        writeln!(f, "{},{},{},{}", c.name, c.samples, c.passed, c.worst)?;
    }
    let passed: usize = summary.checks.iter().map(|c| c.passed).sum();
    let total: usize = summary.checks.iter().map(|c| c.samples).sum();
    let mut lines: Vec<String> = summary.checks.iter().map(|c| c.to_string()).collect();
    lines.push(format!("property checks passed: {passed}/{total}"));
    let outcome = Outcome {
        config_echo: echo.clone(),
        lines,
    };
    if !summary.ok() {
        print_lines(&outcome);
        return Err(Failure {
            code: EXIT_ACCEPTANCE,
            message: "property audit failed".into(),
        });
    }
    Ok(outcome)
}

fn cmd_steady(
    config: Option<&Path>,
    points: usize,
    out: &Path,
    echo: &mut String,
) -> Result<Outcome, Failure> {
    let (left, right) = match config {
        Some(p) => {
            let cfg = parse_config(p)?;
            match (cfg.bc_left, cfg.bc_right) {
                (TimeFn::Constant { c: l }, TimeFn::Constant { c: r }) => (l, r),
                _ => {
                    return Err(Failure {
                        code: EXIT_VALIDATION,
                        message: "steady states need constant boundary data".into(),
                    })
                }
            }
        }
        None => (1.0, 2.0),
    };
    *echo = format!("phi_minus={left} phi_plus={right} points={points}");
    let points = points.max(2);
    let alphas = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let mut f = create_file(&out.join("steady.csv"))?;
    writeln!(f, "x,alpha_m1,alpha_m0.5,alpha_0,alpha_0.5,alpha_1")?;
    let mut lines = vec![format!(
        "{:>6} {}",
        "x",
        alphas.map(|a| format!("{a:>10}")).join(" ")
    )];
    for k in 0..points {
        let x = k as f64 / (points - 1) as f64;
        let vals = alphas.map(|a| steady_state(a, left, right, x));
        writeln!(f, "{x},{}", vals.map(|v| v.to_string()).join(","))?;
        lines.push(format!(
            "{x:>6.3} {}",
            vals.map(|v| format!("{v:>10.6}")).join(" ")
        ));
    }
    Ok(Outcome {
        config_echo: echo.clone(),
        lines,
    })
}

fn print_lines(o: &Outcome) {
    for l in &o.lines {
        println!("{l}");
    }
}

fn write_manifest(
    out: &Path,
    cmd: &Command,
    echo: &str,
    start: f64,
    code: i32,
    message: &str,
) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    let mut f = std::fs::File::create(out.join("manifest.txt"))?;
    writeln!(f, "subcommand: {}", cmd.name())?;
    writeln!(f, "version: {}", env!("CARGO_PKG_VERSION"))?;
    writeln!(f, "seed: {}", cmd.common().seed)?;
    writeln!(f, "config: {echo}")?;
    writeln!(f, "start_unix: {start:.3}")?;
    writeln!(f, "end_unix: {:.3}", unix_now())?;
    writeln!(f, "exit_status: {code}")?;
    if !message.is_empty() {
        writeln!(f, "message: {}", message.replace('\n', " "))?;
    }
    Ok(())
}

/// Runs a parsed command and returns the process exit code. The manifest is
/// written to the run directory on every path.
pub fn execute(cli: &Cli) -> i32 {
    let start = unix_now();
    let cmd = &cli.command;
    let common = cmd.common();
    let out = common.out.clone().unwrap_or_else(default_out_dir);
    let mut echo = String::new();

    let result = std::fs::create_dir_all(&out)
        .map_err(Failure::from)
        .and_then(|_| match cmd {
            Command::Kinetic { config, .. } => cmd_kinetic(config, common, &out, &mut echo),
            Command::Diffusion { config, .. } => cmd_diffusion(config, common, &out, &mut echo),
            Command::Sweep { config, .. } => cmd_sweep(config, common, &out, &mut echo),
            Command::Audit { samples, .. } => cmd_audit(*samples, common, &out, &mut echo),
            Command::Steady { config, points, .. } => {
                cmd_steady(config.as_deref(), *points, &out, &mut echo)
            }
        });

    let (code, message) = match result {
        Ok(outcome) => {
            print_lines(&outcome);
            (EXIT_OK, String::new())
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            (f.code, f.message)
        }
    };
    if let Err(e) = write_manifest(&out, cmd, &echo, start, code, &message) {
        eprintln!("error: cannot write manifest: {e}");
    }
    code
}
