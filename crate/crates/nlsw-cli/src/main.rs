//! Batch driver for the wave-operator Schrödinger solver: single integrations
//! with snapshot output, plus the three standard convergence studies
//! (spatial, temporal, diagonal), each emitting deterministic CSV tables, a
//! full-precision JSON document, and a manifest describing the run.
//!
//! Exit codes: 0 success, 1 configuration error, 2 numerical blow-up.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use nlsw::analysis::{
    diagonal_csv, diagonal_sweep, rate_table_errors_csv, rate_table_rates_csv, spatial_sweep,
    temporal_sweep, DiagonalSweepConfig, SpatialSweepConfig, TemporalSweepConfig,
};
use nlsw::reference::ProblemData;
use nlsw::spectral::build_grid;
use nlsw::stepper::{integrate, Nonlinearity};

#[derive(Parser)]
#[command(
    name = "nlsw",
    version,
    about = "Solver and convergence-study driver for the Schrödinger equation with wave operator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write solution snapshots.
    Run(RunArgs),
    /// Spatial refinement study: fixed small step, grid spacing halved.
    Spatial(CommonArgs),
    /// Temporal refinement study: fixed grid, step divided by 4.
    Temporal(CommonArgs),
    /// Diagonal scan: (eps, tau) -> (eps/2, tau/4) along one path.
    Diagonal(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Configuration file (.json or .toml); schema in the README.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Use the full-resolution study settings (overnight scale) instead of
    /// the desk-scale defaults.
    #[arg(long)]
    paper_exact: bool,
    /// Bound the number of parallel worker threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Directory for output files (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Directory for cached reference solutions, reused across invocations.
    #[arg(long, value_name = "DIR")]
    reference_cache: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Record every K-th time step in snapshots.csv (default: only the
    /// initial and final states).
    #[arg(long, value_name = "K")]
    snapshot_stride: Option<u64>,
}

/// One schema serves all subcommands; each reads the keys it needs and the
/// study drivers fall back to their desk-scale defaults for absent keys.
/// Unknown keys are rejected so typos cannot silently change a study.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    /// "gaussian" (default) or "single_mode".
    problem: Option<String>,
    /// Domain endpoints (default [-16, 16]).
    a: Option<f64>,
    b: Option<f64>,
    /// Sine-mode index for the single_mode problem (default 1).
    mode: Option<usize>,
    /// Cubic coupling: f(s) = lambda*s. Defaults: -1 (defocusing) for
    /// gaussian, 0 (linear) for single_mode.
    lambda: Option<f64>,

    // Single-run keys.
    eps: Option<f64>,
    alpha: Option<f64>,
    tau: Option<f64>,
    m: Option<usize>,
    t_final: Option<f64>,

    // Study overrides.
    eps_list: Option<Vec<f64>>,
    tau_list: Option<Vec<f64>>,
    h_list: Option<Vec<f64>>,
    ref_m: Option<usize>,
    ref_tau: Option<f64>,
    eps0: Option<f64>,
    tau0: Option<f64>,
    k_max: Option<usize>,
}

#[derive(Serialize)]
struct RunManifest {
    tool_version: String,
    subcommand: String,
    config_sha256: String,
    paper_exact: bool,
    wall_time_seconds: f64,
    /// Every file this invocation wrote into --out, itself included.
    outputs: Vec<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version are successes; anything else is a usage
            // problem and lands on the configuration-error exit code.
            return if e.use_stderr() {
                let _ = e.print();
                ExitCode::from(1)
            } else {
                let _ = e.print();
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Blow-up is the only failure the caller can do nothing about; everything
/// else is a configuration problem.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if matches!(cause.downcast_ref(), Some(nlsw::Error::BlowUp { .. })) {
            return 2;
        }
    }
    1
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let start = Instant::now();
    let (name, common, stride) = match &cli.command {
        Command::Run(args) => ("run", &args.common, args.snapshot_stride),
        Command::Spatial(args) => ("spatial", args, None),
        Command::Temporal(args) => ("temporal", args, None),
        Command::Diagonal(args) => ("diagonal", args, None),
    };

    let raw = fs::read(&common.config)
        .with_context(|| format!("reading config {}", common.config.display()))?;
    let config_sha256 = hex_sha256(&raw);
    let config = parse_config(&common.config, &raw)?;

    if let Some(jobs) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    fs::create_dir_all(&common.out)
        .with_context(|| format!("creating output directory {}", common.out.display()))?;

    let cache = common.reference_cache.as_deref();
    let mut outputs = Vec::new();
    match &cli.command {
        Command::Run(_) => cmd_run(&config, stride, &common.out, &mut outputs)?,
        Command::Spatial(_) => {
            cmd_spatial(&config, common.paper_exact, cache, &common.out, &mut outputs)?
        }
        Command::Temporal(_) => {
            cmd_temporal(&config, common.paper_exact, cache, &common.out, &mut outputs)?
        }
        Command::Diagonal(_) => {
            cmd_diagonal(&config, common.paper_exact, cache, &common.out, &mut outputs)?
        }
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: name.to_string(),
        config_sha256,
        paper_exact: common.paper_exact,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs: {
            let mut all = outputs.clone();
            all.push("manifest.json".to_string());
            all
        },
    };
    let json = serde_json::to_string_pretty(&manifest).context("serializing manifest")?;
    fs::write(common.out.join("manifest.json"), json + "\n")
        .with_context(|| format!("writing manifest into {}", common.out.display()))?;
    Ok(())
}

fn hex_sha256(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn parse_config(path: &Path, raw: &[u8]) -> anyhow::Result<FileConfig> {
    let text = std::str::from_utf8(raw)
        .with_context(|| format!("config {} is not UTF-8", path.display()))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => serde_json::from_str(text)
            .with_context(|| format!("parsing JSON config {}", path.display())),
        Some("toml") => toml::from_str(text)
            .with_context(|| format!("parsing TOML config {}", path.display())),
        _ => bail!(
            "config {} must have a .json or .toml extension",
            path.display()
        ),
    }
}

fn required<T: Copy>(value: Option<T>, key: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| anyhow!("missing required key `{key}` in config"))
}

/// f(s) = lambda*s, with the canonical names preserved so cached references
/// produced through the library are shared.
fn cubic_family(lambda: f64) -> Nonlinearity {
    if lambda == 0.0 {
        Nonlinearity::none()
    } else if lambda == -1.0 {
        Nonlinearity::cubic()
    } else {
        Nonlinearity::custom(format!("cubic_scaled_{lambda}"), move |s| lambda * s, move |_| {
            lambda
        })
    }
}

fn build_problem(cfg: &FileConfig) -> anyhow::Result<ProblemData> {
    let kind = cfg.problem.as_deref().unwrap_or("gaussian");
    let a = cfg.a.unwrap_or(-16.0);
    let b = cfg.b.unwrap_or(16.0);
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        bail!("domain [{a}, {b}] is not a proper interval");
    }
    match kind {
        "gaussian" => {
            if cfg.mode.is_some() {
                bail!("key `mode` only applies to the single_mode problem");
            }
            let lambda = cfg.lambda.unwrap_or(-1.0);
            if (a, b, lambda) == (-16.0, 16.0, -1.0) {
                return Ok(ProblemData::gaussian());
            }
            Ok(ProblemData::custom(
                format!("gaussian_a{a}_b{b}_lambda{lambda}"),
                a,
                b,
                |x| {
                    Complex64::new(
                        std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp(),
                        0.0,
                    )
                },
                |x| Complex64::new((-x * x / 2.0).exp(), 0.0),
                None,
                cubic_family(lambda),
            ))
        }
        "single_mode" => {
            let mode = cfg.mode.unwrap_or(1);
            if mode == 0 {
                bail!("key `mode` must be at least 1");
            }
            let lambda = cfg.lambda.unwrap_or(0.0);
            if lambda == 0.0 {
                return Ok(ProblemData::single_mode(a, b, mode));
            }
            let mu = std::f64::consts::PI * mode as f64 / (b - a);
            Ok(ProblemData::custom(
                format!("single_mode_{mode}_a{a}_b{b}_lambda{lambda}"),
                a,
                b,
                move |x| Complex64::new((mu * (x - a)).sin(), 0.0),
                |_| Complex64::new(0.0, 0.0),
                None,
                cubic_family(lambda),
            ))
        }
        other => bail!("unknown problem `{other}` (expected `gaussian` or `single_mode`)"),
    }
}

/// Scientific notation with 6 significant digits — the fixed CSV float
/// format (full precision lives in the JSON documents).
fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

fn write_output(
    dir: &Path,
    name: &str,
    contents: &str,
    outputs: &mut Vec<String>,
) -> anyhow::Result<()> {
    fs::write(dir.join(name), contents)
        .with_context(|| format!("writing {} into {}", name, dir.display()))?;
    outputs.push(name.to_string());
    Ok(())
}

fn cmd_run(
    cfg: &FileConfig,
    stride: Option<u64>,
    out: &Path,
    outputs: &mut Vec<String>,
) -> anyhow::Result<()> {
    let eps = required(cfg.eps, "eps")?;
    let tau = required(cfg.tau, "tau")?;
    let m = required(cfg.m, "m")?;
    let alpha = cfg.alpha.unwrap_or(2.0);
    let t_final = cfg.t_final.unwrap_or(1.0);

    let problem = build_problem(cfg)?;
    let grid = build_grid(problem.a, problem.b, m)?;
    let solver = problem.solver_config(&grid, eps, alpha, tau, t_final);
    let n_steps = solver.step_count()?;
    let (psi0, omega) = problem.fields_on(&grid);
    let result = integrate(&solver, &psi0, &omega, Some(stride.unwrap_or(n_steps)))?;

    let mut csv = String::from("x,re,im\n");
    for snap in &result.snapshots {
        writeln!(csv, "# t={}", sci(snap.t)).unwrap();
        for (x, z) in snap.field.full_trace() {
            writeln!(csv, "{},{},{}", sci(x), sci(z.re), sci(z.im)).unwrap();
        }
    }
    write_output(out, "snapshots.csv", &csv, outputs)
}

fn cmd_spatial(
    cfg: &FileConfig,
    paper_exact: bool,
    cache: Option<&Path>,
    out: &Path,
    outputs: &mut Vec<String>,
) -> anyhow::Result<()> {
    let mut sweep = if paper_exact {
        SpatialSweepConfig::paper_exact()
    } else {
        SpatialSweepConfig::desk()
    };
    if let Some(v) = &cfg.eps_list {
        sweep.eps_list = v.clone();
    }
    if let Some(v) = &cfg.h_list {
        sweep.h_list = v.clone();
    }
    if let Some(v) = cfg.tau {
        sweep.tau = v;
    }
    if let Some(v) = cfg.alpha {
        sweep.alpha = v;
    }
    if let Some(v) = cfg.t_final {
        sweep.t_final = v;
    }
    if let Some(v) = cfg.ref_m {
        sweep.ref_m = v;
    }

    let table = spatial_sweep(&build_problem(cfg)?, &sweep, cache)?;
    write_output(out, "spatial_errors.csv", &rate_table_errors_csv(&table), outputs)?;
    write_output(out, "spatial_rates.csv", &rate_table_rates_csv(&table), outputs)?;
    let json = serde_json::to_string_pretty(&table).context("serializing spatial table")?;
    write_output(out, "spatial.json", &(json + "\n"), outputs)
}

fn cmd_temporal(
    cfg: &FileConfig,
    paper_exact: bool,
    cache: Option<&Path>,
    out: &Path,
    outputs: &mut Vec<String>,
) -> anyhow::Result<()> {
    let alpha = cfg.alpha.unwrap_or(2.0);
    let mut sweep = if paper_exact {
        TemporalSweepConfig::paper_exact(alpha)
    } else {
        TemporalSweepConfig::desk(alpha)
    };
    if let Some(v) = &cfg.eps_list {
        sweep.eps_list = v.clone();
    }
    if let Some(v) = &cfg.tau_list {
        sweep.tau_list = v.clone();
    }
    if let Some(v) = cfg.m {
        sweep.m = v;
    }
    if let Some(v) = cfg.t_final {
        sweep.t_final = v;
    }
    if let Some(v) = cfg.ref_m {
        sweep.ref_m = v;
    }
    if let Some(v) = cfg.ref_tau {
        sweep.ref_tau = v;
    }

    let table = temporal_sweep(&build_problem(cfg)?, &sweep, cache)?;
    write_output(out, "temporal_errors.csv", &rate_table_errors_csv(&table), outputs)?;
    write_output(out, "temporal_rates.csv", &rate_table_rates_csv(&table), outputs)?;
    let json = serde_json::to_string_pretty(&table).context("serializing temporal table")?;
    write_output(out, "temporal.json", &(json + "\n"), outputs)
}

fn cmd_diagonal(
    cfg: &FileConfig,
    paper_exact: bool,
    cache: Option<&Path>,
    out: &Path,
    outputs: &mut Vec<String>,
) -> anyhow::Result<()> {
    let mut sweep = if paper_exact {
        DiagonalSweepConfig::paper_exact()
    } else {
        DiagonalSweepConfig::desk()
    };
    if let Some(v) = cfg.eps0 {
        sweep.eps0 = v;
    }
    if let Some(v) = cfg.tau0 {
        sweep.tau0 = v;
    }
    if let Some(v) = cfg.k_max {
        sweep.k_max = v;
    }
    if let Some(v) = cfg.m {
        sweep.m = v;
    }
    if let Some(v) = cfg.alpha {
        sweep.alpha = v;
    }
    if let Some(v) = cfg.t_final {
        sweep.t_final = v;
    }
    if let Some(v) = cfg.ref_m {
        sweep.ref_m = v;
    }
    if let Some(v) = cfg.ref_tau {
        sweep.ref_tau = v;
    }

    let scan = diagonal_sweep(&build_problem(cfg)?, &sweep, cache)?;
    write_output(out, "diagonal.csv", &diagonal_csv(&scan), outputs)?;
    let json = serde_json::to_string_pretty(&scan).context("serializing diagonal scan")?;
    write_output(out, "diagonal.json", &(json + "\n"), outputs)
}
