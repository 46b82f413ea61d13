//! Command-line front end: studies, identity suites and radial oracle queries.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use threshold_dynamics::harness::{
    exact_sphere_radius, phase_snapshot, radial_trajectory, run_study_with, verify_all, write_report,
    ConvergenceReport, StudyConfig, StudyKind,
};

#[derive(Parser)]
#[command(name = "mbo", version, about = "Threshold dynamics for mean curvature flow")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the study named in a config file.
    Run(StudyArgs),
    /// Run a convergence study (consistency by default).
    Converge(StudyArgs),
    /// Run the curvature/ball/perimeter stability study.
    Stability(StudyArgs),
    /// Run every identity suite.
    Verify(VerifyArgs),
    /// Exact MBO steps on a ball against the exact flow.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// JSON config; absent fields take the study's defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for the CSV and JSON reports.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for per-step PGM images of the phase.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// JSON config; only its seed is used.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    r0: f64,
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1)]
    steps: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        set_threads(n)?;
    }
    match cli.command {
        Command::Run(a) => {
            let Some(path) = &a.config else { bail!("run needs --config") };
            let cfg = StudyConfig::load(path).with_context(|| format!("reading {}", path.display()))?;
            study(cfg, &a)
        }
        Command::Converge(a) => {
            let cfg = config_or_default(&a.config, StudyKind::Consistency)?;
            if matches!(cfg.study, StudyKind::Stability | StudyKind::Topology) {
                bail!("{} is not a convergence study", cfg.study.name());
            }
            study(cfg, &a)
        }
        Command::Stability(a) => {
            let cfg = config_or_default(&a.config, StudyKind::Stability)?;
            if cfg.study != StudyKind::Stability {
                bail!("expected a stability config, got {}", cfg.study.name());
            }
            study(cfg, &a)
        }
        Command::Verify(a) => verify(&a),
        Command::Oracle(a) => oracle(&a),
    }
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) -> Result<()> {
    Ok(())
}

fn config_or_default(path: &Option<PathBuf>, kind: StudyKind) -> Result<StudyConfig> {
    match path {
        Some(p) => StudyConfig::load(p).with_context(|| format!("reading {}", p.display())),
        None => Ok(StudyConfig::defaults(kind)),
    }
}

fn study(mut cfg: StudyConfig, a: &StudyArgs) -> Result<bool> {
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let snapshots = a.snapshots.clone().or_else(|| cfg.output.snapshots.clone());
    let report = run_study_with(&cfg, |view| match &snapshots {
        Some(dir) => phase_snapshot(dir, view.step, view.phase),
        None => Ok(()),
    })?;
    let (csv, json) = write_report(&report, &a.out, &cfg.output)?;
    print_report(&report);
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(report.pass)
}

fn print_report(report: &ConvergenceReport) {
    println!("study {}", report.study.name());
    if let Some(fit) = &report.fit {
        println!("  slope {:.4}  95% CI [{:.4}, {:.4}]", fit.slope, fit.ci.0, fit.ci.1);
    }
    for c in &report.checks {
        let status = match (c.gated, c.pass) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        println!("  {status} {} = {:.6e} (limit {:.3e})", c.name, c.value, c.limit);
    }
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    let mut seed = 0;
    if let Some(p) = &a.config {
        seed = StudyConfig::load(p).with_context(|| format!("reading {}", p.display()))?.seed;
    }
    let report = verify_all(a.seed.unwrap_or(seed))?;
    for s in &report.suites {
        let status = if s.pass { "PASS" } else { "FAIL" };
        println!(
            "{status} {:<26} max error {:.3e} (tolerance {:.1e}, {} samples)",
            s.name, s.max_error, s.tolerance, s.samples
        );
    }
    write_json(&a.out, "verify.json", &serde_json::to_value(&report)?)?;
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
    Ok(report.pass)
}

fn oracle(a: &OracleArgs) -> Result<bool> {
    if !(a.dim == 2 || a.dim == 3) {
        bail!("dim must be 2 or 3");
    }
    if !(a.h > 0.0 && a.h < a.r0 * a.r0) {
        bail!("need 0 < h < r0^2");
    }
    let radii = radial_trajectory(a.r0, a.h, a.steps, a.dim)?;
    let rows: Vec<_> = radii
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let exact = exact_sphere_radius(a.r0, a.dim - 1, k as f64 * a.h).ok();
            json!({ "step": k, "t": k as f64 * a.h, "radius": r, "exact_radius": exact })
        })
        .collect();
    let out = json!({
        "r0": a.r0,
        "h": a.h,
        "dim": a.dim,
        "extinct_after": (radii.len() <= a.steps).then_some(radii.len()),
        "steps": rows,
    });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(true)
}

fn write_json(dir: &Path, name: &str, value: &serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(value)? + "\n")?;
    println!("wrote {}", path.display());
    Ok(())
}
