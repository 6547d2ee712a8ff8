use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use wbga::algorithms::AlgorithmId;
use wbga::diagnostics::{applicable_bounds, full_audit, AuditReport, AuditTolerances, BoundKind};
use wbga::dictionary::SelectionRule;
use wbga::harness::{self, ExperimentConfig};
use wbga::selftest;

#[derive(Parser)]
#[command(
    name = "wbga",
    version,
    about = "Weak biorthogonal greedy algorithms: runs, sweeps and audits"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its CSV and JSON report.
    Run(RunArgs),
    /// Run every seed x algorithm x parameter combination of a config file.
    Sweep(SweepArgs),
    /// Check stored JSON reports against the conditions and rate bounds.
    Audit(AuditArgs),
    /// Run the built-in oracle and property checks.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    algo: Option<AlgorithmId>,
    /// e.g. lp:p=2,n=64
    #[arg(long)]
    space: Option<String>,
    /// e.g. random_gauss,N=256,seed=7
    #[arg(long)]
    dict: Option<String>,
    /// e.g. a1,k=16,seed=3
    #[arg(long)]
    target: Option<String>,
    /// const:<t>, pow:<t0>,<a> or list:<t1>;<t2>;...
    #[arg(long)]
    weakness: Option<String>,
    #[arg(long)]
    selection: Option<SelectionRule>,
    /// e.g. err:delta=pow:0.1,1.1,eta=pow:0.1,1.1
    #[arg(long)]
    errors: Option<String>,
    /// Maximum number of iterations.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    stop_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record per-step wall time (makes the CSV nondeterministic).
    #[arg(long)]
    timing: bool,
    /// Rate bounds to verify after the run.
    #[arg(long = "bound")]
    bounds: Vec<BoundKind>,
    /// CSV path; the JSON report goes next to it.
    #[arg(long, default_value = "run.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    config: PathBuf,
    /// Directory for the per-run artifacts (default: the config's `output` or `.`).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// JSON reports written by `run` or `sweep`.
    #[arg(required = true)]
    reports: Vec<PathBuf>,
    /// Rate bounds to verify; default is every bound that applies.
    #[arg(long = "bound")]
    bounds: Vec<BoundKind>,
    /// Write the audit results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Sweep(args) => sweep(args),
        Command::Audit(args) => audit(args),
        Command::Selftest => Ok(run_selftest()),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let missing = |name: &str| anyhow::anyhow!("--{name} is required without --config");
            ExperimentConfig::new(
                args.space.as_deref().ok_or_else(|| missing("space"))?,
                args.dict.as_deref().ok_or_else(|| missing("dict"))?,
                args.target.as_deref().ok_or_else(|| missing("target"))?,
                args.algo.ok_or_else(|| missing("algo"))?,
            )
        }
    };
    if let Some(v) = &args.space {
        config.space = v.clone();
    }
    if let Some(v) = &args.dict {
        config.dictionary = v.clone();
    }
    if let Some(v) = &args.target {
        config.target = v.clone();
    }
    if let Some(v) = args.algo {
        config.algorithms = vec![v];
    }
    if let Some(v) = &args.weakness {
        config.weakness = v.clone();
    }
    if let Some(v) = args.selection {
        config.selection = v;
    }
    if let Some(v) = &args.errors {
        config.errors = Some(v.clone());
    }
    if let Some(v) = args.iters {
        config.max_m = v;
    }
    if let Some(v) = args.stop_tol {
        config.stop_tol = v;
    }
    if let Some(v) = args.seed {
        config.seeds = vec![v];
    }
    config.timing |= args.timing;
    if !args.bounds.is_empty() {
        config.bounds = args.bounds.clone();
    }
    config.validate()?;
    Ok(config)
}

fn check_audit(audit: &AuditReport) -> bool {
    print!("{audit}");
    audit.passed()
}

fn run(args: RunArgs) -> Result<bool> {
    let config = run_config(&args)?;
    let mut instances = config.instances()?;
    if instances.len() != 1 {
        bail!(
            "the config describes {} runs; use `wbga sweep` for more than one",
            instances.len()
        );
    }
    let instance = instances.remove(0);
    let report = instance.run()?;
    let csv = harness::resolve_output(&args.out);
    let json = csv.with_extension("json");
    harness::emit_csv(&report, &csv)?;
    harness::write_report_json(&report, &json)?;
    println!(
        "{} {} iterations, final residual {:.6e} ({}); wrote {} and {}",
        report.algorithm,
        report.records.len(),
        report.norm_at(report.records.len()),
        report.termination,
        csv.display(),
        json.display()
    );
    if config.bounds.is_empty() {
        return Ok(true);
    }
    let audit = full_audit(&report, &config.bounds, &AuditTolerances::default())?;
    Ok(check_audit(&audit))
}

fn sweep(args: SweepArgs) -> Result<bool> {
    let config = ExperimentConfig::load(&args.config)?;
    let default_dir = args
        .out_dir
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let dir = harness::output_dir(&default_dir);
    let instances = config.instances()?;
    let results = harness::run_all(&instances);
    let mut reports = Vec::with_capacity(results.len());
    let mut all_pass = true;
    for (instance, result) in instances.iter().zip(results) {
        let label = instance.label();
        let report = result.with_context(|| format!("run {label}"))?;
        harness::write_artifacts(&report, &dir.join(&label))?;
        if !config.bounds.is_empty() {
            let audit = full_audit(&report, &config.bounds, &AuditTolerances::default())?;
            if !audit.passed() {
                all_pass = false;
                println!("{label}: FAIL {:?}", audit.failing());
            }
        }
        reports.push(report);
    }
    print!("{}", harness::summarize(&reports)?);
    println!("{} runs written to {}", reports.len(), dir.display());
    Ok(all_pass)
}

fn audit(args: AuditArgs) -> Result<bool> {
    let tol = AuditTolerances::default();
    let mut audits = Vec::with_capacity(args.reports.len());
    let mut all_pass = true;
    for path in &args.reports {
        let report = harness::read_report_json(path)?;
        let bounds = if args.bounds.is_empty() {
            applicable_bounds(&report)
        } else {
            args.bounds.clone()
        };
        let audit = full_audit(&report, &bounds, &tol)?;
        println!("{}", path.display());
        all_pass &= check_audit(&audit);
        audits.push(audit);
    }
    if let Some(out) = &args.json {
        write_json(&harness::resolve_output(out), &audits)?;
    }
    println!("{}", if all_pass { "PASS" } else { "FAIL" });
    Ok(all_pass)
}

fn write_json(path: &Path, audits: &[AuditReport]) -> Result<()> {
    let text = serde_json::to_string_pretty(audits)?;
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run_selftest() -> bool {
    let cases = selftest::run_selftest();
    for case in &cases {
        println!(
            "{} {:<32} {}",
            if case.passed { "PASS" } else { "FAIL" },
            case.name,
            case.detail
        );
    }
    cases.iter().all(|c| c.passed)
}
