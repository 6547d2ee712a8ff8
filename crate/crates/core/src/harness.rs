//! Experiment configuration, execution, persistence and summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::algorithms::{
    run_greedy, AlgorithmId, RunOptions, RunReport, Termination, WeaknessSchedule, REPORT_SCHEMA,
};
use crate::diagnostics::{
    applicable_bounds, full_audit, rate_bound, weakness_partial_sums, AuditTolerances, BoundKind,
    BoundSpec,
};
use crate::dictionary::{
    Dictionary, DictionarySpec, SelectionRule, Target, TargetMode, TargetSpec,
};
use crate::error::{GreedyError, Result};
use crate::perturbation::ErrorSchedule;
use crate::solvers::SolverConfig;
use crate::space::LpSpace;

/// Overrides the output directory of every artifact.
pub const OUT_DIR_ENV: &str = "WBGA_OUT_DIR";

pub const CSV_HEADER: &str =
    "m,algo,residual_norm,gs_lhs,gs_rhs,bo_abs,er_reference,t_m,delta_m,eta_m,eps_m,bound_cor52,wall_ns";

/// Residual checkpoints reported by [`summarize`].
pub const CHECKPOINTS: [usize; 4] = [10, 25, 50, 100];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket_growth: Option<f64>,
}

impl SolverOverrides {
    pub fn apply(&self, base: SolverConfig) -> SolverConfig {
        SolverConfig {
            tol: self.tol.unwrap_or(base.tol),
            grad_tol: self.grad_tol.unwrap_or(base.grad_tol),
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            bracket_growth: self.bracket_growth.unwrap_or(base.bracket_growth),
        }
    }
}

/// Extra axes crossed by a sweep. Empty axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    /// Exponents p replacing the one in `space`.
    #[serde(default)]
    pub p: Vec<f64>,
    /// Weakness specifiers replacing `weakness`.
    #[serde(default)]
    pub weakness: Vec<String>,
    /// Noise levels ε turning the target into `noisy` with that ε.
    #[serde(default)]
    pub noise: Vec<f64>,
}

impl SweepAxes {
    fn is_empty(&self) -> bool {
        self.p.is_empty() && self.weakness.is_empty() && self.noise.is_empty()
    }
}

fn default_weakness() -> String {
    "const:1".into()
}

fn default_max_m() -> usize {
    100
}

fn default_stop_tol() -> f64 {
    crate::algorithms::DEFAULT_STOP_TOL
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

/// One experiment, stored as TOML.
///
/// Seeds offset the dictionary and target seeds: seed s runs with
/// dictionary seed d+s, target seed k+s and run seed s, so seed 0
/// reproduces the specifiers exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub space: String,
    pub dictionary: String,
    pub target: String,
    pub algorithms: Vec<AlgorithmId>,
    #[serde(default = "default_weakness")]
    pub weakness: String,
    #[serde(default)]
    pub selection: SelectionRule,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub errors: Option<String>,
    #[serde(default = "default_max_m")]
    pub max_m: usize,
    #[serde(default = "default_stop_tol")]
    pub stop_tol: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub bounds: Vec<BoundKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub solver: SolverOverrides,
    #[serde(default, skip_serializing_if = "SweepAxes::is_empty")]
    pub sweep: SweepAxes,
}

impl ExperimentConfig {
    pub fn new(space: &str, dictionary: &str, target: &str, algorithm: AlgorithmId) -> Self {
        Self {
            space: space.into(),
            dictionary: dictionary.into(),
            target: target.into(),
            algorithms: vec![algorithm],
            weakness: default_weakness(),
            selection: SelectionRule::default(),
            errors: None,
            max_m: default_max_m(),
            stop_tol: default_stop_tol(),
            seeds: default_seeds(),
            bounds: Vec::new(),
            output: None,
            timing: false,
            solver: SolverOverrides::default(),
            sweep: SweepAxes::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text)
            .map_err(|e| GreedyError::parse("config", e.to_string().trim_end()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| GreedyError::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Parses every referenced specifier so errors name their field.
    pub fn validate(&self) -> Result<()> {
        LpSpace::parse(&self.space)?;
        DictionarySpec::parse(&self.dictionary)?;
        TargetSpec::parse(&self.target)?;
        WeaknessSchedule::parse(&self.weakness)?;
        if let Some(e) = &self.errors {
            ErrorSchedule::parse(e)?;
        }
        if self.algorithms.is_empty() {
            return Err(GreedyError::parse(
                "algorithms",
                "at least one algorithm is required",
            ));
        }
        if self.seeds.is_empty() {
            return Err(GreedyError::parse("seeds", "at least one seed is required"));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(GreedyError::parse("stop_tol", "must be nonnegative"));
        }
        self.solver.apply(SolverConfig::default()).validate()?;
        for p in &self.sweep.p {
            LpSpace::new(*p, 1)?;
        }
        for w in &self.sweep.weakness {
            WeaknessSchedule::parse(w)?;
        }
        for eps in &self.sweep.noise {
            if !(eps.is_finite() && *eps >= 0.0) {
                return Err(GreedyError::parse(
                    "sweep.noise",
                    format!("invalid eps {eps}"),
                ));
            }
        }
        Ok(())
    }

    /// The cross product p × weakness × noise × algorithms × seeds, in that
    /// nesting order.
    pub fn instances(&self) -> Result<Vec<Instance>> {
        self.validate()?;
        let base_space = LpSpace::parse(&self.space)?;
        let dict = DictionarySpec::parse(&self.dictionary)?;
        let target = TargetSpec::parse(&self.target)?;
        let errors = self
            .errors
            .as_deref()
            .map(ErrorSchedule::parse)
            .transpose()?;
        let solver = self.solver.apply(SolverConfig::default());

        let ps = if self.sweep.p.is_empty() {
            vec![base_space.p()]
        } else {
            self.sweep.p.clone()
        };
        let weaknesses = if self.sweep.weakness.is_empty() {
            vec![self.weakness.clone()]
        } else {
            self.sweep.weakness.clone()
        };
        let noises: Vec<Option<f64>> = if self.sweep.noise.is_empty() {
            vec![None]
        } else {
            self.sweep.noise.iter().copied().map(Some).collect()
        };

        let mut out = Vec::new();
        for p in &ps {
            let space = LpSpace::new(*p, base_space.dim())?;
            for w in &weaknesses {
                let weakness = WeaknessSchedule::parse(w)?;
                for noise in &noises {
                    let mut target = target;
                    if let Some(eps) = noise {
                        target.mode = TargetMode::GeneralPlusNoise;
                        target.eps = *eps;
                    }
                    for algorithm in &self.algorithms {
                        for seed in &self.seeds {
                            out.push(Instance {
                                algorithm: *algorithm,
                                space,
                                dictionary: DictionarySpec {
                                    seed: dict.seed.wrapping_add(*seed),
                                    ..dict
                                },
                                target: TargetSpec {
                                    seed: target.seed.wrapping_add(*seed),
                                    ..target
                                },
                                weakness: weakness.clone(),
                                selection: self.selection,
                                errors: errors.clone(),
                                solver,
                                max_m: self.max_m,
                                stop_tol: self.stop_tol,
                                seed: *seed,
                                timing: self.timing,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// A single fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub algorithm: AlgorithmId,
    pub space: LpSpace,
    pub dictionary: DictionarySpec,
    pub target: TargetSpec,
    pub weakness: WeaknessSchedule,
    pub selection: SelectionRule,
    pub errors: Option<ErrorSchedule>,
    pub solver: SolverConfig,
    pub max_m: usize,
    pub stop_tol: f64,
    pub seed: u64,
    pub timing: bool,
}

impl Instance {
    pub fn run(&self) -> Result<RunReport> {
        let dict = Dictionary::from_spec(&self.space, &self.dictionary)?;
        let target = Target::generate(&dict, &self.target)?;
        let opts = RunOptions {
            weakness: self.weakness.clone(),
            selection: self.selection,
            solver: self.solver,
            max_m: self.max_m,
            stop_tol: self.stop_tol,
            seed: self.seed,
            errors: self.errors.clone(),
            timing: self.timing,
        };
        run_greedy(self.algorithm, &target, &dict, &opts)
    }

    /// File stem naming this run inside a sweep directory.
    pub fn label(&self) -> String {
        let weakness: String = self
            .weakness
            .to_string()
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '.' {
                    c
                } else {
                    '-'
                }
            })
            .collect();
        let mut label = format!("{}_p{}_{}", self.algorithm, self.space.p(), weakness);
        if self.target.mode == TargetMode::GeneralPlusNoise {
            let _ = write!(label, "_eps{}", self.target.eps);
        }
        let _ = write!(label, "_s{}", self.seed);
        label
    }
}

/// Runs every instance, fanning out over the available cores. Results keep
/// the order of `instances`.
pub fn run_all(instances: &[Instance]) -> Vec<Result<RunReport>> {
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(instances.len().max(1));
    if workers <= 1 {
        return instances.iter().map(Instance::run).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunReport>>>> =
        Mutex::new((0..instances.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= instances.len() {
                    break;
                }
                let result = instances[k].run();
                slots.lock().expect("sweep slot lock")[k] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("sweep slot lock")
        .into_iter()
        .map(|r| r.expect("every instance ran"))
        .collect()
}

/// Runs the whole configuration.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<RunReport>> {
    run_all(&config.instances()?).into_iter().collect()
}

/// The directory from `WBGA_OUT_DIR` if set, otherwise `default`.
pub fn output_dir(default: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => default.to_path_buf(),
    }
}

/// Places `path` under `WBGA_OUT_DIR` when that is set.
pub fn resolve_output(path: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => {
            PathBuf::from(dir).join(path.file_name().unwrap_or(path.as_os_str()))
        }
        _ => path.to_path_buf(),
    }
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

/// The cor52 right-hand side along the run, m = 1..=len.
fn cor52_column(report: &RunReport) -> Result<Vec<f64>> {
    let spec = BoundSpec::new(BoundKind::Cor52, report.q, report.gamma)?;
    let sums = weakness_partial_sums(report);
    (1..=report.records.len())
        .map(|m| rate_bound(&spec, m, sums[m]))
        .collect()
}

/// Per-iteration CSV with 17 significant digits in every real column.
pub fn csv_string(report: &RunReport) -> Result<String> {
    report.validate()?;
    let bounds = cor52_column(report)?;
    let mut out = String::with_capacity(64 + report.records.len() * 320);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (r, bound) in report.records.iter().zip(bounds) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.m,
            report.algorithm,
            sci(r.residual_norm),
            sci(r.gs_lhs),
            sci(r.gs_rhs),
            sci(r.bo_abs),
            sci(r.er_reference),
            sci(r.t_m),
            sci(r.delta_m),
            sci(r.eta_m),
            sci(r.eps_m),
            sci(bound),
            r.wall_ns
        );
    }
    Ok(out)
}

pub fn emit_csv(report: &RunReport, path: &Path) -> Result<()> {
    let text = csv_string(report)?;
    write_file(path, &text)
}

pub fn write_report_json(report: &RunReport, path: &Path) -> Result<()> {
    report.validate()?;
    let text = serde_json::to_string_pretty(report).expect("report serializes");
    write_file(path, &text)
}

pub fn read_report_json(path: &Path) -> Result<RunReport> {
    let text = fs::read_to_string(path).map_err(|e| GreedyError::io(path, e))?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| GreedyError::parse(path.display().to_string(), e.to_string()))?;
    if report.schema != REPORT_SCHEMA {
        return Err(GreedyError::IncompleteReport(format!(
            "{}: schema {} is not {REPORT_SCHEMA}",
            path.display(),
            report.schema
        )));
    }
    report.validate()?;
    Ok(report)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| GreedyError::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| GreedyError::io(path, e))
}

/// Writes `<stem>.csv` and `<stem>.json` next to each other.
pub fn write_artifacts(report: &RunReport, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    // appended rather than substituted: labels contain dots (p1.5)
    let with_ext = |ext: &str| {
        let mut name = stem.as_os_str().to_owned();
        name.push(ext);
        PathBuf::from(name)
    };
    let (csv, json) = (with_ext(".csv"), with_ext(".json"));
    emit_csv(report, &csv)?;
    write_report_json(report, &json)?;
    Ok((csv, json))
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// ‖f_c‖, or the final residual when the run ended early by reaching it.
fn residual_at(report: &RunReport, c: usize) -> Option<f64> {
    if c <= report.records.len() {
        Some(report.norm_at(c))
    } else if report.termination != Termination::MaxIterations {
        Some(report.norm_at(report.records.len()))
    } else {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: AlgorithmId,
    pub runs: usize,
    pub medians: Vec<Option<f64>>,
    /// Quartiles of each run's largest residual/bound ratio.
    pub tightness: Option<[f64; 3]>,
    pub failures: usize,
}

/// One row per algorithm in order of first appearance.
pub fn summary_rows(reports: &[RunReport]) -> Result<Vec<SummaryRow>> {
    let mut order: Vec<AlgorithmId> = Vec::new();
    let mut groups: BTreeMap<usize, Vec<&RunReport>> = BTreeMap::new();
    for r in reports {
        let k = match order.iter().position(|a| *a == r.algorithm) {
            Some(k) => k,
            None => {
                order.push(r.algorithm);
                order.len() - 1
            }
        };
        groups.entry(k).or_default().push(r);
    }
    let tol = AuditTolerances::default();
    let mut rows = Vec::with_capacity(order.len());
    for (k, group) in groups {
        let medians = CHECKPOINTS
            .iter()
            .map(|c| {
                let mut v: Vec<f64> = group.iter().filter_map(|r| residual_at(r, *c)).collect();
                if v.is_empty() {
                    return None;
                }
                v.sort_by(f64::total_cmp);
                Some(quantile(&v, 0.5))
            })
            .collect();
        let mut ratios = Vec::new();
        let mut failures = 0;
        for r in &group {
            let audit = full_audit(r, &applicable_bounds(r), &tol)?;
            if !audit.passed() {
                failures += 1;
            }
            let worst = audit
                .checks
                .iter()
                .filter_map(|c| c.tightness.as_ref())
                .flatten()
                .copied()
                .fold(None::<f64>, |acc, t| Some(acc.map_or(t, |a| a.max(t))));
            ratios.extend(worst);
        }
        ratios.sort_by(f64::total_cmp);
        let tightness = (!ratios.is_empty()).then(|| {
            [
                quantile(&ratios, 0.25),
                quantile(&ratios, 0.5),
                quantile(&ratios, 0.75),
            ]
        });
        rows.push(SummaryRow {
            algorithm: order[k],
            runs: group.len(),
            medians,
            tightness,
            failures,
        });
    }
    Ok(rows)
}

/// Text table of [`summary_rows`].
pub fn summarize(reports: &[RunReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(GreedyError::InvalidArgument("nothing to summarize".into()));
    }
    let rows = summary_rows(reports)?;
    let mut out = String::new();
    let _ = write!(out, "{:<8} {:>5}", "algo", "runs");
    for c in CHECKPOINTS {
        let _ = write!(out, " {:>11}", format!("med@{c}"));
    }
    let _ = writeln!(
        out,
        " {:>8} {:>8} {:>8} {:>8}",
        "tight.q1", "tight.q2", "tight.q3", "failures"
    );
    for row in rows {
        let _ = write!(out, "{:<8} {:>5}", row.algorithm.to_string(), row.runs);
        for m in &row.medians {
            match m {
                Some(v) => {
                    let _ = write!(out, " {v:>11.4e}");
                }
                None => {
                    let _ = write!(out, " {:>11}", "-");
                }
            }
        }
        match row.tightness {
            Some([a, b, c]) => {
                let _ = write!(out, " {a:>8.4} {b:>8.4} {c:>8.4}");
            }
            None => {
                let _ = write!(out, " {:>8} {:>8} {:>8}", "-", "-", "-");
            }
        }
        let _ = writeln!(out, " {:>8}", row.failures);
    }
    Ok(out)
}
