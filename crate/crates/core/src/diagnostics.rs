//! Checkable predicates over [`RunReport`]s: the defining conditions, the
//! error reduction inequalities and the rate bounds with their constants.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algorithms::{grid_golden_min, AlgorithmId, RunReport};
use crate::error::{GreedyError, Result};
use crate::perturbation::prop72_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditTolerances {
    pub selection: f64,
    pub reduction: f64,
    pub biorthogonality: f64,
    pub monotone: f64,
    pub remark41: f64,
    pub birkhoff_james: f64,
    pub lemma: f64,
    pub bound: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        Self {
            selection: 1e-12,
            reduction: 1e-6,
            biorthogonality: 1e-6,
            monotone: 1e-6,
            remark41: 1e-9,
            birkhoff_james: 1e-6,
            lemma: 1e-6,
            bound: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIP",
        })
    }
}

/// One predicate evaluated at every iteration. A margin is the slack of the
/// inequality; it is negative exactly when the inequality is violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub reason: Option<String>,
    pub tolerance: f64,
    /// Iteration index of each margin.
    pub ms: Vec<usize>,
    pub margins: Vec<f64>,
    /// Iterations whose margin is below −tolerance.
    pub failures: Vec<usize>,
    pub worst_margin: Option<f64>,
    pub worst_m: Option<usize>,
    /// residual/bound for rate checks.
    pub tightness: Option<Vec<f64>>,
}

impl CheckResult {
    pub fn from_margins(
        name: impl Into<String>,
        tolerance: f64,
        ms: Vec<usize>,
        margins: Vec<f64>,
    ) -> Self {
        let failures: Vec<usize> = ms
            .iter()
            .zip(&margins)
            .filter(|(_, v)| !(**v >= -tolerance))
            .map(|(m, _)| *m)
            .collect();
        // NaN ranks below everything
        let key = |v: f64| if v.is_nan() { f64::NEG_INFINITY } else { v };
        let mut worst: Option<(usize, f64)> = None;
        for (m, v) in ms.iter().zip(&margins) {
            if worst.is_none_or(|(_, w)| key(*v) < key(w)) {
                worst = Some((*m, *v));
            }
        }
        Self {
            name: name.into(),
            status: if failures.is_empty() {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            reason: None,
            tolerance,
            ms,
            margins,
            failures,
            worst_margin: worst.map(|w| w.1),
            worst_m: worst.map(|w| w.0),
            tightness: None,
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Skipped,
            reason: Some(reason.into()),
            tolerance: 0.0,
            ms: Vec::new(),
            margins: Vec::new(),
            failures: Vec::new(),
            worst_margin: None,
            worst_m: None,
            tightness: None,
        }
    }

    /// Keeps the margins for inspection but takes the check out of the verdict.
    fn informational(mut self, reason: impl Into<String>) -> Self {
        self.status = CheckStatus::Skipped;
        self.reason = Some(reason.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub algorithm: AlgorithmId,
    pub seed: u64,
    pub iterations: usize,
    pub checks: Vec<CheckResult>,
    pub verdict: CheckStatus,
}

impl AuditReport {
    pub fn new(report: &RunReport, checks: Vec<CheckResult>) -> Self {
        let mut out = Self {
            algorithm: report.algorithm,
            seed: report.seed,
            iterations: report.records.len(),
            checks,
            verdict: CheckStatus::Pass,
        };
        out.refresh();
        out
    }

    fn refresh(&mut self) {
        self.verdict = if self.checks.iter().all(CheckResult::passed) {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
    }

    pub fn passed(&self) -> bool {
        self.verdict == CheckStatus::Pass
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn merge(&mut self, other: AuditReport) {
        self.checks.extend(other.checks);
        self.refresh();
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit report serializes")
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} seed={} iterations={}: {}",
            self.algorithm, self.seed, self.iterations, self.verdict
        )?;
        for c in &self.checks {
            write!(f, "  {:<5} {:<24}", c.status.to_string(), c.name)?;
            if let (Some(w), Some(m)) = (c.worst_margin, c.worst_m) {
                write!(f, " worst margin {w:+.3e} at m={m}")?;
            }
            if let Some(t) = &c.tightness {
                let max = t.iter().copied().fold(0.0, f64::max);
                write!(f, " max tightness {max:.3}")?;
            }
            if !c.failures.is_empty() {
                write!(f, " failures {}", c.failures.len())?;
            }
            if let Some(r) = &c.reason {
                write!(f, " ({r})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Per-iteration verification of conditions (1)–(3), monotonicity and the
/// two grid checks. Conditions an algorithm does not guarantee are
/// measured but reported as skipped.
pub fn audit_conditions(report: &RunReport, tol: &AuditTolerances) -> Result<AuditReport> {
    report.validate()?;
    let algo = report.algorithm;
    let guaranteed = algo.guaranteed_conditions();
    let approximate = algo.is_approximate();
    let ms: Vec<usize> = report.records.iter().map(|r| r.m).collect();
    let not_guaranteed = |k: usize| format!("condition ({k}) is not guaranteed by {algo}");

    let mut checks = Vec::new();

    let margins = report.records.iter().map(|r| r.gs_lhs - r.gs_rhs).collect();
    let c = CheckResult::from_margins("greedy_selection", tol.selection, ms.clone(), margins);
    checks.push(if guaranteed[0] {
        c
    } else {
        c.informational(not_guaranteed(1))
    });

    let margins = report
        .records
        .iter()
        .map(|r| (1.0 + r.eta_m) * r.er_reference - r.residual_norm)
        .collect();
    let c = CheckResult::from_margins("error_reduction", tol.reduction, ms.clone(), margins);
    checks.push(if guaranteed[1] {
        c
    } else {
        c.informational(not_guaranteed(2))
    });

    let margins = report.records.iter().map(|r| r.eps_m - r.bo_abs).collect();
    let c = CheckResult::from_margins("biorthogonality", tol.biorthogonality, ms.clone(), margins);
    checks.push(if guaranteed[2] {
        c
    } else {
        c.informational(not_guaranteed(3))
    });

    // (2) with η_m gives ‖f_m‖ ≤ (1+η_m)‖f_{m−1}‖
    let margins = report
        .records
        .iter()
        .map(|r| (1.0 + r.eta_m) * report.norm_at(r.m - 1) - r.residual_norm)
        .collect();
    let c = CheckResult::from_margins("monotonicity", tol.monotone, ms.clone(), margins);
    checks.push(if algo.guaranteed_monotone() {
        c
    } else {
        c.informational(format!("{algo} is not monotone by construction"))
    });

    // for λ < 0, ‖f_{m−1} − λφ_m‖ ≥ F(f_{m−1}) ≥ (1 − δ_{m−1})‖f_{m−1}‖
    let margins = report
        .records
        .iter()
        .map(|r| {
            let slack = if approximate {
                report.delta_before(r.m - 1) * report.norm_at(r.m - 1)
            } else {
                0.0
            };
            r.remark41_margin + slack
        })
        .collect();
    let c = CheckResult::from_margins("remark41", tol.remark41, ms.clone(), margins);
    checks.push(if guaranteed[0] {
        c
    } else {
        c.informational(not_guaranteed(1))
    });

    // ‖f_m − λG_m‖ ≥ F_m(f_m) − |λ|·|F_m(G_m)| on the grid |λ| ≤ 1
    let margins = report
        .records
        .iter()
        .map(|r| {
            let slack = if approximate && !r.exact {
                r.delta_m * r.residual_norm + r.eps_m
            } else {
                0.0
            };
            r.bj_margin + slack
        })
        .collect();
    let c = CheckResult::from_margins("birkhoff_james", tol.birkhoff_james, ms, margins);
    checks.push(if guaranteed[2] {
        c
    } else {
        c.informational(not_guaranteed(3))
    });

    Ok(AuditReport::new(report, checks))
}

/// inf over λ ≥ 0 of a convex scalar function, by the 512-point grid on
/// [0, hi] refined with golden section. The interval doubles while the
/// function still decreases at its right end.
fn lemma_inf(objective: impl Fn(f64) -> f64, mut hi: f64) -> f64 {
    for _ in 0..60 {
        let h = hi / 511.0;
        if objective(hi) < objective(hi - h) {
            hi *= 2.0;
        } else {
            break;
        }
    }
    let at_zero = objective(0.0);
    grid_golden_min(objective, 0.0, hi, 512).min(at_zero)
}

/// Error reduction inequality at every iteration.
///
/// Exact class: ‖f_m‖ ≤ ‖f_{m−1}‖·inf_{λ≥0}(1 − λθA^{−1}(1 − ε/‖f_{m−1}‖)
/// + 2ρ(λ/‖f_{m−1}‖)) with θ = t_m unless overridden (RRXGA uses θ = 1).
/// Approximate class: the version with (1+η_m), δ_{m−1} and ε_{m−1}.
/// ρ(u) is the power-type bound γu^q. `certificate` is (A(ε), ε); `None`
/// takes it from the report's target metadata.
pub fn check_error_reduction_lemma(
    report: &RunReport,
    theta: Option<f64>,
    certificate: Option<(f64, f64)>,
    tol: f64,
) -> Result<CheckResult> {
    const NAME: &str = "error_reduction_lemma";
    report.validate()?;
    let algo = report.algorithm;
    if !(algo.in_biorthogonal_class() || algo == AlgorithmId::Rrxga) {
        return Ok(CheckResult::skipped(
            NAME,
            format!("{algo} does not satisfy conditions (1)-(3)"),
        ));
    }
    let (a, eps) = match certificate {
        Some(c) => c,
        None if report.target.certified => (report.target.a_eps, report.target.eps),
        None => {
            return Ok(CheckResult::skipped(
                NAME,
                "target has no (eps, A(eps)) certificate",
            ))
        }
    };
    if !(a > 0.0) || !(eps >= 0.0) {
        return Err(GreedyError::InvalidArgument(format!(
            "certificate needs A > 0 and eps >= 0, got A = {a}, eps = {eps}"
        )));
    }
    let theta = theta.or((algo == AlgorithmId::Rrxga).then_some(1.0));
    let (q, gamma) = (report.q, report.gamma);
    let rho = |u: f64| gamma * u.powf(q);

    let mut ms = Vec::with_capacity(report.records.len());
    let mut margins = Vec::with_capacity(report.records.len());
    for r in &report.records {
        let prev = report.norm_at(r.m - 1);
        let t = theta.unwrap_or(r.t_m);
        let rhs = if algo.is_approximate() {
            let delta = report.delta_before(r.m - 1);
            let eps_prev = if r.m >= 2 {
                report.records[r.m - 2].eps_m
            } else {
                0.0
            };
            let c = t / a * (1.0 - delta - (eps_prev + eps) / prev);
            let factor = lemma_inf(
                |lam| 1.0 + delta + 2.0 * rho(lam / prev) - lam * c,
                2.0 * prev,
            );
            prev * (1.0 + r.eta_m) * factor
        } else {
            let c = t / a * (1.0 - eps / prev);
            let factor = lemma_inf(|lam| 1.0 - lam * c + 2.0 * rho(lam / prev), 2.0 * prev);
            prev * factor
        };
        ms.push(r.m);
        margins.push(rhs - r.residual_norm);
    }
    Ok(CheckResult::from_margins(NAME, tol, ms, margins))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    /// 16γ^{1/q}t^{−1/p}m^{−1/p}, constant weakness, f ∈ A_1.
    Cor21,
    /// max{2ε, 4(2γ)^{1/q}(A+ε)(1+Σt_k^p)^{−1/p}}.
    Thm52,
    /// 4(2γ)^{1/q}(1+Σt_k^p)^{−1/p}, f ∈ A_1.
    Cor52,
    /// max{4ε, C(A+ε)(1+Σt_k^p)^{−1/p}}, C = 4q(2γ)^q(2/(q−1))^{1/p}.
    Thm72,
    /// C(1+Σt_k^p)^{−1/p} for f ∈ A_1 under the Thm 7.2 conditions.
    Cor72,
    /// Same right-hand side under the online 64^{−p}γ^{1−p} thresholds.
    Prop72,
    /// max{2ε, 4(2γ)^{1/q}(A+ε)(1+m)^{−1/p}} for the RRXGA.
    Thm91,
}

impl BoundKind {
    pub const ALL: [BoundKind; 7] = [
        BoundKind::Cor21,
        BoundKind::Thm52,
        BoundKind::Cor52,
        BoundKind::Thm72,
        BoundKind::Cor72,
        BoundKind::Prop72,
        BoundKind::Thm91,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            BoundKind::Cor21 => "cor21",
            BoundKind::Thm52 => "thm52",
            BoundKind::Cor52 => "cor52",
            BoundKind::Thm72 => "thm72",
            BoundKind::Cor72 => "cor72",
            BoundKind::Prop72 => "prop72",
            BoundKind::Thm91 => "thm91",
        }
    }

    /// Whether the statement needs f itself in A_1(D).
    pub fn needs_a1(&self) -> bool {
        matches!(
            self,
            BoundKind::Cor21 | BoundKind::Cor52 | BoundKind::Cor72 | BoundKind::Prop72
        )
    }
}

impl FromStr for BoundKind {
    type Err = GreedyError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        BoundKind::ALL
            .into_iter()
            .find(|b| b.tag() == s)
            .ok_or(GreedyError::UnknownBound(s))
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A rate bound with every parameter its statement needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub kind: BoundKind,
    pub q: f64,
    pub gamma: f64,
    pub p_conj: f64,
    /// Constant weakness parameter (cor21 only).
    pub t: Option<f64>,
    pub a_eps: f64,
    pub eps: f64,
}

impl BoundSpec {
    pub fn new(kind: BoundKind, q: f64, gamma: f64) -> Result<Self> {
        if !(q > 1.0 && q <= 2.0) || !(gamma > 0.0) {
            return Err(GreedyError::InvalidArgument(format!(
                "bound needs 1 < q <= 2 and gamma > 0, got q = {q}, gamma = {gamma}"
            )));
        }
        Ok(Self {
            kind,
            q,
            gamma,
            p_conj: q / (q - 1.0),
            t: None,
            a_eps: 1.0,
            eps: 0.0,
        })
    }

    pub fn with_t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn with_noise(mut self, a_eps: f64, eps: f64) -> Self {
        self.a_eps = a_eps;
        self.eps = eps;
        self
    }

    /// Parameters taken from a report's space and target metadata.
    pub fn for_report(kind: BoundKind, report: &RunReport) -> Result<Self> {
        let mut spec = Self::new(kind, report.q, report.gamma)?
            .with_noise(report.target.a_eps, report.target.eps);
        if let Some(t) = report.weakness.is_constant() {
            spec.t = Some(t);
        }
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let expected = self.q / (self.q - 1.0);
        if !((self.p_conj - expected).abs() <= 1e-12 * expected) {
            return Err(GreedyError::InvalidArgument(format!(
                "p_conj = {} does not equal q/(q-1) = {expected}",
                self.p_conj
            )));
        }
        if self.kind == BoundKind::Cor21 && !self.t.is_some_and(|t| t > 0.0 && t <= 1.0) {
            return Err(GreedyError::InvalidArgument(
                "cor21 needs a constant weakness t in (0, 1]".into(),
            ));
        }
        if !(self.a_eps > 0.0) || !(self.eps >= 0.0) {
            return Err(GreedyError::InvalidArgument(format!(
                "bound needs A > 0 and eps >= 0, got A = {}, eps = {}",
                self.a_eps, self.eps
            )));
        }
        Ok(())
    }

    /// 4(2γ)^{1/q}.
    pub fn c52(&self) -> f64 {
        4.0 * (2.0 * self.gamma).powf(1.0 / self.q)
    }

    /// 4q(2γ)^q(2/(q−1))^{1/p}.
    pub fn c72(&self) -> f64 {
        4.0 * self.q
            * (2.0 * self.gamma).powf(self.q)
            * (2.0 / (self.q - 1.0)).powf(1.0 / self.p_conj)
    }

    /// 16γ^{1/q}t^{−1/p}.
    pub fn c21(&self) -> f64 {
        16.0 * self.gamma.powf(1.0 / self.q) * self.t.unwrap_or(f64::NAN).powf(-1.0 / self.p_conj)
    }
}

/// The right-hand side of the chosen statement at step m, where
/// `partial_sum` is Σ_{k≤m} t_k^p with p the conjugate exponent. The
/// m-power bound (cor21) is +∞ at m = 0.
pub fn rate_bound(spec: &BoundSpec, m: usize, partial_sum: f64) -> Result<f64> {
    spec.validate()?;
    let p = spec.p_conj;
    let decay = (1.0 + partial_sum).powf(-1.0 / p);
    let (a, eps) = (spec.a_eps, spec.eps);
    Ok(match spec.kind {
        BoundKind::Cor21 => {
            if m == 0 {
                f64::INFINITY
            } else {
                spec.c21() * (m as f64).powf(-1.0 / p)
            }
        }
        BoundKind::Thm52 => (2.0 * eps).max(spec.c52() * (a + eps) * decay),
        BoundKind::Cor52 => spec.c52() * decay,
        BoundKind::Thm72 => (4.0 * eps).max(spec.c72() * (a + eps) * decay),
        BoundKind::Cor72 | BoundKind::Prop72 => spec.c72() * decay,
        BoundKind::Thm91 => {
            (2.0 * eps).max(spec.c52() * (a + eps) * (1.0 + m as f64).powf(-1.0 / p))
        }
    })
}

/// Partial sums Σ_{k≤m} t_k^p for m = 0..=len.
pub fn weakness_partial_sums(report: &RunReport) -> Vec<f64> {
    let p = report.p_conj;
    let mut out = Vec::with_capacity(report.records.len() + 1);
    let mut s = 0.0;
    out.push(s);
    for r in &report.records {
        s += r.t_m.powf(p);
        out.push(s);
    }
    out
}

/// Why a statement does not cover this report, if it does not.
fn inapplicable(spec: &BoundSpec, report: &RunReport) -> Option<String> {
    let algo = report.algorithm;
    if (spec.q - report.q).abs() > 1e-12 || (spec.gamma - report.gamma).abs() > 1e-12 {
        return Some(format!(
            "bound uses (q, gamma) = ({}, {}) but the run has ({}, {})",
            spec.q, spec.gamma, report.q, report.gamma
        ));
    }
    if !report.target.certified {
        return Some("target has no (eps, A(eps)) certificate".into());
    }
    if spec.kind.needs_a1() && !report.target.in_a1 {
        return Some("target is not certified in A_1(D)".into());
    }
    let exact_class = algo.in_biorthogonal_class() && !algo.is_approximate();
    match spec.kind {
        BoundKind::Cor21 | BoundKind::Thm52 | BoundKind::Cor52 if !exact_class => {
            Some(format!("{} covers the WBGA class, not {algo}", spec.kind))
        }
        BoundKind::Cor21 => match report.weakness.is_constant() {
            Some(t) if spec.t == Some(t) => None,
            _ => Some("cor21 needs the run's constant weakness parameter".into()),
        },
        BoundKind::Thm72 | BoundKind::Cor72 | BoundKind::Prop72 if !algo.is_approximate() => Some(
            format!("{} covers the approximate class, not {algo}", spec.kind),
        ),
        BoundKind::Thm72 | BoundKind::Cor72 => thm72_hypotheses(spec, report),
        BoundKind::Prop72 => prop72_hypotheses(report),
        BoundKind::Thm91 if algo != AlgorithmId::Rrxga => {
            Some(format!("thm91 covers the rrxga, not {algo}"))
        }
        _ => None,
    }
}

fn thm72_hypotheses(spec: &BoundSpec, report: &RunReport) -> Option<String> {
    let p = spec.p_conj;
    let c = spec.c72();
    let a = if spec.kind == BoundKind::Cor72 {
        1.0
    } else {
        spec.a_eps
    };
    for m in 0..report.records.len() {
        let norm = report.norm_at(m);
        let delta = report.delta_before(m);
        let eps_m = if m == 0 {
            0.0
        } else {
            report.records[m - 1].eps_m
        };
        if delta + eps_m / norm > 0.25 {
            return Some(format!("delta_m + eps_m/|f_m| > 1/4 at m = {m}"));
        }
        let next = &report.records[m];
        let limit = 0.5 * c.powf(-p) * a.powf(-p) * next.t_m.powf(p) * norm.powf(p);
        if delta + next.eta_m > limit * (1.0 + 1e-9) {
            return Some(format!(
                "delta_m + eta_(m+1) exceeds the rate condition at m = {m}"
            ));
        }
    }
    None
}

fn prop72_hypotheses(report: &RunReport) -> Option<String> {
    let space = match report.space() {
        Ok(s) => s,
        Err(e) => return Some(e.to_string()),
    };
    for r in &report.records {
        let prev = report.norm_at(r.m - 1);
        let eta_limit = prop72_threshold(&space, prev, r.t_m);
        // δ_{m−1} is bounded with t_m as well
        let delta_limit = eta_limit;
        if report.delta_before(r.m - 1) > delta_limit * (1.0 + 1e-9) {
            return Some(format!("delta_{} exceeds the online threshold", r.m - 1));
        }
        if r.eta_m > eta_limit * (1.0 + 1e-9) {
            return Some(format!("eta_{} exceeds the online threshold", r.m));
        }
    }
    None
}

/// residual_norm(m) ≤ rate_bound(m) for m = 0..=len with tightness ratios.
pub fn verify_rates(report: &RunReport, specs: &[BoundSpec], tol: f64) -> Result<AuditReport> {
    report.validate()?;
    let sums = weakness_partial_sums(report);
    let mut checks = Vec::with_capacity(specs.len());
    for spec in specs {
        let name = format!("bound_{}", spec.kind);
        if let Some(reason) = inapplicable(spec, report) {
            checks.push(CheckResult::skipped(name, reason));
            continue;
        }
        let first = usize::from(spec.kind == BoundKind::Cor21);
        let mut ms = Vec::new();
        let mut margins = Vec::new();
        let mut tightness = Vec::new();
        for m in first..=report.records.len() {
            let bound = rate_bound(spec, m, sums[m])?;
            let norm = report.norm_at(m);
            ms.push(m);
            margins.push(bound - norm);
            tightness.push(norm / bound);
        }
        let mut c = CheckResult::from_margins(name, tol, ms, margins);
        c.tightness = Some(tightness);
        checks.push(c);
    }
    Ok(AuditReport::new(report, checks))
}

/// Statements that apply to a report given its algorithm and target.
pub fn applicable_bounds(report: &RunReport) -> Vec<BoundKind> {
    BoundKind::ALL
        .into_iter()
        .filter(|k| {
            BoundSpec::for_report(*k, report)
                .map(|s| inapplicable(&s, report).is_none())
                .unwrap_or(false)
        })
        .collect()
}

/// Conditions, the error reduction lemma and the given bounds in one report.
pub fn full_audit(
    report: &RunReport,
    bounds: &[BoundKind],
    tol: &AuditTolerances,
) -> Result<AuditReport> {
    let mut audit = audit_conditions(report, tol)?;
    let lemma = check_error_reduction_lemma(report, None, None, tol.lemma)?;
    audit.checks.push(lemma);
    let specs = bounds
        .iter()
        .map(|k| BoundSpec::for_report(*k, report))
        .collect::<Result<Vec<_>>>()?;
    let rates = verify_rates(report, &specs, tol.bound)?;
    audit.merge(rates);
    Ok(audit)
}
