//! The greedy engine: one-step transitions for every algorithm and the
//! driver that iterates them while recording what the diagnostics need.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dictionary::{Dictionary, SelectionRule, SignedIndex, Target};
use crate::error::{GreedyError, Result};
use crate::perturbation::{self, ErrorSchedule};
use crate::rng;
use crate::solvers::{self, minimize_residual_1d, project_slices, SolverConfig};
use crate::space::{DualFunctional, Element, LpSpace};

pub const REPORT_SCHEMA: u32 = 1;
pub const DEFAULT_STOP_TOL: f64 = 1e-12;

/// λ grid (in units of ‖f_{m−1}‖) for the negative-step check.
pub const REMARK41_GRID: [f64; 4] = [-0.1, -0.5, -1.0, -2.0];
/// λ grid for the Birkhoff–James check ‖f_m − λG_m‖ ≥ ‖f_m‖.
pub const BJ_GRID: [f64; 5] = [-1.0, -0.5, 0.1, 0.5, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmId {
    Wcga,
    Wgafr,
    Rwrga,
    Rrxga,
    Wrga,
    Wdga,
    Gg,
    Awcga,
    Awgafr,
    Arwrga,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 10] = [
        AlgorithmId::Wcga,
        AlgorithmId::Wgafr,
        AlgorithmId::Rwrga,
        AlgorithmId::Rrxga,
        AlgorithmId::Wrga,
        AlgorithmId::Wdga,
        AlgorithmId::Gg,
        AlgorithmId::Awcga,
        AlgorithmId::Awgafr,
        AlgorithmId::Arwrga,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            AlgorithmId::Wcga => "wcga",
            AlgorithmId::Wgafr => "wgafr",
            AlgorithmId::Rwrga => "rwrga",
            AlgorithmId::Rrxga => "rrxga",
            AlgorithmId::Wrga => "wrga",
            AlgorithmId::Wdga => "wdga",
            AlgorithmId::Gg => "gg",
            AlgorithmId::Awcga => "awcga",
            AlgorithmId::Awgafr => "awgafr",
            AlgorithmId::Arwrga => "arwrga",
        }
    }

    pub fn is_approximate(&self) -> bool {
        matches!(
            self,
            AlgorithmId::Awcga | AlgorithmId::Awgafr | AlgorithmId::Arwrga
        )
    }

    /// The exact algorithm an approximate one perturbs (itself otherwise).
    pub fn exact_counterpart(&self) -> AlgorithmId {
        match self {
            AlgorithmId::Awcga => AlgorithmId::Wcga,
            AlgorithmId::Awgafr => AlgorithmId::Wgafr,
            AlgorithmId::Arwrga => AlgorithmId::Rwrga,
            other => *other,
        }
    }

    /// Members of the WBGA class (or its approximate extension).
    pub fn in_biorthogonal_class(&self) -> bool {
        matches!(
            self.exact_counterpart(),
            AlgorithmId::Wcga | AlgorithmId::Wgafr | AlgorithmId::Rwrga
        )
    }

    /// Whether the defining conditions (1), (2), (3) are guaranteed by
    /// construction.
    pub fn guaranteed_conditions(&self) -> [bool; 3] {
        match self.exact_counterpart() {
            AlgorithmId::Wcga | AlgorithmId::Wgafr | AlgorithmId::Rwrga => [true, true, true],
            // X-greedy selection has no weakness threshold
            AlgorithmId::Rrxga => [false, true, true],
            AlgorithmId::Wdga => [true, true, false],
            AlgorithmId::Wrga => [true, false, false],
            // explicit λ leaves (2) open; the μ rescale gives (3)
            AlgorithmId::Gg => [true, false, true],
            _ => unreachable!(),
        }
    }

    /// Whether ‖f_m‖ is non-increasing by construction.
    pub fn guaranteed_monotone(&self) -> bool {
        !matches!(self, AlgorithmId::Gg)
    }
}

impl FromStr for AlgorithmId {
    type Err = GreedyError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        AlgorithmId::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| GreedyError::parse("algorithm", format!("unknown algorithm `{s}`")))
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Weakness sequence t_1, t_2, … with values in [0, 1].
///
/// Specifier forms: `const:<t0>`, `pow:<t0>,<a>` (t_m = t0·m^{−a}),
/// `list:<v1>;<v2>;…` (the last value repeats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeaknessSchedule {
    Constant(f64),
    Power { t0: f64, exponent: f64 },
    List(Vec<f64>),
}

impl WeaknessSchedule {
    pub fn constant(t0: f64) -> Result<Self> {
        let s = WeaknessSchedule::Constant(t0);
        s.validate()?;
        Ok(s)
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| GreedyError::parse("weakness", format!("missing kind in `{spec}`")))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| GreedyError::parse("weakness", format!("`{s}`: {e}")))
        };
        let schedule = match kind.trim() {
            "const" => WeaknessSchedule::Constant(num(body)?),
            "pow" => {
                let (t0, a) = body
                    .split_once(',')
                    .ok_or_else(|| GreedyError::parse("weakness", "pow needs `<t0>,<a>`"))?;
                WeaknessSchedule::Power {
                    t0: num(t0)?,
                    exponent: num(a)?,
                }
            }
            "list" => WeaknessSchedule::List(body.split(';').map(num).collect::<Result<Vec<_>>>()?),
            other => {
                return Err(GreedyError::parse(
                    "weakness",
                    format!("unknown kind `{other}`"),
                ))
            }
        };
        schedule.validate()?;
        Ok(schedule)
    }

    fn validate(&self) -> Result<()> {
        let bad = |v: f64| !(v > 0.0 && v <= 1.0);
        let err = |msg: String| Err(GreedyError::parse("weakness", msg));
        match self {
            WeaknessSchedule::Constant(t) if bad(*t) => err(format!("t0 = {t} outside (0, 1]")),
            WeaknessSchedule::Power { t0, exponent } if bad(*t0) || !(*exponent >= 0.0) => {
                err(format!("pow:{t0},{exponent} needs t0 in (0, 1] and a >= 0"))
            }
            WeaknessSchedule::List(v) if v.is_empty() => err("empty list".into()),
            WeaknessSchedule::List(v) if v.iter().any(|x| !(0.0..=1.0).contains(x)) => {
                err("list values must lie in [0, 1]".into())
            }
            _ => Ok(()),
        }
    }

    /// t_m for m ≥ 1 (m = 0 is treated as 1).
    pub fn at(&self, m: usize) -> f64 {
        let m = m.max(1);
        match self {
            WeaknessSchedule::Constant(t) => *t,
            WeaknessSchedule::Power { t0, exponent } => t0 * (m as f64).powf(-exponent),
            WeaknessSchedule::List(v) => v[(m - 1).min(v.len() - 1)],
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        match self {
            WeaknessSchedule::Constant(t) => Some(*t),
            WeaknessSchedule::List(v) if v.windows(2).all(|w| w[0] == w[1]) => Some(v[0]),
            WeaknessSchedule::Power { t0, exponent } if *exponent == 0.0 => Some(*t0),
            _ => None,
        }
    }
}

impl fmt::Display for WeaknessSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeaknessSchedule::Constant(t) => write!(f, "const:{t}"),
            WeaknessSchedule::Power { t0, exponent } => write!(f, "pow:{t0},{exponent}"),
            WeaknessSchedule::List(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "list:{}", items.join(";"))
            }
        }
    }
}

impl TryFrom<String> for WeaknessSchedule {
    type Error = GreedyError;

    fn try_from(s: String) -> Result<Self> {
        WeaknessSchedule::parse(&s)
    }
}

impl From<WeaknessSchedule> for String {
    fn from(s: WeaknessSchedule) -> String {
        s.to_string()
    }
}

/// Iteration state: f_m + G_m = f with G_m = Σ c_k φ_k over `terms`.
#[derive(Debug, Clone)]
pub struct GreedyState {
    m: usize,
    target: Element,
    residual: Element,
    approximant: Element,
    selected: Vec<SignedIndex>,
    terms: Vec<(SignedIndex, f64)>,
}

impl GreedyState {
    pub fn new(target: Element) -> Self {
        let n = target.dim();
        Self {
            m: 0,
            residual: target.clone(),
            approximant: Element::zeros(n),
            target,
            selected: Vec::new(),
            terms: Vec::new(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn target(&self) -> &Element {
        &self.target
    }

    pub fn residual(&self) -> &Element {
        &self.residual
    }

    pub fn approximant(&self) -> &Element {
        &self.approximant
    }

    pub fn selected(&self) -> &[SignedIndex] {
        &self.selected
    }

    /// Expansion of G_m over signed atoms. For the Chebyshev algorithms each
    /// atom appears once; relaxation algorithms may repeat atoms.
    pub fn terms(&self) -> &[(SignedIndex, f64)] {
        &self.terms
    }

    fn set_approximant(&mut self, g: Vec<f64>) {
        let r: Vec<f64> = self
            .target
            .coords()
            .iter()
            .zip(&g)
            .map(|(f, g)| f - g)
            .collect();
        self.approximant = Element::from_vec_unchecked(g);
        self.residual = Element::from_vec_unchecked(r);
    }
}

/// What a single step did, before diagnostics are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub selected: SignedIndex,
    /// F(φ_m) for the selection functional.
    pub gs_lhs: f64,
    /// ‖F‖_D for the selection functional.
    pub dual_norm: f64,
    pub t: f64,
    pub lambda: Option<f64>,
    pub omega: Option<f64>,
    pub mu: Option<f64>,
    pub projection_converged: bool,
    /// Largest relative excess value/min − 1 injected by relaxed searches.
    pub eta_achieved: f64,
}

/// Per-step knobs shared by every algorithm.
#[derive(Debug, Clone, Copy)]
pub struct StepParams<'a> {
    pub t: f64,
    pub rule: SelectionRule,
    /// Selection functional F_{m−1}; `None` means the exact norming
    /// functional of the current residual.
    pub functional: Option<&'a DualFunctional>,
    /// Relative slack η_m for the minimization steps (0 = exact).
    pub eta: f64,
    pub seed: u64,
    pub cfg: &'a SolverConfig,
}

impl<'a> StepParams<'a> {
    pub fn exact(t: f64, cfg: &'a SolverConfig) -> Self {
        Self {
            t,
            rule: SelectionRule::ExactArgmax,
            functional: None,
            eta: 0.0,
            seed: 0,
            cfg,
        }
    }
}

pub fn step_wcga(
    state: &mut GreedyState,
    dict: &Dictionary,
    t: f64,
    cfg: &SolverConfig,
) -> Result<StepInfo> {
    step(state, AlgorithmId::Wcga, dict, &StepParams::exact(t, cfg))
}

pub fn step_wgafr(
    state: &mut GreedyState,
    dict: &Dictionary,
    t: f64,
    cfg: &SolverConfig,
) -> Result<StepInfo> {
    step(state, AlgorithmId::Wgafr, dict, &StepParams::exact(t, cfg))
}

pub fn step_rwrga(
    state: &mut GreedyState,
    dict: &Dictionary,
    t: f64,
    cfg: &SolverConfig,
) -> Result<StepInfo> {
    step(state, AlgorithmId::Rwrga, dict, &StepParams::exact(t, cfg))
}

pub fn step_rrxga(
    state: &mut GreedyState,
    dict: &Dictionary,
    cfg: &SolverConfig,
) -> Result<StepInfo> {
    step(
        state,
        AlgorithmId::Rrxga,
        dict,
        &StepParams::exact(0.0, cfg),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Wrga,
    Wdga,
    Gg,
}

pub fn step_variant(
    state: &mut GreedyState,
    dict: &Dictionary,
    t: f64,
    variant: Variant,
    cfg: &SolverConfig,
) -> Result<StepInfo> {
    let algo = match variant {
        Variant::Wrga => AlgorithmId::Wrga,
        Variant::Wdga => AlgorithmId::Wdga,
        Variant::Gg => AlgorithmId::Gg,
    };
    step(state, algo, dict, &StepParams::exact(t, cfg))
}

/// One iteration m−1 → m of `algo`. Fails with an invalid-argument error if
/// the residual is already zero.
pub fn step(
    state: &mut GreedyState,
    algo: AlgorithmId,
    dict: &Dictionary,
    params: &StepParams<'_>,
) -> Result<StepInfo> {
    let space = *dict.space();
    if state.target.dim() != space.dim() {
        return Err(GreedyError::DimensionMismatch {
            expected: space.dim(),
            found: state.target.dim(),
        });
    }
    if state.residual.is_zero() {
        return Err(GreedyError::InvalidArgument(
            "step called on a zero residual".into(),
        ));
    }
    let cfg = params.cfg;
    let a = state.residual.coords().to_vec();
    let exact_functional;
    let functional = match params.functional {
        Some(f) => f,
        None => {
            exact_functional = space.norming_functional(&state.residual)?;
            &exact_functional
        }
    };

    let (selected, gs_lhs, dual_norm) = if algo == AlgorithmId::Rrxga {
        // the scan's step is recomputed below with the common λ ≥ 0 search
        let idx = x_greedy_scan(&space, dict, &a)?;
        let lhs = functional.apply(&dict.element(idx))?;
        (idx, lhs, dict.dual_norm(functional)?)
    } else {
        let sel = dict.select(functional, params.t, params.rule)?;
        (sel.index, sel.value, sel.dual_norm)
    };
    let phi = dict.element(selected);
    let phi_c = phi.coords();
    let g_prev = state.approximant.coords().to_vec();
    let f = state.target.coords().to_vec();
    let eta = params.eta;
    let relax_seed = |k: u64| rng::derive(params.seed, state.m as u64 + 1, k);

    let mut info = StepInfo {
        selected,
        gs_lhs,
        dual_norm,
        t: if algo == AlgorithmId::Rrxga {
            0.0
        } else {
            params.t
        },
        lambda: None,
        omega: None,
        mu: None,
        projection_converged: true,
        eta_achieved: 0.0,
    };

    match algo.exact_counterpart() {
        AlgorithmId::Wcga => {
            let mut atoms: Vec<SignedIndex> = state.terms.iter().map(|(i, _)| *i).collect();
            let mut init: Vec<f64> = state.terms.iter().map(|(_, c)| *c).collect();
            if !atoms.iter().any(|i| i.position() == selected.position()) {
                atoms.push(selected);
                init.push(0.0);
            }
            let elems: Vec<Element> = atoms.iter().map(|i| dict.element(*i)).collect();
            let refs: Vec<&[f64]> = elems.iter().map(|e| e.coords()).collect();
            let proj = project_slices(&space, &f, &refs, Some(&init), cfg)?;
            info.projection_converged = proj.converged;
            let (coeffs, approx) = if eta > 0.0 {
                let objective = |c: &[f64]| space.norm_of(&combine_residual(&f, &refs, c));
                let relaxed = perturbation::relaxed_minimize(
                    objective,
                    eta,
                    || Ok((proj.coeffs.clone(), proj.residual_norm)),
                    &vec![None; refs.len()],
                    relax_seed(1),
                )?;
                info.eta_achieved = relaxed.excess();
                let g = combine(&refs, &relaxed.arg, space.dim());
                (relaxed.arg, g)
            } else {
                (proj.coeffs.clone(), proj.approximant.coords().to_vec())
            };
            state.terms = atoms.into_iter().zip(coeffs).collect();
            state.set_approximant(approx);
        }
        AlgorithmId::Wgafr => {
            let (mut w, mut lam, value, converged) =
                solvers::minimize_relaxation_2d(&space, &a, &g_prev, phi_c, cfg)?;
            info.projection_converged = converged;
            if eta > 0.0 {
                let objective = |x: &[f64]| {
                    let r: Vec<f64> = (0..a.len())
                        .map(|i| a[i] + x[0] * g_prev[i] - x[1] * phi_c[i])
                        .collect();
                    space.norm_of(&r)
                };
                let relaxed = perturbation::relaxed_minimize(
                    objective,
                    eta,
                    || Ok((vec![w, lam], value)),
                    &[None, Some(0.0)],
                    relax_seed(1),
                )?;
                info.eta_achieved = relaxed.excess();
                w = relaxed.arg[0];
                lam = relaxed.arg[1];
            }
            let g: Vec<f64> = g_prev
                .iter()
                .zip(phi_c)
                .map(|(gp, p)| (1.0 - w) * gp + lam * p)
                .collect();
            state.terms.iter_mut().for_each(|t| t.1 *= 1.0 - w);
            state.terms.push((selected, lam));
            state.set_approximant(g);
            info.omega = Some(w);
            info.lambda = Some(lam);
        }
        AlgorithmId::Rwrga | AlgorithmId::Rrxga => {
            let share = eta / 3.0;
            let mut lam = minimize_residual_1d(&space, &a, phi_c, Some(0.0), None, cfg)?;
            if share > 0.0 {
                let objective = |x: &[f64]| space.norm_of(&axpy(&a, -x[0], phi_c));
                let exact = (vec![lam.arg], lam.value);
                let relaxed = perturbation::relaxed_minimize(
                    objective,
                    share,
                    || Ok(exact),
                    &[Some(0.0)],
                    relax_seed(1),
                )?;
                info.eta_achieved = relaxed.excess();
                lam.arg = relaxed.arg[0];
                lam.value = relaxed.value;
            }
            let h = axpy(&g_prev, lam.arg, phi_c);
            let (mu, excess) = rescale(&space, &f, &h, share, relax_seed(2), cfg)?;
            info.eta_achieved = info.eta_achieved.max(excess);
            state.terms.push((selected, lam.arg));
            state.terms.iter_mut().for_each(|t| t.1 *= mu);
            state.set_approximant(h.iter().map(|x| mu * x).collect());
            info.lambda = Some(lam.arg);
            info.mu = Some(mu);
        }
        AlgorithmId::Wrga => {
            let dir: Vec<f64> = phi_c.iter().zip(&g_prev).map(|(p, g)| p - g).collect();
            let lam = minimize_residual_1d(&space, &a, &dir, Some(0.0), Some(1.0), cfg)?.arg;
            let g: Vec<f64> = g_prev
                .iter()
                .zip(phi_c)
                .map(|(gp, p)| (1.0 - lam) * gp + lam * p)
                .collect();
            state.terms.iter_mut().for_each(|t| t.1 *= 1.0 - lam);
            state.terms.push((selected, lam));
            state.set_approximant(g);
            info.lambda = Some(lam);
        }
        AlgorithmId::Wdga => {
            let lam = minimize_residual_1d(&space, &a, phi_c, Some(0.0), None, cfg)?.arg;
            state.terms.push((selected, lam));
            state.set_approximant(axpy(&g_prev, lam, phi_c));
            info.lambda = Some(lam);
        }
        AlgorithmId::Gg => {
            let lam = gg_step_size(&space, space.norm_of(&a), gs_lhs);
            let h = axpy(&g_prev, lam, phi_c);
            let (mu, _) = rescale(&space, &f, &h, 0.0, 0, cfg)?;
            state.terms.push((selected, lam));
            state.terms.iter_mut().for_each(|t| t.1 *= mu);
            state.set_approximant(h.iter().map(|x| mu * x).collect());
            info.lambda = Some(lam);
            info.mu = Some(mu);
        }
        _ => unreachable!(),
    }
    state.m += 1;
    state.selected.push(selected);
    Ok(info)
}

/// Explicit step λ = sign(F(φ))·‖f_{m−1}‖·(|F(φ)|/(2γq))^{1/(q−1)}.
pub fn gg_step_size(space: &LpSpace, residual_norm: f64, f_phi: f64) -> f64 {
    let (q, gamma) = (space.q(), space.gamma());
    f_phi.signum() * residual_norm * (f_phi.abs() / (2.0 * gamma * q)).powf(1.0 / (q - 1.0))
}

/// Exhaustive X-greedy selection: minimizes ‖a − λg‖ over λ ∈ ℝ and every
/// stored atom, returning the atom signed so that its optimal step is
/// nonnegative. Ties go to the smallest index.
fn x_greedy_scan(space: &LpSpace, dict: &Dictionary, a: &[f64]) -> Result<SignedIndex> {
    let mut buf = Vec::with_capacity(a.len());
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, g) in dict.atoms().enumerate() {
        let r = solvers::minimize_residual_1d_scan(space, a, g, 1e-12, &mut buf)?;
        if best.is_none_or(|b| r.value < b.2) {
            best = Some((i, r.arg, r.value));
        }
    }
    let (pos, lam, _) = best.ok_or(GreedyError::EmptyDictionary)?;
    Ok(SignedIndex::new(pos, lam < 0.0))
}

/// Minimizes ‖f − μh‖ over μ ∈ ℝ, optionally relaxed by `eta`.
/// Returns μ and the injected relative excess.
fn rescale(
    space: &LpSpace,
    f: &[f64],
    h: &[f64],
    eta: f64,
    seed: u64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    if space.norm_of(h) == 0.0 {
        return Ok((1.0, 0.0));
    }
    let best = minimize_residual_1d(space, f, h, None, None, cfg)?;
    if eta == 0.0 {
        return Ok((best.arg, 0.0));
    }
    let objective = |x: &[f64]| space.norm_of(&axpy(f, -x[0], h));
    let relaxed = perturbation::relaxed_minimize(
        objective,
        eta,
        || Ok((vec![best.arg], best.value)),
        &[None],
        seed,
    )?;
    Ok((relaxed.arg[0], relaxed.excess()))
}

fn axpy(x: &[f64], c: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + c * b).collect()
}

fn combine(basis: &[&[f64]], c: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (ck, phi) in c.iter().zip(basis) {
        for (o, v) in out.iter_mut().zip(phi.iter()) {
            *o += ck * v;
        }
    }
    out
}

fn combine_residual(f: &[f64], basis: &[&[f64]], c: &[f64]) -> Vec<f64> {
    let g = combine(basis, c, f.len());
    f.iter().zip(&g).map(|(a, b)| a - b).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIterations,
    /// Residual reached the stopping tolerance.
    Exact,
    /// The target itself was (numerically) zero.
    AlreadyExact,
    /// The selection functional vanished on the whole dictionary.
    Stalled,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::MaxIterations => "max iterations",
            Termination::Exact => "exact",
            Termination::AlreadyExact => "already exact",
            Termination::Stalled => "stalled",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub m: usize,
    /// Signed 1-based index of φ_m.
    pub selected: i64,
    pub t_m: f64,
    /// F_{m−1}(φ_m).
    pub gs_lhs: f64,
    /// t_m·‖F_{m−1}‖_D.
    pub gs_rhs: f64,
    pub residual_norm: f64,
    pub approximant_norm: f64,
    /// |F_m(G_m)| for the functional that selects φ_{m+1}.
    pub bo_abs: f64,
    /// Independently measured inf_{λ≥0} ‖f_{m−1} − λφ_m‖.
    pub er_reference: f64,
    pub lambda: Option<f64>,
    pub omega: Option<f64>,
    pub mu: Option<f64>,
    /// δ_m requested for F_m.
    pub delta_m: f64,
    /// 1 − F_m(f_m)/‖f_m‖ as measured.
    pub delta_achieved: f64,
    /// η_m allowed in this step.
    pub eta_m: f64,
    pub eta_achieved: f64,
    /// Biorthogonality allowance ε_m (0 for exact algorithms).
    pub eps_m: f64,
    /// min over the negative grid of ‖f_{m−1} − λφ_m‖ − ‖f_{m−1}‖.
    pub remark41_margin: f64,
    /// min over the grid of ‖f_m − λG_m‖ − ‖f_m‖.
    pub bj_margin: f64,
    /// Residual at or below the stopping tolerance; F_m is undefined then.
    pub exact: bool,
    pub projection_converged: bool,
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetInfo {
    pub spec: Option<String>,
    /// A(ε).
    pub a_eps: f64,
    pub eps: f64,
    pub certified: bool,
    pub in_a1: bool,
    pub noise_norm: f64,
}

impl TargetInfo {
    pub fn of(target: &Target) -> Self {
        Self {
            spec: target.spec.map(|s| s.to_string()),
            a_eps: target.a_eps,
            eps: target.eps,
            certified: target.has_certificate(),
            in_a1: target.in_a1(),
            noise_norm: target.noise_norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub algorithm: AlgorithmId,
    pub space: String,
    pub q: f64,
    pub gamma: f64,
    pub p_conj: f64,
    pub dictionary: String,
    pub target: TargetInfo,
    pub selection: SelectionRule,
    pub weakness: WeaknessSchedule,
    pub errors: Option<String>,
    pub seed: u64,
    pub max_m: usize,
    pub stop_tol: f64,
    pub initial_norm: f64,
    /// δ_0 of the functional that selects φ_1.
    pub initial_delta: f64,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn residual_norms(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual_norm).collect()
    }

    pub fn space(&self) -> Result<LpSpace> {
        let base = LpSpace::parse(&self.space)?;
        LpSpace::with_smoothness(base.p(), base.dim(), self.q, self.gamma)
    }

    /// ‖f_{m}‖ for m = 0..=len.
    pub fn norm_at(&self, m: usize) -> f64 {
        if m == 0 {
            self.initial_norm
        } else {
            self.records[m - 1].residual_norm
        }
    }

    /// δ of the functional that selected φ_{m+1}.
    pub fn delta_before(&self, m: usize) -> f64 {
        if m == 0 {
            self.initial_delta
        } else {
            self.records[m - 1].delta_m
        }
    }

    /// Structural completeness: contiguous records starting at m = 1.
    pub fn validate(&self) -> Result<()> {
        if self.schema != REPORT_SCHEMA {
            return Err(GreedyError::IncompleteReport(format!(
                "unsupported schema {}",
                self.schema
            )));
        }
        for (k, r) in self.records.iter().enumerate() {
            if r.m != k + 1 {
                return Err(GreedyError::IncompleteReport(format!(
                    "record {k} has m = {}, expected {}",
                    r.m,
                    k + 1
                )));
            }
            if !(r.residual_norm >= 0.0) {
                return Err(GreedyError::IncompleteReport(format!(
                    "record m = {} has residual norm {}",
                    r.m, r.residual_norm
                )));
            }
        }
        Ok(())
    }
}

/// Everything about a run besides the algorithm, target and dictionary.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub weakness: WeaknessSchedule,
    pub selection: SelectionRule,
    pub solver: SolverConfig,
    pub max_m: usize,
    pub stop_tol: f64,
    /// Seed for perturbed functionals and relaxed searches.
    pub seed: u64,
    pub errors: Option<ErrorSchedule>,
    /// Measure per-step wall time (off keeps reports reproducible).
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            weakness: WeaknessSchedule::Constant(1.0),
            selection: SelectionRule::ExactArgmax,
            solver: SolverConfig::default(),
            max_m: 100,
            stop_tol: DEFAULT_STOP_TOL,
            seed: 0,
            errors: None,
            timing: false,
        }
    }
}

impl RunOptions {
    pub fn new(weakness: WeaknessSchedule, max_m: usize) -> Self {
        Self {
            weakness,
            max_m,
            ..Self::default()
        }
    }
}

/// Iterates an exact algorithm from f_0 = f until `max_m` steps or
/// ‖f_m‖ ≤ `stop_tol`.
pub fn run_greedy(
    algorithm: AlgorithmId,
    target: &Target,
    dict: &Dictionary,
    opts: &RunOptions,
) -> Result<RunReport> {
    if algorithm.is_approximate() {
        let errors = opts.errors.clone().unwrap_or_else(ErrorSchedule::zero);
        return perturbation::run_awbga(algorithm, target, dict, &errors, opts);
    }
    drive(algorithm, target, dict, None, opts)
}

/// [`run_greedy`] for a bare element with no membership information.
pub fn run_greedy_element(
    algorithm: AlgorithmId,
    f: &Element,
    dict: &Dictionary,
    opts: &RunOptions,
) -> Result<RunReport> {
    run_greedy(algorithm, &Target::uncertified(f.clone()), dict, opts)
}

/// Shared driver for exact and approximate runs.
pub(crate) fn drive(
    algorithm: AlgorithmId,
    target: &Target,
    dict: &Dictionary,
    errors: Option<&ErrorSchedule>,
    opts: &RunOptions,
) -> Result<RunReport> {
    opts.solver.validate()?;
    let space = *dict.space();
    let f = &target.element;
    let initial_norm = space.norm(f)?;
    let mut warnings = Vec::new();
    if algorithm.exact_counterpart() == AlgorithmId::Wrga && !target.in_a1() {
        warnings.push("wrga target carries no A_1(D) certificate".to_string());
    }
    let mut report = RunReport {
        schema: REPORT_SCHEMA,
        algorithm,
        space: space.spec(),
        q: space.q(),
        gamma: space.gamma(),
        p_conj: space.p_conj(),
        dictionary: dict.spec().to_string(),
        target: TargetInfo::of(target),
        selection: opts.selection,
        weakness: opts.weakness.clone(),
        errors: errors.map(|e| e.to_string()),
        seed: opts.seed,
        max_m: opts.max_m,
        stop_tol: opts.stop_tol,
        initial_norm,
        initial_delta: 0.0,
        records: Vec::new(),
        termination: Termination::MaxIterations,
        warnings,
    };
    if initial_norm <= opts.stop_tol {
        report.termination = Termination::AlreadyExact;
        return Ok(report);
    }

    let mut state = GreedyState::new(f.clone());
    let functional_seed = |m: usize| rng::derive(opts.seed, m as u64, 7);
    let build_functional = |residual: &Element, delta: f64, m: usize| -> Result<DualFunctional> {
        if delta == 0.0 {
            space.norming_functional(residual)
        } else {
            Ok(
                perturbation::perturbed_functional(&space, residual, delta, functional_seed(m))?
                    .functional,
            )
        }
    };
    let approximate = errors.is_some();
    let delta0 = match errors {
        Some(e) => e.delta_for(&space, 0, initial_norm, opts.weakness.at(1)),
        None => 0.0,
    };
    report.initial_delta = delta0;
    let mut functional = build_functional(f, delta0, 0)?;

    for m in 1..=opts.max_m {
        let t = opts.weakness.at(m);
        let prev = state.clone();
        let prev_norm = space.norm(prev.residual())?;
        if dict.dual_norm(&functional)? <= f64::MIN_POSITIVE {
            report.termination = Termination::Stalled;
            break;
        }
        let started = opts.timing.then(Instant::now);

        let mut eta = match errors {
            Some(e) => e.eta_planned(m),
            None => 0.0,
        };
        let auto_eta = errors.is_some_and(|e| e.eta_is_auto());
        let exact_norm = if auto_eta {
            let mut probe = prev.clone();
            let params = StepParams {
                t,
                rule: opts.selection,
                functional: Some(&functional),
                eta: 0.0,
                seed: opts.seed,
                cfg: &opts.solver,
            };
            step(&mut probe, algorithm, dict, &params)?;
            Some(space.norm(probe.residual())?)
        } else {
            None
        };
        let mut info;
        loop {
            if let (Some(e), Some(v)) = (errors, exact_norm) {
                if eta.is_nan() {
                    eta = e.eta_auto(&space, v, t);
                }
            }
            state = prev.clone();
            let params = StepParams {
                t,
                rule: opts.selection,
                functional: Some(&functional),
                eta: if eta.is_nan() { 0.0 } else { eta },
                seed: opts.seed,
                cfg: &opts.solver,
            };
            info = step(&mut state, algorithm, dict, &params)?;
            // the online η threshold is checked against the realized ‖f_m‖
            if let Some(e) = errors.filter(|e| e.eta_is_auto()) {
                let limit = e.eta_auto(&space, space.norm(state.residual())?, t);
                if eta > limit && eta > 1e-300 {
                    eta *= 0.5;
                    continue;
                }
            }
            break;
        }
        let wall_ns = started.map_or(0, |s| s.elapsed().as_nanos() as u64);

        let phi = dict.element(info.selected);
        let residual_norm = space.norm(state.residual())?;
        let g_norm = space.norm(state.approximant())?;
        let er_reference = er_reference(&space, prev.residual().coords(), phi.coords());
        let remark41_margin = REMARK41_GRID
            .iter()
            .map(|c| {
                let lam = c * prev_norm;
                space.norm_of(&axpy(prev.residual().coords(), -lam, phi.coords())) - prev_norm
            })
            .fold(f64::INFINITY, f64::min);
        let bj_margin = BJ_GRID
            .iter()
            .map(|lam| {
                space.norm_of(&axpy(
                    state.residual().coords(),
                    -lam,
                    state.approximant().coords(),
                )) - residual_norm
            })
            .fold(f64::INFINITY, f64::min);
        let exact = residual_norm <= opts.stop_tol;

        let delta_m = match errors {
            Some(e) => e.delta_for(&space, m, residual_norm, opts.weakness.at(m + 1)),
            None => 0.0,
        };
        let (bo_abs, delta_achieved) = if exact {
            (0.0, 0.0)
        } else {
            functional = build_functional(state.residual(), delta_m, m)?;
            let achieved = 1.0 - functional.apply(state.residual())? / residual_norm;
            (
                functional.apply(state.approximant())?.abs(),
                achieved.max(0.0),
            )
        };
        let eps_m = match errors {
            Some(e) => e.eps_for(&space, m, delta_m, eta, g_norm),
            None => 0.0,
        };

        report.records.push(IterationRecord {
            m,
            selected: info.selected.raw(),
            t_m: info.t,
            gs_lhs: info.gs_lhs,
            gs_rhs: info.t * info.dual_norm,
            residual_norm,
            approximant_norm: g_norm,
            bo_abs,
            er_reference,
            lambda: info.lambda,
            omega: info.omega,
            mu: info.mu,
            delta_m: if approximate { delta_m } else { 0.0 },
            delta_achieved,
            eta_m: if approximate { eta } else { 0.0 },
            eta_achieved: info.eta_achieved,
            eps_m,
            remark41_margin,
            bj_margin,
            exact,
            projection_converged: info.projection_converged,
            wall_ns,
        });
        if !info.projection_converged && !exact {
            report
                .warnings
                .push(format!("m = {m}: projection not converged"));
        }
        if exact {
            report.termination = Termination::Exact;
            break;
        }
    }
    Ok(report)
}

/// inf_{λ≥0} ‖a − λb‖ by a 512-point grid on [0, 2‖a‖/‖b‖] refined by
/// golden section between the neighbours of the best grid point. Kept
/// independent of the step solvers on purpose.
pub fn er_reference(space: &LpSpace, a: &[f64], b: &[f64]) -> f64 {
    let na = space.norm_of(a);
    let nb = space.norm_of(b);
    if na == 0.0 || nb == 0.0 {
        return na;
    }
    let hi = 2.0 * na / nb;
    let objective = |lam: f64| space.norm_of(&axpy(a, -lam, b));
    grid_golden_min(objective, 0.0, hi, 512)
}

/// Dense-grid-then-golden minimum of a convex scalar function on [lo, hi].
pub fn grid_golden_min(objective: impl Fn(f64) -> f64, lo: f64, hi: f64, points: usize) -> f64 {
    let points = points.max(2);
    let h = (hi - lo) / (points - 1) as f64;
    let (best_k, best_v) = (0..points)
        .map(|k| (k, objective(lo + k as f64 * h)))
        .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
    let a = lo + (best_k.saturating_sub(1)) as f64 * h;
    let b = lo + ((best_k + 1).min(points - 1)) as f64 * h;
    let (mut x, mut y) = (a, b);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = y - inv_phi * (y - x);
    let mut d = x + inv_phi * (y - x);
    let (mut fc, mut fd) = (objective(c), objective(d));
    for _ in 0..200 {
        if y - x <= 1e-15 * (1.0 + x.abs().max(y.abs())) {
            break;
        }
        if fc <= fd {
            y = d;
            d = c;
            fd = fc;
            c = y - inv_phi * (y - x);
            fc = objective(c);
        } else {
            x = c;
            c = d;
            fc = fd;
            d = x + inv_phi * (y - x);
            fd = objective(d);
        }
    }
    best_v.min(fc).min(fd)
}
