//! Controlled inaccuracy for the approximate algorithms: perturbed norming
//! functionals (δ), relaxed minimization (η), and the biorthogonality
//! allowance (ε) these induce.

use std::fmt;

use crate::algorithms::{self, AlgorithmId, RunOptions, RunReport};
use crate::dictionary::{Dictionary, Target};
use crate::error::{GreedyError, Result};
use crate::rng::{self, gaussian_vec};
use crate::space::{lp_norm, DualFunctional, Element, LpSpace};

/// One error sequence: `const:<v>`, `pow:<c>,<a>` (c·m^{−a}, with m = 0
/// evaluated as m = 1), `list:<v1>;<v2>;…`, or `prop72auto` (thresholds
/// evaluated online from the current residual).
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceSpec {
    Const(f64),
    Pow { c: f64, a: f64 },
    List(Vec<f64>),
    Prop72Auto,
}

impl SequenceSpec {
    pub fn parse(field: &str, spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| GreedyError::parse(field, format!("`{s}`: {e}")))
        };
        let parsed = if spec == "prop72auto" {
            SequenceSpec::Prop72Auto
        } else if let Some(v) = spec.strip_prefix("const:") {
            SequenceSpec::Const(num(v)?)
        } else if let Some(body) = spec.strip_prefix("pow:") {
            let (c, a) = body
                .split_once(',')
                .ok_or_else(|| GreedyError::parse(field, "pow needs `<c>,<a>`"))?;
            SequenceSpec::Pow {
                c: num(c)?,
                a: num(a)?,
            }
        } else if let Some(body) = spec.strip_prefix("list:") {
            SequenceSpec::List(body.split(';').map(num).collect::<Result<Vec<_>>>()?)
        } else {
            return Err(GreedyError::parse(
                field,
                format!("unknown sequence `{spec}`"),
            ));
        };
        let ok = match &parsed {
            SequenceSpec::Const(v) => (0.0..=1.0).contains(v),
            SequenceSpec::Pow { c, a } => *c >= 0.0 && *a >= 0.0,
            SequenceSpec::List(v) => !v.is_empty() && v.iter().all(|x| (0.0..=1.0).contains(x)),
            SequenceSpec::Prop72Auto => true,
        };
        if !ok {
            return Err(GreedyError::parse(
                field,
                format!("values of `{spec}` must lie in [0, 1]"),
            ));
        }
        Ok(parsed)
    }

    /// Value at index m for the non-adaptive kinds; NaN for `prop72auto`.
    pub fn at(&self, m: usize) -> f64 {
        match self {
            SequenceSpec::Const(v) => *v,
            SequenceSpec::Pow { c, a } => (c * (m.max(1) as f64).powf(-a)).clamp(0.0, 1.0),
            SequenceSpec::List(v) => v[m.min(v.len() - 1)],
            SequenceSpec::Prop72Auto => f64::NAN,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SequenceSpec::Const(v) => *v == 0.0,
            SequenceSpec::Pow { c, .. } => *c == 0.0,
            SequenceSpec::List(v) => v.iter().all(|x| *x == 0.0),
            SequenceSpec::Prop72Auto => false,
        }
    }
}

impl fmt::Display for SequenceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceSpec::Const(v) => write!(f, "const:{v}"),
            SequenceSpec::Pow { c, a } => write!(f, "pow:{c},{a}"),
            SequenceSpec::List(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "list:{}", items.join(";"))
            }
            SequenceSpec::Prop72Auto => f.write_str("prop72auto"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EpsMode {
    /// ε_m from the closed form of [`eps_bound_prop61`].
    Derived,
    /// ε_1, ε_2, … given explicitly (the last value repeats).
    List(Vec<f64>),
}

/// δ, η and ε sequences of an approximate run.
///
/// Specifier: `err:delta=<seq>,eta=<seq>,eps=derived|list:<v1>;<v2>;…`.
/// The `err:` prefix and the `eps` key are optional.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSchedule {
    pub delta: SequenceSpec,
    pub eta: SequenceSpec,
    pub eps: EpsMode,
}

impl ErrorSchedule {
    pub fn zero() -> Self {
        Self {
            delta: SequenceSpec::Const(0.0),
            eta: SequenceSpec::Const(0.0),
            eps: EpsMode::Derived,
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let body = spec.trim();
        let body = body.strip_prefix("err:").unwrap_or(body);
        // values such as pow:<c>,<a> contain commas: a token without `=`
        // continues the previous value
        let mut pairs: Vec<(String, String)> = Vec::new();
        for token in body.split(',') {
            match token.split_once('=') {
                Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
                None => match pairs.last_mut() {
                    Some((_, v)) => {
                        v.push(',');
                        v.push_str(token.trim());
                    }
                    None => {
                        return Err(GreedyError::parse(
                            "errors",
                            format!("expected key=value, got `{token}`"),
                        ))
                    }
                },
            }
        }
        let mut schedule = ErrorSchedule::zero();
        for (k, v) in pairs {
            match k.as_str() {
                "delta" => schedule.delta = SequenceSpec::parse("errors.delta", &v)?,
                "eta" => schedule.eta = SequenceSpec::parse("errors.eta", &v)?,
                "eps" => {
                    schedule.eps = if v == "derived" {
                        EpsMode::Derived
                    } else if let Some(list) = v.strip_prefix("list:") {
                        let values = list
                            .split(';')
                            .map(|s| {
                                s.trim().parse::<f64>().map_err(|e| {
                                    GreedyError::parse("errors.eps", format!("`{s}`: {e}"))
                                })
                            })
                            .collect::<Result<Vec<_>>>()?;
                        if values.is_empty() || values.iter().any(|x| !(*x >= 0.0)) {
                            return Err(GreedyError::parse("errors.eps", "values must be >= 0"));
                        }
                        EpsMode::List(values)
                    } else {
                        return Err(GreedyError::parse(
                            "errors.eps",
                            format!("expected `derived` or `list:...`, got `{v}`"),
                        ));
                    }
                }
                other => {
                    return Err(GreedyError::parse(
                        "errors",
                        format!("unknown key `{other}`"),
                    ))
                }
            }
        }
        Ok(schedule)
    }

    pub fn is_zero(&self) -> bool {
        self.delta.is_zero() && self.eta.is_zero()
    }

    /// δ_m for the functional F_m of f_m, given ‖f_m‖ and t_{m+1}.
    pub fn delta_for(&self, space: &LpSpace, m: usize, residual_norm: f64, t_next: f64) -> f64 {
        match self.delta {
            SequenceSpec::Prop72Auto => prop72_threshold(space, residual_norm, t_next),
            ref s => s.at(m),
        }
    }

    /// η_m when it does not depend on the step outcome; NaN otherwise.
    pub fn eta_planned(&self, m: usize) -> f64 {
        self.eta.at(m)
    }

    pub fn eta_is_auto(&self) -> bool {
        self.eta == SequenceSpec::Prop72Auto
    }

    /// Online η_m threshold for a residual of norm `residual_norm` and t_m.
    pub fn eta_auto(&self, space: &LpSpace, residual_norm: f64, t: f64) -> f64 {
        prop72_threshold(space, residual_norm, t)
    }

    /// ε_m for step m.
    pub fn eps_for(&self, space: &LpSpace, m: usize, delta: f64, eta: f64, g_norm: f64) -> f64 {
        match &self.eps {
            EpsMode::Derived => eps_bound_prop61(space, delta, eta, g_norm),
            EpsMode::List(v) => v[(m.max(1) - 1).min(v.len() - 1)],
        }
    }
}

impl fmt::Display for ErrorSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "err:delta={},eta={},eps=", self.delta, self.eta)?;
        match &self.eps {
            EpsMode::Derived => f.write_str("derived"),
            EpsMode::List(v) => {
                let items: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "list:{}", items.join(";"))
            }
        }
    }
}

/// 64^{−p}·γ^{1−p}·‖f‖^p·t^p with p the conjugate exponent, clamped to [0, 1].
pub fn prop72_threshold(space: &LpSpace, residual_norm: f64, t: f64) -> f64 {
    let p = space.p_conj();
    let v = 64f64.powf(-p) * space.gamma().powf(1.0 - p) * residual_norm.powf(p) * t.powf(p);
    v.clamp(0.0, 1.0)
}

/// A functional admissible for the approximate class:
/// ‖F‖ ≤ 1 and F(f) ≥ (1 − δ)‖f‖.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedFunctional {
    pub functional: DualFunctional,
    /// 1 − F(f)/‖f‖ as measured.
    pub achieved_delta: f64,
}

/// Mixes the exact norming functional of `f` with a random unit dual vector,
/// taking the largest mixing weight (found by bisection) that still meets
/// F(f) ≥ (1 − δ)‖f‖. The result is renormalized to unit dual norm.
pub fn perturbed_functional(
    space: &LpSpace,
    f: &Element,
    delta: f64,
    seed: u64,
) -> Result<PerturbedFunctional> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(GreedyError::InvalidArgument(format!(
            "delta = {delta} outside [0, 1]"
        )));
    }
    let exact = space.norming_functional(f)?;
    let norm = space.norm(f)?;
    if delta == 0.0 {
        let achieved = (1.0 - exact.apply(f)? / norm).max(0.0);
        return Ok(PerturbedFunctional {
            functional: exact,
            achieved_delta: achieved,
        });
    }
    let q_dual = space.dual_exponent();
    let mut rng = rng::seeded(seed, rng::stream::FUNCTIONAL);
    let mut r = gaussian_vec(&mut rng, space.dim());
    let rn = lp_norm(&r, q_dual);
    r.iter_mut().for_each(|x| *x /= rn);

    let mix = |s: f64| -> Vec<f64> {
        let mut c: Vec<f64> = exact
            .coords()
            .iter()
            .zip(&r)
            .map(|(e, x)| (1.0 - s) * e + s * x)
            .collect();
        let cn = lp_norm(&c, q_dual);
        if cn > 0.0 {
            // dividing by a norm computed in floating point can leave the
            // result a few ulps above 1
            let scale = 1.0 / (cn * (1.0 + 4.0 * f64::EPSILON));
            c.iter_mut().for_each(|x| *x *= scale);
        }
        c
    };
    let ok = |c: &[f64]| {
        let v: f64 = c.iter().zip(f.coords()).map(|(a, b)| a * b).sum();
        v >= (1.0 - delta) * norm
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if ok(&mix(1.0)) {
        lo = 1.0;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if ok(&mix(mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let mut coords = mix(lo);
    if !ok(&coords) {
        coords = exact.coords().to_vec();
    }
    let functional = DualFunctional::new(space, coords)?;
    let achieved = (1.0 - functional.apply(f)? / norm).max(0.0);
    Ok(PerturbedFunctional {
        functional,
        achieved_delta: achieved,
    })
}

/// Outcome of a relaxed minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxed {
    pub arg: Vec<f64>,
    pub value: f64,
    /// The exact minimum v*.
    pub exact_value: f64,
}

impl Relaxed {
    /// value/v* − 1 (0 when v* = 0).
    pub fn excess(&self) -> f64 {
        if self.exact_value > 0.0 {
            (self.value / self.exact_value - 1.0).max(0.0)
        } else {
            0.0
        }
    }
}

/// Returns an argument whose value lies in [v*, (1 + η)·v*].
///
/// Starting from the exact minimizer, it moves along a random direction
/// (respecting the optional lower bounds) until the objective reaches
/// (1 + η/2)·v*, located by bisection on the step length. The objective is
/// convex, so the value is monotone along the ray.
pub fn relaxed_minimize(
    objective: impl Fn(&[f64]) -> f64,
    eta: f64,
    exact: impl FnOnce() -> Result<(Vec<f64>, f64)>,
    lower: &[Option<f64>],
    seed: u64,
) -> Result<Relaxed> {
    if !(eta >= 0.0) {
        return Err(GreedyError::InvalidArgument(format!(
            "eta = {eta} must be >= 0"
        )));
    }
    let (arg, v_star) = exact()?;
    let exact_result = Relaxed {
        arg: arg.clone(),
        value: v_star,
        exact_value: v_star,
    };
    if eta == 0.0 || v_star <= 0.0 || arg.is_empty() {
        return Ok(exact_result);
    }
    let target = v_star * (1.0 + 0.5 * eta);
    let ceiling = v_star * (1.0 + eta);

    let mut rng = rng::seeded(seed, rng::stream::RELAXATION);
    let mut dir = gaussian_vec(&mut rng, arg.len());
    for (i, d) in dir.iter_mut().enumerate() {
        if let Some(Some(lb)) = lower.get(i) {
            if arg[i] <= *lb && *d < 0.0 {
                *d = -*d;
            }
        }
    }
    let dn = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = arg.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    dir.iter_mut().for_each(|x| *x *= scale / dn);
    // largest feasible step
    let mut alpha_max = f64::INFINITY;
    for (i, d) in dir.iter().enumerate() {
        if let Some(Some(lb)) = lower.get(i) {
            if *d < 0.0 {
                alpha_max = alpha_max.min((arg[i] - lb) / -d);
            }
        }
    }
    let at =
        |alpha: f64| -> Vec<f64> { arg.iter().zip(&dir).map(|(a, d)| a + alpha * d).collect() };
    let value_at = |alpha: f64| objective(&at(alpha));

    let mut hi = (1e-6f64).min(alpha_max);
    let mut v_hi = value_at(hi);
    while v_hi < target && hi < alpha_max {
        hi = (hi * 2.0).min(alpha_max);
        if hi > 1e8 {
            // flat direction: stay at the minimizer
            return Ok(exact_result);
        }
        v_hi = value_at(hi);
    }
    let (alpha, value) = if v_hi < target {
        (hi, v_hi)
    } else {
        let (mut lo, mut up) = (0.0, hi);
        let mut best = (0.0, v_star);
        for _ in 0..80 {
            let mid = 0.5 * (lo + up);
            let v = value_at(mid);
            if v <= ceiling {
                best = (mid, v);
            }
            if v < target {
                lo = mid;
            } else {
                up = mid;
            }
        }
        best
    };
    // the value must stay inside [v*, (1+η)v*] as measured
    if !(value >= v_star && value <= ceiling) {
        return Ok(exact_result);
    }
    Ok(Relaxed {
        arg: at(alpha),
        value,
        exact_value: v_star,
    })
}

/// ε = inf_{λ>0} (δ + η + 2γ(λ‖G‖)^q)/λ in closed form:
/// q·(q−1)^{−1/p}·(δ+η)^{1/p}·(2γ)^{1/q}·‖G‖ with p = q/(q−1).
pub fn eps_bound_prop61(space: &LpSpace, delta: f64, eta: f64, g_norm: f64) -> f64 {
    let s = delta + eta;
    if s <= 0.0 || g_norm <= 0.0 {
        return 0.0;
    }
    let (q, gamma, p) = (space.q(), space.gamma(), space.p_conj());
    q * (q - 1.0).powf(-1.0 / p) * s.powf(1.0 / p) * (2.0 * gamma).powf(1.0 / q) * g_norm
}

/// Runs an approximate algorithm (awcga, awgafr, arwrga) under `errors`.
pub fn run_awbga(
    algorithm: AlgorithmId,
    target: &Target,
    dict: &Dictionary,
    errors: &ErrorSchedule,
    opts: &RunOptions,
) -> Result<RunReport> {
    if !algorithm.is_approximate() {
        return Err(GreedyError::InvalidArgument(format!(
            "{algorithm} is not an approximate algorithm"
        )));
    }
    algorithms::drive(algorithm, target, dict, Some(errors), opts)
}
