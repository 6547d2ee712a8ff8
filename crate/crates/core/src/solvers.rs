//! Convex minimization subroutines: scalar line search, bracketing, the 2-D
//! relaxation search, and best approximation from a finite-dimensional
//! subspace (Chebyshev projection).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GreedyError, Result};
use crate::space::{lp_norm, pow_abs, Element, LpSpace};

const INV_PHI: f64 = 0.618_033_988_749_894_9;
const BRACKET_CAP: f64 = 1e12;
/// Residuals at or below this norm count as exact representation.
pub const EXACT_RESIDUAL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Argument tolerance for scalar searches.
    pub tol: f64,
    /// Tolerance on |F_r(φ)| for gradient-type stopping rules.
    pub grad_tol: f64,
    pub max_iters: usize,
    pub bracket_growth: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            grad_tol: 1e-10,
            max_iters: 500,
            bracket_growth: 2.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tol > 0.0
            && self.tol < 1.0
            && self.grad_tol > 0.0
            && self.grad_tol < 1.0
            && self.max_iters > 0
            && self.bracket_growth > 1.0;
        if ok {
            Ok(())
        } else {
            Err(GreedyError::InvalidArgument(format!(
                "invalid solver configuration {self:?}"
            )))
        }
    }
}

/// Golden-section search for the minimum of a convex function on [lo, hi].
///
/// The returned value never exceeds the objective at either endpoint.
pub fn line_search(
    objective: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    if !(lo <= hi) {
        return Err(GreedyError::InvalidInterval { lo, hi });
    }
    let f_lo = objective(lo);
    if lo == hi {
        return Ok((lo, f_lo));
    }
    let f_hi = objective(hi);
    let width_tol = cfg.tol * (hi - lo).max(1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    let mut iters = 0;
    while b - a > width_tol && iters < cfg.max_iters {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = objective(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = objective(x2);
        }
        iters += 1;
    }
    let mid = 0.5 * (a + b);
    let f_mid = objective(mid);
    let best = [(mid, f_mid), (x1, f1), (x2, f2), (lo, f_lo), (hi, f_hi)]
        .into_iter()
        .fold((mid, f_mid), |best, c| if c.1 < best.1 { c } else { best });
    Ok(best)
}

/// Expands `[start, start + step·growth^k]` until the objective fails to
/// decrease twice in a row. Ties count as a failure to decrease, so flat
/// tails still terminate.
pub fn bracket_minimum(
    objective: impl Fn(f64) -> f64,
    start: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    bracket_minimum_with_step(objective, start, 1.0, cfg)
}

pub fn bracket_minimum_with_step(
    objective: impl Fn(f64) -> f64,
    start: f64,
    step: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    if !(step > 0.0) {
        return Err(GreedyError::InvalidArgument(format!(
            "step = {step} must be > 0"
        )));
    }
    let tie = |a: f64, b: f64| b >= a - 1e-15 * a.abs().max(1.0);
    // points[k] = start + step·(growth^k − 1)/(growth − 1) style expansion
    let mut prev_x = start;
    let mut prev_v = objective(start);
    // the minimizer lies to the right of the last point that still decreased
    let mut anchor = start;
    let mut width = step;
    let mut rises = 0;
    loop {
        let x = prev_x + width;
        if x - start > BRACKET_CAP {
            return Err(GreedyError::NoBracket);
        }
        let v = objective(x);
        if tie(prev_v, v) {
            rises += 1;
            if rises == 2 {
                return Ok((anchor, x));
            }
        } else {
            rises = 0;
            anchor = prev_x;
        }
        prev_x = x;
        prev_v = v;
        width *= cfg.bracket_growth;
    }
}

/// Bracket for a free (two-sided) scalar minimization around `center`.
pub fn bracket_free(
    objective: impl Fn(f64) -> f64,
    center: f64,
    step: f64,
    cfg: &SolverConfig,
) -> Result<(f64, f64)> {
    let v0 = objective(center);
    if objective(center + step) < v0 {
        bracket_minimum_with_step(&objective, center, step, cfg)
    } else if objective(center - step) < v0 {
        let (a, b) = bracket_minimum_with_step(|x| objective(-x), -center, step, cfg)?;
        Ok((-b, -a))
    } else {
        Ok((center - step, center + step))
    }
}

/// Cyclic coordinate descent for a jointly convex function of (ω, λ) with
/// ω ∈ ℝ and λ ≥ 0. Each coordinate is solved by bracketing plus golden
/// section, and every full cycle is followed by an extrapolation along the
/// cycle's displacement, which keeps zig-zagging on elongated level sets in
/// check.
pub fn minimize_2d(
    objective: impl Fn(f64, f64) -> f64,
    cfg: &SolverConfig,
) -> Result<((f64, f64), f64)> {
    let (mut w, mut lam) = (0.0, 0.0);
    let mut value = objective(w, lam);
    let inner = SolverConfig {
        tol: cfg.tol * 1e-2,
        ..*cfg
    };
    for _ in 0..cfg.max_iters {
        let start = value;
        let (w0, l0) = (w, lam);

        let (a, b) = bracket_free(|x| objective(x, lam), w, 1.0, &inner)?;
        let (nw, vw) = line_search(|x| objective(x, lam), a, b, &inner)?;
        if vw < value {
            w = nw;
            value = vw;
        }
        let (a, b) = bracket_minimum(|x| objective(w, x), 0.0, &inner)?;
        let (nl, vl) = line_search(|x| objective(w, x), a, b, &inner)?;
        if vl < value {
            lam = nl;
            value = vl;
        }

        let (dw, dl) = (w - w0, lam - l0);
        if dw != 0.0 || dl != 0.0 {
            let along = |s: f64| objective(w + s * dw, (lam + s * dl).max(0.0));
            if let Ok((a, b)) = bracket_minimum(along, 0.0, &inner) {
                let (s, vs) = line_search(along, a, b, &inner)?;
                if vs < value {
                    w += s * dw;
                    lam = (lam + s * dl).max(0.0);
                    value = vs;
                }
            }
        }
        if start - value < cfg.tol * start.abs().max(1e-300) {
            break;
        }
    }
    Ok(((w, lam), value))
}

/// Minimizer of λ ↦ ‖a − λb‖ over an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineMin {
    pub arg: f64,
    pub value: f64,
}

/// Minimizes ‖a − λb‖_p over λ ∈ [lower, upper] (either side may be
/// unbounded). Golden section locates the minimizer; the result is then
/// polished by bisection on the sign of the slope −F_{a−λb}(b), so the
/// first-order condition holds to `cfg.grad_tol` rather than only to the
/// square root of machine precision.
pub fn minimize_residual_1d(
    space: &LpSpace,
    a: &[f64],
    b: &[f64],
    lower: Option<f64>,
    upper: Option<f64>,
    cfg: &SolverConfig,
) -> Result<LineMin> {
    let (lo, hi) = residual_bracket(space, a, b, lower, upper)?;
    let buf = std::cell::RefCell::new(vec![0.0; a.len()]);
    let value = |lam: f64| {
        let mut buf = buf.borrow_mut();
        residual_into(a, b, lam, &mut buf);
        space.norm_of(&buf)
    };
    if lo == hi {
        return Ok(LineMin {
            arg: lo,
            value: value(lo),
        });
    }
    let (golden, golden_value) = line_search(value, lo, hi, cfg)?;
    let width = cfg.tol * (hi - lo).max(1.0);
    let (wlo, whi) = (
        (golden - 2.0 * width).max(lo),
        (golden + 2.0 * width).min(hi),
    );
    let polished = polish_slope(space, a, b, wlo, whi, 0.0, &mut buf.borrow_mut());
    let mut best = (golden, golden_value);
    if let Some(x) = polished {
        // the polished point wins unless it is worse beyond rounding, since
        // its first-order condition is the sharpest available
        let v = value(x);
        if v <= golden_value * (1.0 + 8.0 * f64::EPSILON) {
            best = (x, v);
        }
    }
    for x in [lo, hi] {
        let v = value(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    Ok(LineMin {
        arg: best.0,
        value: best.1,
    })
}

/// Faster variant for exhaustive scans: bisection on the slope sign over
/// the whole bracket, stopping at |slope| ≤ `slope_tol`.
pub fn minimize_residual_1d_scan(
    space: &LpSpace,
    a: &[f64],
    b: &[f64],
    slope_tol: f64,
    buf: &mut Vec<f64>,
) -> Result<LineMin> {
    let (lo, hi) = residual_bracket(space, a, b, None, None)?;
    if space.is_hilbert() {
        let bb: f64 = b.iter().map(|x| x * x).sum();
        let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let arg = if bb > 0.0 { ab / bb } else { 0.0 };
        residual_into(a, b, arg, buf);
        return Ok(LineMin {
            arg,
            value: space.norm_of(buf),
        });
    }
    let arg = polish_slope(space, a, b, lo, hi, slope_tol, buf).unwrap_or(0.0);
    residual_into(a, b, arg, buf);
    Ok(LineMin {
        arg,
        value: space.norm_of(buf),
    })
}

fn residual_into(a: &[f64], b: &[f64], lam: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend(a.iter().zip(b).map(|(x, y)| x - lam * y));
}

/// Any minimizer of ‖a − λb‖ satisfies |λ| ≤ 2‖a‖/‖b‖, since beyond that
/// the value exceeds ‖a‖ (the value at λ = 0).
fn residual_bracket(
    space: &LpSpace,
    a: &[f64],
    b: &[f64],
    lower: Option<f64>,
    upper: Option<f64>,
) -> Result<(f64, f64)> {
    if a.len() != space.dim() || b.len() != space.dim() {
        return Err(GreedyError::DimensionMismatch {
            expected: space.dim(),
            found: if a.len() != space.dim() {
                a.len()
            } else {
                b.len()
            },
        });
    }
    let na = space.norm_of(a);
    let nb = space.norm_of(b);
    let reach = if nb > 0.0 { 2.0 * na / nb } else { 0.0 };
    let lo = lower.unwrap_or(-reach).max(-reach);
    let hi = upper.unwrap_or(reach).min(reach);
    match (lower, upper) {
        (Some(l), Some(u)) if l > u => Err(GreedyError::InvalidInterval { lo: l, hi: u }),
        // the feasible set lies entirely beyond the reach on one side
        _ if lo > hi => {
            let l = lower.unwrap_or(f64::NEG_INFINITY);
            let u = upper.unwrap_or(f64::INFINITY);
            let x = if l > reach { l } else { u };
            Ok((x, x))
        }
        _ => Ok((lo, hi)),
    }
}

/// Bisection on the sign of d/dλ ‖a − λb‖ = −F_{a−λb}(b) within [lo, hi],
/// stopping early once |slope| ≤ `slope_tol`.
fn polish_slope(
    space: &LpSpace,
    a: &[f64],
    b: &[f64],
    lo: f64,
    hi: f64,
    slope_tol: f64,
    buf: &mut Vec<f64>,
) -> Option<f64> {
    let mut slope = |lam: f64| {
        residual_into(a, b, lam, buf);
        -space.norming_value(buf, b)
    };
    let s_lo = slope(lo);
    if s_lo >= 0.0 {
        return Some(lo);
    }
    let s_hi = slope(hi);
    if s_hi <= 0.0 {
        return Some(hi);
    }
    // Illinois-type false position: superlinear on smooth slopes, and every
    // few iterations a plain bisection keeps the bracket shrinking
    let (mut l, mut h, mut sl, mut sh) = (lo, hi, s_lo, s_hi);
    let mut side = 0i8;
    for it in 0..200 {
        let mut x = if it % 4 == 3 {
            0.5 * (l + h)
        } else {
            (l * sh - h * sl) / (sh - sl)
        };
        if !(x > l && x < h) {
            x = 0.5 * (l + h);
            if !(x > l && x < h) {
                break;
            }
        }
        let s = slope(x);
        if s.abs() <= slope_tol || s == 0.0 {
            return Some(x);
        }
        if s < 0.0 {
            l = x;
            sl = s;
            if side == -1 {
                sh *= 0.5;
            }
            side = -1;
        } else {
            h = x;
            sh = s;
            if side == 1 {
                sl *= 0.5;
            }
            side = 1;
        }
    }
    Some(if -sl < sh { l } else { h })
}

/// Minimizes ‖a + ωc − λb‖ over ω ∈ ℝ and λ ≥ 0, i.e. the joint relaxation
/// problem with c = G_{m−1}, b = φ_m and a = f_{m−1}. Returns (ω, λ, value,
/// converged).
///
/// Solved as a two-term best approximation: if the unconstrained optimum has
/// λ < 0, convexity places the constrained optimum on λ = 0.
pub fn minimize_relaxation_2d(
    space: &LpSpace,
    a: &[f64],
    c: &[f64],
    b: &[f64],
    cfg: &SolverConfig,
) -> Result<(f64, f64, f64, bool)> {
    let nc = space.norm_of(c);
    if nc == 0.0 {
        let r = minimize_residual_1d(space, a, b, Some(0.0), None, cfg)?;
        return Ok((0.0, r.arg, r.value, true));
    }
    let neg_c: Vec<f64> = c.iter().map(|x| -x).collect();
    let proj = project_slices(space, a, &[&neg_c, b], None, cfg)?;
    let (w, lam) = (proj.coeffs[0], proj.coeffs[1]);
    if lam >= 0.0 {
        return Ok((w, lam, proj.residual_norm, proj.converged));
    }
    let r = minimize_residual_1d(space, a, &neg_c, None, None, cfg)?;
    Ok((r.arg, 0.0, r.value, true))
}

/// Outcome of a Chebyshev projection.
#[derive(Debug, Clone)]
pub struct Projection {
    pub coeffs: Vec<f64>,
    pub approximant: Element,
    pub residual: Element,
    pub residual_norm: f64,
    /// max_k |F_residual(φ_k)| at the returned point.
    pub grad_max: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Best approximation of `f` from span(basis): minimizes
/// h(c) = ‖f − Σ c_k φ_k‖_p.
///
/// The gradient of h is (−F_r(φ_k))_k with r the residual, so the stopping
/// rule max_k |F_r(φ_k)| ≤ `cfg.grad_tol` is exactly biorthogonality of the
/// residual to every basis element. Steps are damped Newton steps on
/// Σ|r_i|^p, safeguarded by backtracking on h.
pub fn chebyshev_project(
    space: &LpSpace,
    f: &Element,
    basis: &[Element],
    cfg: &SolverConfig,
) -> Result<Projection> {
    let refs: Vec<&[f64]> = basis.iter().map(|e| e.coords()).collect();
    for e in basis {
        if e.dim() != space.dim() {
            return Err(GreedyError::DimensionMismatch {
                expected: space.dim(),
                found: e.dim(),
            });
        }
    }
    if f.dim() != space.dim() {
        return Err(GreedyError::DimensionMismatch {
            expected: space.dim(),
            found: f.dim(),
        });
    }
    project_slices(space, f.coords(), &refs, None, cfg)
}

/// [`chebyshev_project`] on raw slices, optionally warm-started.
pub fn project_slices(
    space: &LpSpace,
    f: &[f64],
    basis: &[&[f64]],
    init: Option<&[f64]>,
    cfg: &SolverConfig,
) -> Result<Projection> {
    let n = space.dim();
    let k = basis.len();
    if k == 0 {
        return Err(GreedyError::InvalidArgument(
            "empty projection basis".into(),
        ));
    }
    let p = space.p();
    let mut coeffs = match init {
        Some(c) if c.len() == k => c.to_vec(),
        _ => vec![0.0; k],
    };
    let residual_of = |c: &[f64], out: &mut Vec<f64>| {
        out.clear();
        out.extend_from_slice(f);
        for (ck, phi) in c.iter().zip(basis) {
            if *ck != 0.0 {
                for (o, v) in out.iter_mut().zip(phi.iter()) {
                    *o -= ck * v;
                }
            }
        }
    };
    let mut r = Vec::with_capacity(n);
    residual_of(&coeffs, &mut r);
    let mut norm = lp_norm(&r, p);
    // a warm start that is worse than the origin is discarded
    if init.is_some() {
        let f_norm = lp_norm(f, p);
        if norm > f_norm {
            coeffs.iter_mut().for_each(|c| *c = 0.0);
            r.clear();
            r.extend_from_slice(f);
            norm = f_norm;
        }
    }

    let mut a = vec![0.0; n];
    let mut dual = vec![0.0; n];
    let mut weight = vec![0.0; n];
    let mut trial_c = vec![0.0; k];
    let mut trial_r = Vec::with_capacity(n);
    let mut grad = vec![0.0; k];
    let mut damping = 0.0;
    let mut converged = false;
    let mut iterations = 0;

    let grad_max = loop {
        if norm <= EXACT_RESIDUAL {
            converged = true;
            break 0.0;
        }
        for i in 0..n {
            a[i] = r[i] / norm;
            let m = a[i].abs();
            dual[i] = a[i].signum() * pow_abs(m, p - 1.0);
            // for p < 2 the weight blows up at zero coordinates; cap it
            weight[i] = (p - 1.0) * pow_abs(m.max(1e-12), p - 2.0);
        }
        for (g, phi) in grad.iter_mut().zip(basis) {
            *g = dot(&dual, phi);
        }
        let gmax = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        if gmax <= cfg.grad_tol {
            converged = true;
            break gmax;
        }
        if iterations >= cfg.max_iters {
            break gmax;
        }
        iterations += 1;

        let mut h = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let mut s = 0.0;
                for t in 0..n {
                    s += weight[t] * basis[i][t] * basis[j][t];
                }
                h[(i, j)] = s;
                h[(j, i)] = s;
            }
        }
        let diag_max = (0..k)
            .map(|i| h[(i, i)])
            .fold(0.0_f64, f64::max)
            .max(1e-300);
        let g_vec = DVector::from_column_slice(&grad);

        let mut improved = false;
        for _ in 0..30 {
            let mut hd = h.clone();
            for i in 0..k {
                hd[(i, i)] += damping * diag_max;
            }
            let Some(chol) = hd.cholesky() else {
                damping = (damping * 10.0).max(1e-14);
                continue;
            };
            let step = chol.solve(&g_vec) * norm;
            // exact search along the Newton direction; the slope-polished
            // minimizer keeps making progress after value differences have
            // dropped below rounding
            let mut dir_vec = vec![0.0; n];
            for (sk, phi) in step.iter().zip(basis) {
                for (o, v) in dir_vec.iter_mut().zip(phi.iter()) {
                    *o += sk * v;
                }
            }
            let line = minimize_residual_1d(space, &r, &dir_vec, Some(0.0), None, cfg)?;
            if line.arg > 0.0 && line.value <= norm * (1.0 + 64.0 * f64::EPSILON) {
                for i in 0..k {
                    trial_c[i] = coeffs[i] + line.arg * step[i];
                }
                residual_of(&trial_c, &mut trial_r);
                coeffs.copy_from_slice(&trial_c);
                std::mem::swap(&mut r, &mut trial_r);
                norm = lp_norm(&r, p);
                improved = true;
                damping = if (line.arg - 1.0).abs() < 0.5 {
                    damping * 0.1
                } else {
                    damping
                };
                if damping < 1e-12 {
                    damping = 0.0;
                }
                break;
            }
            damping = (damping * 10.0).max(1e-8);
            if damping > 1e12 {
                break;
            }
        }
        if !improved {
            // no representable decrease is left; rounding limits the gradient
            break gmax;
        }
    };

    let mut approx = vec![0.0; n];
    for (ck, phi) in coeffs.iter().zip(basis) {
        for (o, v) in approx.iter_mut().zip(phi.iter()) {
            *o += ck * v;
        }
    }
    let residual: Vec<f64> = f.iter().zip(&approx).map(|(x, g)| x - g).collect();
    Ok(Projection {
        coeffs,
        approximant: Element::from_vec_unchecked(approx),
        residual_norm: lp_norm(&residual, p),
        residual: Element::from_vec_unchecked(residual),
        grad_max,
        converged,
        iterations,
    })
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
