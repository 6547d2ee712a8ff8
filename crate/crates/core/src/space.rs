//! Finite-dimensional ℓ_p geometry.
//!
//! An [`LpSpace`] is ℓ_p^n with 1 < p < ∞. Besides the norm it carries the
//! power-type description of its modulus of smoothness, ρ(u) ≤ γ·u^q, with
//! q = min(p, 2) and
//!
//! * γ = 1/p for 1 < p ≤ 2,
//! * γ = (p − 1)/2 for p ≥ 2.
//!
//! The conjugate exponent q/(q − 1) that appears in every rate estimate is
//! stored separately as `p_conj`; it is unrelated to the norm exponent `p`.
//!
//! Dual functionals are dense coordinate vectors acting by the dot product,
//! so the norming functional of f is
//! F_f = sign(f)·|f|^{p−1} / ‖f‖_p^{p−1}, taken coordinatewise.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GreedyError, Result};
use crate::rng::{self, gaussian_vec};

/// Centralized tolerances for algebraic identities and optimizer outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub algebraic: f64,
    pub optimizer: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebraic: 1e-10,
            optimizer: 1e-6,
        }
    }
}

/// Slack allowed on the operator norm of a functional that should be ≤ 1.
pub const DUAL_NORM_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpSpace {
    n: usize,
    p: f64,
    q: f64,
    gamma: f64,
    p_conj: f64,
}

impl LpSpace {
    /// ℓ_p^n with the default smoothness constants for its exponent.
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(GreedyError::NotUniformlySmooth { p });
        }
        let (q, gamma) = if p <= 2.0 {
            (p, 1.0 / p)
        } else {
            (2.0, (p - 1.0) / 2.0)
        };
        Self::with_smoothness(p, n, q, gamma)
    }

    /// ℓ_p^n with an explicitly supplied power-type pair (q, γ).
    pub fn with_smoothness(p: f64, n: usize, q: f64, gamma: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(GreedyError::NotUniformlySmooth { p });
        }
        if n == 0 {
            return Err(GreedyError::InvalidArgument(
                "dimension must be positive".into(),
            ));
        }
        if !(q > 1.0 && q <= 2.0) {
            return Err(GreedyError::InvalidArgument(format!(
                "smoothness power q = {q} outside (1, 2]"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(GreedyError::InvalidArgument(format!(
                "smoothness constant gamma = {gamma} must be positive"
            )));
        }
        Ok(Self {
            n,
            p,
            q,
            gamma,
            p_conj: q / (q - 1.0),
        })
    }

    /// Parses `lp:p=<real>,n=<int>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let body = spec.trim().strip_prefix("lp:").ok_or_else(|| {
            GreedyError::parse("space", format!("`{spec}` must start with `lp:`"))
        })?;
        let mut p = None;
        let mut n = None;
        for part in body.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                GreedyError::parse("space", format!("expected key=value, got `{part}`"))
            })?;
            match key.trim() {
                "p" => {
                    let v = value.trim();
                    let parsed = match v {
                        "inf" | "infinity" => f64::INFINITY,
                        _ => v
                            .parse::<f64>()
                            .map_err(|e| GreedyError::parse("space.p", e.to_string()))?,
                    };
                    p = Some(parsed);
                }
                "n" => {
                    n = Some(
                        value
                            .trim()
                            .parse::<usize>()
                            .map_err(|e| GreedyError::parse("space.n", e.to_string()))?,
                    )
                }
                other => {
                    return Err(GreedyError::parse(
                        "space",
                        format!("unknown key `{other}`"),
                    ))
                }
            }
        }
        let p = p.ok_or_else(|| GreedyError::parse("space.p", "missing"))?;
        let n = n.ok_or_else(|| GreedyError::parse("space.n", "missing"))?;
        Self::new(p, n)
    }

    pub fn spec(&self) -> String {
        format!("lp:p={},n={}", self.p, self.n)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Power type of the modulus of smoothness.
    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Exponent q/(q − 1) used by the rate estimates.
    pub fn p_conj(&self) -> f64 {
        self.p_conj
    }

    /// Hölder conjugate of the norm exponent, p/(p − 1).
    pub fn dual_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == 2.0
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.n {
            return Err(GreedyError::DimensionMismatch {
                expected: self.n,
                found,
            });
        }
        Ok(())
    }

    pub fn norm(&self, x: &Element) -> Result<f64> {
        self.check_dim(x.dim())?;
        Ok(lp_norm(x.coords(), self.p))
    }

    /// Norm of a raw coordinate slice; the caller guarantees the length.
    #[inline]
    pub fn norm_of(&self, coords: &[f64]) -> f64 {
        debug_assert_eq!(coords.len(), self.n);
        lp_norm(coords, self.p)
    }

    pub fn dual_norm(&self, f: &DualFunctional) -> Result<f64> {
        self.check_dim(f.dim())?;
        Ok(lp_norm(&f.coords, self.dual_exponent()))
    }

    pub fn norming_functional(&self, f: &Element) -> Result<DualFunctional> {
        self.check_dim(f.dim())?;
        let norm = lp_norm(f.coords(), self.p);
        if norm == 0.0 {
            return Err(GreedyError::ZeroNorming);
        }
        let coords = norming_coords(f.coords(), norm, self.p);
        let norm_bound = lp_norm(&coords, self.dual_exponent());
        Ok(DualFunctional { coords, norm_bound })
    }

    /// F_r(g) for the norming functional of `r`, without materializing it.
    /// Returns 0 when `r` is the zero vector.
    #[inline]
    pub fn norming_value(&self, r: &[f64], g: &[f64]) -> f64 {
        let norm = lp_norm(r, self.p);
        if norm == 0.0 {
            return 0.0;
        }
        let e = self.p - 1.0;
        let mut acc = 0.0;
        if self.p == 2.0 {
            for (ri, gi) in r.iter().zip(g) {
                acc += ri * gi;
            }
            return acc / norm;
        }
        for (ri, gi) in r.iter().zip(g) {
            if *ri != 0.0 {
                acc += ri.signum() * pow_abs(ri.abs() / norm, e) * gi;
            }
        }
        acc
    }

    /// The power-type upper bound γ·u^q on the modulus of smoothness.
    pub fn smoothness_bound(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        self.gamma * u.powf(self.q)
    }

    /// Monte-Carlo lower estimate of ρ(u); see [`EmpiricalModulus`].
    pub fn empirical_modulus(&self, u: f64, n_samples: usize, seed: u64) -> f64 {
        EmpiricalModulus::sample(self, n_samples, seed).eval(u)
    }

    /// Root ξ of ρ(u) = θ·t·u in (0, 2].
    pub fn xi_root(&self, mode: RhoMode, t: f64, theta: f64) -> Result<f64> {
        match mode {
            RhoMode::PowerBound => {
                xi_bisect(|u| self.smoothness_bound(u), t, theta, XI_LOWER_POWER)
            }
            RhoMode::Empirical { n_samples, seed } => {
                let rho = EmpiricalModulus::sample(self, n_samples, seed);
                xi_root_with(|u| rho.eval(u), t, theta)
            }
        }
    }
}

impl fmt::Display for LpSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec())
    }
}

/// Which modulus of smoothness [`LpSpace::xi_root`] inverts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RhoMode {
    PowerBound,
    Empirical { n_samples: usize, seed: u64 },
}

/// A point of ℓ_p^n. Coordinates are always finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Element(Vec<f64>);

impl Element {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(GreedyError::NonFinite { index });
        }
        Ok(Self(coords))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Unit coordinate vector e_i (0-based).
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Element {
        Element(self.0.iter().map(|x| c * x).collect())
    }

    /// `self − other`.
    pub fn sub(&self, other: &Element) -> Result<Element> {
        if self.dim() != other.dim() {
            return Err(GreedyError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Element(
            self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect(),
        ))
    }

    /// `self + c·other`.
    pub fn add_scaled(&self, c: f64, other: &Element) -> Result<Element> {
        if self.dim() != other.dim() {
            return Err(GreedyError::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(Element(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + c * b)
                .collect(),
        ))
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Self(coords)
    }
}

impl TryFrom<Vec<f64>> for Element {
    type Error = GreedyError;

    fn try_from(coords: Vec<f64>) -> Result<Self> {
        Element::new(coords)
    }
}

impl From<Element> for Vec<f64> {
    fn from(e: Element) -> Self {
        e.0
    }
}

/// A bounded linear functional on ℓ_p^n, stored as its dual coordinate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualFunctional {
    coords: Vec<f64>,
    /// ℓ_{p/(p−1)} norm of `coords`, i.e. the operator norm.
    norm_bound: f64,
}

impl DualFunctional {
    /// Wraps dual coordinates, computing the operator norm in `space`.
    pub fn new(space: &LpSpace, coords: Vec<f64>) -> Result<Self> {
        space.check_dim(coords.len())?;
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(GreedyError::NonFinite { index });
        }
        let norm_bound = lp_norm(&coords, space.dual_exponent());
        Ok(Self { coords, norm_bound })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// F(g) as a coordinate dot product.
    pub fn apply(&self, g: &Element) -> Result<f64> {
        if g.dim() != self.dim() {
            return Err(GreedyError::DimensionMismatch {
                expected: self.dim(),
                found: g.dim(),
            });
        }
        Ok(self.apply_slice(g.coords()))
    }

    #[inline]
    pub fn apply_slice(&self, g: &[f64]) -> f64 {
        debug_assert_eq!(g.len(), self.coords.len());
        self.coords.iter().zip(g).map(|(a, b)| a * b).sum()
    }
}

/// Free-function form of [`DualFunctional::apply`].
pub fn apply_functional(f: &DualFunctional, g: &Element) -> Result<f64> {
    f.apply(g)
}

/// (Σ|x_i|^p)^{1/p}, evaluated with max-scaling so tiny and huge vectors
/// neither underflow nor overflow.
#[inline]
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let scale = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let inv = 1.0 / scale;
    if p == 2.0 {
        let s: f64 = x.iter().map(|v| (v * inv) * (v * inv)).sum();
        return scale * s.sqrt();
    }
    let s: f64 = x.iter().map(|v| abs_pow((v * inv).abs(), p)).sum();
    scale * s.powf(1.0 / p)
}

#[inline]
fn abs_pow(a: f64, p: f64) -> f64 {
    if p == 1.5 {
        a * a.sqrt()
    } else if p == 3.0 {
        a * a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else if a == 0.0 {
        0.0
    } else {
        a.powf(p)
    }
}

/// |x|^e for x ≥ 0 with shortcuts for the integer and half-integer
/// exponents used most.
#[inline]
pub(crate) fn pow_abs(x: f64, e: f64) -> f64 {
    if e == 1.0 {
        x
    } else if e == 2.0 {
        x * x
    } else if e == 3.0 {
        x * x * x
    } else if e == 0.0 {
        1.0
    } else if e == 0.5 {
        x.sqrt()
    } else if e == -0.5 {
        1.0 / x.sqrt()
    } else if x == 0.0 {
        if e > 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        x.powf(e)
    }
}

pub(crate) fn norming_coords(f: &[f64], norm: f64, p: f64) -> Vec<f64> {
    let e = p - 1.0;
    f.iter()
        .map(|x| {
            if *x == 0.0 {
                0.0
            } else {
                x.signum() * pow_abs(x.abs() / norm, e)
            }
        })
        .collect()
}

/// Sampled lower estimate of the modulus of smoothness,
/// ρ(u) = sup_{‖x‖=‖y‖=1} (‖x+uy‖ + ‖x−uy‖)/2 − 1.
///
/// The unit pairs are drawn once and reused for every `u`, so the estimate is
/// a maximum of even convex functions of `u` vanishing at 0. Hence ρ̂(u)/u is
/// nondecreasing and root finding on it is well posed. The pair (x, x) is
/// always included, which forces ρ̂(2) ≥ 1.
#[derive(Debug, Clone)]
pub struct EmpiricalModulus {
    space: LpSpace,
    pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

impl EmpiricalModulus {
    pub fn sample(space: &LpSpace, n_samples: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed, rng::stream::MODULUS);
        let n = space.dim();
        let unit = |rng: &mut _| {
            let mut v = gaussian_vec(rng, n);
            let norm = lp_norm(&v, space.p());
            v.iter_mut().for_each(|c| *c /= norm);
            v
        };
        let mut pairs = Vec::with_capacity(n_samples.max(1));
        let x0 = unit(&mut rng);
        pairs.push((x0.clone(), x0));
        for _ in 1..n_samples.max(1) {
            let x = unit(&mut rng);
            let y = unit(&mut rng);
            pairs.push((x, y));
        }
        Self {
            space: *space,
            pairs,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let mut buf_plus = vec![0.0; self.space.dim()];
        let mut buf_minus = vec![0.0; self.space.dim()];
        let mut best = 0.0_f64;
        for (x, y) in &self.pairs {
            for i in 0..x.len() {
                buf_plus[i] = x[i] + u * y[i];
                buf_minus[i] = x[i] - u * y[i];
            }
            let v = 0.5 * (self.space.norm_of(&buf_plus) + self.space.norm_of(&buf_minus)) - 1.0;
            best = best.max(v);
        }
        best
    }
}

/// Below this a sampled modulus is dominated by rounding.
const XI_LOWER: f64 = 1e-12;
/// Floor for the analytic bound, whose roots (θt/γ)^{1/(q−1)} are tiny for
/// q near 1.
const XI_LOWER_POWER: f64 = 1e-300;
const XI_MAX_ITERS: usize = 200;

/// Solves ρ(u) = θ·t·u on (0, 2] by bisection on the nondecreasing map
/// s(u) = ρ(u)/u, geometric while the bracket spans orders of magnitude.
pub fn xi_root_with(rho: impl Fn(f64) -> f64, t: f64, theta: f64) -> Result<f64> {
    xi_bisect(rho, t, theta, XI_LOWER)
}

fn xi_bisect(rho: impl Fn(f64) -> f64, t: f64, theta: f64, lower: f64) -> Result<f64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(GreedyError::InvalidArgument(format!(
            "t = {t} outside (0, 1]"
        )));
    }
    if !(theta > 0.0 && theta <= 0.5) {
        return Err(GreedyError::InvalidArgument(format!(
            "theta = {theta} outside (0, 1/2]"
        )));
    }
    let target = theta * t;
    let s = |u: f64| rho(u) / u;
    let mut lo = lower;
    let mut hi = 2.0;
    if s(lo) >= target {
        return Ok(lo);
    }
    if s(hi) < target {
        // ρ(2) ≥ 1 for a true modulus; only a defective model lands here.
        return Ok(hi);
    }
    for _ in 0..XI_MAX_ITERS {
        // geometric halving until the bracket is within a factor of 2
        let mid = if hi > 2.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if s(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
