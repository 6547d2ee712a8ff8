//! Finite symmetric dictionaries, weak greedy selection, and targets in or
//! near the convex hull A_1(D).
//!
//! Only one representative g_i of each pair ±g_i is stored. Selection always
//! considers both signs, and the chosen atom is reported as a [`SignedIndex`]
//! (+i for g_i, −i for −g_i, 1-based).

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{GreedyError, Result};
use crate::rng::{self, gaussian_vec};
use crate::space::{DualFunctional, Element, LpSpace};

const NORM_SLACK: f64 = 1e-12;
const SELECTION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryKind {
    Canonical,
    RandomGauss,
    TrigGrid,
    Coherent,
    /// Elements supplied by the caller.
    Custom,
}

impl DictionaryKind {
    pub fn tag(&self) -> &'static str {
        match self {
            DictionaryKind::Canonical => "canonical",
            DictionaryKind::RandomGauss => "random_gauss",
            DictionaryKind::TrigGrid => "trig_grid",
            DictionaryKind::Coherent => "coherent",
            DictionaryKind::Custom => "custom",
        }
    }
}

impl FromStr for DictionaryKind {
    type Err = GreedyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "canonical" => Ok(DictionaryKind::Canonical),
            "random_gauss" => Ok(DictionaryKind::RandomGauss),
            "trig_grid" => Ok(DictionaryKind::TrigGrid),
            "coherent" => Ok(DictionaryKind::Coherent),
            other => Err(GreedyError::parse(
                "dictionary.kind",
                format!("unknown kind `{other}`"),
            )),
        }
    }
}

/// `dict:<kind>,N=<int>,seed=<int>`; the `dict:` prefix is optional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionarySpec {
    pub kind: DictionaryKind,
    pub size: usize,
    pub seed: u64,
}

impl DictionarySpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let body = spec.trim();
        let body = body.strip_prefix("dict:").unwrap_or(body);
        let mut parts = body.split(',');
        let kind: DictionaryKind = parts
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| GreedyError::parse("dictionary", "missing kind"))?
            .parse()?;
        let mut size = None;
        let mut seed = 0;
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                GreedyError::parse("dictionary", format!("expected key=value, got `{part}`"))
            })?;
            match key.trim() {
                "N" => {
                    size = Some(
                        value
                            .trim()
                            .parse()
                            .map_err(|e| GreedyError::parse("dictionary.N", format!("{e}")))?,
                    )
                }
                "seed" => {
                    seed = value
                        .trim()
                        .parse()
                        .map_err(|e| GreedyError::parse("dictionary.seed", format!("{e}")))?
                }
                other => {
                    return Err(GreedyError::parse(
                        "dictionary",
                        format!("unknown key `{other}`"),
                    ))
                }
            }
        }
        let size = size.ok_or_else(|| GreedyError::parse("dictionary.N", "missing"))?;
        Ok(Self { kind, size, seed })
    }
}

impl fmt::Display for DictionarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "dict:{},N={},seed={}",
            self.kind.tag(),
            self.size,
            self.seed
        )
    }
}

/// Signed 1-based atom reference: +i is g_i, −i is −g_i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedIndex(i64);

impl SignedIndex {
    /// `index` is 0-based.
    pub fn new(index: usize, negative: bool) -> Self {
        let i = index as i64 + 1;
        SignedIndex(if negative { -i } else { i })
    }

    pub fn from_raw(raw: i64) -> Result<Self> {
        if raw == 0 {
            return Err(GreedyError::InvalidArgument(
                "signed index 0 is invalid".into(),
            ));
        }
        Ok(SignedIndex(raw))
    }

    pub fn raw(&self) -> i64 {
        self.0
    }

    /// 0-based storage position.
    pub fn position(&self) -> usize {
        (self.0.unsigned_abs() - 1) as usize
    }

    pub fn sign(&self) -> f64 {
        if self.0 < 0 {
            -1.0
        } else {
            1.0
        }
    }
}

impl fmt::Display for SignedIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Maximizer of F over ±D; ties go to the smallest index, positive sign first.
    #[default]
    ExactArgmax,
    /// First atom in scan order (+1, −1, +2, −2, …) clearing t·‖F‖_D.
    ThresholdFirst,
}

impl FromStr for SelectionRule {
    type Err = GreedyError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact_argmax" | "argmax" => Ok(SelectionRule::ExactArgmax),
            "threshold_first" | "threshold" => Ok(SelectionRule::ThresholdFirst),
            other => Err(GreedyError::parse(
                "selection",
                format!("unknown rule `{other}`"),
            )),
        }
    }
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionRule::ExactArgmax => "exact_argmax",
            SelectionRule::ThresholdFirst => "threshold_first",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: SignedIndex,
    /// F(φ) for the signed atom φ.
    pub value: f64,
    /// ‖F‖_D at selection time.
    pub dual_norm: f64,
}

#[derive(Debug, Clone)]
pub struct Dictionary {
    space: LpSpace,
    kind: DictionaryKind,
    seed: u64,
    len: usize,
    /// Row-major, one atom per row.
    data: Vec<f64>,
}

impl Dictionary {
    pub fn build(space: &LpSpace, kind: DictionaryKind, size: usize, seed: u64) -> Result<Self> {
        let n = space.dim();
        if size == 0 {
            return Err(GreedyError::EmptyDictionary);
        }
        if size < n {
            return Err(GreedyError::DictionaryDoesNotSpan { rank: size, n });
        }
        let rows: Vec<Vec<f64>> = match kind {
            DictionaryKind::Canonical => {
                if size != n {
                    return Err(GreedyError::InvalidArgument(format!(
                        "canonical dictionary has exactly n = {n} atoms, N = {size} requested"
                    )));
                }
                (0..n).map(|i| Element::basis(n, i).into_coords()).collect()
            }
            DictionaryKind::RandomGauss => {
                let mut rng = rng::seeded(seed, rng::stream::DICTIONARY);
                (0..size).map(|_| gaussian_vec(&mut rng, n)).collect()
            }
            DictionaryKind::TrigGrid => trig_grid(n, size),
            DictionaryKind::Coherent => coherent_chain(n, size, seed),
            DictionaryKind::Custom => {
                return Err(GreedyError::InvalidArgument(
                    "custom dictionaries are built with Dictionary::from_elements".into(),
                ))
            }
        };
        let mut data = Vec::with_capacity(size * n);
        for mut row in rows {
            let norm = space.norm_of(&row);
            row.iter_mut().for_each(|c| *c /= norm);
            data.extend_from_slice(&row);
        }
        let dict = Self {
            space: *space,
            kind,
            seed,
            len: size,
            data,
        };
        let rank = dict.rank();
        if rank < n {
            return Err(GreedyError::DictionaryDoesNotSpan { rank, n });
        }
        Ok(dict)
    }

    pub fn from_spec(space: &LpSpace, spec: &DictionarySpec) -> Result<Self> {
        Self::build(space, spec.kind, spec.size, spec.seed)
    }

    /// Wraps caller-supplied atoms. Norms must be ≤ 1; spanning is not required.
    pub fn from_elements(space: &LpSpace, elements: &[Element]) -> Result<Self> {
        if elements.is_empty() {
            return Err(GreedyError::EmptyDictionary);
        }
        let mut data = Vec::with_capacity(elements.len() * space.dim());
        for (index, e) in elements.iter().enumerate() {
            let norm = space.norm(e)?;
            if norm > 1.0 + NORM_SLACK {
                return Err(GreedyError::ElementTooLarge { index, norm });
            }
            data.extend_from_slice(e.coords());
        }
        Ok(Self {
            space: *space,
            kind: DictionaryKind::Custom,
            seed: 0,
            len: elements.len(),
            data,
        })
    }

    pub fn space(&self) -> &LpSpace {
        &self.space
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn spec(&self) -> DictionarySpec {
        DictionarySpec {
            kind: self.kind,
            size: self.len,
            seed: self.seed,
        }
    }

    /// Stored representative g_i (0-based).
    pub fn atom(&self, i: usize) -> &[f64] {
        let n = self.space.dim();
        &self.data[i * n..(i + 1) * n]
    }

    /// The signed atom ±g_i as an owned element.
    pub fn element(&self, index: SignedIndex) -> Element {
        let s = index.sign();
        Element::from_vec_unchecked(self.atom(index.position()).iter().map(|c| s * c).collect())
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.space.dim())
    }

    fn check_functional(&self, f: &DualFunctional) -> Result<()> {
        if self.len == 0 {
            return Err(GreedyError::EmptyDictionary);
        }
        if f.dim() != self.space.dim() {
            return Err(GreedyError::DimensionMismatch {
                expected: self.space.dim(),
                found: f.dim(),
            });
        }
        Ok(())
    }

    /// ‖F‖_D = sup_{g∈D} F(g) = max_i |F(g_i)| over the symmetrized dictionary.
    pub fn dual_norm(&self, f: &DualFunctional) -> Result<f64> {
        self.check_functional(f)?;
        Ok(self
            .atoms()
            .map(|g| f.apply_slice(g).abs())
            .fold(0.0, f64::max))
    }

    /// Weak greedy selection: returns φ = ±g_i with F(φ) ≥ t·‖F‖_D.
    pub fn select(&self, f: &DualFunctional, t: f64, rule: SelectionRule) -> Result<Selection> {
        self.check_functional(f)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(GreedyError::InvalidArgument(format!(
                "t = {t} outside [0, 1]"
            )));
        }
        let values: Vec<f64> = self.atoms().map(|g| f.apply_slice(g)).collect();
        let (best_pos, dual_norm) =
            values
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
                    if v.abs() > bv {
                        (i, v.abs())
                    } else {
                        (bi, bv)
                    }
                });
        let pick = |pos: usize| {
            let v = values[pos];
            // the positive representative wins ties, including v = 0
            Selection {
                index: SignedIndex::new(pos, v < 0.0),
                value: v.abs(),
                dual_norm,
            }
        };
        match rule {
            SelectionRule::ExactArgmax => Ok(pick(best_pos)),
            SelectionRule::ThresholdFirst => {
                let threshold = t * dual_norm - SELECTION_SLACK;
                let pos = values
                    .iter()
                    .position(|v| v.abs() >= threshold)
                    .unwrap_or(best_pos);
                Ok(pick(pos))
            }
        }
    }

    /// Numerical rank of the atom matrix (Gaussian elimination, partial pivoting).
    pub fn rank(&self) -> usize {
        matrix_rank(&self.data, self.len, self.space.dim())
    }
}

/// Free-function form of [`Dictionary::dual_norm`].
pub fn dict_dual_norm(f: &DualFunctional, dict: &Dictionary) -> Result<f64> {
    dict.dual_norm(f)
}

/// Free-function form of [`Dictionary::select`].
pub fn greedy_select(
    f: &DualFunctional,
    dict: &Dictionary,
    t: f64,
    rule: SelectionRule,
) -> Result<Selection> {
    dict.select(f, t, rule)
}

fn matrix_rank(data: &[f64], rows: usize, cols: usize) -> usize {
    let mut a = data.to_vec();
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0;
    }
    let tol = scale * 1e-10 * (rows.max(cols) as f64);
    let mut rank = 0;
    let mut row = 0;
    for col in 0..cols {
        if row == rows {
            break;
        }
        let (piv, pv) = (row..rows).map(|r| (r, a[r * cols + col].abs())).fold(
            (row, -1.0),
            |(br, bv), (r, v)| if v > bv { (r, v) } else { (br, bv) },
        );
        if pv <= tol {
            continue;
        }
        if piv != row {
            for c in 0..cols {
                a.swap(piv * cols + c, row * cols + c);
            }
        }
        let d = a[row * cols + col];
        for r in row + 1..rows {
            let factor = a[r * cols + col] / d;
            if factor != 0.0 {
                for c in col..cols {
                    a[r * cols + c] -= factor * a[row * cols + c];
                }
            }
        }
        row += 1;
        rank += 1;
    }
    rank
}

/// Cosines on an oversampled frequency grid. Frequencies j·n/N for
/// j < N cover [0, n), which always contains the n integer frequencies of
/// the DCT-II basis when N is a multiple of n; the rank check guards the rest.
fn trig_grid(n: usize, size: usize) -> Vec<Vec<f64>> {
    (0..size)
        .map(|j| {
            let freq = j as f64 * n as f64 / size as f64;
            (0..n)
                .map(|i| (std::f64::consts::PI * (i as f64 + 0.5) * freq / n as f64).cos())
                .collect()
        })
        .collect()
}

/// Cosine between consecutive atoms of the coherent chain (Euclidean).
pub const COHERENT_STEP_COSINE: f64 = 0.95;

/// A random walk on the Euclidean sphere with fixed turning angle, so every
/// adjacent pair has Euclidean cosine [`COHERENT_STEP_COSINE`].
fn coherent_chain(n: usize, size: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::seeded(seed, rng::stream::DICTIONARY);
    let unit2 = |v: &mut Vec<f64>| {
        let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= s);
    };
    let mut current = gaussian_vec(&mut rng, n);
    unit2(&mut current);
    let c = COHERENT_STEP_COSINE;
    let s = (1.0 - c * c).sqrt();
    let mut out = Vec::with_capacity(size);
    out.push(current.clone());
    while out.len() < size {
        let mut w = gaussian_vec(&mut rng, n);
        let dot: f64 = w.iter().zip(&current).map(|(a, b)| a * b).sum();
        w.iter_mut().zip(&current).for_each(|(a, b)| *a -= dot * b);
        unit2(&mut w);
        let mut next: Vec<f64> = current.iter().zip(&w).map(|(a, b)| c * a + s * b).collect();
        unit2(&mut next);
        out.push(next.clone());
        current = next;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Convex combination of k signed atoms.
    A1Sparse,
    /// Convex combination of every atom.
    A1Dense,
    /// A sparse A_1 element plus noise of norm at most eps.
    GeneralPlusNoise,
}

/// Target generator parameters.
///
/// Specifier forms: `target:a1,k=<int>,seed=<int>`,
/// `target:a1_dense,seed=<int>`, `target:noisy,k=<int>,eps=<real>,seed=<int>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub mode: TargetMode,
    pub k: usize,
    pub eps: f64,
    pub seed: u64,
    /// Scale A(ε) with f^ε/A(ε) ∈ A_1(D); 1 for every generated target.
    pub a_eps: f64,
}

impl TargetSpec {
    pub fn a1(k: usize, seed: u64) -> Self {
        Self {
            mode: TargetMode::A1Sparse,
            k,
            eps: 0.0,
            seed,
            a_eps: 1.0,
        }
    }

    pub fn noisy(k: usize, eps: f64, seed: u64) -> Self {
        Self {
            mode: TargetMode::GeneralPlusNoise,
            k,
            eps,
            seed,
            a_eps: 1.0,
        }
    }

    pub fn parse(spec: &str) -> Result<Self> {
        let body = spec.trim();
        let body = body.strip_prefix("target:").unwrap_or(body);
        let mut parts = body.split(',');
        let mode = match parts.next().map(str::trim) {
            Some("a1") => TargetMode::A1Sparse,
            Some("a1_dense") => TargetMode::A1Dense,
            Some("noisy") => TargetMode::GeneralPlusNoise,
            Some(other) => {
                return Err(GreedyError::parse(
                    "target",
                    format!("unknown mode `{other}`"),
                ))
            }
            None => return Err(GreedyError::parse("target", "missing mode")),
        };
        let mut k = None;
        let mut eps = None;
        let mut seed = 0;
        for part in parts {
            let (key, value) = part.split_once('=').ok_or_else(|| {
                GreedyError::parse("target", format!("expected key=value, got `{part}`"))
            })?;
            let value = value.trim();
            match key.trim() {
                "k" => {
                    k = Some(
                        value
                            .parse()
                            .map_err(|e| GreedyError::parse("target.k", format!("{e}")))?,
                    )
                }
                "eps" => {
                    eps = Some(
                        value
                            .parse::<f64>()
                            .map_err(|e| GreedyError::parse("target.eps", format!("{e}")))?,
                    )
                }
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|e| GreedyError::parse("target.seed", format!("{e}")))?
                }
                other => {
                    return Err(GreedyError::parse(
                        "target",
                        format!("unknown key `{other}`"),
                    ))
                }
            }
        }
        let spec = match mode {
            TargetMode::A1Sparse => TargetSpec::a1(
                k.ok_or_else(|| GreedyError::parse("target.k", "missing"))?,
                seed,
            ),
            TargetMode::A1Dense => TargetSpec {
                mode,
                k: 0,
                eps: 0.0,
                seed,
                a_eps: 1.0,
            },
            TargetMode::GeneralPlusNoise => TargetSpec::noisy(
                k.ok_or_else(|| GreedyError::parse("target.k", "missing"))?,
                eps.ok_or_else(|| GreedyError::parse("target.eps", "missing"))?,
                seed,
            ),
        };
        if spec.mode != TargetMode::A1Dense && spec.k == 0 {
            return Err(GreedyError::parse("target.k", "must be positive"));
        }
        if !(spec.eps >= 0.0 && spec.eps.is_finite()) {
            return Err(GreedyError::parse(
                "target.eps",
                "must be a finite nonnegative number",
            ));
        }
        Ok(spec)
    }
}

impl fmt::Display for TargetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            TargetMode::A1Sparse => write!(f, "target:a1,k={},seed={}", self.k, self.seed),
            TargetMode::A1Dense => write!(f, "target:a1_dense,seed={}", self.seed),
            TargetMode::GeneralPlusNoise => write!(
                f,
                "target:noisy,k={},eps={},seed={}",
                self.k, self.eps, self.seed
            ),
        }
    }
}

/// Convex-combination witness for membership in A_1(D).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub atoms: Vec<SignedIndex>,
    pub weights: Vec<f64>,
}

impl Certificate {
    /// Σ c_i φ_i, accumulated in certificate order.
    pub fn reconstruct(&self, dict: &Dictionary) -> Element {
        let n = dict.space().dim();
        let mut out = vec![0.0; n];
        for (idx, w) in self.atoms.iter().zip(&self.weights) {
            let s = idx.sign() * w;
            for (o, g) in out.iter_mut().zip(dict.atom(idx.position())) {
                *o += s * g;
            }
        }
        Element::from_vec_unchecked(out)
    }
}

/// A generated target f together with what is known about its distance
/// to A_1(D).
#[derive(Debug, Clone)]
pub struct Target {
    pub element: Element,
    /// The clean part f^ε (equal to `element` for A_1 targets).
    pub clean: Element,
    pub certificate: Option<Certificate>,
    pub spec: Option<TargetSpec>,
    /// ε with ‖f − f^ε‖ ≤ ε.
    pub eps: f64,
    /// A(ε) with f^ε/A(ε) ∈ A_1(D).
    pub a_eps: f64,
    /// Measured ‖f − f^ε‖.
    pub noise_norm: f64,
}

impl Target {
    /// A target with no membership information.
    pub fn uncertified(element: Element) -> Self {
        Self {
            clean: element.clone(),
            element,
            certificate: None,
            spec: None,
            eps: 0.0,
            a_eps: 1.0,
            noise_norm: 0.0,
        }
    }

    pub fn generate(dict: &Dictionary, spec: &TargetSpec) -> Result<Self> {
        let (clean, certificate) = match spec.mode {
            TargetMode::A1Sparse | TargetMode::A1Dense => sample_a1_target(dict, spec)?,
            TargetMode::GeneralPlusNoise => {
                let sparse = TargetSpec {
                    mode: TargetMode::A1Sparse,
                    ..*spec
                };
                sample_a1_target(dict, &sparse)?
            }
        };
        let element = if spec.mode == TargetMode::GeneralPlusNoise {
            perturb_target(dict.space(), &clean, spec.eps, spec.seed)?
        } else {
            clean.clone()
        };
        let noise_norm = dict.space().norm(&element.sub(&clean)?)?;
        Ok(Self {
            element,
            clean,
            certificate: Some(certificate),
            spec: Some(*spec),
            eps: spec.eps,
            a_eps: spec.a_eps,
            noise_norm,
        })
    }

    /// True when f itself lies in A_1(D) (certificate and ε = 0).
    pub fn in_a1(&self) -> bool {
        self.certificate.is_some() && self.eps == 0.0 && self.a_eps <= 1.0
    }

    pub fn has_certificate(&self) -> bool {
        self.certificate.is_some()
    }
}

/// Draws f = Σ c_i φ_i with c_i > 0, Σ c_i = 1, over k distinct signed atoms
/// (all atoms for the dense mode).
pub fn sample_a1_target(dict: &Dictionary, spec: &TargetSpec) -> Result<(Element, Certificate)> {
    let k = match spec.mode {
        TargetMode::A1Dense => dict.len(),
        _ => spec.k,
    };
    if k == 0 || k > dict.len() {
        return Err(GreedyError::InvalidArgument(format!(
            "sparsity k = {k} must be in 1..={}",
            dict.len()
        )));
    }
    let mut rng = rng::seeded(spec.seed, rng::stream::TARGET);
    let positions = sample(&mut rng, dict.len(), k).into_vec();
    let atoms: Vec<SignedIndex> = positions
        .into_iter()
        .map(|pos| SignedIndex::new(pos, rng.random_bool(0.5)))
        .collect();
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let certificate = Certificate { atoms, weights };
    Ok((certificate.reconstruct(dict), certificate))
}

/// Returns f with ‖f − f_eps‖ ≤ eps: a random direction scaled to a
/// uniformly drawn magnitude in [0, eps].
pub fn perturb_target(space: &LpSpace, f_eps: &Element, eps: f64, seed: u64) -> Result<Element> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(GreedyError::InvalidArgument(format!(
            "eps = {eps} must be >= 0"
        )));
    }
    if eps == 0.0 {
        return Ok(f_eps.clone());
    }
    let n = space.dim();
    if f_eps.dim() != n {
        return Err(GreedyError::DimensionMismatch {
            expected: n,
            found: f_eps.dim(),
        });
    }
    let mut rng = rng::seeded(seed, rng::stream::NOISE);
    let dir = gaussian_vec(&mut rng, n);
    let magnitude = eps * rng.random::<f64>();
    let norm = space.norm_of(&dir);
    let mut noise: Vec<f64> = dir.iter().map(|d| d * magnitude / norm).collect();
    // rounding can push the measured distance a few ulps past eps
    for _ in 0..4 {
        let f: Vec<f64> = f_eps
            .coords()
            .iter()
            .zip(&noise)
            .map(|(a, b)| a + b)
            .collect();
        let diff: Vec<f64> = f.iter().zip(f_eps.coords()).map(|(a, b)| a - b).collect();
        if space.norm_of(&diff) <= eps {
            return Element::new(f);
        }
        noise.iter_mut().for_each(|x| *x *= 1.0 - 1e-12);
    }
    Element::new(
        f_eps
            .coords()
            .iter()
            .zip(&noise)
            .map(|(a, b)| a + b)
            .collect(),
    )
}
