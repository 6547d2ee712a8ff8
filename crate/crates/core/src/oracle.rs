//! Reference computations that share no code with the solvers they check.

use nalgebra::{DMatrix, DVector};

use crate::dictionary::Dictionary;

/// ‖f − Φc‖₂ for the least-squares c, from the normal equations
/// ΦᵀΦc = Φᵀf (SVD solve when ΦᵀΦ is not positive definite).
pub fn least_squares_residual(atoms: &[Vec<f64>], f: &[f64]) -> f64 {
    let n = f.len();
    if atoms.is_empty() {
        return f.iter().map(|x| x * x).sum::<f64>().sqrt();
    }
    let phi = DMatrix::from_fn(n, atoms.len(), |i, j| atoms[j][i]);
    let fv = DVector::from_column_slice(f);
    let gram = phi.transpose() * &phi;
    let rhs = phi.transpose() * &fv;
    let coeffs = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .expect("svd solve with both factors"),
    };
    (fv - phi * coeffs).norm()
}

/// Orthogonal matching pursuit in ℓ_2: picks argmax |⟨r, g⟩| (smallest
/// index on ties, positive sign first) and re-projects by QR. Returns the
/// signed 1-based picks and residual norms.
pub fn orthogonal_matching_pursuit(dict: &Dictionary, f: &[f64], steps: usize) -> Vec<(i64, f64)> {
    let n = f.len();
    let mut residual = f.to_vec();
    let mut chosen: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mut best = (0usize, f64::NEG_INFINITY, 1.0);
        for (i, g) in dict.atoms().enumerate() {
            let ip: f64 = residual.iter().zip(g).map(|(a, b)| a * b).sum();
            for sign in [1.0, -1.0] {
                if sign * ip > best.1 {
                    best = (i, sign * ip, sign);
                }
            }
        }
        let (i, _, sign) = best;
        if !chosen.contains(&i) {
            chosen.push(i);
        }
        let phi = DMatrix::from_fn(n, chosen.len(), |r, c| dict.atom(chosen[c])[r]);
        let qr = phi.qr();
        let q = qr.q();
        let fv = DVector::from_column_slice(f);
        let proj = &q * (q.transpose() * &fv);
        residual = (fv - proj).iter().copied().collect();
        let raw = (i as i64 + 1) * if sign > 0.0 { 1 } else { -1 };
        out.push((raw, residual.iter().map(|x| x * x).sum::<f64>().sqrt()));
    }
    out
}

/// Rank of the atom matrix from its singular values.
pub fn svd_rank(dict: &Dictionary) -> usize {
    let n = dict.space().dim();
    let m = DMatrix::from_fn(dict.len(), n, |i, j| dict.atom(i)[j]);
    let svd = m.svd(false, false);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = smax * 1e-10 * dict.len().max(n) as f64;
    svd.singular_values.iter().filter(|s| **s > tol).count()
}

/// Minimum of `objective` over `points` equally spaced samples of [lo, hi].
pub fn grid_scan_min(
    objective: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> (f64, f64) {
    let h = (hi - lo) / (points.max(2) - 1) as f64;
    (0..points.max(2))
        .map(|k| {
            let x = lo + k as f64 * h;
            (x, objective(x))
        })
        .fold((lo, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
}

/// Root of γu^q = θtu: (θt/γ)^{1/(q−1)}.
pub fn xi_closed_form(theta: f64, t: f64, gamma: f64, q: f64) -> f64 {
    (theta * t / gamma).powf(1.0 / (q - 1.0))
}
