//! Oracle and property checks runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algorithms::{run_greedy, AlgorithmId, RunOptions};
use crate::diagnostics::{applicable_bounds, full_audit, AuditTolerances, BoundKind, BoundSpec};
use crate::dictionary::{Dictionary, DictionaryKind, SignedIndex, Target, TargetSpec};
use crate::harness::{csv_string, ExperimentConfig};
use crate::oracle;
use crate::solvers::{minimize_residual_1d, SolverConfig};
use crate::space::{Element, EmpiricalModulus, LpSpace, RhoMode};

#[derive(Debug, Clone, PartialEq)]
pub struct SelfTestCase {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = std::result::Result<String, String>;

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub const CASES: [&str; 12] = [
    "xi_root_closed_form",
    "empirical_modulus_below_bound",
    "xi_root_empirical_vs_grid",
    "line_search_vs_grid",
    "hilbert_wcga_normal_equations",
    "hilbert_wcga_equals_omp",
    "dual_norm_dominates_a1",
    "dictionary_rank_vs_svd",
    "exact_recovery_canonical",
    "csv_determinism",
    "bound_constants",
    "audit_green_path",
];

/// Runs every case; a case that errors counts as failed.
pub fn run_selftest() -> Vec<SelfTestCase> {
    CASES
        .iter()
        .map(|name| {
            let outcome = run_case(name);
            SelfTestCase {
                name,
                passed: outcome.is_ok(),
                detail: outcome.unwrap_or_else(|e| e),
            }
        })
        .collect()
}

pub fn run_case(name: &str) -> Outcome {
    match name {
        "xi_root_closed_form" => xi_root_closed_form(),
        "empirical_modulus_below_bound" => empirical_modulus_below_bound(),
        "xi_root_empirical_vs_grid" => xi_root_empirical_vs_grid(),
        "line_search_vs_grid" => line_search_vs_grid(),
        "hilbert_wcga_normal_equations" => hilbert_wcga_normal_equations(),
        "hilbert_wcga_equals_omp" => hilbert_wcga_equals_omp(),
        "dual_norm_dominates_a1" => dual_norm_dominates_a1(),
        "dictionary_rank_vs_svd" => dictionary_rank_vs_svd(),
        "exact_recovery_canonical" => exact_recovery_canonical(),
        "csv_determinism" => csv_determinism(),
        "bound_constants" => bound_constants(),
        "audit_green_path" => audit_green_path(),
        other => Err(format!("unknown case `{other}`")),
    }
}

fn xi_root_closed_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    let mut checked = 0;
    while checked < 100 {
        let q = rng.random_range(1.1..=2.0);
        let gamma = rng.random_range(0.25..=2.0);
        let theta = rng.random_range(0.05..=0.5);
        let t = rng.random_range(0.1..=1.0);
        let expected = oracle::xi_closed_form(theta, t, gamma, q);
        if !(1e-9..=2.0).contains(&expected) {
            continue;
        }
        let space = LpSpace::with_smoothness(2.0, 2, q, gamma).map_err(fail)?;
        let got = space.xi_root(RhoMode::PowerBound, t, theta).map_err(fail)?;
        worst = worst.max((got - expected).abs());
        checked += 1;
    }
    if worst <= 1e-10 {
        Ok(format!("100 tuples, max error {worst:.2e}"))
    } else {
        Err(format!("max error {worst:.2e} > 1e-10"))
    }
}

fn empirical_modulus_below_bound() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for p in [1.5, 2.0, 3.0, 4.0] {
        let space = LpSpace::new(p, 8).map_err(fail)?;
        let rho = EmpiricalModulus::sample(&space, 256, 3);
        for k in 1..=200 {
            let u = 0.01 * k as f64;
            let excess = rho.eval(u) - space.smoothness_bound(u);
            worst = worst.max(excess);
            if excess > 1e-9 {
                return Err(format!(
                    "p = {p}, u = {u}: empirical exceeds gamma u^q by {excess:.2e}"
                ));
            }
        }
    }
    Ok(format!("largest excess {worst:.2e}"))
}

fn xi_root_empirical_vs_grid() -> Outcome {
    let space = LpSpace::new(3.0, 6).map_err(fail)?;
    let (n_samples, seed, t, theta) = (64, 5, 0.7, 0.25);
    let rho = EmpiricalModulus::sample(&space, n_samples, seed);
    let root = space
        .xi_root(RhoMode::Empirical { n_samples, seed }, t, theta)
        .map_err(fail)?;
    // s(u) = ρ(u)/u is nondecreasing: the root is the first crossing
    let crossing = |lo: f64, hi: f64, points: usize| {
        let h = (hi - lo) / points as f64;
        (1..=points)
            .map(|k| lo + k as f64 * h)
            .find(|u| rho.eval(*u) / u >= theta * t)
            .map(|u| (u - h, u))
    };
    let (a, b) = crossing(0.0, 2.0, 1000).ok_or("no crossing on (0, 2]")?;
    let (a, b) = crossing(a, b, 1000).ok_or("no crossing in refined cell")?;
    let grid_root = 0.5 * (a + b);
    if (root - grid_root).abs() <= 1e-6 {
        Ok(format!("bisection {root:.9}, grid {grid_root:.9}"))
    } else {
        Err(format!("bisection {root} vs grid {grid_root}"))
    }
}

fn line_search_vs_grid() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = SolverConfig::default();
    let mut worst = f64::NEG_INFINITY;
    for k in 0..20 {
        let p = [1.5, 2.0, 3.0, 4.0][k % 4];
        let space = LpSpace::new(p, 6).map_err(fail)?;
        let a: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = minimize_residual_1d(&space, &a, &b, None, None, &cfg).map_err(fail)?;
        let reach = 3.0 * space.norm_of(&a) / space.norm_of(&b);
        let objective = |lam: f64| {
            let r: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - lam * y).collect();
            space.norm_of(&r)
        };
        let (_, grid) = oracle::grid_scan_min(objective, -reach, reach, 100_001);
        worst = worst.max(got.value - grid);
        if got.value > grid + 1e-8 {
            return Err(format!(
                "objective {k}: search {} vs grid {grid}",
                got.value
            ));
        }
    }
    Ok(format!("20 objectives, worst excess over grid {worst:.2e}"))
}

struct HilbertRun {
    dict: Dictionary,
    target: Vec<f64>,
    report: crate::algorithms::RunReport,
}

fn hilbert_runs(seeds: u64, m: usize) -> std::result::Result<Vec<HilbertRun>, String> {
    let space = LpSpace::new(2.0, 32).map_err(fail)?;
    let mut out = Vec::new();
    for seed in 0..seeds {
        let dict =
            Dictionary::build(&space, DictionaryKind::RandomGauss, 96, 100 + seed).map_err(fail)?;
        let spec = TargetSpec::parse(&format!("target:a1_dense,seed={seed}")).map_err(fail)?;
        let target = Target::generate(&dict, &spec).map_err(fail)?;
        let opts = RunOptions {
            max_m: m,
            ..RunOptions::default()
        };
        let report = run_greedy(AlgorithmId::Wcga, &target, &dict, &opts).map_err(fail)?;
        out.push(HilbertRun {
            target: target.element.coords().to_vec(),
            dict,
            report,
        });
    }
    Ok(out)
}

fn hilbert_wcga_normal_equations() -> Outcome {
    let mut worst = 0.0_f64;
    for run in hilbert_runs(10, 30)? {
        let mut atoms = Vec::new();
        for r in &run.report.records {
            let idx = SignedIndex::from_raw(r.selected).map_err(fail)?;
            atoms.push(run.dict.element(idx).into_coords());
            let reference = oracle::least_squares_residual(&atoms, &run.target);
            let rel = (r.residual_norm - reference).abs() / reference;
            worst = worst.max(rel);
            if !(rel <= 1e-8) {
                return Err(format!(
                    "m = {}: wcga {} vs normal equations {reference}",
                    r.m, r.residual_norm
                ));
            }
        }
    }
    Ok(format!(
        "10 seeds x 30 steps, max relative error {worst:.2e}"
    ))
}

fn hilbert_wcga_equals_omp() -> Outcome {
    for run in hilbert_runs(5, 20)? {
        let omp = oracle::orthogonal_matching_pursuit(&run.dict, &run.target, 20);
        for (r, (pick, norm)) in run.report.records.iter().zip(&omp) {
            if r.selected != *pick || (r.residual_norm - norm).abs() > 1e-10 {
                return Err(format!(
                    "m = {}: wcga picked {} ({}), omp picked {pick} ({norm})",
                    r.m, r.selected, r.residual_norm
                ));
            }
        }
    }
    Ok("5 seeds x 20 steps agree".into())
}

fn dual_norm_dominates_a1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for p in [1.5, 2.0, 3.0, 4.0] {
        let space = LpSpace::new(p, 10).map_err(fail)?;
        let dict = Dictionary::build(&space, DictionaryKind::RandomGauss, 40, 7).map_err(fail)?;
        for trial in 0..50 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = space
                .norming_functional(&Element::new(x).map_err(fail)?)
                .map_err(fail)?;
            let k = rng.random_range(1..=20);
            let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let mut phi = vec![0.0; 10];
            for w in &weights {
                let i = rng.random_range(0..dict.len());
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                for (o, g) in phi.iter_mut().zip(dict.atom(i)) {
                    *o += sign * w / total * g;
                }
            }
            let value = f.apply_slice(&phi);
            let dn = dict.dual_norm(&f).map_err(fail)?;
            if value > dn + 1e-10 {
                return Err(format!("p = {p}, trial {trial}: F(phi) = {value} > {dn}"));
            }
        }
    }
    Ok("200 convex combinations".into())
}

fn dictionary_rank_vs_svd() -> Outcome {
    let space = LpSpace::new(2.0, 12).map_err(fail)?;
    let kinds = [
        (DictionaryKind::Canonical, 12),
        (DictionaryKind::RandomGauss, 30),
        (DictionaryKind::TrigGrid, 24),
        (DictionaryKind::Coherent, 40),
    ];
    let mut detail = Vec::new();
    for (kind, size) in kinds {
        let dict = Dictionary::build(&space, kind, size, 3).map_err(fail)?;
        let (ge, svd) = (dict.rank(), oracle::svd_rank(&dict));
        if ge != svd {
            return Err(format!(
                "{}: elimination rank {ge}, svd rank {svd}",
                kind.tag()
            ));
        }
        detail.push(format!("{}={ge}", kind.tag()));
    }
    Ok(detail.join(" "))
}

fn exact_recovery_canonical() -> Outcome {
    let space = LpSpace::new(2.0, 32).map_err(fail)?;
    let dict = Dictionary::build(&space, DictionaryKind::Canonical, 32, 0).map_err(fail)?;
    for k in [1usize, 4, 8] {
        for seed in 0..20 {
            let target = Target::generate(&dict, &TargetSpec::a1(k, seed)).map_err(fail)?;
            let opts = RunOptions {
                max_m: 32,
                ..RunOptions::default()
            };
            let report = run_greedy(AlgorithmId::Wcga, &target, &dict, &opts).map_err(fail)?;
            let norms = report.residual_norms();
            let ok = norms.len() == k
                && norms[k - 1] <= 1e-8
                && norms[..k - 1].iter().all(|v| *v > 1e-8);
            if !ok {
                return Err(format!("k = {k}, seed {seed}: residuals {norms:?}"));
            }
        }
    }
    Ok("k in {1, 4, 8}, 20 seeds each".into())
}

fn csv_determinism() -> Outcome {
    let mut config = ExperimentConfig::new(
        "lp:p=3,n=16",
        "random_gauss,N=48,seed=7",
        "a1,k=8,seed=3",
        AlgorithmId::Awgafr,
    );
    config.errors = Some("err:delta=const:0.01,eta=const:0.01".into());
    config.max_m = 20;
    let instance = config.instances().map_err(fail)?.remove(0);
    let a = csv_string(&instance.run().map_err(fail)?).map_err(fail)?;
    let b = csv_string(&instance.run().map_err(fail)?).map_err(fail)?;
    if a == b {
        Ok(format!("{} bytes identical", a.len()))
    } else {
        Err("repeated runs produced different CSV".into())
    }
}

fn bound_constants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..100 {
        let q: f64 = rng.random_range(1.05..=2.0);
        let gamma: f64 = rng.random_range(0.1..=3.0);
        let t: f64 = rng.random_range(0.05..=1.0);
        let p = q / (q - 1.0);
        let spec = BoundSpec::new(BoundKind::Cor52, q, gamma)
            .map_err(fail)?
            .with_t(t);
        let checks = [
            (spec.c52(), 4.0 * (2.0 * gamma).powf(1.0 / q)),
            (spec.c21(), 16.0 * gamma.powf(1.0 / q) / t.powf(1.0 / p)),
            (
                spec.c72(),
                4.0 * q * (2.0 * gamma).powf(q) * (2.0 / (q - 1.0)).powf((q - 1.0) / q),
            ),
        ];
        for (got, want) in checks {
            if (got - want).abs() > 1e-12 * want {
                return Err(format!("q = {q}, gamma = {gamma}: {got} vs {want}"));
            }
        }
    }
    let hilbert = BoundSpec::new(BoundKind::Thm72, 2.0, 0.5).map_err(fail)?;
    if (hilbert.c72() - 8.0 * 2f64.sqrt()).abs() > 1e-12 {
        return Err("thm72 constant at q = 2 is not 8 sqrt 2".into());
    }
    Ok("100 random (q, gamma, t)".into())
}

fn audit_green_path() -> Outcome {
    let space = LpSpace::new(3.0, 16).map_err(fail)?;
    let dict = Dictionary::build(&space, DictionaryKind::RandomGauss, 48, 2).map_err(fail)?;
    let target = Target::generate(&dict, &TargetSpec::a1(16, 4)).map_err(fail)?;
    let tol = AuditTolerances::default();
    for algo in [
        AlgorithmId::Wcga,
        AlgorithmId::Wgafr,
        AlgorithmId::Rwrga,
        AlgorithmId::Rrxga,
    ] {
        let opts = RunOptions {
            max_m: 30,
            ..RunOptions::default()
        };
        let report = run_greedy(algo, &target, &dict, &opts).map_err(fail)?;
        let audit = full_audit(&report, &applicable_bounds(&report), &tol).map_err(fail)?;
        if !audit.passed() {
            return Err(format!("{algo}: failing {:?}", audit.failing()));
        }
    }
    Ok("wcga wgafr rwrga rrxga pass".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_case_passes() {
        for case in run_selftest() {
            assert!(case.passed, "{}: {}", case.name, case.detail);
        }
    }
}
