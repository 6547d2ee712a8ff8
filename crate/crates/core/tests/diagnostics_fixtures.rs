use proptest::prelude::*;

use wbga::algorithms::{run_greedy, AlgorithmId, RunOptions, RunReport};
use wbga::diagnostics::{
    audit_conditions, check_error_reduction_lemma, rate_bound, verify_rates, AuditTolerances,
    BoundKind, BoundSpec, CheckStatus,
};
use wbga::dictionary::{Dictionary, DictionaryKind, Target, TargetSpec};
use wbga::perturbation::{eps_bound_prop61, perturbed_functional, ErrorSchedule};
use wbga::space::{Element, LpSpace};

fn report(algo: AlgorithmId, p: f64, seed: u64) -> RunReport {
    let space = LpSpace::new(p, 16).unwrap();
    let dict = Dictionary::build(&space, DictionaryKind::RandomGauss, 48, seed).unwrap();
    let target = Target::generate(&dict, &TargetSpec::a1(12, seed)).unwrap();
    let opts = RunOptions {
        max_m: 20,
        ..RunOptions::default()
    };
    run_greedy(algo, &target, &dict, &opts).unwrap()
}

fn status(r: &RunReport, name: &str) -> CheckStatus {
    audit_conditions(r, &AuditTolerances::default())
        .unwrap()
        .check(name)
        .unwrap_or_else(|| panic!("no check {name}"))
        .status
}

#[test]
fn clean_runs_pass_every_condition() {
    for algo in [AlgorithmId::Wcga, AlgorithmId::Wgafr, AlgorithmId::Rwrga] {
        let audit = audit_conditions(&report(algo, 3.0, 1), &AuditTolerances::default()).unwrap();
        assert!(audit.passed(), "{algo}: {:?}", audit.failing());
    }
}

#[test]
fn injected_selection_violation_is_caught() {
    let mut r = report(AlgorithmId::Wcga, 3.0, 2);
    r.records[3].gs_lhs = r.records[3].gs_rhs - 1e-6;
    assert_eq!(status(&r, "greedy_selection"), CheckStatus::Fail);
    assert_eq!(status(&r, "error_reduction"), CheckStatus::Pass);
}

#[test]
fn injected_reduction_violation_is_caught() {
    let mut r = report(AlgorithmId::Rwrga, 3.0, 3);
    let m = 4;
    r.records[m].residual_norm = r.records[m].er_reference * 1.01;
    assert_eq!(status(&r, "error_reduction"), CheckStatus::Fail);
    let audit = audit_conditions(&r, &AuditTolerances::default()).unwrap();
    assert_eq!(
        audit.check("error_reduction").unwrap().failures,
        vec![m + 1]
    );
}

#[test]
fn injected_biorthogonality_violation_is_caught() {
    let mut r = report(AlgorithmId::Wgafr, 1.5, 4);
    r.records[2].bo_abs = 1e-3;
    assert_eq!(status(&r, "biorthogonality"), CheckStatus::Fail);
}

#[test]
fn increase_breaks_monotonicity() {
    let mut r = report(AlgorithmId::Wcga, 2.0, 5);
    r.records[5].residual_norm = r.records[4].residual_norm * 1.5;
    assert_eq!(status(&r, "monotonicity"), CheckStatus::Fail);
}

#[test]
fn conditions_not_guaranteed_are_informational() {
    let r = report(AlgorithmId::Wrga, 3.0, 6);
    let audit = audit_conditions(&r, &AuditTolerances::default()).unwrap();
    assert_eq!(
        audit.check("biorthogonality").unwrap().status,
        CheckStatus::Skipped
    );
    assert!(audit.passed());
}

#[test]
fn lemma_hilbert_closed_form() {
    // q = 2, γ = 1/2: inf_{λ≥0} (1 − cλ + λ²/F²) = 1 − c₊²F²/4 with c = t/A·(1 − ε/F)
    let r = report(AlgorithmId::Wcga, 2.0, 7);
    let (a, eps) = (1.3, 0.02);
    let check = check_error_reduction_lemma(&r, None, Some((a, eps)), 1e-9).unwrap();
    assert_eq!(check.status, CheckStatus::Pass);
    for (m, margin) in check.ms.iter().zip(&check.margins) {
        let prev = r.norm_at(m - 1);
        let c = (r.records[m - 1].t_m / a * (1.0 - eps / prev)).max(0.0);
        let rhs = prev * (1.0 - c * c * prev * prev / 4.0);
        let got = margin + r.records[m - 1].residual_norm;
        assert!((got - rhs).abs() <= 1e-9 * prev, "m={m}: {got} vs {rhs}");
    }
}

#[test]
fn lemma_fails_when_certificate_is_too_optimistic() {
    // A far below the true ‖·‖_{A_1} makes the claimed reduction unattainable
    let r = report(AlgorithmId::Wcga, 2.0, 8);
    let check = check_error_reduction_lemma(&r, None, Some((0.02, 0.0)), 1e-9).unwrap();
    assert_eq!(check.status, CheckStatus::Fail);
}

#[test]
fn bound_constants() {
    let s = BoundSpec::new(BoundKind::Cor52, 2.0, 0.5).unwrap();
    assert!((s.c52() - 4.0).abs() < 1e-15);
    // q = 2, γ = 1/2: 4·2·1·2^{1/2}
    assert!((s.c72() - 8.0 * 2f64.sqrt()).abs() < 1e-12);
    let s = BoundSpec::new(BoundKind::Cor21, 2.0, 0.5)
        .unwrap()
        .with_t(0.25);
    assert!((s.c21() - 16.0 * 0.5f64.sqrt() * 2.0).abs() < 1e-12);
    assert_eq!(rate_bound(&s, 0, 0.0).unwrap(), f64::INFINITY);
    assert!((rate_bound(&s, 4, 0.0).unwrap() - s.c21() / 2.0).abs() < 1e-12);
}

#[test]
fn noisy_bound_floors_at_twice_eps() {
    let s = BoundSpec::new(BoundKind::Thm52, 2.0, 0.5)
        .unwrap()
        .with_noise(1.0, 0.1);
    assert_eq!(rate_bound(&s, 10_000, 1e12).unwrap(), 0.2);
    let s = BoundSpec::new(BoundKind::Thm72, 2.0, 0.5)
        .unwrap()
        .with_noise(1.0, 0.1);
    assert_eq!(rate_bound(&s, 10_000, 1e12).unwrap(), 0.4);
}

#[test]
fn tampered_residual_breaks_the_rate() {
    let mut r = report(AlgorithmId::Wcga, 3.0, 9);
    let spec = BoundSpec::for_report(BoundKind::Cor52, &r).unwrap();
    assert!(verify_rates(&r, &[spec], 1e-6).unwrap().passed());
    r.records[9].residual_norm = 10.0;
    assert!(!verify_rates(&r, &[spec], 1e-6).unwrap().passed());
}

#[test]
fn inapplicable_bound_is_skipped() {
    let r = report(AlgorithmId::Wcga, 3.0, 10);
    let spec = BoundSpec::for_report(BoundKind::Thm91, &r).unwrap();
    let audit = verify_rates(&r, &[spec], 1e-6).unwrap();
    assert_eq!(audit.checks[0].status, CheckStatus::Skipped);
}

#[test]
fn approximate_runs_respect_eps_allowance() {
    let space = LpSpace::new(3.0, 16).unwrap();
    let dict = Dictionary::build(&space, DictionaryKind::RandomGauss, 48, 1).unwrap();
    let target = Target::generate(&dict, &TargetSpec::a1(10, 1)).unwrap();
    let opts = RunOptions {
        max_m: 30,
        errors: Some(ErrorSchedule::parse("err:delta=pow:0.1,1.1,eta=pow:0.1,1.1").unwrap()),
        ..RunOptions::default()
    };
    for algo in [AlgorithmId::Awcga, AlgorithmId::Awgafr, AlgorithmId::Arwrga] {
        let r = run_greedy(algo, &target, &dict, &opts).unwrap();
        let audit = audit_conditions(&r, &AuditTolerances::default()).unwrap();
        assert!(audit.passed(), "{algo}: {:?}", audit.failing());
        for rec in &r.records {
            assert!(rec.delta_achieved <= rec.delta_m + 1e-12);
            assert!(rec.eta_achieved <= rec.eta_m + 1e-12);
        }
    }
}

/// inf_{λ>0} (δ + η + 2γ(λ‖G‖)^q)/λ by a log-spaced scan plus golden refinement.
fn eps_scan(space: &LpSpace, delta: f64, eta: f64, g: f64) -> f64 {
    let obj = |lam: f64| (delta + eta + 2.0 * space.gamma() * (lam * g).powf(space.q())) / lam;
    let grid: Vec<f64> = (0..4000)
        .map(|k| 10f64.powf(-8.0 + 12.0 * k as f64 / 3999.0))
        .collect();
    let i = (0..grid.len())
        .min_by(|a, b| obj(grid[*a]).total_cmp(&obj(grid[*b])))
        .unwrap();
    let (mut lo, mut hi) = (grid[i.saturating_sub(1)], grid[(i + 1).min(grid.len() - 1)]);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (a, b) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if obj(a) <= obj(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    obj(0.5 * (lo + hi))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eps_allowance_matches_its_infimum(
        p in prop_oneof![Just(2.0), 1.2f64..5.0],
        delta in 1e-6f64..0.3,
        eta in 0.0f64..0.3,
        g in 0.05f64..3.0,
    ) {
        let space = LpSpace::new(p, 2).unwrap();
        let closed = eps_bound_prop61(&space, delta, eta, g);
        let scanned = eps_scan(&space, delta, eta, g);
        prop_assert!((closed - scanned).abs() <= 1e-8 * scanned, "{closed} vs {scanned}");
    }

    #[test]
    fn perturbed_functional_meets_its_delta(
        p in prop_oneof![Just(2.0), 1.2f64..5.0],
        x in prop::collection::vec(-5.0f64..5.0, 6),
        delta in 0.0f64..0.5,
        seed in 0u64..1000,
    ) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-2));
        let space = LpSpace::new(p, 6).unwrap();
        let f = Element::new(x).unwrap();
        let nf = space.norm(&f).unwrap();
        let pf = perturbed_functional(&space, &f, delta, seed).unwrap();
        prop_assert!((space.dual_norm(&pf.functional).unwrap() - 1.0).abs() < 1e-10);
        let value = pf.functional.apply(&f).unwrap();
        prop_assert!(value >= (1.0 - delta) * nf - 1e-10 * nf);
        prop_assert!((pf.achieved_delta - (1.0 - value / nf)).abs() < 1e-10);
    }
}
