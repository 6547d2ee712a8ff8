use proptest::prelude::*;

use wbga::algorithms::{run_greedy, AlgorithmId, RunOptions, RunReport, WeaknessSchedule};
use wbga::dictionary::{
    Dictionary, DictionaryKind, SelectionRule, SignedIndex, Target, TargetSpec,
};
use wbga::space::{lp_norm, Element, LpSpace};

fn opts(max_m: usize) -> RunOptions {
    RunOptions {
        max_m,
        ..RunOptions::default()
    }
}

fn setup(p: f64, n: usize, size: usize, k: usize, seed: u64) -> (Dictionary, Target) {
    let space = LpSpace::new(p, n).unwrap();
    let dict = Dictionary::build(&space, DictionaryKind::RandomGauss, size, seed).unwrap();
    let target = Target::generate(&dict, &TargetSpec::a1(k, seed + 1)).unwrap();
    (dict, target)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn atom(dict: &Dictionary, raw: i64) -> Vec<f64> {
    dict.element(SignedIndex::from_raw(raw).unwrap())
        .into_coords()
}

/// Golden-section minimum of a convex function on [lo, hi].
fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let (a, b) = (hi - r * (hi - lo), lo + r * (hi - lo));
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

#[test]
fn wdga_on_canonical_hilbert_is_matching_pursuit() {
    // removing the largest remaining coordinate each step
    let space = LpSpace::new(2.0, 16).unwrap();
    let dict = Dictionary::build(&space, DictionaryKind::Canonical, 16, 0).unwrap();
    let target = Target::generate(&dict, &TargetSpec::a1(10, 4)).unwrap();
    let r = run_greedy(AlgorithmId::Wdga, &target, &dict, &opts(10)).unwrap();
    let mut squares: Vec<f64> = target.element.coords().iter().map(|x| x * x).collect();
    squares.sort_by(|a, b| b.total_cmp(a));
    for rec in &r.records {
        let expected = squares[rec.m..].iter().sum::<f64>().sqrt();
        assert!(
            (rec.residual_norm - expected).abs() < 1e-12,
            "m={} {} vs {expected}",
            rec.m,
            rec.residual_norm
        );
    }
}

#[test]
fn wcga_recovers_sparse_canonical_targets_in_lp() {
    for p in [1.5, 3.0, 4.0] {
        let space = LpSpace::new(p, 12).unwrap();
        let dict = Dictionary::build(&space, DictionaryKind::Canonical, 12, 0).unwrap();
        for k in [1, 3, 6] {
            let target = Target::generate(&dict, &TargetSpec::a1(k, 9)).unwrap();
            let r = run_greedy(AlgorithmId::Wcga, &target, &dict, &opts(12)).unwrap();
            assert_eq!(r.records.len(), k, "p={p} k={k}");
            assert!(r.records[k - 1].residual_norm <= 1e-12);
        }
    }
}

#[test]
fn wgafr_hilbert_matches_two_term_least_squares() {
    let (dict, target) = setup(2.0, 24, 60, 12, 5);
    let r = run_greedy(AlgorithmId::Wgafr, &target, &dict, &opts(25)).unwrap();
    let f = target.element.coords().to_vec();
    let mut g = vec![0.0; f.len()];
    for rec in &r.records {
        // project f onto span{G_{m−1}, φ_m} via the 2x2 normal equations
        let phi = atom(&dict, rec.selected);
        let (gg, gp, pp) = (dot(&g, &g), dot(&g, &phi), dot(&phi, &phi));
        let (gf, pf) = (dot(&g, &f), dot(&phi, &f));
        let det = gg * pp - gp * gp;
        let (a, b) = if gg == 0.0 || det.abs() < 1e-14 * gg * pp {
            (0.0, pf / pp)
        } else {
            ((gf * pp - pf * gp) / det, (pf * gg - gf * gp) / det)
        };
        g = g.iter().zip(&phi).map(|(x, y)| a * x + b * y).collect();
        let resid: Vec<f64> = f.iter().zip(&g).map(|(x, y)| x - y).collect();
        let expected = dot(&resid, &resid).sqrt();
        assert!(
            (rec.residual_norm - expected).abs() <= 1e-9 * expected.max(1e-3),
            "m={}",
            rec.m
        );
    }
}

#[test]
fn rwrga_first_step_hilbert_closed_form() {
    // G_1 = μλφ with μ the rescale: the projection of f on φ
    let (dict, target) = setup(2.0, 20, 50, 8, 2);
    let r = run_greedy(AlgorithmId::Rwrga, &target, &dict, &opts(1)).unwrap();
    let f = target.element.coords();
    let phi = atom(&dict, r.records[0].selected);
    let expected = (dot(f, f) - dot(f, &phi).powi(2) / dot(&phi, &phi)).sqrt();
    assert!((r.records[0].residual_norm - expected).abs() < 1e-12);
    // and φ maximizes |⟨f, g⟩| over the dictionary
    let best = dict.atoms().map(|g| dot(f, g).abs()).fold(0.0, f64::max);
    let f_norm = dot(f, f).sqrt();
    assert!((r.records[0].gs_lhs - best / f_norm).abs() < 1e-12);
}

#[test]
fn rrxga_first_step_beats_every_line_search() {
    let (dict, target) = setup(3.0, 10, 30, 6, 11);
    let r = run_greedy(AlgorithmId::Rrxga, &target, &dict, &opts(1)).unwrap();
    let f = target.element.coords();
    let nf = lp_norm(f, 3.0);
    let best = dict
        .atoms()
        .map(|g| {
            let residual = |lam: f64| {
                let v: Vec<f64> = f.iter().zip(g).map(|(x, y)| x - lam * y).collect();
                lp_norm(&v, 3.0)
            };
            golden(residual, -4.0 * nf, 4.0 * nf)
        })
        .fold(f64::INFINITY, f64::min);
    assert!(
        r.records[0].residual_norm <= best * (1.0 + 1e-9),
        "{} > {best}",
        r.records[0].residual_norm
    );
}

#[test]
fn wcga_residual_is_biorthogonal_to_chosen_atoms() {
    let (dict, target) = setup(3.0, 16, 48, 10, 3);
    let r = run_greedy(AlgorithmId::Wcga, &target, &dict, &opts(8)).unwrap();
    for rec in &r.records {
        assert!(rec.bo_abs <= 1e-8, "m={} bo={}", rec.m, rec.bo_abs);
    }
}

#[test]
fn threshold_selection_clears_threshold() {
    let (dict, target) = setup(1.5, 16, 64, 10, 8);
    let options = RunOptions {
        weakness: WeaknessSchedule::Constant(0.3),
        selection: SelectionRule::ThresholdFirst,
        max_m: 20,
        ..RunOptions::default()
    };
    let r = run_greedy(AlgorithmId::Wcga, &target, &dict, &options).unwrap();
    for rec in &r.records {
        assert!(rec.gs_lhs >= rec.gs_rhs - 1e-12);
        assert_eq!(rec.t_m, 0.3);
    }
}

#[test]
fn zero_target_terminates_immediately() {
    let space = LpSpace::new(2.0, 4).unwrap();
    let dict = Dictionary::build(&space, DictionaryKind::Canonical, 4, 0).unwrap();
    let target = Target::uncertified(Element::zeros(4));
    let r = run_greedy(AlgorithmId::Wcga, &target, &dict, &opts(5)).unwrap();
    assert!(r.records.is_empty());
}

fn monotone(r: &RunReport) -> bool {
    (1..=r.records.len()).all(|m| r.norm_at(m) <= r.norm_at(m - 1) * (1.0 + 1e-10))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn guaranteed_monotone_algorithms_are_monotone(
        p in prop_oneof![Just(1.5), Just(2.0), Just(3.0), 1.2f64..5.0],
        seed in 0u64..10_000,
        algo_index in 0usize..AlgorithmId::ALL.len(),
    ) {
        let algo = AlgorithmId::ALL[algo_index];
        prop_assume!(algo.guaranteed_monotone() && !algo.is_approximate());
        let (dict, target) = setup(p, 8, 24, 6, seed);
        let r = run_greedy(algo, &target, &dict, &opts(12)).unwrap();
        prop_assert!(monotone(&r), "{algo}: {:?}", r.residual_norms());
    }

    #[test]
    fn runs_are_reproducible(seed in 0u64..10_000, algo_index in 0usize..AlgorithmId::ALL.len()) {
        let algo = AlgorithmId::ALL[algo_index];
        let (dict, target) = setup(3.0, 8, 24, 6, seed);
        let mut o = opts(6);
        o.seed = seed;
        if algo.is_approximate() {
            o.errors = Some(wbga::perturbation::ErrorSchedule::parse("err:delta=const:0.05,eta=const:0.05").unwrap());
        }
        let a = run_greedy(algo, &target, &dict, &o).unwrap();
        let b = run_greedy(algo, &target, &dict, &o).unwrap();
        prop_assert_eq!(a.residual_norms(), b.residual_norms());
    }
}
