use proptest::prelude::*;

use wbga::space::{lp_norm, Element, LpSpace, RhoMode};
use wbga::GreedyError;

fn p_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(2.0), 1.1f64..6.0]
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

/// ‖x‖_p straight from the definition.
fn naive_norm(x: &[f64], p: f64) -> f64 {
    x.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

#[test]
fn exponents_by_regime() {
    for (p, q, gamma) in [
        (1.5, 1.5, 1.0 / 1.5),
        (2.0, 2.0, 0.5),
        (3.0, 2.0, 1.0),
        (4.0, 2.0, 1.5),
    ] {
        let s = LpSpace::new(p, 4).unwrap();
        assert_eq!(s.q(), q);
        assert!((s.gamma() - gamma).abs() < 1e-15);
        assert!((s.p_conj() - q / (q - 1.0)).abs() < 1e-12);
    }
}

#[test]
fn non_smooth_exponents_rejected() {
    for p in [1.0, 0.5, f64::INFINITY, f64::NAN] {
        assert!(
            matches!(
                LpSpace::new(p, 3),
                Err(GreedyError::NotUniformlySmooth { .. })
            ),
            "p = {p}"
        );
    }
}

#[test]
fn zero_has_no_norming_functional() {
    let s = LpSpace::new(3.0, 5).unwrap();
    assert!(matches!(
        s.norming_functional(&Element::zeros(5)),
        Err(GreedyError::ZeroNorming)
    ));
}

#[test]
fn dimension_mismatch_is_an_error() {
    let s = LpSpace::new(2.0, 3).unwrap();
    assert!(matches!(
        s.norm(&Element::zeros(4)),
        Err(GreedyError::DimensionMismatch {
            expected: 3,
            found: 4
        })
    ));
}

#[test]
fn hilbert_xi_root_is_linear_in_t() {
    // ρ(u) = u²/2 gives ξ = 2θt
    let s = LpSpace::new(2.0, 2).unwrap();
    for (t, theta) in [(0.1, 0.5), (0.5, 0.3), (1.0, 0.25)] {
        let xi = s.xi_root(RhoMode::PowerBound, t, theta).unwrap();
        assert!((xi - 2.0 * theta * t).abs() < 1e-12, "{xi}");
    }
}

proptest! {
    #[test]
    fn norm_matches_definition(p in p_strategy(), x in vector(7)) {
        let naive = naive_norm(&x, p);
        prop_assert!((lp_norm(&x, p) - naive).abs() <= 1e-12 * naive.max(1.0));
    }

    #[test]
    fn norm_is_homogeneous_and_subadditive(p in p_strategy(), x in vector(6), y in vector(6), c in -5.0f64..5.0) {
        let s = LpSpace::new(p, 6).unwrap();
        let (ex, ey) = (Element::new(x.clone()).unwrap(), Element::new(y).unwrap());
        let nx = s.norm(&ex).unwrap();
        prop_assert!((s.norm(&ex.scaled(c)).unwrap() - c.abs() * nx).abs() <= 1e-12 * nx.max(1.0) * c.abs().max(1.0));
        let sum = ex.add_scaled(1.0, &ey).unwrap();
        prop_assert!(s.norm(&sum).unwrap() <= nx + s.norm(&ey).unwrap() + 1e-12);
    }

    #[test]
    fn norming_functional_is_norming(p in p_strategy(), x in vector(8)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let s = LpSpace::new(p, 8).unwrap();
        let f = Element::new(x.clone()).unwrap();
        let nf = s.norm(&f).unwrap();
        let functional = s.norming_functional(&f).unwrap();
        prop_assert!((s.dual_norm(&functional).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((functional.apply(&f).unwrap() - nf).abs() <= 1e-12 * nf);
        // independent oracle: F_f = sign(x)|x|^{p−1}/‖x‖^{p−1}
        for (c, xi) in functional.coords().iter().zip(&x) {
            let expected = xi.signum() * xi.abs().powf(p - 1.0) / nf.powf(p - 1.0);
            prop_assert!((c - expected).abs() <= 1e-10);
        }
    }

    #[test]
    fn holder_inequality(p in p_strategy(), x in vector(5), y in vector(5)) {
        prop_assume!(x.iter().any(|v| v.abs() > 1e-3));
        let s = LpSpace::new(p, 5).unwrap();
        let f = Element::new(x.clone()).unwrap();
        let g = Element::new(y.clone()).unwrap();
        let value = s.norming_functional(&f).unwrap().apply(&g).unwrap();
        prop_assert!(value.abs() <= naive_norm(&y, p) * (1.0 + 1e-12) + 1e-12);
        prop_assert!((s.norming_value(&x, &y) - value).abs() <= 1e-10 * naive_norm(&y, p).max(1.0));
    }

    #[test]
    fn modulus_below_power_bound(p in p_strategy(), seed in 0u64..1000, u in 0.01f64..2.0) {
        let s = LpSpace::new(p, 6).unwrap();
        let rho = s.empirical_modulus(u, 32, seed);
        prop_assert!(rho >= -1e-12);
        prop_assert!(rho <= s.smoothness_bound(u) + 1e-9, "rho({u}) = {rho} > {}", s.smoothness_bound(u));
    }

    #[test]
    fn xi_root_solves_its_equation(p in p_strategy(), t in 0.05f64..1.0, theta in 0.05f64..0.5) {
        let s = LpSpace::new(p, 2).unwrap();
        let xi = s.xi_root(RhoMode::PowerBound, t, theta).unwrap();
        prop_assert!(xi > 0.0 && xi <= 2.0);
        if xi < 2.0 {
            let (lhs, rhs) = (s.gamma() * xi.powf(s.q()), theta * t * xi);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * rhs.max(1e-300));
        }
    }

    #[test]
    fn spec_roundtrip(p in p_strategy(), n in 1usize..200) {
        let s = LpSpace::new(p, n).unwrap();
        prop_assert_eq!(LpSpace::parse(&s.spec()).unwrap(), s);
    }
}
