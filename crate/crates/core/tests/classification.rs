use globalcoupling::coupling::{classify_f, f_eval, FShape, CERT_TOL};
use globalcoupling::{classify_existence, solve_consistency, Error, Exponent, ProblemParams, TheoremItem};
use proptest::prelude::*;

/// Subcritical and supercritical exponents as (num, den).
const EXPONENTS: [(i64, i64); 10] = [(3, 2), (2, 1), (5, 2), (7, 3), (3, 1), (7, 2), (4, 1), (5, 1), (6, 1), (9, 2)];

fn f_direct(w: f64, n: u32, p: f64) -> f64 {
    (w - 1.0) * w.powf(n as f64 / 2.0 - 2.0 / (p - 1.0))
}

/// Sign changes of `f − kα` on a log grid over (1, 1e12].
fn grid_count(n: u32, p: f64, k_alpha: f64) -> usize {
    const NODES: usize = 4000;
    let mut prev = -k_alpha;
    let mut count = 0;
    for i in 1..=NODES {
        let w = 10f64.powf(12.0 * i as f64 / NODES as f64);
        let g = f_direct(w, n, p) - k_alpha;
        if (g > 0.0) != (prev > 0.0) {
            count += 1;
        }
        prev = g;
    }
    count
}

/// Largest value of `f` on (1, ∞) from a fine grid, for the fold shape.
fn grid_max(n: u32, p: f64) -> f64 {
    (1..=200_000)
        .map(|i| f_direct(10f64.powf(12.0 * i as f64 / 200_000.0), n, p))
        .fold(f64::MIN, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn count_matches_grid_oracle(n in 1u32..=6, idx in 0usize..EXPONENTS.len(), log_ka in -2.0f64..2.0) {
        let (num, den) = EXPONENTS[idx];
        let p = Exponent::ratio(num, den).unwrap();
        let pv = num as f64 / den as f64;
        let k_alpha = 10f64.powf(log_ka);
        let case = classify_f(n, &p).unwrap();
        match case.tag {
            FShape::Supercritical => {
                let res = classify_existence(&ProblemParams::new(n, p, k_alpha).unwrap(), 1.0).unwrap();
                prop_assert_eq!(res.count, 0);
                prop_assert_eq!(res.theorem_item, TheoremItem::Supercritical);
                let rejected = matches!(solve_consistency(n, &p, k_alpha), Err(Error::SupercriticalExponent { .. }));
                prop_assert!(rejected);
            }
            tag => {
                if tag == FShape::MaxThenDecay {
                    let f_max = f_direct(case.omega_crit.unwrap(), n, pv);
                    prop_assume!((k_alpha - f_max).abs() > 1e-3 * f_max);
                }
                if tag == FShape::SaturatingOne {
                    prop_assume!((k_alpha - 1.0).abs() > 1e-3);
                }
                let roots = solve_consistency(n, &p, k_alpha).unwrap();
                prop_assert_eq!(roots.len(), grid_count(n, pv, k_alpha));
                for w in &roots {
                    prop_assert!(*w > 1.0);
                    let defect = (f_eval(*w, n, &p).unwrap() - k_alpha).abs();
                    prop_assert!(defect <= CERT_TOL * (1.0 + k_alpha));
                }
                prop_assert!(roots.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn unique_root_is_monotone_in_coupling(log_k in -3.0f64..3.0, factor in 1.01f64..10.0) {
        let p = Exponent::integer(3);
        let a = solve_consistency(1, &p, 4.0 * 10f64.powf(log_k)).unwrap();
        let b = solve_consistency(1, &p, 4.0 * factor * 10f64.powf(log_k)).unwrap();
        prop_assert_eq!(a.len(), 1);
        prop_assert_eq!(b.len(), 1);
        prop_assert!(b[0] > a[0]);
    }
}

#[test]
fn fold_maximum_matches_grid_oracle() {
    for (n, num, den) in [(1u32, 2i64, 1i64), (1, 3, 2), (2, 3, 2), (3, 3, 2)] {
        let p = Exponent::ratio(num, den).unwrap();
        let case = classify_f(n, &p).unwrap();
        assert_eq!(case.tag, FShape::MaxThenDecay);
        let pv = num as f64 / den as f64;
        let exact = f_direct(case.omega_crit.unwrap(), n, pv);
        let grid = grid_max(n, pv);
        assert!(exact >= grid && exact - grid <= 1e-6 * exact, "n={n} p={pv}");
    }
}

#[test]
fn supercritical_inputs_have_no_solutions_at_any_coupling() {
    for (n, p) in [(3u32, 5i64), (3, 7), (4, 3)] {
        for k in [1e-6, 1e-3, 1.0, 1e3, 1e6] {
            let params = ProblemParams::new(n, Exponent::integer(p), k).unwrap();
            let res = classify_existence(&params, 1.0).unwrap();
            assert_eq!((res.count, res.theorem_item), (0, TheoremItem::Supercritical));
            assert!(res.omegas.is_empty());
        }
    }
}

#[test]
fn planar_threshold_is_on_k_alpha_not_k() {
    // n = 2, p = 2 saturates at f → 1, so existence is decided by kα < 1.
    // A threshold stated on k alone would admit k = 0.5 whenever α > 2.
    let p = Exponent::integer(2);
    let alpha = 31.0;
    let at = |k: f64| classify_existence(&ProblemParams::new(2, p, k).unwrap(), alpha).unwrap();
    assert_eq!(at(0.5).count, 0);
    assert_eq!(at(0.5).theorem_item, TheoremItem::SaturatedNone);
    assert_eq!(at(0.99 / alpha).count, 1);
    assert_eq!(at(1.0 / alpha).count, 0);
    assert_eq!(at(1.0 / alpha).k_star, Some(1.0 / alpha));
}
