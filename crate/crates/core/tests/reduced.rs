use phasefield::reduced::{
    cost_f, cost_table, finite_eps_cost, kappa, q_infinity, transition_energy, CostParams, Prefactor, DEFAULT_TOL,
};
use proptest::prelude::*;

fn params(d: usize, p: f64, a: f64) -> CostParams<f64> {
    CostParams::new(d, p, a).unwrap()
}

#[test]
fn table_rows_follow_closed_form() {
    let rows = cost_table(&[0.0, 0.5, 1.0, 2.0], &params(1, 2.0, 1.0), DEFAULT_TOL).unwrap();
    assert_eq!(rows[0].f_value, 0.0);
    for (row, want) in rows[1..].iter().zip([3.0, 4.0, 6.0]) {
        assert!((row.f_value - want).abs() < 1e-2 * want, "{} vs {want}", row.f_value);
        assert!((row.r_star - row.m / 2.0).abs() < 1e-2, "{}", row.r_star);
    }
}

#[test]
fn vanishing_barrier_approaches_kappa() {
    let base = params(1, 2.0, 1.0);
    let k = kappa(&base).unwrap();
    assert!((k - 2.0).abs() < 1e-3);
    let f: Vec<f64> = [1.0, 0.1, 0.01, 0.001, 1e-4]
        .iter()
        .map(|&a| cost_f(1.0, &base.with_a(a), DEFAULT_TOL).unwrap().f_value)
        .collect();
    assert!(f.windows(2).all(|w| w[1] < w[0]));
    assert!((f[4] - 2.0).abs() < 0.03);
}

#[test]
fn prefactor_choice_changes_the_cost() {
    let p = params(2, 3.0, 1.0);
    let a = cost_f(1.0, &p, DEFAULT_TOL).unwrap().f_value;
    let b = cost_f(1.0, &p.with_prefactor(Prefactor::DMinusOneOmega), DEFAULT_TOL).unwrap().f_value;
    assert!(b < a);
}

#[test]
fn wide_annulus_profile_is_monotone() {
    let prof = transition_energy(0.0, 2.0, 40.0, &params(2, 3.0, 1.0), 2000).unwrap();
    assert!(prof.is_monotone());
    assert_eq!(prof.values[0], 0.0);
    assert_eq!(*prof.values.last().unwrap(), 1.0);
    assert!(prof.value_at(3.0) > 0.0 && prof.value_at(3.0) < 1.0);
}

#[test]
fn full_phase_costs_nothing() {
    assert_eq!(q_infinity(1.0, 3.0, &params(3, 4.0, 1.0), DEFAULT_TOL).unwrap(), 0.0);
}

#[test]
fn finite_eps_gap_shrinks() {
    let p = params(1, 2.0, 1.0);
    let f = cost_f(1.0, &p, DEFAULT_TOL).unwrap().f_value;
    let gaps: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&eps| (finite_eps_cost(1.0, 1.0, eps, &p, 2000).unwrap() - f).abs())
        .collect();
    assert!(gaps[1] < gaps[0] && gaps[2] < gaps[1], "{gaps:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn cost_is_monotone_and_subadditive(m1 in 0.05f64..3.0, m2 in 0.05f64..3.0) {
        let p = params(2, 3.0, 0.5);
        let f = |m: f64| cost_f(m, &p, DEFAULT_TOL).unwrap().f_value;
        let (a, b, ab) = (f(m1), f(m2), f(m1 + m2));
        prop_assert!(ab >= a.max(b));
        prop_assert!(ab <= (a + b) * (1.0 + 1e-6));
    }

    #[test]
    fn q_infinity_is_convex_in_xi(x1 in 0.0f64..0.9, x2 in 0.0f64..0.9, r in 0.0f64..3.0) {
        let p = params(2, 3.0, 1.0);
        let q = |x: f64| q_infinity(x, r, &p, 1e-9).unwrap();
        prop_assert!(q(0.5 * (x1 + x2)) <= 0.5 * (q(x1) + q(x2)) + 1e-6);
    }
}
