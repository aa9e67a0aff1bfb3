//! Cross-checks of the LP/QP, Lyapunov and Riccati solvers against
//! independent brute-force oracles.

use nalgebra::{DMatrix, DVector};
use preview_mpc::numkit::{
    self, solve_dare, solve_discrete_lyapunov, solve_lp, solve_qp, LpProblem, QpProblem, SolveTag,
};
use proptest::prelude::*;

mod common;

use common::solver::{exhaustive_oracle, kkt_reverify, random_matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_qps_match_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut infeasible = 0;
    for _ in 0..100 {
        let d = rng.gen_range(1..=4);
        let q = rng.gen_range(1..=8);
        let m = random_matrix(&mut rng, d, d);
        let h = m.transpose() * &m + DMatrix::identity(d, d) * 0.1;
        let f = DVector::from_fn(d, |_, _| rng.gen_range(-2.0..2.0));
        let a = random_matrix(&mut rng, q, d);
        let b = DVector::from_fn(q, |_, _| rng.gen_range(-0.5..1.5));
        let p = QpProblem::new(h.clone(), f.clone(), a.clone(), b.clone());
        let sol = solve_qp(&p).unwrap();
        match exhaustive_oracle(&h, &f, &a, &b) {
            Some((x, val)) => {
                assert_eq!(sol.status.tag, SolveTag::Optimal, "{p:?}");
                assert!((sol.value - val).abs() <= 1e-7 * (1.0 + val.abs()), "{} vs {val}", sol.value);
                assert!((&sol.x - &x).amax() <= 1e-7);
                assert!(kkt_reverify(&p, &sol.x, &sol.multipliers) <= 1e-8);
            }
            None => {
                infeasible += 1;
                assert_eq!(sol.status.tag, SolveTag::Infeasible, "{p:?}");
                let y = sol.certificate.unwrap();
                assert!((a.transpose() * &y).amax() <= 1e-8);
                assert!(b.dot(&y) < 0.0);
            }
        }
    }
    assert!(infeasible > 0, "sample should include infeasible instances");
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let d = rng.gen_range(1..=4);
        let q = rng.gen_range(d + 1..=8);
        let a = random_matrix(&mut rng, q, d);
        let b = DVector::from_fn(q, |_, _| rng.gen_range(-0.3..1.5));
        // c = −Aᵀy with y ≥ 0 keeps the objective bounded below on the feasible set.
        let y = DVector::from_fn(q, |_, _| rng.gen_range(0.0..1.0));
        let c = -(a.transpose() * y);
        let lp = LpProblem { c: c.clone(), a: a.clone(), b: b.clone() };
        let sol = solve_lp(&lp).unwrap();
        let h = DMatrix::zeros(d, d);
        match exhaustive_oracle(&h, &c, &a, &b) {
            Some((_, val)) => {
                assert_eq!(sol.status.tag, SolveTag::Optimal, "{lp:?}");
                assert!((sol.value - val).abs() <= 1e-7 * (1.0 + val.abs()), "{} vs {val}", sol.value);
                let p = QpProblem::from(&lp);
                assert!(kkt_reverify(&p, &sol.x, &sol.multipliers) <= 1e-8);
            }
            None => assert_eq!(sol.status.tag, SolveTag::Infeasible, "{lp:?}"),
        }
    }
}

#[test]
fn zero_hessian_qp_agrees_with_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let d = rng.gen_range(1..=4);
        let q = rng.gen_range(d + 1..=8);
        let a = random_matrix(&mut rng, q, d);
        let b = DVector::from_fn(q, |_, _| rng.gen_range(0.1..1.5));
        let y = DVector::from_fn(q, |_, _| rng.gen_range(0.0..1.0));
        let lp = LpProblem { c: -(a.transpose() * y), a, b };
        let s1 = solve_lp(&lp).unwrap();
        let s2 = solve_qp(&QpProblem::from(&lp)).unwrap();
        assert_eq!(s1.status.tag, s2.status.tag);
        assert!((s1.value - s2.value).abs() <= 1e-7);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_solution_dominates_weight(
        entries in prop::collection::vec(-1.0f64..1.0, 9),
        wdiag in prop::collection::vec(0.1f64..2.0, 3),
        seed in any::<u64>(),
    ) {
        let mut f = DMatrix::from_row_slice(3, 3, &entries);
        let r = numkit::spectral_radius(&f);
        if r >= 0.95 {
            f *= 0.9 / r;
        }
        let qbar = DMatrix::from_diagonal(&DVector::from_vec(wdiag));
        let p = solve_discrete_lyapunov(&f, &qbar).unwrap();
        prop_assert!((f.transpose() * &p * &f - &p + &qbar).amax() <= 1e-10 * p.amax().max(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let x = DVector::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
            prop_assert!(x.dot(&(&p * &x)) >= x.dot(&(&qbar * &x)) - 1e-12);
        }
    }

    #[test]
    fn dare_gain_stabilises_random_reachable_pairs(
        a_entries in prop::collection::vec(-1.5f64..1.5, 9),
        b_entries in prop::collection::vec(-1.0f64..1.0, 3),
    ) {
        let a = DMatrix::from_row_slice(3, 3, &a_entries);
        let b = DMatrix::from_row_slice(3, 1, &b_entries);
        prop_assume!(numkit::is_reachable(&a, &b));
        let c = numkit::controllability_matrix(&a, &b);
        let sv = c.svd(false, false).singular_values;
        prop_assume!(sv.min() > 1e-3 * sv.max());
        let q = DMatrix::identity(3, 3);
        let s = DMatrix::identity(1, 1);
        let sol = solve_dare(&a, &b, &q, &s).unwrap();
        prop_assert!(numkit::spectral_radius(&(&a - &b * &sol.k)) < 1.0);
        let terms = (a.transpose() * &sol.p * &a).amax() + sol.p.amax() + 1.0;
        prop_assert!(sol.residual <= 1e-8 * terms);
        // The absolute floor grows with |P|; the tight bound holds for moderate solutions.
        if sol.p.amax() <= 1e4 {
            prop_assert!(sol.residual <= 1e-9 * sol.p.amax().max(1.0));
        }
    }
}

#[test]
fn dare_matches_plain_riccati_iteration() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 1, &[0.5, 1.0]);
    let q = DMatrix::identity(2, 2);
    let s = DMatrix::identity(1, 1);
    let sol = solve_dare(&a, &b, &q, &s).unwrap();

    // Oracle: value iteration P ← Q + AᵀPA − AᵀPB(S + BᵀPB)⁻¹BᵀPA from P = Q.
    let mut p = q.clone();
    for _ in 0..100_000 {
        let g = (&s + b.transpose() * &p * &b).try_inverse().unwrap();
        let next = &q + a.transpose() * &p * &a - a.transpose() * &p * &b * g * b.transpose() * &p * &a;
        let done = (&next - &p).amax() < 1e-14;
        p = next;
        if done {
            break;
        }
    }
    assert!((&sol.p - &p).amax() <= 1e-12 * p.amax().max(1.0) * 10.0);
    assert!(sol.residual <= 1e-9);
    assert!(numkit::spectral_radius(&(&a - &b * &sol.k)) < 1.0);
}

#[test]
fn dare_handles_a_poorly_conditioned_reachable_pair() {
    let a = DMatrix::from_row_slice(3, 3, &[
        -1.4488489111298977, 0.16415408449842733, 1.2576133789153046,
        0.19109373488206477, 0.2985733858689965, 0.2725548027357946,
        1.063345049946411, 1.042994738521993, 0.3634769414276602,
    ]);
    let b = DMatrix::from_row_slice(3, 1, &[-0.3794817797166082, 0.19099274980270478, -0.626463660757009]);
    let sol = solve_dare(&a, &b, &DMatrix::identity(3, 3), &DMatrix::identity(1, 1)).unwrap();
    assert!(sol.p.amax() > 1e6);
    let terms = (a.transpose() * &sol.p * &a).amax() + sol.p.amax() + 1.0;
    assert!(sol.residual <= 1e-8 * terms);
    assert!(numkit::spectral_radius(&(&a - &b * &sol.k)) < 1.0);
}
