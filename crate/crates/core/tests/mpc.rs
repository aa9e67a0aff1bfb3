mod common;

use common::*;
use nalgebra::DVector;
use preview_mpc::model::{ConstraintSpec, PlantModel};
use preview_mpc::mpc::{
    baseline_nominal, control, controllability_sets, solve_ocp, value, DisturbanceSequence, HorizonConfig, RowLabel,
};
use preview_mpc::numkit::mat_from_rows;
use preview_mpc::polytope::HPolytope;
use preview_mpc::sim::Schedule;
use preview_mpc::terminal::{synth_nominal, GainChoice, SynthOptions};

fn seq(vals: &[f64]) -> DisturbanceSequence {
    DisturbanceSequence::new(vals.iter().map(|c| v2([*c, *c])).collect()).unwrap()
}

fn scripted() -> Vec<DisturbanceSequence> {
    match scenario().schedule {
        Schedule::Scripted { sequences } => sequences,
        _ => unreachable!(),
    }
}

#[test]
fn scalar_one_step_problem_matches_closed_form() {
    let plant = PlantModel::new(mat_from_rows(&[vec![1.0]]).unwrap(), mat_from_rows(&[vec![1.0]]).unwrap()).unwrap();
    let w = HPolytope::hypercube(1, 0.5);
    let sets = ConstraintSpec {
        x: HPolytope::hypercube(1, 10.0),
        u: HPolytope::hypercube(1, 2.0),
        w: w.clone(),
        w_f: w,
    };
    let one = mat_from_rows(&[vec![1.0]]).unwrap();
    let k = -0.5;
    let ing = synth_nominal(&plant, &sets, &one, &one, &SynthOptions {
        gain: GainChoice::User { k: mat_from_rows(&[vec![k]]).unwrap() },
        ..SynthOptions::default()
    })
    .unwrap();
    let cfg = HorizonConfig::new(ing, 1, true).unwrap();
    // P from (1+k)²P − P = −(1 + k²).
    let p = (1.0 + k * k) / (1.0 - (1.0 + k) * (1.0 + k));
    for (x, wv) in [(0.3, 0.2), (-1.0, -0.4), (2.0, 0.0)] {
        let (x_f, u_f) = (wv / -k, -wv);
        let u = (u_f - p * (x + wv - x_f)) / (1.0 + p);
        let v = (x - x_f).powi(2) + (u - u_f).powi(2) + p * (x + u + wv - x_f).powi(2);
        let wseq = DisturbanceSequence::new(vec![DVector::from_element(1, wv)]).unwrap();
        let sol = solve_ocp(&DVector::from_element(1, x), &wseq, &cfg).unwrap();
        assert!(sol.is_feasible());
        assert!((sol.u_seq[0][0] - u).abs() < 1e-9, "x = {x}: {} vs {u}", sol.u_seq[0][0]);
        assert!((sol.value - v).abs() < 1e-9);
    }
}

#[test]
fn equilibrium_of_constant_preview_costs_nothing() {
    let b = scenario().build().unwrap();
    for c in [0.9, -1.4, 0.0] {
        let w = seq(&[c, c, c]);
        let eq = b.cfg.equilibrium(&w).unwrap();
        let sol = solve_ocp(&eq.x_f, &w, &b.cfg).unwrap();
        assert!(sol.value.abs() < 1e-9);
        assert!((&sol.u_seq[0] - &eq.u_f).amax() < 1e-7);
    }
}

#[test]
fn feasible_set_matches_controllability_recursion() {
    let b = scenario().build().unwrap();
    let n = b.cfg.horizon;
    for (i, w) in scripted().iter().enumerate() {
        let sets = controllability_sets(w, &b.cfg).unwrap();
        let xn = &sets[n];
        let mut checked = 0;
        for gi in 0..50 {
            for gj in 0..50 {
                let x = v2([-10.0 + 20.0 * gi as f64 / 49.0, -10.0 + 20.0 * gj as f64 / 49.0]);
                let strict = xn.contains(&x, -1e-7);
                if strict != xn.contains(&x, 1e-7) {
                    continue;
                }
                let feasible = value(&x, w, &b.cfg).unwrap().is_some();
                assert_eq!(strict, feasible, "w{i} at {x:?}");
                checked += 1;
            }
        }
        assert!(checked > 2400);
    }
}

#[test]
fn feasible_sets_are_not_nested_across_previews() {
    let b = scenario().build().unwrap();
    let seqs = scripted();
    let x1 = controllability_sets(&seqs[1], &b.cfg).unwrap().pop().unwrap();
    let x2 = controllability_sets(&seqs[2], &b.cfg).unwrap().pop().unwrap();
    assert!(!x1.contains_set(&x2).unwrap());
    assert!(!x2.contains_set(&x1).unwrap());
}

#[test]
fn baseline_terminal_set_contains_tightened_one() {
    let b = scenario().build().unwrap();
    let base = baseline_nominal(&b.cfg).unwrap();
    assert!(!base.preview);
    assert!(base.ingredients.xf_bar.contains_set(&b.ingredients.xf_bar).unwrap());
    let zero = seq(&[0.0, 0.0, 0.0]);
    let f_base = controllability_sets(&zero, &base).unwrap().pop().unwrap();
    let f_prev = controllability_sets(&zero, &b.cfg).unwrap().pop().unwrap();
    assert!(f_base.contains_set(&f_prev).unwrap());
}

#[test]
fn infeasible_state_names_blocking_constraint() {
    let b = scenario().build().unwrap();
    let w = seq(&[0.0, 0.0, 0.0]);
    let sol = solve_ocp(&v2([9.9, 9.9]), &w, &b.cfg).unwrap();
    assert!(!sol.is_feasible());
    assert!(sol.value.is_infinite());
    assert!(matches!(
        sol.blocking_row,
        Some(RowLabel::State { .. } | RowLabel::Input { .. } | RowLabel::Terminal { .. })
    ));
    assert!(control(&v2([9.9, 9.9]), &w, &b.cfg).is_err());
}

#[test]
fn optimal_inputs_respect_all_constraints() {
    let b = scenario().build().unwrap();
    let ing = &b.ingredients;
    for w in scripted() {
        for x in [[1.9, 2.5], [-3.0, 1.0], [0.0, -4.0]] {
            let sol = solve_ocp(&v2(x), &w, &b.cfg).unwrap();
            if !sol.is_feasible() {
                continue;
            }
            for i in 0..b.cfg.horizon {
                assert!(ing.sets.u.contains(&sol.u_seq[i], 1e-8));
                assert!(ing.sets.x.contains(&sol.x_seq[i], 1e-8));
                let next = ing.plant.step(&sol.x_seq[i], &sol.u_seq[i], w.get(i));
                assert!((next - &sol.x_seq[i + 1]).amax() < 1e-9);
            }
            let xf = ing.translated_terminal_set(w.w_f()).unwrap();
            assert!(xf.contains(&sol.x_seq[b.cfg.horizon], 1e-8));
        }
    }
}
