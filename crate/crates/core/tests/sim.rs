mod common;

use common::*;
use nalgebra::DMatrix;
use preview_mpc::mpc::{baseline_nominal, value, DisturbanceSequence, HorizonConfig, SeqNorm};
use preview_mpc::numkit::mat_from_rows;
use preview_mpc::polytope::HPolytope;
use preview_mpc::scenario::ScenarioConfig;
use preview_mpc::sim::constants::{lambda_delta, lambda_scripted};
use preview_mpc::sim::*;
use preview_mpc::terminal::{synth_nominal, GainChoice, SynthOptions};

fn seq(vals: &[f64]) -> DisturbanceSequence {
    DisturbanceSequence::new(vals.iter().map(|c| v2([*c, *c])).collect()).unwrap()
}

fn coarse(sc: &ScenarioConfig, n: usize) -> GridSpec {
    let mut g = sc.grid_spec().unwrap();
    g.nx = n;
    g.ny = n;
    g
}

#[test]
fn scripted_run_stays_feasible_and_bounded() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let log = run_closed_loop(&sc.x0, &sc.schedule, &b.cfg, sc.steps, sc.beta).unwrap();
    assert_eq!(log.steps.len(), 50);
    assert!(log.all_feasible());
    for (k, s) in log.steps.iter().enumerate() {
        assert_eq!(&s.w, s.sequence.head());
        assert_eq!(s.preview_id, Some(k % 5));
        assert!(b.ingredients.sets.x.contains(&s.x, 1e-9));
        assert!(b.ingredients.sets.u.contains(&s.u, 1e-9));
    }
    // Settles into a neighbourhood of the origin without converging.
    let late: Vec<f64> = log.steps[25..].iter().map(|s| s.x.amax()).collect();
    assert!(late.iter().all(|v| *v < 5.0));
    assert!(late.iter().any(|v| *v > 0.3));
}

#[test]
fn zero_disturbance_regulates_to_origin() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let sched = Schedule::TailUpdate { initial: seq(&[0.0, 0.0, 0.0]) };
    let log = run_closed_loop(&sc.x0, &sched, &b.cfg, 40, sc.beta).unwrap();
    assert!(log.all_feasible());
    assert!(log.final_state.amax() < 1e-6);
}

#[test]
fn tail_updates_decay_at_gamma_rate() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let w0 = seq(&[0.9, -0.9, -0.9]);
    let sched = Schedule::TailUpdate { initial: w0.clone() };
    let c = compute_constants(&b.cfg, &sched, &ConstantsSpec::default(), sc.beta).unwrap();
    assert_eq!(c.c1, 1.0);
    assert!(c.c1 <= c.c2 && c.c2 <= c.c3 && c.gamma > 0.0 && c.gamma < 1.0);
    assert!(c.rho > c.gamma && c.rho < 1.0);
    assert_eq!(c.lambda.two, 0.0);
    let (cc, delta) = c.state_envelope();
    let x_f = b.cfg.equilibrium(&w0).unwrap().x_f;
    for x0 in [[1.9, 2.5], [-4.0, 3.0], [3.0, -3.0]] {
        let log = run_closed_loop(&v2(x0), &sched, &b.cfg, 40, sc.beta).unwrap();
        assert!(log.all_feasible());
        let v = log.values();
        let d0 = (&log.steps[0].x - &x_f).norm();
        for (k, s) in log.steps.iter().enumerate() {
            assert!(v[k] <= c.gamma.powi(k as i32) * v[0] + 1e-6, "{x0:?} k={k}");
            assert!((&s.x - &x_f).norm() <= cc * delta.powi(k as i32) * d0 + 1e-6);
        }
    }
}

#[test]
fn scripted_lambda_under_three_norms() {
    let sc = scenario();
    let Schedule::Scripted { sequences } = &sc.schedule else { unreachable!() };
    // Worst pair is w0 → w1: tail(w0) = (−0.9, −0.9, −0.9) against (0.9, 0.9, 0.9),
    // a jump of 1.8 in all six coordinates.
    let two = (6.0f64 * 1.8 * 1.8).sqrt();
    assert!((lambda_scripted(sequences, SeqNorm::Two) - two).abs() < 1e-12);
    assert!((lambda_scripted(sequences, SeqNorm::Inf) - 1.8).abs() < 1e-12);
    assert!((lambda_scripted(sequences, SeqNorm::One) - 10.8).abs() < 1e-12);
}

#[test]
fn delta_lambda_from_box_on_segment() {
    let w = segment(2.0);
    let d = HPolytope::hypercube(2, 0.1);
    let l = lambda_delta(&d, &w, &w, 3, SeqNorm::Two).unwrap();
    assert!((l - (6.0f64 * 0.01).sqrt()).abs() < 1e-9);
    let l = lambda_delta(&d, &w, &w, 3, SeqNorm::Inf).unwrap();
    assert!((l - 0.1).abs() < 1e-9);
}

#[test]
fn random_delta_previews_stay_admissible() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let sched = Schedule::RandomDelta {
        initial: seq(&[0.9, -0.9, -0.9]),
        delta: HPolytope::hypercube(2, 1.5),
        seed: 11,
    };
    let log = run_closed_loop(&sc.x0, &sched, &b.cfg, 60, sc.beta).unwrap();
    let sets = &b.ingredients.sets;
    for s in &log.steps {
        assert!(s.sequence.is_admissible(&sets.w, &sets.w_f, 1e-9));
        assert_eq!(&s.w, s.sequence.head());
    }
    let again = run_closed_loop(&sc.x0, &sched, &b.cfg, 60, sc.beta).unwrap();
    assert_eq!(log, again);
}

#[test]
fn sigma_envelope_is_monotone_and_dominates_samples() {
    let env = SigmaEnvelope::from_samples(vec![(0.3, 1.0), (0.1, 0.5), (0.2, 0.2), (0.5, 0.7)]);
    assert_eq!(env.eval(0.0), 0.0);
    assert_eq!(env.eval(0.15), 0.5);
    assert_eq!(env.eval(0.25), 0.5);
    assert_eq!(env.eval(0.5), 1.0);
    assert_eq!(env.inverse(0.6), 0.2);
    assert_eq!(env.inverse(0.1), 0.0);
    assert!(env.points.windows(2).all(|p| p[0].0 <= p[1].0 && p[0].1 <= p[1].1));
}

#[test]
fn constant_preview_level_set_contains_equilibrium() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let grid = GridSpec {
        nx: 21,
        ny: 21,
        lo: [-0.425, -2.45],
        hi: [3.575, 1.55],
    };
    let w = seq(&[0.9, 0.9, 0.9]);
    let ls = level_set(&w, 100.0, &grid, &b.cfg).unwrap();
    // x_f = (1.575, −0.45) is the centre node.
    let centre = 10 * 21 + 10;
    assert!((grid.point(centre) - v2([1.575, -0.45])).amax() < 1e-12);
    assert!(ls.mask.contains_node(centre));
    assert!(ls.mask.values[centre].unwrap() < 1e-9);
    let tiny = level_set(&w, 1e-6, &grid, &b.cfg).unwrap();
    assert_eq!(tiny.mask.inside_count(), 1);
    assert!(level_set(&w, 0.0, &grid, &b.cfg).is_err());
}

#[test]
fn union_of_single_sequence_is_its_level_set() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let grid = coarse(&sc, 31);
    let w = seq(&[0.9, -0.9, -0.9]);
    let (union, sets) = roa_union(std::slice::from_ref(&w), 100.0, &grid, &b.cfg).unwrap();
    assert_eq!(union.cells, sets[0].mask.cells);
    assert!(!sets[0].boundary.is_empty());
}

#[test]
fn tail_union_is_finitely_determined() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let grid = coarse(&sc, 31);
    let w0 = seq(&[0.9, -0.9, -0.9]);
    let n = b.cfg.horizon;
    let (short, _) = roa_union(&tail_orbit(&w0, n + 1), 100.0, &grid, &b.cfg).unwrap();
    let (long, _) = roa_union(&tail_orbit(&w0, n + 4), 100.0, &grid, &b.cfg).unwrap();
    assert_eq!(short.cells, long.cells);
}

#[test]
fn theorem_monitor_on_equilibrium_start() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let w = seq(&[0.5, 0.5, 0.5]);
    let sched = Schedule::TailUpdate { initial: w.clone() };
    let c = compute_constants(&b.cfg, &sched, &ConstantsSpec::default(), sc.beta).unwrap();
    let x_f = b.cfg.equilibrium(&w).unwrap().x_f;
    let log = run_closed_loop(&x_f, &sched, &b.cfg, 20, sc.beta).unwrap();
    let rep = verify_theorem1(&log, &c);
    assert_eq!(rep.verdict, Verdict::Holds, "{rep:?}");
    assert_eq!(rep.entry_step, Some(0));
}

#[test]
fn theorem_monitor_flags_fast_switching_as_precondition_failure() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let c = compute_constants(&b.cfg, &sc.schedule, &ConstantsSpec::default(), sc.beta).unwrap();
    assert!(c.lambda.two > c.lambda_bound());
    let log = run_closed_loop(&sc.x0, &sc.schedule, &b.cfg, 20, sc.beta).unwrap();
    let rep = verify_theorem1(&log, &c);
    assert_eq!(rep.verdict, Verdict::PreconditionFailed);
    assert!(rep.invariance_violations.is_empty());
}

#[test]
fn csv_log_has_documented_columns() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let log = run_closed_loop(&sc.x0, &sc.schedule, &b.cfg, 5, sc.beta).unwrap();
    let csv = log.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(
        lines[0],
        "k,x1,x2,u1,w1,w2,seq0_1,seq0_2,seq1_1,seq1_2,seq2_1,seq2_2,value,feasible,in_level_set,preview_id"
    );
    assert!(lines.iter().all(|l| l.split(',').count() == 16));
}

#[test]
fn baseline_ignores_preview() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let base = baseline_nominal(&b.cfg).unwrap();
    let x = v2([1.0, -1.0]);
    let a = value(&x, &seq(&[0.9, 0.9, 0.9]), &base).unwrap();
    let z = value(&x, &seq(&[0.0, 0.0, 0.0]), &base).unwrap();
    assert_eq!(a, z);
}

fn subsystem(coupling: f64, x0: P2) -> SubsystemSpec {
    let sc = scenario();
    let w = HPolytope::hypercube(2, 0.5);
    let mut sets = sc.constraint_spec();
    sets.w = w.clone();
    sets.w_f = w;
    let ing = synth_nominal(&sc.plant, &sets, &sc.weights.q, &sc.weights.s, &SynthOptions {
        gain: GainChoice::Lqr,
        ..SynthOptions::default()
    })
    .unwrap();
    SubsystemSpec {
        cfg: HorizonConfig::new(ing, 3, true).unwrap(),
        coupling: DMatrix::identity(2, 2) * coupling,
        x0: v2(x0),
    }
}

#[test]
fn decoupled_demo_matches_independent_runs() {
    let (s1, s2) = (subsystem(0.0, [2.0, 1.0]), subsystem(0.0, [-1.0, 2.0]));
    let demo = run_distributed_demo(&s1, &s2, 15).unwrap();
    let zero = Schedule::TailUpdate { initial: seq(&[0.0, 0.0, 0.0]) };
    let solo1 = run_closed_loop(&s1.x0, &zero, &s1.cfg, 15, f64::INFINITY).unwrap();
    let solo2 = run_closed_loop(&s2.x0, &zero, &s2.cfg, 15, f64::INFINITY).unwrap();
    for k in 0..15 {
        assert!((&demo.first.steps[k].x - &solo1.steps[k].x).amax() < 1e-12);
        assert!((&demo.second.steps[k].x - &solo2.steps[k].x).amax() < 1e-12);
    }
}

#[test]
fn weakly_coupled_demo_is_feasible_with_exact_preview_head() {
    let (s1, s2) = (subsystem(0.05, [2.0, 1.0]), subsystem(0.05, [-1.0, 2.0]));
    let demo = run_distributed_demo(&s1, &s2, 30).unwrap();
    assert!(demo.first.all_feasible() && demo.second.all_feasible());
    for (k, s) in demo.second.steps.iter().enumerate() {
        let expected = &demo.first.steps[k].x * 0.05;
        assert!((s.sequence.head() - &expected).amax() < 1e-15);
        assert_eq!(demo.head_error[k][1], 0.0);
    }
    assert_eq!(demo.preview_change.len(), 29);
    let _ = mat_from_rows;
}

#[test]
fn baseline_runs_under_the_scripted_schedule() {
    let sc = scenario();
    let b = sc.build().unwrap();
    let base = baseline_nominal(&b.cfg).unwrap();
    let log = run_closed_loop(&v2([1.0, 1.0]), &sc.schedule, &base, 10, 100.0).unwrap();
    assert_eq!(log.steps.len(), 10);
    assert!(log.steps.iter().all(|s| s.feasible));
    assert_eq!(log.steps.iter().map(|s| s.preview_id).take(6).collect::<Vec<_>>(), [0, 1, 2, 3, 4, 0].map(Some));
}
