use preview_mpc::mpc::{controllability_sets, value, DisturbanceSequence, HorizonConfig};
use preview_mpc::numkit::Vector;
use preview_mpc::polytope::HPolytope;
use preview_mpc::sim::constants::random_sequence;
use preview_mpc::sim::levelset::tail_orbit;
use preview_mpc::sim::theorem::{predicted_entry, ENTRY_SLACK};
use preview_mpc::sim::{compute_constants, run_closed_loop, verify_theorem1, GridSpec, Schedule, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::{runtime, verify_failure, CmdResult, Failure, Loaded, Suite};

const DESCENT_TOL: f64 = 1e-8;
const DECAY_TOL: f64 = 1e-6;
const NESTING_TOL: f64 = 1e-7;
const START_ATTEMPTS: usize = 100_000;

#[derive(Serialize)]
struct Check {
    name: String,
    passed: bool,
    /// Largest violation, or a count of failures; non-positive or zero is clean.
    measured: f64,
    limit: f64,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self { name: name.into(), passed: measured <= limit, measured, limit }
    }
}

#[derive(Serialize)]
struct SuiteReport {
    suite: &'static str,
    passed: bool,
    checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
}

impl SuiteReport {
    fn new(suite: &'static str, checks: Vec<Check>, notes: Vec<String>) -> Self {
        Self { suite, passed: checks.iter().all(|c| c.passed), checks, notes }
    }
}

type SuiteResult = std::result::Result<SuiteReport, Failure>;

pub fn cmd_verify(loaded: &Loaded, suite: Suite, trials: Option<usize>, seed: u64) -> CmdResult {
    let suites: Vec<Suite> = match suite {
        Suite::All => vec![Suite::Prop1, Suite::Prop2, Suite::Prop3, Suite::Thm1],
        s => vec![s],
    };
    let mut reports = Vec::new();
    for s in suites {
        let report = match s {
            Suite::Prop1 => prop1(loaded, trials.unwrap_or(1000)),
            Suite::Prop2 => prop2(loaded, trials.unwrap_or(500), seed),
            Suite::Prop3 => prop3(loaded, trials.unwrap_or(20), seed),
            Suite::Thm1 => thm1(loaded, trials.unwrap_or(1)),
            Suite::All => unreachable!(),
        }?;
        eprintln!("{}: {}", report.suite, if report.passed { "pass" } else { "FAIL" });
        reports.push(report);
    }
    let passed = reports.iter().all(|r| r.passed);
    let doc = json!({"seed": seed, "passed": passed, "suites": reports});
    println!("{}", serde_json::to_string_pretty(&doc).map_err(Failure::input)?);
    loaded.write_json("verify.json", &doc)?;
    if passed {
        Ok(())
    } else {
        Err(verify_failure("verification failed"))
    }
}

fn prop1(loaded: &Loaded, samples: usize) -> SuiteResult {
    let ing = loaded.ingredients();
    let mut checks = Vec::new();
    for v in ing.sets.w_f.vertices().map_err(runtime)? {
        let rep = ing.verify_proposition1(&v, samples).map_err(runtime)?;
        let tag = format!("{:?}", v.iter().copied().collect::<Vec<_>>());
        for (name, r, limit) in [
            ("invariance", &rep.invariance, None),
            ("descent", &rep.descent, Some(DESCENT_TOL)),
            ("admissibility", &rep.admissibility, None),
            ("convergence", &rep.convergence, None),
        ] {
            checks.push(Check {
                name: format!("{name} at w_f = {tag}"),
                passed: r.passed && limit.is_none_or(|l| r.worst <= l),
                measured: r.worst,
                limit: limit.unwrap_or(0.0),
            });
        }
    }
    Ok(SuiteReport::new("prop1", checks, vec![format!("{samples} samples per vertex of W_f")]))
}

fn state_box(cfg: &HorizonConfig) -> std::result::Result<(Vector, Vector), Failure> {
    cfg.ingredients.sets.x.bounding_box().map_err(runtime)
}

/// Uniform draws from the box of `X` until `V⁰(x; w) ≤ bound`.
fn feasible_start(
    rng: &mut ChaCha8Rng,
    cfg: &HorizonConfig,
    w: &DisturbanceSequence,
    bound: f64,
) -> std::result::Result<Vector, Failure> {
    let (lo, hi) = state_box(cfg)?;
    for _ in 0..START_ATTEMPTS {
        let x = Vector::from_fn(lo.len(), |i, _| rng.gen_range(lo[i]..=hi[i]));
        if value(&x, w, cfg).map_err(runtime)?.is_some_and(|v| v <= bound) {
            return Ok(x);
        }
    }
    Err(verify_failure("no feasible initial state found"))
}

fn random_preview(rng: &mut ChaCha8Rng, cfg: &HorizonConfig) -> std::result::Result<DisturbanceSequence, Failure> {
    let sets = &cfg.ingredients.sets;
    random_sequence(&sets.w, &sets.w_f, cfg.horizon, rng).map_err(runtime)
}

fn union_mask(orbit: &[DisturbanceSequence], level: usize, cfg: &HorizonConfig, grid: &GridSpec, tol: f64) -> std::result::Result<Vec<bool>, Failure> {
    let sets: Vec<HPolytope> = orbit
        .iter()
        .map(|w| controllability_sets(w, cfg).map(|mut s| s.swap_remove(level)))
        .collect::<preview_mpc::Result<_>>()
        .map_err(runtime)?;
    Ok((0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            sets.iter().any(|s| !s.is_empty() && s.contains(&x, tol))
        })
        .collect())
}

fn prop2(loaded: &Loaded, trials: usize, seed: u64) -> SuiteResult {
    let cfg = &loaded.cfg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = 2 * cfg.horizon + 2;
    let mut failures = 0usize;
    for _ in 0..trials {
        let w = random_preview(&mut rng, cfg)?;
        let x = feasible_start(&mut rng, cfg, &w, f64::INFINITY)?;
        let log = run_closed_loop(&x, &Schedule::TailUpdate { initial: w }, cfg, steps, loaded.scenario.beta).map_err(runtime)?;
        failures += log.steps.iter().filter(|s| !s.feasible).count();
    }
    let mut checks = vec![Check::at_most("infeasible tail-update solves", failures as f64, 0.0)];
    let mut notes = vec![format!("{trials} trials of {steps} steps")];
    if cfg.n() == 2 {
        let grid = loaded.scenario.grid_spec().map_err(Failure::input)?;
        let n = cfg.horizon;
        let (mut nesting, mut determination) = (0usize, 0usize);
        for w0 in loaded.previews() {
            let orbit = tail_orbit(&w0, n + 1);
            for i in 0..n {
                let inner = union_mask(&orbit, i, cfg, &grid, -NESTING_TOL)?;
                let outer = union_mask(&orbit, i + 1, cfg, &grid, NESTING_TOL)?;
                nesting += inner.iter().zip(&outer).filter(|(a, o)| **a && !**o).count();
            }
            let short = union_mask(&orbit, n, cfg, &grid, 1e-9)?;
            let long = union_mask(&tail_orbit(&w0, n + 4), n, cfg, &grid, 1e-9)?;
            determination += short.iter().zip(&long).filter(|(a, b)| a != b).count();
        }
        checks.push(Check::at_most("union nesting violations (grid nodes)", nesting as f64, 0.0));
        checks.push(Check::at_most("finite determination mismatches (grid nodes)", determination as f64, 0.0));
        notes.push(format!("mask checks on a {}x{} grid", grid.nx, grid.ny));
    }
    Ok(SuiteReport::new("prop2", checks, notes))
}

fn prop3(loaded: &Loaded, trials: usize, seed: u64) -> SuiteResult {
    let cfg = &loaded.cfg;
    let beta = loaded.scenario.beta;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = loaded.scenario.steps;
    let (mut worst_v, mut worst_x) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut gamma = (f64::INFINITY, f64::NEG_INFINITY);
    for _ in 0..trials {
        let w = random_preview(&mut rng, cfg)?;
        let x0 = feasible_start(&mut rng, cfg, &w, f64::INFINITY)?;
        let schedule = Schedule::TailUpdate { initial: w.clone() };
        let c = compute_constants(cfg, &schedule, &loaded.scenario.constants, beta).map_err(runtime)?;
        gamma = (gamma.0.min(c.gamma), gamma.1.max(c.gamma));
        let (cc, delta) = c.state_envelope();
        let x_f = cfg.equilibrium(&w).map_err(runtime)?.x_f;
        let log = run_closed_loop(&x0, &schedule, cfg, steps, beta).map_err(runtime)?;
        let v0 = log.steps.first().map_or(0.0, |s| s.value);
        let d0 = (&x0 - &x_f).norm();
        for (k, s) in log.steps.iter().enumerate() {
            worst_v = worst_v.max(s.value - c.gamma.powi(k as i32) * v0 - DECAY_TOL);
            worst_x = worst_x.max((&s.x - &x_f).norm() - cc * delta.powi(k as i32) * d0 - DECAY_TOL);
        }
    }
    let checks = vec![
        Check::at_most("value decay bound gap", worst_v, 0.0),
        Check::at_most("state decay bound gap", worst_x, 0.0),
    ];
    let notes = vec![format!("{trials} runs of {steps} steps; gamma in [{:.6}, {:.6}]", gamma.0, gamma.1)];
    Ok(SuiteReport::new("prop3", checks, notes))
}

fn thm1(loaded: &Loaded, runs: usize) -> SuiteResult {
    let sc = &loaded.scenario;
    let cfg = &loaded.cfg;
    let c = compute_constants(cfg, &sc.schedule, &sc.constants, sc.beta).map_err(runtime)?;
    let w0 = sc.schedule.initial().map_err(Failure::input)?;
    let mut reports = Vec::new();
    let mut checks = Vec::new();
    let mut notes = vec![format!(
        "gamma {:.6}, rho {:.6}, alpha {:.4}, lambda bound {:.4e}",
        c.gamma,
        c.rho,
        c.alpha,
        c.lambda_bound()
    )];
    for run in 0..runs.max(1) {
        let schedule = match &sc.schedule {
            Schedule::RandomDelta { initial, delta, seed } => Schedule::RandomDelta {
                initial: initial.clone(),
                delta: delta.clone(),
                seed: seed.wrapping_add(run as u64),
            },
            other => other.clone(),
        };
        for (i, x0) in sc.initial_states().iter().enumerate() {
            let Some(v0) = value(x0, w0, cfg).map_err(runtime)?.filter(|v| *v <= sc.beta) else {
                notes.push(format!("start {i} skipped: outside the level set of the initial preview"));
                continue;
            };
            let steps = sc.steps.max(predicted_entry(v0, c.alpha, c.rho) + ENTRY_SLACK + 1);
            let log = run_closed_loop(x0, &schedule, cfg, steps, sc.beta).map_err(runtime)?;
            let rep = verify_theorem1(&log, &c);
            let violated = rep.verdict == Verdict::Violated;
            checks.push(Check {
                name: format!("run {run}, start {i}: {:?}", rep.verdict),
                passed: !violated,
                measured: (rep.invariance_violations.len() + rep.contraction_violations.len() + rep.persistence_violations.len()) as f64,
                limit: 0.0,
            });
            reports.push(rep);
        }
    }
    if reports.iter().any(|r| r.verdict == Verdict::PreconditionFailed) {
        notes.push("precondition failed: the observed preview variation exceeds the bound, so no claim is checked".into());
    }
    let mut suite = SuiteReport::new("thm1", checks, notes);
    for note in reports.iter().flat_map(|r| &r.notes) {
        if !suite.notes.contains(note) {
            suite.notes.push(note.clone());
        }
    }
    Ok(suite)
}
