mod svg;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use preview_mpc::mpc::{baseline_nominal, controllability_sets, solve_ocp, DisturbanceSequence, HorizonConfig, SeqNorm};
use preview_mpc::numkit::Vector;
use preview_mpc::polytope::HPolytope;
use preview_mpc::scenario::ScenarioConfig;
use preview_mpc::sim::constants::lambda_scripted;
use preview_mpc::sim::levelset::marching_squares;
use preview_mpc::sim::{level_set, roa_union, run_closed_loop, GridSpec, LevelMask, Schedule};
use preview_mpc::terminal::TerminalIngredients;
use preview_mpc::Error;
use serde::Serialize;
use serde_json::json;

use svg::{Plot, PALETTE};

const EXIT_PARSE: u8 = 1;
const EXIT_SYNTHESIS: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_VERIFY: u8 = 4;

const REFERENCE_CONSTANTS: [(&str, f64); 4] = [("alpha_x", 0.328), ("alpha_u", 0.3), ("beta_x", 0.672), ("beta_u", 0.7)];
const REFERENCE_LAMBDA: f64 = 3.17;

#[derive(Parser)]
#[command(name = "preview-mpc", version, about = "MPC with disturbance preview: synthesis, simulation, sets and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize terminal ingredients and print the constants report.
    Synth(SynthArgs),
    /// Run the closed loop and write CSV logs and a trajectory plot.
    Simulate(SimulateArgs),
    /// Export controllability, terminal, level sets or the region of attraction.
    Sets(SetsArgs),
    /// Run the verification suites and emit a pass/fail JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// Scenario JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the scenario's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Previously synthesized ingredients JSON; synthesized from the scenario when absent.
    #[arg(long)]
    ingredients: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Samples per vertex of W_f for the terminal-ingredient checks.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    /// The schedule from the scenario.
    Config,
    /// The scenario schedule, which must be scripted.
    Scripted,
    /// Tail updates from the schedule's initial preview.
    Tail,
    /// Standard MPC ignoring the preview, under the scenario schedule.
    NominalBaseline,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Initial state as comma-separated values; all scenario starts when absent.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Config)]
    mode: Mode,
    /// Overlay the level sets of the scheduled previews.
    #[arg(long)]
    levelsets: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Controllability,
    Terminal,
    Roa,
    Levelset,
}

#[derive(Args)]
struct SetsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    which: Which,
    #[arg(long)]
    beta: Option<f64>,
    /// Preview indices: `2`, `0,3` or the inclusive range `0..4`.
    #[arg(long)]
    w_index: Option<String>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Prop1,
    Prop2,
    Prop3,
    Thm1,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = Suite::All)]
    suite: Suite,
    /// Trials per suite; each suite has its own default.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn input(e: impl std::fmt::Display) -> Self {
        Self::new(EXIT_PARSE, e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

pub struct Loaded {
    pub scenario: ScenarioConfig,
    pub cfg: HorizonConfig,
    out: PathBuf,
}

impl Loaded {
    pub fn ingredients(&self) -> &TerminalIngredients {
        &self.cfg.ingredients
    }

    pub fn previews(&self) -> Vec<DisturbanceSequence> {
        match &self.scenario.schedule {
            Schedule::Scripted { sequences } => sequences.clone(),
            other => vec![other.initial().expect("validated schedule").clone()],
        }
    }

    pub fn write(&self, name: &str, contents: &str) -> CmdResult {
        fs::create_dir_all(&self.out).map_err(|e| Failure::input(format!("cannot create {}: {e}", self.out.display())))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display())))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CmdResult {
        let mut text = serde_json::to_string_pretty(value).map_err(Failure::input)?;
        text.push('\n');
        self.write(name, &text)
    }
}

fn load(common: &Common) -> std::result::Result<Loaded, Failure> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", common.config.display())))?;
    let scenario = ScenarioConfig::from_json(&text).map_err(|e| Failure::input(format!("{}: {e}", common.config.display())))?;
    let ingredients = match &common.ingredients {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
            let ing: TerminalIngredients = serde_json::from_str(&text).map_err(|e| {
                Failure::input(format!(
                    "{}: parse error at line {}, column {}: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?;
            ing.check_invariants().map_err(synthesis_failure)?;
            ing
        }
        None => scenario.synthesize().map_err(synthesis_failure)?,
    };
    let cfg = HorizonConfig::new(ingredients, scenario.horizon, true).map_err(synthesis_failure)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from(&scenario.output_dir));
    Ok(Loaded { scenario, cfg, out })
}

fn synthesis_failure(e: Error) -> Failure {
    let code = match e {
        Error::Parse { .. } | Error::Dimension(_) | Error::InvalidInput(_) => EXIT_PARSE,
        _ => EXIT_SYNTHESIS,
    };
    Failure::new(code, format!("synthesis failed: {e}"))
}

fn runtime(e: Error) -> Failure {
    Failure::new(EXIT_SYNTHESIS, e.to_string())
}

fn configure_threads() -> CmdResult {
    if let Ok(raw) = std::env::var("PREVIEW_MPC_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Failure::input(format!("PREVIEW_MPC_THREADS must be a positive integer, got {raw:?}")))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(Failure::input)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_PARSE) } else { ExitCode::SUCCESS };
        }
    };
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sets(a) => cmd_sets(a),
        Command::Verify(a) => verify::cmd_verify(&load(&a.common)?, a.suite, a.trials, a.seed),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn v2(v: &Vector) -> [f64; 2] {
    [v[0], v[1]]
}

fn polygon_2d(set: &HPolytope) -> std::result::Result<Vec<[f64; 2]>, Failure> {
    if set.dim() != 2 {
        return Ok(Vec::new());
    }
    Ok(set.vertices_2d().map_err(runtime)?.iter().map(v2).collect())
}

fn set_json(set: &HPolytope) -> std::result::Result<serde_json::Value, Failure> {
    Ok(json!({
        "set": set,
        "empty": set.is_empty(),
        "vertices": polygon_2d(set)?,
    }))
}

fn cmd_synth(args: SynthArgs) -> CmdResult {
    let loaded = load(&args.common)?;
    let ing = loaded.ingredients();
    let mut checks = Vec::new();
    let mut all_passed = true;
    for v in ing.sets.w_f.vertices().map_err(runtime)? {
        let rep = ing.verify_proposition1(&v, args.samples).map_err(runtime)?;
        all_passed &= rep.all_passed();
        checks.push(rep);
    }

    let mut report = String::new();
    report.push_str(&format!("scenario: {}\n", loaded.scenario.name));
    report.push_str(&format!("K_f = {:?}\n", ing.k_f.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>()));
    report.push_str("constant   computed   reference\n");
    let ours = [ing.alpha_x, ing.alpha_u, ing.beta_x, ing.beta_u];
    for ((name, reference), value) in REFERENCE_CONSTANTS.iter().zip(ours) {
        report.push_str(&format!("{name:<10} {value:<10.4} {reference}\n"));
    }
    report.push_str(&format!(
        "alpha_x + beta_x = {:.4}, alpha_u + beta_u = {:.4}\n",
        ing.alpha_x + ing.beta_x,
        ing.alpha_u + ing.beta_u
    ));
    report.push_str("the reference values come from an unstated K_f, so they need not match\n");
    report.push_str(&format!("determination index of Xf_bar: {}\n", ing.determination_index));
    let lambda = match &loaded.scenario.schedule {
        Schedule::Scripted { sequences } => {
            let values: Vec<(String, f64)> =
                SeqNorm::ALL.iter().map(|n| (n.label().to_string(), lambda_scripted(sequences, *n))).collect();
            let shown: Vec<String> = values.iter().map(|(l, v)| format!("{l}-norm {v:.4}")).collect();
            report.push_str(&format!(
                "lambda over scripted pairs: {} (reference: {REFERENCE_LAMBDA}; its norm is not stated, none of these match)\n",
                shown.join(", ")
            ));
            Some(values)
        }
        _ => None,
    };
    report.push_str(&format!("terminal ingredient checks ({} samples per vertex of W_f):\n", args.samples));
    for rep in &checks {
        report.push_str(&format!(
            "  w_f = {:?}: invariance {:.2e}, descent {:.2e}, admissibility {:.2e}, convergence {:.2e} -> {}\n",
            rep.w_f.iter().copied().collect::<Vec<_>>(),
            rep.invariance.worst,
            rep.descent.worst,
            rep.admissibility.worst,
            rep.convergence.worst,
            if rep.all_passed() { "pass" } else { "FAIL" }
        ));
    }
    print!("{report}");
    loaded.write_json("ingredients.json", ing)?;
    loaded.write_json(
        "synth_report.json",
        &json!({
            "scenario": loaded.scenario.name,
            "computed": {"alpha_x": ing.alpha_x, "alpha_u": ing.alpha_u, "beta_x": ing.beta_x, "beta_u": ing.beta_u},
            "reference": REFERENCE_CONSTANTS.iter().map(|(n, v)| (n.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
            "determination_index": ing.determination_index,
            "lambda": lambda.map(|v| v.into_iter().map(|(l, x)| (l, json!(x))).collect::<serde_json::Map<_, _>>()),
            "reference_lambda": REFERENCE_LAMBDA,
            "proposition1": checks,
            "all_passed": all_passed,
        }),
    )?;
    loaded.write("synth_report.txt", &report)?;
    if all_passed {
        Ok(())
    } else {
        Err(Failure::new(EXIT_SYNTHESIS, "terminal ingredients failed their checks"))
    }
}

fn parse_vector(raw: &str, n: usize) -> std::result::Result<Vector, Failure> {
    let values = raw
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Failure::input(format!("--x0 {raw:?}: {e}")))?;
    if values.len() != n {
        return Err(Failure::input(format!("--x0 needs {n} values, got {}", values.len())));
    }
    Ok(Vector::from_vec(values))
}

fn plot_bounds(loaded: &Loaded) -> std::result::Result<GridSpec, Failure> {
    loaded.scenario.grid_spec().map_err(Failure::input)
}

fn boundary_lines(mask: &LevelMask) -> Vec<Vec<[f64; 2]>> {
    marching_squares(mask)
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let loaded = load(&args.common)?;
    let sc = &loaded.scenario;
    let steps = args.steps.unwrap_or(sc.steps);
    let initial = sc.schedule.initial().map_err(Failure::input)?.clone();
    let (schedule, cfg) = match args.mode {
        Mode::Config => (sc.schedule.clone(), loaded.cfg.clone()),
        Mode::Scripted => match &sc.schedule {
            Schedule::Scripted { .. } => (sc.schedule.clone(), loaded.cfg.clone()),
            _ => return Err(Failure::input("--mode scripted needs a scripted schedule in the scenario")),
        },
        Mode::Tail => (Schedule::TailUpdate { initial: initial.clone() }, loaded.cfg.clone()),
        Mode::NominalBaseline => (sc.schedule.clone(), baseline_nominal(&loaded.cfg).map_err(runtime)?),
    };
    let starts = match &args.x0 {
        Some(raw) => vec![parse_vector(raw, cfg.n())?],
        None => sc.initial_states(),
    };
    for x0 in &starts {
        let sol = solve_ocp(x0, &initial, &cfg).map_err(runtime)?;
        if !sol.is_feasible() {
            let row = sol.blocking_row.map(|r| r.to_string()).unwrap_or_else(|| "unknown row".into());
            return Err(Failure::new(
                EXIT_INFEASIBLE,
                format!("initial state {:?} is infeasible: {row} violated", x0.iter().copied().collect::<Vec<_>>()),
            ));
        }
    }

    let mut runs = Vec::new();
    for (i, x0) in starts.iter().enumerate() {
        let log = run_closed_loop(x0, &schedule, &cfg, steps, sc.beta).map_err(runtime)?;
        loaded.write(&format!("trajectory_{i}.csv"), &log.to_csv())?;
        println!(
            "run {i}: x0 = {:?}, {} steps, all feasible: {}, final V = {:.4}",
            x0.iter().copied().collect::<Vec<_>>(),
            log.steps.len(),
            log.all_feasible(),
            log.steps.last().map_or(f64::NAN, |s| s.value)
        );
        runs.push(log);
    }

    let mode = args.mode.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let summary: Vec<_> = runs
        .iter()
        .enumerate()
        .map(|(i, log)| {
            json!({
                "csv": format!("trajectory_{i}.csv"),
                "x0": log.steps.first().map(|s| s.x.iter().copied().collect::<Vec<_>>()),
                "all_feasible": log.all_feasible(),
                "all_in_level_set": log.steps.iter().all(|s| s.in_level_set),
                "final_state": log.final_state.iter().copied().collect::<Vec<_>>(),
            })
        })
        .collect();
    loaded.write_json("simulate.json", &json!({"mode": mode, "steps": steps, "beta": sc.beta, "runs": summary}))?;

    if cfg.n() != 2 {
        return Ok(());
    }
    let grid = plot_bounds(&loaded)?;
    let mut plot = Plot::new(&format!("closed loop ({mode})"), grid.lo, grid.hi);
    if args.levelsets {
        let previews = loaded.previews();
        let mut sets = Vec::new();
        for (i, w) in previews.iter().enumerate() {
            let ls = level_set(w, sc.beta, &grid, &cfg).map_err(runtime)?;
            let color = PALETTE[i % PALETTE.len()];
            for line in &ls.boundary {
                plot.polyline(line.clone(), color, 1.0, true);
            }
            plot.legend(&format!("V <= {} for w{i}", sc.beta), color);
            sets.push(json!({"w_index": i, "sequence": w, "area": ls.mask.area(), "boundary": ls.boundary}));
        }
        loaded.write_json("trajectory_levelsets.json", &json!({"beta": sc.beta, "grid": grid, "levelsets": sets}))?;
    }
    for (i, log) in runs.iter().enumerate() {
        let color = if args.levelsets { "#222222" } else { PALETTE[i % PALETTE.len()] };
        let mut points: Vec<[f64; 2]> = log.steps.iter().map(|s| v2(&s.x)).collect();
        points.push(v2(&log.final_state));
        plot.trajectory(points, color);
        if !args.levelsets {
            plot.legend(&format!("run {i}"), color);
        }
    }
    if args.levelsets {
        plot.legend("trajectories", "#222222");
    }
    loaded.write("trajectory.svg", &plot.render())
}

fn parse_indices(raw: Option<&str>, count: usize) -> std::result::Result<Vec<usize>, Failure> {
    let Some(raw) = raw else {
        return Ok((0..count).collect());
    };
    let bad = || Failure::input(format!("--w-index {raw:?} must be an index, a comma list or a range a..b"));
    let out: Vec<usize> = if let Some((a, b)) = raw.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        raw.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect::<std::result::Result<_, _>>()?
    };
    if let Some(i) = out.iter().find(|i| **i >= count) {
        return Err(Failure::input(format!("--w-index {i} out of range: the schedule has {count} previews")));
    }
    Ok(out)
}

fn cmd_sets(args: SetsArgs) -> CmdResult {
    let loaded = load(&args.common)?;
    let sc = &loaded.scenario;
    let beta = args.beta.unwrap_or(sc.beta);
    if !(beta > 0.0) {
        return Err(Failure::input("--beta must be positive"));
    }
    let previews = loaded.previews();
    let indices = parse_indices(args.w_index.as_deref(), previews.len())?;
    let planar = loaded.cfg.n() == 2;
    let grid = plot_bounds(&loaded)?;
    let ing = loaded.ingredients();

    let (name, data, plot) = match args.which {
        Which::Controllability => {
            let mut plot = Plot::new("controllability sets", grid.lo, grid.hi);
            let mut entries = Vec::new();
            for (c, &i) in indices.iter().enumerate() {
                let sets = controllability_sets(&previews[i], &loaded.cfg).map_err(runtime)?;
                let mut levels = Vec::new();
                for (level, set) in sets.iter().enumerate() {
                    levels.push(json!({"steps": level, "set": set_json(set)?}));
                }
                if let Some(top) = sets.last() {
                    let color = PALETTE[c % PALETTE.len()];
                    plot.polygon(polygon_2d(top)?, color, 0.15);
                    plot.legend(&format!("X_{}(w{i})", sets.len() - 1), color);
                }
                entries.push(json!({"w_index": i, "sequence": previews[i], "levels": levels}));
            }
            ("controllability", json!({"sets": entries}), plot)
        }
        Which::Terminal => {
            let mut plot = Plot::new("terminal sets", grid.lo, grid.hi);
            plot.polygon(polygon_2d(&ing.xf_bar)?, PALETTE[0], 0.2);
            plot.legend("Xf_bar", PALETTE[0]);
            let mut entries = Vec::new();
            for (c, &i) in indices.iter().enumerate() {
                let w_f = previews[i].w_f();
                let set = ing.translated_terminal_set(w_f).map_err(runtime)?;
                let color = PALETTE[(c + 1) % PALETTE.len()];
                plot.polygon(polygon_2d(&set)?, color, 0.1);
                plot.legend(&format!("X_f(w{i})"), color);
                entries.push(json!({
                    "w_index": i,
                    "w_f": w_f.iter().copied().collect::<Vec<_>>(),
                    "equilibrium": ing.equilibrium(w_f).map_err(runtime)?,
                    "set": set_json(&set)?,
                }));
            }
            let data = json!({
                "Xf_bar": set_json(&ing.xf_bar)?,
                "determination_index": ing.determination_index,
                "translated": entries,
            });
            ("terminal", data, plot)
        }
        Which::Levelset => {
            let mut plot = Plot::new(&format!("level sets, beta = {beta}"), grid.lo, grid.hi);
            let mut entries = Vec::new();
            for (c, &i) in indices.iter().enumerate() {
                let ls = level_set(&previews[i], beta, &grid, &loaded.cfg).map_err(runtime)?;
                let color = PALETTE[c % PALETTE.len()];
                for line in &ls.boundary {
                    plot.polyline(line.clone(), color, 1.2, false);
                }
                plot.legend(&format!("w{i}"), color);
                entries.push(json!({
                    "w_index": i,
                    "sequence": ls.sequence,
                    "inside_nodes": ls.mask.inside_count(),
                    "area": ls.mask.area(),
                    "boundary": ls.boundary,
                    "cells": ls.mask.cells,
                }));
            }
            ("levelset", json!({"beta": beta, "grid": grid, "levelsets": entries}), plot)
        }
        Which::Roa => {
            let chosen: Vec<DisturbanceSequence> = indices.iter().map(|&i| previews[i].clone()).collect();
            let (union, _) = roa_union(&chosen, beta, &grid, &loaded.cfg).map_err(runtime)?;
            let base = baseline_nominal(&loaded.cfg).map_err(runtime)?;
            let zero = DisturbanceSequence::zeros(loaded.cfg.ingredients.sets.w.dim(), loaded.cfg.horizon);
            let standard = level_set(&zero, beta, &grid, &base).map_err(runtime)?;
            let union_lines = boundary_lines(&union);
            let mut plot = Plot::new(&format!("region of attraction, beta = {beta}"), grid.lo, grid.hi);
            for line in &union_lines {
                plot.polyline(line.clone(), PALETTE[0], 1.5, false);
            }
            for line in &standard.boundary {
                plot.polyline(line.clone(), PALETTE[1], 1.5, true);
            }
            plot.legend("union over previews", PALETTE[0]);
            plot.legend("standard MPC", PALETTE[1]);
            let data = json!({
                "beta": beta,
                "grid": grid,
                "w_indices": indices,
                "union": {"inside_nodes": union.inside_count(), "area": union.area(), "boundary": union_lines, "cells": union.cells},
                "standard": {"inside_nodes": standard.mask.inside_count(), "area": standard.mask.area(), "boundary": standard.boundary, "cells": standard.mask.cells},
            });
            println!("union area {:.4}, standard area {:.4}", union.area(), standard.mask.area());
            ("roa", data, plot)
        }
    };
    loaded.write_json(&format!("sets_{name}.json"), &data)?;
    if planar {
        loaded.write(&format!("sets_{name}.svg"), &plot.render())?;
    }
    println!("wrote {}", Path::new(&loaded.out).join(format!("sets_{name}.json")).display());
    Ok(())
}

pub fn verify_failure(message: impl Into<String>) -> Failure {
    Failure::new(EXIT_VERIFY, message)
}
