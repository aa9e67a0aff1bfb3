use std::fmt::Write as _;

use nalgebra::DVector;
use serde::Serialize;

use super::schedule::{project, Schedule};
use crate::error::{Error, Result};
use crate::mpc::{solve_ocp, DisturbanceSequence, HorizonConfig};
use crate::numkit::{serde_rows, Vector};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub k: usize,
    #[serde(with = "serde_rows::vector")]
    pub x: Vector,
    #[serde(with = "serde_rows::vector")]
    pub u: Vector,
    /// Disturbance applied to the plant.
    #[serde(with = "serde_rows::vector")]
    pub w: Vector,
    pub sequence: DisturbanceSequence,
    /// `V⁰_N(x(k); w(k))`, `+∞` when infeasible.
    pub value: f64,
    pub feasible: bool,
    pub in_level_set: bool,
    pub preview_id: Option<usize>,
    /// Solver or feasibility diagnostic for this step.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryLog {
    pub steps: Vec<StepRecord>,
    #[serde(with = "serde_rows::vector")]
    pub final_state: Vector,
    pub final_sequence: DisturbanceSequence,
    pub beta: f64,
}

impl TrajectoryLog {
    pub fn all_feasible(&self) -> bool {
        self.steps.iter().all(|s| s.feasible)
    }

    pub fn values(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.value).collect()
    }

    /// States `x(0), …, x(K)`.
    pub fn states(&self) -> Vec<Vector> {
        let mut v: Vec<Vector> = self.steps.iter().map(|s| s.x.clone()).collect();
        v.push(self.final_state.clone());
        v
    }

    pub fn csv_header(n: usize, m: usize, horizon: usize) -> String {
        let mut cols = vec!["k".to_string()];
        cols.extend((1..=n).map(|i| format!("x{i}")));
        cols.extend((1..=m).map(|i| format!("u{i}")));
        cols.extend((1..=n).map(|i| format!("w{i}")));
        for j in 0..horizon {
            cols.extend((1..=n).map(|i| format!("seq{j}_{i}")));
        }
        cols.extend(["value", "feasible", "in_level_set", "preview_id"].map(String::from));
        cols.join(",")
    }

    /// One row per step in the column order of [`TrajectoryLog::csv_header`].
    pub fn to_csv(&self) -> String {
        let Some(first) = self.steps.first() else {
            return String::new();
        };
        let n = first.x.len();
        let m = first.u.len();
        let mut out = Self::csv_header(n, m, first.sequence.len());
        out.push('\n');
        for s in &self.steps {
            let mut cells = vec![s.k.to_string()];
            cells.extend(s.x.iter().map(|v| v.to_string()));
            cells.extend(s.u.iter().map(|v| v.to_string()));
            cells.extend(s.w.iter().map(|v| v.to_string()));
            cells.extend(s.sequence.stacked().iter().map(|v| v.to_string()));
            cells.push(if s.value.is_finite() { s.value.to_string() } else { "inf".into() });
            cells.push(s.feasible.to_string());
            cells.push(s.in_level_set.to_string());
            cells.push(s.preview_id.map(|p| p.to_string()).unwrap_or_default());
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Receding-horizon loop: solve, apply the first input, advance the plant
/// with the preview head, update the preview by the schedule.
///
/// Infeasible steps are logged and the origin input (projected onto `U`) is
/// applied so the record always spans `steps` instants.
pub fn run_closed_loop(
    x0: &Vector,
    schedule: &Schedule,
    cfg: &HorizonConfig,
    steps: usize,
    beta: f64,
) -> Result<TrajectoryLog> {
    let ing = &cfg.ingredients;
    if x0.len() != cfg.n() {
        return Err(Error::Dimension(format!("x0 has length {}, expected {}", x0.len(), cfg.n())));
    }
    // A controller without preview never reads the sequence, so only `W` constrains it.
    let w_f = if cfg.preview { &ing.sets.w_f } else { &ing.sets.w };
    schedule.validate(&ing.sets.w, w_f, cfg.horizon)?;
    let mut runner = schedule.runner(&ing.sets.w, w_f);
    let fallback = project(&DVector::zeros(cfg.m()), &ing.sets.u)?;
    let mut x = x0.clone();
    let mut w = schedule.initial()?.clone();
    let mut records = Vec::with_capacity(steps);
    for k in 0..steps {
        let (u, value, feasible, note) = match solve_ocp(&x, &w, cfg) {
            Ok(sol) if sol.is_feasible() => (sol.u_seq[0].clone(), sol.value, true, None),
            Ok(sol) => (
                fallback.clone(),
                f64::INFINITY,
                false,
                Some(match sol.blocking_row {
                    Some(r) => format!("infeasible, blocked by {r}"),
                    None => "infeasible".to_string(),
                }),
            ),
            Err(e) => (fallback.clone(), f64::INFINITY, false, Some(e.to_string())),
        };
        let applied = w.head().clone();
        records.push(StepRecord {
            k,
            x: x.clone(),
            u: u.clone(),
            w: applied.clone(),
            sequence: w.clone(),
            value,
            feasible,
            in_level_set: feasible && value <= beta,
            preview_id: schedule.preview_id(k),
            note,
        });
        x = ing.plant.step(&x, &u, &applied);
        w = runner.advance(k, &w)?;
    }
    Ok(TrajectoryLog {
        steps: records,
        final_state: x,
        final_sequence: w,
        beta,
    })
}
