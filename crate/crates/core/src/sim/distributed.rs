use nalgebra::DVector;
use serde::Serialize;

use super::closed_loop::{StepRecord, TrajectoryLog};
use crate::error::{Error, Result};
use crate::mpc::{solve_ocp, DisturbanceSequence, HorizonConfig, OcpSolution};
use crate::numkit::{Mat, Vector};

/// One subsystem of a coupled pair: its own controller configuration, the
/// coupling matrix through which the other subsystem's state enters, and its
/// initial state.
#[derive(Debug, Clone)]
pub struct SubsystemSpec {
    pub cfg: HorizonConfig,
    pub coupling: Mat,
    pub x0: Vector,
}

#[derive(Debug, Clone, Serialize)]
pub struct DistributedLog {
    pub first: TrajectoryLog,
    pub second: TrajectoryLog,
    /// `|w₂(k+1) − tail(w₂(k))|₂` for the second controller.
    pub preview_change: Vec<f64>,
    /// `|applied − predicted head|₂` per controller and step.
    pub head_error: Vec<[f64; 2]>,
}

fn record(k: usize, x: &Vector, u: &Vector, w: &Vector, seq: &DisturbanceSequence, sol: &Option<OcpSolution>, note: Option<String>) -> StepRecord {
    let (value, feasible) = match sol {
        Some(s) if s.is_feasible() => (s.value, true),
        _ => (f64::INFINITY, false),
    };
    StepRecord {
        k,
        x: x.clone(),
        u: u.clone(),
        w: w.clone(),
        sequence: seq.clone(),
        value,
        feasible,
        in_level_set: feasible,
        preview_id: None,
        note,
    }
}

fn solve(x: &Vector, w: &DisturbanceSequence, cfg: &HorizonConfig) -> (Option<OcpSolution>, Option<String>) {
    match solve_ocp(x, w, cfg) {
        Ok(s) if s.is_feasible() => (Some(s), None),
        Ok(s) => {
            let note = s.blocking_row.map_or("infeasible".into(), |r| format!("infeasible, blocked by {r}"));
            (Some(s), Some(note))
        }
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Sequential protocol: controller 1 plans with a zero preview and publishes
/// its predicted states; controller 2 uses the coupling image of those states
/// as its preview. Both apply their first inputs to the coupled plant.
pub fn run_distributed_demo(first: &SubsystemSpec, second: &SubsystemSpec, steps: usize) -> Result<DistributedLog> {
    let (n1, n2) = (first.cfg.n(), second.cfg.n());
    if first.coupling.shape() != (n1, n2) || second.coupling.shape() != (n2, n1) {
        return Err(Error::Dimension("coupling matrices must map the other subsystem's state".into()));
    }
    if first.x0.len() != n1 || second.x0.len() != n2 {
        return Err(Error::Dimension("initial states do not match the subsystems".into()));
    }
    let horizon = second.cfg.horizon;
    let zero1 = DisturbanceSequence::zeros(n1, first.cfg.horizon);
    let (mut x1, mut x2) = (first.x0.clone(), second.x0.clone());
    let (mut log1, mut log2) = (Vec::with_capacity(steps), Vec::with_capacity(steps));
    let mut preview_change = Vec::with_capacity(steps);
    let mut head_error = Vec::with_capacity(steps);
    let mut prev_w2: Option<DisturbanceSequence> = None;

    for k in 0..steps {
        let (sol1, note1) = solve(&x1, &zero1, &first.cfg);
        // Without a published plan, controller 2 assumes subsystem 1 holds its state.
        let published: Vec<Vector> = match &sol1 {
            Some(s) if s.is_feasible() => s.x_seq.iter().take(horizon).cloned().collect(),
            _ => vec![x1.clone(); horizon],
        };
        let w2 = DisturbanceSequence::new(published.iter().map(|p| &second.coupling * p).collect())?;
        if let Some(prev) = &prev_w2 {
            preview_change.push(w2.distance(&prev.tail(), crate::mpc::SeqNorm::Two));
        }
        let (sol2, note2) = solve(&x2, &w2, &second.cfg);

        let u1 = first_input(&sol1, first.cfg.m());
        let u2 = first_input(&sol2, second.cfg.m());
        let d1 = &first.coupling * &x2;
        let d2 = &second.coupling * &x1;
        head_error.push([(&d1 - zero1.head()).norm(), (&d2 - w2.head()).norm()]);

        log1.push(record(k, &x1, &u1, &d1, &zero1, &sol1, note1));
        log2.push(record(k, &x2, &u2, &d2, &w2, &sol2, note2));
        x1 = first.cfg.ingredients.plant.step(&x1, &u1, &d1);
        x2 = second.cfg.ingredients.plant.step(&x2, &u2, &d2);
        prev_w2 = Some(w2);
    }
    let final_w2 = prev_w2.unwrap_or_else(|| DisturbanceSequence::zeros(n2, horizon));
    Ok(DistributedLog {
        first: TrajectoryLog {
            steps: log1,
            final_state: x1,
            final_sequence: zero1,
            beta: f64::INFINITY,
        },
        second: TrajectoryLog {
            steps: log2,
            final_state: x2,
            final_sequence: final_w2,
            beta: f64::INFINITY,
        },
        preview_change,
        head_error,
    })
}

fn first_input(sol: &Option<OcpSolution>, m: usize) -> Vector {
    match sol {
        Some(s) if s.is_feasible() => s.u_seq[0].clone(),
        _ => DVector::zeros(m),
    }
}
