use serde::Serialize;

use super::closed_loop::TrajectoryLog;
use super::constants::RobustnessConstants;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    /// The run did not meet the hypotheses, so nothing is claimed.
    PreconditionFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem1Report {
    pub verdict: Verdict,
    /// Largest observed `|w(k+1) − tail(w(k))|` in the configured norm.
    pub lambda_observed: f64,
    pub lambda_bound: f64,
    pub initial_value: f64,
    pub beta: f64,
    pub alpha: f64,
    pub tolerance: f64,
    /// Steps where `V⁰(k) > β` or the OCP was infeasible.
    pub invariance_violations: Vec<usize>,
    /// Steps where `V⁰(k+1) > max(ρV⁰(k), α)`.
    pub contraction_violations: Vec<usize>,
    pub entry_step: Option<usize>,
    /// `⌈ln(α/V⁰(0)) / ln ρ⌉`, zero when already inside.
    pub predicted_entry: usize,
    /// Steps after entry where `V⁰ > α`.
    pub persistence_violations: Vec<usize>,
    pub notes: Vec<String>,
}

/// Entry slack, in steps, on top of the decay-predicted horizon.
pub const ENTRY_SLACK: usize = 5;

pub fn predicted_entry(v0: f64, alpha: f64, rho: f64) -> usize {
    if v0 <= alpha {
        0
    } else {
        ((alpha / v0).ln() / rho.ln()).ceil().max(0.0) as usize
    }
}

/// Monitors a closed-loop log for the level-set invariance, the contraction
/// towards `α` and the finite-time entry into `Ω_α` with persistence.
pub fn verify_theorem1(log: &TrajectoryLog, constants: &RobustnessConstants) -> Theorem1Report {
    let beta = log.beta;
    let alpha = constants.alpha;
    let rho = constants.rho;
    let tol = 1e-6 * beta;
    let norm = constants.norm;
    let lambda_bound = constants.lambda_bound();

    let lambda_observed = log
        .steps
        .windows(2)
        .map(|p| p[1].sequence.distance(&p[0].sequence.tail(), norm))
        .chain(
            log.steps
                .last()
                .map(|s| log.final_sequence.distance(&s.sequence.tail(), norm)),
        )
        .fold(0.0, f64::max);
    let initial_value = log.steps.first().map_or(f64::INFINITY, |s| s.value);

    let mut notes = Vec::new();
    if lambda_observed > lambda_bound {
        notes.push(format!(
            "observed preview variation {lambda_observed:.4} exceeds the admissible {lambda_bound:.4} ({})",
            norm.label()
        ));
    }
    if !(initial_value <= beta) {
        notes.push(format!("initial value {initial_value:.4} is not below beta = {beta}"));
    }
    if !(alpha > 0.0) {
        notes.push("alpha is not positive".into());
    }
    let precondition = notes.is_empty();

    let values = log.values();
    let invariance_violations: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !(**v <= beta + tol))
        .map(|(k, _)| k)
        .collect();
    let contraction_violations: Vec<usize> = values
        .windows(2)
        .enumerate()
        .filter(|(_, p)| !(p[1] <= (rho * p[0]).max(alpha) + tol))
        .map(|(k, _)| k)
        .collect();
    let entry_step = values.iter().position(|v| *v <= alpha + tol);
    let persistence_violations: Vec<usize> = match entry_step {
        Some(e) => values
            .iter()
            .enumerate()
            .skip(e)
            .filter(|(_, v)| !(**v <= alpha + tol))
            .map(|(k, _)| k)
            .collect(),
        None => Vec::new(),
    };
    let predicted = predicted_entry(initial_value, alpha, rho);
    let entry_ok = match entry_step {
        Some(e) => e <= predicted + ENTRY_SLACK,
        // Too short to observe the entry is not a violation.
        None => values.len() <= predicted + ENTRY_SLACK,
    };

    let verdict = if !precondition {
        Verdict::PreconditionFailed
    } else if invariance_violations.is_empty()
        && contraction_violations.is_empty()
        && persistence_violations.is_empty()
        && entry_ok
    {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    if precondition && !entry_ok {
        notes.push(format!("entry into the alpha level later than {} steps", predicted + ENTRY_SLACK));
    }

    Theorem1Report {
        verdict,
        lambda_observed,
        lambda_bound,
        initial_value,
        beta,
        alpha,
        tolerance: tol,
        invariance_violations,
        contraction_violations,
        entry_step,
        predicted_entry: predicted,
        persistence_violations,
        notes,
    }
}
