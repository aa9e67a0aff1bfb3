use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpc::DisturbanceSequence;
use crate::numkit::{solve_qp, QpProblem, Vector};
use crate::polytope::HPolytope;

/// How the preview evolves from one sampling instant to the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Schedule {
    /// `w⁺ = tail(w)`.
    TailUpdate { initial: DisturbanceSequence },
    /// Cycles through a fixed list: `w(k) = sequences[k mod len]`.
    Scripted { sequences: Vec<DisturbanceSequence> },
    /// `w⁺ = tail(w) + Δ` with every element of `Δ` drawn from `delta`, then
    /// projected back onto `W` (and `W_f` for the last element).
    RandomDelta {
        initial: DisturbanceSequence,
        delta: HPolytope,
        seed: u64,
    },
}

impl Schedule {
    pub fn initial(&self) -> Result<&DisturbanceSequence> {
        match self {
            Schedule::TailUpdate { initial } | Schedule::RandomDelta { initial, .. } => Ok(initial),
            Schedule::Scripted { sequences } => sequences
                .first()
                .ok_or_else(|| Error::InvalidInput("scripted schedule has no sequences".into())),
        }
    }

    pub fn preview_id(&self, k: usize) -> Option<usize> {
        match self {
            Schedule::Scripted { sequences } => Some(k % sequences.len()),
            _ => None,
        }
    }

    /// Checks that every sequence the schedule can start from is admissible.
    pub fn validate(&self, w: &HPolytope, w_f: &HPolytope, horizon: usize) -> Result<()> {
        let seqs: Vec<&DisturbanceSequence> = match self {
            Schedule::Scripted { sequences } => sequences.iter().collect(),
            Schedule::TailUpdate { initial } | Schedule::RandomDelta { initial, .. } => vec![initial],
        };
        if seqs.is_empty() {
            return Err(Error::InvalidInput("scripted schedule has no sequences".into()));
        }
        for (i, s) in seqs.iter().enumerate() {
            if s.len() != horizon || s.dim() != w.dim() {
                return Err(Error::Dimension(format!(
                    "schedule sequence {i} must hold {horizon} vectors of length {}",
                    w.dim()
                )));
            }
            if !s.is_admissible(w, w_f, 1e-9) {
                return Err(Error::NotAdmissible(format!("schedule sequence {i} {s}")));
            }
        }
        if let Schedule::RandomDelta { delta, .. } = self {
            if delta.dim() != w.dim() || !delta.flags().is_c_set {
                return Err(Error::InvalidInput("delta set must be a C-set in the disturbance space".into()));
            }
        }
        Ok(())
    }

    pub fn runner(&self, w: &HPolytope, w_f: &HPolytope) -> ScheduleRunner {
        let rng = match self {
            Schedule::RandomDelta { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        ScheduleRunner {
            schedule: self.clone(),
            w: w.clone(),
            w_f: w_f.clone(),
            rng,
        }
    }
}

/// Stateful stepper over a schedule (holds the random stream for `RandomDelta`).
pub struct ScheduleRunner {
    schedule: Schedule,
    w: HPolytope,
    w_f: HPolytope,
    rng: Option<ChaCha8Rng>,
}

impl ScheduleRunner {
    /// Preview at instant `k + 1` given the preview `current` used at `k`.
    pub fn advance(&mut self, k: usize, current: &DisturbanceSequence) -> Result<DisturbanceSequence> {
        match &self.schedule {
            Schedule::TailUpdate { .. } => Ok(current.tail()),
            Schedule::Scripted { sequences } => Ok(sequences[(k + 1) % sequences.len()].clone()),
            Schedule::RandomDelta { delta, .. } => {
                let rng = self.rng.as_mut().expect("random schedule has a stream");
                let tail = current.tail();
                let n = tail.len();
                let mut out = Vec::with_capacity(n);
                for (i, e) in tail.entries().iter().enumerate() {
                    let d = delta.random_points(1, rng)?.remove(0);
                    let target = if i + 1 == n { &self.w_f } else { &self.w };
                    out.push(project(&(e + d), target)?);
                }
                DisturbanceSequence::new(out)
            }
        }
    }
}

/// Euclidean projection onto a polytope.
pub fn project(v: &Vector, set: &HPolytope) -> Result<Vector> {
    if set.contains(v, 0.0) {
        return Ok(v.clone());
    }
    let d = v.len();
    let qp = QpProblem::new(DMatrix::identity(d, d), -v, set.a().clone(), set.b().clone());
    let sol = solve_qp(&qp)?;
    if !sol.status.is_optimal() {
        return Err(Error::Numerical(format!("projection ended with {:?}", sol.status.tag)));
    }
    Ok(sol.x)
}
