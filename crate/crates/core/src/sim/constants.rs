use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::levelset::{tail_orbit, value_grid, GridSpec};
use super::schedule::Schedule;
use crate::error::{Error, Result};
use crate::mpc::{value, DisturbanceSequence, HorizonConfig, SeqNorm};
use crate::polytope::{halton_points, HPolytope};

/// Sampling settings for the robustness constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstantsSpec {
    /// Halton state samples per preview.
    pub samples: usize,
    /// Extra random admissible previews mixed into the scheduled ones.
    pub random_sequences: usize,
    /// Sampled preview pairs for the continuity envelope.
    pub sigma_pairs: usize,
    /// Relative safety margin on the sampled `c₃`.
    pub margin: f64,
    /// Contraction target in `(γ, 1)`; midpoint when absent.
    pub rho: Option<f64>,
    /// Norm on stacked previews used for `λ` and the envelope.
    pub norm: SeqNorm,
    /// Grid nodes per axis when certifying `α`.
    pub alpha_grid: usize,
    pub seed: u64,
}

impl Default for ConstantsSpec {
    fn default() -> Self {
        Self {
            samples: 400,
            random_sequences: 20,
            sigma_pairs: 600,
            margin: 0.1,
            rho: None,
            norm: SeqNorm::Two,
            alpha_grid: 41,
            seed: 1,
        }
    }
}

/// Monotone step envelope of sampled `|ΔV⁰|` against preview distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SigmaEnvelope {
    /// `(distance, running max of |ΔV⁰|)`, sorted by distance.
    pub points: Vec<(f64, f64)>,
}

impl SigmaEnvelope {
    pub fn from_samples(mut samples: Vec<(f64, f64)>) -> Self {
        samples.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut run = 0.0_f64;
        let points = samples
            .into_iter()
            .map(|(d, v)| {
                run = run.max(v);
                (d, run)
            })
            .collect();
        Self { points }
    }

    /// `σ̂(r) = max{|ΔV⁰| : distance ≤ r}`, zero below the first sample.
    pub fn eval(&self, r: f64) -> f64 {
        self.points
            .iter()
            .take_while(|(d, _)| *d <= r)
            .last()
            .map_or(0.0, |(_, v)| *v)
    }

    /// Largest sampled distance whose envelope value stays at or below `y`.
    pub fn inverse(&self, y: f64) -> f64 {
        self.points
            .iter()
            .take_while(|(_, v)| *v <= y)
            .last()
            .map_or(0.0, |(d, _)| *d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaReport {
    pub two: f64,
    pub inf: f64,
    pub one: f64,
}

impl LambdaReport {
    pub fn get(&self, norm: SeqNorm) -> f64 {
        match norm {
            SeqNorm::Two => self.two,
            SeqNorm::Inf => self.inf,
            SeqNorm::One => self.one,
        }
    }

    fn from_fn(f: impl Fn(SeqNorm) -> Result<f64>) -> Result<Self> {
        Ok(Self {
            two: f(SeqNorm::Two)?,
            inf: f(SeqNorm::Inf)?,
            one: f(SeqNorm::One)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessConstants {
    pub c1: f64,
    pub c2: f64,
    /// Upper bound on `V⁰_N / |x − x_f|²` including the margin.
    pub c3: f64,
    /// Largest sampled ratio before the margin.
    pub c3_sampled: f64,
    pub gamma: f64,
    pub rho: f64,
    pub alpha: f64,
    pub lambda: LambdaReport,
    pub norm: SeqNorm,
    pub sigma_hat: SigmaEnvelope,
    pub feasible_samples: usize,
}

impl RobustnessConstants {
    /// Largest admissible preview variation `σ̂⁻¹((ρ − γ)α)`.
    pub fn lambda_bound(&self) -> f64 {
        self.sigma_hat.inverse((self.rho - self.gamma) * self.alpha)
    }

    /// `(c, δ)` of the exponential state envelope.
    pub fn state_envelope(&self) -> (f64, f64) {
        ((self.c3 / self.c1).sqrt(), self.gamma.sqrt())
    }
}

/// `max_k |w_{k+1} − tail(w_k)|` over a cyclic scripted list.
pub fn lambda_scripted(sequences: &[DisturbanceSequence], norm: SeqNorm) -> f64 {
    let l = sequences.len();
    (0..l)
        .map(|k| sequences[(k + 1) % l].distance(&sequences[k].tail(), norm))
        .fold(0.0, f64::max)
}

/// `max |Δ|` over element-wise changes `Δ_i ∈ delta ∩ (S_i ⊕ −S_i)` with
/// `S_i = W` for `i < N−1` and `W_f` for the last element.
pub fn lambda_delta(delta: &HPolytope, w: &HPolytope, w_f: &HPolytope, horizon: usize, norm: SeqNorm) -> Result<f64> {
    let mut per_element = Vec::with_capacity(horizon);
    for i in 0..horizon {
        let s = if i + 1 == horizon { w_f } else { w };
        let diff = crate::polytope::minkowski_sum(s, &crate::polytope::linear_image(&(-nalgebra::DMatrix::identity(s.dim(), s.dim())), s)?)?;
        let region = delta.intersect(&diff)?;
        let verts = region.vertices()?;
        let best = verts.iter().map(|v| norm.apply(v)).fold(0.0, f64::max);
        per_element.push(best);
    }
    Ok(match norm {
        SeqNorm::Two => per_element.iter().map(|v| v * v).sum::<f64>().sqrt(),
        SeqNorm::Inf => per_element.iter().copied().fold(0.0, f64::max),
        SeqNorm::One => per_element.iter().sum(),
    })
}

/// Previews the schedule can visit, when that family is finite.
pub fn reachable_sequences(schedule: &Schedule) -> Result<Vec<DisturbanceSequence>> {
    match schedule {
        Schedule::Scripted { sequences } => Ok(sequences.clone()),
        Schedule::TailUpdate { initial } => Ok(tail_orbit(initial, initial.len())),
        Schedule::RandomDelta { .. } => Err(Error::InvalidInput(
            "random schedules do not visit a finite family of previews".into(),
        )),
    }
}

pub fn random_sequence<R: Rng>(w: &HPolytope, w_f: &HPolytope, horizon: usize, rng: &mut R) -> Result<DisturbanceSequence> {
    let mut entries = w.random_points(horizon - 1, rng)?;
    entries.extend(w_f.random_points(1, rng)?);
    DisturbanceSequence::new(entries)
}

pub fn compute_constants(cfg: &HorizonConfig, schedule: &Schedule, spec: &ConstantsSpec, beta: f64) -> Result<RobustnessConstants> {
    let ing = &cfg.ingredients;
    let sets = &ing.sets;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (c1, c2) = ing.cost_bounds();
    if !(c1 > 0.0) {
        return Err(Error::InvalidInput("Q must be positive definite for the decay constants".into()));
    }

    let scheduled = match schedule {
        Schedule::RandomDelta { initial, .. } => tail_orbit(initial, initial.len()),
        other => reachable_sequences(other)?,
    };
    let mut seqs = scheduled.clone();
    for _ in 0..spec.random_sequences {
        seqs.push(random_sequence(&sets.w, &sets.w_f, cfg.horizon, &mut rng)?);
    }

    let (lo, hi) = sets.x.bounding_box()?;
    let states: Vec<_> = halton_points(cfg.n(), spec.samples)
        .into_iter()
        .map(|u| &lo + (&hi - &lo).component_mul(&u))
        .collect();

    // c₃ from V⁰ / |x − x_f|² over feasible (x, w) pairs.
    let pairs: Vec<(usize, usize)> = (0..seqs.len()).flat_map(|s| (0..states.len()).map(move |i| (s, i))).collect();
    let ratios: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(s, i)| -> Result<Option<f64>> {
            let w = &seqs[s];
            let x = &states[i];
            let Some(v) = value(x, w, cfg)? else { return Ok(None) };
            let x_f = cfg.equilibrium(w)?.x_f;
            let d2 = (x - x_f).norm_squared();
            Ok(Some(if d2 > 1e-12 { v / d2 } else { 0.0 }))
        })
        .collect::<Result<_>>()?;
    let feasible: Vec<f64> = ratios.into_iter().flatten().collect();
    if feasible.is_empty() {
        return Err(Error::InvalidInput("no feasible samples for the constants".into()));
    }
    let c3_sampled = feasible.iter().copied().fold(0.0, f64::max);
    let c3 = ((1.0 + spec.margin) * c3_sampled).max(c2);
    let gamma = 1.0 - c1 / c3;
    let rho = spec.rho.unwrap_or(0.5 * (gamma + 1.0));
    if !(rho > gamma && rho < 1.0) {
        return Err(Error::InvalidInput(format!("rho = {rho} must lie in (gamma, 1) with gamma = {gamma}")));
    }

    // α: 90% of the smallest V⁰ on feasible grid nodes next to infeasible ones.
    let alpha = if cfg.n() == 2 {
        let mut grid = GridSpec::around(&sets.x)?;
        grid.nx = spec.alpha_grid;
        grid.ny = spec.alpha_grid;
        let mut lowest = f64::INFINITY;
        for w in &scheduled {
            let vals = value_grid(w, &grid, cfg)?;
            for idx in 0..grid.len() {
                let Some(v) = vals[idx] else { continue };
                let (i, j) = (idx % grid.nx, idx / grid.nx);
                let nbrs = [
                    (i > 0).then(|| idx - 1),
                    (i + 1 < grid.nx).then(|| idx + 1),
                    (j > 0).then(|| idx - grid.nx),
                    (j + 1 < grid.ny).then(|| idx + grid.nx),
                ];
                if nbrs.iter().flatten().any(|n| vals[*n].is_none()) {
                    lowest = lowest.min(v);
                }
            }
        }
        (0.9 * lowest).min(beta)
    } else {
        beta
    };

    // σ̂: pairs (x, w), (x, w') with w' on the segment from w to another admissible preview.
    let mut jobs = Vec::with_capacity(spec.sigma_pairs);
    for p in 0..spec.sigma_pairs {
        let a = random_sequence(&sets.w, &sets.w_f, cfg.horizon, &mut rng)?;
        let b = random_sequence(&sets.w, &sets.w_f, cfg.horizon, &mut rng)?;
        let t = 10f64.powf(rng.gen_range(-6.0..0.0));
        let mixed: Vec<_> = a
            .entries()
            .iter()
            .zip(b.entries())
            .map(|(u, v)| u + (v - u) * t)
            .collect();
        jobs.push((states[p % states.len()].clone(), a, DisturbanceSequence::new(mixed)?));
    }
    let samples: Vec<Option<(f64, f64)>> = jobs
        .par_iter()
        .map(|(x, a, b)| -> Result<Option<(f64, f64)>> {
            match (value(x, a, cfg)?, value(x, b, cfg)?) {
                (Some(va), Some(vb)) => Ok(Some((a.distance(b, spec.norm), (va - vb).abs()))),
                _ => Ok(None),
            }
        })
        .collect::<Result<_>>()?;
    let sigma_hat = SigmaEnvelope::from_samples(samples.into_iter().flatten().collect());

    let lambda = match schedule {
        Schedule::Scripted { sequences } => LambdaReport::from_fn(|nm| Ok(lambda_scripted(sequences, nm)))?,
        Schedule::TailUpdate { .. } => LambdaReport {
            two: 0.0,
            inf: 0.0,
            one: 0.0,
        },
        Schedule::RandomDelta { delta, .. } => {
            LambdaReport::from_fn(|nm| lambda_delta(delta, &sets.w, &sets.w_f, cfg.horizon, nm))?
        }
    };

    Ok(RobustnessConstants {
        c1,
        c2,
        c3,
        c3_sampled,
        gamma,
        rho,
        alpha,
        lambda,
        norm: spec.norm,
        sigma_hat,
        feasible_samples: feasible.len(),
    })
}
