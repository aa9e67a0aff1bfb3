//! JSON scenario files tying plant, sets, weights, schedule and run settings
//! together.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConstraintSpec, PlantModel};
use crate::mpc::HorizonConfig;
use crate::numkit::{serde_rows, Mat, Vector};
use crate::polytope::HPolytope;
use crate::sim::{ConstantsSpec, GridSpec, Schedule};
use crate::terminal::{synth_nominal, GainChoice, SynthOptions, TerminalIngredients};

/// The shipped double-integrator scenario.
pub const DEFAULT_SCENARIO: &str = include_str!("../../../scenarios/double_integrator_preview.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetsConfig {
    #[serde(rename = "X")]
    pub x: HPolytope,
    #[serde(rename = "U")]
    pub u: HPolytope,
    #[serde(rename = "W")]
    pub w: HPolytope,
    /// Defaults to `W`.
    #[serde(rename = "W_f", default, skip_serializing_if = "Option::is_none")]
    pub w_f: Option<HPolytope>,
}

impl SetsConfig {
    pub fn to_spec(&self) -> ConstraintSpec {
        ConstraintSpec {
            x: self.x.clone(),
            u: self.u.clone(),
            w: self.w.clone(),
            w_f: self.w_f.clone().unwrap_or_else(|| self.w.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    #[serde(rename = "Q", with = "serde_rows::mat")]
    pub q: Mat,
    #[serde(rename = "S", with = "serde_rows::mat")]
    pub s: Mat,
}

fn default_steps() -> usize {
    50
}

fn default_beta() -> f64 {
    100.0
}

fn default_output_dir() -> String {
    "out".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub plant: PlantModel,
    pub sets: SetsConfig,
    pub weights: WeightsConfig,
    #[serde(default)]
    pub gain: GainChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_u: Option<f64>,
    pub horizon: usize,
    pub schedule: Schedule,
    #[serde(with = "serde_rows::vector")]
    pub x0: Vector,
    /// More starting points for plots; `x0` is always the first.
    #[serde(default, with = "serde_rows::vectors", skip_serializing_if = "Vec::is_empty")]
    pub extra_initial_states: Vec<Vector>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Defaults to 101 × 101 over `X` inflated by 5%.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub constants: ConstantsSpec,
    #[serde(default = "default_output_dir")]
    pub output_dir: String,
}

/// Everything synthesized from a scenario.
#[derive(Debug, Clone)]
pub struct Built {
    pub ingredients: TerminalIngredients,
    pub cfg: HorizonConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn default_example() -> Self {
        Self::from_json(DEFAULT_SCENARIO).expect("shipped scenario parses")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.plant.validate()?;
        let n = self.plant.n();
        let m = self.plant.m();
        self.sets.to_spec().validate(&self.plant)?;
        if self.weights.q.shape() != (n, n) || self.weights.s.shape() != (m, m) {
            return Err(Error::Dimension(format!("Q must be {n}x{n} and S {m}x{m}")));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least 1".into()));
        }
        for (i, x) in std::iter::once(&self.x0).chain(&self.extra_initial_states).enumerate() {
            if x.len() != n {
                return Err(Error::Dimension(format!("initial state {i} has length {}, expected {n}", x.len())));
            }
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidInput("beta must be positive".into()));
        }
        if let Some(g) = &self.grid {
            g.validate()?;
        }
        let spec = self.sets.to_spec();
        self.schedule.validate(&spec.w, &spec.w_f, self.horizon)
    }

    pub fn constraint_spec(&self) -> ConstraintSpec {
        self.sets.to_spec()
    }

    pub fn synth_options(&self) -> SynthOptions {
        SynthOptions {
            gain: self.gain.clone(),
            beta_x: self.beta_x,
            beta_u: self.beta_u,
            ..SynthOptions::default()
        }
    }

    pub fn synthesize(&self) -> Result<TerminalIngredients> {
        synth_nominal(
            &self.plant,
            &self.constraint_spec(),
            &self.weights.q,
            &self.weights.s,
            &self.synth_options(),
        )
    }

    pub fn build(&self) -> Result<Built> {
        let ingredients = self.synthesize()?;
        let cfg = HorizonConfig::new(ingredients.clone(), self.horizon, true)?;
        Ok(Built { ingredients, cfg })
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        match self.grid {
            Some(g) => Ok(g),
            None => GridSpec::around(&self.sets.x),
        }
    }

    pub fn initial_states(&self) -> Vec<Vector> {
        std::iter::once(self.x0.clone()).chain(self.extra_initial_states.iter().cloned()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenario_parses() {
        let s = ScenarioConfig::default_example();
        assert_eq!(s.horizon, 3);
        assert_eq!(s.steps, 50);
        let again = ScenarioConfig::from_json(&s.to_json()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = ScenarioConfig::from_json("{\n  \"name\": \"x\",\n}").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }
}
