//! Plant matrices and constraint sets shared by every controller component.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{is_reachable, serde_rows, Mat, Vector};
use crate::polytope::HPolytope;

/// `x⁺ = Ax + Bu + w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    #[serde(rename = "A", with = "serde_rows::mat")]
    pub a: Mat,
    #[serde(rename = "B", with = "serde_rows::mat")]
    pub b: Mat,
}

impl PlantModel {
    pub fn new(a: Mat, b: Mat) -> Result<Self> {
        let p = Self { a, b };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.a.is_square() {
            return Err(Error::Dimension(format!(
                "A must be square, got {}x{}",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if self.b.nrows() != self.a.nrows() {
            return Err(Error::Dimension(format!(
                "B has {} rows but A has {}",
                self.b.nrows(),
                self.a.nrows()
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    pub fn step(&self, x: &Vector, u: &Vector, w: &Vector) -> Vector {
        &self.a * x + &self.b * u + w
    }

    pub fn is_reachable(&self) -> bool {
        is_reachable(&self.a, &self.b)
    }
}

/// State, input, disturbance and terminal-disturbance sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSpec {
    #[serde(rename = "X")]
    pub x: HPolytope,
    #[serde(rename = "U")]
    pub u: HPolytope,
    #[serde(rename = "W")]
    pub w: HPolytope,
    #[serde(rename = "W_f")]
    pub w_f: HPolytope,
}

impl ConstraintSpec {
    /// Checks dimensions against the plant and the set assumptions:
    /// `X`, `U` PC-sets, `W` and `W_f` C-sets with `W_f ⊆ W`.
    pub fn validate(&self, plant: &PlantModel) -> Result<()> {
        let (n, m) = (plant.n(), plant.m());
        for (name, set, d) in [("X", &self.x, n), ("U", &self.u, m), ("W", &self.w, n), ("W_f", &self.w_f, n)] {
            if set.dim() != d {
                return Err(Error::Dimension(format!("{name} has dimension {}, expected {d}", set.dim())));
            }
        }
        for (name, set) in [("X", &self.x), ("U", &self.u)] {
            if !set.flags().is_pc_set {
                return Err(Error::InvalidInput(format!("{name} must be a PC-set")));
            }
        }
        for (name, set) in [("W", &self.w), ("W_f", &self.w_f)] {
            if !set.flags().is_c_set {
                return Err(Error::InvalidInput(format!("{name} must be a C-set")));
            }
        }
        if !self.w.contains_set(&self.w_f)? {
            return Err(Error::InvalidInput("W_f must lie inside W".into()));
        }
        Ok(())
    }
}
