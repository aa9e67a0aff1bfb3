//! Dense numerical kernels: small-matrix helpers, discrete Lyapunov and
//! Riccati solvers, and an active-set LP/QP solver.
//!
//! Everything here works on `nalgebra` dynamic matrices. Problem sizes in this
//! crate are tiny (a handful of states, horizons of a few steps) so all
//! routines favour exactness and determinism over asymptotic speed.

mod linalg;
mod qp;
mod riccati;
pub mod serde_rows;

use nalgebra::{DMatrix, DVector};

pub use linalg::{
    identity, inverse, is_symmetric, mat_from_rows, mat_pow, min_eigenvalue, max_eigenvalue,
    spectral_radius, symmetrize, vec_from_slice,
};
pub use qp::{
    solve_lp, solve_lp_with, solve_qp, solve_qp_with, LpProblem, QpProblem, QpSolution,
    SolveStatus, SolveTag, SolverOptions,
};
pub use riccati::{
    controllability_matrix, dare_residual, is_reachable, solve_dare, solve_discrete_lyapunov,
    DareSolution,
};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical tolerances shared by every module.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Primal feasibility and KKT residual accepted by the LP/QP solver.
    pub solver: f64,
    /// Residual bound for the discrete Lyapunov equation.
    pub lyapunov_residual: f64,
    /// Convergence threshold of the Riccati doubling iteration.
    pub dare_step: f64,
    pub dare_cap: usize,
    /// Accepted DARE residual relative to `|AᵀPA| + |P| + |Q|`.
    pub dare_residual: f64,
    /// Slack allowed on support-function gaps in containment tests.
    pub containment: f64,
    /// Iteration cap of the maximal admissible invariant set recursion.
    pub invariant_cap: usize,
    pub mrpi_eps: f64,
    /// Matrices with spectral radius above `1 - stability_margin` count as unstable.
    pub stability_margin: f64,
    pub max_condition: f64,
    /// Rows with a smaller Euclidean norm are treated as identically zero.
    pub zero_row: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        solver: 1e-8,
        lyapunov_residual: 1e-10,
        dare_step: 1e-12,
        dare_cap: 10_000,
        dare_residual: 1e-8,
        containment: 1e-9,
        invariant_cap: 500,
        mrpi_eps: 1e-3,
        stability_margin: 1e-9,
        max_condition: 1e12,
        zero_row: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub(crate) const TOL: Tolerances = Tolerances::DEFAULT;
