use nalgebra::{DMatrix, DVector};

use super::{linalg, Mat, TOL};
use crate::error::{Error, Result};

const REFINE_STEPS: usize = 500;

/// Solves `FᵀPF − P + Q̄ = 0` by vectorising to `(Fᵀ⊗Fᵀ − I)·vec(P) = −vec(Q̄)`.
pub fn solve_discrete_lyapunov(f: &Mat, qbar: &Mat) -> Result<Mat> {
    let n = f.nrows();
    if !f.is_square() || qbar.nrows() != n || qbar.ncols() != n {
        return Err(Error::Dimension(format!(
            "Lyapunov needs square F and matching Q̄, got {}x{} and {}x{}",
            f.nrows(),
            f.ncols(),
            qbar.nrows(),
            qbar.ncols()
        )));
    }
    let qscale = qbar.amax().max(1.0);
    if !linalg::is_symmetric(qbar, 1e-10 * qscale) {
        return Err(Error::InvalidInput("Q̄ must be symmetric".into()));
    }
    let min_eig = linalg::min_eigenvalue(qbar);
    if min_eig < -1e-9 * qscale {
        return Err(Error::NotPsd { min_eig });
    }
    let radius = linalg::spectral_radius(f);
    if radius >= 1.0 - TOL.stability_margin {
        return Err(Error::Unstable { radius });
    }

    let ft = f.transpose();
    let m = ft.kronecker(&ft) - DMatrix::<f64>::identity(n * n, n * n);
    let rhs = -DVector::from_column_slice(qbar.as_slice());
    let lu = m.clone().lu();
    let mut sol = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov operator".into()))?;
    let r = &rhs - &m * &sol;
    if let Some(corr) = lu.solve(&r) {
        sol += corr;
    }
    let p = linalg::symmetrize(&DMatrix::from_column_slice(n, n, sol.as_slice()));
    let residual = (&ft * &p * f - &p + qbar).amax();
    if residual > TOL.lyapunov_residual * p.amax().max(1.0) {
        return Err(Error::Numerical(format!("Lyapunov residual {residual:e}")));
    }
    Ok(p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DareSolution {
    pub p: Mat,
    /// Optimal feedback in the `u = −Kx` convention.
    pub k: Mat,
    pub iterations: usize,
    pub residual: f64,
}

/// Riccati residual `AᵀPA − P − AᵀPB(S + BᵀPB)⁻¹BᵀPA + Q`.
pub fn dare_residual(a: &Mat, b: &Mat, q: &Mat, s: &Mat, p: &Mat) -> Result<f64> {
    let k = lqr_gain(a, b, s, p)?;
    let r = a.transpose() * p * a - p - a.transpose() * p * b * k + q;
    Ok(r.amax())
}

fn lqr_gain(a: &Mat, b: &Mat, s: &Mat, p: &Mat) -> Result<Mat> {
    let bt = b.transpose();
    let lhs = s + &bt * p * b;
    let rhs = &bt * p * a;
    lhs.clone()
        .cholesky()
        .map(|ch| ch.solve(&rhs))
        .or_else(|| lhs.lu().solve(&rhs))
        .ok_or_else(|| Error::Numerical("S + BᵀPB is singular".into()))
}

/// Stabilising solution of the discrete algebraic Riccati equation by the
/// structure-preserving doubling iteration.
pub fn solve_dare(a: &Mat, b: &Mat, q: &Mat, s: &Mat) -> Result<DareSolution> {
    let n = a.nrows();
    let m = b.ncols();
    if !a.is_square() || b.nrows() != n || q.shape() != (n, n) || s.shape() != (m, m) {
        return Err(Error::Dimension("DARE data has inconsistent shapes".into()));
    }
    if !linalg::is_symmetric(q, 1e-10 * q.amax().max(1.0)) || !linalg::is_symmetric(s, 1e-10 * s.amax().max(1.0)) {
        return Err(Error::InvalidInput("Q and S must be symmetric".into()));
    }
    let qmin = linalg::min_eigenvalue(q);
    if qmin < -1e-9 * q.amax().max(1.0) {
        return Err(Error::NotPsd { min_eig: qmin });
    }
    let smin = linalg::min_eigenvalue(s);
    if smin <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "input weight must be positive definite (min eigenvalue {smin:e})"
        )));
    }
    if !is_reachable(a, b) {
        return Err(Error::InvalidInput("(A, B) is not reachable".into()));
    }

    let s_inv = linalg::inverse(s)?;
    let eye = linalg::identity(n);
    let mut ak = a.clone();
    let mut gk = b * s_inv * b.transpose();
    let mut hk = q.clone();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < TOL.dare_cap {
        iterations += 1;
        let w = &eye + &gk * &hk;
        let lu = w.lu();
        let x1 = lu
            .solve(&ak)
            .ok_or_else(|| Error::Numerical("singular doubling step".into()))?;
        let x2 = lu
            .solve(&gk)
            .ok_or_else(|| Error::Numerical("singular doubling step".into()))?;
        let h_next = linalg::symmetrize(&(&hk + ak.transpose() * &hk * &x1));
        let g_next = linalg::symmetrize(&(&gk + &ak * x2 * ak.transpose()));
        let a_next = &ak * x1;
        let step = (&h_next - &hk).amax() / h_next.amax().max(1.0);
        hk = h_next;
        gk = g_next;
        ak = a_next;
        if !step.is_finite() {
            break;
        }
        if step <= TOL.dare_step {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::IterationCap {
            cap: TOL.dare_cap,
            iterations,
        });
    }
    let (p, residual) = refine(a, b, q, s, hk)?;
    let k = lqr_gain(a, b, s, &p)?;
    let scale = (a.transpose() * &p * a).amax() + p.amax() + q.amax();
    if residual > TOL.dare_residual * scale.max(1.0) {
        return Err(Error::Numerical(format!("Riccati residual {residual:e}")));
    }
    let radius = linalg::spectral_radius(&(a - b * &k));
    if radius >= 1.0 {
        return Err(Error::Unstable { radius });
    }
    Ok(DareSolution {
        p,
        k,
        iterations,
        residual,
    })
}

/// Polishes the doubling result with plain Riccati steps, which contract at
/// `ρ(A − BK)²` near the solution, keeping the iterate with the smallest residual.
fn refine(a: &Mat, b: &Mat, q: &Mat, s: &Mat, p0: Mat) -> Result<(Mat, f64)> {
    let mut best_res = dare_residual(a, b, q, s, &p0)?;
    let mut best = p0;
    let mut p = best.clone();
    let mut stalled = 0;
    for _ in 0..REFINE_STEPS {
        let k = lqr_gain(a, b, s, &p)?;
        p = linalg::symmetrize(&(a.transpose() * &p * (a - b * &k) + q));
        let res = dare_residual(a, b, q, s, &p)?;
        if res < best_res {
            best_res = res;
            best = p.clone();
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 10 {
                break;
            }
        }
    }
    Ok((best, best_res))
}

pub fn controllability_matrix(a: &Mat, b: &Mat) -> Mat {
    let n = a.nrows();
    let m = b.ncols();
    let mut c = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for i in 0..n {
        c.view_mut((0, i * m), (n, m)).copy_from(&blk);
        blk = a * blk;
    }
    c
}

pub fn is_reachable(a: &Mat, b: &Mat) -> bool {
    let c = controllability_matrix(a, b);
    let sv = c.svd(false, false).singular_values;
    let smax = sv.max();
    sv.iter().filter(|s| **s > 1e-10 * smax.max(1.0)).count() == a.nrows()
}
