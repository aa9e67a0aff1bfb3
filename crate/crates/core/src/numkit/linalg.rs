use nalgebra::{DMatrix, DVector};

use super::{Mat, Vector, TOL};
use crate::error::{Error, Result};

pub fn identity(n: usize) -> Mat {
    DMatrix::identity(n, n)
}

pub fn vec_from_slice(v: &[f64]) -> Vector {
    DVector::from_column_slice(v)
}

/// Builds a matrix from row vectors, rejecting ragged or non-finite input.
pub fn mat_from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Dimension("matrix has no rows".into()));
    }
    let c = rows[0].len();
    if c == 0 {
        return Err(Error::Dimension("matrix has no columns".into()));
    }
    if let Some(bad) = rows.iter().position(|row| row.len() != c) {
        return Err(Error::Dimension(format!(
            "row {bad} has {} entries, expected {c}",
            rows[bad].len()
        )));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix entries must be finite".into()));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn is_symmetric(m: &Mat, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn mat_pow(m: &Mat, k: usize) -> Mat {
    let mut out = identity(m.nrows());
    for _ in 0..k {
        out = &out * m;
    }
    out
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eigenvalue(m: &Mat) -> f64 {
    symmetrize(m).symmetric_eigenvalues().min()
}

/// Largest eigenvalue of the symmetric part of `m`.
pub fn max_eigenvalue(m: &Mat) -> f64 {
    symmetrize(m).symmetric_eigenvalues().max()
}

/// Largest eigenvalue modulus of a square matrix.
///
/// Orders one and two use the characteristic polynomial directly, which keeps
/// nilpotent and defective cases exact where a Schur iteration would only
/// resolve them to about the square root of machine precision. Larger
/// matrices detect nilpotency first and fall back to the real Schur form.
pub fn spectral_radius(f: &Mat) -> f64 {
    assert!(f.is_square(), "spectral radius needs a square matrix");
    let n = f.nrows();
    match n {
        0 => 0.0,
        1 => f[(0, 0)].abs(),
        2 => {
            let tr = f[(0, 0)] + f[(1, 1)];
            let det = f[(0, 0)] * f[(1, 1)] - f[(0, 1)] * f[(1, 0)];
            let disc = 0.25 * tr * tr - det;
            if disc >= 0.0 {
                let s = disc.sqrt();
                (0.5 * tr + s).abs().max((0.5 * tr - s).abs())
            } else {
                det.sqrt()
            }
        }
        _ => {
            let scale = f.amax().max(1.0);
            if mat_pow(&(f / scale), n).amax() <= 1e-15 {
                return 0.0;
            }
            f.clone()
                .complex_eigenvalues()
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max)
        }
    }
}

/// Inverse with a conditioning guard and one step of iterative refinement.
pub fn inverse(f: &Mat) -> Result<Mat> {
    if !f.is_square() {
        return Err(Error::Dimension(format!(
            "cannot invert a {}x{} matrix",
            f.nrows(),
            f.ncols()
        )));
    }
    let n = f.nrows();
    let sv = f.clone().svd(false, false).singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond < TOL.max_condition) {
        return Err(Error::Singular { cond });
    }
    let mut x = f
        .clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { cond })?;
    let eye = identity(n);
    let r = &eye - f * &x;
    x += &x * r;
    Ok(x)
}
