use nalgebra::{DMatrix, DVector};

use super::HPolytope;
use crate::error::{Error, Result};
use crate::numkit::{Mat, TOL};

/// Projects `{z : Az ≤ b}` onto its leading `dim − k` coordinates by
/// Fourier-Motzkin elimination of the trailing `k` variables, pruning
/// redundant rows after every step.
pub fn eliminate_trailing(set: &HPolytope, k: usize) -> Result<HPolytope> {
    let d = set.dim();
    if k >= d {
        return Err(Error::Dimension(format!("cannot eliminate {k} of {d} variables")));
    }
    let mut cur = set.canonicalize()?;
    for _ in 0..k {
        if cur.is_empty() {
            return Ok(HPolytope::empty(cur.dim() - 1));
        }
        cur = eliminate_last(&cur)?.canonicalize()?;
    }
    if cur.is_empty() {
        return Ok(HPolytope::empty(d - k));
    }
    Ok(cur)
}

fn eliminate_last(p: &HPolytope) -> Result<HPolytope> {
    let d = p.dim();
    let j = d - 1;
    let (a, b) = (p.a(), p.b());
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..a.nrows() {
        let c = a[(i, j)];
        let scale = a.row(i).amax().max(1.0);
        if c > TOL.zero_row * scale {
            pos.push(i);
        } else if c < -TOL.zero_row * scale {
            neg.push(i);
        } else {
            rows.push(((0..j).map(|c| a[(i, c)]).collect(), b[i]));
        }
    }
    for &ip in &pos {
        for &in_ in &neg {
            let cp = a[(ip, j)];
            let cn = -a[(in_, j)];
            let row: Vec<f64> = (0..j).map(|c| a[(ip, c)] / cp + a[(in_, c)] / cn).collect();
            rows.push((row, b[ip] / cp + b[in_] / cn));
        }
    }
    if rows.is_empty() {
        return Ok(HPolytope::universe(j));
    }
    let am = DMatrix::from_fn(rows.len(), j, |r, c| rows[r].0[c]);
    let bm = DVector::from_fn(rows.len(), |r, _| rows[r].1);
    HPolytope::new(am, bm)
}

/// `{x + y : x ∈ p, y ∈ q}` via projection of the lifted set
/// `{(z, y) : y ∈ q, z − y ∈ p}`.
pub fn minkowski_sum(p: &HPolytope, q: &HPolytope) -> Result<HPolytope> {
    if p.dim() != q.dim() {
        return Err(Error::Dimension("Minkowski sum of sets in different dimensions".into()));
    }
    let d = p.dim();
    if p.is_empty() || q.is_empty() {
        return Ok(HPolytope::empty(d));
    }
    if !p.is_bounded() || !q.is_bounded() {
        return Err(Error::Unbounded);
    }
    let (qp, qq) = (p.num_constraints(), q.num_constraints());
    let mut a = DMatrix::zeros(qp + qq, 2 * d);
    let mut b = DVector::zeros(qp + qq);
    a.view_mut((0, 0), (qp, d)).copy_from(p.a());
    a.view_mut((0, d), (qp, d)).copy_from(&(-p.a()));
    b.rows_mut(0, qp).copy_from(p.b());
    a.view_mut((qp, d), (qq, d)).copy_from(q.a());
    b.rows_mut(qp, qq).copy_from(q.b());
    eliminate_trailing(&HPolytope::new(a, b)?, d)
}

/// `{Mx : x ∈ p}`.
pub fn linear_image(m: &Mat, p: &HPolytope) -> Result<HPolytope> {
    if m.ncols() != p.dim() {
        return Err(Error::Dimension(format!(
            "map takes {} inputs, set lives in dimension {}",
            m.ncols(),
            p.dim()
        )));
    }
    let n = m.nrows();
    let d = p.dim();
    if p.is_empty() {
        return Ok(HPolytope::empty(n));
    }
    if n == d {
        let svd = m.clone().svd(false, false);
        let smin = svd.singular_values.min();
        if smin > 0.0 && svd.singular_values.max() / smin < 1e8 {
            let inv = crate::numkit::inverse(m)?;
            return p.affine_preimage(&inv);
        }
    }
    if !p.is_bounded() {
        return Err(Error::Unbounded);
    }
    // Lifted variables (x, y) with y ∈ p and x = My.
    let q = p.num_constraints();
    let mut a = DMatrix::zeros(q + 2 * n, n + d);
    let mut b = DVector::zeros(q + 2 * n);
    a.view_mut((0, n), (q, d)).copy_from(p.a());
    b.rows_mut(0, q).copy_from(p.b());
    for i in 0..n {
        a[(q + 2 * i, i)] = 1.0;
        a[(q + 2 * i + 1, i)] = -1.0;
        for j in 0..d {
            a[(q + 2 * i, n + j)] = -m[(i, j)];
            a[(q + 2 * i + 1, n + j)] = m[(i, j)];
        }
    }
    eliminate_trailing(&HPolytope::new(a, b)?, d)
}
