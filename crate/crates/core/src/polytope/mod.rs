//! Convex polytopes in halfspace form `{x : Ax ≤ b}`.
//!
//! Sets are kept as plain inequality systems. Operations that can introduce
//! redundant rows (intersection, preimage, projection) canonicalise their
//! result: rows are scaled to unit norm, duplicates merged and every row
//! that is implied by the others is removed with one LP per row. The empty
//! set is an explicit flag carried alongside the infeasible row `0 ≤ −1`.

mod invariant;
mod projection;
mod sampling;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numkit::{solve_lp, LpProblem, Mat, SolveTag, Vector, TOL};

pub use invariant::{max_admissible_invariant, mrpi_outer_approx, InvariantSet, MrpiApprox};
pub use projection::{eliminate_trailing, linear_image, minkowski_sum};
pub use sampling::{halton, halton_points, HaltonSequence};

#[derive(Clone, PartialEq)]
pub struct HPolytope {
    a: Mat,
    b: Vector,
    empty: bool,
}

/// Structural properties of a set used to check standing assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SetFlags {
    /// Compact, convex, origin in the interior.
    pub is_pc_set: bool,
    /// Compact, convex, origin contained.
    pub is_c_set: bool,
}

impl HPolytope {
    pub fn new(a: Mat, b: Vector) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "{} constraint rows but {} bounds",
                a.nrows(),
                b.len()
            )));
        }
        if a.ncols() == 0 {
            return Err(Error::Dimension("polytope of dimension zero".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("polytope data must be finite".into()));
        }
        let empty = (0..a.nrows()).any(|i| a.row(i).norm() < TOL.zero_row && b[i] < -TOL.containment);
        if empty {
            return Ok(Self::empty(a.ncols()));
        }
        Ok(Self { a, b, empty: false })
    }

    pub fn from_rows(rows: &[Vec<f64>], b: &[f64]) -> Result<Self> {
        let a = crate::numkit::mat_from_rows(rows)?;
        Self::new(a, DVector::from_column_slice(b))
    }

    /// The empty set in `dim` dimensions, stored as `0 ≤ −1`.
    pub fn empty(dim: usize) -> Self {
        Self {
            a: DMatrix::zeros(1, dim),
            b: DVector::from_element(1, -1.0),
            empty: true,
        }
    }

    /// All of `ℝ^dim` (no constraints).
    pub fn universe(dim: usize) -> Self {
        Self {
            a: DMatrix::zeros(0, dim),
            b: DVector::zeros(0),
            empty: false,
        }
    }

    /// Axis-aligned box `lower ≤ x ≤ upper`.
    pub fn from_box(lower: &[f64], upper: &[f64]) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Dimension("box bounds differ in length".into()));
        }
        let d = lower.len();
        let mut a = DMatrix::zeros(2 * d, d);
        let mut b = DVector::zeros(2 * d);
        for i in 0..d {
            a[(2 * i, i)] = 1.0;
            b[2 * i] = upper[i];
            a[(2 * i + 1, i)] = -1.0;
            b[2 * i + 1] = -lower[i];
        }
        Self::new(a, b)
    }

    /// `{x : ‖x‖∞ ≤ r}`.
    pub fn hypercube(dim: usize, r: f64) -> Self {
        Self::from_box(&vec![-r; dim], &vec![r; dim]).expect("valid box")
    }

    pub fn singleton(point: &Vector) -> Self {
        let p: Vec<f64> = point.iter().copied().collect();
        Self::from_box(&p, &p).expect("valid point")
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &Mat {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        !self.empty && (&self.a * x - &self.b).iter().all(|v| *v <= tol)
    }

    /// Largest violation `max(Ax − b)` (negative inside).
    pub fn violation(&self, x: &Vector) -> f64 {
        if self.a.nrows() == 0 {
            return f64::NEG_INFINITY;
        }
        (&self.a * x - &self.b).max()
    }

    fn feasibility(&self) -> Result<bool> {
        if self.empty {
            return Ok(false);
        }
        if self.a.nrows() == 0 {
            return Ok(true);
        }
        let lp = LpProblem {
            c: DVector::zeros(self.dim()),
            a: self.a.clone(),
            b: self.b.clone(),
        };
        match solve_lp(&lp)?.status.tag {
            SolveTag::Optimal => Ok(true),
            SolveTag::Infeasible => Ok(false),
            SolveTag::Unbounded => Ok(true),
            SolveTag::NumericalFailure => Err(Error::Numerical("feasibility LP failed".into())),
        }
    }

    /// Unit-normalised, duplicate-free, irredundant representation of the
    /// same point set.
    pub fn canonicalize(&self) -> Result<Self> {
        if self.empty {
            return Ok(Self::empty(self.dim()));
        }
        let d = self.dim();
        let mut rows: Vec<(Vector, f64)> = Vec::with_capacity(self.a.nrows());
        for i in 0..self.a.nrows() {
            let r = self.a.row(i).transpose();
            let n = r.norm();
            if n < TOL.zero_row {
                if self.b[i] < -TOL.containment {
                    return Ok(Self::empty(d));
                }
                continue;
            }
            let (r, bi) = (r / n, self.b[i] / n);
            match rows.iter_mut().find(|(q, _)| (q - &r).amax() <= 1e-12) {
                Some(existing) => existing.1 = existing.1.min(bi),
                None => rows.push((r, bi)),
            }
        }
        for (i, (ri, bi)) in rows.iter().enumerate() {
            for (rj, bj) in rows.iter().skip(i + 1) {
                if (ri + rj).amax() <= 1e-12 && bi + bj < -TOL.containment {
                    return Ok(Self::empty(d));
                }
            }
        }
        let raw = Self::stack(d, &rows);
        if !raw.feasibility()? {
            return Ok(Self::empty(d));
        }

        let mut keep = vec![true; rows.len()];
        for i in 0..rows.len() {
            let others: Vec<(Vector, f64)> = rows
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i && keep[*j])
                .map(|(_, r)| r.clone())
                .collect();
            if others.is_empty() {
                continue;
            }
            let sub = Self::stack(d, &others);
            let lp = LpProblem {
                c: -rows[i].0.clone(),
                a: sub.a,
                b: sub.b,
            };
            let sol = solve_lp(&lp)?;
            if sol.status.tag == SolveTag::Optimal && -sol.value <= rows[i].1 + TOL.containment {
                keep[i] = false;
            }
        }
        let kept: Vec<(Vector, f64)> = rows
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(r, _)| r)
            .collect();
        Ok(Self::stack(d, &kept))
    }

    fn stack(d: usize, rows: &[(Vector, f64)]) -> Self {
        let a = DMatrix::from_fn(rows.len(), d, |i, j| rows[i].0[j]);
        let b = DVector::from_fn(rows.len(), |i, _| rows[i].1);
        Self { a, b, empty: false }
    }

    pub fn intersect(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        if self.empty || other.empty {
            return Ok(Self::empty(self.dim()));
        }
        let d = self.dim();
        let q = self.a.nrows() + other.a.nrows();
        let mut a = DMatrix::zeros(q, d);
        a.view_mut((0, 0), (self.a.nrows(), d)).copy_from(&self.a);
        a.view_mut((self.a.nrows(), 0), (other.a.nrows(), d)).copy_from(&other.a);
        let mut b = DVector::zeros(q);
        b.rows_mut(0, self.b.len()).copy_from(&self.b);
        b.rows_mut(self.b.len(), other.b.len()).copy_from(&other.b);
        Self { a, b, empty: false }.canonicalize()
    }

    /// `{x : Mx ∈ self}` for `M : ℝ^k → ℝ^dim`.
    pub fn affine_preimage(&self, m: &Mat) -> Result<Self> {
        if m.nrows() != self.dim() {
            return Err(Error::Dimension(format!(
                "map has {} rows, set lives in dimension {}",
                m.nrows(),
                self.dim()
            )));
        }
        if self.empty {
            return Ok(Self::empty(m.ncols()));
        }
        Self {
            a: &self.a * m,
            b: self.b.clone(),
            empty: false,
        }
        .canonicalize()
    }

    /// `{x : x − t ∈ self}`.
    pub fn translate(&self, t: &Vector) -> Result<Self> {
        if t.len() != self.dim() {
            return Err(Error::Dimension("translation has the wrong length".into()));
        }
        if self.empty {
            return Ok(self.clone());
        }
        Ok(Self {
            a: self.a.clone(),
            b: &self.b + &self.a * t,
            empty: false,
        })
    }

    /// `s·self` for a set containing the origin.
    pub fn scale(&self, s: f64) -> Result<Self> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidInput(format!("scale factor {s} must be nonnegative")));
        }
        if self.empty {
            return Ok(self.clone());
        }
        if self.b.iter().any(|v| *v < -TOL.containment) {
            return Err(Error::InvalidInput("scaling needs a set containing the origin".into()));
        }
        Ok(Self {
            a: self.a.clone(),
            b: &self.b * s,
            empty: false,
        })
    }

    /// Support function `max{dᵀx : x ∈ self}`.
    pub fn support(&self, d: &Vector) -> Result<f64> {
        if d.len() != self.dim() {
            return Err(Error::Dimension("direction has the wrong length".into()));
        }
        if self.empty {
            return Err(Error::EmptySet);
        }
        if self.a.nrows() == 0 {
            return if d.amax() == 0.0 { Ok(0.0) } else { Err(Error::Unbounded) };
        }
        let lp = LpProblem {
            c: -d.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
        };
        let sol = solve_lp(&lp)?;
        match sol.status.tag {
            SolveTag::Optimal => Ok(if d.amax() == 0.0 { 0.0 } else { -sol.value }),
            SolveTag::Infeasible => Err(Error::EmptySet),
            SolveTag::Unbounded => Err(Error::Unbounded),
            SolveTag::NumericalFailure => Err(Error::Numerical(format!(
                "support LP failed (residual {:e})",
                sol.status.kkt_residual
            ))),
        }
    }

    /// Maximiser of `dᵀx`, for sampling extreme points.
    pub fn support_point(&self, d: &Vector) -> Result<Vector> {
        if self.empty {
            return Err(Error::EmptySet);
        }
        let lp = LpProblem {
            c: -d.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
        };
        let sol = solve_lp(&lp)?;
        match sol.status.tag {
            SolveTag::Optimal => Ok(sol.x),
            SolveTag::Unbounded => Err(Error::Unbounded),
            SolveTag::Infeasible => Err(Error::EmptySet),
            SolveTag::NumericalFailure => Err(Error::Numerical("support LP failed".into())),
        }
    }

    /// True iff `other ⊆ self`, decided facet by facet through support functions.
    pub fn contains_set(&self, other: &Self) -> Result<bool> {
        self.same_dim(other)?;
        if other.empty {
            return Ok(true);
        }
        if self.empty {
            return Ok(false);
        }
        for i in 0..self.a.nrows() {
            let dir = self.a.row(i).transpose();
            match other.support(&dir) {
                Ok(h) if h <= self.b[i] + TOL.containment => {}
                Ok(_) | Err(Error::Unbounded) => return Ok(false),
                Err(Error::EmptySet) => return Ok(true),
                Err(e) => return Err(e),
            }
        }
        Ok(true)
    }

    /// Largest facet gap `max_i (h_other(a_i) − b_i)`; positive when `other ⊄ self`.
    pub fn containment_gap(&self, other: &Self) -> Result<f64> {
        self.same_dim(other)?;
        let mut gap = f64::NEG_INFINITY;
        for i in 0..self.a.nrows() {
            let h = other.support(&self.a.row(i).transpose())?;
            gap = gap.max(h - self.b[i]);
        }
        Ok(gap)
    }

    /// Smallest `α ≥ 0` with `other ⊆ α·self`; `self` must contain the origin in its interior.
    pub fn min_scale_containment(&self, other: &Self) -> Result<f64> {
        self.same_dim(other)?;
        if other.empty {
            return Ok(0.0);
        }
        let mut alpha = 0.0_f64;
        for i in 0..self.a.nrows() {
            let h = other.support(&self.a.row(i).transpose())?;
            let bi = self.b[i];
            let ratio = if bi > TOL.containment {
                h / bi
            } else if h <= TOL.containment {
                0.0
            } else {
                f64::INFINITY
            };
            alpha = alpha.max(ratio);
        }
        Ok(alpha)
    }

    pub fn is_bounded(&self) -> bool {
        if self.empty {
            return true;
        }
        (0..self.dim()).all(|j| {
            let mut e = DVector::zeros(self.dim());
            e[j] = 1.0;
            self.support(&e).is_ok() && self.support(&(-e)).is_ok()
        })
    }

    /// Per-coordinate `(lower, upper)` bounds.
    pub fn bounding_box(&self) -> Result<(Vector, Vector)> {
        let d = self.dim();
        let mut lo = DVector::zeros(d);
        let mut hi = DVector::zeros(d);
        for j in 0..d {
            let mut e = DVector::zeros(d);
            e[j] = 1.0;
            hi[j] = self.support(&e)?;
            lo[j] = -self.support(&(-e))?;
        }
        Ok((lo, hi))
    }

    pub fn flags(&self) -> SetFlags {
        if self.empty || !self.is_bounded() {
            return SetFlags {
                is_pc_set: false,
                is_c_set: false,
            };
        }
        let is_c_set = self.b.iter().all(|v| *v >= -TOL.containment);
        let is_pc_set = is_c_set && self.b.iter().all(|v| *v > TOL.containment);
        SetFlags { is_pc_set, is_c_set }
    }

    /// Centre and radius of the largest inscribed ball.
    pub fn chebyshev_center(&self) -> Result<(Vector, f64)> {
        if self.empty {
            return Err(Error::EmptySet);
        }
        let d = self.dim();
        let q = self.a.nrows();
        let mut a = DMatrix::zeros(q + 2, d + 1);
        let mut b = DVector::zeros(q + 2);
        for i in 0..q {
            for j in 0..d {
                a[(i, j)] = self.a[(i, j)];
            }
            a[(i, d)] = self.a.row(i).norm();
            b[i] = self.b[i];
        }
        a[(q, d)] = -1.0;
        a[(q + 1, d)] = 1.0;
        b[q + 1] = 1e6;
        let mut c = DVector::zeros(d + 1);
        c[d] = -1.0;
        let sol = solve_lp(&LpProblem { c, a, b })?;
        match sol.status.tag {
            SolveTag::Optimal => Ok((sol.x.rows(0, d).into_owned(), sol.x[d])),
            SolveTag::Infeasible => Err(Error::EmptySet),
            _ => Err(Error::Numerical("Chebyshev centre LP failed".into())),
        }
    }

    /// Chebyshev centre of each facet, used as boundary sample points.
    pub fn facet_centers(&self) -> Result<Vec<Vector>> {
        let d = self.dim();
        let q = self.a.nrows();
        let mut out = Vec::with_capacity(q);
        for i in 0..q {
            let mut a = DMatrix::zeros(q + 1, d + 1);
            let mut b = DVector::zeros(q + 1);
            for k in 0..q {
                for j in 0..d {
                    a[(k, j)] = self.a[(k, j)];
                }
                if k != i {
                    a[(k, d)] = self.a.row(k).norm();
                }
                b[k] = self.b[k];
            }
            a[(q, d)] = -1.0;
            let mut c = DVector::zeros(d + 1);
            c[d] = -1.0;
            let mut e = DMatrix::zeros(1, d + 1);
            for j in 0..d {
                e[(0, j)] = self.a[(i, j)];
            }
            let p = crate::numkit::QpProblem::new(DMatrix::zeros(d + 1, d + 1), c, a, b)
                .with_equalities(e, DVector::from_element(1, self.b[i]));
            let sol = crate::numkit::solve_qp(&p)?;
            if sol.status.is_optimal() {
                out.push(sol.x.rows(0, d).into_owned());
            }
        }
        Ok(out)
    }

    /// All vertices by brute force over `d`-row subsets; meant for the small
    /// sets used here (few rows, dimension ≤ 6).
    pub fn vertices(&self) -> Result<Vec<Vector>> {
        if self.empty {
            return Ok(Vec::new());
        }
        let canon = self.canonicalize()?;
        if canon.empty {
            return Ok(Vec::new());
        }
        let d = canon.dim();
        let q = canon.a.nrows();
        if q < d {
            return Err(Error::Unbounded);
        }
        let mut out: Vec<Vector> = Vec::new();
        let mut idx: Vec<usize> = (0..d).collect();
        loop {
            let m = DMatrix::from_fn(d, d, |i, j| canon.a[(idx[i], j)]);
            let rhs = DVector::from_fn(d, |i, _| canon.b[idx[i]]);
            let svd = m.clone().svd(false, false);
            if svd.singular_values.min() > 1e-10 {
                if let Some(p) = m.lu().solve(&rhs) {
                    if canon.contains(&p, 1e-9) && !out.iter().any(|v| (v - &p).amax() < 1e-9) {
                        out.push(p);
                    }
                }
            }
            // Next combination in lexicographic order.
            let mut k = d;
            while k > 0 && idx[k - 1] == q - d + k - 1 {
                k -= 1;
            }
            if k == 0 {
                break;
            }
            idx[k - 1] += 1;
            for j in k..d {
                idx[j] = idx[j - 1] + 1;
            }
        }
        Ok(out)
    }

    /// Vertices of a bounded planar polytope in counter-clockwise order.
    pub fn vertices_2d(&self) -> Result<Vec<Vector>> {
        if self.dim() != 2 {
            return Err(Error::Dimension("vertex listing is only implemented in the plane".into()));
        }
        if self.empty {
            return Ok(Vec::new());
        }
        let canon = self.canonicalize()?;
        if canon.empty {
            return Ok(Vec::new());
        }
        let q = canon.a.nrows();
        let mut pts: Vec<Vector> = Vec::new();
        for i in 0..q {
            for j in i + 1..q {
                let m = DMatrix::from_row_slice(
                    2,
                    2,
                    &[canon.a[(i, 0)], canon.a[(i, 1)], canon.a[(j, 0)], canon.a[(j, 1)]],
                );
                if m.determinant().abs() < 1e-12 {
                    continue;
                }
                let Some(p) = m.lu().solve(&DVector::from_column_slice(&[canon.b[i], canon.b[j]])) else {
                    continue;
                };
                if canon.contains(&p, 1e-9) && !pts.iter().any(|v| (v - &p).amax() < 1e-9) {
                    pts.push(p);
                }
            }
        }
        if pts.is_empty() {
            return Ok(pts);
        }
        let cx = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        let cy = pts.iter().map(|p| p[1]).sum::<f64>() / pts.len() as f64;
        pts.sort_by(|p, q| {
            let ap = (p[1] - cy).atan2(p[0] - cx);
            let aq = (q[1] - cy).atan2(q[0] - cx);
            ap.total_cmp(&aq)
        });
        Ok(pts)
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension(format!(
                "sets live in dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for HPolytope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.empty {
            return write!(f, "HPolytope(empty, dim={})", self.dim());
        }
        writeln!(f, "HPolytope(dim={}, rows={}) {{", self.dim(), self.a.nrows())?;
        for i in 0..self.a.nrows() {
            let row: Vec<String> = self.a.row(i).iter().map(|v| format!("{v:.6}")).collect();
            writeln!(f, "  [{}] <= {:.6}", row.join(", "), self.b[i])?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct HPolytopeJson {
    #[serde(rename = "G")]
    g_mat: Vec<Vec<f64>>,
    #[serde(rename = "g")]
    g_vec: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
}

impl Serialize for HPolytope {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let g_mat = (0..self.a.nrows())
            .map(|i| self.a.row(i).iter().copied().collect())
            .collect();
        HPolytopeJson {
            g_mat,
            g_vec: self.b.iter().copied().collect(),
            dim: (self.a.nrows() == 0).then_some(self.dim()),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HPolytope {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = HPolytopeJson::deserialize(deserializer)?;
        if raw.g_mat.is_empty() {
            return match raw.dim {
                Some(d) if d > 0 && raw.g_vec.is_empty() => Ok(HPolytope::universe(d)),
                _ => Err(D::Error::custom("polytope needs at least one row or an explicit dim")),
            };
        }
        HPolytope::from_rows(&raw.g_mat, &raw.g_vec).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::vec_from_slice as v;

    fn unit_box() -> HPolytope {
        HPolytope::hypercube(2, 1.0)
    }

    #[test]
    fn duplicate_rows_collapse_to_four_facets() {
        let p = unit_box();
        let doubled = HPolytope::new(
            DMatrix::from_fn(8, 2, |i, j| p.a()[(i % 4, j)] * if i >= 4 { 3.0 } else { 1.0 }),
            DVector::from_fn(8, |i, _| p.b()[i % 4] * if i >= 4 { 3.0 } else { 1.0 }),
        )
        .unwrap();
        assert_eq!(doubled.canonicalize().unwrap().num_constraints(), 4);
    }

    #[test]
    fn slack_row_is_removed() {
        let slack = HPolytope::from_rows(&[vec![1.0, 0.0]], &[5.0]).unwrap();
        let combined = unit_box().intersect(&slack).unwrap();
        assert_eq!(combined.num_constraints(), 4);
        assert!(combined.b().iter().all(|b| (*b - 1.0).abs() < 1e-12));
    }

    #[test]
    fn empty_set_is_flagged() {
        let p = HPolytope::from_rows(&[vec![1.0], vec![-1.0]], &[-1.0, -1.0]).unwrap();
        let c = p.canonicalize().unwrap();
        assert!(c.is_empty());
        assert_eq!(c.b()[0], -1.0);
        assert!(matches!(c.support(&v(&[1.0])), Err(Error::EmptySet)));
    }

    #[test]
    fn nesting_intersection() {
        let big = HPolytope::hypercube(2, 10.0);
        let small = unit_box();
        let both = big.intersect(&small).unwrap();
        assert!(both.contains_set(&small).unwrap() && small.contains_set(&both).unwrap());
        let same = small.intersect(&small).unwrap();
        assert_eq!(same.num_constraints(), 4);
    }

    #[test]
    fn preimage_identity_and_scaling() {
        let x = HPolytope::hypercube(2, 10.0);
        let id = x.affine_preimage(&DMatrix::identity(2, 2)).unwrap();
        assert!(id.contains_set(&x).unwrap() && x.contains_set(&id).unwrap());
        let half = x.affine_preimage(&(DMatrix::identity(2, 2) * 2.0)).unwrap();
        let expected = HPolytope::hypercube(2, 5.0);
        assert!(half.contains_set(&expected).unwrap() && expected.contains_set(&half).unwrap());
    }

    #[test]
    fn translate_box() {
        let t = unit_box().translate(&v(&[1.0, 0.0])).unwrap();
        let expected = HPolytope::from_box(&[0.0, -1.0], &[2.0, 1.0]).unwrap();
        assert!(t.contains_set(&expected).unwrap() && expected.contains_set(&t).unwrap());
        let zero = unit_box().translate(&v(&[0.0, 0.0])).unwrap();
        assert_eq!(zero, unit_box());
    }

    #[test]
    fn scale_cases() {
        let x = HPolytope::hypercube(2, 10.0);
        assert_eq!(x.scale(1.0).unwrap(), x);
        let point = x.scale(0.0).unwrap();
        let (lo, hi) = point.bounding_box().unwrap();
        assert!(lo.amax() < 1e-12 && hi.amax() < 1e-12);
        let scaled = x.scale(0.672).unwrap();
        assert!((scaled.support(&v(&[1.0, 0.0])).unwrap() - 6.72).abs() < 1e-12);
        assert!(x.scale(-1.0).is_err());
    }

    #[test]
    fn support_examples() {
        let x = HPolytope::hypercube(2, 10.0);
        assert_eq!(x.support(&v(&[1.0, 0.0])).unwrap(), 10.0);
        assert_eq!(x.support(&v(&[0.0, 0.0])).unwrap(), 0.0);
        // Segment {w : |w₁| ≤ 2, w₁ = w₂}; endpoints ±(2, 2) give 4 along (1, 1).
        let w = HPolytope::from_rows(
            &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![1.0, -1.0], vec![-1.0, 1.0]],
            &[2.0, 2.0, 0.0, 0.0],
        )
        .unwrap();
        let endpoints = [[2.0, 2.0], [-2.0, -2.0]];
        let oracle = endpoints.iter().map(|p| p[0] + p[1]).fold(f64::MIN, f64::max);
        assert!((w.support(&v(&[1.0, 1.0])).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn containment_and_min_scale() {
        let small = unit_box();
        let big = HPolytope::hypercube(2, 2.0);
        assert!(small.contains_set(&small).unwrap());
        assert!(big.contains_set(&small).unwrap());
        assert!(!small.contains_set(&big).unwrap());
        let x = HPolytope::hypercube(2, 10.0);
        let origin = HPolytope::singleton(&v(&[0.0, 0.0]));
        assert_eq!(x.min_scale_containment(&origin).unwrap(), 0.0);
        let seg = HPolytope::from_rows(
            &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![1.0, -1.0], vec![-1.0, 1.0]],
            &[2.0, 2.0, 0.0, 0.0],
        )
        .unwrap();
        assert!((x.min_scale_containment(&seg).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn flags_of_standard_sets() {
        assert_eq!(
            unit_box().flags(),
            SetFlags {
                is_pc_set: true,
                is_c_set: true
            }
        );
        let seg = HPolytope::from_rows(
            &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![1.0, -1.0], vec![-1.0, 1.0]],
            &[2.0, 2.0, 0.0, 0.0],
        )
        .unwrap();
        assert_eq!(
            seg.flags(),
            SetFlags {
                is_pc_set: false,
                is_c_set: true
            }
        );
        let half = HPolytope::from_rows(&[vec![1.0, 0.0]], &[1.0]).unwrap();
        assert!(!half.flags().is_c_set);
    }

    #[test]
    fn planar_vertices_of_box() {
        let verts = unit_box().vertices_2d().unwrap();
        assert_eq!(verts.len(), 4);
        assert_eq!(unit_box().vertices().unwrap().len(), 4);
        assert_eq!(HPolytope::hypercube(3, 1.0).vertices().unwrap().len(), 8);
        for p in verts {
            assert!((p[0].abs() - 1.0).abs() < 1e-12 && (p[1].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip() {
        let p = HPolytope::from_rows(&[vec![0.3, -1.7], vec![-1.0, 0.25], vec![0.5, 0.5]], &[1.0, 2.0, 3.0]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.contains("\"G\"") && s.contains("\"g\""));
        let back: HPolytope = serde_json::from_str(&s).unwrap();
        assert!((back.a() - p.a()).amax() <= 1e-12 && (back.b() - p.b()).amax() <= 1e-12);
    }
}
