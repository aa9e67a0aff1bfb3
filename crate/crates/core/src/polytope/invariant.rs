use serde::Serialize;

use super::{linear_image, minkowski_sum, HPolytope};
use crate::error::{Error, Result};
use crate::numkit::{spectral_radius, Mat, TOL};

#[derive(Debug, Clone, Serialize)]
pub struct InvariantSet {
    pub set: HPolytope,
    /// Smallest `t` with `Ω_t ⊆ {x : F^{t+1}x ∈ C}`.
    pub determination_index: usize,
}

/// Maximal positively invariant subset of `c` for `x⁺ = Fx`, obtained as
/// the finitely determined intersection `⋂_{k≤t} {x : F^k x ∈ C}`.
pub fn max_admissible_invariant(f: &Mat, c: &HPolytope, cap: usize) -> Result<InvariantSet> {
    if !f.is_square() || f.nrows() != c.dim() {
        return Err(Error::Dimension("dynamics and constraint set do not match".into()));
    }
    let radius = spectral_radius(f);
    if radius >= 1.0 - TOL.stability_margin {
        return Err(Error::Unstable { radius });
    }
    if c.is_empty() {
        return Err(Error::EmptySet);
    }
    if !c.is_bounded() {
        return Err(Error::Unbounded);
    }
    let mut omega = c.canonicalize()?;
    let mut fk = f.clone();
    for t in 0..cap {
        let pre = c.affine_preimage(&fk)?;
        if pre.contains_set(&omega)? {
            return Ok(InvariantSet {
                set: omega,
                determination_index: t,
            });
        }
        omega = omega.intersect(&pre)?;
        if omega.is_empty() {
            return Err(Error::EmptySet);
        }
        fk = f * fk;
    }
    Err(Error::NotDetermined {
        iterations: cap,
        partial: Box::new(omega),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MrpiApprox {
    pub set: HPolytope,
    /// Number of Minkowski terms `s`.
    pub terms: usize,
    /// `θ` with `F^s W ⊆ θW`.
    pub theta: f64,
}

/// Outer approximation of the minimal robust positively invariant set of
/// `x⁺ = Fx + w`, `w ∈ W`: `(1 − θ)⁻¹ ⊕_{i<s} F^i W` with `F^s W ⊆ θW`, `θ ≤ eps`.
pub fn mrpi_outer_approx(f: &Mat, w: &HPolytope, eps: f64, cap: usize) -> Result<MrpiApprox> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidInput(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !f.is_square() || f.nrows() != w.dim() {
        return Err(Error::Dimension("dynamics and disturbance set do not match".into()));
    }
    let radius = spectral_radius(f);
    if radius >= 1.0 - TOL.stability_margin {
        return Err(Error::Unstable { radius });
    }
    let flags = w.flags();
    if !flags.is_c_set {
        return Err(Error::InvalidInput("disturbance set must be a compact set containing the origin".into()));
    }
    let mut fs = f.clone();
    let mut found = None;
    for s in 1..=cap {
        let theta = scale_of_image(&fs, w)?;
        if theta <= eps {
            found = Some((s, theta));
            break;
        }
        fs = f * fs;
    }
    let (s, theta) = found.ok_or(Error::IterationCap { cap, iterations: cap })?;

    let mut sum = w.canonicalize()?;
    let mut fi = f.clone();
    for _ in 1..s {
        sum = minkowski_sum(&sum, &linear_image(&fi, w)?)?;
        fi = f * fi;
    }
    let set = sum.scale(1.0 / (1.0 - theta))?;

    // F·R ⊕ W ⊆ R, checked facet by facet.
    for i in 0..set.num_constraints() {
        let a = set.a().row(i).transpose();
        let h = set.support(&(f.transpose() * &a))? + w.support(&a)?;
        if h > set.b()[i] + 1e-7 {
            return Err(Error::Numerical(format!("outer approximation is not invariant (gap {:e})", h - set.b()[i])));
        }
    }
    Ok(MrpiApprox { set, terms: s, theta })
}

/// Smallest `θ` with `F W ⊆ θ W`, evaluated through `h_{FW}(a) = h_W(Fᵀa)`.
/// Facets of `W` through the origin only admit zero support.
fn scale_of_image(fm: &Mat, w: &HPolytope) -> Result<f64> {
    let mut theta = 0.0_f64;
    for i in 0..w.num_constraints() {
        let a = w.a().row(i).transpose();
        let h = w.support(&(fm.transpose() * &a))?;
        let bi = w.b()[i];
        let r = if bi > TOL.containment {
            h / bi
        } else if h <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        theta = theta.max(r);
    }
    Ok(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::mat_from_rows;

    #[test]
    fn zero_dynamics_terminate_immediately() {
        let c = HPolytope::hypercube(2, 1.0);
        let inv = max_admissible_invariant(&Mat::zeros(2, 2), &c, 500).unwrap();
        assert_eq!(inv.determination_index, 0);
        assert!(inv.set.contains_set(&c).unwrap());
    }

    #[test]
    fn scalar_contraction_keeps_interval() {
        let c = HPolytope::hypercube(1, 1.0);
        let f = mat_from_rows(&[vec![0.5]]).unwrap();
        let inv = max_admissible_invariant(&f, &c, 500).unwrap();
        assert_eq!(inv.determination_index, 0);
    }

    #[test]
    fn unstable_dynamics_rejected() {
        let c = HPolytope::hypercube(1, 1.0);
        let f = mat_from_rows(&[vec![1.5]]).unwrap();
        assert!(matches!(max_admissible_invariant(&f, &c, 500), Err(Error::Unstable { .. })));
    }

    #[test]
    fn rotation_shrinks_box() {
        let t = 0.6_f64;
        let f = mat_from_rows(&[vec![0.9 * t.cos(), -0.9 * t.sin()], vec![0.9 * t.sin(), 0.9 * t.cos()]]).unwrap();
        let c = HPolytope::hypercube(2, 1.0);
        let inv = max_admissible_invariant(&f, &c, 500).unwrap();
        assert!(inv.determination_index > 0);
        assert!(inv.set.affine_preimage(&f).unwrap().contains_set(&inv.set).unwrap());
        assert!(c.contains_set(&inv.set).unwrap());
    }

    #[test]
    fn mrpi_of_zero_dynamics_is_w() {
        let w = HPolytope::hypercube(2, 0.5);
        let r = mrpi_outer_approx(&Mat::zeros(2, 2), &w, 1e-3, 100).unwrap();
        assert_eq!(r.terms, 1);
        assert!(r.set.contains_set(&w).unwrap() && w.contains_set(&r.set).unwrap());
    }

    #[test]
    fn mrpi_scalar_geometric_bound() {
        let w = HPolytope::hypercube(1, 1.0);
        let f = mat_from_rows(&[vec![0.5]]).unwrap();
        let r = mrpi_outer_approx(&f, &w, 1e-3, 100).unwrap();
        let h = r.set.support(&crate::numkit::vec_from_slice(&[1.0])).unwrap();
        // Exact minimal set is [−2, 2]; the approximation is an outer bound within eps.
        assert!(h >= 2.0 - 1e-12 && h <= 2.0 * (1.0 + 2e-3));
    }
}
