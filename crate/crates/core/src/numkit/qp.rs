//! Primal active-set solver for dense convex QPs and LPs.
//!
//! Problems have the form
//!
//! ```text
//! minimize    ½ xᵀHx + fᵀx
//! subject to  Ax ≤ b,  Ex = e
//! ```
//!
//! with `H` symmetric positive semidefinite. A linear program is the special
//! case `H = 0`. A feasible starting point comes from a phase-one LP in the
//! lifted variables `(x, t)` minimising the largest violation `t`; when that
//! optimum is positive its multipliers form a Farkas certificate, which is
//! checked before `Infeasible` is reported.
//!
//! Each phase-two iteration works in the null space of the working set. On
//! directions of positive curvature it takes the Newton step, on zero
//! curvature it follows the projected gradient as a ray (which is how LPs walk
//! between vertices and how unboundedness is detected). Ties in the ratio test
//! go to the lowest constraint index. LPs always drop constraints by Bland's
//! rule; QPs drop the most negative multiplier and switch to Bland's rule after
//! a run of degenerate steps.

use nalgebra::{DMatrix, DVector};

use super::{linalg, Mat, Vector, TOL};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveTag {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStatus {
    pub tag: SolveTag,
    pub iterations: usize,
    /// Scaled KKT residual of the returned point; see [`QpSolution`].
    pub kkt_residual: f64,
}

impl SolveStatus {
    pub fn is_optimal(&self) -> bool {
        self.tag == SolveTag::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    /// Iteration cap per phase; `None` means `10·(d + q)`.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: TOL.solver,
            max_iter: None,
        }
    }
}

/// `minimize cᵀx` subject to `Ax ≤ b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Vector,
    pub a: Mat,
    pub b: Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub hessian: Mat,
    pub linear: Vector,
    pub a: Mat,
    pub b: Vector,
    pub a_eq: Option<Mat>,
    pub b_eq: Option<Vector>,
}

impl QpProblem {
    pub fn new(hessian: Mat, linear: Vector, a: Mat, b: Vector) -> Self {
        Self {
            hessian,
            linear,
            a,
            b,
            a_eq: None,
            b_eq: None,
        }
    }

    pub fn with_equalities(mut self, a_eq: Mat, b_eq: Vector) -> Self {
        self.a_eq = Some(a_eq);
        self.b_eq = Some(b_eq);
        self
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn objective(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }
}

impl From<&LpProblem> for QpProblem {
    fn from(lp: &LpProblem) -> Self {
        let d = lp.c.len();
        QpProblem::new(DMatrix::zeros(d, d), lp.c.clone(), lp.a.clone(), lp.b.clone())
    }
}

/// Result of an LP or QP solve.
///
/// `kkt_residual` is the largest of the relative stationarity, primal
/// feasibility, dual feasibility and complementarity residuals. For an
/// infeasible problem `x` is the phase-one point, `value` is `+∞` and
/// `certificate` holds nonnegative weights `y` (summing to one) with
/// `Aᵀy + Eᵀμ = 0` and `bᵀy + eᵀμ < 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: Vector,
    pub value: f64,
    pub status: SolveStatus,
    pub multipliers: Vector,
    pub eq_multipliers: Vector,
    pub certificate: Option<Vector>,
}

pub fn solve_lp(p: &LpProblem) -> Result<QpSolution> {
    solve_lp_with(p, &SolverOptions::default())
}

pub fn solve_lp_with(p: &LpProblem, opts: &SolverOptions) -> Result<QpSolution> {
    if p.a.nrows() == 0 {
        return Err(Error::Dimension("LP needs at least one constraint".into()));
    }
    solve_qp_with(&QpProblem::from(p), opts)
}

pub fn solve_qp(p: &QpProblem) -> Result<QpSolution> {
    solve_qp_with(p, &SolverOptions::default())
}

pub fn solve_qp_with(p: &QpProblem, opts: &SolverOptions) -> Result<QpSolution> {
    let d = p.dim();
    validate(p)?;
    let (e, eb) = match (&p.a_eq, &p.b_eq) {
        (Some(e), Some(eb)) => (e.clone(), eb.clone()),
        _ => (DMatrix::zeros(0, d), DVector::zeros(0)),
    };
    let q = p.a.nrows();
    let cap = opts.max_iter.unwrap_or(10 * (d + q + e.nrows()));
    let is_lp = p.hessian.iter().all(|v| *v == 0.0);

    // Least-squares point on the equality manifold.
    let mut x0 = DVector::zeros(d);
    if e.nrows() > 0 {
        let svd = e.clone().svd(true, true);
        x0 = svd
            .solve(&eb, 1e-12 * e.amax().max(1.0))
            .map_err(|m| Error::Numerical(m.to_string()))?;
        let r = &e * &x0 - &eb;
        if r.amax() > opts.tol * (1.0 + eb.amax()) {
            let cert_ok = (e.transpose() * &r).amax() <= opts.tol * (1.0 + r.amax());
            return Ok(infeasible_result(p, x0, DVector::zeros(q), r, cert_ok, 0));
        }
    }

    let feas_tol = 0.1 * opts.tol * (1.0 + p.b.amax());
    let violation = max_violation(&p.a, &p.b, &x0);
    let mut phase1_iters = 0;
    if violation > feas_tol {
        // Phase one over (x, t): minimise t s.t. Ax - t ≤ b, -t ≤ 0, Ex = e.
        let mut a1 = DMatrix::zeros(q + 1, d + 1);
        a1.view_mut((0, 0), (q, d)).copy_from(&p.a);
        for i in 0..q {
            a1[(i, d)] = -1.0;
        }
        a1[(q, d)] = -1.0;
        let mut b1 = DVector::zeros(q + 1);
        b1.rows_mut(0, q).copy_from(&p.b);
        let mut e1 = DMatrix::zeros(e.nrows(), d + 1);
        e1.view_mut((0, 0), (e.nrows(), d)).copy_from(&e);
        let mut f1 = DVector::zeros(d + 1);
        f1[d] = 1.0;
        let mut start = DVector::zeros(d + 1);
        start.rows_mut(0, d).copy_from(&x0);
        start[d] = violation;
        let h1 = DMatrix::zeros(d + 1, d + 1);
        let cap1 = opts.max_iter.unwrap_or(10 * (d + 1 + q + 1 + e.nrows()));
        let out = active_set(&h1, &f1, &a1, &b1, &e1, &eb, start, cap1, true);
        phase1_iters = out.iterations;
        match out.kind {
            Termination::Optimal => {}
            Termination::Unbounded | Termination::Cap => {
                return Ok(failure(p, out.x.rows(0, d).into_owned(), out.iterations, f64::NAN));
            }
        }
        let t = out.x[d];
        let x_phase1 = out.x.rows(0, d).into_owned();
        if t > feas_tol {
            let y = out.lambda.rows(0, q).into_owned();
            let mu = out.mu.clone();
            let ok = verify_certificate(&p.a, &p.b, &e, &eb, &y, &mu, opts.tol);
            return Ok(infeasible_result(p, x_phase1, y, mu, ok, out.iterations));
        }
        x0 = x_phase1;
    }

    let out = active_set(&p.hessian, &p.linear, &p.a, &p.b, &e, &eb, x0, cap, is_lp);
    let iterations = phase1_iters + out.iterations;
    match out.kind {
        Termination::Cap => Ok(failure(p, out.x, iterations, f64::NAN)),
        Termination::Unbounded => Ok(QpSolution {
            value: f64::NEG_INFINITY,
            status: SolveStatus {
                tag: SolveTag::Unbounded,
                iterations,
                kkt_residual: 0.0,
            },
            multipliers: DVector::zeros(q),
            eq_multipliers: DVector::zeros(e.nrows()),
            certificate: None,
            x: out.x,
        }),
        Termination::Optimal => {
            let kkt = kkt_residual(p, &e, &eb, &out.x, &out.lambda, &out.mu);
            let tag = if kkt <= opts.tol {
                SolveTag::Optimal
            } else {
                SolveTag::NumericalFailure
            };
            Ok(QpSolution {
                value: p.objective(&out.x),
                status: SolveStatus {
                    tag,
                    iterations,
                    kkt_residual: kkt,
                },
                multipliers: out.lambda,
                eq_multipliers: out.mu,
                certificate: None,
                x: out.x,
            })
        }
    }
}

fn validate(p: &QpProblem) -> Result<()> {
    let d = p.dim();
    if d == 0 {
        return Err(Error::Dimension("problem has no variables".into()));
    }
    if p.hessian.nrows() != d || p.hessian.ncols() != d {
        return Err(Error::Dimension(format!(
            "Hessian is {}x{}, expected {d}x{d}",
            p.hessian.nrows(),
            p.hessian.ncols()
        )));
    }
    if p.a.ncols() != d || p.a.nrows() != p.b.len() {
        return Err(Error::Dimension(format!(
            "inequalities are {}x{} with {} bounds, expected {d} columns",
            p.a.nrows(),
            p.a.ncols(),
            p.b.len()
        )));
    }
    match (&p.a_eq, &p.b_eq) {
        (None, None) => {}
        (Some(e), Some(eb)) if e.ncols() == d && e.nrows() == eb.len() => {}
        _ => return Err(Error::Dimension("inconsistent equality constraints".into())),
    }
    let finite = p.hessian.iter().chain(p.linear.iter()).chain(p.a.iter()).all(|v| v.is_finite())
        && p.b.iter().all(|v| v.is_finite());
    if !finite {
        return Err(Error::InvalidInput("problem data must be finite".into()));
    }
    let asym = (&p.hessian - p.hessian.transpose()).amax();
    if asym > 1e-10 * p.hessian.amax().max(1.0) {
        return Err(Error::InvalidInput(format!("Hessian asymmetry {asym:e}")));
    }
    if p.hessian.iter().any(|v| *v != 0.0) {
        let min_eig = linalg::min_eigenvalue(&p.hessian);
        if min_eig < -1e-9 * p.hessian.amax().max(1.0) {
            return Err(Error::NotPsd { min_eig });
        }
    }
    Ok(())
}

fn max_violation(a: &Mat, b: &Vector, x: &Vector) -> f64 {
    (a * x - b).iter().fold(0.0_f64, |m, v| m.max(*v))
}

fn failure(p: &QpProblem, x: Vector, iterations: usize, kkt: f64) -> QpSolution {
    let neq = p.a_eq.as_ref().map_or(0, |e| e.nrows());
    QpSolution {
        value: f64::NAN,
        status: SolveStatus {
            tag: SolveTag::NumericalFailure,
            iterations,
            kkt_residual: if kkt.is_nan() { f64::INFINITY } else { kkt },
        },
        multipliers: DVector::zeros(p.a.nrows()),
        eq_multipliers: DVector::zeros(neq),
        certificate: None,
        x,
    }
}

fn infeasible_result(
    p: &QpProblem,
    x: Vector,
    y: Vector,
    mu: Vector,
    certified: bool,
    iterations: usize,
) -> QpSolution {
    if !certified {
        return failure(p, x, iterations, f64::NAN);
    }
    let total = y.sum();
    let cert = if total > 0.0 { &y / total } else { y.clone() };
    QpSolution {
        value: f64::INFINITY,
        status: SolveStatus {
            tag: SolveTag::Infeasible,
            iterations,
            kkt_residual: 0.0,
        },
        multipliers: y,
        eq_multipliers: mu,
        certificate: Some(cert),
        x,
    }
}

fn verify_certificate(a: &Mat, b: &Vector, e: &Mat, eb: &Vector, y: &Vector, mu: &Vector, tol: f64) -> bool {
    let total = y.sum();
    if total <= 0.0 || y.iter().any(|v| *v < -tol) {
        return false;
    }
    let combo = a.transpose() * y + e.transpose() * mu;
    let scale = total * (1.0 + a.amax()) + mu.amax() * (1.0 + e.amax());
    let gap = b.dot(y) + eb.dot(mu);
    combo.amax() <= tol * scale && gap < 0.0
}

fn kkt_residual(p: &QpProblem, e: &Mat, eb: &Vector, x: &Vector, lambda: &Vector, mu: &Vector) -> f64 {
    let hx = &p.hessian * x;
    let grad = &hx + &p.linear;
    let stat = &grad + p.a.transpose() * lambda + e.transpose() * mu;
    let scale = 1.0 + hx.amax() + p.linear.amax();
    let mut r = stat.amax() / scale;
    let slack = &p.a * x - &p.b;
    let bscale = 1.0 + p.b.amax().max(if eb.len() > 0 { eb.amax() } else { 0.0 });
    r = r.max(slack.iter().fold(0.0_f64, |m, v| m.max(*v)) / bscale);
    if e.nrows() > 0 {
        r = r.max((e * x - eb).amax() / bscale);
    }
    r = r.max(lambda.iter().fold(0.0_f64, |m, v| m.max(-*v)) / scale);
    let comp = lambda
        .iter()
        .zip(slack.iter())
        .fold(0.0_f64, |m, (l, s)| m.max((l * s).abs()));
    r.max(comp / (scale * bscale))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Termination {
    Optimal,
    Unbounded,
    Cap,
}

struct Outcome {
    x: Vector,
    lambda: Vector,
    mu: Vector,
    kind: Termination,
    iterations: usize,
}

/// Orthonormal basis of the span of `rows` plus a basis of its orthogonal
/// complement. Rows that are numerically dependent on earlier ones are
/// flagged and do not enter the basis.
struct Split {
    independent: Vec<bool>,
    null: Mat,
}

fn orthogonalize(v: &mut Vector, basis: &[Vector]) {
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
    }
}

fn split(rows: &[Vector], d: usize) -> Split {
    let mut basis: Vec<Vector> = Vec::with_capacity(d);
    let mut independent = Vec::with_capacity(rows.len());
    for r in rows {
        let nr = r.norm();
        if nr == 0.0 || basis.len() == d {
            independent.push(false);
            continue;
        }
        let mut v = r.clone();
        orthogonalize(&mut v, &basis);
        let nv = v.norm();
        if nv > 1e-10 * nr {
            basis.push(v / nv);
            independent.push(true);
        } else {
            independent.push(false);
        }
    }
    let mut null_cols = Vec::with_capacity(d - basis.len());
    while basis.len() < d {
        let mut best: Option<(f64, Vector)> = None;
        for j in 0..d {
            let mut v = DVector::zeros(d);
            v[j] = 1.0;
            orthogonalize(&mut v, &basis);
            let nv = v.norm();
            if best.as_ref().is_none_or(|(bn, _)| nv > *bn + 1e-12) {
                best = Some((nv, v));
            }
        }
        let (nv, v) = best.expect("dimension is positive");
        let u = v / nv;
        basis.push(u.clone());
        null_cols.push(u);
    }
    let null = if null_cols.is_empty() {
        DMatrix::zeros(d, 0)
    } else {
        DMatrix::from_columns(&null_cols)
    };
    Split { independent, null }
}

/// Multipliers `λ` of the independent working rows `R`, from `Rᵀλ = -∇`.
fn working_multipliers(rows: &[&Vector], grad: &Vector) -> Vector {
    let k = rows.len();
    if k == 0 {
        return DVector::zeros(0);
    }
    let r = DMatrix::from_fn(k, grad.len(), |i, j| rows[i][j]);
    let gram = &r * r.transpose();
    let rhs = -(&r * grad);
    match gram.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => gram.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(k)),
    }
}

#[allow(clippy::too_many_arguments)]
fn active_set(
    h: &Mat,
    f: &Vector,
    a: &Mat,
    b: &Vector,
    e: &Mat,
    eb: &Vector,
    mut x: Vector,
    cap: usize,
    is_lp: bool,
) -> Outcome {
    let d = x.len();
    let q = a.nrows();
    let p = e.nrows();
    let a_rows: Vec<Vector> = (0..q).map(|i| a.row(i).transpose()).collect();
    let e_rows: Vec<Vector> = (0..p).map(|i| e.row(i).transpose()).collect();
    let row_norm: Vec<f64> = a_rows.iter().map(|r| r.norm()).collect();
    let h_zero = h.iter().all(|v| *v == 0.0);
    let h_norm = h.amax();

    let mut working: Vec<usize> = Vec::new();
    let mut in_working = vec![false; q];
    let mut bland = is_lp;
    let mut degenerate_run = 0usize;
    let mut last_dropped: Option<usize> = None;

    for iter in 0..cap {
        let grad = h * &x + f;
        let scale = 1.0 + h_norm * x.amax() + f.amax();
        let mut rows: Vec<Vector> = e_rows.clone();
        rows.extend(working.iter().map(|&i| a_rows[i].clone()));
        let sp = split(&rows, d);

        // Numerically dependent inequality rows leave the working set.
        let dependent: Vec<usize> = working
            .iter()
            .enumerate()
            .filter(|(k, _)| !sp.independent[p + k])
            .map(|(_, &i)| i)
            .collect();
        if !dependent.is_empty() {
            for i in dependent {
                in_working[i] = false;
                working.retain(|&w| w != i);
            }
            continue;
        }

        let z = &sp.null;
        let mut direction: Option<(Vector, bool)> = None;
        if z.ncols() > 0 {
            let zg = z.transpose() * &grad;
            if zg.amax() > 1e-11 * scale {
                if h_zero {
                    direction = Some((-(z * zg), true));
                } else {
                    let zhz = linalg::symmetrize(&(z.transpose() * h * z));
                    let eig = zhz.symmetric_eigen();
                    let curv = 1e-9 * h_norm.max(1e-300);
                    let coords = eig.eigenvectors.transpose() * &zg;
                    let mut ray = DVector::zeros(z.ncols());
                    let mut newton = DVector::zeros(z.ncols());
                    for j in 0..z.ncols() {
                        let v = eig.eigenvectors.column(j);
                        if eig.eigenvalues[j] <= curv {
                            ray.axpy(coords[j], &v, 1.0);
                        } else {
                            newton.axpy(coords[j] / eig.eigenvalues[j], &v, 1.0);
                        }
                    }
                    if ray.amax() > 1e-11 * scale {
                        direction = Some((-(z * ray), true));
                    } else {
                        direction = Some((-(z * newton), false));
                    }
                }
            }
        }

        let Some((dir, is_ray)) = direction else {
            // Stationary on the working set: inspect multipliers.
            let indep_rows: Vec<&Vector> = rows
                .iter()
                .zip(&sp.independent)
                .filter(|(_, ok)| **ok)
                .map(|(r, _)| r)
                .collect();
            let lam_rows = working_multipliers(&indep_rows, &grad);
            let mut mu = DVector::zeros(p);
            let mut lambda = DVector::zeros(q);
            let mut k = 0;
            for (idx, ok) in sp.independent.iter().enumerate() {
                if !ok {
                    continue;
                }
                if idx < p {
                    mu[idx] = lam_rows[k];
                } else {
                    lambda[working[idx - p]] = lam_rows[k];
                }
                k += 1;
            }
            let mult_tol = 1e-10 * scale;
            let drop = if bland {
                working
                    .iter()
                    .copied()
                    .filter(|&i| lambda[i] < -mult_tol)
                    .min()
            } else {
                working
                    .iter()
                    .copied()
                    .filter(|&i| lambda[i] < -mult_tol)
                    .min_by(|&i, &j| lambda[i].total_cmp(&lambda[j]).then(i.cmp(&j)))
            };
            match drop {
                Some(i) => {
                    in_working[i] = false;
                    working.retain(|&w| w != i);
                    last_dropped = Some(i);
                    continue;
                }
                None => {
                    let (x, lambda, mu) = polish(h, f, a, b, e, eb, &working, x, lambda, mu);
                    return Outcome {
                        x,
                        lambda,
                        mu,
                        kind: Termination::Optimal,
                        iterations: iter + 1,
                    };
                }
            }
        };

        // Ratio test with lowest-index tie breaking.
        let pn = dir.amax();
        let mut block: Option<(usize, f64)> = None;
        for i in 0..q {
            if in_working[i] {
                continue;
            }
            let ap = a_rows[i].dot(&dir);
            let thresh = 1e-12 * row_norm[i] * pn;
            if ap <= thresh || (Some(i) == last_dropped && ap <= 1e-9 * row_norm[i] * pn) {
                continue;
            }
            let slack = (b[i] - a_rows[i].dot(&x)).max(0.0);
            let step = slack / ap;
            if block.is_none_or(|(_, s)| step < s) {
                block = Some((i, step));
            }
        }
        let step = match (is_ray, block) {
            (true, None) => {
                return Outcome {
                    x,
                    lambda: DVector::zeros(q),
                    mu: DVector::zeros(p),
                    kind: Termination::Unbounded,
                    iterations: iter + 1,
                };
            }
            (true, Some((_, s))) => s,
            (false, Some((_, s))) => s.min(1.0),
            (false, None) => 1.0,
        };
        x.axpy(step, &dir, 1.0);
        if let Some((i, s)) = block {
            if is_ray || s <= 1.0 {
                working.push(i);
                in_working[i] = true;
            }
        }
        last_dropped = None;
        if step * pn <= 1e-14 * (1.0 + x.amax()) {
            degenerate_run += 1;
            if degenerate_run > 2 * d + 5 {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
    }
    Outcome {
        x,
        lambda: DVector::zeros(q),
        mu: DVector::zeros(p),
        kind: Termination::Cap,
        iterations: cap,
    }
}

/// Re-solves the KKT system of the final working set to recover digits lost
/// along the path. Keeps the unpolished point when the system is singular or
/// the polished point is worse.
#[allow(clippy::too_many_arguments)]
fn polish(
    h: &Mat,
    f: &Vector,
    a: &Mat,
    b: &Vector,
    e: &Mat,
    eb: &Vector,
    working: &[usize],
    x: Vector,
    lambda: Vector,
    mu: Vector,
) -> (Vector, Vector, Vector) {
    let d = x.len();
    let p = e.nrows();
    let k = p + working.len();
    let n = d + k;
    let mut kkt = DMatrix::zeros(n, n);
    kkt.view_mut((0, 0), (d, d)).copy_from(h);
    let mut rhs = DVector::zeros(n);
    rhs.rows_mut(0, d).copy_from(&(-f));
    for r in 0..p {
        for j in 0..d {
            kkt[(d + r, j)] = e[(r, j)];
            kkt[(j, d + r)] = e[(r, j)];
        }
        rhs[d + r] = eb[r];
    }
    for (r, &i) in working.iter().enumerate() {
        for j in 0..d {
            kkt[(d + p + r, j)] = a[(i, j)];
            kkt[(j, d + p + r)] = a[(i, j)];
        }
        rhs[d + p + r] = b[i];
    }
    let Some(sol) = kkt.clone().lu().solve(&rhs) else {
        return (x, lambda, mu);
    };
    if sol.iter().any(|v| !v.is_finite()) || (&kkt * &sol - &rhs).amax() > 1e-9 * (1.0 + rhs.amax()) {
        return (x, lambda, mu);
    }
    let xp = sol.rows(0, d).into_owned();
    if (&xp - &x).amax() > 1e-6 * (1.0 + x.amax()) {
        return (x, lambda, mu);
    }
    let mut lp = DVector::zeros(a.nrows());
    for (r, &i) in working.iter().enumerate() {
        lp[i] = sol[d + p + r];
    }
    let mp = sol.rows(d, p).into_owned();
    let before = max_violation(a, b, &x);
    let after = max_violation(a, b, &xp);
    if after <= before.max(1e-12 * (1.0 + b.amax())) && lp.iter().all(|v| *v >= -1e-9) {
        (xp, lp, mp)
    } else {
        (x, lambda, mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::mat_from_rows;

    fn m(rows: &[&[f64]]) -> Mat {
        mat_from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }
    fn v(x: &[f64]) -> Vector {
        DVector::from_column_slice(x)
    }
    fn box_constraints(d: usize, r: f64) -> (Mat, Vector) {
        let mut a = DMatrix::zeros(2 * d, d);
        for i in 0..d {
            a[(2 * i, i)] = 1.0;
            a[(2 * i + 1, i)] = -1.0;
        }
        (a, DVector::from_element(2 * d, r))
    }

    #[test]
    fn lp_box_minimum() {
        let (a, b) = box_constraints(2, 1.0);
        let sol = solve_lp(&LpProblem { c: v(&[1.0, 0.0]), a, b }).unwrap();
        assert_eq!(sol.status.tag, SolveTag::Optimal);
        assert!((sol.value + 1.0).abs() < 1e-12);
        assert!((sol.x[0] + 1.0).abs() < 1e-12);
        assert!(sol.x[1].abs() <= 1.0);
    }

    #[test]
    fn lp_contradictory_bounds_infeasible() {
        let sol = solve_lp(&LpProblem {
            c: v(&[0.0]),
            a: m(&[&[1.0], &[-1.0]]),
            b: v(&[-1.0, -1.0]),
        })
        .unwrap();
        assert_eq!(sol.status.tag, SolveTag::Infeasible);
        let y = sol.certificate.unwrap();
        assert!(y.iter().all(|v| *v >= 0.0));
        assert!((y[0] - y[1]).abs() < 1e-12);
    }

    #[test]
    fn lp_support_of_state_box() {
        // max (1,1)·x over ‖x‖∞ ≤ 10; the four box vertices give 20.
        let (a, b) = box_constraints(2, 10.0);
        let verts = [[10.0, 10.0], [10.0, -10.0], [-10.0, 10.0], [-10.0, -10.0]];
        let oracle = verts.iter().map(|p| p[0] + p[1]).fold(f64::MIN, f64::max);
        let sol = solve_lp(&LpProblem { c: v(&[-1.0, -1.0]), a, b }).unwrap();
        assert!(sol.status.is_optimal());
        assert!((-sol.value - oracle).abs() < 1e-12);
    }

    #[test]
    fn lp_unbounded_detected() {
        let sol = solve_lp(&LpProblem {
            c: v(&[-1.0, 0.0]),
            a: m(&[&[-1.0, 0.0], &[0.0, 1.0]]),
            b: v(&[0.0, 1.0]),
        })
        .unwrap();
        assert_eq!(sol.status.tag, SolveTag::Unbounded);
    }

    #[test]
    fn qp_single_active_constraint() {
        // min x² s.t. x ≥ 1
        let p = QpProblem::new(m(&[&[2.0]]), v(&[0.0]), m(&[&[-1.0]]), v(&[-1.0]));
        let sol = solve_qp(&p).unwrap();
        assert!(sol.status.is_optimal());
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
        assert!((sol.value - 1.0).abs() < 1e-12);
        assert!((sol.multipliers[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn qp_unconstrained_minimum() {
        let p = QpProblem::new(
            DMatrix::identity(2, 2),
            v(&[-1.0, -1.0]),
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
        );
        let sol = solve_qp(&p).unwrap();
        assert!(sol.status.is_optimal());
        assert!((&sol.x - v(&[1.0, 1.0])).amax() < 1e-12);
        assert!((sol.value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn qp_with_equality() {
        // min ½‖x‖² s.t. x₁ + x₂ = 2, x₁ ≤ 0.5
        let p = QpProblem::new(
            DMatrix::identity(2, 2),
            v(&[0.0, 0.0]),
            m(&[&[1.0, 0.0]]),
            v(&[0.5]),
        )
        .with_equalities(m(&[&[1.0, 1.0]]), v(&[2.0]));
        let sol = solve_qp(&p).unwrap();
        assert!(sol.status.is_optimal());
        assert!((&sol.x - v(&[0.5, 1.5])).amax() < 1e-12);
    }

    #[test]
    fn zero_rows_are_checked_as_constants() {
        let p = QpProblem::new(
            DMatrix::identity(1, 1),
            v(&[0.0]),
            m(&[&[0.0], &[1.0]]),
            v(&[-0.5, 1.0]),
        );
        assert_eq!(solve_qp(&p).unwrap().status.tag, SolveTag::Infeasible);
        let p = QpProblem::new(
            DMatrix::identity(1, 1),
            v(&[-3.0]),
            m(&[&[0.0], &[1.0]]),
            v(&[0.5, 1.0]),
        );
        let sol = solve_qp(&p).unwrap();
        assert!(sol.status.is_optimal());
        assert!((sol.x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite_hessian() {
        let p = QpProblem::new(
            m(&[&[1.0, 0.0], &[0.0, -1.0]]),
            v(&[0.0, 0.0]),
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
        );
        assert!(matches!(solve_qp(&p), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn iteration_cap_reports_numerical_failure() {
        let (a, b) = box_constraints(3, 1.0);
        let p = LpProblem { c: v(&[1.0, 1.0, 1.0]), a, b };
        let sol = solve_lp_with(
            &p,
            &SolverOptions {
                max_iter: Some(1),
                ..SolverOptions::default()
            },
        )
        .unwrap();
        assert_eq!(sol.status.tag, SolveTag::NumericalFailure);
    }

    #[test]
    fn repeated_solves_are_identical() {
        let (a, b) = box_constraints(3, 2.0);
        let p = QpProblem::new(DMatrix::identity(3, 3), v(&[5.0, -1.0, 0.3]), a, b);
        let s1 = solve_qp(&p).unwrap();
        let s2 = solve_qp(&p).unwrap();
        assert_eq!(s1.x, s2.x);
        assert_eq!(s1.value, s2.value);
    }
}
