//! Finite-horizon optimal control problem with a disturbance preview,
//! condensed into a QP over the input sequence.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{solve_qp, Mat, QpProblem, SolveStatus, SolveTag, Vector, TOL};
use crate::polytope::{linear_image, minkowski_sum, HPolytope};
use crate::terminal::{assemble, Equilibrium, TerminalIngredients};

/// Preview `{w(0), …, w(N−1)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DisturbanceSequence {
    entries: Vec<Vector>,
}

impl TryFrom<Vec<Vec<f64>>> for DisturbanceSequence {
    type Error = Error;

    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v.into_iter().map(Vector::from_vec).collect())
    }
}

impl From<DisturbanceSequence> for Vec<Vec<f64>> {
    fn from(s: DisturbanceSequence) -> Self {
        s.entries.iter().map(|w| w.iter().copied().collect()).collect()
    }
}

/// Vector norms available for distances between sequences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeqNorm {
    Two,
    Inf,
    One,
}

impl SeqNorm {
    pub const ALL: [SeqNorm; 3] = [SeqNorm::Two, SeqNorm::Inf, SeqNorm::One];

    pub fn apply(self, v: &Vector) -> f64 {
        match self {
            SeqNorm::Two => v.norm(),
            SeqNorm::Inf => v.amax(),
            SeqNorm::One => v.iter().map(|x| x.abs()).sum(),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SeqNorm::Two => "2",
            SeqNorm::Inf => "inf",
            SeqNorm::One => "1",
        }
    }
}

impl DisturbanceSequence {
    pub fn new(entries: Vec<Vector>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::InvalidInput("disturbance sequence must have at least one element".into()));
        };
        let n = first.len();
        if n == 0 || entries.iter().any(|w| w.len() != n) {
            return Err(Error::Dimension("disturbance sequence elements differ in length".into()));
        }
        if entries.iter().flat_map(|w| w.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("disturbance values must be finite".into()));
        }
        Ok(Self { entries })
    }

    pub fn constant(w: &Vector, len: usize) -> Result<Self> {
        Self::new(vec![w.clone(); len])
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Self::constant(&DVector::zeros(dim), len).expect("valid zero sequence")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.entries[0].len()
    }

    pub fn entries(&self) -> &[Vector] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> &Vector {
        &self.entries[i]
    }

    /// First element, the disturbance applied to the plant.
    pub fn head(&self) -> &Vector {
        &self.entries[0]
    }

    /// Terminal disturbance `w_f = w(N−1)`.
    pub fn w_f(&self) -> &Vector {
        self.entries.last().expect("nonempty")
    }

    /// `{w(1), …, w(N−1), w(N−1)}`.
    pub fn tail(&self) -> Self {
        let mut entries: Vec<Vector> = self.entries[1..].to_vec();
        entries.push(self.w_f().clone());
        Self { entries }
    }

    pub fn is_constant(&self) -> bool {
        self.entries.iter().all(|w| (w - self.head()).amax() == 0.0)
    }

    /// Stacked `nN` vector.
    pub fn stacked(&self) -> Vector {
        DVector::from_iterator(
            self.len() * self.dim(),
            self.entries.iter().flat_map(|w| w.iter().copied()),
        )
    }

    pub fn distance(&self, other: &Self, norm: SeqNorm) -> f64 {
        norm.apply(&(self.stacked() - other.stacked()))
    }

    /// `w(i) ∈ W` for `i ≤ N−2` and `w(N−1) ∈ W_f`.
    pub fn is_admissible(&self, w: &HPolytope, w_f: &HPolytope, tol: f64) -> bool {
        let n = self.len();
        self.entries[..n - 1].iter().all(|e| w.contains(e, tol)) && w_f.contains(self.w_f(), tol)
    }
}

impl fmt::Display for DisturbanceSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .entries
            .iter()
            .map(|w| {
                let inner: Vec<String> = w.iter().map(|v| format!("{v}")).collect();
                format!("({})", inner.join(", "))
            })
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Origin of a row in the condensed constraint matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowLabel {
    State { step: usize, row: usize },
    Input { step: usize, row: usize },
    Terminal { row: usize },
}

impl fmt::Display for RowLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowLabel::State { step, row } => write!(f, "state constraint row {row} at step {step}"),
            RowLabel::Input { step, row } => write!(f, "input constraint row {row} at step {step}"),
            RowLabel::Terminal { row } => write!(f, "terminal set row {row}"),
        }
    }
}

/// Horizon, ingredients and the input-to-state prediction matrices.
#[derive(Debug, Clone)]
pub struct HorizonConfig {
    pub ingredients: TerminalIngredients,
    pub horizon: usize,
    /// When false the controller ignores the preview (model disturbance zero).
    pub preview: bool,
    /// `E_i` with `x(i) = E_i u + c_i`, for `i = 0..=N`.
    e: Vec<Mat>,
    hessian: Mat,
    a_qp: Mat,
    labels: Vec<RowLabel>,
}

impl HorizonConfig {
    pub fn new(ingredients: TerminalIngredients, horizon: usize, preview: bool) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be at least one".into()));
        }
        let plant = &ingredients.plant;
        let (n, m) = (plant.n(), plant.m());
        let nu = horizon * m;
        let mut e = vec![DMatrix::zeros(n, nu)];
        for i in 0..horizon {
            let mut next = &plant.a * &e[i];
            let mut blk = next.view_mut((0, i * m), (n, m));
            blk += &plant.b;
            e.push(next);
        }
        let w = &ingredients.weights;
        let mut hessian = DMatrix::zeros(nu, nu);
        for ei in e.iter().take(horizon).skip(1) {
            hessian += ei.transpose() * &w.q * ei;
        }
        hessian += e[horizon].transpose() * &w.p * &e[horizon];
        for i in 0..horizon {
            let mut blk = hessian.view_mut((i * m, i * m), (m, m));
            blk += &w.s;
        }
        // Costs carry no ½, the QP objective does: H = 2·(sum), symmetrised.
        hessian = &hessian + hessian.transpose();

        let sets = &ingredients.sets;
        let (qx, qu, qf) = (
            sets.x.num_constraints(),
            sets.u.num_constraints(),
            ingredients.xf_bar.num_constraints(),
        );
        let rows = horizon * (qx + qu) + qf;
        let mut a_qp = DMatrix::zeros(rows, nu);
        let mut labels = Vec::with_capacity(rows);
        let mut r = 0;
        for (i, ei) in e.iter().enumerate().take(horizon) {
            let blk = sets.x.a() * ei;
            a_qp.view_mut((r, 0), (qx, nu)).copy_from(&blk);
            labels.extend((0..qx).map(|row| RowLabel::State { step: i, row }));
            r += qx;
        }
        for i in 0..horizon {
            a_qp.view_mut((r, i * m), (qu, m)).copy_from(sets.u.a());
            labels.extend((0..qu).map(|row| RowLabel::Input { step: i, row }));
            r += qu;
        }
        let blk = ingredients.xf_bar.a() * &e[horizon];
        a_qp.view_mut((r, 0), (qf, nu)).copy_from(&blk);
        labels.extend((0..qf).map(|row| RowLabel::Terminal { row }));

        Ok(Self {
            ingredients,
            horizon,
            preview,
            e,
            hessian,
            a_qp,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.ingredients.n()
    }

    pub fn m(&self) -> usize {
        self.ingredients.m()
    }

    pub fn num_constraints(&self) -> usize {
        self.a_qp.nrows()
    }

    pub fn row_label(&self, i: usize) -> RowLabel {
        self.labels[i]
    }

    fn model_disturbance(&self, w: &DisturbanceSequence, i: usize) -> Vector {
        if self.preview {
            w.get(i).clone()
        } else {
            DVector::zeros(self.n())
        }
    }

    /// Equilibrium used by the costs: `x_f(w_f)` in preview mode, the origin otherwise.
    pub fn equilibrium(&self, w: &DisturbanceSequence) -> Result<Equilibrium> {
        if self.preview {
            self.ingredients.equilibrium(w.w_f())
        } else {
            self.ingredients.equilibrium(&DVector::zeros(self.n()))
        }
    }

    fn check(&self, x: &Vector, w: &DisturbanceSequence) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::Dimension(format!("state has length {}, expected {}", x.len(), self.n())));
        }
        if w.len() != self.horizon || w.dim() != self.n() {
            return Err(Error::Dimension(format!(
                "preview must hold {} vectors of length {}, got {} of length {}",
                self.horizon,
                self.n(),
                w.len(),
                w.dim()
            )));
        }
        Ok(())
    }
}

/// Condensed QP together with the data needed to rebuild predictions.
#[derive(Debug, Clone)]
pub struct CondensedOcp {
    pub qp: QpProblem,
    /// Cost terms independent of the inputs.
    pub constant: f64,
    /// Free-response states `c_i`, `i = 0..=N`.
    pub free_response: Vec<Vector>,
    pub equilibrium: Equilibrium,
}

pub fn build_ocp(x: &Vector, w: &DisturbanceSequence, cfg: &HorizonConfig) -> Result<CondensedOcp> {
    cfg.check(x, w)?;
    let ing = &cfg.ingredients;
    let eq = cfg.equilibrium(w)?;
    let (m, big_n) = (cfg.m(), cfg.horizon);
    let wts = &ing.weights;

    let mut c = vec![x.clone()];
    for i in 0..big_n {
        let next = &ing.plant.a * &c[i] + cfg.model_disturbance(w, i);
        c.push(next);
    }
    let mut linear = DVector::zeros(big_n * m);
    let mut constant = 0.0;
    for i in 0..big_n {
        let d = &c[i] - &eq.x_f;
        let qd = &wts.q * &d;
        constant += d.dot(&qd);
        if i > 0 {
            linear += cfg.e[i].transpose() * &qd * 2.0;
        }
        let su = &wts.s * &eq.u_f;
        constant += eq.u_f.dot(&su);
        for j in 0..m {
            linear[i * m + j] -= 2.0 * su[j];
        }
    }
    let d = &c[big_n] - &eq.x_f;
    let pd = &wts.p * &d;
    constant += d.dot(&pd);
    linear += cfg.e[big_n].transpose() * &pd * 2.0;

    let sets = &ing.sets;
    let mut b = DVector::zeros(cfg.num_constraints());
    let mut r = 0;
    for ci in c.iter().take(big_n) {
        let qx = sets.x.num_constraints();
        b.rows_mut(r, qx).copy_from(&(sets.x.b() - sets.x.a() * ci));
        r += qx;
    }
    for _ in 0..big_n {
        let qu = sets.u.num_constraints();
        b.rows_mut(r, qu).copy_from(sets.u.b());
        r += qu;
    }
    let xf = &ing.xf_bar;
    let qf = xf.num_constraints();
    b.rows_mut(r, qf)
        .copy_from(&(xf.b() + xf.a() * &eq.x_f - xf.a() * &c[big_n]));

    Ok(CondensedOcp {
        qp: QpProblem::new(cfg.hessian.clone(), linear, cfg.a_qp.clone(), b),
        constant,
        free_response: c,
        equilibrium: eq,
    })
}

#[derive(Debug, Clone)]
pub struct OcpSolution {
    pub u_seq: Vec<Vector>,
    /// Predicted states `x(0..=N)`.
    pub x_seq: Vec<Vector>,
    /// `V⁰_N(x; w)`, `+∞` when infeasible.
    pub value: f64,
    pub status: SolveStatus,
    /// Constraint carrying the largest weight in the infeasibility certificate.
    pub blocking_row: Option<RowLabel>,
}

impl OcpSolution {
    pub fn is_feasible(&self) -> bool {
        self.status.tag == SolveTag::Optimal
    }
}

pub fn solve_ocp(x: &Vector, w: &DisturbanceSequence, cfg: &HorizonConfig) -> Result<OcpSolution> {
    let ocp = build_ocp(x, w, cfg)?;
    let sol = solve_qp(&ocp.qp)?;
    let m = cfg.m();
    match sol.status.tag {
        SolveTag::Optimal => {
            let u_seq: Vec<Vector> = (0..cfg.horizon).map(|i| sol.x.rows(i * m, m).into_owned()).collect();
            let x_seq: Vec<Vector> = (0..=cfg.horizon)
                .map(|i| &cfg.e[i] * &sol.x + &ocp.free_response[i])
                .collect();
            let value = (sol.value + ocp.constant).max(0.0);
            Ok(OcpSolution {
                u_seq,
                x_seq,
                value,
                status: sol.status,
                blocking_row: None,
            })
        }
        SolveTag::Infeasible => {
            let blocking_row = sol.certificate.as_ref().map(|y| cfg.row_label(y.imax()));
            Ok(OcpSolution {
                u_seq: Vec::new(),
                x_seq: Vec::new(),
                value: f64::INFINITY,
                status: sol.status,
                blocking_row,
            })
        }
        SolveTag::Unbounded | SolveTag::NumericalFailure => Err(Error::Numerical(format!(
            "OCP solve ended with {:?} (KKT residual {:e})",
            sol.status.tag, sol.status.kkt_residual
        ))),
    }
}

/// `κ_N(x; w)`, the first optimal input.
pub fn control(x: &Vector, w: &DisturbanceSequence, cfg: &HorizonConfig) -> Result<Vector> {
    let sol = solve_ocp(x, w, cfg)?;
    match sol.blocking_row {
        _ if sol.is_feasible() => Ok(sol.u_seq[0].clone()),
        Some(row) => Err(Error::NotAdmissible(format!("state (OCP infeasible, blocked by {row})"))),
        None => Err(Error::NotAdmissible("state (OCP infeasible)".into())),
    }
}

/// `V⁰_N(x; w)`, or `None` outside the feasible set.
pub fn value(x: &Vector, w: &DisturbanceSequence, cfg: &HorizonConfig) -> Result<Option<f64>> {
    let sol = solve_ocp(x, w, cfg)?;
    Ok(sol.is_feasible().then_some(sol.value))
}

/// `X_0 = X_f(w_f)`, `X_{i+1} = X ∩ A⁻¹(X_i ⊕ (−BU) ⊕ {−w(N−1−i)})`; the last
/// entry is the feasible set of the OCP.
pub fn controllability_sets(w: &DisturbanceSequence, cfg: &HorizonConfig) -> Result<Vec<HPolytope>> {
    cfg.check(&DVector::zeros(cfg.n()), w)?;
    let ing = &cfg.ingredients;
    let eq = cfg.equilibrium(w)?;
    let neg_bu = linear_image(&(-&ing.plant.b), &ing.sets.u)?;
    let mut sets = vec![ing.xf_bar.translate(&eq.x_f)?];
    for i in 0..cfg.horizon {
        let prev = &sets[i];
        let next = if prev.is_empty() {
            HPolytope::empty(cfg.n())
        } else {
            let shifted = minkowski_sum(prev, &neg_bu)?.translate(&(-cfg.model_disturbance(w, cfg.horizon - 1 - i)))?;
            ing.sets.x.intersect(&shifted.affine_preimage(&ing.plant.a)?)?
        };
        sets.push(next);
    }
    Ok(sets)
}

/// Conventional controller for comparison: preview ignored, `W_f = {0}`,
/// and the terminal set is the maximal admissible set inside the full `X`, `U`.
pub fn baseline_nominal(cfg: &HorizonConfig) -> Result<HorizonConfig> {
    let ing = &cfg.ingredients;
    let mut sets = ing.sets.clone();
    sets.w_f = HPolytope::singleton(&DVector::zeros(cfg.n()));
    let base = assemble(
        &ing.plant,
        &sets,
        &ing.weights.q,
        &ing.weights.s,
        &ing.k_f,
        Some(1.0),
        Some(1.0),
        TOL.invariant_cap,
    )?;
    HorizonConfig::new(base, cfg.horizon, false)
}
