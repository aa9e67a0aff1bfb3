//! Nominal terminal ingredients and their disturbance-translated versions.
//!
//! The nominal design is a linear law `ū = K_f x` with quadratic terminal
//! cost `xᵀPx`. A terminal disturbance `w_f` shifts everything to the
//! equilibrium `x_f = Ψ w_f`, `u_f = K_f x_f` with `Ψ = (I − Φ)⁻¹`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConstraintSpec, PlantModel};
use crate::numkit::{
    controllability_matrix, identity, inverse, is_symmetric, mat_pow, max_eigenvalue, min_eigenvalue, serde_rows,
    solve_dare, solve_discrete_lyapunov, spectral_radius, Mat, Vector, TOL,
};
use crate::polytope::{linear_image, max_admissible_invariant, HPolytope};

/// How the terminal gain `K_f` (with `u = K_f x`) is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GainChoice {
    User {
        #[serde(rename = "K", with = "serde_rows::mat")]
        k: Mat,
    },
    Lqr,
    /// Places every closed-loop pole at the origin; single-input plants only.
    Deadbeat,
}

impl Default for GainChoice {
    fn default() -> Self {
        GainChoice::Lqr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    #[serde(rename = "Q", with = "serde_rows::mat")]
    pub q: Mat,
    #[serde(rename = "S", with = "serde_rows::mat")]
    pub s: Mat,
    #[serde(rename = "P", with = "serde_rows::mat")]
    pub p: Mat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalIngredients {
    pub plant: PlantModel,
    pub sets: ConstraintSpec,
    #[serde(rename = "K_f", with = "serde_rows::mat")]
    pub k_f: Mat,
    #[serde(rename = "Phi", with = "serde_rows::mat")]
    pub phi: Mat,
    #[serde(rename = "Psi", with = "serde_rows::mat")]
    pub psi: Mat,
    pub beta_x: f64,
    pub beta_u: f64,
    pub alpha_x: f64,
    pub alpha_u: f64,
    #[serde(rename = "Xf_bar")]
    pub xf_bar: HPolytope,
    pub determination_index: usize,
    pub weights: CostWeights,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    #[serde(with = "serde_rows::vector")]
    pub x_f: Vector,
    #[serde(with = "serde_rows::vector")]
    pub u_f: Vector,
    #[serde(with = "serde_rows::vector")]
    pub w_f: Vector,
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub gain: GainChoice,
    /// Overrides for the constraint tightening; default `1 − α`.
    pub beta_x: Option<f64>,
    pub beta_u: Option<f64>,
    pub invariant_cap: usize,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            gain: GainChoice::Lqr,
            beta_x: None,
            beta_u: None,
            invariant_cap: TOL.invariant_cap,
        }
    }
}

fn check_weights(q: &Mat, s: &Mat, n: usize, m: usize) -> Result<()> {
    if q.shape() != (n, n) || s.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "weights must be {n}x{n} and {m}x{m}, got {:?} and {:?}",
            q.shape(),
            s.shape()
        )));
    }
    if !is_symmetric(q, 1e-10 * q.amax().max(1.0)) || !is_symmetric(s, 1e-10 * s.amax().max(1.0)) {
        return Err(Error::InvalidInput("Q and S must be symmetric".into()));
    }
    let qmin = min_eigenvalue(q);
    if qmin < -1e-9 * q.amax().max(1.0) {
        return Err(Error::NotPsd { min_eig: qmin });
    }
    let smin = min_eigenvalue(s);
    if smin <= 0.0 {
        return Err(Error::InvalidInput(format!("S must be positive definite (min eigenvalue {smin:e})")));
    }
    Ok(())
}

/// Gain with all closed-loop poles at zero by Ackermann's formula,
/// `K_f = −e_nᵀ C⁻¹ Aⁿ` with `C` the controllability matrix.
pub fn deadbeat_gain(plant: &PlantModel) -> Result<Mat> {
    if plant.m() != 1 {
        return Err(Error::Synthesis("deadbeat gain is only available for single-input plants".into()));
    }
    let n = plant.n();
    let c_inv = inverse(&controllability_matrix(&plant.a, &plant.b))?;
    let last: Mat = c_inv.rows(n - 1, 1).into_owned();
    Ok(-(last * mat_pow(&plant.a, n)))
}

pub fn select_gain(plant: &PlantModel, q: &Mat, s: &Mat, choice: &GainChoice) -> Result<Mat> {
    let k = match choice {
        GainChoice::User { k } => {
            if k.shape() != (plant.m(), plant.n()) {
                return Err(Error::Dimension(format!(
                    "K_f must be {}x{}, got {:?}",
                    plant.m(),
                    plant.n(),
                    k.shape()
                )));
            }
            k.clone()
        }
        GainChoice::Lqr => -solve_dare(&plant.a, &plant.b, q, s)?.k,
        GainChoice::Deadbeat => deadbeat_gain(plant)?,
    };
    let radius = spectral_radius(&(&plant.a + &plant.b * &k));
    if radius >= 1.0 - TOL.stability_margin {
        return Err(Error::Synthesis(format!("terminal gain is not stabilising (spectral radius {radius})")));
    }
    Ok(k)
}

/// Builds the ingredients for a given gain and scalings without checking
/// that the scalings add up to at most one.
pub fn assemble(
    plant: &PlantModel,
    sets: &ConstraintSpec,
    q: &Mat,
    s: &Mat,
    k_f: &Mat,
    beta_x: Option<f64>,
    beta_u: Option<f64>,
    cap: usize,
) -> Result<TerminalIngredients> {
    plant.validate()?;
    let (n, m) = (plant.n(), plant.m());
    check_weights(q, s, n, m)?;
    let phi = &plant.a + &plant.b * k_f;
    let radius = spectral_radius(&phi);
    if radius >= 1.0 - TOL.stability_margin {
        return Err(Error::Unstable { radius });
    }
    let psi = inverse(&(identity(n) - &phi))?;
    let p = solve_discrete_lyapunov(&phi, &(q + k_f.transpose() * s * k_f))?;

    let psi_wf = linear_image(&psi, &sets.w_f)?;
    let pi_psi_wf = linear_image(&(k_f * &psi), &sets.w_f)?;
    let alpha_x = sets.x.min_scale_containment(&psi_wf)?;
    let alpha_u = sets.u.min_scale_containment(&pi_psi_wf)?;
    let beta_x = beta_x.unwrap_or(1.0 - alpha_x);
    let beta_u = beta_u.unwrap_or(1.0 - alpha_u);
    for (name, b) in [("beta_x", beta_x), ("beta_u", beta_u)] {
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::Synthesis(format!("{name} = {b} must lie in (0, 1]")));
        }
    }

    let admissible = sets
        .x
        .scale(beta_x)?
        .intersect(&sets.u.scale(beta_u)?.affine_preimage(k_f)?)?;
    let inv = max_admissible_invariant(&phi, &admissible, cap)?;

    Ok(TerminalIngredients {
        plant: plant.clone(),
        sets: sets.clone(),
        k_f: k_f.clone(),
        phi,
        psi,
        beta_x,
        beta_u,
        alpha_x,
        alpha_u,
        xf_bar: inv.set,
        determination_index: inv.determination_index,
        weights: CostWeights {
            q: q.clone(),
            s: s.clone(),
            p,
        },
    })
}

/// Synthesises and checks the nominal terminal ingredients for the
/// tightened sets `(β_x X, β_u U)`.
pub fn synth_nominal(
    plant: &PlantModel,
    sets: &ConstraintSpec,
    q: &Mat,
    s: &Mat,
    opts: &SynthOptions,
) -> Result<TerminalIngredients> {
    plant.validate()?;
    sets.validate(plant)?;
    if !plant.is_reachable() {
        return Err(Error::InvalidInput("(A, B) is not reachable".into()));
    }
    check_weights(q, s, plant.n(), plant.m())?;
    let k_f = select_gain(plant, q, s, &opts.gain)?;
    let ing = assemble(plant, sets, q, s, &k_f, opts.beta_x, opts.beta_u, opts.invariant_cap)?;
    if ing.alpha_x >= 1.0 || ing.alpha_u >= 1.0 {
        return Err(Error::Synthesis(format!(
            "terminal disturbances do not fit: alpha_x = {:.6}, alpha_u = {:.6}",
            ing.alpha_x, ing.alpha_u
        )));
    }
    if ing.alpha_x + ing.beta_x > 1.0 + 1e-12 || ing.alpha_u + ing.beta_u > 1.0 + 1e-12 {
        return Err(Error::Synthesis(format!(
            "scalings exceed one: alpha_x + beta_x = {:.6}, alpha_u + beta_u = {:.6}",
            ing.alpha_x + ing.beta_x,
            ing.alpha_u + ing.beta_u
        )));
    }
    ing.check_invariants()?;
    Ok(ing)
}

impl TerminalIngredients {
    pub fn n(&self) -> usize {
        self.plant.n()
    }

    pub fn m(&self) -> usize {
        self.plant.m()
    }

    /// Stability of `Φ`, `X̄_f ⊆ β_x X`, `K_f X̄_f ⊆ β_u U`, and invariance of `X̄_f`.
    pub fn check_invariants(&self) -> Result<()> {
        let radius = spectral_radius(&self.phi);
        if radius >= 1.0 - TOL.stability_margin {
            return Err(Error::Unstable { radius });
        }
        if !self.sets.x.scale(self.beta_x)?.contains_set(&self.xf_bar)? {
            return Err(Error::Synthesis("terminal set leaves the tightened state set".into()));
        }
        let u = &self.sets.u;
        for i in 0..u.num_constraints() {
            let dir = self.k_f.transpose() * u.a().row(i).transpose();
            if self.xf_bar.support(&dir)? > self.beta_u * u.b()[i] + TOL.containment {
                return Err(Error::Synthesis("terminal law leaves the tightened input set".into()));
            }
        }
        if !self.xf_bar.affine_preimage(&self.phi)?.contains_set(&self.xf_bar)? {
            return Err(Error::Synthesis("terminal set is not invariant".into()));
        }
        Ok(())
    }

    /// `x_f = Ψ w_f`, `u_f = K_f x_f` for `w_f ∈ W_f`.
    pub fn equilibrium(&self, w_f: &Vector) -> Result<Equilibrium> {
        if w_f.len() != self.n() {
            return Err(Error::Dimension("terminal disturbance has the wrong length".into()));
        }
        if !self.sets.w_f.contains(w_f, 1e-7) {
            return Err(Error::NotAdmissible(format!("w_f = {:?}", w_f.as_slice())));
        }
        let e = self.equilibrium_unchecked(w_f);
        let residual = (&self.phi * &e.x_f + w_f - &e.x_f).amax();
        if residual > 1e-10 * e.x_f.amax().max(1.0) {
            return Err(Error::Numerical(format!("equilibrium residual {residual:e}")));
        }
        Ok(e)
    }

    pub(crate) fn equilibrium_unchecked(&self, w_f: &Vector) -> Equilibrium {
        let x_f = &self.psi * w_f;
        let u_f = &self.k_f * &x_f;
        Equilibrium {
            x_f,
            u_f,
            w_f: w_f.clone(),
        }
    }

    /// `X̄_f ⊕ {x_f(w_f)}`.
    pub fn translated_terminal_set(&self, w_f: &Vector) -> Result<HPolytope> {
        let e = self.equilibrium(w_f)?;
        self.xf_bar.translate(&e.x_f)
    }

    pub fn stage_cost(&self, x: &Vector, u: &Vector, eq: &Equilibrium) -> f64 {
        let dx = x - &eq.x_f;
        let du = u - &eq.u_f;
        dx.dot(&(&self.weights.q * &dx)) + du.dot(&(&self.weights.s * &du))
    }

    pub fn terminal_cost(&self, x: &Vector, eq: &Equilibrium) -> f64 {
        let dx = x - &eq.x_f;
        dx.dot(&(&self.weights.p * &dx))
    }

    /// `K_f(x − x_f) + u_f`, with a flag telling whether `x` lies in the
    /// translated terminal set.
    pub fn terminal_law(&self, x: &Vector, eq: &Equilibrium) -> (Vector, bool) {
        let z = x - &eq.x_f;
        let u = &self.k_f * &z + &eq.u_f;
        (u, self.xf_bar.contains(&z, 1e-9))
    }

    /// Constants `c₁ = λ_min(Q)` and `c₂ = λ_max(P)`.
    pub fn cost_bounds(&self) -> (f64, f64) {
        (min_eigenvalue(&self.weights.q), max_eigenvalue(&self.weights.p))
    }

    /// Checks invariance, cost descent, admissibility and geometric decay of
    /// the terminal loop on sampled points of `X_f(w_f)`.
    pub fn verify_proposition1(&self, w_f: &Vector, n_samples: usize) -> Result<Prop1Report> {
        const TOL_CHECK: f64 = 1e-8;
        const ROLLOUT: usize = 60;
        let eq = self.equilibrium(w_f)?;
        let xf_set = self.xf_bar.translate(&eq.x_f)?;

        let mut zs = self.xf_bar.halton_samples(n_samples)?;
        zs.extend(self.xf_bar.facet_centers()?);
        if self.n() == 2 {
            zs.extend(self.xf_bar.vertices_2d()?);
        }

        let (c1, c2) = self.cost_bounds();
        let rate = (1.0 - c1 / c2).max(0.0);
        let mut inv = Worst::default();
        let mut desc = Worst::default();
        let mut adm = Worst::default();
        let mut conv = Worst::default();
        for z in &zs {
            let x = z + &eq.x_f;
            let (u, _) = self.terminal_law(&x, &eq);
            let xn = self.plant.step(&x, &u, w_f);
            inv.push(xf_set.violation(&xn));
            let d = self.terminal_cost(&xn, &eq) - self.terminal_cost(&x, &eq) + self.stage_cost(&x, &u, &eq);
            desc.push(d);
            adm.push(self.sets.x.violation(&x).max(self.sets.u.violation(&u)));

            let v0 = self.terminal_cost(&x, &eq);
            let mut xk = x;
            let mut bound = v0;
            for _ in 0..ROLLOUT {
                let (uk, _) = self.terminal_law(&xk, &eq);
                xk = self.plant.step(&xk, &uk, w_f);
                bound *= rate;
                conv.push((self.terminal_cost(&xk, &eq) - bound) / v0.max(1.0));
            }
        }

        // Set-level admissibility: X_f(w_f) ⊆ X and K_f X̄_f + u_f ⊆ U via support functions.
        adm.push(self.sets.x.containment_gap(&xf_set)?);
        let u = &self.sets.u;
        for i in 0..u.num_constraints() {
            let a = u.a().row(i).transpose();
            let h = self.xf_bar.support(&(self.k_f.transpose() * &a))? + a.dot(&eq.u_f);
            adm.push(h - u.b()[i]);
        }

        let samples = zs.len();
        Ok(Prop1Report {
            w_f: w_f.iter().copied().collect(),
            samples,
            invariance: inv.finish(TOL_CHECK),
            descent: desc.finish(TOL_CHECK),
            admissibility: adm.finish(TOL_CHECK),
            convergence: conv.finish(TOL_CHECK),
        })
    }
}

#[derive(Default)]
struct Worst(Option<f64>);

impl Worst {
    fn push(&mut self, v: f64) {
        self.0 = Some(self.0.map_or(v, |w| w.max(v)));
    }

    fn finish(self, tol: f64) -> CheckResult {
        let worst = self.0.unwrap_or(f64::NEG_INFINITY);
        CheckResult {
            passed: worst <= tol,
            worst,
        }
    }
}

/// Outcome of one sampled check; `worst` is the largest violation (≤ 0 is clean).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckResult {
    pub passed: bool,
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prop1Report {
    pub w_f: Vec<f64>,
    pub samples: usize,
    pub invariance: CheckResult,
    pub descent: CheckResult,
    pub admissibility: CheckResult,
    pub convergence: CheckResult,
}

impl Prop1Report {
    pub fn all_passed(&self) -> bool {
        self.invariance.passed && self.descent.passed && self.admissibility.passed && self.convergence.passed
    }
}
