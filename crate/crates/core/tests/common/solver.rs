//! Brute-force references for the LP/QP solver.

use nalgebra::{DMatrix, DVector};
use preview_mpc::numkit::QpProblem;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Enumerates every subset of active constraints, solves the equality
/// constrained KKT system for each, and keeps the best primal/dual feasible
/// point. Returns `None` when no subset certifies an optimum.
pub fn exhaustive_oracle(h: &DMatrix<f64>, f: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let d = f.len();
    let q = a.nrows();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for mask in 0u32..(1 << q) {
        let active: Vec<usize> = (0..q).filter(|i| mask & (1 << i) != 0).collect();
        if active.len() > d {
            continue;
        }
        let n = d + active.len();
        let mut kkt = DMatrix::zeros(n, n);
        let mut rhs = DVector::zeros(n);
        kkt.view_mut((0, 0), (d, d)).copy_from(h);
        for j in 0..d {
            rhs[j] = -f[j];
        }
        for (r, &i) in active.iter().enumerate() {
            for j in 0..d {
                kkt[(d + r, j)] = a[(i, j)];
                kkt[(j, d + r)] = a[(i, j)];
            }
            rhs[d + r] = b[i];
        }
        let svd = kkt.clone().svd(false, false);
        if svd.singular_values.min() < 1e-10 * svd.singular_values.max() {
            continue;
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let x = sol.rows(0, d).into_owned();
        let feasible = (a * &x - b).iter().all(|v| *v <= 1e-9);
        let dual_ok = (0..active.len()).all(|r| sol[d + r] >= -1e-9);
        if feasible && dual_ok {
            let val = 0.5 * x.dot(&(h * &x)) + f.dot(&x);
            if best.as_ref().is_none_or(|(_, bv)| val < *bv) {
                best = Some((x, val));
            }
        }
    }
    best
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn kkt_reverify(p: &QpProblem, x: &DVector<f64>, lambda: &DVector<f64>) -> f64 {
    let grad = &p.hessian * x + &p.linear;
    let stat = (&grad + p.a.transpose() * lambda).amax() / (1.0 + grad.amax());
    let slack = &p.a * x - &p.b;
    let primal = slack.iter().fold(0.0_f64, |m, v| m.max(*v));
    let dual = lambda.iter().fold(0.0_f64, |m, v| m.max(-*v));
    let comp = lambda.iter().zip(slack.iter()).fold(0.0_f64, |m, (l, s)| m.max((l * s).abs()));
    stat.max(primal).max(dual).max(comp / (1.0 + lambda.amax()))
}
