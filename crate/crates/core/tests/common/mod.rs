//! Test-only geometry and scenario helpers that do not go through the
//! library's set engine.
#![allow(dead_code)]

pub mod solver;

use nalgebra::DVector;
use preview_mpc::polytope::HPolytope;
use preview_mpc::scenario::ScenarioConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type P2 = [f64; 2];

/// Planar inequality list `g·x ≤ h`.
#[derive(Clone, Debug)]
pub struct Halfplanes(pub Vec<(P2, f64)>);

impl Halfplanes {
    pub fn of(p: &HPolytope) -> Self {
        Self(
            (0..p.num_constraints())
                .map(|i| ([p.a()[(i, 0)], p.a()[(i, 1)]], p.b()[i]))
                .collect(),
        )
    }

    pub fn from_rows(rows: &[(P2, f64)]) -> Self {
        Self(rows.to_vec())
    }

    pub fn contains(&self, x: P2, tol: f64) -> bool {
        self.0.iter().all(|(g, h)| g[0] * x[0] + g[1] * x[1] <= h + tol)
    }

    /// Vertices by intersecting every pair of boundary lines.
    pub fn vertices(&self) -> Vec<P2> {
        let mut out: Vec<P2> = Vec::new();
        for i in 0..self.0.len() {
            for j in i + 1..self.0.len() {
                let ((a, p), (b, q)) = (self.0[i], self.0[j]);
                let det = a[0] * b[1] - a[1] * b[0];
                if det.abs() < 1e-12 {
                    continue;
                }
                let x = [(p * b[1] - a[1] * q) / det, (a[0] * q - p * b[0]) / det];
                if self.contains(x, 1e-9) && !out.iter().any(|v| (v[0] - x[0]).abs() + (v[1] - x[1]).abs() < 1e-9) {
                    out.push(x);
                }
            }
        }
        out
    }
}

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain, counter-clockwise, collinear points dropped.
pub fn convex_hull(mut pts: Vec<P2>) -> Vec<P2> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<P2> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-12 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<P2> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-12 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Membership in a counter-clockwise convex polygon.
pub fn in_polygon(poly: &[P2], x: P2, tol: f64) -> bool {
    if poly.len() < 3 {
        return false;
    }
    (0..poly.len()).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        cross(a, b, x) / len >= -tol
    })
}

pub fn minkowski_vertices(p: &[P2], q: &[P2]) -> Vec<P2> {
    convex_hull(p.iter().flat_map(|a| q.iter().map(move |b| [a[0] + b[0], a[1] + b[1]])).collect())
}

pub fn uniform_points(n: usize, lo: P2, hi: P2, seed: u64) -> Vec<P2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| [rng.gen_range(lo[0]..hi[0]), rng.gen_range(lo[1]..hi[1])])
        .collect()
}

pub fn v2(x: P2) -> DVector<f64> {
    DVector::from_column_slice(&x)
}

pub fn scenario() -> ScenarioConfig {
    ScenarioConfig::default_example()
}

/// The double-integrator disturbance segment `{|w₁| ≤ r, w₁ = w₂}`.
pub fn segment(r: f64) -> HPolytope {
    HPolytope::from_rows(
        &[vec![1.0, 0.0], vec![-1.0, 0.0], vec![1.0, -1.0], vec![-1.0, 1.0]],
        &[r, r, 0.0, 0.0],
    )
    .unwrap()
}

/// Number of points on which two membership predicates agree.
pub fn agreement(points: &[P2], a: impl Fn(P2) -> bool, b: impl Fn(P2) -> bool) -> usize {
    points.iter().filter(|&&x| a(x) == b(x)).count()
}
