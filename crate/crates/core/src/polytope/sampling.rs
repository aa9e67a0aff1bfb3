use nalgebra::DVector;
use rand::Rng;

use super::HPolytope;
use crate::error::{Error, Result};
use crate::numkit::Vector;

const PRIMES: [u32; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u32) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as u64;
    while index > 0 {
        f /= base as f64;
        r += f * (index % b) as f64;
        index /= b;
    }
    r
}

/// Low-discrepancy points in `[0, 1)^dim`, skipping index 0.
#[derive(Debug, Clone)]
pub struct HaltonSequence {
    dim: usize,
    next: u64,
}

impl HaltonSequence {
    pub fn new(dim: usize) -> Self {
        assert!(dim <= PRIMES.len(), "Halton sequence supports up to {} dimensions", PRIMES.len());
        Self { dim, next: 1 }
    }
}

impl Iterator for HaltonSequence {
    type Item = Vector;

    fn next(&mut self) -> Option<Vector> {
        let i = self.next;
        self.next += 1;
        Some(DVector::from_fn(self.dim, |j, _| halton(i, PRIMES[j])))
    }
}

pub fn halton_points(dim: usize, n: usize) -> Vec<Vector> {
    HaltonSequence::new(dim).take(n).collect()
}

impl HPolytope {
    /// `n` points of a full-dimensional set from a Halton sequence over its
    /// bounding box, keeping those inside.
    pub fn halton_samples(&self, n: usize) -> Result<Vec<Vector>> {
        let (lo, hi) = self.bounding_box()?;
        let mut out = Vec::with_capacity(n);
        let cap = 1000 * n.max(1) + 10_000;
        for (tries, u) in HaltonSequence::new(self.dim()).enumerate() {
            if out.len() >= n {
                break;
            }
            if tries >= cap {
                return Err(Error::Numerical("set too thin for rejection sampling".into()));
            }
            let x = &lo + (&hi - &lo).component_mul(&u);
            if self.contains(&x, 0.0) {
                out.push(x);
            }
        }
        Ok(out)
    }

    /// `n` points as random convex combinations of extreme points found in
    /// random directions; works for lower-dimensional sets such as segments.
    pub fn random_points<R: Rng>(&self, n: usize, rng: &mut R) -> Result<Vec<Vector>> {
        let d = self.dim();
        let mut extremes: Vec<Vector> = Vec::new();
        for j in 0..d {
            for s in [1.0, -1.0] {
                let mut e = DVector::zeros(d);
                e[j] = s;
                extremes.push(self.support_point(&e)?);
            }
        }
        for _ in 0..2 * d + 2 {
            let dir = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            extremes.push(self.support_point(&dir)?);
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let w: Vec<f64> = (0..extremes.len()).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let total: f64 = w.iter().sum();
            let mut x = DVector::zeros(d);
            for (p, wi) in extremes.iter().zip(&w) {
                x += p * (wi / total);
            }
            out.push(x);
        }
        Ok(out)
    }

    /// Extreme points of the set along the coordinate axes and diagonals; for
    /// a segment these are its two endpoints.
    pub fn extreme_points(&self) -> Result<Vec<Vector>> {
        let d = self.dim();
        let mut dirs: Vec<Vector> = Vec::new();
        for j in 0..d {
            for s in [1.0, -1.0] {
                let mut e = DVector::zeros(d);
                e[j] = s;
                dirs.push(e);
            }
        }
        for s in [1.0, -1.0] {
            dirs.push(DVector::from_element(d, s));
        }
        let mut out: Vec<Vector> = Vec::new();
        for dir in dirs {
            let p = self.support_point(&dir)?;
            if !out.iter().any(|q| (q - &p).amax() < 1e-9) {
                out.push(p);
            }
        }
        Ok(out)
    }
}
