use std::collections::HashMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mpc::{value, DisturbanceSequence, HorizonConfig};
use crate::numkit::Vector;
use crate::polytope::HPolytope;

/// Uniform planar grid, `nx × ny` nodes spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl GridSpec {
    /// 101 × 101 grid over the bounding box of `x` inflated by 5%.
    pub fn around(x: &HPolytope) -> Result<Self> {
        if x.dim() != 2 {
            return Err(Error::Dimension("grids are planar".into()));
        }
        let (lo, hi) = x.bounding_box()?;
        let pad = (&hi - &lo) * 0.025;
        Ok(Self {
            nx: 101,
            ny: 101,
            lo: [lo[0] - pad[0], lo[1] - pad[1]],
            hi: [hi[0] + pad[0], hi[1] + pad[1]],
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 || !(self.hi[0] > self.lo[0]) || !(self.hi[1] > self.lo[1]) {
            return Err(Error::InvalidInput("grid needs at least 2×2 nodes and a nonempty box".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.hi[0] - self.lo[0]) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.hi[1] - self.lo[1]) / (self.ny - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `(i, j)` stored at `j·nx + i`.
    pub fn point(&self, idx: usize) -> Vector {
        let (i, j) = (idx % self.nx, idx / self.nx);
        DVector::from_vec(vec![self.lo[0] + i as f64 * self.dx(), self.lo[1] + j as f64 * self.dy()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cell {
    /// Feasible with `V⁰ ≤ β`.
    Inside,
    /// Feasible with `V⁰ > β`.
    Above,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelMask {
    pub grid: GridSpec,
    pub beta: f64,
    pub cells: Vec<Cell>,
    /// `V⁰` per node, `None` when infeasible.
    pub values: Vec<Option<f64>>,
}

impl LevelMask {
    pub fn inside_count(&self) -> usize {
        self.cells.iter().filter(|c| **c == Cell::Inside).count()
    }

    /// Node count inside times the cell area.
    pub fn area(&self) -> f64 {
        self.inside_count() as f64 * self.grid.dx() * self.grid.dy()
    }

    pub fn contains_node(&self, idx: usize) -> bool {
        self.cells[idx] == Cell::Inside
    }
}

/// Values of `V⁰_N(·; w)` on every grid node, evaluated in parallel.
pub fn value_grid(w: &DisturbanceSequence, grid: &GridSpec, cfg: &HorizonConfig) -> Result<Vec<Option<f64>>> {
    grid.validate()?;
    if cfg.n() != 2 {
        return Err(Error::Dimension("level sets are computed for planar states".into()));
    }
    (0..grid.len())
        .into_par_iter()
        .map(|idx| value(&grid.point(idx), w, cfg))
        .collect()
}

pub fn mask_from_values(values: Vec<Option<f64>>, beta: f64, grid: &GridSpec) -> LevelMask {
    let cells = values
        .iter()
        .map(|v| match v {
            Some(v) if *v <= beta => Cell::Inside,
            Some(_) => Cell::Above,
            None => Cell::Infeasible,
        })
        .collect();
    LevelMask {
        grid: *grid,
        beta,
        cells,
        values,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub sequence: DisturbanceSequence,
    pub mask: LevelMask,
    /// Boundary of `{V⁰ ≤ β}` as polylines.
    pub boundary: Vec<Vec<[f64; 2]>>,
}

/// `Ω_β(w) = {x : V⁰_N(x; w) ≤ β}` on a grid.
pub fn level_set(w: &DisturbanceSequence, beta: f64, grid: &GridSpec, cfg: &HorizonConfig) -> Result<LevelSet> {
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("level {beta} must be positive")));
    }
    let values = value_grid(w, grid, cfg)?;
    let mask = mask_from_values(values, beta, grid);
    let boundary = marching_squares(&mask);
    Ok(LevelSet {
        sequence: w.clone(),
        mask,
        boundary,
    })
}

/// Pointwise union of several masks on the same grid.
pub fn union_masks(masks: &[&LevelMask]) -> Result<LevelMask> {
    let first = masks.first().ok_or_else(|| Error::InvalidInput("union of no masks".into()))?;
    if masks.iter().any(|m| m.grid != first.grid) {
        return Err(Error::InvalidInput("masks live on different grids".into()));
    }
    let len = first.cells.len();
    let mut cells = Vec::with_capacity(len);
    let mut values = Vec::with_capacity(len);
    for idx in 0..len {
        let best = masks.iter().filter_map(|m| m.values[idx]).fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.min(v)))
        });
        values.push(best);
        cells.push(if masks.iter().any(|m| m.cells[idx] == Cell::Inside) {
            Cell::Inside
        } else if best.is_some() {
            Cell::Above
        } else {
            Cell::Infeasible
        });
    }
    Ok(LevelMask {
        grid: first.grid,
        beta: first.beta,
        cells,
        values,
    })
}

/// `∪_i Ω_β(w_i)` over a finite family of previews.
pub fn roa_union(
    sequences: &[DisturbanceSequence],
    beta: f64,
    grid: &GridSpec,
    cfg: &HorizonConfig,
) -> Result<(LevelMask, Vec<LevelSet>)> {
    let sets: Vec<LevelSet> = sequences
        .iter()
        .map(|w| level_set(w, beta, grid, cfg))
        .collect::<Result<_>>()?;
    let refs: Vec<&LevelMask> = sets.iter().map(|s| &s.mask).collect();
    let mut union = union_masks(&refs)?;
    union.beta = beta;
    Ok((union, sets))
}

/// `w, tail(w), tail²(w), …` with `count` entries.
pub fn tail_orbit(w0: &DisturbanceSequence, count: usize) -> Vec<DisturbanceSequence> {
    let mut out = Vec::with_capacity(count);
    let mut w = w0.clone();
    for _ in 0..count {
        out.push(w.clone());
        w = w.tail();
    }
    out
}

/// Iso-line of the inside/outside indicator between grid nodes, joined into polylines.
pub fn marching_squares(mask: &LevelMask) -> Vec<Vec<[f64; 2]>> {
    let g = &mask.grid;
    let field = |i: usize, j: usize| -> f64 {
        let idx = j * g.nx + i;
        match mask.values[idx] {
            Some(v) => v - mask.beta,
            None => f64::INFINITY,
        }
    };
    let pos = |i: usize, j: usize| [g.lo[0] + i as f64 * g.dx(), g.lo[1] + j as f64 * g.dy()];
    let interp = |p: [f64; 2], q: [f64; 2], fp: f64, fq: f64| -> [f64; 2] {
        let t = if fp.is_finite() && fq.is_finite() && fp != fq {
            (fp / (fp - fq)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    };
    let mut segments: Vec<([f64; 2], [f64; 2])> = Vec::new();
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let f: Vec<f64> = corners.iter().map(|&(a, b)| field(a, b)).collect();
            let p: Vec<[f64; 2]> = corners.iter().map(|&(a, b)| pos(a, b)).collect();
            let mut crossings = Vec::new();
            for e in 0..4 {
                let (a, b) = (e, (e + 1) % 4);
                if (f[a] <= 0.0) != (f[b] <= 0.0) {
                    crossings.push(interp(p[a], p[b], f[a], f[b]));
                }
            }
            match crossings.len() {
                2 => segments.push((crossings[0], crossings[1])),
                4 => {
                    segments.push((crossings[0], crossings[1]));
                    segments.push((crossings[2], crossings[3]));
                }
                _ => {}
            }
        }
    }
    join_segments(segments)
}

fn key(p: [f64; 2]) -> (i64, i64) {
    ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64)
}

fn join_segments(segments: Vec<([f64; 2], [f64; 2])>) -> Vec<Vec<[f64; 2]>> {
    let mut adj: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        adj.entry(key(*a)).or_default().push(s);
        adj.entry(key(*b)).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut line = vec![segments[start].0, segments[start].1];
        for forward in [true, false] {
            loop {
                let end = if forward { *line.last().unwrap() } else { line[0] };
                let next = adj
                    .get(&key(end))
                    .and_then(|c| c.iter().copied().find(|s| !used[*s]));
                let Some(s) = next else { break };
                used[s] = true;
                let (a, b) = segments[s];
                let other = if key(a) == key(end) { b } else { a };
                if forward {
                    line.push(other);
                } else {
                    line.insert(0, other);
                }
            }
        }
        lines.push(line);
    }
    lines
}
