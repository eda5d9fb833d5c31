//! Measures on the plane and distances between them.
//!
//! [`truncated_w1`] is the Wasserstein-1 distance under the capped ground
//! cost `min(|x - y|, u)`, solved exactly. The zero measure stands in for an
//! empty empirical kernel and sits at distance `u` from every probability
//! measure.

mod grid;
mod simplex;

use std::collections::BTreeMap;

pub use grid::PointGrid;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::process::SamplePath;

const MASS_TOL: f64 = 1e-9;

/// A finite weighted point set of total mass one, or the zero measure.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EmpiricalMeasure {
    atoms: Vec<Point>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Equal weights on `points` (repeats add up). Empty input gives the zero measure.
    pub fn uniform(points: Vec<Point>) -> Self {
        let w = 1.0 / points.len().max(1) as f64;
        let weights = vec![w; points.len()];
        Self { atoms: points, weights }
    }

    pub fn new(atoms: Vec<Point>, weights: Vec<f64>) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidMeasure(format!("weight {w} is not a finite non-negative number")));
        }
        if atoms.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite atom".into()));
        }
        let total: f64 = weights.iter().sum();
        if atoms.is_empty() || total == 0.0 {
            return Ok(Self::zero());
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!("total mass {total} is neither 0 nor 1")));
        }
        Ok(Self { atoms, weights })
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0.0
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// A finite set of points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointSet(pub Vec<Point>);

impl PointSet {
    pub fn new(points: Vec<Point>) -> Self {
        Self(points)
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest distance from a point of `self` to the set `other`.
    pub fn directed_distance(&self, other: &PointSet) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let grid = other.grid();
        self.0.iter().map(|&p| grid.nearest_dist(&other.0, p)).fold(0.0, f64::max)
    }

    /// Distance from `p` to the nearest point of the set.
    pub fn distance_to(&self, p: Point) -> f64 {
        self.0.iter().map(|q| q.dist(p)).fold(f64::INFINITY, f64::min)
    }

    pub fn grid(&self) -> PointGrid {
        PointGrid::build(&self.0, default_cell(&self.0))
    }
}

impl From<Vec<Point>> for PointSet {
    fn from(v: Vec<Point>) -> Self {
        Self(v)
    }
}

fn default_cell(points: &[Point]) -> f64 {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    let extent = (hi.x - lo.x).max(hi.y - lo.y);
    if extent > 0.0 {
        extent / (points.len() as f64).sqrt().max(1.0)
    } else {
        1.0
    }
}

/// Region over which an empirical kernel is averaged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    /// Closed axis-aligned box `[lo.x, hi.x] x [lo.y, hi.y]`.
    Box { lo: Point, hi: Point },
    /// Closed rectangle in the frame of a unit direction `dir` anchored at
    /// `origin`: `<x - origin, dir>` in `along`, `<x - origin, dir.perp()>` in `across`.
    Oriented { origin: Point, dir: Point, along: (f64, f64), across: (f64, f64) },
}

impl Region {
    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::Box { lo, hi } => p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y,
            Region::Oriented { origin, dir, along, across } => {
                let d = p - origin;
                let a = d.dot(dir);
                let c = d.dot(dir.perp());
                a >= along.0 && a <= along.1 && c >= across.0 && c <= across.1
            }
        }
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        match *self {
            Region::Box { lo, hi } => (lo, hi),
            Region::Oriented { origin, dir, along, across } => {
                let n = dir.perp();
                let corners = [
                    origin + dir * along.0 + n * across.0,
                    origin + dir * along.0 + n * across.1,
                    origin + dir * along.1 + n * across.0,
                    origin + dir * along.1 + n * across.1,
                ];
                let mut lo = corners[0];
                let mut hi = corners[0];
                for c in &corners[1..] {
                    lo.x = lo.x.min(c.x);
                    lo.y = lo.y.min(c.y);
                    hi.x = hi.x.max(c.x);
                    hi.y = hi.y.max(c.y);
                }
                // Pad for rounding in the rotated coordinates.
                let pad = 1e-12 * (1.0 + origin.norm() + along.1.abs().max(along.0.abs()) + across.1.abs().max(across.0.abs()));
                (lo - Point::new(pad, pad), hi + Point::new(pad, pad))
            }
        }
    }
}

/// Exact truncated Wasserstein-1 distance between `p` and `q`.
///
/// Two zero measures are at distance 0, a zero and a probability measure at
/// distance `u`.
pub fn truncated_w1(p: &EmpiricalMeasure, q: &EmpiricalMeasure, u: f64) -> Result<f64> {
    if !(u > 0.0) {
        return Err(Error::InvalidInput(format!("truncation level u = {u} must be positive")));
    }
    for m in [p, q] {
        if m.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidMeasure("negative weight".into()));
        }
    }
    match (p.is_zero(), q.is_zero()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(u),
        _ => {}
    }
    let (n, m) = (p.len(), q.len());
    let mut cost = Vec::with_capacity(n * m);
    for a in &p.atoms {
        for b in &q.atoms {
            cost.push(a.dist(*b).min(u));
        }
    }
    // Rescale so both sides carry exactly the same total.
    let tp = p.total();
    let tq = q.total();
    let demand: Vec<f64> = q.weights.iter().map(|w| w * tp / tq).collect();
    let value = simplex::solve(&simplex::Problem { supply: &p.weights, demand: &demand, cost: &cost })?;
    Ok(value.clamp(0.0, u))
}

/// Hausdorff distance between two non-empty point sets.
pub fn hausdorff(a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Hausdorff distance needs non-empty sets".into()));
    }
    Ok(a.directed_distance(b).max(b.directed_distance(a)))
}

/// Collapse `q` onto the centers of the grid `d Z^2`, keeping per-bin mass.
pub fn bin_measure(q: &EmpiricalMeasure, d: f64) -> Result<EmpiricalMeasure> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::InvalidInput(format!("bin size d = {d} must be positive")));
    }
    let mut bins: BTreeMap<(i64, i64), f64> = BTreeMap::new();
    for (p, w) in q.atoms.iter().zip(&q.weights) {
        let key = ((p.x / d).floor() as i64, (p.y / d).floor() as i64);
        *bins.entry(key).or_insert(0.0) += w;
    }
    let (atoms, weights) = bins
        .into_iter()
        .map(|((i, j), w)| (Point::new((i as f64 + 0.5) * d, (j as f64 + 0.5) * d), w))
        .unzip();
    Ok(EmpiricalMeasure { atoms, weights })
}

/// Uniform measure on the successors of the samples of `path` lying in
/// `region` (the last sample has no successor and is never counted).
pub fn empirical_kernel(path: &SamplePath, region: &Region) -> EmpiricalMeasure {
    pooled_kernel(std::slice::from_ref(path), region)
}

/// [`empirical_kernel`] pooled over independent tracks. Transitions never
/// cross from one track to the next.
pub fn pooled_kernel(paths: &[SamplePath], region: &Region) -> EmpiricalMeasure {
    let succ = paths
        .iter()
        .flat_map(|p| p.samples.windows(2).filter(|w| region.contains(w[0])).map(|w| w[1]))
        .collect();
    EmpiricalMeasure::uniform(succ)
}

/// Pooled (sample, successor) pairs with a spatial index on the samples.
#[derive(Clone, Debug)]
pub struct TransitionIndex {
    from: Vec<Point>,
    to: Vec<Point>,
    grid: PointGrid,
}

impl TransitionIndex {
    /// `cell` is the bucket size; pick it near the typical query extent.
    pub fn new(paths: &[SamplePath], cell: f64) -> Self {
        let mut from = Vec::new();
        let mut to = Vec::new();
        for p in paths {
            for w in p.samples.windows(2) {
                from.push(w[0]);
                to.push(w[1]);
            }
        }
        let grid = PointGrid::build(&from, cell);
        Self { from, to, grid }
    }

    pub fn len(&self) -> usize {
        self.from.len()
    }

    pub fn is_empty(&self) -> bool {
        self.from.is_empty()
    }

    pub fn sources(&self) -> &[Point] {
        &self.from
    }

    pub fn targets(&self) -> &[Point] {
        &self.to
    }

    /// Indices of transitions starting in `region`, in path order.
    pub fn starts_in(&self, region: &Region, out: &mut Vec<usize>) {
        let (lo, hi) = region.bounding_box();
        self.grid.in_box(&self.from, lo, hi, out);
        if let Region::Oriented { .. } = region {
            out.retain(|&k| region.contains(self.from[k]));
        }
    }

    pub fn kernel(&self, region: &Region) -> EmpiricalMeasure {
        let mut idx = Vec::new();
        self.starts_in(region, &mut idx);
        EmpiricalMeasure::uniform(idx.into_iter().map(|k| self.to[k]).collect())
    }
}
