//! Refinement with thin rectangles aligned to nearby directions of the
//! current estimate.

use std::f64::consts::TAU;

use super::{Diagnostic, EstimateSet, FixedFreqParams, Flagged, Params, Regime};
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::Point;
use crate::process::SamplePath;
use crate::transport::{truncated_w1, EmpiricalMeasure, PointSet, Region, TransitionIndex};

/// Number of directions minus one: `n` runs over `0..=floor(2 pi ell / eps)`.
pub(crate) fn direction_count(eps: f64, ell: f64) -> usize {
    (TAU * ell / eps).floor() as usize
}

pub(crate) fn direction(n: usize, eps: f64, ell: f64) -> Point {
    let a = n as f64 * eps / ell;
    Point::new(a.cos(), a.sin())
}

/// Rectangle `h` of the stack at `p` along `w`: width `eps` across, half
/// length `ell / 10` along.
fn rectangle(p: Point, w: Point, h: i32, eps: f64, ell: f64) -> Region {
    let c = h as f64 * eps;
    Region::Oriented { origin: p, dir: w, along: (-ell / 10.0, ell / 10.0), across: (c - eps / 2.0, c + eps / 2.0) }
}

/// Lattice points that could pass the proximity gate for some direction:
/// everything within `ell + r` of a point of `initial`, plus a margin.
fn gate_candidates(initial: &PointSet, eps: f64, reach: f64) -> Vec<(i64, i64)> {
    let mut cells: Vec<(i64, i64)> =
        initial.points().iter().map(|p| ((p.x / eps).floor() as i64, (p.y / eps).floor() as i64)).collect();
    cells.sort_unstable();
    cells.dedup();
    let span = (reach / eps).ceil() as i64 + 2;
    let limit = reach + 2.0 * eps;
    let mut out = Vec::new();
    for &(cj, ck) in &cells {
        let c = Point::new((cj as f64 + 0.5) * eps, (ck as f64 + 0.5) * eps);
        for j in cj - span..=cj + span {
            for k in ck - span..=ck + span {
                if Point::new(j as f64 * eps, k as f64 * eps).dist(c) <= limit {
                    out.push((j, k));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// One round: flag lattice points `p` where, for a direction `w` whose ends
/// `p +- ell w` are both within `s_e + 2 eps` of `initial`, the kernel of the
/// central rectangle differs by at least `s` from one of its four neighbours.
pub fn refine(paths: &[SamplePath], p: &FixedFreqParams, initial: &PointSet) -> Result<EstimateSet> {
    p.validate()?;
    let (eps, ell) = (p.eps_grid, p.ell);
    let mut est = EstimateSet::empty(Regime::Refined, eps, Some(Params::Fixed(*p)));
    if initial.is_empty() {
        return Ok(est);
    }
    let radius = p.s_e + 2.0 * eps;
    let nmax = direction_count(eps, ell);
    let dirs: Vec<Point> = (0..=nmax).map(|n| direction(n, eps, ell)).collect();
    let gate_grid = initial.grid();
    let index = TransitionIndex::new(paths, (ell / 5.0).max(eps));
    let candidates = gate_candidates(initial, eps, ell + radius);

    let flagged = exec::map(&candidates, |&(j, k)| -> Result<Option<Flagged>> {
        let pt = Point::new(j as f64 * eps, k as f64 * eps);
        for (n, &w) in dirs.iter().enumerate() {
            let fwd = gate_grid.nearest_dist(initial.points(), pt + w * ell);
            let back = gate_grid.nearest_dist(initial.points(), pt - w * ell);
            if fwd.max(back) > radius {
                continue;
            }
            let centre = index.kernel(&rectangle(pt, w, 0, eps, ell));
            for h in [-2, -1, 1, 2] {
                let side: EmpiricalMeasure = index.kernel(&rectangle(pt, w, h, eps, ell));
                let w1 = truncated_w1(&centre, &side, p.u)?;
                if w1 >= p.s {
                    return Ok(Some(Flagged {
                        index: (j, k),
                        point: pt,
                        diagnostic: Diagnostic::Kernel { w1, offset: (0, h), direction: Some(n) },
                    }));
                }
            }
        }
        Ok(None)
    });
    for f in flagged {
        if let Some(f) = f? {
            est.elements.push(f);
        }
    }
    Ok(est)
}

/// Repeated refinement, halving `s_e` after each round, until `s_e / 2 <= eps`
/// or a round comes back empty. Returns every round's output in order.
pub fn refine_rounds(
    paths: &[SamplePath],
    p: &FixedFreqParams,
    initial: &PointSet,
    max_rounds: usize,
) -> Result<Vec<EstimateSet>> {
    if initial.is_empty() {
        return Err(Error::InvalidInput("refinement needs a non-empty initial estimate".into()));
    }
    let mut rounds = Vec::new();
    let mut current = initial.clone();
    let mut params = *p;
    for _ in 0..max_rounds {
        let est = refine(paths, &params, &current)?;
        if est.is_empty() {
            break;
        }
        current = est.point_set();
        rounds.push(est);
        if params.s_e / 2.0 <= params.eps_grid {
            break;
        }
        params.s_e /= 2.0;
    }
    Ok(rounds)
}
