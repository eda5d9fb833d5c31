//! Visit and back-crossing counts in front of lattice points.
//!
//! For a lattice point `p` and direction `v`, a visit is a sample `X_i` in
//! the strip `<X_i - p, v>` in `[sqrt t, 2 sqrt t]`, `|<X_i - p, v_perp>| <= ell`,
//! and a back-crossing is a visit whose successor satisfies
//! `<X_{i+1} - p, v> < -sqrt t`. A barrier through `p` shows up as many visits
//! and almost no back-crossings.

use std::f64::consts::{FRAC_PI_2, TAU};

use super::refine::{direction, direction_count};
use super::{Diagnostic, EstimateSet, Flagged, HighFreqParams, Params, Regime};
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::Point;
use crate::process::SamplePath;
use crate::transport::TransitionIndex;

/// Counts for one lattice point, indexed by direction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectionCounts {
    pub index: (i64, i64),
    pub visits: Vec<usize>,
    pub back: Vec<usize>,
}

struct Setup {
    rt: f64,
    eps: f64,
    ell: f64,
    step: f64,
    dirs: Vec<Point>,
    reach: f64,
}

impl Setup {
    fn new(paths: &[SamplePath], eps: f64, ell: f64) -> Result<Self> {
        let t = common_t(paths)?;
        let rt = t.sqrt();
        let nmax = direction_count(eps, ell);
        Ok(Self {
            rt,
            eps,
            ell,
            step: eps / ell,
            dirs: (0..=nmax).map(|n| direction(n, eps, ell)).collect(),
            reach: (4.0 * t + ell * ell).sqrt(),
        })
    }

    /// Counts at `p` from the transitions in `near` (a superset of those
    /// whose source lies within `reach` of `p`).
    fn counts(&self, index: &TransitionIndex, p: Point, near: &[usize], visits: &mut [usize], back: &mut [usize]) {
        visits.fill(0);
        back.fill(0);
        let nmax = self.dirs.len() - 1;
        let (rt, ell) = (self.rt, self.ell);
        let mut mark = vec![usize::MAX; self.dirs.len()];
        for &i in near {
            let d = index.sources()[i] - p;
            let r = d.norm();
            if r > self.reach * (1.0 + 1e-12) || r < rt * (1.0 - 1e-12) {
                continue;
            }
            // Directions with the source inside the strip lie within two
            // angular windows around the bearing of the source. The windows
            // only enumerate candidates, so they are padded by one step and
            // every candidate is checked exactly below.
            let phi = d.y.atan2(d.x);
            let lo = (2.0 * rt / r).min(1.0).acos();
            let hi = (rt / r).min(1.0).acos().min(if r <= ell { FRAC_PI_2 } else { (ell / r).asin() });
            if hi + self.step < lo {
                continue;
            }
            let next = index.targets()[i] - p;
            for (a, b) in [(phi - hi, phi - lo), (phi + lo, phi + hi)] {
                for wrap in [-TAU, 0.0, TAU] {
                    let (a, b) = (a + wrap, b + wrap);
                    if b < -self.step || a > nmax as f64 * self.step + self.step {
                        continue;
                    }
                    let n0 = ((a / self.step).floor() - 1.0).max(0.0) as usize;
                    let n1 = (((b / self.step).ceil() + 1.0).max(0.0) as usize).min(nmax);
                    for n in n0..=n1 {
                        if mark[n] == i {
                            continue;
                        }
                        mark[n] = i;
                        let v = self.dirs[n];
                        let along = d.dot(v);
                        if along >= rt && along <= 2.0 * rt && d.dot(v.perp()).abs() <= ell {
                            visits[n] += 1;
                            if next.dot(v) < -rt {
                                back[n] += 1;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Lattice points within `reach` of some source; no other point can
    /// have a visit.
    fn candidates(&self, index: &TransitionIndex) -> Vec<(i64, i64)> {
        let eps = self.eps;
        let mut cells: Vec<(i64, i64)> =
            index.sources().iter().map(|p| ((p.x / eps).floor() as i64, (p.y / eps).floor() as i64)).collect();
        cells.sort_unstable();
        cells.dedup();
        let span = (self.reach / eps).ceil() as i64 + 1;
        let mut out = Vec::with_capacity(cells.len() * 4);
        for &(cj, ck) in &cells {
            for j in cj - span..=cj + span + 1 {
                for k in ck - span..=ck + span + 1 {
                    out.push((j, k));
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

fn common_t(paths: &[SamplePath]) -> Result<f64> {
    let t = paths.first().map(|p| p.t).ok_or_else(|| Error::InvalidInput("no sample paths".into()))?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("sampling interval t = {t} must be positive")));
    }
    if paths.iter().any(|p| p.t != t) {
        return Err(Error::InvalidInput("all tracks must share the sampling interval".into()));
    }
    Ok(t)
}

fn query<'a>(index: &TransitionIndex, grid_reach: f64, p: Point, buf: &'a mut Vec<usize>) -> &'a [usize] {
    use crate::transport::Region;
    let pad = Point::new(grid_reach, grid_reach);
    index.starts_in(&Region::Box { lo: p - pad, hi: p + pad }, buf);
    buf
}

/// Visit and back-crossing counts for every lattice point that has a
/// visit in some direction. Sorted by lattice index.
pub fn high_frequency_counts(paths: &[SamplePath], eps: f64, ell: f64) -> Result<Vec<DirectionCounts>> {
    if !(eps > 0.0 && ell > 0.0) {
        return Err(Error::InvalidInput("eps and ell must be positive".into()));
    }
    let setup = Setup::new(paths, eps, ell)?;
    let index = TransitionIndex::new(paths, setup.reach.max(eps));
    let cands = setup.candidates(&index);
    let m = setup.dirs.len();
    let out = exec::map(&cands, |&(j, k)| {
        let p = Point::new(j as f64 * eps, k as f64 * eps);
        let mut buf = Vec::new();
        let near = query(&index, setup.reach * (1.0 + 1e-9), p, &mut buf);
        let (mut visits, mut back) = (vec![0; m], vec![0; m]);
        setup.counts(&index, p, near, &mut visits, &mut back);
        visits.iter().any(|&v| v > 0).then(|| DirectionCounts { index: (j, k), visits, back })
    });
    Ok(out.into_iter().flatten().collect())
}

/// Flag lattice points where, for some direction, there are at least `n0`
/// visits and the back-crossing fraction is below `s`.
pub fn recover_high_frequency(paths: &[SamplePath], p: &HighFreqParams) -> Result<EstimateSet> {
    p.validate()?;
    let (eps, ell) = (p.eps_grid, p.ell);
    let setup = Setup::new(paths, eps, ell)?;
    let index = TransitionIndex::new(paths, setup.reach.max(eps));
    let cands = setup.candidates(&index);
    let m = setup.dirs.len();
    let flagged = exec::map(&cands, |&(j, k)| {
        let pt = Point::new(j as f64 * eps, k as f64 * eps);
        let mut buf = Vec::new();
        let near = query(&index, setup.reach * (1.0 + 1e-9), pt, &mut buf);
        let (mut visits, mut back) = (vec![0; m], vec![0; m]);
        setup.counts(&index, pt, near, &mut visits, &mut back);
        let mut best: Option<(f64, usize)> = None;
        for n in 0..m {
            if visits[n] < p.n0 {
                continue;
            }
            let ratio = back[n] as f64 / visits[n] as f64;
            if ratio < p.s && best.is_none_or(|(r, _)| ratio < r) {
                best = Some((ratio, n));
            }
        }
        best.map(|(_, n)| Flagged {
            index: (j, k),
            point: pt,
            diagnostic: Diagnostic::Counts { visits: visits[n], back: back[n], direction: n },
        })
    });
    Ok(EstimateSet {
        regime: Regime::HighFreq,
        cell: eps,
        params: Some(Params::High(*p)),
        elements: flagged.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Every direction, every transition, straight from the definition.
    fn brute(paths: &[SamplePath], p: Point, eps: f64, ell: f64) -> (Vec<usize>, Vec<usize>) {
        let rt = paths[0].t.sqrt();
        let nmax = (TAU * ell / eps).floor() as usize;
        let mut visits = vec![0; nmax + 1];
        let mut back = vec![0; nmax + 1];
        for n in 0..=nmax {
            let a = n as f64 * eps / ell;
            let v = Point::new(a.cos(), a.sin());
            for path in paths {
                for w in path.samples.windows(2) {
                    let d = w[0] - p;
                    let along = d.dot(v);
                    if along >= rt && along <= 2.0 * rt && d.dot(v.perp()).abs() <= ell {
                        visits[n] += 1;
                        if (w[1] - p).dot(v) < -rt {
                            back[n] += 1;
                        }
                    }
                }
            }
        }
        (visits, back)
    }

    fn random_walk(seed: u64, n: usize, t: f64) -> SamplePath {
        let mut rng = crate::process::path_rng(seed, 7);
        let mut x = Point::ORIGIN;
        let mut out = Vec::new();
        for _ in 0..n {
            out.push(x);
            x = x + Point::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * (2.0 * t.sqrt());
            x = Point::new(x.x.clamp(-0.5, 0.5), x.y.clamp(-0.5, 0.5));
        }
        SamplePath::from_samples(t, out)
    }

    #[test]
    fn counts_match_brute_force() {
        let t = 0.0025;
        let paths = vec![random_walk(1, 600, t), random_walk(2, 300, t)];
        let (eps, ell) = (0.1, 0.15);
        let counts = high_frequency_counts(&paths, eps, ell).unwrap();
        assert!(!counts.is_empty());
        let mut checked = 0;
        for c in counts.iter().step_by(7) {
            let p = Point::new(c.index.0 as f64 * eps, c.index.1 as f64 * eps);
            let (v, b) = brute(&paths, p, eps, ell);
            assert_eq!(c.visits, v, "visits at {:?}", c.index);
            assert_eq!(c.back, b, "back at {:?}", c.index);
            checked += 1;
        }
        assert!(checked > 5);
        // Points that were skipped really have no visits.
        let listed: std::collections::HashSet<_> = counts.iter().map(|c| c.index).collect();
        for j in -10..=10 {
            for k in -10..=10 {
                if !listed.contains(&(j, k)) {
                    let (v, _) = brute(&paths, Point::new(j as f64 * eps, k as f64 * eps), eps, ell);
                    assert!(v.iter().all(|&x| x == 0), "missed ({j},{k})");
                }
            }
        }
    }

    #[test]
    fn strip_visits_all_crossing_back_are_not_flagged() {
        // t = 1: the strip in front of the origin along +x is x in [1, 2].
        let mut samples = Vec::new();
        for _ in 0..5 {
            samples.extend([Point::new(1.5, 0.0), Point::new(-1.5, 0.0)]);
        }
        let path = SamplePath::from_samples(1.0, samples);
        let p = HighFreqParams { s: 0.5, eps_grid: 10.0, ell: 0.5, n0: 3 };
        let est = recover_high_frequency(&[path.clone()], &p).unwrap();
        assert!(est.elements.iter().all(|e| e.index != (0, 0)));
        let c = high_frequency_counts(&[path], 10.0, 0.5).unwrap();
        let origin = c.iter().find(|c| c.index == (0, 0)).unwrap();
        assert_eq!((origin.visits[0], origin.back[0]), (5, 5));
    }

    #[test]
    fn three_visits_without_return_are_flagged() {
        let v = Point::new(1.5, 0.0);
        let path = SamplePath::from_samples(1.0, vec![v, v, v, Point::new(1.6, 0.0)]);
        let p = HighFreqParams { s: 0.5, eps_grid: 10.0, ell: 0.5, n0: 3 };
        let est = recover_high_frequency(&[path.clone()], &p).unwrap();
        let e = est.elements.iter().find(|e| e.index == (0, 0)).expect("origin flagged");
        assert!(matches!(e.diagnostic, Diagnostic::Counts { visits: 3, back: 0, .. }));
        // One visit short of n0 and the guard holds.
        let short = HighFreqParams { n0: 4, ..p };
        assert!(recover_high_frequency(&[path], &short).unwrap().is_empty());
    }

    #[test]
    fn ratio_equal_to_threshold_is_not_flagged() {
        let (a, b) = (Point::new(1.5, 0.0), Point::new(-1.5, 0.0));
        let path = SamplePath::from_samples(1.0, vec![a, b, a, a, a, a]);
        // Four visits, one back-crossing: ratio 0.25.
        let p = HighFreqParams { s: 0.25, eps_grid: 10.0, ell: 0.5, n0: 1 };
        assert!(recover_high_frequency(&[path.clone()], &p).unwrap().elements.iter().all(|e| e.index != (0, 0)));
        let p = HighFreqParams { s: 0.2500001, ..p };
        assert!(recover_high_frequency(&[path], &p).unwrap().elements.iter().any(|e| e.index == (0, 0)));
    }

    #[test]
    fn guard_never_violated() {
        let path = random_walk(9, 800, 0.0025);
        let p = HighFreqParams { s: 0.3, eps_grid: 0.05, ell: 0.1, n0: 6 };
        let est = recover_high_frequency(&[path], &p).unwrap();
        for e in &est.elements {
            let Diagnostic::Counts { visits, back, .. } = e.diagnostic else { panic!() };
            assert!(visits >= p.n0);
            assert!((back as f64 / visits as f64) < p.s);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn scaling_maps_flagged_points(seed in 0u64..500, k in -2i32..=2) {
            let a = 2f64.powi(k);
            let t = 0.0025;
            let path = random_walk(seed, 300, t);
            let scaled = SamplePath::from_samples(t * a * a, path.samples.iter().map(|&q| q * a).collect());
            let p = HighFreqParams { s: 0.2, eps_grid: 0.05, ell: 0.1, n0: 4 };
            let q = HighFreqParams { eps_grid: p.eps_grid * a, ell: p.ell * a, ..p };
            let e1 = recover_high_frequency(&[path], &p).unwrap();
            let e2 = recover_high_frequency(&[scaled], &q).unwrap();
            let k1: Vec<_> = e1.elements.iter().map(|e| e.index).collect();
            let k2: Vec<_> = e2.elements.iter().map(|e| e.index).collect();
            prop_assert_eq!(k1, k2);
        }
    }
}
