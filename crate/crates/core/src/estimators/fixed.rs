//! Box-kernel comparison on an axis grid.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{closed_cells, Diagnostic, EstimateSet, FixedFreqParams, Flagged, Params, Regime};
use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::Point;
use crate::process::SamplePath;
use crate::transport::{truncated_w1, EmpiricalMeasure};

/// Offsets with `|h_j|, |h_k| <= 2` that are lexicographically positive.
/// Every unordered pair of compared boxes is visited once through them.
const FORWARD: [(i64, i64); 12] =
    [(0, 1), (0, 2), (1, -2), (1, -1), (1, 0), (1, 1), (1, 2), (2, -2), (2, -1), (2, 0), (2, 1), (2, 2)];

/// Largest distance between a box's kernel and any of its 24 neighbours.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxScore {
    pub w1: f64,
    /// Offset of the neighbour that attained `w1`.
    pub offset: (i32, i32),
}

/// Successor lists keyed by closed grid box. A sample on a grid line
/// belongs to every box sharing that line.
fn box_kernels(paths: &[SamplePath], eps: f64) -> HashMap<(i64, i64), Vec<Point>> {
    let mut boxes: HashMap<(i64, i64), Vec<Point>> = HashMap::new();
    for path in paths {
        for w in path.samples.windows(2) {
            let (xs, nx) = closed_cells(w[0].x, eps);
            let (ys, ny) = closed_cells(w[0].y, eps);
            for &j in &xs[..nx] {
                for &k in &ys[..ny] {
                    boxes.entry((j, k)).or_default().push(w[1]);
                }
            }
        }
    }
    boxes
}

/// Max neighbour distance for every box that has data or lies within two
/// boxes of one; all other boxes compare zero measures and score 0.
pub fn fixed_frequency_scores(paths: &[SamplePath], eps: f64, u: f64) -> Result<BTreeMap<(i64, i64), BoxScore>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("box side {eps} must be positive")));
    }
    let boxes = box_kernels(paths, eps);
    let kernels: HashMap<(i64, i64), EmpiricalMeasure> =
        boxes.into_iter().map(|(key, succ)| (key, EmpiricalMeasure::uniform(succ))).collect();
    let mut candidates = BTreeSet::new();
    for &(j, k) in kernels.keys() {
        for dj in -2..=2 {
            for dk in -2..=2 {
                candidates.insert((j + dj, k + dk));
            }
        }
    }
    let candidates: Vec<(i64, i64)> = candidates.into_iter().collect();
    let zero = EmpiricalMeasure::zero();

    // Each box computes the pairs it leads; both ends receive the value.
    let pairs = exec::map(&candidates, |&(j, k)| -> Result<Vec<((i64, i64), (i64, i64), f64)>> {
        let a = kernels.get(&(j, k));
        let mut out = Vec::new();
        for &(dj, dk) in &FORWARD {
            let key = (j + dj, k + dk);
            let b = kernels.get(&key);
            if a.is_none() && b.is_none() {
                continue;
            }
            let w = truncated_w1(a.unwrap_or(&zero), b.unwrap_or(&zero), u)?;
            out.push(((j, k), key, w));
        }
        Ok(out)
    });

    let mut best: BTreeMap<(i64, i64), Option<BoxScore>> = candidates.iter().map(|&key| (key, None)).collect();
    let mut update = |key: (i64, i64), w1: f64, offset: (i32, i32)| {
        let slot = best.get_mut(&key).expect("pairs stay within the candidate set");
        // Larger value wins, then the smaller offset, so the result does not
        // depend on the order pairs are merged in.
        let replace = match slot {
            None => true,
            Some(s) => w1 > s.w1 || (w1 == s.w1 && offset < s.offset),
        };
        if replace {
            *slot = Some(BoxScore { w1, offset });
        }
    };
    for list in pairs {
        for (a, b, w) in list? {
            let h = ((b.0 - a.0) as i32, (b.1 - a.1) as i32);
            update(a, w, h);
            update(b, w, (-h.0, -h.1));
        }
    }
    let scores = best
        .into_iter()
        .map(|(key, s)| (key, s.unwrap_or(BoxScore { w1: 0.0, offset: (0, 0) })))
        .collect();
    Ok(scores)
}

/// Flag every box whose kernel is at distance at least `s` from the kernel
/// of some box within two steps in each coordinate.
pub fn recover_fixed_frequency(paths: &[SamplePath], p: &FixedFreqParams) -> Result<EstimateSet> {
    if !(p.s > 0.0 && p.eps_grid > 0.0 && p.u > 0.0) {
        return Err(Error::InvalidInput("s, eps_grid and u must be positive".into()));
    }
    let eps = p.eps_grid;
    let scores = fixed_frequency_scores(paths, eps, p.u)?;
    let elements = scores
        .into_iter()
        .filter(|(_, s)| s.w1 >= p.s)
        .map(|((j, k), s)| Flagged {
            index: (j, k),
            point: Point::new(j as f64 * eps, k as f64 * eps),
            diagnostic: Diagnostic::Kernel { w1: s.w1, offset: s.offset, direction: None },
        })
        .collect();
    Ok(EstimateSet { regime: Regime::FixedFreq, cell: eps, params: Some(Params::Fixed(*p)), elements })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(s: f64, eps: f64, u: f64) -> FixedFreqParams {
        FixedFreqParams { s, eps_grid: eps, u, ell: 1.0, s_e: 1.0 }
    }

    #[test]
    fn constant_path_flags_nothing_inside() {
        let path = SamplePath::from_samples(0.1, vec![Point::new(0.5, 0.5); 50]);
        // u below s: the single occupied box differs from its empty
        // neighbours by u only.
        let est = recover_fixed_frequency(&[path.clone()], &params(1.0, 1.0, 0.5)).unwrap();
        assert!(est.is_empty());
        // With u >= s the empty neighbours of an occupied box are flagged
        // together with it: the edge of the data is an edge of the domain.
        let est = recover_fixed_frequency(&[path], &params(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(est.len(), 25);
    }

    #[test]
    fn two_kernel_discontinuity_flags_both_boxes() {
        // Successors from box A=(0,0) land 10 away; from box B=(1,0) they
        // stay put. W between the two kernels is 10.
        let a = Point::new(0.5, 0.5);
        let b = Point::new(1.5, 0.5);
        let far = Point::new(0.5, 10.5);
        let mut samples = Vec::new();
        for _ in 0..5 {
            samples.extend([a, far, b, b]);
        }
        let path = SamplePath::from_samples(1.0, samples);
        let scores = fixed_frequency_scores(&[path.clone()], 1.0, 10.0).unwrap();
        let sa = scores[&(0, 0)];
        assert!(sa.w1 >= 9.999, "{sa:?}");
        let est = recover_fixed_frequency(&[path], &params(1.0, 1.0, 10.0)).unwrap();
        let keys: Vec<_> = est.elements.iter().map(|e| e.index).collect();
        assert!(keys.contains(&(0, 0)) && keys.contains(&(1, 0)));
    }

    #[test]
    fn samples_on_grid_lines_join_every_adjacent_box() {
        let path = SamplePath::from_samples(1.0, vec![Point::new(1.0, 1.0), Point::new(1.0, 1.0)]);
        let boxes = box_kernels(&[path], 1.0);
        let mut keys: Vec<_> = boxes.keys().copied().collect();
        keys.sort();
        assert_eq!(keys, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn tracks_do_not_link() {
        let a = SamplePath::from_samples(1.0, vec![Point::new(0.5, 0.5)]);
        let b = SamplePath::from_samples(1.0, vec![Point::new(5.5, 0.5)]);
        assert!(box_kernels(&[a, b], 1.0).is_empty());
    }

    fn jitter_path(seed: u64, n: usize) -> SamplePath {
        use rand::Rng;
        let mut rng = crate::process::path_rng(seed, 0);
        let mut x = Point::new(0.0, 0.0);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(x);
            x = Point::new(
                (x.x + rng.random_range(-0.3..0.3)).clamp(-1.0, 1.0),
                (x.y + rng.random_range(-0.3..0.3)).clamp(-1.0, 0.0),
            );
        }
        SamplePath::from_samples(0.01, out)
    }

    #[test]
    fn deterministic() {
        let p = jitter_path(3, 400);
        let par = params(0.25, 0.25, 0.5);
        let a = recover_fixed_frequency(std::slice::from_ref(&p), &par).unwrap();
        let b = recover_fixed_frequency(&[p], &par).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn scaling_maps_flagged_boxes(seed in 0u64..1000, k in -2i32..=2) {
            let a = 2f64.powi(k);
            let p = jitter_path(seed, 150);
            let scaled = SamplePath::from_samples(p.t * a * a, p.samples.iter().map(|&q| q * a).collect());
            let base = params(0.2, 0.25, 0.4);
            let big = FixedFreqParams { s: base.s * a, eps_grid: base.eps_grid * a, u: base.u * a, ell: base.ell * a, s_e: base.s_e * a };
            let e1 = recover_fixed_frequency(&[p], &base).unwrap();
            let e2 = recover_fixed_frequency(&[scaled], &big).unwrap();
            let k1: Vec<_> = e1.elements.iter().map(|e| e.index).collect();
            let k2: Vec<_> = e2.elements.iter().map(|e| e.index).collect();
            prop_assert_eq!(k1, k2);
            for (x, y) in e1.elements.iter().zip(&e2.elements) {
                prop_assert_eq!(x.point * a, y.point);
            }
        }
    }
}
