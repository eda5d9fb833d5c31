//! Uniform-grid bucket index over the segments of a closed polyline.

use super::point::{project_onto_segment, Point};

/// Result of a nearest-segment query.
#[derive(Clone, Copy, Debug)]
pub struct SegmentHit {
    pub segment: usize,
    /// Position along the segment, in `[0, 1]`.
    pub s: f64,
    pub point: Point,
    pub dist: f64,
}

#[derive(Clone, Debug)]
pub struct SegmentIndex {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    /// CSR layout: segments of cell `c` are `items[offsets[c]..offsets[c + 1]]`.
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl SegmentIndex {
    /// `vertices` is a closed polyline (first == last); segment `k` joins
    /// vertex `k` to vertex `k + 1`.
    pub fn build(vertices: &[Point]) -> Self {
        let n_seg = vertices.len().saturating_sub(1).max(1);
        let (mut lo, mut hi) = (vertices[0], vertices[0]);
        for v in vertices {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
        let w = (hi.x - lo.x).max(f64::MIN_POSITIVE);
        let h = (hi.y - lo.y).max(f64::MIN_POSITIVE);
        // Roughly one cell per segment along the curve, but never more than
        // about 4n cells overall.
        let perimeter: f64 = vertices.windows(2).map(|p| p[0].dist(p[1])).sum();
        let mut cell = (perimeter / n_seg as f64).max(w.max(h) / (2.0 * (n_seg as f64).sqrt()));
        if !(cell > 0.0) {
            cell = 1.0;
        }
        let nx = ((w / cell).floor() as usize + 1).min(4096);
        let ny = ((h / cell).floor() as usize + 1).min(4096);
        let cell = (w / nx as f64).max(h / ny as f64).max(cell);
        let nx = (w / cell).floor() as usize + 1;
        let ny = (h / cell).floor() as usize + 1;

        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); nx * ny];
        for k in 0..vertices.len() - 1 {
            let (a, b) = (vertices[k], vertices[k + 1]);
            let i0 = Self::coord(a.x.min(b.x), lo.x, cell, nx);
            let i1 = Self::coord(a.x.max(b.x), lo.x, cell, nx);
            let j0 = Self::coord(a.y.min(b.y), lo.y, cell, ny);
            let j1 = Self::coord(a.y.max(b.y), lo.y, cell, ny);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(k as u32);
                }
            }
        }
        let mut offsets = Vec::with_capacity(nx * ny + 1);
        let mut items = Vec::new();
        offsets.push(0);
        for b in buckets {
            items.extend_from_slice(&b);
            offsets.push(items.len() as u32);
        }
        Self { origin: lo, cell, nx, ny, offsets, items }
    }

    #[inline]
    fn coord(v: f64, lo: f64, cell: f64, n: usize) -> usize {
        let c = ((v - lo) / cell).floor();
        if c <= 0.0 {
            0
        } else {
            (c as usize).min(n - 1)
        }
    }

    /// Nearest point on the polyline to `p`. Ties (within a relative 1e-12)
    /// go to the smaller arc-length parameter `cum_len[segment] + s * len`.
    pub fn nearest(&self, vertices: &[Point], cum_len: &[f64], p: Point) -> SegmentHit {
        let ci = Self::coord(p.x, self.origin.x, self.cell, self.nx) as isize;
        let cj = Self::coord(p.y, self.origin.y, self.cell, self.ny) as isize;
        let max_ring = self.nx.max(self.ny) as isize;
        let mut best: Option<(SegmentHit, f64)> = None;
        let scale = self.cell * (self.nx.max(self.ny) as f64);
        let tie = 1e-12 * (scale + p.norm());
        let n_seg = vertices.len() - 1;
        let mut visited = 0usize;

        for r in 0..=max_ring {
            let mut visit = |i: isize, j: isize| {
                if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                    return;
                }
                let c = j as usize * self.nx + i as usize;
                let (s0, s1) = (self.offsets[c] as usize, self.offsets[c + 1] as usize);
                for &k in &self.items[s0..s1] {
                    let k = k as usize;
                    let (q, s) = project_onto_segment(p, vertices[k], vertices[k + 1]);
                    let d = p.dist(q);
                    let param = cum_len[k] + s * (cum_len[k + 1] - cum_len[k]);
                    let better = match &best {
                        None => true,
                        Some((b, bp)) => d < b.dist - tie || (d <= b.dist + tie && param < *bp),
                    };
                    if better {
                        best = Some((SegmentHit { segment: k, s, point: q, dist: d }, param));
                    }
                }
            };
            if r == 0 {
                visit(ci, cj);
            } else {
                for i in (ci - r)..=(ci + r) {
                    visit(i, cj - r);
                    visit(i, cj + r);
                }
                for j in (cj - r + 1)..=(cj + r - 1) {
                    visit(ci - r, j);
                    visit(ci + r, j);
                }
            }
            if let Some((b, _)) = &best {
                // Every cell outside the current ring is at least r cells away.
                if b.dist + tie < r as f64 * self.cell {
                    break;
                }
            }
            visited += 8 * r.max(1) as usize;
            if visited > n_seg {
                // Far from the curve the rings are mostly empty; a linear scan is cheaper.
                return Self::scan(vertices, cum_len, p, tie);
            }
        }
        best.expect("polyline has at least one segment").0
    }

    fn scan(vertices: &[Point], cum_len: &[f64], p: Point, tie: f64) -> SegmentHit {
        let mut best: Option<(SegmentHit, f64)> = None;
        for k in 0..vertices.len() - 1 {
            let (q, s) = project_onto_segment(p, vertices[k], vertices[k + 1]);
            let d = p.dist(q);
            let param = cum_len[k] + s * (cum_len[k + 1] - cum_len[k]);
            let better = match &best {
                None => true,
                Some((b, bp)) => d < b.dist - tie || (d <= b.dist + tie && param < *bp),
            };
            if better {
                best = Some((SegmentHit { segment: k, s, point: q, dist: d }, param));
            }
        }
        best.expect("polyline has at least one segment").0
    }

    /// Segments whose bucket overlaps the axis box `[lo, hi]`. May contain duplicates.
    pub fn segments_in_box(&self, lo: Point, hi: Point, out: &mut Vec<usize>) {
        out.clear();
        let i0 = Self::coord(lo.x, self.origin.x, self.cell, self.nx);
        let i1 = Self::coord(hi.x, self.origin.x, self.cell, self.nx);
        let j0 = Self::coord(lo.y, self.origin.y, self.cell, self.ny);
        let j1 = Self::coord(hi.y, self.origin.y, self.cell, self.ny);
        for j in j0..=j1 {
            for i in i0..=i1 {
                let c = j * self.nx + i;
                out.extend(
                    self.items[self.offsets[c] as usize..self.offsets[c + 1] as usize]
                        .iter()
                        .map(|&k| k as usize),
                );
            }
        }
    }
}
