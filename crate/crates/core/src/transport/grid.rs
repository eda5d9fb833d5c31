//! Uniform bucket grid over a point cloud, for nearest and range queries.

use crate::geometry::Point;

#[derive(Clone, Debug)]
pub struct PointGrid {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    offsets: Vec<u32>,
    /// Indices into the original point list, grouped by cell.
    items: Vec<u32>,
}

impl PointGrid {
    /// Build with the given cell size (clamped so the grid has at most about
    /// `4 * points.len()` cells).
    pub fn build(points: &[Point], cell: f64) -> Self {
        assert!(points.len() < u32::MAX as usize);
        let (mut lo, mut hi) = (Point::new(0.0, 0.0), Point::new(0.0, 0.0));
        if let Some(&p0) = points.first() {
            lo = p0;
            hi = p0;
        }
        for p in points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let (w, h) = (hi.x - lo.x, hi.y - lo.y);
        let budget = 4.0 * points.len().max(1) as f64;
        let mut cell = if cell > 0.0 && cell.is_finite() { cell } else { 1.0 };
        if (w / cell + 1.0) * (h / cell + 1.0) > budget {
            cell = ((w * h / budget).sqrt()).max(w.max(h) / budget).max(cell);
        }
        let nx = (w / cell).floor() as usize + 1;
        let ny = (h / cell).floor() as usize + 1;
        let mut counts = vec![0u32; nx * ny + 1];
        let cells: Vec<usize> = points
            .iter()
            .map(|p| {
                let i = Self::coord(p.x, lo.x, cell, nx);
                let j = Self::coord(p.y, lo.y, cell, ny);
                j * nx + i
            })
            .collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for c in 0..nx * ny {
            counts[c + 1] += counts[c];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut items = vec![0u32; points.len()];
        for (k, &c) in cells.iter().enumerate() {
            items[fill[c] as usize] = k as u32;
            fill[c] += 1;
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

    fn bucket(&self, i: usize, j: usize) -> &[u32] {
        let c = j * self.nx + i;
        &self.items[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }

    /// Indices of points inside the closed axis box `[lo, hi]`, in increasing order.
    pub fn in_box(&self, points: &[Point], lo: Point, hi: Point, out: &mut Vec<usize>) {
        out.clear();
        if self.items.is_empty() || lo.x > hi.x || lo.y > hi.y {
            return;
        }
        let i0 = Self::coord(lo.x, self.origin.x, self.cell, self.nx);
        let i1 = Self::coord(hi.x, self.origin.x, self.cell, self.nx);
        let j0 = Self::coord(lo.y, self.origin.y, self.cell, self.ny);
        let j1 = Self::coord(hi.y, self.origin.y, self.cell, self.ny);
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &k in self.bucket(i, j) {
                    let p = points[k as usize];
                    if p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y {
                        out.push(k as usize);
                    }
                }
            }
        }
        out.sort_unstable();
    }

    /// Distance from `q` to the nearest indexed point (infinite when empty).
    pub fn nearest_dist(&self, points: &[Point], q: Point) -> f64 {
        if self.items.is_empty() {
            return f64::INFINITY;
        }
        let ci = Self::coord(q.x, self.origin.x, self.cell, self.nx) as isize;
        let cj = Self::coord(q.y, self.origin.y, self.cell, self.ny) as isize;
        let mut best = f64::INFINITY;
        let mut visited = 0usize;
        let max_ring = self.nx.max(self.ny) as isize;
        for r in 0..=max_ring {
            let mut visit = |i: isize, j: isize| {
                if i < 0 || j < 0 || i >= self.nx as isize || j >= self.ny as isize {
                    return;
                }
                for &k in self.bucket(i as usize, j as usize) {
                    best = best.min(q.dist(points[k as usize]));
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
            if best < r as f64 * self.cell {
                break;
            }
            visited += 8 * r.max(1) as usize;
            if visited > self.items.len() {
                return points.iter().map(|p| q.dist(*p)).fold(f64::INFINITY, f64::min);
            }
        }
        best
    }
}
