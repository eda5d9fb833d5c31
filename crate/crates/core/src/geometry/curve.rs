use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::index::{SegmentHit, SegmentIndex};
use super::point::Point;
use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: usize = 2048;

/// Analytic description of a closed curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CurveKind {
    Circle {
        center: Point,
        radius: f64,
    },
    Ellipse {
        center: Point,
        /// Semi-axes `(a, b)` before rotation, `a` along the x axis.
        semi_axes: (f64, f64),
        #[serde(default)]
        rotation: f64,
    },
    /// Periodic cubic spline through the control points (uniform knots).
    PeriodicSpline { control: Vec<Point> },
}

/// Which side of a barrier a point is on. `Positive` is the closure of the
/// bounded component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Positive,
    Negative,
    On,
}

/// Nearest point on a curve together with the inward unit normal there.
#[derive(Clone, Copy, Debug)]
pub struct Nearest {
    pub point: Point,
    pub dist: f64,
    pub normal: Point,
    /// Arc-length parameter of `point` along the polyline.
    pub param: f64,
    pub segment: usize,
}

impl Nearest {
    /// Signed distance: positive on the bounded side.
    #[inline]
    pub fn signed(&self, p: Point) -> f64 {
        if (p - self.point).dot(self.normal) >= 0.0 {
            self.dist
        } else {
            -self.dist
        }
    }
}

/// A smooth simple closed curve with a cached counterclockwise polyline.
#[derive(Clone, Debug)]
pub struct ClosedCurve {
    kind: CurveKind,
    /// Spline second-derivative coefficients (empty for primitives).
    moments: Vec<Point>,
    vertices: Vec<Point>,
    cum_len: Vec<f64>,
    index: SegmentIndex,
    diameter: f64,
}

impl ClosedCurve {
    pub fn new(kind: CurveKind) -> Result<Self> {
        Self::with_resolution(kind, DEFAULT_RESOLUTION)
    }

    pub fn circle(center: Point, radius: f64) -> Result<Self> {
        Self::new(CurveKind::Circle { center, radius })
    }

    pub fn ellipse(center: Point, a: f64, b: f64, rotation: f64) -> Result<Self> {
        Self::new(CurveKind::Ellipse { center, semi_axes: (a, b), rotation })
    }

    pub fn spline(control: Vec<Point>) -> Result<Self> {
        Self::new(CurveKind::PeriodicSpline { control })
    }

    pub fn with_resolution(kind: CurveKind, resolution: usize) -> Result<Self> {
        if resolution < 3 {
            return Err(Error::InvalidCurve(format!(
                "polyline needs at least 3 vertices, got {resolution}"
            )));
        }
        let kind = match kind {
            CurveKind::Circle { center, radius } => {
                if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
                    return Err(Error::InvalidCurve(format!("circle radius {radius}")));
                }
                CurveKind::Circle { center, radius }
            }
            CurveKind::Ellipse { center, semi_axes: (a, b), rotation } => {
                if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
                    return Err(Error::InvalidCurve(format!("ellipse semi-axes ({a}, {b})")));
                }
                CurveKind::Ellipse { center, semi_axes: (a, b), rotation }
            }
            CurveKind::PeriodicSpline { mut control } => {
                if control.len() < 3 {
                    return Err(Error::InvalidCurve(format!(
                        "spline needs at least 3 control points, got {}",
                        control.len()
                    )));
                }
                if control.iter().any(|p| !p.is_finite()) {
                    return Err(Error::InvalidCurve("non-finite control point".into()));
                }
                let n = control.len();
                if (0..n).any(|i| control[i] == control[(i + 1) % n]) {
                    return Err(Error::InvalidCurve("repeated consecutive control point".into()));
                }
                if shoelace(&control) < 0.0 {
                    control.reverse();
                }
                CurveKind::PeriodicSpline { control }
            }
        };
        let moments = match &kind {
            CurveKind::PeriodicSpline { control } => spline_moments(control),
            _ => Vec::new(),
        };
        let mut curve = ClosedCurve {
            kind,
            moments,
            vertices: Vec::new(),
            cum_len: Vec::new(),
            index: SegmentIndex::build(&[Point::ORIGIN, Point::new(1.0, 0.0)]),
            diameter: 0.0,
        };
        curve.vertices = curve.sample_polyline(resolution);
        if let CurveKind::PeriodicSpline { .. } = curve.kind {
            // Spline control polygons may still trace clockwise once smoothed.
            if shoelace(&curve.vertices) < 0.0 {
                return Err(Error::InvalidCurve("spline orientation is ambiguous".into()));
            }
        }
        let mut cum = Vec::with_capacity(curve.vertices.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in curve.vertices.windows(2) {
            acc += w[0].dist(w[1]);
            cum.push(acc);
        }
        curve.cum_len = cum;
        curve.index = SegmentIndex::build(&curve.vertices);
        let (lo, hi) = bbox(&curve.vertices);
        curve.diameter = lo.dist(hi);
        if let CurveKind::PeriodicSpline { .. } = curve.kind {
            curve.check_simple()?;
        }
        Ok(curve)
    }

    pub fn kind(&self) -> &CurveKind {
        &self.kind
    }

    /// Closed polyline: the last vertex repeats the first.
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn length(&self) -> f64 {
        *self.cum_len.last().unwrap()
    }

    /// Bounding-box diagonal of the polyline.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        bbox(&self.vertices)
    }

    /// Area enclosed by the polyline.
    pub fn area(&self) -> f64 {
        shoelace(&self.vertices)
    }

    /// Point on the analytic curve at fraction `u` of the parameter range
    /// (`u` is taken modulo 1).
    pub fn point_at(&self, u: f64) -> Point {
        let u = u.rem_euclid(1.0);
        match &self.kind {
            CurveKind::Circle { center, radius } => {
                let (s, c) = (TAU * u).sin_cos();
                *center + Point::new(c, s) * *radius
            }
            CurveKind::Ellipse { center, semi_axes: (a, b), rotation } => {
                let (s, c) = (TAU * u).sin_cos();
                *center + Point::new(a * c, b * s).rotated(*rotation)
            }
            CurveKind::PeriodicSpline { control } => {
                let n = control.len();
                let t = u * n as f64;
                let i = (t.floor() as usize).min(n - 1);
                spline_eval(control, &self.moments, i, t - i as f64)
            }
        }
    }

    fn sample_polyline(&self, resolution: usize) -> Vec<Point> {
        let mut v = Vec::with_capacity(resolution + 1);
        match &self.kind {
            CurveKind::PeriodicSpline { control } => {
                let n = control.len();
                let per = (resolution / n).max(1);
                for i in 0..n {
                    v.push(control[i]);
                    for j in 1..per {
                        v.push(spline_eval(control, &self.moments, i, j as f64 / per as f64));
                    }
                }
            }
            _ => {
                for k in 0..resolution {
                    v.push(self.point_at(k as f64 / resolution as f64));
                }
            }
        }
        v.push(v[0]);
        v
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.segment_count();
        let mut cand = Vec::new();
        for k in 0..n {
            let (a, b) = (self.vertices[k], self.vertices[k + 1]);
            let lo = Point::new(a.x.min(b.x), a.y.min(b.y));
            let hi = Point::new(a.x.max(b.x), a.y.max(b.y));
            self.index.segments_in_box(lo, hi, &mut cand);
            for &m in &cand {
                if m <= k + 1 || (k == 0 && m == n - 1) {
                    continue;
                }
                if segments_intersect(a, b, self.vertices[m], self.vertices[m + 1]) {
                    return Err(Error::InvalidCurve(format!(
                        "polyline self-intersects (segments {k} and {m})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn nearest(&self, p: Point) -> Nearest {
        let SegmentHit { segment, s, point, dist } =
            self.index.nearest(&self.vertices, &self.cum_len, p);
        let seg_normal = |k: usize| (self.vertices[k + 1] - self.vertices[k]).perp().normalized();
        let n = self.segment_count();
        let normal = if s <= 0.0 {
            (seg_normal(segment) + seg_normal((segment + n - 1) % n)).normalized()
        } else if s >= 1.0 {
            (seg_normal(segment) + seg_normal((segment + 1) % n)).normalized()
        } else {
            seg_normal(segment)
        };
        let param =
            self.cum_len[segment] + s * (self.cum_len[segment + 1] - self.cum_len[segment]);
        Nearest { point, dist, normal, param, segment }
    }

    pub fn default_on_tolerance(&self) -> f64 {
        1e-9 * self.diameter
    }

    pub fn side_of(&self, p: Point) -> Side {
        self.side_of_with_tolerance(p, self.default_on_tolerance())
    }

    /// Crossing-number side test, with `On` reported within `tol` of the polyline.
    pub fn side_of_with_tolerance(&self, p: Point, tol: f64) -> Side {
        if self.nearest(p).dist < tol.max(0.0) {
            return Side::On;
        }
        if self.contains(p) {
            Side::Positive
        } else {
            Side::Negative
        }
    }

    /// Even-odd ray crossing test against the polyline (no tolerance).
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for w in self.vertices.windows(2) {
            let (a, b) = (w[0], w[1]);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Largest unsigned curvature. Closed form for circles and ellipses; for
    /// splines the exact derivatives are scanned densely on every span.
    pub fn max_curvature(&self) -> f64 {
        match &self.kind {
            CurveKind::Circle { radius, .. } => 1.0 / radius,
            CurveKind::Ellipse { semi_axes: (a, b), .. } => (a / (b * b)).max(b / (a * a)),
            CurveKind::PeriodicSpline { control } => spline_max_curvature(control, &self.moments),
        }
    }

    /// Smallest distance between the curve and itself measured along normal
    /// rays, excluding the segments adjacent to the ray origin. Infinite when
    /// no ray returns to the curve.
    pub fn self_bottleneck(&self) -> f64 {
        let n = self.segment_count();
        let mut best = f64::INFINITY;
        for k in 0..n {
            let origin = self.vertices[k];
            let prev = (origin - self.vertices[(k + n - 1) % n]).perp().normalized();
            let next = (self.vertices[k + 1] - origin).perp().normalized();
            let normal = (prev + next).normalized();
            for dir in [normal, -normal] {
                for m in 0..n {
                    if m == k || (m + 1) % n == k {
                        continue;
                    }
                    if let Some(d) =
                        ray_segment(origin, dir, self.vertices[m], self.vertices[m + 1])
                    {
                        if d < best {
                            best = d;
                        }
                    }
                }
            }
        }
        best
    }

    /// Minimum distance between the two polylines (0 if they cross).
    pub fn distance_to(&self, other: &ClosedCurve) -> f64 {
        let mut best = f64::INFINITY;
        let mut sides = (false, false);
        for &v in &self.vertices[..self.segment_count()] {
            best = best.min(other.nearest(v).dist);
            if other.contains(v) {
                sides.0 = true;
            } else {
                sides.1 = true;
            }
        }
        for &v in &other.vertices[..other.segment_count()] {
            best = best.min(self.nearest(v).dist);
        }
        if sides.0 && sides.1 {
            0.0
        } else {
            best
        }
    }

    /// Apply a rigid motion (rotation about the origin, then translation).
    pub fn transformed(&self, rotation: f64, shift: Point) -> Result<Self> {
        let kind = match &self.kind {
            CurveKind::Circle { center, radius } => {
                CurveKind::Circle { center: center.rotated(rotation) + shift, radius: *radius }
            }
            CurveKind::Ellipse { center, semi_axes, rotation: r } => CurveKind::Ellipse {
                center: center.rotated(rotation) + shift,
                semi_axes: *semi_axes,
                rotation: r + rotation,
            },
            CurveKind::PeriodicSpline { control } => CurveKind::PeriodicSpline {
                control: control.iter().map(|p| p.rotated(rotation) + shift).collect(),
            },
        };
        Self::with_resolution(kind, self.segment_count())
    }
}

pub(crate) fn shoelace(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut acc = 0.0;
    for i in 0..n {
        acc += pts[i].cross(pts[(i + 1) % n]);
    }
    0.5 * acc
}

pub(crate) fn bbox(pts: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Discrete curvature from circumscribed circles of vertex triples.
pub fn polyline_max_curvature(closed: &[Point]) -> f64 {
    let n = closed.len() - 1;
    let mut best: f64 = 0.0;
    for k in 0..n {
        let a = closed[(k + n - 1) % n];
        let b = closed[k];
        let c = closed[(k + 1) % n];
        let denom = a.dist(b) * b.dist(c) * a.dist(c);
        if denom > 0.0 {
            best = best.max(2.0 * (b - a).cross(c - a).abs() / denom);
        }
    }
    best
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = (b - a).cross(c - a);
    let d2 = (b - a).cross(d - a);
    let d3 = (d - c).cross(a - c);
    let d4 = (d - c).cross(b - c);
    let straddles = |p: f64, q: f64| (p >= 0.0 && q <= 0.0) || (p <= 0.0 && q >= 0.0);
    if d1 == 0.0 && d2 == 0.0 {
        // Collinear: overlap of the projections onto the common line.
        let e = b - a;
        let (s0, s1) = ((c - a).dot(e), (d - a).dot(e));
        return s0.min(s1) <= e.norm_sq() && s0.max(s1) >= 0.0;
    }
    straddles(d1, d2) && straddles(d3, d4)
}

/// Distance along the ray `origin + s * dir` (s > 0) to the segment `[a, b]`.
fn ray_segment(origin: Point, dir: Point, a: Point, b: Point) -> Option<f64> {
    let e = b - a;
    let denom = dir.cross(e);
    if denom.abs() < 1e-300 {
        return None;
    }
    let w = a - origin;
    let s = w.cross(e) / denom;
    let r = w.cross(dir) / denom;
    if s > 0.0 && (0.0..=1.0).contains(&r) {
        Some(s)
    } else {
        None
    }
}

/// Second derivatives of the uniform-knot periodic cubic spline:
/// `M[i-1] + 4 M[i] + M[i+1] = 6 (P[i+1] - 2 P[i] + P[i-1])`.
fn spline_moments(p: &[Point]) -> Vec<Point> {
    let n = p.len();
    let rhs: Vec<Point> = (0..n)
        .map(|i| (p[(i + 1) % n] - p[i] * 2.0 + p[(i + n - 1) % n]) * 6.0)
        .collect();
    let mut m = vec![Point::ORIGIN; n];
    // Strictly diagonally dominant circulant system; Gauss-Seidel contracts by 1/2 per sweep.
    for _ in 0..200 {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let next = (rhs[i] - m[(i + n - 1) % n] - m[(i + 1) % n]) * 0.25;
            change = change.max((next - m[i]).norm());
            m[i] = next;
        }
        if change < 1e-16 {
            break;
        }
    }
    m
}

const CURVATURE_SCAN: usize = 4096;

fn spline_max_curvature(p: &[Point], m: &[Point]) -> f64 {
    let n = p.len();
    let mut best: f64 = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        for k in 0..=CURVATURE_SCAN {
            let u = k as f64 / CURVATURE_SCAN as f64;
            let v = 1.0 - u;
            let d1 = p[j] - p[i] - m[i] * ((3.0 * v * v - 1.0) / 6.0) + m[j] * ((3.0 * u * u - 1.0) / 6.0);
            let d2 = m[i] * v + m[j] * u;
            let speed = d1.norm();
            if speed > 0.0 {
                best = best.max(d1.cross(d2).abs() / (speed * speed * speed));
            }
        }
    }
    best
}

fn spline_eval(p: &[Point], m: &[Point], i: usize, u: f64) -> Point {
    let n = p.len();
    let j = (i + 1) % n;
    let v = 1.0 - u;
    p[i] * v + p[j] * u + m[i] * ((v * v * v - v) / 6.0) + m[j] * ((u * u * u - u) / 6.0)
}
