//! Barriers as smooth closed curves, side tests, distances and environment parameters.
//!
//! Every query goes through a cached counterclockwise polyline (2048 vertices
//! by default), so circles, ellipses and splines share one code path. The
//! positive side of a curve is the closure of its bounded component; normals
//! returned by [`nearest_point`] point towards it.

mod curve;
mod env;
mod index;
mod point;

pub use curve::{polyline_max_curvature, ClosedCurve, CurveKind, Nearest, Side, DEFAULT_RESOLUTION};
pub use env::{Barrier, EnvParameters, Environment};
pub use index::{SegmentHit, SegmentIndex};
pub use point::{project_onto_segment, Point};

use crate::error::Result;

pub fn side_of(curve: &ClosedCurve, p: Point) -> Side {
    curve.side_of(p)
}

/// Nearest polyline point, distance and inward unit normal.
pub fn nearest_point(curve: &ClosedCurve, p: Point) -> (Point, f64, Point) {
    let n = curve.nearest(p);
    (n.point, n.dist, n.normal)
}

pub fn max_curvature(curve: &ClosedCurve) -> f64 {
    curve.max_curvature()
}

pub fn min_separation(env: &Environment) -> Result<f64> {
    env.min_separation()
}
