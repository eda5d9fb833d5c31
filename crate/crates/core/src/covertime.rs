//! Time until the boundary contacts of a path form an `eps`-net of the
//! outer boundary.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{Environment, Point};
use crate::process::{uniform_point, ProcessState};
use crate::transport::PointGrid;

/// Which vertices of a polyline are within `eps` of some hit so far.
#[derive(Clone, Debug)]
pub struct CoverTracker {
    vertices: Vec<Point>,
    eps: f64,
    grid: PointGrid,
    covered: Vec<bool>,
    remaining: usize,
    buf: Vec<usize>,
}

impl CoverTracker {
    /// `vertices` of a closed polyline without the repeated end point.
    pub fn new(vertices: Vec<Point>, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || vertices.is_empty() {
            return Err(Error::InvalidInput("cover tracking needs eps > 0 and a non-empty curve".into()));
        }
        let grid = PointGrid::build(&vertices, eps);
        let n = vertices.len();
        Ok(Self { vertices, eps, grid, covered: vec![false; n], remaining: n, buf: Vec::new() })
    }

    pub fn mark(&mut self, hit: Point) {
        let pad = Point::new(self.eps, self.eps);
        self.grid.in_box(&self.vertices, hit - pad, hit + pad, &mut self.buf);
        for &k in &self.buf {
            if !self.covered[k] && self.vertices[k].dist(hit) <= self.eps {
                self.covered[k] = true;
                self.remaining -= 1;
            }
        }
    }

    pub fn is_covered(&self) -> bool {
        self.remaining == 0
    }

    pub fn fraction(&self) -> f64 {
        1.0 - self.remaining as f64 / self.covered.len() as f64
    }
}

/// Outer boundary vertices without the closing duplicate.
fn open_vertices(env: &Environment) -> Vec<Point> {
    let v = env.outer().vertices();
    let n = if v.len() > 1 && v[0] == v[v.len() - 1] { v.len() - 1 } else { v.len() };
    v[..n].to_vec()
}

/// Cover times of the outer boundary for every `eps` (in the order given),
/// from a uniform start, with Euler step `h`. `None` where `max_time` ran out.
pub fn cover_times<R: Rng + ?Sized>(
    env: &Environment,
    eps: &[f64],
    h: f64,
    max_time: f64,
    rng: &mut R,
) -> Result<Vec<Option<f64>>> {
    if !(h > 0.0) || !(max_time > 0.0) {
        return Err(Error::InvalidInput("step and time limit must be positive".into()));
    }
    let verts = open_vertices(env);
    let mut trackers = eps.iter().map(|&e| CoverTracker::new(verts.clone(), e)).collect::<Result<Vec<_>>>()?;
    let mut times = vec![None; eps.len()];
    let x0 = uniform_point(env, rng)?;
    let sides = env.sides_at(x0);
    let mut state = ProcessState::new(env, x0, &sides, rng)?;
    let steps = (max_time / h).ceil() as usize;
    let mut open = eps.len();
    for _ in 0..steps {
        state.advance(env, h, rng)?;
        for c in state.contacts() {
            if c.barrier != 0 {
                continue;
            }
            for (k, tr) in trackers.iter_mut().enumerate() {
                if times[k].is_some() {
                    continue;
                }
                tr.mark(c.point);
                if tr.is_covered() {
                    times[k] = Some(state.clock);
                    open -= 1;
                }
            }
        }
        if open == 0 {
            break;
        }
    }
    Ok(times)
}

/// The limit of `E[T(eps)] / ln(1/eps)^2` as `eps -> 0`: `2 Area / pi`.
pub fn cover_constant(area: f64) -> f64 {
    2.0 * area / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ClosedCurve;
    use crate::process::path_rng;

    fn disk() -> Environment {
        Environment::new(ClosedCurve::circle(Point::ORIGIN, 1.0).unwrap(), vec![]).unwrap()
    }

    #[test]
    fn one_hit_covers_when_eps_exceeds_diameter() {
        let env = disk();
        let mut tr = CoverTracker::new(open_vertices(&env), 2.5).unwrap();
        assert!(!tr.is_covered());
        tr.mark(Point::new(1.0, 0.0));
        assert!(tr.is_covered());
    }

    #[test]
    fn big_eps_cover_time_is_first_hit() {
        let env = disk();
        let mut rng = path_rng(8, 0);
        let t = cover_times(&env, &[2.5, 0.3], 1e-3, 100.0, &mut rng).unwrap();
        let (a, b) = (t[0].unwrap(), t[1].unwrap());
        assert!(a > 0.0 && a <= b);
    }

    #[test]
    fn marks_are_local() {
        let env = disk();
        let mut tr = CoverTracker::new(open_vertices(&env), 0.1).unwrap();
        tr.mark(Point::new(1.0, 0.0));
        // An arc of chord radius 0.1 on the unit circle is about 0.2 / 2 pi of it.
        let f = tr.fraction();
        assert!((f - 0.2 / std::f64::consts::TAU).abs() < 0.005, "{f}");
    }

    #[test]
    fn constant_for_unit_disk_is_two() {
        assert!((cover_constant(std::f64::consts::PI) - 2.0).abs() < 1e-15);
    }
}
