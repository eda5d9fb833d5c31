use super::curve::{ClosedCurve, Side};
use super::point::Point;
use crate::error::{Error, Result};

/// A closed curve with per-side crossing rates (per unit local time).
///
/// `lambda_plus` is the rate of switching from the negative to the positive
/// side, `lambda_minus` the rate from positive to negative. A rate of `0`
/// makes that direction impermeable, `f64::INFINITY` makes it transparent.
#[derive(Clone, Debug)]
pub struct Barrier {
    pub curve: ClosedCurve,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

impl Barrier {
    pub fn impermeable(curve: ClosedCurve) -> Self {
        Self { curve, lambda_plus: 0.0, lambda_minus: 0.0 }
    }

    pub fn semipermeable(curve: ClosedCurve, lambda_plus: f64, lambda_minus: f64) -> Result<Self> {
        for (name, l) in [("lambda_plus", lambda_plus), ("lambda_minus", lambda_minus)] {
            if l.is_nan() || l < 0.0 {
                return Err(Error::InvalidEnvironment(format!("{name} = {l} must be >= 0")));
            }
        }
        Ok(Self { curve, lambda_plus, lambda_minus })
    }

    /// Rate at which a process currently on `side` switches to the other side.
    pub fn exit_rate(&self, positive: bool) -> f64 {
        if positive {
            self.lambda_minus
        } else {
            self.lambda_plus
        }
    }
}

/// Outer impermeable boundary plus inner semipermeable barriers.
#[derive(Clone, Debug)]
pub struct Environment {
    outer: ClosedCurve,
    inner: Vec<Barrier>,
    area: f64,
}

/// Difficulty parameters of an environment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvParameters {
    pub kappa: f64,
    pub rho: f64,
    pub lambda_max: f64,
    pub pi_min: Option<f64>,
    pub t_mix: Option<f64>,
}

impl Environment {
    pub fn new(outer: ClosedCurve, inner: Vec<Barrier>) -> Result<Self> {
        let area = outer.area();
        if !(area > 0.0) {
            return Err(Error::InvalidEnvironment(format!("domain area {area} is not positive")));
        }
        for (i, b) in inner.iter().enumerate() {
            let strictly_inside = b.curve.vertices().iter().all(|&v| outer.side_of(v) == Side::Positive);
            if !strictly_inside {
                return Err(Error::InvalidEnvironment(format!(
                    "inner barrier {} is not strictly inside the outer boundary",
                    i + 1
                )));
            }
            for (j, other) in inner.iter().enumerate().skip(i + 1) {
                if b.curve.distance_to(&other.curve) <= 0.0 {
                    return Err(Error::InvalidEnvironment(format!(
                        "inner barriers {} and {} intersect",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { outer, inner, area })
    }

    pub fn outer(&self) -> &ClosedCurve {
        &self.outer
    }

    pub fn inner(&self) -> &[Barrier] {
        &self.inner
    }

    /// All curves, outer first (index 0), then inner barriers 1..=m.
    pub fn curves(&self) -> impl Iterator<Item = &ClosedCurve> {
        std::iter::once(&self.outer).chain(self.inner.iter().map(|b| &b.curve))
    }

    pub fn curve(&self, i: usize) -> &ClosedCurve {
        if i == 0 {
            &self.outer
        } else {
            &self.inner[i - 1].curve
        }
    }

    /// Number of curves including the outer boundary (m + 1).
    pub fn barrier_count(&self) -> usize {
        self.inner.len() + 1
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn contains(&self, p: Point) -> bool {
        self.outer.side_of(p) != Side::Negative
    }

    /// Side flags implied by a position: +1 inside curve `i`, -1 outside.
    /// Points on a curve count as positive. The outer entry is always +1.
    pub fn sides_at(&self, p: Point) -> Vec<i8> {
        std::iter::once(1)
            .chain(self.inner.iter().map(|b| if b.curve.side_of(p) == Side::Negative { -1 } else { 1 }))
            .collect()
    }

    /// Distance from `p` to the nearest curve.
    pub fn distance_to_barriers(&self, p: Point) -> f64 {
        self.curves().map(|c| c.nearest(p).dist).fold(f64::INFINITY, f64::min)
    }

    pub fn max_curvature(&self) -> f64 {
        self.curves().map(ClosedCurve::max_curvature).fold(0.0, f64::max)
    }

    /// Half the smallest gap between distinct curves or across a single
    /// curve's bottleneck. A lower-bound surrogate for the spacing parameter.
    pub fn min_separation(&self) -> Result<f64> {
        let curves: Vec<&ClosedCurve> = self.curves().collect();
        let mut gap = f64::INFINITY;
        for (i, a) in curves.iter().enumerate() {
            gap = gap.min(a.self_bottleneck());
            for b in curves.iter().skip(i + 1) {
                let d = a.distance_to(b);
                if d <= 0.0 {
                    return Err(Error::InvalidEnvironment("barriers overlap".into()));
                }
                gap = gap.min(d);
            }
        }
        Ok(0.5 * gap)
    }

    pub fn lambda_max(&self) -> f64 {
        self.inner
            .iter()
            .flat_map(|b| [b.lambda_plus, b.lambda_minus])
            .fold(0.0, f64::max)
    }

    pub fn parameters(&self) -> Result<EnvParameters> {
        Ok(EnvParameters {
            kappa: self.max_curvature(),
            rho: self.min_separation()?,
            lambda_max: self.lambda_max(),
            pi_min: None,
            t_mix: None,
        })
    }

    /// Apply a rigid motion to every curve.
    pub fn transformed(&self, rotation: f64, shift: Point) -> Result<Self> {
        let outer = self.outer.transformed(rotation, shift)?;
        let inner = self
            .inner
            .iter()
            .map(|b| {
                Ok(Barrier {
                    curve: b.curve.transformed(rotation, shift)?,
                    lambda_plus: b.lambda_plus,
                    lambda_minus: b.lambda_minus,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(outer, inner)
    }
}
