//! Barrier recovery from discretely sampled paths.
//!
//! * [`recover_fixed_frequency`] compares empirical transition kernels of
//!   neighbouring grid boxes and flags boxes where they jump.
//! * [`refine`] sharpens an existing estimate with thin rectangles aligned
//!   to the directions the estimate suggests.
//! * [`recover_high_frequency`] flags grid points in front of which the path
//!   lingers without ever stepping back across.
//!
//! All three accept several independent tracks. Index sets are pooled and no
//! transition is ever formed across the end of one track and the start of
//! the next.

mod fixed;
mod high;
mod refine;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use fixed::{fixed_frequency_scores, recover_fixed_frequency, BoxScore};
pub use high::{high_frequency_counts, recover_high_frequency, DirectionCounts};
pub use refine::{refine, refine_rounds};

use crate::error::{Error, Result};
use crate::geometry::{ClosedCurve, Point};
use crate::process::DenseTrace;
use crate::transport::PointSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    FixedFreq,
    #[serde(alias = "refine")]
    Refined,
    HighFreq,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::FixedFreq => "fixed-freq",
            Regime::Refined => "refined",
            Regime::HighFreq => "high-freq",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fixed-freq" => Ok(Regime::FixedFreq),
            "refined" | "refine" => Ok(Regime::Refined),
            "high-freq" => Ok(Regime::HighFreq),
            other => Err(Error::InvalidInput(format!("unknown regime `{other}`"))),
        }
    }
}

/// Parameters of the kernel-comparison algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedFreqParams {
    /// Sensitivity threshold on the truncated Wasserstein distance.
    pub s: f64,
    /// Grid spacing (box side for boxes, lattice spacing for refinement).
    pub eps_grid: f64,
    /// Truncation level.
    pub u: f64,
    /// Half-length scale of the refinement rectangles.
    pub ell: f64,
    /// Current Hausdorff error bound of the estimate being refined.
    pub s_e: f64,
}

impl FixedFreqParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s", self.s), ("eps_grid", self.eps_grid), ("u", self.u), ("ell", self.ell), ("s_e", self.s_e)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("parameter {name} = {v} must be positive and finite")));
            }
        }
        Ok(())
    }

    /// Same thresholds with the refinement lattice tied to the curvature:
    /// spacing `kappa * ell^2`.
    pub fn for_refinement(&self, kappa: Option<f64>) -> Result<Self> {
        let kappa = kappa
            .filter(|k| *k > 0.0 && k.is_finite())
            .ok_or_else(|| Error::Configuration("refinement needs a positive curvature bound kappa".into()))?;
        Ok(Self { eps_grid: kappa * self.ell * self.ell, ..*self })
    }
}

/// Parameters of the visit/transition counting algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighFreqParams {
    /// Threshold on the fraction of visits followed by a step back across.
    pub s: f64,
    pub eps_grid: f64,
    pub ell: f64,
    /// Minimum number of visits before a point can be flagged.
    pub n0: usize,
}

impl HighFreqParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("s", self.s), ("eps_grid", self.eps_grid), ("ell", self.ell)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("parameter {name} = {v} must be positive and finite")));
            }
        }
        if self.n0 < 1 {
            return Err(Error::InvalidInput("n0 must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "kebab-case")]
pub enum Params {
    Fixed(FixedFreqParams),
    High(HighFreqParams),
}

/// Multipliers of the scaling laws. Every default length is a constant
/// times `sqrt(t)` (or `sqrt(eps / kappa)`, or `ln(T/t) sqrt(t)`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constants {
    /// Target accuracy `eps = accuracy * sqrt(t)`.
    pub accuracy: f64,
    /// Box side as a fraction of `eps`.
    pub grid_ratio: f64,
    /// `s = fixed_s * sqrt(t)`.
    pub fixed_s: f64,
    /// `u = fixed_u * sqrt(t)`.
    pub fixed_u: f64,
    /// `ell = refine_ell * sqrt(eps / kappa)`.
    pub refine_ell: f64,
    /// `s = high_s` (a ratio).
    pub high_s: f64,
    /// Lattice spacing `high_eps * sqrt(t)`.
    pub high_eps: f64,
    /// `ell = high_ell * ln(T/t) * sqrt(t)`.
    pub high_ell: f64,
    /// `n0 = ceil(high_n0 * ln(T/t))`.
    pub high_n0: f64,
}

impl Default for Constants {
    fn default() -> Self {
        DEFAULT_CONSTANTS
    }
}

/// Frozen defaults, calibrated once on a disk of radius 2 around a unit
/// circle with unit rates.
pub const DEFAULT_CONSTANTS: Constants = Constants {
    accuracy: 1.0,
    grid_ratio: 0.5,
    fixed_s: 1.4,
    fixed_u: 2.0,
    refine_ell: 0.5,
    high_s: 0.01,
    high_eps: 2.0,
    high_ell: 0.5,
    high_n0: 8.0,
};

/// Scales of a scenario that enter the default parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scales {
    pub t: f64,
    pub horizon: f64,
    pub kappa: Option<f64>,
    pub lambda_max: Option<f64>,
    pub rho: Option<f64>,
    pub area: Option<f64>,
}

/// Default parameters plus any warnings about the sampling interval.
pub fn default_params(regime: Regime, scales: &Scales, c: &Constants) -> Result<(Params, Vec<String>)> {
    let Scales { t, horizon, kappa, lambda_max, rho, .. } = *scales;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("sampling interval t = {t} must be positive")));
    }
    let mut warnings = Vec::new();
    let mut limit = f64::INFINITY;
    if let Some(k) = kappa.filter(|k| *k > 0.0) {
        limit = limit.min(1.0 / (k * k));
    }
    if let Some(l) = lambda_max.filter(|l| *l > 0.0 && l.is_finite()) {
        limit = limit.min(1.0 / (l * l));
    }
    if let Some(r) = rho.filter(|r| *r > 0.0 && r.is_finite()) {
        limit = limit.min(r * r);
    }
    if t > limit {
        warnings.push(format!(
            "t = {t} exceeds min(1/kappa^2, 1/lambda_max^2, rho^2) = {limit:.4}; guarantees do not apply"
        ));
    }
    let rt = t.sqrt();
    let params = match regime {
        Regime::FixedFreq | Regime::Refined => {
            let eps = c.accuracy * rt;
            let ell = match kappa.filter(|k| *k > 0.0 && k.is_finite()) {
                Some(k) => c.refine_ell * (eps / k).sqrt(),
                None => c.refine_ell * eps.sqrt(),
            };
            let p = FixedFreqParams { s: c.fixed_s * rt, eps_grid: eps * c.grid_ratio, u: c.fixed_u * rt, ell, s_e: eps };
            let p = if regime == Regime::Refined { p.for_refinement(kappa)? } else { p };
            Params::Fixed(p)
        }
        Regime::HighFreq => {
            if !(horizon > t) {
                return Err(Error::InvalidInput(format!("observation period {horizon} must exceed t = {t}")));
            }
            let log = (horizon / t).ln();
            Params::High(HighFreqParams {
                s: c.high_s,
                eps_grid: c.high_eps * rt,
                ell: c.high_ell * log * rt,
                n0: (c.high_n0 * log).ceil().max(1.0) as usize,
            })
        }
    };
    Ok((params, warnings))
}

/// Evidence recorded for a flagged element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Diagnostic {
    /// Largest truncated Wasserstein distance to a compared region, with the
    /// offset (and direction index for rectangles) that produced it.
    Kernel { w1: f64, offset: (i32, i32), direction: Option<usize> },
    /// Visit and back-crossing counts for the flagged direction.
    Counts { visits: usize, back: usize, direction: usize },
}

impl Diagnostic {
    /// The headline value: the distance, or the back-crossing fraction.
    pub fn value(&self) -> f64 {
        match *self {
            Diagnostic::Kernel { w1, .. } => w1,
            Diagnostic::Counts { visits, back, .. } => back as f64 / visits as f64,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flagged {
    /// Lattice index `(j, k)`.
    pub index: (i64, i64),
    /// Lower-left box corner for boxes, the lattice point otherwise.
    pub point: Point,
    pub diagnostic: Diagnostic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSet {
    pub regime: Regime,
    /// Box side (fixed frequency) or lattice spacing.
    pub cell: f64,
    pub params: Option<Params>,
    /// Sorted by lattice index.
    pub elements: Vec<Flagged>,
}

impl EstimateSet {
    pub fn empty(regime: Regime, cell: f64, params: Option<Params>) -> Self {
        Self { regime, cell, params, elements: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Boxes become their four corners and center; points stay as they are.
    pub fn point_set(&self) -> PointSet {
        let mut out = Vec::new();
        for e in &self.elements {
            let p = e.point;
            if self.regime == Regime::FixedFreq {
                let c = self.cell;
                out.extend([
                    p,
                    p + Point::new(c, 0.0),
                    p + Point::new(0.0, c),
                    p + Point::new(c, c),
                    p + Point::new(0.5 * c, 0.5 * c),
                ]);
            } else {
                out.push(p);
            }
        }
        PointSet::new(out)
    }

    /// CSV with header `x,y,regime,diagnostic,cell`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "regime", "diagnostic", "cell"])?;
        for e in &self.elements {
            w.write_record(&[
                e.point.x.to_string(),
                e.point.y.to_string(),
                self.regime.to_string(),
                e.diagnostic.value().to_string(),
                self.cell.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads what [`EstimateSet::write_csv`] wrote. Lattice indices are
    /// recovered by rounding, detailed diagnostics are reduced to the value.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut regime = None;
        let mut cell = 0.0;
        let mut elements = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<&str> {
                rec.get(i).ok_or_else(|| Error::InvalidInput(format!("row {}: missing column {i}", row + 2)))
            };
            let num = |i: usize| -> Result<f64> {
                field(i)?
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("row {}: bad number in column {i}", row + 2)))
            };
            let (x, y) = (num(0)?, num(1)?);
            regime = Some(field(2)?.parse::<Regime>()?);
            let value = num(3)?;
            cell = num(4)?;
            let index = if cell > 0.0 { ((x / cell).round() as i64, (y / cell).round() as i64) } else { (0, 0) };
            elements.push(Flagged {
                index,
                point: Point::new(x, y),
                diagnostic: Diagnostic::Kernel { w1: value, offset: (0, 0), direction: None },
            });
        }
        Ok(Self { regime: regime.unwrap_or(Regime::FixedFreq), cell, params: None, elements })
    }

    /// Per-element details: `j,k,x,y,value,offset_j,offset_k,direction,visits,back`.
    pub fn write_diagnostics_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["j", "k", "x", "y", "value", "offset_j", "offset_k", "direction", "visits", "back"])?;
        for e in &self.elements {
            let (oj, ok, dir, visits, back) = match e.diagnostic {
                Diagnostic::Kernel { offset, direction, .. } => (
                    offset.0.to_string(),
                    offset.1.to_string(),
                    direction.map(|d| d.to_string()).unwrap_or_default(),
                    String::new(),
                    String::new(),
                ),
                Diagnostic::Counts { visits, back, direction } => {
                    (String::new(), String::new(), direction.to_string(), visits.to_string(), back.to_string())
                }
            };
            w.write_record(&[
                e.index.0.to_string(),
                e.index.1.to_string(),
                e.point.x.to_string(),
                e.point.y.to_string(),
                e.diagnostic.value().to_string(),
                oj,
                ok,
                dir,
                visits,
                back,
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Points of a dense trace within `tol` of `curve`, projected onto it.
pub fn hit_set(trace: Option<&DenseTrace>, curve: &ClosedCurve, tol: f64) -> Result<PointSet> {
    let trace = trace.ok_or(Error::MissingTrace)?;
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be non-negative")));
    }
    let pts = trace
        .points
        .iter()
        .filter_map(|&p| {
            let hit = curve.nearest(p);
            (hit.dist <= tol).then_some(hit.point)
        })
        .collect();
    Ok(PointSet::new(pts))
}

/// Integer lattice coordinates `floor(x / eps)`, plus the lower neighbour
/// when `x` sits exactly on a grid line (closed boxes share their edges).
pub(crate) fn closed_cells(x: f64, eps: f64) -> ([i64; 2], usize) {
    let f = x / eps;
    let i = f.floor();
    if f == i {
        ([i as i64, i as i64 - 1], 2)
    } else {
        ([i as i64, 0], 1)
    }
}
