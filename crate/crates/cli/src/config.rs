//! Experiment configuration: one TOML file describes a whole run.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use snapout::estimators::{Constants, Regime};
use snapout::geometry::{Barrier, ClosedCurve, CurveKind, Environment, Point};
use snapout::ingest::Schema;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Output directory, relative to the config file.
    pub out: Option<PathBuf>,
    pub environment: Option<EnvironmentSpec>,
    pub simulation: Option<SimulationSpec>,
    #[serde(default)]
    pub recover: RecoverSpec,
    #[serde(default)]
    pub constants: Constants,
    pub covertime: Option<CovertimeSpec>,
    pub ingest: Option<IngestSpec>,
    #[serde(default)]
    pub eval: EvalSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentSpec {
    pub outer: CurveKind,
    #[serde(default)]
    pub inner: Vec<BarrierSpec>,
    /// Polyline resolution for every curve.
    pub resolution: Option<usize>,
    /// Curvature bound to use instead of the one measured on the curves.
    pub kappa: Option<f64>,
    /// Only printed alongside the recommended observation period.
    pub t_mix: Option<f64>,
    pub pi_min: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSpec {
    pub curve: CurveKind,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub t: f64,
    pub horizon: f64,
    /// Euler step; defaults to `t / 50` capped by the geometry.
    pub h: Option<f64>,
    pub burn_in: Option<f64>,
    /// Fixed start; a stationary draw when absent.
    pub start: Option<Point>,
    #[serde(default)]
    pub record_dense: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverSpec {
    pub regime: Option<Regime>,
    /// Path files pooled into one estimate. Without them every seed's
    /// simulated path is recovered separately.
    #[serde(default)]
    pub paths: Vec<PathBuf>,
    /// Sampling interval for path files with fewer than two rows.
    pub t: Option<f64>,
    /// Estimate to refine.
    pub initial: Option<PathBuf>,
    pub rounds: Option<usize>,
    /// Curvature bound for refinement when there is no environment.
    pub kappa: Option<f64>,
    pub s: Option<f64>,
    pub eps: Option<f64>,
    pub u: Option<f64>,
    pub ell: Option<f64>,
    pub s_e: Option<f64>,
    pub n0: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovertimeSpec {
    pub eps: Vec<f64>,
    pub paths: usize,
    pub h: f64,
    pub max_time: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestSpec {
    pub file: PathBuf,
    #[serde(default)]
    pub schema: Schema,
    pub t: f64,
    /// Gaps longer than this split a track. Defaults to `10 t`.
    pub split_gap: Option<f64>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSpec {
    /// Estimate files to score; defaults to what `recover` wrote.
    #[serde(default)]
    pub estimates: Vec<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path` and resolves relative file names against its directory.
    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        Ok((cfg, text))
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(o) = self.out.as_mut() {
            fix(o);
        }
        self.recover.paths.iter_mut().for_each(fix);
        if let Some(i) = self.recover.initial.as_mut() {
            fix(i);
        }
        if let Some(i) = self.ingest.as_mut() {
            fix(&mut i.file);
        }
        self.eval.estimates.iter_mut().for_each(fix);
    }

    pub fn environment(&self) -> Result<Environment> {
        let Some(spec) = &self.environment else { bail!("configuration error: no [environment] section") };
        spec.build()
    }

    pub fn simulation(&self) -> Result<&SimulationSpec> {
        self.simulation.as_ref().context("configuration error: no [simulation] section")
    }
}

impl EnvironmentSpec {
    pub fn build(&self) -> Result<Environment> {
        let curve = |k: &CurveKind| -> Result<ClosedCurve> {
            Ok(match self.resolution {
                Some(r) => ClosedCurve::with_resolution(k.clone(), r)?,
                None => ClosedCurve::new(k.clone())?,
            })
        };
        let inner = self
            .inner
            .iter()
            .map(|b| Ok(Barrier::semipermeable(curve(&b.curve)?, b.lambda_plus, b.lambda_minus)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Environment::new(curve(&self.outer)?, inner)?)
    }
}
