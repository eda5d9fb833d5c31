//! One function per subcommand. Every output is a pure function of the
//! config text, the seeds and the input files.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use snapout::covertime::{cover_constant, cover_times};
use snapout::estimators::{
    default_params, recover_fixed_frequency, recover_high_frequency, refine_rounds, EstimateSet, Params, Regime,
    Scales,
};
use snapout::exec;
use snapout::geometry::{EnvParameters, Environment, Point};
use snapout::ingest::{self, Crs};
use snapout::process::{path_rng, simulate, stationary_start, SamplePath, SimConfig};
use snapout::transport::{hausdorff, PointSet};

use crate::config::{ExperimentConfig, SimulationSpec};
use crate::svg;

/// Default number of refinement rounds.
const DEFAULT_ROUNDS: usize = 3;

/// Failure probability used when printing the recommended observation period.
const RECOMMENDED_ETA: f64 = 0.1;

pub struct Ctx {
    pub cfg: ExperimentConfig,
    /// Config text as given, echoed into manifests.
    pub raw: String,
    pub out: PathBuf,
    pub seeds: Vec<u64>,
    pub quiet: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seeds: &'a [u64],
    outputs: Vec<String>,
    resolved: BTreeMap<String, String>,
    config: &'a str,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn warn(&self, msg: impl AsRef<str>) {
        eprintln!("warning: {}", msg.as_ref());
    }

    fn seeds(&self) -> Result<&[u64]> {
        if self.seeds.is_empty() {
            bail!("configuration error: no seeds given (set `seeds` or pass --seed)");
        }
        Ok(&self.seeds)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<String> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(name.to_string())
    }

    fn manifest(&self, command: &str, outputs: Vec<String>, resolved: BTreeMap<String, String>) -> Result<()> {
        let m = Manifest { command, version: snapout::VERSION, seeds: &self.seeds, outputs, resolved, config: &self.raw };
        self.write(&format!("manifest-{command}.toml"), toml::to_string(&m)?.as_bytes())?;
        Ok(())
    }
}

fn path_bytes(p: &SamplePath) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    p.write_csv(&mut buf)?;
    Ok(buf)
}

fn scales_from(cfg: &ExperimentConfig, env: Option<&Environment>, t: f64, horizon: f64) -> Result<Scales> {
    let mut s = Scales { t, horizon, kappa: None, lambda_max: None, rho: None, area: None };
    if let Some(env) = env {
        let p = env.parameters()?;
        s.kappa = Some(p.kappa);
        s.lambda_max = Some(p.lambda_max);
        s.rho = Some(p.rho);
        s.area = Some(env.area());
    }
    if let Some(k) = cfg.environment.as_ref().and_then(|e| e.kappa) {
        s.kappa = Some(k);
    }
    if let Some(k) = cfg.recover.kappa {
        s.kappa = Some(k);
    }
    Ok(s)
}

/// `(t_mix / pi_min) sqrt(kappa / eps^3) ln(Area / eta sqrt(kappa / eps^3))`
/// with the unknown absolute constant set to one.
fn recommended_horizon(t_mix: f64, pi_min: f64, kappa: f64, eps: f64, area: f64) -> f64 {
    let r = (kappa / eps.powi(3)).sqrt();
    t_mix / pi_min * r * (area / RECOMMENDED_ETA * r).ln()
}

// ---------------------------------------------------------------- simulate

fn simulate_one(env: &Environment, sim: &SimulationSpec, cfg: SimConfig) -> Result<SamplePath> {
    let mut rng = path_rng(cfg.seed, 0);
    let path = match sim.start {
        Some(p) => {
            if !env.contains(p) {
                bail!("invalid initial condition: start {p:?} is outside the domain");
            }
            simulate(env, p, &env.sides_at(p), sim.horizon, sim.t, &cfg, &mut rng)?
        }
        None => {
            let (x0, sides) = stationary_start(env, &cfg, &mut rng)?;
            let cfg = SimConfig { burn_in: 0.0, ..cfg };
            simulate(env, x0, &sides, sim.horizon, sim.t, &cfg, &mut rng)?
        }
    };
    Ok(path)
}

pub fn simulate_cmd(ctx: &Ctx) -> Result<()> {
    let env = ctx.cfg.environment()?;
    let sim = ctx.cfg.simulation()?;
    let seeds = ctx.seeds()?;
    let spec = ctx.cfg.environment.as_ref().expect("checked by environment()");
    let measured = env.parameters()?;
    let params = EnvParameters { kappa: spec.kappa.unwrap_or(measured.kappa), ..measured };
    let h = sim.h.unwrap_or_else(|| SimConfig::default_step(sim.t, &params));
    let burn_in = sim.burn_in.unwrap_or_else(|| SimConfig::default_burn_in(spec.t_mix, sim.horizon));

    let scales = scales_from(&ctx.cfg, Some(&env), sim.t, sim.horizon)?;
    let (_, warnings) = default_params(Regime::FixedFreq, &scales, &ctx.cfg.constants)?;
    warnings.iter().for_each(|w| ctx.warn(w));
    if let (Some(tm), Some(pm)) = (spec.t_mix, spec.pi_min) {
        let eps = ctx.cfg.constants.accuracy * sim.t.sqrt();
        let rec = recommended_horizon(tm, pm, params.kappa, eps, env.area());
        ctx.note(format!("recommended observation period (up to an absolute constant): {rec:.4e}"));
    }

    let runs = exec::map(seeds, |&seed| {
        let cfg = SimConfig { h, burn_in, record_dense: sim.record_dense, seed };
        simulate_one(&env, sim, cfg)
    });
    let mut outputs = Vec::new();
    for (&seed, run) in seeds.iter().zip(runs) {
        let path = run.with_context(|| format!("seed {seed}"))?;
        outputs.push(ctx.write(&format!("path_seed{seed}.csv"), &path_bytes(&path)?)?);
        if path.dense.is_some() {
            let mut buf = Vec::new();
            path.write_dense_csv(&mut buf)?;
            outputs.push(ctx.write(&format!("path_seed{seed}_dense.csv"), &buf)?);
        }
        ctx.note(format!("seed {seed}: {} samples", path.len()));
    }
    let mut resolved = BTreeMap::new();
    resolved.insert("h".into(), h.to_string());
    resolved.insert("burn_in".into(), burn_in.to_string());
    resolved.insert("kappa".into(), params.kappa.to_string());
    resolved.insert("rho".into(), params.rho.to_string());
    ctx.manifest("simulate", outputs, resolved)
}

// ---------------------------------------------------------------- recover

fn read_path(file: &Path, t_hint: Option<f64>) -> Result<SamplePath> {
    let text = fs::read(file).with_context(|| format!("reading {}", file.display()))?;
    if text.iter().all(u8::is_ascii_whitespace) {
        return Ok(SamplePath::from_samples(t_hint.unwrap_or(1.0), Vec::new()));
    }
    SamplePath::read_csv(&text[..], t_hint).with_context(|| format!("parsing {}", file.display()))
}

fn read_estimate(file: &Path) -> Result<EstimateSet> {
    let f = fs::File::open(file).with_context(|| format!("reading {}", file.display()))?;
    EstimateSet::read_csv(f).with_context(|| format!("parsing {}", file.display()))
}

/// Recovery jobs: a file suffix and the paths pooled under it.
fn recovery_inputs(ctx: &Ctx, files: &[PathBuf]) -> Result<Vec<(String, Vec<PathBuf>)>> {
    if !files.is_empty() {
        return Ok(vec![(String::new(), files.to_vec())]);
    }
    if !ctx.cfg.recover.paths.is_empty() {
        return Ok(vec![(String::new(), ctx.cfg.recover.paths.clone())]);
    }
    let seeds = ctx.seeds().context("no path files given")?;
    Ok(seeds.iter().map(|s| (format!("_seed{s}"), vec![ctx.out.join(format!("path_seed{s}.csv"))])).collect())
}

fn apply_overrides(ctx: &Ctx, params: Params) -> Params {
    let r = &ctx.cfg.recover;
    match params {
        Params::Fixed(mut p) => {
            p.s = r.s.unwrap_or(p.s);
            p.eps_grid = r.eps.unwrap_or(p.eps_grid);
            p.u = r.u.unwrap_or(p.u);
            p.ell = r.ell.unwrap_or(p.ell);
            p.s_e = r.s_e.unwrap_or(p.s_e);
            Params::Fixed(p)
        }
        Params::High(mut p) => {
            p.s = r.s.unwrap_or(p.s);
            p.eps_grid = r.eps.unwrap_or(p.eps_grid);
            p.ell = r.ell.unwrap_or(p.ell);
            p.n0 = r.n0.unwrap_or(p.n0);
            Params::High(p)
        }
    }
}

fn params_record(p: &Params) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    match p {
        Params::Fixed(p) => {
            for (k, v) in [("s", p.s), ("eps_grid", p.eps_grid), ("u", p.u), ("ell", p.ell), ("s_e", p.s_e)] {
                m.insert(k.to_string(), v.to_string());
            }
        }
        Params::High(p) => {
            for (k, v) in [("s", p.s), ("eps_grid", p.eps_grid), ("ell", p.ell)] {
                m.insert(k.to_string(), v.to_string());
            }
            m.insert("n0".into(), p.n0.to_string());
        }
    }
    m
}

pub fn recover_cmd(ctx: &Ctx, regime: Option<Regime>, files: &[PathBuf], initial: Option<&Path>) -> Result<()> {
    let regime = regime.or(ctx.cfg.recover.regime).unwrap_or(Regime::FixedFreq);
    let initial = match regime {
        Regime::Refined => {
            let file = initial
                .map(Path::to_path_buf)
                .or_else(|| ctx.cfg.recover.initial.clone())
                .context("configuration error: refinement needs an initial estimate (--initial or recover.initial)")?;
            let est = read_estimate(&file)?;
            if est.is_empty() {
                bail!("configuration error: initial estimate {} is empty", file.display());
            }
            Some(est.point_set())
        }
        _ => None,
    };
    let env = match &ctx.cfg.environment {
        Some(spec) => Some(spec.build()?),
        None => None,
    };
    let t_hint = ctx.cfg.recover.t.or(ctx.cfg.simulation.as_ref().map(|s| s.t));
    let jobs = recovery_inputs(ctx, files)?;

    let mut outputs = Vec::new();
    let mut resolved = BTreeMap::new();
    resolved.insert("regime".into(), regime.to_string());
    for (suffix, files) in &jobs {
        let paths = files.iter().map(|f| read_path(f, t_hint)).collect::<Result<Vec<_>>>()?;
        let live: Vec<SamplePath> = paths.into_iter().filter(|p| p.len() >= 2).collect();
        let est = if live.is_empty() {
            ctx.note(format!("estimate_{regime}{suffix}: no transitions in the input, empty estimate"));
            EstimateSet::empty(regime, 0.0, None)
        } else {
            let t = live[0].t;
            if live.iter().any(|p| ((p.t - t) / t).abs() > 1e-9) {
                bail!("all paths must share one sampling interval");
            }
            let horizon: f64 = live.iter().map(|p| p.horizon).sum();
            let scales = scales_from(&ctx.cfg, env.as_ref(), t, horizon)?;
            let (params, warnings) = default_params(regime, &scales, &ctx.cfg.constants)?;
            warnings.iter().for_each(|w| ctx.warn(w));
            let params = apply_overrides(ctx, params);
            for (k, v) in params_record(&params) {
                resolved.insert(format!("{}{suffix}", k), v);
            }
            match (regime, params) {
                (Regime::FixedFreq, Params::Fixed(p)) => recover_fixed_frequency(&live, &p)?,
                (Regime::Refined, Params::Fixed(p)) => {
                    let rounds = ctx.cfg.recover.rounds.unwrap_or(DEFAULT_ROUNDS);
                    let all = refine_rounds(&live, &p, initial.as_ref().expect("checked above"), rounds)?;
                    resolved.insert(format!("rounds{suffix}"), all.len().to_string());
                    all.into_iter().last().unwrap_or_else(|| EstimateSet::empty(regime, p.eps_grid, Some(params)))
                }
                (Regime::HighFreq, Params::High(p)) => recover_high_frequency(&live, &p)?,
                _ => unreachable!("default_params returns the parameter kind of its regime"),
            }
        };
        let mut buf = Vec::new();
        est.write_csv(&mut buf)?;
        outputs.push(ctx.write(&format!("estimate_{regime}{suffix}.csv"), &buf)?);
        let mut buf = Vec::new();
        est.write_diagnostics_csv(&mut buf)?;
        outputs.push(ctx.write(&format!("diagnostics_{regime}{suffix}.csv"), &buf)?);
        if ctx.cfg.output.svg {
            let samples = files.iter().map(|f| read_path(f, t_hint)).collect::<Result<Vec<_>>>()?;
            let views: Vec<&[Point]> = samples.iter().map(|p| &p.samples[..]).collect();
            let drawing = svg::render(env.as_ref(), &views, &est);
            outputs.push(ctx.write(&format!("estimate_{regime}{suffix}.svg"), drawing.as_bytes())?);
        }
        ctx.note(format!("estimate_{regime}{suffix}: {} flagged", est.len()));
    }
    ctx.manifest(&format!("recover-{regime}"), outputs, resolved)
}

// ---------------------------------------------------------------- eval

#[derive(Clone, Debug, PartialEq)]
pub struct Score {
    pub hausdorff: f64,
    /// Largest distance from an estimate point to the barriers.
    pub false_positive: f64,
    /// Largest distance from a barrier vertex to the estimate.
    pub missed: f64,
}

pub fn score(est: &EstimateSet, env: &Environment) -> Result<Score> {
    if est.is_empty() {
        bail!("estimate is empty: the Hausdorff distance is undefined");
    }
    let truth = PointSet::new(env.curves().flat_map(|c| c.vertices().iter().copied()).collect());
    let ps = est.point_set();
    Ok(Score {
        hausdorff: hausdorff(&ps, &truth)?,
        false_positive: ps.directed_distance(&truth),
        missed: truth.directed_distance(&ps),
    })
}

pub fn eval_cmd(ctx: &Ctx, files: &[PathBuf]) -> Result<()> {
    let env = ctx.cfg.environment()?;
    let files: Vec<PathBuf> = if !files.is_empty() {
        files.to_vec()
    } else if !ctx.cfg.eval.estimates.is_empty() {
        ctx.cfg.eval.estimates.clone()
    } else {
        let mut found: Vec<PathBuf> = fs::read_dir(&ctx.out)
            .with_context(|| format!("reading {}", ctx.out.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                name.starts_with("estimate_") && name.ends_with(".csv")
            })
            .collect();
        found.sort();
        if found.is_empty() {
            bail!("no estimate files given or found in {}", ctx.out.display());
        }
        found
    };
    let mut report = String::from("estimate,points,hausdorff,false_positive,missed\n");
    for f in &files {
        let est = read_estimate(f)?;
        let s = score(&est, &env).with_context(|| format!("scoring {}", f.display()))?;
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        report.push_str(&format!("{name},{},{},{},{}\n", est.len(), s.hausdorff, s.false_positive, s.missed));
        if !ctx.quiet {
            println!("{name}: d_H = {:.4} (false positive {:.4}, missed {:.4})", s.hausdorff, s.false_positive, s.missed);
        }
    }
    let outputs = vec![ctx.write("eval.csv", report.as_bytes())?];
    ctx.manifest("eval", outputs, BTreeMap::new())
}

// ---------------------------------------------------------------- covertime

pub fn covertime_cmd(ctx: &Ctx) -> Result<()> {
    let env = ctx.cfg.environment()?;
    if !env.inner().is_empty() {
        bail!("configuration error: cover times need an environment without inner barriers");
    }
    let spec = ctx.cfg.covertime.as_ref().context("configuration error: no [covertime] section")?;
    if spec.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        bail!("configuration error: covertime.eps values must lie in (0, 1)");
    }
    let seeds = ctx.seeds()?;
    let jobs: Vec<(u64, usize)> = seeds.iter().flat_map(|&s| (0..spec.paths).map(move |k| (s, k))).collect();
    let runs = exec::map(&jobs, |&(seed, k)| {
        let mut rng = path_rng(seed, k as u64);
        cover_times(&env, &spec.eps, spec.h, spec.max_time, &mut rng)
    });
    let mut detail = String::from("seed,path,eps,time\n");
    let mut sums = vec![(0.0, 0usize, 0usize); spec.eps.len()];
    for (&(seed, k), run) in jobs.iter().zip(runs) {
        let times = run?;
        for (i, (&e, tm)) in spec.eps.iter().zip(times).enumerate() {
            match tm {
                Some(v) => {
                    detail.push_str(&format!("{seed},{k},{e},{v}\n"));
                    sums[i].0 += v;
                    sums[i].1 += 1;
                }
                None => {
                    detail.push_str(&format!("{seed},{k},{e},\n"));
                    sums[i].2 += 1;
                }
            }
        }
    }
    let limit = cover_constant(env.area());
    let mut summary = String::from("eps,paths,censored,mean,ratio,limit\n");
    for (&e, &(sum, n, censored)) in spec.eps.iter().zip(&sums) {
        let mean = if n > 0 { sum / n as f64 } else { f64::NAN };
        let ratio = mean / (1.0 / e).ln().powi(2);
        summary.push_str(&format!("{e},{n},{censored},{mean},{ratio},{limit}\n"));
        if censored > 0 {
            ctx.warn(format!("eps = {e}: {censored} paths hit max_time; the mean is biased low"));
        }
        ctx.note(format!("eps = {e}: mean cover time {mean:.4}, ratio {ratio:.4} (limit {limit:.4})"));
    }
    let outputs = vec![ctx.write("covertime.csv", detail.as_bytes())?, ctx.write("covertime_summary.csv", summary.as_bytes())?];
    ctx.manifest("covertime", outputs, BTreeMap::new())
}

// ---------------------------------------------------------------- ingest

/// File-name-safe version of a track id.
fn safe_name(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

pub fn ingest_cmd(ctx: &Ctx) -> Result<()> {
    let spec = ctx.cfg.ingest.as_ref().context("configuration error: no [ingest] section")?;
    let file = fs::File::open(&spec.file).with_context(|| format!("reading {}", spec.file.display()))?;
    let (raw, dropped) = ingest::load_tracks(file, &spec.schema)?;
    let set = match raw.crs {
        Crs::Lonlat => ingest::project_lonlat(&raw)?,
        Crs::Planar => raw,
    };
    let split_gap = spec.split_gap.unwrap_or(10.0 * spec.t);
    let pieces = ingest::resample(&set, spec.t, split_gap)?;
    let cov = ingest::coverage(&set, &pieces);

    let mut outputs = Vec::new();
    let mut report = String::from("file,id,start,samples,horizon\n");
    let mut counter: BTreeMap<&str, usize> = BTreeMap::new();
    for piece in &pieces {
        let n = counter.entry(&piece.id).or_default();
        let name = format!("track_{}_{}.csv", safe_name(&piece.id), *n);
        *n += 1;
        outputs.push(ctx.write(&name, &path_bytes(&piece.path)?)?);
        report.push_str(&format!("{name},{},{},{},{}\n", piece.id, piece.start, piece.path.len(), piece.path.horizon));
    }
    let mut planar = Vec::new();
    ingest::write_tracks(&set, &mut planar)?;
    outputs.push(ctx.write("tracks_planar.csv", &planar)?);
    outputs.push(ctx.write("ingest_report.csv", report.as_bytes())?);

    ctx.note(format!(
        "{} tracks -> {} paths; effective observation period {} (raw span {})",
        set.tracks.len(),
        cov.paths,
        cov.effective,
        cov.raw_span
    ));
    if dropped.missing_rows + dropped.bad_rows.len() + dropped.duplicate_rows > 0 || !dropped.dropped_tracks.is_empty() {
        ctx.warn(format!(
            "dropped {} incomplete rows, {} bad rows, {} duplicate timestamps, tracks {:?}",
            dropped.missing_rows,
            dropped.bad_rows.len(),
            dropped.duplicate_rows,
            dropped.dropped_tracks
        ));
    }
    let mut resolved = BTreeMap::new();
    resolved.insert("effective_horizon".into(), cov.effective.to_string());
    resolved.insert("raw_span".into(), cov.raw_span.to_string());
    resolved.insert("paths".into(), cov.paths.to_string());
    resolved.insert("split_gap".into(), split_gap.to_string());
    ctx.manifest("ingest", outputs, resolved)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recommended_horizon_grows_as_eps_shrinks() {
        let a = recommended_horizon(1.0, 0.1, 1.0, 0.1, 10.0);
        let b = recommended_horizon(1.0, 0.1, 1.0, 0.05, 10.0);
        assert!(b > 2.0 * a);
    }

    #[test]
    fn ids_become_file_names() {
        assert_eq!(safe_name("gull 7/a"), "gull_7_a");
    }
}
