//! Planar Brownian motion reflecting on barriers, crossing them after an
//! exponential amount of accumulated local time.
//!
//! Each step proposes a free Gaussian increment. A proposal that lands on the
//! forbidden side of a barrier is projected back onto the barrier (Skorokhod
//! projection) and the penetration depth is credited to that barrier's local
//! time. Every inner barrier carries a remaining local-time budget drawn from
//! an exponential law with the exit rate of the current side; once the budget
//! runs out the side flag flips, the proposal stands on the new side and a
//! fresh budget is drawn.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::{ClosedCurve, EnvParameters, Environment, Point, Side};

/// Reflection passes attempted per step before giving up.
const MAX_PASSES: usize = 4;

/// Relative tolerance (of a curve's diameter) below which a penetration is
/// treated as rounding noise.
const PENETRATION_RTOL: f64 = 1e-12;

pub type Rng64 = ChaCha8Rng;

/// Deterministic RNG for one path: stream `stream` of the generator seeded with `seed`.
pub fn path_rng(seed: u64, stream: u64) -> Rng64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Euler step.
    pub h: f64,
    pub burn_in: f64,
    pub record_dense: bool,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(h: f64, seed: u64) -> Self {
        Self { h, burn_in: 0.0, record_dense: false, seed }
    }

    /// `t / 50`, capped at `(min(1/kappa, rho) / 20)^2`.
    pub fn default_step(t: f64, params: &EnvParameters) -> f64 {
        let scale = (1.0 / params.kappa).min(params.rho);
        let cap = (scale / 20.0).powi(2);
        (t / 50.0).min(cap)
    }

    /// Burn-in used for approximate stationary starts: four times the mixing
    /// time guess when one is given, else a tenth of the observation period.
    pub fn default_burn_in(t_mix: Option<f64>, horizon: f64) -> f64 {
        match t_mix {
            Some(tm) => 4.0 * tm,
            None => 0.1 * horizon,
        }
    }
}

/// A barrier interaction during one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact {
    /// 0 for the outer boundary, `i` for inner barrier `i`.
    pub barrier: usize,
    /// Projection point on the barrier (or the crossing proposal when `switched`).
    pub point: Point,
    /// Local time credited to the barrier.
    pub increment: f64,
    pub switched: bool,
}

#[derive(Clone, Debug)]
pub struct ProcessState {
    pub position: Point,
    /// +1 / -1 per curve, index 0 is the outer boundary (always +1).
    pub sides: Vec<i8>,
    pub local_times: Vec<f64>,
    /// Remaining local time before the side flag of each curve flips.
    pub switch_budget: Vec<f64>,
    pub clock: f64,
    clearance: Vec<f64>,
    contacts: Vec<Contact>,
}

fn draw_budget<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    if rate == 0.0 {
        f64::INFINITY
    } else if rate.is_infinite() {
        0.0
    } else {
        let e: f64 = rng.sample(Exp1);
        e / rate
    }
}

impl ProcessState {
    /// Fresh state at `x0` with zero local times and freshly drawn budgets.
    pub fn new<R: Rng + ?Sized>(env: &Environment, x0: Point, sides: &[i8], rng: &mut R) -> Result<Self> {
        check_initial(env, x0, sides)?;
        let m = env.barrier_count();
        let mut budget = vec![f64::INFINITY; m];
        for (i, b) in env.inner().iter().enumerate() {
            budget[i + 1] = draw_budget(b.exit_rate(sides[i + 1] > 0), rng);
        }
        Ok(Self {
            position: x0,
            sides: sides.to_vec(),
            local_times: vec![0.0; m],
            switch_budget: budget,
            clock: 0.0,
            clearance: vec![0.0; m],
            contacts: Vec::new(),
        })
    }

    /// Barrier interactions of the most recent step.
    pub fn contacts(&self) -> &[Contact] {
        &self.contacts
    }

    /// Advance by one Euler step of length `h`.
    pub fn advance<R: Rng + ?Sized>(&mut self, env: &Environment, h: f64, rng: &mut R) -> Result<()> {
        let zx: f64 = rng.sample(StandardNormal);
        let zy: f64 = rng.sample(StandardNormal);
        let proposal = self.position + Point::new(zx, zy) * h.sqrt();
        self.apply_increment(env, proposal, rng)?;
        self.clock += h;
        Ok(())
    }

    /// Move towards `proposal`, reflecting and switching sides as required.
    pub fn apply_increment<R: Rng + ?Sized>(
        &mut self,
        env: &Environment,
        proposal: Point,
        rng: &mut R,
    ) -> Result<()> {
        let m = env.barrier_count();
        let start = self.position;
        let mut p = proposal;
        self.contacts.clear();
        // Exact distance of p to curve i, when it was evaluated at the final p.
        let mut fresh: [f64; 8] = [f64::NAN; 8];
        let mut fresh_vec: Vec<f64>;
        let fresh: &mut [f64] = if m <= 8 {
            &mut fresh[..m]
        } else {
            fresh_vec = vec![f64::NAN; m];
            &mut fresh_vec
        };
        let mut settled = usize::MAX;
        let mut pass = 0;
        loop {
            let mut projected = false;
            let reach = start.dist(p);
            for i in 0..m {
                if i == settled {
                    continue;
                }
                if self.clearance[i] > reach && fresh[i].is_nan() {
                    continue;
                }
                let curve = env.curve(i);
                let near = curve.nearest(p);
                let signed = near.signed(p);
                let tol = PENETRATION_RTOL * curve.diameter();
                if f64::from(self.sides[i]) * signed >= -tol {
                    fresh[i] = near.dist;
                    continue;
                }
                let depth = near.dist;
                if i > 0 && self.switch_budget[i] <= depth {
                    let credited = self.switch_budget[i];
                    self.local_times[i] += credited;
                    self.sides[i] = -self.sides[i];
                    let rate = env.inner()[i - 1].exit_rate(self.sides[i] > 0);
                    self.switch_budget[i] = draw_budget(rate, rng);
                    self.contacts.push(Contact { barrier: i, point: p, increment: credited, switched: true });
                    fresh[i] = depth;
                } else {
                    self.local_times[i] += depth;
                    self.switch_budget[i] -= depth;
                    p = near.point;
                    self.contacts.push(Contact { barrier: i, point: p, increment: depth, switched: false });
                    for f in fresh.iter_mut() {
                        *f = f64::NAN;
                    }
                    fresh[i] = 0.0;
                    settled = i;
                    projected = true;
                }
            }
            if !projected {
                break;
            }
            pass += 1;
            if pass >= MAX_PASSES {
                return Err(Error::StepTooLarge(pass));
            }
        }
        let moved = start.dist(p);
        for i in 0..m {
            self.clearance[i] = if fresh[i].is_nan() { self.clearance[i] - moved } else { fresh[i] };
        }
        self.position = p;
        Ok(())
    }
}

/// One Euler step from `state`, returning the successor.
pub fn step<R: Rng + ?Sized>(state: &ProcessState, env: &Environment, h: f64, rng: &mut R) -> Result<ProcessState> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step h = {h} must be positive")));
    }
    let mut next = state.clone();
    next.advance(env, h, rng)?;
    Ok(next)
}

fn check_initial(env: &Environment, x0: Point, sides: &[i8]) -> Result<()> {
    if sides.len() != env.barrier_count() {
        return Err(Error::InvalidInitialCondition(format!(
            "expected {} side flags, got {}",
            env.barrier_count(),
            sides.len()
        )));
    }
    if !env.contains(x0) {
        return Err(Error::InvalidInitialCondition(format!("({}, {}) is outside the domain", x0.x, x0.y)));
    }
    if sides[0] != 1 {
        return Err(Error::InvalidInitialCondition("outer side flag must be +1".into()));
    }
    for (i, b) in env.inner().iter().enumerate() {
        let s = sides[i + 1];
        let ok = match b.curve.side_of(x0) {
            Side::On => s == 1 || s == -1,
            Side::Positive => s == 1,
            Side::Negative => s == -1,
        };
        if !ok {
            return Err(Error::InvalidInitialCondition(format!(
                "side flag {s} of barrier {} does not match the start position",
                i + 1
            )));
        }
    }
    Ok(())
}

/// Positions at every Euler step.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTrace {
    pub h: f64,
    pub points: Vec<Point>,
}

/// First barrier interaction of a simulated path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstContact {
    pub time: f64,
    pub contact: Contact,
}

/// Discretely sampled trajectory `X_0, X_t, X_2t, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePath {
    pub t: f64,
    pub samples: Vec<Point>,
    /// Observation period `T`.
    pub horizon: f64,
    pub dense: Option<DenseTrace>,
    pub seed: u64,
    pub first_contact: Option<FirstContact>,
}

impl SamplePath {
    pub fn from_samples(t: f64, samples: Vec<Point>) -> Self {
        let horizon = t * samples.len().saturating_sub(1) as f64;
        Self { t, samples, horizon, dense: None, seed: 0, first_contact: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Prefix covering the observation period `horizon` (`floor(horizon/t) + 1` samples).
    pub fn truncated(&self, horizon: f64) -> SamplePath {
        let n = (sample_count(horizon, self.t)).min(self.samples.len());
        SamplePath {
            t: self.t,
            samples: self.samples[..n].to_vec(),
            horizon,
            dense: None,
            seed: self.seed,
            first_contact: self.first_contact.filter(|f| f.time <= horizon),
        }
    }

    /// CSV with header `index,time,x,y`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "time", "x", "y"])?;
        for (j, p) in self.samples.iter().enumerate() {
            w.write_record(&[j.to_string(), (j as f64 * self.t).to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Inverse of [`SamplePath::write_csv`]; `t` is read from the time column
    /// (or taken from `t_hint` for files with fewer than two rows).
    pub fn read_csv<R: std::io::Read>(input: R, t_hint: Option<f64>) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::InvalidInput(format!("missing column `{name}`")))
        };
        let (ct, cx, cy) = (col("time")?, col("x")?, col("y")?);
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let parse = |c: usize| -> Result<f64> {
                rec.get(c)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("row {}: bad number in column {c}", row + 2)))
            };
            times.push(parse(ct)?);
            samples.push(Point::new(parse(cx)?, parse(cy)?));
        }
        let t = if times.len() >= 2 { times[1] - times[0] } else { t_hint.unwrap_or(1.0) };
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("non-increasing time column (t = {t})")));
        }
        Ok(Self::from_samples(t, samples))
    }

    pub fn write_dense_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let trace = self.dense.as_ref().ok_or(Error::MissingTrace)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "time", "x", "y"])?;
        for (k, p) in trace.points.iter().enumerate() {
            w.write_record(&[k.to_string(), (k as f64 * trace.h).to_string(), p.x.to_string(), p.y.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `floor(horizon / t) + 1`, robust to rounding in the ratio.
pub fn sample_count(horizon: f64, t: f64) -> usize {
    ((horizon / t) * (1.0 + 1e-12) + 1e-9).floor() as usize + 1
}

/// Run a path and call `observe` after every Euler step (including burn-in,
/// flagged by the second argument).
pub fn run_steps<R, F>(
    env: &Environment,
    state: &mut ProcessState,
    h: f64,
    steps: usize,
    rng: &mut R,
    mut observe: F,
) -> Result<()>
where
    R: Rng + ?Sized,
    F: FnMut(&ProcessState),
{
    for _ in 0..steps {
        state.advance(env, h, rng)?;
        observe(state);
    }
    Ok(())
}

/// Simulate from `x0` and record `floor(T/t) + 1` samples at spacing `t`.
///
/// The Euler step actually used is `t / ceil(t / cfg.h)` so that samples fall
/// on step boundaries. Deterministic given the RNG state.
pub fn simulate<R: Rng + ?Sized>(
    env: &Environment,
    x0: Point,
    initial_sides: &[i8],
    horizon: f64,
    t: f64,
    cfg: &SimConfig,
    rng: &mut R,
) -> Result<SamplePath> {
    if !(t > 0.0) || !(cfg.h > 0.0) || t < cfg.h {
        return Err(Error::InvalidInput(format!("need 0 < h <= t, got h = {}, t = {t}", cfg.h)));
    }
    if !(horizon >= 0.0) || !(cfg.burn_in >= 0.0) {
        return Err(Error::InvalidInput("observation period and burn-in must be >= 0".into()));
    }
    let mut state = ProcessState::new(env, x0, initial_sides, rng)?;
    let per_sample = (t / cfg.h - 1e-9).ceil().max(1.0) as usize;
    let h = t / per_sample as f64;
    let burn_steps = (cfg.burn_in / h).round() as usize;
    run_steps(env, &mut state, h, burn_steps, rng, |_| {})?;
    state.clock = 0.0;
    for l in state.local_times.iter_mut() {
        *l = 0.0;
    }

    let n = sample_count(horizon, t);
    let mut samples = Vec::with_capacity(n);
    samples.push(state.position);
    let mut dense = cfg.record_dense.then(|| DenseTrace { h, points: vec![state.position] });
    let mut first_contact = None;
    for _ in 1..n {
        for _ in 0..per_sample {
            state.advance(env, h, rng)?;
            if first_contact.is_none() {
                if let Some(c) = state.contacts().first() {
                    first_contact = Some(FirstContact { time: state.clock, contact: *c });
                }
            }
            if let Some(d) = dense.as_mut() {
                d.points.push(state.position);
            }
        }
        samples.push(state.position);
    }
    Ok(SamplePath { t, samples, horizon, dense, seed: cfg.seed, first_contact })
}

/// [`simulate`] with the RNG derived from `cfg.seed`.
pub fn simulate_seeded(
    env: &Environment,
    x0: Point,
    initial_sides: &[i8],
    horizon: f64,
    t: f64,
    cfg: &SimConfig,
) -> Result<SamplePath> {
    let mut rng = path_rng(cfg.seed, 0);
    simulate(env, x0, initial_sides, horizon, t, cfg, &mut rng)
}

pub const MAX_REJECTION_ATTEMPTS: usize = 100_000;

/// Uniform point in the domain by rejection from the bounding box.
pub fn uniform_point<R: Rng + ?Sized>(env: &Environment, rng: &mut R) -> Result<Point> {
    let (lo, hi) = env.outer().bounding_box();
    for _ in 0..MAX_REJECTION_ATTEMPTS {
        let p = Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        if env.outer().contains(p) {
            return Ok(p);
        }
    }
    Err(Error::DegenerateDomain(MAX_REJECTION_ATTEMPTS))
}

/// Approximate draw from the stationary law: uniform for `m = 0`, uniform
/// followed by `cfg.burn_in` of simulated time otherwise.
pub fn stationary_start<R: Rng + ?Sized>(env: &Environment, cfg: &SimConfig, rng: &mut R) -> Result<(Point, Vec<i8>)> {
    let p = uniform_point(env, rng)?;
    let sides = env.sides_at(p);
    if env.inner().is_empty() || cfg.burn_in <= 0.0 {
        return Ok((p, sides));
    }
    let mut state = ProcessState::new(env, p, &sides, rng)?;
    let steps = (cfg.burn_in / cfg.h).ceil() as usize;
    run_steps(env, &mut state, cfg.h, steps, rng, |_| {})?;
    Ok((state.position, state.sides))
}

/// `(1 / 2 eps) * h * #{steps within eps of the curve}`.
pub fn local_time_estimate(trace: Option<&DenseTrace>, curve: &ClosedCurve, eps: f64) -> Result<f64> {
    let trace = trace.ok_or(Error::MissingTrace)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("eps = {eps} must be positive")));
    }
    let steps = trace.points.len().saturating_sub(1);
    let near = trace.points[..steps].iter().filter(|&&p| curve.nearest(p).dist < eps).count();
    Ok(near as f64 * trace.h / (2.0 * eps))
}

/// Mean of `sup_{s <= t} (-W_s)` for a standard Brownian motion, which is the
/// expected local time at time `t` of a path reflected on a line it starts on.
pub fn half_line_local_time_mean(t: f64) -> f64 {
    (2.0 * t / PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Barrier;

    fn disk(r: f64) -> Environment {
        Environment::new(ClosedCurve::circle(Point::ORIGIN, r).unwrap(), vec![]).unwrap()
    }

    fn disk_with_ring(lambda: f64) -> Environment {
        Environment::new(
            ClosedCurve::circle(Point::ORIGIN, 2.0).unwrap(),
            vec![Barrier::semipermeable(ClosedCurve::circle(Point::ORIGIN, 1.0).unwrap(), lambda, lambda).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn zero_horizon_gives_single_sample() {
        let env = disk(1.0);
        let cfg = SimConfig::new(1e-3, 7);
        let p = simulate_seeded(&env, Point::new(0.1, 0.2), &[1], 0.0, 0.01, &cfg).unwrap();
        assert_eq!(p.samples, vec![Point::new(0.1, 0.2)]);
    }

    #[test]
    fn sample_count_matches_floor() {
        let env = disk(1.0);
        let cfg = SimConfig::new(1e-3, 7);
        let p = simulate_seeded(&env, Point::ORIGIN, &[1], 1.0, 0.3, &cfg).unwrap();
        assert_eq!(p.len(), 4);
        let p = simulate_seeded(&env, Point::ORIGIN, &[1], 0.9, 0.3, &cfg).unwrap();
        assert_eq!(p.len(), 4);
    }

    #[test]
    fn inconsistent_sides_are_rejected() {
        let env = disk_with_ring(1.0);
        let cfg = SimConfig::new(1e-3, 1);
        let err = simulate_seeded(&env, Point::ORIGIN, &[1, -1], 1.0, 0.01, &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidInitialCondition(_)));
        let err = simulate_seeded(&env, Point::new(5.0, 0.0), &[1, -1], 1.0, 0.01, &cfg).unwrap_err();
        assert!(matches!(err, Error::InvalidInitialCondition(_)));
        // On the barrier either flag is admissible.
        assert!(simulate_seeded(&env, Point::new(1.0, 0.0), &[1, -1], 0.1, 0.01, &cfg).is_ok());
    }

    #[test]
    fn impermeable_barriers_never_switch() {
        let env = disk_with_ring(0.0);
        let mut rng = path_rng(3, 0);
        let mut s = ProcessState::new(&env, Point::new(0.95, 0.0), &[1, 1], &mut rng).unwrap();
        for _ in 0..200_000 {
            s.advance(&env, 1e-4, &mut rng).unwrap();
            assert_eq!(s.sides, vec![1, 1]);
            assert!(s.position.norm() <= 1.0 + 1e-9);
        }
        assert!(s.local_times[1] > 0.0);
    }

    #[test]
    fn free_motion_far_from_barriers() {
        let env = disk(10.0);
        let h: f64 = 1e-4;
        let mut rng = path_rng(11, 0);
        let mut twin = rng.clone();
        let mut violations = 0;
        for _ in 0..100_000 {
            let mut s = ProcessState::new(&env, Point::ORIGIN, &[1], &mut rng).unwrap();
            let _ = ProcessState::new(&env, Point::ORIGIN, &[1], &mut twin).unwrap();
            s.advance(&env, h, &mut rng).unwrap();
            let zx: f64 = twin.sample(StandardNormal);
            let zy: f64 = twin.sample(StandardNormal);
            let free = Point::new(zx, zy) * h.sqrt();
            if s.position != free || s.local_times[0] != 0.0 {
                violations += 1;
            }
        }
        assert_eq!(violations, 0);
    }

    #[test]
    fn local_times_only_grow_on_contact_and_sides_stay_consistent() {
        let env = disk_with_ring(2.0);
        let mut rng = path_rng(5, 0);
        let mut s = ProcessState::new(&env, Point::new(1.5, 0.0), &[1, -1], &mut rng).unwrap();
        let h = 1e-3;
        for _ in 0..50_000 {
            let before = s.local_times.clone();
            let start = s.position;
            s.advance(&env, h, &mut rng).unwrap();
            for i in 0..2 {
                assert!(s.local_times[i] >= before[i]);
                if s.local_times[i] > before[i] {
                    assert!(s.contacts().iter().any(|c| c.barrier == i));
                }
            }
            let side = env.inner()[0].curve.side_of_with_tolerance(s.position, 1e-9);
            match side {
                Side::Positive => assert_eq!(s.sides[1], 1),
                Side::Negative => assert_eq!(s.sides[1], -1),
                Side::On => {}
            }
            let penetration: f64 = s.contacts().iter().filter(|c| !c.switched).map(|c| c.increment).sum();
            // Projection never moves further than the proposal plus twice the penetration.
            assert!(start.dist(s.position) <= 10.0 * h.sqrt() + 2.0 * penetration + 1.0);
        }
    }

    #[test]
    fn same_seed_same_path() {
        let env = disk_with_ring(1.0);
        let cfg = SimConfig::new(1e-3, 99);
        let a = simulate_seeded(&env, Point::new(0.5, 0.0), &[1, 1], 5.0, 0.01, &cfg).unwrap();
        let b = simulate_seeded(&env, Point::new(0.5, 0.0), &[1, 1], 5.0, 0.01, &cfg).unwrap();
        assert_eq!(a, b);
        let bits = |p: &SamplePath| p.samples.iter().map(|q| (q.x.to_bits(), q.y.to_bits())).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
    }

    #[test]
    fn stationary_start_m0_has_positive_sides() {
        let env = disk(1.0);
        let mut rng = path_rng(1, 0);
        let cfg = SimConfig::new(1e-3, 1);
        let (p, sides) = stationary_start(&env, &cfg, &mut rng).unwrap();
        assert_eq!(sides, vec![1]);
        assert!(p.norm() <= 1.0);
    }

    #[test]
    fn zero_burn_in_returns_uniform_draw() {
        let env = disk_with_ring(1.0);
        let cfg = SimConfig::new(1e-3, 1);
        let mut a = path_rng(8, 0);
        let mut b = path_rng(8, 0);
        let (p, sides) = stationary_start(&env, &cfg, &mut a).unwrap();
        let q = uniform_point(&env, &mut b).unwrap();
        assert_eq!(p, q);
        assert_eq!(sides, env.sides_at(q));
    }

    #[test]
    fn local_time_estimate_requires_trace_and_is_zero_far_away() {
        let env = disk(5.0);
        let c = ClosedCurve::circle(Point::ORIGIN, 5.0).unwrap();
        assert!(matches!(local_time_estimate(None, &c, 0.1), Err(Error::MissingTrace)));
        let mut cfg = SimConfig::new(1e-4, 2);
        cfg.record_dense = true;
        let p = simulate_seeded(&env, Point::ORIGIN, &[1], 0.1, 0.01, &cfg).unwrap();
        assert_eq!(local_time_estimate(p.dense.as_ref(), &c, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let path = SamplePath::from_samples(0.5, vec![Point::new(0.1, -0.2), Point::new(1.0 / 3.0, 2.0)]);
        let mut buf = Vec::new();
        path.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("index,time,x,y\n0,0,0.1,-0.2\n1,0.5,"));
        let back = SamplePath::read_csv(buf.as_slice(), None).unwrap();
        assert_eq!(back.samples, path.samples);
        assert_eq!(back.t, 0.5);
    }

    #[test]
    fn default_step_respects_geometry_cap() {
        let params = EnvParameters { kappa: 1.0, rho: 0.5, lambda_max: 1.0, pi_min: None, t_mix: None };
        assert_eq!(SimConfig::default_step(0.01, &params), 0.01 / 50.0);
        assert_eq!(SimConfig::default_step(1.0, &params), (0.5f64 / 20.0).powi(2));
    }
}
