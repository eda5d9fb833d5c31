use snapout::estimators::{
    recover_fixed_frequency, recover_high_frequency, refine, EstimateSet, FixedFreqParams, HighFreqParams, Regime,
};
use snapout::geometry::{Barrier, ClosedCurve, Environment, Point};
use snapout::process::{path_rng, simulate, SamplePath, SimConfig};
use snapout::transport::PointSet;

fn env() -> Environment {
    Environment::new(
        ClosedCurve::circle(Point::ORIGIN, 2.0).unwrap(),
        vec![Barrier::semipermeable(ClosedCurve::circle(Point::ORIGIN, 1.0).unwrap(), 1.0, 1.0).unwrap()],
    )
    .unwrap()
}

fn short_path(horizon: f64, t: f64, seed: u64) -> SamplePath {
    let env = env();
    let cfg = SimConfig::new(t / 10.0, seed);
    let mut rng = path_rng(seed, 0);
    let x0 = Point::new(1.5, 0.0);
    simulate(&env, x0, &env.sides_at(x0), horizon, t, &cfg, &mut rng).unwrap()
}

fn scaled(path: &SamplePath, a: f64) -> SamplePath {
    SamplePath::from_samples(path.t, path.samples.iter().map(|&p| p * a).collect())
}

fn fixed() -> FixedFreqParams {
    FixedFreqParams { s: 0.14, eps_grid: 0.05, u: 0.2, ell: 0.16, s_e: 0.1 }
}

#[test]
fn fixed_frequency_boxes_sit_on_the_grid_and_repeat() {
    let path = short_path(20.0, 0.01, 1);
    let p = fixed();
    let a = recover_fixed_frequency(std::slice::from_ref(&path), &p).unwrap();
    let b = recover_fixed_frequency(std::slice::from_ref(&path), &p).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_empty());
    for e in &a.elements {
        assert_eq!(e.point, Point::new(e.index.0 as f64 * p.eps_grid, e.index.1 as f64 * p.eps_grid));
    }
}

#[test]
fn estimate_csv_round_trip_keeps_the_point_set() {
    let path = short_path(10.0, 0.01, 2);
    let est = recover_fixed_frequency(&[path], &fixed()).unwrap();
    let mut buf = Vec::new();
    est.write_csv(&mut buf).unwrap();
    let back = EstimateSet::read_csv(&buf[..]).unwrap();
    assert_eq!(back.regime, Regime::FixedFreq);
    assert_eq!(back.point_set(), est.point_set());
    let idx: Vec<_> = back.elements.iter().map(|e| e.index).collect();
    assert_eq!(idx, est.elements.iter().map(|e| e.index).collect::<Vec<_>>());
}

#[test]
fn refinement_repeats_and_scales() {
    let path = short_path(10.0, 0.01, 3);
    let p = FixedFreqParams { s: 0.125, eps_grid: 0.0625, u: 0.25, ell: 0.25, s_e: 0.125 };
    let initial = PointSet::new((0..64).map(|k| {
        let a = k as f64 / 64.0 * std::f64::consts::TAU;
        Point::new(a.cos(), a.sin())
    }).collect());
    let a = refine(std::slice::from_ref(&path), &p, &initial).unwrap();
    assert_eq!(a, refine(std::slice::from_ref(&path), &p, &initial).unwrap());

    // Doubling every length is exact in floating point.
    let q = FixedFreqParams { s: 2.0 * p.s, eps_grid: 2.0 * p.eps_grid, u: 2.0 * p.u, ell: 2.0 * p.ell, s_e: 2.0 * p.s_e };
    let big = PointSet::new(initial.points().iter().map(|&x| x * 2.0).collect());
    let b = refine(&[scaled(&path, 2.0)], &q, &big).unwrap();
    let ia: Vec<_> = a.elements.iter().map(|e| e.index).collect();
    let ib: Vec<_> = b.elements.iter().map(|e| e.index).collect();
    assert_eq!(ia, ib);
}

#[test]
fn high_frequency_respects_the_visit_floor_on_a_simulated_path() {
    let path = short_path(2.0, 1e-3, 4);
    let p = HighFreqParams { s: 0.05, eps_grid: 0.1, ell: 0.2, n0: 5 };
    let est = recover_high_frequency(std::slice::from_ref(&path), &p).unwrap();
    assert_eq!(est, recover_high_frequency(&[path], &p).unwrap());
    for e in &est.elements {
        let snapout::estimators::Diagnostic::Counts { visits, back, .. } = e.diagnostic else { panic!() };
        assert!(visits >= p.n0);
        assert!((back as f64) < p.s * visits as f64);
    }
}

#[test]
fn a_track_without_transitions_changes_nothing() {
    let path = short_path(5.0, 0.01, 5);
    let lone = SamplePath::from_samples(0.01, vec![Point::new(0.3, 0.3)]);
    let a = recover_fixed_frequency(std::slice::from_ref(&path), &fixed()).unwrap();
    let b = recover_fixed_frequency(&[path, lone], &fixed()).unwrap();
    // A single sample has no successor and adds no transition.
    assert_eq!(a, b);
}
