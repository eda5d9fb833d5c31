use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn snapout(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snapout"))
        .args(args)
        .arg("--config")
        .arg(dir.join("exp.toml"))
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--quiet")
        .output()
        .unwrap()
}

fn setup(config: &str) -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("exp.toml"), config).unwrap();
    let out = dir.path().join("out");
    (dir, out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const DISK: &str = r#"
seeds = [1, 2]

[environment]
outer = { kind = "circle", center = { x = 0.0, y = 0.0 }, radius = 1.0 }

[simulation]
t = 0.01
horizon = 2.0
"#;

#[test]
fn simulate_writes_one_file_per_seed_and_a_manifest() {
    let (dir, out) = setup(DISK);
    let o = snapout(dir.path(), &["simulate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["path_seed1.csv", "path_seed2.csv", "manifest-simulate.toml"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let text = std::fs::read_to_string(out.join("path_seed1.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 201);
    let manifest: toml::Table = toml::from_str(&std::fs::read_to_string(out.join("manifest-simulate.toml")).unwrap()).unwrap();
    assert_eq!(manifest["command"].as_str(), Some("simulate"));
    assert!(manifest["config"].as_str().unwrap().contains("horizon = 2.0"));
}

#[test]
fn zero_horizon_gives_single_row_paths() {
    let (dir, out) = setup(&DISK.replace("horizon = 2.0", "horizon = 0.0"));
    assert!(snapout(dir.path(), &["simulate"]).status.success());
    let text = std::fs::read_to_string(out.join("path_seed2.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn seed_flag_replaces_the_config_list() {
    let (dir, out) = setup(DISK);
    assert!(snapout(dir.path(), &["simulate", "--seed", "7"]).status.success());
    assert!(out.join("path_seed7.csv").exists());
    assert!(!out.join("path_seed1.csv").exists());
}

#[test]
fn empty_path_file_gives_an_empty_estimate() {
    let (dir, out) = setup(DISK);
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "index,time,x,y\n").unwrap();
    let o = snapout(dir.path(), &["recover", empty.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("estimate_fixed-freq.csv")).unwrap();
    assert_eq!(text.trim(), "x,y,regime,diagnostic,cell");
}

#[test]
fn refine_without_initial_estimate_is_a_configuration_error() {
    let (dir, _) = setup(DISK);
    assert!(snapout(dir.path(), &["simulate"]).status.success());
    let o = snapout(dir.path(), &["refine"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("configuration error"), "{}", stderr(&o));
    // The same through the config's regime.
    let (dir, _) = setup(&format!("{DISK}\n[recover]\nregime = \"refine\"\n"));
    let o = snapout(dir.path(), &["recover"]);
    assert!(stderr(&o).contains("configuration error"), "{}", stderr(&o));
}

fn write_estimate(path: &Path, points: &[(f64, f64)]) {
    let mut s = String::from("x,y,regime,diagnostic,cell\n");
    for (x, y) in points {
        s.push_str(&format!("{x},{y},high-freq,0,0.01\n"));
    }
    std::fs::write(path, s).unwrap();
}

fn eval_hausdorff(dir: &Path, est: &Path) -> f64 {
    let o = snapout(dir, &["eval", est.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.join("out/eval.csv")).unwrap();
    text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap()
}

#[test]
fn eval_scores_exact_vertices_and_translations() {
    let (dir, _) = setup(DISK);
    // The unit circle's polyline has 2048 vertices.
    let n = 2048;
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let a = k as f64 / n as f64 * std::f64::consts::TAU;
            (a.cos(), a.sin())
        })
        .collect();
    let exact = dir.path().join("exact.csv");
    write_estimate(&exact, &pts);
    let d0 = eval_hausdorff(dir.path(), &exact);
    assert!(d0 <= std::f64::consts::TAU / n as f64, "{d0}");

    let delta = 0.05;
    let moved = dir.path().join("moved.csv");
    write_estimate(&moved, &pts.iter().map(|(x, y)| (x + delta, *y)).collect::<Vec<_>>());
    let d1 = eval_hausdorff(dir.path(), &moved);
    assert!(d1 <= d0 + delta + 1e-12 && d1 > d0, "{d0} -> {d1}");
}

#[test]
fn eval_rejects_an_empty_estimate() {
    let (dir, _) = setup(DISK);
    let empty = dir.path().join("none.csv");
    write_estimate(&empty, &[]);
    let o = snapout(dir.path(), &["eval", empty.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("empty"));
}

#[test]
fn huge_eps_cover_time_is_the_first_hit() {
    // Both tolerances exceed the diameter, so the first boundary hit covers.
    let cfg = format!(
        "{}\n[covertime]\neps = [0.9, 0.5]\npaths = 3\nh = 1e-5\nmax_time = 10.0\n",
        DISK.replace("radius = 1.0", "radius = 0.1")
    );
    let (dir, out) = setup(&cfg);
    let o = snapout(dir.path(), &["covertime"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let detail = std::fs::read_to_string(out.join("covertime.csv")).unwrap();
    let times: Vec<f64> = detail.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(times.len(), 2 * 3 * 2);
    for pair in times.chunks(2) {
        assert_eq!(pair[0], pair[1]);
        assert!(pair[0] > 0.0 && pair[0] < 0.05, "{pair:?}");
    }
    let summary = std::fs::read_to_string(out.join("covertime_summary.csv")).unwrap();
    assert!(summary.starts_with("eps,paths,censored,mean,ratio,limit\n"));
}

#[test]
fn covertime_needs_a_free_domain() {
    let cfg = r#"
seeds = [1]
[environment]
outer = { kind = "circle", center = { x = 0.0, y = 0.0 }, radius = 2.0 }
inner = [{ curve = { kind = "circle", center = { x = 0.0, y = 0.0 }, radius = 1.0 }, lambda_plus = 1.0, lambda_minus = 1.0 }]
[covertime]
eps = [0.1]
paths = 1
h = 1e-3
max_time = 1.0
"#;
    let (dir, _) = setup(cfg);
    assert!(!snapout(dir.path(), &["covertime"]).status.success());
}

const INGEST: &str = r#"
[ingest]
file = "tracks.csv"
t = 60.0
split_gap = 600.0
[ingest.schema]
id = "animal"
timestamp = "when"
x = "lon"
y = "lat"
crs = "lonlat"
"#;

#[test]
fn lonlat_tracks_are_projected_and_split_at_gaps() {
    let (dir, out) = setup(INGEST);
    let rows = "animal,when,lon,lat\n\
        r1,2020-01-01 00:00:00,15.60,78.20\n\
        r1,2020-01-01 00:01:00,15.61,78.20\n\
        r1,2020-01-01 00:02:00,15.62,78.21\n\
        r1,2020-01-01 05:00:00,15.70,78.25\n\
        r1,2020-01-01 05:01:00,15.71,78.25\n";
    std::fs::write(dir.path().join("tracks.csv"), rows).unwrap();
    let o = snapout(dir.path(), &["ingest"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("track_r1_0.csv").exists());
    assert!(out.join("track_r1_1.csv").exists());
    // Projected coordinates are in kilometres around the centroid.
    let text = std::fs::read_to_string(out.join("track_r1_0.csv")).unwrap();
    for line in text.lines().skip(1) {
        let x: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(x.abs() < 10.0, "{line}");
    }
}

#[test]
fn malformed_header_fails_with_a_message() {
    let (dir, _) = setup(INGEST);
    std::fs::write(dir.path().join("tracks.csv"), "who,when,x,y\nr1,0,1,2\n").unwrap();
    let o = snapout(dir.path(), &["ingest"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("animal"), "{}", stderr(&o));
}
