use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use snapout::geometry::Point;
use snapout::transport::{bin_measure, truncated_w1, EmpiricalMeasure};

/// Minimum of the linear cost over all vertices of the transportation
/// polytope, found by solving every square basis subsystem.
fn polytope_oracle(a: &[f64], b: &[f64], cost: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let vars = n * m;
    let r = n + m - 1;
    // Row sums for every row, column sums for all but the last column.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..n {
        rows.push((0..vars).map(|k| if k / m == i { 1.0 } else { 0.0 }).collect());
        rhs.push(a[i]);
    }
    for j in 0..m - 1 {
        rows.push((0..vars).map(|k| if k % m == j { 1.0 } else { 0.0 }).collect());
        rhs.push(b[j]);
    }
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..r).collect();
    loop {
        if let Some(x) = solve_square(&rows, &rhs, &subset) {
            if x.iter().all(|&v| v >= -1e-12) {
                let c: f64 = subset.iter().zip(&x).map(|(&k, v)| cost[k] * v).sum();
                best = best.min(c);
            }
        }
        // Next combination in lexicographic order.
        let mut i = r;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if subset[i] < vars - r + i {
                subset[i] += 1;
                for k in i + 1..r {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn solve_square(rows: &[Vec<f64>], rhs: &[f64], cols: &[usize]) -> Option<Vec<f64>> {
    let r = cols.len();
    let mut mat: Vec<Vec<f64>> = rows
        .iter()
        .zip(rhs)
        .map(|(row, &v)| {
            let mut line: Vec<f64> = cols.iter().map(|&c| row[c]).collect();
            line.push(v);
            line
        })
        .collect();
    for col in 0..r {
        let piv = (col..r).max_by(|&x, &y| mat[x][col].abs().total_cmp(&mat[y][col].abs()))?;
        if mat[piv][col].abs() < 1e-12 {
            return None;
        }
        mat.swap(col, piv);
        for row in 0..r {
            if row != col {
                let f = mat[row][col] / mat[col][col];
                if f != 0.0 {
                    for k in col..=r {
                        mat[row][k] -= f * mat[col][k];
                    }
                }
            }
        }
    }
    Some((0..r).map(|i| mat[i][r] / mat[i][i]).collect())
}

fn oracle_w1(p: &EmpiricalMeasure, q: &EmpiricalMeasure, u: f64) -> f64 {
    let cost: Vec<f64> = p
        .atoms()
        .iter()
        .flat_map(|a| q.atoms().iter().map(move |b| a.dist(*b).min(u)))
        .collect();
    polytope_oracle(p.weights(), q.weights(), &cost)
}

fn random_measure(rng: &mut ChaCha8Rng, atoms: usize, uniform: bool) -> EmpiricalMeasure {
    let pts: Vec<Point> = (0..atoms).map(|_| Point::new(rng.random::<f64>() * 2.0, rng.random::<f64>() * 2.0)).collect();
    if uniform {
        return EmpiricalMeasure::uniform(pts);
    }
    let raw: Vec<f64> = (0..atoms).map(|_| rng.random::<f64>() + 0.01).collect();
    let s: f64 = raw.iter().sum();
    EmpiricalMeasure::new(pts, raw.iter().map(|w| w / s).collect()).unwrap()
}

#[test]
fn four_by_three_uniform_matches_polytope_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..50 {
        let p = random_measure(&mut rng, 4, true);
        let q = random_measure(&mut rng, 3, true);
        for u in [0.3, 1.0, 10.0] {
            let got = truncated_w1(&p, &q, u).unwrap();
            let want = oracle_w1(&p, &q, u);
            assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
        }
    }
}

#[test]
fn weighted_small_instances_match_polytope_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let (n, m) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let uni = rng.random_bool(0.5);
        let p = random_measure(&mut rng, n, uni);
        let uni = rng.random_bool(0.5);
        let q = random_measure(&mut rng, m, uni);
        let u = rng.random_range(0.1..3.0);
        let got = truncated_w1(&p, &q, u).unwrap();
        let want = oracle_w1(&p, &q, u);
        assert!((got - want).abs() <= 1e-9, "{n}x{m}: {got} vs {want}");
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

#[test]
fn equal_size_uniform_matches_best_assignment() {
    // Uniform measures with the same number of atoms have an optimal
    // coupling that is a permutation.
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let perms = permutations(6);
    for _ in 0..20 {
        let p = random_measure(&mut rng, 6, true);
        let q = random_measure(&mut rng, 6, true);
        let u = 0.8;
        let best = perms
            .iter()
            .map(|s| (0..6).map(|i| p.atoms()[i].dist(q.atoms()[s[i]]).min(u)).sum::<f64>() / 6.0)
            .fold(f64::INFINITY, f64::min);
        assert!((truncated_w1(&p, &q, u).unwrap() - best).abs() <= 1e-9);
    }
}

#[test]
fn degenerate_ties_terminate() {
    // Many equal costs and repeated atoms force degenerate pivots.
    let mut pts = Vec::new();
    for k in 0..40 {
        pts.push(Point::new((k % 4) as f64, 0.0));
    }
    let other: Vec<Point> = (0..30).map(|k| Point::new((k % 3) as f64 + 10.0, 0.0)).collect();
    let w = truncated_w1(&EmpiricalMeasure::uniform(pts), &EmpiricalMeasure::uniform(other), 1.0).unwrap();
    assert!((w - 1.0).abs() <= 1e-12);
}

#[test]
fn binning_bound_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..100 {
        let n = rng.random_range(1..=20);
        let uni = rng.random_bool(0.5);
        let q = random_measure(&mut rng, n, uni);
        for d in [0.1, 1.0] {
            let b = bin_measure(&q, d).unwrap();
            for u in [0.05, 10.0] {
                let w = truncated_w1(&q, &b, u).unwrap();
                assert!(w <= (2f64.sqrt() * d).min(u) + 1e-12, "d={d} u={u}: {w}");
            }
        }
    }
}
