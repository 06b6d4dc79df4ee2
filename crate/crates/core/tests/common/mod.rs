//! Reference computations written independently of the library: brute-force
//! transport optima, CDF integrals and direct convex minimisation.
#![allow(dead_code)]

use invlab::measures::DiscreteMeasure;
use invlab::systems::PhaseSpace;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Atoms = Vec<(f64, f64)>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn atoms(mu: &DiscreteMeasure) -> Atoms {
    mu.atoms().collect()
}

/// Random probability measure with 1 to `max_atoms` atoms; weights are at least 0.02 before normalising.
pub fn random_measure(rng: &mut ChaCha8Rng, space: PhaseSpace, max_atoms: usize) -> DiscreteMeasure {
    let k = rng.random_range(1..=max_atoms);
    let support: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.02..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    let head: f64 = w[..k - 1].iter().sum();
    w[k - 1] = 1.0 - head;
    DiscreteMeasure::new(space, support, w).unwrap()
}

fn metric(space: PhaseSpace, x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    match space {
        PhaseSpace::Interval => d,
        PhaseSpace::Circle => d.min(1.0 - d),
    }
}

/// Solves the square system by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[piv][c].abs() < 1e-12 {
            return None;
        }
        a.swap(c, piv);
        b.swap(c, piv);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                if f != 0.0 {
                    for k in c..n {
                        a[r][k] -= f * a[c][k];
                    }
                    b[r] -= f * b[c];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Minimum cost over all vertices of the transportation polytope, found by
/// trying every basis of `m + n - 1` cells (one redundant marginal dropped).
pub fn w1_vertex_enumeration(space: PhaseSpace, a: &Atoms, b: &Atoms) -> f64 {
    let (m, n) = (a.len(), b.len());
    let vars = m * n;
    let rank = m + n - 1;
    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..rank).collect();
    loop {
        // rows: all supplies, demands except the last
        let mut mat = vec![vec![0.0; rank]; rank];
        for (col, &v) in subset.iter().enumerate() {
            let (i, j) = (v / n, v % n);
            mat[i][col] = 1.0;
            if j < n - 1 {
                mat[m + j][col] = 1.0;
            }
        }
        let rhs: Vec<f64> = a.iter().map(|x| x.1).chain(b[..n - 1].iter().map(|x| x.1)).collect();
        if let Some(x) = solve(mat, rhs) {
            if x.iter().all(|&v| v >= -1e-12) {
                let cost: f64 = subset
                    .iter()
                    .zip(&x)
                    .map(|(&v, &f)| f * metric(space, a[v / n].0, b[v % n].0))
                    .sum();
                best = best.min(cost);
            }
        }
        // next combination
        let mut k = rank;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if subset[k] < vars - rank + k {
                subset[k] += 1;
                for r in k + 1..rank {
                    subset[r] = subset[r - 1] + 1;
                }
                break;
            }
        }
    }
}

/// `int |F_a - F_b|` on the interval, or `min_c int |F_a - F_b - c|` on the
/// circle, with the minimum taken over every value of the CDF gap.
pub fn w1_cdf_oracle(space: PhaseSpace, a: &Atoms, b: &Atoms) -> f64 {
    let mut pts: Vec<f64> = a.iter().chain(b).map(|x| x.0).collect();
    pts.push(0.0);
    pts.push(1.0);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let cdf = |m: &Atoms, x: f64| m.iter().filter(|p| p.0 <= x).map(|p| p.1).sum::<f64>();
    let pieces: Vec<(f64, f64)> = pts.windows(2).map(|w| (w[1] - w[0], cdf(a, w[0]) - cdf(b, w[0]))).collect();
    let cost = |c: f64| pieces.iter().map(|(len, d)| len * (d - c).abs()).sum::<f64>();
    match space {
        PhaseSpace::Interval => cost(0.0),
        PhaseSpace::Circle => pieces.iter().map(|p| cost(p.1)).fold(f64::INFINITY, f64::min),
    }
}

fn mixture(parts: &[&Atoms], lambda: &[f64]) -> Atoms {
    parts
        .iter()
        .zip(lambda)
        .flat_map(|(p, &l)| p.iter().map(move |&(x, w)| (x, l * w)))
        .collect()
}

fn ternary(lo: f64, hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (mut a, mut b) = (lo, hi);
    for _ in 0..100 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if f(m1) <= f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    f(0.5 * (a + b)).min(f(lo)).min(f(hi))
}

/// `min over the simplex of W1(mu, sum lambda_k nu_k)` for up to three
/// extremes, by nested ternary search on the convex objective.
pub fn hull_distance_oracle(space: PhaseSpace, mu: &Atoms, extremes: &[Atoms]) -> f64 {
    let w = |lambda: &[f64]| {
        let refs: Vec<&Atoms> = extremes.iter().collect();
        w1_cdf_oracle(space, mu, &mixture(&refs, lambda))
    };
    match extremes.len() {
        1 => w(&[1.0]),
        2 => ternary(0.0, 1.0, |l| w(&[l, 1.0 - l])),
        3 => ternary(0.0, 1.0, |l1| ternary(0.0, 1.0 - l1, |l2| w(&[l1, l2, (1.0 - l1 - l2).max(0.0)]))),
        k => panic!("oracle handles at most 3 extremes, got {k}"),
    }
}

/// Image measure under a map, atom by atom.
pub fn push(a: &Atoms, f: impl Fn(f64) -> f64) -> Atoms {
    a.iter().map(|&(x, w)| (f(x), w)).collect()
}
