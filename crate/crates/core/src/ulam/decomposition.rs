use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::{Grid, TransferMatrix};
use crate::error::{invalid, Error, Result};
use crate::measures::DiscreteMeasure;

/// Transitions below this probability are ignored when finding classes.
pub const EDGE_THRESHOLD: f64 = 1e-13;
/// Classes up to this size get a direct solve; larger ones power iteration.
const DIRECT_LIMIT: usize = 2048;
const POWER_BUDGET: usize = 100_000;
const POWER_TOL: f64 = 1e-12;
/// A direct solution is accepted when its residual is below this.
const DIRECT_TOL: f64 = 1e-11;

/// Recurrent classes of an Ulam chain, one stationary distribution per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicDecomposition {
    grid: Grid,
    /// Sorted cell indices, classes ordered by their smallest cell.
    pub classes: Vec<Vec<usize>>,
    /// Stationary weights aligned with `classes`.
    pub weights: Vec<Vec<f64>>,
    /// The same distributions as measures with atoms at cell centres.
    pub stationaries: Vec<DiscreteMeasure>,
    pub transient_cells: Vec<usize>,
}

/// Row of `P` restricted to `class`, renormalized, in local indices.
fn local_rows(p: &TransferMatrix, class: &[usize], local: &[usize]) -> Vec<Vec<(usize, f64)>> {
    class
        .iter()
        .map(|&i| {
            let mut row: Vec<(usize, f64)> = p
                .row(i)
                .iter()
                .filter(|e| local[e.0] != usize::MAX)
                .map(|&(j, v)| (local[j], v))
                .collect();
            let s: f64 = row.iter().map(|e| e.1).sum();
            row.iter_mut().for_each(|e| e.1 /= s);
            row
        })
        .collect()
}

fn step(rows: &[Vec<(usize, f64)>], pi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; pi.len()];
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            out[j] += pi[i] * v;
        }
    }
    out
}

fn residual(rows: &[Vec<(usize, f64)>], pi: &[f64]) -> f64 {
    step(rows, pi).iter().zip(pi).map(|(a, b)| (a - b).abs()).sum()
}

fn normalize(pi: &mut [f64]) {
    pi.iter_mut().for_each(|v| *v = v.max(0.0));
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
}

/// Solves `pi (P - I) = 0`, `sum pi = 1` with one balance equation replaced.
fn direct(rows: &[Vec<(usize, f64)>]) -> Option<Vec<f64>> {
    let m = rows.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            a[(j, i)] += v;
        }
        a[(i, i)] -= 1.0;
    }
    for k in 0..m {
        a[(m - 1, k)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(m);
    b[m - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    let mut pi: Vec<f64> = x.iter().copied().collect();
    if pi.iter().any(|v| !v.is_finite()) {
        return None;
    }
    normalize(&mut pi);
    Some(pi)
}

/// Lazy power iteration `pi <- (pi + pi P) / 2` from `start`.
fn power(rows: &[Vec<(usize, f64)>], start: Vec<f64>) -> Result<Vec<f64>> {
    let mut pi = start;
    let mut r = f64::INFINITY;
    for _ in 0..POWER_BUDGET {
        let next = step(rows, &pi);
        r = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        if r <= POWER_TOL {
            return Ok(pi);
        }
        for (p, q) in pi.iter_mut().zip(next) {
            *p = 0.5 * (*p + q);
        }
        normalize(&mut pi);
    }
    Err(Error::Convergence {
        iterations: POWER_BUDGET,
        residual: r,
    })
}

fn stationary(rows: &[Vec<(usize, f64)>]) -> Result<Vec<f64>> {
    let m = rows.len();
    if m == 1 {
        return Ok(vec![1.0]);
    }
    if m <= DIRECT_LIMIT {
        if let Some(pi) = direct(rows) {
            if residual(rows, &pi) <= DIRECT_TOL {
                return Ok(pi);
            }
            return power(rows, pi);
        }
    }
    power(rows, vec![1.0 / m as f64; m])
}

pub fn ergodic_decomposition(p: &TransferMatrix) -> Result<ErgodicDecomposition> {
    let n = p.n();
    if p.max_row_error() > 1e-12 {
        return Err(invalid("transfer matrix is not row-stochastic"));
    }
    let mut g = DiGraph::<(), ()>::with_capacity(n, p.nnz());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for (i, row) in p.rows().iter().enumerate() {
        for &(j, v) in row {
            if v >= EDGE_THRESHOLD {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let sccs = tarjan_scc(&g);
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            comp[v.index()] = c;
        }
    }
    let terminal = |c: usize| {
        sccs[c].iter().all(|v| {
            p.row(v.index())
                .iter()
                .all(|&(j, w)| w < EDGE_THRESHOLD || comp[j] == c)
        })
    };
    let mut classes: Vec<Vec<usize>> = (0..sccs.len())
        .filter(|&c| terminal(c))
        .map(|c| {
            let mut cells: Vec<usize> = sccs[c].iter().map(|v| v.index()).collect();
            cells.sort_unstable();
            cells
        })
        .collect();
    classes.sort_by_key(|c| c[0]);

    let grid = p.grid();
    let mut in_class = vec![false; n];
    let mut local = vec![usize::MAX; n];
    let mut weights = Vec::with_capacity(classes.len());
    let mut stationaries = Vec::with_capacity(classes.len());
    for class in &classes {
        for (k, &i) in class.iter().enumerate() {
            local[i] = k;
            in_class[i] = true;
        }
        let rows = local_rows(p, class, &local);
        let pi = stationary(&rows)?;
        for &i in class {
            local[i] = usize::MAX;
        }
        let centres = class.iter().map(|&i| grid.center(i)).collect();
        stationaries.push(DiscreteMeasure::new(grid.space(), centres, pi.clone())?);
        weights.push(pi);
    }
    let transient_cells = (0..n).filter(|&i| !in_class[i]).collect();
    Ok(ErgodicDecomposition {
        grid,
        classes,
        weights,
        stationaries,
        transient_cells,
    })
}

/// `3, 5-9, 12` style listing of sorted indices.
fn ranges(cells: &[usize]) -> String {
    let mut parts = Vec::new();
    let mut k = 0;
    while k < cells.len() {
        let start = cells[k];
        while k + 1 < cells.len() && cells[k + 1] == cells[k] + 1 {
            k += 1;
        }
        parts.push(if cells[k] == start {
            start.to_string()
        } else {
            format!("{start}-{}", cells[k])
        });
        k += 1;
    }
    parts.join(", ")
}

impl ErgodicDecomposition {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Stationary of class `k` as a full-length vector over all cells.
    pub fn full_vector(&self, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.grid.n()];
        for (&i, &w) in self.classes[k].iter().zip(&self.weights[k]) {
            v[i] = w;
        }
        v
    }

    /// Plain text listing of class sizes and supports.
    pub fn report(&self) -> String {
        let mut s = format!(
            "cells = {}\nspace = {}\nclasses = {}\ntransient = {}\n",
            self.grid.n(),
            self.grid.space().name(),
            self.classes.len(),
            self.transient_cells.len()
        );
        if !self.transient_cells.is_empty() {
            s.push_str(&format!("transient_cells = {}\n", ranges(&self.transient_cells)));
        }
        for (k, (class, w)) in self.classes.iter().zip(&self.weights).enumerate() {
            let (lo, hi) = w.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
            s.push_str(&format!(
                "\n[class {k}]\nsize = {}\ncells = {}\nmin_weight = {lo:e}\nmax_weight = {hi:e}\n",
                class.len(),
                ranges(class)
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{MapSpec, PhaseSpace};
    use crate::ulam::{build_transfer_matrix, Method};
    use proptest::prelude::*;

    fn stationarity(p: &TransferMatrix, d: &ErgodicDecomposition) -> f64 {
        (0..d.len())
            .map(|k| {
                let v = d.full_vector(k);
                p.left_mul(&v).iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn identity_classes() {
        let g = Grid::new(PhaseSpace::Circle, 4).unwrap();
        let p = build_transfer_matrix(&MapSpec::identity(PhaseSpace::Circle), g, Method::ExactPwl).unwrap();
        let d = ergodic_decomposition(&p).unwrap();
        assert_eq!(d.classes, vec![vec![0], vec![1], vec![2], vec![3]]);
        for (i, m) in d.stationaries.iter().enumerate() {
            assert_eq!(m.support(), &[g.center(i)]);
        }
        assert!(d.transient_cells.is_empty());
    }

    #[test]
    fn doubling_single_uniform_class() {
        let g = Grid::new(PhaseSpace::Circle, 4).unwrap();
        let p = build_transfer_matrix(&MapSpec::doubling(), g, Method::ExactPwl).unwrap();
        let d = ergodic_decomposition(&p).unwrap();
        assert_eq!(d.classes, vec![vec![0, 1, 2, 3]]);
        for w in &d.weights[0] {
            assert!((w - 0.25).abs() <= 1e-15);
        }
    }

    #[test]
    fn two_cyclic_blocks() {
        let g = Grid::new(PhaseSpace::Interval, 5).unwrap();
        let rows = vec![vec![(1, 1.0)], vec![(0, 1.0)], vec![(3, 1.0)], vec![(4, 1.0)], vec![(2, 1.0)]];
        let p = TransferMatrix::from_rows(g, rows).unwrap();
        let d = ergodic_decomposition(&p).unwrap();
        assert_eq!(d.classes, vec![vec![0, 1], vec![2, 3, 4]]);
        assert_eq!(d.weights[0], vec![0.5; 2]);
        for w in &d.weights[1] {
            assert!((w - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn transient_cells_are_reported() {
        let g = Grid::new(PhaseSpace::Interval, 4).unwrap();
        let rows = vec![vec![(1, 0.5), (0, 0.5)], vec![(2, 1.0)], vec![(3, 1.0)], vec![(2, 1.0)]];
        let p = TransferMatrix::from_rows(g, rows).unwrap();
        let d = ergodic_decomposition(&p).unwrap();
        assert_eq!(d.classes, vec![vec![2, 3]]);
        assert_eq!(d.transient_cells, vec![0, 1]);
        assert!(d.report().contains("transient_cells = 0-1"));
    }

    #[test]
    fn tiny_transitions_do_not_join_classes() {
        let g = Grid::new(PhaseSpace::Interval, 2).unwrap();
        let rows = vec![vec![(0, 1.0 - 1e-15), (1, 1e-15)], vec![(1, 1.0)]];
        let p = TransferMatrix::from_rows(g, rows).unwrap();
        let d = ergodic_decomposition(&p).unwrap();
        assert_eq!(d.classes, vec![vec![0], vec![1]]);
    }

    #[test]
    fn large_class_uses_power_iteration() {
        let g = Grid::new(PhaseSpace::Circle, 4096).unwrap();
        let p = build_transfer_matrix(&MapSpec::doubling(), g, Method::ExactPwl).unwrap();
        let d = ergodic_decomposition(&p).unwrap();
        assert_eq!(d.len(), 1);
        let dev = d.weights[0].iter().map(|w| (w - 1.0 / 4096.0).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-12);
    }

    #[test]
    fn ranges_format() {
        assert_eq!(ranges(&[0, 1, 2, 5, 7, 8]), "0-2, 5, 7-8");
    }

    proptest! {
        #[test]
        fn random_chains_decompose(
            n in 2usize..24,
            raw in prop::collection::vec((0usize..24, 0usize..24, 0.01..1.0f64), 1..60),
        ) {
            let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
            for (i, j, v) in raw {
                rows[i % n].push((j % n, v));
            }
            for (i, r) in rows.iter_mut().enumerate() {
                if r.is_empty() {
                    r.push((i, 1.0));
                }
            }
            let g = Grid::new(PhaseSpace::Interval, n).unwrap();
            let p = TransferMatrix::from_rows(g, rows).unwrap();
            let d = ergodic_decomposition(&p).unwrap();
            prop_assert!(!d.is_empty());
            let mut seen = vec![0usize; n];
            for c in &d.classes {
                for &i in c {
                    seen[i] += 1;
                }
            }
            for &i in &d.transient_cells {
                seen[i] += 1;
            }
            prop_assert!(seen.iter().all(|&s| s == 1));
            prop_assert!(stationarity(&p, &d) <= 1e-10);
            for (c, m) in d.classes.iter().zip(&d.stationaries) {
                prop_assert_eq!(m.len(), c.len());
            }
        }
    }
}
