//! Balanced transportation problem solved by the transportation simplex
//! (stepping-stone / MODI) on a spanning-tree basis.

use crate::error::{invalid, Error, Result};

/// Reduced costs above `-PRICE_TOL` count as optimal.
const PRICE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub cost: f64,
    /// Basic cells `(source, sink, flow)`; zero flows are degenerate basics.
    pub flows: Vec<(usize, usize, f64)>,
    pub iterations: usize,
}

/// Minimises `sum c(i, j) x_ij` over couplings of `supply` and `demand`.
/// Both vectors must be nonnegative with equal totals (within `1e-10`).
pub fn solve(supply: &[f64], demand: &[f64], cost: impl Fn(usize, usize) -> f64) -> Result<TransportPlan> {
    let (m, n) = (supply.len(), demand.len());
    if m == 0 || n == 0 {
        return Err(invalid("transportation problem with an empty side"));
    }
    if supply.iter().chain(demand).any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(invalid("transportation marginals must be finite and nonnegative"));
    }
    let (ts, td): (f64, f64) = (supply.iter().sum(), demand.iter().sum());
    if (ts - td).abs() > 1e-10 {
        return Err(invalid(format!("unbalanced transportation problem ({ts} vs {td})")));
    }

    let c: Vec<f64> = (0..m * n).map(|k| cost(k / n, k % n)).collect();
    let mut flow = vec![0.0; m * n];
    let mut basic = vec![false; m * n];
    let mut arcs: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);

    // north-west corner: a staircase tree with exactly m + n - 1 cells
    {
        let (mut s, mut d) = (supply.to_vec(), demand.to_vec());
        let (mut i, mut j) = (0, 0);
        loop {
            let q = s[i].min(d[j]);
            flow[i * n + j] = q;
            basic[i * n + j] = true;
            arcs.push((i, j));
            s[i] -= q;
            d[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let nodes = m + n;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nodes];
    let mut parent_arc = vec![usize::MAX; nodes];
    let mut seen = vec![false; nodes];
    let mut stack = Vec::with_capacity(nodes);
    let max_iter = 100 * m * n + 1000;

    for iteration in 0..max_iter {
        for a in adj.iter_mut() {
            a.clear();
        }
        for (k, &(i, j)) in arcs.iter().enumerate() {
            adj[i].push(k);
            adj[m + j].push(k);
        }

        // potentials with u[0] = 0, and a traversal that records tree parents rooted at source 0
        seen.iter_mut().for_each(|s| *s = false);
        parent_arc.iter_mut().for_each(|p| *p = usize::MAX);
        seen[0] = true;
        u[0] = 0.0;
        stack.clear();
        stack.push(0);
        while let Some(node) = stack.pop() {
            for &k in &adj[node] {
                let (i, j) = arcs[k];
                let other = if node < m { m + j } else { i };
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                parent_arc[other] = k;
                if other >= m {
                    v[j] = c[i * n + j] - u[i];
                } else {
                    u[i] = c[i * n + j] - v[j];
                }
                stack.push(other);
            }
        }

        // Dantzig pricing
        let mut best = -PRICE_TOL;
        let mut entering = None;
        for i in 0..m {
            let row = &c[i * n..(i + 1) * n];
            for j in 0..n {
                if basic[i * n + j] {
                    continue;
                }
                let r = row[j] - u[i] - v[j];
                if r < best {
                    best = r;
                    entering = Some((i, j));
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let total = arcs.iter().map(|&(i, j)| flow[i * n + j] * c[i * n + j]).sum();
            return Ok(TransportPlan {
                cost: total,
                flows: arcs.iter().map(|&(i, j)| (i, j, flow[i * n + j])).collect(),
                iterations: iteration,
            });
        };

        // tree paths from both endpoints up to the root; the cycle is their symmetric part
        let path_to_root = |mut node: usize| {
            let mut p = Vec::new();
            while parent_arc[node] != usize::MAX {
                let k = parent_arc[node];
                p.push(k);
                let (i, j) = arcs[k];
                node = if node < m { m + j } else { i };
            }
            p
        };
        let mut from_sink = path_to_root(m + ej);
        let mut from_source = path_to_root(ei);
        while let (Some(a), Some(b)) = (from_sink.last(), from_source.last()) {
            if a != b {
                break;
            }
            from_sink.pop();
            from_source.pop();
        }
        // sink side first (arcs adjacent to the entering sink lose flow), then the source side reversed
        let cycle: Vec<usize> = from_sink.into_iter().chain(from_source.into_iter().rev()).collect();

        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (pos, &k) in cycle.iter().enumerate() {
            if pos % 2 == 0 {
                let (i, j) = arcs[k];
                let f = flow[i * n + j];
                if f < theta {
                    theta = f;
                    leaving = k;
                }
            }
        }
        debug_assert!(leaving != usize::MAX);
        for (pos, &k) in cycle.iter().enumerate() {
            let (i, j) = arcs[k];
            let cell = &mut flow[i * n + j];
            if pos % 2 == 0 {
                *cell = (*cell - theta).max(0.0);
            } else {
                *cell += theta;
            }
        }
        let (li, lj) = arcs[leaving];
        flow[li * n + lj] = 0.0;
        basic[li * n + lj] = false;
        flow[ei * n + ej] = theta;
        basic[ei * n + ej] = true;
        arcs[leaving] = (ei, ej);
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}
