//! Small dense linear programs in equality form,
//! `min c.x` subject to `A x = b`, `x >= 0`, by the two-phase tableau simplex.
//!
//! Pivoting uses Dantzig's rule and switches to Bland's rule after a run of
//! degenerate pivots, which rules out cycling.

use crate::error::{invalid, Error, Result};

const PIVOT_TOL: f64 = 1e-11;
/// Phase-one objective above this means the constraints cannot be met.
pub const FEASIBILITY_TOL: f64 = 1e-10;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Adds `sum coef_k x_{var_k} = rhs`.
    pub fn add_row(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let mut row = vec![0.0; self.num_vars()];
        for &(k, a) in terms {
            row[k] += a;
        }
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn solve(&self) -> Result<LpSolution> {
        let nv = self.num_vars();
        if self.rows.iter().any(|r| r.len() != nv) || self.rows.len() != self.rhs.len() {
            return Err(invalid("malformed linear program"));
        }
        let m = self.rows.len();
        if m == 0 {
            if self.objective.iter().any(|&c| c < 0.0) {
                return Err(invalid("unbounded linear program"));
            }
            return Ok(LpSolution { x: vec![0.0; nv], value: 0.0 });
        }
        // columns: original vars, then one artificial per row, then rhs
        let width = nv + m + 1;
        let mut t = Tableau {
            data: vec![0.0; (m + 1) * width],
            width,
            m,
            basis: (nv..nv + m).collect(),
        };
        for (r, (row, &b)) in self.rows.iter().zip(&self.rhs).enumerate() {
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for k in 0..nv {
                t.data[r * width + k] = sign * row[k];
            }
            t.data[r * width + nv + r] = 1.0;
            t.data[r * width + width - 1] = sign * b;
        }

        // phase one: minimise the artificial sum
        let mut phase1 = vec![0.0; nv + m];
        phase1[nv..].iter_mut().for_each(|c| *c = 1.0);
        t.set_objective(&phase1);
        t.run(nv + m)?;
        if -t.data[m * width + width - 1] > FEASIBILITY_TOL {
            return Err(Error::Infeasible);
        }
        // drive remaining artificials out of the basis; rows with no pivot are redundant
        let mut redundant = Vec::new();
        for r in 0..m {
            if t.basis[r] < nv {
                continue;
            }
            match (0..nv).find(|&k| t.at(r, k).abs() > PIVOT_TOL) {
                Some(k) => t.pivot(r, k),
                None => redundant.push(r),
            }
        }

        // phase two over the original columns only
        let mut phase2 = self.objective.clone();
        phase2.extend(std::iter::repeat(0.0).take(m));
        t.set_objective(&phase2);
        for &r in &redundant {
            for k in 0..width {
                t.data[r * width + k] = 0.0;
            }
        }
        t.run(nv)?;

        let mut x = vec![0.0; nv];
        for r in 0..m {
            if t.basis[r] < nv && !redundant.contains(&r) {
                x[t.basis[r]] = t.at(r, width - 1).max(0.0);
            }
        }
        let value = x.iter().zip(&self.objective).map(|(a, c)| a * c).sum();
        Ok(LpSolution { x, value })
    }
}

struct Tableau {
    data: Vec<f64>,
    width: usize,
    m: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, k: usize) -> f64 {
        self.data[r * self.width + k]
    }

    /// Writes reduced costs for `cost` into the objective row.
    fn set_objective(&mut self, cost: &[f64]) {
        let (w, m) = (self.width, self.m);
        for k in 0..w {
            self.data[m * w + k] = if k < cost.len() { cost[k] } else { 0.0 };
        }
        for r in 0..m {
            let cb = cost.get(self.basis[r]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for k in 0..w {
                    self.data[m * w + k] -= cb * self.data[r * w + k];
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let w = self.width;
        let p = self.data[r * w + k];
        for c in 0..w {
            self.data[r * w + c] /= p;
        }
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[k];
            if f != 0.0 {
                for c in 0..w {
                    row[c] -= f * prow[c];
                }
                row[k] = 0.0;
            }
        }
        self.basis[r] = k;
    }

    /// Simplex iterations using columns `0..cols` as entering candidates.
    fn run(&mut self, cols: usize) -> Result<()> {
        let (w, m) = (self.width, self.m);
        let budget = 200 * (m + cols) + 10_000;
        let mut degenerate = 0;
        for _ in 0..budget {
            let obj = &self.data[m * w..m * w + cols];
            let entering = if degenerate < DEGENERATE_RUN {
                let (k, &rc) = obj
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap();
                (rc < -PIVOT_TOL).then_some(k)
            } else {
                obj.iter().position(|&rc| rc < -PIVOT_TOL)
            };
            let Some(k) = entering else {
                return Ok(());
            };
            // ratio test, ties broken by smallest basic index (Bland)
            let mut best: Option<(usize, f64)> = None;
            for r in 0..m {
                let a = self.at(r, k);
                if a > PIVOT_TOL {
                    let ratio = self.at(r, w - 1).max(0.0) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bv)) => {
                            if ratio < bv - 1e-15 || (ratio <= bv + 1e-15 && self.basis[r] < self.basis[br]) {
                                Some((r, ratio))
                            } else {
                                Some((br, bv))
                            }
                        }
                    }
                }
            }
            let Some((r, ratio)) = best else {
                return Err(invalid("unbounded linear program"));
            };
            degenerate = if ratio <= 1e-15 { degenerate + 1 } else { 0 };
            self.pivot(r, k);
        }
        Err(Error::Convergence {
            iterations: budget,
            residual: f64::NAN,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_standard_form() {
        // min -x - y  s.t. x + 2y + s1 = 4, 3x + y + s2 = 6  -> x = 1.6, y = 1.2
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![-1.0, -1.0, 0.0, 0.0];
        lp.add_row(&[(0, 1.0), (1, 2.0), (2, 1.0)], 4.0);
        lp.add_row(&[(0, 3.0), (1, 1.0), (3, 1.0)], 6.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value + 2.8).abs() < 1e-12);
        assert!((sol.x[0] - 1.6).abs() < 1e-12 && (sol.x[1] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn redundant_rows_and_negative_rhs() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add_row(&[(0, -1.0), (1, -1.0)], -1.0);
        lp.add_row(&[(0, 2.0), (1, 2.0)], 2.0);
        let sol = lp.solve().unwrap();
        assert!((sol.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_is_reported() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add_row(&[(0, 1.0)], -1.0);
        assert!(matches!(lp.solve(), Err(Error::Infeasible)));
    }

    #[test]
    fn transportation_as_lp() {
        let supply = [7.0, 9.0, 18.0];
        let demand = [5.0, 8.0, 7.0, 14.0];
        let cost = [[19.0, 30.0, 50.0, 10.0], [70.0, 30.0, 40.0, 60.0], [40.0, 8.0, 70.0, 20.0]];
        let mut lp = LinearProgram::new(12);
        for i in 0..3 {
            for j in 0..4 {
                lp.objective[i * 4 + j] = cost[i][j];
            }
            lp.add_row(&(0..4).map(|j| (i * 4 + j, 1.0)).collect::<Vec<_>>(), supply[i]);
        }
        for j in 0..4 {
            lp.add_row(&(0..3).map(|i| (i * 4 + j, 1.0)).collect::<Vec<_>>(), demand[j]);
        }
        let sol = lp.solve().unwrap();
        assert!((sol.value - 743.0).abs() < 1e-9);
    }
}
