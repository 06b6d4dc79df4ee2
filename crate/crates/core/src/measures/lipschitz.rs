use std::f64::consts::TAU;

use crate::error::{invalid, Result};
use crate::systems::PhaseSpace;

/// A member of the canonical 1-Lipschitz test class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// `cos(2 pi k x) / (2 pi k)`
    Cos(u32),
    /// `sin(2 pi k x) / (2 pi k)`
    Sin(u32),
    /// `rho(x, c)`
    Hinge(f64),
}

impl TestFunction {
    pub fn eval(&self, space: PhaseSpace, x: f64) -> f64 {
        match *self {
            TestFunction::Cos(k) => {
                let w = TAU * k as f64;
                (w * x).cos() / w
            }
            TestFunction::Sin(k) => {
                let w = TAU * k as f64;
                (w * x).sin() / w
            }
            TestFunction::Hinge(c) => space.dist(x, c),
        }
    }
}

/// Finite family of 1-Lipschitz functions used for invariance residuals and
/// as a lower bound on the `W1` dual.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzTestSet {
    pub space: PhaseSpace,
    pub functions: Vec<TestFunction>,
}

impl LipschitzTestSet {
    /// Fourier modes `k = 1..=k_max` plus hinges at `hinge_centres` equally spaced centres.
    pub fn canonical(space: PhaseSpace, k_max: u32, hinge_centres: usize) -> Self {
        let mut functions = Vec::new();
        for k in 1..=k_max {
            functions.push(TestFunction::Cos(k));
            functions.push(TestFunction::Sin(k));
        }
        for i in 0..hinge_centres {
            functions.push(TestFunction::Hinge(i as f64 / hinge_centres as f64));
        }
        Self { space, functions }
    }

    /// Eight Fourier modes and sixteen hinges.
    pub fn default_for(space: PhaseSpace) -> Self {
        Self::canonical(space, 8, 16)
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn eval(&self, k: usize, x: f64) -> f64 {
        self.functions[k].eval(self.space, x)
    }
}

/// Largest difference quotient over neighbouring points of an `n`-point grid
/// (including the wrap-around pair on the circle), with the pair attaining it.
pub fn empirical_lipschitz(space: PhaseSpace, n: usize, f: impl Fn(f64) -> f64) -> Result<(f64, (f64, f64))> {
    if n < 2 {
        return Err(invalid("Lipschitz check needs at least two grid points"));
    }
    let grid = space.sample_grid(n);
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let mut best = (0.0, (grid[0], grid[1]));
    let mut check = |i: usize, j: usize| {
        let d = space.dist(grid[i], grid[j]);
        if d > 0.0 {
            let q = (vals[i] - vals[j]).abs() / d;
            if q > best.0 {
                best = (q, (grid[i], grid[j]));
            }
        }
    };
    for i in 1..grid.len() {
        check(i - 1, i);
    }
    if space == PhaseSpace::Circle {
        check(grid.len() - 1, 0);
    }
    Ok(best)
}
