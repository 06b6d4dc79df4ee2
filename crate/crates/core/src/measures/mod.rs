//! Finitely supported probability measures, the Kantorovich–Rubinstein
//! distance `W1`, distances between sets of measures, and invariance
//! residuals.

mod io;
mod lipschitz;
pub mod lp;
pub mod transport;
mod wasserstein;

pub use lipschitz::{empirical_lipschitz, LipschitzTestSet, TestFunction};
pub use wasserstein::{
    hausdorff_distance, hull_distance_lp, invariance_residual, push_forward, w1_cdf, w1_circle, w1_distance,
    w1_point_to_set, w1_transport, HausdorffDistance,
};

use crate::error::{invalid, Result};
use crate::systems::PhaseSpace;

/// Atoms closer than this are merged.
pub const MERGE_TOL: f64 = 1e-14;
/// Allowed deviation of the total mass from one.
pub const MASS_TOL: f64 = 1e-12;
/// Extremes closer than this in `W1` are considered duplicates.
pub const DEDUP_TOL: f64 = 1e-10;

/// A probability measure with finitely many atoms, kept sorted by position.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    space: PhaseSpace,
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(space: PhaseSpace, support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(invalid("support and weights differ in length"));
        }
        if support.is_empty() {
            return Err(invalid("a probability measure needs at least one atom"));
        }
        if let Some(x) = support.iter().find(|x| !space.contains(**x)) {
            return Err(invalid(format!("atom {x} outside the {} phase space", space.name())));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(invalid("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid(format!("measure is not normalised (total mass {total})")));
        }
        Ok(Self::merged(space, support, weights))
    }

    /// Sorts atoms, drops zero weights and merges coincident atoms.
    fn merged(space: PhaseSpace, support: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut atoms: Vec<(f64, f64)> = support.into_iter().zip(weights).filter(|a| a.1 > 0.0).collect();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let mut out_s: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut out_w: Vec<f64> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            match out_s.last() {
                Some(&last) if x - last < MERGE_TOL => *out_w.last_mut().unwrap() += w,
                _ => {
                    out_s.push(x);
                    out_w.push(w);
                }
            }
        }
        if space == PhaseSpace::Circle && out_s.len() > 1 {
            let last = out_s.len() - 1;
            if space.dist(out_s[0], out_s[last]) < MERGE_TOL {
                out_w[0] += out_w[last];
                out_s.pop();
                out_w.pop();
            }
        }
        Self {
            space,
            support: out_s,
            weights: out_w,
        }
    }

    pub fn dirac(space: PhaseSpace, x: f64) -> Result<Self> {
        Self::new(space, vec![x], vec![1.0])
    }

    /// Equal weights on the given points (repeats accumulate).
    pub fn uniform(space: PhaseSpace, points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("uniform measure over no points"));
        }
        if let Some(x) = points.iter().find(|x| !space.contains(**x)) {
            return Err(invalid(format!("atom {x} outside the {} phase space", space.name())));
        }
        // merge unit counts, which add exactly, then scale
        let mut m = Self::merged(space, points.to_vec(), vec![1.0; points.len()]);
        let n = points.len() as f64;
        m.weights.iter_mut().for_each(|w| *w /= n);
        Ok(m)
    }

    /// Uniform measure on the `n` cell centres `(i + 1/2) / n`.
    pub fn uniform_grid(space: PhaseSpace, n: usize) -> Result<Self> {
        let pts: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        Self::uniform(space, &pts)
    }

    pub fn space(&self) -> PhaseSpace {
        self.space
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.support.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms().map(|(x, w)| w * f(x)).sum()
    }

    /// Convex combination `sum lambda_k mu_k`.
    pub fn mixture(parts: &[(f64, &DiscreteMeasure)]) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(invalid("empty mixture"));
        };
        let space = first.space;
        let mut s = Vec::new();
        let mut w = Vec::new();
        for (lambda, mu) in parts {
            if mu.space != space {
                return Err(invalid("mixture of measures on different spaces"));
            }
            for (x, m) in mu.atoms() {
                s.push(x);
                w.push(lambda * m);
            }
        }
        Self::new(space, s, w)
    }
}

/// Whether a measure set means its listed extremes or their convex hull.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetMode {
    #[default]
    Finite,
    Hull,
}

impl SetMode {
    pub fn is_hull(self) -> bool {
        self == SetMode::Hull
    }

    pub fn name(self) -> &'static str {
        match self {
            SetMode::Finite => "finite",
            SetMode::Hull => "hull",
        }
    }
}

/// A nonempty finite set of measures; with `hull` set it stands for their convex hull.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSet {
    extremes: Vec<DiscreteMeasure>,
    hull: bool,
}

impl MeasureSet {
    /// Drops near-duplicate extremes (`W1 < DEDUP_TOL`), keeping the first.
    pub fn new(extremes: Vec<DiscreteMeasure>, hull: bool) -> Result<Self> {
        let Some(first) = extremes.first() else {
            return Err(invalid("measure set is empty"));
        };
        let space = first.space();
        if extremes.iter().any(|m| m.space() != space) {
            return Err(invalid("measure set mixes phase spaces"));
        }
        let mut kept: Vec<DiscreteMeasure> = Vec::with_capacity(extremes.len());
        for m in extremes {
            let mut dup = false;
            for k in &kept {
                if w1_distance(k, &m)? < DEDUP_TOL {
                    dup = true;
                    break;
                }
            }
            if !dup {
                kept.push(m);
            }
        }
        Ok(Self { extremes: kept, hull })
    }

    pub fn singleton(mu: DiscreteMeasure) -> Self {
        Self {
            extremes: vec![mu],
            hull: false,
        }
    }

    pub fn extremes(&self) -> &[DiscreteMeasure] {
        &self.extremes
    }

    pub fn hull(&self) -> bool {
        self.hull
    }

    pub fn with_hull(mut self, hull: bool) -> Self {
        self.hull = hull;
        self
    }

    pub fn mode(&self) -> SetMode {
        if self.hull {
            SetMode::Hull
        } else {
            SetMode::Finite
        }
    }

    pub fn with_mode(self, mode: SetMode) -> Self {
        self.with_hull(mode.is_hull())
    }

    pub fn len(&self) -> usize {
        self.extremes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.extremes.is_empty()
    }

    pub fn space(&self) -> PhaseSpace {
        self.extremes[0].space()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_sorts() {
        let mu = DiscreteMeasure::new(PhaseSpace::Interval, vec![0.5, 0.1, 0.5 + 1e-16], vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(mu.support(), &[0.1, 0.5]);
        assert_eq!(mu.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn circle_merges_across_zero() {
        let mu = DiscreteMeasure::new(PhaseSpace::Circle, vec![0.0, 1.0 - 1e-16, 0.5], vec![0.25, 0.25, 0.5]).unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.support()[0], 0.0);
        assert_eq!(mu.weights()[0], 0.5);
    }

    #[test]
    fn rejects_invalid_measures() {
        let s = PhaseSpace::Interval;
        assert!(DiscreteMeasure::new(s, vec![0.1], vec![0.9]).is_err());
        assert!(DiscreteMeasure::new(s, vec![0.1, 0.2], vec![1.5, -0.5]).is_err());
        assert!(DiscreteMeasure::new(s, vec![1.5], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(PhaseSpace::Circle, vec![1.0], vec![1.0]).is_err());
        assert!(DiscreteMeasure::new(s, vec![], vec![]).is_err());
        assert!(DiscreteMeasure::new(s, vec![0.2], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn measure_set_dedups() {
        let s = PhaseSpace::Interval;
        let a = DiscreteMeasure::dirac(s, 0.2).unwrap();
        let b = DiscreteMeasure::dirac(s, 0.2 + 1e-12).unwrap();
        let c = DiscreteMeasure::dirac(s, 0.7).unwrap();
        let set = MeasureSet::new(vec![a, b, c], false).unwrap();
        assert_eq!(set.len(), 2);
        assert!(MeasureSet::new(vec![], false).is_err());
    }
}
