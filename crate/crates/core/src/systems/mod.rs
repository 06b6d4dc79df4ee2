//! Phase spaces, concrete one-dimensional map families, perturbations,
//! orbits and sup-distances between maps.
//!
//! Both phase spaces live on the unit interval. The interval is the closed
//! set `[0, 1]` with `|x - y|`; the circle is `[0, 1)` with the wrap-around
//! metric `min(|x - y|, 1 - |x - y|)`.

mod config;
mod map;
mod orbit;

pub use config::{MapConfig, PerturbationConfig};
pub use map::{
    c0_distance_estimate, c0_distance_pair, perturb, Family, LinearPiece, MapSpec,
    PerturbationKind, PerturbationSpec,
};
pub use orbit::{orbit, Direction, OrbitSegment, CLOSING_TOL};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSpace {
    Interval,
    Circle,
}

impl PhaseSpace {
    /// The metric `rho`.
    pub fn dist(self, x: f64, y: f64) -> f64 {
        match self {
            PhaseSpace::Interval => (x - y).abs(),
            PhaseSpace::Circle => {
                let d = (x - y).abs().rem_euclid(1.0);
                d.min(1.0 - d)
            }
        }
    }

    /// Brings a real number back into the space: wrap mod 1 on the circle,
    /// clamp on the interval.
    pub fn reduce(self, y: f64) -> f64 {
        match self {
            PhaseSpace::Interval => y.clamp(0.0, 1.0),
            PhaseSpace::Circle => {
                let r = y.rem_euclid(1.0);
                // rem_euclid of a tiny negative number rounds up to 1.0
                if r >= 1.0 {
                    0.0
                } else {
                    r
                }
            }
        }
    }

    pub fn contains(self, x: f64) -> bool {
        match self {
            PhaseSpace::Interval => (0.0..=1.0).contains(&x),
            PhaseSpace::Circle => (0.0..1.0).contains(&x),
        }
    }

    /// Diameter of the space.
    pub fn diameter(self) -> f64 {
        match self {
            PhaseSpace::Interval => 1.0,
            PhaseSpace::Circle => 0.5,
        }
    }

    /// Displacement `to - from`, taken in `(-1/2, 1/2]` on the circle.
    pub fn offset(self, from: f64, to: f64) -> f64 {
        let d = to - from;
        match self {
            PhaseSpace::Interval => d,
            PhaseSpace::Circle => {
                let r = d.rem_euclid(1.0);
                if r > 0.5 {
                    r - 1.0
                } else {
                    r
                }
            }
        }
    }

    /// Uniform sample grid used for sup-norm estimates: `i / n`, plus the
    /// right endpoint on the interval.
    pub fn sample_grid(self, n: usize) -> Vec<f64> {
        let last = match self {
            PhaseSpace::Interval => n,
            PhaseSpace::Circle => n - 1,
        };
        (0..=last).map(|i| i as f64 / n as f64).collect()
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseSpace::Interval => "interval",
            PhaseSpace::Circle => "circle",
        }
    }
}
