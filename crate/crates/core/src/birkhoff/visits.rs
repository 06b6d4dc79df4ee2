use super::bump::{eta, eta_deficit};
use super::{running_averages, tail_extremes, OrbitSegment};
use crate::error::{invalid, Result};
use crate::systems::PhaseSpace;

/// A finite union of open intervals `(a, b)`.
///
/// On the interval `0 <= a < b <= 1`, and an interval starting at 0 or ending
/// at 1 contains that endpoint (`V` is open relative to `[0, 1]`). On the
/// circle `0 <= a < 1` and `a < b <= a + 1`; `b > 1` wraps across 0.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    space: PhaseSpace,
    intervals: Vec<(f64, f64)>,
    boundary: Vec<f64>,
}

impl IntervalUnion {
    pub fn new(space: PhaseSpace, intervals: &[(f64, f64)]) -> Result<Self> {
        for &(a, b) in intervals {
            let ok = match space {
                PhaseSpace::Interval => 0.0 <= a && a < b && b <= 1.0,
                PhaseSpace::Circle => 0.0 <= a && a < 1.0 && a < b && b <= a + 1.0,
            };
            if !ok {
                return Err(invalid(format!("({a}, {b}) is not a valid open arc of the {}", space.name())));
            }
        }
        if intervals.is_empty() {
            return Err(invalid("the visited set V is empty"));
        }
        let mut set = Self {
            space,
            intervals: intervals.to_vec(),
            boundary: Vec::new(),
        };
        let mut boundary: Vec<f64> = intervals
            .iter()
            .flat_map(|&(a, b)| [a, space.reduce(b)])
            .filter(|&e| !set.contains(e))
            .collect();
        boundary.sort_by(|x, y| x.partial_cmp(y).unwrap());
        boundary.dedup();
        if boundary.is_empty() {
            return Err(invalid("the visited set V is the whole space"));
        }
        set.boundary = boundary;
        Ok(set)
    }

    pub fn space(&self) -> PhaseSpace {
        self.space
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn contains(&self, x: f64) -> bool {
        let x = self.space.reduce(x);
        self.intervals.iter().any(|&(a, b)| match self.space {
            PhaseSpace::Interval => (a < x && x < b) || (x == 0.0 && a == 0.0) || (x == 1.0 && b == 1.0),
            PhaseSpace::Circle => (a < x && x < b) || (a < x + 1.0 && x + 1.0 < b),
        })
    }

    /// `rho(x, boundary of V)`.
    pub fn boundary_distance(&self, x: f64) -> f64 {
        self.boundary
            .iter()
            .map(|&b| self.space.dist(x, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Total length of the union.
    pub fn measure(&self) -> f64 {
        let mut pieces: Vec<(f64, f64)> = Vec::new();
        for &(a, b) in &self.intervals {
            if b > 1.0 {
                pieces.push((a, 1.0));
                pieces.push((0.0, b - 1.0));
            } else {
                pieces.push((a, b));
            }
        }
        pieces.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        let mut total = 0.0;
        let mut reach = f64::NEG_INFINITY;
        for (a, b) in pieces {
            let lo = a.max(reach);
            if b > lo {
                total += b - lo;
            }
            reach = reach.max(b);
        }
        total
    }
}

/// Lipschitz functions `chi_plus >= chi >= chi_minus` around the indicator
/// `chi` of `V`: `chi_plus` is 1 on `V` and vanishes beyond distance `beta`
/// from it; `chi_minus` is 1 at depth at least `beta` inside `V` and vanishes
/// off `V`. Both have Lipschitz constant at most `2 / (alpha beta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiFunctions {
    set: IntervalUnion,
    beta: f64,
    alpha: f64,
}

impl ChiFunctions {
    pub fn set(&self) -> &IntervalUnion {
        &self.set
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn lipschitz(&self) -> f64 {
        2.0 / (self.alpha * self.beta)
    }

    pub fn chi(&self, x: f64) -> f64 {
        if self.set.contains(x) {
            1.0
        } else {
            0.0
        }
    }

    pub fn plus(&self, x: f64) -> f64 {
        if self.set.contains(x) {
            1.0
        } else {
            eta(self.set.boundary_distance(x) / self.beta, self.alpha)
        }
    }

    pub fn minus(&self, x: f64) -> f64 {
        if self.set.contains(x) {
            eta_deficit(self.set.boundary_distance(x) / self.beta, self.alpha)
        } else {
            0.0
        }
    }

    /// `(chi_plus, chi, chi_minus)` at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        (self.plus(x), self.chi(x), self.minus(x))
    }
}

pub fn chi_functions(set: IntervalUnion, beta: f64, alpha: f64) -> Result<ChiFunctions> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(invalid(format!("beta must be positive, got {beta}")));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(invalid(format!("bump shape alpha must lie in (0, 1/2), got {alpha}")));
    }
    Ok(ChiFunctions { set, beta, alpha })
}

/// How often an orbit segment lies in a set.
#[derive(Debug, Clone, PartialEq)]
pub struct VisitStats {
    pub inside_count: usize,
    pub total_count: usize,
    pub frequency: f64,
    /// Smallest running frequency over the tail window.
    pub tail_lower_proxy: f64,
    /// Largest running frequency over the tail window.
    pub tail_upper_proxy: f64,
}

impl VisitStats {
    pub fn row(&self, horizon: usize) -> super::StatsRow {
        super::StatsRow {
            horizon,
            lower: self.tail_lower_proxy,
            upper: self.tail_upper_proxy,
            frequency: Some(self.frequency),
        }
    }
}

/// Visit counts of `inside` along the orbit, with running frequencies taken
/// the same way as Cesàro averages (symmetric for two-sided segments).
pub fn visit_frequency(orbit: &OrbitSegment, inside: impl Fn(f64) -> bool, window: f64) -> Result<VisitStats> {
    if orbit.is_empty() {
        return Err(invalid("empty orbit segment"));
    }
    if !(window > 0.0 && window <= 0.5) {
        return Err(invalid(format!("window fraction must lie in (0, 1/2], got {window}")));
    }
    let hits: Vec<f64> = orbit.points.iter().map(|&x| if inside(x) { 1.0 } else { 0.0 }).collect();
    let inside_count = hits.iter().filter(|&&h| h > 0.0).count();
    let running = running_averages(&hits, orbit.direction, orbit.base_index);
    let (tail_lower_proxy, tail_upper_proxy) = tail_extremes(&running, window);
    Ok(VisitStats {
        inside_count,
        total_count: orbit.len(),
        frequency: inside_count as f64 / orbit.len() as f64,
        tail_lower_proxy,
        tail_upper_proxy,
    })
}
