//! Statistics along orbits: running Birkhoff averages and their tail bounds,
//! empirical measures, visit frequencies, and the Lipschitz cut-off functions
//! used to localize them.

mod bump;
mod visits;

pub use bump::{bump_eta, eta, eta_deficit, psi, BumpSpec, OrbitCloud};
pub use visits::{chi_functions, visit_frequency, ChiFunctions, IntervalUnion, VisitStats};

pub use crate::systems::{orbit, Direction, OrbitSegment};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::measures::DiscreteMeasure;
use crate::systems::MapSpec;

/// Default fraction of the running averages used for the tail proxies.
pub const DEFAULT_WINDOW: f64 = 0.25;
/// Smallest horizon accepted by [`cesaro_bounds`].
pub const MIN_HORIZON: usize = 100;

/// Running averages of an observable along an orbit and their tail extremes,
/// which stand in for the lower and upper limits.
#[derive(Debug, Clone, PartialEq)]
pub struct CesaroStats {
    pub running_averages: Vec<f64>,
    pub lower_proxy: f64,
    pub upper_proxy: f64,
    pub horizon: usize,
    pub window: f64,
}

impl CesaroStats {
    /// The average over the whole segment.
    pub fn final_average(&self) -> f64 {
        *self.running_averages.last().expect("running averages are never empty")
    }

    pub fn row(&self) -> StatsRow {
        StatsRow {
            horizon: self.horizon,
            lower: self.lower_proxy,
            upper: self.upper_proxy,
            frequency: None,
        }
    }
}

/// One line of a statistics table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsRow {
    pub horizon: usize,
    pub lower: f64,
    pub upper: f64,
    pub frequency: Option<f64>,
}

/// Statistics rows as CSV with header `horizon,lower,upper,frequency`.
pub fn stats_csv(rows: &[StatsRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

/// Compensated running sum.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Running averages of `values` read as an orbit segment: prefix means for a
/// forward segment, symmetric means around `base_index` for a two-sided one.
pub(crate) fn running_averages(values: &[f64], direction: Direction, base_index: usize) -> Vec<f64> {
    let mut acc = Neumaier::default();
    match direction {
        Direction::Forward => values
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                acc.add(v);
                acc.value() / (k + 1) as f64
            })
            .collect(),
        Direction::TwoSided => {
            let c = base_index;
            acc.add(values[c]);
            let mut out = vec![acc.value()];
            for m in 1..=c.min(values.len() - 1 - c) {
                acc.add(values[c - m]);
                acc.add(values[c + m]);
                out.push(acc.value() / (2 * m + 1) as f64);
            }
            out
        }
    }
}

/// `(min, max)` over the last `ceil(w * len)` entries.
pub(crate) fn tail_extremes(averages: &[f64], window: f64) -> (f64, f64) {
    let len = averages.len();
    let tail = ((window * len as f64).ceil() as usize).clamp(1, len);
    averages[len - tail..]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| (lo.min(a), hi.max(a)))
}

fn check_window(window: f64) -> Result<()> {
    if !(window > 0.0 && window <= 0.5) {
        return Err(invalid(format!("window fraction must lie in (0, 1/2], got {window}")));
    }
    Ok(())
}

/// Cesàro statistics of `phi` along an existing orbit segment.
pub fn cesaro_from_orbit(orbit: &OrbitSegment, phi: impl Fn(f64) -> f64, window: f64) -> Result<CesaroStats> {
    check_window(window)?;
    if orbit.is_empty() {
        return Err(invalid("empty orbit segment"));
    }
    let values: Vec<f64> = orbit.points.iter().map(|&x| phi(x)).collect();
    let running_averages = running_averages(&values, orbit.direction, orbit.base_index);
    let (lower_proxy, upper_proxy) = tail_extremes(&running_averages, window);
    Ok(CesaroStats {
        running_averages,
        lower_proxy,
        upper_proxy,
        horizon: orbit.horizon(),
        window,
    })
}

/// Orbit of `p` under `spec` over horizon `n` (half-width when two-sided) and
/// the Cesàro statistics of `phi` along it.
pub fn cesaro_bounds(
    spec: &MapSpec,
    p: f64,
    phi: impl Fn(f64) -> f64,
    n: usize,
    window: f64,
    direction: Direction,
) -> Result<CesaroStats> {
    if n < MIN_HORIZON {
        return Err(invalid(format!("horizon must be at least {MIN_HORIZON}, got {n}")));
    }
    check_window(window)?;
    let o = orbit(spec, p, n, direction)?;
    cesaro_from_orbit(&o, phi, window)
}

/// Equal-weight atoms at the orbit points after the first `burn_in`.
pub fn empirical_measure(orbit: &OrbitSegment, burn_in: usize) -> Result<DiscreteMeasure> {
    if burn_in >= orbit.len() {
        return Err(invalid(format!(
            "burn-in {burn_in} leaves nothing of an orbit of length {}",
            orbit.len()
        )));
    }
    DiscreteMeasure::uniform(orbit.space, &orbit.points[burn_in..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::w1_distance;
    use crate::systems::PhaseSpace;
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn golden() -> f64 {
        (5f64.sqrt() - 1.0) / 2.0
    }

    #[test]
    fn fixed_point_averages() {
        let phi = |x: f64| (TAU * x).sin() + 3.0;
        let s = cesaro_bounds(&MapSpec::doubling(), 0.0, phi, 10_000, DEFAULT_WINDOW, Direction::Forward).unwrap();
        assert_eq!((s.lower_proxy, s.upper_proxy), (phi(0.0), phi(0.0)));
    }

    #[test]
    fn period_two_averages() {
        let phi = |x: f64| PhaseSpace::Circle.dist(x, 0.0);
        let n = 10_000;
        let target = (phi(0.1) + phi(0.6)) / 2.0;
        for dir in [Direction::Forward, Direction::TwoSided] {
            let s = cesaro_bounds(&MapSpec::rotation(0.5), 0.1, phi, n, DEFAULT_WINDOW, dir).unwrap();
            assert!((s.lower_proxy - target).abs() <= 1.0 / n as f64, "{dir:?}");
            assert!((s.upper_proxy - target).abs() <= 1.0 / n as f64, "{dir:?}");
        }
    }

    #[test]
    fn golden_rotation_equidistributes() {
        let phi = |x: f64| (TAU * x).cos();
        let s = cesaro_bounds(&MapSpec::rotation(golden()), 0.0, phi, 100_000, DEFAULT_WINDOW, Direction::Forward).unwrap();
        assert!(s.lower_proxy.abs() <= 0.01 && s.upper_proxy.abs() <= 0.01, "{s:?}");
        // independent long-run simulation
        let mut x = 0.0f64;
        let mut sum = 0.0;
        for _ in 0..100_000 {
            sum += phi(x);
            x = (x + golden()).fract();
        }
        assert!((sum / 100_000.0 - s.final_average()).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        let phi = |x: f64| x;
        assert!(cesaro_bounds(&MapSpec::doubling(), 0.1, phi, 50, 0.25, Direction::Forward).is_err());
        assert!(cesaro_bounds(&MapSpec::doubling(), 0.1, phi, 500, 0.75, Direction::Forward).is_err());
        assert!(matches!(
            cesaro_bounds(&MapSpec::doubling(), 0.1, phi, 500, 0.25, Direction::TwoSided),
            Err(crate::Error::Unsupported(_))
        ));
    }

    #[test]
    fn empirical_measure_examples() {
        let o = orbit(&MapSpec::doubling(), 0.0, 10, Direction::Forward).unwrap();
        let m = empirical_measure(&o, 0).unwrap();
        assert_eq!((m.support(), m.weights()), (&[0.0][..], &[1.0][..]));

        let o = orbit(&MapSpec::rotation(0.5), 0.1, 10, Direction::Forward).unwrap();
        let m = empirical_measure(&o, 0).unwrap();
        assert_eq!(m.support(), &[0.1, 0.6]);
        assert!(m.weights().iter().all(|w| (w - 0.5).abs() < 1e-15));

        let o = orbit(&MapSpec::rotation(golden()), 0.0, 10_000, Direction::Forward).unwrap();
        let m = empirical_measure(&o, 0).unwrap();
        let uni = DiscreteMeasure::uniform_grid(PhaseSpace::Circle, 1000).unwrap();
        assert!(w1_distance(&m, &uni).unwrap() <= 0.01);
        assert!(empirical_measure(&o, 10_000).is_err());
    }

    #[test]
    fn stats_rows_as_csv() {
        let rows = [
            StatsRow { horizon: 100, lower: 0.25, upper: 0.5, frequency: None },
            StatsRow { horizon: 200, lower: 0.0, upper: 1.0, frequency: Some(0.75) },
        ];
        assert_eq!(stats_csv(&rows).unwrap(), "horizon,lower,upper,frequency\n100,0.25,0.5,\n200,0.0,1.0,0.75\n");
    }

    proptest! {
        #[test]
        fn proxies_within_orbit_range(p in 0.0..1.0f64, slope in 0.5..2.0f64, k in 1u32..5) {
            let t = MapSpec::tent(slope).unwrap();
            let phi = |x: f64| (TAU * k as f64 * x).sin();
            let o = orbit(&t, p, 500, Direction::Forward).unwrap();
            let s = cesaro_from_orbit(&o, phi, DEFAULT_WINDOW).unwrap();
            let vals: Vec<f64> = o.points.iter().map(|&x| phi(x)).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo - 1e-12 <= s.lower_proxy && s.lower_proxy <= s.upper_proxy && s.upper_proxy <= hi + 1e-12);
        }

        #[test]
        fn empirical_integral_matches_final_average(p in 0.0..1.0f64, alpha in 0.0..1.0f64, two_sided in any::<bool>()) {
            let t = MapSpec::rotation(alpha);
            let dir = if two_sided { Direction::TwoSided } else { Direction::Forward };
            let o = orbit(&t, p, 2000, dir).unwrap();
            let phi = |x: f64| (TAU * x).cos() + x;
            let s = cesaro_from_orbit(&o, phi, DEFAULT_WINDOW).unwrap();
            let m = empirical_measure(&o, 0).unwrap();
            prop_assert!((m.integrate(phi) - s.final_average()).abs() <= 1e-12);
        }
    }
}
