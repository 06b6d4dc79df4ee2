use super::MapSpec;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// An iterate that comes back within this distance of its starting point is
/// treated as closing a periodic orbit; the rest of the segment repeats the
/// cycle instead of accumulating round-off along an unstable orbit.
pub const CLOSING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    TwoSided,
}

/// A finite piece of an orbit.
///
/// Forward segments hold `[p, T p, ..., T^{n-1} p]`; two-sided segments hold
/// `[T^{-n} p, ..., p, ..., T^{n} p]` with `p` at `base_index = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSegment {
    pub points: Vec<f64>,
    pub base_point: f64,
    pub base_index: usize,
    pub direction: Direction,
    pub space: super::PhaseSpace,
    pub spec_id: String,
}

impl OrbitSegment {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Half-width `n` of a two-sided segment, or the length of a forward one.
    pub fn horizon(&self) -> usize {
        match self.direction {
            Direction::Forward => self.points.len(),
            Direction::TwoSided => self.base_index,
        }
    }

    /// Plain-text dump, one point per line.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(self.points.len() * 20);
        for x in &self.points {
            s.push_str(&format!("{x:.17}\n"));
        }
        s
    }
}

fn iterate(start: f64, len: usize, step: impl Fn(f64) -> Result<f64>, space: super::PhaseSpace) -> Result<Vec<f64>> {
    let mut pts = Vec::with_capacity(len);
    if len == 0 {
        return Ok(pts);
    }
    pts.push(start);
    let mut x = start;
    while pts.len() < len {
        x = step(x)?;
        if space.dist(x, start) <= CLOSING_TOL {
            let cycle = pts.len();
            while pts.len() < len {
                pts.push(pts[pts.len() - cycle]);
            }
            break;
        }
        pts.push(x);
    }
    Ok(pts)
}

pub fn orbit(spec: &MapSpec, p: f64, n: usize, direction: Direction) -> Result<OrbitSegment> {
    let space = spec.space();
    if !space.contains(p) {
        return Err(invalid(format!("start point {p} outside the {} phase space", space.name())));
    }
    if n == 0 && direction == Direction::Forward {
        return Err(invalid("forward orbit needs at least one point"));
    }
    let (points, base_index) = match direction {
        Direction::Forward => (iterate(p, n, |x| Ok(spec.eval(x)), space)?, 0),
        Direction::TwoSided => {
            if !spec.inverse_available() {
                return Err(Error::Unsupported(format!(
                    "two-sided orbit of non-invertible map {}",
                    spec.label()
                )));
            }
            let fwd = iterate(p, n + 1, |x| Ok(spec.eval(x)), space)?;
            let bwd = iterate(p, n + 1, |x| spec.eval_inverse(x), space)?;
            let mut pts: Vec<f64> = bwd.into_iter().skip(1).rev().collect();
            pts.extend(fwd);
            (pts, n)
        }
    };
    Ok(OrbitSegment {
        points,
        base_point: p,
        base_index,
        direction,
        space,
        spec_id: spec.label(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{perturb, PerturbationSpec, PhaseSpace};
    use proptest::prelude::*;

    #[test]
    fn orbit_examples() {
        let o = orbit(&MapSpec::doubling(), 0.0, 5, Direction::Forward).unwrap();
        assert_eq!(o.points, vec![0.0; 5]);

        let o = orbit(&MapSpec::rotation(0.5), 0.1, 4, Direction::Forward).unwrap();
        assert_eq!(o.points, vec![0.1, 0.6, 0.1, 0.6]);

        let o = orbit(&MapSpec::rotation(0.25), 0.0, 1, Direction::TwoSided).unwrap();
        assert_eq!(o.points, vec![0.75, 0.0, 0.25]);
        assert_eq!(o.base_index, 1);
    }

    #[test]
    fn two_sided_needs_inverse() {
        let err = orbit(&MapSpec::doubling(), 0.1, 3, Direction::TwoSided).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn unstable_fixed_point_stays_put() {
        // 2x + 0.01 has its fixed point at 0.99; plain iteration would drift away
        let s = perturb(&MapSpec::doubling(), PerturbationSpec::additive(0.01)).unwrap();
        let o = orbit(&s, 0.99, 1000, Direction::Forward).unwrap();
        assert!(o.points.iter().all(|&x| (x - 0.99).abs() < 1e-12));
    }

    #[test]
    fn consecutive_points_follow_the_map() {
        let spec = MapSpec::rotation(0.618_033_988_749_895);
        let o = orbit(&spec, 0.2, 50, Direction::TwoSided).unwrap();
        for w in o.points.windows(2) {
            assert!(PhaseSpace::Circle.dist(spec.eval(w[0]), w[1]) < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn orbit_prefix_property(p in 0.0..1.0f64, n in 1usize..200, m in 0usize..200) {
            let spec = MapSpec::logistic(3.9).unwrap();
            let long = orbit(&spec, p, n + m, Direction::Forward).unwrap();
            let short = orbit(&spec, p, n, Direction::Forward).unwrap();
            prop_assert_eq!(&long.points[..n], &short.points[..]);
        }
    }
}
