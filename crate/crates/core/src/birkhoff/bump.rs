use crate::error::{invalid, Result};
use crate::systems::{OrbitSegment, PhaseSpace};

/// Logistic of `z = u^{-1/2} - (1-u)^{-1/2}`; the steepest slope of the
/// resulting transition is about `1.60 / alpha`.
fn transition_z(t: f64, alpha: f64) -> Option<f64> {
    let u = (t - (1.0 - alpha)) / alpha;
    if u <= 0.0 || u >= 1.0 {
        return None;
    }
    Some(1.0 / u.sqrt() - 1.0 / (1.0 - u).sqrt())
}

/// Smooth cut-off: 1 for `t <= 1 - alpha`, 0 for `t >= 1`, strictly
/// decreasing in between. `alpha` is not range-checked here.
pub fn eta(t: f64, alpha: f64) -> f64 {
    if t <= 1.0 - alpha {
        return 1.0;
    }
    match transition_z(t, alpha) {
        Some(z) => 1.0 / (1.0 + (-z).exp()),
        None => 0.0,
    }
}

/// `1 - eta(t)`, computed without cancellation near the plateau.
pub fn eta_deficit(t: f64, alpha: f64) -> f64 {
    if t <= 1.0 - alpha {
        return 0.0;
    }
    match transition_z(t, alpha) {
        Some(z) => 1.0 / (1.0 + z.exp()),
        None => 1.0,
    }
}

/// [`eta`] with `alpha` checked to lie in `(0, 1/2)`.
pub fn bump_eta(t: f64, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(eta(t, alpha))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(invalid(format!("bump shape alpha must lie in (0, 1/2), got {alpha}")));
    }
    Ok(())
}

/// Shape `alpha` and radius `sigma` of the cut-off `eta(rho / sigma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    alpha: f64,
    sigma: f64,
}

impl BumpSpec {
    pub fn new(alpha: f64, sigma: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("bump radius sigma must be positive, got {sigma}")));
        }
        Ok(Self { alpha, sigma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Lipschitz bound `2 / (alpha sigma)` of `x -> eta(rho(x, A) / sigma)`.
    pub fn lipschitz(&self) -> f64 {
        2.0 / (self.alpha * self.sigma)
    }

    pub fn at_distance(&self, d: f64) -> f64 {
        eta(d / self.sigma, self.alpha)
    }
}

/// Sorted orbit points, standing in for the orbit closure.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitCloud {
    space: PhaseSpace,
    points: Vec<f64>,
}

impl OrbitCloud {
    pub fn new(space: PhaseSpace, points: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("orbit sample is empty"));
        }
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup();
        Ok(Self { space, points: pts })
    }

    pub fn from_orbit(orbit: &OrbitSegment) -> Result<Self> {
        Self::new(orbit.space, &orbit.points)
    }

    pub fn space(&self) -> PhaseSpace {
        self.space
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `rho(x, sample)`.
    pub fn distance(&self, x: f64) -> f64 {
        let pts = &self.points;
        let k = pts.partition_point(|&p| p < x);
        let mut d = f64::INFINITY;
        if k < pts.len() {
            d = d.min(self.space.dist(x, pts[k]));
        }
        if k > 0 {
            d = d.min(self.space.dist(x, pts[k - 1]));
        }
        if self.space == PhaseSpace::Circle {
            d = d.min(self.space.dist(x, pts[0])).min(self.space.dist(x, pts[pts.len() - 1]));
        }
        d
    }

    /// Half the largest gap between neighbouring sample points (the wrap-around
    /// gap included on the circle): how far the closure may sit from the sample
    /// inside its hull.
    pub fn covering_radius(&self) -> f64 {
        let pts = &self.points;
        let mut gap = pts.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if self.space == PhaseSpace::Circle && pts.len() > 1 {
            gap = gap.max(1.0 - pts[pts.len() - 1] + pts[0]);
        }
        gap / 2.0
    }
}

/// `eta(rho(x, sample) / sigma)`.
pub fn psi(x: f64, cloud: &OrbitCloud, bump: &BumpSpec) -> f64 {
    bump.at_distance(cloud.distance(x))
}
