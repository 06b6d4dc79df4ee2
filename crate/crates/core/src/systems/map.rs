use super::PhaseSpace;
use crate::error::{config, invalid, Error, Result};

/// Upper bound on `|b'(u)|` for the bump profile `b(u) = exp(1 - 1/(1 - u^2))`
/// (the true maximum is 2.17036 near `|u| = 0.76`).
const BUMP_MAX_SLOPE: f64 = 2.1704;

/// Samples used to check that an unclamped interval perturbation stays in `[0, 1]`.
const RANGE_CHECK_GRID: usize = 8192;

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Identity,
    /// `x + alpha mod 1`; circle only.
    Rotation { alpha: f64 },
    /// `2x mod 1`; circle only.
    Doubling,
    /// `s * min(x, 1 - x)` with `0 < s <= 2`.
    Tent { slope: f64 },
    /// `r x (1 - x)` with `0 <= r <= 4`.
    Logistic { r: f64 },
    /// Continuous piecewise-linear graph through `(breakpoints[k], values[k])`.
    /// On the circle the values describe a lift and are reduced mod 1.
    PiecewiseLinear {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Identity => "identity",
            Family::Rotation { .. } => "rotation",
            Family::Doubling => "doubling",
            Family::Tent { .. } => "tent",
            Family::Logistic { .. } => "logistic",
            Family::PiecewiseLinear { .. } => "piecewise_linear",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Family::Rotation { alpha } => vec![*alpha],
            Family::Tent { slope } => vec![*slope],
            Family::Logistic { r } => vec![*r],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PerturbationKind {
    AdditiveConstant,
    /// `amplitude * exp(1 - 1/(1 - u^2))` with `u = (x - center) / width`, zero for `|u| >= 1`.
    SmoothBump { center: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    pub amplitude: f64,
    /// Interval only: clamp the perturbed value into `[0, 1]`. When false,
    /// a perturbation that leaves the interval is rejected.
    pub clamp: bool,
}

impl PerturbationSpec {
    pub fn additive(amplitude: f64) -> Self {
        Self {
            kind: PerturbationKind::AdditiveConstant,
            amplitude,
            clamp: true,
        }
    }

    pub fn smooth_bump(center: f64, width: f64, amplitude: f64) -> Self {
        Self {
            kind: PerturbationKind::SmoothBump { center, width },
            amplitude,
            clamp: true,
        }
    }

    pub fn without_clamp(mut self) -> Self {
        self.clamp = false;
        self
    }

    /// The displacement `S(x) - T(x)` before reduction.
    pub fn displacement(&self, space: PhaseSpace, x: f64) -> f64 {
        match self.kind {
            PerturbationKind::AdditiveConstant => self.amplitude,
            PerturbationKind::SmoothBump { center, width } => {
                let u = space.offset(center, x) / width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    self.amplitude * (1.0 - 1.0 / (1.0 - u * u)).exp()
                }
            }
        }
    }

    fn validate(&self, space: PhaseSpace) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(config("perturbation amplitude must be finite"));
        }
        if let PerturbationKind::SmoothBump { center, width } = self.kind {
            if !space.contains(center) {
                return Err(config(format!("bump center {center} outside the phase space")));
            }
            let max_width = match space {
                PhaseSpace::Circle => 0.5,
                PhaseSpace::Interval => 1.0,
            };
            if !(width > 0.0 && width <= max_width) {
                return Err(config(format!("bump width must lie in (0, {max_width}]")));
            }
        }
        Ok(())
    }
}

/// One affine piece `y = y0 + slope * (x - x0)` of a map lift on `[x0, x1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPiece {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub slope: f64,
}

impl LinearPiece {
    pub fn at(&self, x: f64) -> f64 {
        self.y0 + self.slope * (x - self.x0)
    }
}

/// A concrete continuous map of the interval or the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    family: Family,
    space: PhaseSpace,
    perturbations: Vec<PerturbationSpec>,
}

impl MapSpec {
    pub fn new(family: Family, space: PhaseSpace) -> Result<Self> {
        match &family {
            Family::Identity => {}
            Family::Rotation { alpha } => {
                if space != PhaseSpace::Circle {
                    return Err(config("rotation is defined on the circle only"));
                }
                if !alpha.is_finite() {
                    return Err(config("rotation angle must be finite"));
                }
            }
            Family::Doubling => {
                if space != PhaseSpace::Circle {
                    return Err(config("doubling is defined on the circle only"));
                }
            }
            Family::Tent { slope } => {
                if !(*slope > 0.0 && *slope <= 2.0) {
                    return Err(config(format!(
                        "tent slope {slope} outside (0, 2]; [0, 1] would not be invariant"
                    )));
                }
            }
            Family::Logistic { r } => {
                if !(0.0..=4.0).contains(r) {
                    return Err(config(format!(
                        "logistic parameter {r} outside [0, 4]; [0, 1] would not be invariant"
                    )));
                }
            }
            Family::PiecewiseLinear { breakpoints, values } => {
                validate_pwl(space, breakpoints, values)?;
            }
        }
        let family = match family {
            Family::Rotation { alpha } => Family::Rotation {
                alpha: PhaseSpace::Circle.reduce(alpha),
            },
            f => f,
        };
        Ok(Self {
            family,
            space,
            perturbations: Vec::new(),
        })
    }

    pub fn identity(space: PhaseSpace) -> Self {
        Self::new(Family::Identity, space).expect("identity is always valid")
    }

    pub fn rotation(alpha: f64) -> Self {
        Self::new(Family::Rotation { alpha }, PhaseSpace::Circle).expect("finite rotation angle")
    }

    pub fn doubling() -> Self {
        Self::new(Family::Doubling, PhaseSpace::Circle).expect("doubling is always valid")
    }

    pub fn tent(slope: f64) -> Result<Self> {
        Self::new(Family::Tent { slope }, PhaseSpace::Interval)
    }

    pub fn logistic(r: f64) -> Result<Self> {
        Self::new(Family::Logistic { r }, PhaseSpace::Interval)
    }

    pub fn piecewise_linear(space: PhaseSpace, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(Family::PiecewiseLinear { breakpoints, values }, space)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn space(&self) -> PhaseSpace {
        self.space
    }

    pub fn perturbations(&self) -> &[PerturbationSpec] {
        &self.perturbations
    }

    pub fn label(&self) -> String {
        let mut s = match &self.family {
            Family::Rotation { alpha } => format!("rotation({alpha})"),
            Family::Tent { slope } => format!("tent({slope})"),
            Family::Logistic { r } => format!("logistic({r})"),
            Family::PiecewiseLinear { breakpoints, .. } => {
                format!("piecewise_linear({} pieces)", breakpoints.len() - 1)
            }
            f => f.name().to_string(),
        };
        for p in &self.perturbations {
            match p.kind {
                PerturbationKind::AdditiveConstant => s.push_str(&format!("+const({})", p.amplitude)),
                PerturbationKind::SmoothBump { center, width } => {
                    s.push_str(&format!("+bump({center},{width},{})", p.amplitude))
                }
            }
        }
        s
    }

    fn base_lift(&self, x: f64) -> f64 {
        match &self.family {
            Family::Identity => x,
            Family::Rotation { alpha } => x + alpha,
            Family::Doubling => 2.0 * x,
            Family::Tent { slope } => slope * x.min(1.0 - x),
            Family::Logistic { r } => r * x * (1.0 - x),
            Family::PiecewiseLinear { breakpoints, values } => {
                let k = match breakpoints.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
                    Ok(k) => return values[k],
                    Err(0) => 0,
                    Err(k) if k >= breakpoints.len() => breakpoints.len() - 2,
                    Err(k) => k - 1,
                };
                let t = (x - breakpoints[k]) / (breakpoints[k + 1] - breakpoints[k]);
                values[k] + t * (values[k + 1] - values[k])
            }
        }
    }

    /// Real-valued lift of the map, before wrapping or clamping.
    pub fn lift(&self, x: f64) -> f64 {
        let mut y = self.base_lift(x);
        for p in &self.perturbations {
            y += p.displacement(self.space, x);
        }
        y
    }

    /// `T(x)`, always a point of the phase space.
    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(x.is_finite());
        self.space.reduce(self.lift(self.space.reduce(x)))
    }

    /// The lift as affine pieces over `[0, 1]`, when the map is piecewise linear.
    pub fn linear_pieces(&self) -> Option<Vec<LinearPiece>> {
        let mut shift = 0.0;
        for p in &self.perturbations {
            match p.kind {
                PerturbationKind::AdditiveConstant => shift += p.amplitude,
                PerturbationKind::SmoothBump { .. } => return None,
            }
        }
        let one = |y0: f64, slope: f64| vec![LinearPiece { x0: 0.0, x1: 1.0, y0, slope }];
        let pieces = match &self.family {
            Family::Identity => one(0.0, 1.0),
            Family::Rotation { alpha } => one(*alpha, 1.0),
            Family::Doubling => one(0.0, 2.0),
            Family::Tent { slope } => vec![
                LinearPiece { x0: 0.0, x1: 0.5, y0: 0.0, slope: *slope },
                LinearPiece { x0: 0.5, x1: 1.0, y0: slope * 0.5, slope: -slope },
            ],
            Family::Logistic { .. } => return None,
            Family::PiecewiseLinear { breakpoints, values } => breakpoints
                .windows(2)
                .zip(values.windows(2))
                .map(|(b, v)| LinearPiece {
                    x0: b[0],
                    x1: b[1],
                    y0: v[0],
                    slope: (v[1] - v[0]) / (b[1] - b[0]),
                })
                .collect(),
        };
        Some(
            pieces
                .into_iter()
                .map(|p| LinearPiece { y0: p.y0 + shift, ..p })
                .collect(),
        )
    }

    /// Smallest `|slope|` of the unperturbed lift, for invertible families.
    fn base_min_slope(&self) -> Option<f64> {
        match &self.family {
            Family::Identity | Family::Rotation { .. } => Some(1.0),
            Family::PiecewiseLinear { breakpoints, values } => {
                let slopes: Vec<f64> = breakpoints
                    .windows(2)
                    .zip(values.windows(2))
                    .map(|(b, v)| (v[1] - v[0]) / (b[1] - b[0]))
                    .collect();
                let increasing = slopes.iter().all(|&s| s > 0.0);
                let decreasing = slopes.iter().all(|&s| s < 0.0);
                if !(increasing || decreasing) {
                    return None;
                }
                let total = values[values.len() - 1] - values[0];
                let onto = match self.space {
                    PhaseSpace::Circle => (total.abs() - 1.0).abs() < 1e-12,
                    PhaseSpace::Interval => {
                        let (lo, hi) = if increasing {
                            (values[0], values[values.len() - 1])
                        } else {
                            (values[values.len() - 1], values[0])
                        };
                        lo.abs() < 1e-15 && (hi - 1.0).abs() < 1e-15
                    }
                };
                onto.then(|| slopes.iter().fold(f64::INFINITY, |m, s| m.min(s.abs())))
            }
            _ => None,
        }
    }

    pub fn inverse_available(&self) -> bool {
        let Some(min_slope) = self.base_min_slope() else {
            return false;
        };
        let mut bump_slope = 0.0;
        for p in &self.perturbations {
            if p.amplitude == 0.0 {
                continue;
            }
            if self.space == PhaseSpace::Interval {
                return false;
            }
            if let PerturbationKind::SmoothBump { width, .. } = p.kind {
                bump_slope += p.amplitude.abs() * BUMP_MAX_SLOPE / width;
            }
        }
        bump_slope < min_slope
    }

    /// `T^{-1}(y)`.
    pub fn eval_inverse(&self, y: f64) -> Result<f64> {
        if !self.inverse_available() {
            return Err(Error::Unsupported(format!("{} is not invertible", self.label())));
        }
        let y = self.space.reduce(y);
        if self.perturbations.iter().all(|p| p.amplitude == 0.0) {
            match &self.family {
                Family::Identity => return Ok(y),
                Family::Rotation { alpha } => return Ok(self.space.reduce(y - alpha)),
                _ => {}
            }
        }
        let a = self.lift(0.0);
        let b = self.lift(1.0);
        let increasing = b > a;
        let target = match self.space {
            PhaseSpace::Circle => {
                // choose the representative of y inside the lift's range
                let (lo, hi) = if increasing { (a, b) } else { (b, a) };
                let mut t = y + (lo - y).ceil();
                if t >= hi {
                    t -= 1.0;
                }
                t
            }
            PhaseSpace::Interval => y,
        };
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let v = self.lift(mid);
            if (v < target) == increasing {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let x = if (self.lift(lo) - target).abs() <= (self.lift(hi) - target).abs() {
            lo
        } else {
            hi
        };
        Ok(self.space.reduce(x))
    }
}

fn validate_pwl(space: PhaseSpace, breakpoints: &[f64], values: &[f64]) -> Result<()> {
    if breakpoints.len() < 2 || breakpoints.len() != values.len() {
        return Err(config(
            "piecewise_linear needs at least two breakpoints and one value per breakpoint",
        ));
    }
    if breakpoints[0] != 0.0 || breakpoints[breakpoints.len() - 1] != 1.0 {
        return Err(config("piecewise_linear breakpoints must start at 0 and end at 1"));
    }
    if breakpoints.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(config("piecewise_linear breakpoints must be strictly increasing"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(config("piecewise_linear values must be finite"));
    }
    match space {
        PhaseSpace::Interval => {
            if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(config("piecewise_linear values must lie in [0, 1] on the interval"));
            }
        }
        PhaseSpace::Circle => {
            let total = values[values.len() - 1] - values[0];
            if (total - total.round()).abs() > 1e-12 {
                return Err(config(
                    "piecewise_linear circle lift must satisfy values[last] - values[0] in Z",
                ));
            }
        }
    }
    Ok(())
}

/// Builds `S = T + displacement`. Additive constants on rotations (and on the
/// circle identity) fold into the rotation angle.
pub fn perturb(spec: &MapSpec, pert: PerturbationSpec) -> Result<MapSpec> {
    pert.validate(spec.space)?;
    if pert.amplitude == 0.0 {
        return Ok(spec.clone());
    }
    if pert.kind == PerturbationKind::AdditiveConstant && spec.perturbations.is_empty() {
        match spec.family {
            Family::Rotation { alpha } => return Ok(MapSpec::rotation(alpha + pert.amplitude)),
            Family::Identity if spec.space == PhaseSpace::Circle => {
                return Ok(MapSpec::rotation(pert.amplitude))
            }
            _ => {}
        }
    }
    let mut out = spec.clone();
    out.perturbations.push(pert);
    if spec.space == PhaseSpace::Interval && !pert.clamp {
        let leaves = spec
            .space
            .sample_grid(RANGE_CHECK_GRID)
            .into_iter()
            .map(|x| out.lift(x))
            .any(|y| !(-1e-15..=1.0 + 1e-15).contains(&y));
        if leaves {
            return Err(invalid(format!(
                "perturbation with amplitude {} moves {} outside [0, 1] and clamping is disabled",
                pert.amplitude,
                spec.label()
            )));
        }
    }
    Ok(out)
}

/// Sup over the sample grid of `rho(a(x), b(x))`.
pub fn c0_distance_estimate(a: &MapSpec, b: &MapSpec, grid_n: usize) -> Result<f64> {
    check_pair(a, b, grid_n)?;
    Ok(a.space
        .sample_grid(grid_n)
        .into_iter()
        .map(|x| a.space.dist(a.eval(x), b.eval(x)))
        .fold(0.0, f64::max))
}

/// Forward and, when both maps are invertible, inverse sup-distance estimates.
pub fn c0_distance_pair(a: &MapSpec, b: &MapSpec, grid_n: usize) -> Result<(f64, Option<f64>)> {
    let forward = c0_distance_estimate(a, b, grid_n)?;
    if !(a.inverse_available() && b.inverse_available()) {
        return Ok((forward, None));
    }
    let mut inverse = 0.0f64;
    for y in a.space.sample_grid(grid_n) {
        inverse = inverse.max(a.space.dist(a.eval_inverse(y)?, b.eval_inverse(y)?));
    }
    Ok((forward, Some(inverse)))
}

fn check_pair(a: &MapSpec, b: &MapSpec, grid_n: usize) -> Result<()> {
    if grid_n < 2 {
        return Err(invalid("grid_n must be at least 2"));
    }
    if a.space != b.space {
        return Err(invalid(format!(
            "maps live on different phase spaces ({} vs {})",
            a.space.name(),
            b.space.name()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_families() -> Vec<MapSpec> {
        vec![
            MapSpec::identity(PhaseSpace::Circle),
            MapSpec::identity(PhaseSpace::Interval),
            MapSpec::rotation(0.25),
            MapSpec::rotation(0.618_033_988_749_895),
            MapSpec::doubling(),
            MapSpec::tent(2.0).unwrap(),
            MapSpec::tent(1.3).unwrap(),
            MapSpec::logistic(4.0).unwrap(),
            MapSpec::logistic(3.2).unwrap(),
            MapSpec::piecewise_linear(PhaseSpace::Interval, vec![0.0, 0.3, 1.0], vec![0.0, 0.7, 1.0]).unwrap(),
            MapSpec::piecewise_linear(PhaseSpace::Circle, vec![0.0, 0.5, 1.0], vec![0.1, 0.4, 1.1]).unwrap(),
            perturb(&MapSpec::doubling(), PerturbationSpec::smooth_bump(0.5, 0.1, 0.01)).unwrap(),
            perturb(&MapSpec::logistic(4.0).unwrap(), PerturbationSpec::additive(0.05)).unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        assert_eq!(MapSpec::identity(PhaseSpace::Interval).eval(0.3), 0.3);
        assert!((MapSpec::rotation(0.25).eval(0.9) - 0.15).abs() < 1e-15);
        assert!((MapSpec::doubling().eval(0.7) - 0.4).abs() < 1e-15);
        assert_eq!(MapSpec::tent(2.0).unwrap().eval(0.5), 1.0);
    }

    #[test]
    fn inverse_examples() {
        let r = MapSpec::rotation(0.25);
        assert!((r.eval_inverse(0.15).unwrap() - 0.9).abs() < 1e-15);
        assert_eq!(MapSpec::identity(PhaseSpace::Circle).eval_inverse(0.42).unwrap(), 0.42);
        assert!(matches!(MapSpec::doubling().eval_inverse(0.4), Err(Error::Unsupported(_))));
        assert!(!MapSpec::tent(2.0).unwrap().inverse_available());
    }

    #[test]
    fn family_space_restrictions() {
        assert!(MapSpec::new(Family::Rotation { alpha: 0.1 }, PhaseSpace::Interval).is_err());
        assert!(MapSpec::tent(2.5).is_err());
        assert!(MapSpec::logistic(4.1).is_err());
        assert!(MapSpec::piecewise_linear(PhaseSpace::Circle, vec![0.0, 1.0], vec![0.0, 0.5]).is_err());
        assert!(MapSpec::piecewise_linear(PhaseSpace::Interval, vec![0.0, 0.5], vec![0.0, 0.5]).is_err());
    }

    #[test]
    fn perturb_examples() {
        let d = MapSpec::doubling();
        let same = perturb(&d, PerturbationSpec::additive(0.0)).unwrap();
        assert_eq!(c0_distance_estimate(&d, &same, 1024).unwrap(), 0.0);

        let r = perturb(&MapSpec::rotation(0.3), PerturbationSpec::additive(0.01)).unwrap();
        assert_eq!(r.family(), &Family::Rotation { alpha: 0.31 });

        let bumped = perturb(&d, PerturbationSpec::smooth_bump(0.5, 0.1, 0.01)).unwrap();
        let dist = c0_distance_estimate(&d, &bumped, 1 << 16).unwrap();
        assert!((dist - 0.01).abs() < 1e-6, "{dist}");
    }

    #[test]
    fn unclamped_interval_perturbation_is_rejected() {
        let t = MapSpec::tent(2.0).unwrap();
        assert!(perturb(&t, PerturbationSpec::additive(0.01).without_clamp()).is_err());
        let t = MapSpec::tent(1.5).unwrap();
        assert!(perturb(&t, PerturbationSpec::additive(0.01).without_clamp()).is_ok());
        // clamped version is fine and stays inside
        let s = perturb(&MapSpec::tent(2.0).unwrap(), PerturbationSpec::additive(0.01)).unwrap();
        assert_eq!(s.eval(0.5), 1.0);
    }

    #[test]
    fn c0_distance_examples() {
        let d = MapSpec::doubling();
        assert_eq!(c0_distance_estimate(&d, &d, 1024).unwrap(), 0.0);
        let a = c0_distance_estimate(&MapSpec::rotation(0.2), &MapSpec::rotation(0.3), 1024).unwrap();
        assert!((a - 0.1).abs() < 1e-12);
        let s = perturb(&d, PerturbationSpec::additive(0.05)).unwrap();
        assert!((c0_distance_estimate(&d, &s, 4096).unwrap() - 0.05).abs() < 1e-9);
        assert!(c0_distance_estimate(&d, &MapSpec::tent(2.0).unwrap(), 16).is_err());
        assert!(c0_distance_estimate(&d, &d, 1).is_err());
    }

    #[test]
    fn c0_distance_is_monotone_on_nested_grids() {
        let d = MapSpec::doubling();
        let s = perturb(&d, PerturbationSpec::smooth_bump(0.3, 0.05, 0.02)).unwrap();
        let mut last = 0.0;
        for k in 2..14 {
            let v = c0_distance_estimate(&d, &s, 1 << k).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn inverse_distance_pair() {
        let a = MapSpec::rotation(0.2);
        let b = perturb(&a, PerturbationSpec::smooth_bump(0.5, 0.2, 0.01)).unwrap();
        assert!(b.inverse_available());
        let (fwd, inv) = c0_distance_pair(&a, &b, 4096).unwrap();
        assert!((fwd - 0.01).abs() < 1e-6);
        let inv = inv.unwrap();
        assert!(inv > 0.0 && inv <= 0.0101, "{inv}");
        let (_, none) = c0_distance_pair(&MapSpec::doubling(), &MapSpec::doubling(), 64).unwrap();
        assert!(none.is_none());
    }

    #[test]
    fn displacement_sup_equals_amplitude() {
        for (space, center) in [(PhaseSpace::Circle, 0.5), (PhaseSpace::Circle, 0.0), (PhaseSpace::Interval, 0.25)] {
            for pert in [PerturbationSpec::additive(0.03), PerturbationSpec::smooth_bump(center, 0.1, 0.03)] {
                let sup = space
                    .sample_grid(4096)
                    .into_iter()
                    .map(|x| pert.displacement(space, x).abs())
                    .fold(0.0, f64::max);
                assert!((sup - 0.03).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eval_stays_in_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in all_families() {
            for _ in 0..10_000 {
                let x: f64 = rng.random();
                let y = spec.eval(x);
                assert!(spec.space().contains(y), "{} at {x} gave {y}", spec.label());
            }
        }
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let invertible: Vec<MapSpec> = vec![
            MapSpec::rotation(0.37),
            MapSpec::identity(PhaseSpace::Interval),
            MapSpec::piecewise_linear(PhaseSpace::Interval, vec![0.0, 0.3, 1.0], vec![0.0, 0.7, 1.0]).unwrap(),
            MapSpec::piecewise_linear(PhaseSpace::Interval, vec![0.0, 0.5, 1.0], vec![1.0, 0.2, 0.0]).unwrap(),
            MapSpec::piecewise_linear(PhaseSpace::Circle, vec![0.0, 0.5, 1.0], vec![0.1, 0.4, 1.1]).unwrap(),
            perturb(&MapSpec::rotation(0.1), PerturbationSpec::smooth_bump(0.2, 0.1, 0.02)).unwrap(),
            perturb(
                &MapSpec::piecewise_linear(PhaseSpace::Circle, vec![0.0, 0.5, 1.0], vec![0.1, 0.4, 1.1]).unwrap(),
                PerturbationSpec::additive(0.3),
            )
            .unwrap(),
        ];
        for spec in invertible {
            assert!(spec.inverse_available(), "{}", spec.label());
            for _ in 0..2000 {
                let x: f64 = rng.random();
                let back = spec.eval_inverse(spec.eval(x)).unwrap();
                assert!(spec.space().dist(back, x) < 1e-12, "{}: {x} -> {back}", spec.label());
                let fwd = spec.eval(spec.eval_inverse(x).unwrap());
                assert!(spec.space().dist(fwd, x) < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn perturbation_bounded_by_amplitude(amp in 0.0..0.1f64, center in 0.0..1.0f64, width in 0.01..0.5f64) {
            let d = MapSpec::doubling();
            for pert in [PerturbationSpec::additive(amp), PerturbationSpec::smooth_bump(center, width, amp)] {
                let s = perturb(&d, pert).unwrap();
                prop_assert!(c0_distance_estimate(&d, &s, 4096).unwrap() <= amp + 1e-9);
            }
            let t = MapSpec::tent(2.0).unwrap();
            let s = perturb(&t, PerturbationSpec::additive(amp)).unwrap();
            prop_assert!(c0_distance_estimate(&t, &s, 4096).unwrap() <= amp + 1e-9);
        }
    }
}
