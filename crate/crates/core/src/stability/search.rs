use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::birkhoff::{
    cesaro_from_orbit, chi_functions, visit_frequency, BumpSpec, CesaroStats, IntervalUnion, OrbitCloud, VisitStats,
    DEFAULT_WINDOW,
};
use crate::error::{invalid, Result};
use crate::measures::{empirical_lipschitz, DiscreteMeasure};
use crate::systems::{c0_distance_pair, orbit, Direction, MapSpec, PhaseSpace, CLOSING_TOL};

/// Grid for the Lipschitz check of observables.
const LIPSCHITZ_GRID: usize = 4096;

/// A named real function on the phase space.
#[derive(Clone)]
pub struct Observable {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Observable {
    pub fn new(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), move |_| c)
    }

    /// `cos(2 pi k x)`.
    pub fn cos(k: u32) -> Self {
        let w = std::f64::consts::TAU * k as f64;
        Self::new(format!("cos(2pi*{k}x)"), move |x| (w * x).cos())
    }

    /// `sin(2 pi k x)`.
    pub fn sin(k: u32) -> Self {
        let w = std::f64::consts::TAU * k as f64;
        Self::new(format!("sin(2pi*{k}x)"), move |x| (w * x).sin())
    }

    /// `c * f`, renamed.
    pub fn scaled(&self, c: f64) -> Self {
        let f = self.f.clone();
        Self::new(format!("{c}*{}", self.name), move |x| c * f(x))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Observable").field(&self.name).finish()
    }
}

/// Shared parameters of the orbit searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchParams {
    pub eps: f64,
    pub sigma: f64,
    /// Forward length, or half-width of two-sided segments.
    pub horizon: usize,
    pub window: f64,
}

impl SearchParams {
    pub fn new(eps: f64, sigma: f64, horizon: usize) -> Result<Self> {
        let p = Self {
            eps,
            sigma,
            horizon,
            window: DEFAULT_WINDOW,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid(format!("eps must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(invalid(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.horizon < 1000 {
            return Err(invalid(format!("search horizon must be at least 1000, got {}", self.horizon)));
        }
        if !(self.window > 0.0 && self.window <= 0.5) {
            return Err(invalid(format!("window fraction must lie in (0, 1/2], got {}", self.window)));
        }
        Ok(())
    }
}

/// Two-sided sums when every map involved is invertible, forward sums otherwise.
fn direction_for(maps: &[&MapSpec]) -> Direction {
    if maps.iter().all(|m| m.inverse_available()) {
        Direction::TwoSided
    } else {
        Direction::Forward
    }
}

/// Candidate starting points: a uniform grid plus the periodic points of the
/// perturbed map up to a given period.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateSpec {
    pub grid: usize,
    pub max_period: usize,
}

impl Default for CandidateSpec {
    fn default() -> Self {
        Self { grid: 512, max_period: 4 }
    }
}

/// Points with `S^k(x) = x` for some `k <= max_period`, located by bisection of
/// the displacement `S^k(x) - x` on a grid of `resolution` cells. Each
/// returned point closes its cycle within `CLOSING_TOL`.
pub fn periodic_points(spec: &MapSpec, max_period: usize, resolution: usize) -> Vec<f64> {
    let space = spec.space();
    let iterate = |x: f64, k: usize| (0..k).fold(x, |y, _| spec.eval(y));
    let mut found: Vec<f64> = (1..=max_period)
        .into_par_iter()
        .flat_map_iter(|k| {
            let g = move |x: f64| space.offset(x, iterate(x, k));
            let mut roots = Vec::new();
            let mut a = 0.0;
            let mut ga = g(a);
            for j in 1..=resolution {
                let b = j as f64 / resolution as f64;
                let gb = g(if space == PhaseSpace::Circle && j == resolution { 0.0 } else { b });
                if ga == 0.0 {
                    roots.push(a);
                } else if ga * gb < 0.0 && ga.abs() < 0.25 && gb.abs() < 0.25 {
                    let (mut lo, mut hi, mut glo) = (a, b, ga);
                    for _ in 0..200 {
                        let mid = 0.5 * (lo + hi);
                        if mid <= lo || mid >= hi {
                            break;
                        }
                        let gm = g(mid);
                        if gm == 0.0 {
                            lo = mid;
                            hi = mid;
                            break;
                        }
                        if (gm < 0.0) == (glo < 0.0) {
                            lo = mid;
                            glo = gm;
                        } else {
                            hi = mid;
                        }
                    }
                    let x = if g(lo).abs() <= g(hi).abs() { lo } else { hi };
                    roots.push(x);
                }
                a = b;
                ga = gb;
            }
            if space == PhaseSpace::Interval && ga == 0.0 {
                roots.push(1.0);
            }
            roots
                .into_iter()
                .map(|x| space.reduce(x))
                .filter(move |&x| space.dist(iterate(x, k), x) <= CLOSING_TOL)
                .collect::<Vec<_>>()
        })
        .collect();
    found.sort_by(|a, b| a.partial_cmp(b).unwrap());
    found.dedup_by(|b, a| *b - *a <= CLOSING_TOL);
    found
}

/// Grid points followed by periodic points of `s`.
pub fn candidates_for(s: &MapSpec, spec: &CandidateSpec) -> Vec<f64> {
    let n = spec.grid.max(1);
    let mut pts: Vec<f64> = match s.space() {
        PhaseSpace::Circle => (0..n).map(|i| i as f64 / n as f64).collect(),
        PhaseSpace::Interval if n == 1 => vec![0.5],
        PhaseSpace::Interval => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    };
    if spec.max_period > 0 {
        pts.extend(periodic_points(s, spec.max_period, n));
    }
    pts
}

/// Whether an S-invariant measure is concentrated near the orbit sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MassCheck {
    /// `int psi d mu`.
    pub value: f64,
    /// `1 - eps^2 / 8`.
    pub threshold: f64,
    pub pass: bool,
}

pub fn mass_concentration_check(mu: &DiscreteMeasure, cloud: &OrbitCloud, bump: &BumpSpec, eps: f64) -> Result<MassCheck> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if mu.space() != cloud.space() {
        return Err(invalid("measure and orbit sample live on different spaces"));
    }
    let value = mu.integrate(|x| bump.at_distance(cloud.distance(x)));
    let threshold = 1.0 - eps * eps / 8.0;
    Ok(MassCheck {
        value,
        threshold,
        pass: value >= threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointSearch {
    /// First candidate in `A` whose `psi` average along its `S`-orbit exceeds `1 - eps`.
    pub point: Option<f64>,
    /// Largest average seen among candidates in `A`.
    pub best_value: Option<f64>,
    pub best_point: Option<f64>,
    pub examined: usize,
}

/// Looks for `q` in `A` whose `S`-orbit average of `psi` (its tail lower
/// proxy) exceeds `1 - eps`.
pub fn point_search_in_set(
    s: &MapSpec,
    in_a: impl Fn(f64) -> bool + Sync,
    candidates: &[f64],
    cloud: &OrbitCloud,
    bump: &BumpSpec,
    eps: f64,
    horizon: usize,
) -> Result<PointSearch> {
    if candidates.is_empty() {
        return Err(invalid("no candidate points"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    let dir = direction_for(&[s]);
    let inside: Vec<f64> = candidates.iter().copied().filter(|&q| in_a(q)).collect();
    let values = inside
        .par_iter()
        .map(|&q| {
            let o = orbit(s, q, horizon, dir)?;
            Ok(cesaro_from_orbit(&o, |x| bump.at_distance(cloud.distance(x)), DEFAULT_WINDOW)?.lower_proxy)
        })
        .collect::<Result<Vec<f64>>>()?;
    let point = inside.iter().zip(&values).find(|(_, &v)| v > 1.0 - eps).map(|(&q, _)| q);
    let best = inside
        .iter()
        .zip(&values)
        .fold(None, |best: Option<(f64, f64)>, (&q, &v)| match best {
            Some((_, bv)) if bv >= v => best,
            _ => Some((q, v)),
        });
    Ok(PointSearch {
        point,
        best_value: best.map(|b| b.1),
        best_point: best.map(|b| b.0),
        examined: inside.len(),
    })
}

/// Orbit summary of one candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CandidateStats {
    pub point: f64,
    /// Tail lower proxy of the frequency of visits to the `sigma`-neighbourhood.
    pub visit_lower: f64,
    pub visit_frequency: f64,
    pub average_lower: f64,
    pub average_upper: f64,
    pub survivor: bool,
}

/// A chosen point with its full statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchPoint {
    pub point: f64,
    pub visits: VisitStats,
    pub cesaro: CesaroStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CesaroSearchResult {
    pub observable: String,
    pub direction: Direction,
    pub params: SearchParams,
    /// Tail proxies of the `T`-orbit averages at `p`.
    pub phi_minus: f64,
    pub phi_plus: f64,
    /// `phi_minus - eps`: `q_plus` must average at least this.
    pub target_lower: f64,
    /// `phi_plus + eps`: `q_minus` must average at most this.
    pub target_upper: f64,
    pub candidates: Vec<CandidateStats>,
    pub survivors: usize,
    pub q_plus: Option<SearchPoint>,
    pub q_minus: Option<SearchPoint>,
    pub success_plus: bool,
    pub success_minus: bool,
    pub success: bool,
}

impl CesaroSearchResult {
    /// Recomputes the success flags from the stored statistics.
    pub fn flags_consistent(&self) -> bool {
        let plus = self.q_plus.as_ref().is_some_and(|q| {
            q.visits.tail_lower_proxy >= 1.0 - self.params.eps && q.cesaro.lower_proxy >= self.target_lower
        });
        let minus = self.q_minus.as_ref().is_some_and(|q| {
            q.visits.tail_lower_proxy >= 1.0 - self.params.eps && q.cesaro.upper_proxy <= self.target_upper
        });
        plus == self.success_plus && minus == self.success_minus && self.success == (plus && minus)
    }

    pub fn candidates_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for c in &self.candidates {
            w.serialize(c)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ascii"))
    }

    pub fn summary(&self) -> String {
        let q = |p: &Option<SearchPoint>| match p {
            Some(sp) => format!(
                "{} (visits {}, averages [{}, {}])",
                sp.point, sp.visits.tail_lower_proxy, sp.cesaro.lower_proxy, sp.cesaro.upper_proxy
            ),
            None => "none".into(),
        };
        format!(
            "observable = {}\ndirection = {:?}\nphi_minus = {}\nphi_plus = {}\ntarget_lower = {}\ntarget_upper = {}\ncandidates = {}\nsurvivors = {}\nq_plus = {}\nq_minus = {}\nsuccess_plus = {}\nsuccess_minus = {}\nsuccess = {}\n",
            self.observable,
            self.direction,
            self.phi_minus,
            self.phi_plus,
            self.target_lower,
            self.target_upper,
            self.candidates.len(),
            self.survivors,
            q(&self.q_plus),
            q(&self.q_minus),
            self.success_plus,
            self.success_minus,
            self.success
        )
    }
}

/// Index of the best survivor under `better`, ties going to the candidate nearest `p`.
fn pick(stats: &[CandidateStats], space: PhaseSpace, p: f64, key: impl Fn(&CandidateStats) -> f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in stats.iter().enumerate() {
        if !c.survivor {
            continue;
        }
        best = match best {
            None => Some(i),
            Some(b) => {
                let (kc, kb) = (key(c), key(&stats[b]));
                if kc > kb || (kc == kb && space.dist(c.point, p) < space.dist(stats[b].point, p)) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Finds `q_plus` and `q_minus` whose `S`-orbits stay near the `T`-orbit of
/// `p` and whose averages of `phi` reach beyond `phi_p^- - eps` and below
/// `phi_p^+ + eps` respectively.
pub fn cesaro_stability_search(
    t: &MapSpec,
    s: &MapSpec,
    p: f64,
    phi: &Observable,
    params: &SearchParams,
    candidates: &[f64],
) -> Result<CesaroSearchResult> {
    params.validate()?;
    if candidates.is_empty() {
        return Err(invalid("no candidate points"));
    }
    if t.space() != s.space() {
        return Err(invalid("maps live on different phase spaces"));
    }
    let dir = direction_for(&[t, s]);
    let base = orbit(t, p, params.horizon, dir)?;
    let base_stats = cesaro_from_orbit(&base, |x| phi.eval(x), params.window)?;
    let cloud = OrbitCloud::from_orbit(&base)?;
    let near = |x: f64| cloud.distance(x) < params.sigma;

    let stats = candidates
        .par_iter()
        .map(|&q| -> Result<CandidateStats> {
            let o = orbit(s, q, params.horizon, dir)?;
            let v = visit_frequency(&o, near, params.window)?;
            let c = cesaro_from_orbit(&o, |x| phi.eval(x), params.window)?;
            Ok(CandidateStats {
                point: q,
                visit_lower: v.tail_lower_proxy,
                visit_frequency: v.frequency,
                average_lower: c.lower_proxy,
                average_upper: c.upper_proxy,
                survivor: v.tail_lower_proxy >= 1.0 - params.eps,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let survivors = stats.iter().filter(|c| c.survivor).count();

    let full = |i: Option<usize>| -> Result<Option<SearchPoint>> {
        let Some(i) = i else { return Ok(None) };
        let q = stats[i].point;
        let o = orbit(s, q, params.horizon, dir)?;
        Ok(Some(SearchPoint {
            point: q,
            visits: visit_frequency(&o, near, params.window)?,
            cesaro: cesaro_from_orbit(&o, |x| phi.eval(x), params.window)?,
        }))
    };
    let q_plus = full(pick(&stats, t.space(), p, |c| c.average_lower))?;
    let q_minus = full(pick(&stats, t.space(), p, |c| -c.average_upper))?;

    let target_lower = base_stats.lower_proxy - params.eps;
    let target_upper = base_stats.upper_proxy + params.eps;
    let success_plus = q_plus.as_ref().is_some_and(|q| q.cesaro.lower_proxy >= target_lower);
    let success_minus = q_minus.as_ref().is_some_and(|q| q.cesaro.upper_proxy <= target_upper);
    Ok(CesaroSearchResult {
        observable: phi.name().to_string(),
        direction: dir,
        params: *params,
        phi_minus: base_stats.lower_proxy,
        phi_plus: base_stats.upper_proxy,
        target_lower,
        target_upper,
        candidates: stats,
        survivors,
        q_plus,
        q_minus,
        success_plus,
        success_minus,
        success: success_plus && success_minus,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzSweep {
    pub lipschitz: f64,
    /// Sup-distance between `T` and `S`, shared by every search.
    pub delta: f64,
    pub results: Vec<CesaroSearchResult>,
}

impl LipschitzSweep {
    pub fn all_succeed(&self) -> bool {
        self.results.iter().all(|r| r.success)
    }
}

/// The same `S` serves every `L`-Lipschitz observable of `family`; members
/// failing an empirical Lipschitz check are rejected before any search.
pub fn lipschitz_uniform_experiment(
    t: &MapSpec,
    s: &MapSpec,
    p: f64,
    lipschitz: f64,
    family: &[Observable],
    params: &SearchParams,
    candidates: &[f64],
) -> Result<LipschitzSweep> {
    if family.is_empty() {
        return Err(invalid("empty observable family"));
    }
    for phi in family {
        let (l, (x, y)) = empirical_lipschitz(t.space(), LIPSCHITZ_GRID, |x| phi.eval(x))?;
        if l > lipschitz * (1.0 + 1e-9) {
            return Err(invalid(format!(
                "{} is not {lipschitz}-Lipschitz: |f({x}) - f({y})| / rho = {l}",
                phi.name()
            )));
        }
    }
    let (delta, _) = c0_distance_pair(t, s, super::C0_GRID)?;
    let results = family
        .iter()
        .map(|phi| cesaro_stability_search(t, s, p, phi, params, candidates))
        .collect::<Result<Vec<_>>>()?;
    Ok(LipschitzSweep {
        lipschitz,
        delta,
        results,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisitSearchResult {
    pub direction: Direction,
    pub params: SearchParams,
    /// Tail proxies of the frequency of `T`-orbit visits to `V` from `p`.
    pub chi_minus: f64,
    pub chi_plus: f64,
    pub target_lower: f64,
    pub target_upper: f64,
    pub survivors: usize,
    pub q_plus: Option<(f64, VisitStats)>,
    pub q_minus: Option<(f64, VisitStats)>,
    /// Orbit averages of `(chi_minus^beta, chi_plus^beta)` at `q_plus` and `q_minus`.
    pub sandwich_plus: Option<(f64, f64)>,
    pub sandwich_minus: Option<(f64, f64)>,
    pub success_plus: bool,
    pub success_minus: bool,
    pub success: bool,
}

impl VisitSearchResult {
    /// Whether each chosen frequency lies between its smoothed averages.
    pub fn sandwich_holds(&self) -> bool {
        let ok = |q: &Option<(f64, VisitStats)>, s: &Option<(f64, f64)>| match (q, s) {
            (Some((_, v)), Some((lo, hi))) => *lo <= v.frequency + 1e-12 && v.frequency <= *hi + 1e-12,
            (None, None) => true,
            _ => false,
        };
        ok(&self.q_plus, &self.sandwich_plus) && ok(&self.q_minus, &self.sandwich_minus)
    }

    pub fn summary(&self) -> String {
        let q = |p: &Option<(f64, VisitStats)>| match p {
            Some((x, v)) => format!("{x} (frequency {}, tail [{}, {}])", v.frequency, v.tail_lower_proxy, v.tail_upper_proxy),
            None => "none".into(),
        };
        format!(
            "direction = {:?}\nchi_minus = {}\nchi_plus = {}\ntarget_lower = {}\ntarget_upper = {}\nsurvivors = {}\nq_plus = {}\nq_minus = {}\nsandwich = {}\nsuccess_plus = {}\nsuccess_minus = {}\nsuccess = {}\n",
            self.direction,
            self.chi_minus,
            self.chi_plus,
            self.target_lower,
            self.target_upper,
            self.survivors,
            q(&self.q_plus),
            q(&self.q_minus),
            self.sandwich_holds(),
            self.success_plus,
            self.success_minus,
            self.success
        )
    }
}

/// Among candidates whose `S`-orbits stay `sigma`-near the `T`-orbit of `p`,
/// finds `q_plus` visiting `V` at least `chi_p^- - eps` of the time and
/// `q_minus` at most `chi_p^+ + eps`.
#[allow(clippy::too_many_arguments)]
pub fn visit_stability_experiment(
    t: &MapSpec,
    s: &MapSpec,
    p: f64,
    v: &IntervalUnion,
    beta: f64,
    alpha: f64,
    params: &SearchParams,
    candidates: &[f64],
) -> Result<VisitSearchResult> {
    params.validate()?;
    if candidates.is_empty() {
        return Err(invalid("no candidate points"));
    }
    if v.space() != t.space() || t.space() != s.space() {
        return Err(invalid("maps and visited set live on different phase spaces"));
    }
    let chi = chi_functions(v.clone(), beta, alpha)?;
    let dir = direction_for(&[t, s]);
    let base = orbit(t, p, params.horizon, dir)?;
    let base_visits = visit_frequency(&base, |x| v.contains(x), params.window)?;
    let cloud = OrbitCloud::from_orbit(&base)?;
    let near = |x: f64| cloud.distance(x) < params.sigma;

    let stats = candidates
        .par_iter()
        .map(|&q| -> Result<(f64, bool, VisitStats)> {
            let o = orbit(s, q, params.horizon, dir)?;
            let close = visit_frequency(&o, near, params.window)?;
            let inside = visit_frequency(&o, |x| v.contains(x), params.window)?;
            Ok((q, close.tail_lower_proxy >= 1.0 - params.eps, inside))
        })
        .collect::<Result<Vec<_>>>()?;
    let survivors: Vec<&(f64, bool, VisitStats)> = stats.iter().filter(|c| c.1).collect();

    let better = |a: f64, b: f64, qa: f64, qb: f64| a > b || (a == b && t.space().dist(qa, p) < t.space().dist(qb, p));
    let mut q_plus: Option<&(f64, bool, VisitStats)> = None;
    let mut q_minus: Option<&(f64, bool, VisitStats)> = None;
    for c in &survivors {
        if q_plus.is_none_or(|b| better(c.2.tail_lower_proxy, b.2.tail_lower_proxy, c.0, b.0)) {
            q_plus = Some(c);
        }
        if q_minus.is_none_or(|b| better(-c.2.tail_upper_proxy, -b.2.tail_upper_proxy, c.0, b.0)) {
            q_minus = Some(c);
        }
    }
    let sandwich = |q: Option<&(f64, bool, VisitStats)>| -> Result<Option<(f64, f64)>> {
        let Some(&(x, _, _)) = q else { return Ok(None) };
        let o = orbit(s, x, params.horizon, dir)?;
        let lo = cesaro_from_orbit(&o, |y| chi.minus(y), params.window)?.final_average();
        let hi = cesaro_from_orbit(&o, |y| chi.plus(y), params.window)?.final_average();
        Ok(Some((lo, hi)))
    };
    let sandwich_plus = sandwich(q_plus)?;
    let sandwich_minus = sandwich(q_minus)?;

    let target_lower = base_visits.tail_lower_proxy - params.eps;
    let target_upper = base_visits.tail_upper_proxy + params.eps;
    let success_plus = q_plus.is_some_and(|q| q.2.tail_lower_proxy >= target_lower);
    let success_minus = q_minus.is_some_and(|q| q.2.tail_upper_proxy <= target_upper);
    Ok(VisitSearchResult {
        direction: dir,
        params: *params,
        chi_minus: base_visits.tail_lower_proxy,
        chi_plus: base_visits.tail_upper_proxy,
        target_lower,
        target_upper,
        survivors: survivors.len(),
        q_plus: q_plus.map(|q| (q.0, q.2.clone())),
        q_minus: q_minus.map(|q| (q.0, q.2.clone())),
        sandwich_plus,
        sandwich_minus,
        success_plus,
        success_minus,
        success: success_plus && success_minus,
    })
}
