use std::fmt;

use serde::Deserialize;

use crate::birkhoff::{chi_functions, IntervalUnion, DEFAULT_WINDOW, MIN_HORIZON};
use crate::measures::{DiscreteMeasure, SetMode};
use crate::stability::{CandidateSpec, Observable, PerturbationFamily, SearchParams, DEFAULT_FLOOR_FACTOR};
use crate::systems::{Direction, MapConfig, MapSpec, PhaseSpace};
use crate::ulam::{Grid, Method, DEFAULT_SAMPLES};

const DEFAULT_SEARCH_HORIZON: usize = 100_000;
const MAX_GRID: usize = 1 << 16;
const MAX_PERIOD: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Ulam,
    Wasserstein,
    Hausdorff,
    Birkhoff,
    Semicontinuity,
    ContinuityProbe,
    CesaroSearch,
    VisitSearch,
    LipschitzSweep,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Ulam => "ulam",
            ExperimentKind::Wasserstein => "wasserstein",
            ExperimentKind::Hausdorff => "hausdorff",
            ExperimentKind::Birkhoff => "birkhoff",
            ExperimentKind::Semicontinuity => "semicontinuity",
            ExperimentKind::ContinuityProbe => "continuity_probe",
            ExperimentKind::CesaroSearch => "cesaro_search",
            ExperimentKind::VisitSearch => "visit_search",
            ExperimentKind::LipschitzSweep => "lipschitz_sweep",
        }
    }

    /// Keys this experiment must be given.
    fn required(self) -> &'static [&'static str] {
        use ExperimentKind::*;
        match self {
            Ulam => &["map", "grid"],
            Wasserstein => &["space", "a_support", "a_weights", "b_support", "b_weights"],
            Hausdorff => &["map", "perturbed", "grid"],
            Birkhoff => &["map", "p", "horizon", "observable"],
            Semicontinuity | ContinuityProbe => &["map", "grid", "deltas"],
            CesaroSearch => &["map", "perturbed", "p", "observable", "eps", "sigma"],
            VisitSearch => &["map", "perturbed", "p", "intervals", "beta", "alpha", "eps", "sigma"],
            LipschitzSweep => &["map", "perturbed", "p", "observables", "lipschitz", "eps", "sigma"],
        }
    }

    /// Keys this experiment reads, required ones included.
    fn accepted(self) -> Vec<&'static str> {
        use ExperimentKind::*;
        let mut keys: Vec<&'static str> = vec!["experiment", "seed", "output"];
        keys.extend_from_slice(self.required());
        let grid_keys = ["grid", "method", "samples", "mode"];
        let search_keys = ["horizon", "window", "candidates", "max_period"];
        match self {
            Ulam | Hausdorff => keys.extend(grid_keys),
            Wasserstein => {}
            Birkhoff => keys.extend(["window", "direction", "intervals"]),
            Semicontinuity => keys.extend(grid_keys.iter().chain(&["perturbation_family", "bump_center", "bump_width"])),
            ContinuityProbe => keys.extend(
                grid_keys
                    .iter()
                    .chain(&["perturbation_family", "bump_center", "bump_width", "floor_factor"]),
            ),
            CesaroSearch | VisitSearch | LipschitzSweep => keys.extend(search_keys),
        }
        keys
    }
}

/// The experiment file as written; every key is optional here and
/// requirements are checked per experiment.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: Option<u64>,
    pub output: Option<String>,
    pub map: Option<MapConfig>,
    pub perturbed: Option<MapConfig>,
    pub grid: Option<usize>,
    pub method: Option<String>,
    pub samples: Option<usize>,
    pub mode: Option<SetMode>,
    pub space: Option<PhaseSpace>,
    pub a_support: Option<Vec<f64>>,
    pub a_weights: Option<Vec<f64>>,
    pub b_support: Option<Vec<f64>>,
    pub b_weights: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
    pub perturbation_family: Option<String>,
    pub bump_center: Option<f64>,
    pub bump_width: Option<f64>,
    pub floor_factor: Option<f64>,
    pub p: Option<f64>,
    pub horizon: Option<usize>,
    pub window: Option<f64>,
    pub direction: Option<Direction>,
    pub observable: Option<String>,
    pub observables: Option<Vec<String>>,
    pub lipschitz: Option<f64>,
    pub eps: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub intervals: Option<Vec<[f64; 2]>>,
    pub candidates: Option<usize>,
    pub max_period: Option<usize>,
}

/// A problem found in a config, with the 1-based line it refers to when known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// A fully checked experiment, ready to run.
#[derive(Debug, Clone)]
pub enum Job {
    Ulam {
        map: MapSpec,
        grid: Grid,
        method: Method,
        mode: SetMode,
    },
    Wasserstein {
        a: DiscreteMeasure,
        b: DiscreteMeasure,
    },
    Hausdorff {
        t: MapSpec,
        s: MapSpec,
        grid: Grid,
        method: Method,
        mode: SetMode,
    },
    Birkhoff {
        map: MapSpec,
        p: f64,
        horizon: usize,
        window: f64,
        direction: Direction,
        observable: Observable,
        set: Option<IntervalUnion>,
    },
    Semicontinuity {
        t: MapSpec,
        family: PerturbationFamily,
        deltas: Vec<f64>,
        grid: Grid,
        method: Method,
        mode: SetMode,
    },
    ContinuityProbe {
        t: MapSpec,
        family: PerturbationFamily,
        deltas: Vec<f64>,
        grid: Grid,
        method: Method,
        mode: SetMode,
        floor_factor: f64,
    },
    CesaroSearch {
        t: MapSpec,
        s: MapSpec,
        p: f64,
        observable: Observable,
        params: SearchParams,
        candidates: CandidateSpec,
    },
    VisitSearch {
        t: MapSpec,
        s: MapSpec,
        p: f64,
        set: IntervalUnion,
        beta: f64,
        alpha: f64,
        params: SearchParams,
        candidates: CandidateSpec,
    },
    LipschitzSweep {
        t: MapSpec,
        s: MapSpec,
        p: f64,
        lipschitz: f64,
        observables: Vec<Observable>,
        params: SearchParams,
        candidates: CandidateSpec,
    },
}

/// A checked config: the job plus what goes into output headers.
#[derive(Debug, Clone)]
pub struct Plan {
    pub kind: ExperimentKind,
    pub job: Job,
    pub seed: u64,
    pub output: String,
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of `key = ...` inside `[section]` (top level when `None`), or of the
/// section header itself when `key` is empty.
fn key_line(text: &str, section: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.trim_end_matches(']').trim().to_string();
            if key.is_empty() && section == Some(name.as_str()) {
                return Some(i + 1);
            }
            current = Some(name);
            continue;
        }
        if key.is_empty() || current.as_deref() != section {
            continue;
        }
        if let Some((k, _)) = line.split_once('=') {
            if k.trim().trim_matches('"') == key {
                return Some(i + 1);
            }
        }
    }
    None
}

struct Checker<'a> {
    text: &'a str,
    diags: Vec<Diagnostic>,
}

impl Checker<'_> {
    fn at(&mut self, section: Option<&str>, key: &str, message: String) {
        let line = key_line(self.text, section, key)
            .or_else(|| section.and_then(|s| key_line(self.text, Some(s), "")))
            .or_else(|| key_line(self.text, None, "experiment"));
        self.diags.push(Diagnostic {
            line,
            key: Some(key.to_string()),
            message,
        });
    }

    fn top(&mut self, key: &str, message: String) {
        self.at(None, key, message);
    }

    /// Checks `lo < v < hi` style ranges, with `closed_hi` turning the upper end into `<=`.
    fn range(&mut self, key: &str, v: Option<f64>, lo: f64, hi: f64, closed_hi: bool, shown: &str) {
        if let Some(v) = v {
            let ok = v > lo && if closed_hi { v <= hi } else { v < hi };
            if !ok || !v.is_finite() {
                self.top(key, format!("`{key}` = {v} is outside {shown}"));
            }
        }
    }

    fn map(&mut self, section: &str, cfg: &Option<MapConfig>) -> Option<MapSpec> {
        match cfg.as_ref()?.to_spec() {
            Ok(m) => Some(m),
            Err(e) => {
                self.at(Some(section), "", format!("[{section}]: {e}"));
                None
            }
        }
    }
}

fn parse_observable(space: PhaseSpace, text: &str) -> Result<Observable, String> {
    let (scale, body) = match text.split_once('*') {
        Some((c, rest)) => (
            Some(c.trim().parse::<f64>().map_err(|_| format!("bad scale factor in observable `{text}`"))?),
            rest.trim(),
        ),
        None => (None, text.trim()),
    };
    let (name, arg) = body
        .split_once(':')
        .ok_or_else(|| format!("observable `{text}` must look like `cos:1`, `sin:2`, `const:0.5` or `dist:0.25`"))?;
    let bad = || format!("bad argument in observable `{text}`");
    let obs = match name.trim() {
        "cos" => Observable::cos(arg.trim().parse().map_err(|_| bad())?),
        "sin" => Observable::sin(arg.trim().parse().map_err(|_| bad())?),
        "const" => Observable::constant(arg.trim().parse().map_err(|_| bad())?),
        "dist" => {
            let c: f64 = arg.trim().parse().map_err(|_| bad())?;
            Observable::new(format!("dist({c})"), move |x| space.dist(x, c))
        }
        other => return Err(format!("unknown observable `{other}`")),
    };
    Ok(match scale {
        Some(c) => obs.scaled(c),
        None => obs,
    })
}

impl ExperimentConfig {
    /// Parses and checks a config; `seed` overrides the file's seed.
    pub fn plan(text: &str, seed: Option<u64>) -> Result<Plan, Vec<Diagnostic>> {
        let table: toml::Table = toml::from_str(text).map_err(|e| vec![toml_diag(text, &e)])?;
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| vec![toml_diag(text, &e)])?;
        let mut ck = Checker { text, diags: Vec::new() };
        let kind = cfg.experiment;

        let accepted = kind.accepted();
        for key in table.keys() {
            if !accepted.contains(&key.as_str()) {
                ck.top(key, format!("key `{key}` is not used by experiment `{}`", kind.name()));
            }
        }
        for &key in kind.required() {
            if !table.contains_key(key) {
                ck.top("experiment", format!("missing required key `{key}` for experiment `{}`", kind.name()));
            }
        }

        let seed = seed.or(cfg.seed).unwrap_or(0);
        let output = cfg.output.clone().unwrap_or_else(|| kind.name().to_string());
        if output.is_empty() || output.contains(['/', '\\']) || output.starts_with('.') {
            ck.top("output", format!("`output` = {output:?} must be a plain file stem"));
        }

        ck.range("eps", cfg.eps, 0.0, 1.0, false, "(0, 1)");
        ck.range("sigma", cfg.sigma, 0.0, f64::INFINITY, false, "(0, inf)");
        ck.range("alpha", cfg.alpha, 0.0, 0.5, false, "(0, 1/2)");
        ck.range("beta", cfg.beta, 0.0, f64::INFINITY, false, "(0, inf)");
        ck.range("window", cfg.window, 0.0, 0.5, true, "(0, 1/2]");
        ck.range("lipschitz", cfg.lipschitz, 0.0, f64::INFINITY, false, "(0, inf)");
        ck.range("floor_factor", cfg.floor_factor, 0.0, f64::INFINITY, false, "(0, inf)");
        ck.range("bump_width", cfg.bump_width, 0.0, f64::INFINITY, false, "(0, inf)");
        if let Some(n) = cfg.grid {
            if !(2..=MAX_GRID).contains(&n) {
                ck.top("grid", format!("`grid` = {n} is outside [2, {MAX_GRID}]"));
            }
        }
        if cfg.samples == Some(0) {
            ck.top("samples", "`samples` must be at least 1".into());
        }
        if cfg.candidates == Some(0) {
            ck.top("candidates", "`candidates` must be at least 1".into());
        }
        if let Some(k) = cfg.max_period {
            if k > MAX_PERIOD {
                ck.top("max_period", format!("`max_period` = {k} is outside [0, {MAX_PERIOD}]"));
            }
        }
        let min_horizon = match kind {
            ExperimentKind::Birkhoff => MIN_HORIZON,
            _ => 1000,
        };
        if let Some(h) = cfg.horizon {
            if h < min_horizon {
                ck.top("horizon", format!("`horizon` = {h} is below the minimum {min_horizon}"));
            }
        }
        if let Some(d) = &cfg.deltas {
            if d.is_empty() || d.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                ck.top("deltas", "`deltas` must be a non-empty list of nonnegative numbers".into());
            } else if d.windows(2).any(|w| w[1] >= w[0]) {
                ck.top("deltas", "`deltas` must be strictly decreasing".into());
            } else if kind == ExperimentKind::ContinuityProbe && d.len() < 3 {
                ck.top("deltas", format!("a continuity probe needs at least 3 `deltas`, got {}", d.len()));
            }
        }

        let t = ck.map("map", &cfg.map);
        let s = ck.map("perturbed", &cfg.perturbed);
        if let (Some(t), Some(s)) = (&t, &s) {
            if t.space() != s.space() {
                ck.at(Some("perturbed"), "", "[perturbed] lives on a different phase space than [map]".into());
            }
        }
        let space = t.as_ref().map(|m| m.space()).or(cfg.space);
        if let (Some(p), Some(sp)) = (cfg.p, space) {
            if !sp.contains(p) {
                ck.top("p", format!("`p` = {p} is not a point of the {}", sp.name()));
            }
        }

        let method = match cfg.method.as_deref().unwrap_or("exact_pwl") {
            "exact_pwl" => Some(Method::ExactPwl),
            "sampled" => Some(Method::Sampled {
                k: cfg.samples.unwrap_or(DEFAULT_SAMPLES),
            }),
            "jittered" => Some(Method::Jittered {
                k: cfg.samples.unwrap_or(DEFAULT_SAMPLES),
                seed,
            }),
            other => {
                ck.top("method", format!("unknown method `{other}`; use exact_pwl, sampled or jittered"));
                None
            }
        };
        if matches!(method, Some(Method::ExactPwl)) && cfg.samples.is_some() {
            ck.top("samples", "`samples` only applies to the sampled and jittered methods".into());
        }
        if let (Some(Method::ExactPwl), Some(m)) = (method, &t) {
            if m.linear_pieces().is_none() && kind.accepted().contains(&"method") {
                ck.top("method", format!("exact_pwl needs a piecewise-linear map, and {} is not", m.label()));
            }
        }
        if let (Some(Method::ExactPwl), Some(m), ExperimentKind::Hausdorff) = (method, &s, kind) {
            if m.linear_pieces().is_none() {
                ck.top("method", format!("exact_pwl needs a piecewise-linear map, and {} is not", m.label()));
            }
        }
        let mode = cfg.mode.unwrap_or(SetMode::Finite);
        let grid = match (cfg.grid, space) {
            (Some(n), Some(sp)) if (2..=MAX_GRID).contains(&n) => Grid::new(sp, n).ok(),
            _ => None,
        };

        let family = match cfg.perturbation_family.as_deref().unwrap_or("additive_constant") {
            "additive_constant" => {
                for key in ["bump_center", "bump_width"] {
                    if table.contains_key(key) {
                        ck.top(key, format!("`{key}` only applies to perturbation_family = \"smooth_bump\""));
                    }
                }
                Some(PerturbationFamily::AdditiveConstant)
            }
            "smooth_bump" => match (cfg.bump_center, cfg.bump_width) {
                (Some(center), Some(width)) => Some(PerturbationFamily::SmoothBump { center, width }),
                _ => {
                    ck.top(
                        "perturbation_family",
                        "smooth_bump needs both `bump_center` and `bump_width`".into(),
                    );
                    None
                }
            },
            other => {
                ck.top(
                    "perturbation_family",
                    format!("unknown perturbation family `{other}`; use additive_constant or smooth_bump"),
                );
                None
            }
        };

        if let (Some(PerturbationFamily::SmoothBump { .. }), Some(Method::ExactPwl)) = (family, method) {
            ck.top("method", "smooth_bump perturbations are not piecewise linear; use the sampled or jittered method".into());
        }

        let observable = cfg.observable.as_deref().zip(space).and_then(|(o, sp)| match parse_observable(sp, o) {
            Ok(o) => Some(o),
            Err(m) => {
                ck.top("observable", m);
                None
            }
        });
        let observables = cfg.observables.as_ref().zip(space).and_then(|(list, sp)| {
            if list.is_empty() {
                ck.top("observables", "`observables` must not be empty".into());
                return None;
            }
            let parsed: Vec<_> = list.iter().map(|o| parse_observable(sp, o)).collect();
            let mut ok = Vec::new();
            for r in parsed {
                match r {
                    Ok(o) => ok.push(o),
                    Err(m) => ck.top("observables", m),
                }
            }
            (ok.len() == list.len()).then_some(ok)
        });
        let set = cfg.intervals.as_ref().zip(space).and_then(|(iv, sp)| {
            let arcs: Vec<(f64, f64)> = iv.iter().map(|&[a, b]| (a, b)).collect();
            match IntervalUnion::new(sp, &arcs) {
                Ok(u) => Some(u),
                Err(e) => {
                    ck.top("intervals", format!("`intervals`: {e}"));
                    None
                }
            }
        });
        if let (Some(set), Some(beta), Some(alpha)) = (&set, cfg.beta, cfg.alpha) {
            if beta > 0.0 && alpha > 0.0 && alpha < 0.5 {
                if let Err(e) = chi_functions(set.clone(), beta, alpha) {
                    ck.top("beta", e.to_string());
                }
            }
        }
        let params = match (cfg.eps, cfg.sigma) {
            (Some(eps), Some(sigma)) => {
                let p = SearchParams {
                    eps,
                    sigma,
                    horizon: cfg.horizon.unwrap_or(DEFAULT_SEARCH_HORIZON),
                    window: cfg.window.unwrap_or(DEFAULT_WINDOW),
                };
                p.validate().ok().map(|_| p)
            }
            _ => None,
        };
        let candidates = CandidateSpec {
            grid: cfg.candidates.unwrap_or(CandidateSpec::default().grid),
            max_period: cfg.max_period.unwrap_or(CandidateSpec::default().max_period),
        };

        let measure = |support: &Option<Vec<f64>>, weights: &Option<Vec<f64>>, ck: &mut Checker, key: &str| {
            let (sp, s, w) = (cfg.space?, support.clone()?, weights.clone()?);
            match DiscreteMeasure::new(sp, s, w) {
                Ok(m) => Some(m),
                Err(e) => {
                    ck.top(key, format!("`{key}`: {e}"));
                    None
                }
            }
        };
        let a = measure(&cfg.a_support, &cfg.a_weights, &mut ck, "a_support");
        let b = measure(&cfg.b_support, &cfg.b_weights, &mut ck, "b_support");

        if !ck.diags.is_empty() {
            ck.diags.sort_by_key(|d| d.line);
            return Err(ck.diags);
        }
        let missing = || {
            vec![Diagnostic {
                line: None,
                key: None,
                message: "config is incomplete".into(),
            }]
        };
        let window = cfg.window.unwrap_or(DEFAULT_WINDOW);
        use ExperimentKind as K;
        let job = match kind {
            K::Ulam => Job::Ulam {
                map: t.ok_or_else(missing)?,
                grid: grid.ok_or_else(missing)?,
                method: method.ok_or_else(missing)?,
                mode,
            },
            K::Wasserstein => Job::Wasserstein {
                a: a.ok_or_else(missing)?,
                b: b.ok_or_else(missing)?,
            },
            K::Hausdorff => Job::Hausdorff {
                t: t.ok_or_else(missing)?,
                s: s.ok_or_else(missing)?,
                grid: grid.ok_or_else(missing)?,
                method: method.ok_or_else(missing)?,
                mode,
            },
            K::Birkhoff => {
                let map = t.ok_or_else(missing)?;
                let direction = cfg.direction.unwrap_or(Direction::Forward);
                if direction == Direction::TwoSided && !map.inverse_available() {
                    return Err(vec![Diagnostic {
                        line: key_line(text, None, "direction"),
                        key: Some("direction".into()),
                        message: format!("two_sided orbits need an invertible map, and {} is not", map.label()),
                    }]);
                }
                Job::Birkhoff {
                    map,
                    p: cfg.p.ok_or_else(missing)?,
                    horizon: cfg.horizon.ok_or_else(missing)?,
                    window,
                    direction,
                    observable: observable.ok_or_else(missing)?,
                    set,
                }
            }
            K::Semicontinuity => Job::Semicontinuity {
                t: t.ok_or_else(missing)?,
                family: family.ok_or_else(missing)?,
                deltas: cfg.deltas.clone().ok_or_else(missing)?,
                grid: grid.ok_or_else(missing)?,
                method: method.ok_or_else(missing)?,
                mode,
            },
            K::ContinuityProbe => Job::ContinuityProbe {
                t: t.ok_or_else(missing)?,
                family: family.ok_or_else(missing)?,
                deltas: cfg.deltas.clone().ok_or_else(missing)?,
                grid: grid.ok_or_else(missing)?,
                method: method.ok_or_else(missing)?,
                mode,
                floor_factor: cfg.floor_factor.unwrap_or(DEFAULT_FLOOR_FACTOR),
            },
            K::CesaroSearch => Job::CesaroSearch {
                t: t.ok_or_else(missing)?,
                s: s.ok_or_else(missing)?,
                p: cfg.p.ok_or_else(missing)?,
                observable: observable.ok_or_else(missing)?,
                params: params.ok_or_else(missing)?,
                candidates,
            },
            K::VisitSearch => Job::VisitSearch {
                t: t.ok_or_else(missing)?,
                s: s.ok_or_else(missing)?,
                p: cfg.p.ok_or_else(missing)?,
                set: set.ok_or_else(missing)?,
                beta: cfg.beta.ok_or_else(missing)?,
                alpha: cfg.alpha.ok_or_else(missing)?,
                params: params.ok_or_else(missing)?,
                candidates,
            },
            K::LipschitzSweep => Job::LipschitzSweep {
                t: t.ok_or_else(missing)?,
                s: s.ok_or_else(missing)?,
                p: cfg.p.ok_or_else(missing)?,
                lipschitz: cfg.lipschitz.ok_or_else(missing)?,
                observables: observables.ok_or_else(missing)?,
                params: params.ok_or_else(missing)?,
                candidates,
            },
        };
        Ok(Plan { kind, job, seed, output })
    }
}

fn toml_diag(text: &str, e: &toml::de::Error) -> Diagnostic {
    Diagnostic {
        line: e.span().map(|s| line_of_offset(text, s.start)),
        key: None,
        message: e.message().to_string(),
    }
}

/// Every problem `run` would reject the config for; empty when it would run.
pub fn validate(text: &str) -> Vec<Diagnostic> {
    match ExperimentConfig::plan(text, None) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ULAM: &str = "experiment = \"ulam\"\ngrid = 64\n\n[map]\nfamily = \"doubling\"\n";

    #[test]
    fn well_formed_configs_pass() {
        assert_eq!(validate(ULAM), vec![]);
        let search = r#"
experiment = "cesaro_search"
p = 0.0
observable = "cos:1"
eps = 0.1
sigma = 0.05

[map]
family = "doubling"

[perturbed]
family = "doubling"
[perturbed.perturbation]
kind = "additive_constant"
amplitude = 0.01
"#;
        assert_eq!(validate(search), vec![]);
    }

    #[test]
    fn alpha_outside_range_is_reported_on_its_line() {
        let text = r#"experiment = "visit_search"
p = 0.0
intervals = [[0.9, 1.1]]
beta = 0.02
alpha = 0.7
eps = 0.1
sigma = 0.05
[map]
family = "doubling"
[perturbed]
family = "doubling"
"#;
        let d = validate(text);
        assert_eq!(d.len(), 1, "{d:?}");
        assert_eq!(d[0].line, Some(5));
        assert!(d[0].message.contains("(0, 1/2)"), "{}", d[0]);
        assert_eq!(d[0].to_string(), "line 5: `alpha` = 0.7 is outside (0, 1/2)");
    }

    #[test]
    fn missing_grid_names_the_key() {
        let d = validate("experiment = \"ulam\"\n[map]\nfamily = \"doubling\"\n");
        assert_eq!(d.len(), 1);
        assert!(d[0].message.contains("`grid`"), "{}", d[0]);
        assert_eq!(d[0].line, Some(1));
    }

    #[test]
    fn unknown_and_misplaced_keys() {
        let d = validate(&format!("{ULAM}colour = 3\n"));
        assert_eq!(d[0].line, Some(6), "{d:?}");
        assert!(d[0].message.contains("colour"));
        let d = validate("experiment = \"ulam\"\ngrid = 64\neps = 0.1\n[map]\nfamily = \"doubling\"\n");
        assert_eq!((d[0].line, d[0].key.as_deref()), (Some(3), Some("eps")));
        let d = validate("experiment = \"orbitz\"\n");
        assert_eq!(d[0].line, Some(1));
    }

    #[test]
    fn map_errors_point_at_the_section() {
        let d = validate("experiment = \"ulam\"\ngrid = 64\n\n[map]\nfamily = \"henon\"\n");
        assert_eq!(d[0].line, Some(4));
        assert!(d[0].message.contains("henon"));
        let d = validate("experiment = \"ulam\"\ngrid = 64\n[map]\nfamily = \"logistic\"\nparams = [3.9]\n");
        assert!(d[0].message.contains("exact_pwl"), "{d:?}");
        assert_eq!(validate("experiment = \"ulam\"\ngrid = 64\nmethod = \"sampled\"\n[map]\nfamily = \"logistic\"\nparams = [3.9]\n"), vec![]);
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let d = validate("experiment = \"ulam\"\ngrid = = 3\n");
        assert_eq!(d[0].line, Some(2), "{d:?}");
        let d = validate("experiment = \"ulam\"\ngrid = \"big\"\n[map]\nfamily = \"doubling\"\n");
        assert_eq!(d[0].line, Some(2), "{d:?}");
    }

    #[test]
    fn range_checks() {
        let base = "experiment = \"continuity_probe\"\ngrid = 64\n[map]\nfamily = \"rotation\"\nparams = [0.5]\n";
        assert_eq!(validate(&base.replace("grid = 64", "grid = 64\ndeltas = [0.004, 0.002, 0.001]")), vec![]);
        let d = validate(&base.replace("grid = 64", "grid = 64\ndeltas = [0.001, 0.002, 0.004]"));
        assert!(d[0].message.contains("decreasing"));
        let d = validate(&base.replace("grid = 64", "grid = 64\ndeltas = [0.004, 0.002]"));
        assert!(d[0].message.contains("at least 3"));
        let d = validate(&base.replace("grid = 64", "grid = 1\ndeltas = [0.004, 0.002, 0.001]"));
        assert_eq!(d[0].key.as_deref(), Some("grid"));
    }

    #[test]
    fn observables_parse() {
        let o = parse_observable(PhaseSpace::Circle, "0.5*cos:1").unwrap();
        assert_eq!(o.eval(0.0), 0.5);
        assert!((parse_observable(PhaseSpace::Circle, "dist:0.25").unwrap().eval(0.9) - 0.35).abs() < 1e-15);
        assert_eq!(parse_observable(PhaseSpace::Circle, "const:2").unwrap().eval(0.3), 2.0);
        assert!(parse_observable(PhaseSpace::Circle, "tan:1").is_err());
        assert!(parse_observable(PhaseSpace::Circle, "cos").is_err());
    }

    #[test]
    fn seed_override() {
        let text = format!("seed = 5\n{ULAM}");
        assert_eq!(ExperimentConfig::plan(&text, None).unwrap().seed, 5);
        assert_eq!(ExperimentConfig::plan(&text, Some(9)).unwrap().seed, 9);
        assert_eq!(ExperimentConfig::plan(ULAM, None).unwrap().seed, 0);
    }
}
