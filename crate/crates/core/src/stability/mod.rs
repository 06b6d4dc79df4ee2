//! Experiment drivers for the stability of invariant measures and orbit
//! statistics under small perturbations of a map.

mod search;

pub use search::{
    candidates_for, cesaro_stability_search, lipschitz_uniform_experiment, mass_concentration_check,
    periodic_points, point_search_in_set, visit_stability_experiment, CandidateSpec, CandidateStats,
    CesaroSearchResult, LipschitzSweep, MassCheck, Observable, PointSearch, SearchParams, SearchPoint,
    VisitSearchResult,
};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::measures::{hausdorff_distance, invariance_residual, LipschitzTestSet, MeasureSet, SetMode};
use crate::systems::{c0_distance_pair, perturb, MapSpec, PerturbationSpec};
use crate::ulam::{ergodic_decomposition, build_transfer_matrix, Grid, Method};

/// Grid used for sup-distance estimates between a map and its perturbation.
pub const C0_GRID: usize = 4096;
/// Default multiple of `delta_max + 2h` a directed gap must exceed to count as discontinuity evidence.
pub const DEFAULT_FLOOR_FACTOR: f64 = 2.0;
/// Slack allowed when checking that a column does not grow as `delta` shrinks.
const MONOTONE_TOL: f64 = 1e-9;

/// A one-parameter family of perturbations, indexed by its sup-norm size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PerturbationFamily {
    AdditiveConstant,
    SmoothBump { center: f64, width: f64 },
}

impl PerturbationFamily {
    pub fn at(&self, delta: f64) -> PerturbationSpec {
        match *self {
            PerturbationFamily::AdditiveConstant => PerturbationSpec::additive(delta),
            PerturbationFamily::SmoothBump { center, width } => PerturbationSpec::smooth_bump(center, width, delta),
        }
    }

    /// `S_delta`; `delta = 0` gives `T` itself.
    pub fn apply(&self, t: &MapSpec, delta: f64) -> Result<MapSpec> {
        if delta == 0.0 {
            return Ok(t.clone());
        }
        perturb(t, self.at(delta))
    }
}

/// One line of a perturbation sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityRow {
    pub delta: f64,
    pub c0_distance: f64,
    pub c0_inverse_distance: Option<f64>,
    /// `max over mu_T of W1(mu_T, M(S))`.
    pub directed_ts: f64,
    /// `max over mu_S of W1(mu_S, M(T))`.
    pub directed_st: f64,
    pub sum: f64,
    /// `max over mu_S of` the invariance residual under `T`.
    pub max_residual: f64,
    /// `delta + 2h`.
    pub bound: f64,
    pub extremes_t: usize,
    pub extremes_s: usize,
}

/// Sweep of perturbation sizes with set distances and residuals per size.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub base: String,
    pub grid_n: usize,
    pub method: Method,
    pub mode: SetMode,
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    pub fn deltas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.delta).collect()
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ascii"))
    }

    pub fn summary(&self) -> String {
        let worst_residual = self.rows.iter().map(|r| r.max_residual - r.bound).fold(f64::NEG_INFINITY, f64::max);
        format!(
            "base = {}\ngrid = {}\nmethod = {}\nmode = {}\ndeltas = {}\nmax_residual_minus_bound = {worst_residual:e}\n",
            self.base,
            self.grid_n,
            self.method.label(),
            self.mode.name(),
            self.rows.len()
        )
    }
}

fn check_schedule(deltas: &[f64]) -> Result<()> {
    if deltas.is_empty() {
        return Err(invalid("empty perturbation schedule"));
    }
    if deltas.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
        return Err(invalid("perturbation sizes must be finite and nonnegative"));
    }
    if deltas.windows(2).any(|w| w[1] > w[0]) {
        return Err(invalid("perturbation sizes must be listed in decreasing order"));
    }
    Ok(())
}

fn ulam_set(spec: &MapSpec, grid: Grid, method: Method, mode: SetMode) -> Result<MeasureSet> {
    let p = build_transfer_matrix(spec, grid, method)?;
    MeasureSet::new(ergodic_decomposition(&p)?.stationaries, mode.is_hull())
}

/// For each `delta`: the Ulam invariant sets of `T` and `S_delta`, both
/// directed distances, and how far each `mu_S` is from `T`-invariance.
pub fn semicontinuity_experiment(
    t: &MapSpec,
    family: PerturbationFamily,
    deltas: &[f64],
    grid: Grid,
    method: Method,
    mode: SetMode,
    tests: &LipschitzTestSet,
) -> Result<StabilityReport> {
    check_schedule(deltas)?;
    let m_t = ulam_set(t, grid, method, mode)?;
    let rows = deltas
        .par_iter()
        .map(|&delta| -> Result<StabilityRow> {
            let s = family.apply(t, delta)?;
            let m_s = ulam_set(&s, grid, method, mode)?;
            let d = hausdorff_distance(&m_t, &m_s)?;
            let mut max_residual = 0.0f64;
            for mu in m_s.extremes() {
                max_residual = max_residual.max(invariance_residual(mu, t, tests)?);
            }
            let (c0, c0_inv) = c0_distance_pair(t, &s, C0_GRID)?;
            Ok(StabilityRow {
                delta,
                c0_distance: c0,
                c0_inverse_distance: c0_inv,
                directed_ts: d.directed_pq,
                directed_st: d.directed_qp,
                sum: d.sum,
                max_residual,
                bound: delta + 2.0 * grid.h(),
                extremes_t: m_t.len(),
                extremes_s: m_s.len(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityReport {
        base: t.label(),
        grid_n: grid.n(),
        method,
        mode,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityClass {
    ContinuityConsistent,
    DiscontinuityEvidence,
}

impl ContinuityClass {
    pub fn name(self) -> &'static str {
        match self {
            ContinuityClass::ContinuityConsistent => "continuity_consistent",
            ContinuityClass::DiscontinuityEvidence => "discontinuity_evidence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityProbe {
    pub classification: ContinuityClass,
    /// `factor * (delta_max + 2h)`.
    pub floor: f64,
    pub report: StabilityReport,
}

impl ContinuityProbe {
    pub fn summary(&self) -> String {
        format!(
            "{}floor = {}\nclassification = {}\n",
            self.report.summary(),
            self.floor,
            self.classification.name()
        )
    }
}

/// Sweeps `delta` towards 0 and classifies `T`: evidence of discontinuity when
/// `M(T)` keeps a measure far from every `M(S_delta)` (the `T -> S` term stays
/// above the floor at every size) while the `S -> T` term does not grow.
pub fn continuity_probe(
    t: &MapSpec,
    family: PerturbationFamily,
    deltas: &[f64],
    grid: Grid,
    method: Method,
    mode: SetMode,
    floor_factor: f64,
) -> Result<ContinuityProbe> {
    if deltas.len() < 3 {
        return Err(invalid(format!("a continuity probe needs at least 3 perturbation sizes, got {}", deltas.len())));
    }
    if !(floor_factor > 0.0) {
        return Err(invalid("floor factor must be positive"));
    }
    let tests = LipschitzTestSet::default_for(t.space());
    let report = semicontinuity_experiment(t, family, deltas, grid, method, mode, &tests)?;
    let floor = floor_factor * (deltas[0] + 2.0 * grid.h());
    let gap_persists = report.rows.iter().all(|r| r.directed_ts > floor);
    let st_shrinks = report.rows.windows(2).all(|w| w[1].directed_st <= w[0].directed_st + MONOTONE_TOL);
    let classification = if gap_persists && st_shrinks {
        ContinuityClass::DiscontinuityEvidence
    } else {
        ContinuityClass::ContinuityConsistent
    };
    Ok(ContinuityProbe {
        classification,
        floor,
        report,
    })
}
