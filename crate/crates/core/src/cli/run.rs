use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::{Job, Plan};
use crate::birkhoff::{cesaro_from_orbit, orbit, stats_csv, visit_frequency};
use crate::error::Result;
use crate::measures::{hausdorff_distance, w1_distance, w1_transport, LipschitzTestSet, MeasureSet};
use crate::stability::{
    candidates_for, cesaro_stability_search, continuity_probe, lipschitz_uniform_experiment, semicontinuity_experiment,
    visit_stability_experiment, C0_GRID,
};
use crate::systems::c0_distance_pair;
use crate::ulam::{build_transfer_matrix, ergodic_decomposition};

/// One output file: a name relative to the output directory and its body,
/// which goes below the provenance header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub body: String,
}

/// What a run produced. `success` is `None` for experiments without a pass/fail notion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub summary: String,
    pub success: Option<bool>,
    pub artifacts: Vec<Artifact>,
}

/// Lowercase hex SHA-256 of the config text.
pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// `# key=value` lines that open every output file.
pub fn header(kind: &str, hash: &str, seed: u64, timestamp: Option<u64>) -> String {
    let mut h = format!("# experiment={kind}\n# config_hash={hash}\n# seed={seed}\n");
    if let Some(t) = timestamp {
        let _ = writeln!(h, "# created_unix={t}");
    }
    h
}

/// The file body with any leading `#` header lines removed.
pub fn strip_header(text: &str) -> &str {
    let mut rest = text;
    while rest.starts_with('#') {
        rest = rest.split_once('\n').map_or("", |(_, r)| r);
    }
    rest
}

fn csv_rows<T: serde::Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

#[derive(serde::Serialize)]
struct StationaryRow {
    class: usize,
    cell: usize,
    center: f64,
    weight: f64,
}

#[derive(serde::Serialize)]
struct SearchRow<'a> {
    observable: &'a str,
    phi_minus: f64,
    phi_plus: f64,
    survivors: usize,
    q_plus: Option<f64>,
    q_plus_visits: Option<f64>,
    q_plus_lower: Option<f64>,
    q_minus: Option<f64>,
    q_minus_visits: Option<f64>,
    q_minus_upper: Option<f64>,
    success_plus: bool,
    success_minus: bool,
    success: bool,
}

impl<'a> SearchRow<'a> {
    fn new(r: &'a crate::stability::CesaroSearchResult) -> Self {
        Self {
            observable: &r.observable,
            phi_minus: r.phi_minus,
            phi_plus: r.phi_plus,
            survivors: r.survivors,
            q_plus: r.q_plus.as_ref().map(|q| q.point),
            q_plus_visits: r.q_plus.as_ref().map(|q| q.visits.frequency),
            q_plus_lower: r.q_plus.as_ref().map(|q| q.cesaro.lower_proxy),
            q_minus: r.q_minus.as_ref().map(|q| q.point),
            q_minus_visits: r.q_minus.as_ref().map(|q| q.visits.frequency),
            q_minus_upper: r.q_minus.as_ref().map(|q| q.cesaro.upper_proxy),
            success_plus: r.success_plus,
            success_minus: r.success_minus,
            success: r.success,
        }
    }
}

#[derive(serde::Serialize)]
struct VisitRow {
    role: &'static str,
    point: f64,
    frequency: f64,
    tail_lower: f64,
    tail_upper: f64,
    chi_minus_average: f64,
    chi_plus_average: f64,
    target: f64,
    success: bool,
}

/// Runs a checked plan; nothing is written here.
pub fn execute(plan: &Plan) -> Result<RunOutcome> {
    let out = &plan.output;
    let art = |suffix: &str, body: String| Artifact {
        name: format!("{out}{suffix}"),
        body,
    };
    let outcome = match &plan.job {
        Job::Ulam { map, grid, method, mode } => {
            let p = build_transfer_matrix(map, *grid, *method)?;
            let d = ergodic_decomposition(&p)?;
            let mut rows = Vec::new();
            for (k, (cells, w)) in d.classes.iter().zip(&d.weights).enumerate() {
                for (&cell, &weight) in cells.iter().zip(w) {
                    rows.push(StationaryRow {
                        class: k,
                        cell,
                        center: grid.center(cell),
                        weight,
                    });
                }
            }
            let summary = format!("map = {}\nmethod = {}\nmode = {}\n{}", map.label(), method.label(), mode.name(), d.report());
            let set = MeasureSet::new(d.stationaries.clone(), mode.is_hull())?;
            RunOutcome {
                summary: summary.clone(),
                success: None,
                artifacts: vec![
                    art("_stationary.csv", csv_rows(rows)?),
                    art("_matrix.csv", p.to_triplet_csv()),
                    art("_measures.txt", set.to_text()),
                    art("_summary.txt", summary),
                ],
            }
        }
        Job::Wasserstein { a, b } => {
            #[derive(serde::Serialize)]
            struct Row {
                space: &'static str,
                w1: f64,
                w1_transport: f64,
            }
            let row = Row {
                space: a.space().name(),
                w1: w1_distance(a, b)?,
                w1_transport: w1_transport(a, b)?,
            };
            let summary = format!("w1 = {}\nw1_transport = {}\n", row.w1, row.w1_transport);
            RunOutcome {
                summary,
                success: None,
                artifacts: vec![art(".csv", csv_rows([row])?)],
            }
        }
        Job::Hausdorff { t, s, grid, method, mode } => {
            #[derive(serde::Serialize)]
            struct Row {
                c0_distance: f64,
                directed_ts: f64,
                directed_st: f64,
                sum: f64,
                extremes_t: usize,
                extremes_s: usize,
            }
            let set = |m| -> Result<MeasureSet> {
                let d = ergodic_decomposition(&build_transfer_matrix(m, *grid, *method)?)?;
                MeasureSet::new(d.stationaries, mode.is_hull())
            };
            let (mt, ms) = (set(t)?, set(s)?);
            let h = hausdorff_distance(&mt, &ms)?;
            let row = Row {
                c0_distance: c0_distance_pair(t, s, C0_GRID)?.0,
                directed_ts: h.directed_pq,
                directed_st: h.directed_qp,
                sum: h.sum,
                extremes_t: mt.len(),
                extremes_s: ms.len(),
            };
            let summary = format!(
                "t = {}\ns = {}\ngrid = {}\nmethod = {}\nmode = {}\nc0_distance = {}\ndirected_ts = {}\ndirected_st = {}\nsum = {}\n",
                t.label(),
                s.label(),
                grid.n(),
                method.label(),
                mode.name(),
                row.c0_distance,
                row.directed_ts,
                row.directed_st,
                row.sum
            );
            RunOutcome {
                summary: summary.clone(),
                success: None,
                artifacts: vec![art(".csv", csv_rows([row])?), art("_summary.txt", summary)],
            }
        }
        Job::Birkhoff {
            map,
            p,
            horizon,
            window,
            direction,
            observable,
            set,
        } => {
            let o = orbit(map, *p, *horizon, *direction)?;
            let c = cesaro_from_orbit(&o, |x| observable.eval(x), *window)?;
            let mut row = c.row();
            if let Some(v) = set {
                row.frequency = Some(visit_frequency(&o, |x| v.contains(x), *window)?.frequency);
            }
            #[derive(serde::Serialize)]
            struct Avg {
                step: usize,
                average: f64,
            }
            let averages = c.running_averages.iter().enumerate().map(|(k, &average)| Avg { step: k, average });
            let summary = format!(
                "map = {}\np = {p}\nobservable = {}\ndirection = {direction:?}\nhorizon = {horizon}\nlower = {}\nupper = {}\nfinal = {}\n{}",
                map.label(),
                observable.name(),
                c.lower_proxy,
                c.upper_proxy,
                c.final_average(),
                row.frequency.map_or(String::new(), |f| format!("frequency = {f}\n"))
            );
            RunOutcome {
                summary: summary.clone(),
                success: None,
                artifacts: vec![
                    art(".csv", stats_csv(&[row])?),
                    art("_averages.csv", csv_rows(averages)?),
                    art("_summary.txt", summary),
                ],
            }
        }
        Job::Semicontinuity {
            t,
            family,
            deltas,
            grid,
            method,
            mode,
        } => {
            let tests = LipschitzTestSet::default_for(t.space());
            let r = semicontinuity_experiment(t, *family, deltas, *grid, *method, *mode, &tests)?;
            let ok = r.rows.iter().all(|row| row.max_residual <= row.bound + 1e-6 && row.directed_st <= row.bound + 1e-6);
            let summary = format!("{}within_bound = {ok}\n", r.summary());
            RunOutcome {
                summary: summary.clone(),
                success: Some(ok),
                artifacts: vec![art(".csv", r.to_csv()?), art("_summary.txt", summary)],
            }
        }
        Job::ContinuityProbe {
            t,
            family,
            deltas,
            grid,
            method,
            mode,
            floor_factor,
        } => {
            let r = continuity_probe(t, *family, deltas, *grid, *method, *mode, *floor_factor)?;
            let summary = r.summary();
            RunOutcome {
                summary: summary.clone(),
                success: None,
                artifacts: vec![art(".csv", r.report.to_csv()?), art("_summary.txt", summary)],
            }
        }
        Job::CesaroSearch {
            t,
            s,
            p,
            observable,
            params,
            candidates,
        } => {
            let cands = candidates_for(s, candidates);
            let r = cesaro_stability_search(t, s, *p, observable, params, &cands)?;
            let summary = r.summary();
            RunOutcome {
                summary: summary.clone(),
                success: Some(r.success),
                artifacts: vec![
                    art(".csv", csv_rows([SearchRow::new(&r)])?),
                    art("_candidates.csv", r.candidates_csv()?),
                    art("_summary.txt", summary),
                ],
            }
        }
        Job::VisitSearch {
            t,
            s,
            p,
            set,
            beta,
            alpha,
            params,
            candidates,
        } => {
            let cands = candidates_for(s, candidates);
            let r = visit_stability_experiment(t, s, *p, set, *beta, *alpha, params, &cands)?;
            let mut rows = Vec::new();
            if let (Some((q, v)), Some((lo, hi))) = (&r.q_plus, r.sandwich_plus) {
                rows.push(VisitRow {
                    role: "q_plus",
                    point: *q,
                    frequency: v.frequency,
                    tail_lower: v.tail_lower_proxy,
                    tail_upper: v.tail_upper_proxy,
                    chi_minus_average: lo,
                    chi_plus_average: hi,
                    target: r.target_lower,
                    success: r.success_plus,
                });
            }
            if let (Some((q, v)), Some((lo, hi))) = (&r.q_minus, r.sandwich_minus) {
                rows.push(VisitRow {
                    role: "q_minus",
                    point: *q,
                    frequency: v.frequency,
                    tail_lower: v.tail_lower_proxy,
                    tail_upper: v.tail_upper_proxy,
                    chi_minus_average: lo,
                    chi_plus_average: hi,
                    target: r.target_upper,
                    success: r.success_minus,
                });
            }
            let body = if rows.is_empty() {
                "role,point,frequency,tail_lower,tail_upper,chi_minus_average,chi_plus_average,target,success\n".to_string()
            } else {
                csv_rows(rows)?
            };
            let summary = r.summary();
            RunOutcome {
                summary: summary.clone(),
                success: Some(r.success),
                artifacts: vec![art(".csv", body), art("_summary.txt", summary)],
            }
        }
        Job::LipschitzSweep {
            t,
            s,
            p,
            lipschitz,
            observables,
            params,
            candidates,
        } => {
            let cands = candidates_for(s, candidates);
            let r = lipschitz_uniform_experiment(t, s, *p, *lipschitz, observables, params, &cands)?;
            let mut summary = format!("lipschitz = {lipschitz}\ndelta = {}\n", r.delta);
            for res in &r.results {
                let _ = writeln!(summary, "{} success = {}", res.observable, res.success);
            }
            let _ = writeln!(summary, "success = {}", r.all_succeed());
            RunOutcome {
                summary: summary.clone(),
                success: Some(r.all_succeed()),
                artifacts: vec![
                    art(".csv", csv_rows(r.results.iter().map(SearchRow::new))?),
                    art("_summary.txt", summary),
                ],
            }
        }
    };
    Ok(outcome)
}

/// Writes every artifact under `dir` with the provenance header; returns the paths.
pub fn write_artifacts(dir: &Path, head: &str, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.name);
            fs::write(&path, format!("{head}{}", a.body))?;
            Ok(path)
        })
        .collect()
}
