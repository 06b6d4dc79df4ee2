use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::run::{config_hash, execute, Artifact, RunOutcome};
use crate::birkhoff::{eta, eta_deficit, orbit, psi, BumpSpec, Direction, OrbitCloud};
use crate::error::{config, Result};
use crate::measures::{hausdorff_distance, w1_cdf, w1_transport, DiscreteMeasure, MeasureSet};
use crate::systems::{MapSpec, PhaseSpace};

/// Names accepted by `demo`, in the order `determinism` replays them.
pub const DEMOS: [&str; 9] = [
    "w1-oracle",
    "ulam-exactness",
    "semicontinuity",
    "discontinuity",
    "cesaro-search",
    "bump",
    "visit-search",
    "hausdorff-properties",
    "determinism",
];

const ULAM_DOUBLING: &str = r#"experiment = "ulam"
output = "ulam_doubling"
grid = 64
method = "exact_pwl"

[map]
family = "doubling"
"#;

const ULAM_IDENTITY: &str = r#"experiment = "ulam"
output = "ulam_identity"
grid = 8
method = "exact_pwl"

[map]
family = "identity"
"#;

const SEMICONTINUITY: &str = r#"experiment = "semicontinuity"
grid = 256
method = "exact_pwl"
mode = "hull"
deltas = [0.04, 0.02, 0.01]
perturbation_family = "additive_constant"

[map]
family = "doubling"
"#;

const DISCONTINUITY_PAIR: &str = r#"experiment = "hausdorff"
output = "rotation_pair"
grid = 64
method = "exact_pwl"
mode = "hull"

[map]
family = "rotation"
params = [0.5]

[perturbed]
family = "rotation"
params = [0.501]
"#;

const DISCONTINUITY_PROBE: &str = r#"experiment = "continuity_probe"
grid = 64
method = "exact_pwl"
mode = "hull"
deltas = [0.004, 0.002, 0.001]

[map]
family = "rotation"
params = [0.5]
"#;

const CESARO_SEARCH: &str = r#"experiment = "cesaro_search"
p = 0.0
observable = "cos:1"
eps = 0.1
sigma = 0.05
horizon = 100000
candidates = 512

[map]
family = "doubling"

[perturbed]
family = "doubling"

[perturbed.perturbation]
kind = "additive_constant"
amplitude = 0.01
"#;

const VISIT_SEARCH: &str = r#"experiment = "visit_search"
p = 0.0
intervals = [[0.9, 1.1]]
beta = 0.02
alpha = 0.25
eps = 0.1
sigma = 0.05
horizon = 100000
candidates = 512

[map]
family = "doubling"

[perturbed]
family = "doubling"

[perturbed.perturbation]
kind = "additive_constant"
amplitude = 0.01
"#;

/// Text of the config files behind a demo; empty for the built-in checks.
pub fn demo_configs(name: &str) -> Result<Vec<&'static str>> {
    Ok(match name {
        "ulam-exactness" => vec![ULAM_DOUBLING, ULAM_IDENTITY],
        "semicontinuity" => vec![SEMICONTINUITY],
        "discontinuity" => vec![DISCONTINUITY_PAIR, DISCONTINUITY_PROBE],
        "cesaro-search" => vec![CESARO_SEARCH],
        "visit-search" => vec![VISIT_SEARCH],
        "w1-oracle" | "bump" | "hausdorff-properties" | "determinism" => vec![],
        other => return Err(unknown(other)),
    })
}

fn unknown(name: &str) -> crate::Error {
    config(format!("unknown demo `{name}`; available: {}", DEMOS.join(", ")))
}

/// One finished piece of a demo with the provenance of its files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoPart {
    pub experiment: String,
    pub hash: String,
    pub seed: u64,
    pub outcome: RunOutcome,
}

/// Runs a demo in memory.
pub fn run_demo(name: &str, seed: u64) -> Result<Vec<DemoPart>> {
    let builtin = |f: fn(u64) -> Result<RunOutcome>| -> Result<Vec<DemoPart>> {
        Ok(vec![DemoPart {
            experiment: format!("demo:{name}"),
            hash: config_hash(&format!("demo:{name}")),
            seed,
            outcome: f(seed)?,
        }])
    };
    match name {
        "w1-oracle" => builtin(w1_oracle),
        "bump" => builtin(bump_conformance),
        "hausdorff-properties" => builtin(hausdorff_properties),
        "determinism" => builtin(determinism),
        _ => demo_configs(name)?
            .into_iter()
            .map(|text| {
                let plan = ExperimentConfig::plan(text, Some(seed)).map_err(|d| {
                    config(d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "))
                })?;
                Ok(DemoPart {
                    experiment: plan.kind.name().to_string(),
                    hash: config_hash(text),
                    seed: plan.seed,
                    outcome: execute(&plan)?,
                })
            })
            .collect(),
    }
}

fn random_measure(rng: &mut ChaCha8Rng, space: PhaseSpace, max_atoms: usize) -> DiscreteMeasure {
    let k = rng.random_range(1..=max_atoms);
    let support: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let head: f64 = weights[..k - 1].iter().sum();
    weights[k - 1] = 1.0 - head;
    DiscreteMeasure::new(space, support, weights).expect("random weights are normalised")
}

fn csv_body<T: serde::Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is ascii"))
}

fn w1_oracle(seed: u64) -> Result<RunOutcome> {
    #[derive(serde::Serialize)]
    struct Row {
        pair: usize,
        atoms_a: usize,
        atoms_b: usize,
        w1_transport: f64,
        w1_cdf: f64,
        abs_diff: f64,
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(200);
    for pair in 0..200 {
        let a = random_measure(&mut rng, PhaseSpace::Interval, 12);
        let b = random_measure(&mut rng, PhaseSpace::Interval, 12);
        let (lp, cdf) = (w1_transport(&a, &b)?, w1_cdf(&a, &b)?);
        rows.push(Row {
            pair,
            atoms_a: a.len(),
            atoms_b: b.len(),
            w1_transport: lp,
            w1_cdf: cdf,
            abs_diff: (lp - cdf).abs(),
        });
    }
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let pass = worst <= 1e-9;
    Ok(RunOutcome {
        summary: format!("pairs = 200\nmax_abs_diff = {worst:e}\npass = {pass}\n"),
        success: Some(pass),
        artifacts: vec![Artifact {
            name: "w1_oracle.csv".into(),
            body: csv_body(rows)?,
        }],
    })
}

fn bump_conformance(seed: u64) -> Result<RunOutcome> {
    #[derive(serde::Serialize)]
    struct Row {
        t: f64,
        eta: f64,
        slope: f64,
    }
    let alpha = 0.25;
    let n = 10_000;
    let (lo, hi) = (0.5, 1.25);
    let step = (hi - lo) / (n - 1) as f64;
    let mut rows = Vec::with_capacity(n);
    let (mut plateau_ok, mut slope_ok) = (true, true);
    for i in 0..n {
        let t = lo + i as f64 * step;
        let e = eta(t, alpha);
        let d = step / 4.0;
        let slope = if e > 0.5 {
            -(eta_deficit(t + d, alpha) - eta_deficit(t - d, alpha)) / (2.0 * d)
        } else {
            (eta(t + d, alpha) - eta(t - d, alpha)) / (2.0 * d)
        };
        if t <= 1.0 - alpha {
            plateau_ok &= e == 1.0;
        } else if t >= 1.0 {
            plateau_ok &= e == 0.0;
        } else if t - d > 1.0 - alpha && t + d < 1.0 {
            slope_ok &= slope < 0.0 && slope > -2.0 / alpha;
        }
        rows.push(Row { t, eta: e, slope });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = orbit(&MapSpec::rotation((5f64.sqrt() - 1.0) / 2.0), rng.random(), 40, Direction::Forward)?;
    let cloud = OrbitCloud::from_orbit(&o)?;
    let bump = BumpSpec::new(alpha, 0.05)?;
    let mut ratio = 0.0f64;
    for _ in 0..10_000 {
        let (x, y): (f64, f64) = (rng.random(), rng.random());
        let d = PhaseSpace::Circle.dist(x, y);
        if d > 0.0 {
            ratio = ratio.max((psi(x, &cloud, &bump) - psi(y, &cloud, &bump)).abs() / d);
        }
    }
    let lipschitz_ok = ratio <= bump.lipschitz() * (1.0 + 1e-9);
    let pass = plateau_ok && slope_ok && lipschitz_ok;
    Ok(RunOutcome {
        summary: format!(
            "alpha = {alpha}\nplateaus = {plateau_ok}\nslopes = {slope_ok}\npsi_ratio = {ratio}\npsi_bound = {}\npass = {pass}\n",
            bump.lipschitz()
        ),
        success: Some(pass),
        artifacts: vec![Artifact {
            name: "bump.csv".into(),
            body: csv_body(rows)?,
        }],
    })
}

fn hausdorff_properties(seed: u64) -> Result<RunOutcome> {
    #[derive(serde::Serialize)]
    struct Row {
        pair: usize,
        hull: bool,
        sum: f64,
        directed_pq: f64,
        directed_qp: f64,
        swapped_sum: f64,
        self_distance: f64,
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(100);
    let mut pass = true;
    for pair in 0..100 {
        let space = if rng.random() { PhaseSpace::Circle } else { PhaseSpace::Interval };
        let hull = rng.random();
        let set = |rng: &mut ChaCha8Rng| {
            let k = rng.random_range(1..=3);
            MeasureSet::new((0..k).map(|_| random_measure(rng, space, 4)).collect(), hull)
        };
        let (p, q) = (set(&mut rng)?, set(&mut rng)?);
        let d = hausdorff_distance(&p, &q)?;
        let swapped = hausdorff_distance(&q, &p)?;
        let own = hausdorff_distance(&p, &p)?;
        pass &= d.sum == swapped.sum && d.sum == d.directed_pq + d.directed_qp && own.sum == 0.0 && d.sum > 0.0;
        rows.push(Row {
            pair,
            hull,
            sum: d.sum,
            directed_pq: d.directed_pq,
            directed_qp: d.directed_qp,
            swapped_sum: swapped.sum,
            self_distance: own.sum,
        });
    }
    Ok(RunOutcome {
        summary: format!("pairs = 100\npass = {pass}\n"),
        success: Some(pass),
        artifacts: vec![Artifact {
            name: "hausdorff_properties.csv".into(),
            body: csv_body(rows)?,
        }],
    })
}

/// Replays every other demo twice and compares the artifact bodies.
fn determinism(seed: u64) -> Result<RunOutcome> {
    #[derive(serde::Serialize)]
    struct Row<'a> {
        demo: &'a str,
        artifact: String,
        identical: bool,
    }
    let mut rows = Vec::new();
    for name in DEMOS.iter().filter(|&&n| n != "determinism") {
        let first = run_demo(name, seed)?;
        let second = run_demo(name, seed)?;
        let a: Vec<&Artifact> = first.iter().flat_map(|p| &p.outcome.artifacts).collect();
        let b: Vec<&Artifact> = second.iter().flat_map(|p| &p.outcome.artifacts).collect();
        if a.len() != b.len() {
            rows.push(Row {
                demo: name,
                artifact: "<count>".into(),
                identical: false,
            });
        }
        for (x, y) in a.iter().zip(&b) {
            rows.push(Row {
                demo: name,
                artifact: x.name.clone(),
                identical: x.name == y.name && x.body == y.body,
            });
        }
    }
    let pass = rows.iter().all(|r| r.identical);
    let mut summary = format!("artifacts = {}\n", rows.len());
    for r in rows.iter().filter(|r| !r.identical) {
        let _ = writeln!(summary, "differs: {} {}", r.demo, r.artifact);
    }
    let _ = writeln!(summary, "pass = {pass}");
    Ok(RunOutcome {
        summary,
        success: Some(pass),
        artifacts: vec![Artifact {
            name: "determinism.csv".into(),
            body: csv_body(rows)?,
        }],
    })
}
