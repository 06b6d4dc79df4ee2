use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use invlab::cli::strip_header;

fn invlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invlab")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn wasserstein_config_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "w.toml",
        "experiment = \"wasserstein\"\nspace = \"circle\"\na_support = [0.1, 0.9]\na_weights = [0.5, 0.5]\nb_support = [0.0, 0.5]\nb_weights = [0.5, 0.5]\n",
    );
    let out = invlab(&["run", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let body = fs::read_to_string(dir.path().join("wasserstein.csv")).unwrap();
    let rows: Vec<&str> = strip_header(&body).lines().collect();
    assert_eq!(rows.len(), 2);
    // 0.1 and 0.9 both sit 0.1 from 0; the other half travels 0.4 to 0.5
    let w1: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((w1 - 0.25).abs() < 1e-12, "{w1}");
}

#[test]
fn ulam_config_gives_uniform_stationary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "u.toml", "experiment = \"ulam\"\ngrid = 64\n[map]\nfamily = \"doubling\"\n");
    let out = invlab(&["run", &cfg, "--out-dir", dir.path().to_str().unwrap(), "--threads", "2"]);
    assert!(out.status.success());
    let body = fs::read_to_string(dir.path().join("ulam_stationary.csv")).unwrap();
    assert!(body.starts_with("# experiment=ulam\n# config_hash="));
    assert!(body.contains("\n# seed=0\n"));
    let rows: Vec<&str> = strip_header(&body).lines().skip(1).collect();
    assert_eq!(rows.len(), 64);
    for r in rows {
        let w: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!((w - 1.0 / 64.0).abs() <= 1e-12);
    }
}

#[test]
fn continuity_probe_config_reports_discontinuity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "experiment = \"continuity_probe\"\ngrid = 64\nmode = \"hull\"\ndeltas = [0.004, 0.002, 0.001]\n[map]\nfamily = \"rotation\"\nparams = [0.5]\n",
    );
    let out = invlab(&["run", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.lines().any(|l| l == "classification = discontinuity_evidence"), "{stdout}");
    let summary = fs::read_to_string(dir.path().join("continuity_probe_summary.txt")).unwrap();
    assert!(summary.contains("classification = discontinuity_evidence"));
}

#[test]
fn validate_reports_alpha_range_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "g.toml", "experiment = \"ulam\"\ngrid = 8\n[map]\nfamily = \"identity\"\n");
    let out = invlab(&["validate", &good]);
    assert!(out.status.success());
    let bad = write(
        dir.path(),
        "b.toml",
        "experiment = \"visit_search\"\np = 0.0\nintervals = [[0.9, 1.1]]\nbeta = 0.02\nalpha = 0.7\neps = 0.1\nsigma = 0.05\n[map]\nfamily = \"doubling\"\n[perturbed]\nfamily = \"doubling\"\n",
    );
    for sub in ["validate", "run"] {
        let out = invlab(&[sub, &bad, "--out-dir", dir.path().to_str().unwrap()]);
        assert!(!out.status.success());
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.contains("line 5:") && err.contains("(0, 1/2)"), "{err}");
    }
    assert!(!dir.path().join("visit_search.csv").exists());
}

#[test]
fn seed_flag_changes_jittered_rows_only_through_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "j.toml",
        "experiment = \"ulam\"\ngrid = 32\nmethod = \"jittered\"\nsamples = 8\n[map]\nfamily = \"logistic\"\nparams = [3.8]\n",
    );
    let run = |seed: &str, sub: &str| {
        let d = dir.path().join(sub);
        assert!(invlab(&["run", &cfg, "--seed", seed, "--out-dir", d.to_str().unwrap()]).status.success());
        fs::read_to_string(d.join("ulam_matrix.csv")).unwrap()
    };
    let (a, b, c) = (run("1", "a"), run("1", "b"), run("2", "c"));
    assert_eq!(a, b);
    assert!(a.contains("# seed=1\n") && c.contains("# seed=2\n"));
    assert_ne!(strip_header(&a), strip_header(&c));
}
