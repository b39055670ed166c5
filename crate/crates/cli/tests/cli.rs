use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qwf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwf"))
        .args(args)
        .current_dir(dir)
        .env_remove("QWF_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = qwf(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(dir: &Path, stem: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json"))).unwrap())
        .unwrap()
}

fn csv_rows(dir: &Path, stem: &str) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(dir.join(format!("{stem}.csv"))).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn evolve_writes_normalized_distribution() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "evolve",
            "--theta",
            "0.7854",
            "--t",
            "100",
            "--init",
            "localized:0",
            "--out",
            "ev",
        ],
    );
    let rows = csv_rows(d.path(), "ev");
    assert_eq!(rows.len(), 201);
    let total: f64 = rows.iter().map(|r| r[1].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    // 17 significant digits
    assert_eq!(rows[100][1].split('e').next().unwrap().len(), 18);
    let j = json(d.path(), "ev");
    assert_eq!(j["schema"], "qwf-output/1");
    assert_eq!(j["config"]["command"]["t"], 100);
    assert!(!j["software"]["version"].as_str().unwrap().is_empty());
}

#[test]
fn zero_steps_echo_the_input() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "evolve",
            "--t",
            "0",
            "--init",
            "entangled:0,1",
            "--out",
            "e",
        ],
    );
    let amps = &json(d.path(), "e")["result"]["state"]["amps"];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert_eq!(
        amps,
        &serde_json::json!([[h, 0.0], [0.0, 0.0], [0.0, 0.0], [h, 0.0]])
    );
}

#[test]
fn runs_are_byte_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        ok(
            d.path(),
            &[
                "estimate",
                "--shots",
                "100000",
                "--seed",
                "7",
                "--grid-theta",
                "60",
                "--grid-alpha",
                "4",
                "--out",
                "est",
            ],
        );
        ok(
            d.path(),
            &["evolve", "--t", "37", "--alpha", "0.3", "--out", "ev"],
        );
    }
    for f in ["est.json", "est.csv", "ev.json", "ev.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let j = json(a.path(), "est");
    assert_eq!(j["result"]["record"]["shots"], 100000);
    assert!(j["result"]["fit"]["theta"].as_f64().unwrap().is_finite());
}

#[test]
fn qfim_routes_agree() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "qfim",
            "--routes",
            "analytic,oracle",
            "--t",
            "200",
            "--out",
            "q",
        ],
    );
    let j = json(d.path(), "q");
    assert!(j["result"]["deviation"]["oracle"].as_f64().unwrap() <= 0.05);
    assert!(
        j["result"]["routes"]["analytic"]["diagnostics"]["beta_null_residual"]
            .as_f64()
            .unwrap()
            <= 1e-12
    );
    ok(
        d.path(),
        &[
            "qfim",
            "--routes",
            "analytic,localized",
            "--init",
            "localized:0:bloch:0.6,0,0.8",
            "--alpha",
            "0.9",
            "--beta",
            "0.2",
            "--out",
            "l",
        ],
    );
    assert!(
        json(d.path(), "l")["result"]["deviation"]["localized"]
            .as_f64()
            .unwrap()
            <= 1e-8
    );
    let out = qwf(
        d.path(),
        &["qfim", "--routes", "localized", "--init", "entangled:0,1"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn holevo_sweep_values() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["sweep", "holevo", "--t-max", "20", "--out", "s"],
    );
    let rows = csv_rows(d.path(), "s");
    assert_eq!(rows.len(), 40);
    for r in &rows {
        let theta: f64 = r[0].parse().unwrap();
        let t: f64 = r[1].parse().unwrap();
        let ch: f64 = r[2].parse().unwrap();
        let s = theta.sin();
        let g = (s + theta.cos().powi(2)) / (4.0 * s * (1.0 - s));
        assert!((ch * t * t - g).abs() < 1e-12);
    }
}

#[test]
fn dirac_case_first_order_recovery() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "case", "dirac", "--m", "1", "--q", "1", "--Ax", "1", "--eps", "0.01", "--out", "c",
        ],
    );
    let j = json(d.path(), "c");
    assert!(j["result"]["first_order_error"].as_f64().unwrap() <= 1e-3);
    assert!(j["result"]["round_trip_error"].as_f64().unwrap() <= 1e-10);
    assert_eq!(
        j["result"]["physical_fisher"]["labels"],
        serde_json::json!(["m", "q"])
    );
    ok(
        d.path(),
        &[
            "case", "magnetic", "--b2", "0.4", "--b3", "-0.3", "--out", "m",
        ],
    );
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| qwf(d.path(), args).status.code();
    assert_eq!(code(&["evolve", "--init", "nowhere:1"]), Some(2));
    assert_eq!(
        code(&["case", "magnetic", "--b2", "1.2", "--b3", "1.1"]),
        Some(2)
    );
    assert_eq!(code(&["evolve", "--no-such-flag"]), Some(2));
    assert_eq!(code(&["case", "dirac", "--ax", "0"]), Some(4));
    assert_eq!(
        code(&[
            "bounds",
            "--init",
            "localized:0",
            "--alpha",
            "0",
            "--theta",
            "1e-12"
        ]),
        Some(4)
    );
    assert_eq!(
        code(&[
            "qfim",
            "--routes",
            "analytic",
            "--rel-tol",
            "1e-300",
            "--abs-tol",
            "0",
            "--max-panels",
            "8"
        ]),
        Some(3)
    );
    assert_eq!(
        code(&["--strict", "evolve", "--init", "entangled:0,2"]),
        Some(2)
    );
    let out = Command::new(env!("CARGO_BIN_EXE_qwf"))
        .args(["evolve"])
        .current_dir(d.path())
        .env("QWF_THREADS", "x")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("run.cfg"),
        "# evolution run\ntheta = 0.5\nt = 3\ninit = gamma:0.2\nout = cfgrun\n",
    )
    .unwrap();
    ok(d.path(), &["evolve", "--config", "run.cfg", "--t", "5"]);
    let j = json(d.path(), "cfgrun");
    assert_eq!(j["config"]["command"]["t"], 5);
    assert_eq!(j["config"]["command"]["coin"]["theta"], 0.5);
    assert_eq!(csv_rows(d.path(), "cfgrun").len(), 11);
}
