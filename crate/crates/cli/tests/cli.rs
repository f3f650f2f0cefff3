use std::path::Path;
use std::process::{Command, Output};

use fracvar::asymptotics::SweepReport;

fn fracvar(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fracvar"));
    cmd.args(args);
    for (k, _) in std::env::vars() {
        if k.starts_with("FRACVAR_") {
            cmd.env_remove(k);
        }
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

const EVAL: &str =
    "[grid]\nn = 1\nhalf_width = 4.0\nm = 257\n[input]\nkind = \"bump\"\nradius = 1.5\n[operator]\nalpha = 0.5\n";

#[test]
fn eval_writes_field_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "eval.toml", EVAL);
    let out = dir.path().join("out");
    let o = fracvar(&["eval", "--config", &cfg, "--out", &s(&out)], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("eval.json")).unwrap()).unwrap();
    assert!((meta["mu"].as_f64().unwrap() - 0.19947114020071635).abs() < 1e-12);
    assert!(meta["declared_tolerance"].as_f64().unwrap() > 0.0);
    assert!(meta["threads"].is_u64());
    let field = std::fs::read_to_string(out.join("field.csv")).unwrap();
    assert_eq!(field.lines().count(), 2 + 257);
}

#[test]
fn zero_input_gives_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "eval.toml", EVAL);
    let out = dir.path().join("out");
    let o = fracvar(
        &["eval", "--config", &cfg, "--out", &s(&out), "--deterministic"],
        &[("FRACVAR_INPUT__KIND", "zero")],
    );
    assert_eq!(o.status.code(), Some(0));
    let field = std::fs::read_to_string(out.join("field.csv")).unwrap();
    assert!(field
        .lines()
        .skip(2)
        .all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() == 0.0));
    let meta = std::fs::read_to_string(out.join("eval.json")).unwrap();
    assert!(!meta.contains("elapsed_seconds"));
}

#[test]
fn order_one_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "eval.toml", EVAL);
    let o = fracvar(
        &["eval", "--config", &cfg, "--out", &s(dir.path())],
        &[("FRACVAR_OPERATOR__ALPHA", "1.0")],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("strictly inside (0, 1)"));
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[grid]\nsize = 3\n");
    let o = fracvar(&["eval", "--config", &cfg, "--out", &s(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(2));
    let o = fracvar(&["eval", "--config", &s(&dir.path().join("missing.toml"))], &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exceeded_budget_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "eval.toml", EVAL);
    let o = fracvar(
        &["eval", "--config", &cfg, "--out", &s(dir.path())],
        &[("FRACVAR_OPERATOR__BUDGET", "1e-9")],
    );
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn duality_eval_reports_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "d.toml",
        "[grid]\nn = 1\nhalf_width = 4.0\nm = 513\n[input]\nkind = \"random_bumps\"\n[operator]\nquantity = \"duality\"\nalpha = 0.7\n",
    );
    let o = fracvar(&["eval", "--config", &cfg, "--out", &s(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("eval.json")).unwrap()).unwrap();
    assert_eq!(meta["within"], serde_json::json!(true));
    assert!(meta["duality"]["residual"].as_f64().unwrap() <= meta["declared_tolerance"].as_f64().unwrap());
}

#[test]
fn single_point_sweep_has_no_fitted_order() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracvar(
        &["sweep", "--out", &s(dir.path())],
        &[("FRACVAR_OPERATOR__ALPHAS", "[0.99]"), ("FRACVAR_GRID__M", "1025")],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: SweepReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("alpha_to_one.json")).unwrap()).unwrap();
    assert!(r.fitted_order.is_none());
    assert!(r.pass && r.verdict_is_consistent());
}

#[test]
fn failed_verdict_exits_three_after_writing_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "experiment = [\"gamma\", \"alpha_to_one\"]\n[tolerances]\ntotal_mass = 1e-9\n",
    );
    let out = dir.path().join("out");
    let o = fracvar(&["sweep", "--config", &cfg, "--out", &s(&out)], &[]);
    assert_eq!(o.status.code(), Some(3));
    let r: SweepReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("alpha_to_one.json")).unwrap()).unwrap();
    assert!(!r.pass);
    assert!(out.join("gamma.json").exists());
    assert!(out.join("run.json").exists());
}

#[test]
fn gamma_reports_reference_perimeter() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracvar(&["gamma", "--out", &s(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("reference |Df|(Ω) = 2"));
    let r: SweepReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gamma.json")).unwrap()).unwrap();
    assert!(r.notes.iter().any(|n| n == "reference |Df|(Ω) = 2"));
    assert_eq!(r.records_of("liminf").count(), 15);
}

#[test]
fn report_merges_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let runs = dir.path().join("runs");
    let cfg = write(
        dir.path(),
        "s.toml",
        "experiment = [\"alpha_to_one\", \"gamma\"]\n[grid]\nm = 1025\n",
    );
    let o = fracvar(&["sweep", "--config", &cfg, "--out", &s(&runs), "--deterministic"], &[]);
    assert_eq!(o.status.code(), Some(0));
    let a = runs.join("alpha_to_one.json");
    let g = runs.join("gamma.json");
    let count = |p: &Path| {
        let r: SweepReport = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        r.records.len()
    };
    let m1 = dir.path().join("m1");
    let o = fracvar(&["report", &s(&a), &s(&g), "--out", &s(&m1)], &[]);
    assert_eq!(o.status.code(), Some(0));
    let merged = std::fs::read_to_string(m1.join("summary.csv")).unwrap();
    assert_eq!(merged.lines().count(), 1 + count(&a) + count(&g));
    let m2 = dir.path().join("m2");
    let o = fracvar(&["report", &s(&m1.join("summary.csv")), "--out", &s(&m2)], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read(m1.join("summary.csv")).unwrap(),
        std::fs::read(m2.join("summary.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(m1.join("summary.txt")).unwrap(),
        std::fs::read(m2.join("summary.txt")).unwrap()
    );
}

#[test]
fn empty_report_and_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracvar(&["report", "--out", &s(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("0 rows"));
    let bad = write(
        dir.path(),
        "old.json",
        r#"{"schema_version": 0, "experiment": "x", "parameter": "alpha", "grid": [], "records": [],
            "fitted_order": null, "checks": [], "failures": [], "pass": true, "notes": []}"#,
    );
    let o = fracvar(&["report", &bad, "--out", &s(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(4));
    let csv = write(dir.path(), "rows.csv", "a,b\n1,2\n");
    let o = fracvar(&["report", &csv, "--out", &s(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn deterministic_outputs_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "d.toml",
        "[grid]\nn = 2\nhalf_width = 4.0\nm = 65\n[input]\nkind = \"random_bumps\"\n[operator]\nquantity = \"gradient\"\nalpha = 0.4\n",
    );
    let mut outputs = Vec::new();
    for t in ["1", "3"] {
        let out = dir.path().join(t);
        let o = fracvar(
            &[
                "eval",
                "--config",
                &cfg,
                "--out",
                &s(&out),
                "--deterministic",
                "--threads",
                t,
            ],
            &[],
        );
        assert_eq!(o.status.code(), Some(0));
        outputs.push((
            std::fs::read(out.join("field.csv")).unwrap(),
            std::fs::read(out.join("eval.json")).unwrap(),
        ));
    }
    assert!(outputs[0] == outputs[1]);
}

#[test]
fn geometry_file_drives_weak_star() {
    let dir = tempfile::tempdir().unwrap();
    let geo = write(dir.path(), "e.json", "[[0.0, 1.0]]");
    let cfg = write(
        dir.path(),
        "w.toml",
        &format!("experiment = \"weak_star\"\n[input]\nkind = \"geometry\"\npath = {geo:?}\n"),
    );
    let o = fracvar(&["sweep", "--config", &cfg, "--out", &s(dir.path())], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("weak_star.csv").exists());
}
