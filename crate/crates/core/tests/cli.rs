use std::fs;
use std::path::Path;
use std::process::Command;

use sampdisc::experiment::{run_experiment, ExperimentConfig};
use serde_json::{json, Value};

fn schema() -> jsonschema::Validator {
    let text = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(report: &Value) {
    let v = schema();
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{e} at {}", e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

fn run_cli(config: &Value, dir: &Path, extra: &[&str]) -> (i32, String, String) {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config.to_string()).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sampdisc"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn trig(degree: i64) -> Value {
    json!({"kind": "trig-degree", "dimension": 1, "degree": degree})
}

#[test]
fn certify_writes_valid_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"kind": "certify", "space": trig(2), "points": {"mode": "equispaced", "m": 5}});
    let (code, stdout, _) = run_cli(&cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(stdout.contains("exact-eigen"));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_valid(&report);
    let cert = &report["records"][1]["certificate"];
    assert!((cert["c1_pow"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!((cert["c2_pow"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    let csv = fs::read_to_string(dir.path().join("out/series.csv")).unwrap();
    assert!(csv.starts_with("label,m,p,c1,c2,method,status\n"));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = run_cli(&json!({"kind": "certify", "space": trig(1)}), dir.path(), &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("points"), "{stderr}");
    let (code, _, _) = run_cli(&json!({"kind": "teleport"}), dir.path(), &[]);
    assert_eq!(code, 2);
    let cfg = json!({"kind": "certify", "space": trig(1), "points": {"mode": "iid", "m": 5}});
    let (code, _, stderr) = run_cli(&cfg, dir.path(), &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("seed"), "{stderr}");
    let (code, _, _) = run_cli(&cfg, dir.path(), &["--seed", "3", "--tolerance", "bogus=1"]);
    assert_eq!(code, 2);
    let (code, _, _) = run_cli(&cfg, dir.path(), &["--seed", "3", "--eps", "2"]);
    assert_eq!(code, 2);
}

#[test]
fn budget_exhaustion_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "kind": "subsample",
        "space": trig(2),
        "eps": 0.5,
        "seed": 1,
        "budgets": {"stage1_s": 40, "stage2_m": 4, "retries": 2}
    });
    let (code, _, _) = run_cli(&cfg, dir.path(), &[]);
    assert_eq!(code, 3);
}

#[test]
fn recover_and_nikolskii_reports_validate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "kind": "recover",
        "space": trig(1),
        "points": {"mode": "equispaced", "m": 9},
        "target": {"kind": "trig", "dimension": 1, "terms": [{"k": [2], "re": 0.5}, {"k": [-2], "re": 0.5}]}
    });
    let (code, stdout, _) = run_cli(&cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    assert!(stdout.contains("recovery bound holds: true"));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_valid(&report);
    let lhs = report["records"][1]["report"]["lhs"].as_f64().unwrap();
    assert!((lhs - 0.5f64.sqrt()).abs() < 1e-9);

    let cfg = json!({"kind": "nikolskii", "space": trig(2), "q": 2.0});
    let (code, _, _) = run_cli(&cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_valid(&report);
    assert!((report["records"][0]["estimate"]["M"].as_f64().unwrap() - 5f64.sqrt()).abs() < 1e-10);
}

#[test]
fn study_runs_are_byte_identical_and_echo_round_trips() {
    let cfg = json!({
        "kind": "study-scaling",
        "sizes": [3, 5],
        "eps": 0.5,
        "trials": 10,
        "threshold": 0.8,
        "seed": 11
    });
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run_cli(&cfg, a.path(), &[]).0, 0);
    assert_eq!(run_cli(&cfg, b.path(), &[]).0, 0);
    let csv_a = fs::read(a.path().join("out/series.csv")).unwrap();
    let csv_b = fs::read(b.path().join("out/series.csv")).unwrap();
    assert_eq!(csv_a, csv_b);

    let report: Value = serde_json::from_str(&fs::read_to_string(a.path().join("out/report.json")).unwrap()).unwrap();
    assert_valid(&report);
    let echoed = ExperimentConfig::from_json(&report["config"].to_string()).unwrap();
    let reparsed = ExperimentConfig::from_json(&echoed.to_json()).unwrap();
    assert_eq!(echoed, reparsed);
    assert_eq!(echoed.seed, Some(11));

    // the seed override changes the run
    let c = tempfile::tempdir().unwrap();
    assert_eq!(run_cli(&cfg, c.path(), &["--seed", "12"]).0, 0);
    let report_c: Value = serde_json::from_str(&fs::read_to_string(c.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(report_c["seed"], json!(12));
}

#[test]
fn in_process_reports_validate_for_every_kind() {
    let configs = [
        json!({"kind": "generate", "space": trig(2), "points": {"mode": "leverage", "m": 12}, "seed": 4}),
        json!({"kind": "certify", "space": trig(1), "points": {"mode": "iid", "m": 7}, "seed": 2, "p": 3.0}),
        json!({"kind": "certify", "space": trig(1), "points": {"mode": "iid", "m": 9}, "seed": 2, "p": "inf"}),
        json!({"kind": "subsample", "space": trig(1), "eps": 0.5, "seed": 1,
               "budgets": {"stage1_s": 200, "stage2_m": 40, "retries": 10}}),
        json!({"kind": "study-lacunary", "sizes": [2, 3], "p": 4.0, "eps": 0.5, "trials": 6, "threshold": 0.5, "seed": 5}),
        json!({"kind": "study-tensor",
               "space": {"kind": "tensor", "factors": [trig(1), trig(1)]},
               "points": {"mode": "tensor", "factors": [{"mode": "iid", "m": 6}, {"mode": "equispaced", "m": 3}]},
               "seed": 8}),
    ];
    for cfg in configs {
        let config = ExperimentConfig::from_json(&cfg.to_string()).unwrap();
        let report = run_experiment(&config).unwrap();
        let value = serde_json::to_value(&report).unwrap();
        assert_valid(&value);
        assert_eq!(ExperimentConfig::from_json(&config.to_json()).unwrap(), config);
    }
}
