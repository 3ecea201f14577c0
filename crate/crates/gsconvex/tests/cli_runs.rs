//! End-to-end runs of the `gsconvex` binary: exit codes, report determinism,
//! and witness-CSV fidelity.

mod common;

use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gsconvex")
}

fn write_config(dir: &Path, value: &serde_json::Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> (i32, String) {
    let output = Command::new(bin())
        .arg(sub)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs");
    let stderr = String::from_utf8_lossy(&output.stderr).to_string();
    (output.status.code().unwrap_or(-1), stderr)
}

fn quad_config() -> serde_json::Value {
    json!({
        "functions": [
            {"name": "quad", "expr": "x1^2", "dim": 1, "box": [[0.0, 1.0]]}
        ],
        "s_list": [1.0]
    })
}

#[test]
fn check_passes_on_square() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &quad_config());
    let out = dir.path().join("out");
    let (code, _) = run("check", &cfg, &out, &[]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["subcommand"], "check");
    assert_eq!(report["verdicts"][0]["verdict"], "pass");
    assert!(report["run-id"].as_str().unwrap().len() == 16);
}

#[test]
fn check_fails_on_negative_constant_with_a_zero_witness() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "functions": [
                {"name": "negconst", "expr": "-1", "dim": 1, "box": [[0.0, 1.0]]}
            ],
            "s_list": [1.0]
        }),
    );
    let out = dir.path().join("out");
    let (code, _) = run("check", &cfg, &out, &[]);
    assert_eq!(code, 1);
    let csv = std::fs::read_to_string(out.join("witness_0_negconst.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "s,a,m1_1,m2_1,residual");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[1], "0", "witness must sit at a = 0");
    let residual: f64 = row[4].parse().unwrap();
    assert!((residual - 0.7182818284590451).abs() <= 1e-9);
}

#[test]
fn malformed_expression_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "functions": [
                {"name": "bad", "expr": "x1 +", "dim": 1, "box": [[0.0, 1.0]]}
            ],
            "s_list": [1.0]
        }),
    );
    let out = dir.path().join("out");
    let (code, stderr) = run("check", &cfg, &out, &[]);
    assert_eq!(code, 2);
    assert!(stderr.contains("position 5"), "stderr: {stderr}");
}

#[test]
fn unknown_config_field_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg_value = quad_config();
    cfg_value["typo_field"] = json!(1);
    let cfg = write_config(dir.path(), &cfg_value);
    let out = dir.path().join("out");
    let (code, _) = run("check", &cfg, &out, &[]);
    assert_eq!(code, 2);
}

#[test]
fn reports_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "functions": [
                {"name": "quad", "expr": "x1^2", "dim": 1, "box": [[0.0, 1.0]]},
                {"name": "expf", "expr": "exp(x1)", "dim": 1, "box": [[0.0, 1.0]], "modmap": "sep"}
            ],
            "modmaps": [
                {"name": "sep", "expr": "abs(u1 - v1) * s", "dim": 1}
            ],
            "s_list": [0.25, 1.0],
            "refine_samples": 40,
            "seed": 11
        }),
    );
    for sub in ["check", "epi", "oracle"] {
        let out1 = dir.path().join(format!("{sub}_t1"));
        let out4 = dir.path().join(format!("{sub}_t4"));
        let (c1, _) = run(sub, &cfg, &out1, &["--threads", "1"]);
        let (c4, _) = run(sub, &cfg, &out4, &["--threads", "4"]);
        assert_eq!(c1, c4);
        for entry in std::fs::read_dir(&out1).unwrap() {
            let name = entry.unwrap().file_name();
            let a = std::fs::read(out1.join(&name)).unwrap();
            let b = std::fs::read(out4.join(&name)).unwrap();
            assert_eq!(a, b, "{sub}/{name:?} differs across thread counts");
        }
    }
}

#[test]
fn witness_rows_reevaluate_through_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "functions": [
                {"name": "mix", "expr": "exp(x1) - 0.5 * x1", "dim": 1, "box": [[-1.0, 1.0]], "modmap": "g1"},
                {"name": "dish", "expr": "x1^2 + x2^2 - 0.25", "dim": 2, "box": [[0.0, 1.0], [0.0, 1.0]], "modmap": "g2"}
            ],
            "modmaps": [
                {"name": "g1", "expr": "0.3 * (u1 - v1)^2 + 0.05 * s", "dim": 1},
                {"name": "g2", "expr": "abs(u1 - v2) * s", "dim": 2}
            ],
            "s_list": [0.25, 0.75],
            "points_per_axis": 5,
            "a_points": 7,
            "refine_samples": 25,
            "seed": 5
        }),
    );
    let out = dir.path().join("out");
    let (code, _) = run("check", &cfg, &out, &[]);
    assert!(code == 0 || code == 1);
    let out_classes = dir.path().join("out_classes");
    let (code, _) = run("classes", &cfg, &out_classes, &[]);
    assert!(code == 0 || code == 1);
    let out_oracle = dir.path().join("out_oracle");
    let (code, _) = run("oracle", &cfg, &out_oracle, &[]);
    assert!(code == 0 || code == 1);

    let functions = [
        (
            "witness_0_mix.csv",
            common::func("exp(x1) - 0.5 * x1", &[(-1.0, 1.0)]),
            common::modmap("0.3 * (u1 - v1)^2 + 0.05 * s", 1),
        ),
        (
            "witness_1_dish.csv",
            common::func("x1^2 + x2^2 - 0.25", &[(0.0, 1.0), (0.0, 1.0)]),
            common::modmap("abs(u1 - v2) * s", 2),
        ),
    ];
    for (file, q, g) in functions {
        let class_file = file.replace(".csv", "_gs-exponential.csv");
        let paths = [
            out.join(file),
            out_oracle.join(file),
            out_classes.join(&class_file),
        ];
        for path in paths {
            let csv = std::fs::read_to_string(&path).unwrap();
            let mut lines = csv.lines();
            let header: Vec<&str> = lines.next().unwrap().split(',').collect();
            let dim = (header.len() - 3) / 2;
            for line in lines {
                let vals: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
                let s = vals[0];
                let a = vals[1];
                let m1 = &vals[2..2 + dim];
                let m2 = &vals[2 + dim..2 + 2 * dim];
                let reported = vals[2 + 2 * dim];
                let recomputed = gsconvex::oracle::residual_at(&q, &g, s, m1, m2, a).unwrap();
                assert!(
                    (recomputed - reported).abs() <= 1e-12,
                    "{}: reported {reported}, oracle {recomputed}",
                    path.display()
                );
            }
        }
    }
}

#[test]
fn certify_exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let holding = write_config(
        dir.path(),
        &json!({
            "functions": [
                {"name": "lin", "expr": "x1", "dim": 1, "box": [[1.0, 2.0]], "modmap": "neg"}
            ],
            "modmaps": [{"name": "neg", "expr": "-10", "dim": 1}],
            "s_list": [0.5],
            "points_per_axis": 101,
            "params": {"candidate": [1.0], "certify_a": 0.99}
        }),
    );
    let out = dir.path().join("hold");
    let (code, _) = run("certify", &holding, &out, &[]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let margin = report["verdicts"][0]["worst-margin"].as_f64().unwrap();
    assert!((margin - 6.96969696969697).abs() <= 1e-9);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["optimality_supported"], json!(true));

    let failing = write_config(
        &dir.path().join("."),
        &json!({
            "functions": [
                {"name": "quad", "expr": "x1^2", "dim": 1, "box": [[-1.0, 1.0]]}
            ],
            "s_list": [1.0],
            "params": {"candidate": [0.0], "certify_a": 0.5}
        }),
    );
    let out2 = dir.path().join("fail");
    let (code, _) = run("certify", &failing, &out2, &[]);
    assert_eq!(code, 1);
}

#[test]
fn classes_reports_positivity_precondition() {
    let dir = tempfile::tempdir().unwrap();
    // x1^2 touches zero, so the positive-function class cannot be tested
    let cfg = write_config(dir.path(), &quad_config());
    let out = dir.path().join("out");
    let (code, _) = run("classes", &cfg, &out, &[]);
    assert_eq!(code, 0, "remaining classes pass");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let verdicts = report["verdicts"].as_array().unwrap();
    let precondition: Vec<_> = verdicts
        .iter()
        .filter(|v| v["verdict"] == "precondition-failed")
        .collect();
    assert_eq!(precondition.len(), 1);
    assert_eq!(precondition[0]["class"], "exponential-kind");
    assert!(verdicts
        .iter()
        .any(|v| v["class"] == "s-convex" && v["verdict"] == "pass"));
}

#[test]
fn minimize_reports_the_known_minimizer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "functions": [
                {"name": "shifted", "expr": "(x1 - 0.3)^2 + (x2 + 0.2)^2", "dim": 2,
                 "box": [[-1.0, 1.0], [-1.0, 1.0]]}
            ],
            "s_list": [1.0]
        }),
    );
    let out = dir.path().join("out");
    let (code, _) = run("minimize", &cfg, &out, &[]);
    assert_eq!(code, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let best = report["verdicts"][0]["best-point"].as_array().unwrap();
    assert!((best[0].as_f64().unwrap() - 0.3).abs() <= 1e-6);
    assert!((best[1].as_f64().unwrap() + 0.2).abs() <= 1e-6);
}

#[test]
fn bounds_flags_unbounded_evidence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        &json!({
            "functions": [
                {"name": "recip", "expr": "1/x1", "dim": 1, "box": [[0.0, 1.0]]}
            ],
            "s_list": [1.0]
        }),
    );
    let out = dir.path().join("out");
    let (code, _) = run("bounds", &cfg, &out, &[]);
    assert_eq!(code, 1);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdicts"][0]["bounded"], json!(false));
    assert_eq!(report["worst-witnesses"][0]["failure"]["point"], json!(0.0));
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg_value = quad_config();
    cfg_value["refine_samples"] = json!(30);
    cfg_value["seed"] = json!(1);
    let cfg = write_config(dir.path(), &cfg_value);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");
    run("check", &cfg, &out_a, &["--seed", "99"]);
    run("check", &cfg, &out_b, &["--seed", "99"]);
    run("check", &cfg, &out_c, &[]);
    let a = std::fs::read(out_a.join("report.json")).unwrap();
    let b = std::fs::read(out_b.join("report.json")).unwrap();
    let c = std::fs::read(out_c.join("report.json")).unwrap();
    assert_eq!(a, b, "same seed, same bytes");
    assert_ne!(a, c, "different seed changes the echoed config and run id");
}
