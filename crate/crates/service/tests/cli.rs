use std::path::PathBuf;
use std::process::Command;

use seamesh::cli::run;
use seamesh_core::engine::build_redsea_scenario;
use seamesh_core::geo::{EnuPoint, Geodetic};
use seamesh_core::model::{NodeKind, NodeSpec, Scenario};

fn seamesh(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("seamesh").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn write_scenario(dir: &tempfile::TempDir, name: &str, s: &Scenario) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, s.to_json_pretty()).unwrap();
    p.to_string_lossy().into_owned()
}

fn pair(spacing: f64) -> Scenario {
    let mut s = Scenario::new("pair", Geodetic::default());
    s.nodes.push(NodeSpec::new("R1", NodeKind::BaseStation, EnuPoint::ORIGIN));
    s.nodes.push(NodeSpec::new("R2", NodeKind::RelayIsland, EnuPoint::new(spacing, 0.0)));
    s
}

#[test]
fn cost_of_bundled_scenario() {
    let (code, out, _) = seamesh(&["cost", "builtin:redsea"]);
    assert_eq!(code, 0);
    assert!(out.contains("630.32") && out.contains("550.30") && out.contains("294.14") && out.contains("14.00"));
    assert!(out.contains("total 1488.76 USD"), "{out}");

    let (code, out, _) = seamesh(&["--json", "cost", "builtin:redsea"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["total_usd"], "1488.76");
    assert_eq!(v["total"], 148876);
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn usage_errors_exit_2() {
    let (code, _, err) = seamesh(&["frobnicate"]);
    assert_eq!(code, 2);
    assert!(err.contains("Usage"), "{err}");
    let (code, _, _) = seamesh(&["linkbudget", "builtin:redsea", "--from", "R1"]);
    assert_eq!(code, 2);
    let (code, _, _) = seamesh(&["coverage", "builtin:redsea", "--resolution", "wide"]);
    assert_eq!(code, 2);
    let (code, out, _) = seamesh(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("simulate"));
}

#[test]
fn close_spacing_is_only_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(&dir, "close.json", &pair(250.0));
    let (code, out, _) = seamesh(&["validate", &path]);
    assert_eq!(code, 0);
    assert!(out.contains("warning") && out.contains("SEPARATION_BELOW_300M"), "{out}");
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = pair(400.0);
    s.nodes[0].gateway = false;
    let path = write_scenario(&dir, "nogw.json", &s);
    let (code, out, _) = seamesh(&["validate", &path]);
    assert_eq!(code, 1);
    assert!(out.contains("NO_GATEWAY"), "{out}");
    let (code, _, err) = seamesh(&["cost", &path]);
    assert_eq!(code, 1);
    assert!(err.contains("NO_GATEWAY"));
    let (code, out, _) = seamesh(&["--json", "validate", &path]);
    assert_eq!(code, 1);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["valid"], false);
}

#[test]
fn unreadable_and_malformed_files_exit_1() {
    let (code, _, err) = seamesh(&["validate", "/definitely/not/here.json"]);
    assert_eq!(code, 1);
    assert!(err.contains("cannot read"), "{err}");
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{ not json").unwrap();
    let (code, _, err) = seamesh(&["cost", p.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(!err.is_empty());
}

#[test]
fn linkbudget_reports_both_ends() {
    let (code, out, _) = seamesh(&["linkbudget", "builtin:redsea", "--from", "R1", "--to", "R3"]);
    assert_eq!(code, 0);
    assert!(out.contains("R1 -> R3") && out.contains("snr"), "{out}");
    let (code, out, _) = seamesh(&["--json", "linkbudget", "builtin:redsea", "--from", "R1", "--to", "R3"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(v["budget"]["mac_rate_mbps"].as_f64().unwrap() > 0.0);
    let (code, _, err) = seamesh(&["linkbudget", "builtin:redsea", "--from", "R1", "--to", "R9"]);
    assert_eq!(code, 1);
    assert!(err.contains("R9"));
}

#[test]
fn coverage_writes_grid_document() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("grid.json");
    let (code, out, _) =
        seamesh(&["coverage", "builtin:redsea", "--resolution", "50", "--out", out_path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("0 uncovered"), "{out}");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["cols"], 40);
    assert_eq!(doc["rows"], 10);
    assert_eq!(doc["cells"].as_array().unwrap().len(), 400);
}

#[test]
fn simulate_log_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let args = ["simulate", "builtin:redsea", "--duration", "3600", "--seed", "3", "--terminals", "builtin:cruise"];
        let (code, out, _) = seamesh(&[&args[..], &["--out", p.to_str().unwrap()]].concat());
        assert_eq!(code, 0);
        assert!(out.contains("3601 records"), "{out}");
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(header["schema"], "seamesh.metrics");
    assert_eq!(header["seed"], 3);
    assert_eq!(text.lines().count(), 3602);
}

#[test]
fn simulate_to_stdout_keeps_summary_on_stderr() {
    let (code, out, err) = seamesh(&["simulate", "builtin:redsea", "--duration", "10"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 12);
    assert!(err.contains("11 records"));
}

#[test]
fn shipped_scenario_file_matches_builder() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/redsea.json");
    let (code, out, _) = seamesh(&["cost", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.contains("1488.76"));
    let from_file = Scenario::from_json_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(from_file, build_redsea_scenario());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_seamesh");
    let ok = Command::new(bin).args(["cost", "builtin:redsea"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("1488.76"));
    let usage = Command::new(bin).arg("nope").output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    let missing = Command::new(bin).args(["validate", "/no/such/file"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(!missing.stderr.is_empty());
}
