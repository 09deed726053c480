use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qkan"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &TempDir, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, serde_json::to_string(cfg).unwrap()).unwrap();
    path
}

fn run(args: &[&str], config: &Path) -> Output {
    bin().args(args).arg("--config").arg(config).output().unwrap()
}

fn report(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn small_net() -> Value {
    json!({
        "seed": 1,
        "input": [0.4, -0.7],
        "layers": [{ "in": 2, "out": 2, "degree": 2, "weight_seed": 9 }]
    })
}

#[test]
fn verify_default_config_passes() {
    let r = report(&run(&["verify", "--no-timestamp"], &configs().join("default.json")));
    assert_eq!(r["passed"], true);
    let checks = r["result"]["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 5);
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert!(r.get("timestamp").is_none());
}

#[test]
fn report_embeds_explicit_weights_and_seeds() {
    let r = report(&run(&["eval"], &configs().join("default.json")));
    let layers = r["config"]["layers"].as_array().unwrap();
    let w = layers[0]["weights"].as_array().unwrap();
    assert_eq!(w.len(), 4);
    assert_eq!(w[0].as_array().unwrap().len(), 2);
    assert!(r["config"]["perturb"]["seed"].is_u64());
    assert!(r["timestamp"].is_u64());
}

#[test]
fn resolved_config_reproduces_the_run() {
    let dir = TempDir::new().unwrap();
    let first = report(&run(&["eval", "--no-timestamp", "--seed", "5"], &configs().join("default.json")));
    let replay = write_config(&dir, "replay.json", &first["config"]);
    let second = report(&run(&["eval", "--no-timestamp"], &replay));
    assert_eq!(first, second);
}

#[test]
fn seed_override_replaces_seeded_weights() {
    let cfg = configs().join("default.json");
    let a = report(&run(&["eval", "--no-timestamp", "--seed", "5"], &cfg));
    let b = report(&run(&["eval", "--no-timestamp", "--seed", "5"], &cfg));
    let c = report(&run(&["eval", "--no-timestamp", "--seed", "6"], &cfg));
    assert_eq!(a, b);
    assert_ne!(a["config"]["layers"], c["config"]["layers"]);
}

#[test]
fn eval_matches_oracle() {
    let dir = TempDir::new().unwrap();
    let r = report(&run(&["eval"], &write_config(&dir, "c.json", &small_net())));
    assert!(r["result"]["max_err"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["result"]["output"].as_array().unwrap().len(), 2);
}

#[test]
fn identity_like_layer_averages_inputs() {
    let r = report(&run(&["eval"], &configs().join("identity_like.json")));
    let y = r["result"]["output"][0].as_f64().unwrap();
    assert!((y - (0.6 - 0.2) / 4.0).abs() < 1e-12, "{y}");
}

#[test]
fn single_node_readout() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_net();
    cfg["readout"] = json!({ "mode": "exact", "node": 1 });
    let r = report(&run(&["eval"], &write_config(&dir, "c.json", &cfg)));
    assert_eq!(r["result"]["nodes"], json!([1]));
    cfg["readout"]["node"] = json!(2);
    let out = run(&["eval"], &write_config(&dir, "bad.json", &cfg));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shot_readout_is_seeded() {
    let cfg = configs().join("shots.json");
    let a = report(&run(&["eval", "--no-timestamp"], &cfg));
    let b = report(&run(&["eval", "--no-timestamp"], &cfg));
    assert_eq!(a, b);
    let res = &a["result"];
    assert_eq!(res["readout"][0]["shots"], 10000);
    assert!(res["max_err"].as_f64().unwrap() < 0.05);
}

#[test]
fn stateprep_encoder_needs_unit_input() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_net();
    cfg["encoder"] = json!("stateprep");
    let out = run(&["eval"], &write_config(&dir, "bad.json", &cfg));
    assert_eq!(out.status.code(), Some(2));
    cfg["input"] = json!([0.6, -0.8]);
    let r = report(&run(&["eval"], &write_config(&dir, "ok.json", &cfg)));
    assert!(r["result"]["max_err"].as_f64().unwrap() < 1e-9);
}

#[test]
fn resources_reconcile_for_both_weight_encoders() {
    let dir = TempDir::new().unwrap();
    for encoder in ["exact", "real_weights"] {
        let mut cfg = small_net();
        cfg["encoder"] = json!(encoder);
        // the real-part encoder needs ||w_r|| <= 1
        cfg["layers"][0]["weight_scale"] = json!(0.5);
        let r = report(&run(&["resources"], &write_config(&dir, "c.json", &cfg)));
        let res = &r["result"];
        assert_eq!(r["passed"], true, "{encoder}");
        assert_eq!(res["aux"], res["aux_formula"]);
        assert_eq!(res["input_queries"], 3);
        assert_eq!(res["weight_queries"], 3);
        assert_eq!(res["reconciliation"]["matches"], true);
    }
}

#[test]
fn prepare_state_reports_bound() {
    let r = report(&run(&["prepare-state"], &configs().join("state_prep.json")));
    let res = &r["result"];
    assert_eq!(res["amplitudes"].as_array().unwrap().len(), 4);
    assert_eq!(res["bound"]["hypotheses_hold"], true);
    assert!(res["l2_error"].as_f64().unwrap() < 0.1);
}

#[test]
fn train_writes_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "layers": [{ "in": 1, "out": 1, "degree": 2, "weight_seed": 4, "weight_scale": 0.1 }],
        "train": {
            "iterations": 5,
            "step_size": 1.0,
            "evaluator": "classical",
            "samples": [
                { "x": [-0.5], "y": [0.1] },
                { "x": [0.0], "y": [0.0] },
                { "x": [0.5], "y": [0.1] }
            ]
        }
    });
    let trace = dir.path().join("trace.csv");
    let out = bin()
        .args(["train", "--config"])
        .arg(write_config(&dir, "c.json", &cfg))
        .arg("--trace")
        .arg(&trace)
        .output()
        .unwrap();
    let r = report(&out);
    let csv = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "iteration,loss");
    assert_eq!(lines.len(), 7);
    let last: f64 = lines[6].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(last, r["result"]["final_loss"].as_f64().unwrap());
    assert!(last <= r["result"]["initial_loss"].as_f64().unwrap());
}

#[test]
fn out_flag_writes_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("report.json");
    let out = bin()
        .args(["resources", "--config"])
        .arg(configs().join("default.json"))
        .arg("--out")
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(r["command"], "resources");
}

#[test]
fn ancilla_budget_exits_3() {
    let out = run(&["eval", "--max-qubits", "8"], &configs().join("default.json"));
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("10 auxiliary"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let out = run(&["eval"], &write_config(&dir, "c.json", &json!({ "layers": 3 })));
    assert_eq!(out.status.code(), Some(2));
    let mut cfg = small_net();
    cfg["layers"][0]["weights"] = json!([[[1.0]]]);
    let out = run(&["eval"], &write_config(&dir, "shape.json", &cfg));
    assert_eq!(out.status.code(), Some(2));
    let mut cfg = small_net();
    cfg["unknown"] = json!(1);
    assert_eq!(run(&["eval"], &write_config(&dir, "k.json", &cfg)).status.code(), Some(2));
}

#[test]
fn divergence_exits_1() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "layers": [{ "in": 1, "out": 1, "degree": 1, "weights": [[[0.01]], [[0.0]]] }],
        "train": {
            "iterations": 80,
            "step_size": 1e6,
            "evaluator": "classical",
            "samples": [{ "x": [0.9], "y": [0.0] }, { "x": [-0.3], "y": [0.01] }]
        }
    });
    let out = run(&["train"], &write_config(&dir, "c.json", &cfg));
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}
