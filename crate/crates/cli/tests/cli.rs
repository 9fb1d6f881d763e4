use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = r#"
name = "tiny"
iterations = 2
seeds = [0]
output_dir = "out"

[game.env]
episode_length = 10

[trainer]
episode_length = 10
batch_size = 20
minibatch_size = 10
hidden = [4]

[objective]
kind = "greedy"
"#;

fn pacoin(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pacoin"))
        .args(args)
        .env("PACOIN_OUTPUT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    format!("{}/../../configs/oracle/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn run_summarize_and_export() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();

    let out = pacoin(tmp.path(), &["run", cfg.to_str().unwrap(), "--log-every", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out/tiny");
    assert!(dir.join("summary.json").exists());
    assert!(dir.join("seed_0/log.csv").exists());
    assert!(String::from_utf8_lossy(&out.stderr).contains("iter"));
    assert!(String::from_utf8_lossy(&out.stdout).contains("Welfare"));

    let json = tmp.path().join("cmp.json");
    let dir_s = dir.to_str().unwrap();
    let out = pacoin(tmp.path(), &["summarize", dir_s, "--json", json.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let cmp: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(cmp["experiments"][0]["name"], "tiny");

    let out = pacoin(tmp.path(), &["plot-export", dir_s]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("bundle/manifest.json").exists());
    assert!(dir.join("bundle/contract_means.csv").exists());
}

#[test]
fn bad_inputs_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, TINY.replace("iterations = 2", "iterations = 2\nbogus = 1")).unwrap();
    assert_eq!(pacoin(tmp.path(), &["run", cfg.to_str().unwrap()]).status.code(), Some(2));

    std::fs::write(&cfg, TINY.replace("batch_size = 20", "batch_size = 15")).unwrap();
    assert_eq!(pacoin(tmp.path(), &["run", cfg.to_str().unwrap()]).status.code(), Some(2));

    let game = tmp.path().join("game.toml");
    std::fs::write(&game, "[game]\nn_states = 0\n").unwrap();
    assert_eq!(pacoin(tmp.path(), &["oracle", game.to_str().unwrap()]).status.code(), Some(2));

    assert_eq!(pacoin(tmp.path(), &["summarize"]).status.code(), Some(2));
}

#[test]
fn oracle_on_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let out = pacoin(tmp.path(), &["oracle", &fixture("two_state.toml"), "--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["bellman_residual"].as_f64().unwrap() <= 1e-10);
    assert_eq!(report["best_response_ir_violations"].as_array().unwrap().len(), 0);
    assert_eq!(report["limited_liability"], true);
}
