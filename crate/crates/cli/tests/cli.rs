//! End-to-end checks of the `fmp` binary: every subcommand runs, emits
//! schema-valid reports, honors the exit-code contract, and reproduces its
//! outputs byte-for-byte when re-run from its provenance record.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fmp")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fmp_cli_{}_{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary launches")
}

fn run_ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "fmp {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// All files of a directory as (relative name, bytes), sorted.
fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let entry = entry.unwrap();
        out.push((
            entry.file_name().to_string_lossy().into_owned(),
            std::fs::read(entry.path()).unwrap(),
        ));
    }
    out.sort();
    out
}

fn assert_rerun_identical(command: &str, first: &Path, extra: &[&str]) {
    let rerun_dir = first.with_file_name(format!(
        "{}_rerun",
        first.file_name().unwrap().to_string_lossy()
    ));
    let config = first.join("run.json");
    let mut args = vec![
        command,
        "--config",
        config.to_str().unwrap(),
        "--out",
        rerun_dir.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    run_ok(&args);
    assert_eq!(
        dir_bytes(first),
        dir_bytes(&rerun_dir),
        "{command} rerun from provenance differs"
    );
}

#[test]
fn gen_sbm_writes_file_set_and_reruns() {
    let dir = scratch("gensbm");
    let out = dir.join("a");
    run_ok(&["gen-sbm", "--seed", "7", "--n", "20", "--out", out.to_str().unwrap()]);
    for file in ["graph.edges", "features.csv", "labels.csv", "splits.json", "run.json"] {
        assert!(out.join(file).exists(), "missing {file}");
    }
    let record = read_json(&out.join("run.json"));
    fmp_cli::schema::validate("run", &record).unwrap();
    assert_eq!(record["command"], "gen-sbm");
    assert_eq!(record["seed"], 7);
    assert_rerun_identical("gen-sbm", &out, &[]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn tightness_report_nu_is_tight_and_schema_valid() {
    let dir = scratch("tight");
    let out = dir.join("a");
    run_ok(&[
        "tightness-report",
        "--bank",
        "nu",
        "--levels",
        "3",
        "--seed",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report = read_json(&out.join("tightness.json"));
    fmp_cli::schema::validate("tightness", &report).unwrap();
    assert!((report["A"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
    assert!((report["B"].as_f64().unwrap() - 1.0).abs() <= 1e-10);
    assert_rerun_identical("tightness-report", &out, &[]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn tightness_report_rejects_cheb_mode() {
    let dir = scratch("tightcheb");
    let out = run(&[
        "tightness-report",
        "--mode",
        "cheb",
        "--out",
        dir.join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn stability_probe_holds_and_exits_zero() {
    let dir = scratch("stab");
    let out = dir.join("a");
    run_ok(&[
        "stability-probe",
        "--layers",
        "8",
        "--seed",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report = read_json(&out.join("stability.json"));
    fmp_cli::schema::validate("stability", &report).unwrap();
    assert_eq!(report["holds"], true);
    assert_rerun_identical("stability-probe", &out, &[]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn energy_sandwich_reports_zero_violations() {
    let dir = scratch("sand");
    let out = dir.join("a");
    run_ok(&[
        "energy-sandwich",
        "--trials",
        "20",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report = read_json(&out.join("sandwich.json"));
    fmp_cli::schema::validate("sandwich", &report).unwrap();
    assert_eq!(report["violations"], 0);
    assert_rerun_identical("energy-sandwich", &out, &[]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn energy_evolution_emits_both_curves() {
    let dir = scratch("evol");
    let out = dir.join("a");
    run_ok(&[
        "energy-evolution",
        "--seed",
        "5",
        "--layers",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    for file in ["energy_gcn.csv", "energy_fmp.csv"] {
        let text = std::fs::read_to_string(out.join(file)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "layer,energy");
        assert_eq!(lines.count(), 11);
    }
    assert_rerun_identical("energy-evolution", &out, &[]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn node_classify_trains_and_checkpoints() {
    let dir = scratch("classify");
    let out = dir.join("a");
    run_ok(&[
        "node-classify",
        "--synthetic",
        "--model",
        "fmp-mlp",
        "--repeats",
        "2",
        "--epochs",
        "20",
        "--seed",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report = read_json(&out.join("metrics.json"));
    fmp_cli::schema::validate("classify", &report).unwrap();
    assert_eq!(report["repeats"], 2);
    assert!(out.join("model.json").exists());
    assert!(out.join("model.bin").exists());
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(csv.starts_with("epoch,trainLoss,valAcc,testAcc\n"));
    assert_rerun_identical("node-classify", &out, &[]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn node_classify_reads_graph_directories() {
    let dir = scratch("classify_dir");
    let data = dir.join("data");
    run_ok(&["gen-sbm", "--seed", "3", "--n", "30", "--out", data.to_str().unwrap()]);
    let out = dir.join("a");
    run_ok(&[
        "node-classify",
        "--data",
        data.to_str().unwrap(),
        "--model",
        "gcn",
        "--repeats",
        "2",
        "--epochs",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    let report = read_json(&out.join("metrics.json"));
    assert_eq!(report["model"], "gcn");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn node_classify_rejects_malformed_files() {
    let dir = scratch("badml");
    let data = dir.join("data");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(data.join("features.csv"), "1.0,2.0\n3.0,oops\n").unwrap();
    std::fs::write(data.join("graph.edges"), "0\t1\n").unwrap();
    let out = run(&[
        "node-classify",
        "--data",
        data.to_str().unwrap(),
        "--out",
        dir.join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("features.csv:2"), "stderr: {stderr}");
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn sweep_is_deterministic_for_fixed_seed() {
    let dir = scratch("sweep");
    let a = dir.join("a");
    let b = dir.join("b");
    for out in [&a, &b] {
        run_ok(&[
            "sweep",
            "--budget",
            "3",
            "--seed",
            "1",
            "--epochs",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    assert_eq!(dir_bytes(&a), dir_bytes(&b));
    let report = read_json(&a.join("sweep.json"));
    fmp_cli::schema::validate("sweep", &report).unwrap();
    assert_eq!(report["trials"].as_array().unwrap().len(), 3);
    // Sampled values stay inside the search space.
    for trial in report["trials"].as_array().unwrap() {
        let lr = trial["learningRate"].as_f64().unwrap();
        assert!((1e-3..=1e-2).contains(&lr));
        let wd = trial["weightDecay"].as_f64().unwrap();
        assert!((1e-3..=1e-1).contains(&wd));
        let dropout = trial["dropout"].as_f64().unwrap();
        assert!((0.0..=0.8).contains(&dropout));
        let hidden = trial["hiddenDim"].as_u64().unwrap();
        assert!([64, 128, 256].contains(&hidden));
        let layers = trial["layers"].as_u64().unwrap();
        assert!((1..=10).contains(&layers));
    }
    assert_rerun_identical("sweep", &a, &[]);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn config_for_wrong_command_is_rejected() {
    let dir = scratch("wrongcfg");
    let out = dir.join("a");
    run_ok(&["gen-sbm", "--seed", "1", "--n", "10", "--out", out.to_str().unwrap()]);
    let second = run(&[
        "sweep",
        "--config",
        out.join("run.json").to_str().unwrap(),
        "--out",
        dir.join("b").to_str().unwrap(),
    ]);
    assert_eq!(second.status.code(), Some(2));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn explicit_flags_override_config_file() {
    let dir = scratch("override");
    let a = dir.join("a");
    run_ok(&["gen-sbm", "--seed", "1", "--n", "10", "--out", a.to_str().unwrap()]);
    let b = dir.join("b");
    run_ok(&[
        "gen-sbm",
        "--config",
        a.join("run.json").to_str().unwrap(),
        "--n",
        "14",
        "--out",
        b.to_str().unwrap(),
    ]);
    let rerun = read_json(&b.join("run.json"));
    assert_eq!(rerun["config"]["n"], 14);
    let features = std::fs::read_to_string(b.join("features.csv")).unwrap();
    assert_eq!(features.lines().count(), 14);
    std::fs::remove_dir_all(&dir).unwrap();
}
