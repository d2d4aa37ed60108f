//! End-to-end CLI behavior: flags, exit codes, manifests, and outputs.

use std::path::Path;
use std::process::{Command, Output};

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voxel2vec"))
        .args(args)
        .output()
        .expect("spawn CLI")
}

fn ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what}: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

#[test]
fn gen_single_step_writes_four_variables_and_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("data");
    let out = run_cli(&[
        "gen", "--abc", "--t", "0", "--dims", "8",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    ok(&out, "gen");
    for name in ["vx.raw", "vy.raw", "vz.raw", "s1.raw", "dataset.json"] {
        assert!(out_dir.join(name).exists(), "{name} missing");
    }
    let desc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("dataset.json")).unwrap())
            .unwrap();
    assert_eq!(desc["dims"], serde_json::json!([8, 8, 8]));
    assert_eq!(desc["variables"].as_object().unwrap().len(), 4);
    // 8^3 float32 voxels.
    assert_eq!(
        std::fs::metadata(out_dir.join("s1.raw")).unwrap().len(),
        8 * 8 * 8 * 4
    );
}

#[test]
fn gen_full_sweep_has_81_members() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("sweep");
    let out = run_cli(&[
        "gen", "--abc", "--t", "0", "--dims", "4",
        "--sweep", "A=-2:2:0.5,B=-2:2:0.5",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    ok(&out, "gen sweep");
    let desc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("dataset.json")).unwrap())
            .unwrap();
    assert_eq!(desc["ensemble"].as_object().unwrap().len(), 81);
}

#[test]
fn gen_regeneration_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "gen".to_string(),
            "--abc".into(),
            "--t".into(),
            "5".into(),
            "--dims".into(),
            "6".into(),
            "--seed".into(),
            "3".into(),
            "--out-dir".into(),
            out.display().to_string(),
        ]
    };
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(
        &run_cli(&args(&a).iter().map(String::as_str).collect::<Vec<_>>()),
        "gen a",
    );
    ok(
        &run_cli(&args(&b).iter().map(String::as_str).collect::<Vec<_>>()),
        "gen b",
    );
    for name in ["vx.raw", "vy.raw", "vz.raw", "s1.raw", "dataset.json"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name} differs between identical runs"
        );
    }
}

#[test]
fn train_defaults_follow_recommended_settings_and_manifest_records_them() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(
        &run_cli(&["gen", "--abc", "--t", "0", "--dims", "10", "--out-dir", data.to_str().unwrap()]),
        "gen",
    );
    let train = dir.path().join("train");
    ok(
        &run_cli(&[
            "train", "--input", data.join("dataset.json").to_str().unwrap(),
            "--vars", "s1", "--out-dir", train.to_str().unwrap(),
        ]),
        "train",
    );
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(train.join("train.manifest.json")).unwrap(),
    )
    .unwrap();
    let cfg = &manifest["params"]["config"];
    assert_eq!(cfg["context_window"], 1);
    assert_eq!(cfg["negatives"], 3);
    assert_eq!(cfg["dimension"], 30);
    assert_eq!(cfg["penalty"], 0.005);
    assert_eq!(cfg["learning_rate"], 0.05);
    assert_eq!(cfg["batch_size"], 1000);
    assert_eq!(cfg["epochs"], 1);
    let r = cfg["quantization"].as_u64().unwrap();
    assert!((32..=256).contains(&r), "default R {r} outside [32, 256]");
    // Every config field is materialized in the manifest.
    for key in [
        "context_window", "negatives", "dimension", "learning_rate", "penalty",
        "quantization", "batch_size", "epochs", "seed", "subsample_threshold",
        "min_samples_per_symbol", "exclude_context", "self_paced",
    ] {
        assert!(!cfg[key].is_null(), "manifest missing default for {key}");
    }
    assert_eq!(manifest["deterministic"], true);
    assert!(!manifest["input_hashes"].as_object().unwrap().is_empty());
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(
        &run_cli(&["gen", "--abc", "--t", "0", "--dims", "8", "--out-dir", data.to_str().unwrap()]),
        "gen",
    );
    let cfg_path = dir.path().join("train.json");
    std::fs::write(&cfg_path, r#"{"negatives": 5, "quantization": 8}"#).unwrap();

    let t1 = dir.path().join("t1");
    ok(
        &run_cli(&[
            "train", "--input", data.join("dataset.json").to_str().unwrap(), "--vars", "s1",
            "--config", cfg_path.to_str().unwrap(), "--out-dir", t1.to_str().unwrap(),
        ]),
        "train with config",
    );
    let m1: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t1.join("train.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m1["params"]["config"]["negatives"], 5);

    let t2 = dir.path().join("t2");
    ok(
        &run_cli(&[
            "train", "--input", data.join("dataset.json").to_str().unwrap(), "--vars", "s1",
            "--config", cfg_path.to_str().unwrap(), "--k", "7",
            "--out-dir", t2.to_str().unwrap(),
        ]),
        "train with override",
    );
    let m2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(t2.join("train.manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m2["params"]["config"]["negatives"], 7);
}

#[test]
fn exit_codes_distinguish_usage_data_and_success() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(
        &run_cli(&["gen", "--abc", "--t", "0", "--dims", "8", "--out-dir", data.to_str().unwrap()]),
        "gen",
    );
    let descriptor = data.join("dataset.json");
    let out_dir = dir.path().join("out");

    // Missing variable name: usage error.
    let out = run_cli(&[
        "train", "--input", descriptor.to_str().unwrap(), "--vars", "missing",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));

    // Unknown flag: usage error from the parser.
    let out = run_cli(&["train", "--nonsense"]);
    assert_eq!(code(&out), 2);

    // Invalid hyper-parameter: usage error.
    let out = run_cli(&[
        "train", "--input", descriptor.to_str().unwrap(), "--vars", "s1", "--rho", "2.0",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);

    // Not an embedding file: data error.
    let out = run_cli(&[
        "simmap", "--embedding", data.join("s1.raw").to_str().unwrap(),
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);

    // Missing input file: data error.
    let out = run_cli(&[
        "train", "--input", dir.path().join("nope.json").to_str().unwrap(), "--vars", "s1",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);

    // Truncated raw file behind a valid descriptor: data error.
    let bytes = std::fs::read(data.join("s1.raw")).unwrap();
    std::fs::write(data.join("s1.raw"), &bytes[..bytes.len() - 4]).unwrap();
    let out = run_cli(&[
        "train", "--input", descriptor.to_str().unwrap(), "--vars", "s1",
        "--out-dir", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn classify_rejects_mismatched_quantization() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(
        &run_cli(&["gen", "--abc", "--t", "0", "--dims", "10", "--out-dir", data.to_str().unwrap()]),
        "gen",
    );
    let train = dir.path().join("train");
    ok(
        &run_cli(&[
            "train", "--input", data.join("dataset.json").to_str().unwrap(),
            "--vars", "s1", "--R", "16", "--out-dir", train.to_str().unwrap(),
        ]),
        "train",
    );
    // Re-symbolizing at a different level count cannot match the embedding.
    let out = run_cli(&[
        "classify", "--embedding", train.join("embedding.v2v").to_str().unwrap(),
        "--input", data.join("dataset.json").to_str().unwrap(),
        "--vars", "s1", "--R", "32",
        "--out-dir", dir.path().join("cls").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn deterministic_flag_rejects_multiple_threads() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&[
        "train", "--input", "whatever.json", "--vars", "s1",
        "--threads", "4", "--deterministic",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn threads_env_fallback_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_voxel2vec"))
        .args([
            "train", "--input", "whatever.json", "--vars", "s1", "--deterministic",
            "--out-dir", dir.path().to_str().unwrap(),
        ])
        .env("V2V_THREADS", "4")
        .output()
        .expect("spawn CLI");
    // --deterministic must reject the env-provided thread count too.
    assert_eq!(code(&out), 2);
}

#[test]
fn rerun_refuses_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(
        &run_cli(&["gen", "--abc", "--t", "0", "--dims", "8", "--out-dir", data.to_str().unwrap()]),
        "gen",
    );
    let train = dir.path().join("train");
    ok(
        &run_cli(&[
            "train", "--input", data.join("dataset.json").to_str().unwrap(),
            "--vars", "s1", "--R", "8", "--out-dir", train.to_str().unwrap(),
        ]),
        "train",
    );
    // Tamper with an input the manifest hashed.
    let mut bytes = std::fs::read(data.join("s1.raw")).unwrap();
    bytes[0] ^= 0xFF;
    std::fs::write(data.join("s1.raw"), &bytes).unwrap();
    let out = run_cli(&[
        "rerun", "--manifest", train.join("train.manifest.json").to_str().unwrap(),
        "--out-dir", dir.path().join("again").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn time_varying_ensemble_yields_per_step_heatmap_grid() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("tve");
    ok(
        &run_cli(&[
            "gen", "--abc", "--dims", "8", "--t", "0:10:5", "--sweep", "A=0:1:1,B=0:1:1",
            "--out-dir", data.to_str().unwrap(),
        ]),
        "gen tve",
    );
    let out_dir = dir.path().join("assoc");
    ok(
        &run_cli(&[
            "associate", "--input", data.join("dataset.json").to_str().unwrap(),
            "--vars", "s1", "--R", "8", "--out-dir", out_dir.to_str().unwrap(),
        ]),
        "associate tve",
    );
    assert!(out_dir.join("association_grid.png").exists());
    // One matrix per time step, each 4x4 over the A,B members.
    for t in ["t_0", "t_5", "t_10"] {
        let csv = std::fs::read_to_string(out_dir.join(format!("assoc_{t}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 5, "header + 4 member rows for {t}");
    }
}

#[test]
fn multi_member_train_requires_member_choice() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("series");
    ok(
        &run_cli(&[
            "gen", "--abc", "--t", "0:10:5", "--dims", "8", "--out-dir", data.to_str().unwrap(),
        ]),
        "gen",
    );
    let out = run_cli(&[
        "train", "--input", data.join("dataset.json").to_str().unwrap(), "--vars", "s1",
        "--out-dir", dir.path().join("train").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("t=0"));
}
