//! End-to-end tests driving the installed binary.

use std::path::Path;
use std::process::{Command, Output};

use s2df_core::field::{save_checkpoint, LayerParams, SirenNet};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_s2df"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stderr_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_text(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// 64 points on the circle of radius 0.5 centered at the origin.
fn write_circle(path: &Path) {
    let mut text = String::new();
    for i in 0..64 {
        let theta = std::f64::consts::TAU * i as f64 / 64.0;
        text.push_str(&format!(
            "{} {}\n",
            0.5 * theta.cos(),
            0.5 * theta.sin()
        ));
    }
    std::fs::write(path, text).unwrap();
}

fn manifest_config(path: &Path) -> serde_json::Map<String, serde_json::Value> {
    let text = std::fs::read_to_string(path).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    value["config"].as_object().unwrap().clone()
}

/// `0.105 + 0.1 sin(30 x)`: a band of vertical iso-lines under the default
/// offset, mimicking a trained field's shape without the training cost.
fn striped_net() -> SirenNet {
    SirenNet {
        layers: vec![
            LayerParams {
                w: vec![1.0, 0.0],
                b: vec![0.0],
                rows: 1,
                cols: 2,
            },
            LayerParams {
                w: vec![0.1],
                b: vec![0.105],
                rows: 1,
                cols: 1,
            },
        ],
        omega0: 30.0,
        input_dim: 2,
    }
}

fn constant_net(value: f64) -> SirenNet {
    SirenNet {
        layers: vec![LayerParams {
            w: vec![0.0, 0.0],
            b: vec![value],
            rows: 1,
            cols: 2,
        }],
        omega0: 30.0,
        input_dim: 2,
    }
}

#[test]
fn train_smoke_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("circle.xyz");
    write_circle(&cloud);
    let out = dir.path().join("run");
    let res = run(&[
        "train",
        "--input",
        cloud.to_str().unwrap(),
        "--dim",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--iters",
        "25",
        "--hidden",
        "8,8",
        "--batch",
        "32",
        "--seed",
        "7",
    ]);
    assert_eq!(exit_code(&res), 0, "stderr: {}", stderr_text(&res));
    for name in ["final.ckpt", "history.csv", "run.json", "transform.json"] {
        assert!(out.join(name).exists(), "missing {name}");
    }
    let history = std::fs::read_to_string(out.join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 26);

    let config = manifest_config(&out.join("run.json"));
    assert_eq!(config["iterations"], "25");
    assert_eq!(config["weight_dirichlet"], "100000000");
    assert!(
        !config.contains_key("weights"),
        "manifest echoes resolved weights, not the preset name"
    );
}

#[test]
fn manifest_rerun_reproduces_the_checkpoint_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("circle.xyz");
    write_circle(&cloud);
    let first = dir.path().join("a");
    let res = run(&[
        "train",
        "--input",
        cloud.to_str().unwrap(),
        "--dim",
        "2",
        "--out",
        first.to_str().unwrap(),
        "--iters",
        "15",
        "--hidden",
        "8",
        "--batch",
        "16",
        "--seed",
        "3",
    ]);
    assert_eq!(exit_code(&res), 0, "stderr: {}", stderr_text(&res));

    let second = dir.path().join("b");
    let manifest = first.join("run.json");
    let rerun = run(&[
        "train",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&rerun), 0, "stderr: {}", stderr_text(&rerun));

    let a = std::fs::read(first.join("final.ckpt")).unwrap();
    let b = std::fs::read(second.join("final.ckpt")).unwrap();
    assert_eq!(a, b, "rerun from the manifest diverged");
}

#[test]
fn missing_input_exits_2() {
    let res = run(&["train", "--input", "/nonexistent/cloud.xyz", "--dim", "2"]);
    assert_eq!(exit_code(&res), 2);
    assert!(stderr_text(&res).contains("error"));
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "iteratons = 10\n").unwrap();
    let res = run(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(exit_code(&res), 2);
    assert!(stderr_text(&res).contains("iteratons"));
}

#[test]
fn unknown_flag_exits_2() {
    let res = run(&["train", "--bogus-flag", "1"]);
    assert_eq!(exit_code(&res), 2);
}

#[test]
fn weight_preset_and_loss_variant_resolve_into_the_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("circle.xyz");
    write_circle(&cloud);
    let out = dir.path().join("run");
    let res = run(&[
        "train",
        "--input",
        cloud.to_str().unwrap(),
        "--dim",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--iters",
        "5",
        "--hidden",
        "8",
        "--batch",
        "16",
        "--weights",
        "watertight",
        "--loss",
        "eikonal-prime",
    ]);
    assert_eq!(exit_code(&res), 0, "stderr: {}", stderr_text(&res));
    let config = manifest_config(&out.join("run.json"));
    assert_eq!(config["weight_ma"], "0.006");
    assert_eq!(config["loss"], "eikonal-prime");
}

#[test]
fn extract_contours_the_field_where_it_crosses_the_offset() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("net.ckpt");
    save_checkpoint(&striped_net(), &ckpt).unwrap();
    let out = dir.path().join("iso");
    let res = run(&[
        "extract",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--res",
        "96",
        "--dump-field",
    ]);
    assert_eq!(exit_code(&res), 0, "stderr: {}", stderr_text(&res));
    assert!(out.join("field.csv").exists());
    assert!(out.join("run.json").exists());

    let csv = std::fs::read_to_string(out.join("contours.csv")).unwrap();
    let mut rows = 0;
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let x: f64 = cols[1].parse().unwrap();
        // Default iso 5e-3 on g = sqrt(f/1000) crosses where f = 0.025,
        // i.e. where sin(30x) = -0.8.
        assert!(
            ((30.0 * x).sin() + 0.8).abs() < 0.1,
            "vertex x={x} off the expected stripe"
        );
        rows += 1;
    }
    assert!(rows > 50, "expected many stripe vertices, got {rows}");
}

#[test]
fn extract_maps_vertices_through_the_transform_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("net.ckpt");
    save_checkpoint(&striped_net(), &ckpt).unwrap();
    std::fs::write(
        dir.path().join("transform.json"),
        "{\"center\":[\"1\",\"2\"],\"scale\":\"2\"}\n",
    )
    .unwrap();
    let out = dir.path().join("iso");
    let res = run(&[
        "extract",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--res",
        "64",
    ]);
    assert_eq!(exit_code(&res), 0, "stderr: {}", stderr_text(&res));
    let csv = std::fs::read_to_string(out.join("contours.csv")).unwrap();
    let max_x = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    // Normalized coordinates stay within +-1.03; only the sidecar mapping
    // x -> 2x + 1 can push vertices past that.
    assert!(max_x > 1.5, "sidecar not applied, max x = {max_x}");
}

#[test]
fn extract_of_a_flat_field_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = dir.path().join("net.ckpt");
    save_checkpoint(&constant_net(0.2), &ckpt).unwrap();
    let out = dir.path().join("iso");
    let res = run(&[
        "extract",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--res",
        "48",
    ]);
    assert_eq!(exit_code(&res), 4, "stderr: {}", stderr_text(&res));
    assert!(stderr_text(&res).contains("empty"));
}

#[test]
fn eval_scores_identical_meshes_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("tri.obj");
    std::fs::write(&mesh, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
    let out = dir.path().join("scores");
    let res = run(&[
        "eval",
        "--recon",
        mesh.to_str().unwrap(),
        "--truth",
        mesh.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--n-samples",
        "500",
        "--seed",
        "1",
    ]);
    assert_eq!(exit_code(&res), 0, "stderr: {}", stderr_text(&res));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("tri,"), "row: {row}");
    assert!(row.contains(",0,100,100,"), "row: {row}");
}

#[test]
fn eval_on_identical_unoriented_clouds_skips_normals() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("circle.xyz");
    write_circle(&cloud);
    let out = dir.path().join("scores");
    let res = run(&[
        "eval",
        "--recon",
        cloud.to_str().unwrap(),
        "--truth",
        cloud.to_str().unwrap(),
        "--dim",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&res), 0, "stderr: {}", stderr_text(&res));
    let csv = std::fs::read_to_string(out.join("metrics.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.contains(",0,NaN,100,"), "row: {row}");
    assert!(stderr_text(&res).to_lowercase().contains("normal"));
}

#[test]
fn verify_passes_on_every_builtin_primitive() {
    let res = run(&["verify"]);
    assert_eq!(exit_code(&res), 0, "stdout: {}", stdout_text(&res));
    let text = stdout_text(&res);
    assert!(text.contains("PASS"));
    assert!(!text.contains("FAIL"), "stdout: {text}");
}

#[test]
fn verify_rejects_an_unknown_primitive() {
    let res = run(&["verify", "--primitive", "torus"]);
    assert_eq!(exit_code(&res), 2);
}

#[test]
fn ablate_emits_one_row_per_loss_combination() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("circle.xyz");
    write_circle(&cloud);
    let out = dir.path().join("matrix");
    let res = run(&[
        "ablate",
        "--input",
        cloud.to_str().unwrap(),
        "--dim",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--mode",
        "loss-combos",
        "--iters",
        "8",
        "--hidden",
        "8",
        "--batch",
        "16",
        "--res",
        "48",
        "--seed",
        "3",
    ]);
    assert_eq!(exit_code(&res), 0, "stderr: {}", stderr_text(&res));
    let csv = std::fs::read_to_string(out.join("ablate.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "variant,k,loss,cd_x1e3,components,status");
    assert_eq!(lines.len(), 9, "one row per combination: {csv}");
    for line in &lines[1..] {
        let status = line.rsplit(',').next().unwrap();
        assert!(
            ["ok", "empty", "failed"].contains(&status),
            "bad status in {line}"
        );
    }
    assert!(out.join("full").join("final.ckpt").exists());
    assert!(out.join("run.json").exists());
}

#[test]
fn thread_flag_is_accepted() {
    let res = run(&["--threads", "1", "verify", "--primitive", "sphere", "--n", "64"]);
    assert_eq!(exit_code(&res), 0, "stdout: {}", stdout_text(&res));
}

#[test]
fn help_lists_every_subcommand() {
    let res = run(&["--help"]);
    assert_eq!(exit_code(&res), 0);
    let text = stdout_text(&res);
    for cmd in ["train", "extract", "eval", "verify", "ablate"] {
        assert!(text.contains(cmd), "help lacks {cmd}");
    }
}
