//! Contract tests for the experiment runner: exit codes, error shape,
//! artifact presence, the --out override, and config-driven determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_siglearn"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).into_owned();
    assert_eq!(
        text.trim_end().lines().count(),
        1,
        "stderr should be a single line, got: {text:?}"
    );
    text.trim_end().to_string()
}

const BUSSGANG_BODY: &str = "seed = 9\nnonlinearity = soft-limiter\nclip = 1\nsignal_variance = 1\nsamples = 5000\n";

#[test]
fn success_writes_artifacts_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let cfg = write_config(
        tmp.path(),
        "bg.cfg",
        &format!("{BUSSGANG_BODY}out_dir = {}\n", out_dir.display()),
    );
    let out = run(&["bussgang", "--config", &cfg]);
    assert!(out.status.success(), "stderr: {:?}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("bussgang.csv").is_file());

    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.starts_with("manifest 1\ncommand bussgang\nelapsed_seconds "));
    assert!(manifest.contains("config:\n"));
    assert!(manifest.contains("clip = 1\n"));
    assert!(manifest.contains(&format!("out_dir = {}\n", out_dir.display())));

    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("gain"), "summary: {summary}");
}

#[test]
fn missing_seed_names_the_field_and_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.cfg",
        "nonlinearity = identity\nsignal_variance = 1\nsamples = 100\nout_dir = /tmp\n",
    );
    let out = run(&["bussgang", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(line.contains("missing field \"seed\""), "{line}");
}

#[test]
fn unknown_field_is_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let cfg = write_config(
        tmp.path(),
        "bad.cfg",
        &format!(
            "{BUSSGANG_BODY}typo_field = 1\nout_dir = {}\n",
            out_dir.display()
        ),
    );
    let out = run(&["bussgang", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).contains("unknown field \"typo_field\""));
    // Validation failed, so no artifacts appeared.
    assert!(!out_dir.join("bussgang.csv").exists());
}

#[test]
fn unknown_subcommand_exits_1_with_one_line() {
    let out = run(&["frobnicate", "--config", "/nonexistent"]);
    assert_eq!(out.status.code(), Some(1));
    let line = stderr_line(&out);
    assert!(line.starts_with("error: usage:"), "{line}");
    assert!(line.contains("frobnicate"), "{line}");
}

#[test]
fn malformed_config_line_is_located() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "bad.cfg", "seed = 1\nno equals sign here\n");
    let out = run(&["bussgang", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).contains("line 2"));
}

#[test]
fn invalid_value_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.cfg",
        "seed = 9\nnonlinearity = soft-limiter\nclip = -1\nsignal_variance = 1\nsamples = 5000\nout_dir = /tmp\n",
    );
    let out = run(&["bussgang", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("error: validation:"));
}

#[test]
fn unwritable_out_dir_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = write_config(
        tmp.path(),
        "bg.cfg",
        &format!("{BUSSGANG_BODY}out_dir = {}/sub\n", blocker.display()),
    );
    let out = run(&["bussgang", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).contains("output directory"));
}

#[test]
fn runtime_failure_exits_2() {
    // batch_size far beyond the training-set size only surfaces once
    // training starts, which is the runtime failure class.
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let cfg = write_config(
        tmp.path(),
        "dt.cfg",
        &format!(
            "seed = 4\nnoise_variance = 0.2\nper_point = 5\nhidden = 4\nfeature_map = raw\n\
             optimizer = adam\nlearning_rate = 0.001\nbatch_size = 4096\nepochs = 1\nout_dir = {}\n",
            out_dir.display()
        ),
    );
    let out = run(&["detect-train", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_line(&out).starts_with("error: runtime:"));
}

#[test]
fn out_flag_overrides_config_and_lands_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let flag_dir = tmp.path().join("flagged");
    let cfg = write_config(
        tmp.path(),
        "bg.cfg",
        &format!("{BUSSGANG_BODY}out_dir = {}/ignored\n", tmp.path().display()),
    );
    let out = run(&["bussgang", "--config", &cfg, "--out", flag_dir.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(flag_dir.join("bussgang.csv").is_file());
    assert!(!tmp.path().join("ignored").exists());
    let manifest = fs::read_to_string(flag_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains(&format!("out_dir = {}\n", flag_dir.display())));
}

#[test]
fn detect_train_writes_network_and_full_loss_history() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let cfg = write_config(
        tmp.path(),
        "dt.cfg",
        &format!(
            "seed = 4\nnoise_variance = 0.2\nper_point = 100\nhidden = 8\nfeature_map = raw\n\
             optimizer = adam\nlearning_rate = 0.001\nbatch_size = 32\nepochs = 3\nout_dir = {}\n",
            out_dir.display()
        ),
    );
    let out = run(&["detect-train", "--config", &cfg]);
    assert!(out.status.success(), "stderr: {:?}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("network.txt").is_file());
    let history = fs::read_to_string(out_dir.join("loss_history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("epoch,loss"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn rerun_with_same_config_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let cfg = write_config(tmp.path(), "bg.cfg", BUSSGANG_BODY);
    for dir in [&a, &b] {
        let out = run(&["bussgang", "--config", &cfg, "--out", dir.to_str().unwrap()]);
        assert!(out.status.success());
    }
    let csv_a = fs::read(a.join("bussgang.csv")).unwrap();
    let csv_b = fs::read(b.join("bussgang.csv")).unwrap();
    assert_eq!(csv_a, csv_b);
}
