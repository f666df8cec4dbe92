use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_robust-bc"));
    c.env_remove("ROBUST_BC_OUTPUT_DIR");
    c
}

fn quick() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/quick.toml")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn check_lists_and_runs() {
    let list = bin().args(["check", "--list"]).output().unwrap();
    assert!(list.status.success());
    assert!(stdout(&list).lines().any(|l| l == "gaussian-limit"));

    let run = bin().args(["check", "--only", "trigamma-identities"]).output().unwrap();
    assert!(run.status.success());
    let out = stdout(&run);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("PASS trigamma-identities"));
}

#[test]
fn unknown_check_is_config_error() {
    let o = bin().args(["check", "--only", "nope"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error[config]"));
}

#[test]
fn missing_config_is_io_error() {
    let o = bin().args(["sweep", "--config", "/no/such/file.toml"]).output().unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn bad_config_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(quick()).unwrap();
    std::fs::write(&path, text.replace("batch_size = 32", "batch_size = 0")).unwrap();
    let o = bin().args(["sweep", "--config"]).arg(&path).output().unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("train.batch_size"));
}

#[test]
fn generate_writes_demo_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["generate", "--seed", "3", "--config"])
        .arg(quick())
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["expert.csv", "amateur.csv", "validation.csv"] {
        let trajs = robust_bc::bc::load_demos(&dir.path().join(name)).unwrap();
        assert!(!trajs.is_empty(), "{name}");
    }
    let expert = robust_bc::bc::load_demos(&dir.path().join("expert.csv")).unwrap();
    assert_eq!(expert.len(), 140);
}

#[test]
fn train_single_cell_writes_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["train", "--arm", "t_adam", "--seed", "1", "--amateur", "30", "--config"])
        .arg(quick())
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.lines().nth(1).unwrap().starts_with("1,t_adam,30,"));
    assert!(robust_bc::nn::PolicyNet::load(&dir.path().join("model.json")).is_ok());
    let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
}

#[test]
fn unknown_arm_fails() {
    let o = bin()
        .args(["train", "--arm", "sgd", "--config"])
        .arg(quick())
        .output()
        .unwrap();
    assert!(!o.status.success());
}

#[test]
fn output_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env("ROBUST_BC_OUTPUT_DIR", dir.path())
        .args(["generate", "--config"])
        .arg(quick())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(dir.path().join("expert.csv").exists());
}

#[test]
fn sweep_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["sweep", "--config"])
        .arg(quick())
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["runs.csv", "summary.csv", "diagnostics.csv", "curves.csv", "manifest.json"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 3 * 3 * 3);
}
