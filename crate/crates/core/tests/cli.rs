use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_meshless-stokes"))
}

#[test]
fn help_lists_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["converge", "cylinders", "channel", "shear", "notch", "cloud-dump", "solve-once"] {
        assert!(text.contains(sub), "missing {sub}");
    }
}

#[test]
fn cloud_dump_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["cloud-dump", "--seed", "7", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("cloud.csv")).unwrap();
    assert!(csv.starts_with("x,y,region"));
    assert!(csv.lines().count() > 10);
    let summary = std::fs::read_to_string(dir.path().join("summary.jsonl")).unwrap();
    let v: serde_json::Value = serde_json::from_str(summary.lines().next().unwrap()).unwrap();
    assert_eq!(v["scenario"], "cloud-dump");
    assert!(dir.path().join("config.toml").exists());
}

#[test]
fn solve_once_reports_krylov_history() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/channel.toml");
    let out = bin()
        .args(["solve-once", "--order", "2", "--config", cfg, "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("field.csv").exists());
    let krylov = std::fs::read_to_string(dir.path().join("krylov.csv")).unwrap();
    let row: Vec<&str> = krylov.lines().nth(1).unwrap().split(',').collect();
    assert!(row[1].parse::<usize>().unwrap() > 0);
}

#[test]
fn bad_config_fails_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "nu = -1.0\n").unwrap();
    let out = bin().arg("solve-once").arg("--config").arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn rejects_unsupported_order() {
    let out = bin().args(["solve-once", "--order", "3", "--out", "/nonexistent/never"]).output().unwrap();
    assert!(!out.status.success());
}
