use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rmplate::study::read_csv;
use rmplate::{generate_crisscross, MultiplierKind, Rect};

fn rmplate(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmplate")).args(args).current_dir(cwd).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("study.cfg");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn study_writes_csv_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mesh-n = 2, 4\nt = 0.1\nkind = std\n");
    let out = rmplate(&["study", "--config", &cfg], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records = read_csv(&out.stdout[..]).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.kind == MultiplierKind::Standard));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mesh-n = 2\nt = 0.1\nkind = std\n");
    let out = rmplate(
        &["study", "--config", &cfg, "--mesh-n", "2,4", "--t", "0.3,1e-4", "--kind", "dual", "--path", "both", "--out", "r.csv"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let records = read_csv(fs::File::open(dir.path().join("r.csv")).unwrap()).unwrap();
    assert_eq!(records.len(), 8);
    assert!(records.iter().all(|r| r.kind == MultiplierKind::Dual));
    assert_eq!(records[0].t, 1e-4);
}

#[test]
fn mesh_file_flag_is_relative_to_working_directory() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    fs::create_dir(&sub).unwrap();
    generate_crisscross(2, &Rect::UNIT_SQUARE).unwrap().write(dir.path().join("base.mesh")).unwrap();
    let cfg = write_config(&sub, "mesh-n = 0, 1\nt = 0.1\nkind = dual\n");
    let out = rmplate(&["study", "--config", &cfg, "--mesh", "file", "--mesh-file", "base.mesh"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_csv(&out.stdout[..]).unwrap().len(), 2);
}

#[test]
fn invalid_configuration_exits_with_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t = 1.5\n");
    let out = rmplate(&["study", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside (0, 1)"));
    let out = rmplate(&["study", "--config", "missing.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failing_cases_give_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mesh = diagonal\nmesh-n = 2\nt = 0.1\n");
    let out = rmplate(&["study", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed:"));
}

#[test]
fn verify_reports_each_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mesh-n = 4, 8, 16\n");
    let out = rmplate(&["verify", "--config", &cfg], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(text.lines().count() > 5 && text.lines().all(|l| l.starts_with("PASS ")));

    let out = rmplate(&["verify", "--config", &cfg, "--mesh", "diagonal"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("FAIL mesh validation"));
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["convergence.cfg", "uniform_load.cfg"] {
        rmplate::study::StudyConfig::load(dir.join(name), &[]).unwrap();
    }
}
