use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_chil-rig");

fn cases_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("cases")
}

#[test]
fn demo_prints_the_shipped_case() {
    let out = Command::new(BIN).args(["demo", "rlctune"]).output().unwrap();
    assert!(out.status.success());
    let shipped = std::fs::read(cases_dir().join("rlctune.json")).unwrap();
    assert_eq!(out.stdout, shipped);
    assert_eq!(
        Command::new(BIN).args(["demo", "nope"]).output().unwrap().status.code(),
        Some(2)
    );
}

#[test]
fn validate_reports_the_hash() {
    let out = Command::new(BIN)
        .arg("validate")
        .arg(cases_dir().join("cvcu.json"))
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("config hash"));
}

#[test]
fn exit_codes_follow_the_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let run = |case: &str, extra: &[&str]| {
        Command::new(BIN)
            .arg("run")
            .arg(cases_dir().join(case))
            .arg("--out")
            .arg(dir.path())
            .args(extra)
            .env_remove("CHIL_ENDPOINT")
            .output()
            .unwrap()
    };
    let pass = run("rlctune.json", &[]);
    assert_eq!(pass.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&pass.stdout).contains("OVERALL: PASS"));
    for f in ["report.json", "report.txt", "trace.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let fail = run("lvrt_fault_injection.json", &["--format", "json"]);
    assert_eq!(fail.status.code(), Some(1));
    let missing = run("does_not_exist.json", &[]);
    assert_eq!(missing.status.code(), Some(2));
    let delayed = run("cvcu.json", &["--delay", "60", "--format", "txt"]);
    assert_eq!(delayed.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&delayed.stdout).contains("delay=60s"));
}
