use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mmsounder"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn schedule_writes_csv_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["schedule", scenario("hall_comparison.json").to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("horn: 2601 steps"), "{text}");
    assert!(text.contains("phased_array: 5625 steps over 25 gimbal pairs, 84.375 s"), "{text}");
    let csv = std::fs::read_to_string(dir.path().join("horn_schedule.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2602);
    assert!(csv.starts_with("step_index,tx_az,tx_el,rx_az,rx_el,dwell_s"));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"version": 1, "name": "x"}"#).unwrap();
    let out = bin().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn wrong_version_exits_2() {
    let text = std::fs::read_to_string(scenario("indoor_arc.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["version"] = 99.into();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("v99.json");
    std::fs::write(&p, v.to_string()).unwrap();
    let out = bin().arg("run").arg(&p).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_scenario_exits_3() {
    let out = bin().args(["run", "/nonexistent/scenario.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", scenario("indoor_arc.json").to_str().unwrap(), "--jobs", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("report.json").is_file());
    assert!(dir.path().join("coverage_echo.csv").is_file());
    let rep = bin().arg("report").arg(dir.path()).output().unwrap();
    assert!(rep.status.success());
    let run_lines = String::from_utf8(out.stdout).unwrap();
    let rep_lines = String::from_utf8(rep.stdout).unwrap();
    // report reprints the run summary, minus the trailing "wrote …" line
    assert!(run_lines.starts_with(&rep_lines));
}

#[test]
fn report_on_empty_dir_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("report").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
}
