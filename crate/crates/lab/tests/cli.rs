use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lab"))
}

#[test]
fn lists_and_prints_presets() {
    let out = lab().arg("presets").output().unwrap();
    assert!(out.status.success());
    let names = String::from_utf8(out.stdout).unwrap();
    assert_eq!(names.lines().count(), lab::PRESETS.len());

    let out = lab().args(["presets", "gauge-pair"]).output().unwrap();
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("flow.kind = mrf"));
    assert!(text.contains("experiment = gauge-pair"));
}

#[test]
fn runs_a_preset_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab()
        .args(["run", "--preset", "round-family-all-sigma", "--set", "flow.t_end=1", "--quiet", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.starts_with("round-family-all-sigma [Complete]"));
    let config = std::fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert!(config.contains("flow.t_end = 1"));

    let again = lab().args(["report", "--quiet", "--out"]).arg(dir.path()).output().unwrap();
    assert!(again.status.success());
}

#[test]
fn bad_input_names_the_problem() {
    let out = lab().args(["run", "--preset", "round-family-all-sigma", "--set", "flow.dt=-1"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("flow.dt"));

    let out = lab().args(["run", "--preset", "no-such-thing"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-thing"));
}
