use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn voforge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_voforge"))
        .args(args)
        .current_dir(fixtures())
        .env_remove("VOFORGE_SEARCH_CAP")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn validate_clean_fixture() {
    let o = voforge(&["validate", "visitus.vbe"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "0 finding(s)\n");
}

#[test]
fn validate_reports_findings() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.vbe");
    std::fs::write(&path, "VBE v is\n  task nowhere;\nEND\n").unwrap();
    let o = voforge(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("UnknownTask "), "{}", stdout(&o));
}

#[test]
fn low_refund_is_one_violation() {
    let o = voforge(&[
        "check-trace", "visitus.vbe", "--spec", "Customer", "--trace", "refund_low.trc", "--sla", "KD=10", "PERC=50",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).matches("violated at").count(), 1);
}

#[test]
fn busy_ledger_blocks_removal() {
    let o = voforge(&[
        "evolve", "visitus.vbe", "--config", "fig5", "--action", "remove_travelbk.act", "--ledger", "ledger_busy.ldg",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("QuiescenceViolation"));
    assert!(o.stdout.is_empty());
}

#[test]
fn evolved_bundle_validates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("evolved.vbe");
    let o = voforge(&[
        "evolve", "visitus.vbe", "--config", "fig5", "--action", "remove_weddings.act", "--ledger", "ledger_idle.ldg",
        "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = voforge(&["validate", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn negotiation_outcomes() {
    let o = voforge(&["negotiate", "visitus.vbe", "--vo", "travelBK", "--prefs", "prefs_d4.pol"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("TR.PERC = 70\n"));
    let o = voforge(&["negotiate", "visitus.vbe", "--vo", "travelBK", "--prefs", "prefs_p95.pol"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "no agreement\n");
}

#[test]
fn search_cap_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_voforge"))
        .args(["negotiate", "visitus.vbe", "--vo", "travelBK", "--prefs", "prefs_d4.pol"])
        .current_dir(fixtures())
        .env("VOFORGE_SEARCH_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exceed the search cap of 100"), "{}", stderr(&o));
}

#[test]
fn json_carries_format_version() {
    for args in [
        &["--json", "validate", "visitus.vbe"][..],
        &["--json", "expand", "visitus.vbe", "--config", "fig3"],
        &["--json", "simulate", "visitus.vbe", "--vo", "travelBK", "--script", "booking.script", "--seed", "1"],
    ] {
        let o = voforge(args);
        let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        assert_eq!(v["formatVersion"], 1, "{args:?}");
    }
}

#[test]
fn json_and_plain_agree_on_verdicts() {
    let base = ["check-trace", "visitus.vbe", "--spec", "Customer", "--trace", "refund_low.trc", "--sla", "KD=10", "PERC=50"];
    let plain = stdout(&voforge(&base));
    let mut args = vec!["--json"];
    args.extend(base);
    let v: serde_json::Value = serde_json::from_slice(&voforge(&args).stdout).unwrap();
    let statuses: Vec<&str> = v["verdicts"].as_array().unwrap().iter().map(|v| v["status"].as_str().unwrap()).collect();
    assert_eq!(statuses.len(), plain.lines().filter(|l| l.starts_with("formula")).count());
    assert_eq!(statuses.iter().filter(|s| **s == "violated").count(), plain.matches("violated at").count());
}

#[test]
fn usage_and_io_errors_exit_2() {
    assert_eq!(voforge(&[]).status.code(), Some(2));
    assert_eq!(voforge(&["expand", "visitus.vbe"]).status.code(), Some(2));
    assert_eq!(voforge(&["validate", "missing.vbe"]).status.code(), Some(2));
    assert_eq!(voforge(&["expand", "visitus.vbe", "--config", "nope"]).status.code(), Some(2));
    assert_eq!(voforge(&["check-trace", "visitus.vbe", "--spec", "Customer", "--trace", "refund_ok.trc", "--sla", "KD"]).status.code(), Some(2));
    assert_eq!(voforge(&["--help"]).status.code(), Some(0));
}

#[test]
fn dot_goes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig5.dot");
    let o = voforge(&["export-dot", "visitus.vbe", "--config", "fig5", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let dot = std::fs::read_to_string(out).unwrap();
    assert_eq!(dot, std::fs::read_to_string(fixtures().join("fig5.dot")).unwrap());
}
