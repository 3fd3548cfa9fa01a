use std::path::Path;
use std::process::{Command, Output};

fn vowelspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vowelspace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, speakers: &str) {
    let out = vowelspace(&["synth", "-o", s(dir), "--speakers", speakers, "--tokens-per-vowel", "1", "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cohort_success_and_report_rerender() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "4");
    let rep = tmp.path().join("rep");
    let out = vowelspace(&["cohort", s(&data.join("manifest.csv")), "-o", s(&rep)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["features.csv", "group_stats.json", "correlations.json", "results.json", "plots/vowel_space_auto.svg"] {
        assert!(rep.join(f).is_file(), "{f} missing");
    }
    let again = tmp.path().join("again");
    let out = vowelspace(&["report", s(&rep.join("results.json")), "-o", s(&again)]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["features.csv", "group_stats.json", "correlations.json"] {
        assert_eq!(std::fs::read(rep.join(f)).unwrap(), std::fs::read(again.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn partial_failure_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    synth(&data, "4");
    std::fs::remove_file(data.join("syn001.wav")).unwrap();
    let rep = tmp.path().join("rep");
    let out = vowelspace(&["cohort", s(&data.join("manifest.csv")), "-o", s(&rep)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syn001"));
    let csv = std::fs::read_to_string(rep.join("features.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("syn001,") && l.contains(",failed,")));
}

#[test]
fn fatal_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("manifest.csv");
    std::fs::write(&bad, "speaker_id,group\nx,control\n").unwrap();
    let out = vowelspace(&["cohort", s(&bad), "-o", s(&tmp.path().join("rep"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("rep").exists());
    assert_eq!(vowelspace(&["analyze", "missing.wav", "missing.csv"]).status.code(), Some(1));
    assert_eq!(vowelspace(&["analyze", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(vowelspace(&["config", "--alpha", "1.5"]).status.code(), Some(1));
}

#[test]
fn analyze_and_manual_print_all_estimators() {
    let tmp = tempfile::tempdir().unwrap();
    synth(tmp.path(), "2");
    let wav = tmp.path().join("syn000.wav");
    let out = vowelspace(&["analyze", s(&wav), s(&tmp.path().join("syn000.pg.csv"))]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for e in ["mean", "p50", "p70", "p90"] {
        assert!(text.lines().any(|l| l.starts_with(e)), "{e} missing in\n{text}");
    }
    let json = tmp.path().join("m.json");
    let out = vowelspace(&[
        "manual",
        s(&wav),
        s(&tmp.path().join("syn000.ann.csv")),
        "--estimators",
        "mean",
        "--json",
        s(&json),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["estimators"].as_array().unwrap().len(), 1);
}

#[test]
fn config_overrides_apply() {
    let out = vowelspace(&["config", "--k", "3", "--corner-only", "--trim-threshold-db", "-30", "--sequential"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("k = 3"));
    assert!(text.contains("corner_only = true"));
    assert!(text.contains("trim_threshold_db = -30"));
    assert!(text.contains("execution = \"sequential\""));
}
