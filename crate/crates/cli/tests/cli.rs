use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cmdeg(args: &[&str], cache: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmdeg"))
        .args(args)
        .env("CMDEG_CACHE_DIR", cache)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let dir = tempfile::tempdir().unwrap();
    let mut full = args.to_vec();
    full.push("--json");
    let out = cmdeg(&full, dir.path());
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn column(report: &Value, col: &str) -> Vec<String> {
    let table = &report["tables"][0];
    let idx = table["columns"]
        .as_array()
        .unwrap()
        .iter()
        .position(|c| c == col)
        .unwrap_or_else(|| panic!("no column {col}"));
    table["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r[idx].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn cm_degree_of_bundled_examples() {
    assert_eq!(json(&["cm-degree", "examples/negative_degree"])["values"]["cm_degree"], "-12");
    assert_eq!(json(&["cm-degree", "examples/not_nef"])["values"]["cm_degree"], "0");
    assert_eq!(json(&["cm-degree", "examples/no_section_d2"])["values"]["cm_degree"], "12");
}

#[test]
fn ledger_sums_to_the_top_power() {
    let r = json(&["cm-degree", "positive_and_big"]);
    let total: i64 = column(&r, "contribution").iter().map(|c| c.parse::<i64>().unwrap()).sum();
    assert_eq!(total, -12);
}

#[test]
fn volume_and_sections() {
    assert_eq!(json(&["volume", "examples/positive_and_big"])["values"]["volume"], "12");
    // the extra centers on not_nef do not cut any sections of -mK
    let a = json(&["sections", "examples/not_nef", "--m-range", "1..6"]);
    let b = json(&["sections", "examples/positive_and_big", "--m-range", "1..6"]);
    assert_eq!(column(&a, "h0"), column(&b, "h0"));
    assert_eq!(column(&a, "h0")[0], "11");
}

#[test]
fn splitting_of_a_center_free_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p1xp1.json");
    std::fs::write(&path, r#"{"base":{"genus":0},"twists":[-1,1],"centers":[]}"#).unwrap();
    let r = json(&["splitting", path.to_str().unwrap(), "--class", "1,0", "--m", "2"]);
    assert_eq!(r["values"]["degrees"], "2,0,-2");
    assert_eq!(r["values"]["h0"], "4");
}

#[test]
fn hn_fractions() {
    let r = json(&["hn-fraction", "--profile", "2:1,-1:1", "--m", "1..10", "--chebyshev"]);
    let f = column(&r, "fraction");
    assert_eq!(&f[..2], ["1/2", "3/4"]);
    assert_eq!(f.len(), 10);
    let r = json(&["sym-fraction", "--degrees", "-1,1", "--m", "2,4,6"]);
    assert_eq!(column(&r, "fraction"), ["2/3", "3/5", "4/7"]);
}

#[test]
fn delta_on_p1() {
    let r = json(&["delta", "--model", "P1:d=2", "--valuation", "point", "--q", "1..10"]);
    assert!(column(&r, "S_q").iter().all(|s| s == "1"));
    assert!(column(&r, "A/S_q").iter().all(|s| s == "1"));
    assert_eq!(r["values"]["stability"], "K-semistable");
}

#[test]
fn nef_check_finds_the_witness() {
    let r = json(&["nef-check", "examples/not_nef"]);
    assert_eq!(r["values"]["verdict"], "not_nef");
    assert_eq!(r["values"]["witness_value"], "-3");
    let r = json(&["nef-check", "examples/not_nef", "--plus-lambda", "7"]);
    assert_eq!(r["values"]["verdict"], "not_nef");
}

#[test]
fn km_check_passes_on_summand_families() {
    for name in ["negative_degree", "positive_and_big", "not_nef"] {
        for s in ["1", "2", "3"] {
            let r = json(&["km-check", name, "--s", s]);
            assert_eq!(r["status"], "ok");
            assert!(r["failures"].as_array().unwrap().is_empty());
        }
    }
}

#[test]
fn bounds() {
    let r = json(&["bounds", "volume", "--vol-x", "54", "--dim", "3", "--vol-f", "9"]);
    assert_eq!(r["values"]["fiber_margin"], "0");
    assert_eq!(r["values"]["absolute_margin"], "0");
    let r = json(&["bounds", "nef-threshold", "--delta", "2", "--v", "6", "--n", "2"]);
    assert_eq!(r["values"]["coefficient"], "1/9");
    let dir = tempfile::tempdir().unwrap();
    let out = cmdeg(&["bounds", "nef-threshold", "--delta", "1", "--v", "6", "--n", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_descriptor_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\"base\": {\"genus\": 0},\n \"twists\": [1, 2,]}").unwrap();
    let out = cmdeg(&["cm-degree", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn invalid_center_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"base":{"genus":0},"twists":[0,0,0],"centers":[{"type":"summand","index":4}]}"#,
    )
    .unwrap();
    let out = cmdeg(&["cm-degree", path.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reproduce_paper_flags_only_the_not_nef_section_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmdeg(&["reproduce-paper", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let status = column(&r, "status");
    let ids = column(&r, "criterion");
    for (id, s) in ids.iter().zip(&status) {
        assert_eq!(s, if id == "3" { "FAIL" } else { "PASS" }, "criterion {id}");
    }
    for f in r["failures"].as_array().unwrap() {
        assert!(f.as_str().unwrap().starts_with("criterion 3: not_nef h0"), "{f}");
    }
}

#[test]
fn reproduce_paper_surfaces_corrupt_descriptors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ok.json"), r#"{"base":{"genus":0},"twists":[1,1],"centers":[]}"#).unwrap();
    std::fs::write(dir.path().join("corrupt.json"), r#"{"base":{"genus":0},"twists":[]}"#).unwrap();
    let out = cmdeg(&["reproduce-paper", "--descriptor-dir", dir.path().to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("corrupt.json"));
}

#[test]
fn reports_are_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sections", "positive_and_big", "--m-range", "1..8", "--json"];
    let strip = |o: Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_s_approx");
        v
    };
    let first = strip(cmdeg(&args, dir.path()));
    let cached = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(cached, 1);
    let second = strip(cmdeg(&args, dir.path()));
    let mut fresh_args = args.to_vec();
    fresh_args.push("--no-cache");
    let third = strip(cmdeg(&fresh_args, dir.path()));
    assert_eq!(first, second);
    assert_eq!(first, third);
}

#[test]
fn parallel_sweep_matches_serial() {
    let a = json(&["hn-fraction", "--profile", "1:2,0:1,-1:1", "--m", "1..30"]);
    let b = json(&["hn-fraction", "--profile", "1:2,0:1,-1:1", "--m", "1..30", "--parallel"]);
    assert_eq!(a["tables"], b["tables"]);
}

#[test]
fn csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmdeg(&["sections", "positive_and_big", "--m", "1..3", "--csv"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("m,h0"));
    assert_eq!(text.lines().nth(1), Some("1,11"));
}

#[test]
fn curve_centers_have_no_section_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmdeg(&["sections", "no_section_d1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("curve centers"));
}
