use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn snakedim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_snakedim"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_writes_a_space_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = snakedim(dir.path(), &["gen", "--kind", "circle", "--n", "100", "-o", "c.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("c.json"));
    assert_eq!(v["metric"], "matrix");
    assert_eq!(v["n"], 100);
    assert_eq!(v["dist"].as_array().unwrap().len(), 100);
    assert_eq!(v["generator"]["kind"], "circle");
}

#[test]
fn segment_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        let out = snakedim(dir.path(), args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    };
    run(&["gen", "--kind", "segment", "--n", "64", "-o", "s.json"]);
    run(&["order", "--space", "s.json", "--kind", "natural", "-o", "nat.json"]);
    run(&["hierarchy", "--space", "s.json", "--builder", "brick", "--depth", "4", "--mult-bound", "2", "-o", "h.json"]);
    run(&["hierarchy", "--space", "s.json", "--validate", "h.json", "--mult-bound", "2", "-o", "hv.json"]);
    assert_eq!(json(&dir.path().join("hv.json"))["ok"], true);
    run(&["order", "--space", "s.json", "--kind", "lex", "--hierarchy", "h.json", "-o", "lex.json"]);
    run(&["certify", "--space", "s.json", "--order", "lex.json", "--hierarchy", "h.json", "--n", "1", "-o", "cert.json"]);
    let cert = json(&dir.path().join("cert.json"));
    assert_eq!(cert["pass"], true);
    assert_eq!(cert["bound"], 3);
    assert_eq!(cert["skipped_pairs"].as_array().unwrap().len(), 0);

    run(&["snake", "--space", "s.json", "--order", "nat.json", "--pair", "10,50", "--scales", "0.01,0.1,0.4", "-o", "p.json", "--csv", "p.csv"]);
    let p = json(&dir.path().join("p.json"));
    assert_eq!(p["pair"], serde_json::json!([10, 50]));
    assert_eq!(p["values"], serde_json::json!([1, 1, null]));
    let csv = fs::read_to_string(dir.path().join("p.csv")).unwrap();
    assert_eq!(csv, "scale,value\n0.010000000000000000,1\n0.10000000000000001,1\n0.40000000000000002,overlap\n");

    run(&["snake", "--space", "s.json", "--order", "nat.json", "--scales", "0.05,0.1", "-o", "max.json"]);
    assert_eq!(json(&dir.path().join("max.json"))["values"], serde_json::json!([1, 1]));
}

#[test]
fn failing_certificate_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["gen", "--kind", "segment", "--n", "64", "-o", "s.json"],
        vec!["order", "--space", "s.json", "--kind", "bit-reversal", "-o", "br.json"],
        vec!["hierarchy", "--space", "s.json", "--depth", "4", "--mult-bound", "2", "-o", "h.json"],
    ] {
        assert!(snakedim(dir.path(), &args).status.success());
    }
    let out = snakedim(dir.path(), &["certify", "--space", "s.json", "--order", "br.json", "--hierarchy", "h.json", "--n", "1", "-o", "c.json"]);
    assert_eq!(out.status.code(), Some(1));
    let cert = json(&dir.path().join("c.json"));
    assert_eq!(cert["pass"], false);
    assert!(cert["worst_value"].as_u64().unwrap() >= 4);
}

#[test]
fn search_reports_and_assertions() {
    let dir = tempfile::tempdir().unwrap();
    assert!(snakedim(dir.path(), &["gen", "--kind", "circle", "--n", "6", "-o", "c.json"]).status.success());
    let out = snakedim(dir.path(), &["search", "--space", "c.json", "--scales", "0.2083333333333333", "--expect-at-least", "2", "-o", "s.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = json(&dir.path().join("s.json"));
    assert_eq!(s["best_value"], 2);
    assert_eq!(s["exhaustive"], true);
    assert_eq!(s["explored"], 720);
    assert_eq!(s["best_order"].as_array().unwrap().len(), 6);
    let out = snakedim(dir.path(), &["search", "--space", "c.json", "--scales", "0.2083333333333333", "--expect-at-most", "1", "-o", "s.json"]);
    assert_eq!(out.status.code(), Some(1));

    let local = |name: &str| {
        let out = snakedim(dir.path(), &["--seed", "7", "search", "--space", "c.json", "--method", "local", "--scales", "0.2", "-o", name]);
        assert!(out.status.success());
        fs::read(dir.path().join(name)).unwrap()
    };
    assert_eq!(local("a.json"), local("b.json"));
}

#[test]
fn usage_and_domain_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = snakedim(dir.path(), &["gen", "--kind", "circle", "--bogus", "-o", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--bogus"));

    let out = snakedim(dir.path(), &["gen", "--kind", "grid", "--m", "4", "-o", "x.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--dim"));

    fs::write(dir.path().join("bad.json"), r#"{"metric":"matrix","n":2,"dist":[[0,1],[2,0]]}"#).unwrap();
    let out = snakedim(dir.path(), &["order", "--space", "bad.json", "--kind", "binary", "-o", "o.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("AsymmetricMatrix"));

    let out = snakedim(dir.path(), &["preset", "no-such-preset"]);
    assert_eq!(out.status.code(), Some(2));

    let out = snakedim(dir.path(), &["--threads", "0", "preset", "circle-glued"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn presets_rerun_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["circle-glued", "cantor-binary", "tripod-exhaustive"] {
        let first = snakedim(dir.path(), &["preset", name, "-o", "a"]);
        let second = snakedim(dir.path(), &["--threads", "2", "preset", name, "-o", "b"]);
        assert!(first.status.success() && second.status.success(), "{name}");
        assert_eq!(first.stdout, second.stdout);
        let file = format!("{name}.json");
        assert_eq!(fs::read(dir.path().join("a").join(&file)).unwrap(), fs::read(dir.path().join("b").join(&file)).unwrap());
        let report = json(&dir.path().join("a").join(&file));
        assert!(report["claims"].is_array() && report["fixtures"].is_array());
    }
    let csv = fs::read_to_string(dir.path().join("a").join("circle-glued.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn every_preset_passes() {
    let dir = tempfile::tempdir().unwrap();
    for name in snakedim::presets::PRESET_NAMES {
        let out = snakedim(dir.path(), &["preset", name, "-o", "out"]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stdout));
        assert!(!String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    }
    let grid2 = json(&dir.path().join("out").join("grid2-theoremB.json"));
    assert_eq!(grid2["results"]["certificate"]["bound"], 5);
    assert_eq!(grid2["results"]["certificate"]["pass"], true);
}
