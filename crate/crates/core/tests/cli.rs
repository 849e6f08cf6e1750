//! The `stg` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn stg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stg"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = stg(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn campus(dir: &Path) {
    ok(dir, &["world", "gen", "--seed", "7", "-o", "w.json"]);
}

/// Two rooms whose only connection is closed.
const SEALED: &str = r#"{"meta":{"name":"sealed","crs":"site-local-cartesian-meters"},
  "nodes":[{"id":"lab-1","name":"lab-1","kind":"room","pos":[0,0],"tags":[]},
           {"id":"lab-2","name":"lab-2","kind":"room","pos":[10,0],"tags":[]}],
  "edges":[{"a":"lab-1","b":"lab-2","kind":"intra_floor","traversable":false,"length_m":10}],
  "sensors":[{"id":"cam","kind":"camera","node":"lab-1","pos":[0,0],"heading_deg":0,"fov_deg":90,"range_m":20,"covers":["lab-1"]}]}"#;

#[test]
fn focus_on_a_covered_node_completes() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("w.json"), SEALED).unwrap();
    let out = ok(d.path(), &["pipeline", "--world", "w.json", "--query", r#"FOCUS "lab-1""#]);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["completed"], true);
}

#[test]
fn schedule_refuses_an_ungrounded_graph() {
    let d = tempfile::tempdir().unwrap();
    campus(d.path());
    ok(d.path(), &["plan", "--world", "w.json", "--query", r#"FOCUS "B1 F1 Room 1""#, "-o", "g0.json"]);
    let out = stg(d.path(), &["schedule", "--world", "w.json", "--stg", "g0.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ungrounded"));
}

#[test]
fn grounding_failure_exits_one() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("w.json"), SEALED).unwrap();
    ok(d.path(), &["plan", "--world", "w.json", "--query", r#"TRACK "x" FROM "lab-1" TO "lab-2""#, "-o", "g0.json"]);
    let out = stg(d.path(), &["ground", "--world", "w.json", "--stg", "g0.json", "--trace", "trace.json"]);
    assert_eq!(out.status.code(), Some(1));
    let trace: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("trace.json")).unwrap()).unwrap();
    assert!(trace["entries"].as_array().unwrap().iter().any(|e| e["outcome"] == "refuted"));
}

#[test]
fn bench_writes_fifteen_metric_rows() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("campus.json"), r#"{"buildings": 2, "rooms_per_floor": 3}"#).unwrap();
    ok(d.path(), &["bench", "--spec", "campus.json", "--queries", "50", "--seed", "7"]);
    let mut rdr = csv::Reader::from_path(d.path().join("metrics.csv")).unwrap();
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        headers,
        ["paradigm", "tier", "tcr_pct", "mean_latency_s", "bandwidth_mb", "tfp", "verification_rounds", "cache_hit_rate"]
    );
    assert_eq!(rdr.records().count(), 15);
    let reports: serde_json::Value = serde_json::from_slice(&fs::read(d.path().join("reports.json")).unwrap()).unwrap();
    assert!(reports.is_object() || reports.is_array());
}

#[test]
fn usage_errors_exit_two() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(stg(d.path(), &["bench", "--queries", "5"]).status.code(), Some(2));
    assert_eq!(stg(d.path(), &["teleport"]).status.code(), Some(2));
    assert_eq!(stg(d.path(), &["bench", "--seed", "1", "--paradigms", "psychic"]).status.code(), Some(2));
}

#[test]
fn strict_mode_rejects_unknown_keys() {
    let d = tempfile::tempdir().unwrap();
    let doc = SEALED.replacen(r#""name":"sealed","#, r#""name":"sealed","owner":"facilities","#, 1);
    fs::write(d.path().join("w.json"), doc).unwrap();
    ok(d.path(), &["world", "validate", "--world", "w.json"]);
    let out = stg(d.path(), &["world", "validate", "--world", "w.json", "--strict"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("owner"));
}

#[test]
fn stages_through_files_match_the_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    campus(p);
    let q = r#"ROUTE "B1 F2 Room 1" THEN "B2 F1 Room 3""#;
    let sim = ["--seed", "11", "--p-detect", "0.7"];
    ok(p, &["plan", "--world", "w.json", "--query", q, "-o", "g0.json"]);
    ok(p, &["ground", "--world", "w.json", "--stg", "g0.json", "--memory", "mem.json", "-o", "g.json"]);
    ok(p, &["schedule", "--world", "w.json", "--stg", "g.json", "--pmem", "pmem.json", "--emit-script", "s.txt", "-o", "s.json"]);
    let staged = ok(p, &[&["simulate", "--world", "w.json", "--schedule", "s.json", "--events", "ev.ndjson"][..], &sim].concat());
    let chained = ok(p, &[&["pipeline", "--world", "w.json", "--query", q][..], &sim].concat());
    assert_eq!(staged, chained);

    let script = fs::read_to_string(p.join("s.txt")).unwrap();
    assert!(script.starts_with("# stg schedule"));
    let events = fs::read_to_string(p.join("ev.ndjson")).unwrap();
    let kinds: Vec<String> = events
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["event"].as_str().unwrap().to_string())
        .collect();
    assert!(kinds.contains(&"activate".to_string()));
    assert_eq!(kinds.last().map(String::as_str), Some("end"));

    // a warm memory file answers the second grounding entirely
    ok(p, &["ground", "--world", "w.json", "--stg", "g0.json", "--memory", "mem.json", "--trace", "t2.json", "-o", "g2.json"]);
    let t2: serde_json::Value = serde_json::from_slice(&fs::read(p.join("t2.json")).unwrap()).unwrap();
    assert_eq!(t2["total_rounds"], 0);
    assert_eq!(fs::read(p.join("g.json")).unwrap(), fs::read(p.join("g2.json")).unwrap());
}
