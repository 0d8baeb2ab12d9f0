use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn gclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gclab"))
        .args(args)
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.scn"))
        .display()
        .to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_json(p: &PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn bug_scenario_without_barrier_names_e() {
    let dir = tempfile::tempdir().unwrap();
    let cx = dir.path().join("bug.cx");
    let report = dir.path().join("bug.json");
    let o = gclab(&[
        "run",
        &scenario("dijkstra_bug"),
        "--barrier",
        "none",
        "--check",
        "all",
        "--counterexample-out",
        cx.to_str().unwrap(),
        "--report-out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("nodes={E}"), "{out}");
    assert!(out.contains("arc=A->E"), "{out}");
    let trace = std::fs::read_to_string(&cx).unwrap();
    assert!(trace.contains("delArc D E"), "{trace}");

    let j = read_json(&report);
    assert_eq!(j["passed"], false);
    assert_eq!(j["counterexample"]["invariant"], "WSAxiom");
    let ws = &j["verification"]["invariants"]["WSAxiom"];
    assert_eq!(ws["first_failure"]["nodes"], serde_json::json!(["E"]));
    assert_eq!(ws["first_failure"]["arc"], serde_json::json!(["A", "E"]));
}

#[test]
fn bug_scenario_with_dijkstra_passes() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("ok.json");
    let o = gclab(&[
        "run",
        &scenario("dijkstra_bug"),
        "--barrier",
        "dijkstra",
        "--report-out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let j = read_json(&report);
    assert_eq!(j["passed"], true);
    assert!(j["counterexample"].is_null());
    let cycles = j["cycles"].as_array().unwrap();
    assert!(!cycles.is_empty());
    for key in ["recycled", "floating", "black_final", "live_start", "live_end", "step_bound", "stats"] {
        assert!(cycles[0].get(key).is_some(), "missing {key}");
    }
}

#[test]
fn empty_heap_stop_the_world() {
    let o = gclab(&["run", "--builtin", "empty", "--collector", "stw"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("recycled={}"));
}

#[test]
fn builtin_list() {
    let o = gclab(&["run", "--builtin", "list"]);
    assert_eq!(o.status.code(), Some(0));
    for name in ["dijkstra_bug", "root_race", "random_workload", "empty"] {
        assert!(stdout(&o).contains(name), "{name}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(gclab(&["run", "does-not-exist.scn"]).status.code(), Some(2));
    assert_eq!(gclab(&["run", "--builtin", "no_such"]).status.code(), Some(2));
    assert_eq!(gclab(&["frobnicate"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.scn");
    std::fs::write(&bad, "[graph]\nA: B\n[schedule]\nq 3\n").unwrap();
    let o = gclab(&["run", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 4"));
}

#[test]
fn matrix_over_the_bug_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("matrix.json");
    let o = gclab(&[
        "matrix",
        &scenario("dijkstra_bug"),
        "--barrier",
        "none,dijkstra,steele",
        "--granularity",
        "coarse,fine",
        "--gray-policy",
        "stack,queue,scan",
        "--report-out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    let rows = read_json(&report);
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 18);
    for r in rows {
        let config = r["config"].as_str().unwrap();
        let none = config.split('/').nth(1) == Some("none");
        assert_eq!(r["passed"], !none, "{config}");
    }
}

#[test]
fn single_cell_matrix_matches_run() {
    let run = gclab(&["run", "--builtin", "two_cycle_floating"]);
    let cell = gclab(&["matrix", "--builtin", "two_cycle_floating"]);
    assert_eq!(run.status.code(), Some(0));
    assert_eq!(cell.status.code(), Some(0));
    let table = stdout(&cell);
    assert_eq!(table.lines().filter(|l| l.contains(" pass ")).count(), 1, "{table}");
}

#[test]
fn explore_verdicts() {
    let o = gclab(&["explore", "--builtin", "bug_race_explore"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("counterexample for"));

    let o = gclab(&["explore", "--builtin", "bug_race_explore", "--barrier", "dijkstra"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));

    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("explore.json");
    let o = gclab(&[
        "explore",
        "--builtin",
        "bug_race_explore",
        "--barrier",
        "dijkstra",
        "--max-states",
        "5",
        "--report-out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    let j = read_json(&report);
    assert_eq!(j["incomplete"], true);
    assert_eq!(j["passed"], true);
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.trace");
    let b = dir.path().join("b.trace");
    for p in [&a, &b] {
        let o = gclab(&["run", "--builtin", "random_workload", "--seed", "9", "--trace-out", p.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    assert!(!ta.is_empty());
    assert_eq!(ta, std::fs::read_to_string(&b).unwrap());
}

#[test]
fn bench_reports_throughput() {
    let o = gclab(&["bench", "--builtin", "random_workload", "--runs", "3"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("runs 3"));
}

#[test]
fn selftest_passes() {
    let o = gclab(&["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}
