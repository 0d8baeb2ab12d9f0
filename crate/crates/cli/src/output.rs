use std::fmt::Write;
use std::time::Duration;

use serde_json::{json, Value};

use gclab::collector::RecycleResult;
use gclab::heap::NodeNames;
use gclab::scheduler::{Actor, ExplorationReport, Halt, RunOutcome, Scenario};
use gclab::verify::VerificationReport;

fn halt_text(h: &Halt) -> String {
    match h {
        Halt::Violation(id) => format!("violation of {id}"),
        Halt::IllegalMutation { step, error } => format!("illegal mutation at step {step}: {error}"),
        Halt::StepLimit => "step limit reached".into(),
    }
}

fn invariant_table(out: &mut String, report: &VerificationReport, names: &NodeNames) {
    let _ = writeln!(out, "{:<18} {:>9} {:>9}  first failure", "invariant", "checks", "failures");
    for (id, e) in report.entries() {
        let first = e.first_failure.as_ref().map(|f| f.describe(names)).unwrap_or_default();
        let _ = writeln!(out, "{:<18} {:>9} {:>9}  {}", id.name(), e.checks, e.failures, first);
    }
}

fn cycle_line(c: &RecycleResult, names: &NodeNames) -> String {
    format!(
        "cycle {}: recycled={} floating={} steps={}/{}",
        c.cycle,
        names.format_set(&c.recycled),
        names.format_set(&c.floating),
        c.stats.steps,
        c.step_bound
    )
}

pub fn run_summary(s: &Scenario, o: &RunOutcome) -> String {
    let names = &s.names;
    let mut out = String::new();
    let muts = o.trace.entries.iter().filter(|e| e.actor != Actor::Collector).count();
    let _ = writeln!(out, "scenario {}  collector {}", s.name, s.collector.label());
    let _ = writeln!(
        out,
        "actions {} (mutator {muts}, collector {})  cycles {}",
        o.trace.len(),
        o.trace.len() - muts,
        o.cycles.len()
    );
    for c in &o.cycles {
        let _ = writeln!(out, "{}", cycle_line(c, names));
    }
    invariant_table(&mut out, &o.report, names);
    if let Some(h) = &o.halt {
        let _ = writeln!(out, "halted: {}", halt_text(h));
    }
    if let Some(cx) = &o.counterexample {
        let _ = writeln!(out, "minimized counterexample ({} actions):", cx.trace.len());
        for e in &cx.trace.entries {
            let _ = writeln!(out, "  {e}");
        }
    }
    let _ = writeln!(out, "result: {}", if o.passed() { "PASS" } else { "FAIL" });
    out
}

fn cycle_json(c: &RecycleResult, names: &NodeNames) -> Value {
    json!({
        "cycle": c.cycle,
        "start_version": c.start_version,
        "end_version": c.end_version,
        "recycled": names.set_names(&c.recycled),
        "floating": names.set_names(&c.floating),
        "black_final": names.set_names(&c.black_final),
        "live_start": names.set_names(&c.live_start),
        "live_end": names.set_names(&c.live_end),
        "step_bound": c.step_bound,
        "stats": c.stats,
    })
}

pub fn run_json(s: &Scenario, o: &RunOutcome) -> Value {
    let names = &s.names;
    json!({
        "scenario": s.name,
        "config": s.collector.label(),
        "passed": o.passed(),
        "halt": o.halt.as_ref().map(halt_text),
        "actions": o.trace.len(),
        "cycles": o.cycles.iter().map(|c| cycle_json(c, names)).collect::<Vec<_>>(),
        "verification": o.report.to_json(names),
        "counterexample": o.counterexample.as_ref().map(|cx| json!({
            "invariant": cx.invariant,
            "actors": cx.actors.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "trace": cx.trace.entries.iter().map(ToString::to_string).collect::<Vec<_>>(),
        })),
    })
}

pub fn explore_summary(s: &Scenario, r: &ExplorationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario {}  collector {}", s.name, s.collector.label());
    let _ = writeln!(
        out,
        "states {}  interleavings {}  violating {}  truncated {}  skipped ops {}{}",
        r.states,
        r.interleavings,
        r.violating,
        r.truncated,
        r.skipped_ops,
        if r.incomplete { "  INCOMPLETE" } else { "" }
    );
    invariant_table(&mut out, &r.report, &s.names);
    for (id, cx) in &r.counterexamples {
        let _ = writeln!(out, "counterexample for {id} ({} actions):", cx.trace.len());
        for e in &cx.trace.entries {
            let _ = writeln!(out, "  {e}");
        }
    }
    let verdict = if !r.passed() {
        "FAIL"
    } else if r.incomplete {
        "INCOMPLETE"
    } else {
        "PASS"
    };
    let _ = writeln!(out, "result: {verdict}");
    out
}

pub fn explore_json(s: &Scenario, r: &ExplorationReport) -> Value {
    json!({
        "scenario": s.name,
        "config": s.collector.label(),
        "passed": r.passed(),
        "incomplete": r.incomplete,
        "states": r.states,
        "interleavings": r.interleavings,
        "violating": r.violating,
        "truncated": r.truncated,
        "verification": r.report.to_json(&s.names),
        "counterexamples": r.counterexamples.iter().map(|(id, cx)| (id.name().to_string(), json!({
            "actors": cx.actors.iter().map(ToString::to_string).collect::<Vec<_>>(),
            "trace": cx.trace.entries.iter().map(ToString::to_string).collect::<Vec<_>>(),
        }))).collect::<serde_json::Map<_, _>>(),
    })
}

pub struct MatrixRow {
    pub config: String,
    pub passed: bool,
    pub incomplete: bool,
    pub failed: Vec<String>,
    /// Runs: cycles; explorations: interleavings.
    pub count: usize,
    pub steps: usize,
    pub floating: usize,
}

impl MatrixRow {
    pub fn from_run(s: &Scenario, o: &RunOutcome) -> Self {
        MatrixRow {
            config: s.collector.label(),
            passed: o.passed(),
            incomplete: false,
            failed: o.report.entries().filter(|(_, e)| e.failures > 0).map(|(id, _)| id.name().to_string()).collect(),
            count: o.cycles.len(),
            steps: o.cycles.iter().map(|c| c.stats.steps).sum(),
            floating: o.cycles.iter().map(|c| c.floating.len()).sum(),
        }
    }

    pub fn from_explore(s: &Scenario, r: &ExplorationReport) -> Self {
        MatrixRow {
            config: s.collector.label(),
            passed: r.passed(),
            incomplete: r.incomplete,
            failed: r.counterexamples.keys().map(|id| id.name().to_string()).collect(),
            count: r.interleavings,
            steps: r.states,
            floating: 0,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "config": self.config,
            "passed": self.passed,
            "incomplete": self.incomplete,
            "failed": self.failed,
            "count": self.count,
            "steps": self.steps,
            "floating": self.floating,
        })
    }
}

pub fn matrix_table(rows: &[MatrixRow]) -> String {
    let w = rows.iter().map(|r| r.config.len()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "{:<w$}  {:<10} {:>7} {:>8} {:>8}  failed", "config", "verdict", "count", "steps", "floating");
    for r in rows {
        let verdict = match (r.passed, r.incomplete) {
            (false, _) => "FAIL",
            (true, true) => "INCOMPLETE",
            (true, false) => "pass",
        };
        let _ = writeln!(
            out,
            "{:<w$}  {:<10} {:>7} {:>8} {:>8}  {}",
            r.config,
            verdict,
            r.count,
            r.steps,
            r.floating,
            r.failed.join(",")
        );
    }
    out
}

#[derive(Default)]
pub struct BenchStats {
    pub runs: usize,
    pub failed_runs: usize,
    pub actions: usize,
    pub cycles: usize,
    pub steps: Vec<usize>,
    pub floating: usize,
}

impl BenchStats {
    pub fn add(&mut self, o: &RunOutcome) {
        self.runs += 1;
        if !o.passed() {
            self.failed_runs += 1;
        }
        self.actions += o.trace.len();
        self.cycles += o.cycles.len();
        self.steps.extend(o.cycles.iter().map(|c| c.stats.steps));
        self.floating += o.cycles.iter().map(|c| c.floating.len()).sum::<usize>();
    }

    pub fn render(&self, s: &Scenario, elapsed: Duration) -> String {
        let mut out = String::new();
        let secs = elapsed.as_secs_f64();
        let mean = if self.steps.is_empty() { 0.0 } else { self.steps.iter().sum::<usize>() as f64 / self.steps.len() as f64 };
        let _ = writeln!(out, "scenario {}  collector {}", s.name, s.collector.label());
        let _ = writeln!(out, "runs {}  failed {}  cycles {}", self.runs, self.failed_runs, self.cycles);
        let _ = writeln!(
            out,
            "collector steps per cycle: mean {mean:.1} max {}",
            self.steps.iter().max().copied().unwrap_or(0)
        );
        let _ = writeln!(out, "floating nodes total {}", self.floating);
        let _ = writeln!(
            out,
            "wall {secs:.3}s  {:.0} actions/s",
            if secs > 0.0 { self.actions as f64 / secs } else { 0.0 }
        );
        out
    }
}
