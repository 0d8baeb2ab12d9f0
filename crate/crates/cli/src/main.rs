use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use gclab::collector::{Barrier, BlackenGuard, CollectorConfig, Granularity, GrayPolicy, RootScan, Variant};
use gclab::scheduler::{
    builtin, builtin_names, explore_interleavings, run, ExploreBounds, RunOptions, Scenario, Schedule,
};
use gclab::verify::CheckSet;

mod output;
mod selftest;

const EXIT_PASS: u8 = 0;
const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INCOMPLETE: u8 = 3;

#[derive(Parser)]
#[command(name = "gclab", version, about = "Concurrent garbage collector laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario under its schedule and check invariants online.
    Run(RunArgs),
    /// Enumerate every interleaving of a small scenario.
    Explore(ExploreArgs),
    /// Run the cartesian product of configuration axes.
    Matrix(MatrixArgs),
    /// Time repeated random-interleaving runs.
    Bench(BenchArgs),
    /// Fixpoint lemmas, program equivalence and oracle cross-checks.
    Selftest,
}

#[derive(Args, Clone)]
struct Source {
    /// Scenario file.
    scenario: Option<PathBuf>,
    /// Bundled scenario instead of a file (`--builtin list` prints the names).
    #[arg(long, conflicts_with = "scenario")]
    builtin: Option<String>,
}

#[derive(Args, Clone, Default)]
struct ConfigFlags {
    /// stw | workset | dirty | snapshot | cards
    #[arg(long)]
    collector: Option<Variant>,
    /// none | dijkstra | steele | yuasa
    #[arg(long)]
    barrier: Option<Barrier>,
    /// coarse | fine
    #[arg(long)]
    granularity: Option<Granularity>,
    /// scan | stack | queue | cache:K
    #[arg(long)]
    gray_policy: Option<GrayPolicy>,
    /// Card count for the cards variant.
    #[arg(long)]
    cards: Option<usize>,
    /// handshake | load | delete | unprotected
    #[arg(long)]
    root_scan: Option<RootScan>,
    /// recheck | cursor | as-printed
    #[arg(long)]
    blacken: Option<BlackenGuard>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    config: ConfigFlags,
    /// Replace the schedule by a random interleaving with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Mutator:collector ratio for `--seed`.
    #[arg(long, default_value = "1:1")]
    ratio: String,
    /// all | safety | none | comma list of invariant names
    #[arg(long, default_value = "all")]
    check: CheckSet,
    /// Write the trace, one action per line.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write the JSON report.
    #[arg(long)]
    report_out: Option<PathBuf>,
    /// Where to write a counterexample trace [default: <temp dir>/gclab-<scenario>.counterexample]
    #[arg(long)]
    counterexample_out: Option<PathBuf>,
    /// Skip scripted ops whose preconditions fail instead of halting.
    #[arg(long)]
    skip_illegal: bool,
}

#[derive(Args)]
struct ExploreArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    config: ConfigFlags,
    /// Actions per path before it is cut
    #[arg(long)]
    max_depth: Option<usize>,
    /// States visited before exploration stops
    #[arg(long)]
    max_states: Option<usize>,
    /// Collector cycles per path
    #[arg(long)]
    max_cycles: Option<usize>,
    /// Collector actions per path
    #[arg(long)]
    max_collector_steps: Option<usize>,
    #[arg(long, default_value = "all")]
    check: CheckSet,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct MatrixArgs {
    #[command(flatten)]
    source: Source,
    /// Comma lists; an omitted axis keeps the scenario's setting
    #[arg(long, value_delimiter = ',')]
    collector: Vec<Variant>,
    #[arg(long, value_delimiter = ',')]
    barrier: Vec<Barrier>,
    #[arg(long, value_delimiter = ',')]
    granularity: Vec<Granularity>,
    #[arg(long, value_delimiter = ',')]
    gray_policy: Vec<GrayPolicy>,
    #[arg(long, value_delimiter = ',')]
    root_scan: Vec<RootScan>,
    /// Explore every interleaving per cell instead of one run.
    #[arg(long)]
    explore: bool,
    #[arg(long, default_value = "all")]
    check: CheckSet,
    #[arg(long)]
    report_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    config: ConfigFlags,
    /// Number of seeds.
    #[arg(long, default_value_t = 100)]
    runs: u64,
    #[arg(long, default_value = "1:1")]
    ratio: String,
    #[arg(long, default_value = "all")]
    check: CheckSet,
}

enum Fail {
    Usage(String),
}

fn load(src: &Source) -> Result<Scenario, Fail> {
    match (&src.scenario, &src.builtin) {
        (Some(path), None) => {
            let text = fs::read_to_string(path).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))?;
            let name = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
            Scenario::parse(&name, &text).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))
        }
        (None, Some(name)) => builtin(name).ok_or_else(|| {
            let names: Vec<&str> = builtin_names().collect();
            Fail::Usage(format!("unknown built-in `{name}`; available: {}", names.join(", ")))
        }),
        _ => Err(Fail::Usage("give a scenario file or --builtin NAME".into())),
    }
}

fn apply_config(base: CollectorConfig, f: &ConfigFlags) -> CollectorConfig {
    let mut cfg = match f.collector {
        Some(v) if v != base.variant => {
            let mut c = CollectorConfig::new(v);
            c.granularity = base.granularity;
            c.gray_policy = base.gray_policy;
            c.root_scan = base.root_scan;
            c.blacken_guard = base.blacken_guard;
            c.interim_drain = base.interim_drain;
            c
        }
        _ => base,
    };
    if let Some(b) = f.barrier {
        cfg.barrier = b;
    }
    if let Some(g) = f.granularity {
        cfg.granularity = g;
    }
    if let Some(p) = f.gray_policy {
        cfg.gray_policy = p;
    }
    if let Some(k) = f.cards {
        cfg.card_count = k;
    }
    if let Some(r) = f.root_scan {
        cfg.root_scan = r;
    }
    if let Some(g) = f.blacken {
        cfg.blacken_guard = g;
    }
    cfg.normalized()
}

fn parse_ratio(s: &str) -> Result<(u32, u32), Fail> {
    let bad = || Fail::Usage(format!("ratio `{s}` is not `mutator:collector`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a + b == 0 {
        return Err(bad());
    }
    Ok((a, b))
}

fn write_file(path: &Path, text: &str) -> Result<(), Fail> {
    fs::write(path, text).map_err(|e| Fail::Usage(format!("{}: {e}", path.display())))
}

fn cmd_run(a: RunArgs) -> Result<u8, Fail> {
    let mut s = load(&a.source)?;
    s.collector = apply_config(s.collector, &a.config);
    if let Some(seed) = a.seed {
        let (mutator, collector) = parse_ratio(&a.ratio)?;
        s.schedule = Schedule::Random { seed, mutator, collector };
    }
    let opts = RunOptions {
        checks: a.check.clone(),
        skip_illegal: a.skip_illegal,
        ..RunOptions::default()
    };
    let out = run(&s, &opts).map_err(|e| Fail::Usage(e.to_string()))?;
    print!("{}", output::run_summary(&s, &out));
    if let Some(p) = &a.trace_out {
        write_file(p, &out.trace.render())?;
    }
    if let Some(p) = &a.report_out {
        let json = output::run_json(&s, &out);
        write_file(p, &serde_json::to_string_pretty(&json).expect("json"))?;
    }
    if let Some(cx) = &out.counterexample {
        let path = a
            .counterexample_out
            .clone()
            .unwrap_or_else(|| std::env::temp_dir().join(format!("gclab-{}.counterexample", s.name)));
        write_file(&path, &cx.trace.render())?;
        println!("counterexample: {}", path.display());
    }
    Ok(if out.passed() { EXIT_PASS } else { EXIT_VIOLATION })
}

fn cmd_explore(a: ExploreArgs) -> Result<u8, Fail> {
    let mut s = load(&a.source)?;
    s.collector = apply_config(s.collector, &a.config);
    let mut b = match s.schedule {
        Schedule::Exhaustive(b) => b,
        _ => ExploreBounds::default(),
    };
    b.max_depth = a.max_depth.unwrap_or(b.max_depth);
    b.max_states = a.max_states.unwrap_or(b.max_states);
    b.max_cycles = a.max_cycles.unwrap_or(b.max_cycles);
    b.max_collector_steps = a.max_collector_steps.unwrap_or(b.max_collector_steps);
    let rep = explore_interleavings(&s, &b, &a.check).map_err(|e| Fail::Usage(e.to_string()))?;
    print!("{}", output::explore_summary(&s, &rep));
    if let Some(p) = &a.report_out {
        let json = output::explore_json(&s, &rep);
        write_file(p, &serde_json::to_string_pretty(&json).expect("json"))?;
    }
    Ok(if !rep.passed() {
        EXIT_VIOLATION
    } else if rep.incomplete {
        EXIT_INCOMPLETE
    } else {
        EXIT_PASS
    })
}

fn axis<T: Clone>(v: &[T], default: T) -> Vec<T> {
    if v.is_empty() {
        vec![default]
    } else {
        v.to_vec()
    }
}

fn cmd_matrix(a: MatrixArgs) -> Result<u8, Fail> {
    let s = load(&a.source)?;
    let base = s.collector;
    let mut cells = Vec::new();
    for &v in &axis(&a.collector, base.variant) {
        for &b in &axis(&a.barrier, base.barrier) {
            for &g in &axis(&a.granularity, base.granularity) {
                for &p in &axis(&a.gray_policy, base.gray_policy) {
                    for &r in &axis(&a.root_scan, base.root_scan) {
                        let flags = ConfigFlags {
                            collector: Some(v),
                            barrier: Some(b),
                            granularity: Some(g),
                            gray_policy: Some(p),
                            root_scan: Some(r),
                            ..ConfigFlags::default()
                        };
                        let mut cell = s.clone();
                        cell.collector = apply_config(base, &flags);
                        cells.push(cell);
                    }
                }
            }
        }
    }
    let bounds = match s.schedule {
        Schedule::Exhaustive(b) => b,
        _ => ExploreBounds::default(),
    };
    let mut rows = Vec::new();
    for cell in &cells {
        let row = if a.explore || matches!(cell.schedule, Schedule::Exhaustive(_)) {
            let rep = explore_interleavings(cell, &bounds, &a.check).map_err(|e| Fail::Usage(e.to_string()))?;
            output::MatrixRow::from_explore(cell, &rep)
        } else {
            let opts = RunOptions { checks: a.check.clone(), skip_illegal: true, ..RunOptions::default() };
            let out = run(cell, &opts).map_err(|e| Fail::Usage(e.to_string()))?;
            output::MatrixRow::from_run(cell, &out)
        };
        rows.push(row);
    }
    print!("{}", output::matrix_table(&rows));
    if let Some(p) = &a.report_out {
        let json = serde_json::Value::Array(rows.iter().map(output::MatrixRow::to_json).collect());
        write_file(p, &serde_json::to_string_pretty(&json).expect("json"))?;
    }
    let bad = rows.iter().filter(|r| !r.passed).count();
    if bad > 0 {
        println!("{bad} of {} cells violate an invariant", rows.len());
        return Ok(EXIT_VIOLATION);
    }
    if rows.iter().any(|r| r.incomplete) {
        return Ok(EXIT_INCOMPLETE);
    }
    Ok(EXIT_PASS)
}

fn cmd_bench(a: BenchArgs) -> Result<u8, Fail> {
    let mut s = load(&a.source)?;
    s.collector = apply_config(s.collector, &a.config);
    let (mutator, collector) = parse_ratio(&a.ratio)?;
    let opts = RunOptions { checks: a.check.clone(), skip_illegal: true, ..RunOptions::default() };
    let mut stats = output::BenchStats::default();
    let t = Instant::now();
    for seed in 0..a.runs {
        let mut cell = s.clone();
        cell.schedule = Schedule::Random { seed, mutator, collector };
        let out = run(&cell, &opts).map_err(|e| Fail::Usage(e.to_string()))?;
        stats.add(&out);
    }
    print!("{}", stats.render(&s, t.elapsed()));
    Ok(if stats.failed_runs == 0 { EXIT_PASS } else { EXIT_VIOLATION })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) if a.source.builtin.as_deref() == Some("list") => {
            builtin_names().for_each(|n| println!("{n}"));
            Ok(EXIT_PASS)
        }
        Command::Run(a) => cmd_run(a),
        Command::Explore(a) => cmd_explore(a),
        Command::Matrix(a) => cmd_matrix(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Selftest => Ok(if selftest::run() { EXIT_PASS } else { EXIT_VIOLATION }),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Fail::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
