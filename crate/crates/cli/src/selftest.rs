//! Install check: small exhaustive versions of the fixpoint, program and
//! oracle suites plus the bundled scenarios' expected verdicts.

use gclab::collector::{Barrier, Collector, CollectorConfig, Variant};
use gclab::fixpoint::{
    check_closure_lemmas, closure, optimized_workset_dead_iteration, raw_dead_iteration, workset_dead_iteration,
    GraphFn,
};
use gclab::heap::{HeapGraph, NodeNames, StoreState};
use gclab::scheduler::{self, builtin, RunOptions};
use gclab::set::NodeSet;
use gclab::verify::oracle;

fn graphs(max_n: usize) -> impl Iterator<Item = HeapGraph> {
    (1..=max_n).flat_map(|n| {
        (0u32..1 << (n * n)).map(move |bits| {
            let arcs = (0..n * n)
                .filter(move |k| bits >> k & 1 == 1)
                .map(move |k| ((k / n) as u32, (k % n) as u32));
            HeapGraph::from_arcs(n, arcs)
        })
    })
}

fn subsets(n: usize) -> Vec<NodeSet> {
    (0u64..1 << n).map(NodeSet::from_bits).collect()
}

fn lemmas() -> Result<String, String> {
    let mut count = 0;
    for g in graphs(3) {
        let all = subsets(g.memory_size());
        let rep = check_closure_lemmas(&GraphFn::extension(&g), &all);
        if !rep.passed() {
            return Err(format!("{g:?}: {rep:?}"));
        }
        count += 1;
    }
    Ok(format!("{count} graphs"))
}

fn programs() -> Result<String, String> {
    let mut count = 0;
    for g in graphs(3) {
        for r in subsets(g.memory_size()) {
            let expect = g.nodes().difference(&oracle::reachable(&g, &r));
            let (opt, _) = optimized_workset_dead_iteration(&g, &r);
            if raw_dead_iteration(&g, &r) != expect || workset_dead_iteration(&g, &r) != expect || opt != expect {
                return Err(format!("{g:?} roots {r:?}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} cases"))
}

fn oracles() -> Result<String, String> {
    let mut count = 0;
    for g in graphs(3) {
        let n = g.memory_size();
        for r in subsets(n) {
            let expect = oracle::reachable(&g, &r);
            if closure(&GraphFn::extension(&g), &r) != expect {
                return Err(format!("closure disagrees on {g:?} {r:?}"));
            }
            for &v in Variant::ALL {
                let mut s = StoreState::new(g.clone(), [], vec![r.to_vec()], NodeNames::numbered(n))
                    .map_err(|e| e.to_string())?;
                let res = Collector::new(CollectorConfig::new(v), n)
                    .run_cycle(&mut s)
                    .map_err(|e| e.to_string())?;
                if res.black_final != expect {
                    return Err(format!("{v} black disagrees on {g:?} {r:?}"));
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} collector cycles"))
}

fn scenarios() -> Result<String, String> {
    let opts = RunOptions::default();
    let expect = [
        ("dijkstra_bug", None, false),
        ("dijkstra_bug", Some(Barrier::Dijkstra), true),
        ("dijkstra_bug", Some(Barrier::Steele), true),
        ("dijkstra_bug", Some(Barrier::Yuasa), true),
        ("root_race", None, false),
        ("two_cycle_floating", None, true),
        ("alloc_stall", None, true),
        ("random_workload", None, true),
        ("empty", None, true),
    ];
    for (name, barrier, pass) in expect {
        let mut s = builtin(name).ok_or(format!("missing built-in {name}"))?;
        if let Some(b) = barrier {
            s.collector = s.collector.with_barrier(b);
        }
        let out = scheduler::run(&s, &opts).map_err(|e| e.to_string())?;
        if out.passed() != pass {
            return Err(format!("{name} with {}: expected pass={pass}", s.collector.label()));
        }
    }
    Ok(format!("{} scenario runs", expect.len()))
}

pub fn run() -> bool {
    let suites: [(&str, fn() -> Result<String, String>); 4] = [
        ("closure lemmas", lemmas),
        ("program equivalence", programs),
        ("oracle cross-checks", oracles),
        ("bundled scenarios", scenarios),
    ];
    let mut ok = true;
    for (name, f) in suites {
        match f() {
            Ok(detail) => println!("ok    {name}: {detail}"),
            Err(detail) => {
                println!("FAIL  {name}: {detail}");
                ok = false;
            }
        }
    }
    ok
}
