use proptest::prelude::*;

use super::*;
use crate::collector::{Barrier, Collector, CollectorConfig, CollectorError, Variant};
use crate::heap::{HeapGraph, MutatorOp, NodeNames, StoreState};
use crate::set::{nodes, NodeId};
use crate::testutil::{arb_graph_with_roots, arb_subset, bfs};

#[test]
fn oracle_matches_bfs_on_a_cycle() {
    let g = HeapGraph::from_arcs(5, [(0, 1), (1, 2), (2, 0), (3, 4)]);
    assert_eq!(oracle::reachable(&g, &nodes([1])), nodes([0, 1, 2]));
    assert_eq!(oracle::reachable(&g, &nodes([])), nodes([]));
}

#[test]
fn ws_axiom_is_the_closure_form() {
    // black 0 -> 2, gray 1 -> 2: 2 is white but still reachable from gray
    let g = HeapGraph::from_arcs(3, [(0, 2), (1, 2)]);
    assert!(ws_axiom(&g, &nodes([0]), &nodes([1])).is_pass());
    // drop the gray path and the axiom fails on 2
    let g = HeapGraph::from_arcs(3, [(0, 2)]);
    let v = ws_axiom(&g, &nodes([0]), &nodes([1]));
    assert_eq!(v.failure().unwrap().nodes, nodes([2]));
    // a gray path that only reaches 2 through black 0 does not count
    let g = HeapGraph::from_arcs(3, [(1, 0), (0, 2)]);
    let v = ws_axiom(&g, &nodes([0]), &nodes([1]));
    assert_eq!(v.failure().unwrap().arc, Some((NodeId(0), NodeId(2))));
}

#[test]
fn dirty_and_card_axioms() {
    let g = HeapGraph::from_arcs(4, [(0, 3), (2, 3)]);
    assert!(dirty_axiom(&g, &nodes([0]), &nodes([]), &nodes([2])).is_pass());
    assert!(!dirty_axiom(&g, &nodes([0]), &nodes([]), &nodes([1])).is_pass());
    let mut cards = crate::collector::CardTable::new(4, 2);
    assert!(!dirty_cards_axiom(&nodes([2]), &cards).is_pass());
    cards.mark(NodeId(3));
    assert!(dirty_cards_axiom(&nodes([2]), &cards).is_pass());
}

#[test]
fn snapshot_and_disjointness() {
    let g0 = HeapGraph::from_arcs(3, [(0, 1)]);
    assert!(snapshot_axiom(&g0, &nodes([0, 1]), &nodes([0])).is_pass());
    assert!(!snapshot_axiom(&g0, &nodes([0, 2]), &nodes([0])).is_pass());
    assert!(disjointness(&nodes([0]), &nodes([1]), &nodes([2])).is_pass());
    let v = disjointness(&nodes([0, 1]), &nodes([1]), &nodes([]));
    assert_eq!(v.failure().unwrap().nodes, nodes([1]));
}

#[test]
fn step_progress_order() {
    let (e, a, ab) = (nodes([]), nodes([0]), nodes([0, 1]));
    assert!(step_progress((&e, &a), (&a, &e)).is_pass());
    assert!(step_progress((&a, &e), (&a, &a)).is_pass());
    assert!(!step_progress((&a, &a), (&a, &a)).is_pass());
    assert!(!step_progress((&ab, &e), (&a, &ab)).is_pass());
}

#[test]
fn partition_catches_active_freelist_nodes() {
    let g = HeapGraph::from_arcs(3, [(0, 1)]);
    let s = StoreState::with_roots(g, &nodes([0]), vec![NodeId(2)]).unwrap();
    assert!(partition(&s).is_pass());
}

fn bug_store() -> StoreState {
    let g = HeapGraph::from_arcs(5, [(0, 1), (1, 2), (3, 2)]);
    StoreState::new(g, [], vec![vec![NodeId(0)]], NodeNames::numbered(5)).unwrap()
}

/// Blacken 0, then hide 2 behind it: `addArc 0 2`, `delArc 1 2`.
fn monitored_bug(barrier: Barrier) -> (VerificationReport, Option<CollectorError>) {
    let mut s = bug_store();
    let cfg = CollectorConfig::new(Variant::Workset).with_barrier(barrier);
    let mut c = Collector::new(cfg, 5);
    let mut m = Monitor::new(CheckSet::all());
    m.begin(&s);
    let mut i = 0;
    let run = |c: &mut Collector, s: &mut StoreState, m: &mut Monitor, i: &mut usize| {
        let before = (c.black().clone(), c.gray().clone());
        let a = c.step(s);
        *i += 1;
        match a {
            Ok(a) => {
                m.after_collector(*i, &a, (&before.0, &before.1), s, c);
                Ok(a)
            }
            Err(e) => Err(e),
        }
    };
    while !c.black().contains(NodeId(0)) {
        run(&mut c, &mut s, &mut m, &mut i).unwrap();
    }
    for op in [MutatorOp::AddArc(NodeId(0), NodeId(2)), MutatorOp::DelArc(NodeId(1), NodeId(2))] {
        let out = s.apply(&op).unwrap();
        c.on_mutator_op(&op, out);
        i += 1;
        m.after_mutator(i, &s, &c);
    }
    loop {
        match run(&mut c, &mut s, &mut m, &mut i) {
            Ok(crate::collector::CollectorAction::Sweep(_)) => break,
            Ok(_) => {}
            Err(e) => {
                if let CollectorError::SafetyViolation { cycle, unsafe_nodes, .. } = &e {
                    m.safety_failure(i, *cycle, unsafe_nodes);
                }
                return (m.finish(false).0, Some(e));
            }
        }
    }
    (m.finish(true).0, None)
}

#[test]
fn monitor_reports_the_hidden_node() {
    let (r, err) = monitored_bug(Barrier::None);
    assert!(err.is_some());
    assert!(r.failed(InvariantId::Safety));
    assert!(r.failed(InvariantId::WsAxiom));
    let ws = r.summary(InvariantId::WsAxiom).unwrap().first_failure.clone().unwrap();
    assert_eq!(ws.nodes, nodes([2]));
    assert_eq!(ws.arc, Some((NodeId(0), NodeId(2))));
    let json = r.to_json(&NodeNames::numbered(5));
    assert_eq!(json["passed"], false);
    assert_eq!(json["invariants"]["Safety"]["first_failure"]["nodes"][0], "n2");

    let (r, err) = monitored_bug(Barrier::Dijkstra);
    assert!(err.is_none());
    assert!(r.passed(), "{:?}", r.failures());
    assert!(r.checked(InvariantId::Antitone) && r.checked(InvariantId::AimSandwich));
}

#[test]
fn liveness_over_cycles() {
    let mut s = bug_store();
    let mut c = Collector::new(CollectorConfig::new(Variant::StopTheWorld), 5);
    let r1 = c.run_cycle(&mut s).unwrap();
    let r2 = c.run_cycle(&mut s).unwrap();
    assert!(check_cycle(&r1).iter().all(|(_, v)| v.is_pass()));
    assert!(check_liveness(&[r1.clone(), r2.clone()], &[], true).is_pass());
    let mut bad = r2.clone();
    bad.recycled = nodes([]);
    let mut float = r1.clone();
    float.floating = nodes([4]);
    assert!(!check_liveness(&[float, bad], &[], false).is_pass());
    let stall = StallRecord { mutator: 1, step: 3, resumed_at: None };
    assert!(!check_liveness(&[r1], &[stall], false).is_pass());
}

#[test]
fn check_set_parsing() {
    assert_eq!("all".parse::<CheckSet>().unwrap(), CheckSet::all());
    let c: CheckSet = "WSAxiom,antitone".parse().unwrap();
    assert!(c.contains(InvariantId::WsAxiom) && c.contains(InvariantId::Safety));
    assert!(!c.contains(InvariantId::Partition));
    assert!("bogus".parse::<CheckSet>().is_err());
}

proptest! {
    #[test]
    fn oracle_agrees_with_bfs((g, seeds) in arb_graph_with_roots(40, 120)) {
        prop_assert_eq!(oracle::reachable(&g, &seeds), bfs(&g, &seeds));
    }

    /// The closure form holds whenever no arc leads from black to white.
    #[test]
    fn strong_invariant_implies_ws((g, b) in arb_graph_with_roots(8, 20), gs in arb_subset(8)) {
        let n = g.memory_size();
        let gray = gs.intersection(&g.nodes()).difference(&b);
        let marked = b.union(&gray);
        let strong = b.iter().all(|a| g.successors(a).all(|y| marked.contains(y)));
        prop_assume!(strong);
        prop_assert!(ws_axiom(&g, &b, &gray).is_pass(), "{n}");
    }
}

#[test]
fn trace_replay_checks_and_slices() {
    use crate::scheduler::{builtin, run, RunOptions};
    let s = builtin("dijkstra_bug").unwrap();
    let out = run(&s, &RunOptions { checks: CheckSet::none(), ..RunOptions::default() }).unwrap();
    let v = check_step_axiom(&s, &out.trace, InvariantId::WsAxiom).unwrap();
    let f = v.verdict.failure().unwrap();
    assert_eq!(f.nodes, nodes([4]));
    assert_eq!(f.arc, Some((NodeId(0), NodeId(4))));
    assert!(f.describe(&s.names).contains("arc=A->E"));
    let slice = v.slice.unwrap();
    assert!(slice.len() < out.trace.len());
    assert!(check_antitone(&s, &out.trace).unwrap().verdict.is_pass());

    let mut bad = out.trace.clone();
    bad.entries[3].digest ^= 1;
    assert!(matches!(
        check_step_axiom(&s, &bad, InvariantId::WsAxiom),
        Err(ReplayError::DigestMismatch { step: 3, .. })
    ));

    let s = builtin("random_workload").unwrap();
    let out = run(&s, &RunOptions::default()).unwrap();
    for id in [InvariantId::DirtyAxiom, InvariantId::Antitone, InvariantId::Partition] {
        let v = check_step_axiom(&s, &out.trace, id).unwrap();
        assert!(v.verdict.is_pass(), "{id}");
        assert!(v.checked > 100, "{id} {}", v.checked);
    }
}
