use super::*;
use crate::set::nodes;
use proptest::prelude::*;
use std::collections::VecDeque;

// independent breadth-first reachability over raw adjacency
fn bfs(g: &HeapGraph, seeds: &NodeSet) -> NodeSet {
    let mut seen = vec![false; g.memory_size()];
    let mut q: VecDeque<NodeId> = VecDeque::new();
    for s in seeds {
        seen[s.index()] = true;
        q.push_back(s);
    }
    while let Some(a) = q.pop_front() {
        for slot in g.slots(a).iter().flatten() {
            if !seen[slot.index()] {
                seen[slot.index()] = true;
                q.push_back(*slot);
            }
        }
    }
    (0..seen.len()).filter(|&i| seen[i]).map(NodeId::from).collect()
}

fn oracle_live(s: &StoreState) -> NodeSet {
    bfs(s.graph(), &s.roots()).union(&s.supply_set())
}

fn chain_store() -> StoreState {
    // 0 -> 1 -> 2, root 0, supply [3, 4]
    let g = HeapGraph::from_arcs(5, [(0, 1), (1, 2)]);
    StoreState::with_roots(g, &nodes([0]), vec![NodeId(3), NodeId(4)]).unwrap()
}

#[test]
fn duplicate_arcs_are_a_multiset() {
    let mut s = chain_store();
    s.add_arc(NodeId(0), NodeId(1)).unwrap();
    assert_eq!(s.graph().arc_count(NodeId(0), NodeId(1)), 2);
    s.del_arc(NodeId(0), NodeId(1)).unwrap();
    assert_eq!(s.graph().arc_count(NodeId(0), NodeId(1)), 1);
    assert_eq!(s.active(), nodes([0, 1, 2]));
}

#[test]
fn every_mutation_bumps_version_once() {
    let mut s = chain_store();
    let v = s.version();
    s.add_arc(NodeId(2), NodeId(0)).unwrap();
    assert_eq!(s.version(), v + 1);
    s.del_arc(NodeId(2), NodeId(0)).unwrap();
    assert_eq!(s.version(), v + 2);
    s.add_new(NodeId(2)).unwrap();
    assert_eq!(s.version(), v + 3);
    assert!(s.add_arc(NodeId(4), NodeId(0)).is_err());
    assert_eq!(s.version(), v + 3);
}

#[test]
fn add_new_takes_the_head() {
    let mut s = chain_store();
    let before = oracle_live(&s);
    assert_eq!(s.add_new(NodeId(1)).unwrap(), OpOutcome::Allocated(NodeId(3)));
    assert_eq!(s.supply().iter().copied().collect::<Vec<_>>(), vec![NodeId(4)]);
    assert_eq!(s.graph().arc_count(NodeId(1), NodeId(3)), 1);
    assert!(s.graph().slots(NodeId(3)).is_empty());
    assert_eq!(oracle_live(&s), before);
}

#[test]
fn empty_supply_stalls_without_change() {
    let g = HeapGraph::from_arcs(2, [(0, 1)]);
    let mut s = StoreState::with_roots(g, &nodes([0]), vec![]).unwrap();
    let v = s.version();
    assert_eq!(s.add_new(NodeId(0)).unwrap(), OpOutcome::Stalled);
    assert_eq!(s.version(), v);
}

#[test]
fn illegal_ops_are_rejected() {
    let mut s = chain_store();
    // supply node as source or target
    assert!(matches!(
        s.add_arc(NodeId(3), NodeId(0)),
        Err(HeapError::IllegalMutation { .. })
    ));
    assert!(s.add_arc(NodeId(0), NodeId(3)).is_err());
    assert!(s.del_arc(NodeId(0), NodeId(2)).is_err());
    assert!(s.add_arc(NodeId(0), NodeId(9)).is_err());
}

#[test]
fn pre_roots_and_local_ops() {
    let g = HeapGraph::from_arcs(4, [(0, 1), (1, 2)]);
    let names = NodeNames::numbered(4);
    let mut s = StoreState::new(g, [], vec![vec![NodeId(0)], vec![], vec![NodeId(3)]], names).unwrap();
    assert_eq!(s.mutator_count(), 2);
    assert_eq!(s.roots(), nodes([0, 3]));
    s.local_load(1, NodeId(2)).unwrap();
    assert_eq!(s.local_roots(Owner::Mutator(1)), nodes([2]));
    // mutator 1 cannot see node 3, which only mutator 2 holds
    assert!(s.local_load(1, NodeId(3)).is_err());
    s.local_drop(1, NodeId(2)).unwrap();
    assert!(s.pre_roots()[1].slots.is_empty());
    assert!(s.local_drop(1, NodeId(2)).is_err());
    assert!(s.local_load(3, NodeId(0)).is_err());
}

#[test]
fn local_reference_keeps_node_live() {
    // rho_1 -> a -> b
    let g = HeapGraph::from_arcs(2, [(0, 1)]);
    let names = NodeNames::new(vec!["a".into(), "b".into()]).unwrap();
    let mut s = StoreState::new(g, [], vec![vec![], vec![NodeId(0)]], names).unwrap();
    s.local_load(1, NodeId(1)).unwrap();
    s.del_arc(NodeId(0), NodeId(1)).unwrap();
    assert!(s.live().contains(NodeId(1)));
    assert!(s.graph().reach(&nodes([0])).len() == 1);
}

#[test]
fn dead_set_is_complement_of_live() {
    let g = HeapGraph::from_arcs(6, [(0, 1), (2, 3), (3, 2)]);
    let s = StoreState::with_roots(g, &nodes([0]), vec![NodeId(5)]).unwrap();
    assert_eq!(s.dead_set(), nodes([2, 3, 4]));
    let g = HeapGraph::new(3);
    let all = StoreState::with_roots(g, &NodeSet::new(), (0..3).map(NodeId).collect()).unwrap();
    assert!(all.dead_set().is_empty());
}

#[test]
fn invalid_store_is_rejected() {
    // supply node reachable from a root
    let g = HeapGraph::from_arcs(2, [(0, 1)]);
    assert!(StoreState::with_roots(g, &nodes([0]), vec![NodeId(1)]).is_err());
    let g = HeapGraph::new(2);
    assert!(StoreState::with_roots(g, &NodeSet::new(), vec![NodeId(1), NodeId(1)]).is_err());
}

#[test]
fn clone_overlay_is_idempotent() {
    let mut s = chain_store();
    s.enable_clone_log();
    s.record_clone(NodeId(0));
    s.add_arc(NodeId(0), NodeId(2)).unwrap();
    s.record_clone(NodeId(0));
    assert_eq!(s.clone_log().unwrap().len(), 1);
    assert_eq!(s.sucs_under_overlay(NodeId(0)), vec![NodeId(1)]);
}

#[test]
fn deleted_slot_is_reused_by_next_add() {
    let mut s = chain_store();
    s.add_arc(NodeId(0), NodeId(2)).unwrap();
    s.del_arc(NodeId(0), NodeId(1)).unwrap();
    assert_eq!(s.graph().slots(NodeId(0)), &[None, Some(NodeId(2))]);
    s.add_arc(NodeId(0), NodeId(0)).unwrap();
    assert_eq!(s.graph().slots(NodeId(0)), &[Some(NodeId(0)), Some(NodeId(2))]);
    s.del_arc(NodeId(0), NodeId(2)).unwrap();
    assert_eq!(s.graph().slots(NodeId(0)), &[Some(NodeId(0))]);
}

#[test]
fn recycle_clears_and_appends() {
    let g = HeapGraph::from_arcs(4, [(0, 1), (2, 3), (3, 2)]);
    let mut s = StoreState::with_roots(g, &nodes([0]), vec![]).unwrap();
    s.recycle(&nodes([2, 3]));
    assert_eq!(s.supply_set(), nodes([2, 3]));
    assert!(s.graph().slots(NodeId(2)).is_empty());
    s.check_invariants().unwrap();
}

#[test]
fn dump_lists_multiplicity() {
    let g = HeapGraph::from_arcs(2, [(0, 1), (0, 1)]);
    assert_eq!(g.dump(&NodeNames::numbered(2)), "n0: n1 n1\nn1:\n");
}

#[derive(Clone, Debug)]
enum Pick {
    Add(u8, u8),
    Del(u8, u8),
    New(u8),
    Load(u8),
    Drop(u8),
}

fn pick() -> impl Strategy<Value = Pick> {
    prop_oneof![
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Pick::Add(a, b)),
        (any::<u8>(), any::<u8>()).prop_map(|(a, b)| Pick::Del(a, b)),
        any::<u8>().prop_map(Pick::New),
        any::<u8>().prop_map(Pick::Load),
        any::<u8>().prop_map(Pick::Drop),
    ]
}

// Resolve a pick against the current store to a legal op, if any.
fn resolve(s: &StoreState, p: &Pick) -> Option<MutatorOp> {
    let active = s.active().to_vec();
    let at = |v: &[NodeId], k: u8| (!v.is_empty()).then(|| v[k as usize % v.len()]);
    match *p {
        Pick::Add(a, b) => Some(MutatorOp::AddArc(at(&active, a)?, at(&active, b)?)),
        Pick::Del(a, b) => {
            let src = at(&active, a)?;
            let out: Vec<NodeId> = s.graph().successors(src).collect();
            Some(MutatorOp::DelArc(src, at(&out, b)?))
        }
        Pick::New(a) => Some(MutatorOp::AddNew(at(&active, a)?)),
        Pick::Load(b) => Some(MutatorOp::LocalLoad(1, at(&s.visible_to(1).to_vec(), b)?)),
        Pick::Drop(b) => Some(MutatorOp::LocalDrop(1, at(&s.pre_roots()[1].slots, b)?)),
    }
}

fn random_store(n: usize, arcs: &[(u8, u8)]) -> StoreState {
    let arcs = arcs.iter().map(|&(a, b)| (a as u32 % n as u32, b as u32 % n as u32));
    let mut g = HeapGraph::from_arcs(n, arcs);
    // nodes n-2, n-1 on the freelist with no slots and nothing pointing at them
    for a in 0..n {
        for f in [n - 2, n - 1] {
            while g.remove_arc(NodeId::from(a), NodeId::from(f)) {}
        }
        if a >= n - 2 {
            g.clear_slots(NodeId::from(a));
        }
    }
    StoreState::new(
        g,
        [NodeId::from(n - 2), NodeId::from(n - 1)],
        vec![vec![NodeId(0)], vec![NodeId(1)]],
        NodeNames::numbered(n),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn random_op_streams_keep_invariants(
        n in 4usize..12,
        arcs in proptest::collection::vec((any::<u8>(), any::<u8>()), 0..30),
        picks in proptest::collection::vec(pick(), 0..60),
    ) {
        let mut s = random_store(n, &arcs);
        let g0 = s.graph().clone();
        s.enable_clone_log();
        for p in &picks {
            let Some(op) = resolve(&s, p) else { continue };
            let live_before = oracle_live(&s);
            let v = s.version();
            let out = s.apply(&op).unwrap();
            let live_after = oracle_live(&s);
            prop_assert!(live_after.is_subset(&live_before), "antitone broken by {:?}", op);
            if matches!(op, MutatorOp::AddArc(..) | MutatorOp::AddNew(_)) {
                prop_assert_eq!(&live_after, &live_before);
            }
            let expect_bump = u64::from(out != OpOutcome::Stalled);
            prop_assert_eq!(s.version(), v + expect_bump);
            prop_assert!(s.check_invariants().is_ok());
            prop_assert!(s.active().is_disjoint(&s.supply_set()));
        }
        for a in 0..n {
            let a = NodeId::from(a);
            let now: Vec<NodeId> = s.sucs_under_overlay(a);
            let then: Vec<NodeId> = g0.successors(a).collect();
            prop_assert_eq!(now, then);
        }
        prop_assert_eq!(s.active(), bfs(s.graph(), &s.roots()));
    }
}
