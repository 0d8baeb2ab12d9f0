use crate::collector::{CardTable, Collector, Variant};
use crate::heap::{HeapGraph, StoreState};
use crate::set::{NodeId, NodeSet};

use super::oracle::{reachable, reachable_unmarked, root_seeds};
use super::{Failure, InvariantId, Verdict};

fn first_arc_into(graph: &HeapGraph, from: &NodeSet, into: &NodeSet) -> Option<(NodeId, NodeId)> {
    from.iter().find_map(|a| {
        graph
            .slots(a)
            .iter()
            .flatten()
            .find(|b| into.contains(**b))
            .map(|&b| (a, b))
    })
}

/// `closure(black ∪ gray) = black ∪ closure(gray)`, where the closure of
/// the workset treats black nodes as already marked and does not pass
/// through them.
pub fn ws_axiom(graph: &HeapGraph, black: &NodeSet, gray: &NodeSet) -> Verdict {
    let lhs = reachable(graph, &black.union(gray));
    let rhs = black.union(&reachable_unmarked(graph, gray, black));
    let missing = lhs.difference(&rhs);
    Verdict::check(missing.is_empty(), || {
        let arc = first_arc_into(graph, black, &missing);
        let detail = match arc {
            Some(_) => "arc from black to a node outside black and closure(gray)",
            None => "closure(black ∪ gray) differs from black ∪ closure(gray)",
        };
        Failure::new(InvariantId::WsAxiom, missing, detail).with_arc(arc)
    })
}

/// `closure(black ∪ gray ∪ dirty) = black ∪ closure(gray) ∪ closure(dirty)`,
/// with the same marked-set closure as [`ws_axiom`].
pub fn dirty_axiom(graph: &HeapGraph, black: &NodeSet, gray: &NodeSet, dirty: &NodeSet) -> Verdict {
    let mut s = black.union(gray);
    s.union_with(dirty);
    let lhs = reachable(graph, &s);
    let mut rhs = black.union(&reachable_unmarked(graph, gray, black));
    rhs.union_with(&reachable_unmarked(graph, dirty, black));
    let missing = lhs.difference(&rhs);
    Verdict::check(missing.is_empty(), || {
        let arc = first_arc_into(graph, black, &missing);
        let detail = match arc {
            Some(_) => "arc from black to a node outside black, closure(gray) and closure(dirty)",
            None => "closure(s) differs from black ∪ closure(gray) ∪ closure(dirty)",
        };
        Failure::new(InvariantId::DirtyAxiom, missing, detail).with_arc(arc)
    })
}

/// Every dirty node lies on a dirty card.
pub fn dirty_cards_axiom(dirty: &NodeSet, cards: &CardTable) -> Verdict {
    let outside = dirty.difference(&cards.dirty_members());
    Verdict::check(outside.is_empty(), || {
        Failure::new(InvariantId::DirtyCardsAxiom, outside, "dirty node on a clean card")
    })
}

/// `closure_0(s) = closure_0(r)` over the graph retained at cycle start.
pub fn snapshot_axiom(g0: &HeapGraph, s: &NodeSet, r: &NodeSet) -> Verdict {
    let lhs = reachable(g0, s);
    let rhs = reachable(g0, r);
    Verdict::check(lhs == rhs, || {
        let mut diff = lhs.difference(&rhs);
        diff.union_with(&rhs.difference(&lhs));
        Failure::new(
            InvariantId::SnapshotAxiom,
            diff,
            "marked set escapes the start-of-cycle closure of the roots",
        )
    })
}

pub fn disjointness(black: &NodeSet, gray: &NodeSet, dirty: &NodeSet) -> Verdict {
    let mut overlap = black.intersection(gray);
    overlap.union_with(&black.intersection(dirty));
    overlap.union_with(&gray.intersection(dirty));
    Verdict::check(overlap.is_empty(), || {
        Failure::new(InvariantId::Disjointness, overlap, "black, gray and dirty overlap")
    })
}

/// Freelist distinct, slot-free and unreachable from the roots; every slot
/// targets a node.
pub fn partition(store: &StoreState) -> Verdict {
    let n = store.memory_size();
    let fail = |nodes: NodeSet, d: String| Verdict::Fail(Failure::new(InvariantId::Partition, nodes, d));
    for a in 0..n {
        let a = NodeId::from(a);
        if store.graph().slots(a).iter().flatten().any(|b| b.index() >= n) {
            return fail(NodeSet::singleton(a), "slot targets a non-node".into());
        }
    }
    let mut supply = NodeSet::new();
    for &s in store.supply() {
        if s.index() >= n || !supply.insert(s) {
            return fail(NodeSet::singleton(s), "freelist entry repeated or out of range".into());
        }
        if store.graph().slots(s).iter().flatten().next().is_some() {
            return fail(NodeSet::singleton(s), "freelist node has slots".into());
        }
    }
    let roots = root_seeds(store).difference(&supply);
    let active = reachable(store.graph(), &roots);
    let overlap = active.intersection(&supply);
    Verdict::check(overlap.is_empty(), || {
        Failure::new(InvariantId::Partition, overlap, "freelist node is active")
    })
}

/// Collector steps strictly increase `(black, gray)` in the order
/// `(b, g) < (b', g')` iff `b ⊂ b'` or `b = b'` and `g ⊂ g'`.
pub fn step_progress(before: (&NodeSet, &NodeSet), after: (&NodeSet, &NodeSet)) -> Verdict {
    let (b0, g0) = before;
    let (b1, g1) = after;
    let ok = b0.is_strict_subset(b1) || (b0 == b1 && g0.is_strict_subset(g1));
    Verdict::check(ok, || {
        let mut nodes = b0.difference(b1);
        nodes.union_with(&g0.difference(g1));
        Failure::new(
            InvariantId::Termination,
            nodes,
            "marking step did not increase (black, gray)",
        )
    })
}

/// The step axioms that apply to the collector's variant, evaluated on the
/// current graph. Empty when no cycle is running.
pub fn variant_axioms(store: &StoreState, c: &Collector) -> Vec<(InvariantId, Verdict)> {
    if !c.in_cycle() {
        return Vec::new();
    }
    let g = store.graph();
    let mut out = vec![(InvariantId::Disjointness, disjointness(c.black(), c.gray(), c.dirty()))];
    match c.config().variant {
        Variant::StopTheWorld | Variant::Workset => {
            out.push((InvariantId::WsAxiom, ws_axiom(g, c.black(), c.gray())));
        }
        Variant::DirtySet => {
            out.push((InvariantId::DirtyAxiom, dirty_axiom(g, c.black(), c.gray(), c.dirty())));
        }
        Variant::DirtyCards => {
            out.push((InvariantId::DirtyAxiom, dirty_axiom(g, c.black(), c.gray(), c.dirty())));
            out.push((InvariantId::DirtyCardsAxiom, dirty_cards_axiom(c.dirty(), c.cards())));
        }
        Variant::Snapshot => {
            let g0 = c.start_graph().expect("cycle running");
            let r = c.seed().expect("cycle running");
            out.push((InvariantId::SnapshotAxiom, snapshot_axiom(g0, &c.marked(), r)));
        }
    }
    out
}
