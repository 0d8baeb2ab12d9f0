//! Brute-force reachability, kept independent of the collector and of
//! `HeapGraph::reach`.

use crate::heap::{HeapGraph, StoreState};
use crate::set::{NodeId, NodeSet};

/// Nodes reachable from `seeds` (seeds included) following `sucs`.
pub fn reachable_by<F, I>(memory_size: usize, seeds: &NodeSet, mut sucs: F) -> NodeSet
where
    F: FnMut(NodeId) -> I,
    I: IntoIterator<Item = NodeId>,
{
    let mut seen = vec![false; memory_size];
    let mut stack: Vec<NodeId> = Vec::new();
    for s in seeds {
        if !seen[s.index()] {
            seen[s.index()] = true;
            stack.push(s);
        }
    }
    while let Some(a) = stack.pop() {
        for b in sucs(a) {
            if !seen[b.index()] {
                seen[b.index()] = true;
                stack.push(b);
            }
        }
    }
    seen.iter()
        .enumerate()
        .filter(|(_, &s)| s)
        .map(|(i, _)| NodeId::from(i))
        .collect()
}

/// Reachability over the raw slots of `graph`.
pub fn reachable(graph: &HeapGraph, seeds: &NodeSet) -> NodeSet {
    reachable_by(graph.memory_size(), seeds, |a| {
        graph.slots(a).iter().flatten().copied().collect::<Vec<_>>()
    })
}

/// Reachability from `seeds` that never enters a node of `marked`.
pub fn reachable_unmarked(graph: &HeapGraph, seeds: &NodeSet, marked: &NodeSet) -> NodeSet {
    reachable_by(graph.memory_size(), seeds, |a| {
        graph
            .slots(a)
            .iter()
            .flatten()
            .copied()
            .filter(|b| !marked.contains(*b))
            .collect::<Vec<_>>()
    })
}

/// Every pre-root slot target plus the freelist, read straight off the store.
pub fn root_seeds(store: &StoreState) -> NodeSet {
    let mut seeds: NodeSet = store
        .pre_roots()
        .iter()
        .flat_map(|p| p.slots.iter().copied())
        .collect();
    seeds.extend(store.supply().iter().copied());
    seeds
}

/// `live = reach(roots) ∪ supply`.
pub fn live(store: &StoreState) -> NodeSet {
    reachable(store.graph(), &root_seeds(store))
}

pub fn dead(store: &StoreState) -> NodeSet {
    store.nodes().difference(&live(store))
}
