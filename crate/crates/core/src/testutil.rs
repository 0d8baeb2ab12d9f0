//! Test-only oracles and generators.

use std::collections::VecDeque;

use proptest::prelude::*;

use crate::heap::HeapGraph;
use crate::set::{NodeId, NodeSet};

/// Breadth-first reachability over raw slots, seeds included.
pub fn bfs(g: &HeapGraph, seeds: &NodeSet) -> NodeSet {
    let mut seen = vec![false; g.memory_size()];
    let mut q = VecDeque::new();
    for s in seeds {
        seen[s.index()] = true;
        q.push_back(s);
    }
    while let Some(a) = q.pop_front() {
        for b in g.slots(a).iter().flatten() {
            if !seen[b.index()] {
                seen[b.index()] = true;
                q.push_back(*b);
            }
        }
    }
    (0..seen.len()).filter(|&i| seen[i]).map(NodeId::from).collect()
}

/// Nodes reachable in one or more steps.
pub fn bfs_plus(g: &HeapGraph, seeds: &NodeSet) -> NodeSet {
    let mut first = NodeSet::new();
    for a in seeds {
        first.extend(g.slots(a).iter().flatten().copied());
    }
    bfs(g, &first)
}

pub fn arb_graph(max_nodes: usize, max_arcs: usize) -> impl Strategy<Value = HeapGraph> {
    (1..=max_nodes).prop_flat_map(move |n| {
        proptest::collection::vec((0..n as u32, 0..n as u32), 0..=max_arcs)
            .prop_map(move |arcs| HeapGraph::from_arcs(n, arcs))
    })
}

pub fn arb_subset(n: usize) -> impl Strategy<Value = NodeSet> {
    proptest::collection::vec(any::<bool>(), n).prop_map(|bits| {
        bits.iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| NodeId::from(i))
            .collect()
    })
}

pub fn arb_graph_with_roots(
    max_nodes: usize,
    max_arcs: usize,
) -> impl Strategy<Value = (HeapGraph, NodeSet)> {
    arb_graph(max_nodes, max_arcs).prop_flat_map(|g| {
        let n = g.memory_size();
        (Just(g), arb_subset(n))
    })
}
