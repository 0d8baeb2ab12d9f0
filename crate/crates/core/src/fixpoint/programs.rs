//! Three derivations of the dead-node computation: the raw greatest-fixpoint
//! iteration, the workset refinement, and the finite-differenced version
//! that maintains the workset incrementally.

use serde::Serialize;

use crate::heap::HeapGraph;
use crate::set::{NodeId, NodeSet};

use super::FixpointError;

fn sucs_of(graph: &HeapGraph, x: &NodeSet) -> NodeSet {
    let mut out = NodeSet::new();
    for a in x {
        out.extend(graph.successors(a));
    }
    out
}

/// `g(x) = nodes \ (roots ∪ {b | b ∈ sucs(a), a ∈ nodes \ x})`.
pub fn dead_g(graph: &HeapGraph, roots: &NodeSet, x: &NodeSet) -> NodeSet {
    let nodes = graph.nodes();
    let marked = sucs_of(graph, &nodes.difference(x));
    nodes.difference(&roots.union(&marked))
}

fn check_roots(graph: &HeapGraph, roots: &NodeSet) {
    assert!(roots.is_subset(&graph.nodes()), "roots outside the node universe");
}

/// Iterates `W ← g(W)` from `W = nodes` until stable.
///
/// # Panics
/// If `roots` is not a subset of the graph's nodes.
pub fn raw_dead_iteration(graph: &HeapGraph, roots: &NodeSet) -> NodeSet {
    check_roots(graph, roots);
    let mut w = graph.nodes();
    loop {
        let next = dead_g(graph, roots, &w);
        if next == w {
            return w;
        }
        w = next;
    }
}

/// `(W ∩ roots) ∪ {b | b ∈ sucs(a), b ∈ W, a ∈ nodes \ W}`, i.e. `W \ g(W)`.
pub fn workset_candidates(graph: &HeapGraph, roots: &NodeSet, w: &NodeSet) -> NodeSet {
    let outside = graph.nodes().difference(w);
    let mut ws = w.intersection(roots);
    ws.union_with(&sucs_of(graph, &outside).intersection(w));
    ws
}

/// Removes workset members from `W = nodes` one at a time, lowest first.
pub fn workset_dead_iteration(graph: &HeapGraph, roots: &NodeSet) -> NodeSet {
    workset_dead_iteration_with(graph, roots, |ws| ws.first().expect("nonempty"))
        .expect("lowest member is always a member")
}

/// As [`workset_dead_iteration`] with an injected element chooser. A choice
/// outside the current workset is rejected.
pub fn workset_dead_iteration_with(
    graph: &HeapGraph,
    roots: &NodeSet,
    mut choose: impl FnMut(&NodeSet) -> NodeId,
) -> Result<NodeSet, FixpointError> {
    check_roots(graph, roots);
    let mut w = graph.nodes();
    loop {
        let ws = workset_candidates(graph, roots, &w);
        if ws.is_empty() {
            return Ok(w);
        }
        let z = choose(&ws);
        if !ws.contains(z) {
            return Err(FixpointError::InvalidChoice(z));
        }
        w.remove(z);
    }
}

/// `(W, WS)` after initialization or after one loop iteration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WorksetLogEntry {
    pub w: NodeSet,
    pub ws: NodeSet,
}

/// Finite-differenced workset program:
///
/// ```text
/// W := nodes || WS := roots
/// while ∃ z ∈ WS:
///     W := W − z || WS := (WS ∪ {b | b ∈ sucs(z), b ∈ W}) − z
/// ```
///
/// Both assignments in a line read the old values. The log holds one entry
/// for initialization and one per iteration.
pub fn optimized_workset_dead_iteration(
    graph: &HeapGraph,
    roots: &NodeSet,
) -> (NodeSet, Vec<WorksetLogEntry>) {
    check_roots(graph, roots);
    let mut w = graph.nodes();
    let mut ws = roots.clone();
    let mut log = vec![WorksetLogEntry {
        w: w.clone(),
        ws: ws.clone(),
    }];
    while let Some(z) = ws.first() {
        let mut next_ws = ws;
        next_ws.extend(graph.successors(z).filter(|b| w.contains(*b)));
        next_ws.remove(z);
        w.remove(z);
        ws = next_ws;
        log.push(WorksetLogEntry {
            w: w.clone(),
            ws: ws.clone(),
        });
    }
    (w, log)
}
