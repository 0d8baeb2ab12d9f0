use crate::set::{NodeId, NodeSet};

use super::NodeNames;

/// Directed multigraph over a fixed universe of nodes.
///
/// Each node owns an ordered list of pointer slots. A deleted arc leaves an
/// empty slot behind (trailing empties are trimmed) and a new arc fills the
/// first empty slot, so slot indices behave like object fields.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeapGraph {
    slots: Vec<Vec<Option<NodeId>>>,
    version: u64,
}

impl HeapGraph {
    pub fn new(memory_size: usize) -> Self {
        HeapGraph {
            slots: vec![Vec::new(); memory_size],
            version: 0,
        }
    }

    /// Builds a graph from `(a, b)` arc pairs, in order.
    pub fn from_arcs(memory_size: usize, arcs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let mut g = HeapGraph::new(memory_size);
        for (a, b) in arcs {
            g.push_arc(NodeId(a), NodeId(b));
        }
        g
    }

    pub fn memory_size(&self) -> usize {
        self.slots.len()
    }

    /// The node universe `{0..memory_size}`.
    pub fn nodes(&self) -> NodeSet {
        NodeSet::full(self.slots.len())
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub(crate) fn bump_version(&mut self) {
        self.version += 1;
    }

    /// Raw slot list of `a`, including empty slots.
    pub fn slots(&self, a: NodeId) -> &[Option<NodeId>] {
        &self.slots[a.index()]
    }

    /// Successor multiset of `a` in slot order.
    pub fn successors(&self, a: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.slots[a.index()].iter().flatten().copied()
    }

    pub fn out_degree(&self, a: NodeId) -> usize {
        self.successors(a).count()
    }

    pub fn arc_count(&self, a: NodeId, b: NodeId) -> usize {
        self.successors(a).filter(|&x| x == b).count()
    }

    pub fn arc_total(&self) -> usize {
        (0..self.slots.len())
            .map(|a| self.out_degree(NodeId::from(a)))
            .sum()
    }

    pub fn max_slots(&self) -> usize {
        self.slots.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub(crate) fn push_arc(&mut self, a: NodeId, b: NodeId) {
        let row = &mut self.slots[a.index()];
        match row.iter_mut().find(|s| s.is_none()) {
            Some(hole) => *hole = Some(b),
            None => row.push(Some(b)),
        }
    }

    /// Empties the first slot holding `b`. Returns `false` if there is none.
    pub(crate) fn remove_arc(&mut self, a: NodeId, b: NodeId) -> bool {
        let row = &mut self.slots[a.index()];
        let Some(slot) = row.iter_mut().find(|s| **s == Some(b)) else {
            return false;
        };
        *slot = None;
        while row.last() == Some(&None) {
            row.pop();
        }
        true
    }

    pub(crate) fn clear_slots(&mut self, a: NodeId) {
        self.slots[a.index()].clear();
    }

    /// Nodes reachable from `seeds` (seeds included), by depth-first search.
    pub fn reach(&self, seeds: &NodeSet) -> NodeSet {
        let mut seen = seeds.clone();
        let mut stack: Vec<NodeId> = seeds.iter().collect();
        while let Some(a) = stack.pop() {
            for b in self.successors(a) {
                if seen.insert(b) {
                    stack.push(b);
                }
            }
        }
        seen
    }

    pub fn dump(&self, names: &NodeNames) -> String {
        let mut out = String::new();
        for a in 0..self.slots.len() {
            let a = NodeId::from(a);
            out.push_str(names.name(a));
            out.push(':');
            for b in self.successors(a) {
                out.push(' ');
                out.push_str(names.name(b));
            }
            out.push('\n');
        }
        out
    }
}
