//! The shared store: heap graph, freelist, pre-roots and the clone overlay
//! used by snapshot collection.
//!
//! Every mutating operation bumps the graph version by exactly one, so the
//! version indexes the sequence of graphs `G_0, G_1, ...` the collector
//! observes.

mod graph;
mod names;
mod ops;

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::set::{NodeId, NodeSet};

pub use graph::HeapGraph;
pub use names::NodeNames;
pub use ops::{MutatorId, MutatorOp, OpKind, OpOutcome};

/// Owner of a pre-root: the globals (`ρ_0`) or one mutator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    Global,
    Mutator(MutatorId),
}

/// Registers and stack of one mutator (or the globals), modeled as a single
/// pseudo-node whose slots point into the heap. Pre-roots are not heap nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PreRoot {
    pub owner: Owner,
    pub slots: Vec<NodeId>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum HeapError {
    #[error("illegal mutation `{op}`: {reason}")]
    IllegalMutation { op: String, reason: String },
    #[error("invalid store: {0}")]
    InvalidStore(String),
}

fn illegal(op: &MutatorOp, names: &NodeNames, reason: impl Into<String>) -> HeapError {
    HeapError::IllegalMutation {
        op: op.display(names).to_string(),
        reason: reason.into(),
    }
}

/// Heap graph plus the freelist, pre-roots and clone log.
///
/// `active`, `live` and `dead` are always derived from the graph and the
/// roots; none of them is stored.
#[derive(Clone, Debug)]
pub struct StoreState {
    graph: HeapGraph,
    supply: VecDeque<NodeId>,
    pre_roots: Vec<PreRoot>,
    clone_log: Option<BTreeMap<NodeId, Vec<Option<NodeId>>>>,
    names: Arc<NodeNames>,
}

impl StoreState {
    /// Builds a store and validates it. `pre_roots[0]` holds the globals,
    /// `pre_roots[m]` mutator `m`.
    pub fn new(
        graph: HeapGraph,
        supply: impl IntoIterator<Item = NodeId>,
        pre_roots: Vec<Vec<NodeId>>,
        names: NodeNames,
    ) -> Result<Self, HeapError> {
        let mut pre_roots: Vec<PreRoot> = pre_roots
            .into_iter()
            .enumerate()
            .map(|(i, slots)| PreRoot {
                owner: if i == 0 {
                    Owner::Global
                } else {
                    Owner::Mutator(i)
                },
                slots,
            })
            .collect();
        if pre_roots.is_empty() {
            pre_roots.push(PreRoot {
                owner: Owner::Global,
                slots: Vec::new(),
            });
        }
        let store = StoreState {
            graph,
            supply: supply.into_iter().collect(),
            pre_roots,
            clone_log: None,
            names: Arc::new(names),
        };
        store.check_invariants().map_err(HeapError::InvalidStore)?;
        Ok(store)
    }

    /// A store over `graph` with only global roots and no mutators.
    pub fn with_roots(graph: HeapGraph, roots: &NodeSet, supply: Vec<NodeId>) -> Result<Self, HeapError> {
        let n = graph.memory_size();
        StoreState::new(graph, supply, vec![roots.to_vec()], NodeNames::numbered(n))
    }

    pub fn graph(&self) -> &HeapGraph {
        &self.graph
    }

    pub fn names(&self) -> &NodeNames {
        &self.names
    }

    pub fn names_arc(&self) -> Arc<NodeNames> {
        Arc::clone(&self.names)
    }

    pub fn version(&self) -> u64 {
        self.graph.version()
    }

    pub fn memory_size(&self) -> usize {
        self.graph.memory_size()
    }

    pub fn nodes(&self) -> NodeSet {
        self.graph.nodes()
    }

    /// Ordered freelist, head first.
    pub fn supply(&self) -> &VecDeque<NodeId> {
        &self.supply
    }

    pub fn supply_set(&self) -> NodeSet {
        self.supply.iter().copied().collect()
    }

    pub fn pre_roots(&self) -> &[PreRoot] {
        &self.pre_roots
    }

    /// Number of mutators `q` (pre-roots other than the globals).
    pub fn mutator_count(&self) -> usize {
        self.pre_roots.len() - 1
    }

    pub fn pre_root(&self, owner: Owner) -> Option<&PreRoot> {
        match owner {
            Owner::Global => self.pre_roots.first(),
            Owner::Mutator(m) if m >= 1 => self.pre_roots.get(m),
            Owner::Mutator(_) => None,
        }
    }

    /// `r = sucs(ρ)`: every pre-root slot target, globals included.
    pub fn roots(&self) -> NodeSet {
        self.pre_roots
            .iter()
            .flat_map(|p| p.slots.iter().copied())
            .collect()
    }

    /// Targets of one pre-root.
    pub fn local_roots(&self, owner: Owner) -> NodeSet {
        self.pre_root(owner)
            .map(|p| p.slots.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Nodes reachable from the roots: the mutators' graph.
    pub fn active(&self) -> NodeSet {
        self.graph.reach(&self.roots())
    }

    /// `active ⊎ supply`.
    pub fn live(&self) -> NodeSet {
        let mut live = self.active();
        live.extend(self.supply.iter().copied());
        live
    }

    /// `nodes \ live`, derived on demand.
    pub fn dead_set(&self) -> NodeSet {
        self.nodes().difference(&self.live())
    }

    /// Nodes mutator `m` can see: reachable from its own pre-root or the globals.
    pub fn visible_to(&self, m: MutatorId) -> NodeSet {
        let mut seeds = self.local_roots(Owner::Global);
        seeds.union_with(&self.local_roots(Owner::Mutator(m)));
        self.graph.reach(&seeds)
    }

    pub fn clone_log_enabled(&self) -> bool {
        self.clone_log.is_some()
    }

    /// Starts clone-on-write; the overlay reproduces the graph as of now.
    pub fn enable_clone_log(&mut self) {
        self.clone_log = Some(BTreeMap::new());
    }

    pub fn disable_clone_log(&mut self) {
        self.clone_log = None;
    }

    pub fn clone_log(&self) -> Option<&BTreeMap<NodeId, Vec<Option<NodeId>>>> {
        self.clone_log.as_ref()
    }

    /// Saves `a`'s slot list unless already saved in this cycle. No-op while
    /// clone-on-write is off.
    pub fn record_clone(&mut self, a: NodeId) {
        if let Some(log) = self.clone_log.as_mut() {
            log.entry(a)
                .or_insert_with(|| self.graph.slots(a).to_vec());
        }
    }

    /// Successors of `a` as of the moment clone-on-write was enabled.
    pub fn sucs_under_overlay(&self, a: NodeId) -> Vec<NodeId> {
        match self.clone_log.as_ref().and_then(|log| log.get(&a)) {
            Some(saved) => saved.iter().flatten().copied().collect(),
            None => self.graph.successors(a).collect(),
        }
    }

    /// Slot list of `a` as of the moment clone-on-write was enabled, holes included.
    pub fn slots_under_overlay(&self, a: NodeId) -> &[Option<NodeId>] {
        match self.clone_log.as_ref().and_then(|log| log.get(&a)) {
            Some(saved) => saved,
            None => self.graph.slots(a),
        }
    }

    /// Applies one mutator operation atomically.
    pub fn apply(&mut self, op: &MutatorOp) -> Result<OpOutcome, HeapError> {
        match *op {
            MutatorOp::AddArc(a, b) => self.add_arc(a, b).map(|_| OpOutcome::Done),
            MutatorOp::DelArc(a, b) => self.del_arc(a, b).map(|_| OpOutcome::Done),
            MutatorOp::AddNew(a) => self.add_new(a),
            MutatorOp::LocalLoad(m, b) => self.local_load(m, b).map(|_| OpOutcome::Done),
            MutatorOp::LocalDrop(m, b) => self.local_drop(m, b).map(|_| OpOutcome::Done),
        }
    }

    /// Checks the preconditions of `op` without applying it.
    pub fn check_legal(&self, op: &MutatorOp) -> Result<(), HeapError> {
        let active = match op {
            MutatorOp::LocalLoad(..) | MutatorOp::LocalDrop(..) => NodeSet::new(),
            _ => self.active(),
        };
        self.check_legal_with(op, &active)
    }

    fn check_node(&self, op: &MutatorOp, x: NodeId) -> Result<(), HeapError> {
        if x.index() >= self.memory_size() {
            return Err(illegal(op, &self.names, format!("{x} is not a heap node")));
        }
        Ok(())
    }

    fn check_mutator(&self, op: &MutatorOp, m: MutatorId) -> Result<(), HeapError> {
        if m == 0 || m > self.mutator_count() {
            return Err(illegal(op, &self.names, format!("no mutator {m}")));
        }
        Ok(())
    }

    fn check_legal_with(&self, op: &MutatorOp, active: &NodeSet) -> Result<(), HeapError> {
        let name = |x: NodeId| self.names.name(x).to_string();
        match *op {
            MutatorOp::AddArc(a, b) => {
                self.check_node(op, a)?;
                self.check_node(op, b)?;
                for x in [a, b] {
                    if !active.contains(x) {
                        return Err(illegal(op, &self.names, format!("{} is not active", name(x))));
                    }
                }
            }
            MutatorOp::DelArc(a, b) => {
                self.check_node(op, a)?;
                self.check_node(op, b)?;
                if !active.contains(a) {
                    return Err(illegal(op, &self.names, format!("{} is not active", name(a))));
                }
                if self.graph.arc_count(a, b) == 0 {
                    return Err(illegal(op, &self.names, "no such arc"));
                }
            }
            MutatorOp::AddNew(a) => {
                self.check_node(op, a)?;
                if !active.contains(a) {
                    return Err(illegal(op, &self.names, format!("{} is not active", name(a))));
                }
            }
            MutatorOp::LocalLoad(m, b) => {
                self.check_mutator(op, m)?;
                self.check_node(op, b)?;
                if !self.visible_to(m).contains(b) {
                    return Err(illegal(
                        op,
                        &self.names,
                        format!("{} is not visible to mutator {m}", name(b)),
                    ));
                }
            }
            MutatorOp::LocalDrop(m, b) => {
                self.check_mutator(op, m)?;
                if !self.pre_roots[m].slots.contains(&b) {
                    return Err(illegal(op, &self.names, "pre-root holds no such slot"));
                }
            }
        }
        Ok(())
    }

    /// Appends an `a -> b` slot. Both ends must be active.
    pub fn add_arc(&mut self, a: NodeId, b: NodeId) -> Result<(), HeapError> {
        self.check_legal(&MutatorOp::AddArc(a, b))?;
        self.record_clone(a);
        self.graph.push_arc(a, b);
        self.graph.bump_version();
        Ok(())
    }

    /// Removes one `a -> b` slot.
    pub fn del_arc(&mut self, a: NodeId, b: NodeId) -> Result<(), HeapError> {
        self.check_legal(&MutatorOp::DelArc(a, b))?;
        self.record_clone(a);
        self.graph.remove_arc(a, b);
        self.graph.bump_version();
        Ok(())
    }

    /// Takes the head of the freelist and attaches it below `a`.
    /// An empty freelist yields [`OpOutcome::Stalled`] and leaves the store unchanged.
    pub fn add_new(&mut self, a: NodeId) -> Result<OpOutcome, HeapError> {
        self.check_legal(&MutatorOp::AddNew(a))?;
        let Some(b) = self.supply.pop_front() else {
            return Ok(OpOutcome::Stalled);
        };
        debug_assert!(self.graph.slots(b).is_empty(), "supply node with slots");
        self.record_clone(a);
        self.graph.push_arc(a, b);
        self.graph.bump_version();
        Ok(OpOutcome::Allocated(b))
    }

    /// `addArc(ρ_m, b)`: mutator `m` loads a pointer to `b` into a register.
    pub fn local_load(&mut self, m: MutatorId, b: NodeId) -> Result<(), HeapError> {
        self.check_legal(&MutatorOp::LocalLoad(m, b))?;
        self.pre_roots[m].slots.push(b);
        self.graph.bump_version();
        Ok(())
    }

    /// `delArc(ρ_m, b)`.
    pub fn local_drop(&mut self, m: MutatorId, b: NodeId) -> Result<(), HeapError> {
        self.check_legal(&MutatorOp::LocalDrop(m, b))?;
        let slots = &mut self.pre_roots[m].slots;
        let pos = slots.iter().position(|&x| x == b).expect("checked above");
        slots.remove(pos);
        self.graph.bump_version();
        Ok(())
    }

    /// Returns `nodes` to the freelist (ascending order) with their slots
    /// cleared. Used by the collector's sweep.
    pub fn recycle(&mut self, nodes: &NodeSet) {
        if nodes.is_empty() {
            return;
        }
        for n in nodes {
            self.graph.clear_slots(n);
            self.supply.push_back(n);
        }
        self.graph.bump_version();
    }

    /// Structural invariants: slot targets in range, freelist entries
    /// distinct and slot-free, and no freelist node reachable from the roots.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.memory_size();
        for a in 0..n {
            for b in self.graph.successors(NodeId::from(a)) {
                if b.index() >= n {
                    return Err(format!("slot of {} targets non-node {b}", self.names.name(a.into())));
                }
            }
        }
        let mut seen = NodeSet::new();
        for &s in &self.supply {
            if s.index() >= n {
                return Err(format!("supply holds non-node {s}"));
            }
            if !seen.insert(s) {
                return Err(format!("{} appears twice in supply", self.names.name(s)));
            }
            if self.graph.successors(s).next().is_some() {
                return Err(format!("supply node {} has outgoing slots", self.names.name(s)));
            }
        }
        for p in &self.pre_roots {
            if let Some(b) = p.slots.iter().find(|b| b.index() >= n) {
                return Err(format!("pre-root slot targets non-node {b}"));
            }
        }
        let overlap = self.active().intersection(&seen);
        if !overlap.is_empty() {
            return Err(format!(
                "supply nodes reachable from roots: {}",
                self.names.format_set(&overlap)
            ));
        }
        Ok(())
    }

    /// Adjacency dump, one `node: t1 t2` line per node, multiplicity by
    /// repetition.
    pub fn dump_graph(&self) -> String {
        self.graph.dump(&self.names)
    }
}

#[cfg(test)]
mod tests;
