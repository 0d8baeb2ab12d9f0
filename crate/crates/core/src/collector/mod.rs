//! The collector family as one deterministic state machine.
//!
//! Each call to [`Collector::step`] performs one atomic collector action.
//! Mutator operations are reported to the collector afterwards through
//! [`Collector::on_mutator_op`], which applies the configured barriers.
//!
//! A cycle runs `Idle -> RootScan -> Marking -> DirtyCleanup -> Sweep -> Idle`.
//! Mutators may act in every phase except `DirtyCleanup` and `Sweep`, and
//! not at all during a stop-the-world cycle.

mod cards;
mod config;
mod gray;

use std::collections::VecDeque;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::heap::{HeapGraph, MutatorId, MutatorOp, NodeNames, OpOutcome, Owner, StoreState};
use crate::set::{NodeId, NodeSet};
use crate::verify::oracle;

pub use cards::CardTable;
pub use config::{
    Barrier, BlackenGuard, CollectorConfig, ConfigParseError, Granularity, GrayPolicy, RootScan,
    Variant,
};
pub use gray::GrayQueue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Phase {
    Idle,
    RootScan,
    Marking,
    DirtyCleanup,
    Sweep,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Idle => "idle",
            Phase::RootScan => "root-scan",
            Phase::Marking => "marking",
            Phase::DirtyCleanup => "dirty-cleanup",
            Phase::Sweep => "sweep",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum CollectorError {
    /// The sweep would recycle live nodes. The store is left untouched.
    #[error("cycle {cycle}: sweep would recycle live nodes {unsafe_nodes:?}")]
    SafetyViolation {
        cycle: usize,
        unsafe_nodes: NodeSet,
        recycled: NodeSet,
        live_end: NodeSet,
    },
    /// No enabled action makes progress (only reachable with the literal
    /// blacken guard).
    #[error("collector stuck on {node}")]
    Stuck { node: NodeId },
    #[error("a cycle is already in progress")]
    CycleInProgress,
}

/// Per-cycle counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct CycleStats {
    /// Collector actions taken in this cycle, start and sweep included.
    pub steps: usize,
    pub coarse_steps: usize,
    pub gray_arcs: usize,
    pub blackens: usize,
    /// Gray-arc steps found by re-examining already passed slots.
    pub rechecks: usize,
    pub barrier_hits: usize,
    pub barrier_records: usize,
    /// Black nodes put back into gray by a source-recording barrier.
    pub regrays: usize,
    pub black_to_dirty: usize,
    /// Dirty nodes moved to gray.
    pub drained: usize,
    pub drain_actions: usize,
    pub root_rescans: usize,
    pub cards_scanned: usize,
    pub card_misses: usize,
    pub sweeps: usize,
    pub rescans: usize,
    pub overflows: usize,
}

/// Position of a fine-grained scan inside one gray node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Cursor {
    pub node: NodeId,
    pub slot: usize,
}

/// Outcome of one finished cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecycleResult {
    pub cycle: usize,
    pub start_version: u64,
    pub end_version: u64,
    /// Seed gray set at cycle start: global roots and the whole freelist.
    pub seed: NodeSet,
    pub live_start: NodeSet,
    pub dead_start: NodeSet,
    pub live_end: NodeSet,
    pub black_final: NodeSet,
    pub recycled: NodeSet,
    /// Dead at sweep time but not recycled.
    pub floating: NodeSet,
    pub stats: CycleStats,
    pub step_bound: usize,
}

/// One collector action, as recorded in traces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CollectorAction {
    StartCycle { cycle: usize, seeded: NodeSet },
    ScanRoots { mutator: MutatorId, grayed: NodeSet },
    CoarseStep { node: NodeId, grayed: NodeSet },
    GrayArc { from: NodeId, to: NodeId, slot: usize, recheck: bool },
    Blacken { node: NodeId },
    InterimDrain { moved: NodeSet },
    FinishMarking { rescanned: NodeSet, drained: NodeSet },
    DrainDirty { moved: NodeSet },
    EndMarking,
    Sweep(Box<RecycleResult>),
}

impl CollectorAction {
    pub fn keyword(&self) -> &'static str {
        match self {
            CollectorAction::StartCycle { .. } => "start",
            CollectorAction::ScanRoots { .. } => "scanRoots",
            CollectorAction::CoarseStep { .. } => "step",
            CollectorAction::GrayArc { .. } => "grayArc",
            CollectorAction::Blacken { .. } => "blacken",
            CollectorAction::InterimDrain { .. } => "drainInterim",
            CollectorAction::FinishMarking { .. } => "finishMarking",
            CollectorAction::DrainDirty { .. } => "drainDirty",
            CollectorAction::EndMarking => "endMarking",
            CollectorAction::Sweep(_) => "sweep",
        }
    }

    /// Whether this action is a marking step proper (moves a node towards black).
    pub fn is_mark_step(&self) -> bool {
        matches!(
            self,
            CollectorAction::CoarseStep { .. }
                | CollectorAction::GrayArc { .. }
                | CollectorAction::Blacken { .. }
        )
    }

    pub fn display<'a>(&'a self, names: &'a NodeNames) -> ActionDisplay<'a> {
        ActionDisplay { action: self, names }
    }
}

pub struct ActionDisplay<'a> {
    action: &'a CollectorAction,
    names: &'a NodeNames,
}

impl fmt::Display for ActionDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.names;
        write!(f, "{}", self.action.keyword())?;
        match self.action {
            CollectorAction::StartCycle { cycle, seeded } => {
                write!(f, " {cycle} {}", n.format_set(seeded))
            }
            CollectorAction::ScanRoots { mutator, grayed } => {
                write!(f, " {mutator} {}", n.format_set(grayed))
            }
            CollectorAction::CoarseStep { node, grayed } => {
                write!(f, " {} {}", n.name(*node), n.format_set(grayed))
            }
            CollectorAction::GrayArc { from, to, slot, recheck } => {
                write!(f, " {} {} {slot}", n.name(*from), n.name(*to))?;
                if *recheck {
                    f.write_str(" recheck")?;
                }
                Ok(())
            }
            CollectorAction::Blacken { node } => write!(f, " {}", n.name(*node)),
            CollectorAction::InterimDrain { moved } | CollectorAction::DrainDirty { moved } => {
                write!(f, " {}", n.format_set(moved))
            }
            CollectorAction::FinishMarking { rescanned, drained } => {
                write!(f, " {} {}", n.format_set(rescanned), n.format_set(drained))
            }
            CollectorAction::EndMarking => Ok(()),
            CollectorAction::Sweep(r) => write!(
                f,
                " {} recycled={} floating={}",
                r.cycle,
                n.format_set(&r.recycled),
                n.format_set(&r.floating)
            ),
        }
    }
}

#[derive(Clone, Debug)]
struct CycleInfo {
    index: usize,
    start_version: u64,
    seed: NodeSet,
    live_start: NodeSet,
    dead_start: NodeSet,
    g0: HeapGraph,
    mutators: usize,
    stats: CycleStats,
}

/// Collector state: colors, phase, cursor and cards, plus cycle bookkeeping.
#[derive(Clone, Debug)]
pub struct Collector {
    cfg: CollectorConfig,
    phase: Phase,
    black: NodeSet,
    gray: GrayQueue,
    dirty: NodeSet,
    cursor: Option<Cursor>,
    cards: CardTable,
    pending_scans: VecDeque<MutatorId>,
    cycle: Option<CycleInfo>,
    completed: usize,
}

/// Upper bound on collector actions in one cycle over `n` nodes and `q`
/// mutators, valid whenever no black node is re-grayed and no interim drain
/// runs. Each node enters gray from white at most once and from dirty at
/// most once; every marking action either grays a white node or blackens a
/// gray one.
pub fn step_bound(n: usize, q: usize) -> usize {
    5 + q + 4 * n
}

impl Collector {
    pub fn new(cfg: CollectorConfig, memory_size: usize) -> Self {
        let cfg = cfg.normalized();
        Collector {
            cfg,
            phase: Phase::Idle,
            black: NodeSet::new(),
            gray: GrayQueue::new(cfg.gray_policy),
            dirty: NodeSet::new(),
            cursor: None,
            cards: CardTable::new(memory_size, cfg.card_count),
            pending_scans: VecDeque::new(),
            cycle: None,
            completed: 0,
        }
    }

    pub fn config(&self) -> &CollectorConfig {
        &self.cfg
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn black(&self) -> &NodeSet {
        &self.black
    }

    pub fn gray(&self) -> &NodeSet {
        self.gray.set()
    }

    pub fn gray_queue(&self) -> &GrayQueue {
        &self.gray
    }

    pub fn dirty(&self) -> &NodeSet {
        &self.dirty
    }

    pub fn cards(&self) -> &CardTable {
        &self.cards
    }

    pub fn cursor(&self) -> Option<Cursor> {
        self.cursor
    }

    /// `s = black ∪ gray ∪ dirty`.
    pub fn marked(&self) -> NodeSet {
        let mut s = self.black.union(self.gray.set());
        s.union_with(&self.dirty);
        s
    }

    fn is_marked(&self, n: NodeId) -> bool {
        self.black.contains(n) || self.gray.contains(n) || self.dirty.contains(n)
    }

    pub fn completed_cycles(&self) -> usize {
        self.completed
    }

    /// Index of the running cycle (1-based), if any.
    pub fn current_cycle(&self) -> Option<usize> {
        self.cycle.as_ref().map(|c| c.index)
    }

    pub fn stats(&self) -> Option<&CycleStats> {
        self.cycle.as_ref().map(|c| &c.stats)
    }

    /// Graph as of cycle start.
    pub fn start_graph(&self) -> Option<&HeapGraph> {
        self.cycle.as_ref().map(|c| &c.g0)
    }

    /// Seed gray set of the running cycle.
    pub fn seed(&self) -> Option<&NodeSet> {
        self.cycle.as_ref().map(|c| &c.seed)
    }

    pub fn live_start(&self) -> Option<&NodeSet> {
        self.cycle.as_ref().map(|c| &c.live_start)
    }

    pub fn in_cycle(&self) -> bool {
        self.phase != Phase::Idle
    }

    /// Mutators may not act while this holds.
    pub fn mutators_paused(&self) -> bool {
        match self.phase {
            Phase::Idle => false,
            Phase::DirtyCleanup | Phase::Sweep => true,
            Phase::RootScan | Phase::Marking => self.cfg.variant == Variant::StopTheWorld,
        }
    }

    /// Step bound for the running cycle, accounting for re-grays and
    /// interim drains.
    pub fn dynamic_step_bound(&self) -> Option<usize> {
        let c = self.cycle.as_ref()?;
        let s = &c.stats;
        Some(step_bound(c.g0.memory_size(), c.mutators) + 2 * s.regrays + 3 * s.drained + s.drain_actions)
    }

    /// Feeds the digest of a run.
    pub fn hash_state<H: std::hash::Hasher>(&self, h: &mut H) {
        use std::hash::Hash;
        self.phase.hash(h);
        self.black.hash(h);
        self.gray.hash(h);
        self.dirty.hash(h);
        self.cursor.hash(h);
        self.cards.hash(h);
        self.pending_scans.hash(h);
        self.completed.hash(h);
    }

    /// Performs the next collector action.
    pub fn step(&mut self, store: &mut StoreState) -> Result<CollectorAction, CollectorError> {
        let action = match self.phase {
            Phase::Idle => self.start_cycle(store)?,
            Phase::RootScan => self.scan_next_mutator(store),
            Phase::Marking => {
                if self.cfg.interim_drain > 0 && !self.dirty.is_empty() {
                    self.interim_drain()
                } else if self.cursor.is_some() || !self.gray.is_empty() {
                    self.mark_step(store)?
                } else {
                    self.finish_marking(store)
                }
            }
            Phase::DirtyCleanup => {
                if self.cursor.is_some() || !self.gray.is_empty() {
                    self.mark_step(store)?
                } else if !self.dirty.is_empty() {
                    let moved = self.drain_dirty();
                    CollectorAction::DrainDirty { moved }
                } else {
                    self.phase = Phase::Sweep;
                    CollectorAction::EndMarking
                }
            }
            Phase::Sweep => {
                let r = self.sweep(store)?;
                CollectorAction::Sweep(Box::new(r))
            }
        };
        if let Some(c) = self.cycle.as_mut() {
            c.stats.steps += 1;
        }
        if let CollectorAction::Sweep(r) = &action {
            let mut r = r.clone();
            r.stats.steps += 1;
            return Ok(CollectorAction::Sweep(r));
        }
        Ok(action)
    }

    /// Runs the collector alone until the current (or a fresh) cycle ends.
    pub fn run_cycle(&mut self, store: &mut StoreState) -> Result<RecycleResult, CollectorError> {
        loop {
            if let CollectorAction::Sweep(r) = self.step(store)? {
                return Ok(*r);
            }
        }
    }

    /// Starts a cycle. Fails if one is running.
    pub fn start_cycle(&mut self, store: &mut StoreState) -> Result<CollectorAction, CollectorError> {
        if self.phase != Phase::Idle {
            return Err(CollectorError::CycleInProgress);
        }
        self.black.clear();
        self.gray.clear();
        self.dirty.clear();
        self.cursor = None;
        self.cards = CardTable::new(store.memory_size(), self.cfg.card_count);
        self.pending_scans.clear();

        // The freelist counts as reachable: seed it with the globals.
        let mut seed = store.local_roots(Owner::Global);
        seed.extend(store.supply().iter().copied());
        let atomic_roots = matches!(self.cfg.variant, Variant::StopTheWorld | Variant::Snapshot);
        if atomic_roots {
            seed.union_with(&store.roots());
        }
        for n in &seed {
            self.gray.push(n);
        }
        if self.cfg.variant == Variant::Snapshot {
            store.enable_clone_log();
        }

        let live_start = oracle::live(store);
        let index = self.completed + 1;
        self.cycle = Some(CycleInfo {
            index,
            start_version: store.version(),
            seed: seed.clone(),
            dead_start: store.nodes().difference(&live_start),
            live_start,
            g0: store.graph().clone(),
            mutators: store.mutator_count(),
            stats: CycleStats::default(),
        });
        if atomic_roots || store.mutator_count() == 0 {
            self.phase = Phase::Marking;
        } else {
            self.pending_scans.extend(1..=store.mutator_count());
            self.phase = Phase::RootScan;
        }
        Ok(CollectorAction::StartCycle { cycle: index, seeded: seed })
    }

    fn scan_next_mutator(&mut self, store: &StoreState) -> CollectorAction {
        let m = self.pending_scans.pop_front().expect("root-scan phase with no pending scan");
        let mut grayed = NodeSet::new();
        for r in &store.local_roots(Owner::Mutator(m)) {
            if !self.is_marked(r) {
                self.gray.push(r);
                grayed.insert(r);
            }
        }
        if self.pending_scans.is_empty() {
            self.phase = Phase::Marking;
        }
        CollectorAction::ScanRoots { mutator: m, grayed }
    }

    fn stats_mut(&mut self) -> &mut CycleStats {
        &mut self.cycle.as_mut().expect("no cycle running").stats
    }

    fn slots_of<'s>(&self, store: &'s StoreState, x: NodeId) -> &'s [Option<NodeId>] {
        if self.cfg.variant == Variant::Snapshot {
            store.slots_under_overlay(x)
        } else {
            store.graph().slots(x)
        }
    }

    fn blacken(&mut self, x: NodeId) {
        self.gray.remove(x);
        self.black.insert(x);
        self.cursor = None;
    }

    fn mark_step(&mut self, store: &StoreState) -> Result<CollectorAction, CollectorError> {
        match self.cfg.granularity {
            Granularity::Coarse => {
                let x = self.gray.select().expect("mark step with empty gray");
                let mut grayed = NodeSet::new();
                for y in self.slots_of(store, x).iter().flatten().copied() {
                    if !self.is_marked(y) {
                        self.gray.push(y);
                        grayed.insert(y);
                    }
                }
                self.blacken(x);
                self.stats_mut().coarse_steps += 1;
                Ok(CollectorAction::CoarseStep { node: x, grayed })
            }
            Granularity::Fine => self.fine_step(store),
        }
    }

    fn fine_step(&mut self, store: &StoreState) -> Result<CollectorAction, CollectorError> {
        let cur = match self.cursor {
            Some(c) => c,
            None => {
                let x = self.gray.select().expect("mark step with empty gray");
                Cursor { node: x, slot: 0 }
            }
        };
        let x = cur.node;
        let slots = self.slots_of(store, x);
        let unmarked = |from: usize, to: usize| {
            (from..to.min(slots.len())).find_map(|j| match slots[j] {
                Some(y) if !self.is_marked(y) => Some((j, y)),
                _ => None,
            })
        };
        if let Some((j, y)) = unmarked(cur.slot, slots.len()) {
            return Ok(self.gray_arc(x, y, j, false));
        }
        match self.cfg.blacken_guard {
            BlackenGuard::CursorOnly => {}
            BlackenGuard::Recheck => {
                if let Some((j, y)) = unmarked(0, cur.slot) {
                    self.stats_mut().rechecks += 1;
                    return Ok(self.gray_arc(x, y, j, true));
                }
            }
            BlackenGuard::AsPrinted => {
                let b_or_g = slots
                    .iter()
                    .flatten()
                    .any(|&y| self.black.contains(y) || self.gray.contains(y));
                if b_or_g {
                    self.cursor = Some(Cursor { node: x, slot: slots.len() });
                    return Err(CollectorError::Stuck { node: x });
                }
            }
        }
        self.blacken(x);
        self.stats_mut().blackens += 1;
        Ok(CollectorAction::Blacken { node: x })
    }

    fn gray_arc(&mut self, x: NodeId, y: NodeId, slot: usize, recheck: bool) -> CollectorAction {
        self.gray.push(y);
        self.cursor = Some(Cursor { node: x, slot: slot + 1 });
        self.stats_mut().gray_arcs += 1;
        CollectorAction::GrayArc { from: x, to: y, slot, recheck }
    }

    fn interim_drain(&mut self) -> CollectorAction {
        let moved: NodeSet = self.dirty.iter().take(self.cfg.interim_drain).collect();
        for n in &moved {
            self.dirty.remove(n);
            self.gray.push(n);
        }
        let s = self.stats_mut();
        s.drained += moved.len();
        s.drain_actions += 1;
        CollectorAction::InterimDrain { moved }
    }

    /// Moves dirty nodes to gray, visiting only dirty cards when cards are on.
    fn drain_dirty(&mut self) -> NodeSet {
        let mut moved = NodeSet::new();
        if self.cfg.variant == Variant::DirtyCards {
            let cards = self.cards.dirty_cards();
            for &c in &cards {
                moved.union_with(&self.cards.members(c).intersection(&self.dirty));
            }
            let missed = self.dirty.difference(&moved);
            self.cards.clear();
            let s = self.stats_mut();
            s.cards_scanned += cards.len();
            s.card_misses += missed.len();
            moved.union_with(&missed);
        } else {
            moved = self.dirty.clone();
        }
        for n in &moved {
            self.gray.push(n);
        }
        self.dirty.clear();
        let s = self.stats_mut();
        s.drained += moved.len();
        s.drain_actions += 1;
        moved
    }

    fn finish_marking(&mut self, store: &StoreState) -> CollectorAction {
        self.phase = Phase::DirtyCleanup;
        let mut rescanned = NodeSet::new();
        let per_mutator_scans = !matches!(self.cfg.variant, Variant::StopTheWorld | Variant::Snapshot);
        if per_mutator_scans && self.cfg.root_scan == RootScan::StopAllHandshake {
            for r in &store.roots() {
                if !self.is_marked(r) {
                    self.gray.push(r);
                    rescanned.insert(r);
                }
            }
            self.stats_mut().root_rescans += rescanned.len();
        }
        let drained = if self.dirty.is_empty() {
            NodeSet::new()
        } else {
            let d = self.drain_dirty();
            // counted as part of this action
            self.stats_mut().drain_actions -= 1;
            d
        };
        CollectorAction::FinishMarking { rescanned, drained }
    }

    fn sweep(&mut self, store: &mut StoreState) -> Result<RecycleResult, CollectorError> {
        let info = self.cycle.as_ref().expect("sweep outside a cycle");
        let live_end = oracle::live(store);
        let supply = store.supply_set();
        let recycled = store.nodes().difference(&self.black).difference(&supply);
        let unsafe_nodes = recycled.intersection(&live_end);
        if !unsafe_nodes.is_empty() {
            return Err(CollectorError::SafetyViolation {
                cycle: info.index,
                unsafe_nodes,
                recycled,
                live_end,
            });
        }
        let floating = store.nodes().difference(&live_end).difference(&recycled);
        let step_bound = self.dynamic_step_bound().expect("cycle running");
        store.recycle(&recycled);
        store.disable_clone_log();

        let info = self.cycle.take().expect("cycle running");
        let mut stats = info.stats;
        stats.sweeps = self.gray.sweeps;
        stats.rescans = self.gray.rescans;
        stats.overflows = self.gray.overflows;
        let result = RecycleResult {
            cycle: info.index,
            start_version: info.start_version,
            end_version: store.version(),
            seed: info.seed,
            live_start: info.live_start,
            dead_start: info.dead_start,
            live_end,
            black_final: std::mem::take(&mut self.black),
            recycled,
            floating,
            stats,
            step_bound,
        };
        self.gray.clear();
        self.dirty.clear();
        self.cursor = None;
        self.cards.clear();
        self.phase = Phase::Idle;
        self.completed += 1;
        Ok(result)
    }

    /// Applies barriers for a mutator operation that has just taken effect.
    /// Returns the nodes newly recorded into gray or dirty.
    pub fn on_mutator_op(&mut self, op: &MutatorOp, outcome: OpOutcome) -> NodeSet {
        let mut recorded = NodeSet::new();
        if self.phase == Phase::Idle || outcome == OpOutcome::Stalled {
            return recorded;
        }
        let mut hits: Vec<NodeId> = Vec::new();
        let mut steele_source = None;
        match (self.cfg.barrier, *op) {
            (Barrier::Dijkstra, MutatorOp::AddArc(_, b)) => hits.push(b),
            (Barrier::Yuasa, MutatorOp::DelArc(_, b)) => hits.push(b),
            (Barrier::Steele, MutatorOp::AddArc(a, _)) => steele_source = Some(a),
            _ => {}
        }
        match (self.cfg.root_scan, *op) {
            (RootScan::LoadBarrier, MutatorOp::LocalLoad(_, b)) => hits.push(b),
            (RootScan::DeleteBarrier, MutatorOp::DelArc(_, b)) => hits.push(b),
            _ => {}
        }
        if self.cfg.variant == Variant::StopTheWorld {
            return recorded;
        }

        if let Some(a) = steele_source {
            self.stats_mut().barrier_hits += 1;
            if self.cfg.variant == Variant::DirtyCards {
                self.cards.mark(a);
            }
            if self.black.contains(a) {
                self.black.remove(a);
                if self.cfg.variant.uses_dirty_set() {
                    self.dirty.insert(a);
                    self.stats_mut().black_to_dirty += 1;
                } else {
                    self.gray.push(a);
                    self.stats_mut().regrays += 1;
                }
                self.stats_mut().barrier_records += 1;
                recorded.insert(a);
            }
        }
        for b in hits {
            self.stats_mut().barrier_hits += 1;
            if self.cfg.variant == Variant::DirtyCards {
                self.cards.mark(b);
            }
            if self.is_marked(b) {
                continue;
            }
            if self.cfg.variant.uses_dirty_set() {
                self.dirty.insert(b);
            } else {
                self.gray.push(b);
            }
            self.stats_mut().barrier_records += 1;
            recorded.insert(b);
        }
        recorded
    }
}
