//! Invariant checks, cycle-level checks and the online monitor.
//!
//! Every check recomputes what it needs from the raw store through
//! [`oracle`], never through collector code.

pub mod oracle;

mod axioms;
mod cycle;
mod monitor;
mod replay;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::heap::NodeNames;
use crate::set::{NodeId, NodeSet};

pub use axioms::{
    disjointness, dirty_axiom, dirty_cards_axiom, partition, snapshot_axiom, step_progress,
    variant_axioms, ws_axiom,
};
pub use cycle::{check_cycle, check_liveness, StallRecord};
pub use monitor::Monitor;
pub use replay::{check_antitone, check_step_axiom, ReplayError, ReplayVerdict};
pub use report::{InvariantSummary, VerificationReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InvariantId {
    Partition,
    Antitone,
    WsAxiom,
    DirtyAxiom,
    DirtyCardsAxiom,
    SnapshotAxiom,
    AimSandwich,
    Safety,
    Liveness,
    Termination,
    Disjointness,
}

impl InvariantId {
    pub const ALL: [InvariantId; 11] = [
        InvariantId::Partition,
        InvariantId::Antitone,
        InvariantId::WsAxiom,
        InvariantId::DirtyAxiom,
        InvariantId::DirtyCardsAxiom,
        InvariantId::SnapshotAxiom,
        InvariantId::AimSandwich,
        InvariantId::Safety,
        InvariantId::Liveness,
        InvariantId::Termination,
        InvariantId::Disjointness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InvariantId::Partition => "Partition",
            InvariantId::Antitone => "Antitone",
            InvariantId::WsAxiom => "WSAxiom",
            InvariantId::DirtyAxiom => "DirtyAxiom",
            InvariantId::DirtyCardsAxiom => "DirtyCardsAxiom",
            InvariantId::SnapshotAxiom => "SnapshotAxiom",
            InvariantId::AimSandwich => "AimSandwich",
            InvariantId::Safety => "Safety",
            InvariantId::Liveness => "Liveness",
            InvariantId::Termination => "Termination",
            InvariantId::Disjointness => "Disjointness",
        }
    }
}

impl fmt::Display for InvariantId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for InvariantId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for InvariantId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InvariantId::ALL
            .iter()
            .copied()
            .find(|i| i.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown invariant `{s}`"))
    }
}

/// A failed check: which invariant, where, and the offending nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub invariant: InvariantId,
    /// Trace index of the action after which the check failed.
    pub step: Option<usize>,
    pub cycle: Option<usize>,
    pub nodes: NodeSet,
    /// Offending arc, for the stepwise axioms.
    pub arc: Option<(NodeId, NodeId)>,
    pub detail: String,
}

impl Failure {
    pub fn new(invariant: InvariantId, nodes: NodeSet, detail: impl Into<String>) -> Self {
        Failure {
            invariant,
            step: None,
            cycle: None,
            nodes,
            arc: None,
            detail: detail.into(),
        }
    }

    pub fn with_arc(mut self, arc: Option<(NodeId, NodeId)>) -> Self {
        self.arc = arc;
        self
    }

    pub fn at(mut self, step: Option<usize>, cycle: Option<usize>) -> Self {
        self.step = self.step.or(step);
        self.cycle = self.cycle.or(cycle);
        self
    }

    pub fn describe(&self, names: &NodeNames) -> String {
        let mut s = format!("{}: {}", self.invariant, self.detail);
        if let Some((a, b)) = self.arc {
            s.push_str(&format!(" arc={}->{}", names.name(a), names.name(b)));
        }
        if !self.nodes.is_empty() {
            s.push_str(&format!(" nodes={}", names.format_set(&self.nodes)));
        }
        if let Some(c) = self.cycle {
            s.push_str(&format!(" cycle={c}"));
        }
        if let Some(i) = self.step {
            s.push_str(&format!(" step={i}"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(Failure),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn failure(&self) -> Option<&Failure> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(f) => Some(f),
        }
    }

    pub(crate) fn check(cond: bool, f: impl FnOnce() -> Failure) -> Verdict {
        if cond {
            Verdict::Pass
        } else {
            Verdict::Fail(f())
        }
    }
}

/// Which invariants the monitor evaluates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckSet {
    enabled: Vec<InvariantId>,
}

impl CheckSet {
    pub fn all() -> Self {
        CheckSet {
            enabled: InvariantId::ALL.to_vec(),
        }
    }

    /// Cycle-level checks only; the sweep-time safety check always runs.
    pub fn none() -> Self {
        CheckSet {
            enabled: vec![InvariantId::Safety],
        }
    }

    pub fn only(ids: impl IntoIterator<Item = InvariantId>) -> Self {
        let mut enabled: Vec<InvariantId> = ids.into_iter().collect();
        if !enabled.contains(&InvariantId::Safety) {
            enabled.push(InvariantId::Safety);
        }
        CheckSet { enabled }
    }

    pub fn contains(&self, id: InvariantId) -> bool {
        self.enabled.contains(&id)
    }

    pub fn ids(&self) -> &[InvariantId] {
        &self.enabled
    }
}

impl FromStr for CheckSet {
    type Err = String;

    /// `all`, `none`, or a comma-separated list of invariant names.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(CheckSet::all()),
            "none" | "safety" => Ok(CheckSet::none()),
            _ => s
                .split(',')
                .map(|p| p.trim().parse::<InvariantId>())
                .collect::<Result<Vec<_>, _>>()
                .map(CheckSet::only),
        }
    }
}

#[cfg(test)]
mod tests;
