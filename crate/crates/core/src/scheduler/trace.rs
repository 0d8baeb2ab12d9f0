use std::fmt;

use serde::Serialize;

use crate::heap::MutatorId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Actor {
    Collector,
    Mutator(MutatorId),
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Collector => f.write_str("collector"),
            Actor::Mutator(m) => write!(f, "m{m}"),
        }
    }
}

/// One atomic action of a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub actor: Actor,
    /// Rendered action, e.g. `addArc A E` or `step A {B,C}`.
    pub action: String,
    pub version_before: u64,
    pub version_after: u64,
    /// Hash of store, collector and mutator positions after the action.
    pub digest: u64,
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v={} {} by={}", self.version_before, self.action, self.actor)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Trace {
    pub entries: Vec<TraceEntry>,
    /// Indices of cycle-start and sweep entries.
    pub cycle_boundaries: Vec<usize>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn actors(&self) -> Vec<Actor> {
        self.entries.iter().map(|e| e.actor).collect()
    }

    /// One `v=<version> <action> by=<actor>` line per entry.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }
}
