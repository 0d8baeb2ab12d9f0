use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::heap::NodeNames;

use super::{Failure, InvariantId, Verdict};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct InvariantSummary {
    pub checks: u64,
    pub failures: u64,
    pub first_failure: Option<Failure>,
}

/// Per-invariant pass/fail with the first counterexample of each.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerificationReport {
    entries: BTreeMap<InvariantId, InvariantSummary>,
}

impl VerificationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, id: InvariantId, verdict: Verdict, step: Option<usize>, cycle: Option<usize>) {
        let e = self.entries.entry(id).or_default();
        e.checks += 1;
        if let Verdict::Fail(f) = verdict {
            e.failures += 1;
            if e.first_failure.is_none() {
                e.first_failure = Some(f.at(step, cycle));
            }
        }
    }

    pub fn merge(&mut self, other: &VerificationReport) {
        for (id, s) in &other.entries {
            let e = self.entries.entry(*id).or_default();
            e.checks += s.checks;
            e.failures += s.failures;
            if e.first_failure.is_none() {
                e.first_failure = s.first_failure.clone();
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.entries.values().all(|e| e.failures == 0)
    }

    pub fn summary(&self, id: InvariantId) -> Option<&InvariantSummary> {
        self.entries.get(&id)
    }

    pub fn checked(&self, id: InvariantId) -> bool {
        self.entries.get(&id).is_some_and(|e| e.checks > 0)
    }

    pub fn failed(&self, id: InvariantId) -> bool {
        self.entries.get(&id).is_some_and(|e| e.failures > 0)
    }

    /// First failure of each failing invariant.
    pub fn failures(&self) -> Vec<&Failure> {
        self.entries
            .values()
            .filter_map(|e| e.first_failure.as_ref())
            .collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = (InvariantId, &InvariantSummary)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn to_json(&self, names: &NodeNames) -> Value {
        let mut inv = serde_json::Map::new();
        for (id, e) in &self.entries {
            let first = e.first_failure.as_ref().map(|f| {
                json!({
                    "step": f.step,
                    "cycle": f.cycle,
                    "nodes": names.set_names(&f.nodes),
                    "arc": f.arc.map(|(a, b)| [names.name(a), names.name(b)]),
                    "detail": f.detail,
                })
            });
            inv.insert(
                id.name().to_string(),
                json!({
                    "pass": e.failures == 0,
                    "checks": e.checks,
                    "failures": e.failures,
                    "first_failure": first,
                }),
            );
        }
        json!({ "passed": self.passed(), "invariants": inv })
    }
}
