use crate::collector::{CollectorAction, Collector, RecycleResult};
use crate::heap::StoreState;
use crate::set::NodeSet;

use super::axioms::{partition, step_progress, variant_axioms};
use super::cycle::{check_cycle, check_liveness, StallRecord};
use super::oracle;
use super::{CheckSet, Failure, InvariantId, Verdict, VerificationReport};

/// Online checker fed after every action of a run.
#[derive(Clone, Debug)]
pub struct Monitor {
    checks: CheckSet,
    report: VerificationReport,
    prev_live: Option<NodeSet>,
    cycles: Vec<RecycleResult>,
    stalls: Vec<StallRecord>,
}

impl Monitor {
    pub fn new(checks: CheckSet) -> Self {
        Monitor {
            checks,
            report: VerificationReport::new(),
            prev_live: None,
            cycles: Vec::new(),
            stalls: Vec::new(),
        }
    }

    pub fn checks(&self) -> &CheckSet {
        &self.checks
    }

    pub fn report(&self) -> &VerificationReport {
        &self.report
    }

    pub fn cycles(&self) -> &[RecycleResult] {
        &self.cycles
    }

    pub fn stalls(&self) -> &[StallRecord] {
        &self.stalls
    }

    fn record(&mut self, id: InvariantId, v: Verdict, step: Option<usize>, cycle: Option<usize>) {
        if self.checks.contains(id) {
            self.report.record(id, v, step, cycle);
        }
    }

    fn state_checks(&mut self, step: usize, store: &StoreState, c: &Collector, live_may_grow: bool) {
        let cycle = c.current_cycle();
        if self.checks.contains(InvariantId::Partition) {
            self.record(InvariantId::Partition, partition(store), Some(step), cycle);
        }
        if self.checks.contains(InvariantId::Antitone) {
            let live = oracle::live(store);
            if let (Some(prev), false) = (&self.prev_live, live_may_grow) {
                let grown = live.difference(prev);
                let v = Verdict::check(grown.is_empty(), || {
                    Failure::new(InvariantId::Antitone, grown, "live set grew")
                });
                self.record(InvariantId::Antitone, v, Some(step), cycle);
            }
            self.prev_live = Some(live);
        }
        let wanted = [
            InvariantId::Disjointness,
            InvariantId::WsAxiom,
            InvariantId::DirtyAxiom,
            InvariantId::DirtyCardsAxiom,
            InvariantId::SnapshotAxiom,
        ];
        if wanted.iter().any(|&i| self.checks.contains(i)) {
            for (id, v) in variant_axioms(store, c) {
                self.record(id, v, Some(step), cycle);
            }
        }
    }

    /// Call once before the first action.
    pub fn begin(&mut self, store: &StoreState) {
        if self.checks.contains(InvariantId::Antitone) {
            self.prev_live = Some(oracle::live(store));
        }
    }

    pub fn after_mutator(&mut self, step: usize, store: &StoreState, c: &Collector) {
        self.state_checks(step, store, c, false);
    }

    /// `before` is `(black, gray)` just before the action.
    pub fn after_collector(
        &mut self,
        step: usize,
        action: &CollectorAction,
        before: (&NodeSet, &NodeSet),
        store: &StoreState,
        c: &Collector,
    ) {
        let sweep = matches!(action, CollectorAction::Sweep(_));
        if action.is_mark_step() && self.checks.contains(InvariantId::Termination) {
            let v = step_progress(before, (c.black(), c.gray()));
            self.record(InvariantId::Termination, v, Some(step), c.current_cycle());
        }
        self.state_checks(step, store, c, sweep);
        if let CollectorAction::Sweep(r) = action {
            for (id, v) in check_cycle(r) {
                self.record(id, v, Some(step), Some(r.cycle));
            }
            self.cycles.push((**r).clone());
        }
    }

    /// The sweep found live nodes in its recycle set.
    pub fn safety_failure(&mut self, step: usize, cycle: usize, unsafe_nodes: &NodeSet) {
        let f = Failure::new(InvariantId::Safety, unsafe_nodes.clone(), "sweep would recycle live nodes");
        self.report.record(InvariantId::Safety, Verdict::Fail(f), Some(step), Some(cycle));
    }

    /// The collector exceeded its step bound or could make no progress.
    pub fn termination_failure(&mut self, step: usize, cycle: Option<usize>, nodes: NodeSet, detail: String) {
        let f = Failure::new(InvariantId::Termination, nodes, detail);
        self.report.record(InvariantId::Termination, Verdict::Fail(f), Some(step), cycle);
    }

    pub fn stall(&mut self, mutator: usize, step: usize) {
        if !self.stalls.iter().any(|s| s.mutator == mutator && s.resumed_at.is_none()) {
            self.stalls.push(StallRecord {
                mutator,
                step,
                resumed_at: None,
            });
        }
    }

    pub fn resume(&mut self, mutator: usize, step: usize) {
        for s in self.stalls.iter_mut().filter(|s| s.mutator == mutator && s.resumed_at.is_none()) {
            s.resumed_at = Some(step);
        }
    }

    /// Closes the run and evaluates liveness over all cycles.
    pub fn finish(mut self, last_quiescent: bool) -> (VerificationReport, Vec<RecycleResult>) {
        let v = check_liveness(&self.cycles, &self.stalls, last_quiescent);
        self.record(InvariantId::Liveness, v, None, None);
        (self.report, self.cycles)
    }
}
