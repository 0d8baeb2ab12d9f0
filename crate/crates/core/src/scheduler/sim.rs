use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::collector::{Collector, CollectorAction, CollectorError, Phase, RecycleResult};
use crate::heap::{HeapError, MutatorId, MutatorOp, OpOutcome, StoreState};
use crate::verify::{CheckSet, Failure, InvariantId, Monitor, VerificationReport};

use super::scenario::{MutatorScript, Scenario, ScenarioError, Schedule, ScheduleItem};
use super::trace::{Actor, Trace, TraceEntry};
use super::workload::Workload;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub checks: CheckSet,
    /// Drop (and record) scripted ops whose preconditions fail instead of halting.
    pub skip_illegal: bool,
    /// Hard cap on actions in one run.
    pub max_steps: usize,
    /// Shrink the counterexample of a halted run.
    pub minimize: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            checks: CheckSet::all(),
            skip_illegal: false,
            max_steps: 2_000_000,
            minimize: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Halt {
    Violation(InvariantId),
    IllegalMutation { step: usize, error: HeapError },
    StepLimit,
}

/// A violating schedule and its replay.
#[derive(Clone, Debug)]
pub struct Counterexample {
    pub invariant: InvariantId,
    /// Actor order; each entry lets that actor take its next action.
    pub actors: Vec<Actor>,
    pub trace: Trace,
    pub failure: Option<Failure>,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub trace: Trace,
    pub cycles: Vec<RecycleResult>,
    pub report: VerificationReport,
    pub halt: Option<Halt>,
    pub counterexample: Option<Counterexample>,
    pub store: StoreState,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.halt.is_none() && self.report.passed()
    }
}

#[derive(Clone, Debug)]
enum Source {
    Ops(Vec<MutatorOp>),
    Gen(Workload),
}

#[derive(Clone, Debug)]
struct MutatorState {
    source: Source,
    pc: usize,
    pending: Option<MutatorOp>,
    stalled: bool,
}

impl MutatorState {
    fn has_next(&self) -> bool {
        self.pending.is_some()
            || match &self.source {
                Source::Ops(v) => self.pc < v.len(),
                Source::Gen(w) => w.remaining() > 0,
            }
    }

    fn peek(&mut self, store: &StoreState) -> Option<MutatorOp> {
        if self.pending.is_none() {
            self.pending = match &mut self.source {
                Source::Ops(v) => v.get(self.pc).copied(),
                Source::Gen(w) => {
                    let op = w.next_op(store);
                    if op.is_none() {
                        w.exhaust();
                    }
                    op
                }
            };
        }
        self.pending
    }

    fn consume(&mut self) {
        self.pending = None;
        self.pc += 1;
    }
}

/// One simulation instance: store, collector, mutator positions, monitor
/// and trace. Cloning it forks the run.
#[derive(Clone, Debug)]
pub struct Sim {
    store: StoreState,
    collector: Collector,
    mutators: Vec<MutatorState>,
    monitor: Monitor,
    trace: Trace,
    skip_illegal: bool,
    max_steps: usize,
    halt: Option<Halt>,
    collector_steps: usize,
    skipped: usize,
    last_mutator_action: Option<usize>,
    cycle_start: Option<usize>,
    last_completed_start: Option<usize>,
}

impl Sim {
    pub fn new(scenario: &Scenario, opts: &RunOptions) -> Result<Sim, ScenarioError> {
        let store = scenario.store()?;
        let collector = Collector::new(scenario.collector, store.memory_size());
        let mutators = scenario
            .mutators
            .iter()
            .enumerate()
            .map(|(i, s)| MutatorState {
                source: match s {
                    MutatorScript::Ops(ops) => Source::Ops(ops.clone()),
                    MutatorScript::Workload(p) => Source::Gen(Workload::new(*p, i + 1)),
                },
                pc: 0,
                pending: None,
                stalled: false,
            })
            .collect();
        let mut monitor = Monitor::new(opts.checks.clone());
        monitor.begin(&store);
        Ok(Sim {
            store,
            collector,
            mutators,
            monitor,
            trace: Trace::default(),
            skip_illegal: opts.skip_illegal,
            max_steps: opts.max_steps,
            halt: None,
            collector_steps: 0,
            skipped: 0,
            last_mutator_action: None,
            cycle_start: None,
            last_completed_start: None,
        })
    }

    pub fn store(&self) -> &StoreState {
        &self.store
    }

    pub fn collector(&self) -> &Collector {
        &self.collector
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn report(&self) -> &VerificationReport {
        self.monitor.report()
    }

    pub fn halt(&self) -> Option<&Halt> {
        self.halt.as_ref()
    }

    pub fn collector_steps(&self) -> usize {
        self.collector_steps
    }

    /// Scripted ops dropped because their preconditions failed.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn mutator_count(&self) -> usize {
        self.mutators.len()
    }

    pub fn has_pending_ops(&self, m: MutatorId) -> bool {
        self.mutators[m - 1].has_next()
    }

    pub fn any_pending_ops(&self) -> bool {
        self.mutators.iter().any(MutatorState::has_next)
    }

    /// Mutator `m` can act now: it has an op, is not paused, and is not
    /// waiting on an empty freelist.
    pub fn mutator_enabled(&self, m: MutatorId) -> bool {
        let st = &self.mutators[m - 1];
        self.halt.is_none()
            && st.has_next()
            && !self.collector.mutators_paused()
            && (!st.stalled || !self.store.supply().is_empty())
    }

    fn digest(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.store.graph().hash(&mut h);
        self.store.supply().hash(&mut h);
        self.store.pre_roots().hash(&mut h);
        self.collector.hash_state(&mut h);
        for m in &self.mutators {
            (m.pc, m.stalled, m.pending).hash(&mut h);
        }
        h.finish()
    }

    fn push_entry(&mut self, actor: Actor, action: String, version_before: u64) -> usize {
        let entry = TraceEntry {
            actor,
            action,
            version_before,
            version_after: self.store.version(),
            digest: self.digest(),
        };
        self.trace.entries.push(entry);
        let idx = self.trace.entries.len() - 1;
        if idx + 1 >= self.max_steps && self.halt.is_none() {
            self.halt = Some(Halt::StepLimit);
        }
        idx
    }

    fn check_halt(&mut self) {
        if self.halt.is_none() {
            if let Some(f) = self.monitor.report().failures().first() {
                self.halt = Some(Halt::Violation(f.invariant));
            }
        }
    }

    /// Lets `actor` take one action. Returns `false` if it could not act.
    pub fn step(&mut self, actor: Actor) -> bool {
        if self.halt.is_some() {
            return false;
        }
        match actor {
            Actor::Collector => {
                self.collector_step();
                true
            }
            Actor::Mutator(m) => self.mutator_step(m),
        }
    }

    fn collector_step(&mut self) {
        let v0 = self.store.version();
        let before = (self.collector.black().clone(), self.collector.gray().clone());
        let cycle = self.collector.current_cycle();
        match self.collector.step(&mut self.store) {
            Ok(action) => {
                self.collector_steps += 1;
                let text = action.display(self.store.names()).to_string();
                let idx = self.push_entry(Actor::Collector, text, v0);
                match &action {
                    CollectorAction::StartCycle { .. } => {
                        self.trace.cycle_boundaries.push(idx);
                        self.cycle_start = Some(idx);
                    }
                    CollectorAction::Sweep(_) => {
                        self.trace.cycle_boundaries.push(idx);
                        self.last_completed_start = self.cycle_start.take();
                    }
                    _ => {}
                }
                self.monitor
                    .after_collector(idx, &action, (&before.0, &before.1), &self.store, &self.collector);
                if let (Some(bound), Some(stats)) = (self.collector.dynamic_step_bound(), self.collector.stats()) {
                    if stats.steps > bound {
                        let detail = format!("{} steps exceed the bound {bound}", stats.steps);
                        self.monitor
                            .termination_failure(idx, cycle, Default::default(), detail);
                    }
                }
            }
            Err(CollectorError::SafetyViolation { cycle, unsafe_nodes, .. }) => {
                let text = format!("sweep aborted unsafe={}", self.store.names().format_set(&unsafe_nodes));
                let idx = self.push_entry(Actor::Collector, text, v0);
                self.monitor.safety_failure(idx, cycle, &unsafe_nodes);
            }
            Err(CollectorError::Stuck { node }) => {
                let text = format!("stuck {}", self.store.names().name(node));
                let idx = self.push_entry(Actor::Collector, text, v0);
                self.monitor.termination_failure(
                    idx,
                    cycle,
                    crate::set::NodeSet::singleton(node),
                    "no enabled collector action makes progress".into(),
                );
            }
            Err(CollectorError::CycleInProgress) => unreachable!("step never restarts a cycle"),
        }
        self.check_halt();
    }

    fn mutator_step(&mut self, m: MutatorId) -> bool {
        if !self.mutator_enabled(m) {
            return false;
        }
        let Some(op) = self.mutators[m - 1].peek(&self.store) else {
            return false;
        };
        let v0 = self.store.version();
        let names = self.store.names_arc();
        match self.store.apply(&op) {
            Ok(OpOutcome::Stalled) => {
                self.mutators[m - 1].stalled = true;
                let idx = self.push_entry(Actor::Mutator(m), format!("stall {}", op.display(&names)), v0);
                self.monitor.stall(m, idx);
            }
            Ok(outcome) => {
                let st = &mut self.mutators[m - 1];
                st.consume();
                let was_stalled = std::mem::replace(&mut st.stalled, false);
                self.collector.on_mutator_op(&op, outcome);
                let idx = self.push_entry(Actor::Mutator(m), op.display(&names).to_string(), v0);
                self.last_mutator_action = Some(idx);
                if was_stalled {
                    self.monitor.resume(m, idx);
                }
                self.monitor.after_mutator(idx, &self.store, &self.collector);
            }
            Err(error) => {
                if self.skip_illegal {
                    self.mutators[m - 1].consume();
                    self.skipped += 1;
                    self.push_entry(Actor::Mutator(m), format!("skip {}", op.display(&names)), v0);
                } else {
                    let idx = self.push_entry(Actor::Mutator(m), format!("illegal {}", op.display(&names)), v0);
                    self.halt = Some(Halt::IllegalMutation { step: idx, error });
                }
            }
        }
        self.check_halt();
        true
    }

    /// Runs the collector alone until it is idle.
    pub fn finish_cycle(&mut self) {
        while self.halt.is_none() && self.collector.phase() != Phase::Idle {
            self.step(Actor::Collector);
        }
    }

    /// Runs one complete cycle from idle (finishing any running one first).
    pub fn full_cycle(&mut self) {
        self.finish_cycle();
        if self.halt.is_none() {
            self.step(Actor::Collector);
            self.finish_cycle();
        }
    }

    /// Lets mutator `m` act, running the collector while `m` is paused.
    /// Returns `false` if `m` cannot act even then.
    fn mutator_with_waits(&mut self, m: MutatorId) -> bool {
        let mut idle_cycles = 0;
        loop {
            if self.halt.is_some() || !self.mutators[m - 1].has_next() {
                return false;
            }
            if self.mutator_enabled(m) {
                return self.step(Actor::Mutator(m));
            }
            if self.collector.mutators_paused() {
                self.step(Actor::Collector);
                continue;
            }
            // stalled on an empty freelist: try once, then give the collector a cycle
            if self.mutators[m - 1].stalled {
                if idle_cycles >= 2 {
                    return false;
                }
                let before = self.collector.completed_cycles();
                self.full_cycle();
                if self.collector.completed_cycles() > before && self.store.supply().is_empty() {
                    idle_cycles += 1;
                }
                continue;
            }
            return false;
        }
    }

    /// Runs every remaining mutator op, mutator by mutator.
    pub fn drain_mutators(&mut self) {
        for m in 1..=self.mutators.len() {
            while self.halt.is_none() && self.mutators[m - 1].has_next() {
                if !self.mutator_with_waits(m) {
                    break;
                }
            }
        }
    }

    fn run_item(&mut self, item: ScheduleItem) {
        match item {
            ScheduleItem::Collector(k) => {
                for _ in 0..k {
                    self.step(Actor::Collector);
                }
            }
            ScheduleItem::CollectorUntilBlack(x) => {
                let start = self.collector.completed_cycles();
                while self.halt.is_none()
                    && !self.collector.black().contains(x)
                    && !(self.collector.completed_cycles() > start && self.collector.phase() == Phase::Idle)
                {
                    self.step(Actor::Collector);
                }
            }
            ScheduleItem::CollectorUntilIdle => {
                self.step(Actor::Collector);
                self.finish_cycle();
            }
            ScheduleItem::Mutator(m, k) => {
                for _ in 0..k {
                    if self.mutators[m - 1].has_next() {
                        if self.mutators[m - 1].stalled && self.store.supply().is_empty() {
                            // retrying a stalled allocation records another stall
                            let op = self.mutators[m - 1].peek(&self.store).expect("pending op");
                            let v0 = self.store.version();
                            let text = format!("stall {}", op.display(self.store.names()));
                            let idx = self.push_entry(Actor::Mutator(m), text, v0);
                            self.monitor.stall(m, idx);
                        } else {
                            self.mutator_with_waits(m);
                        }
                    }
                }
            }
        }
    }

    fn run_random(&mut self, seed: u64, mw: u32, cw: u32) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p_collector = cw as f64 / (mw + cw) as f64;
        let mut dead_cycles = 0;
        while self.halt.is_none() && self.any_pending_ops() {
            let enabled: Vec<MutatorId> = (1..=self.mutators.len()).filter(|&m| self.mutator_enabled(m)).collect();
            if enabled.is_empty() || rng.gen_bool(p_collector) {
                let before = self.collector.completed_cycles();
                self.step(Actor::Collector);
                if enabled.is_empty() && self.collector.completed_cycles() > before {
                    // everybody waits on the freelist and the sweep freed nothing
                    if self.store.supply().is_empty() {
                        dead_cycles += 1;
                        if dead_cycles >= 2 {
                            break;
                        }
                    }
                }
                continue;
            }
            let m = enabled[rng.gen_range(0..enabled.len())];
            self.step(Actor::Mutator(m));
        }
    }

    /// Whether the run still needs a cycle with no mutator activity.
    fn needs_quiescent_cycle(&self) -> bool {
        match (self.last_completed_start, self.last_mutator_action) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(start), Some(last)) => last > start,
        }
    }

    fn close(self, scenario: &Scenario, opts: &RunOptions) -> RunOutcome {
        let halted = self.halt.is_some();
        let counterexample = match &self.halt {
            Some(Halt::Violation(id)) if opts.minimize => Some(minimize(scenario, &self.trace.actors(), *id, opts)),
            Some(Halt::Violation(id)) => Some(Counterexample {
                invariant: *id,
                actors: self.trace.actors(),
                trace: self.trace.clone(),
                failure: self.report().summary(*id).and_then(|s| s.first_failure.clone()),
            }),
            _ => None,
        };
        let (report, cycles) = self.monitor.finish(!halted);
        RunOutcome {
            trace: self.trace,
            cycles,
            report,
            halt: self.halt,
            counterexample,
            store: self.store,
        }
    }

    /// Replays an actor order exactly; actors that cannot act are skipped.
    pub fn replay(scenario: &Scenario, actors: &[Actor], opts: &RunOptions) -> Result<Sim, ScenarioError> {
        let mut sim = Sim::new(scenario, opts)?;
        for &a in actors {
            sim.step(a);
        }
        Ok(sim)
    }
}

/// Executes a scenario under its own schedule until the scripts are
/// exhausted and a final quiescent cycle has completed.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutcome, ScenarioError> {
    let mut sim = Sim::new(scenario, opts)?;
    match &scenario.schedule {
        Schedule::Scripted(items) => {
            for &item in items {
                if sim.halt.is_some() {
                    break;
                }
                sim.run_item(item);
            }
        }
        Schedule::Random { seed, mutator, collector } => sim.run_random(*seed, *mutator, *collector),
        Schedule::Exhaustive(_) => {}
    }
    sim.drain_mutators();
    sim.finish_cycle();
    if sim.halt.is_none() && sim.needs_quiescent_cycle() {
        sim.full_cycle();
    }
    Ok(sim.close(scenario, opts))
}

fn replay_violates(scenario: &Scenario, actors: &[Actor], id: InvariantId, opts: &RunOptions) -> Option<Sim> {
    let mut sim = Sim::replay(scenario, actors, opts).ok()?;
    sim.finish_cycle();
    sim.report().failed(id).then_some(sim)
}

/// Greedily drops actions whose removal keeps `id` violated; the residue is
/// replayed with the collector finishing its cycle alone.
pub fn minimize(scenario: &Scenario, actors: &[Actor], id: InvariantId, opts: &RunOptions) -> Counterexample {
    let mut cur: Vec<Actor> = actors.to_vec();
    let mut i = cur.len();
    while i > 0 {
        i -= 1;
        let mut cand = cur.clone();
        cand.remove(i);
        if replay_violates(scenario, &cand, id, opts).is_some() {
            cur = cand;
        }
    }
    let sim = match replay_violates(scenario, &cur, id, opts) {
        Some(s) => s,
        None => {
            // the full order itself must reproduce; fall back to it
            let mut s = Sim::replay(scenario, actors, opts).expect("scenario was valid");
            s.finish_cycle();
            cur = actors.to_vec();
            s
        }
    };
    Counterexample {
        invariant: id,
        actors: cur,
        failure: sim.report().summary(id).and_then(|s| s.first_failure.clone()),
        trace: sim.trace,
    }
}
