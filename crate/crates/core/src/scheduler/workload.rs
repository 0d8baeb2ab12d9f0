use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::IteratorRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::heap::{MutatorId, MutatorOp, Owner, StoreState};
use crate::set::NodeId;

use super::WorkloadParams;

/// Random legal-op generator for one mutator. Each op is sampled from the
/// moves legal in the store it is about to be applied to.
#[derive(Clone, Debug)]
pub struct Workload {
    params: WorkloadParams,
    mutator: MutatorId,
    rng: ChaCha8Rng,
    produced: usize,
}

impl Workload {
    pub fn new(params: WorkloadParams, mutator: MutatorId) -> Self {
        Workload {
            params,
            mutator,
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            produced: 0,
        }
    }

    pub fn remaining(&self) -> usize {
        self.params.ops - self.produced
    }

    /// Next op, or `None` when the budget is spent or nothing is legal.
    pub fn next_op(&mut self, store: &StoreState) -> Option<MutatorOp> {
        if self.produced >= self.params.ops {
            return None;
        }
        let op = sample(&mut self.rng, &self.params, self.mutator, store)?;
        self.produced += 1;
        Some(op)
    }

    /// Gives up the rest of the budget.
    pub fn exhaust(&mut self) {
        self.produced = self.params.ops;
    }
}

fn sample(rng: &mut ChaCha8Rng, p: &WorkloadParams, m: MutatorId, store: &StoreState) -> Option<MutatorOp> {
    let active = store.active();
    let with_slots: Vec<NodeId> = active.iter().filter(|&a| store.graph().out_degree(a) > 0).collect();
    let has_mutator = m >= 1 && m <= store.mutator_count();
    let visible = if has_mutator { store.visible_to(m) } else { Default::default() };
    let held = if has_mutator { store.local_roots(Owner::Mutator(m)) } else { Default::default() };

    // addArc, delArc, addNew, load, drop
    let weights = [
        if active.is_empty() { 0 } else { p.add_arc },
        if with_slots.is_empty() { 0 } else { p.del_arc },
        if active.is_empty() || store.supply().is_empty() { 0 } else { p.add_new },
        if visible.is_empty() { 0 } else { p.local },
        // keep one root so the stream does not end itself
        if held.len() < 2 { 0 } else { p.local },
    ];
    if weights.iter().all(|&w| w == 0) {
        return None;
    }
    let dist = WeightedIndex::new(weights).ok()?;
    let op = match dist.sample(rng) {
        0 => {
            let a = active.iter().choose(rng)?;
            let b = active.iter().choose(rng)?;
            MutatorOp::AddArc(a, b)
        }
        1 => {
            let a = *with_slots.get(rng.gen_range(0..with_slots.len()))?;
            let b = store.graph().successors(a).choose(rng)?;
            MutatorOp::DelArc(a, b)
        }
        2 => MutatorOp::AddNew(active.iter().choose(rng)?),
        3 => MutatorOp::LocalLoad(m, visible.iter().choose(rng)?),
        _ => MutatorOp::LocalDrop(m, held.iter().choose(rng)?),
    };
    debug_assert!(store.check_legal(&op).is_ok(), "generated illegal op");
    Some(op)
}

/// Generates a stream for mutator `m` by applying each op to a copy of `store`.
pub fn generate_workload(params: WorkloadParams, store: &StoreState, m: MutatorId) -> Vec<MutatorOp> {
    let mut s = store.clone();
    let mut w = Workload::new(params, m);
    let mut out = Vec::new();
    while let Some(op) = w.next_op(&s) {
        s.apply(&op).expect("generated op is legal");
        out.push(op);
    }
    out
}
