use serde::Serialize;

use crate::collector::RecycleResult;
use crate::heap::MutatorId;
use crate::set::NodeSet;

use super::{Failure, InvariantId, Verdict};

/// A mutator's allocation that found the freelist empty.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StallRecord {
    pub mutator: MutatorId,
    pub step: usize,
    pub resumed_at: Option<usize>,
}

/// Cycle-level checks: the sandwich `live_end ⊆ black ⊆ live_start`,
/// safety, the recycling progress obligation, and the step bound.
pub fn check_cycle(r: &RecycleResult) -> Vec<(InvariantId, Verdict)> {
    let c = Some(r.cycle);
    let sandwich = {
        let mut bad = r.live_end.difference(&r.black_final);
        bad.union_with(&r.black_final.difference(&r.live_start));
        Verdict::check(bad.is_empty(), || {
            Failure::new(InvariantId::AimSandwich, bad, "live_end ⊆ black ⊆ live_start fails").at(None, c)
        })
    };
    let unsafe_nodes = r.recycled.intersection(&r.live_end);
    let safety = Verdict::check(unsafe_nodes.is_empty(), || {
        Failure::new(InvariantId::Safety, unsafe_nodes, "recycled a live node").at(None, c)
    });
    // nodes dead at cycle start must yield a nonempty recycle set
    let progress = Verdict::check(r.dead_start.is_empty() || !r.recycled.is_empty(), || {
        Failure::new(
            InvariantId::Liveness,
            r.dead_start.clone(),
            "dead nodes at cycle start but nothing recycled",
        )
        .at(None, c)
    });
    let termination = Verdict::check(r.stats.steps <= r.step_bound, || {
        Failure::new(
            InvariantId::Termination,
            NodeSet::new(),
            format!("{} steps exceed the bound {}", r.stats.steps, r.step_bound),
        )
        .at(None, c)
    });
    vec![
        (InvariantId::AimSandwich, sandwich),
        (InvariantId::Safety, safety),
        (InvariantId::Liveness, progress),
        (InvariantId::Termination, termination),
    ]
}

/// Floating garbage of each cycle is recycled by the next; every stall is
/// eventually resumed; after a quiescent last cycle nothing floats.
pub fn check_liveness(cycles: &[RecycleResult], stalls: &[StallRecord], last_quiescent: bool) -> Verdict {
    for w in cycles.windows(2) {
        let left = w[0].floating.difference(&w[1].recycled);
        if !left.is_empty() {
            return Verdict::Fail(
                Failure::new(
                    InvariantId::Liveness,
                    left,
                    format!("floating garbage of cycle {} not recycled by the next", w[0].cycle),
                )
                .at(None, Some(w[1].cycle)),
            );
        }
    }
    if let Some(s) = stalls.iter().find(|s| s.resumed_at.is_none()) {
        return Verdict::Fail(
            Failure::new(
                InvariantId::Liveness,
                NodeSet::new(),
                format!("mutator {} stalled on an empty freelist and never resumed", s.mutator),
            )
            .at(Some(s.step), None),
        );
    }
    if last_quiescent {
        if let Some(last) = cycles.last() {
            if !last.floating.is_empty() {
                return Verdict::Fail(
                    Failure::new(
                        InvariantId::Liveness,
                        last.floating.clone(),
                        "quiescent cycle left floating garbage",
                    )
                    .at(None, Some(last.cycle)),
                );
            }
        }
    }
    Verdict::Pass
}
