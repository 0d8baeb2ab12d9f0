use std::collections::BTreeMap;

use crate::verify::{CheckSet, InvariantId, VerificationReport};

use super::scenario::{ExploreBounds, Scenario, ScenarioError};
use super::sim::{minimize, Counterexample, Halt, RunOptions, Sim};
use super::trace::Actor;

#[derive(Clone, Debug, Default)]
pub struct ExplorationReport {
    /// Search-tree nodes visited.
    pub states: usize,
    /// Complete interleavings (leaves), violating ones included.
    pub interleavings: usize,
    pub violating: usize,
    /// Paths cut by `max_depth`.
    pub truncated: usize,
    /// Scripted ops skipped on some path because they had become illegal.
    pub skipped_ops: usize,
    /// A bound was hit, so the search does not cover every interleaving.
    pub incomplete: bool,
    /// Minimized counterexample per violated invariant.
    pub counterexamples: BTreeMap<InvariantId, Counterexample>,
    /// Merged over all leaves.
    pub report: VerificationReport,
}

impl ExplorationReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

fn choices(sim: &Sim, bounds: &ExploreBounds) -> Vec<Actor> {
    if sim.halt().is_some() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let c = sim.collector();
    if sim.collector_steps() < bounds.max_collector_steps
        && (c.in_cycle() || c.completed_cycles() < bounds.max_cycles)
    {
        out.push(Actor::Collector);
    }
    out.extend((1..=sim.mutator_count()).filter(|&m| sim.mutator_enabled(m)).map(Actor::Mutator));
    out
}

/// Depth-first enumeration of every interleaving of collector steps and
/// scripted mutator ops. Ops that became illegal on a path are skipped.
pub fn explore_interleavings(
    scenario: &Scenario,
    bounds: &ExploreBounds,
    checks: &CheckSet,
) -> Result<ExplorationReport, ScenarioError> {
    let opts = RunOptions {
        checks: checks.clone(),
        skip_illegal: true,
        max_steps: usize::MAX,
        minimize: false,
    };
    let mut rep = ExplorationReport::default();
    let mut shortest: BTreeMap<InvariantId, Vec<Actor>> = BTreeMap::new();
    let mut stack = vec![Sim::new(scenario, &opts)?];

    while let Some(sim) = stack.pop() {
        if rep.states >= bounds.max_states {
            rep.incomplete = true;
            break;
        }
        rep.states += 1;
        let next = choices(&sim, bounds);
        if next.is_empty() {
            rep.interleavings += 1;
            rep.skipped_ops += sim.skipped();
            rep.report.merge(sim.report());
            if let Some(Halt::Violation(_)) = sim.halt() {
                rep.violating += 1;
                let actors = sim.trace().actors();
                for f in sim.report().failures() {
                    let e = shortest.entry(f.invariant).or_insert_with(|| actors.clone());
                    if actors.len() < e.len() {
                        *e = actors.clone();
                    }
                }
            }
            continue;
        }
        if sim.trace().len() >= bounds.max_depth {
            rep.truncated += 1;
            rep.incomplete = true;
            continue;
        }
        for &a in next.iter().rev() {
            let mut child = sim.clone();
            child.step(a);
            stack.push(child);
        }
    }

    let min_opts = RunOptions { minimize: true, ..opts };
    for (id, actors) in shortest {
        rep.counterexamples.insert(id, minimize(scenario, &actors, id, &min_opts));
    }
    Ok(rep)
}
