use thiserror::Error;

use crate::scheduler::{minimize, Actor, RunOptions, Scenario, ScenarioError, Sim, Trace};

use super::{CheckSet, InvariantId, Verdict};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ReplayError {
    /// The replayed state differs from the recorded one: the trace does not
    /// belong to this scenario or the harness is not deterministic.
    #[error("digest mismatch at step {step}: recorded {recorded:#x}, replayed {replayed:#x}")]
    DigestMismatch { step: usize, recorded: u64, replayed: u64 },
    #[error("replay stopped after {replayed} of {recorded} steps")]
    Truncated { replayed: usize, recorded: usize },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Clone, Debug)]
pub struct ReplayVerdict {
    pub verdict: Verdict,
    /// Post-action states at which the invariant was evaluated.
    pub checked: u64,
    /// Shortest actor order found that still reproduces the failure.
    pub slice: Option<Vec<Actor>>,
}

/// Replays `trace` against `scenario`, evaluating `id` after every action
/// and comparing state digests with the recorded ones.
pub fn check_step_axiom(scenario: &Scenario, trace: &Trace, id: InvariantId) -> Result<ReplayVerdict, ReplayError> {
    let opts = RunOptions {
        checks: CheckSet::only([id]),
        skip_illegal: trace.entries.iter().any(|e| e.action.starts_with("skip ")),
        max_steps: usize::MAX,
        minimize: false,
    };
    let mut sim = Sim::new(scenario, &opts)?;
    for (i, e) in trace.entries.iter().enumerate() {
        if sim.halt().is_some() {
            break;
        }
        if !sim.step(e.actor) {
            return Err(ReplayError::Truncated { replayed: i, recorded: trace.len() });
        }
        let got = sim.trace().entries[i].digest;
        if got != e.digest {
            return Err(ReplayError::DigestMismatch { step: i, recorded: e.digest, replayed: got });
        }
    }
    let checked = sim.report().summary(id).map_or(0, |s| s.checks);
    let failure = sim.report().summary(id).and_then(|s| s.first_failure.clone());
    Ok(match failure {
        None => ReplayVerdict { verdict: Verdict::Pass, checked, slice: None },
        Some(f) => {
            let upto = f.step.map_or(trace.len(), |s| s + 1).min(trace.len());
            let cx = minimize(scenario, &trace.actors()[..upto], id, &RunOptions { minimize: true, ..opts });
            ReplayVerdict { verdict: Verdict::Fail(f), checked, slice: Some(cx.actors) }
        }
    })
}

/// Live never grows across mutator actions (sweeps excluded).
pub fn check_antitone(scenario: &Scenario, trace: &Trace) -> Result<ReplayVerdict, ReplayError> {
    check_step_axiom(scenario, trace, InvariantId::Antitone)
}
