use serde::Serialize;

use crate::set::NodeSet;

use super::{FixpointError, FnSequence, SetFn};

/// Which computation-step rule governs the sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StepRule {
    /// `s_i ⊂ s_{i+1} ⊆ f_i(s_i)`, stopping at `s_i = f_i(s_i)`. Every `f_i`
    /// must be inflationary on the iterates.
    Inflationary,
    /// `s_i ⊂ s_{i+1} ⊆ s_i ∪ f_i(s_i)`, stopping at `f_i(s_i) ⊆ s_i`. For
    /// non-inflationary `f_i`, such as successor images seeded by pre-roots.
    NonReflexive,
}

/// Proposes the next approximation given the current one and the step's
/// upper bound.
pub trait StepPolicy {
    fn propose(&mut self, current: &NodeSet, bound: &NodeSet) -> NodeSet;
}

impl<F: FnMut(&NodeSet, &NodeSet) -> NodeSet> StepPolicy for F {
    fn propose(&mut self, current: &NodeSet, bound: &NodeSet) -> NodeSet {
        self(current, bound)
    }
}

/// Jumps straight to the bound: Kleene macro-steps.
#[derive(Clone, Copy, Debug, Default)]
pub struct MacroStep;

impl StepPolicy for MacroStep {
    fn propose(&mut self, _current: &NodeSet, bound: &NodeSet) -> NodeSet {
        bound.clone()
    }
}

/// Adds the single lowest new element.
#[derive(Clone, Copy, Debug, Default)]
pub struct LowestFirst;

impl StepPolicy for LowestFirst {
    fn propose(&mut self, current: &NodeSet, bound: &NodeSet) -> NodeSet {
        let mut next = current.clone();
        if let Some(z) = bound.difference(current).first() {
            next.insert(z);
        }
        next
    }
}

/// `s_0, ..., s_n` with the index of the function applied at each step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ApproxSequence {
    pub steps: Vec<NodeSet>,
    pub fn_index: Vec<usize>,
}

impl ApproxSequence {
    pub fn last(&self) -> &NodeSet {
        self.steps.last().expect("sequence starts at r")
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Runs the micro-step iteration from `s_0 = r`, applying `fs.at(i)` at
/// step `i` and asking `policy` for each successor approximation.
///
/// Terminates because every accepted proposal strictly grows the
/// approximation inside a finite universe.
pub fn micro_step_run(
    fs: &FnSequence,
    r: &NodeSet,
    policy: &mut impl StepPolicy,
    rule: StepRule,
) -> Result<ApproxSequence, FixpointError> {
    let mut seq = ApproxSequence {
        steps: vec![r.clone()],
        fn_index: vec![0],
    };
    let mut i = 0usize;
    loop {
        let f = fs.at(i);
        let s = seq.steps.last().expect("nonempty");
        let image = f.apply(s);
        let bound = match rule {
            StepRule::Inflationary => {
                if !s.is_subset(&image) {
                    return Err(FixpointError::NotInflationary { step: i });
                }
                if &image == s {
                    return Ok(seq);
                }
                image
            }
            StepRule::NonReflexive => {
                if image.is_subset(s) {
                    return Ok(seq);
                }
                s.union(&image)
            }
        };
        let next = policy.propose(s, &bound);
        if !s.is_strict_subset(&next) {
            return Err(FixpointError::PolicyFault {
                step: i,
                reason: format!("proposal {next:?} does not strictly extend {s:?}"),
            });
        }
        if !next.is_subset(&bound) {
            return Err(FixpointError::PolicyFault {
                step: i,
                reason: format!("proposal {next:?} exceeds bound {bound:?}"),
            });
        }
        i += 1;
        seq.steps.push(next);
        seq.fn_index.push(i);
    }
}
