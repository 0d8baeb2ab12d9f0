//! Executable checks of the closure properties used by the correctness
//! argument: closure laws, antitone closures over a function sequence,
//! decreasing closures along an approximation sequence, and invariance of
//! the closure along a static micro-step run.

use std::fmt;

use serde::Serialize;

use crate::set::NodeSet;

use super::{closure, micro_step_run, ApproxSequence, FnSequence, LowestFirst, SetFn, StepRule};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaId {
    /// inflationary, idempotent, fixpoint, `f̂(f(x)) = f̂(x)` when `x ⊆ f(x)`
    ClosureProperties,
    /// `r ⊆ x ⇒ f̂_0(x) ⊇ f̂_1(x) ⊇ ...`
    AntitoneClosures,
    /// `f̂_{i+1}(s_{i+1}) ⊆ f̂_i(s_i)`
    DecreasingClosures,
    /// `f̂(s_i) = f̂(r)` on a static function
    ClosureInvariance,
}

impl LemmaId {
    pub const ALL: [LemmaId; 4] = [
        LemmaId::ClosureProperties,
        LemmaId::AntitoneClosures,
        LemmaId::DecreasingClosures,
        LemmaId::ClosureInvariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::ClosureProperties => "closure-properties",
            LemmaId::AntitoneClosures => "antitone-closures",
            LemmaId::DecreasingClosures => "decreasing-closures",
            LemmaId::ClosureInvariance => "closure-invariance",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LemmaVerdict {
    pub id: LemmaId,
    /// Number of individual equalities/inclusions evaluated.
    pub checked: usize,
    /// First failing instance, if any.
    pub witness: Option<String>,
}

impl LemmaVerdict {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Accumulates per-lemma verdicts across many checks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LemmaReport {
    pub verdicts: Vec<LemmaVerdict>,
}

impl LemmaReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(LemmaVerdict::passed)
    }

    pub fn verdict(&self, id: LemmaId) -> Option<&LemmaVerdict> {
        self.verdicts.iter().find(|v| v.id == id)
    }

    pub fn merge(&mut self, other: &LemmaReport) {
        for v in &other.verdicts {
            let slot = self.slot(v.id);
            slot.checked += v.checked;
            if slot.witness.is_none() {
                slot.witness.clone_from(&v.witness);
            }
        }
    }

    fn slot(&mut self, id: LemmaId) -> &mut LemmaVerdict {
        if let Some(i) = self.verdicts.iter().position(|v| v.id == id) {
            return &mut self.verdicts[i];
        }
        self.verdicts.push(LemmaVerdict {
            id,
            checked: 0,
            witness: None,
        });
        self.verdicts.last_mut().expect("just pushed")
    }

    fn record(&mut self, id: LemmaId, ok: bool, witness: impl FnOnce() -> String) {
        let slot = self.slot(id);
        slot.checked += 1;
        if !ok && slot.witness.is_none() {
            slot.witness = Some(witness());
        }
    }

    /// The four closure laws at each sample.
    pub fn closure_properties(&mut self, f: &impl SetFn, samples: &[NodeSet]) {
        let id = LemmaId::ClosureProperties;
        for x in samples {
            let c = closure(f, x);
            self.record(id, x.is_subset(&c), || format!("not inflationary at {x:?}"));
            let cc = closure(f, &c);
            self.record(id, cc == c, || format!("not idempotent at {x:?}: {c:?} vs {cc:?}"));
            let fc = f.apply(&c);
            let fx = f.apply(x);
            if x.is_subset(&fx) {
                self.record(id, fc == c, || format!("f(f̂({x:?})) = {fc:?} ≠ {c:?}"));
                let cf = closure(f, &fx);
                self.record(id, cf == c, || format!("f̂(f({x:?})) = {cf:?} ≠ {c:?}"));
            } else {
                self.record(id, fc.is_subset(&c), || format!("f̂({x:?}) not closed"));
            }
        }
    }

    /// For each `x ⊇ r` among the samples, closures shrink along `fs`.
    /// Samples not containing `r` are skipped.
    pub fn antitone(&mut self, fs: &FnSequence, r: &NodeSet, samples: &[NodeSet]) {
        let id = LemmaId::AntitoneClosures;
        for x in samples.iter().filter(|x| r.is_subset(x)) {
            let mut prev = closure(fs.at(0), x);
            for i in 1..fs.len() {
                let next = closure(fs.at(i), x);
                self.record(id, next.is_subset(&prev), || {
                    format!("closure of {x:?} grew from version {} to {i}", i - 1)
                });
                prev = next;
            }
        }
        self.slot(id);
    }

    /// Closures decrease along an approximation sequence.
    pub fn decreasing(&mut self, fs: &FnSequence, seq: &ApproxSequence) {
        let id = LemmaId::DecreasingClosures;
        let closures: Vec<NodeSet> = seq
            .steps
            .iter()
            .zip(&seq.fn_index)
            .map(|(s, &i)| closure(fs.at(i), s))
            .collect();
        for (k, w) in closures.windows(2).enumerate() {
            self.record(id, w[1].is_subset(&w[0]), || {
                format!("closure grew between steps {k} and {}", k + 1)
            });
        }
        self.slot(id);
    }

    /// Every iterate of a static run has the closure of its start.
    pub fn invariance(&mut self, f: &impl SetFn, seq: &ApproxSequence) {
        let id = LemmaId::ClosureInvariance;
        let target = closure(f, &seq.steps[0]);
        for (k, s) in seq.steps.iter().enumerate() {
            let c = closure(f, s);
            self.record(id, c == target, || format!("step {k}: {c:?} ≠ {target:?}"));
        }
    }
}

/// Closure laws at every sample, plus closure invariance along a
/// lowest-first micro-step run started at each sample on which `f` is
/// inflationary.
pub fn check_closure_lemmas<F>(f: &F, samples: &[NodeSet]) -> LemmaReport
where
    F: SetFn + Clone + Send + Sync + 'static,
{
    let mut report = LemmaReport::new();
    report.closure_properties(f, samples);
    let fs = FnSequence::constant(f.clone());
    for r in samples {
        if !r.is_subset(&f.apply(r)) {
            continue;
        }
        if let Ok(seq) = micro_step_run(&fs, r, &mut LowestFirst, StepRule::Inflationary) {
            report.invariance(f, &seq);
        }
    }
    report.slot(LemmaId::ClosureInvariance);
    report
}
