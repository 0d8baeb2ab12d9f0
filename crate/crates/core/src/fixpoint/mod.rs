//! Fixpoint engine over the powerset lattice of a finite node universe.
//!
//! Functions are monotone maps `NodeSet -> NodeSet`. Closures, the Kleene
//! chain and micro-step approximation sequences are computed by plain
//! iteration with set-equality convergence tests.

mod lemmas;
mod microstep;
mod programs;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::heap::HeapGraph;
use crate::set::{NodeId, NodeSet};

pub use lemmas::{check_closure_lemmas, LemmaId, LemmaReport, LemmaVerdict};
pub use microstep::{micro_step_run, ApproxSequence, LowestFirst, MacroStep, StepPolicy, StepRule};
pub use programs::{
    dead_g, optimized_workset_dead_iteration, raw_dead_iteration, workset_candidates,
    workset_dead_iteration, workset_dead_iteration_with, WorksetLogEntry,
};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FixpointError {
    #[error("policy fault at step {step}: {reason}")]
    PolicyFault { step: usize, reason: String },
    #[error("function is not inflationary on the iterate at step {step}")]
    NotInflationary { step: usize },
    #[error("chooser picked {0}, which is not a workset member")]
    InvalidChoice(NodeId),
}

/// A monotone function on subsets of a fixed universe.
pub trait SetFn {
    fn apply(&self, x: &NodeSet) -> NodeSet;
    fn universe(&self) -> &NodeSet;
}

impl<T: SetFn + ?Sized> SetFn for &T {
    fn apply(&self, x: &NodeSet) -> NodeSet {
        (**self).apply(x)
    }
    fn universe(&self) -> &NodeSet {
        (**self).universe()
    }
}

impl<T: SetFn + ?Sized> SetFn for Arc<T> {
    fn apply(&self, x: &NodeSet) -> NodeSet {
        (**self).apply(x)
    }
    fn universe(&self) -> &NodeSet {
        (**self).universe()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Mode {
    /// `S ∪ sucs(S)`
    Extension,
    /// `sucs(S)`
    Image,
    /// `roots ∪ sucs(S)`
    Rooted(NodeSet),
}

/// Successor-based functions over a frozen copy of a graph's arcs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphFn {
    succ: Vec<Vec<NodeId>>,
    universe: NodeSet,
    mode: Mode,
}

impl GraphFn {
    fn from_graph(g: &HeapGraph, mode: Mode) -> Self {
        let succ = (0..g.memory_size())
            .map(|a| g.successors(NodeId::from(a)).collect())
            .collect();
        GraphFn {
            succ,
            universe: g.nodes(),
            mode,
        }
    }

    /// `f(G)(S) = S ∪ {b | a ∈ S, b ∈ G.sucs(a)}`; inflationary everywhere.
    pub fn extension(g: &HeapGraph) -> Self {
        GraphFn::from_graph(g, Mode::Extension)
    }

    /// Plain successor image, not inflationary.
    pub fn image(g: &HeapGraph) -> Self {
        GraphFn::from_graph(g, Mode::Image)
    }

    /// `roots ∪ sucs(S)`; its least fixpoint is the reachable set.
    pub fn rooted(g: &HeapGraph, roots: &NodeSet) -> Self {
        GraphFn::from_graph(g, Mode::Rooted(roots.clone()))
    }

    pub fn sucs(&self, x: &NodeSet) -> NodeSet {
        let mut out = NodeSet::new();
        for a in x {
            if let Some(row) = self.succ.get(a.index()) {
                out.extend(row.iter().copied());
            }
        }
        out
    }
}

impl SetFn for GraphFn {
    fn apply(&self, x: &NodeSet) -> NodeSet {
        let mut out = self.sucs(x);
        match &self.mode {
            Mode::Extension => out.union_with(x),
            Mode::Image => {}
            Mode::Rooted(r) => out.union_with(r),
        }
        out
    }

    fn universe(&self) -> &NodeSet {
        &self.universe
    }
}

/// Wraps an arbitrary closure. Monotonicity is the caller's obligation.
pub struct FnOf<F> {
    f: F,
    universe: NodeSet,
}

impl<F: Fn(&NodeSet) -> NodeSet> FnOf<F> {
    pub fn new(universe: NodeSet, f: F) -> Self {
        FnOf { f, universe }
    }
}

impl<F: Fn(&NodeSet) -> NodeSet> SetFn for FnOf<F> {
    fn apply(&self, x: &NodeSet) -> NodeSet {
        (self.f)(x)
    }
    fn universe(&self) -> &NodeSet {
        &self.universe
    }
}

impl<F> fmt::Debug for FnOf<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnOf").field("universe", &self.universe).finish()
    }
}

pub type SharedFn = Arc<dyn SetFn + Send + Sync>;

/// `f_0, f_1, ...`; indices past the end reuse the last function.
#[derive(Clone)]
pub struct FnSequence {
    fns: Vec<SharedFn>,
}

impl FnSequence {
    pub fn new(first: SharedFn) -> Self {
        FnSequence { fns: vec![first] }
    }

    pub fn constant(f: impl SetFn + Send + Sync + 'static) -> Self {
        FnSequence::new(Arc::new(f))
    }

    pub fn push(&mut self, f: SharedFn) {
        self.fns.push(f);
    }

    /// `Φ(f_i)` for each graph version.
    ///
    /// # Panics
    /// If `graphs` is empty.
    pub fn from_graphs<'a>(graphs: impl IntoIterator<Item = &'a HeapGraph>) -> Self {
        FnSequence::build(graphs, GraphFn::extension)
    }

    /// Plain successor images, for the non-reflexive step rule.
    pub fn images_from_graphs<'a>(graphs: impl IntoIterator<Item = &'a HeapGraph>) -> Self {
        FnSequence::build(graphs, GraphFn::image)
    }

    fn build<'a>(
        graphs: impl IntoIterator<Item = &'a HeapGraph>,
        make: fn(&HeapGraph) -> GraphFn,
    ) -> Self {
        let fns: Vec<SharedFn> = graphs
            .into_iter()
            .map(|g| Arc::new(make(g)) as SharedFn)
            .collect();
        assert!(!fns.is_empty(), "function sequence needs at least one element");
        FnSequence { fns }
    }

    pub fn at(&self, i: usize) -> &SharedFn {
        &self.fns[i.min(self.fns.len() - 1)]
    }

    pub fn len(&self) -> usize {
        self.fns.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Debug for FnSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FnSequence(len={})", self.fns.len())
    }
}

/// Least `s ⊇ x` closed under `f` (`f(s) ⊆ s`). For inflationary `f` this
/// is the least fixpoint of `f` above `x`.
pub fn closure(f: &impl SetFn, x: &NodeSet) -> NodeSet {
    debug_assert!(x.is_subset(f.universe()), "seed outside universe");
    let mut s = x.clone();
    loop {
        let next = s.union(&f.apply(&s));
        if next == s {
            return s;
        }
        s = next;
    }
}

/// Least `s ⊇ f(x)` closed under `f`. Unlike [`closure`], `x` itself is
/// only included if something reaches it.
pub fn transitive_closure(f: &impl SetFn, x: &NodeSet) -> NodeSet {
    closure(f, &f.apply(x))
}

/// `⊥, f(⊥), f²(⊥), ...` up to the first repeat.
pub fn kleene_iterates(f: &impl SetFn) -> Vec<NodeSet> {
    let mut chain = vec![NodeSet::new()];
    loop {
        let last = chain.last().expect("nonempty");
        let next = f.apply(last);
        if &next == last {
            return chain;
        }
        assert!(last.is_subset(&next), "Kleene chain not ascending; f is not monotone");
        chain.push(next);
    }
}

/// Least upper bound of the Kleene chain.
pub fn kleene_chain(f: &impl SetFn) -> NodeSet {
    kleene_iterates(f).pop().expect("nonempty")
}

/// Checks `x ⊆ y ⇒ f(x) ⊆ f(y)` on the given pair.
pub fn monotone_on(f: &impl SetFn, x: &NodeSet, y: &NodeSet) -> bool {
    !x.is_subset(y) || f.apply(x).is_subset(&f.apply(y))
}

#[cfg(test)]
mod tests;
