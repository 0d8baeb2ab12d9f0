use std::fmt;

use serde::{Deserialize, Serialize};

use crate::set::NodeId;

use super::NodeNames;

/// Mutator index `m >= 1`; 0 is reserved for the globals.
pub type MutatorId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MutatorOp {
    AddArc(NodeId, NodeId),
    DelArc(NodeId, NodeId),
    AddNew(NodeId),
    LocalLoad(MutatorId, NodeId),
    LocalDrop(MutatorId, NodeId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpKind {
    AddArc,
    DelArc,
    AddNew,
    LocalLoad,
    LocalDrop,
}

impl OpKind {
    pub fn keyword(self) -> &'static str {
        match self {
            OpKind::AddArc => "addArc",
            OpKind::DelArc => "delArc",
            OpKind::AddNew => "addNew",
            OpKind::LocalLoad => "load",
            OpKind::LocalDrop => "drop",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Result of a successfully applied op.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpOutcome {
    Done,
    Allocated(NodeId),
    /// Freelist empty; nothing changed and the mutator must wait for a sweep.
    Stalled,
}

impl MutatorOp {
    pub fn kind(&self) -> OpKind {
        match self {
            MutatorOp::AddArc(..) => OpKind::AddArc,
            MutatorOp::DelArc(..) => OpKind::DelArc,
            MutatorOp::AddNew(_) => OpKind::AddNew,
            MutatorOp::LocalLoad(..) => OpKind::LocalLoad,
            MutatorOp::LocalDrop(..) => OpKind::LocalDrop,
        }
    }

    /// Heap ops touch node slots; local ops touch only a pre-root.
    pub fn is_heap_op(&self) -> bool {
        !matches!(self, MutatorOp::LocalLoad(..) | MutatorOp::LocalDrop(..))
    }

    pub fn display<'a>(&'a self, names: &'a NodeNames) -> OpDisplay<'a> {
        OpDisplay { op: self, names }
    }
}

pub struct OpDisplay<'a> {
    op: &'a MutatorOp,
    names: &'a NodeNames,
}

impl fmt::Display for OpDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = |x: NodeId| self.names.name(x);
        let k = self.op.kind();
        match *self.op {
            MutatorOp::AddArc(a, b) | MutatorOp::DelArc(a, b) => write!(f, "{k} {} {}", n(a), n(b)),
            MutatorOp::AddNew(a) => write!(f, "{k} {}", n(a)),
            MutatorOp::LocalLoad(m, b) | MutatorOp::LocalDrop(m, b) => write!(f, "{k} {m} {}", n(b)),
        }
    }
}
