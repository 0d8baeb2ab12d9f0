use std::collections::HashMap;

use crate::set::{NodeId, NodeSet};

/// Human-readable node names for traces, dumps and reports.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeNames {
    names: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl NodeNames {
    /// Returns `None` if a name repeats.
    pub fn new(names: Vec<String>) -> Option<Self> {
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), NodeId::from(i)).is_some() {
                return None;
            }
        }
        Some(NodeNames { names, index })
    }

    /// `n0, n1, ...`
    pub fn numbered(n: usize) -> Self {
        NodeNames::new((0..n).map(|i| format!("n{i}")).collect()).expect("distinct")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, n: NodeId) -> &str {
        self.names.get(n.index()).map(String::as_str).unwrap_or("?")
    }

    pub fn lookup(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn format_set(&self, set: &NodeSet) -> String {
        let parts: Vec<&str> = set.iter().map(|n| self.name(n)).collect();
        format!("{{{}}}", parts.join(","))
    }

    pub fn set_names(&self, set: &NodeSet) -> Vec<String> {
        set.iter().map(|n| self.name(n).to_string()).collect()
    }
}
