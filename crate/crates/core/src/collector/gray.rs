use std::collections::VecDeque;

use crate::set::{NodeId, NodeSet};

use super::GrayPolicy;

/// The gray set plus whatever ordering structure the selection policy
/// keeps. Membership is authoritative in `set`; `order` only ever holds
/// gray nodes that have not yet been selected.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GrayQueue {
    set: NodeSet,
    order: VecDeque<NodeId>,
    policy: GrayPolicy,
    scan_pos: usize,
    scanning: bool,
    /// Completed passes over the node range (iterated scan, cache residue).
    pub sweeps: usize,
    /// Passes that had to restart because gray work appeared behind the scan point.
    pub rescans: usize,
    /// Pushes that found the bounded cache full.
    pub overflows: usize,
}

impl GrayQueue {
    pub fn new(policy: GrayPolicy) -> Self {
        GrayQueue {
            set: NodeSet::new(),
            order: VecDeque::new(),
            policy,
            scan_pos: 0,
            scanning: false,
            sweeps: 0,
            rescans: 0,
            overflows: 0,
        }
    }

    pub fn set(&self) -> &NodeSet {
        &self.set
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.set.contains(n)
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    /// Returns `true` if `n` was not gray.
    pub fn push(&mut self, n: NodeId) -> bool {
        if !self.set.insert(n) {
            return false;
        }
        match self.policy {
            GrayPolicy::StackDfs | GrayPolicy::QueueBfs => self.order.push_back(n),
            GrayPolicy::IteratedScan => {}
            GrayPolicy::BoundedCache(k) => {
                if self.order.len() < k {
                    self.order.push_back(n);
                } else {
                    self.overflows += 1;
                }
            }
        }
        true
    }

    /// Removes `n` from the gray set (it was blackened).
    pub fn remove(&mut self, n: NodeId) -> bool {
        self.order.retain(|&x| x != n);
        self.set.remove(n)
    }

    /// Picks the next gray node to process. It stays gray until removed.
    pub fn select(&mut self) -> Option<NodeId> {
        if self.set.is_empty() {
            return None;
        }
        let from_order = match self.policy {
            GrayPolicy::StackDfs | GrayPolicy::BoundedCache(_) => self.order.pop_back(),
            GrayPolicy::QueueBfs => self.order.pop_front(),
            GrayPolicy::IteratedScan => None,
        };
        if let Some(n) = from_order {
            debug_assert!(self.set.contains(n));
            return Some(n);
        }
        Some(self.scan_next())
    }

    fn scan_next(&mut self) -> NodeId {
        if !self.scanning {
            self.scanning = true;
            self.sweeps += 1;
            self.scan_pos = 0;
        }
        if let Some(n) = self.set.first_from(NodeId::from(self.scan_pos)) {
            self.scan_pos = n.index();
            return n;
        }
        // wrapped: work remains behind the scan point
        self.sweeps += 1;
        self.rescans += 1;
        let n = self.set.first().expect("nonempty");
        self.scan_pos = n.index();
        n
    }

    pub fn clear(&mut self) {
        *self = GrayQueue::new(self.policy);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::set::nodes;

    fn drain(q: &mut GrayQueue) -> Vec<u32> {
        let mut out = vec![];
        while let Some(n) = q.select() {
            q.remove(n);
            out.push(n.0);
        }
        out
    }

    #[test]
    fn stack_and_queue_orders() {
        let mut s = GrayQueue::new(GrayPolicy::StackDfs);
        let mut q = GrayQueue::new(GrayPolicy::QueueBfs);
        for n in [3, 1, 2] {
            s.push(NodeId(n));
            q.push(NodeId(n));
        }
        assert_eq!(drain(&mut s), vec![2, 1, 3]);
        assert_eq!(drain(&mut q), vec![3, 1, 2]);
    }

    #[test]
    fn iterated_scan_counts_rescans() {
        let mut q = GrayQueue::new(GrayPolicy::IteratedScan);
        q.push(NodeId(2));
        q.push(NodeId(5));
        let a = q.select().unwrap();
        q.remove(a);
        // new work behind the scan point
        q.push(NodeId(1));
        let b = q.select().unwrap();
        q.remove(b);
        assert_eq!((a, b), (NodeId(2), NodeId(5)));
        assert_eq!(q.select(), Some(NodeId(1)));
        assert_eq!(q.rescans, 1);
        assert_eq!(q.sweeps, 2);
    }

    #[test]
    fn cache_overflow_falls_back_to_scan() {
        let mut q = GrayQueue::new(GrayPolicy::BoundedCache(1));
        for n in [4, 2, 7] {
            q.push(NodeId(n));
        }
        assert_eq!(q.overflows, 2);
        let mut got = drain(&mut q);
        assert_eq!(got.remove(0), 4);
        got.sort();
        assert_eq!(got, vec![2, 7]);
        assert_eq!(*q.set(), nodes([]));
    }
}
