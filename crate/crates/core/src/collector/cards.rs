use crate::set::{NodeId, NodeSet};

/// Fixed partition of the node range into contiguous cards, each with a
/// dirty bit.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CardTable {
    card_size: usize,
    memory_size: usize,
    dirty: Vec<bool>,
}

impl CardTable {
    /// `count` cards over `memory_size` nodes; the last card may be short.
    pub fn new(memory_size: usize, count: usize) -> Self {
        let count = count.max(1);
        let card_size = memory_size.div_ceil(count).max(1);
        CardTable {
            card_size,
            memory_size,
            dirty: vec![false; count],
        }
    }

    pub fn count(&self) -> usize {
        self.dirty.len()
    }

    pub fn card_of(&self, n: NodeId) -> usize {
        (n.index() / self.card_size).min(self.dirty.len() - 1)
    }

    pub fn members(&self, card: usize) -> NodeSet {
        let lo = card * self.card_size;
        let hi = if card + 1 == self.dirty.len() {
            self.memory_size
        } else {
            ((card + 1) * self.card_size).min(self.memory_size)
        };
        (lo..hi.max(lo)).map(NodeId::from).collect()
    }

    pub fn mark(&mut self, n: NodeId) {
        let c = self.card_of(n);
        self.dirty[c] = true;
    }

    pub fn is_dirty(&self, card: usize) -> bool {
        self.dirty[card]
    }

    /// Indices of cards whose bit is set.
    pub fn dirty_cards(&self) -> Vec<usize> {
        (0..self.dirty.len()).filter(|&c| self.dirty[c]).collect()
    }

    /// Union of the members of every dirty card.
    pub fn dirty_members(&self) -> NodeSet {
        let mut out = NodeSet::new();
        for c in self.dirty_cards() {
            out.union_with(&self.members(c));
        }
        out
    }

    pub fn clear(&mut self) {
        self.dirty.iter_mut().for_each(|d| *d = false);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cards_partition_the_nodes() {
        for n in 0..20 {
            for k in 1..8 {
                let t = CardTable::new(n, k);
                let mut seen = NodeSet::new();
                for c in 0..t.count() {
                    let m = t.members(c);
                    assert!(seen.is_disjoint(&m));
                    for x in &m {
                        assert_eq!(t.card_of(x), c);
                    }
                    seen.union_with(&m);
                }
                assert_eq!(seen, NodeSet::full(n));
            }
        }
    }

    #[test]
    fn one_hit_one_dirty_card() {
        let mut t = CardTable::new(10, 3);
        t.mark(NodeId(5));
        t.mark(NodeId(4));
        assert_eq!(t.dirty_cards(), vec![1]);
        t.clear();
        assert!(t.dirty_cards().is_empty());
    }
}
