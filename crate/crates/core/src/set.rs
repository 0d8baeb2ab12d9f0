//! Node identities and finite node sets.
//!
//! A [`NodeSet`] is a bitset over dense node indices. The representation
//! never carries trailing zero words, so derived equality, ordering and
//! hashing are extensional.

use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

/// Dense index of a heap node, in `[0, memory_size)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

type Words = SmallVec<[u64; 2]>;

/// Finite set of nodes ordered by inclusion.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeSet {
    words: Words,
}

impl NodeSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// The set `{0, 1, ..., n-1}`.
    pub fn full(n: usize) -> Self {
        let mut words: Words = SmallVec::from_elem(u64::MAX, n / 64);
        if n % 64 != 0 {
            words.push((1u64 << (n % 64)) - 1);
        }
        NodeSet { words }
    }

    pub fn singleton(node: NodeId) -> Self {
        let mut s = Self::new();
        s.insert(node);
        s
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    #[inline]
    pub fn contains(&self, node: NodeId) -> bool {
        let i = node.index();
        self.words
            .get(i / 64)
            .is_some_and(|w| w & (1u64 << (i % 64)) != 0)
    }

    /// Returns `true` if the node was not present before.
    pub fn insert(&mut self, node: NodeId) -> bool {
        let i = node.index();
        if self.words.len() <= i / 64 {
            self.words.resize(i / 64 + 1, 0);
        }
        let bit = 1u64 << (i % 64);
        let fresh = self.words[i / 64] & bit == 0;
        self.words[i / 64] |= bit;
        fresh
    }

    /// Returns `true` if the node was present.
    pub fn remove(&mut self, node: NodeId) -> bool {
        let i = node.index();
        let Some(w) = self.words.get_mut(i / 64) else {
            return false;
        };
        let bit = 1u64 << (i % 64);
        let present = *w & bit != 0;
        *w &= !bit;
        self.trim();
        present
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn clear(&mut self) {
        self.words.clear();
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    pub fn union_with(&mut self, other: &NodeSet) {
        if self.words.len() < other.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= b;
        }
    }

    pub fn intersection(&self, other: &NodeSet) -> NodeSet {
        let mut words: Words = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| a & b)
            .collect();
        while words.last() == Some(&0) {
            words.pop();
        }
        NodeSet { words }
    }

    pub fn difference(&self, other: &NodeSet) -> NodeSet {
        let mut out = self.clone();
        out.difference_with(other);
        out
    }

    pub fn difference_with(&mut self, other: &NodeSet) {
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a &= !b;
        }
        self.trim();
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.words.iter().enumerate().all(|(i, w)| {
            let o = other.words.get(i).copied().unwrap_or(0);
            w & !o == 0
        })
    }

    pub fn is_superset(&self, other: &NodeSet) -> bool {
        other.is_subset(self)
    }

    /// Proper subset.
    pub fn is_strict_subset(&self, other: &NodeSet) -> bool {
        self.is_subset(other) && self != other
    }

    pub fn is_disjoint(&self, other: &NodeSet) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & b == 0)
    }

    /// Smallest member.
    pub fn first(&self) -> Option<NodeId> {
        self.iter().next()
    }

    /// Smallest member that is `>= from`.
    pub fn first_from(&self, from: NodeId) -> Option<NodeId> {
        let start = from.index();
        let mut wi = start / 64;
        if wi >= self.words.len() {
            return None;
        }
        let mut w = self.words[wi] & (u64::MAX << (start % 64));
        loop {
            if w != 0 {
                return Some(NodeId((wi * 64 + w.trailing_zeros() as usize) as u32));
            }
            wi += 1;
            if wi >= self.words.len() {
                return None;
            }
            w = self.words[wi];
        }
    }

    pub fn iter(&self) -> Iter<'_> {
        Iter {
            words: &self.words,
            index: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn to_vec(&self) -> Vec<NodeId> {
        self.iter().collect()
    }

    /// All subsets of `{0..n}` in counting order; `n` must be < 64.
    pub fn all_subsets(n: usize) -> impl Iterator<Item = NodeSet> {
        assert!(n < 64, "subset enumeration limited to 63 nodes");
        (0u64..(1u64 << n)).map(NodeSet::from_bits)
    }

    /// Builds the set whose members are the set bits of `bits`.
    pub fn from_bits(bits: u64) -> NodeSet {
        let mut words = Words::new();
        if bits != 0 {
            words.push(bits);
        }
        NodeSet { words }
    }
}

pub struct Iter<'a> {
    words: &'a [u64],
    index: usize,
    current: u64,
}

impl Iterator for Iter<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(NodeId((self.index * 64 + bit) as u32));
            }
            self.index += 1;
            if self.index >= self.words.len() {
                return None;
            }
            self.current = self.words[self.index];
        }
    }
}

impl<'a> IntoIterator for &'a NodeSet {
    type Item = NodeId;
    type IntoIter = Iter<'a>;

    fn into_iter(self) -> Iter<'a> {
        self.iter()
    }
}

impl FromIterator<NodeId> for NodeSet {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut s = NodeSet::new();
        for n in iter {
            s.insert(n);
        }
        s
    }
}

impl Extend<NodeId> for NodeSet {
    fn extend<I: IntoIterator<Item = NodeId>>(&mut self, iter: I) {
        for n in iter {
            self.insert(n);
        }
    }
}

impl fmt::Debug for NodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|n| n.0)).finish()
    }
}

impl Serialize for NodeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(|n| n.0))
    }
}

impl<'de> Deserialize<'de> for NodeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(d)?;
        Ok(v.into_iter().map(NodeId).collect())
    }
}

/// Shorthand for building sets in tests and fixtures.
pub fn nodes<I: IntoIterator<Item = u32>>(ids: I) -> NodeSet {
    ids.into_iter().map(NodeId).collect()
}
