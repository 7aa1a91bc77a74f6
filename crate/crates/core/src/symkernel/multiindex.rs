//! Multi-indices labeling repeated formal derivatives.
//!
//! Jet coordinates are symmetric in their derivative indices, so a
//! multi-index is stored as a sorted (nondecreasing) list of base-coordinate
//! indices. Two multi-indices are equal iff their sorted entry lists are
//! equal, and every summation over multi-indices in this crate ranges over
//! these unordered classes.

use std::fmt;

/// An unordered multi-index: sorted entries in `1..=n`, length `|I| >= 0`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn empty() -> Self {
        MultiIndex(Vec::new())
    }

    /// Builds from arbitrary entry order; entries are sorted on construction.
    pub fn new(mut entries: Vec<u8>) -> Self {
        entries.sort_unstable();
        MultiIndex(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    /// `Ij`: the multi-index extended by one more derivative index.
    pub fn push(&self, i: u8) -> Self {
        let mut v = self.0.clone();
        let pos = v.partition_point(|&e| e <= i);
        v.insert(pos, i);
        MultiIndex(v)
    }

    /// Concatenation `JI`, re-sorted.
    pub fn concat(&self, other: &MultiIndex) -> Self {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        v.sort_unstable();
        MultiIndex(v)
    }

    /// Largest entry, if any.
    pub fn max_entry(&self) -> Option<u8> {
        self.0.last().copied()
    }

    /// How many times `i` occurs.
    pub fn multiplicity(&self, i: u8) -> usize {
        self.0.iter().filter(|&&e| e == i).count()
    }

    /// Removes one occurrence of the largest entry; `None` when empty.
    pub fn split_last(&self) -> Option<(MultiIndex, u8)> {
        let (&last, rest) = self.0.split_last()?;
        Some((MultiIndex(rest.to_vec()), last))
    }

    /// Removes one occurrence of `i`; `None` when `i` is absent.
    pub fn remove_one(&self, i: u8) -> Option<MultiIndex> {
        let pos = self.0.iter().position(|&e| e == i)?;
        let mut v = self.0.clone();
        v.remove(pos);
        Some(MultiIndex(v))
    }

    /// Distinct entry values.
    pub fn distinct(&self) -> Vec<u8> {
        let mut v = self.0.clone();
        v.dedup();
        v
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// All unordered multi-indices of exactly `len` entries over `1..=n`.
pub fn multi_indices(n: u8, len: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(len);
    fn rec(n: u8, len: usize, start: u8, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
        if cur.len() == len {
            out.push(MultiIndex(cur.clone()));
            return;
        }
        for i in start..=n {
            cur.push(i);
            rec(n, len, i, cur, out);
            cur.pop();
        }
    }
    rec(n, len, 1, &mut cur, &mut out);
    out
}

/// All unordered multi-indices with `0..=max_len` entries over `1..=n`.
pub fn multi_indices_up_to(n: u8, max_len: usize) -> Vec<MultiIndex> {
    (0..=max_len).flat_map(|l| multi_indices(n, l)).collect()
}

/// Leibniz multiplicity for splitting the iterated derivative `d_{A+B}` as
/// derivatives `d_B` falling on one factor: the product over distinct indices
/// of `C(mult_A(i) + mult_B(i), mult_B(i))`.
pub fn split_multiplicity(a: &MultiIndex, b: &MultiIndex) -> u64 {
    let mut m = 1u64;
    let mut seen: Vec<u8> = a.0.iter().chain(b.0.iter()).copied().collect();
    seen.sort_unstable();
    seen.dedup();
    for i in seen {
        m *= binomial((a.multiplicity(i) + b.multiplicity(i)) as u64, b.multiplicity(i) as u64);
    }
    m
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc = 1u64;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_sorted_on_construction() {
        let i = MultiIndex::new(vec![2, 1, 2]);
        assert_eq!(i.entries(), &[1, 2, 2]);
        assert_eq!(i, MultiIndex::new(vec![2, 2, 1]));
    }

    #[test]
    fn push_keeps_order_and_grows_by_one() {
        let i = MultiIndex::new(vec![1, 3]);
        let j = i.push(2);
        assert_eq!(j.entries(), &[1, 2, 3]);
        assert_eq!(j.len(), i.len() + 1);
    }

    #[test]
    fn enumeration_counts_unordered_classes() {
        // n=2: classes of length 2 are (1,1), (1,2), (2,2).
        assert_eq!(multi_indices(2, 2).len(), 3);
        assert_eq!(multi_indices_up_to(2, 2).len(), 1 + 2 + 3);
        // n=4, length 2: C(5,2) = 10.
        assert_eq!(multi_indices(4, 2).len(), 10);
    }

    #[test]
    fn split_multiplicities() {
        let a = MultiIndex::new(vec![1]);
        let b = MultiIndex::new(vec![1]);
        assert_eq!(split_multiplicity(&a, &b), 2); // d_11 over (1)+(1)
        let b2 = MultiIndex::new(vec![2]);
        assert_eq!(split_multiplicity(&a, &b2), 1);
        let empty = MultiIndex::empty();
        assert_eq!(split_multiplicity(&empty, &a), 1);
    }
}
