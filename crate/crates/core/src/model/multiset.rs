use std::collections::btree_map;
use std::collections::BTreeMap;
use std::ops::{Add, Sub};

/// A finite multiset with positive multiplicities, iterated in element order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Multiset<T: Ord> {
    entries: BTreeMap<T, u32>,
}

impl<T: Ord> Default for Multiset<T> {
    fn default() -> Self {
        Multiset { entries: BTreeMap::new() }
    }
}

impl<T: Ord + Clone> Multiset<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, elem: T, count: u32) {
        if count > 0 {
            *self.entries.entry(elem).or_insert(0) += count;
        }
    }

    /// Removes up to `count` copies and returns how many were removed.
    pub fn remove(&mut self, elem: &T, count: u32) -> u32 {
        match self.entries.get_mut(elem) {
            None => 0,
            Some(c) if *c > count => {
                *c -= count;
                count
            }
            Some(_) => self.entries.remove(elem).unwrap_or(0),
        }
    }

    pub fn count(&self, elem: &T) -> u32 {
        self.entries.get(elem).copied().unwrap_or(0)
    }

    /// Total number of elements, counting multiplicities.
    pub fn len(&self) -> usize {
        self.entries.values().map(|&c| c as usize).sum()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, u32)> + '_ {
        self.entries.iter().map(|(k, &c)| (k, c))
    }

    pub fn support(&self) -> btree_map::Keys<'_, T, u32> {
        self.entries.keys()
    }

    /// `self ⊆ other`.
    pub fn is_subset(&self, other: &Multiset<T>) -> bool {
        self.entries.iter().all(|(k, &c)| other.count(k) >= c)
    }

    pub fn scale(&self, k: u32) -> Multiset<T> {
        let mut out = Multiset::new();
        for (e, c) in self.iter() {
            out.insert(e.clone(), c * k);
        }
        out
    }

    pub fn union_sum(&self, other: &Multiset<T>) -> Multiset<T> {
        let mut out = self.clone();
        for (e, c) in other.iter() {
            out.insert(e.clone(), c);
        }
        out
    }

    /// Truncated difference: multiplicities never go below zero.
    pub fn difference(&self, other: &Multiset<T>) -> Multiset<T> {
        let mut out = self.clone();
        for (e, c) in other.iter() {
            out.remove(e, c);
        }
        out
    }
}

impl<T: Ord + Clone> FromIterator<(T, u32)> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = (T, u32)>>(iter: I) -> Self {
        let mut m = Multiset::new();
        for (e, c) in iter {
            m.insert(e, c);
        }
        m
    }
}

impl<T: Ord + Clone> FromIterator<T> for Multiset<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        iter.into_iter().map(|e| (e, 1)).collect()
    }
}

impl<T: Ord + Clone> Add for &Multiset<T> {
    type Output = Multiset<T>;
    fn add(self, rhs: &Multiset<T>) -> Multiset<T> {
        self.union_sum(rhs)
    }
}

impl<T: Ord + Clone> Sub for &Multiset<T> {
    type Output = Multiset<T>;
    fn sub(self, rhs: &Multiset<T>) -> Multiset<T> {
        self.difference(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ms() -> impl Strategy<Value = Multiset<u8>> {
        proptest::collection::vec((0u8..6, 1u32..4), 0..8).prop_map(|v| v.into_iter().collect())
    }

    proptest! {
        #[test]
        fn sum_then_difference(a in ms(), b in ms()) {
            prop_assert_eq!(&(&a + &b) - &a, b);
        }

        #[test]
        fn scaling_multiplies_size(a in ms(), k in 1u32..5) {
            prop_assert_eq!(a.scale(k).len(), k as usize * a.len());
        }

        #[test]
        fn summand_is_subset(a in ms(), b in ms()) {
            prop_assert!(a.is_subset(&(&a + &b)));
        }

        #[test]
        fn no_zero_counts(a in ms(), b in ms()) {
            let d = &a - &b;
            prop_assert!(d.iter().all(|(_, c)| c > 0));
        }
    }

    #[test]
    fn remove_clamps() {
        let mut m: Multiset<u8> = [(1, 2)].into_iter().collect();
        assert_eq!(m.remove(&1, 5), 2);
        assert!(m.is_empty());
    }
}
