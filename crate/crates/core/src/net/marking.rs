use std::collections::BTreeSet;
use std::fmt;

use crate::model::{Multiset, Tuple, Value};

use super::structure::{Net, PlaceId};

/// A multiset of value tuples per place, indexed by place declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Marking {
    places: Vec<Multiset<Tuple>>,
}

impl Marking {
    pub fn empty(places: usize) -> Marking {
        Marking { places: vec![Multiset::new(); places] }
    }

    pub fn for_net(net: &Net) -> Marking {
        Marking::empty(net.places.len())
    }

    pub fn place_count(&self) -> usize {
        self.places.len()
    }

    pub fn tokens(&self, p: PlaceId) -> &Multiset<Tuple> {
        &self.places[p.0]
    }

    pub fn tokens_mut(&mut self, p: PlaceId) -> &mut Multiset<Tuple> {
        &mut self.places[p.0]
    }

    pub fn add(&mut self, p: PlaceId, tuple: Tuple, count: u32) {
        self.places[p.0].insert(tuple, count);
    }

    pub fn with(mut self, p: PlaceId, tuple: Tuple, count: u32) -> Marking {
        self.add(p, tuple, count);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (PlaceId, &Multiset<Tuple>)> {
        self.places.iter().enumerate().map(|(i, m)| (PlaceId(i), m))
    }

    pub fn total_tokens(&self) -> usize {
        self.places.iter().map(|m| m.len()).sum()
    }

    /// `Val(m)`.
    pub fn values(&self) -> BTreeSet<Value> {
        self.places.iter().flat_map(|m| m.support()).flatten().copied().collect()
    }

    pub fn display<'a>(&'a self, net: &'a Net) -> MarkingDisplay<'a> {
        MarkingDisplay { m: self, net }
    }
}

pub struct MarkingDisplay<'a> {
    m: &'a Marking,
    net: &'a Net,
}

impl fmt::Display for MarkingDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        let mut first = true;
        for (p, ms) in self.m.iter() {
            if ms.is_empty() {
                continue;
            }
            if !first {
                f.write_str("; ")?;
            }
            first = false;
            write!(f, "{}: ", self.net.place(p).name)?;
            for (i, (t, c)) in ms.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                if c != 1 {
                    write!(f, "{c}*")?;
                }
                let vals: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                if vals.len() == 1 {
                    f.write_str(&vals[0])?;
                } else {
                    write!(f, "({})", vals.join(", "))?;
                }
            }
        }
        f.write_str("}")
    }
}
