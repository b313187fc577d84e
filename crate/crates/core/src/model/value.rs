use std::fmt;

use serde::Serialize;

use crate::Sym;

/// A typed value. Unbounded domains are modelled as pools `T#0, T#1, ...`
/// next to a disjoint namespace of named constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Value {
    pub ty: Sym,
    pub payload: Payload,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Payload {
    Named(Sym),
    Pool(u32),
}

pub type Tuple = Vec<Value>;

impl Value {
    pub fn named(ty: impl Into<Sym>, name: impl Into<Sym>) -> Value {
        Value { ty: ty.into(), payload: Payload::Named(name.into()) }
    }

    pub fn pool(ty: impl Into<Sym>, index: u32) -> Value {
        Value { ty: ty.into(), payload: Payload::Pool(index) }
    }

    pub fn pool_index(&self) -> Option<u32> {
        match self.payload {
            Payload::Pool(i) => Some(i),
            Payload::Named(_) => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.payload {
            Payload::Named(n) => write!(f, "{n}"),
            Payload::Pool(i) => write!(f, "{}#{i}", self.ty),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
