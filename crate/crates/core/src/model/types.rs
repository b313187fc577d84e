use crate::report::Loc;
use crate::Sym;

use super::value::{Payload, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ValueDomain {
    /// A finite enumeration of named constants.
    Finite(Vec<Sym>),
    /// Countably many values: any named constant plus the pool `T#i`.
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataType {
    pub name: Sym,
    pub domain: ValueDomain,
    pub loc: Loc,
}

/// The set of data types, in declaration order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeDomain {
    pub types: Vec<DataType>,
}

impl TypeDomain {
    pub fn new() -> TypeDomain {
        TypeDomain::default()
    }

    pub fn add(&mut self, name: impl Into<Sym>, domain: ValueDomain) -> &mut TypeDomain {
        self.types.push(DataType { name: name.into(), domain, loc: Loc::NONE });
        self
    }

    pub fn with_unbounded(mut self, names: &[&str]) -> TypeDomain {
        for n in names {
            self.add(*n, ValueDomain::Unbounded);
        }
        self
    }

    pub fn get(&self, name: Sym) -> Option<&DataType> {
        self.types.iter().find(|t| t.name == name)
    }

    pub fn contains(&self, name: Sym) -> bool {
        self.get(name).is_some()
    }

    pub fn index_of(&self, name: Sym) -> Option<usize> {
        self.types.iter().position(|t| t.name == name)
    }

    pub fn is_unbounded(&self, name: Sym) -> bool {
        matches!(self.get(name), Some(DataType { domain: ValueDomain::Unbounded, .. }))
    }

    /// Whether `v` belongs to the value domain of its own type.
    pub fn admits(&self, v: &Value) -> bool {
        match self.get(v.ty) {
            None => false,
            Some(t) => match (&t.domain, v.payload) {
                (ValueDomain::Unbounded, _) => true,
                (ValueDomain::Finite(names), Payload::Named(n)) => names.contains(&n),
                (ValueDomain::Finite(_), Payload::Pool(_)) => false,
            },
        }
    }
}
