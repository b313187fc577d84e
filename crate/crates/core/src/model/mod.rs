//! Data types, values, multisets and the read-only catalog.

mod catalog;
mod multiset;
mod types;
mod value;

pub use catalog::{
    validate_instance, validate_schema, ActiveDomain, Attribute, CatalogInstance, CatalogSchema,
    ForeignKey, RelationSchema,
};
pub use multiset::Multiset;
pub use types::{DataType, TypeDomain, ValueDomain};
pub use value::{Payload, Tuple, Value};
