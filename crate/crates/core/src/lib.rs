//! Catalog Petri nets (CLog-nets): coloured Petri nets whose transitions
//! query a read-only relational catalog and may inject fresh values.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: data types, values, multisets, catalog schemas and instances.
//! * [`query`]: conditions and unions of conjunctive queries with atomic negation.
//! * [`net`]: the net object, markings, enablement, firing and canonical markings.
//! * [`explore`]: transition systems, properties, safety and boundedness checks,
//!   catalog enumeration and conservative-net transformations.
//! * [`mcmt`]: translation to MCMT array-based systems, plus a small
//!   reference interpreter for the emitted fragment.
//! * [`dsl`]: the textual project format (parser, resolver, printer).

pub mod dsl;
pub mod explore;
pub mod mcmt;
pub mod model;
pub mod net;
pub mod query;
pub mod report;
mod sym;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use sym::Sym;
