//! Transition systems, properties and explicit-state checks.

mod catalogs;
mod check;
mod conservative;
mod property;
mod system;

use thiserror::Error;

use crate::report::Diagnostic;

pub use catalogs::{enumerate_catalogs, CatalogBounds};
pub use check::{
    catalog_seeds, catalog_text, check_bounded, check_safety, check_safety_with, parameterised_check, BoundCheck,
    CheckOutcome, SafeReport, Verdict, Witness, WitnessStep,
};
pub use conservative::{
    classify_conservative, conservativize, created_relation_name, fk_cycle, ConservativeMode, ConservativeReport,
    FreshOccurrence,
};
pub use property::{eval_property, PropFormula, Property};
pub use system::{Edge, ExplorationLimits, Explorer, FreshStats, TransitionSystem};

#[derive(Debug, Error)]
pub enum ExploreError {
    #[error("invalid exploration limits: {0} must be positive")]
    InvalidLimits(String),
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("ill-typed property: {}", .0.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    Property(Vec<Diagnostic>),
    #[error("witness replay failed: {0}")]
    Witness(String),
}
