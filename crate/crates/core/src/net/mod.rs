//! The net object, markings, structural validation, enablement, firing and
//! canonical markings.

mod canon;
mod marking;
mod semantics;
mod structure;
mod validate;

pub use canon::{canonical_form, canonicalize_marking};
pub use marking::Marking;
pub use semantics::{apply_substitution, enabled_bindings, fire, Binding, FireError, FreshPolicy, NetContext};
pub use structure::{Arc, Guard, InscTerm, Inscription, Net, Place, PlaceId, Transition, TransitionId};
pub use validate::validate_net;
