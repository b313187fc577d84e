//! Conditions and unions of conjunctive queries with atomic negation,
//! evaluated under active-domain semantics.

mod ast;
mod eval;
pub(crate) mod typecheck;

pub use ast::{Atom, Condition, ConjunctiveQuery, Literal, QueryExpr, Substitution, Term, UnionQuery, Var};
pub use eval::{evaluate_condition, evaluate_query, evaluate_query_with, EvalError, Evaluator};
pub use typecheck::{typecheck_condition, typecheck_query, TypeError, TypedQuery};
