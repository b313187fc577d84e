//! Translation of marked nets and properties into MCMT array-based
//! systems, structural checks over the emitted text, and a small
//! reference interpreter for the emitted fragment.

mod check;
mod encode;
mod interp;
mod names;

use std::fmt;

use thiserror::Error;

use crate::model::Value;
use crate::report::Diagnostic;
use crate::Sym;

pub use check::{check_declarations, check_document, check_one_place_per_index, count_uguards, recount_budgets, StructureError};
pub use encode::{encode, encode_initial_marking, encode_places, encode_property, encode_schema, encode_transition, Encoding, TransitionEncoding};
pub use interp::{Interpreter, InterpError, InterpOutcome};
pub use names::sanitize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("identifier `{ident}` is produced by both `{first}` and `{second}`")]
    Collision { ident: String, first: String, second: String },
    #[error("cannot encode {0}")]
    Unsupported(String),
    #[error("invalid input: {}", .0.iter().map(|d| d.message.as_str()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

/// Index variables of one transition statement.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexBudget {
    pub existential: usize,
    pub universal: usize,
}

impl IndexBudget {
    pub const SUPPORTED: IndexBudget = IndexBudget { existential: 2, universal: 1 };

    pub fn exceeds_supported(&self) -> bool {
        self.existential > Self::SUPPORTED.existential || self.universal > Self::SUPPORTED.universal
    }
}

impl fmt::Display for IndexBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} existential, {} universal", self.existential, self.universal)
    }
}

/// `:case` with an optional index condition; `vals` follow the declaration
/// order of locals then globals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case {
    pub cond: Option<String>,
    pub vals: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionStmt {
    pub comment: Option<String>,
    /// Existentially quantified index variables.
    pub vars: Vec<String>,
    /// The universally quantified index variable.
    pub universal: String,
    pub eevars: Vec<(String, String)>,
    pub guard: Vec<String>,
    pub uguard: Vec<String>,
    pub cases: Vec<Case>,
}

impl TransitionStmt {
    pub fn budget(&self) -> IndexBudget {
        IndexBudget { existential: self.vars.len(), universal: usize::from(!self.uguard.is_empty()) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    DefineType(String),
    DefineFn { name: String, arg: String, ret: String },
    DefineConst { name: String, sort: String },
    DbDriven { sorts: Vec<String>, functions: Vec<String>, constants: Vec<String> },
    Local { name: String, sort: String },
    Global { name: String, sort: String },
    Initial { var: String, conjuncts: Vec<Vec<String>> },
    Transition(TransitionStmt),
    Unsafe { vars: Vec<String>, conjuncts: Vec<String> },
}

impl Statement {
    fn group(&self) -> u8 {
        match self {
            Statement::DefineType(_) | Statement::DefineFn { .. } | Statement::DefineConst { .. } => 0,
            Statement::Local { .. } | Statement::Global { .. } => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::DefineType(d) => writeln!(f, ":smt (define_type {d})"),
            Statement::DefineFn { name, arg, ret } => writeln!(f, ":smt (define {name} ::(-> {arg} {ret}))"),
            Statement::DefineConst { name, sort } => writeln!(f, ":smt (define {name} ::{sort})"),
            Statement::DbDriven { sorts, functions, constants } => {
                writeln!(f, ":db_driven")?;
                writeln!(f, ":db_sorts {}", sorts.join(","))?;
                if !functions.is_empty() {
                    writeln!(f, ":db_functions {}", functions.join(","))?;
                }
                if !constants.is_empty() {
                    writeln!(f, ":db_constants {}", constants.join(","))?;
                }
                Ok(())
            }
            Statement::Local { name, sort } => writeln!(f, ":local {name} {sort}"),
            Statement::Global { name, sort } => writeln!(f, ":global {name} {sort}"),
            Statement::Initial { var, conjuncts } => {
                writeln!(f, ":initial")?;
                writeln!(f, ":var {var}")?;
                for (i, block) in conjuncts.iter().enumerate() {
                    let lead = if i == 0 { ":cnj " } else { "     " };
                    writeln!(f, "{lead}{}", block.join(" "))?;
                }
                Ok(())
            }
            Statement::Transition(t) => {
                writeln!(f, ":transition")?;
                if let Some(c) = &t.comment {
                    writeln!(f, ":comment {c}")?;
                }
                for v in &t.vars {
                    writeln!(f, ":var {v}")?;
                }
                writeln!(f, ":var {}", t.universal)?;
                for (z, sort) in &t.eevars {
                    writeln!(f, ":eevar {z} {sort}")?;
                }
                writeln!(f, ":guard {}", t.guard.join(" "))?;
                if !t.uguard.is_empty() {
                    writeln!(f, ":uguard {}", t.uguard.join(" "))?;
                }
                writeln!(f, ":numcases {}", t.cases.len())?;
                for c in &t.cases {
                    match &c.cond {
                        Some(cond) => writeln!(f, ":case {cond}")?,
                        None => writeln!(f, ":case")?,
                    }
                    for v in &c.vals {
                        writeln!(f, ":val {v}")?;
                    }
                }
                Ok(())
            }
            Statement::Unsafe { vars, conjuncts } => {
                writeln!(f, ":unsafe")?;
                for v in vars {
                    writeln!(f, ":var {v}")?;
                }
                writeln!(f, ":u_cnj {}", conjuncts.join(" "))
            }
        }
    }
}

/// Catalog function symbol: attribute `attr` of `relation`, or the
/// membership function of a key-only relation when `attr` is `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionSymbol {
    pub name: String,
    pub relation: Sym,
    pub attr: Option<usize>,
}

/// An ordered list of MCMT statements. Rendering is a pure function of the
/// statements; the symbol tables are kept for interpreters and are not printed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct McmtDocument {
    pub statements: Vec<Statement>,
    pub constants: Vec<(String, Value)>,
    pub functions: Vec<FunctionSymbol>,
}

impl McmtDocument {
    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn transitions(&self) -> impl Iterator<Item = &TransitionStmt> {
        self.statements.iter().filter_map(|s| if let Statement::Transition(t) = s { Some(t) } else { None })
    }
}

impl fmt::Display for McmtDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut prev: Option<u8> = None;
        for s in &self.statements {
            let g = s.group();
            if prev.is_some() && (prev != Some(g) || g == 2) {
                writeln!(f)?;
            }
            write!(f, "{s}")?;
            prev = Some(g);
        }
        Ok(())
    }
}
