use std::collections::BTreeSet;
use std::fmt;

use crate::model::{CatalogSchema, Value};
use crate::query::{Condition, Term, UnionQuery, Var};
use crate::report::Loc;
use crate::Sym;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlaceId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TransitionId(pub usize);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Place {
    pub name: Sym,
    pub color: Vec<Sym>,
    pub loc: Loc,
}

/// A component of an arc inscription.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InscTerm {
    Var(Var),
    /// A ν-variable: bound to a value absent from the marking and the catalog.
    Fresh(Var),
    Const(Value),
}

impl InscTerm {
    pub fn ty(&self) -> Sym {
        match self {
            InscTerm::Var(v) | InscTerm::Fresh(v) => v.ty,
            InscTerm::Const(c) => c.ty,
        }
    }

    pub fn var(&self) -> Option<Var> {
        match self {
            InscTerm::Var(v) | InscTerm::Fresh(v) => Some(*v),
            InscTerm::Const(_) => None,
        }
    }
}

impl fmt::Display for InscTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InscTerm::Var(v) => write!(f, "{v}"),
            InscTerm::Fresh(v) => write!(f, "nu {v}"),
            InscTerm::Const(c) => write!(f, "{}", Term::Const(*c)),
        }
    }
}

/// `k·⟨t1, ..., tn⟩`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Inscription {
    pub mult: u32,
    pub terms: Vec<InscTerm>,
    pub loc: Loc,
}

impl Inscription {
    pub fn new(mult: u32, terms: Vec<InscTerm>) -> Inscription {
        Inscription { mult, terms, loc: Loc::NONE }
    }

    pub fn vars(terms: &[&str], ty: &[&str]) -> Inscription {
        Inscription::new(1, terms.iter().zip(ty).map(|(n, t)| InscTerm::Var(Var::new(n, t))).collect())
    }
}

impl fmt::Display for Inscription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mult != 1 {
            write!(f, "{}*", self.mult)?;
        }
        if self.terms.len() == 1 {
            return write!(f, "{}", self.terms[0]);
        }
        f.write_str("(")?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

/// An arc between a place and a transition, labelled with a multiset of inscriptions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arc {
    pub place: PlaceId,
    pub inscriptions: Vec<Inscription>,
    pub loc: Loc,
}

impl Arc {
    pub fn new(place: PlaceId, inscriptions: Vec<Inscription>) -> Arc {
        Arc { place, inscriptions, loc: Loc::NONE }
    }

    pub fn total_mult(&self) -> u32 {
        self.inscriptions.iter().map(|i| i.mult).sum()
    }
}

/// Transition guard `Q ∧ φ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guard {
    pub query: Option<UnionQuery>,
    pub condition: Condition,
    pub loc: Loc,
}

impl Default for Guard {
    fn default() -> Guard {
        Guard { query: None, condition: Condition::True, loc: Loc::NONE }
    }
}

impl Guard {
    pub fn is_trivial(&self) -> bool {
        self.query.is_none() && self.condition.is_true()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub name: Sym,
    pub inputs: Vec<Arc>,
    pub outputs: Vec<Arc>,
    pub guard: Guard,
    pub loc: Loc,
}

fn insc_vars<'a>(arcs: &'a [Arc]) -> impl Iterator<Item = &'a InscTerm> {
    arcs.iter().flat_map(|a| a.inscriptions.iter()).flat_map(|i| i.terms.iter())
}

impl Transition {
    pub fn new(name: &str) -> Transition {
        Transition { name: Sym::new(name), inputs: Vec::new(), outputs: Vec::new(), guard: Guard::default(), loc: Loc::NONE }
    }

    pub fn input(mut self, place: PlaceId, insc: Inscription) -> Transition {
        add_to(&mut self.inputs, place, insc);
        self
    }

    pub fn output(mut self, place: PlaceId, insc: Inscription) -> Transition {
        add_to(&mut self.outputs, place, insc);
        self
    }

    pub fn with_query(mut self, q: UnionQuery) -> Transition {
        self.guard.query = Some(q);
        self
    }

    pub fn with_condition(mut self, c: Condition) -> Transition {
        self.guard.condition = c;
        self
    }

    /// Variables occurring in input inscriptions.
    pub fn in_vars(&self) -> BTreeSet<Var> {
        insc_vars(&self.inputs).filter_map(|t| t.var()).collect()
    }

    /// Variables occurring in output inscriptions, fresh ones included.
    pub fn out_vars(&self) -> BTreeSet<Var> {
        insc_vars(&self.outputs).filter_map(|t| t.var()).collect()
    }

    /// ν-variables of output inscriptions.
    pub fn fresh_vars(&self) -> BTreeSet<Var> {
        insc_vars(&self.outputs)
            .filter_map(|t| if let InscTerm::Fresh(v) = t { Some(*v) } else { None })
            .collect()
    }

    pub fn query_free_vars(&self) -> BTreeSet<Var> {
        self.guard.query.as_ref().map(|q| q.free_vars()).unwrap_or_default()
    }

    /// Variables a binding must assign: inputs, outputs and free query variables.
    pub fn binding_vars(&self) -> BTreeSet<Var> {
        let mut vs = self.in_vars();
        vs.extend(self.out_vars());
        vs.extend(self.query_free_vars());
        vs
    }

    /// Constants of guards and inscriptions.
    pub fn constants(&self) -> BTreeSet<Value> {
        let mut out: BTreeSet<Value> = insc_vars(&self.inputs)
            .chain(insc_vars(&self.outputs))
            .filter_map(|t| if let InscTerm::Const(c) = t { Some(*c) } else { None })
            .collect();
        if let Some(q) = &self.guard.query {
            out.extend(q.consts());
        }
        self.guard.condition.consts(&mut out);
        out
    }

    pub fn input_arc(&self, place: PlaceId) -> Option<&Arc> {
        self.inputs.iter().find(|a| a.place == place)
    }

    pub fn output_arc(&self, place: PlaceId) -> Option<&Arc> {
        self.outputs.iter().find(|a| a.place == place)
    }
}

fn add_to(arcs: &mut Vec<Arc>, place: PlaceId, insc: Inscription) {
    match arcs.iter_mut().find(|a| a.place == place) {
        Some(a) => a.inscriptions.push(insc),
        None => arcs.push(Arc::new(place, vec![insc])),
    }
}

/// A CLog-net: catalog schema, places and transitions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Net {
    pub schema: CatalogSchema,
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
}

impl Net {
    pub fn new(schema: CatalogSchema) -> Net {
        Net { schema, places: Vec::new(), transitions: Vec::new() }
    }

    pub fn add_place(&mut self, name: &str, color: &[&str]) -> PlaceId {
        self.places.push(Place { name: Sym::new(name), color: color.iter().map(|c| Sym::new(c)).collect(), loc: Loc::NONE });
        PlaceId(self.places.len() - 1)
    }

    pub fn add_transition(&mut self, t: Transition) -> TransitionId {
        self.transitions.push(t);
        TransitionId(self.transitions.len() - 1)
    }

    pub fn place(&self, id: PlaceId) -> &Place {
        &self.places[id.0]
    }

    pub fn transition(&self, id: TransitionId) -> &Transition {
        &self.transitions[id.0]
    }

    pub fn place_id(&self, name: &str) -> Option<PlaceId> {
        let s = Sym::new(name);
        self.places.iter().position(|p| p.name == s).map(PlaceId)
    }

    pub fn transition_id(&self, name: &str) -> Option<TransitionId> {
        let s = Sym::new(name);
        self.transitions.iter().position(|t| t.name == s).map(TransitionId)
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransitionId> {
        (0..self.transitions.len()).map(TransitionId)
    }

    /// Constants occurring in guards and inscriptions of any transition.
    pub fn constants(&self) -> BTreeSet<Value> {
        self.transitions.iter().flat_map(|t| t.constants()).collect()
    }
}

/// Makes a term usable in both inscriptions and queries.
impl From<Term> for InscTerm {
    fn from(t: Term) -> InscTerm {
        match t {
            Term::Var(v) => InscTerm::Var(v),
            Term::Const(c) => InscTerm::Const(c),
        }
    }
}
