use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Attribute, CatalogSchema, RelationSchema, Value};
use crate::net::{Arc, InscTerm, Inscription, Marking, Net};
use crate::query::{Atom, ConjunctiveQuery, Literal, Term, UnionQuery, Var};
use crate::report::Loc;
use crate::Sym;

use super::ExploreError;

/// One ν-variable occurrence in an output inscription.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct FreshOccurrence {
    pub transition: Sym,
    pub place: Sym,
    /// Component index within the inscription tuple.
    pub position: usize,
    pub var: Var,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConservativeReport {
    pub occurrences: Vec<FreshOccurrence>,
}

impl ConservativeReport {
    /// A net is conservative when it has no ν-variables.
    pub fn is_conservative(&self) -> bool {
        self.occurrences.is_empty()
    }
}

pub fn classify_conservative(net: &Net) -> ConservativeReport {
    let mut occurrences = Vec::new();
    for t in &net.transitions {
        for arc in &t.outputs {
            for insc in &arc.inscriptions {
                for (i, term) in insc.terms.iter().enumerate() {
                    if let InscTerm::Fresh(v) = term {
                        occurrences.push(FreshOccurrence { transition: t.name, place: net.place(arc.place).name, position: i, var: *v });
                    }
                }
            }
        }
    }
    ConservativeReport { occurrences }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConservativeMode {
    /// Draw former ν-values from a new catalog relation `Created_<D>`.
    Catalog,
    /// Draw former ν-values from a place `provision_<D>` seeded with this
    /// many distinct values.
    Provision(usize),
}

/// Removes every ν-variable. Returns the new net and its initial marking
/// (`m0` extended with the provision places, if any).
pub fn conservativize(net: &Net, m0: &Marking, mode: ConservativeMode) -> Result<(Net, Marking), ExploreError> {
    let fresh_types: BTreeSet<Sym> = classify_conservative(net).occurrences.iter().map(|o| o.var.ty).collect();
    match mode {
        ConservativeMode::Catalog => Ok((via_catalog(net, &fresh_types)?, m0.clone())),
        ConservativeMode::Provision(0) => Err(ExploreError::InvalidBounds("provision size must be positive".into())),
        ConservativeMode::Provision(b) => via_provision(net, m0, &fresh_types, b),
    }
}

fn unfresh(terms: &mut [InscTerm]) {
    for t in terms {
        if let InscTerm::Fresh(v) = *t {
            *t = InscTerm::Var(v);
        }
    }
}

pub fn created_relation_name(ty: Sym) -> Sym {
    Sym::new(&format!("Created_{ty}"))
}

fn via_catalog(net: &Net, fresh_types: &BTreeSet<Sym>) -> Result<Net, ExploreError> {
    let mut out = net.clone();
    let mut names: BTreeMap<Sym, Sym> = BTreeMap::new();
    for ty in fresh_types {
        let name = created_relation_name(*ty);
        if out.schema.relation(name).is_some() {
            return Err(ExploreError::InvalidBounds(format!("relation `{name}` already exists")));
        }
        out.schema.relations.push(RelationSchema {
            name,
            attrs: vec![Attribute { name: Sym::new("id"), ty: *ty, loc: Loc::NONE }],
            key: 0,
            fks: Vec::new(),
            loc: Loc::NONE,
        });
        names.insert(*ty, name);
    }
    for t in &mut out.transitions {
        let fresh = t.fresh_vars();
        if fresh.is_empty() {
            continue;
        }
        for arc in &mut t.outputs {
            for insc in &mut arc.inscriptions {
                unfresh(&mut insc.terms);
            }
        }
        let lits: Vec<Literal> = fresh
            .iter()
            .map(|v| Literal { positive: true, atom: Atom { relation: names[&v.ty], args: vec![Term::Var(*v)], loc: Loc::NONE } })
            .collect();
        match &mut t.guard.query {
            Some(q) => {
                for d in &mut q.disjuncts {
                    d.literals.extend(lits.iter().cloned());
                }
            }
            None => {
                t.guard.query = Some(UnionQuery::single(ConjunctiveQuery { exists: Vec::new(), literals: lits, condition: Default::default() }));
            }
        }
    }
    Ok(out)
}

fn via_provision(net: &Net, m0: &Marking, fresh_types: &BTreeSet<Sym>, b: usize) -> Result<(Net, Marking), ExploreError> {
    let mut out = net.clone();
    let mut places = BTreeMap::new();
    for ty in fresh_types {
        let name = format!("provision_{ty}");
        if out.place_id(&name).is_some() {
            return Err(ExploreError::InvalidBounds(format!("place `{name}` already exists")));
        }
        places.insert(*ty, out.add_place(&name, &[ty.as_str()]));
    }
    let mut m = Marking::for_net(&out);
    for (p, ms) in m0.iter() {
        for (tuple, k) in ms.iter() {
            m.add(p, tuple.clone(), k);
        }
    }
    let mut used: BTreeSet<Value> = m0.values();
    used.extend(net.constants());
    for (ty, p) in &places {
        let mut i = 0;
        let mut added = 0;
        while added < b {
            let v = Value::pool(*ty, i);
            i += 1;
            if used.insert(v) {
                m.add(*p, vec![v], 1);
                added += 1;
            }
        }
    }
    for t in &mut out.transitions {
        let fresh = t.fresh_vars();
        for arc in &mut t.outputs {
            for insc in &mut arc.inscriptions {
                unfresh(&mut insc.terms);
            }
        }
        for v in fresh {
            let p = places[&v.ty];
            let insc = Inscription::new(1, vec![InscTerm::Var(v)]);
            match t.inputs.iter_mut().find(|a| a.place == p) {
                Some(a) => a.inscriptions.push(insc),
                None => t.inputs.push(Arc::new(p, vec![insc])),
            }
        }
    }
    Ok((out, m))
}

/// A cycle in the foreign-key graph, if there is one.
pub fn fk_cycle(schema: &CatalogSchema) -> Option<Vec<Sym>> {
    let succ = |r: Sym| -> Vec<Sym> { schema.relation(r).map(|rs| rs.fks.iter().map(|f| f.target).collect()).unwrap_or_default() };
    // 0 unvisited, 1 on stack, 2 done
    let mut state: BTreeMap<Sym, u8> = BTreeMap::new();
    fn dfs(r: Sym, succ: &dyn Fn(Sym) -> Vec<Sym>, state: &mut BTreeMap<Sym, u8>, stack: &mut Vec<Sym>) -> Option<Vec<Sym>> {
        state.insert(r, 1);
        stack.push(r);
        for s in succ(r) {
            match state.get(&s).copied().unwrap_or(0) {
                1 => {
                    let from = stack.iter().position(|x| *x == s).unwrap_or(0);
                    return Some(stack[from..].to_vec());
                }
                0 => {
                    if let Some(c) = dfs(s, succ, state, stack) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        stack.pop();
        state.insert(r, 2);
        None
    }
    for r in &schema.relations {
        if state.get(&r.name).copied().unwrap_or(0) == 0 {
            if let Some(c) = dfs(r.name, &succ, &mut state, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}
