use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::{CatalogInstance, Value};
use crate::net::{Marking, Net, PlaceId};
use crate::query::{typecheck_condition, Atom, Condition, Substitution, Term, Var};
use crate::report::{Diagnostic, Loc};
use crate::Sym;

/// Body of a coverability property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropFormula {
    /// `[p ≥ c]`: at least `c` tokens in `p`.
    Count { place: Sym, min: u32 },
    /// `[p(t1..tn) ≥ c]`: at least `c` tokens carrying the tuple.
    Tokens { place: Sym, args: Vec<Term>, min: u32 },
    Rel(Atom),
    Cond(Condition),
    Not(Box<PropFormula>),
    And(Vec<PropFormula>),
}

/// `∃ vars. body`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Property {
    pub name: Sym,
    pub vars: Vec<Var>,
    pub body: PropFormula,
    pub loc: Loc,
}

impl PropFormula {
    fn walk<'a>(&'a self, f: &mut impl FnMut(&'a PropFormula, bool), positive: bool) {
        f(self, positive);
        match self {
            PropFormula::Not(inner) => inner.walk(f, !positive),
            PropFormula::And(parts) => parts.iter().for_each(|p| p.walk(f, positive)),
            _ => {}
        }
    }

    pub fn terms(&self) -> Vec<Term> {
        let mut out = Vec::new();
        self.walk(
            &mut |p, _| match p {
                PropFormula::Tokens { args, .. } => out.extend(args.iter().copied()),
                PropFormula::Rel(a) => out.extend(a.args.iter().copied()),
                PropFormula::Cond(c) => {
                    let mut vs = BTreeSet::new();
                    c.vars(&mut vs);
                    out.extend(vs.into_iter().map(Term::Var));
                    let mut cs = BTreeSet::new();
                    c.consts(&mut cs);
                    out.extend(cs.into_iter().map(Term::Const));
                }
                _ => {}
            },
            true,
        );
        out
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&PropFormula> {
        match self {
            PropFormula::And(parts) => parts.iter().flat_map(|p| p.conjuncts()).collect(),
            other => vec![other],
        }
    }
}

impl Property {
    pub fn constants(&self) -> BTreeSet<Value> {
        self.body.terms().into_iter().filter_map(|t| if let Term::Const(c) = t { Some(c) } else { None }).collect()
    }

    /// Checks places, arities and types against the net, and that every
    /// variable occurs in some place atom.
    pub fn typecheck(&self, net: &Net) -> Vec<Diagnostic> {
        let mut errs = Vec::new();
        let declared: BTreeMap<Sym, Sym> = self.vars.iter().map(|v| (v.name, v.ty)).collect();
        let mut in_place_atom = BTreeSet::new();
        self.body.walk(
            &mut |p, _| match p {
                PropFormula::Count { place, .. } => {
                    if net.place_id(place.as_str()).is_none() {
                        errs.push(Diagnostic::error("unknown-place", format!("property `{}` mentions unknown place `{}`", self.name, place)).at(&self.loc));
                    }
                }
                PropFormula::Tokens { place, args, .. } => match net.place_id(place.as_str()) {
                    None => errs.push(Diagnostic::error("unknown-place", format!("property `{}` mentions unknown place `{}`", self.name, place)).at(&self.loc)),
                    Some(pid) => {
                        let color = &net.place(pid).color;
                        if color.len() != args.len() {
                            errs.push(Diagnostic::error(
                                "arity-mismatch",
                                format!("atom on `{}` has {} arguments but the place color has arity {}", place, args.len(), color.len()),
                            ).at(&self.loc));
                        } else {
                            for (a, ty) in args.iter().zip(color) {
                                if a.ty() != *ty {
                                    errs.push(Diagnostic::error(
                                        "type-mismatch",
                                        format!("`{}` has type `{}` but place `{}` expects `{}`", a, a.ty(), place, ty),
                                    ).at(&self.loc));
                                }
                            }
                        }
                        in_place_atom.extend(args.iter().filter_map(|a| a.as_var()).map(|v| v.name));
                    }
                },
                PropFormula::Rel(atom) => {
                    let q = crate::query::UnionQuery::single(crate::query::ConjunctiveQuery {
                        exists: Vec::new(),
                        literals: vec![crate::query::Literal { positive: true, atom: atom.clone() }],
                        condition: Condition::True,
                    });
                    if let Err(es) = crate::query::typecheck_query(&net.schema, &q) {
                        errs.extend(es.iter().map(|e| e.to_diagnostic().at(&self.loc)));
                    }
                }
                PropFormula::Cond(c) => {
                    errs.extend(typecheck_condition(&net.schema, c, &self.loc).iter().map(|e| e.to_diagnostic()));
                }
                _ => {}
            },
            true,
        );
        for t in self.body.terms() {
            if let Term::Var(v) = t {
                match declared.get(&v.name) {
                    None => errs.push(Diagnostic::error("undeclared-variable", format!("variable `{}` of property `{}` is not quantified", v.name, self.name)).at(&self.loc)),
                    Some(ty) if *ty != v.ty => errs.push(Diagnostic::error(
                        "inconsistent-variable-type",
                        format!("variable `{}` used with types `{}` and `{}`", v.name, ty, v.ty),
                    ).at(&self.loc)),
                    _ => {}
                }
            }
        }
        for v in &self.vars {
            if !in_place_atom.contains(&v.name) {
                errs.push(Diagnostic::error(
                    "property-variable",
                    format!("variable `{}` of property `{}` occurs in no place atom", v.name, self.name),
                ).at(&self.loc));
            }
        }
        errs
    }
}

enum Gen {
    Tokens(PlaceId, Vec<Term>, u32),
}

/// Returns an assignment of ψ's variables satisfying its body in `m`, or `None`.
///
/// Place atoms in positive top-level position drive the search; remaining
/// variables range over `Val(m) ∪ Val(Cat)` and the property's constants.
pub fn eval_property(psi: &Property, net: &Net, m: &Marking, cat: &CatalogInstance) -> Option<Substitution> {
    let gens: Vec<Gen> = psi
        .body
        .conjuncts()
        .into_iter()
        .filter_map(|c| match c {
            PropFormula::Tokens { place, args, min } => {
                net.place_id(place.as_str()).map(|p| Gen::Tokens(p, args.clone(), *min))
            }
            _ => None,
        })
        .collect();
    let mut found = None;
    search(psi, net, m, cat, &gens, 0, &mut Substitution::new(), &mut found);
    found
}

#[allow(clippy::too_many_arguments)]
fn search(
    psi: &Property,
    net: &Net,
    m: &Marking,
    cat: &CatalogInstance,
    gens: &[Gen],
    i: usize,
    theta: &mut Substitution,
    found: &mut Option<Substitution>,
) {
    if found.is_some() {
        return;
    }
    if i == gens.len() {
        let rest: Vec<Var> = psi.vars.iter().filter(|v| theta.get(v.name).is_none()).copied().collect();
        if rest.is_empty() {
            if holds(&psi.body, net, m, cat, theta) {
                *found = Some(theta.clone());
            }
            return;
        }
        let mut pool: BTreeSet<Value> = m.values();
        pool.extend(cat.values());
        pool.extend(psi.constants());
        enumerate(psi, net, m, cat, &rest, &pool, theta, found);
        return;
    }
    let Gen::Tokens(p, args, min) = &gens[i];
    for (tuple, count) in m.tokens(*p).iter() {
        if count < *min || tuple.len() != args.len() {
            continue;
        }
        let mut newly = Vec::new();
        let mut ok = true;
        for (a, v) in args.iter().zip(tuple) {
            match a {
                Term::Const(c) => ok &= c == v,
                Term::Var(x) => match theta.get(x.name) {
                    Some(b) => ok &= b == *v,
                    None => {
                        theta.insert(x.name, *v);
                        newly.push(x.name);
                    }
                },
            }
            if !ok {
                break;
            }
        }
        if ok {
            search(psi, net, m, cat, gens, i + 1, theta, found);
        }
        for n in newly {
            theta.0.remove(&n);
        }
        if found.is_some() {
            return;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    psi: &Property,
    net: &Net,
    m: &Marking,
    cat: &CatalogInstance,
    rest: &[Var],
    pool: &BTreeSet<Value>,
    theta: &mut Substitution,
    found: &mut Option<Substitution>,
) {
    let Some((v, tail)) = rest.split_first() else {
        if holds(&psi.body, net, m, cat, theta) {
            *found = Some(theta.clone());
        }
        return;
    };
    for val in pool.iter().filter(|x| x.ty == v.ty) {
        theta.insert(v.name, *val);
        enumerate(psi, net, m, cat, tail, pool, theta, found);
        if found.is_some() {
            return;
        }
    }
    theta.0.remove(&v.name);
}

fn holds(f: &PropFormula, net: &Net, m: &Marking, cat: &CatalogInstance, theta: &Substitution) -> bool {
    let ground = |args: &[Term]| -> Option<Vec<Value>> { args.iter().map(|a| a.eval(theta)).collect() };
    match f {
        PropFormula::Count { place, min } => {
            net.place_id(place.as_str()).is_some_and(|p| m.tokens(p).len() >= *min as usize)
        }
        PropFormula::Tokens { place, args, min } => match (net.place_id(place.as_str()), ground(args)) {
            (Some(p), Some(t)) => m.tokens(p).count(&t) >= *min,
            _ => false,
        },
        PropFormula::Rel(a) => ground(&a.args).is_some_and(|t| cat.contains(a.relation, &t)),
        PropFormula::Cond(c) => crate::query::evaluate_condition(c, theta).unwrap_or(false),
        PropFormula::Not(inner) => !holds(inner, net, m, cat, theta),
        PropFormula::And(parts) => parts.iter().all(|p| holds(p, net, m, cat, theta)),
    }
}

impl fmt::Display for PropFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PropFormula::Count { place, min } => write!(f, "{} >= {}", crate::dsl::quote_name(place.as_str()), min),
            PropFormula::Tokens { place, args, min } => {
                write!(f, "{}(", crate::dsl::quote_name(place.as_str()))?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ") >= {min}")
            }
            PropFormula::Rel(a) => write!(f, "{a}"),
            PropFormula::Cond(c) => match c {
                Condition::And(_) => write!(f, "({c})"),
                _ => write!(f, "{c}"),
            },
            PropFormula::Not(inner) => match &**inner {
                PropFormula::And(_) => write!(f, "not ({inner})"),
                _ => write!(f, "not {inner}"),
            },
            PropFormula::And(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" and ")?;
                    }
                    match p {
                        PropFormula::And(_) => write!(f, "({p})")?,
                        _ => write!(f, "{p}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.vars.is_empty() {
            f.write_str("exists ")?;
            for (i, v) in self.vars.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}: {}", v.name, v.ty)?;
            }
            f.write_str(". ")?;
        }
        write!(f, "{}", self.body)
    }
}
