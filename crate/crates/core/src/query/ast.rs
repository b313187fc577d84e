use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::Value;
use crate::report::Loc;
use crate::Sym;

/// A typed variable. Two variables are the same iff name and type agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    pub name: Sym,
    pub ty: Sym,
}

impl Var {
    pub fn new(name: &str, ty: &str) -> Var {
        Var { name: Sym::new(name), ty: Sym::new(ty) }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Var),
    Const(Value),
}

impl Term {
    pub fn ty(&self) -> Sym {
        match self {
            Term::Var(v) => v.ty,
            Term::Const(c) => c.ty,
        }
    }

    pub fn as_var(&self) -> Option<Var> {
        match self {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        }
    }

    pub fn eval(&self, theta: &Substitution) -> Option<Value> {
        match self {
            Term::Var(v) => theta.get(v.name),
            Term::Const(c) => Some(*c),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) if c.pool_index().is_some() => write!(f, "{c}"),
            Term::Const(c) => write!(f, "'{c}'"),
        }
    }
}

/// Boolean combinations of typed equalities.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    True,
    Eq(Term, Term),
    Not(Box<Condition>),
    And(Vec<Condition>),
}

impl Condition {
    pub fn eq(a: Term, b: Term) -> Condition {
        Condition::Eq(a, b)
    }

    pub fn neq(a: Term, b: Term) -> Condition {
        Condition::Not(Box::new(Condition::Eq(a, b)))
    }

    pub fn and(parts: Vec<Condition>) -> Condition {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Condition::True => {}
                Condition::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => Condition::True,
            1 => flat.pop().unwrap_or(Condition::True),
            _ => Condition::And(flat),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Condition::True)
    }

    pub fn vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Condition::True => {}
            Condition::Eq(a, b) => {
                out.extend(a.as_var());
                out.extend(b.as_var());
            }
            Condition::Not(c) => c.vars(out),
            Condition::And(cs) => cs.iter().for_each(|c| c.vars(out)),
        }
    }

    pub fn consts(&self, out: &mut BTreeSet<Value>) {
        match self {
            Condition::True => {}
            Condition::Eq(a, b) => {
                for t in [a, b] {
                    if let Term::Const(c) = t {
                        out.insert(*c);
                    }
                }
            }
            Condition::Not(c) => c.consts(out),
            Condition::And(cs) => cs.iter().for_each(|c| c.consts(out)),
        }
    }

    /// Conjuncts of a top-level conjunction.
    pub fn conjuncts(&self) -> Vec<&Condition> {
        match self {
            Condition::True => Vec::new(),
            Condition::And(cs) => cs.iter().flat_map(|c| c.conjuncts()).collect(),
            other => vec![other],
        }
    }

    pub fn map_terms(&self, f: &mut impl FnMut(&Term) -> Term) -> Condition {
        match self {
            Condition::True => Condition::True,
            Condition::Eq(a, b) => Condition::Eq(f(a), f(b)),
            Condition::Not(c) => Condition::Not(Box::new(c.map_terms(f))),
            Condition::And(cs) => Condition::And(cs.iter().map(|c| c.map_terms(f)).collect()),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::True => f.write_str("true"),
            Condition::Eq(a, b) => write!(f, "{a} = {b}"),
            Condition::Not(c) => match &**c {
                Condition::Eq(a, b) => write!(f, "{a} != {b}"),
                inner => write!(f, "not ({inner})"),
            },
            Condition::And(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" and ")?;
                    }
                    match c {
                        Condition::And(_) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub relation: Sym,
    pub args: Vec<Term>,
    pub loc: Loc,
}

impl Atom {
    pub fn new(relation: &str, args: Vec<Term>) -> Atom {
        Atom { relation: Sym::new(relation), args, loc: Loc::NONE }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Query syntax tree as written: `φ | R(x..) | ¬R(x..) | Q ∧ Q | ∃x.Q`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueryExpr {
    Cond(Condition),
    Atom(Atom),
    NegAtom(Atom),
    And(Vec<QueryExpr>),
    Exists(Var, Box<QueryExpr>),
}

impl QueryExpr {
    pub fn exists(vars: &[Var], body: QueryExpr) -> QueryExpr {
        vars.iter().rev().fold(body, |q, v| QueryExpr::Exists(*v, Box::new(q)))
    }

    /// Free variables of the tree.
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<Sym>, out: &mut BTreeSet<Var>) {
        let mut add = |t: &Term, bound: &Vec<Sym>| {
            if let Term::Var(v) = t {
                if !bound.contains(&v.name) {
                    out.insert(*v);
                }
            }
        };
        match self {
            QueryExpr::Cond(c) => {
                let mut vs = BTreeSet::new();
                c.vars(&mut vs);
                for v in vs {
                    add(&Term::Var(v), bound);
                }
            }
            QueryExpr::Atom(a) | QueryExpr::NegAtom(a) => a.args.iter().for_each(|t| add(t, bound)),
            QueryExpr::And(qs) => qs.iter().for_each(|q| q.collect_free(bound, out)),
            QueryExpr::Exists(v, q) => {
                bound.push(v.name);
                q.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Prenex normal form. Bound variables whose names clash with other
    /// variables of the query are renamed apart (`c` becomes `c_1`, ...).
    pub fn normalize(&self) -> ConjunctiveQuery {
        let mut used: BTreeSet<Sym> = BTreeSet::new();
        self.all_names(&mut used);
        let mut taken: BTreeSet<Sym> = self.free_vars().iter().map(|v| v.name).collect();
        let mut cq = ConjunctiveQuery::default();
        let mut conds = Vec::new();
        self.flatten(&mut BTreeMap::new(), &mut used, &mut taken, &mut cq, &mut conds);
        cq.condition = Condition::and(conds);
        cq
    }

    fn all_names(&self, out: &mut BTreeSet<Sym>) {
        match self {
            QueryExpr::Cond(c) => {
                let mut vs = BTreeSet::new();
                c.vars(&mut vs);
                out.extend(vs.iter().map(|v| v.name));
            }
            QueryExpr::Atom(a) | QueryExpr::NegAtom(a) => {
                out.extend(a.args.iter().filter_map(|t| t.as_var()).map(|v| v.name))
            }
            QueryExpr::And(qs) => qs.iter().for_each(|q| q.all_names(out)),
            QueryExpr::Exists(v, q) => {
                out.insert(v.name);
                q.all_names(out);
            }
        }
    }

    fn flatten(
        &self,
        renaming: &mut BTreeMap<Sym, Var>,
        used: &mut BTreeSet<Sym>,
        taken: &mut BTreeSet<Sym>,
        cq: &mut ConjunctiveQuery,
        conds: &mut Vec<Condition>,
    ) {
        let mut rename = |t: &Term| match t {
            Term::Var(v) => Term::Var(renaming.get(&v.name).copied().unwrap_or(*v)),
            c => *c,
        };
        match self {
            QueryExpr::Cond(c) => conds.push(c.map_terms(&mut rename)),
            QueryExpr::Atom(a) => cq.literals.push(Literal {
                positive: true,
                atom: Atom { relation: a.relation, args: a.args.iter().map(rename).collect(), loc: a.loc.clone() },
            }),
            QueryExpr::NegAtom(a) => cq.literals.push(Literal {
                positive: false,
                atom: Atom { relation: a.relation, args: a.args.iter().map(rename).collect(), loc: a.loc.clone() },
            }),
            QueryExpr::And(qs) => {
                for q in qs {
                    q.flatten(renaming, used, taken, cq, conds);
                }
            }
            QueryExpr::Exists(v, q) => {
                let fresh = if taken.contains(&v.name) {
                    let mut i = 1;
                    loop {
                        let cand = Sym::new(&format!("{}_{}", v.name, i));
                        if !used.contains(&cand) && !taken.contains(&cand) {
                            break cand;
                        }
                        i += 1;
                    }
                } else {
                    v.name
                };
                taken.insert(fresh);
                used.insert(fresh);
                let nv = Var { name: fresh, ty: v.ty };
                cq.exists.push(nv);
                let saved = renaming.insert(v.name, nv);
                q.flatten(renaming, used, taken, cq, conds);
                match saved {
                    Some(s) => renaming.insert(v.name, s),
                    None => renaming.remove(&v.name),
                };
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

/// Prenex conjunctive query: `∃ exists. (literals ∧ condition)`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConjunctiveQuery {
    pub exists: Vec<Var>,
    pub literals: Vec<Literal>,
    pub condition: Condition,
}

impl Default for Condition {
    fn default() -> Condition {
        Condition::True
    }
}

impl ConjunctiveQuery {
    pub fn atom(relation: &str, args: Vec<Term>) -> ConjunctiveQuery {
        ConjunctiveQuery {
            exists: Vec::new(),
            literals: vec![Literal { positive: true, atom: Atom::new(relation, args) }],
            condition: Condition::True,
        }
    }

    /// Every variable occurring in the body, bound or free.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for l in &self.literals {
            out.extend(l.atom.args.iter().filter_map(|t| t.as_var()));
        }
        self.condition.vars(&mut out);
        out.extend(self.exists.iter().copied());
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let bound: BTreeSet<Sym> = self.exists.iter().map(|v| v.name).collect();
        self.vars().into_iter().filter(|v| !bound.contains(&v.name)).collect()
    }

    pub fn consts(&self) -> BTreeSet<Value> {
        let mut out = BTreeSet::new();
        for l in &self.literals {
            for t in &l.atom.args {
                if let Term::Const(c) = t {
                    out.insert(*c);
                }
            }
        }
        self.condition.consts(&mut out);
        out
    }

    /// Back to a syntax tree (used by the printer and the oracles).
    pub fn to_expr(&self) -> QueryExpr {
        let mut parts: Vec<QueryExpr> = self
            .literals
            .iter()
            .map(|l| if l.positive { QueryExpr::Atom(l.atom.clone()) } else { QueryExpr::NegAtom(l.atom.clone()) })
            .collect();
        if !self.condition.is_true() || parts.is_empty() {
            parts.push(QueryExpr::Cond(self.condition.clone()));
        }
        let body = if parts.len() == 1 { parts.pop().unwrap_or(QueryExpr::Cond(Condition::True)) } else { QueryExpr::And(parts) };
        QueryExpr::exists(&self.exists, body)
    }
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.exists.is_empty() {
            f.write_str("exists ")?;
            for (i, v) in self.exists.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}: {}", v.name, v.ty)?;
            }
            f.write_str(". ")?;
        }
        let mut first = true;
        for l in &self.literals {
            if !first {
                f.write_str(" and ")?;
            }
            first = false;
            if !l.positive {
                f.write_str("not ")?;
            }
            write!(f, "{}", l.atom)?;
        }
        for c in self.condition.conjuncts() {
            if !first {
                f.write_str(" and ")?;
            }
            first = false;
            write!(f, "{c}")?;
        }
        if first {
            f.write_str("true")?;
        }
        Ok(())
    }
}

/// A non-empty union of conjunctive queries.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnionQuery {
    pub disjuncts: Vec<ConjunctiveQuery>,
}

impl UnionQuery {
    pub fn single(cq: ConjunctiveQuery) -> UnionQuery {
        UnionQuery { disjuncts: vec![cq] }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        self.disjuncts.iter().flat_map(|d| d.free_vars()).collect()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.disjuncts.iter().flat_map(|d| d.vars()).collect()
    }

    pub fn consts(&self) -> BTreeSet<Value> {
        self.disjuncts.iter().flat_map(|d| d.consts()).collect()
    }
}

impl fmt::Display for UnionQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.disjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(" or ")?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// A type-respecting assignment of values to variables, keyed by name.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct Substitution(pub BTreeMap<Sym, Value>);

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    pub fn get(&self, name: Sym) -> Option<Value> {
        self.0.get(&name).copied()
    }

    pub fn insert(&mut self, name: Sym, v: Value) -> Option<Value> {
        self.0.insert(name, v)
    }

    pub fn with(mut self, name: &str, v: Value) -> Substitution {
        self.0.insert(Sym::new(name), v);
        self
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Sym, Value)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }

    pub fn restrict(&self, names: impl IntoIterator<Item = Sym>) -> Substitution {
        Substitution(names.into_iter().filter_map(|n| self.get(n).map(|v| (n, v))).collect())
    }

    /// Whether the two substitutions agree on their common variables.
    pub fn compatible(&self, other: &Substitution) -> bool {
        other.iter().all(|(k, v)| self.get(k).map_or(true, |w| w == v))
    }

    pub fn merged(&self, other: &Substitution) -> Substitution {
        let mut out = self.clone();
        out.0.extend(other.iter());
        out
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        f.write_str("}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_renames_clashing_bound_variables() {
        let x = Var::new("x", "T");
        let q = QueryExpr::And(vec![
            QueryExpr::Atom(Atom::new("R", vec![Term::Var(x)])),
            QueryExpr::Exists(x, Box::new(QueryExpr::Atom(Atom::new("S", vec![Term::Var(x)])))),
        ]);
        let cq = q.normalize();
        assert_eq!(cq.exists, vec![Var::new("x_1", "T")]);
        assert_eq!(cq.free_vars().into_iter().collect::<Vec<_>>(), vec![x]);
        assert_eq!(cq.literals[1].atom.args[0], Term::Var(Var::new("x_1", "T")));
    }
}
