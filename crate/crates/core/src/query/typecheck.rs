use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::model::CatalogSchema;
use crate::report::{Diagnostic, Loc};
use crate::Sym;

use super::ast::{Atom, Condition, ConjunctiveQuery, Term, UnionQuery, Var};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeError {
    pub code: &'static str,
    pub message: String,
    pub loc: Loc,
}

impl TypeError {
    fn new(code: &'static str, message: String, loc: &Loc) -> TypeError {
        TypeError { code, message, loc: loc.clone() }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        Diagnostic::error(self.code, self.message.clone()).at(&self.loc)
    }
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

/// A query that passed type checking, with its free-variable signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedQuery {
    pub query: UnionQuery,
    pub free: Vec<Var>,
}

fn check_term(schema: &CatalogSchema, t: &Term, loc: &Loc, errs: &mut Vec<TypeError>) {
    match t {
        Term::Var(v) => {
            if !schema.types.contains(v.ty) {
                errs.push(TypeError::new(
                    "unknown-type",
                    format!("variable `{}` has unknown type `{}`", v.name, v.ty),
                    loc,
                ));
            }
        }
        Term::Const(c) => {
            if !schema.types.admits(c) {
                errs.push(TypeError::new(
                    "value-out-of-domain",
                    format!("constant `{}` is not a value of type `{}`", c, c.ty),
                    loc,
                ));
            }
        }
    }
}

fn check_atom(schema: &CatalogSchema, a: &Atom, errs: &mut Vec<TypeError>) {
    let Some(rs) = schema.relation(a.relation) else {
        errs.push(TypeError::new("unknown-relation", format!("unknown relation `{}` in {}", a.relation, a), &a.loc));
        return;
    };
    if rs.arity() != a.args.len() {
        errs.push(TypeError::new(
            "arity-mismatch",
            format!("{} has {} arguments, `{}` has arity {}", a, a.args.len(), a.relation, rs.arity()),
            &a.loc,
        ));
        return;
    }
    for (t, attr) in a.args.iter().zip(&rs.attrs) {
        check_term(schema, t, &a.loc, errs);
        if t.ty() != attr.ty {
            errs.push(TypeError::new(
                "type-mismatch",
                format!(
                    "in {}: `{}` has type `{}` but attribute `{}.{}` has type `{}`",
                    a,
                    t,
                    t.ty(),
                    a.relation,
                    attr.name,
                    attr.ty
                ),
                &a.loc,
            ));
        }
    }
}

/// Operand types of every equality must agree.
pub fn typecheck_condition(schema: &CatalogSchema, c: &Condition, loc: &Loc) -> Vec<TypeError> {
    let mut errs = Vec::new();
    check_condition(schema, c, loc, &mut errs);
    errs
}

fn check_condition(schema: &CatalogSchema, c: &Condition, loc: &Loc, errs: &mut Vec<TypeError>) {
    match c {
        Condition::True => {}
        Condition::Eq(a, b) => {
            check_term(schema, a, loc, errs);
            check_term(schema, b, loc, errs);
            if a.ty() != b.ty() {
                errs.push(TypeError::new(
                    "type-mismatch",
                    format!("`{}` has type `{}` but `{}` has type `{}`", a, a.ty(), b, b.ty()),
                    loc,
                ));
            }
        }
        Condition::Not(inner) => check_condition(schema, inner, loc, errs),
        Condition::And(cs) => cs.iter().for_each(|c| check_condition(schema, c, loc, errs)),
    }
}

fn check_cq(schema: &CatalogSchema, cq: &ConjunctiveQuery, loc: &Loc, errs: &mut Vec<TypeError>) {
    for l in &cq.literals {
        check_atom(schema, &l.atom, errs);
    }
    check_condition(schema, &cq.condition, loc, errs);

    let mut names: BTreeMap<Sym, Sym> = BTreeMap::new();
    for v in cq.vars() {
        if let Some(prev) = names.insert(v.name, v.ty) {
            if prev != v.ty {
                errs.push(TypeError::new(
                    "inconsistent-variable-type",
                    format!("variable `{}` used with types `{}` and `{}`", v.name, prev, v.ty),
                    loc,
                ));
            }
        }
    }
    let mut body = BTreeSet::new();
    for l in &cq.literals {
        body.extend(l.atom.args.iter().filter_map(|t| t.as_var()));
    }
    cq.condition.vars(&mut body);
    let mut seen = BTreeSet::new();
    for v in &cq.exists {
        if !seen.insert(v.name) {
            errs.push(TypeError::new("duplicate-quantifier", format!("variable `{}` quantified twice", v.name), loc));
        }
        if !body.contains(v) {
            errs.push(TypeError::new(
                "unused-quantifier",
                format!("quantified variable `{}` does not occur in the query body", v.name),
                loc,
            ));
        }
    }
}

/// Checks every atom against the schema and returns the free-variable signature.
pub fn typecheck_query(schema: &CatalogSchema, q: &UnionQuery) -> Result<TypedQuery, Vec<TypeError>> {
    typecheck_query_at(schema, q, &Loc::NONE)
}

pub(crate) fn typecheck_query_at(
    schema: &CatalogSchema,
    q: &UnionQuery,
    loc: &Loc,
) -> Result<TypedQuery, Vec<TypeError>> {
    let mut errs = Vec::new();
    if q.disjuncts.is_empty() {
        errs.push(TypeError::new("empty-union", "a union query needs at least one disjunct".into(), loc));
    }
    for d in &q.disjuncts {
        check_cq(schema, d, loc, &mut errs);
    }
    let sigs: Vec<BTreeSet<Var>> = q.disjuncts.iter().map(|d| d.free_vars()).collect();
    if let Some(first) = sigs.first() {
        for (i, s) in sigs.iter().enumerate().skip(1) {
            if s != first {
                errs.push(TypeError::new(
                    "union-signature",
                    format!("disjunct {} has a different free-variable signature than disjunct 1", i + 1),
                    loc,
                ));
            }
        }
    }
    if errs.is_empty() {
        Ok(TypedQuery { query: q.clone(), free: q.free_vars().into_iter().collect() })
    } else {
        Err(errs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{RelationSchema, TypeDomain};
    use crate::query::ast::QueryExpr;

    fn schema() -> CatalogSchema {
        CatalogSchema::new(
            TypeDomain::new().with_unbounded(&["ProdType", "CId", "TruckType", "Plate"]),
            vec![
                RelationSchema::new("ProdCat", &[("p", "ProdType")]),
                RelationSchema::new("Comp", &[("c", "CId"), ("p", "ProdType"), ("t", "TruckType")]),
            ],
        )
    }

    #[test]
    fn prodcat_free_signature() {
        let p = Var::new("p", "ProdType");
        let q = UnionQuery::single(ConjunctiveQuery::atom("ProdCat", vec![Term::Var(p)]));
        assert_eq!(typecheck_query(&schema(), &q).unwrap().free, vec![p]);
    }

    #[test]
    fn existential_comp() {
        let c = Var::new("c", "CId");
        let v = Var::new("v", "ProdType");
        let t = Var::new("t", "TruckType");
        let q = QueryExpr::exists(
            &[c],
            QueryExpr::Atom(Atom::new("Comp", vec![Term::Var(c), Term::Var(v), Term::Var(t)])),
        );
        let tq = typecheck_query(&schema(), &UnionQuery::single(q.normalize())).unwrap();
        assert_eq!(tq.free, vec![t, v]);
    }

    #[test]
    fn mismatch_names_the_atom() {
        let m = Var::new("m", "Plate");
        let q = UnionQuery::single(ConjunctiveQuery::atom("ProdCat", vec![Term::Var(m)]));
        let errs = typecheck_query(&schema(), &q).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, "type-mismatch");
        assert!(errs[0].message.contains("ProdCat(m)"));
    }
}
