//! Name resolution and type inference from the syntax tree to the model.

use std::collections::BTreeMap;

use crate::explore::{PropFormula, Property};
use crate::model::{
    Attribute, CatalogInstance, CatalogSchema, DataType, ForeignKey, RelationSchema, Tuple, TypeDomain, Value,
    ValueDomain,
};
use crate::net::{Guard, InscTerm, Inscription, Marking, Net, PlaceId, Transition};
use crate::query::{Atom, Condition, QueryExpr, Term, UnionQuery, Var};
use crate::report::{Diagnostic, Loc, SourceSpan, ValidationReport};
use crate::Sym;

use super::syntax::{Binder, Expr, InscLit, Item, Name, TermLit, TokenLit, TransItem, ValueLit};
use super::Project;

fn err(code: &'static str, msg: impl Into<String>, span: &SourceSpan) -> Diagnostic {
    Diagnostic::error(code, msg).at(&Loc::from(span.clone()))
}

/// Union-find over term occurrences, each class carrying an optional type.
#[derive(Default)]
struct Infer {
    parent: Vec<usize>,
    ty: Vec<Option<(Sym, SourceSpan)>>,
}

impl Infer {
    fn node(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.ty.push(None);
        self.parent.len() - 1
    }

    fn find(&mut self, n: usize) -> usize {
        let mut r = n;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut c = n;
        while self.parent[c] != r {
            let next = self.parent[c];
            self.parent[c] = r;
            c = next;
        }
        r
    }

    fn constrain(&mut self, n: usize, ty: Sym, span: &SourceSpan, what: &str) -> Result<(), Diagnostic> {
        let r = self.find(n);
        match &self.ty[r] {
            None => {
                self.ty[r] = Some((ty, span.clone()));
                Ok(())
            }
            Some((t, _)) if *t == ty => Ok(()),
            Some((t, at)) => Err(err(
                "type-conflict",
                format!("{what} has type `{ty}` here but type `{t}` at {at}"),
                span,
            )),
        }
    }

    fn unify(&mut self, a: usize, b: usize, span: &SourceSpan, what: &str) -> Result<(), Diagnostic> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return Ok(());
        }
        let tb = self.ty[rb].take();
        self.parent[rb] = ra;
        if let Some((t, s)) = tb {
            if self.ty[ra].is_none() {
                self.ty[ra] = Some((t, s));
            } else {
                self.constrain(ra, t, span, what)?;
            }
        }
        Ok(())
    }

    fn get(&mut self, n: usize) -> Option<Sym> {
        let r = self.find(n);
        self.ty[r].as_ref().map(|(t, _)| *t)
    }
}

/// A term occurrence with its inference node.
#[derive(Clone)]
enum ITerm {
    Var(Name, usize),
    Fresh(Name, usize),
    Const(ValueLit, usize),
}

impl ITerm {
    fn node(&self) -> usize {
        match self {
            ITerm::Var(_, n) | ITerm::Fresh(_, n) | ITerm::Const(_, n) => *n,
        }
    }

    fn span(&self) -> &SourceSpan {
        match self {
            ITerm::Var(n, _) | ITerm::Fresh(n, _) => &n.span,
            ITerm::Const(v, _) => v.span(),
        }
    }

    fn describe(&self) -> String {
        match self {
            ITerm::Var(n, _) | ITerm::Fresh(n, _) => format!("variable `{}`", n.text),
            ITerm::Const(ValueLit::Named(n), _) => format!("constant '{}'", n.text),
            ITerm::Const(ValueLit::Pool(t, i, _), _) => format!("constant {}#{}", t.text, i),
        }
    }
}

enum IExpr {
    Or(Vec<IExpr>),
    And(Vec<IExpr>),
    Not(Box<IExpr>, SourceSpan),
    Exists(Vec<(Name, usize)>, Box<IExpr>),
    True,
    Atom(Name, Vec<ITerm>),
    PlaceAtom(Name, Option<Vec<ITerm>>, u32),
    Cmp(ITerm, ITerm, bool),
}

struct Scope {
    /// Transition-level or property-level variables.
    outer: BTreeMap<String, usize>,
    /// Quantifier binders, innermost last.
    bound: Vec<(String, usize)>,
    /// Whether unknown names create new outer variables.
    open: bool,
}

impl Scope {
    fn lookup(&self, name: &str) -> Option<usize> {
        self.bound.iter().rev().find(|(n, _)| n == name).map(|(_, id)| *id).or_else(|| self.outer.get(name).copied())
    }
}

pub(super) struct Resolver {
    report: ValidationReport,
    types: TypeDomain,
    relations: Vec<RelationSchema>,
    /// Owners of finite-type constant names, for constants without context.
    finite_owner: BTreeMap<String, Vec<Sym>>,
    net: Net,
}

impl Resolver {
    pub(super) fn resolve(items: &[Item]) -> Result<Project, ValidationReport> {
        let mut r = Resolver {
            report: ValidationReport::new(),
            types: TypeDomain::new(),
            relations: Vec::new(),
            finite_owner: BTreeMap::new(),
            net: Net::new(CatalogSchema::default()),
        };
        for item in items {
            r.declare(item);
        }
        r.net.schema = CatalogSchema::new(r.types.clone(), r.relations.clone());
        for item in items {
            if let Item::Place { name, color } = item {
                r.place(name, color);
            }
        }
        let mut transitions = Vec::new();
        for item in items {
            if let Item::Transition { name, items } = item {
                if let Some(t) = r.transition(name, items) {
                    transitions.push(t);
                }
            }
        }
        for t in transitions {
            r.net.add_transition(t);
        }
        let mut catalog = CatalogInstance::new();
        let mut marking = Marking::for_net(&r.net);
        let mut properties = Vec::new();
        for item in items {
            match item {
                Item::Facts { relation, tuples } => r.facts(relation, tuples, &mut catalog),
                Item::Marking { entries, .. } => r.marking(entries, &mut marking),
                Item::Property { name, body } => {
                    if properties.iter().any(|p: &Property| p.name.as_str() == name.text) {
                        r.report.push(err("duplicate-property", format!("property `{}` is declared twice", name.text), &name.span));
                    }
                    if let Some(p) = r.property(name, body) {
                        properties.push(p);
                    }
                }
                _ => {}
            }
        }
        if r.report.has_errors() {
            return Err(r.report);
        }
        Ok(Project { net: r.net, catalog, marking, properties })
    }

    fn declare(&mut self, item: &Item) {
        match item {
            Item::Type { name, values } => {
                let domain = match values {
                    None => ValueDomain::Unbounded,
                    Some(vs) => {
                        for v in vs {
                            self.finite_owner.entry(v.text.clone()).or_default().push(Sym::new(&name.text));
                        }
                        ValueDomain::Finite(vs.iter().map(|v| Sym::new(&v.text)).collect())
                    }
                };
                self.types.types.push(DataType { name: Sym::new(&name.text), domain, loc: name.span.clone().into() });
            }
            Item::Relation { name, attrs } => {
                let keys: Vec<usize> = attrs.iter().enumerate().filter(|(_, a)| a.key).map(|(i, _)| i).collect();
                if keys.len() > 1 {
                    self.report.push(err(
                        "multiple-keys",
                        format!("relation `{}` marks {} attributes as `key`", name.text, keys.len()),
                        &attrs[keys[1]].name.span,
                    ));
                }
                self.relations.push(RelationSchema {
                    name: Sym::new(&name.text),
                    attrs: attrs
                        .iter()
                        .map(|a| Attribute { name: Sym::new(&a.name.text), ty: Sym::new(&a.ty.text), loc: a.ty.span.clone().into() })
                        .collect(),
                    key: keys.first().copied().unwrap_or(0),
                    fks: attrs
                        .iter()
                        .enumerate()
                        .filter_map(|(i, a)| {
                            a.fk.as_ref().map(|t| ForeignKey { attr: i, target: Sym::new(&t.text), loc: t.span.clone().into() })
                        })
                        .collect(),
                    loc: name.span.clone().into(),
                });
            }
            _ => {}
        }
    }

    fn check_type(&mut self, name: &Name) -> Option<Sym> {
        let s = Sym::new(&name.text);
        if self.types.contains(s) {
            Some(s)
        } else {
            self.report.push(err("unknown-type", format!("unknown type `{}`", name.text), &name.span));
            None
        }
    }

    fn place(&mut self, name: &Name, color: &[Name]) {
        let mut tys = Vec::new();
        for c in color {
            if let Some(t) = self.check_type(c) {
                tys.push(t);
            }
        }
        if tys.len() != color.len() {
            return;
        }
        if self.net.place_id(&name.text).is_some() {
            self.report.push(err("duplicate-place", format!("place `{}` is declared twice", name.text), &name.span));
            return;
        }
        let names: Vec<&str> = tys.iter().map(|t| t.as_str()).collect();
        let id = self.net.add_place(&name.text, &names);
        self.net.places[id.0].loc = name.span.clone().into();
    }

    fn place_ref(&mut self, name: &Name) -> Option<PlaceId> {
        let id = self.net.place_id(&name.text);
        if id.is_none() {
            self.report.push(err("unknown-place", format!("unknown place `{}`", name.text), &name.span));
        }
        id
    }

    fn relation_ref(&mut self, name: &Name) -> Option<RelationSchema> {
        let r = self.relations.iter().find(|r| r.name.as_str() == name.text).cloned();
        if r.is_none() {
            let hint = if self.net.place_id(&name.text).is_some() { " (place atoms are written `p(..) >= n`)" } else { "" };
            self.report.push(err("unknown-relation", format!("unknown relation `{}`{hint}", name.text), &name.span));
        }
        r
    }

    // ---- values in facts and markings ----

    fn value(&mut self, lit: &ValueLit, ty: Sym) -> Option<Value> {
        match lit {
            ValueLit::Named(n) => Some(Value::named(ty, n.text.as_str())),
            ValueLit::Pool(t, i, span) => {
                if t.text != ty.as_str() {
                    self.report.push(err(
                        "type-mismatch",
                        format!("value {}#{} has type `{}` but `{}` is expected", t.text, i, t.text, ty),
                        span,
                    ));
                    return None;
                }
                if !self.types.is_unbounded(ty) {
                    self.report.push(err("value-out-of-domain", format!("finite type `{ty}` has no pool values"), span));
                    return None;
                }
                Some(Value::pool(ty, *i))
            }
        }
    }

    fn tuple(&mut self, lit: &TokenLit, tys: &[Sym], what: &str) -> Option<Tuple> {
        if lit.values.len() != tys.len() {
            self.report.push(err(
                "arity-mismatch",
                format!("tuple has {} components but {what} has arity {}", lit.values.len(), tys.len()),
                &lit.span,
            ));
            return None;
        }
        lit.values.iter().zip(tys).map(|(v, t)| self.value(v, *t)).collect::<Vec<_>>().into_iter().collect()
    }

    fn facts(&mut self, relation: &Name, tuples: &[TokenLit], cat: &mut CatalogInstance) {
        let Some(rel) = self.relation_ref(relation) else { return };
        let tys: Vec<Sym> = rel.attr_types().collect();
        for t in tuples {
            if let Some(tuple) = self.tuple(t, &tys, &format!("relation `{}`", rel.name)) {
                cat.insert(rel.name, tuple);
            }
        }
    }

    fn marking(&mut self, entries: &[(Name, Vec<TokenLit>)], m: &mut Marking) {
        for (place, toks) in entries {
            let Some(pid) = self.place_ref(place) else { continue };
            let color = self.net.place(pid).color.clone();
            for t in toks {
                if t.mult == 0 {
                    self.report.push(err("zero-multiplicity", "token multiplicity must be positive", &t.span));
                    continue;
                }
                if let Some(tuple) = self.tuple(t, &color, &format!("place `{}`", place.text)) {
                    m.add(pid, tuple, t.mult);
                }
            }
        }
    }

    // ---- inference walk ----

    fn term(&mut self, inf: &mut Infer, scope: &mut Scope, t: &TermLit) -> Option<ITerm> {
        match t {
            TermLit::Const(v) => Some(ITerm::Const(v.clone(), inf.node())),
            TermLit::Var(n) | TermLit::Fresh(n) => {
                let id = match scope.lookup(&n.text) {
                    Some(id) => id,
                    None if scope.open => {
                        let id = inf.node();
                        scope.outer.insert(n.text.clone(), id);
                        id
                    }
                    None => {
                        self.report.push(err("undeclared-variable", format!("variable `{}` is not quantified", n.text), &n.span));
                        return None;
                    }
                };
                Some(if matches!(t, TermLit::Fresh(_)) { ITerm::Fresh(n.clone(), id) } else { ITerm::Var(n.clone(), id) })
            }
        }
    }

    fn constrain_all(&mut self, inf: &mut Infer, terms: &[ITerm], tys: &[Sym]) {
        for (t, ty) in terms.iter().zip(tys) {
            if let Err(d) = inf.constrain(t.node(), *ty, t.span(), &t.describe()) {
                self.report.push(d);
            }
        }
        for t in terms {
            if let ITerm::Const(ValueLit::Pool(name, _, span), n) = t {
                if let Err(d) = inf.constrain(*n, Sym::new(&name.text), span, &t.describe()) {
                    self.report.push(d);
                }
            }
        }
    }

    fn expr(&mut self, inf: &mut Infer, scope: &mut Scope, e: &Expr) -> Option<IExpr> {
        Some(match e {
            Expr::Or(es) => IExpr::Or(es.iter().map(|e| self.expr(inf, scope, e)).collect::<Option<_>>()?),
            Expr::And(es) => IExpr::And(es.iter().map(|e| self.expr(inf, scope, e)).collect::<Option<_>>()?),
            Expr::Not(inner, span) => IExpr::Not(Box::new(self.expr(inf, scope, inner)?), span.clone()),
            Expr::True => IExpr::True,
            Expr::Exists(binders, body) => {
                let mut bs = Vec::new();
                for Binder { name, ty } in binders {
                    let id = inf.node();
                    if let Some(ty) = ty {
                        let t = self.check_type(ty)?;
                        if let Err(d) = inf.constrain(id, t, &ty.span, &format!("variable `{}`", name.text)) {
                            self.report.push(d);
                        }
                    }
                    bs.push((name.clone(), id));
                }
                let depth = scope.bound.len();
                scope.bound.extend(bs.iter().map(|(n, id)| (n.text.clone(), *id)));
                let body = self.expr(inf, scope, body);
                scope.bound.truncate(depth);
                IExpr::Exists(bs, Box::new(body?))
            }
            Expr::Atom { name, args } => {
                let terms: Vec<ITerm> = args.iter().map(|a| self.term(inf, scope, a)).collect::<Option<_>>()?;
                let rel = self.relation_ref(name)?;
                if rel.arity() != terms.len() {
                    self.report.push(err(
                        "arity-mismatch",
                        format!("atom has {} arguments but relation `{}` has arity {}", terms.len(), rel.name, rel.arity()),
                        &name.span,
                    ));
                    return None;
                }
                let tys: Vec<Sym> = rel.attr_types().collect();
                self.constrain_all(inf, &terms, &tys);
                IExpr::Atom(name.clone(), terms)
            }
            Expr::PlaceAtom { name, args, min } => {
                let pid = self.place_ref(name)?;
                let args = match args {
                    None => None,
                    Some(args) => {
                        let terms: Vec<ITerm> = args.iter().map(|a| self.term(inf, scope, a)).collect::<Option<_>>()?;
                        let color = self.net.place(pid).color.clone();
                        if color.len() != terms.len() {
                            self.report.push(err(
                                "arity-mismatch",
                                format!("atom has {} arguments but place `{}` has color arity {}", terms.len(), name.text, color.len()),
                                &name.span,
                            ));
                            return None;
                        }
                        self.constrain_all(inf, &terms, &color);
                        Some(terms)
                    }
                };
                IExpr::PlaceAtom(name.clone(), args, *min)
            }
            Expr::Cmp { lhs, rhs, equal } => {
                let l = self.term(inf, scope, lhs)?;
                let r = self.term(inf, scope, rhs)?;
                self.constrain_all(inf, &[l.clone(), r.clone()], &[]);
                if let Err(d) = inf.unify(l.node(), r.node(), r.span(), &r.describe()) {
                    self.report.push(d);
                }
                IExpr::Cmp(l, r, *equal)
            }
        })
    }

    // ---- typed construction ----

    fn typed_term(&mut self, inf: &mut Infer, t: &ITerm) -> Option<Term> {
        let ty = inf.get(t.node());
        match t {
            ITerm::Var(n, _) | ITerm::Fresh(n, _) => match ty {
                Some(ty) => Some(Term::Var(Var { name: Sym::new(&n.text), ty })),
                None => {
                    self.report.push(err("uninferred-type", format!("cannot infer the type of variable `{}`", n.text), &n.span));
                    None
                }
            },
            ITerm::Const(lit, _) => {
                let ty = ty.or_else(|| match lit {
                    ValueLit::Named(n) => match self.finite_owner.get(&n.text).map(|v| v.as_slice()) {
                        Some([only]) => Some(*only),
                        _ => None,
                    },
                    ValueLit::Pool(..) => None,
                });
                match ty {
                    Some(ty) => self.value(lit, ty).map(Term::Const),
                    None => {
                        self.report.push(err("uninferred-type", format!("cannot infer the type of {}", t.describe()), t.span()));
                        None
                    }
                }
            }
        }
    }

    fn condition(&mut self, inf: &mut Infer, e: &IExpr) -> Option<Condition> {
        Some(match e {
            IExpr::True => Condition::True,
            IExpr::Cmp(l, r, equal) => {
                let (l, r) = (self.typed_term(inf, l)?, self.typed_term(inf, r)?);
                if *equal { Condition::eq(l, r) } else { Condition::neq(l, r) }
            }
            IExpr::Not(inner, _) => Condition::Not(Box::new(self.condition(inf, inner)?)),
            IExpr::And(es) => Condition::And(es.iter().map(|e| self.condition(inf, e)).collect::<Option<_>>()?),
            IExpr::Or(es) => Condition::Not(Box::new(Condition::And(
                es.iter().map(|e| self.condition(inf, e).map(|c| Condition::Not(Box::new(c)))).collect::<Option<_>>()?,
            ))),
            IExpr::Atom(n, _) | IExpr::PlaceAtom(n, _, _) => {
                self.report.push(err("atom-in-condition", format!("atom `{}` is not allowed in a condition", n.text), &n.span));
                return None;
            }
            IExpr::Exists(bs, _) => {
                self.report.push(err("quantifier-in-condition", "quantifiers are not allowed in a condition", &bs[0].0.span));
                return None;
            }
        })
    }

    fn is_condition(e: &IExpr) -> bool {
        match e {
            IExpr::True | IExpr::Cmp(..) => true,
            IExpr::Not(inner, _) => Self::is_condition(inner),
            IExpr::And(es) | IExpr::Or(es) => es.iter().all(Self::is_condition),
            _ => false,
        }
    }

    fn atom(&mut self, inf: &mut Infer, name: &Name, args: &[ITerm]) -> Option<Atom> {
        let args: Vec<Term> = args.iter().map(|a| self.typed_term(inf, a)).collect::<Option<_>>()?;
        Some(Atom { relation: Sym::new(&name.text), args, loc: name.span.clone().into() })
    }

    fn query(&mut self, inf: &mut Infer, e: &IExpr) -> Option<QueryExpr> {
        if Self::is_condition(e) {
            return self.condition(inf, e).map(QueryExpr::Cond);
        }
        Some(match e {
            IExpr::Atom(n, args) => QueryExpr::Atom(self.atom(inf, n, args)?),
            IExpr::Not(inner, span) => match &**inner {
                IExpr::Atom(n, args) => QueryExpr::NegAtom(self.atom(inf, n, args)?),
                _ => {
                    self.report.push(err("query-negation", "negation in queries applies to atoms and conditions only", span));
                    return None;
                }
            },
            IExpr::And(es) => QueryExpr::And(es.iter().map(|e| self.query(inf, e)).collect::<Option<_>>()?),
            IExpr::Exists(bs, body) => {
                let body = self.query(inf, body)?;
                let mut vars = Vec::new();
                for (n, id) in bs {
                    match inf.get(*id) {
                        Some(ty) => vars.push(Var { name: Sym::new(&n.text), ty }),
                        None => {
                            self.report.push(err("uninferred-type", format!("cannot infer the type of variable `{}`", n.text), &n.span));
                            return None;
                        }
                    }
                }
                QueryExpr::exists(&vars, body)
            }
            IExpr::Or(es) => {
                self.report.push(err("nested-disjunction", "`or` may only appear at the top level of a query", &first_span(&es[0])));
                return None;
            }
            IExpr::PlaceAtom(n, _, _) => {
                self.report.push(err("place-atom-in-query", format!("place atom `{}` is not allowed in a query", n.text), &n.span));
                return None;
            }
            IExpr::True | IExpr::Cmp(..) => unreachable!("handled as a condition"),
        })
    }

    fn prop_formula(&mut self, inf: &mut Infer, e: &IExpr) -> Option<PropFormula> {
        if Self::is_condition(e) {
            return self.condition(inf, e).map(PropFormula::Cond);
        }
        Some(match e {
            IExpr::PlaceAtom(n, None, min) => PropFormula::Count { place: Sym::new(&n.text), min: *min },
            IExpr::PlaceAtom(n, Some(args), min) => PropFormula::Tokens {
                place: Sym::new(&n.text),
                args: args.iter().map(|a| self.typed_term(inf, a)).collect::<Option<_>>()?,
                min: *min,
            },
            IExpr::Atom(n, args) => PropFormula::Rel(self.atom(inf, n, args)?),
            IExpr::Not(inner, _) => PropFormula::Not(Box::new(self.prop_formula(inf, inner)?)),
            IExpr::And(es) => PropFormula::And(es.iter().map(|e| self.prop_formula(inf, e)).collect::<Option<_>>()?),
            IExpr::Or(es) => {
                self.report.push(err("property-disjunction", "properties are conjunctive; `or` is not supported", &first_span(&es[0])));
                return None;
            }
            IExpr::Exists(bs, _) => {
                self.report.push(err("nested-quantifier", "property variables must be quantified at the outermost level", &bs[0].0.span));
                return None;
            }
            IExpr::True | IExpr::Cmp(..) => unreachable!("handled as a condition"),
        })
    }

    fn insc(&mut self, inf: &mut Infer, scope: &mut Scope, place: &Name, lit: &InscLit) -> Option<(PlaceId, Vec<ITerm>, u32, SourceSpan)> {
        let pid = self.place_ref(place)?;
        let terms: Vec<ITerm> = lit.terms.iter().map(|t| self.term(inf, scope, t)).collect::<Option<_>>()?;
        let color = self.net.place(pid).color.clone();
        if color.len() != terms.len() {
            self.report.push(err(
                "arity-mismatch",
                format!("inscription has {} components but place `{}` has color arity {}", terms.len(), place.text, color.len()),
                &lit.span,
            ));
            return None;
        }
        self.constrain_all(inf, &terms, &color);
        Some((pid, terms, lit.mult, lit.span.clone()))
    }

    fn transition(&mut self, name: &Name, items: &[TransItem]) -> Option<Transition> {
        let before = self.report.errors().count();
        let mut inf = Infer::default();
        let mut scope = Scope { outer: BTreeMap::new(), bound: Vec::new(), open: true };
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        let mut query = None;
        let mut conds = Vec::new();
        for it in items {
            match it {
                TransItem::In(p, inscs) | TransItem::Out(p, inscs) => {
                    let side = if matches!(it, TransItem::In(..)) { &mut ins } else { &mut outs };
                    for l in inscs {
                        if let Some(x) = self.insc(&mut inf, &mut scope, p, l) {
                            side.push(x);
                        }
                    }
                }
                TransItem::Query(e, span) => {
                    if query.is_some() {
                        self.report.push(err("duplicate-query", "a transition has at most one `query` item", span));
                        continue;
                    }
                    query = self.expr(&mut inf, &mut scope, e).map(|q| (q, span.clone()));
                }
                TransItem::Cond(e) => {
                    if let Some(c) = self.expr(&mut inf, &mut scope, e) {
                        conds.push(c);
                    }
                }
            }
        }
        if self.report.errors().count() > before {
            return None;
        }
        let mut t = Transition::new(&name.text);
        t.loc = name.span.clone().into();
        for (input, side) in [(true, &ins), (false, &outs)] {
            for (pid, terms, mult, span) in side {
                let mut out = Vec::new();
                for term in terms {
                    let typed = self.typed_term(&mut inf, term)?;
                    out.push(match (term, typed) {
                        (ITerm::Fresh(..), Term::Var(v)) => InscTerm::Fresh(v),
                        (_, Term::Var(v)) => InscTerm::Var(v),
                        (_, Term::Const(c)) => InscTerm::Const(c),
                    });
                }
                let insc = Inscription { mult: *mult, terms: out, loc: span.clone().into() };
                t = if input { t.input(*pid, insc) } else { t.output(*pid, insc) };
            }
        }
        let mut guard = Guard::default();
        if let Some((q, span)) = query {
            let parts = match q {
                IExpr::Or(es) => es,
                other => vec![other],
            };
            let mut disjuncts = Vec::new();
            for p in &parts {
                disjuncts.push(self.query(&mut inf, p)?.normalize());
            }
            guard.query = Some(UnionQuery { disjuncts });
            guard.loc = span.into();
        }
        let mut cs = Vec::new();
        for c in &conds {
            cs.push(self.condition(&mut inf, c)?);
        }
        guard.condition = match cs.len() {
            0 => Condition::True,
            1 => cs.pop().expect("one condition"),
            _ => Condition::And(cs),
        };
        t.guard = guard;
        Some(t)
    }

    fn property(&mut self, name: &Name, body: &Expr) -> Option<Property> {
        let mut inf = Infer::default();
        let mut scope = Scope { outer: BTreeMap::new(), bound: Vec::new(), open: false };
        let (binders, inner) = match body {
            Expr::Exists(bs, inner) => (bs.as_slice(), &**inner),
            other => (&[][..], other),
        };
        let mut vars = Vec::new();
        for b in binders {
            let id = inf.node();
            if let Some(ty) = &b.ty {
                let t = self.check_type(ty)?;
                if let Err(d) = inf.constrain(id, t, &ty.span, &format!("variable `{}`", b.name.text)) {
                    self.report.push(d);
                }
            }
            if scope.outer.insert(b.name.text.clone(), id).is_some() {
                self.report.push(err("duplicate-quantifier", format!("variable `{}` is quantified twice", b.name.text), &b.name.span));
            }
            vars.push((b.name.clone(), id));
        }
        let e = self.expr(&mut inf, &mut scope, inner)?;
        let body = self.prop_formula(&mut inf, &e)?;
        let mut typed = Vec::new();
        for (n, id) in vars {
            match inf.get(id) {
                Some(ty) => typed.push(Var { name: Sym::new(&n.text), ty }),
                None => {
                    self.report.push(err("uninferred-type", format!("cannot infer the type of variable `{}`", n.text), &n.span));
                    return None;
                }
            }
        }
        Some(Property { name: Sym::new(&name.text), vars: typed, body, loc: name.span.clone().into() })
    }
}

fn first_span(e: &IExpr) -> SourceSpan {
    match e {
        IExpr::Or(es) | IExpr::And(es) => first_span(&es[0]),
        IExpr::Not(_, s) => s.clone(),
        IExpr::Exists(bs, _) => bs[0].0.span.clone(),
        IExpr::Atom(n, _) | IExpr::PlaceAtom(n, _, _) => n.span.clone(),
        IExpr::Cmp(l, _, _) => l.span().clone(),
        IExpr::True => SourceSpan { file: "<unknown>".into(), line: 0, col_start: 0, col_end: 0 },
    }
}
