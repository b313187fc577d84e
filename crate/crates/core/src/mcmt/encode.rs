use std::collections::{BTreeMap, BTreeSet};

use crate::explore::{PropFormula, Property};
use crate::model::{CatalogSchema, Value};
use crate::net::{validate_net, InscTerm, Marking, Net, Transition, TransitionId};
use crate::query::{Atom, Condition, Term, Var};
use crate::report::{Diagnostic, Severity};
use crate::Sym;

use super::names::{null, sanitize, value_name, Registry};
use super::{Case, EncodeError, FunctionSymbol, IndexBudget, McmtDocument, Statement, TransitionStmt};

const FLAG: &str = "init_fl";

/// A full translation plus the warnings collected on the way.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Encoding {
    pub document: McmtDocument,
    pub diagnostics: Vec<Diagnostic>,
    /// Per net transition, in declaration order; the initial-marking
    /// transition comes first under the name `initial marking`.
    pub budgets: Vec<(String, IndexBudget)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionEncoding {
    pub statements: Vec<TransitionStmt>,
    pub budget: IndexBudget,
    pub diagnostics: Vec<Diagnostic>,
}

fn eq(a: &str, b: &str) -> String {
    format!("(= {a} {b})")
}

fn neq(a: &str, b: &str) -> String {
    format!("(not (= {a} {b}))")
}

fn cell(array: &str, idx: &str) -> String {
    format!("{array}[{idx}]")
}

fn fn_name(relation: Sym, attr: Option<Sym>) -> String {
    match attr {
        Some(a) => format!("{}_{}", sanitize(relation.as_str()), sanitize(a.as_str())),
        None => format!("{}_mem", sanitize(relation.as_str())),
    }
}

fn function_symbols(schema: &CatalogSchema) -> Vec<FunctionSymbol> {
    let mut out = Vec::new();
    for r in &schema.relations {
        if r.arity() == 1 {
            out.push(FunctionSymbol { name: fn_name(r.name, None), relation: r.name, attr: None });
        }
        for (i, a) in r.attrs.iter().enumerate() {
            if i != r.key {
                out.push(FunctionSymbol { name: fn_name(r.name, Some(a.name)), relation: r.name, attr: Some(i) });
            }
        }
    }
    out
}

fn sorted_constants(schema: &CatalogSchema, constants: &BTreeSet<Value>) -> Vec<Value> {
    let mut cs: Vec<Value> = constants.iter().copied().collect();
    cs.sort_by_key(|v| (schema.types.index_of(v.ty), *v));
    cs
}

fn schema_statements(schema: &CatalogSchema, constants: &BTreeSet<Value>, reg: &mut Registry) -> Result<(Vec<Statement>, Vec<Diagnostic>), EncodeError> {
    let mut out = Vec::new();
    let mut diags = Vec::new();
    let mut sorts = Vec::new();
    for t in &schema.types.types {
        let s = sanitize(t.name.as_str());
        reg.claim(&s, &format!("type {}", t.name))?;
        reg.claim(&null(&s), &format!("type {}", t.name))?;
        out.push(Statement::DefineType(s.clone()));
        sorts.push(s);
    }
    let mut functions = Vec::new();
    for r in &schema.relations {
        let key_ty = r.key_type().map(|t| sanitize(t.as_str())).unwrap_or_default();
        if r.arity() == 1 {
            let name = fn_name(r.name, None);
            reg.claim(&name, &format!("relation {}", r.name))?;
            diags.push(
                Diagnostic::warning(
                    "key-only-relation",
                    format!("relation `{}` has no non-key attribute; membership is encoded by `{name}`", r.name),
                )
                .at(&r.loc),
            );
            out.push(Statement::DefineFn { name: name.clone(), arg: key_ty.clone(), ret: "BOOLE".into() });
            functions.push(name);
        }
        for (i, a) in r.attrs.iter().enumerate() {
            if i == r.key {
                continue;
            }
            let name = fn_name(r.name, Some(a.name));
            reg.claim(&name, &format!("attribute {}.{}", r.name, a.name))?;
            out.push(Statement::DefineFn { name: name.clone(), arg: key_ty.clone(), ret: sanitize(a.ty.as_str()) });
            functions.push(name);
        }
    }
    for b in ["TRUE", "FALSE"] {
        reg.claim(b, "boolean constant")?;
        out.push(Statement::DefineConst { name: b.into(), sort: "BOOLE".into() });
    }
    let mut consts = Vec::new();
    for v in sorted_constants(schema, constants) {
        let name = value_name(&v);
        reg.claim(&name, &format!("constant {v}: {}", v.ty))?;
        out.push(Statement::DefineConst { name: name.clone(), sort: sanitize(v.ty.as_str()) });
        consts.push(name);
    }
    out.push(Statement::DbDriven { sorts, functions, constants: consts });
    Ok((out, diags))
}

/// Sort, function and constant definitions followed by the `:db_driven` block.
pub fn encode_schema(schema: &CatalogSchema, constants: &BTreeSet<Value>) -> Result<(Vec<Statement>, Vec<Diagnostic>), EncodeError> {
    schema_statements(schema, constants, &mut Registry::default())
}

struct ArrayDecl {
    name: String,
    sort: String,
    place: usize,
}

/// Array layout of a net: one array per place component, in declaration order.
struct Layout {
    arrays: Vec<ArrayDecl>,
    by_place: Vec<Vec<usize>>,
}

impl Layout {
    fn new(net: &Net) -> Layout {
        let mut arrays = Vec::new();
        let mut by_place = Vec::new();
        for (pi, p) in net.places.iter().enumerate() {
            let mut mine = Vec::new();
            for (k, ty) in p.color.iter().enumerate() {
                mine.push(arrays.len());
                arrays.push(ArrayDecl { name: format!("{}_{}", sanitize(p.name.as_str()), k + 1), sort: sanitize(ty.as_str()), place: pi });
            }
            by_place.push(mine);
        }
        Layout { arrays, by_place }
    }

    fn claim(&self, net: &Net, reg: &mut Registry) -> Result<(), EncodeError> {
        for a in &self.arrays {
            reg.claim(&a.name, &format!("place {}", net.places[a.place].name))?;
        }
        reg.claim(FLAG, "initial-marking flag")
    }

    fn unchanged(&self) -> Vec<String> {
        let mut v: Vec<String> = self.arrays.iter().map(|a| cell(&a.name, "j")).collect();
        v.push(FLAG.into());
        v
    }
}

fn places_statements(net: &Net, layout: &Layout) -> (Vec<Statement>, Vec<Diagnostic>) {
    let mut out: Vec<Statement> = layout.arrays.iter().map(|a| Statement::Local { name: a.name.clone(), sort: a.sort.clone() }).collect();
    out.push(Statement::Global { name: FLAG.into(), sort: "BOOLE".into() });
    let mut diags = Vec::new();
    if net.places.is_empty() {
        diags.push(Diagnostic::error("no-places", "the net has no places, so the initial state constrains no array"));
    }
    let mut blocks: Vec<Vec<String>> = layout
        .by_place
        .iter()
        .filter(|arrs| !arrs.is_empty())
        .map(|arrs| arrs.iter().map(|&a| eq(&cell(&layout.arrays[a].name, "x"), &null(&layout.arrays[a].sort))).collect())
        .collect();
    blocks.push(vec![eq(FLAG, "TRUE")]);
    out.push(Statement::Initial { var: "x".into(), conjuncts: blocks });
    (out, diags)
}

/// `:local` declarations, the flag global and the `:initial` block.
pub fn encode_places(net: &Net) -> (Vec<Statement>, Vec<Diagnostic>) {
    places_statements(net, &Layout::new(net))
}

fn initial_transition(layout: &Layout, m0: &Marking) -> TransitionStmt {
    let mut tokens = Vec::new();
    for (p, ms) in m0.iter() {
        for (tuple, k) in ms.iter() {
            for _ in 0..k {
                tokens.push((p.0, tuple.clone()));
            }
        }
    }
    let vars: Vec<String> = (1..=tokens.len()).map(|i| format!("i{i}")).collect();
    let mut guard = vec![eq(FLAG, "TRUE")];
    for a in 0..vars.len() {
        for b in a + 1..vars.len() {
            guard.push(neq(&vars[a], &vars[b]));
        }
    }
    let mut cases = Vec::new();
    for (i, (p, tuple)) in tokens.iter().enumerate() {
        let mut vals: Vec<String> = layout.arrays.iter().map(|a| cell(&a.name, "j")).collect();
        for (k, &a) in layout.by_place[*p].iter().enumerate() {
            vals[a] = value_name(&tuple[k]);
        }
        vals.push("FALSE".into());
        cases.push(Case { cond: Some(eq("j", &vars[i])), vals });
    }
    let mut vals: Vec<String> = layout.arrays.iter().map(|a| cell(&a.name, "j")).collect();
    vals.push("FALSE".into());
    cases.push(Case { cond: None, vals });
    TransitionStmt {
        comment: Some("initial marking".into()),
        vars,
        universal: "j".into(),
        eevars: Vec::new(),
        guard,
        uguard: Vec::new(),
        cases,
    }
}

/// The transition that writes `m0` into the empty arrays, one case per token.
pub fn encode_initial_marking(net: &Net, m0: &Marking) -> TransitionStmt {
    initial_transition(&Layout::new(net), m0)
}

/// Renders terms of one transition statement and records the existentially
/// quantified data variables it needs.
struct Env<'a> {
    net: &'a Net,
    cell: &'a BTreeMap<Sym, String>,
    eevars: Vec<Var>,
    /// Names of data variables; renamed with a numeric suffix when the plain
    /// name is already taken.
    names: BTreeMap<Sym, String>,
    reg: Registry,
    nonnull: BTreeSet<Sym>,
    /// Free query variables not bound by input arcs.
    propagated: BTreeSet<Sym>,
}

impl Env<'_> {
    fn var(&mut self, v: Var) -> String {
        if let Some(c) = self.cell.get(&v.name) {
            return c.clone();
        }
        if let Some(n) = self.names.get(&v.name) {
            return n.clone();
        }
        let base = sanitize(v.name.as_str());
        let mut name = base.clone();
        let mut k = 0;
        while self.reg.claim(&name, &format!("variable {}", v.name)).is_err() {
            k += 1;
            name = format!("{base}_{k}");
        }
        self.eevars.push(v);
        self.names.insert(v.name, name.clone());
        name
    }

    fn term(&mut self, t: &Term) -> String {
        match t {
            Term::Var(v) => self.var(*v),
            Term::Const(c) => value_name(c),
        }
    }

    fn insc(&mut self, t: &InscTerm) -> String {
        match t {
            InscTerm::Var(v) | InscTerm::Fresh(v) => self.var(*v),
            InscTerm::Const(c) => value_name(c),
        }
    }

    fn rel(&self, atom: &Atom) -> Result<&crate::model::RelationSchema, EncodeError> {
        self.net.schema.relation(atom.relation).ok_or_else(|| EncodeError::Unsupported(format!("atom {atom}: unknown relation")))
    }

    fn positive(&mut self, atom: &Atom, out: &mut Vec<String>) -> Result<(), EncodeError> {
        let rs = self.rel(atom)?;
        let (key, key_ty) = (rs.key, rs.key_type().map(|t| sanitize(t.as_str())).unwrap_or_default());
        let rel = rs.name;
        let attrs: Vec<Sym> = rs.attrs.iter().map(|a| a.name).collect();
        let id = self.term(&atom.args[key]);
        out.push(neq(&id, &null(&key_ty)));
        if attrs.len() == 1 {
            out.push(eq(&format!("({} {id})", fn_name(rel, None)), "TRUE"));
        }
        for (i, t) in atom.args.iter().enumerate() {
            if i == key {
                continue;
            }
            let z = self.term(t);
            if let Term::Var(v) = t {
                if self.propagated.contains(&v.name) && self.nonnull.insert(v.name) {
                    out.push(neq(&z, &null(&sanitize(v.ty.as_str()))));
                }
            }
            out.push(eq(&format!("({} {id})", fn_name(rel, Some(attrs[i]))), &z));
        }
        Ok(())
    }

    /// Alternatives whose disjunction is the negated atom. The alternative
    /// "key is NULL" is dropped: keys of negated atoms are always bound.
    fn negative(&mut self, atom: &Atom) -> Result<Vec<Vec<String>>, EncodeError> {
        let rs = self.rel(atom)?;
        let key = rs.key;
        let rel = rs.name;
        let attrs: Vec<Sym> = rs.attrs.iter().map(|a| a.name).collect();
        let id = self.term(&atom.args[key]);
        if attrs.len() == 1 {
            return Ok(vec![vec![eq(&format!("({} {id})", fn_name(rel, None)), "FALSE")]]);
        }
        let mut alts = Vec::new();
        for (i, t) in atom.args.iter().enumerate() {
            if i != key {
                let z = self.term(t);
                alts.push(vec![neq(&format!("({} {id})", fn_name(rel, Some(attrs[i]))), &z)]);
            }
        }
        Ok(alts)
    }

    /// Disjunctive normal form of a condition over rendered literals.
    fn condition(&mut self, c: &Condition, positive: bool) -> Vec<Vec<String>> {
        match (c, positive) {
            (Condition::True, true) => vec![vec![]],
            (Condition::True, false) => vec![],
            (Condition::Eq(a, b), _) => {
                let (a, b) = (self.term(a), self.term(b));
                vec![vec![if positive { eq(&a, &b) } else { neq(&a, &b) }]]
            }
            (Condition::Not(inner), _) => self.condition(inner, !positive),
            (Condition::And(cs), true) => {
                let parts: Vec<_> = cs.iter().map(|c| self.condition(c, true)).collect();
                product(parts)
            }
            (Condition::And(cs), false) => cs.iter().flat_map(|c| self.condition(c, false)).collect(),
        }
    }
}

fn product(parts: Vec<Vec<Vec<String>>>) -> Vec<Vec<String>> {
    let mut acc: Vec<Vec<String>> = vec![vec![]];
    for alts in parts {
        acc = acc
            .iter()
            .flat_map(|base| {
                alts.iter().map(move |a| {
                    let mut b = base.clone();
                    b.extend(a.iter().cloned());
                    b
                })
            })
            .collect();
    }
    acc
}

fn transition_statements(net: &Net, layout: &Layout, reg: &Registry, t: &Transition) -> Result<TransitionEncoding, EncodeError> {
    // index variables and the input-side part of the guard
    let mut cells: BTreeMap<Sym, String> = BTreeMap::new();
    let mut xs = Vec::new();
    let mut pin = Vec::new();
    let mut consumed: Vec<(String, usize)> = Vec::new();
    for arc in &t.inputs {
        let arrays = &layout.by_place[arc.place.0];
        let mut mine = Vec::new();
        for insc in &arc.inscriptions {
            let first = format!("x{}", xs.len() + 1);
            for &a in arrays {
                pin.push(neq(&cell(&layout.arrays[a].name, &first), &null(&layout.arrays[a].sort)));
            }
            for (k, term) in insc.terms.iter().enumerate() {
                let here = cell(&layout.arrays[arrays[k]].name, &first);
                match term {
                    InscTerm::Var(v) | InscTerm::Fresh(v) => match cells.get(&v.name) {
                        Some(c) => pin.push(eq(&here, c)),
                        None => {
                            cells.insert(v.name, here);
                        }
                    },
                    InscTerm::Const(c) => pin.push(eq(&here, &value_name(c))),
                }
            }
            for i in 0..insc.mult {
                let x = format!("x{}", xs.len() + 1);
                if i > 0 {
                    for &a in arrays {
                        pin.push(eq(&cell(&layout.arrays[a].name, &x), &cell(&layout.arrays[a].name, &first)));
                    }
                }
                mine.push(x.clone());
                consumed.push((x.clone(), arc.place.0));
                xs.push(x);
            }
        }
        for a in 0..mine.len() {
            for b in a + 1..mine.len() {
                pin.push(neq(&mine[a], &mine[b]));
            }
        }
    }
    let mut ys = Vec::new();
    let mut produced: Vec<(String, usize, &[InscTerm])> = Vec::new();
    for arc in &t.outputs {
        for insc in &arc.inscriptions {
            for _ in 0..insc.mult {
                let y = format!("y{}", ys.len() + 1);
                produced.push((y.clone(), arc.place.0, &insc.terms));
                ys.push(y);
            }
        }
    }
    let mut pout = Vec::new();
    for y in &ys {
        for a in &layout.arrays {
            pout.push(eq(&cell(&a.name, y), &null(&a.sort)));
        }
    }
    for a in 0..ys.len() {
        for b in a + 1..ys.len() {
            pout.push(neq(&ys[a], &ys[b]));
        }
    }
    let index_vars: Vec<String> = xs.iter().chain(&ys).cloned().collect();
    let fresh = t.fresh_vars();
    let in_names: BTreeSet<Sym> = t.in_vars().iter().map(|v| v.name).collect();
    let propagated: BTreeSet<Sym> = t.query_free_vars().iter().map(|v| v.name).filter(|n| !in_names.contains(n)).collect();

    let disjuncts: Vec<Option<&crate::query::ConjunctiveQuery>> = match &t.guard.query {
        Some(q) => q.disjuncts.iter().map(Some).collect(),
        None => vec![None],
    };
    let mut local = reg.clone();
    for iv in index_vars.iter().chain(std::iter::once(&"j".to_string())) {
        local.claim(iv, "index variable")?;
    }
    let mut stmts = Vec::new();
    for cq in disjuncts {
        let mut env = Env {
            net,
            cell: &cells,
            eevars: Vec::new(),
            names: BTreeMap::new(),
            reg: local.clone(),
            nonnull: BTreeSet::new(),
            propagated: propagated.clone(),
        };
        let mut pos = Vec::new();
        let mut parts: Vec<Vec<Vec<String>>> = Vec::new();
        if let Some(cq) = cq {
            for l in cq.literals.iter().filter(|l| l.positive) {
                env.positive(&l.atom, &mut pos)?;
            }
            for l in cq.literals.iter().filter(|l| !l.positive) {
                parts.push(env.negative(&l.atom)?);
            }
            parts.push(env.condition(&cq.condition, true));
        }
        parts.push(env.condition(&t.guard.condition, true));

        let mut cases = Vec::new();
        for (x, p) in &consumed {
            let mut vals = layout.unchanged();
            for &a in &layout.by_place[*p] {
                vals[a] = null(&layout.arrays[a].sort);
            }
            cases.push(Case { cond: Some(eq("j", x)), vals });
        }
        for (y, p, terms) in &produced {
            let mut vals = layout.unchanged();
            for (k, &a) in layout.by_place[*p].iter().enumerate() {
                vals[a] = env.insc(&terms[k]);
            }
            cases.push(Case { cond: Some(eq("j", y)), vals });
        }
        cases.push(Case { cond: None, vals: layout.unchanged() });

        let mut nu_lits = Vec::new();
        let mut uguard = Vec::new();
        let fresh_list: Vec<Var> = fresh.iter().copied().collect();
        for (i, v) in fresh_list.iter().enumerate() {
            let z = env.var(*v);
            let sort = sanitize(v.ty.as_str());
            nu_lits.push(neq(&z, &null(&sort)));
            for w in &fresh_list[i + 1..] {
                if w.ty == v.ty {
                    let zw = env.var(*w);
                    nu_lits.push(neq(&z, &zw));
                }
            }
            for a in layout.arrays.iter().filter(|a| a.sort == sort) {
                uguard.push(neq(&z, &cell(&a.name, "j")));
            }
        }

        let eevars: Vec<(String, String)> = env.eevars.iter().map(|v| (env.names[&v.name].clone(), sanitize(v.ty.as_str()))).collect();

        for alt in product(parts) {
            let mut guard = vec![eq(FLAG, "FALSE")];
            guard.extend(pin.iter().cloned());
            guard.extend(pout.iter().cloned());
            guard.extend(pos.iter().cloned());
            guard.extend(alt);
            guard.extend(nu_lits.iter().cloned());
            stmts.push(TransitionStmt {
                comment: None,
                vars: index_vars.clone(),
                universal: "j".into(),
                eevars: eevars.clone(),
                guard,
                uguard: uguard.clone(),
                cases: cases.clone(),
            });
        }
    }
    let n = stmts.len();
    for (i, s) in stmts.iter_mut().enumerate() {
        s.comment = Some(if n == 1 { t.name.to_string() } else { format!("{} [{}/{n}]", t.name, i + 1) });
    }
    let budget = IndexBudget { existential: index_vars.len(), universal: usize::from(!fresh.is_empty()) };
    let mut diagnostics = Vec::new();
    if budget.exceeds_supported() {
        diagnostics.push(budget_warning(t.name.as_str(), budget).at(&t.loc));
    }
    if stmts.is_empty() {
        diagnostics.push(Diagnostic::warning("unsatisfiable-guard", format!("the guard of `{}` is unsatisfiable; no statement emitted", t.name)).at(&t.loc));
    }
    Ok(TransitionEncoding { statements: stmts, budget, diagnostics })
}

fn budget_warning(name: &str, b: IndexBudget) -> Diagnostic {
    Diagnostic::warning(
        "index-budget",
        format!(
            "`{name}` needs {} existentially and {} universally quantified index variables; \
             MCMT currently supports two existentially quantified and one universally quantified",
            b.existential, b.universal
        ),
    )
}

fn global_registry(net: &Net, layout: &Layout, constants: &BTreeSet<Value>) -> Result<Registry, EncodeError> {
    let mut reg = Registry::default();
    schema_statements(&net.schema, constants, &mut reg)?;
    layout.claim(net, &mut reg)?;
    Ok(reg)
}

/// One statement per query disjunct (further split when negated atoms or
/// conditions need a disjunction), with the statement's index budget.
pub fn encode_transition(net: &Net, t: TransitionId) -> Result<TransitionEncoding, EncodeError> {
    let layout = Layout::new(net);
    let reg = global_registry(net, &layout, &net.constants())?;
    transition_statements(net, &layout, &reg, net.transition(t))
}

fn property_statement(net: &Net, layout: &Layout, psi: &Property) -> Result<Statement, EncodeError> {
    let mut vars: Vec<String> = Vec::new();
    let mut cells: BTreeMap<Sym, String> = BTreeMap::new();
    let mut lits = Vec::new();
    let place = |name: Sym| net.place_id(name.as_str()).ok_or_else(|| EncodeError::Unsupported(format!("unknown place `{name}`")));
    let conjuncts = psi.body.conjuncts();
    for c in &conjuncts {
        let (pid, args, min) = match c {
            PropFormula::Count { place: p, min } => (place(*p)?, None, *min),
            PropFormula::Tokens { place: p, args, min } => (place(*p)?, Some(args), *min),
            _ => continue,
        };
        let arrays = &layout.by_place[pid.0];
        let mut mine: Vec<String> = Vec::new();
        for i in 0..min {
            let z = format!("z{}", vars.len() + 1);
            vars.push(z.clone());
            if i == 0 || args.is_none() {
                for &a in arrays {
                    lits.push(neq(&cell(&layout.arrays[a].name, &z), &null(&layout.arrays[a].sort)));
                }
            }
            if i == 0 {
                for (k, t) in args.into_iter().flatten().enumerate() {
                    let here = cell(&layout.arrays[arrays[k]].name, &z);
                    match t {
                        Term::Var(v) => match cells.get(&v.name) {
                            Some(c) => lits.push(eq(&here, c)),
                            None => {
                                cells.insert(v.name, here);
                            }
                        },
                        Term::Const(v) => lits.push(eq(&here, &value_name(v))),
                    }
                }
            } else if args.is_some() {
                for &a in arrays {
                    lits.push(eq(&cell(&layout.arrays[a].name, &z), &cell(&layout.arrays[a].name, &mine[0])));
                }
            }
            mine.push(z);
        }
        for a in 0..mine.len() {
            for b in a + 1..mine.len() {
                lits.push(neq(&mine[a], &mine[b]));
            }
        }
    }
    let term = |t: &Term| -> Result<String, EncodeError> {
        match t {
            Term::Const(c) => Ok(value_name(c)),
            Term::Var(v) => cells.get(&v.name).cloned().ok_or_else(|| EncodeError::Unsupported(format!("variable `{}` of property `{}` outside place atoms", v.name, psi.name))),
        }
    };
    let rel_fn = |a: &Atom| -> Result<(Vec<Sym>, usize), EncodeError> {
        let rs = net.schema.relation(a.relation).ok_or_else(|| EncodeError::Unsupported(format!("atom {a}: unknown relation")))?;
        Ok((rs.attrs.iter().map(|x| x.name).collect(), rs.key))
    };
    for c in &conjuncts {
        match c {
            PropFormula::Count { .. } | PropFormula::Tokens { .. } => {}
            PropFormula::Rel(a) => {
                let (attrs, key) = rel_fn(a)?;
                let id = term(&a.args[key])?;
                let key_ty = sanitize(a.args[key].ty().as_str());
                lits.push(neq(&id, &null(&key_ty)));
                if attrs.len() == 1 {
                    lits.push(eq(&format!("({} {id})", fn_name(a.relation, None)), "TRUE"));
                }
                for (i, t) in a.args.iter().enumerate() {
                    if i != key {
                        lits.push(eq(&format!("({} {id})", fn_name(a.relation, Some(attrs[i]))), &term(t)?));
                    }
                }
            }
            PropFormula::Not(inner) => match &**inner {
                PropFormula::Rel(a) => {
                    let (attrs, key) = rel_fn(a)?;
                    let id = term(&a.args[key])?;
                    match attrs.len() {
                        1 => lits.push(eq(&format!("({} {id})", fn_name(a.relation, None)), "FALSE")),
                        2 => {
                            let i = 1 - key;
                            lits.push(neq(&format!("({} {id})", fn_name(a.relation, Some(attrs[i]))), &term(&a.args[i])?));
                        }
                        _ => return Err(EncodeError::Unsupported(format!("negated atom {a} in property `{}`", psi.name))),
                    }
                }
                PropFormula::Cond(cond) => match cond {
                    Condition::Eq(a, b) => lits.push(neq(&term(a)?, &term(b)?)),
                    _ => return Err(EncodeError::Unsupported(format!("negated condition {cond} in property `{}`", psi.name))),
                },
                other => return Err(EncodeError::Unsupported(format!("negation of {other:?} in property `{}`", psi.name))),
            },
            PropFormula::Cond(cond) => {
                for part in cond.conjuncts() {
                    match part {
                        Condition::True => {}
                        Condition::Eq(a, b) => lits.push(eq(&term(a)?, &term(b)?)),
                        Condition::Not(inner) => match &**inner {
                            Condition::Eq(a, b) => lits.push(neq(&term(a)?, &term(b)?)),
                            other => return Err(EncodeError::Unsupported(format!("condition {other} in property `{}`", psi.name))),
                        },
                        other => return Err(EncodeError::Unsupported(format!("condition {other} in property `{}`", psi.name))),
                    }
                }
            }
            PropFormula::And(_) => unreachable!("conjuncts are flattened"),
        }
    }
    if vars.is_empty() {
        return Err(EncodeError::Unsupported(format!("property `{}` without a place atom of positive count", psi.name)));
    }
    Ok(Statement::Unsafe { vars, conjuncts: lits })
}

/// The `:unsafe` block of a property.
pub fn encode_property(net: &Net, psi: &Property) -> Result<Statement, EncodeError> {
    property_statement(net, &Layout::new(net), psi)
}

/// Full document: schema, places, initial block, initial-marking transition,
/// net transitions in declaration order, unsafe block.
pub fn encode(net: &Net, m0: &Marking, psi: &Property) -> Result<Encoding, EncodeError> {
    let mut invalid: Vec<Diagnostic> = validate_net(net).errors().cloned().collect();
    invalid.extend(psi.typecheck(net));
    if m0.place_count() != net.places.len() {
        invalid.push(Diagnostic::error("marking-shape", "the marking does not match the places of the net"));
    }
    if !invalid.is_empty() {
        return Err(EncodeError::Invalid(invalid));
    }

    let mut constants = net.constants();
    constants.extend(m0.values());
    constants.extend(psi.constants());
    let layout = Layout::new(net);
    let mut reg = Registry::default();
    let (mut statements, mut diagnostics) = schema_statements(&net.schema, &constants, &mut reg)?;
    layout.claim(net, &mut reg)?;
    let (places, d) = places_statements(net, &layout);
    diagnostics.extend(d);
    if diagnostics.iter().any(|d| d.severity == Severity::Error) {
        return Err(EncodeError::Invalid(diagnostics.into_iter().filter(|d| d.severity == Severity::Error).collect()));
    }
    statements.extend(places);

    let mut budgets = Vec::new();
    let init = initial_transition(&layout, m0);
    let b = init.budget();
    if b.exceeds_supported() {
        diagnostics.push(budget_warning("initial marking", b));
    }
    budgets.push(("initial marking".to_string(), b));
    statements.push(Statement::Transition(init));
    for t in &net.transitions {
        let enc = transition_statements(net, &layout, &reg, t)?;
        budgets.push((t.name.to_string(), enc.budget));
        diagnostics.extend(enc.diagnostics);
        statements.extend(enc.statements.into_iter().map(Statement::Transition));
    }
    statements.push(property_statement(net, &layout, psi)?);

    let constants = sorted_constants(&net.schema, &constants).into_iter().map(|v| (value_name(&v), v)).collect();
    let document = McmtDocument { statements, constants, functions: function_symbols(&net.schema) };
    Ok(Encoding { document, diagnostics, budgets })
}
