//! Brute-force reference implementations and seeded random generators used
//! by the test suites. Nothing here is tuned for speed.

mod gen;

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{CatalogInstance, CatalogSchema, Tuple, TypeDomain, Value, ValueDomain};
use crate::net::{Binding, InscTerm, Marking, Net, PlaceId, TransitionId};
use crate::query::{Condition, QueryExpr, Substitution, Term, Var};
use crate::Sym;

pub use gen::{gen_net_case, gen_query_case, rng_for, seed_from_env, NetCase, QueryCase};

fn term_val(t: &Term, theta: &Substitution) -> Option<Value> {
    match t {
        Term::Const(c) => Some(*c),
        Term::Var(v) => theta.get(v.name),
    }
}

pub fn cond_holds(c: &Condition, theta: &Substitution) -> bool {
    match c {
        Condition::True => true,
        Condition::Eq(a, b) => term_val(a, theta).is_some() && term_val(a, theta) == term_val(b, theta),
        Condition::Not(inner) => !cond_holds(inner, theta),
        Condition::And(cs) => cs.iter().all(|c| cond_holds(c, theta)),
    }
}

/// Catalog values per type.
fn adom(cat: &CatalogInstance) -> BTreeMap<Sym, Vec<Value>> {
    let mut out: BTreeMap<Sym, Vec<Value>> = BTreeMap::new();
    for v in cat.values() {
        out.entry(v.ty).or_default().push(v);
    }
    out
}

/// Direct recursive reading of a query tree under active-domain semantics.
pub fn query_holds(q: &QueryExpr, cat: &CatalogInstance, theta: &Substitution) -> bool {
    let dom = adom(cat);
    holds_in(q, cat, &dom, theta)
}

fn holds_in(q: &QueryExpr, cat: &CatalogInstance, dom: &BTreeMap<Sym, Vec<Value>>, theta: &Substitution) -> bool {
    let fact = |a: &crate::query::Atom| -> Option<bool> {
        let t: Option<Tuple> = a.args.iter().map(|x| term_val(x, theta)).collect();
        t.map(|t| cat.facts(a.relation).contains(&t))
    };
    match q {
        QueryExpr::Cond(c) => cond_holds(c, theta),
        QueryExpr::Atom(a) => fact(a) == Some(true),
        QueryExpr::NegAtom(a) => fact(a) == Some(false),
        QueryExpr::And(qs) => qs.iter().all(|q| holds_in(q, cat, dom, theta)),
        QueryExpr::Exists(v, body) => dom.get(&v.ty).into_iter().flatten().any(|val| {
            let mut th = theta.clone();
            th.insert(v.name, *val);
            holds_in(body, cat, dom, &th)
        }),
    }
}

/// Every assignment of `vars` over the given per-type domains.
pub fn assignments(vars: &[Var], dom: &BTreeMap<Sym, Vec<Value>>) -> Vec<Substitution> {
    let mut out = vec![Substitution::new()];
    for v in vars {
        let vals = dom.get(&v.ty).cloned().unwrap_or_default();
        out = out
            .into_iter()
            .flat_map(|s| {
                vals.iter().map(move |x| {
                    let mut s = s.clone();
                    s.insert(v.name, *x);
                    s
                })
            })
            .collect();
    }
    out
}

/// `ans(Q, Cat)` for a union of query trees, by enumerating every
/// assignment of each disjunct's free variables over `Val(Cat)`.
pub fn brute_force_answers(disjuncts: &[QueryExpr], cat: &CatalogInstance) -> BTreeSet<Substitution> {
    let dom = adom(cat);
    let mut out = BTreeSet::new();
    for q in disjuncts {
        let fv: Vec<Var> = q.free_vars().into_iter().collect();
        for theta in assignments(&fv, &dom) {
            if holds_in(q, cat, &dom, &theta) {
                out.insert(theta);
            }
        }
    }
    out
}

fn ground(sigma: &Binding, terms: &[InscTerm]) -> Option<Tuple> {
    terms
        .iter()
        .map(|t| match t {
            InscTerm::Const(c) => Some(*c),
            InscTerm::Var(v) | InscTerm::Fresh(v) => sigma.get(v.name),
        })
        .collect()
}

/// Tokens σ(F(p, t)) demanded or produced on each place, as plain counts.
fn arc_counts(net: &Net, t: TransitionId, sigma: &Binding, inputs: bool) -> Option<BTreeMap<(PlaceId, Tuple), u32>> {
    let tr = net.transition(t);
    let arcs = if inputs { &tr.inputs } else { &tr.outputs };
    let mut out: BTreeMap<(PlaceId, Tuple), u32> = BTreeMap::new();
    for a in arcs {
        for i in &a.inscriptions {
            *out.entry((a.place, ground(sigma, &i.terms)?)).or_default() += i.mult;
        }
    }
    Some(out)
}

/// Enabled bindings of `t` by filtering every type-respecting assignment
/// against the enablement conditions, with ν-variables restricted to the
/// `n` least unused pool values of their type.
pub fn brute_force_enabled(net: &Net, m: &Marking, cat: &CatalogInstance, t: TransitionId, n: u32) -> BTreeSet<Binding> {
    let tr = net.transition(t);
    let val_m = m.values();
    let val_cat = cat.values();
    let consts = net.constants();
    let mut dom: BTreeMap<Sym, BTreeSet<Value>> = BTreeMap::new();
    for v in val_m.iter().chain(&val_cat).chain(&consts) {
        dom.entry(v.ty).or_default().insert(*v);
    }
    for ty in &net.schema.types.types {
        if let ValueDomain::Finite(names) = &ty.domain {
            dom.entry(ty.name).or_default().extend(names.iter().map(|x| Value::named(ty.name, *x)));
        }
    }
    let mut fresh_cands: BTreeMap<Sym, Vec<Value>> = BTreeMap::new();
    for v in tr.fresh_vars() {
        let cands = fresh_cands.entry(v.ty).or_insert_with(|| {
            let mut c = Vec::new();
            let mut i = 0;
            while c.len() < n as usize {
                let x = Value::pool(v.ty, i);
                if !val_m.contains(&x) && !val_cat.contains(&x) && !consts.contains(&x) {
                    c.push(x);
                }
                i += 1;
            }
            c
        });
        dom.entry(v.ty).or_default().extend(cands.iter().copied());
    }
    let dom: BTreeMap<Sym, Vec<Value>> = dom.into_iter().map(|(k, v)| (k, v.into_iter().collect())).collect();
    let vars: Vec<Var> = tr.binding_vars().into_iter().collect();
    let in_vars = tr.in_vars();
    let fresh = tr.fresh_vars();
    let qfree = tr.query_free_vars();

    let mut out = BTreeSet::new();
    'cand: for sigma in assignments(&vars, &dom) {
        let Some(need) = arc_counts(net, t, &sigma, true) else { continue };
        for ((p, tuple), k) in &need {
            if m.tokens(*p).count(tuple) < *k {
                continue 'cand;
            }
        }
        if !cond_holds(&tr.guard.condition, &sigma) {
            continue;
        }
        if let Some(q) = &tr.guard.query {
            if qfree.iter().any(|v| !in_vars.contains(v) && !val_cat.contains(&sigma.get(v.name).expect("assigned"))) {
                continue;
            }
            if !q.disjuncts.iter().any(|d| query_holds(&d.to_expr(), cat, &sigma)) {
                continue;
            }
        }
        let mut seen = BTreeSet::new();
        for v in &fresh {
            let x = sigma.get(v.name).expect("assigned");
            if val_m.contains(&x) || val_cat.contains(&x) || !fresh_cands[&v.ty].contains(&x) || !seen.insert(x) {
                continue 'cand;
            }
        }
        for v in &vars {
            if !in_vars.contains(v) && !qfree.contains(v) && !fresh.contains(v) {
                continue 'cand;
            }
        }
        out.insert(sigma);
    }
    out
}

/// Checks `m' = m − σ(F_in) + σ(F_out)` place by place and tuple by tuple.
pub fn check_firing_arithmetic(net: &Net, m: &Marking, t: TransitionId, sigma: &Binding, next: &Marking) -> Result<(), String> {
    let consumed = arc_counts(net, t, sigma, true).ok_or("unbound input variable")?;
    let produced = arc_counts(net, t, sigma, false).ok_or("unbound output variable")?;
    let mut keys: BTreeSet<(PlaceId, Tuple)> = consumed.keys().chain(produced.keys()).cloned().collect();
    for (p, ms) in m.iter().chain(next.iter()) {
        for (tuple, _) in ms.iter() {
            keys.insert((p, tuple.clone()));
        }
    }
    for (p, tuple) in keys {
        let before = m.tokens(p).count(&tuple) as i64;
        let after = next.tokens(p).count(&tuple) as i64;
        let minus = consumed.get(&(p, tuple.clone())).copied().unwrap_or(0) as i64;
        let plus = produced.get(&(p, tuple.clone())).copied().unwrap_or(0) as i64;
        if before - minus < 0 || after != before - minus + plus {
            return Err(format!("place {} tuple {:?}: {before} - {minus} + {plus} != {after}", p.0, tuple));
        }
    }
    Ok(())
}

/// Whether some type-respecting bijection on the renamable values maps `a`
/// onto `b`. Protected values and values of finite types are fixed.
pub fn isomorphic(a: &Marking, b: &Marking, protected: &BTreeSet<Value>, types: &TypeDomain) -> bool {
    if a.place_count() != b.place_count() {
        return false;
    }
    let renamable = |m: &Marking| -> Vec<Value> {
        m.values().into_iter().filter(|v| !protected.contains(v) && types.is_unbounded(v.ty)).collect()
    };
    let ra = renamable(a);
    let rb = renamable(b);
    if ra.len() != rb.len() {
        return false;
    }
    fn apply(m: &Marking, map: &BTreeMap<Value, Value>) -> Marking {
        let mut out = Marking::empty(m.place_count());
        for (p, ms) in m.iter() {
            for (t, k) in ms.iter() {
                out.add(p, t.iter().map(|v| map.get(v).copied().unwrap_or(*v)).collect(), k);
            }
        }
        out
    }
    fn go(i: usize, ra: &[Value], rb: &[Value], used: &mut Vec<bool>, map: &mut BTreeMap<Value, Value>, a: &Marking, b: &Marking) -> bool {
        if i == ra.len() {
            return apply(a, map) == *b;
        }
        for j in 0..rb.len() {
            if used[j] || rb[j].ty != ra[i].ty {
                continue;
            }
            used[j] = true;
            map.insert(ra[i], rb[j]);
            if go(i + 1, ra, rb, used, map, a, b) {
                return true;
            }
            used[j] = false;
        }
        map.remove(&ra[i]);
        false
    }
    go(0, &ra, &rb, &mut vec![false; rb.len()], &mut BTreeMap::new(), a, b)
}

/// Key and foreign-key constraints, checked fact by fact.
pub fn instance_ok(schema: &CatalogSchema, cat: &CatalogInstance) -> bool {
    for (r, facts) in cat.relations() {
        let Some(rs) = schema.relation(r) else { return false };
        for f in facts {
            if f.len() != rs.arity() || f.iter().zip(rs.attr_types()).any(|(v, ty)| v.ty != ty || !schema.types.admits(v)) {
                return false;
            }
            if facts.iter().any(|g| g != f && g[rs.key] == f[rs.key]) {
                return false;
            }
            for fk in &rs.fks {
                let Some(target) = schema.relation(fk.target) else { return false };
                if !cat.facts(fk.target).iter().any(|g| g[target.key] == f[fk.attr]) {
                    return false;
                }
            }
        }
    }
    true
}
