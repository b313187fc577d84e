use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{CatalogInstance, CatalogSchema, RelationSchema, TypeDomain, Value};
use crate::net::{validate_net, InscTerm, Inscription, Marking, Net, Transition};
use crate::query::{Atom, Condition, QueryExpr, Term, UnionQuery, Var};

/// `CLOGNET_SEED` if set and numeric, else `default`.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var("CLOGNET_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(default)
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Debug)]
pub struct QueryCase {
    pub schema: CatalogSchema,
    pub catalog: CatalogInstance,
    /// Disjuncts as written, before normalization.
    pub disjuncts: Vec<QueryExpr>,
}

impl QueryCase {
    pub fn union(&self) -> UnionQuery {
        UnionQuery { disjuncts: self.disjuncts.iter().map(|d| d.normalize()).collect() }
    }
}

fn query_schema() -> CatalogSchema {
    CatalogSchema::new(
        TypeDomain::new().with_unbounded(&["A", "B"]),
        vec![
            RelationSchema::new("R", &[("a", "A"), ("b", "B")]),
            RelationSchema::new("S", &[("b", "B")]),
            RelationSchema::new("U", &[("a", "A"), ("c", "A")]),
        ],
    )
}

/// A random catalog over at most four values (`a1, a2, b1, b2`) and a
/// union of one or two query trees of depth at most `depth`.
pub fn gen_query_case(rng: &mut impl Rng, depth: usize) -> QueryCase {
    let schema = query_schema();
    let a = [Value::named("A", "a1"), Value::named("A", "a2")];
    let b = [Value::named("B", "b1"), Value::named("B", "b2")];
    let mut cat = CatalogInstance::new();
    for ka in &a {
        if rng.gen_bool(0.6) {
            cat = cat.with_fact("R", vec![*ka, *b.choose(rng).expect("nonempty")]);
        }
        if rng.gen_bool(0.5) {
            cat = cat.with_fact("U", vec![*ka, *a.choose(rng).expect("nonempty")]);
        }
    }
    for kb in &b {
        if rng.gen_bool(0.5) {
            cat = cat.with_fact("S", vec![*kb]);
        }
    }
    let n = rng.gen_range(1..=2);
    let disjuncts = (0..n).map(|_| gen_qexpr(rng, depth)).collect();
    QueryCase { schema, catalog: cat, disjuncts }
}

fn a_term<R: Rng + ?Sized>(rng: &mut R) -> Term {
    match rng.gen_range(0..6) {
        0 => Term::Const(Value::named("A", "a1")),
        1 => Term::Const(Value::named("A", "a3")),
        2 | 3 => Term::Var(Var::new("x", "A")),
        _ => Term::Var(Var::new("y", "A")),
    }
}

fn b_term<R: Rng + ?Sized>(rng: &mut R) -> Term {
    match rng.gen_range(0..5) {
        0 => Term::Const(Value::named("B", "b2")),
        1 | 2 => Term::Var(Var::new("u", "B")),
        _ => Term::Var(Var::new("w", "B")),
    }
}

fn gen_leaf(rng: &mut impl Rng) -> QueryExpr {
    let atom = |rng: &mut dyn rand::RngCore| match rng.gen_range(0..3) {
        0 => Atom::new("R", vec![a_term(rng), b_term(rng)]),
        1 => Atom::new("S", vec![b_term(rng)]),
        _ => Atom::new("U", vec![a_term(rng), a_term(rng)]),
    };
    match rng.gen_range(0..10) {
        0..=4 => QueryExpr::Atom(atom(rng)),
        5..=6 => QueryExpr::NegAtom(atom(rng)),
        7 => QueryExpr::Cond(Condition::eq(a_term(rng), a_term(rng))),
        8 => QueryExpr::Cond(Condition::neq(b_term(rng), b_term(rng))),
        _ => QueryExpr::Cond(Condition::neq(a_term(rng), a_term(rng))),
    }
}

fn gen_qexpr(rng: &mut impl Rng, depth: usize) -> QueryExpr {
    if depth <= 1 || rng.gen_bool(0.25) {
        return gen_leaf(rng);
    }
    if rng.gen_bool(0.4) {
        let v = *[Var::new("x", "A"), Var::new("y", "A"), Var::new("u", "B"), Var::new("w", "B")].choose(rng).expect("nonempty");
        QueryExpr::Exists(v, Box::new(gen_qexpr(rng, depth - 1)))
    } else {
        let k = rng.gen_range(2..=3);
        QueryExpr::And((0..k).map(|_| gen_qexpr(rng, depth - 1)).collect())
    }
}

#[derive(Clone, Debug)]
pub struct NetCase {
    pub net: Net,
    pub catalog: CatalogInstance,
    pub marking: Marking,
}

fn net_schema() -> CatalogSchema {
    CatalogSchema::new(
        TypeDomain::new().with_unbounded(&["D", "K"]),
        vec![RelationSchema::new("P", &[("d", "D")]), RelationSchema::new("Q", &[("k", "K"), ("d", "D")])],
    )
}

/// A random valid net with at most four places, at most three transitions
/// and at most one ν-variable, together with a catalog and a marking.
pub fn gen_net_case(rng: &mut impl Rng) -> NetCase {
    loop {
        if let Some(c) = try_net(rng) {
            return c;
        }
    }
}

fn try_net(rng: &mut impl Rng) -> Option<NetCase> {
    let schema = net_schema();
    let mut net = Net::new(schema);
    let colors: [&[&str]; 4] = [&["D"], &["K"], &["D", "K"], &["D", "D"]];
    let np = rng.gen_range(1..=4);
    let mut places = Vec::new();
    for i in 0..np {
        let c = *colors.choose(rng).expect("nonempty");
        places.push((net.add_place(&format!("p{i}"), c), c));
    }
    let d_vars = [Var::new("x", "D"), Var::new("y", "D")];
    let k_vars = [Var::new("k", "K"), Var::new("l", "K")];
    let var_of = |ty: &str, rng: &mut dyn rand::RngCore| if ty == "D" { *d_vars.choose(rng).expect("nonempty") } else { *k_vars.choose(rng).expect("nonempty") };
    let mut nu_used = false;
    let nt = rng.gen_range(1..=3);
    for ti in 0..nt {
        let mut t = Transition::new(&format!("t{ti}"));
        let mut bound: Vec<Var> = Vec::new();
        for _ in 0..rng.gen_range(0..=2) {
            let (p, c) = places.choose(rng).expect("nonempty");
            let terms: Vec<InscTerm> = c.iter().map(|ty| InscTerm::Var(var_of(ty, rng))).collect();
            bound.extend(terms.iter().filter_map(|x| x.var()));
            let mult = if rng.gen_bool(0.15) { 2 } else { 1 };
            t = t.input(*p, Inscription::new(mult, terms));
        }
        if rng.gen_bool(0.5) {
            let atom = if rng.gen_bool(0.5) {
                Atom::new("P", vec![Term::Var(var_of("D", rng))])
            } else {
                Atom::new("Q", vec![Term::Var(var_of("K", rng)), Term::Var(var_of("D", rng))])
            };
            let q = if rng.gen_bool(0.25) && atom.args.iter().all(|a| a.as_var().is_some_and(|v| bound.contains(&v))) {
                QueryExpr::NegAtom(atom)
            } else {
                bound.extend(atom.args.iter().filter_map(|a| a.as_var()));
                QueryExpr::Atom(atom)
            };
            t = t.with_query(UnionQuery::single(q.normalize()));
        }
        if rng.gen_bool(0.25) {
            let (a, b) = (Term::Var(var_of("D", rng)), Term::Var(var_of("D", rng)));
            t = t.with_condition(Condition::neq(a, b));
        }
        let nu = Var::new("n", "D");
        for _ in 0..rng.gen_range(0..=2) {
            let (p, c) = places.choose(rng).expect("nonempty");
            let terms: Vec<InscTerm> = c
                .iter()
                .map(|ty| {
                    let cands: Vec<Var> = bound.iter().filter(|v| v.ty.as_str() == *ty).copied().collect();
                    if *ty == "D" && (!nu_used || t.fresh_vars().contains(&nu)) && rng.gen_bool(0.3) {
                        nu_used = true;
                        InscTerm::Fresh(nu)
                    } else if let Some(v) = cands.choose(rng) {
                        InscTerm::Var(*v)
                    } else {
                        InscTerm::Const(Value::named(*ty, if *ty == "D" { "d1" } else { "k1" }))
                    }
                })
                .collect();
            t = t.output(*p, Inscription::new(1, terms));
        }
        net.add_transition(t);
    }
    if validate_net(&net).has_errors() {
        return None;
    }
    let d = [Value::named("D", "d1"), Value::named("D", "d2"), Value::pool("D", 0)];
    let k = [Value::named("K", "k1"), Value::named("K", "k2")];
    let mut cat = CatalogInstance::new();
    for v in &d {
        if rng.gen_bool(0.5) {
            cat = cat.with_fact("P", vec![*v]);
        }
    }
    for kv in &k {
        if rng.gen_bool(0.6) {
            cat = cat.with_fact("Q", vec![*kv, *d.choose(rng).expect("nonempty")]);
        }
    }
    let mut m = Marking::for_net(&net);
    for (p, c) in &places {
        for _ in 0..rng.gen_range(0..=3) {
            let tuple = c
                .iter()
                .map(|ty| if *ty == "D" { *d.choose(rng).expect("nonempty") } else { *k.choose(rng).expect("nonempty") })
                .collect();
            m.add(*p, tuple, rng.gen_range(1..=2));
        }
    }
    Some(NetCase { net, catalog: cat, marking: m })
}
