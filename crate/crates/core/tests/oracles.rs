//! Property-based comparisons against the brute-force oracles.

use std::collections::{BTreeMap, BTreeSet};

use clognet::explore::*;
use clognet::model::{CatalogInstance, CatalogSchema, RelationSchema, TypeDomain, Value};
use clognet::net::{canonicalize_marking, FreshPolicy, Marking, NetContext, PlaceId};
use clognet::oracles::{self, gen_net_case, gen_query_case, rng_for};
use clognet::query::evaluate_query;
use clognet::Sym;
use proptest::prelude::*;

fn cases() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cases())]

    #[test]
    fn query_evaluation_matches_brute_force(seed in any::<u64>()) {
        let case = gen_query_case(&mut rng_for(seed), 3);
        let got = evaluate_query(&case.union(), &case.catalog);
        let want = oracles::brute_force_answers(&case.disjuncts, &case.catalog);
        prop_assert_eq!(got, want);
    }

    #[test]
    fn enabled_bindings_match_brute_force(seed in any::<u64>()) {
        let case = gen_net_case(&mut rng_for(seed));
        let ctx = NetContext::new(&case.net, &case.catalog);
        for t in case.net.transition_ids() {
            let got = ctx.enabled(&case.marking, t, FreshPolicy::Enumerate(3));
            let want = oracles::brute_force_enabled(&case.net, &case.marking, &case.catalog, t, 3);
            prop_assert_eq!(&got, &want);
            for sigma in &got {
                let next = ctx.fire(&case.marking, t, sigma).unwrap();
                prop_assert!(oracles::check_firing_arithmetic(&case.net, &case.marking, t, sigma, &next).is_ok());
            }
        }
    }

    #[test]
    fn canonical_form_is_a_renaming_invariant(seed in any::<u64>(), shift in 1u32..5) {
        let case = gen_net_case(&mut rng_for(seed));
        let types = &case.net.schema.types;
        let protected = case.catalog.values();
        let renamed = rename(&case.marking, &protected, shift);
        let c1 = canonicalize_marking(&case.marking, &protected, types);
        let c2 = canonicalize_marking(&renamed, &protected, types);
        prop_assert_eq!(&c1, &c2);
        prop_assert!(oracles::isomorphic(&c1, &case.marking, &protected, types));
    }

    #[test]
    fn canonical_equality_is_isomorphism(a in any::<u64>(), b in any::<u64>()) {
        let ca = gen_net_case(&mut rng_for(a));
        let types = &ca.net.schema.types;
        // same net, two markings
        let mb = other_marking(&ca.marking, b);
        let protected = BTreeSet::new();
        let same = canonicalize_marking(&ca.marking, &protected, types) == canonicalize_marking(&mb, &protected, types);
        prop_assert_eq!(same, oracles::isomorphic(&ca.marking, &mb, &protected, types));
    }

    #[test]
    fn symmetry_reduction_preserves_verdicts(seed in any::<u64>()) {
        let case = gen_net_case(&mut rng_for(seed));
        let place = PlaceId(seed as usize % case.net.places.len());
        let psi = Property {
            name: Sym::new("psi"),
            vars: vec![],
            body: PropFormula::Count { place: case.net.place(place).name, min: 3 },
            loc: Default::default(),
        };
        let lim = ExplorationLimits::new(500, 5);
        let a = check_safety_with(&case.net, &case.marking, &case.catalog, &psi, &lim, FreshPolicy::Canonical, true).unwrap();
        let b = check_safety_with(&case.net, &case.marking, &case.catalog, &psi, &lim, FreshPolicy::Enumerate(3), false).unwrap();
        let capped = |v: &Verdict| matches!(v, Verdict::Safe(s) if s.states >= lim.max_states);
        if !capped(&a.verdict) && !capped(&b.verdict) {
            prop_assert_eq!(a.verdict.is_unsafe(), b.verdict.is_unsafe());
        }
        prop_assert_eq!(a.fresh.violations + b.fresh.violations, 0);
    }

    #[test]
    fn exploration_is_deterministic(seed in any::<u64>()) {
        let case = gen_net_case(&mut rng_for(seed));
        let ex = Explorer::new(&case.net, &case.catalog, ExplorationLimits::new(300, 4)).unwrap();
        prop_assert_eq!(ex.explore(&case.marking), ex.explore(&case.marking));
    }
}

/// Shifts every pool value and every unprotected named value to a pool value.
fn rename(m: &Marking, protected: &BTreeSet<Value>, shift: u32) -> Marking {
    let mut map: BTreeMap<Value, Value> = BTreeMap::new();
    let mut next: BTreeMap<Sym, u32> = BTreeMap::new();
    for v in m.values().into_iter().rev() {
        if protected.contains(&v) {
            continue;
        }
        let i = next.entry(v.ty).or_insert(100 + shift);
        map.insert(v, Value::pool(v.ty, *i));
        *i += shift;
    }
    let mut out = Marking::empty(m.place_count());
    for (p, ms) in m.iter() {
        for (t, k) in ms.iter() {
            out.add(p, t.iter().map(|v| map.get(v).copied().unwrap_or(*v)).collect(), k);
        }
    }
    out
}

/// A marking on the same places, obtained by swapping or dropping values of `m`.
fn other_marking(m: &Marking, seed: u64) -> Marking {
    let vals: Vec<Value> = m.values().into_iter().collect();
    let mut out = Marking::empty(m.place_count());
    for (i, (p, ms)) in m.iter().enumerate() {
        for (j, (t, k)) in ms.iter().enumerate() {
            let bit = (seed >> ((i * 7 + j) % 60)) & 3;
            let t: Vec<Value> = match bit {
                0 => t.clone(),
                1 => t.iter().map(|v| vals.iter().rev().find(|w| w.ty == v.ty).copied().unwrap_or(*v)).collect(),
                2 => continue,
                _ => t.iter().map(|v| Value::pool(v.ty, 50 + (seed % 3) as u32)).collect(),
            };
            out.add(p, t, k);
        }
    }
    out
}

/// Every instance with at most `max` facts per relation over the given domain.
fn all_instances(schema: &CatalogSchema, dom: &BTreeMap<Sym, Vec<Value>>, max: usize) -> Vec<CatalogInstance> {
    let mut out = vec![CatalogInstance::new()];
    for rel in &schema.relations {
        let tuples: Vec<Vec<Value>> = oracles::assignments(
            &rel.attrs.iter().enumerate().map(|(i, a)| clognet::query::Var::new(&format!("v{i}"), a.ty.as_str())).collect::<Vec<_>>(),
            dom,
        )
        .into_iter()
        .map(|s| (0..rel.arity()).map(|i| s.get(Sym::new(&format!("v{i}"))).unwrap()).collect())
        .collect();
        let mut next = Vec::new();
        for base in &out {
            for mask in 0u32..(1 << tuples.len()) {
                if mask.count_ones() as usize > max {
                    continue;
                }
                let mut c = base.clone();
                for (i, t) in tuples.iter().enumerate() {
                    if mask & (1 << i) != 0 {
                        c.insert(rel.name, t.clone());
                    }
                }
                next.push(c);
            }
        }
        out = next;
    }
    out.into_iter().filter(|c| oracles::instance_ok(schema, c)).collect()
}

fn catalogs_isomorphic(a: &CatalogInstance, b: &CatalogInstance, dom: &BTreeMap<Sym, Vec<Value>>) -> bool {
    // encode each instance as a marking with one place per relation
    let rels: Vec<Sym> = a.relations().map(|(r, _)| r).chain(b.relations().map(|(r, _)| r)).collect::<BTreeSet<_>>().into_iter().collect();
    let as_marking = |c: &CatalogInstance| {
        let mut m = Marking::empty(rels.len());
        for (i, r) in rels.iter().enumerate() {
            for t in c.facts(*r) {
                m.add(PlaceId(i), t.clone(), 1);
            }
        }
        m
    };
    let types = TypeDomain::new().with_unbounded(&dom.keys().map(|k| k.as_str()).collect::<Vec<_>>());
    oracles::isomorphic(&as_marking(a), &as_marking(b), &BTreeSet::new(), &types)
}

#[test]
fn enumeration_covers_every_instance_exactly_once() {
    let schema = CatalogSchema::new(
        TypeDomain::new().with_unbounded(&["D", "E"]),
        vec![RelationSchema::new("T", &[("k", "D")]), RelationSchema::new("S", &[("k", "E"), ("t", "D")]).with_fk(1, "T")],
    );
    let dom: BTreeMap<Sym, Vec<Value>> = [
        (Sym::new("D"), vec![Value::pool("D", 0), Value::pool("D", 1)]),
        (Sym::new("E"), vec![Value::pool("E", 0), Value::pool("E", 1)]),
    ]
    .into_iter()
    .collect();
    let got = enumerate_catalogs(&schema, &CatalogBounds::new(2, 2)).unwrap();
    for (i, a) in got.iter().enumerate() {
        assert!(oracles::instance_ok(&schema, a));
        for b in &got[i + 1..] {
            assert!(!catalogs_isomorphic(a, b, &dom), "{a:?} and {b:?} are renamings");
        }
    }
    for c in all_instances(&schema, &dom, 2) {
        assert!(got.iter().any(|g| catalogs_isomorphic(g, &c, &dom)), "missing {c:?}");
    }
}
