use std::collections::BTreeSet;
use std::path::PathBuf;

use clognet::dsl::{parse_project, parse_str, Project};
use clognet::explore::*;
use clognet::model::{CatalogSchema, RelationSchema, TypeDomain, Value};
use clognet::net::{canonicalize_marking, FreshPolicy, Marking};
use clognet::oracles;
use clognet::Sym;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load(files: &[&str]) -> Project {
    let paths: Vec<PathBuf> = files.iter().map(|f| fixture(f)).collect();
    let p = parse_project(&paths).unwrap_or_else(|r| panic!("{r}"));
    assert!(!p.validate().has_errors(), "{}", p.validate());
    p
}

fn fixture_with_small_catalog(mutant: bool) -> Project {
    let net = if mutant { "order_to_delivery_mutant.clog" } else { "order_to_delivery.clog" };
    load(&[net, "small_catalog.clog"])
}

#[test]
fn appendix_net_has_one_state_and_a_self_loop() {
    let p = load(&["appendix_net.clog"]);
    let ex = Explorer::new(&p.net, &p.catalog, ExplorationLimits::new(100, 10).with_fresh_cap(3)).unwrap();
    let ts = ex.explore(&p.marking);
    assert_eq!(ts.states.len(), 1);
    assert_eq!(ts.edges.len(), 1);
    assert_eq!((ts.edges[0].from, ts.edges[0].to), (0, 0));
    assert!(ts.exhausted);
    let expected = Marking::for_net(&p.net).with(p.net.place_id("p").unwrap(), vec![Value::pool("String", 0)], 1);
    assert_eq!(ts.states[0], expected);
}

#[test]
fn net_without_transitions_has_one_state() {
    let p = parse_str("t.clog", "type T; place p: T; marking { p: a; }").unwrap();
    let ts = Explorer::new(&p.net, &p.catalog, ExplorationLimits::default()).unwrap().explore(&p.marking);
    assert_eq!((ts.states.len(), ts.edges.len(), ts.exhausted), (1, 0, true));
}

#[test]
fn zero_limits_are_rejected() {
    let p = load(&["appendix_net.clog"]);
    assert!(matches!(Explorer::new(&p.net, &p.catalog, ExplorationLimits::new(0, 3)), Err(ExploreError::InvalidLimits(_))));
    let lim = ExplorationLimits::new(10, 3).with_fresh_cap(0);
    assert!(matches!(Explorer::new(&p.net, &p.catalog, lim), Err(ExploreError::InvalidLimits(_))));
}

#[test]
fn fixture_is_safe_up_to_depth_ten() {
    let p = fixture_with_small_catalog(false);
    let psi = p.property("delivered_working").unwrap();
    let out = check_safety(&p.net, &p.marking, &p.catalog, psi, &ExplorationLimits::new(5000, 10)).unwrap();
    let Verdict::Safe(s) = out.verdict else { panic!("expected SAFE") };
    assert!(!s.exhausted, "the fixture creates orders without bound");
    assert_eq!(s.max_depth_reached, 10);
    assert_eq!(out.fresh.violations, 0);
}

#[test]
fn mutant_is_unsafe_with_short_replayable_witness() {
    let p = fixture_with_small_catalog(true);
    let psi = p.property("delivered_working").unwrap();
    let out = check_safety(&p.net, &p.marking, &p.catalog, psi, &ExplorationLimits::new(5000, 10)).unwrap();
    let w = out.verdict.witness().expect("UNSAFE");
    assert!(w.len() <= 7);
    let names: Vec<&str> = w.steps.iter().map(|s| s.transition.as_str()).collect();
    assert_eq!(names, ["new order", "add item", "use", "load", "drive", "deliver"]);
    w.replay(&p.net, psi).unwrap();
}

#[test]
fn tampered_witness_fails_replay() {
    let p = fixture_with_small_catalog(true);
    let psi = p.property("delivered_working").unwrap();
    let out = check_safety(&p.net, &p.marking, &p.catalog, psi, &ExplorationLimits::new(5000, 10)).unwrap();
    let mut w = out.verdict.witness().unwrap().clone();
    w.steps.remove(2);
    assert!(w.replay(&p.net, psi).is_err());
}

#[test]
fn unknown_place_in_property_is_a_type_error() {
    let p = load(&["appendix_net.clog"]);
    let q = parse_str("q.clog", "type String; place p: String; property bad: nowhere >= 1;");
    // the resolver rejects it already
    assert!(q.is_err());
    let psi = Property {
        name: Sym::new("bad"),
        vars: vec![],
        body: PropFormula::Count { place: Sym::new("nowhere"), min: 1 },
        loc: Default::default(),
    };
    let r = check_safety(&p.net, &p.marking, &p.catalog, &psi, &ExplorationLimits::default());
    assert!(matches!(r, Err(ExploreError::Property(_))));
}

#[test]
fn exploration_is_deterministic() {
    let p = fixture_with_small_catalog(false);
    let ex = Explorer::new(&p.net, &p.catalog, ExplorationLimits::new(2000, 6)).unwrap();
    assert_eq!(ex.explore(&p.marking), ex.explore(&p.marking));
}

/// At small depth the canonical exploration must visit exactly the orbits of
/// the exploration that enumerates three fresh values without symmetry.
#[test]
fn canonical_states_are_orbits_of_enumerated_states() {
    let p = fixture_with_small_catalog(false);
    let lim = ExplorationLimits::new(100_000, 3);
    let canon = Explorer::new(&p.net, &p.catalog, lim.clone()).unwrap();
    let plain = Explorer::new(&p.net, &p.catalog, lim).unwrap().fresh_policy(FreshPolicy::Enumerate(3)).symmetry(false);
    let a: BTreeSet<Marking> = canon.explore(&p.marking).states.into_iter().collect();
    let b: BTreeSet<Marking> = plain
        .explore(&p.marking)
        .states
        .iter()
        .map(|m| canonicalize_marking(m, canon.protected(), &p.net.schema.types))
        .collect();
    assert_eq!(a, b);
    // regression snapshot at depth 6
    let deeper = Explorer::new(&p.net, &p.catalog, ExplorationLimits::new(100_000, 6)).unwrap().explore(&p.marking);
    assert_eq!(deeper.states.len(), 126);
}

#[test]
fn bounded_appendix_net() {
    let p = load(&["appendix_net.clog"]);
    let r = check_bounded(&p.net, &p.marking, &p.catalog, 1, &ExplorationLimits::new(100, 10)).unwrap();
    assert_eq!(r, BoundCheck::Bounded { states: 1, exhausted: true });
}

#[test]
fn zero_bound_is_violated_immediately() {
    let p = load(&["appendix_net.clog"]);
    let r = check_bounded(&p.net, &p.marking, &p.catalog, 0, &ExplorationLimits::new(100, 10)).unwrap();
    assert!(matches!(r, BoundCheck::Violation { tokens: 1, ref steps, .. } if steps.is_empty()));
}

#[test]
fn ready_overflows_after_two_add_items() {
    let mut p = fixture_with_small_catalog(false);
    // one truck and at most one order, so `ready` is the first place to overflow
    let pool = p.net.place_id("pool").unwrap();
    p.marking.tokens_mut(pool).remove(&vec![Value::named("Plate", "pl2"), Value::named("TruckType", "flat")], 1);
    let lim = ExplorationLimits::new(5000, 10).with_fresh_cap_for("Order", 1);
    let r = check_bounded(&p.net, &p.marking, &p.catalog, 1, &lim).unwrap();
    let BoundCheck::Violation { place, tokens, steps, .. } = r else { panic!("expected a violation") };
    assert_eq!(p.net.place(place).name.as_str(), "ready");
    assert_eq!(tokens, 2);
    let names: Vec<&str> = steps.iter().map(|s| s.transition.as_str()).collect();
    assert_eq!(names, ["new order", "add item", "add item"]);
}

fn unary_schema() -> CatalogSchema {
    CatalogSchema::new(TypeDomain::new().with_unbounded(&["D"]), vec![RelationSchema::new("R", &[("a", "D")])])
}

#[test]
fn enumerate_unary_relation() {
    let cats = enumerate_catalogs(&unary_schema(), &CatalogBounds::new(2, 2)).unwrap();
    assert_eq!(cats.len(), 3);
    assert_eq!(cats.iter().map(|c| c.fact_count()).collect::<Vec<_>>(), [0, 1, 2]);
}

#[test]
fn enumerate_zero_facts_gives_empty_instance() {
    let cats = enumerate_catalogs(&unary_schema(), &CatalogBounds::new(0, 3)).unwrap();
    assert_eq!(cats.len(), 1);
    assert!(cats[0].is_empty());
}

#[test]
fn enumerate_respects_foreign_keys() {
    let schema = CatalogSchema::new(
        TypeDomain::new().with_unbounded(&["D", "E"]),
        vec![RelationSchema::new("T", &[("k", "D")]), RelationSchema::new("S", &[("k", "E"), ("t", "D")]).with_fk(1, "T")],
    );
    let forced = CatalogBounds::new(2, 2).with_relation_max("T", 0);
    for c in enumerate_catalogs(&schema, &forced).unwrap() {
        assert!(c.is_empty());
    }
    for c in enumerate_catalogs(&schema, &CatalogBounds::new(2, 2)).unwrap() {
        assert!(oracles::instance_ok(&schema, &c));
    }
}

#[test]
fn pcheck_fixture_and_mutant() {
    let p = fixture_with_small_catalog(false);
    let psi = p.property("delivered_working").unwrap();
    let bounds = CatalogBounds::new(1, 1);
    let lim = ExplorationLimits::new(3000, 8);
    let safe = parameterised_check(&p.net, &p.marking, psi, &p.net.schema, &bounds, &lim).unwrap();
    assert!(!safe.verdict.is_unsafe());
    let m = fixture_with_small_catalog(true);
    let out = parameterised_check(&m.net, &m.marking, psi, &m.net.schema, &bounds, &lim).unwrap();
    let w = out.verdict.witness().expect("UNSAFE");
    assert!(!w.catalog.facts(Sym::new("ProdCat")).is_empty());
    assert!(!w.catalog.facts(Sym::new("Comp")).is_empty());
    w.replay(&m.net, psi).unwrap();
}

#[test]
fn unsatisfiable_guard_never_fires() {
    let src = "type T; place p: T; place q: T; transition t { in p: x; out q: x; cond x != x; } marking { p: a; } property reached: q >= 1;";
    let p = parse_str("g.clog", src).unwrap();
    let psi = p.property("reached").unwrap();
    let schema = p.net.schema.clone();
    let out = parameterised_check(&p.net, &p.marking, psi, &schema, &CatalogBounds::new(1, 1), &ExplorationLimits::default()).unwrap();
    let Verdict::Safe(s) = out.verdict else { panic!() };
    assert_eq!((s.edges, s.exhausted), (0, true));
}

#[test]
fn classify_fixture_and_crorder_variant() {
    let p = load(&["order_to_delivery.clog"]);
    let r = classify_conservative(&p.net);
    assert!(!r.is_conservative());
    assert_eq!(r.occurrences.len(), 1);
    let o = &r.occurrences[0];
    assert_eq!((o.transition.as_str(), o.place.as_str(), o.position, o.var.name.as_str()), ("new order", "working", 0, "o"));
    let c = load(&["order_to_delivery_crorder.clog"]);
    assert!(classify_conservative(&c.net).is_conservative());
}

#[test]
fn conservativize_matches_crorder_up_to_naming() {
    let p = load(&["order_to_delivery.clog"]);
    let (net, m) = conservativize(&p.net, &p.marking, ConservativeMode::Catalog).unwrap();
    assert_eq!(m, p.marking);
    assert!(classify_conservative(&net).is_conservative());
    let printed = clognet::dsl::print_project(&Project { net, catalog: Default::default(), marking: m, properties: vec![] });
    let renamed = printed.replace("Created_Order(id: Order key)", "CrOrder(o: Order key)").replace("Created_Order", "CrOrder");
    let q = load(&["order_to_delivery_crorder.clog"]);
    let expected = clognet::dsl::print_project(&Project { properties: vec![], ..q });
    assert_eq!(renamed, expected);
}

#[test]
fn conservativize_is_identity_on_conservative_nets() {
    let p = load(&["bounded.clog"]);
    let (net, m) = conservativize(&p.net, &p.marking, ConservativeMode::Catalog).unwrap();
    assert_eq!((net, m), (p.net.clone(), p.marking.clone()));
}

#[test]
fn provision_limits_replacement_values() {
    let p = load(&["appendix_net.clog"]);
    assert!(conservativize(&p.net, &p.marking, ConservativeMode::Provision(0)).is_err());
    let (net, m) = conservativize(&p.net, &p.marking, ConservativeMode::Provision(2)).unwrap();
    assert!(classify_conservative(&net).is_conservative());
    let ts = Explorer::new(&net, &p.catalog, ExplorationLimits::new(1000, 20)).unwrap().symmetry(false).explore(&m);
    assert!(ts.exhausted);
    let place = net.place_id("p").unwrap();
    let seen: BTreeSet<Value> = ts.states.iter().flat_map(|s| s.tokens(place).support().flatten().copied().collect::<Vec<_>>()).collect();
    let original = Value::named("String", "a");
    assert!(seen.iter().filter(|v| **v != original).count() <= 2);
}

/// Conservativized net with `Created_Order` bounded by k, versus the
/// original with a fresh cap of k orders.
fn bounded_pool_equivalence(mutant: bool, k: usize) -> (bool, bool) {
    let p = fixture_with_small_catalog(mutant);
    let psi = p.property("delivered_working").unwrap();
    let lim = ExplorationLimits::new(20_000, 12);
    let original = check_safety(&p.net, &p.marking, &p.catalog, psi, &lim.clone().with_fresh_cap_for("Order", k)).unwrap();
    let (net, m) = conservativize(&p.net, &p.marking, ConservativeMode::Catalog).unwrap();
    let bounds = CatalogBounds::new(k, 1).with_pool_for("Order", k as u32).fix_from(&p.catalog, &["ProdCat", "Comp"]);
    let conservative = parameterised_check(&net, &m, psi, &net.schema, &bounds, &lim).unwrap();
    (original.verdict.is_unsafe(), conservative.verdict.is_unsafe())
}

#[test]
fn catalog_mode_agrees_on_the_mutant() {
    assert_eq!(bounded_pool_equivalence(true, 1), (true, true));
    assert_eq!(bounded_pool_equivalence(true, 2), (true, true));
}

/// `Created_Order` facts can be extracted more than once, so a paid order can
/// re-enter `working`; the fresh-value original never reuses an order.
#[test]
fn catalog_mode_lets_new_order_reuse_an_order() {
    assert_eq!(bounded_pool_equivalence(false, 1), (false, true));
    let p = fixture_with_small_catalog(false);
    let psi = p.property("delivered_working").unwrap();
    let (net, m) = conservativize(&p.net, &p.marking, ConservativeMode::Catalog).unwrap();
    let bounds = CatalogBounds::new(1, 1).fix_from(&p.catalog, &["ProdCat", "Comp"]);
    let out = parameterised_check(&net, &m, psi, &net.schema, &bounds, &ExplorationLimits::new(20_000, 12)).unwrap();
    let w = out.verdict.witness().unwrap();
    let created: Vec<_> = w.steps.iter().filter(|s| s.transition.as_str() == "new order").map(|s| s.binding.clone()).collect();
    assert_eq!(created.len(), 2);
    assert_eq!(created[0], created[1]);
}

#[test]
fn provision_mode_preserves_verdicts() {
    for (mutant, unsafe_expected) in [(false, false), (true, true)] {
        let p = fixture_with_small_catalog(mutant);
        let psi = p.property("delivered_working").unwrap();
        for b in 1..=2 {
            let (net, m) = conservativize(&p.net, &p.marking, ConservativeMode::Provision(b)).unwrap();
            let lim = ExplorationLimits::new(20_000, 12);
            let conservative = check_safety(&net, &m, &p.catalog, psi, &lim).unwrap();
            let original = check_safety(&p.net, &p.marking, &p.catalog, psi, &lim.clone().with_fresh_cap_for("Order", b)).unwrap();
            assert_eq!(conservative.verdict.is_unsafe(), unsafe_expected);
            assert_eq!(original.verdict.is_unsafe(), unsafe_expected);
        }
    }
}

#[test]
fn fk_cycles_are_detected() {
    let acyclic = CatalogSchema::new(
        TypeDomain::new().with_unbounded(&["D", "E"]),
        vec![RelationSchema::new("T", &[("k", "D")]), RelationSchema::new("S", &[("k", "E"), ("t", "D")]).with_fk(1, "T")],
    );
    assert_eq!(fk_cycle(&acyclic), None);
    let cyclic = CatalogSchema::new(
        TypeDomain::new().with_unbounded(&["D", "E"]),
        vec![
            RelationSchema::new("T", &[("k", "D"), ("s", "E")]).with_fk(1, "S"),
            RelationSchema::new("S", &[("k", "E"), ("t", "D")]).with_fk(1, "T"),
        ],
    );
    assert_eq!(fk_cycle(&cyclic).map(|c| c.len()), Some(2));
}

#[test]
fn reports_are_stable() {
    let p = fixture_with_small_catalog(true);
    let psi = p.property("delivered_working").unwrap();
    let lim = ExplorationLimits::new(5000, 10);
    let a = check_safety(&p.net, &p.marking, &p.catalog, psi, &lim).unwrap();
    let b = check_safety(&p.net, &p.marking, &p.catalog, psi, &lim).unwrap();
    assert_eq!(a.to_json(&p.net, "delivered_working").to_string(), b.to_json(&p.net, "delivered_working").to_string());
    let j = a.to_json(&p.net, "delivered_working");
    assert_eq!(j["verdict"], "UNSAFE");
    assert_eq!(j["steps"][0]["transition"], "new order");
    assert!(a.transcript(&p.net, "delivered_working").starts_with("UNSAFE"));
}
