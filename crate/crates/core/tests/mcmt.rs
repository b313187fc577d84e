use std::path::PathBuf;

use proptest::prelude::*;

use clognet::dsl::{parse_project, parse_str, Project};
use clognet::explore::*;
use clognet::mcmt::*;
use clognet::net::Marking;
use clognet::oracles::{gen_net_case, rng_for};
use clognet::query::{Term, Var};
use clognet::report::{Loc, Severity};
use clognet::Sym;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load(file: &str) -> Project {
    parse_project(&[fixture(file)]).unwrap_or_else(|r| panic!("{r}"))
}

fn src(text: &str) -> Project {
    parse_str("t.clog", text).unwrap_or_else(|r| panic!("{r}"))
}

fn encode_fixture(file: &str, prop: &str) -> Encoding {
    let p = load(file);
    encode(&p.net, &p.marking, p.property(prop).unwrap()).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

#[test]
fn appendix_net_matches_golden_file() {
    let e = encode_fixture("appendix_net.clog", "nonempty");
    assert_eq!(e.document.render(), golden("appendix_net.mcmt"));
}

#[test]
fn order_to_delivery_matches_golden_file() {
    let e = encode_fixture("order_to_delivery.clog", "delivered_working");
    assert_eq!(e.document.render(), golden("order_to_delivery.mcmt"));
}

#[test]
fn encoding_is_deterministic() {
    let a = encode_fixture("order_to_delivery.clog", "delivered_working").document.render();
    let b = encode_fixture("order_to_delivery.clog", "delivered_working").document.render();
    assert_eq!(a, b);
}

#[test]
fn golden_files_pass_structural_checks() {
    for f in ["appendix_net.mcmt", "order_to_delivery.mcmt"] {
        assert_eq!(check_document(&golden(f)), vec![], "{f}");
    }
}

#[test]
fn fixture_has_one_uguard_for_its_single_fresh_variable() {
    assert_eq!(count_uguards(&golden("order_to_delivery.mcmt")), 1);
    let e = encode_fixture("order_to_delivery.clog", "delivered_working");
    let with_uguard: Vec<_> = e.document.transitions().filter(|t| !t.uguard.is_empty()).map(|t| t.comment.clone().unwrap()).collect();
    assert_eq!(with_uguard, vec!["new order".to_string()]);
}

#[test]
fn initial_marking_statement_is_guarded_by_the_flag() {
    let e = encode_fixture("order_to_delivery.clog", "delivered_working");
    let first = e.document.transitions().next().unwrap();
    assert!(first.guard.contains(&"(= init_fl TRUE)".to_string()));
    for t in e.document.transitions().skip(1) {
        assert_eq!(t.guard[0], "(= init_fl FALSE)");
    }
}

#[test]
fn appendix_transition_fits_the_supported_budget() {
    let e = encode_fixture("appendix_net.clog", "nonempty");
    let t = e.budgets.iter().find(|(n, _)| n == "t").unwrap().1;
    assert_eq!((t.existential, t.universal), (2, 1));
    assert!(!t.exceeds_supported());
    assert!(e.diagnostics.iter().all(|d| d.code != "index-budget"));
}

#[test]
fn load_exceeds_the_supported_budget_with_a_warning() {
    let e = encode_fixture("order_to_delivery.clog", "delivered_working");
    let load = e.budgets.iter().find(|(n, _)| n == "load").unwrap().1;
    assert_eq!((load.existential, load.universal), (6, 0));
    let w: Vec<_> = e.diagnostics.iter().filter(|d| d.code == "index-budget" && d.message.contains("load")).collect();
    assert_eq!(w.len(), 1);
    assert!(w[0].message.contains("two existentially quantified and one universally quantified"), "{}", w[0].message);
}

#[test]
fn recounted_budgets_agree_with_the_statements() {
    for (f, prop) in [("appendix_net.clog", "nonempty"), ("order_to_delivery.clog", "delivered_working"), ("bounded.clog", "both_done")] {
        let e = encode_fixture(f, prop);
        let stated: Vec<IndexBudget> = e.document.transitions().map(|t| t.budget()).collect();
        assert_eq!(recount_budgets(&e.document.render()), stated, "{f}");
    }
}

#[test]
fn case_insensitive_type_clash_is_an_error() {
    let p = src("type Order; type order; place a: Order; place b: order; property q: a >= 1;");
    let err = encode(&p.net, &p.marking, p.property("q").unwrap()).unwrap_err();
    assert!(matches!(err, EncodeError::Collision { .. }), "{err:?}");
}

#[test]
fn empty_constant_set_omits_db_constants() {
    let p = src("type T; place p: T; transition t { in p: x; out p: x; } property q: p >= 1;");
    let text = encode(&p.net, &p.marking, p.property("q").unwrap()).unwrap().document.render();
    assert!(!text.contains(":db_constants"));
    assert!(text.contains(":db_sorts T\n"));
}

#[test]
fn schema_defines_one_function_per_attribute() {
    let p = load("order_to_delivery.clog");
    let (stmts, diags) = encode_schema(&p.net.schema, &Default::default()).unwrap();
    let text: String = stmts.iter().map(|s| s.to_string()).collect();
    assert!(text.contains(":smt (define Comp_p ::(-> CId ProdType))\n"), "{text}");
    assert!(text.contains(":smt (define Comp_t ::(-> CId TruckType))\n"));
    assert!(text.contains(":smt (define ProdCat_mem ::(-> ProdType BOOLE))\n"));
    assert!(diags.iter().any(|d| d.code == "key-only-relation"));
}

#[test]
fn net_without_places_is_reported() {
    let p = src("type T;");
    let (stmts, diags) = encode_places(&p.net);
    assert!(stmts.iter().all(|s| !matches!(s, Statement::Local { .. })));
    assert!(diags.iter().any(|d| d.code == "no-places" && d.severity == Severity::Error));
}

#[test]
fn places_become_one_array_per_component() {
    let p = load("order_to_delivery.clog");
    let (stmts, _) = encode_places(&p.net);
    let text: String = stmts.iter().map(|s| s.to_string()).collect();
    assert!(text.contains(":local working_1 Order\n"));
    assert!(text.contains("(= working_1[x] NULL_Order)"));
    let truck = stmts.iter().filter(|s| matches!(s, Statement::Local { name, .. } if name.starts_with("in_truck_"))).count();
    assert_eq!(truck, 3);
}

#[test]
fn initial_marking_with_one_token() {
    let p = src("type T; type U; place p: (T, U); marking { p: (a, b); }");
    let t = encode_initial_marking(&p.net, &p.marking);
    assert_eq!(t.vars, vec!["i1"]);
    assert_eq!(t.cases.len(), 2);
    assert_eq!(t.cases[0].cond.as_deref(), Some("(= j i1)"));
    assert_eq!(t.cases[0].vals, vec!["a", "b", "FALSE"]);
    assert_eq!(t.cases[1].cond, None);
    assert_eq!(t.cases[1].vals, vec!["p_1[j]", "p_2[j]", "FALSE"]);
}

#[test]
fn empty_initial_marking_has_only_the_default_case() {
    let p = src("type T; place p: T;");
    let t = encode_initial_marking(&p.net, &Marking::for_net(&p.net));
    assert!(t.vars.is_empty());
    assert_eq!(t.cases.len(), 1);
    assert_eq!(t.cases[0].cond, None);
}

#[test]
fn repeated_tokens_take_distinct_indexes() {
    let p = src("type T; place p: T; marking { p: 2*a; }");
    let t = encode_initial_marking(&p.net, &p.marking);
    assert_eq!(t.vars, vec!["i1", "i2"]);
    assert!(t.guard.contains(&"(not (= i1 i2))".to_string()));
    assert_eq!(t.cases.len(), 3);
}

#[test]
fn unguarded_transition_without_fresh_values_has_no_uguard() {
    let p = load("order_to_delivery.clog");
    let e = encode_transition(&p.net, p.net.transition_id("use").unwrap()).unwrap();
    assert_eq!(e.statements.len(), 1);
    assert!(e.statements[0].uguard.is_empty());
    assert!(e.statements[0].eevars.is_empty());
    assert_eq!(e.budget, IndexBudget { existential: 2, universal: 0 });
}

#[test]
fn token_count_property_uses_distinct_indexes() {
    let p = src("type D; place p: D; property q: p('a') >= 2;");
    let Statement::Unsafe { vars, conjuncts } = encode_property(&p.net, p.property("q").unwrap()).unwrap() else { panic!() };
    assert_eq!(vars, vec!["z1", "z2"]);
    for lit in ["(not (= p_1[z1] NULL_D))", "(= p_1[z1] a)", "(= p_1[z2] p_1[z1])", "(not (= z1 z2))"] {
        assert!(conjuncts.contains(&lit.to_string()), "{lit} missing from {conjuncts:?}");
    }
}

#[test]
fn plain_count_property_does_not_equate_tokens() {
    let p = src("type D; place p: (D, D); property q: p >= 2;");
    let Statement::Unsafe { conjuncts, .. } = encode_property(&p.net, p.property("q").unwrap()).unwrap() else { panic!() };
    assert!(conjuncts.contains(&"(not (= p_1[z2] NULL_D))".to_string()));
    assert!(conjuncts.iter().all(|l| !l.starts_with("(= ")), "{conjuncts:?}");
}

#[test]
fn data_variable_clashing_with_a_type_is_renamed() {
    let p = src("type K; relation R(k: K key); place p: K; transition t { out p: k; query R(k); } property q: p >= 1;");
    let e = encode(&p.net, &p.marking, p.property("q").unwrap()).unwrap();
    let t = e.document.transitions().nth(1).unwrap();
    assert_eq!(t.eevars, vec![("k_1".to_string(), "K".to_string())]);
    assert_eq!(check_document(&e.document.render()), vec![]);
}

#[test]
fn fixture_property_links_shared_variables() {
    let p = load("order_to_delivery.clog");
    let u = encode_property(&p.net, p.property("delivered_working").unwrap()).unwrap().to_string();
    assert!(u.contains("(= working_1[z2] delivered_2[z1])"), "{u}");
}

#[test]
fn negated_token_count_is_unsupported() {
    let p = src("type D; place p: D; place r: D; property q: exists x. p(x) >= 1 and not r(x) >= 1;");
    let err = encode_property(&p.net, p.property("q").unwrap()).unwrap_err();
    assert!(matches!(err, EncodeError::Unsupported(_)), "{err:?}");
}

#[test]
fn union_and_negated_atoms_split_into_statements() {
    let p = src(
        "type K; type D; relation R(k: K key, a: D, b: D); relation S(k: K key);
         place p: (K, D, D);
         transition u { in p: (k, x, y); query R(k, x, y) or S(k); }
         transition n { in p: (k, x, y); query not R(k, x, y); }
         transition m { in p: (k, x, y); query not S(k); }",
    );
    let u = encode_transition(&p.net, p.net.transition_id("u").unwrap()).unwrap();
    assert_eq!(u.statements.len(), 2);
    assert_eq!(u.statements[0].comment.as_deref(), Some("u [1/2]"));
    let n = encode_transition(&p.net, p.net.transition_id("n").unwrap()).unwrap();
    assert_eq!(n.statements.len(), 2);
    assert!(n.statements[0].guard.iter().any(|g| g.starts_with("(not (= (R_a ")));
    assert!(n.statements[1].guard.iter().any(|g| g.starts_with("(not (= (R_b ")));
    let m = encode_transition(&p.net, p.net.transition_id("m").unwrap()).unwrap();
    assert_eq!(m.statements.len(), 1);
    assert!(m.statements[0].guard.iter().any(|g| g.starts_with("(= (S_mem ") && g.ends_with(" FALSE)")));
}

/// Array slots needed to hold every reachable marking and the outputs of
/// one firing, or `None` when the marking graph is not exhausted.
fn array_size(cat: &clognet::model::CatalogInstance, net: &clognet::net::Net, m0: &Marking) -> Option<(usize, usize)> {
    let ex = Explorer::new(net, cat, ExplorationLimits::new(3000, 40)).ok()?;
    let ts = ex.explore(m0);
    if !ts.exhausted {
        return None;
    }
    let tokens = ts.states.iter().map(Marking::total_tokens).max().unwrap_or(0);
    let outs = net.transitions.iter().map(|t| t.outputs.iter().map(|a| a.total_mult() as usize).sum::<usize>()).max().unwrap_or(0);
    Some((tokens + outs, ts.states.len()))
}

fn agree(net: &clognet::net::Net, m0: &Marking, cat: &clognet::model::CatalogInstance, psi: &Property, size: usize) -> Option<(bool, bool)> {
    let explicit = check_safety(net, m0, cat, psi, &ExplorationLimits::new(3000, 40)).unwrap();
    if let Verdict::Safe(s) = &explicit.verdict {
        if !s.exhausted {
            return None;
        }
    }
    let e = encode(net, m0, psi).unwrap();
    let it = Interpreter::new(&e.document, cat, size).unwrap();
    let symbolic = match it.run(200_000) {
        InterpOutcome::Unsafe { .. } => true,
        InterpOutcome::Safe { .. } => false,
        InterpOutcome::Incomplete { .. } => return None,
    };
    Some((explicit.verdict.is_unsafe(), symbolic))
}

#[test]
fn interpreter_agrees_with_explicit_check_on_bounded_net() {
    let text = std::fs::read_to_string(fixture("bounded.clog")).unwrap() + "\nproperty some_done: exists x. done(x) >= 1;\n";
    let p = src(&text);
    let (size, _) = array_size(&p.catalog, &p.net, &p.marking).unwrap();
    let mut verdicts = Vec::new();
    for prop in ["both_done", "normal_done", "some_done"] {
        let (a, b) = agree(&p.net, &p.marking, &p.catalog, p.property(prop).unwrap(), size).unwrap();
        assert_eq!(a, b, "{prop}");
        verdicts.push(a);
    }
    assert_eq!(verdicts, vec![false, false, true]);
}

fn token_property(net: &clognet::net::Net, place: usize, min: u32, with_args: bool) -> Property {
    let pl = &net.places[place];
    let vars: Vec<Var> = if with_args {
        pl.color.iter().enumerate().map(|(i, ty)| Var::new(&format!("v{i}"), ty.as_str())).collect()
    } else {
        Vec::new()
    };
    let body = if with_args {
        PropFormula::Tokens { place: pl.name, args: vars.iter().map(|v| Term::Var(*v)).collect(), min }
    } else {
        PropFormula::Count { place: pl.name, min }
    };
    Property { name: Sym::new("q"), vars, body, loc: Loc::NONE }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, max_global_rejects: 4096, ..ProptestConfig::default() })]

    #[test]
    fn interpreter_agrees_with_explicit_check_on_random_nets(seed in any::<u64>(), place in 0usize..4, min in 1u32..3, with_args in any::<bool>()) {
        let mut rng = rng_for(seed);
        let case = std::iter::repeat_with(|| gen_net_case(&mut rng))
            .find(|c| c.net.transitions.iter().all(|t| t.fresh_vars().is_empty()))
            .unwrap();
        let place = place % case.net.places.len();
        let psi = token_property(&case.net, place, min, with_args);
        let size = array_size(&case.catalog, &case.net, &case.marking);
        prop_assume!(matches!(size, Some((s, _)) if s <= 5));
        let (size, _) = size.unwrap();
        if let Some((a, b)) = agree(&case.net, &case.marking, &case.catalog, &psi, size.max(1)) {
            prop_assert_eq!(a, b);
        }
    }
}

