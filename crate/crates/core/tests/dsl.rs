use std::path::PathBuf;

use clognet::dsl::{parse_project, parse_str, print_project, Project};
use clognet::model::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn load(names: &[&str]) -> Project {
    let paths: Vec<PathBuf> = names.iter().map(|n| fixture(n)).collect();
    match parse_project(&paths) {
        Ok(p) => p,
        Err(r) => panic!("{r}"),
    }
}

#[test]
fn order_to_delivery_shape() {
    let p = load(&["order_to_delivery.clog", "small_catalog.clog"]);
    assert_eq!(p.net.places.len(), 8);
    assert_eq!(p.net.transitions.len(), 11);
    let report = p.validate();
    assert!(!report.has_errors(), "{report}");
    let pool = p.net.place_id("pool").unwrap();
    assert_eq!(p.marking.tokens(pool).len(), 2);
    assert!(p.catalog.contains("ProdCat".into(), &[Value::named("ProdType", "veg")]));
    assert!(p.property("delivered_working").is_some());
}

#[test]
fn every_fixture_validates() {
    for set in [
        &["appendix_net.clog"][..],
        &["order_to_delivery_mutant.clog", "small_catalog.clog"],
        &["order_to_delivery_crorder.clog", "crorder_catalog.clog"],
        &["bounded.clog"],
    ] {
        let p = load(set);
        let r = p.validate();
        assert!(!r.has_errors(), "{set:?}: {r}");
    }
}

#[test]
fn print_then_parse_is_identity() {
    for set in [
        &["appendix_net.clog"][..],
        &["order_to_delivery.clog", "small_catalog.clog"],
        &["order_to_delivery_crorder.clog", "crorder_catalog.clog"],
        &["bounded.clog"],
    ] {
        let p = load(set);
        let text = print_project(&p);
        let q = parse_str("printed.clog", &text).unwrap_or_else(|r| panic!("{r}\n{text}"));
        assert_eq!(p, q, "{text}");
        assert_eq!(text, print_project(&q));
    }
}

#[test]
fn unknown_type_in_color_points_at_the_token() {
    let r = parse_str("x.clog", "type A;\nplace p: (A, Bogus);\n").unwrap_err();
    let d = r.with_code("unknown-type");
    assert_eq!(d.len(), 1);
    let span = d[0].span.as_ref().unwrap();
    assert_eq!((span.line, span.col_start), (2, 14));
}

#[test]
fn inscription_arity_mismatch_names_both_arities() {
    let src = "type A;\nplace p: (A, A);\ntransition t { in p: x; }\n";
    let r = parse_str("x.clog", src).unwrap_err();
    let d = r.with_code("arity-mismatch");
    assert_eq!(d.len(), 1);
    assert!(d[0].message.contains('1') && d[0].message.contains('2'), "{}", d[0].message);
}

#[test]
fn syntax_errors_list_expected_tokens() {
    let r = parse_str("x.clog", "place p A;").unwrap_err();
    let msg = r.to_string();
    assert!(msg.contains("expected `:`"), "{msg}");
    assert!(msg.contains("x.clog:1:9"), "{msg}");
}

#[test]
fn conflicting_variable_types_are_reported() {
    let src = "type A; type B;\nplace p: A; place q: B;\ntransition t { in p: x; out q: x; }\n";
    let r = parse_str("x.clog", src).unwrap_err();
    assert_eq!(r.with_code("type-conflict").len(), 1, "{r}");
}

#[test]
fn query_constants_take_their_type_from_context() {
    let src = "type P; relation R(p: P key);\nplace w: P;\ntransition t { out w: x; query R(x) and x != 'veg'; }\n";
    let p = parse_str("x.clog", src).unwrap();
    let q = p.net.transitions[0].guard.query.as_ref().unwrap();
    assert!(q.consts().contains(&Value::named("P", "veg")));
}

#[test]
fn load_query_without_output_var_is_only_a_warning() {
    let p = load(&["order_to_delivery.clog", "small_catalog.clog"]);
    let r = p.validate();
    let w = r.with_code("query-no-output-var");
    assert_eq!(w.len(), 1, "{r}");
    assert!(w[0].message.contains("load"));
}
