//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use clognet::dsl::{parse_project, print_project, Project};
use clognet::explore::*;
use clognet::mcmt::{check_document, count_uguards, encode};
use clognet::net::{FreshPolicy, NetContext};
use clognet::oracles::{self, gen_net_case, gen_query_case, rng_for, seed_from_env};
use clognet::query::evaluate_query;

const FIXTURE_LIMIT: Duration = Duration::from_secs(60);
const MUTANT_LIMIT: Duration = Duration::from_secs(10);
const MUTANT_MAX_STEPS: usize = 7;
const QUERY_PAIRS: usize = 1000;
const QUERY_DEPTH: usize = 3;
const MAX_CATALOG_VALUES: usize = 4;
const NETS: usize = 200;
const ENUMERATE: u32 = 3;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().expect("workspace root")
}

fn load(files: &[&str]) -> Project {
    let paths: Vec<PathBuf> = files.iter().map(|f| root().join("fixtures").join(f)).collect();
    parse_project(&paths).unwrap_or_else(|r| panic!("{r}"))
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: String) -> Outcome {
    Outcome { pass: true, detail }
}

fn fail(detail: String) -> Outcome {
    Outcome { pass: false, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

fn fixture_bounds() -> CatalogBounds {
    CatalogBounds::new(2, 2)
}

fn fixture_limits() -> ExplorationLimits {
    ExplorationLimits::new(5000, 10)
}

fn criterion_1(fresh: &mut FreshStats) -> Outcome {
    let p = load(&["order_to_delivery.clog"]);
    let psi = p.property("delivered_working").expect("property");
    let start = Instant::now();
    let out = parameterised_check(&p.net, &p.marking, psi, &p.net.schema, &fixture_bounds(), &fixture_limits());
    let took = start.elapsed();
    let out = match out {
        Ok(o) => o,
        Err(e) => return fail(format!("check failed: {e}")),
    };
    fresh.add(out.fresh);
    match out.verdict {
        Verdict::Safe(s) if took < FIXTURE_LIMIT => pass(format!(
            "SAFE up to depth 10 / 5000 states over {} catalogs ({} states in total) in {} (limit {})",
            s.catalogs,
            s.states,
            secs(took),
            secs(FIXTURE_LIMIT)
        )),
        Verdict::Safe(s) => fail(format!("SAFE over {} catalogs but took {} (limit {})", s.catalogs, secs(took), secs(FIXTURE_LIMIT))),
        Verdict::Unsafe(w) => fail(format!("UNSAFE with a witness of {} steps", w.len())),
    }
}

fn criterion_2(fresh: &mut FreshStats) -> Outcome {
    let p = load(&["order_to_delivery.clog"]);
    let m = load(&["order_to_delivery_mutant.clog"]);
    let psi = m.property("delivered_working").expect("property");
    let paid = p.net.place_id("paid").expect("paid");
    let load_of = |q: &Project| q.net.transition(q.net.transition_id("load").expect("load")).clone();
    let mut expected = load_of(&p);
    expected.inputs.retain(|a| a.place != paid);
    expected.outputs.retain(|a| a.place != paid);
    let same_elsewhere = p.net.transitions.iter().zip(&m.net.transitions).all(|(a, b)| a.name.as_str() == "load" || a == b);
    let actual = load_of(&m);
    let strip = |t: &clognet::net::Transition| {
        (t.inputs.iter().map(|a| (a.place, a.inscriptions.clone())).collect::<Vec<_>>(), t.outputs.iter().map(|a| (a.place, a.inscriptions.clone())).collect::<Vec<_>>(), t.guard.query.clone())
    };
    if !same_elsewhere || strip(&expected) != strip(&actual) {
        return fail("the mutant differs from the fixture by more than load's arcs on paid".into());
    }
    let start = Instant::now();
    let out = parameterised_check(&m.net, &m.marking, psi, &m.net.schema, &fixture_bounds(), &fixture_limits());
    let took = start.elapsed();
    let out = match out {
        Ok(o) => o,
        Err(e) => return fail(format!("check failed: {e}")),
    };
    fresh.add(out.fresh);
    let Verdict::Unsafe(w) = out.verdict else { return fail("verdict is SAFE".into()) };
    if let Err(e) = w.replay(&m.net, psi) {
        return fail(format!("witness does not replay: {e}"));
    }
    let trace: Vec<&str> = w.steps.iter().map(|s| s.transition.as_str()).collect();
    let detail = format!("UNSAFE, witness of {} steps ({}) replays, found in {} (limits {} steps, {})", w.len(), trace.join(", "), secs(took), MUTANT_MAX_STEPS, secs(MUTANT_LIMIT));
    if w.len() <= MUTANT_MAX_STEPS && took < MUTANT_LIMIT {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_3(seed: u64) -> Outcome {
    let mut rng = rng_for(seed);
    let mut mismatches = 0;
    let mut answers = 0;
    let mut too_big = 0;
    for _ in 0..QUERY_PAIRS {
        let case = gen_query_case(&mut rng, QUERY_DEPTH);
        if case.catalog.values().len() > MAX_CATALOG_VALUES {
            too_big += 1;
        }
        let got = evaluate_query(&case.union(), &case.catalog);
        let want = oracles::brute_force_answers(&case.disjuncts, &case.catalog);
        answers += want.len();
        if got != want {
            mismatches += 1;
        }
    }
    let detail = format!("{QUERY_PAIRS} pairs (depth <= {QUERY_DEPTH}, seed {seed}), {answers} answers, {mismatches} mismatches, {too_big} catalogs over {MAX_CATALOG_VALUES} values");
    if mismatches == 0 && too_big == 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_4(seed: u64, fresh: &mut FreshStats) -> Outcome {
    let mut rng = rng_for(seed);
    let (mut mismatches, mut arithmetic, mut bindings, mut oversized) = (0, 0, 0, 0);
    for _ in 0..NETS {
        let case = gen_net_case(&mut rng);
        let nu: usize = case.net.transitions.iter().map(|t| t.fresh_vars().len()).sum();
        if case.net.places.len() > 4 || case.net.transitions.len() > 3 || nu > 1 {
            oversized += 1;
        }
        let ctx = NetContext::new(&case.net, &case.catalog);
        let val_cat = case.catalog.values();
        let val_m = case.marking.values();
        for t in case.net.transition_ids() {
            let got = ctx.enabled(&case.marking, t, FreshPolicy::Enumerate(ENUMERATE));
            let want = oracles::brute_force_enabled(&case.net, &case.marking, &case.catalog, t, ENUMERATE);
            if got != want {
                mismatches += 1;
            }
            for sigma in &got {
                bindings += 1;
                for v in case.net.transition(t).fresh_vars() {
                    let x = sigma.get(v.name).expect("bound");
                    fresh.checks += 1;
                    if val_m.contains(&x) || val_cat.contains(&x) {
                        fresh.violations += 1;
                    }
                }
                match ctx.fire(&case.marking, t, sigma) {
                    Ok(next) => {
                        if oracles::check_firing_arithmetic(&case.net, &case.marking, t, sigma, &next).is_err() {
                            arithmetic += 1;
                        }
                    }
                    Err(_) => arithmetic += 1,
                }
            }
        }
    }
    let detail = format!(
        "{NETS} nets (seed {seed}), {bindings} bindings under enumerate({ENUMERATE}), {mismatches} binding-set mismatches, {arithmetic} firing-arithmetic violations, {oversized} nets over size"
    );
    if mismatches == 0 && arithmetic == 0 && oversized == 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn criterion_5(fresh: FreshStats) -> Outcome {
    let detail = format!("{} ν-bindings checked across criteria 1-4, {} violations", fresh.checks, fresh.violations);
    if fresh.violations == 0 && fresh.checks > 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(root().join("fixtures").join(name)).expect("golden file")
}

fn criterion_6() -> Outcome {
    let mut problems = Vec::new();
    for (net, prop, gold) in [("appendix_net.clog", "nonempty", "appendix_net.mcmt"), ("order_to_delivery.clog", "delivered_working", "order_to_delivery.mcmt")] {
        let p = load(&[net]);
        let text = match encode(&p.net, &p.marking, p.property(prop).expect("property")) {
            Ok(e) => e.document.render(),
            Err(e) => {
                problems.push(format!("{net}: {e}"));
                continue;
            }
        };
        if text != golden(gold) {
            problems.push(format!("{net} differs from {gold}"));
        }
        let errs = check_document(&text);
        if !errs.is_empty() {
            problems.push(format!("{net}: {} structural errors", errs.len()));
        }
        let init = text.split("\n\n").find(|b| b.starts_with(":transition\n:comment initial marking"));
        if !init.is_some_and(|b| b.contains(":guard (= init_fl TRUE)")) {
            problems.push(format!("{net}: initial-marking transition not guarded by (= init_fl TRUE)"));
        }
    }
    let uguards = count_uguards(&golden("order_to_delivery.mcmt"));
    if uguards != 1 {
        problems.push(format!("fixture has {uguards} :uguard lines"));
    }
    if problems.is_empty() {
        pass("both documents byte-identical to golden files; declarations, one-place-per-index, 1 :uguard and init_fl guard verified".into())
    } else {
        fail(problems.join("; "))
    }
}

fn criterion_7() -> Outcome {
    let warned = |net: &str, prop: &str| -> Vec<String> {
        let p = load(&[net]);
        let e = encode(&p.net, &p.marking, p.property(prop).expect("property")).expect("encodes");
        e.diagnostics.iter().filter(|d| d.code == "index-budget").map(|d| d.message.clone()).collect()
    };
    let fixture = warned("order_to_delivery.clog", "delivered_working");
    let appendix = warned("appendix_net.clog", "nonempty");
    let load_warning = fixture.iter().any(|m| m.starts_with("`load`") && m.contains("two existentially quantified and one universally quantified"));
    let detail = format!("load warned: {load_warning}; appendix warnings: {}", appendix.len());
    if load_warning && appendix.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// Original with a fresh cap of `k` orders versus the catalog-mode net with
/// at most `k` `Created_Order` facts. Returns (original unsafe, conservative unsafe).
fn catalog_mode_verdicts(p: &Project, k: usize) -> (bool, bool) {
    let psi = p.property("delivered_working").expect("property");
    let lim = ExplorationLimits::new(20_000, 12);
    let original = check_safety(&p.net, &p.marking, &p.catalog, psi, &lim.clone().with_fresh_cap_for("Order", k)).expect("check");
    let (net, m) = conservativize(&p.net, &p.marking, ConservativeMode::Catalog).expect("conservativize");
    let bounds = CatalogBounds::new(k, 1).with_pool_for("Order", k as u32).fix_from(&p.catalog, &["ProdCat", "Comp"]);
    let cons = parameterised_check(&net, &m, psi, &net.schema, &bounds, &lim).expect("check");
    (original.verdict.is_unsafe(), cons.verdict.is_unsafe())
}

fn provision_mode_verdicts(p: &Project, b: usize) -> (bool, bool) {
    let psi = p.property("delivered_working").expect("property");
    let lim = ExplorationLimits::new(20_000, 12);
    let original = check_safety(&p.net, &p.marking, &p.catalog, psi, &lim.clone().with_fresh_cap_for("Order", b)).expect("check");
    let (net, m) = conservativize(&p.net, &p.marking, ConservativeMode::Provision(b)).expect("conservativize");
    let cons = check_safety(&net, &m, &p.catalog, psi, &lim).expect("check");
    (original.verdict.is_unsafe(), cons.verdict.is_unsafe())
}

fn criterion_8() -> Outcome {
    let p = load(&["order_to_delivery.clog"]);
    let mut notes = Vec::new();
    let mut ok = true;

    let r = classify_conservative(&p.net);
    let flagged: Vec<String> = r.occurrences.iter().map(|o| format!("{}:{}:{}", o.transition, o.place, o.var.name)).collect();
    let flags_ok = flagged == ["new order:working:o"];
    ok &= flags_ok;
    notes.push(format!("classify [{}] flags {}", if flags_ok { "ok" } else { "FAIL" }, flagged.join(",")));

    let (net, m) = conservativize(&p.net, &p.marking, ConservativeMode::Catalog).expect("conservativize");
    let printed = print_project(&Project { net: net.clone(), catalog: Default::default(), marking: m, properties: vec![] });
    let renamed = printed.replace("Created_Order(id: Order key)", "CrOrder(o: Order key)").replace("Created_Order", "CrOrder");
    let cr = load(&["order_to_delivery_crorder.clog"]);
    let expected = print_project(&Project { properties: vec![], ..cr });
    let cr_ok = renamed == expected && classify_conservative(&net).is_conservative();
    ok &= cr_ok;
    notes.push(format!("CrOrder construction [{}]", if cr_ok { "ok" } else { "FAIL" }));

    let small = |net: &str| load(&[net, "small_catalog.clog"]);
    let (fixture, mutant) = (small("order_to_delivery.clog"), small("order_to_delivery_mutant.clog"));
    let mut pool_parts = Vec::new();
    let mut pool_ok = true;
    for (name, q) in [("fixture", &fixture), ("mutant", &mutant)] {
        for k in 1..=2 {
            let (orig, cons) = catalog_mode_verdicts(q, k);
            let verdict = |u: bool| if u { "UNSAFE" } else { "SAFE" };
            if orig != cons {
                pool_ok = false;
                pool_parts.push(format!("{name} k={k}: original {} vs catalog mode {}", verdict(orig), verdict(cons)));
            }
        }
    }
    ok &= pool_ok;
    if pool_ok {
        notes.push("bounded-pool equivalence [ok] on fixture and mutant, k=1,2".into());
    } else {
        notes.push(format!(
            "bounded-pool equivalence [FAIL] {} (catalog mode lets `new order` reuse one Created_Order fact)",
            pool_parts.join(", ")
        ));
    }

    let provision_ok = [&fixture, &mutant].iter().all(|q| (1..=2).all(|b| {
        let (o, c) = provision_mode_verdicts(q, b);
        o == c
    }));
    notes.push(format!("provision mode b=1,2 [{}] (informational)", if provision_ok { "agrees" } else { "differs" }));

    Outcome { pass: ok, detail: notes.join("; ") }
}

fn run_cli(args: &[&str], cwd: &Path) -> (Option<i32>, Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_clognet")).args(args).current_dir(cwd).output().expect("binary runs");
    (out.status.code(), out.stdout, out.stderr)
}

fn criterion_9() -> Outcome {
    let root = root();
    let tmp = std::env::temp_dir().join(format!("clognet-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&tmp).expect("temp dir");
    let projects: [(&[&str], &str); 5] = [
        (&["fixtures/appendix_net.clog"], "nonempty"),
        (&["fixtures/bounded.clog"], "both_done"),
        (&["fixtures/order_to_delivery.clog", "fixtures/small_catalog.clog"], "delivered_working"),
        (&["fixtures/order_to_delivery_mutant.clog", "fixtures/small_catalog.clog"], "delivered_working"),
        (&["fixtures/order_to_delivery_crorder.clog", "fixtures/crorder_catalog.clog"], "delivered_working"),
    ];
    let mut runs = 0;
    let mut differing = Vec::new();
    for (files, prop) in projects {
        let mut base: Vec<&str> = vec!["--net"];
        base.extend(files.iter().copied());
        let out_a = tmp.join("a.out");
        let out_b = tmp.join("b.out");
        let mut commands: Vec<(String, Vec<String>, bool)> = Vec::new();
        let with = |cmd: &str, extra: &[&str]| -> Vec<String> {
            let mut v = vec![cmd.to_string()];
            v.extend(base.iter().map(|s| s.to_string()));
            v.extend(extra.iter().map(|s| s.to_string()));
            v
        };
        commands.push(("validate".into(), with("validate", &[]), false));
        commands.push(("check".into(), with("check", &["--prop", prop, "--depth", "10", "--out", "OUT"]), true));
        commands.push(("check structured".into(), with("check", &["--prop", prop, "--depth", "10", "--format", "structured"]), false));
        commands.push(("pcheck".into(), with("pcheck", &["--prop", prop, "--catalog-max-facts", "1", "--pool", "1", "--out", "OUT"]), true));
        commands.push(("encode".into(), with("encode", &["--prop", prop, "--out", "OUT"]), true));
        commands.push(("encode structured".into(), with("encode", &["--prop", prop, "--format", "structured"]), false));
        commands.push(("classify".into(), with("classify", &["--bound", "3", "--format", "structured"]), false));
        if files[0].starts_with("fixtures/order_to_delivery.clog") {
            commands.push(("simulate".into(), with("simulate", &["--steps", "fixtures/order_to_delivery.steps"]), false));
        }
        for (label, args, writes) in commands {
            let mk = |out: &Path| -> Vec<String> { args.iter().map(|a| if a == "OUT" { out.display().to_string() } else { a.clone() }).collect() };
            let (a_args, b_args) = (mk(&out_a), mk(&out_b));
            let a = run_cli(&a_args.iter().map(String::as_str).collect::<Vec<_>>(), &root);
            let b = run_cli(&b_args.iter().map(String::as_str).collect::<Vec<_>>(), &root);
            runs += 2;
            let strip = |s: &[u8], out: &Path| String::from_utf8_lossy(s).replace(&out.display().to_string(), "OUT");
            let same_streams = a.0 == b.0 && strip(&a.1, &out_a) == strip(&b.1, &out_b) && strip(&a.2, &out_a) == strip(&b.2, &out_b);
            let same_files = !writes || std::fs::read(&out_a).ok() == std::fs::read(&out_b).ok();
            if a.0 == Some(1) {
                differing.push(format!("{} {label}: exit 1: {}", files[0], String::from_utf8_lossy(&a.2).trim()));
            } else if !same_streams || !same_files {
                differing.push(format!("{} {label}", files[0]));
            }
        }
    }
    let _ = std::fs::remove_dir_all(&tmp);
    let detail = format!("{runs} runs over 5 projects, {} differing or failing: {}", differing.len(), differing.join("; "));
    if differing.is_empty() {
        pass(format!("{runs} runs over 5 projects, reports and documents byte-identical (pcheck at 1 fact, pool 1)"))
    } else {
        fail(detail)
    }
}

fn main() {
    let seed = seed_from_env(0x00c1_06e7);
    let mut fresh = FreshStats::default();
    let mut results: Vec<(usize, &str, Outcome, Duration)> = Vec::new();
    let mut timed = |n: usize, title: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        results.push((n, title, o, start.elapsed()));
        let (n, title, o, d) = results.last().expect("pushed");
        println!("criterion {n} [{}] {title}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail, secs(*d));
    };
    timed(1, "fixture safety", &mut || criterion_1(&mut fresh));
    timed(2, "mutation sensitivity", &mut || criterion_2(&mut fresh));
    timed(3, "query oracle equivalence", &mut || criterion_3(seed));
    timed(4, "semantics oracle equivalence", &mut || criterion_4(seed, &mut fresh));
    let f = fresh;
    timed(5, "freshness invariant", &mut || criterion_5(f));
    timed(6, "encoder golden files", &mut criterion_6);
    timed(7, "index-budget diagnostic", &mut criterion_7);
    timed(8, "conservativization", &mut criterion_8);
    timed(9, "determinism", &mut criterion_9);
    let failed: Vec<String> = results.iter().filter(|r| !r.2.pass).map(|r| r.0.to_string()).collect();
    if failed.is_empty() {
        println!("acceptance: all 9 criteria pass");
    } else {
        println!("acceptance: {} of 9 criteria fail ({})", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
