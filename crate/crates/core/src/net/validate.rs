use std::collections::{BTreeMap, BTreeSet};

use crate::model::{validate_schema, ValueDomain};
use crate::query::{typecheck_condition, Var};
use crate::report::{Diagnostic, ValidationReport};
use crate::Sym;

use super::structure::{Arc, InscTerm, Net, Transition};

/// Structural side conditions of the net: schema well-formedness, flow
/// typing, guard conditions and the placement of ν-variables.
///
/// The guard check has two halves. `free(Q) ⊆ Vars(t)` is an error; the
/// requirement that Q mention some output-only variable is reported as a
/// warning, since pure filter queries over input variables are harmless.
pub fn validate_net(net: &Net) -> ValidationReport {
    let mut report = validate_schema(&net.schema);
    let types = &net.schema.types;

    let mut place_names = BTreeSet::new();
    for p in &net.places {
        if !place_names.insert(p.name) {
            report.push(Diagnostic::error("duplicate-place", format!("place `{}` declared twice", p.name)).at(&p.loc));
        }
        if p.color.is_empty() {
            report.push(Diagnostic::error("empty-color", format!("place `{}` has an empty color", p.name)).at(&p.loc));
        }
        for c in &p.color {
            if !types.contains(*c) {
                report.push(
                    Diagnostic::error("unknown-type", format!("place `{}` uses unknown type `{}`", p.name, c)).at(&p.loc),
                );
            }
        }
    }
    let mut trans_names = BTreeSet::new();
    for t in &net.transitions {
        if !trans_names.insert(t.name) {
            report.push(
                Diagnostic::error("duplicate-transition", format!("transition `{}` declared twice", t.name)).at(&t.loc),
            );
        }
        if place_names.contains(&t.name) {
            report.push(
                Diagnostic::error("name-clash", format!("`{}` names both a place and a transition", t.name)).at(&t.loc),
            );
        }
        validate_transition(net, t, &mut report);
    }
    report
}

fn validate_transition(net: &Net, t: &Transition, report: &mut ValidationReport) {
    let types = &net.schema.types;
    for (arcs, input) in [(&t.inputs, true), (&t.outputs, false)] {
        let mut seen = BTreeSet::new();
        for arc in arcs {
            validate_arc(net, t, arc, input, report);
            if !seen.insert(arc.place) {
                report.push(
                    Diagnostic::error(
                        "duplicate-arc",
                        format!("transition `{}` has two {} arcs on one place", t.name, if input { "input" } else { "output" }),
                    )
                    .at(&arc.loc),
                );
            }
        }
    }

    // variables: consistent types and kinds
    let mut kinds: BTreeMap<Sym, (Sym, bool)> = BTreeMap::new();
    let mut all_terms: Vec<(InscTerm, &crate::report::Loc)> = Vec::new();
    for arc in t.inputs.iter().chain(&t.outputs) {
        for i in &arc.inscriptions {
            all_terms.extend(i.terms.iter().map(|x| (*x, &i.loc)));
        }
    }
    let mut guard_vars: BTreeSet<Var> = BTreeSet::new();
    t.guard.condition.vars(&mut guard_vars);
    let qfree = t.query_free_vars();
    guard_vars.extend(qfree.iter().copied());
    for v in &guard_vars {
        all_terms.push((InscTerm::Var(*v), &t.guard.loc));
    }
    for (term, loc) in &all_terms {
        let (v, fresh) = match term {
            InscTerm::Var(v) => (*v, false),
            InscTerm::Fresh(v) => (*v, true),
            InscTerm::Const(_) => continue,
        };
        match kinds.get(&v.name) {
            None => {
                kinds.insert(v.name, (v.ty, fresh));
            }
            Some(&(ty, k)) => {
                if ty != v.ty {
                    report.push(
                        Diagnostic::error(
                            "inconsistent-variable-type",
                            format!("variable `{}` of transition `{}` used with types `{}` and `{}`", v.name, t.name, ty, v.ty),
                        )
                        .at(loc),
                    );
                }
                if k != fresh {
                    report.push(
                        Diagnostic::error(
                            "variable-kind-clash",
                            format!("`{}` is used both as a ν-variable and as a normal variable in `{}`", v.name, t.name),
                        )
                        .at(loc),
                    );
                }
            }
        }
    }

    let in_vars = t.in_vars();
    let out_vars = t.out_vars();
    let fresh = t.fresh_vars();
    for v in &fresh {
        if let Some(dt) = types.get(v.ty) {
            if matches!(dt.domain, ValueDomain::Finite(_)) {
                report.push(
                    Diagnostic::error(
                        "fresh-finite-type",
                        format!("ν-variable `{}` has finite type `{}`", v.name, v.ty),
                    )
                    .at(&t.loc),
                );
            }
        }
    }

    // guard variables must be bound
    let mut phi_vars = BTreeSet::new();
    t.guard.condition.vars(&mut phi_vars);
    for e in typecheck_condition(&net.schema, &t.guard.condition, &t.guard.loc) {
        report.push(e.to_diagnostic());
    }
    for v in &phi_vars {
        if !in_vars.contains(v) {
            report.push(
                Diagnostic::error(
                    "guard-condition-a",
                    format!("condition of `{}` mentions `{}`, which is not bound by an input arc", t.name, v.name),
                )
                .at(&t.guard.loc),
            );
        }
    }

    // guard variables and query typing
    if let Some(q) = &t.guard.query {
        if let Err(errs) = crate::query::typecheck::typecheck_query_at(&net.schema, q, &t.guard.loc) {
            for e in errs {
                report.push(e.to_diagnostic());
            }
        }
        let vars_t: BTreeSet<Var> = in_vars.union(&out_vars).copied().collect();
        for v in &qfree {
            if !vars_t.contains(v) {
                report.push(
                    Diagnostic::error(
                        "guard-query-vars",
                        format!("query of `{}` has free variable `{}` that occurs on no arc", t.name, v.name),
                    )
                    .at(&t.guard.loc),
                );
            }
        }
        let out_only: BTreeSet<&Var> = qfree.iter().filter(|v| out_vars.contains(v) && !in_vars.contains(v)).collect();
        if out_only.is_empty() {
            report.push(
                Diagnostic::warning(
                    "query-no-output-var",
                    format!("query of `{}` mentions no output-only variable", t.name),
                )
                .at(&t.guard.loc),
            );
        }
    }

    for v in &fresh {
        if guard_vars.iter().any(|g| g.name == v.name) {
            report.push(
                Diagnostic::error("fresh-in-guard", format!("ν-variable `{}` occurs in the guard of `{}`", v.name, t.name))
                    .at(&t.guard.loc),
            );
        }
    }
    for v in &out_vars {
        if !fresh.contains(v) && !in_vars.contains(v) && !qfree.contains(v) {
            report.push(
                Diagnostic::error(
                    "unbound-output",
                    format!("output variable `{}` of `{}` is bound neither by an input arc nor by the guard query", v.name, t.name),
                )
                .at(&t.loc),
            );
        }
    }
}

fn validate_arc(net: &Net, t: &Transition, arc: &Arc, input: bool, report: &mut ValidationReport) {
    let Some(place) = net.places.get(arc.place.0) else {
        report.push(Diagnostic::error("arc-place", format!("transition `{}` refers to a missing place", t.name)).at(&arc.loc));
        return;
    };
    for insc in &arc.inscriptions {
        if insc.mult == 0 {
            report.push(
                Diagnostic::error("zero-multiplicity", format!("inscription {} on `{}` has multiplicity 0", insc, place.name))
                    .at(&insc.loc),
            );
        }
        if insc.terms.len() != place.color.len() {
            report.push(
                Diagnostic::error(
                    "arity-mismatch",
                    format!(
                        "inscription {} has arity {} but place `{}` has color arity {}",
                        insc,
                        insc.terms.len(),
                        place.name,
                        place.color.len()
                    ),
                )
                .at(&insc.loc),
            );
            continue;
        }
        for (term, ty) in insc.terms.iter().zip(&place.color) {
            if term.ty() != *ty {
                report.push(
                    Diagnostic::error(
                        "type-mismatch",
                        format!("`{}` has type `{}` but place `{}` expects `{}` at this position", term, term.ty(), place.name, ty),
                    )
                    .at(&insc.loc),
                );
            }
            match term {
                InscTerm::Fresh(v) if input => report.push(
                    Diagnostic::error("fresh-on-input", format!("ν-variable `{}` on an input arc of `{}`", v.name, t.name))
                        .at(&insc.loc),
                ),
                InscTerm::Const(c) if input => report.push(
                    Diagnostic::error("const-on-input", format!("constant `{}` on an input arc of `{}`", c, t.name))
                        .at(&insc.loc),
                ),
                InscTerm::Const(c) if !net.schema.types.admits(c) => report.push(
                    Diagnostic::error("value-out-of-domain", format!("`{}` is not a value of type `{}`", c, c.ty))
                        .at(&insc.loc),
                ),
                _ => {}
            }
        }
    }
}
