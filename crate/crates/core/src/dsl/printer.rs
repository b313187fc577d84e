use std::fmt::Write;

use crate::model::{Tuple, Value, ValueDomain};
use crate::net::Arc;

use super::syntax::is_keyword;
use super::Project;

/// `s` as written in the DSL: bare when it is a plain identifier, quoted otherwise.
pub fn quote_name(s: &str) -> String {
    let mut chars = s.chars();
    let ident = matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !is_keyword(s);
    if ident {
        s.to_string()
    } else {
        format!("\"{s}\"")
    }
}

fn value(v: &Value) -> String {
    match v.pool_index() {
        Some(_) => v.to_string(),
        None => quote_name(&v.to_string()),
    }
}

fn tuple(t: &Tuple) -> String {
    if t.len() == 1 {
        return value(&t[0]);
    }
    let parts: Vec<String> = t.iter().map(value).collect();
    format!("({})", parts.join(", "))
}

fn arcs(out: &mut String, kw: &str, arcs: &[Arc], project: &Project) {
    for a in arcs {
        let inscs: Vec<String> = a.inscriptions.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "    {kw} {}: {};", quote_name(project.net.place(a.place).name.as_str()), inscs.join(" + "));
    }
}

/// Renders a project in the DSL. Parsing the output yields an equal project.
pub fn print_project(project: &Project) -> String {
    let mut out = String::new();
    let net = &project.net;
    for t in &net.schema.types.types {
        match &t.domain {
            ValueDomain::Unbounded => {
                let _ = writeln!(out, "type {};", t.name);
            }
            ValueDomain::Finite(vs) => {
                let vs: Vec<String> = vs.iter().map(|v| quote_name(v.as_str())).collect();
                let _ = writeln!(out, "type {} = {{{}}};", t.name, vs.join(", "));
            }
        }
    }
    for r in &net.schema.relations {
        let attrs: Vec<String> = r
            .attrs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut s = format!("{}: {}", a.name, a.ty);
                if i == r.key {
                    s.push_str(" key");
                }
                for fk in r.fks.iter().filter(|fk| fk.attr == i) {
                    let _ = write!(s, " -> {}", fk.target);
                }
                s
            })
            .collect();
        let _ = writeln!(out, "relation {}({});", r.name, attrs.join(", "));
    }
    for (rel, facts) in project.catalog.relations() {
        if facts.is_empty() {
            continue;
        }
        let _ = write!(out, "facts {rel} {{");
        for f in facts {
            let _ = write!(out, " {};", tuple(f));
        }
        out.push_str(" }\n");
    }
    for p in &net.places {
        let color: Vec<&str> = p.color.iter().map(|c| c.as_str()).collect();
        let color = if color.len() == 1 { color[0].to_string() } else { format!("({})", color.join(", ")) };
        let _ = writeln!(out, "place {}: {};", quote_name(p.name.as_str()), color);
    }
    for t in &net.transitions {
        let _ = writeln!(out, "transition {} {{", quote_name(t.name.as_str()));
        arcs(&mut out, "in", &t.inputs, project);
        arcs(&mut out, "out", &t.outputs, project);
        if let Some(q) = &t.guard.query {
            let _ = writeln!(out, "    query {q};");
        }
        if !t.guard.condition.is_true() {
            let _ = writeln!(out, "    cond {};", t.guard.condition);
        }
        out.push_str("}\n");
    }
    let entries: Vec<String> = project
        .marking
        .iter()
        .filter(|(_, ms)| !ms.is_empty())
        .map(|(pid, ms)| {
            let toks: Vec<String> = ms
                .iter()
                .map(|(t, k)| if k == 1 { tuple(t) } else { format!("{k}*{}", tuple(t)) })
                .collect();
            format!("    {}: {};\n", quote_name(net.place(pid).name.as_str()), toks.join(", "))
        })
        .collect();
    if !entries.is_empty() {
        out.push_str("marking {\n");
        entries.iter().for_each(|e| out.push_str(e));
        out.push_str("}\n");
    }
    for p in &project.properties {
        let _ = writeln!(out, "property {}: {};", quote_name(p.name.as_str()), p);
    }
    out
}
