//! Structural checks over rendered MCMT text. They re-read the text rather
//! than the statement list so that they also catch rendering mistakes.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::IndexBudget;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("line {line}: `{ident}` is used before it is declared")]
    Undeclared { line: usize, ident: String },
    #[error("line {line}: malformed statement: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: case writes arrays of several places: {places:?}")]
    SeveralPlaces { line: usize, places: Vec<String> },
    #[error("line {line}: case writes only part of place `{place}`")]
    PartialWrite { line: usize, place: String },
    #[error("line {line}: index `{index}` is written but `{array}[{index}]` is not guarded to be NULL")]
    UnguardedOutput { line: usize, index: String, array: String },
}

/// One keyword line; continuation lines are appended to `rest`.
#[derive(Clone, Debug)]
pub(crate) struct Line {
    pub no: usize,
    pub key: String,
    pub rest: String,
}

#[derive(Clone, Debug)]
pub(crate) struct Block {
    pub lines: Vec<Line>,
}

impl Block {
    pub fn head(&self) -> &str {
        &self.lines[0].key
    }

    pub fn all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a Line> + 'a {
        self.lines.iter().filter(move |l| l.key == key)
    }
}

const STARTS: [&str; 7] = [":smt", ":db_driven", ":local", ":global", ":initial", ":transition", ":unsafe"];

pub(crate) fn blocks(text: &str) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        if raw.starts_with(char::is_whitespace) {
            if let Some(l) = out.last_mut().and_then(|b| b.lines.last_mut()) {
                l.rest.push(' ');
                l.rest.push_str(raw.trim());
            }
            continue;
        }
        let (key, rest) = raw.split_once(' ').unwrap_or((raw, ""));
        let line = Line { no: i + 1, key: key.to_string(), rest: rest.trim().to_string() };
        if STARTS.contains(&key) || out.is_empty() {
            out.push(Block { lines: vec![line] });
        } else if let Some(b) = out.last_mut() {
            b.lines.push(line);
        }
    }
    out
}

/// Identifiers of an expression line, without `=`, `not` and numerals.
pub(crate) fn idents(expr: &str) -> Vec<&str> {
    expr.split(|c: char| c.is_whitespace() || "()[]".contains(c))
        .filter(|t| !t.is_empty() && *t != "=" && *t != "not" && !t.chars().all(|c| c.is_ascii_digit()))
        .collect()
}

/// Every identifier is declared by an earlier statement, or by the
/// `:var`/`:eevar` lines of its own statement. `NULL_D` is declared by
/// `define_type D`; the sort `BOOLE` is built in.
pub fn check_declarations(text: &str) -> Result<(), Vec<StructureError>> {
    let mut errs = Vec::new();
    let mut global: BTreeSet<String> = ["BOOLE".to_string()].into_iter().collect();
    let need = |id: &str, line: usize, scope: &BTreeSet<String>, global: &BTreeSet<String>, errs: &mut Vec<StructureError>| {
        if !global.contains(id) && !scope.contains(id) {
            errs.push(StructureError::Undeclared { line, ident: id.to_string() });
        }
    };
    for b in blocks(text) {
        let mut scope: BTreeSet<String> = BTreeSet::new();
        for l in &b.lines {
            match l.key.as_str() {
                ":smt" => {
                    let body = l.rest.trim_start_matches('(').trim_end_matches(')');
                    if let Some(d) = body.strip_prefix("define_type ") {
                        global.insert(d.trim().to_string());
                        global.insert(format!("NULL_{}", d.trim()));
                    } else if let Some(def) = body.strip_prefix("define ") {
                        let Some((name, sig)) = def.split_once("::") else {
                            errs.push(StructureError::Syntax { line: l.no, msg: "definition without `::`".into() });
                            continue;
                        };
                        for s in idents(sig.trim_start_matches("(->")) {
                            need(s, l.no, &scope, &global, &mut errs);
                        }
                        global.insert(name.trim().to_string());
                    } else {
                        errs.push(StructureError::Syntax { line: l.no, msg: format!("unknown :smt form `{}`", l.rest) });
                    }
                }
                ":db_sorts" | ":db_functions" | ":db_constants" => {
                    for id in l.rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        need(id, l.no, &scope, &global, &mut errs);
                    }
                }
                ":local" | ":global" => {
                    let mut it = l.rest.split_whitespace();
                    let (Some(name), Some(sort)) = (it.next(), it.next()) else {
                        errs.push(StructureError::Syntax { line: l.no, msg: "declaration needs a name and a sort".into() });
                        continue;
                    };
                    need(sort, l.no, &scope, &global, &mut errs);
                    global.insert(name.to_string());
                }
                ":var" => {
                    scope.insert(l.rest.clone());
                }
                ":eevar" => {
                    let mut it = l.rest.split_whitespace();
                    let (Some(name), Some(sort)) = (it.next(), it.next()) else {
                        errs.push(StructureError::Syntax { line: l.no, msg: "eevar needs a name and a sort".into() });
                        continue;
                    };
                    need(sort, l.no, &scope, &global, &mut errs);
                    scope.insert(name.to_string());
                }
                ":cnj" | ":guard" | ":uguard" | ":case" | ":val" | ":u_cnj" => {
                    for id in idents(&l.rest) {
                        need(id, l.no, &scope, &global, &mut errs);
                    }
                }
                ":db_driven" | ":initial" | ":transition" | ":unsafe" | ":comment" | ":numcases" => {}
                other => errs.push(StructureError::Syntax { line: l.no, msg: format!("unknown keyword `{other}`") }),
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn place_of(array: &str) -> &str {
    match array.rsplit_once('_') {
        Some((p, k)) if !k.is_empty() && k.chars().all(|c| c.is_ascii_digit()) => p,
        _ => array,
    }
}

/// Every case of every transition writes the arrays of at most one place,
/// all of them; an index that receives data must be guarded NULL in every
/// array. The initial-marking statement (guarded by `(= init_fl TRUE)`) is
/// exempt from the guard requirement since `:initial` empties every array.
pub fn check_one_place_per_index(text: &str) -> Result<(), Vec<StructureError>> {
    let bs = blocks(text);
    let locals: Vec<(String, String)> = bs
        .iter()
        .flat_map(|b| b.all(":local"))
        .filter_map(|l| l.rest.split_once(' ').map(|(n, s)| (n.to_string(), s.trim().to_string())))
        .collect();
    let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
    for (a, _) in &locals {
        *sizes.entry(place_of(a)).or_default() += 1;
    }
    let mut errs = Vec::new();
    for b in bs.iter().filter(|b| b.head() == ":transition") {
        let guard = b.all(":guard").map(|l| l.rest.as_str()).collect::<Vec<_>>().join(" ");
        let initial = guard.contains("(= init_fl TRUE)");
        let mut case: Option<(usize, String)> = None;
        let mut vals: Vec<String> = Vec::new();
        let flush = |case: &Option<(usize, String)>, vals: &[String], errs: &mut Vec<StructureError>| {
            let Some((line, cond)) = case else { return };
            let index = cond.trim_start_matches("(= j ").trim_end_matches(')').trim().to_string();
            let mut places: BTreeMap<&str, usize> = BTreeMap::new();
            let mut data = false;
            for ((a, _), v) in locals.iter().zip(vals) {
                if *v != format!("{a}[j]") {
                    *places.entry(place_of(a)).or_default() += 1;
                    data |= !v.starts_with("NULL_");
                }
            }
            if places.len() > 1 {
                errs.push(StructureError::SeveralPlaces { line: *line, places: places.keys().map(|p| p.to_string()).collect() });
            }
            for (p, n) in &places {
                if sizes.get(p) != Some(n) {
                    errs.push(StructureError::PartialWrite { line: *line, place: p.to_string() });
                }
            }
            if data && !initial && !cond.is_empty() {
                for (a, s) in &locals {
                    if !guard.contains(&format!("(= {a}[{index}] NULL_{s})")) {
                        errs.push(StructureError::UnguardedOutput { line: *line, index: index.clone(), array: a.clone() });
                    }
                }
            }
        };
        for l in &b.lines {
            match l.key.as_str() {
                ":case" => {
                    flush(&case, &vals, &mut errs);
                    case = Some((l.no, l.rest.clone()));
                    vals.clear();
                }
                ":val" => vals.push(l.rest.clone()),
                _ => {}
            }
        }
        flush(&case, &vals, &mut errs);
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

pub fn count_uguards(text: &str) -> usize {
    text.lines().filter(|l| l.starts_with(":uguard")).count()
}

/// Index budgets recounted from the `:var` lines of each transition: the
/// last `:var` is the universal case variable, which counts as universally
/// quantified only when a `:uguard` uses it.
pub fn recount_budgets(text: &str) -> Vec<IndexBudget> {
    blocks(text)
        .iter()
        .filter(|b| b.head() == ":transition")
        .map(|b| {
            let vars = b.all(":var").count();
            let uguard = b.all(":uguard").count() > 0;
            IndexBudget { existential: vars.saturating_sub(1), universal: usize::from(uguard) }
        })
        .collect()
}

/// All structural checks.
pub fn check_document(text: &str) -> Vec<StructureError> {
    let mut out = Vec::new();
    if let Err(e) = check_declarations(text) {
        out.extend(e);
    }
    if let Err(e) = check_one_place_per_index(text) {
        out.extend(e);
    }
    out
}
