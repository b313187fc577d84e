use std::collections::BTreeSet;
use std::fmt::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde_json::{json, Value as Json};

use crate::model::{CatalogInstance, CatalogSchema, Value};
use crate::net::{Binding, FreshPolicy, Marking, Net, NetContext, PlaceId};
use crate::query::Substitution;
use crate::Sym;

use super::catalogs::{enumerate_catalogs, CatalogBounds};
use super::property::{eval_property, Property};
use super::system::{ExplorationLimits, Explorer, FreshStats, TransitionSystem};
use super::ExploreError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessStep {
    pub transition: Sym,
    pub binding: Binding,
    /// Marking reached by the step.
    pub marking: Marking,
}

/// A concrete run from the initial marking to a marking satisfying the property.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub catalog: CatalogInstance,
    pub initial: Marking,
    pub steps: Vec<WitnessStep>,
    pub assignment: Substitution,
}

impl Witness {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_marking(&self) -> &Marking {
        self.steps.last().map(|s| &s.marking).unwrap_or(&self.initial)
    }

    /// Re-fires every step with full enablement checks and re-evaluates the property.
    pub fn replay(&self, net: &Net, psi: &Property) -> Result<(), String> {
        let ctx = NetContext::new(net, &self.catalog);
        let mut m = self.initial.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let t = net.transition_id(step.transition.as_str()).ok_or_else(|| format!("step {i}: unknown transition"))?;
            let next = ctx.fire(&m, t, &step.binding).map_err(|e| format!("step {i}: {e}"))?;
            if next != step.marking {
                return Err(format!("step {i}: recorded marking differs from the fired one"));
            }
            m = next;
        }
        match eval_property(psi, net, &m, &self.catalog) {
            Some(_) => Ok(()),
            None => Err("the property does not hold in the final marking".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafeReport {
    pub states: usize,
    pub edges: usize,
    pub max_depth_reached: usize,
    /// True when every reachable state was explored, i.e. the verdict is exact.
    pub exhausted: bool,
    pub catalogs: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Safe(SafeReport),
    Unsafe(Box<Witness>),
}

impl Verdict {
    pub fn is_unsafe(&self) -> bool {
        matches!(self, Verdict::Unsafe(_))
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Unsafe(w) => Some(w),
            Verdict::Safe(_) => None,
        }
    }
}

/// A safety verdict plus exploration counters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub fresh: FreshStats,
}

fn prepare<'a>(net: &'a Net, cat: &'a CatalogInstance, psi: &Property, limits: &ExplorationLimits) -> Result<Explorer<'a>, ExploreError> {
    let errs = psi.typecheck(net);
    if !errs.is_empty() {
        return Err(ExploreError::Property(errs));
    }
    Ok(Explorer::new(net, cat, limits.clone())?.protect(psi.constants()))
}

/// Follows the abstract path in `ts` from the concrete `m0`, picking at each
/// step an enabled binding whose normalized result is the next state.
fn concretize(ex: &Explorer<'_>, ts: &TransitionSystem, target: usize, m0: &Marking) -> Result<Vec<WitnessStep>, ExploreError> {
    let net = ex.net();
    let ctx = ex.context();
    let mut m = m0.clone();
    let mut steps = Vec::new();
    for e in ts.path_to(target) {
        let goal = &ts.states[e.to];
        let found = ctx
            .enabled(&m, e.transition, FreshPolicy::Canonical)
            .into_iter()
            .chain(std::iter::once(e.binding.clone()))
            .find_map(|sigma| {
                let next = ctx.fire(&m, e.transition, &sigma).ok()?;
                (ex.normalize(&next) == *goal).then_some((sigma, next))
            });
        let (sigma, next) = found.ok_or_else(|| {
            ExploreError::Witness(format!("cannot replay `{}` from the initial marking", net.transition(e.transition).name))
        })?;
        steps.push(WitnessStep { transition: net.transition(e.transition).name, binding: sigma, marking: next.clone() });
        m = next;
    }
    Ok(steps)
}

fn run_safety(ex: &Explorer<'_>, net: &Net, m0: &Marking, cat: &CatalogInstance, psi: &Property) -> Result<CheckOutcome, ExploreError> {
    let (ts, hit) = ex.search(m0, |m| eval_property(psi, net, m, cat).is_some());
    let verdict = match hit {
        None => Verdict::Safe(SafeReport {
            states: ts.states.len(),
            edges: ts.edges.len(),
            max_depth_reached: ts.max_depth_reached(),
            exhausted: ts.exhausted,
            catalogs: 1,
        }),
        Some(s) => {
            let steps = concretize(ex, &ts, s, m0)?;
            let last = steps.last().map(|st| st.marking.clone()).unwrap_or_else(|| m0.clone());
            let assignment = eval_property(psi, net, &last, cat)
                .ok_or_else(|| ExploreError::Witness("the property does not hold at the end of the witness".into()))?;
            let w = Witness { catalog: cat.clone(), initial: m0.clone(), steps, assignment };
            w.replay(net, psi).map_err(ExploreError::Witness)?;
            Verdict::Unsafe(Box::new(w))
        }
    };
    Ok(CheckOutcome { verdict, fresh: ts.fresh })
}

/// Explicit-state safety check of `ψ` for a fixed catalog.
pub fn check_safety(
    net: &Net,
    m0: &Marking,
    cat: &CatalogInstance,
    psi: &Property,
    limits: &ExplorationLimits,
) -> Result<CheckOutcome, ExploreError> {
    let ex = prepare(net, cat, psi, limits)?;
    run_safety(&ex, net, m0, cat, psi)
}

/// As [`check_safety`], with explicit fresh policy and symmetry settings.
pub fn check_safety_with(
    net: &Net,
    m0: &Marking,
    cat: &CatalogInstance,
    psi: &Property,
    limits: &ExplorationLimits,
    policy: FreshPolicy,
    symmetry: bool,
) -> Result<CheckOutcome, ExploreError> {
    let ex = prepare(net, cat, psi, limits)?.fresh_policy(policy).symmetry(symmetry);
    run_safety(&ex, net, m0, cat, psi)
}

/// Values that catalog enumeration must keep as named seeds.
pub fn catalog_seeds(net: &Net, m0: &Marking, psi: &Property) -> BTreeSet<Value> {
    let mut seeds = net.constants();
    seeds.extend(m0.values());
    seeds.extend(psi.constants());
    seeds
}

/// Small-scope parameterised check: [`check_safety`] over every enumerated
/// catalog. The first unsafe catalog in enumeration order wins.
pub fn parameterised_check(
    net: &Net,
    m0: &Marking,
    psi: &Property,
    schema: &CatalogSchema,
    bounds: &CatalogBounds,
    limits: &ExplorationLimits,
) -> Result<CheckOutcome, ExploreError> {
    let errs = psi.typecheck(net);
    if !errs.is_empty() {
        return Err(ExploreError::Property(errs));
    }
    limits.validate()?;
    let mut bounds = bounds.clone();
    bounds.seeds.extend(catalog_seeds(net, m0, psi));
    let catalogs = enumerate_catalogs(schema, &bounds)?;
    let best = AtomicUsize::new(usize::MAX);
    let results: Vec<Option<Result<CheckOutcome, ExploreError>>> = catalogs
        .par_iter()
        .enumerate()
        .map(|(i, cat)| {
            if best.load(Ordering::Relaxed) < i {
                return None;
            }
            let r = check_safety(net, m0, cat, psi, limits);
            if matches!(&r, Ok(o) if o.verdict.is_unsafe()) {
                best.fetch_min(i, Ordering::Relaxed);
            }
            Some(r)
        })
        .collect();
    let mut fresh = FreshStats::default();
    let mut agg = SafeReport { states: 0, edges: 0, max_depth_reached: 0, exhausted: true, catalogs: 0 };
    for r in results.into_iter().flatten() {
        let o = r?;
        fresh.add(o.fresh);
        match o.verdict {
            Verdict::Unsafe(w) => return Ok(CheckOutcome { verdict: Verdict::Unsafe(w), fresh }),
            Verdict::Safe(s) => {
                agg.states += s.states;
                agg.edges += s.edges;
                agg.max_depth_reached = agg.max_depth_reached.max(s.max_depth_reached);
                agg.exhausted &= s.exhausted;
                agg.catalogs += 1;
            }
        }
    }
    Ok(CheckOutcome { verdict: Verdict::Safe(agg), fresh })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BoundCheck {
    Bounded { states: usize, exhausted: bool },
    Violation { place: PlaceId, tokens: usize, marking: Marking, steps: Vec<WitnessStep> },
}

/// Searches for the first reachable marking with more than `b` tokens in some place.
pub fn check_bounded(
    net: &Net,
    m0: &Marking,
    cat: &CatalogInstance,
    b: usize,
    limits: &ExplorationLimits,
) -> Result<BoundCheck, ExploreError> {
    let ex = Explorer::new(net, cat, limits.clone())?;
    let over = |m: &Marking| m.iter().find(|(_, ms)| ms.len() > b).map(|(p, ms)| (p, ms.len()));
    let (ts, hit) = ex.search(m0, |m| over(m).is_some());
    Ok(match hit {
        None => BoundCheck::Bounded { states: ts.states.len(), exhausted: ts.exhausted },
        Some(s) => {
            let steps = concretize(&ex, &ts, s, m0)?;
            let marking = steps.last().map(|st| st.marking.clone()).unwrap_or_else(|| m0.clone());
            let (place, tokens) = over(&marking).ok_or_else(|| ExploreError::Witness("bound violation lost in replay".into()))?;
            BoundCheck::Violation { place, tokens, marking, steps }
        }
    })
}

// ---- reports ----

fn marking_json(net: &Net, m: &Marking) -> Json {
    let mut obj = serde_json::Map::new();
    for (p, ms) in m.iter() {
        if ms.is_empty() {
            continue;
        }
        let toks: Vec<Json> = ms
            .iter()
            .map(|(t, k)| json!({ "tuple": t.iter().map(|v| v.to_string()).collect::<Vec<_>>(), "count": k }))
            .collect();
        obj.insert(net.place(p).name.to_string(), Json::Array(toks));
    }
    Json::Object(obj)
}

fn subst_json(s: &Substitution) -> Json {
    Json::Object(s.iter().map(|(k, v)| (k.to_string(), Json::String(v.to_string()))).collect())
}

fn catalog_json(cat: &CatalogInstance) -> Json {
    Json::Object(
        cat.relations()
            .filter(|(_, f)| !f.is_empty())
            .map(|(r, facts)| {
                let rows: Vec<Json> = facts.iter().map(|t| json!(t.iter().map(|v| v.to_string()).collect::<Vec<_>>())).collect();
                (r.to_string(), Json::Array(rows))
            })
            .collect(),
    )
}

fn steps_json(net: &Net, steps: &[WitnessStep]) -> Json {
    Json::Array(
        steps
            .iter()
            .map(|s| json!({ "transition": s.transition.as_str(), "binding": subst_json(&s.binding), "marking": marking_json(net, &s.marking) }))
            .collect(),
    )
}

impl CheckOutcome {
    /// Structured report with stable field names.
    pub fn to_json(&self, net: &Net, property: &str) -> Json {
        match &self.verdict {
            Verdict::Safe(s) => json!({
                "property": property,
                "verdict": "SAFE",
                "states": s.states,
                "edges": s.edges,
                "max_depth_reached": s.max_depth_reached,
                "exhausted": s.exhausted,
                "catalogs": s.catalogs,
                "fresh_checks": self.fresh.checks,
                "fresh_violations": self.fresh.violations,
            }),
            Verdict::Unsafe(w) => json!({
                "property": property,
                "verdict": "UNSAFE",
                "catalog": catalog_json(&w.catalog),
                "initial": marking_json(net, &w.initial),
                "steps": steps_json(net, &w.steps),
                "assignment": subst_json(&w.assignment),
                "fresh_checks": self.fresh.checks,
                "fresh_violations": self.fresh.violations,
            }),
        }
    }

    /// Human-readable transcript.
    pub fn transcript(&self, net: &Net, property: &str) -> String {
        let mut out = String::new();
        match &self.verdict {
            Verdict::Safe(s) => {
                let scope = if s.exhausted { "all reachable states explored" } else { "up to limits" };
                let _ = writeln!(out, "SAFE ({scope}): property `{property}`");
                let _ = writeln!(out, "  catalogs checked: {}", s.catalogs);
                let _ = writeln!(out, "  states: {}, edges: {}, max depth: {}", s.states, s.edges, s.max_depth_reached);
            }
            Verdict::Unsafe(w) => {
                let _ = writeln!(out, "UNSAFE: property `{property}` holds after {} step(s)", w.steps.len());
                let _ = writeln!(out, "  catalog: {}", catalog_text(&w.catalog));
                let _ = writeln!(out, "  initial: {}", w.initial.display(net));
                for (i, s) in w.steps.iter().enumerate() {
                    let _ = writeln!(out, "  {}. {} {}", i + 1, s.transition, s.binding);
                    let _ = writeln!(out, "     -> {}", s.marking.display(net));
                }
                let _ = writeln!(out, "  assignment: {}", w.assignment);
            }
        }
        let _ = writeln!(out, "  fresh checks: {}, violations: {}", self.fresh.checks, self.fresh.violations);
        out
    }
}

pub fn catalog_text(cat: &CatalogInstance) -> String {
    let parts: Vec<String> = cat
        .relations()
        .flat_map(|(r, facts)| {
            facts.iter().map(move |t| {
                let vs: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                format!("{r}({})", vs.join(", "))
            })
        })
        .collect();
    if parts.is_empty() {
        "{}".into()
    } else {
        format!("{{{}}}", parts.join(", "))
    }
}

impl BoundCheck {
    pub fn to_json(&self, net: &Net, b: usize) -> Json {
        match self {
            BoundCheck::Bounded { states, exhausted } => {
                json!({ "bound": b, "verdict": "BOUNDED", "states": states, "exhausted": exhausted })
            }
            BoundCheck::Violation { place, tokens, marking, steps } => json!({
                "bound": b,
                "verdict": "VIOLATION",
                "place": net.place(*place).name.as_str(),
                "tokens": tokens,
                "marking": marking_json(net, marking),
                "steps": steps_json(net, steps),
            }),
        }
    }

    pub fn transcript(&self, net: &Net, b: usize) -> String {
        match self {
            BoundCheck::Bounded { states, exhausted } => {
                let scope = if *exhausted { "all reachable states explored" } else { "up to limits" };
                format!("BOUNDED by {b} ({scope}): {states} states\n")
            }
            BoundCheck::Violation { place, tokens, marking, steps } => {
                let mut out = format!("VIOLATION of bound {b}: place `{}` holds {tokens} tokens\n", net.place(*place).name);
                for (i, s) in steps.iter().enumerate() {
                    let _ = writeln!(out, "  {}. {} {}", i + 1, s.transition, s.binding);
                }
                let _ = writeln!(out, "  marking: {}", marking.display(net));
                out
            }
        }
    }
}
