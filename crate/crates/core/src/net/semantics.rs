use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::rc::Rc;

use crate::model::{CatalogInstance, Multiset, Tuple, Value};
use crate::query::{evaluate_condition, EvalError, Evaluator, Substitution, Var};
use crate::Sym;

use super::marking::Marking;
use super::structure::{InscTerm, Inscription, Net, PlaceId, TransitionId};

/// A binding σ for a transition: a substitution over its variables.
pub type Binding = Substitution;

/// How ν-variables are bound when enumerating enabled bindings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FreshPolicy {
    /// Each ν-variable gets the least unused pool value of its type.
    #[default]
    Canonical,
    /// Each ν-variable ranges over the `n` least unused pool values of its type.
    Enumerate(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FireError {
    #[error("binding does not assign variable `{0}`")]
    Unbound(Sym),
    #[error("`{var}` is bound to `{value}`, which is not a value of type `{ty}`")]
    IllTyped { var: Sym, value: Value, ty: Sym },
    #[error("transition `{transition}` is not enabled under the binding: {reason}")]
    NotEnabled { transition: Sym, reason: String },
}

/// `σ(ω)`: the ground multiset obtained by substituting every variable occurrence.
pub fn apply_substitution(sigma: &Binding, omega: &[Inscription]) -> Result<Multiset<Tuple>, EvalError> {
    let mut out = Multiset::new();
    for insc in omega {
        out.insert(ground(sigma, &insc.terms)?, insc.mult);
    }
    Ok(out)
}

fn ground(sigma: &Binding, terms: &[InscTerm]) -> Result<Tuple, EvalError> {
    terms
        .iter()
        .map(|t| match t {
            InscTerm::Const(c) => Ok(*c),
            InscTerm::Var(v) | InscTerm::Fresh(v) => sigma.get(v.name).ok_or(EvalError::Unbound(v.name)),
        })
        .collect()
}

/// All enabled bindings of `t` in `m` under `cat`, in lexicographic order.
pub fn enabled_bindings(
    net: &Net,
    m: &Marking,
    cat: &CatalogInstance,
    t: TransitionId,
    policy: FreshPolicy,
) -> BTreeSet<Binding> {
    NetContext::new(net, cat).enabled(m, t, policy)
}

/// Fires `t` under `σ`, checking enablement first.
pub fn fire(net: &Net, m: &Marking, cat: &CatalogInstance, t: TransitionId, sigma: &Binding) -> Result<Marking, FireError> {
    NetContext::new(net, cat).fire(m, t, sigma)
}

struct InputItem {
    place: PlaceId,
    mult: u32,
    terms: Vec<InscTerm>,
}

struct TransInfo {
    items: Vec<InputItem>,
    /// Free query variables that are bound by input arcs.
    fixed: Vec<Sym>,
    /// Free query variables that only occur on outputs.
    out_only: Vec<Var>,
    fresh: Vec<Var>,
}

/// A net paired with a catalog, with per-transition data and a query cache.
/// Reuse one context for many markings of the same catalog.
pub struct NetContext<'a> {
    net: &'a Net,
    eval: Evaluator<'a>,
    val_cat: HashSet<Value>,
    avoid: BTreeSet<Value>,
    info: Vec<TransInfo>,
    cache: RefCell<HashMap<(usize, Substitution), Rc<Vec<Substitution>>>>,
}

impl<'a> NetContext<'a> {
    pub fn new(net: &'a Net, cat: &'a CatalogInstance) -> NetContext<'a> {
        let info = net
            .transitions
            .iter()
            .map(|t| {
                let in_vars = t.in_vars();
                let qfree = t.query_free_vars();
                TransInfo {
                    items: t
                        .inputs
                        .iter()
                        .flat_map(|a| {
                            a.inscriptions.iter().map(move |i| InputItem { place: a.place, mult: i.mult, terms: i.terms.clone() })
                        })
                        .collect(),
                    fixed: qfree.iter().filter(|v| in_vars.contains(v)).map(|v| v.name).collect(),
                    out_only: qfree.iter().filter(|v| !in_vars.contains(v)).copied().collect(),
                    fresh: t.fresh_vars().into_iter().collect(),
                }
            })
            .collect();
        NetContext {
            net,
            eval: Evaluator::new(cat),
            val_cat: cat.values().into_iter().collect(),
            avoid: net.constants(),
            info,
            cache: RefCell::new(HashMap::new()),
        }
    }

    /// Extra values fresh bindings must avoid, e.g. property constants.
    pub fn avoid_also(&mut self, values: impl IntoIterator<Item = Value>) {
        self.avoid.extend(values);
    }

    pub fn net(&self) -> &'a Net {
        self.net
    }

    pub fn catalog(&self) -> &'a CatalogInstance {
        self.eval.catalog()
    }

    pub fn in_catalog(&self, v: &Value) -> bool {
        self.val_cat.contains(v)
    }

    /// The `n` least pool values of `ty` outside `Val(m) ∪ Val(Cat)` and the avoided constants.
    pub fn fresh_candidates(&self, ty: Sym, n: usize, val_m: &BTreeSet<Value>) -> Vec<Value> {
        let mut out = Vec::with_capacity(n);
        let mut i = 0u32;
        while out.len() < n {
            let v = Value::pool(ty, i);
            if !val_m.contains(&v) && !self.val_cat.contains(&v) && !self.avoid.contains(&v) {
                out.push(v);
            }
            i += 1;
        }
        out
    }

    pub fn enabled(&self, m: &Marking, t: TransitionId, policy: FreshPolicy) -> BTreeSet<Binding> {
        let val_m = if self.info[t.0].fresh.is_empty() { BTreeSet::new() } else { m.values() };
        self.enabled_with(m, t, policy, &val_m)
    }

    /// As [`NetContext::enabled`], with `Val(m)` supplied by the caller.
    pub fn enabled_with(&self, m: &Marking, t: TransitionId, policy: FreshPolicy, val_m: &BTreeSet<Value>) -> BTreeSet<Binding> {
        let tr = self.net.transition(t);
        let info = &self.info[t.0];
        let mut partials = BTreeSet::new();
        self.match_inputs(m, info, 0, &mut Substitution::new(), &mut partials);

        let mut out = BTreeSet::new();
        for sigma in partials {
            if !evaluate_condition(&tr.guard.condition, &sigma).unwrap_or(false) {
                continue;
            }
            let extended: Vec<Substitution> = match &tr.guard.query {
                None => vec![sigma],
                Some(_) => {
                    let answers = self.answers(t, &sigma.restrict(info.fixed.iter().copied()));
                    answers.iter().map(|a| sigma.merged(a)).collect()
                }
            };
            for s in extended {
                self.bind_fresh(info, policy, val_m, s, &mut out);
            }
        }
        out
    }

    fn answers(&self, t: TransitionId, fixed: &Substitution) -> Rc<Vec<Substitution>> {
        let key = (t.0, fixed.clone());
        if let Some(hit) = self.cache.borrow().get(&key) {
            return hit.clone();
        }
        let q = self.net.transition(t).guard.query.as_ref().expect("query present");
        let ans: Rc<Vec<Substitution>> = Rc::new(self.eval.answers(q, fixed).into_iter().collect());
        self.cache.borrow_mut().insert(key, ans.clone());
        ans
    }

    fn bind_fresh(&self, info: &TransInfo, policy: FreshPolicy, val_m: &BTreeSet<Value>, sigma: Substitution, out: &mut BTreeSet<Binding>) {
        if info.fresh.is_empty() {
            out.insert(sigma);
            return;
        }
        let mut by_type: BTreeMap<Sym, usize> = BTreeMap::new();
        for v in &info.fresh {
            *by_type.entry(v.ty).or_default() += 1;
        }
        let candidates: BTreeMap<Sym, Vec<Value>> = by_type
            .iter()
            .map(|(ty, k)| {
                let n = match policy {
                    FreshPolicy::Canonical => *k,
                    FreshPolicy::Enumerate(n) => n as usize,
                };
                (*ty, self.fresh_candidates(*ty, n, val_m))
            })
            .collect();
        if let FreshPolicy::Canonical = policy {
            let mut s = sigma;
            let mut next: BTreeMap<Sym, usize> = BTreeMap::new();
            for v in &info.fresh {
                let i = next.entry(v.ty).or_default();
                s.insert(v.name, candidates[&v.ty][*i]);
                *i += 1;
            }
            out.insert(s);
            return;
        }
        fn go(vars: &[Var], cands: &BTreeMap<Sym, Vec<Value>>, s: &mut Substitution, used: &mut Vec<Value>, out: &mut BTreeSet<Binding>) {
            let Some((v, rest)) = vars.split_first() else {
                out.insert(s.clone());
                return;
            };
            for c in &cands[&v.ty] {
                if used.contains(c) {
                    continue;
                }
                used.push(*c);
                s.insert(v.name, *c);
                go(rest, cands, s, used, out);
                used.pop();
            }
            s.0.remove(&v.name);
        }
        let mut s = sigma;
        go(&info.fresh, &candidates, &mut s, &mut Vec::new(), out);
    }

    fn match_inputs(&self, m: &Marking, info: &TransInfo, i: usize, sigma: &mut Substitution, out: &mut BTreeSet<Substitution>) {
        if i == info.items.len() {
            // multiset inclusion over all items of each place
            let mut demand: BTreeMap<(PlaceId, Tuple), u32> = BTreeMap::new();
            for item in &info.items {
                if let Ok(tuple) = ground(sigma, &item.terms) {
                    *demand.entry((item.place, tuple)).or_default() += item.mult;
                }
            }
            if demand.iter().all(|((p, tuple), k)| m.tokens(*p).count(tuple) >= *k) {
                out.insert(sigma.clone());
            }
            return;
        }
        let item = &info.items[i];
        let mut newly: Vec<Sym> = Vec::new();
        'tokens: for (tuple, count) in m.tokens(item.place).iter() {
            if count < item.mult || tuple.len() != item.terms.len() {
                continue;
            }
            newly.clear();
            for (term, v) in item.terms.iter().zip(tuple) {
                let ok = match term {
                    InscTerm::Const(c) => c == v,
                    InscTerm::Var(x) | InscTerm::Fresh(x) => match sigma.get(x.name) {
                        Some(b) => b == *v,
                        None => {
                            sigma.insert(x.name, *v);
                            newly.push(x.name);
                            true
                        }
                    },
                };
                if !ok {
                    for n in &newly {
                        sigma.0.remove(n);
                    }
                    continue 'tokens;
                }
            }
            self.match_inputs(m, info, i + 1, sigma, out);
            for n in &newly {
                sigma.0.remove(n);
            }
        }
    }

    /// Checks every enablement condition for a given binding.
    pub fn check_enabled(&self, m: &Marking, t: TransitionId, sigma: &Binding) -> Result<(), FireError> {
        let tr = self.net.transition(t);
        let info = &self.info[t.0];
        let not_enabled = |reason: String| FireError::NotEnabled { transition: tr.name, reason };
        for v in tr.binding_vars() {
            let Some(val) = sigma.get(v.name) else {
                return Err(FireError::Unbound(v.name));
            };
            if val.ty != v.ty || !self.net.schema.types.admits(&val) {
                return Err(FireError::IllTyped { var: v.name, value: val, ty: v.ty });
            }
        }
        for arc in &tr.inputs {
            let need = apply_substitution(sigma, &arc.inscriptions).map_err(|e| not_enabled(e.to_string()))?;
            if !need.is_subset(m.tokens(arc.place)) {
                return Err(not_enabled(format!("place `{}` lacks the required tokens", self.net.place(arc.place).name)));
            }
        }
        match evaluate_condition(&tr.guard.condition, sigma) {
            Ok(true) => {}
            Ok(false) => return Err(not_enabled("guard condition is false".into())),
            Err(e) => return Err(not_enabled(e.to_string())),
        }
        if let Some(q) = &tr.guard.query {
            for v in &info.out_only {
                if let Some(val) = sigma.get(v.name) {
                    if !self.val_cat.contains(&val) {
                        return Err(not_enabled(format!("`{}` = `{}` is not a catalog value", v.name, val)));
                    }
                }
            }
            if !self.eval.holds(q, &sigma.restrict(q.free_vars().iter().map(|v| v.name))) {
                return Err(not_enabled("guard query is not satisfied".into()));
            }
        }
        if !info.fresh.is_empty() {
            let val_m = m.values();
            let mut seen = BTreeSet::new();
            for v in &info.fresh {
                let val = sigma.get(v.name).ok_or(FireError::Unbound(v.name))?;
                if val_m.contains(&val) || self.val_cat.contains(&val) {
                    return Err(not_enabled(format!("ν-variable `{}` = `{}` is not fresh", v.name, val)));
                }
                if !seen.insert(val) {
                    return Err(not_enabled(format!("ν-variable `{}` reuses a fresh value", v.name)));
                }
            }
        }
        Ok(())
    }

    pub fn fire(&self, m: &Marking, t: TransitionId, sigma: &Binding) -> Result<Marking, FireError> {
        self.check_enabled(m, t, sigma)?;
        Ok(self.fire_unchecked(m, t, sigma))
    }

    /// `m − σ(F_in) + σ(F_out)` without checking enablement.
    pub fn fire_unchecked(&self, m: &Marking, t: TransitionId, sigma: &Binding) -> Marking {
        let tr = self.net.transition(t);
        let mut next = m.clone();
        for arc in &tr.inputs {
            for insc in &arc.inscriptions {
                if let Ok(tuple) = ground(sigma, &insc.terms) {
                    next.tokens_mut(arc.place).remove(&tuple, insc.mult);
                }
            }
        }
        for arc in &tr.outputs {
            for insc in &arc.inscriptions {
                if let Ok(tuple) = ground(sigma, &insc.terms) {
                    next.add(arc.place, tuple, insc.mult);
                }
            }
        }
        next
    }
}
