use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::model::{CatalogInstance, Value};
use crate::net::{canonicalize_marking, Binding, FreshPolicy, Marking, Net, NetContext, TransitionId};
use crate::Sym;

use super::ExploreError;

/// Bounds on an exploration. All bounds must be positive.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExplorationLimits {
    pub max_states: usize,
    /// Maximum BFS depth; states at this depth are not expanded.
    pub max_depth: usize,
    /// Successors with more tokens than this in some place are discarded.
    pub token_bound: Option<usize>,
    /// Successors with more tokens than this in total are discarded.
    pub total_token_bound: Option<usize>,
    /// ν-bindings of a type are discarded once a state already holds this many
    /// distinct non-protected values of that type.
    pub fresh_cap: Option<usize>,
    pub fresh_cap_by_type: BTreeMap<Sym, usize>,
}

impl Default for ExplorationLimits {
    fn default() -> Self {
        ExplorationLimits {
            max_states: 10_000,
            max_depth: 20,
            token_bound: None,
            total_token_bound: None,
            fresh_cap: None,
            fresh_cap_by_type: BTreeMap::new(),
        }
    }
}

impl ExplorationLimits {
    pub fn new(max_states: usize, max_depth: usize) -> Self {
        ExplorationLimits { max_states, max_depth, ..Default::default() }
    }

    pub fn with_fresh_cap(mut self, cap: usize) -> Self {
        self.fresh_cap = Some(cap);
        self
    }

    pub fn with_fresh_cap_for(mut self, ty: &str, cap: usize) -> Self {
        self.fresh_cap_by_type.insert(Sym::new(ty), cap);
        self
    }

    pub fn with_token_bound(mut self, b: usize) -> Self {
        self.token_bound = Some(b);
        self
    }

    pub fn validate(&self) -> Result<(), ExploreError> {
        let mut bad = Vec::new();
        if self.max_states == 0 {
            bad.push("max_states");
        }
        if self.max_depth == 0 {
            bad.push("max_depth");
        }
        if self.token_bound == Some(0) {
            bad.push("token_bound");
        }
        if self.total_token_bound == Some(0) {
            bad.push("total_token_bound");
        }
        if self.fresh_cap == Some(0) || self.fresh_cap_by_type.values().any(|c| *c == 0) {
            bad.push("fresh_cap");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ExploreError::InvalidLimits(bad.join(", ")))
        }
    }

    fn cap_for(&self, ty: Sym) -> Option<usize> {
        self.fresh_cap_by_type.get(&ty).copied().or(self.fresh_cap)
    }
}

/// Counters for the freshness invariant: every ν-value must be absent from
/// `Val(m) ∪ Val(Cat)` when it is bound.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FreshStats {
    pub checks: u64,
    pub violations: u64,
}

impl FreshStats {
    pub fn add(&mut self, other: FreshStats) {
        self.checks += other.checks;
        self.violations += other.violations;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub transition: TransitionId,
    pub binding: Binding,
    pub to: usize,
}

/// The explored part of the induced transition system.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionSystem {
    /// States in discovery order; state 0 is the initial one.
    pub states: Vec<Marking>,
    pub depth: Vec<usize>,
    pub edges: Vec<Edge>,
    /// Index into `edges` of the edge that discovered each state.
    pub parent: Vec<Option<usize>>,
    /// Whether every reachable state was expanded without hitting a limit.
    pub exhausted: bool,
    pub fresh: FreshStats,
}

impl TransitionSystem {
    pub fn initial(&self) -> &Marking {
        &self.states[0]
    }

    /// Edges from the initial state to `s`.
    pub fn path_to(&self, mut s: usize) -> Vec<&Edge> {
        let mut out = Vec::new();
        while let Some(e) = self.parent[s] {
            out.push(&self.edges[e]);
            s = self.edges[e].from;
        }
        out.reverse();
        out
    }

    pub fn max_depth_reached(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }
}

/// Breadth-first explorer for one net and catalog.
pub struct Explorer<'a> {
    ctx: NetContext<'a>,
    limits: ExplorationLimits,
    policy: FreshPolicy,
    symmetry: bool,
    protected: BTreeSet<Value>,
}

impl<'a> Explorer<'a> {
    pub fn new(net: &'a Net, cat: &'a CatalogInstance, limits: ExplorationLimits) -> Result<Explorer<'a>, ExploreError> {
        limits.validate()?;
        let mut protected = cat.values();
        protected.extend(net.constants());
        Ok(Explorer { ctx: NetContext::new(net, cat), limits, policy: FreshPolicy::Canonical, symmetry: true, protected })
    }

    pub fn fresh_policy(mut self, policy: FreshPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Whether states are identified up to renaming of unprotected values.
    pub fn symmetry(mut self, on: bool) -> Self {
        self.symmetry = on;
        self
    }

    /// Values that must keep their identity, such as property constants.
    /// Fresh values avoid them too.
    pub fn protect(mut self, values: impl IntoIterator<Item = Value>) -> Self {
        let values: Vec<Value> = values.into_iter().collect();
        self.ctx.avoid_also(values.iter().copied());
        self.protected.extend(values);
        self
    }

    pub fn context(&self) -> &NetContext<'a> {
        &self.ctx
    }

    pub fn net(&self) -> &'a Net {
        self.ctx.net()
    }

    pub fn limits(&self) -> &ExplorationLimits {
        &self.limits
    }

    pub fn protected(&self) -> &BTreeSet<Value> {
        &self.protected
    }

    pub fn normalize(&self, m: &Marking) -> Marking {
        if self.symmetry {
            canonicalize_marking(m, &self.protected, &self.net().schema.types)
        } else {
            m.clone()
        }
    }

    fn within_bounds(&self, m: &Marking) -> bool {
        if let Some(b) = self.limits.token_bound {
            if m.iter().any(|(_, ms)| ms.len() > b) {
                return false;
            }
        }
        if let Some(b) = self.limits.total_token_bound {
            if m.total_tokens() > b {
                return false;
            }
        }
        true
    }

    /// Successors of `m` in transition order, then binding order. The flag
    /// reports whether some successor was discarded by a limit.
    pub fn successors(&self, m: &Marking, stats: &mut FreshStats) -> (Vec<(TransitionId, Binding, Marking)>, bool) {
        let net = self.net();
        let mut out = Vec::new();
        let mut pruned = false;
        let mut val_m: Option<BTreeSet<Value>> = None;
        for t in net.transition_ids() {
            let fresh: Vec<_> = net.transition(t).fresh_vars().into_iter().collect();
            if !fresh.is_empty() && val_m.is_none() {
                val_m = Some(m.values());
            }
            let empty = BTreeSet::new();
            let vm = val_m.as_ref().unwrap_or(&empty);
            if !fresh.is_empty() {
                let blocked = fresh.iter().any(|v| {
                    self.limits.cap_for(v.ty).is_some_and(|cap| {
                        vm.iter().filter(|x| x.ty == v.ty && !self.protected.contains(x)).count() >= cap
                    })
                });
                if blocked {
                    if !self.ctx.enabled_with(m, t, self.policy, vm).is_empty() {
                        pruned = true;
                    }
                    continue;
                }
            }
            for sigma in self.ctx.enabled_with(m, t, self.policy, vm) {
                for v in &fresh {
                    stats.checks += 1;
                    let val = sigma.get(v.name);
                    if val.is_none_or(|x| vm.contains(&x) || self.ctx.in_catalog(&x)) {
                        stats.violations += 1;
                    }
                }
                let next = self.ctx.fire_unchecked(m, t, &sigma);
                if !self.within_bounds(&next) {
                    pruned = true;
                    continue;
                }
                out.push((t, sigma, next));
            }
        }
        (out, pruned)
    }

    /// Full exploration from `m0` up to the limits.
    pub fn explore(&self, m0: &Marking) -> TransitionSystem {
        self.search(m0, |_| false).0
    }

    /// Explores until `stop` holds for a state; returns that state's index.
    pub fn search(&self, m0: &Marking, mut stop: impl FnMut(&Marking) -> bool) -> (TransitionSystem, Option<usize>) {
        let init = self.normalize(m0);
        let mut ts = TransitionSystem {
            states: vec![init.clone()],
            depth: vec![0],
            edges: Vec::new(),
            parent: vec![None],
            exhausted: true,
            fresh: FreshStats::default(),
        };
        if stop(&init) {
            ts.exhausted = false;
            return (ts, Some(0));
        }
        let mut index: HashMap<Marking, usize> = HashMap::new();
        index.insert(init, 0);
        let mut queue = VecDeque::from([0usize]);
        while let Some(s) = queue.pop_front() {
            if ts.depth[s] >= self.limits.max_depth {
                ts.exhausted = false;
                continue;
            }
            let m = ts.states[s].clone();
            let (succ, pruned) = self.successors(&m, &mut ts.fresh);
            if pruned {
                ts.exhausted = false;
            }
            for (t, sigma, next) in succ {
                let next = self.normalize(&next);
                let edge = ts.edges.len();
                let to = match index.get(&next) {
                    Some(&i) => i,
                    None => {
                        if ts.states.len() >= self.limits.max_states {
                            ts.exhausted = false;
                            continue;
                        }
                        let i = ts.states.len();
                        ts.states.push(next.clone());
                        ts.depth.push(ts.depth[s] + 1);
                        ts.parent.push(Some(edge));
                        index.insert(next, i);
                        queue.push_back(i);
                        i
                    }
                };
                ts.edges.push(Edge { from: s, transition: t, binding: sigma, to });
                if to == ts.states.len() - 1 && ts.parent[to] == Some(edge) && stop(&ts.states[to]) {
                    ts.exhausted = false;
                    return (ts, Some(to));
                }
            }
        }
        (ts, None)
    }
}
