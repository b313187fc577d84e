use std::collections::{BTreeMap, BTreeSet};

use crate::model::{validate_instance, CatalogInstance, CatalogSchema, Tuple, Value, ValueDomain};
use crate::Sym;

use super::ExploreError;

/// Scope of a small-scope catalog enumeration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogBounds {
    /// Facts per relation, unless overridden in `per_relation`.
    pub max_facts: usize,
    pub per_relation: BTreeMap<Sym, usize>,
    pub max_total_facts: Option<usize>,
    /// Anonymous values `T#0 .. T#(pool-1)` per unbounded type.
    pub pool: u32,
    pub pool_by_type: BTreeMap<Sym, u32>,
    /// Named values that may appear in facts and keep their identity.
    pub seeds: BTreeSet<Value>,
    /// Relations whose content is fixed rather than enumerated.
    pub fixed: BTreeMap<Sym, BTreeSet<Tuple>>,
}

impl Default for CatalogBounds {
    fn default() -> Self {
        CatalogBounds {
            max_facts: 2,
            per_relation: BTreeMap::new(),
            max_total_facts: None,
            pool: 2,
            pool_by_type: BTreeMap::new(),
            seeds: BTreeSet::new(),
            fixed: BTreeMap::new(),
        }
    }
}

impl CatalogBounds {
    pub fn new(max_facts: usize, pool: u32) -> Self {
        CatalogBounds { max_facts, pool, ..Default::default() }
    }

    pub fn with_relation_max(mut self, relation: &str, n: usize) -> Self {
        self.per_relation.insert(Sym::new(relation), n);
        self
    }

    pub fn with_pool_for(mut self, ty: &str, n: u32) -> Self {
        self.pool_by_type.insert(Sym::new(ty), n);
        self
    }

    /// Keeps the facts of the given relations from `cat` fixed.
    pub fn fix_from(mut self, cat: &CatalogInstance, relations: &[&str]) -> Self {
        for r in relations {
            let r = Sym::new(r);
            let facts = cat.facts(r).clone();
            self.seeds.extend(facts.iter().flatten().copied());
            self.fixed.insert(r, facts);
        }
        self
    }

    fn max_for(&self, r: Sym) -> usize {
        self.per_relation.get(&r).copied().unwrap_or(self.max_facts)
    }

    fn pool_for(&self, ty: Sym) -> u32 {
        self.pool_by_type.get(&ty).copied().unwrap_or(self.pool)
    }
}

/// All valid catalog instances within `bounds`, one per class of instances
/// equal up to a type-respecting permutation of the anonymous pool values.
/// Seeds, named constants and fixed facts are never renamed. The result is
/// sorted.
pub fn enumerate_catalogs(schema: &CatalogSchema, bounds: &CatalogBounds) -> Result<Vec<CatalogInstance>, ExploreError> {
    for r in bounds.fixed.keys() {
        if schema.relation(*r).is_none() {
            return Err(ExploreError::InvalidBounds(format!("fixed relation `{r}` is not in the schema")));
        }
    }
    let mut domains: BTreeMap<Sym, Vec<Value>> = BTreeMap::new();
    let mut permutable: BTreeMap<Sym, Vec<Value>> = BTreeMap::new();
    for t in &schema.types.types {
        let dom: Vec<Value> = match &t.domain {
            ValueDomain::Finite(names) => names.iter().map(|n| Value::named(t.name, *n)).collect(),
            ValueDomain::Unbounded => {
                let mut d: BTreeSet<Value> = bounds.seeds.iter().filter(|v| v.ty == t.name).copied().collect();
                let pool: Vec<Value> =
                    (0..bounds.pool_for(t.name)).map(|i| Value::pool(t.name, i)).filter(|v| !bounds.seeds.contains(v)).collect();
                d.extend(pool.iter().copied());
                permutable.insert(t.name, pool);
                d.into_iter().collect()
            }
        };
        domains.insert(t.name, dom);
    }

    // per relation: every set of facts with pairwise distinct keys
    let mut options: Vec<(Sym, Vec<BTreeSet<Tuple>>)> = Vec::new();
    for rel in &schema.relations {
        if let Some(f) = bounds.fixed.get(&rel.name) {
            options.push((rel.name, vec![f.clone()]));
            continue;
        }
        let mut cands: Vec<Tuple> = vec![Vec::new()];
        for ty in rel.attr_types() {
            let dom = domains.get(&ty).map(Vec::as_slice).unwrap_or(&[]);
            cands = cands
                .into_iter()
                .flat_map(|t| {
                    dom.iter().map(move |v| {
                        let mut t = t.clone();
                        t.push(*v);
                        t
                    })
                })
                .collect();
        }
        let mut sets = Vec::new();
        subsets_distinct_keys(&cands, rel.key, bounds.max_for(rel.name), 0, &mut Vec::new(), &mut sets);
        options.push((rel.name, sets));
    }

    let mut out: BTreeSet<CatalogInstance> = BTreeSet::new();
    let perms = type_permutations(&permutable);
    let mut choice = vec![0usize; options.len()];
    loop {
        let mut cat = CatalogInstance::new();
        for (i, (r, sets)) in options.iter().enumerate() {
            for t in &sets[choice[i]] {
                cat.insert(*r, t.clone());
            }
        }
        let within = bounds.max_total_facts.is_none_or(|n| cat.fact_count() <= n);
        if within && !validate_instance(schema, &cat).has_errors() {
            out.insert(canonical_catalog(&cat, &perms));
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == options.len() {
                return Ok(out.into_iter().collect());
            }
            choice[i] += 1;
            if choice[i] < options[i].1.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

fn subsets_distinct_keys(cands: &[Tuple], key: usize, max: usize, from: usize, cur: &mut Vec<Tuple>, out: &mut Vec<BTreeSet<Tuple>>) {
    out.push(cur.iter().cloned().collect());
    if cur.len() == max {
        return;
    }
    for i in from..cands.len() {
        if cur.iter().any(|t| t[key] == cands[i][key]) {
            continue;
        }
        cur.push(cands[i].clone());
        subsets_distinct_keys(cands, key, max, i + 1, cur, out);
        cur.pop();
    }
}

/// Every product of per-type permutations of the given values, as renamings.
fn type_permutations(permutable: &BTreeMap<Sym, Vec<Value>>) -> Vec<BTreeMap<Value, Value>> {
    let mut out = vec![BTreeMap::new()];
    for vals in permutable.values() {
        if vals.len() < 2 {
            continue;
        }
        let mut perms = Vec::new();
        permute(vals.clone(), 0, &mut perms);
        out = out
            .into_iter()
            .flat_map(|base| {
                perms.iter().map(move |p| {
                    let mut m = base.clone();
                    m.extend(vals.iter().copied().zip(p.iter().copied()));
                    m
                })
            })
            .collect();
    }
    out
}

fn permute(mut v: Vec<Value>, k: usize, out: &mut Vec<Vec<Value>>) {
    if k == v.len() {
        out.push(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v.clone(), k + 1, out);
        v.swap(k, i);
    }
}

fn canonical_catalog(cat: &CatalogInstance, perms: &[BTreeMap<Value, Value>]) -> CatalogInstance {
    perms
        .iter()
        .map(|p| {
            let mut c = CatalogInstance::new();
            for (r, facts) in cat.relations() {
                for t in facts {
                    c.insert(r, t.iter().map(|v| p.get(v).copied().unwrap_or(*v)).collect());
                }
            }
            c
        })
        .min()
        .unwrap_or_else(|| cat.clone())
}
