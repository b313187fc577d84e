use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::model::{TypeDomain, Value};
use crate::Sym;

use super::marking::Marking;
use super::structure::PlaceId;

/// Canonical representative of `m` up to renaming of unprotected values.
///
/// Every value of an unbounded type that is not in `protected` is renamable,
/// named constants included. Renamable values are mapped, per type, onto the
/// least pool values outside `protected`. Two markings that differ only by a
/// type-respecting bijection fixing `protected` get the same result.
pub fn canonicalize_marking(m: &Marking, protected: &BTreeSet<Value>, types: &TypeDomain) -> Marking {
    canonical_form(m, protected, types).0
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Elem {
    Fixed(Value),
    Var(usize),
}

struct Problem {
    values: Vec<Value>,
    tokens: Vec<(usize, Vec<Elem>, u32)>,
    /// (token index, position) for each renamable value
    occ: Vec<Vec<(usize, usize)>>,
    places: usize,
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum SigElem {
    Fixed(Value),
    Color(u32),
    Me,
}

/// As [`canonicalize_marking`], also returning the renaming applied.
pub fn canonical_form(m: &Marking, protected: &BTreeSet<Value>, types: &TypeDomain) -> (Marking, BTreeMap<Value, Value>) {
    let mut index: HashMap<Value, usize> = HashMap::new();
    let mut values = Vec::new();
    let mut tokens = Vec::new();
    for (p, ms) in m.iter() {
        for (tuple, count) in ms.iter() {
            let elems: Vec<Elem> = tuple
                .iter()
                .map(|v| {
                    if protected.contains(v) || !types.is_unbounded(v.ty) {
                        Elem::Fixed(*v)
                    } else {
                        let i = *index.entry(*v).or_insert_with(|| {
                            values.push(*v);
                            values.len() - 1
                        });
                        Elem::Var(i)
                    }
                })
                .collect();
            tokens.push((p.0, elems, count));
        }
    }
    if values.is_empty() {
        return (m.clone(), BTreeMap::new());
    }
    let mut occ = vec![Vec::new(); values.len()];
    for (ti, (_, elems, _)) in tokens.iter().enumerate() {
        for (pos, e) in elems.iter().enumerate() {
            if let Elem::Var(i) = e {
                occ[*i].push((ti, pos));
            }
        }
    }
    let problem = Problem { values, tokens, occ, places: m.place_count() };

    // initial colors: rank of the value's type
    let type_order: BTreeSet<Sym> = problem.values.iter().map(|v| v.ty).collect();
    let type_rank: HashMap<Sym, u32> = type_order.iter().enumerate().map(|(i, t)| (*t, i as u32)).collect();
    let colors: Vec<u32> = problem.values.iter().map(|v| type_rank[&v.ty]).collect();
    let colors = refine(&problem, colors);

    let mut targets: BTreeMap<Sym, Vec<Value>> = BTreeMap::new();
    for ty in &type_order {
        let need = problem.values.iter().filter(|v| v.ty == *ty).count();
        let mut list = Vec::with_capacity(need);
        let mut i = 0;
        while list.len() < need {
            let v = Value::pool(*ty, i);
            if !protected.contains(&v) {
                list.push(v);
            }
            i += 1;
        }
        targets.insert(*ty, list);
    }

    let mut best: Option<(Marking, Vec<usize>)> = None;
    search(&problem, colors, &targets, &mut best);
    let (marking, order) = best.expect("search always reaches a leaf");
    let renaming = order_to_renaming(&problem, &order, &targets);
    (marking, renaming)
}

fn refine(p: &Problem, mut colors: Vec<u32>) -> Vec<u32> {
    let mut classes = count_classes(&colors);
    loop {
        let sigs: Vec<(u32, Vec<(usize, usize, u32, Vec<SigElem>)>)> = (0..p.values.len())
            .map(|v| {
                let mut occs: Vec<(usize, usize, u32, Vec<SigElem>)> = p.occ[v]
                    .iter()
                    .map(|&(ti, pos)| {
                        let (place, elems, count) = &p.tokens[ti];
                        let shape = elems
                            .iter()
                            .map(|e| match e {
                                Elem::Fixed(x) => SigElem::Fixed(*x),
                                Elem::Var(u) if *u == v => SigElem::Me,
                                Elem::Var(u) => SigElem::Color(colors[*u]),
                            })
                            .collect();
                        (*place, pos, *count, shape)
                    })
                    .collect();
                occs.sort();
                (colors[v], occs)
            })
            .collect();
        let mut sorted: Vec<&(u32, Vec<(usize, usize, u32, Vec<SigElem>)>)> = sigs.iter().collect();
        sorted.sort();
        sorted.dedup();
        let rank: HashMap<&(u32, Vec<(usize, usize, u32, Vec<SigElem>)>), u32> =
            sorted.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
        colors = sigs.iter().map(|s| rank[s]).collect();
        let n = count_classes(&colors);
        if n == classes {
            return colors;
        }
        classes = n;
    }
}

fn count_classes(colors: &[u32]) -> usize {
    colors.iter().collect::<BTreeSet<_>>().len()
}

fn search(p: &Problem, colors: Vec<u32>, targets: &BTreeMap<Sym, Vec<Value>>, best: &mut Option<(Marking, Vec<usize>)>) {
    // first non-singleton class, by color
    let mut members: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (v, c) in colors.iter().enumerate() {
        members.entry(*c).or_default().push(v);
    }
    let Some((&cell_color, cell)) = members.iter().find(|(_, vs)| vs.len() > 1) else {
        let mut order: Vec<usize> = (0..p.values.len()).collect();
        order.sort_by_key(|&v| colors[v]);
        let m = build(p, &order, targets);
        if best.as_ref().map_or(true, |(b, _)| m < *b) {
            *best = Some((m, order));
        }
        return;
    };
    let _ = cell_color;
    let mut explored: Vec<usize> = Vec::new();
    for &u in cell {
        // skip u when swapping it with an explored member is an automorphism
        if explored.iter().any(|&w| swap_is_automorphism(p, u, w)) {
            continue;
        }
        explored.push(u);
        let individualized: Vec<u32> = colors
            .iter()
            .enumerate()
            .map(|(v, &c)| if v == u { 2 * c } else { 2 * c + 1 })
            .collect();
        search(p, refine(p, individualized), targets, best);
    }
}

fn token_multiset(p: &Problem, swap: Option<(usize, usize)>) -> Vec<(usize, Vec<Elem>, u32)> {
    let mut out: Vec<(usize, Vec<Elem>, u32)> = p
        .tokens
        .iter()
        .map(|(pl, elems, c)| {
            let elems = elems
                .iter()
                .map(|e| match (e, swap) {
                    (Elem::Var(x), Some((a, b))) if *x == a => Elem::Var(b),
                    (Elem::Var(x), Some((a, b))) if *x == b => Elem::Var(a),
                    _ => *e,
                })
                .collect();
            (*pl, elems, *c)
        })
        .collect();
    out.sort();
    out
}

fn swap_is_automorphism(p: &Problem, a: usize, b: usize) -> bool {
    token_multiset(p, None) == token_multiset(p, Some((a, b)))
}

fn order_to_renaming(p: &Problem, order: &[usize], targets: &BTreeMap<Sym, Vec<Value>>) -> BTreeMap<Value, Value> {
    let mut next: BTreeMap<Sym, usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for &v in order {
        let val = p.values[v];
        let i = next.entry(val.ty).or_default();
        out.insert(val, targets[&val.ty][*i]);
        *i += 1;
    }
    out
}

fn build(p: &Problem, order: &[usize], targets: &BTreeMap<Sym, Vec<Value>>) -> Marking {
    let renaming = order_to_renaming(p, order, targets);
    let mut m = Marking::empty(p.places);
    for (place, elems, count) in &p.tokens {
        let tuple = elems
            .iter()
            .map(|e| match e {
                Elem::Fixed(v) => *v,
                Elem::Var(i) => renaming[&p.values[*i]],
            })
            .collect();
        m.add(PlaceId(*place), tuple, *count);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn types() -> TypeDomain {
        TypeDomain::new().with_unbounded(&["String", "Order"])
    }

    #[test]
    fn single_value_renamed() {
        let m = Marking::empty(1).with(PlaceId(0), vec![Value::pool("String", 7)], 1);
        let c = canonicalize_marking(&m, &BTreeSet::new(), &types());
        assert_eq!(c, Marking::empty(1).with(PlaceId(0), vec![Value::pool("String", 0)], 1));
    }

    #[test]
    fn protected_values_untouched() {
        let a = Value::named("String", "a");
        let m = Marking::empty(1).with(PlaceId(0), vec![a], 2);
        let protected: BTreeSet<Value> = [a].into_iter().collect();
        assert_eq!(canonicalize_marking(&m, &protected, &types()), m);
    }

    #[test]
    fn targets_skip_protected_pool_values() {
        let m = Marking::empty(1).with(PlaceId(0), vec![Value::pool("String", 5)], 1);
        let protected: BTreeSet<Value> = [Value::pool("String", 0)].into_iter().collect();
        let c = canonicalize_marking(&m, &protected, &types());
        assert_eq!(c, Marking::empty(1).with(PlaceId(0), vec![Value::pool("String", 1)], 1));
    }

    #[test]
    fn permutation_invariance() {
        let o = |i| Value::pool("Order", i);
        let s = |i| Value::pool("String", i);
        let m1 = Marking::empty(2)
            .with(PlaceId(0), vec![o(1)], 1)
            .with(PlaceId(0), vec![o(2)], 1)
            .with(PlaceId(1), vec![s(4), o(1)], 2);
        let m2 = Marking::empty(2)
            .with(PlaceId(0), vec![o(9)], 1)
            .with(PlaceId(0), vec![o(3)], 1)
            .with(PlaceId(1), vec![s(0), o(3)], 2);
        let c1 = canonicalize_marking(&m1, &BTreeSet::new(), &types());
        assert_eq!(c1, canonicalize_marking(&m2, &BTreeSet::new(), &types()));
        assert_eq!(c1, canonicalize_marking(&c1, &BTreeSet::new(), &types()));
    }

    #[test]
    fn finite_types_are_kept() {
        let mut td = types();
        td.add("Color", crate::model::ValueDomain::Finite(vec![Sym::new("red"), Sym::new("blue")]));
        let m = Marking::empty(1).with(PlaceId(0), vec![Value::named("Color", "red")], 1);
        assert_eq!(canonicalize_marking(&m, &BTreeSet::new(), &td), m);
    }
}
