use std::collections::{BTreeSet, HashMap};

use crate::model::{ActiveDomain, CatalogInstance, Value};
use crate::Sym;

use super::ast::{Condition, ConjunctiveQuery, Substitution, Term, UnionQuery, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    Unbound(Sym),
}

/// Evaluates φ under θ. Every variable of φ must be bound.
pub fn evaluate_condition(c: &Condition, theta: &Substitution) -> Result<bool, EvalError> {
    Ok(match c {
        Condition::True => true,
        Condition::Eq(a, b) => term_value(a, theta)? == term_value(b, theta)?,
        Condition::Not(inner) => !evaluate_condition(inner, theta)?,
        Condition::And(cs) => {
            let mut all = true;
            for c in cs {
                // evaluate every conjunct so unbound variables are always reported
                all &= evaluate_condition(c, theta)?;
            }
            all
        }
    })
}

fn term_value(t: &Term, theta: &Substitution) -> Result<Value, EvalError> {
    match t {
        Term::Const(c) => Ok(*c),
        Term::Var(v) => theta.get(v.name).ok_or(EvalError::Unbound(v.name)),
    }
}

/// `ans(Q, Cat)`.
pub fn evaluate_query(q: &UnionQuery, cat: &CatalogInstance) -> BTreeSet<Substitution> {
    Evaluator::new(cat).answers(q, &Substitution::new())
}

/// Answers over the free variables not fixed by `fixed`; fixed variables may
/// hold any value, including values outside `Val(Cat)`.
pub fn evaluate_query_with(q: &UnionQuery, cat: &CatalogInstance, fixed: &Substitution) -> BTreeSet<Substitution> {
    Evaluator::new(cat).answers(q, fixed)
}

/// A catalog with its active domain precomputed.
pub struct Evaluator<'a> {
    cat: &'a CatalogInstance,
    adom: ActiveDomain,
}

enum Step {
    Atom(usize),
    Enumerate(usize),
}

struct Plan {
    slots: Vec<Var>,
    steps: Vec<Step>,
    /// Filters to check after each step; index 0 holds filters over fixed slots only.
    filters: Vec<Vec<Filter>>,
    pos: Vec<(Sym, Vec<Arg>)>,
    project: Vec<usize>,
}

#[derive(Clone, Copy)]
enum Arg {
    Slot(usize),
    Const(Value),
}

enum Filter {
    Absent(Sym, Vec<Arg>),
    Cond(CCond),
}

enum CCond {
    True,
    Eq(Arg, Arg),
    Not(Box<CCond>),
    And(Vec<CCond>),
}

impl<'a> Evaluator<'a> {
    pub fn new(cat: &'a CatalogInstance) -> Evaluator<'a> {
        Evaluator { cat, adom: cat.active_domain() }
    }

    pub fn catalog(&self) -> &'a CatalogInstance {
        self.cat
    }

    pub fn active_domain(&self) -> &ActiveDomain {
        &self.adom
    }

    pub fn answers(&self, q: &UnionQuery, fixed: &Substitution) -> BTreeSet<Substitution> {
        let mut out = BTreeSet::new();
        for d in &q.disjuncts {
            self.eval_cq(d, fixed, &mut out);
        }
        out
    }

    /// Whether `Cat ⊨ Qθ` when θ binds every free variable of Q.
    pub fn holds(&self, q: &UnionQuery, theta: &Substitution) -> bool {
        q.disjuncts.iter().any(|d| {
            let mut out = BTreeSet::new();
            self.eval_cq(d, theta, &mut out);
            !out.is_empty()
        })
    }

    fn plan(&self, cq: &ConjunctiveQuery, fixed: &Substitution, init: &mut Vec<Option<Value>>) -> Plan {
        let slots: Vec<Var> = cq.vars().into_iter().collect();
        let index: HashMap<Sym, usize> = slots.iter().enumerate().map(|(i, v)| (v.name, i)).collect();
        let bound_names: BTreeSet<Sym> = cq.exists.iter().map(|v| v.name).collect();
        init.clear();
        init.extend(slots.iter().map(|v| if bound_names.contains(&v.name) { None } else { fixed.get(v.name) }));
        let arg = |t: &Term| match t {
            Term::Var(v) => Arg::Slot(index[&v.name]),
            Term::Const(c) => Arg::Const(*c),
        };

        let mut positives: Vec<(Sym, Vec<Arg>)> = Vec::new();
        let mut filters_raw: Vec<(BTreeSet<usize>, Filter)> = Vec::new();
        for l in &cq.literals {
            let args: Vec<Arg> = l.atom.args.iter().map(arg).collect();
            if l.positive {
                positives.push((l.atom.relation, args));
            } else {
                let slots_used = args.iter().filter_map(|a| if let Arg::Slot(s) = a { Some(*s) } else { None }).collect();
                filters_raw.push((slots_used, Filter::Absent(l.atom.relation, args)));
            }
        }
        for c in cq.condition.conjuncts() {
            let mut vs = BTreeSet::new();
            c.vars(&mut vs);
            filters_raw.push((vs.iter().map(|v| index[&v.name]).collect(), Filter::Cond(compile_cond(c, &arg))));
        }
        positives.sort_by_key(|(r, _)| self.cat.facts(*r).len());

        let mut bound: BTreeSet<usize> = (0..slots.len()).filter(|&i| init[i].is_some()).collect();
        let mut steps = Vec::new();
        let mut bound_after = vec![bound.clone()];
        for (i, (_, args)) in positives.iter().enumerate() {
            steps.push(Step::Atom(i));
            for a in args {
                if let Arg::Slot(s) = a {
                    bound.insert(*s);
                }
            }
            bound_after.push(bound.clone());
        }
        for s in 0..slots.len() {
            if !bound.contains(&s) {
                steps.push(Step::Enumerate(s));
                bound.insert(s);
                bound_after.push(bound.clone());
            }
        }
        let mut filters: Vec<Vec<Filter>> = (0..=steps.len()).map(|_| Vec::new()).collect();
        for (need, f) in filters_raw {
            let level = bound_after.iter().position(|b| need.is_subset(b)).unwrap_or(steps.len());
            filters[level].push(f);
        }
        let project = (0..slots.len())
            .filter(|&i| !bound_names.contains(&slots[i].name) && init[i].is_none())
            .collect();
        Plan { slots, steps, filters, pos: positives, project }
    }

    fn eval_cq(&self, cq: &ConjunctiveQuery, fixed: &Substitution, out: &mut BTreeSet<Substitution>) {
        let mut binding = Vec::new();
        let plan = self.plan(cq, fixed, &mut binding);
        if !self.filters_hold(&plan.filters[0], &binding) {
            return;
        }
        self.search(&plan, 0, &mut binding, out);
    }

    fn search(&self, plan: &Plan, step: usize, binding: &mut Vec<Option<Value>>, out: &mut BTreeSet<Substitution>) {
        if step == plan.steps.len() {
            let mut theta = Substitution::new();
            for &i in &plan.project {
                if let Some(v) = binding[i] {
                    debug_assert!(self.adom.contains(&v), "answer value outside the active domain");
                    theta.insert(plan.slots[i].name, v);
                }
            }
            out.insert(theta);
            return;
        }
        match plan.steps[step] {
            Step::Atom(a) => {
                let (rel, args) = &plan.pos[a];
                let mut newly = Vec::with_capacity(args.len());
                'facts: for fact in self.cat.facts(*rel) {
                    if fact.len() != args.len() {
                        continue;
                    }
                    newly.clear();
                    for (arg, v) in args.iter().zip(fact) {
                        match *arg {
                            Arg::Const(c) => {
                                if c != *v {
                                    undo(binding, &newly);
                                    continue 'facts;
                                }
                            }
                            Arg::Slot(s) => match binding[s] {
                                Some(b) if b != *v => {
                                    undo(binding, &newly);
                                    continue 'facts;
                                }
                                Some(_) => {}
                                None => {
                                    binding[s] = Some(*v);
                                    newly.push(s);
                                }
                            },
                        }
                    }
                    if self.filters_hold(&plan.filters[step + 1], binding) {
                        self.search(plan, step + 1, binding, out);
                    }
                    undo(binding, &newly);
                }
            }
            Step::Enumerate(s) => {
                let ty = plan.slots[s].ty;
                for v in self.adom.of(ty) {
                    binding[s] = Some(*v);
                    if self.filters_hold(&plan.filters[step + 1], binding) {
                        self.search(plan, step + 1, binding, out);
                    }
                }
                binding[s] = None;
            }
        }
    }

    fn filters_hold(&self, filters: &[Filter], binding: &[Option<Value>]) -> bool {
        filters.iter().all(|f| match f {
            Filter::Absent(rel, args) => {
                let tuple: Vec<Value> = args.iter().map(|a| arg_value(*a, binding)).collect();
                !self.cat.contains(*rel, &tuple)
            }
            Filter::Cond(c) => cond_holds(c, binding),
        })
    }
}

fn undo(binding: &mut [Option<Value>], newly: &[usize]) {
    for &s in newly {
        binding[s] = None;
    }
}

fn arg_value(a: Arg, binding: &[Option<Value>]) -> Value {
    match a {
        Arg::Const(c) => c,
        Arg::Slot(s) => binding[s].expect("filter scheduled before its variables are bound"),
    }
}

fn cond_holds(c: &CCond, binding: &[Option<Value>]) -> bool {
    match c {
        CCond::True => true,
        CCond::Eq(a, b) => arg_value(*a, binding) == arg_value(*b, binding),
        CCond::Not(inner) => !cond_holds(inner, binding),
        CCond::And(cs) => cs.iter().all(|c| cond_holds(c, binding)),
    }
}

fn compile_cond(c: &Condition, arg: &impl Fn(&Term) -> Arg) -> CCond {
    match c {
        Condition::True => CCond::True,
        Condition::Eq(a, b) => CCond::Eq(arg(a), arg(b)),
        Condition::Not(inner) => CCond::Not(Box::new(compile_cond(inner, arg))),
        Condition::And(cs) => CCond::And(cs.iter().map(|c| compile_cond(c, arg)).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::ast::{Atom, QueryExpr, Var};

    fn v(ty: &str, n: &str) -> Value {
        Value::named(ty, n)
    }

    #[test]
    fn prodcat_answers() {
        let cat = CatalogInstance::new()
            .with_fact("ProdCat", vec![v("ProdType", "veg")])
            .with_fact("ProdCat", vec![v("ProdType", "fur")]);
        let p = Var::new("p", "ProdType");
        let ans = evaluate_query(&UnionQuery::single(ConjunctiveQuery::atom("ProdCat", vec![Term::Var(p)])), &cat);
        let expected: BTreeSet<Substitution> = [
            Substitution::new().with("p", v("ProdType", "fur")),
            Substitution::new().with("p", v("ProdType", "veg")),
        ]
        .into_iter()
        .collect();
        assert_eq!(ans, expected);
    }

    #[test]
    fn existential_with_constant() {
        let cat = CatalogInstance::new()
            .with_fact("Comp", vec![v("CId", "c1"), v("ProdType", "veg"), v("TruckType", "fridge")])
            .with_fact("Comp", vec![v("CId", "c2"), v("ProdType", "fur"), v("TruckType", "flat")]);
        let c = Var::new("c", "CId");
        let t = Var::new("t", "TruckType");
        let q = QueryExpr::exists(
            &[c],
            QueryExpr::Atom(Atom::new("Comp", vec![Term::Var(c), Term::Const(v("ProdType", "veg")), Term::Var(t)])),
        );
        let ans = evaluate_query(&UnionQuery::single(q.normalize()), &cat);
        assert_eq!(ans.into_iter().collect::<Vec<_>>(), vec![Substitution::new().with("t", v("TruckType", "fridge"))]);
    }

    #[test]
    fn negation_over_active_domain() {
        let cat = CatalogInstance::new()
            .with_fact("ProdCat", vec![v("ProdType", "veg")])
            .with_fact("Comp", vec![v("CId", "c1"), v("ProdType", "veg"), v("TruckType", "fridge")]);
        let p = Var::new("p", "ProdType");
        let q = UnionQuery::single(QueryExpr::NegAtom(Atom::new("ProdCat", vec![Term::Var(p)])).normalize());
        assert!(evaluate_query(&q, &cat).is_empty());
    }

    #[test]
    fn boolean_queries() {
        let cat = CatalogInstance::new().with_fact("ProdCat", vec![v("ProdType", "veg")]);
        let yes = UnionQuery::single(ConjunctiveQuery::atom("ProdCat", vec![Term::Const(v("ProdType", "veg"))]));
        let no = UnionQuery::single(ConjunctiveQuery::atom("ProdCat", vec![Term::Const(v("ProdType", "fur"))]));
        assert_eq!(evaluate_query(&yes, &cat).len(), 1);
        assert!(evaluate_query(&yes, &cat).iter().next().unwrap().is_empty());
        assert!(evaluate_query(&no, &cat).is_empty());
    }

    #[test]
    fn fixed_values_outside_the_catalog() {
        let cat = CatalogInstance::new().with_fact("ProdCat", vec![v("ProdType", "veg")]);
        let p = Var::new("p", "ProdType");
        let q = UnionQuery::single(QueryExpr::NegAtom(Atom::new("ProdCat", vec![Term::Var(p)])).normalize());
        let fixed = Substitution::new().with("p", Value::pool("ProdType", 9));
        assert_eq!(evaluate_query_with(&q, &cat, &fixed).len(), 1);
    }

    #[test]
    fn conditions() {
        let a = v("T", "a");
        let x = Var::new("x", "T");
        let y = Var::new("y", "T");
        assert_eq!(evaluate_condition(&Condition::True, &Substitution::new()), Ok(true));
        let th = Substitution::new().with("x", a);
        assert_eq!(evaluate_condition(&Condition::eq(Term::Var(x), Term::Const(a)), &th), Ok(true));
        let th2 = th.clone().with("y", a);
        assert_eq!(evaluate_condition(&Condition::neq(Term::Var(x), Term::Var(y)), &th2), Ok(false));
        assert_eq!(
            evaluate_condition(&Condition::neq(Term::Var(x), Term::Var(y)), &th),
            Err(EvalError::Unbound(Sym::new("y")))
        );
    }
}
