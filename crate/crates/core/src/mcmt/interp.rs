//! Reference interpreter for emitted documents over arrays of a fixed size.
//!
//! It reads the rendered text back, so it checks the statements as MCMT
//! would see them: guards, universal guards and cases are evaluated
//! literally. Catalog functions are read off a catalog instance: an
//! attribute function maps a key to the attribute of its fact, or to NULL
//! when the key has no fact. Existentially quantified data variables range
//! over the non-NULL values of their sort occurring in the constants, the
//! catalog or the current arrays, which is exact for documents without
//! ν-variables.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};

use thiserror::Error;

use crate::model::{CatalogInstance, Value};

use super::check::{blocks, Block};
use super::names::sanitize;
use super::McmtDocument;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InterpError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("array size must be positive")]
    ZeroSize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum IVal {
    Null,
    Data(Value),
    Bool(bool),
    Index(usize),
}

#[derive(Clone, Debug)]
enum T {
    Arr(usize, usize),
    Null,
    Bool(bool),
    Const(Value),
    Global(usize),
    Eevar(usize),
    Index(usize),
    App(usize, Box<T>),
}

#[derive(Clone, Debug)]
enum L {
    Eq(T, T),
    Not(Box<L>),
}

#[derive(Clone, Debug)]
enum Sx {
    Atom(String),
    List(Vec<Sx>),
}

fn parse_sx(src: &str, line: usize) -> Result<Vec<Sx>, InterpError> {
    let spaced = src.replace('(', " ( ").replace(')', " ) ");
    let mut stack: Vec<Vec<Sx>> = vec![Vec::new()];
    for tok in spaced.split_whitespace() {
        match tok {
            "(" => stack.push(Vec::new()),
            ")" => {
                let done = stack.pop().ok_or(InterpError::Parse { line, msg: "unbalanced `)`".into() })?;
                stack.last_mut().ok_or(InterpError::Parse { line, msg: "unbalanced `)`".into() })?.push(Sx::List(done));
            }
            atom => stack.last_mut().expect("stack is never empty here").push(Sx::Atom(atom.to_string())),
        }
    }
    match stack.len() {
        1 => Ok(stack.pop().unwrap_or_default()),
        _ => Err(InterpError::Parse { line, msg: "unbalanced `(`".into() }),
    }
}

struct Transition {
    nvars: usize,
    eevars: Vec<String>,
    guard: Vec<L>,
    uguard: Vec<L>,
    cases: Vec<(Option<L>, Vec<T>)>,
}

/// Array contents and global values.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    arrays: Vec<Vec<IVal>>,
    globals: Vec<IVal>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InterpOutcome {
    /// A state satisfying the unsafe formula, at the given number of steps.
    Unsafe { steps: usize },
    /// Every reachable array state was visited.
    Safe { states: usize },
    Incomplete { states: usize },
}

pub struct Interpreter {
    size: usize,
    locals: Vec<(String, String)>,
    globals: Vec<String>,
    initial: State,
    transitions: Vec<Transition>,
    unsafe_vars: usize,
    unsafe_lits: Vec<L>,
    /// Non-NULL values per sort from constants and the catalog.
    base_domain: BTreeMap<String, BTreeSet<Value>>,
    functions: Vec<(BTreeMap<Value, Vec<Value>>, Option<usize>)>,
}

struct Scope<'a> {
    locals: &'a [(String, String)],
    globals: &'a [String],
    consts: &'a BTreeMap<String, IVal>,
    funs: &'a BTreeMap<String, usize>,
    index: Vec<String>,
    eevars: Vec<String>,
}

impl Scope<'_> {
    fn term(&self, sx: &Sx, line: usize) -> Result<T, InterpError> {
        let err = |msg: String| InterpError::Parse { line, msg };
        match sx {
            Sx::List(items) => match items.as_slice() {
                [Sx::Atom(f), arg] => {
                    let fi = *self.funs.get(f).ok_or_else(|| err(format!("unknown function `{f}`")))?;
                    Ok(T::App(fi, Box::new(self.term(arg, line)?)))
                }
                _ => Err(err("expected a term".into())),
            },
            Sx::Atom(a) => {
                if let Some((name, idx)) = a.strip_suffix(']').and_then(|s| s.split_once('[')) {
                    let ai = self.locals.iter().position(|(n, _)| n == name).ok_or_else(|| err(format!("unknown array `{name}`")))?;
                    let ii = self.index.iter().position(|v| v == idx).ok_or_else(|| err(format!("unknown index `{idx}`")))?;
                    return Ok(T::Arr(ai, ii));
                }
                if a.starts_with("NULL_") {
                    return Ok(T::Null);
                }
                if let Some(i) = self.index.iter().position(|v| v == a) {
                    return Ok(T::Index(i));
                }
                if let Some(i) = self.eevars.iter().position(|v| v == a) {
                    return Ok(T::Eevar(i));
                }
                if let Some(i) = self.globals.iter().position(|v| v == a) {
                    return Ok(T::Global(i));
                }
                match self.consts.get(a) {
                    Some(IVal::Bool(b)) => Ok(T::Bool(*b)),
                    Some(IVal::Data(v)) => Ok(T::Const(*v)),
                    _ => Err(err(format!("unknown identifier `{a}`"))),
                }
            }
        }
    }

    fn lit(&self, sx: &Sx, line: usize) -> Result<L, InterpError> {
        match sx {
            Sx::List(items) => match items.as_slice() {
                [Sx::Atom(op), a, b] if op == "=" => Ok(L::Eq(self.term(a, line)?, self.term(b, line)?)),
                [Sx::Atom(op), inner] if op == "not" => Ok(L::Not(Box::new(self.lit(inner, line)?))),
                _ => Err(InterpError::Parse { line, msg: "expected a literal".into() }),
            },
            Sx::Atom(a) => Err(InterpError::Parse { line, msg: format!("expected a literal, found `{a}`") }),
        }
    }

    fn lits(&self, src: &str, line: usize) -> Result<Vec<L>, InterpError> {
        parse_sx(src, line)?.iter().map(|s| self.lit(s, line)).collect()
    }

    fn terms(&self, src: &str, line: usize) -> Result<Vec<T>, InterpError> {
        parse_sx(src, line)?.iter().map(|s| self.term(s, line)).collect()
    }
}

struct Ctx<'a> {
    state: &'a State,
    idx: &'a [usize],
    ee: &'a [Value],
}

impl Interpreter {
    /// Parses the rendered document. `size` is the number of array cells.
    pub fn new(doc: &McmtDocument, cat: &CatalogInstance, size: usize) -> Result<Interpreter, InterpError> {
        if size == 0 {
            return Err(InterpError::ZeroSize);
        }
        let text = doc.render();
        let bs = blocks(&text);
        let mut consts: BTreeMap<String, IVal> = doc.constants.iter().map(|(n, v)| (n.clone(), IVal::Data(*v))).collect();
        consts.insert("TRUE".into(), IVal::Bool(true));
        consts.insert("FALSE".into(), IVal::Bool(false));
        let funs: BTreeMap<String, usize> = doc.functions.iter().enumerate().map(|(i, f)| (f.name.clone(), i)).collect();
        let functions = doc
            .functions
            .iter()
            .map(|f| {
                let table: BTreeMap<Value, Vec<Value>> = cat.facts(f.relation).iter().map(|t| (t[0], t.clone())).collect();
                (table, f.attr)
            })
            .collect();
        let mut base_domain: BTreeMap<String, BTreeSet<Value>> = BTreeMap::new();
        for v in doc.constants.iter().map(|(_, v)| *v).chain(cat.values()) {
            base_domain.entry(sanitize(v.ty.as_str())).or_default().insert(v);
        }

        let locals: Vec<(String, String)> = bs
            .iter()
            .flat_map(|b| b.all(":local"))
            .filter_map(|l| l.rest.split_once(' ').map(|(n, s)| (n.to_string(), s.trim().to_string())))
            .collect();
        let globals: Vec<String> =
            bs.iter().flat_map(|b| b.all(":global")).filter_map(|l| l.rest.split_whitespace().next().map(str::to_string)).collect();
        let scope_for = |b: &Block| -> Scope<'_> {
            Scope {
                locals: &[],
                globals: &[],
                consts: &consts,
                funs: &funs,
                index: b.all(":var").map(|l| l.rest.clone()).collect(),
                eevars: b.all(":eevar").filter_map(|l| l.rest.split_whitespace().next().map(str::to_string)).collect(),
            }
        };

        let mut initial = State { arrays: vec![vec![IVal::Null; size]; locals.len()], globals: vec![IVal::Null; globals.len()] };
        let mut transitions = Vec::new();
        let mut unsafe_vars = 0;
        let mut unsafe_lits = Vec::new();
        for b in &bs {
            let mut sc = scope_for(b);
            sc.locals = &locals;
            sc.globals = &globals;
            match b.head() {
                ":initial" => {
                    for l in b.all(":cnj") {
                        for lit in sc.lits(&l.rest, l.no)? {
                            match lit {
                                L::Eq(T::Arr(a, _), v) => initial.arrays[a] = vec![const_val(&v); size],
                                L::Eq(T::Global(g), v) => initial.globals[g] = const_val(&v),
                                _ => return Err(InterpError::Parse { line: l.no, msg: "unsupported initial conjunct".into() }),
                            }
                        }
                    }
                }
                ":transition" => {
                    let mut guard = Vec::new();
                    for l in b.all(":guard") {
                        guard.extend(sc.lits(&l.rest, l.no)?);
                    }
                    let mut uguard = Vec::new();
                    for l in b.all(":uguard") {
                        uguard.extend(sc.lits(&l.rest, l.no)?);
                    }
                    let mut cases: Vec<(Option<L>, Vec<T>)> = Vec::new();
                    for l in &b.lines {
                        match l.key.as_str() {
                            ":case" => {
                                let cond = sc.lits(&l.rest, l.no)?.into_iter().next();
                                cases.push((cond, Vec::new()));
                            }
                            ":val" => {
                                let v = sc.terms(&l.rest, l.no)?;
                                let case = cases.last_mut().ok_or(InterpError::Parse { line: l.no, msg: ":val outside a case".into() })?;
                                case.1.extend(v);
                            }
                            _ => {}
                        }
                    }
                    if let Some((_, vals)) = cases.iter().find(|(_, v)| v.len() != locals.len() + globals.len()) {
                        return Err(InterpError::Parse { line: b.lines[0].no, msg: format!("case has {} values", vals.len()) });
                    }
                    transitions.push(Transition { nvars: sc.index.len(), eevars: eevar_sorts(b), guard, uguard, cases });
                }
                ":unsafe" => {
                    unsafe_vars = sc.index.len();
                    for l in b.all(":u_cnj") {
                        unsafe_lits.extend(sc.lits(&l.rest, l.no)?);
                    }
                }
                _ => {}
            }
        }
        Ok(Interpreter { size, locals, globals, initial, transitions, unsafe_vars, unsafe_lits, base_domain, functions })
    }

    pub fn initial_state(&self) -> State {
        self.initial.clone()
    }

    fn eval(&self, t: &T, c: &Ctx) -> IVal {
        match t {
            T::Arr(a, i) => c.state.arrays[*a][c.idx[*i]],
            T::Null => IVal::Null,
            T::Bool(b) => IVal::Bool(*b),
            T::Const(v) => IVal::Data(*v),
            T::Global(g) => c.state.globals[*g],
            T::Eevar(e) => IVal::Data(c.ee[*e]),
            T::Index(i) => IVal::Index(c.idx[*i]),
            T::App(f, arg) => {
                let (table, attr) = &self.functions[*f];
                let key = self.eval(arg, c);
                let fact = match key {
                    IVal::Data(v) => table.get(&v),
                    _ => None,
                };
                match attr {
                    None => IVal::Bool(fact.is_some()),
                    Some(i) => fact.map(|t| IVal::Data(t[*i])).unwrap_or(IVal::Null),
                }
            }
        }
    }

    fn holds(&self, l: &L, c: &Ctx) -> bool {
        match l {
            L::Eq(a, b) => self.eval(a, c) == self.eval(b, c),
            L::Not(inner) => !self.holds(inner, c),
        }
    }

    fn domain(&self, sort: &str, s: &State) -> Vec<Value> {
        let mut d = self.base_domain.get(sort).cloned().unwrap_or_default();
        for (a, (_, asort)) in self.locals.iter().enumerate() {
            if asort == sort {
                d.extend(s.arrays[a].iter().filter_map(|v| if let IVal::Data(x) = v { Some(*x) } else { None }));
            }
        }
        d.into_iter().collect()
    }

    /// Successor states of `s` under every transition statement.
    pub fn successors(&self, s: &State) -> Vec<State> {
        let mut out = BTreeSet::new();
        for t in &self.transitions {
            let nidx = t.nvars - 1;
            let doms: Vec<Vec<Value>> = t.eevars.iter().map(|sort| self.domain(sort, s)).collect();
            for idx in tuples(self.size, nidx) {
                let mut full = idx.clone();
                full.push(0);
                for ee in product(&doms) {
                    let c = Ctx { state: s, idx: &full, ee: &ee };
                    if !t.guard.iter().all(|l| self.holds(l, &c)) {
                        continue;
                    }
                    let uguard_ok = (0..self.size).all(|j| {
                        full[nidx] = j;
                        let c = Ctx { state: s, idx: &full, ee: &ee };
                        t.uguard.iter().all(|l| self.holds(l, &c))
                    });
                    if !uguard_ok {
                        continue;
                    }
                    let mut next = s.clone();
                    for j in 0..self.size {
                        full[nidx] = j;
                        let c = Ctx { state: s, idx: &full, ee: &ee };
                        let Some((_, vals)) = t.cases.iter().find(|(cond, _)| cond.as_ref().is_none_or(|l| self.holds(l, &c))) else {
                            continue;
                        };
                        for a in 0..self.locals.len() {
                            next.arrays[a][j] = self.eval(&vals[a], &c);
                        }
                        if j == 0 {
                            for g in 0..self.globals.len() {
                                next.globals[g] = self.eval(&vals[self.locals.len() + g], &c);
                            }
                        }
                    }
                    out.insert(next);
                }
            }
        }
        out.into_iter().collect()
    }

    pub fn is_unsafe(&self, s: &State) -> bool {
        tuples(self.size, self.unsafe_vars).into_iter().any(|idx| {
            let c = Ctx { state: s, idx: &idx, ee: &[] };
            self.unsafe_lits.iter().all(|l| self.holds(l, &c))
        })
    }

    /// Breadth-first search for an unsafe state over at most `max_states` states.
    pub fn run(&self, max_states: usize) -> InterpOutcome {
        let mut seen: HashSet<State> = HashSet::new();
        let mut queue = VecDeque::new();
        seen.insert(self.initial.clone());
        queue.push_back((self.initial.clone(), 0));
        while let Some((s, d)) = queue.pop_front() {
            if self.is_unsafe(&s) {
                return InterpOutcome::Unsafe { steps: d };
            }
            for n in self.successors(&s) {
                if seen.contains(&n) {
                    continue;
                }
                if seen.len() >= max_states {
                    return InterpOutcome::Incomplete { states: seen.len() };
                }
                seen.insert(n.clone());
                queue.push_back((n, d + 1));
            }
        }
        InterpOutcome::Safe { states: seen.len() }
    }
}

fn const_val(t: &T) -> IVal {
    match t {
        T::Null => IVal::Null,
        T::Bool(b) => IVal::Bool(*b),
        T::Const(v) => IVal::Data(*v),
        _ => IVal::Null,
    }
}

fn eevar_sorts(b: &Block) -> Vec<String> {
    b.all(":eevar").filter_map(|l| l.rest.split_whitespace().nth(1).map(str::to_string)).collect()
}

fn tuples(size: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out.into_iter().flat_map(|t| (0..size).map(move |i| [t.clone(), vec![i]].concat())).collect();
    }
    out
}

fn product(doms: &[Vec<Value>]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in doms {
        out = out.into_iter().flat_map(|t| d.iter().map(move |v| [t.clone(), vec![*v]].concat())).collect();
    }
    out
}
