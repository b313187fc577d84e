//! Untyped syntax tree and recursive-descent parser.

use crate::report::{Diagnostic, SourceSpan};

use super::lexer::{Tok, Token};

#[derive(Clone, Debug)]
pub struct Name {
    pub text: String,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub enum ValueLit {
    /// A bare or quoted named constant.
    Named(Name),
    /// `T#i`.
    Pool(Name, u32, SourceSpan),
}

impl ValueLit {
    pub fn span(&self) -> &SourceSpan {
        match self {
            ValueLit::Named(n) => &n.span,
            ValueLit::Pool(_, _, s) => s,
        }
    }
}

#[derive(Clone, Debug)]
pub enum TermLit {
    Var(Name),
    Fresh(Name),
    Const(ValueLit),
}

#[derive(Clone, Debug)]
pub struct Binder {
    pub name: Name,
    pub ty: Option<Name>,
}

#[derive(Clone, Debug)]
pub enum Expr {
    Or(Vec<Expr>),
    And(Vec<Expr>),
    Not(Box<Expr>, SourceSpan),
    Exists(Vec<Binder>, Box<Expr>),
    True,
    Atom { name: Name, args: Vec<TermLit> },
    PlaceAtom { name: Name, args: Option<Vec<TermLit>>, min: u32 },
    Cmp { lhs: TermLit, rhs: TermLit, equal: bool },
}

#[derive(Clone, Debug)]
pub struct AttrDecl {
    pub name: Name,
    pub ty: Name,
    pub key: bool,
    pub fk: Option<Name>,
}

#[derive(Clone, Debug)]
pub struct InscLit {
    pub mult: u32,
    pub terms: Vec<TermLit>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub enum TransItem {
    In(Name, Vec<InscLit>),
    Out(Name, Vec<InscLit>),
    Query(Expr, SourceSpan),
    Cond(Expr),
}

#[derive(Clone, Debug)]
pub struct TokenLit {
    pub mult: u32,
    pub values: Vec<ValueLit>,
    pub span: SourceSpan,
}

#[derive(Clone, Debug)]
pub enum Item {
    Include(Name),
    Type { name: Name, values: Option<Vec<Name>> },
    Relation { name: Name, attrs: Vec<AttrDecl> },
    Facts { relation: Name, tuples: Vec<TokenLit> },
    Place { name: Name, color: Vec<Name> },
    Transition { name: Name, items: Vec<TransItem> },
    Marking { entries: Vec<(Name, Vec<TokenLit>)> },
    Property { name: Name, body: Expr },
}

const KEYWORDS: &[&str] = &[
    "include", "type", "relation", "facts", "place", "transition", "in", "out", "query", "cond", "marking",
    "property", "key", "exists", "not", "and", "or", "true", "nu",
];

pub fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    pub fn new(toks: Vec<Token>) -> Parser {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.toks[self.pos].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expected(&self, what: &[&str]) -> Diagnostic {
        Diagnostic::error(
            "syntax",
            format!("expected {}, found {}", what.join(" or "), self.peek().describe()),
        )
        .at(&self.span().into())
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<SourceSpan> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            Err(self.expected(&[&format!("`{p}`")]))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let span = self.bump().span;
                Ok(Name { text: s, span })
            }
            _ => Err(self.expected(&[what])),
        }
    }

    /// An identifier or a quoted string.
    fn name(&mut self, what: &str) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Str(s) => {
                let span = self.bump().span;
                Ok(Name { text: s, span })
            }
            _ => self.ident(what),
        }
    }

    fn number(&mut self) -> PResult<u32> {
        match self.peek() {
            Tok::Number(n) => {
                let n = *n;
                self.bump();
                Ok(n)
            }
            _ => Err(self.expected(&["a number"])),
        }
    }

    pub fn file(&mut self) -> PResult<Vec<Item>> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            items.push(self.item()?);
        }
        Ok(items)
    }

    fn item(&mut self) -> PResult<Item> {
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => String::new(),
        };
        match kw.as_str() {
            "include" => {
                self.bump();
                let path = match self.peek().clone() {
                    Tok::Str(s) => Name { text: s, span: self.bump().span },
                    _ => return Err(self.expected(&["a quoted path"])),
                };
                self.expect_punct(";")?;
                Ok(Item::Include(path))
            }
            "type" => {
                self.bump();
                let name = self.ident("a type name")?;
                let values = if self.eat_punct("=") {
                    self.expect_punct("{")?;
                    let mut vs = Vec::new();
                    if !self.is_punct("}") {
                        loop {
                            vs.push(self.name("a constant")?);
                            if !self.eat_punct(",") {
                                break;
                            }
                        }
                    }
                    self.expect_punct("}")?;
                    Some(vs)
                } else {
                    None
                };
                self.expect_punct(";")?;
                Ok(Item::Type { name, values })
            }
            "relation" => {
                self.bump();
                let name = self.ident("a relation name")?;
                self.expect_punct("(")?;
                let mut attrs = Vec::new();
                loop {
                    let an = self.ident("an attribute name")?;
                    self.expect_punct(":")?;
                    let ty = self.ident("a type name")?;
                    let key = self.eat_kw("key");
                    let fk = if self.eat_punct("->") { Some(self.ident("a relation name")?) } else { None };
                    attrs.push(AttrDecl { name: an, ty, key, fk });
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(")")?;
                self.expect_punct(";")?;
                Ok(Item::Relation { name, attrs })
            }
            "facts" => {
                self.bump();
                let relation = self.ident("a relation name")?;
                self.expect_punct("{")?;
                let mut tuples = Vec::new();
                while !self.is_punct("}") {
                    tuples.push(self.token_lit(false)?);
                    if !self.eat_punct(";") {
                        break;
                    }
                }
                self.expect_punct("}")?;
                Ok(Item::Facts { relation, tuples })
            }
            "place" => {
                self.bump();
                let name = self.name("a place name")?;
                self.expect_punct(":")?;
                let mut color = Vec::new();
                if self.eat_punct("(") {
                    loop {
                        color.push(self.ident("a type name")?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                    self.expect_punct(")")?;
                } else {
                    color.push(self.ident("a type name")?);
                }
                self.expect_punct(";")?;
                Ok(Item::Place { name, color })
            }
            "transition" => {
                self.bump();
                let name = self.name("a transition name")?;
                self.expect_punct("{")?;
                let mut items = Vec::new();
                while !self.is_punct("}") {
                    items.push(self.trans_item()?);
                }
                self.expect_punct("}")?;
                Ok(Item::Transition { name, items })
            }
            "marking" => {
                self.bump();
                self.expect_punct("{")?;
                let mut entries = Vec::new();
                while !self.is_punct("}") {
                    let place = self.name("a place name")?;
                    self.expect_punct(":")?;
                    let mut toks = Vec::new();
                    if !self.is_punct(";") {
                        loop {
                            toks.push(self.token_lit(true)?);
                            if !(self.eat_punct(",") || self.eat_punct("+")) {
                                break;
                            }
                        }
                    }
                    self.expect_punct(";")?;
                    entries.push((place, toks));
                }
                self.expect_punct("}")?;
                Ok(Item::Marking { entries })
            }
            "property" => {
                self.bump();
                let name = self.name("a property name")?;
                self.expect_punct(":")?;
                let body = self.expr()?;
                self.expect_punct(";")?;
                Ok(Item::Property { name, body })
            }
            _ => Err(self.expected(&["`include`", "`type`", "`relation`", "`facts`", "`place`", "`transition`", "`marking`", "`property`"])),
        }
    }

    fn trans_item(&mut self) -> PResult<TransItem> {
        for (kw, input) in [("in", true), ("out", false)] {
            if self.eat_kw(kw) {
                let place = self.name("a place name")?;
                self.expect_punct(":")?;
                let insc = self.inscription()?;
                self.expect_punct(";")?;
                return Ok(if input { TransItem::In(place, insc) } else { TransItem::Out(place, insc) });
            }
        }
        if self.is_kw("query") {
            let span = self.bump().span;
            let e = self.expr()?;
            self.expect_punct(";")?;
            return Ok(TransItem::Query(e, span));
        }
        if self.eat_kw("cond") {
            let e = self.expr()?;
            self.expect_punct(";")?;
            return Ok(TransItem::Cond(e));
        }
        Err(self.expected(&["`in`", "`out`", "`query`", "`cond`", "`}`"]))
    }

    fn inscription(&mut self) -> PResult<Vec<InscLit>> {
        let mut out = Vec::new();
        loop {
            let span = self.span();
            let mult = if matches!(self.peek(), Tok::Number(_)) && matches!(self.peek_at(1), Tok::Punct("*")) {
                let n = self.number()?;
                self.bump();
                n
            } else {
                1
            };
            let terms = if self.eat_punct("(") {
                let mut ts = Vec::new();
                loop {
                    ts.push(self.term(true)?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(")")?;
                ts
            } else {
                vec![self.term(true)?]
            };
            out.push(InscLit { mult, terms, span });
            if !self.eat_punct("+") {
                return Ok(out);
            }
        }
    }

    /// A value in facts and markings: bare identifiers are constants.
    fn value(&mut self) -> PResult<ValueLit> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                let span = self.bump().span;
                if self.is_punct("#") {
                    self.bump();
                    let n = self.number()?;
                    let full = SourceSpan { col_end: self.toks[self.pos - 1].span.col_end, ..span.clone() };
                    return Ok(ValueLit::Pool(Name { text: s, span }, n, full));
                }
                Ok(ValueLit::Named(Name { text: s, span }))
            }
            Tok::Str(s) => {
                let span = self.bump().span;
                Ok(ValueLit::Named(Name { text: s, span }))
            }
            _ => Err(self.expected(&["a value"])),
        }
    }

    fn token_lit(&mut self, allow_mult: bool) -> PResult<TokenLit> {
        let span = self.span();
        let mult = if allow_mult && matches!(self.peek(), Tok::Number(_)) && matches!(self.peek_at(1), Tok::Punct("*")) {
            let n = self.number()?;
            self.bump();
            n
        } else {
            1
        };
        let values = if self.eat_punct("(") {
            let mut vs = Vec::new();
            loop {
                vs.push(self.value()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(")")?;
            vs
        } else {
            vec![self.value()?]
        };
        Ok(TokenLit { mult, values, span })
    }

    /// A term in inscriptions, queries and properties: bare identifiers are
    /// variables, quoted strings and `T#i` are constants.
    fn term(&mut self, allow_fresh: bool) -> PResult<TermLit> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "nu" && allow_fresh => {
                self.bump();
                Ok(TermLit::Fresh(self.ident("a variable name")?))
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                if matches!(self.peek_at(1), Tok::Punct("#")) {
                    return Ok(TermLit::Const(self.value()?));
                }
                let span = self.bump().span;
                Ok(TermLit::Var(Name { text: s, span }))
            }
            Tok::Str(_) => Ok(TermLit::Const(self.value()?)),
            _ => Err(self.expected(&["a variable", "a quoted constant"])),
        }
    }

    pub fn expr(&mut self) -> PResult<Expr> {
        let mut parts = vec![self.conj()?];
        while self.eat_kw("or") {
            parts.push(self.conj()?);
        }
        Ok(if parts.len() == 1 { parts.pop().expect("one part") } else { Expr::Or(parts) })
    }

    fn conj(&mut self) -> PResult<Expr> {
        let mut parts = vec![self.unary()?];
        while self.eat_kw("and") {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().expect("one part") } else { Expr::And(parts) })
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_kw("not") {
            let span = self.bump().span;
            return Ok(Expr::Not(Box::new(self.unary()?), span));
        }
        if self.eat_kw("exists") {
            let mut binders = Vec::new();
            loop {
                let name = self.ident("a variable name")?;
                let ty = if self.eat_punct(":") { Some(self.ident("a type name")?) } else { None };
                binders.push(Binder { name, ty });
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct(".")?;
            return Ok(Expr::Exists(binders, Box::new(self.conj()?)));
        }
        if self.eat_kw("true") {
            return Ok(Expr::True);
        }
        if self.eat_punct("(") {
            let e = self.expr()?;
            self.expect_punct(")")?;
            return Ok(e);
        }
        // atoms: NAME '(' ... ')' ['>=' n] | NAME '>=' n
        let is_name = matches!(self.peek(), Tok::Ident(s) if !is_keyword(s)) || matches!(self.peek(), Tok::Str(_));
        if is_name && matches!(self.peek_at(1), Tok::Punct("(")) {
            let name = self.name("a relation or place name")?;
            self.expect_punct("(")?;
            let mut args = Vec::new();
            if !self.is_punct(")") {
                loop {
                    args.push(self.term(false)?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
            self.expect_punct(")")?;
            if self.eat_punct(">=") {
                let min = self.number()?;
                return Ok(Expr::PlaceAtom { name, args: Some(args), min });
            }
            return Ok(Expr::Atom { name, args });
        }
        if is_name && matches!(self.peek_at(1), Tok::Punct(">=")) {
            let name = self.name("a place name")?;
            self.bump();
            let min = self.number()?;
            return Ok(Expr::PlaceAtom { name, args: None, min });
        }
        let lhs = self.term(false)?;
        let equal = if self.eat_punct("=") {
            true
        } else if self.eat_punct("!=") {
            false
        } else {
            return Err(self.expected(&["`=`", "`!=`"]));
        };
        let rhs = self.term(false)?;
        Ok(Expr::Cmp { lhs, rhs, equal })
    }
}
