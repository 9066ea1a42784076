//! The `.rks` specification format.
//!
//! A file is a sequence of keyword-led declarations: `signature`,
//! `interpretation`, `state`, `frame`, `conditions`, `map`, `quant`,
//! `budget` and `check`. [`parse`] produces a fully resolved [`Workspace`]
//! or a list of [`Diagnostic`]s; [`print`] writes the canonical form, and
//! `parse(print(w)) == w` for every workspace produced by [`parse`].

use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::entail::{EntailBudget, Guard, Pattern, SchemaSentence, SentencePattern};
use crate::eqcore::{mk_term, sum_signature, EqError, EqSentence, EqSignature, GroundTerm, Sym, SymbolKind, Tag};
use crate::logics::{to_ctl, to_ctlstar, to_fodl, to_ltl, Logic, Program, QuantDomain, RawTerm, Surface};
use crate::relalg::{functional, initial, total, FiniteFrame, FrameMap, RelFormula, RelTerm};
use crate::theoria::{mk_interpretation, mk_state, Definition, InterpretationTheory, StateTheory};

/// Byte range plus the 1-based line and column of its start.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Span,
    pub message: String,
    pub suggestion: Option<String>,
}

impl Diagnostic {
    fn error(span: Span, message: impl Into<String>) -> Self {
        Diagnostic { severity: Severity::Error, span, message: message.into(), suggestion: None }
    }

    fn suggest(mut self, s: impl Into<String>) -> Self {
        self.suggestion = Some(s.into());
        self
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.span.line, self.span.col, self.message)?;
        if let Some(s) = &self.suggestion {
            write!(f, " (hint: {s})")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ItemKind {
    Signature,
    Interpretation,
    State,
    Frame,
    Conditions,
    Map,
    Quant,
    Budget,
    Check,
}

/// One `schema` line: a family of sentences indexed by the same
/// metavariables and guards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaFamily {
    pub metavars: Vec<String>,
    pub guards: Vec<Guard>,
    pub bodies: Vec<SentencePattern>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpDecl {
    pub signature: String,
    pub axioms: Vec<EqSentence>,
    pub families: Vec<SchemaFamily>,
    pub theory: InterpretationTheory,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateDecl {
    /// Flexible and rigid signature names; `None` for an empty state.
    pub over: Option<(String, String)>,
    pub theory: Arc<StateTheory>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Condition {
    Total(String),
    Functional(String),
    Initial(String),
    Formula(String, RelFormula),
}

impl Condition {
    /// Report name and expanded formula.
    pub fn expand(&self) -> (String, RelFormula) {
        match self {
            Condition::Total(r) => (format!("total {r}"), total(r)),
            Condition::Functional(r) => (format!("functional {r}"), functional(r)),
            Condition::Initial(r) => (format!("initial {r}"), initial(r)),
            Condition::Formula(n, f) => (n.clone(), f.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapDecl {
    pub src: String,
    pub dst: String,
    pub map: FrameMap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantDecl {
    pub signature: String,
    pub domain: QuantDomain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct BudgetDecl {
    pub depth: Option<usize>,
    pub max_inst: Option<usize>,
    pub bound: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckDecl {
    pub logic: Logic,
    pub frame: String,
    pub at: String,
    pub interp: Option<String>,
    pub quant: Option<String>,
    pub bound: Option<usize>,
    pub formula: Surface,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Workspace {
    /// Declaration order, for printing.
    pub order: Vec<(ItemKind, String)>,
    pub signatures: IndexMap<String, EqSignature>,
    pub interpretations: IndexMap<String, InterpDecl>,
    pub states: IndexMap<String, StateDecl>,
    pub frames: IndexMap<String, FiniteFrame>,
    pub conditions: IndexMap<String, Vec<Condition>>,
    pub maps: IndexMap<String, MapDecl>,
    pub quants: IndexMap<String, QuantDecl>,
    pub checks: IndexMap<String, CheckDecl>,
    pub budget: Option<BudgetDecl>,
}

impl Workspace {
    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Budget from the `budget` declaration, falling back to the defaults.
    pub fn entail_budget(&self) -> EntailBudget {
        let d = EntailBudget::default();
        let b = self.budget.unwrap_or_default();
        EntailBudget::new(b.depth.unwrap_or(d.max_term_depth), b.max_inst.unwrap_or(d.max_instantiations))
    }

    /// Concatenation of two workspaces; names must not clash.
    pub fn merge(mut self, other: Workspace) -> Result<Workspace, Diagnostic> {
        for (kind, name) in &other.order {
            if self.order.iter().any(|(k, n)| k == kind && n == name) {
                return Err(Diagnostic::error(Span::default(), format!("duplicate declaration `{name}` across files")));
            }
        }
        self.order.extend(other.order);
        self.signatures.extend(other.signatures);
        self.interpretations.extend(other.interpretations);
        self.states.extend(other.states);
        self.frames.extend(other.frames);
        self.conditions.extend(other.conditions);
        self.maps.extend(other.maps);
        self.quants.extend(other.quants);
        self.checks.extend(other.checks);
        if other.budget.is_some() {
            self.budget = other.budget;
        }
        Ok(self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Op(char),
    P(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Op(c) => write!(f, "`{c}`"),
            Tok::P(p) => write!(f, "`{p}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: Span,
}

// longest first
const PUNCT: [&str; 20] = ["<=>", "=>", ":=", "!=", "->", "(", ")", "{", "}", "[", "]", ",", ";", ":", ".", "=", "?", "!", "&", "|"];
const OPS: &str = "+-*/·%<>^~";
const MAX_DEPTH: usize = 200;

const TOP_KEYWORDS: [&str; 9] =
    ["signature", "interpretation", "state", "frame", "conditions", "map", "quant", "budget", "check"];
const FORMULA_KEYWORDS: [&str; 23] = [
    "true", "false", "X", "F", "G", "U", "R", "W", "M", "E", "A", "EX", "EF", "EG", "AX", "AF", "AG", "exists", "forall",
    "if", "then", "else", "while",
];

struct Lines {
    starts: Vec<usize>,
}

impl Lines {
    fn new(src: &str) -> Self {
        let mut starts = vec![0];
        starts.extend(src.char_indices().filter(|(_, c)| *c == '\n').map(|(i, _)| i + 1));
        Lines { starts }
    }

    fn span(&self, src: &str, start: usize, end: usize) -> Span {
        let line = self.starts.partition_point(|&s| s <= start);
        let ls = self.starts[line - 1];
        let col = src[ls..start].chars().count() + 1;
        Span { start, end, line, col }
    }
}

fn lex(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let lines = Lines::new(src);
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let mut i = 0;
    while i < src.len() {
        let rest = &src[i..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }
        if rest.starts_with("//") {
            i += rest.find('\n').unwrap_or(rest.len());
            continue;
        }
        if c.is_alphanumeric() || c == '_' {
            let len = rest
                .char_indices()
                .find(|&(_, d)| !(d.is_alphanumeric() || d == '_' || d == '\''))
                .map_or(rest.len(), |(k, _)| k);
            toks.push(Token { tok: Tok::Ident(rest[..len].to_string()), span: lines.span(src, i, i + len) });
            i += len;
            continue;
        }
        if let Some(p) = PUNCT.iter().find(|p| rest.starts_with(**p)) {
            toks.push(Token { tok: Tok::P(p), span: lines.span(src, i, i + p.len()) });
            i += p.len();
            continue;
        }
        let span = lines.span(src, i, i + c.len_utf8());
        if OPS.contains(c) {
            toks.push(Token { tok: Tok::Op(c), span });
        } else {
            diags.push(Diagnostic::error(span, format!("unexpected character {c:?}")));
        }
        i += c.len_utf8();
    }
    let end = lines.span(src, src.len(), src.len());
    toks.push(Token { tok: Tok::Eof, span: end });
    (toks, diags)
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    depth: usize,
}

fn term_op_level(c: char) -> Option<u8> {
    match c {
        '<' | '>' => Some(0),
        '+' | '-' => Some(1),
        '*' | '/' | '·' | '%' => Some(2),
        _ => None,
    }
}

fn tag_of(kw: &str) -> Option<Tag> {
    match kw {
        "in_l" => Some(Tag::Left),
        "in_r" => Some(Tag::Right),
        _ => None,
    }
}

impl Parser {
    fn new(toks: Vec<Token>) -> Self {
        Parser { toks, pos: 0, depth: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn span_from(&self, start: Span) -> Span {
        Span { end: self.prev_span().end.max(start.start), ..start }
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at_p(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::P(q) if *q == p)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn at_op(&self, c: char) -> bool {
        *self.peek() == Tok::Op(c)
    }

    fn eat_p(&mut self, p: &str) -> bool {
        let hit = self.at_p(p);
        if hit {
            self.bump();
        }
        hit
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.at_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        Err(Diagnostic::error(self.span(), msg))
    }

    fn unexpected<T>(&self, wanted: &str) -> PResult<T> {
        self.err(format!("expected {wanted}, found {}", self.peek()))
    }

    fn expect_p(&mut self, p: &str) -> PResult<()> {
        if self.eat_p(p) {
            Ok(())
        } else {
            self.unexpected(&format!("`{p}`"))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.unexpected("a name"),
        }
    }

    /// A symbol name: identifier or single operator character.
    fn symbol_name(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            Tok::Op(c) => {
                self.bump();
                Ok(c.to_string())
            }
            _ => self.unexpected("a symbol"),
        }
    }

    fn number(&mut self) -> PResult<usize> {
        let sp = self.span();
        let s = self.ident()?;
        s.parse().map_err(|_| Diagnostic::error(sp, format!("expected a number, found `{s}`")))
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.err("expression nested too deeply");
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    /// Runs `f`; on failure rewinds and reports the error.
    fn attempt<T>(&mut self, f: impl FnOnce(&mut Self) -> PResult<T>) -> PResult<T> {
        let (pos, depth) = (self.pos, self.depth);
        let r = f(self);
        if r.is_err() {
            self.pos = pos;
            self.depth = depth;
        }
        r
    }

    /// Statement terminator; optional right before a closing brace.
    fn end_stmt(&mut self) -> PResult<()> {
        if self.eat_p(";") || self.at_p("}") {
            Ok(())
        } else {
            self.unexpected("`;`")
        }
    }

    // ---- terms ----

    fn term(&mut self) -> PResult<RawTerm> {
        self.enter()?;
        let r = self.term_level(0);
        self.leave();
        r
    }

    /// Infix operator at the cursor: `(tag, op, tokens)`.
    fn peek_infix(&self) -> Option<(Option<Tag>, char, usize)> {
        match self.peek() {
            Tok::Op(c) if term_op_level(*c).is_some() => Some((None, *c, 1)),
            Tok::Ident(kw) => {
                let tag = tag_of(kw)?;
                match (self.peek_at(1), self.peek_at(2), self.peek_at(3)) {
                    (Tok::P("("), Tok::Op(c), Tok::P(")")) if term_op_level(*c).is_some() => {
                        // `in_l(+)(...)` is a prefix application, not an infix use
                        if *self.peek_at(4) == Tok::P("(") {
                            None
                        } else {
                            Some((Some(tag), *c, 4))
                        }
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    }

    fn term_level(&mut self, level: u8) -> PResult<RawTerm> {
        if level > 2 {
            return self.term_primary();
        }
        let mut lhs = self.term_level(level + 1)?;
        while let Some((tag, op, n)) = self.peek_infix() {
            if term_op_level(op) != Some(level) {
                break;
            }
            for _ in 0..n {
                self.bump();
            }
            let rhs = self.term_level(level + 1)?;
            lhs = RawTerm { tag, head: op.to_string(), args: vec![lhs, rhs] };
            if level == 0 {
                break;
            }
        }
        Ok(lhs)
    }

    fn term_args(&mut self) -> PResult<Vec<RawTerm>> {
        let mut args = Vec::new();
        if self.eat_p("(") {
            loop {
                args.push(self.term()?);
                if !self.eat_p(",") {
                    break;
                }
            }
            self.expect_p(")")?;
        }
        Ok(args)
    }

    fn term_primary(&mut self) -> PResult<RawTerm> {
        self.enter()?;
        let r = self.term_primary_inner();
        self.leave();
        r
    }

    fn term_primary_inner(&mut self) -> PResult<RawTerm> {
        match self.peek().clone() {
            Tok::P("(") => {
                self.bump();
                let t = self.term()?;
                self.expect_p(")")?;
                Ok(t)
            }
            Tok::Ident(kw) if tag_of(&kw).is_some() && *self.peek_at(1) == Tok::P("(") => {
                self.bump();
                self.bump();
                let head = self.symbol_name()?;
                self.expect_p(")")?;
                let args = self.term_args()?;
                Ok(RawTerm { tag: tag_of(&kw), head, args })
            }
            Tok::Ident(s) if FORMULA_KEYWORDS.contains(&s.as_str()) => {
                self.err(format!("`{s}` is a reserved word and cannot name a symbol"))
            }
            Tok::Ident(s) => {
                self.bump();
                Ok(RawTerm { tag: None, head: s, args: self.term_args()? })
            }
            Tok::Op(c) if *self.peek_at(1) == Tok::P("(") => {
                self.bump();
                Ok(RawTerm { tag: None, head: c.to_string(), args: self.term_args()? })
            }
            _ => self.unexpected("a term"),
        }
    }

    /// `t = t'`, `t != t'` or a predicate application.
    fn term_atom(&mut self) -> PResult<Surface> {
        let l = self.term()?;
        if self.eat_p("=") {
            Ok(Surface::Eq(l, self.term()?))
        } else if self.eat_p("!=") {
            Ok(Surface::not(Surface::Eq(l, self.term()?)))
        } else {
            Ok(Surface::Pred(l))
        }
    }

    // ---- modal formulae ----

    fn formula(&mut self) -> PResult<Surface> {
        self.enter()?;
        let r = self.formula_inner();
        self.leave();
        r
    }

    fn formula_inner(&mut self) -> PResult<Surface> {
        let lhs = self.implication()?;
        if self.eat_p("<=>") {
            let rhs = self.implication()?;
            return Ok(Surface::Iff(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> PResult<Surface> {
        let lhs = self.disjunction()?;
        if self.eat_p("=>") {
            self.enter()?;
            let rhs = self.implication();
            self.leave();
            return Ok(Surface::Implies(Box::new(lhs), Box::new(rhs?)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> PResult<Surface> {
        let mut lhs = self.conjunction()?;
        while self.eat_p("|") {
            lhs = Surface::or(lhs, self.conjunction()?);
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<Surface> {
        let mut lhs = self.binary_temporal()?;
        while self.eat_p("&") {
            lhs = Surface::and(lhs, self.binary_temporal()?);
        }
        Ok(lhs)
    }

    fn binary_temporal(&mut self) -> PResult<Surface> {
        let mut lhs = self.unary()?;
        loop {
            let make: fn(Box<Surface>, Box<Surface>) -> Surface = match self.peek() {
                Tok::Ident(s) if s == "U" => Surface::Until,
                Tok::Ident(s) if s == "R" => Surface::Release,
                Tok::Ident(s) if s == "W" => Surface::WeakUntil,
                Tok::Ident(s) if s == "M" => Surface::StrongRelease,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = make(Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> PResult<Surface> {
        self.enter()?;
        let r = self.unary_inner();
        self.leave();
        r
    }

    fn unary_inner(&mut self) -> PResult<Surface> {
        let wrap1 = |f: fn(Box<Surface>) -> Surface, a: Surface| f(Box::new(a));
        // quantifier bodies extend as far right as possible
        for (kw, exists) in [("exists", true), ("forall", false)] {
            if self.eat_kw(kw) {
                let x = self.ident()?;
                self.expect_p(".")?;
                let body = Box::new(self.formula()?);
                return Ok(if exists { Surface::Exists(x, body) } else { Surface::Forall(x, body) });
            }
        }
        if self.eat_p("!") {
            return Ok(Surface::not(self.unary()?));
        }
        if self.at_op('<') {
            self.bump();
            let p = self.program()?;
            if !self.at_op('>') {
                return self.unexpected("`>` closing the program");
            }
            self.bump();
            return Ok(Surface::Diamond(p, Box::new(self.unary()?)));
        }
        if self.eat_p("[") {
            let p = self.program()?;
            self.expect_p("]")?;
            return Ok(Surface::Box(p, Box::new(self.unary()?)));
        }
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.atom(),
        };
        let simple: Option<fn(Box<Surface>) -> Surface> = match kw.as_str() {
            "X" => Some(Surface::Next),
            "F" => Some(Surface::Finally),
            "G" => Some(Surface::Globally),
            _ => None,
        };
        if let Some(f) = simple {
            self.bump();
            return Ok(wrap1(f, self.unary()?));
        }
        let quantified: Option<(fn(Box<Surface>) -> Surface, Option<fn(Box<Surface>) -> Surface>)> = match kw.as_str() {
            "E" => Some((Surface::E, None)),
            "A" => Some((Surface::A, None)),
            "EX" => Some((Surface::E, Some(Surface::Next))),
            "EF" => Some((Surface::E, Some(Surface::Finally))),
            "EG" => Some((Surface::E, Some(Surface::Globally))),
            "AX" => Some((Surface::A, Some(Surface::Next))),
            "AF" => Some((Surface::A, Some(Surface::Finally))),
            "AG" => Some((Surface::A, Some(Surface::Globally))),
            _ => None,
        };
        if let Some((q, inner)) = quantified {
            self.bump();
            if let Some(inner) = inner {
                return Ok(wrap1(q, wrap1(inner, self.unary()?)));
            }
            if self.eat_p("[") {
                let body = self.formula()?;
                self.expect_p("]")?;
                return Ok(wrap1(q, body));
            }
            return Ok(wrap1(q, self.unary()?));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Surface> {
        if self.eat_kw("true") {
            return Ok(Surface::True);
        }
        if self.eat_kw("false") {
            return Ok(Surface::False);
        }
        if self.at_p("(") {
            let term_try = self.attempt(|p| {
                let a = p.term_atom()?;
                // a term atom cannot be followed by a closing parenthesis here
                if p.at_p(")") {
                    return p.err("unbalanced parenthesis");
                }
                Ok(a)
            });
            return match term_try {
                Ok(a) => Ok(a),
                Err(e1) => self
                    .attempt(|p| {
                        p.bump();
                        let f = p.formula()?;
                        p.expect_p(")")?;
                        Ok(f)
                    })
                    .map_err(|e2| if e2.span.start >= e1.span.start { e2 } else { e1 }),
            };
        }
        self.term_atom()
    }

    fn program(&mut self) -> PResult<Program> {
        self.enter()?;
        let r = self.program_choice();
        self.leave();
        r
    }

    fn program_choice(&mut self) -> PResult<Program> {
        let mut lhs = self.program_seq()?;
        while self.at_op('+') {
            self.bump();
            lhs = Program::Choice(Box::new(lhs), Box::new(self.program_seq()?));
        }
        Ok(lhs)
    }

    fn program_seq(&mut self) -> PResult<Program> {
        let mut lhs = self.program_star()?;
        while self.eat_p(";") {
            lhs = Program::Seq(Box::new(lhs), Box::new(self.program_star()?));
        }
        Ok(lhs)
    }

    fn program_star(&mut self) -> PResult<Program> {
        let mut p = self.program_primary()?;
        while self.at_op('*') {
            self.bump();
            p = Program::Star(Box::new(p));
        }
        Ok(p)
    }

    fn program_primary(&mut self) -> PResult<Program> {
        self.enter()?;
        let r = self.program_primary_inner();
        self.leave();
        r
    }

    fn program_primary_inner(&mut self) -> PResult<Program> {
        if self.eat_kw("if") {
            let c = self.formula()?;
            self.expect_kw("then")?;
            let a = self.program_star()?;
            self.expect_kw("else")?;
            let b = self.program_star()?;
            return Ok(Program::If(Box::new(c), Box::new(a), Box::new(b)));
        }
        if self.eat_kw("while") {
            let c = self.formula()?;
            self.expect_kw("do")?;
            let a = self.program_star()?;
            return Ok(Program::While(Box::new(c), Box::new(a)));
        }
        if self.at_p("(") {
            let test = self.attempt(|p| {
                p.bump();
                let f = p.formula()?;
                p.expect_p(")")?;
                p.expect_p("?")?;
                Ok(f)
            });
            return match test {
                Ok(f) => Ok(Program::Test(Box::new(f))),
                Err(e1) => self
                    .attempt(|p| {
                        p.bump();
                        let q = p.program()?;
                        p.expect_p(")")?;
                        Ok(q)
                    })
                    .map_err(|e2| if e2.span.start >= e1.span.start { e2 } else { e1 }),
            };
        }
        match self.peek().clone() {
            Tok::Ident(s) if !FORMULA_KEYWORDS.contains(&s.as_str()) && s != "do" => {
                self.bump();
                Ok(Program::Atom(s))
            }
            _ => self.unexpected("a program"),
        }
    }

    // ---- relational formulae ----

    fn rel_formula(&mut self) -> PResult<RelFormula> {
        self.enter()?;
        let r = self.rel_formula_inner();
        self.leave();
        r
    }

    fn rel_formula_inner(&mut self) -> PResult<RelFormula> {
        for (kw, exists) in [("exists", true), ("forall", false)] {
            if self.eat_kw(kw) {
                let mut vs = vec![self.ident()?];
                while self.eat_p(",") {
                    vs.push(self.ident()?);
                }
                self.expect_p(".")?;
                let body = Box::new(self.rel_formula()?);
                return Ok(if exists { RelFormula::Exists(vs, body) } else { RelFormula::Forall(vs, body) });
            }
        }
        let lhs = self.rel_implication()?;
        if self.eat_p("<=>") {
            return Ok(RelFormula::iff(lhs, self.rel_implication()?));
        }
        Ok(lhs)
    }

    fn rel_implication(&mut self) -> PResult<RelFormula> {
        let lhs = self.rel_nary("|")?;
        if self.eat_p("=>") {
            self.enter()?;
            let rhs = self.rel_implication();
            self.leave();
            return Ok(RelFormula::implies(lhs, rhs?));
        }
        Ok(lhs)
    }

    fn rel_nary(&mut self, op: &str) -> PResult<RelFormula> {
        let sub = |p: &mut Self| if op == "|" { p.rel_nary("&") } else { p.rel_unary() };
        let first = sub(self)?;
        if !self.at_p(op) {
            return Ok(first);
        }
        let mut xs = vec![first];
        while self.eat_p(op) {
            xs.push(sub(self)?);
        }
        Ok(if op == "|" { RelFormula::Or(xs) } else { RelFormula::And(xs) })
    }

    fn rel_unary(&mut self) -> PResult<RelFormula> {
        self.enter()?;
        let r = self.rel_unary_inner();
        self.leave();
        r
    }

    fn rel_unary_inner(&mut self) -> PResult<RelFormula> {
        if self.eat_p("!") {
            return Ok(RelFormula::not(self.rel_unary()?));
        }
        if self.eat_kw("true") {
            return Ok(RelFormula::And(vec![]));
        }
        if self.eat_kw("false") {
            return Ok(RelFormula::Or(vec![]));
        }
        if self.at_kw("forall") || self.at_kw("exists") {
            return self.rel_formula();
        }
        if self.at_p("(") {
            let eq = self.attempt(|p| {
                let a = p.rel_term()?;
                p.expect_p("=")?;
                Ok(RelFormula::Eq(a, p.rel_term()?))
            });
            return match eq {
                Ok(f) => Ok(f),
                Err(e1) => self
                    .attempt(|p| {
                        p.bump();
                        let f = p.rel_formula()?;
                        p.expect_p(")")?;
                        Ok(f)
                    })
                    .map_err(|e2| if e2.span.start >= e1.span.start { e2 } else { e1 }),
            };
        }
        let first = self.rel_term()?;
        if self.eat_p("=") {
            return Ok(RelFormula::Eq(first, self.rel_term()?));
        }
        match first {
            RelTerm::Sym(x) => {
                let term = self.rel_term()?;
                let y = self.ident()?;
                Ok(RelFormula::Rel { x, term, y })
            }
            _ => self.unexpected("`=`"),
        }
    }

    fn rel_term(&mut self) -> PResult<RelTerm> {
        self.enter()?;
        let r = self.rel_term_level(0);
        self.leave();
        r
    }

    fn rel_term_level(&mut self, level: u8) -> PResult<RelTerm> {
        if level > 2 {
            return self.rel_term_unary();
        }
        let mut lhs = self.rel_term_level(level + 1)?;
        loop {
            let hit = match level {
                0 => self.at_op('+'),
                1 => self.at_p("."),
                _ => self.at_p(";"),
            };
            if !hit {
                return Ok(lhs);
            }
            self.bump();
            let rhs = self.rel_term_level(level + 1)?;
            lhs = match level {
                0 => RelTerm::union(lhs, rhs),
                1 => RelTerm::inter(lhs, rhs),
                _ => RelTerm::comp(lhs, rhs),
            };
        }
    }

    fn rel_term_unary(&mut self) -> PResult<RelTerm> {
        self.enter()?;
        let r = if self.at_op('~') {
            self.bump();
            self.rel_term_unary().map(RelTerm::compl)
        } else {
            self.rel_term_postfix()
        };
        self.leave();
        r
    }

    fn rel_term_postfix(&mut self) -> PResult<RelTerm> {
        let mut t = match self.peek().clone() {
            Tok::P("(") => {
                self.bump();
                let t = self.rel_term()?;
                self.expect_p(")")?;
                t
            }
            Tok::Ident(s) if s == "0" => {
                self.bump();
                RelTerm::Zero
            }
            Tok::Ident(s) if s == "1" => {
                self.bump();
                RelTerm::One
            }
            Tok::Ident(s) if s == "1'" => {
                self.bump();
                RelTerm::Ident
            }
            Tok::Ident(s) => {
                self.bump();
                RelTerm::Sym(s)
            }
            _ => return self.unexpected("a relation term"),
        };
        loop {
            if self.at_op('^') {
                self.bump();
                t = RelTerm::conv(t);
            } else if self.at_op('*') {
                self.bump();
                t = RelTerm::closure(t);
            } else {
                return Ok(t);
            }
        }
    }
}

// ---- resolution ----

fn eq_error(span: Span, e: &EqError) -> Diagnostic {
    match e {
        EqError::UnknownSymbol(s) => Diagnostic::error(span, format!("unresolved symbol '{}'", s.name())),
        other => Diagnostic::error(span, other.to_string()),
    }
}

/// Resolves a raw term over a plain signature.
pub fn resolve_plain(sig: &EqSignature, t: &RawTerm) -> Result<GroundTerm, EqError> {
    if t.tag.is_some() {
        return Err(EqError::SignatureMismatch(format!("injection `{t}` outside a state formula")));
    }
    let args = t.args.iter().map(|a| resolve_plain(sig, a)).collect::<Result<Vec<_>, _>>()?;
    mk_term(sig, &Sym::new(&t.head), args)
}

/// Resolves an atom (`t = t'` or a predicate) over a plain signature.
pub fn resolve_plain_sentence(sig: &EqSignature, atom: &Surface) -> Result<EqSentence, EqError> {
    let s = match atom {
        Surface::Eq(l, r) => EqSentence::eq(resolve_plain(sig, l)?, resolve_plain(sig, r)?),
        Surface::Pred(t) => {
            if t.tag.is_some() {
                return Err(EqError::SignatureMismatch(format!("injection `{t}` outside a state formula")));
            }
            let args = t.args.iter().map(|a| resolve_plain(sig, a)).collect::<Result<Vec<_>, _>>()?;
            EqSentence::pred(Sym::new(&t.head), args)
        }
        other => return Err(EqError::SignatureMismatch(format!("`{other}` is not an equation or predicate"))),
    };
    s.check(sig)?;
    Ok(s)
}

fn to_pattern(t: &RawTerm, metas: &[String]) -> Pattern {
    if t.tag.is_none() && t.args.is_empty() && metas.contains(&t.head) {
        return Pattern::meta(&t.head);
    }
    Pattern::app(Sym::new(&t.head), t.args.iter().map(|a| to_pattern(a, metas)).collect())
}

fn to_sentence_pattern(atom: &Surface, metas: &[String]) -> Option<SentencePattern> {
    match atom {
        Surface::Eq(l, r) => Some(SentencePattern::Equation(to_pattern(l, metas), to_pattern(r, metas))),
        Surface::Pred(t) if !metas.contains(&t.head) => {
            Some(SentencePattern::Pred(Sym::new(&t.head), t.args.iter().map(|a| to_pattern(a, metas)).collect()))
        }
        _ => None,
    }
}

// ---- declarations ----

struct Builder {
    ws: Workspace,
    diags: Vec<Diagnostic>,
}

impl Builder {
    fn declare(&mut self, kind: ItemKind, name: &str, span: Span) -> PResult<()> {
        if self.ws.order.iter().any(|(k, n)| *k == kind && n == name) {
            return Err(Diagnostic::error(span, format!("`{name}` is declared twice")));
        }
        self.ws.order.push((kind, name.to_string()));
        Ok(())
    }

    fn signature(&self, name: &str, span: Span) -> PResult<&EqSignature> {
        self.ws.signatures.get(name).ok_or_else(|| {
            let d = Diagnostic::error(span, format!("unknown signature `{name}`"));
            match self.ws.signatures.keys().next() {
                Some(k) => d.suggest(format!("declared signatures include `{k}`")),
                None => d,
            }
        })
    }

    fn frame(&self, name: &str, span: Span) -> PResult<&FiniteFrame> {
        self.ws.frames.get(name).ok_or_else(|| Diagnostic::error(span, format!("unknown frame `{name}`")))
    }
}

fn parse_signature(p: &mut Parser, b: &mut Builder) -> PResult<()> {
    let sp = p.span();
    let name = p.ident()?;
    let mut sig = EqSignature::new();
    p.expect_p("{")?;
    while !p.eat_p("}") {
        let kind = match p.ident()?.as_str() {
            "const" => SymbolKind::Constant,
            "func" => SymbolKind::Function,
            "pred" => SymbolKind::Predicate,
            other => {
                return Err(Diagnostic::error(p.prev_span(), format!("expected `const`, `func` or `pred`, found `{other}`")))
            }
        };
        loop {
            let ssp = p.span();
            let sym = p.symbol_name()?;
            let arity = if kind == SymbolKind::Constant {
                0
            } else {
                p.expect_p(":")?;
                p.number()?
            };
            sig.add_symbol(Sym::new(&sym), kind, arity).map_err(|e| eq_error(ssp, &e))?;
            if !p.eat_p(",") {
                break;
            }
        }
        p.end_stmt()?;
    }
    b.declare(ItemKind::Signature, &name, sp)?;
    b.ws.signatures.insert(name, sig);
    Ok(())
}

fn parse_interpretation(p: &mut Parser, b: &mut Builder) -> PResult<()> {
    let sp = p.span();
    let name = p.ident()?;
    p.expect_kw("over")?;
    let sig_sp = p.span();
    let sig_name = p.ident()?;
    let sig = b.signature(&sig_name, sig_sp)?.clone();
    let mut axioms = Vec::new();
    let mut families = Vec::new();
    p.expect_p("{")?;
    while !p.eat_p("}") {
        let start = p.span();
        if p.eat_kw("axiom") {
            let atom = p.term_atom()?;
            let s = resolve_plain_sentence(&sig, &atom).map_err(|e| eq_error(p.span_from(start), &e))?;
            axioms.push(s);
        } else if p.eat_kw("schema") {
            let mut metavars = vec![p.ident()?];
            while p.eat_p(",") {
                metavars.push(p.ident()?);
            }
            let mut guards = Vec::new();
            if p.eat_kw("where") {
                loop {
                    let gsp = p.span();
                    let var = p.ident()?;
                    if !metavars.contains(&var) {
                        return Err(Diagnostic::error(gsp, format!("`{var}` is not a metavariable of this schema")));
                    }
                    p.expect_p("!=")?;
                    let tsp = p.span();
                    let t = p.term()?;
                    let t = resolve_plain(&sig, &t).map_err(|e| eq_error(p.span_from(tsp), &e))?;
                    guards.push(Guard { var: var.as_str().into(), not_equal: t });
                    if !p.eat_p(",") {
                        break;
                    }
                }
            }
            p.expect_p(":")?;
            let mut bodies = Vec::new();
            loop {
                let bsp = p.span();
                let atom = p.term_atom()?;
                let body = to_sentence_pattern(&atom, &metavars)
                    .ok_or_else(|| Diagnostic::error(p.span_from(bsp), "expected an equation or predicate"))?;
                let probe = SchemaSentence::new(metavars.iter().map(|s| s.as_str()).collect(), body.clone(), guards.clone())
                    .map_err(|e| Diagnostic::error(p.span_from(bsp), e.to_string()))?;
                probe.check(&sig).map_err(|e| eq_error(p.span_from(bsp), &e))?;
                bodies.push(body);
                if !p.eat_p(",") {
                    break;
                }
            }
            families.push(SchemaFamily { metavars, guards, bodies });
        } else {
            return p.unexpected("`axiom`, `schema` or `}`");
        }
        p.end_stmt()?;
    }
    let schemas = families
        .iter()
        .flat_map(|fam| {
            fam.bodies.iter().map(move |body| {
                SchemaSentence::new(fam.metavars.iter().map(|s| s.as_str()).collect(), body.clone(), fam.guards.clone())
                    .expect("validated above")
            })
        })
        .collect();
    let theory = mk_interpretation(sig, axioms.clone(), schemas).map_err(|e| Diagnostic::error(sp, e.to_string()))?;
    b.declare(ItemKind::Interpretation, &name, sp)?;
    b.ws.interpretations.insert(name, InterpDecl { signature: sig_name, axioms, families, theory });
    Ok(())
}

fn parse_state(p: &mut Parser, b: &mut Builder) -> PResult<()> {
    let sp = p.span();
    let name = p.ident()?;
    if p.at_p(",") || p.at_p(";") {
        // `state a, b, c;` declares empty states
        let mut names = vec![(name, sp)];
        while p.eat_p(",") {
            let nsp = p.span();
            names.push((p.ident()?, nsp));
        }
        p.expect_p(";")?;
        let empty = Arc::new(mk_state(EqSignature::new(), EqSignature::new(), vec![]).expect("empty state"));
        for (n, nsp) in names {
            b.declare(ItemKind::State, &n, nsp)?;
            b.ws.states.insert(n, StateDecl { over: None, theory: empty.clone() });
        }
        return Ok(());
    }
    let (over, flex, rigid) = if p.eat_kw("over") {
        let fsp = p.span();
        let f = p.ident()?;
        p.expect_p(",")?;
        let rsp = p.span();
        let r = p.ident()?;
        let flex = b.signature(&f, fsp)?.clone();
        let rigid = b.signature(&r, rsp)?.clone();
        (Some((f, r)), flex, rigid)
    } else {
        (None, EqSignature::new(), EqSignature::new())
    };
    let lookup = flex.union(&rigid).unwrap_or_else(|_| rigid.clone());
    let mut defs = Vec::new();
    p.expect_p("{")?;
    while !p.eat_p("}") {
        let dsp = p.span();
        let lhs = p.term()?;
        let head = Sym::new(&lhs.head);
        let resolve_args = |p: &Parser, ts: &[RawTerm]| -> PResult<Vec<GroundTerm>> {
            ts.iter().map(|a| resolve_plain(&lookup, a).map_err(|e| eq_error(p.span_from(dsp), &e))).collect()
        };
        let kind = match flex.lookup(&head) {
            Some((k, _)) => k,
            None => {
                return Err(Diagnostic::error(dsp, format!("unresolved symbol '{}'", lhs.head))
                    .suggest("the left-hand side of a definition must be a flexible symbol"))
            }
        };
        let def = if p.eat_p(":=") {
            let rsp = p.span();
            let rhs = p.term()?;
            let rhs = resolve_plain(&lookup, &rhs).map_err(|e| eq_error(p.span_from(rsp), &e))?;
            match kind {
                SymbolKind::Constant if lhs.args.is_empty() => Definition::ConstDef { sym: head, rhs },
                SymbolKind::Function => Definition::FuncDef { sym: head, args: resolve_args(p, &lhs.args)?, rhs },
                _ => return Err(Diagnostic::error(dsp, format!("`{}` cannot be defined with `:=`", lhs.head))),
            }
        } else if kind == SymbolKind::Predicate {
            Definition::PredDef { sym: head, args: resolve_args(p, &lhs.args)? }
        } else {
            return p.unexpected("`:=`");
        };
        defs.push(def);
        p.end_stmt()?;
    }
    let theory = mk_state(flex, rigid, defs).map_err(|e| Diagnostic::error(sp, e.to_string()))?;
    b.declare(ItemKind::State, &name, sp)?;
    b.ws.states.insert(name, StateDecl { over, theory: Arc::new(theory) });
    Ok(())
}

fn parse_frame(p: &mut Parser, b: &mut Builder) -> PResult<()> {
    let sp = p.span();
    let name = p.ident()?;
    p.expect_p("{")?;
    let mut states: Vec<(String, Arc<StateTheory>)> = Vec::new();
    let mut rels: Vec<(String, Vec<(String, String)>)> = Vec::new();
    while !p.eat_p("}") {
        if p.eat_kw("states") {
            while let Tok::Ident(_) = p.peek() {
                let ssp = p.span();
                let s = p.ident()?;
                let decl = b.ws.states.get(&s).ok_or_else(|| {
                    Diagnostic::error(ssp, format!("unknown state `{s}`")).suggest(format!("declare it with `state {s};`"))
                })?;
                if let Some((_, first)) = states.first() {
                    if first.flexible_sig() != decl.theory.flexible_sig() || first.rigid_sig() != decl.theory.rigid_sig() {
                        return Err(Diagnostic::error(ssp, format!("state `{s}` uses different signatures from `{}`", states[0].0)));
                    }
                }
                if states.iter().any(|(n, _)| *n == s) {
                    return Err(Diagnostic::error(ssp, format!("state `{s}` listed twice")));
                }
                states.push((s, decl.theory.clone()));
            }
        } else if p.eat_kw("rel") {
            let rsp = p.span();
            let r = p.ident()?;
            if rels.iter().any(|(n, _)| *n == r) {
                return Err(Diagnostic::error(rsp, format!("relation `{r}` defined twice")));
            }
            p.expect_p("=")?;
            p.expect_p("{")?;
            let mut pairs = Vec::new();
            while !p.eat_p("}") {
                p.expect_p("(")?;
                let asp = p.span();
                let a = p.ident()?;
                p.expect_p(",")?;
                let bsp = p.span();
                let c = p.ident()?;
                p.expect_p(")")?;
                for (s, ssp) in [(&a, asp), (&c, bsp)] {
                    if !states.iter().any(|(n, _)| n == s) {
                        return Err(Diagnostic::error(ssp, format!("`{s}` is not a state of frame `{name}`")));
                    }
                }
                pairs.push((a, c));
                if !p.eat_p(",") {
                    p.expect_p("}")?;
                    break;
                }
            }
            rels.push((r, pairs));
        } else {
            return p.unexpected("`states`, `rel` or `}`");
        }
        p.end_stmt()?;
    }
    let frame = FiniteFrame::with_states(states, rels).map_err(|e| Diagnostic::error(sp, e.to_string()))?;
    b.declare(ItemKind::Frame, &name, sp)?;
    b.ws.frames.insert(name, frame);
    Ok(())
}

fn parse_conditions(p: &mut Parser, b: &mut Builder) -> PResult<()> {
    let sp = p.span();
    let name = p.ident()?;
    p.expect_p("{")?;
    let mut conds = Vec::new();
    while !p.eat_p("}") {
        let kw = p.ident()?;
        let c = match kw.as_str() {
            "total" => Condition::Total(p.ident()?),
            "functional" => Condition::Functional(p.ident()?),
            "initial" => Condition::Initial(p.ident()?),
            "formula" => {
                let n = p.ident()?;
                p.expect_p(":")?;
                Condition::Formula(n, p.rel_formula()?)
            }
            other => {
                return Err(Diagnostic::error(
                    p.prev_span(),
                    format!("expected `total`, `functional`, `initial` or `formula`, found `{other}`"),
                ))
            }
        };
        conds.push(c);
        p.end_stmt()?;
    }
    b.declare(ItemKind::Conditions, &name, sp)?;
    b.ws.conditions.insert(name, conds);
    Ok(())
}

fn parse_map(p: &mut Parser, b: &mut Builder) -> PResult<()> {
    let sp = p.span();
    let name = p.ident()?;
    p.expect_p(":")?;
    let ssp = p.span();
    let src = p.ident()?;
    p.expect_p("->")?;
    let dsp = p.span();
    let dst = p.ident()?;
    let (sf, df) = (b.frame(&src, ssp)?.clone(), b.frame(&dst, dsp)?.clone());
    let mut map = FrameMap { rels: vec![], states: vec![] };
    p.expect_p("{")?;
    while !p.eat_p("}") {
        let is_rel = if p.eat_kw("rel") {
            true
        } else if p.eat_kw("state") {
            false
        } else {
            return p.unexpected("`rel`, `state` or `}`");
        };
        let asp = p.span();
        let a = p.ident()?;
        p.expect_p("->")?;
        let bsp = p.span();
        let c = p.ident()?;
        if is_rel {
            if sf.relation(&a).is_err() {
                return Err(Diagnostic::error(asp, format!("frame `{src}` has no relation `{a}`")));
            }
            if df.relation(&c).is_err() {
                return Err(Diagnostic::error(bsp, format!("frame `{dst}` has no relation `{c}`")));
            }
            map.rels.push((a, c));
        } else {
            if sf.state_index(&a).is_err() {
                return Err(Diagnostic::error(asp, format!("frame `{src}` has no state `{a}`")));
            }
            if df.state_index(&c).is_err() {
                return Err(Diagnostic::error(bsp, format!("frame `{dst}` has no state `{c}`")));
            }
            map.states.push((a, c));
        }
        p.end_stmt()?;
    }
    b.declare(ItemKind::Map, &name, sp)?;
    b.ws.maps.insert(name, MapDecl { src, dst, map });
    Ok(())
}

fn parse_quant(p: &mut Parser, b: &mut Builder) -> PResult<()> {
    let sp = p.span();
    let name = p.ident()?;
    p.expect_kw("over")?;
    let ssp = p.span();
    let sig_name = p.ident()?;
    let sig = b.signature(&sig_name, ssp)?.clone();
    let mut domain = QuantDomain::default();
    p.expect_p("{")?;
    while !p.eat_p("}") {
        let x = p.ident()?;
        p.expect_kw("in")?;
        p.expect_p("{")?;
        let mut terms = Vec::new();
        while !p.eat_p("}") {
            let tsp = p.span();
            let t = p.term()?;
            terms.push(resolve_plain(&sig, &t).map_err(|e| eq_error(p.span_from(tsp), &e))?);
            if !p.eat_p(",") {
                p.expect_p("}")?;
                break;
            }
        }
        domain.ranges.insert(x, terms);
        p.end_stmt()?;
    }
    b.declare(ItemKind::Quant, &name, sp)?;
    b.ws.quants.insert(name, QuantDecl { signature: sig_name, domain });
    Ok(())
}

fn parse_budget(p: &mut Parser, b: &mut Builder) -> PResult<()> {
    let sp = p.prev_span();
    let mut d = BudgetDecl::default();
    p.expect_p("{")?;
    while !p.eat_p("}") {
        let ksp = p.span();
        let key = p.ident()?;
        let n = p.number()?;
        match key.as_str() {
            "depth" => d.depth = Some(n),
            "max_inst" => d.max_inst = Some(n),
            "bound" => d.bound = Some(n),
            other => {
                return Err(Diagnostic::error(ksp, format!("unknown budget field `{other}`"))
                    .suggest("use `depth`, `max_inst` or `bound`"))
            }
        }
        p.end_stmt()?;
    }
    if b.ws.budget.is_some() {
        return Err(Diagnostic::error(sp, "`budget` is declared twice"));
    }
    b.ws.order.push((ItemKind::Budget, String::new()));
    b.ws.budget = Some(d);
    Ok(())
}

fn parse_logic(p: &mut Parser) -> PResult<Logic> {
    let sp = p.span();
    match p.ident()?.as_str() {
        "ltl" => Ok(Logic::Ltl),
        "ctl" => Ok(Logic::Ctl),
        "pdl" => Ok(Logic::Fodl),
        "ctlstar" => Ok(Logic::CtlStar),
        other => Err(Diagnostic::error(sp, format!("unknown logic `{other}`")).suggest("use ltl, ctl, pdl or ctlstar")),
    }
}

/// Checks that `phi` translates into `logic` over the frame's signatures.
pub fn validate_formula(f: &FiniteFrame, logic: Logic, phi: &Surface) -> Result<(), crate::logics::LogicError> {
    let st = f.theory(0);
    let sum = sum_signature(st.rigid_sig(), st.flexible_sig());
    match logic {
        Logic::Ltl => to_ltl(&sum, phi).map(|_| ()),
        Logic::Ctl => to_ctl(&sum, phi).map(|_| ()),
        Logic::Fodl => to_fodl(&sum, phi).map(|_| ()),
        Logic::CtlStar => to_ctlstar(&sum, phi).map(|_| ()),
    }
}

fn parse_check(p: &mut Parser, b: &mut Builder) -> PResult<()> {
    let sp = p.span();
    let name = p.ident()?;
    p.expect_p(":")?;
    let logic = parse_logic(p)?;
    let fsp = p.span();
    let frame = p.ident()?;
    let f = b.frame(&frame, fsp)?.clone();
    p.expect_kw("at")?;
    let asp = p.span();
    let at = p.ident()?;
    if f.state_index(&at).is_err() {
        return Err(Diagnostic::error(asp, format!("frame `{frame}` has no state `{at}`")));
    }
    let mut interp = None;
    let mut quant = None;
    let mut bound = None;
    if p.eat_kw("using") {
        let isp = p.span();
        let i = p.ident()?;
        let decl = b.ws.interpretations.get(&i).ok_or_else(|| Diagnostic::error(isp, format!("unknown interpretation `{i}`")))?;
        if decl.theory.rigid_sig() != f.theory(0).rigid_sig() {
            return Err(Diagnostic::error(isp, format!("interpretation `{i}` is over a different rigid signature than frame `{frame}`")));
        }
        interp = Some(i);
    }
    if p.eat_kw("quant") {
        let qsp = p.span();
        let q = p.ident()?;
        if !b.ws.quants.contains_key(&q) {
            return Err(Diagnostic::error(qsp, format!("unknown quantifier domain `{q}`")));
        }
        quant = Some(q);
    }
    if p.eat_kw("bound") {
        bound = Some(p.number()?);
    }
    p.expect_p("=")?;
    let phi_sp = p.span();
    let formula = p.formula()?;
    validate_formula(&f, logic, &formula).map_err(|e| Diagnostic::error(p.span_from(phi_sp), e.to_string()))?;
    p.end_stmt()?;
    b.declare(ItemKind::Check, &name, sp)?;
    b.ws.checks.insert(name, CheckDecl { logic, frame, at, interp, quant, bound, formula });
    Ok(())
}

/// Skips to the next top-level keyword that starts a declaration.
fn recover(p: &mut Parser) {
    let mut depth = 0usize;
    loop {
        match p.peek() {
            Tok::Eof => return,
            Tok::P("{") => depth += 1,
            Tok::P("}") => {
                depth = depth.saturating_sub(1);
                if depth == 0 {
                    p.bump();
                    if p.at_p(";") {
                        p.bump();
                    }
                    return;
                }
            }
            Tok::Ident(s) if depth == 0 && TOP_KEYWORDS.contains(&s.as_str()) && p.pos > 0 => {
                if matches!(p.toks[p.pos - 1].tok, Tok::P(";") | Tok::P("}")) {
                    return;
                }
            }
            _ => {}
        }
        p.bump();
    }
}

/// Parses a whole `.rks` source.
pub fn parse(src: &str) -> Result<Workspace, Vec<Diagnostic>> {
    let (toks, mut diags) = lex(src);
    let mut p = Parser::new(toks);
    let mut b = Builder { ws: Workspace::default(), diags: Vec::new() };
    while *p.peek() != Tok::Eof {
        let start = p.pos;
        let r = match p.peek().clone() {
            Tok::Ident(kw) if TOP_KEYWORDS.contains(&kw.as_str()) => {
                p.bump();
                p.depth = 0;
                match kw.as_str() {
                    "signature" => parse_signature(&mut p, &mut b),
                    "interpretation" => parse_interpretation(&mut p, &mut b),
                    "state" => parse_state(&mut p, &mut b),
                    "frame" => parse_frame(&mut p, &mut b),
                    "conditions" => parse_conditions(&mut p, &mut b),
                    "map" => parse_map(&mut p, &mut b),
                    "quant" => parse_quant(&mut p, &mut b),
                    "budget" => parse_budget(&mut p, &mut b),
                    _ => parse_check(&mut p, &mut b),
                }
            }
            other => Err(Diagnostic::error(p.span(), format!("expected a declaration, found {other}"))
                .suggest(format!("declarations start with one of: {}", TOP_KEYWORDS.join(", ")))),
        };
        if let Err(d) = r {
            b.diags.push(d);
            if p.pos == start {
                p.bump();
            }
            recover(&mut p);
        }
    }
    diags.extend(b.diags);
    if diags.is_empty() {
        Ok(b.ws)
    } else {
        diags.sort_by_key(|d| d.span.start);
        Err(diags)
    }
}

fn parse_fragment<T>(src: &str, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Result<T, Vec<Diagnostic>> {
    let (toks, diags) = lex(src);
    if !diags.is_empty() {
        return Err(diags);
    }
    let mut p = Parser::new(toks);
    let r = f(&mut p).and_then(|v| if *p.peek() == Tok::Eof { Ok(v) } else { p.unexpected("end of input") });
    r.map_err(|d| vec![d])
}

/// Parses a standalone modal formula.
pub fn parse_formula(src: &str) -> Result<Surface, Vec<Diagnostic>> {
    parse_fragment(src, |p| p.formula())
}

/// Parses a standalone relational formula.
pub fn parse_rel_formula(src: &str) -> Result<RelFormula, Vec<Diagnostic>> {
    parse_fragment(src, |p| p.rel_formula())
}

/// Parses an atom `t = t'` or `p(t, ..)`, possibly with explicit injections.
pub fn parse_atom(src: &str) -> Result<Surface, Vec<Diagnostic>> {
    parse_fragment(src, |p| p.term_atom())
}

/// Parses a ground term.
pub fn parse_term(src: &str) -> Result<RawTerm, Vec<Diagnostic>> {
    parse_fragment(src, |p| p.term())
}

// ---- printing ----

fn print_signature(out: &mut String, name: &str, sig: &EqSignature) {
    if sig.is_empty() {
        out.push_str(&format!("signature {name} {{}}\n"));
        return;
    }
    out.push_str(&format!("signature {name} {{\n"));
    let syms: Vec<_> = sig.symbols().collect();
    let mut i = 0;
    while i < syms.len() {
        let kind = syms[i].1;
        let mut j = i;
        while j < syms.len() && syms[j].1 == kind {
            j += 1;
        }
        let items: Vec<String> = syms[i..j]
            .iter()
            .map(|(s, k, a)| if *k == SymbolKind::Constant { s.name().to_string() } else { format!("{} : {a}", s.name()) })
            .collect();
        let kw = match kind {
            SymbolKind::Constant => "const",
            SymbolKind::Function => "func",
            SymbolKind::Predicate => "pred",
        };
        out.push_str(&format!("  {kw} {};\n", items.join(", ")));
        i = j;
    }
    out.push_str("}\n");
}

fn print_interpretation(out: &mut String, name: &str, d: &InterpDecl) {
    out.push_str(&format!("interpretation {name} over {} {{", d.signature));
    if d.axioms.is_empty() && d.families.is_empty() {
        out.push_str("}\n");
        return;
    }
    out.push('\n');
    for a in &d.axioms {
        out.push_str(&format!("  axiom {a};\n"));
    }
    for fam in &d.families {
        let mut line = format!("  schema {}", fam.metavars.join(", "));
        if !fam.guards.is_empty() {
            let gs: Vec<String> = fam.guards.iter().map(|g| format!("{} != {}", g.var, g.not_equal)).collect();
            line.push_str(&format!(" where {}", gs.join(", ")));
        }
        let bodies: Vec<String> = fam.bodies.iter().map(|b| b.to_string()).collect();
        out.push_str(&format!("{line} : {};\n", bodies.join(", ")));
    }
    out.push_str("}\n");
}

fn print_state(out: &mut String, name: &str, d: &StateDecl) {
    match &d.over {
        None if d.theory.defs().is_empty() => out.push_str(&format!("state {name};\n")),
        None => unreachable!("definitions require signatures"),
        Some((f, r)) => {
            out.push_str(&format!("state {name} over {f}, {r} {{"));
            if d.theory.defs().is_empty() {
                out.push_str("}\n");
                return;
            }
            out.push('\n');
            for def in d.theory.defs() {
                out.push_str(&format!("  {def};\n"));
            }
            out.push_str("}\n");
        }
    }
}

fn print_frame(out: &mut String, name: &str, f: &FiniteFrame) {
    out.push_str(&format!("frame {name} {{\n  states {};\n", f.state_names().collect::<Vec<_>>().join(" ")));
    for (r, rel) in f.relations() {
        let pairs: Vec<String> =
            rel.pairs().map(|(a, b)| format!("({}, {})", f.state_name(a), f.state_name(b))).collect();
        out.push_str(&format!("  rel {r} = {{{}}};\n", pairs.join(", ")));
    }
    out.push_str("}\n");
}

fn print_conditions(out: &mut String, name: &str, cs: &[Condition]) {
    out.push_str(&format!("conditions {name} {{"));
    if cs.is_empty() {
        out.push_str("}\n");
        return;
    }
    out.push('\n');
    for c in cs {
        let line = match c {
            Condition::Total(r) => format!("total {r}"),
            Condition::Functional(r) => format!("functional {r}"),
            Condition::Initial(r) => format!("initial {r}"),
            Condition::Formula(n, f) => format!("formula {n} : {f}"),
        };
        out.push_str(&format!("  {line};\n"));
    }
    out.push_str("}\n");
}

fn print_map(out: &mut String, name: &str, m: &MapDecl) {
    out.push_str(&format!("map {name} : {} -> {} {{", m.src, m.dst));
    if m.map.rels.is_empty() && m.map.states.is_empty() {
        out.push_str("}\n");
        return;
    }
    out.push('\n');
    for (a, b) in &m.map.rels {
        out.push_str(&format!("  rel {a} -> {b};\n"));
    }
    for (a, b) in &m.map.states {
        out.push_str(&format!("  state {a} -> {b};\n"));
    }
    out.push_str("}\n");
}

fn print_quant(out: &mut String, name: &str, q: &QuantDecl) {
    out.push_str(&format!("quant {name} over {} {{", q.signature));
    if q.domain.ranges.is_empty() {
        out.push_str("}\n");
        return;
    }
    out.push('\n');
    for (x, ts) in &q.domain.ranges {
        let ts: Vec<String> = ts.iter().map(|t| t.to_string()).collect();
        out.push_str(&format!("  {x} in {{{}}};\n", ts.join(", ")));
    }
    out.push_str("}\n");
}

fn print_budget(out: &mut String, b: &BudgetDecl) {
    let fields: Vec<String> = [("depth", b.depth), ("max_inst", b.max_inst), ("bound", b.bound)]
        .iter()
        .filter_map(|(k, v)| v.map(|v| format!("  {k} {v};\n")))
        .collect();
    if fields.is_empty() {
        out.push_str("budget {}\n");
    } else {
        out.push_str(&format!("budget {{\n{}}}\n", fields.concat()));
    }
}

fn print_check(out: &mut String, name: &str, c: &CheckDecl) {
    let mut line = format!("check {name} : {} {} at {}", c.logic, c.frame, c.at);
    if let Some(i) = &c.interp {
        line.push_str(&format!(" using {i}"));
    }
    if let Some(q) = &c.quant {
        line.push_str(&format!(" quant {q}"));
    }
    if let Some(n) = c.bound {
        line.push_str(&format!(" bound {n}"));
    }
    out.push_str(&format!("{line} = {};\n", c.formula));
}

/// Canonical source text; declarations keep their original order.
pub fn print(w: &Workspace) -> String {
    let mut out = String::new();
    for (i, (kind, name)) in w.order.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match kind {
            ItemKind::Signature => print_signature(&mut out, name, &w.signatures[name]),
            ItemKind::Interpretation => print_interpretation(&mut out, name, &w.interpretations[name]),
            ItemKind::State => print_state(&mut out, name, &w.states[name]),
            ItemKind::Frame => print_frame(&mut out, name, &w.frames[name]),
            ItemKind::Conditions => print_conditions(&mut out, name, &w.conditions[name]),
            ItemKind::Map => print_map(&mut out, name, &w.maps[name]),
            ItemKind::Quant => print_quant(&mut out, name, &w.quants[name]),
            ItemKind::Budget => print_budget(&mut out, w.budget.as_ref().expect("budget present")),
            ItemKind::Check => print_check(&mut out, name, &w.checks[name]),
        }
    }
    out
}
