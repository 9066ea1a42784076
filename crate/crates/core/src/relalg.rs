//! Finite relation algebra over a frame's base set.
//!
//! A [`FiniteFrame`] is the full proper closure relation algebra over its
//! base: every binary relation on the base is a value, so relational terms
//! evaluate to [`Relation`]s and first-order relational formulae are decided
//! by enumerating valuations.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::entail::{EntailBudget, Verdict};
use crate::eqcore::EqSignature;
use crate::theoria::{mk_interpretation, mk_state, InterpretationTheory, StateTheory, TheoriaError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RelError {
    #[error("unknown relation symbol `{0}`")]
    UnknownRelationSymbol(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("point variable `{0}` is not bound")]
    UnboundPointVariable(String),
    #[error("frame has an empty base")]
    EmptyBase,
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("relation symbol `{0}` is not mapped")]
    UnmappedSymbol(String),
    #[error("state `{0}` is not mapped")]
    UnmappedState(String),
    #[error("states use different signatures")]
    StateSignatureMismatch,
    #[error(transparent)]
    Theoria(#[from] TheoriaError),
}

const W: usize = 64;

/// Binary relation on `0..n`, one bit row per element.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl Relation {
    pub fn empty(n: usize) -> Self {
        let words = n.div_ceil(W).max(1);
        Relation { n, words, bits: vec![0; n * words] }
    }

    pub fn identity(n: usize) -> Self {
        let mut r = Relation::empty(n);
        for i in 0..n {
            r.insert(i, i);
        }
        r
    }

    pub fn full(n: usize) -> Self {
        Relation::identity(n).complement().union(&Relation::identity(n))
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut r = Relation::empty(n);
        for (i, j) in pairs {
            r.insert(i, j);
        }
        r
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.bits[i * self.words..(i + 1) * self.words]
    }

    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.bits[i * self.words..(i + 1) * self.words]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / W] >> (j % W) & 1 == 1
    }

    pub fn insert(&mut self, i: usize, j: usize) {
        assert!(i < self.n && j < self.n, "pair outside the base");
        self.row_mut(i)[j / W] |= 1 << (j % W);
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.n;
        self.row(i).iter().enumerate().flat_map(move |(w, &word)| {
            (0..W).filter(move |b| word >> b & 1 == 1).map(move |b| w * W + b).filter(move |&j| j < n)
        })
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| self.successors(i).map(move |j| (i, j)))
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &Relation) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    fn zip(&self, other: &Relation, f: impl Fn(u64, u64) -> u64) -> Relation {
        assert_eq!(self.n, other.n, "relations over different bases");
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Relation { n: self.n, words: self.words, bits }
    }

    pub fn union(&self, other: &Relation) -> Relation {
        self.zip(other, |a, b| a | b)
    }

    pub fn intersection(&self, other: &Relation) -> Relation {
        self.zip(other, |a, b| a & b)
    }

    pub fn complement(&self) -> Relation {
        let mut r = self.clone();
        let tail = self.n % W;
        for i in 0..self.n {
            let row = r.row_mut(i);
            for w in row.iter_mut() {
                *w = !*w;
            }
            if tail != 0 {
                *row.last_mut().unwrap() &= (1u64 << tail) - 1;
            }
        }
        r
    }

    pub fn compose(&self, other: &Relation) -> Relation {
        assert_eq!(self.n, other.n, "relations over different bases");
        let mut r = Relation::empty(self.n);
        let w = self.words;
        for i in 0..self.n {
            for k in self.successors(i) {
                for x in 0..w {
                    r.bits[i * w + x] |= other.bits[k * w + x];
                }
            }
        }
        r
    }

    pub fn converse(&self) -> Relation {
        Relation::from_pairs(self.n, self.pairs().map(|(i, j)| (j, i)))
    }

    /// Reflexive-transitive closure by repeated squaring.
    pub fn closure(&self) -> Relation {
        let mut c = self.union(&Relation::identity(self.n));
        loop {
            let next = c.compose(&c);
            if next == c {
                return c;
            }
            c = next;
        }
    }
}

impl fmt::Debug for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.pairs()).finish()
    }
}

pub fn closure(r: &Relation) -> Relation {
    r.closure()
}

/// Named states with named binary relations over them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteFrame {
    states: IndexMap<String, Arc<StateTheory>>,
    rels: IndexMap<String, Relation>,
}

impl FiniteFrame {
    /// Frame whose states carry empty theories.
    pub fn new(base: Vec<String>, rels: Vec<(String, Vec<(String, String)>)>) -> Result<Self, RelError> {
        let empty = Arc::new(mk_state(EqSignature::new(), EqSignature::new(), vec![])?);
        FiniteFrame::with_states(base.into_iter().map(|s| (s, empty.clone())).collect(), rels)
    }

    pub fn with_states(
        states: Vec<(String, Arc<StateTheory>)>,
        rels: Vec<(String, Vec<(String, String)>)>,
    ) -> Result<Self, RelError> {
        if states.is_empty() {
            return Err(RelError::EmptyBase);
        }
        let mut map = IndexMap::new();
        for (name, th) in states {
            if map.insert(name.clone(), th).is_some() {
                return Err(RelError::DuplicateState(name));
            }
        }
        let n = map.len();
        let idx = |s: &String| map.get_index_of(s).ok_or_else(|| RelError::UnknownState(s.clone()));
        let mut out = IndexMap::new();
        for (name, pairs) in rels {
            let mut r = Relation::empty(n);
            for (a, b) in &pairs {
                r.insert(idx(a)?, idx(b)?);
            }
            out.insert(name, r);
        }
        Ok(FiniteFrame { states: map, rels: out })
    }

    /// Frame over `0..n` with anonymous states named `s0, s1, ...`.
    pub fn from_relations(n: usize, rels: Vec<(String, Relation)>) -> Result<Self, RelError> {
        let mut f = FiniteFrame::new((0..n).map(|i| format!("s{i}")).collect(), vec![])?;
        for (name, r) in rels {
            assert_eq!(r.size(), n, "relation over a different base");
            f.rels.insert(name, r);
        }
        Ok(f)
    }

    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn state_names(&self) -> impl Iterator<Item = &str> {
        self.states.keys().map(String::as_str)
    }

    pub fn state_name(&self, i: usize) -> &str {
        self.states.get_index(i).map(|(k, _)| k.as_str()).expect("state index in range")
    }

    pub fn state_index(&self, name: &str) -> Result<usize, RelError> {
        self.states.get_index_of(name).ok_or_else(|| RelError::UnknownState(name.to_string()))
    }

    pub fn theory(&self, i: usize) -> &Arc<StateTheory> {
        &self.states[i]
    }

    pub fn relation(&self, name: &str) -> Result<&Relation, RelError> {
        self.rels.get(name).ok_or_else(|| RelError::UnknownRelationSymbol(name.to_string()))
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.rels.keys().map(String::as_str)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&str, &Relation)> {
        self.rels.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Relational terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RelTerm {
    Sym(String),
    Zero,
    One,
    Ident,
    Union(Box<RelTerm>, Box<RelTerm>),
    Inter(Box<RelTerm>, Box<RelTerm>),
    Compl(Box<RelTerm>),
    Comp(Box<RelTerm>, Box<RelTerm>),
    Conv(Box<RelTerm>),
    Closure(Box<RelTerm>),
}

impl RelTerm {
    pub fn sym(s: &str) -> Self {
        RelTerm::Sym(s.to_string())
    }
    pub fn union(a: RelTerm, b: RelTerm) -> Self {
        RelTerm::Union(Box::new(a), Box::new(b))
    }
    pub fn inter(a: RelTerm, b: RelTerm) -> Self {
        RelTerm::Inter(Box::new(a), Box::new(b))
    }
    pub fn comp(a: RelTerm, b: RelTerm) -> Self {
        RelTerm::Comp(Box::new(a), Box::new(b))
    }
    pub fn compl(a: RelTerm) -> Self {
        RelTerm::Compl(Box::new(a))
    }
    pub fn conv(a: RelTerm) -> Self {
        RelTerm::Conv(Box::new(a))
    }
    pub fn closure(a: RelTerm) -> Self {
        RelTerm::Closure(Box::new(a))
    }

    /// `R ; R ; ... ; R` with `i` factors, `1'` for `i = 0`.
    pub fn power(r: &RelTerm, i: usize) -> RelTerm {
        (1..i).fold(if i == 0 { RelTerm::Ident } else { r.clone() }, |acc, _| RelTerm::comp(acc, r.clone()))
    }

    pub fn symbols(&self, out: &mut Vec<String>) {
        match self {
            RelTerm::Sym(s) => {
                if !out.contains(s) {
                    out.push(s.clone())
                }
            }
            RelTerm::Zero | RelTerm::One | RelTerm::Ident => {}
            RelTerm::Union(a, b) | RelTerm::Inter(a, b) | RelTerm::Comp(a, b) => {
                a.symbols(out);
                b.symbols(out);
            }
            RelTerm::Compl(a) | RelTerm::Conv(a) | RelTerm::Closure(a) => a.symbols(out),
        }
    }

    fn binary(&self) -> Option<(&'static str, u8, &RelTerm, &RelTerm)> {
        match self {
            RelTerm::Union(a, b) => Some(("+", 1, a, b)),
            RelTerm::Inter(a, b) => Some((".", 2, a, b)),
            RelTerm::Comp(a, b) => Some((";", 3, a, b)),
            _ => None,
        }
    }
}

impl fmt::Display for RelTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Binary children are parenthesized unless they repeat the parent's
        // operator on the left; unary operands are parenthesized if binary.
        match self {
            RelTerm::Sym(s) => f.write_str(s),
            RelTerm::Zero => f.write_str("0"),
            RelTerm::One => f.write_str("1"),
            RelTerm::Ident => f.write_str("1'"),
            RelTerm::Compl(a) => match a.binary() {
                Some(_) => write!(f, "~({a})"),
                None => write!(f, "~{a}"),
            },
            RelTerm::Conv(a) | RelTerm::Closure(a) => {
                let op = if matches!(self, RelTerm::Conv(_)) { "^" } else { "*" };
                match **a {
                    RelTerm::Sym(_) | RelTerm::Zero | RelTerm::One | RelTerm::Ident | RelTerm::Conv(_) | RelTerm::Closure(_) => {
                        write!(f, "{a}{op}")
                    }
                    _ => write!(f, "({a}){op}"),
                }
            }
            _ => {
                let (op, _, a, b) = self.binary().unwrap();
                match a.binary() {
                    Some((o, ..)) if o != op => write!(f, "({a})")?,
                    _ => write!(f, "{a}")?,
                }
                write!(f, " {op} ")?;
                match b.binary() {
                    Some(_) => write!(f, "({b})"),
                    None => write!(f, "{b}"),
                }
            }
        }
    }
}

/// First-order formulae over relational atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RelFormula {
    Rel { x: String, term: RelTerm, y: String },
    Eq(RelTerm, RelTerm),
    Not(Box<RelFormula>),
    Or(Vec<RelFormula>),
    And(Vec<RelFormula>),
    Implies(Box<RelFormula>, Box<RelFormula>),
    Iff(Box<RelFormula>, Box<RelFormula>),
    Exists(Vec<String>, Box<RelFormula>),
    Forall(Vec<String>, Box<RelFormula>),
}

impl RelFormula {
    pub fn rel(x: &str, term: RelTerm, y: &str) -> Self {
        RelFormula::Rel { x: x.to_string(), term, y: y.to_string() }
    }
    pub fn not(a: RelFormula) -> Self {
        RelFormula::Not(Box::new(a))
    }
    pub fn implies(a: RelFormula, b: RelFormula) -> Self {
        RelFormula::Implies(Box::new(a), Box::new(b))
    }
    pub fn iff(a: RelFormula, b: RelFormula) -> Self {
        RelFormula::Iff(Box::new(a), Box::new(b))
    }
    pub fn forall(vars: &[&str], body: RelFormula) -> Self {
        RelFormula::Forall(vars.iter().map(|v| v.to_string()).collect(), Box::new(body))
    }
    pub fn exists(vars: &[&str], body: RelFormula) -> Self {
        RelFormula::Exists(vars.iter().map(|v| v.to_string()).collect(), Box::new(body))
    }

    fn terms<'a>(&'a self, out: &mut Vec<&'a RelTerm>) {
        match self {
            RelFormula::Rel { term, .. } => out.push(term),
            RelFormula::Eq(a, b) => {
                out.push(a);
                out.push(b);
            }
            RelFormula::Not(a) | RelFormula::Exists(_, a) | RelFormula::Forall(_, a) => a.terms(out),
            RelFormula::Or(xs) | RelFormula::And(xs) => xs.iter().for_each(|x| x.terms(out)),
            RelFormula::Implies(a, b) | RelFormula::Iff(a, b) => {
                a.terms(out);
                b.terms(out);
            }
        }
    }

    pub fn symbols(&self) -> Vec<String> {
        let mut ts = Vec::new();
        self.terms(&mut ts);
        let mut out = Vec::new();
        ts.iter().for_each(|t| t.symbols(&mut out));
        out
    }

    fn is_compound(&self) -> bool {
        !matches!(self, RelFormula::Rel { .. } | RelFormula::Eq(..) | RelFormula::Not(_))
    }
}

impl fmt::Display for RelFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn sub(g: &RelFormula) -> String {
            if g.is_compound() {
                format!("({g})")
            } else {
                g.to_string()
            }
        }
        let join = |xs: &[RelFormula], op: &str| xs.iter().map(sub).collect::<Vec<_>>().join(op);
        match self {
            RelFormula::Rel { x, term, y } => write!(f, "{x} {term} {y}"),
            RelFormula::Eq(a, b) => write!(f, "{a} = {b}"),
            RelFormula::Not(a) => write!(f, "!{}", sub(a)),
            RelFormula::Or(xs) if xs.is_empty() => f.write_str("false"),
            RelFormula::And(xs) if xs.is_empty() => f.write_str("true"),
            RelFormula::Or(xs) => f.write_str(&join(xs, " | ")),
            RelFormula::And(xs) => f.write_str(&join(xs, " & ")),
            RelFormula::Implies(a, b) => write!(f, "{} => {}", sub(a), sub(b)),
            RelFormula::Iff(a, b) => write!(f, "{} <=> {}", sub(a), sub(b)),
            RelFormula::Exists(vs, a) => write!(f, "exists {}. {}", vs.join(", "), sub(a)),
            RelFormula::Forall(vs, a) => write!(f, "forall {}. {}", vs.join(", "), sub(a)),
        }
    }
}

/// Evaluates `t` with the standard set-theoretic meaning of each operator.
pub fn eval_relterm(f: &FiniteFrame, t: &RelTerm) -> Result<Relation, RelError> {
    let n = f.size();
    Ok(match t {
        RelTerm::Sym(s) => f.relation(s)?.clone(),
        RelTerm::Zero => Relation::empty(n),
        RelTerm::One => Relation::full(n),
        RelTerm::Ident => Relation::identity(n),
        RelTerm::Union(a, b) => eval_relterm(f, a)?.union(&eval_relterm(f, b)?),
        RelTerm::Inter(a, b) => eval_relterm(f, a)?.intersection(&eval_relterm(f, b)?),
        RelTerm::Compl(a) => eval_relterm(f, a)?.complement(),
        RelTerm::Comp(a, b) => eval_relterm(f, a)?.compose(&eval_relterm(f, b)?),
        RelTerm::Conv(a) => eval_relterm(f, a)?.converse(),
        RelTerm::Closure(a) => eval_relterm(f, a)?.closure(),
    })
}

struct Evaluator<'a> {
    n: usize,
    cache: HashMap<&'a RelTerm, Relation>,
}

impl<'a> Evaluator<'a> {
    fn new(f: &FiniteFrame, phi: &'a RelFormula) -> Result<Self, RelError> {
        let mut ts = Vec::new();
        phi.terms(&mut ts);
        let mut cache = HashMap::new();
        for t in ts {
            if !cache.contains_key(t) {
                cache.insert(t, eval_relterm(f, t)?);
            }
        }
        Ok(Evaluator { n: f.size(), cache })
    }

    fn lookup(env: &[(&str, usize)], v: &str) -> Result<usize, RelError> {
        env.iter().rev().find(|(k, _)| *k == v).map(|&(_, i)| i).ok_or_else(|| RelError::UnboundPointVariable(v.to_string()))
    }

    fn eval(&self, env: &mut Vec<(&'a str, usize)>, phi: &'a RelFormula) -> Result<bool, RelError> {
        Ok(match phi {
            RelFormula::Rel { x, term, y } => self.cache[term].contains(Self::lookup(env, x)?, Self::lookup(env, y)?),
            RelFormula::Eq(a, b) => self.cache[a] == self.cache[b],
            RelFormula::Not(a) => !self.eval(env, a)?,
            RelFormula::Or(xs) => {
                for x in xs {
                    if self.eval(env, x)? {
                        return Ok(true);
                    }
                }
                false
            }
            RelFormula::And(xs) => {
                for x in xs {
                    if !self.eval(env, x)? {
                        return Ok(false);
                    }
                }
                true
            }
            RelFormula::Implies(a, b) => !self.eval(env, a)? || self.eval(env, b)?,
            RelFormula::Iff(a, b) => self.eval(env, a)? == self.eval(env, b)?,
            RelFormula::Exists(vs, body) => self.quantify(env, vs, body, true)?,
            RelFormula::Forall(vs, body) => !self.quantify(env, vs, body, false)?,
        })
    }

    /// Searches for a valuation of `vs` making `body` equal to `want`.
    fn quantify(&self, env: &mut Vec<(&'a str, usize)>, vs: &'a [String], body: &'a RelFormula, want: bool) -> Result<bool, RelError> {
        let Some((v, rest)) = vs.split_first() else {
            return Ok(self.eval(env, body)? == want);
        };
        for i in 0..self.n {
            env.push((v, i));
            let hit = self.quantify(env, rest, body, want);
            env.pop();
            if hit? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

pub fn eval_formula(f: &FiniteFrame, valuation: &HashMap<String, usize>, phi: &RelFormula) -> Result<bool, RelError> {
    let ev = Evaluator::new(f, phi)?;
    let mut env: Vec<(&str, usize)> = valuation.iter().map(|(k, &v)| (k.as_str(), v)).collect();
    ev.eval(&mut env, phi)
}

/// Outcome of one frame condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionReport {
    pub name: String,
    pub formula: String,
    pub passed: bool,
    /// First falsifying valuation of the outer universal variables, as
    /// `(variable, state)` pairs, or the first pair in the symmetric
    /// difference for an equation.
    pub witness: Option<Vec<(String, String)>>,
}

pub fn verify_frame_conditions(f: &FiniteFrame, gamma: &[(String, RelFormula)]) -> Result<Vec<ConditionReport>, RelError> {
    gamma.iter().map(|(name, phi)| verify_one(f, name, phi)).collect()
}

fn verify_one(f: &FiniteFrame, name: &str, phi: &RelFormula) -> Result<ConditionReport, RelError> {
    let mut vars: Vec<&str> = Vec::new();
    let mut body = phi;
    while let RelFormula::Forall(vs, b) = body {
        vars.extend(vs.iter().map(String::as_str));
        body = b;
    }
    let ev = Evaluator::new(f, phi)?;
    let report = |passed, witness| ConditionReport { name: name.to_string(), formula: phi.to_string(), passed, witness };
    if let RelFormula::Eq(a, b) = body {
        if vars.is_empty() {
            let diff = ev.cache[a].union(&ev.cache[b]).intersection(&ev.cache[a].intersection(&ev.cache[b]).complement());
            return Ok(match diff.pairs().next() {
                None => report(true, None),
                Some((i, j)) => report(
                    false,
                    Some(vec![("x".into(), f.state_name(i).into()), ("y".into(), f.state_name(j).into())]),
                ),
            });
        }
    }
    let n = f.size();
    let mut idx = vec![0usize; vars.len()];
    loop {
        let mut env: Vec<(&str, usize)> = vars.iter().copied().zip(idx.iter().copied()).collect();
        if !ev.eval(&mut env, body)? {
            let w = vars.iter().zip(&idx).map(|(v, &i)| (v.to_string(), f.state_name(i).to_string())).collect();
            return Ok(report(false, Some(w)));
        }
        let mut k = idx.len();
        loop {
            if k == 0 {
                return Ok(report(true, None));
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// `[T is total]`: `forall x, y. (x (T ; 1) . 1' y <=> x 1' y)`.
pub fn total(t: &str) -> RelFormula {
    let lhs = RelTerm::inter(RelTerm::comp(RelTerm::sym(t), RelTerm::One), RelTerm::Ident);
    RelFormula::forall(&["x", "y"], RelFormula::iff(RelFormula::rel("x", lhs, "y"), RelFormula::rel("x", RelTerm::Ident, "y")))
}

/// `[T is functional]`: `forall x, y. (x T^ ; T y => x 1' y)`.
pub fn functional(t: &str) -> RelFormula {
    let lhs = RelTerm::comp(RelTerm::conv(RelTerm::sym(t)), RelTerm::sym(t));
    RelFormula::forall(&["x", "y"], RelFormula::implies(RelFormula::rel("x", lhs, "y"), RelFormula::rel("x", RelTerm::Ident, "y")))
}

/// `[There is a set of initial states]`: `forall x, y. (x St0 y => x 1' y)`.
pub fn initial(st0: &str) -> RelFormula {
    RelFormula::forall(
        &["x", "y"],
        RelFormula::implies(RelFormula::rel("x", RelTerm::sym(st0), "y"), RelFormula::rel("x", RelTerm::Ident, "y")),
    )
}

/// Totality stated through `A ; A^`, as in the dynamic-logic relational theory.
pub fn total_via_converse(a: &str) -> RelFormula {
    let lhs = RelTerm::inter(RelTerm::comp(RelTerm::sym(a), RelTerm::conv(RelTerm::sym(a))), RelTerm::Ident);
    RelFormula::forall(&["x", "y"], RelFormula::iff(RelFormula::rel("x", lhs, "y"), RelFormula::rel("x", RelTerm::Ident, "y")))
}

/// One instance of an axiom of the relational calculus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AxiomInstance {
    pub axiom: &'static str,
    pub formula: String,
    pub passed: bool,
}

/// Axiom instances for Ax.1-Ax.10 (and Ax.6') over the declared symbols.
/// Ax.9's disjunction is truncated at `|base|` factors.
pub fn axiom_instances(f: &FiniteFrame) -> Vec<(&'static str, RelFormula)> {
    use RelFormula as F;
    let syms: Vec<RelTerm> = f.relation_names().map(RelTerm::sym).collect();
    let rel = |x: &str, t: &RelTerm, y: &str| F::rel(x, t.clone(), y);
    let xy = |body| F::forall(&["x", "y"], body);
    let mut out = vec![
        ("Ax.1", xy(F::not(rel("x", &RelTerm::Zero, "y")))),
        ("Ax.3", xy(rel("x", &RelTerm::One, "y"))),
        ("Ax.6", F::forall(&["x"], rel("x", &RelTerm::Ident, "x"))),
    ];
    for r in &syms {
        out.push(("Ax.5", xy(F::iff(rel("x", &RelTerm::compl(r.clone()), "y"), F::not(rel("x", r, "y"))))));
        out.push((
            "Ax.6'",
            F::forall(
                &["x", "y", "z"],
                F::implies(F::And(vec![rel("x", r, "y"), rel("y", &RelTerm::Ident, "z")]), rel("x", r, "z")),
            ),
        ));
        out.push(("Ax.8", xy(F::iff(rel("x", &RelTerm::conv(r.clone()), "y"), rel("y", r, "x")))));
        let powers = (0..=f.size()).map(|i| rel("x", &RelTerm::power(r, i), "y")).collect();
        out.push(("Ax.9", xy(F::iff(rel("x", &RelTerm::closure(r.clone()), "y"), F::Or(powers)))));
    }
    for r in &syms {
        for s in &syms {
            out.push((
                "Ax.2",
                xy(F::iff(rel("x", &RelTerm::union(r.clone(), s.clone()), "y"), F::Or(vec![rel("x", r, "y"), rel("x", s, "y")]))),
            ));
            out.push((
                "Ax.4",
                xy(F::iff(rel("x", &RelTerm::inter(r.clone(), s.clone()), "y"), F::And(vec![rel("x", r, "y"), rel("x", s, "y")]))),
            ));
            out.push((
                "Ax.7",
                xy(F::iff(
                    rel("x", &RelTerm::comp(r.clone(), s.clone()), "y"),
                    F::exists(&["z"], F::And(vec![rel("x", r, "z"), rel("z", s, "y")])),
                )),
            ));
            out.push((
                "Ax.10",
                F::iff(F::Eq(r.clone(), s.clone()), xy(F::iff(rel("x", r, "y"), rel("x", s, "y")))),
            ));
        }
    }
    out.sort_by_key(|(a, _)| axiom_rank(a));
    out
}

fn axiom_rank(a: &str) -> (u32, bool) {
    let prime = a.ends_with('\'');
    let n = a.trim_start_matches("Ax.").trim_end_matches('\'').parse().unwrap_or(0);
    (n, prime)
}

pub fn axioms_selftest(f: &FiniteFrame) -> Result<Vec<AxiomInstance>, RelError> {
    let empty = HashMap::new();
    axiom_instances(f)
        .into_iter()
        .map(|(axiom, phi)| Ok(AxiomInstance { axiom, formula: phi.to_string(), passed: eval_formula(f, &empty, &phi)? }))
        .collect()
}

/// Relation-symbol renaming plus a state map between two frames.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameMap {
    pub rels: Vec<(String, String)>,
    pub states: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphismReport {
    pub verdict: Verdict,
    /// Human-readable description of the first violated condition.
    pub violation: Option<String>,
}

/// Checks that `fm` is a bounded morphism from `src` to `dst`: related
/// states carry equi-derivable theories (under `interp`, or the empty
/// interpretation), and every named relation satisfies the forward and
/// backward conditions.
pub fn check_bounded_morphism(
    src: &FiniteFrame,
    dst: &FiniteFrame,
    fm: &FrameMap,
    interp: Option<&InterpretationTheory>,
    b: &EntailBudget,
) -> Result<MorphismReport, RelError> {
    let relmap: HashMap<&str, &str> = fm.rels.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    for r in src.relation_names() {
        let image = relmap.get(r).ok_or_else(|| RelError::UnmappedSymbol(r.to_string()))?;
        dst.relation(image)?;
    }
    for (a, _) in &fm.rels {
        src.relation(a)?;
    }
    let mut h = vec![None; src.size()];
    for (a, b) in &fm.states {
        h[src.state_index(a)?] = Some(dst.state_index(b)?);
    }
    let h: Vec<usize> = h
        .into_iter()
        .enumerate()
        .map(|(i, t)| t.ok_or_else(|| RelError::UnmappedState(src.state_name(i).to_string())))
        .collect::<Result<_, _>>()?;

    let mut verdict = Verdict::True;
    let mut violation = None;
    let fail = |violation: &mut Option<String>, msg: String| {
        if violation.is_none() {
            *violation = Some(msg);
        }
    };

    // state theories
    let mut prepared = None;
    for (i, &j) in h.iter().enumerate() {
        let (a, c) = (src.theory(i), dst.theory(j));
        if Arc::ptr_eq(a, c) || a.defs() == c.defs() && a.flexible_sig() == c.flexible_sig() {
            continue;
        }
        if a.flexible_sig() != c.flexible_sig() || a.rigid_sig() != c.rigid_sig() {
            return Err(RelError::StateSignatureMismatch);
        }
        if prepared.is_none() {
            let owned;
            let i_th = match interp {
                Some(t) => t,
                None => {
                    owned = mk_interpretation(a.rigid_sig().clone(), vec![], vec![])?;
                    &owned
                }
            };
            prepared = Some(i_th.prepare(a.flexible_sig(), b)?);
        }
        let v = prepared.as_ref().unwrap().equivalent(a, c)?;
        if !v.is_true() {
            fail(
                &mut violation,
                format!("state {} and its image {} are not equi-derivable ({v})", src.state_name(i), dst.state_name(j)),
            );
        }
        verdict = verdict.and(v);
    }

    for (r, rel) in src.relations() {
        let image = dst.relation(relmap[r])?;
        for (s1, s2) in rel.pairs() {
            if !image.contains(h[s1], h[s2]) {
                fail(
                    &mut violation,
                    format!(
                        "forward: {} {r} {} but not {} {} {}",
                        src.state_name(s1),
                        src.state_name(s2),
                        dst.state_name(h[s1]),
                        relmap[r],
                        dst.state_name(h[s2])
                    ),
                );
                verdict = Verdict::False;
            }
        }
        for s1 in 0..src.size() {
            for t in image.successors(h[s1]) {
                if !rel.successors(s1).any(|s2| h[s2] == t) {
                    fail(
                        &mut violation,
                        format!(
                            "backward: {} {} {} but no {r}-successor of {} maps to {}",
                            dst.state_name(h[s1]),
                            relmap[r],
                            dst.state_name(t),
                            src.state_name(s1),
                            dst.state_name(t)
                        ),
                    );
                    verdict = Verdict::False;
                }
            }
        }
    }
    if verdict.is_true() {
        violation = None;
    }
    Ok(MorphismReport { verdict, violation })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(n: usize, rels: &[(&str, &[(usize, usize)])]) -> FiniteFrame {
        FiniteFrame::from_relations(
            n,
            rels.iter().map(|(k, ps)| (k.to_string(), Relation::from_pairs(n, ps.iter().copied()))).collect(),
        )
        .unwrap()
    }

    fn pairs(r: &Relation) -> Vec<(usize, usize)> {
        r.pairs().collect()
    }

    #[test]
    fn constants_evaluate() {
        let f = frame(2, &[("R", &[(0, 1)])]);
        assert!(eval_relterm(&f, &RelTerm::Zero).unwrap().is_empty());
        assert_eq!(eval_relterm(&f, &RelTerm::One).unwrap().len(), 4);
        assert_eq!(pairs(&eval_relterm(&f, &RelTerm::comp(RelTerm::sym("R"), RelTerm::conv(RelTerm::sym("R")))).unwrap()), vec![(0, 0)]);
        assert_eq!(eval_relterm(&f, &RelTerm::sym("Q")), Err(RelError::UnknownRelationSymbol("Q".into())));
    }

    #[test]
    fn closure_examples() {
        let f = frame(3, &[("R", &[(0, 1), (1, 2)])]);
        let c = eval_relterm(&f, &RelTerm::closure(RelTerm::sym("R"))).unwrap();
        assert_eq!(pairs(&c), vec![(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]);
        assert_eq!(closure(&Relation::empty(3)), Relation::identity(3));
        assert_eq!(closure(&Relation::identity(3)), Relation::identity(3));
        assert_eq!(closure(&Relation::from_pairs(2, [(0, 1), (1, 0)])), Relation::full(2));
    }

    #[test]
    fn complement_masks_tail_bits() {
        let r = Relation::empty(70).complement();
        assert_eq!(r.len(), 70 * 70);
        assert_eq!(r.complement(), Relation::empty(70));
    }

    #[test]
    fn formula_examples() {
        let f = frame(3, &[("R", &[])]);
        let empty = HashMap::new();
        assert!(eval_formula(&f, &empty, &RelFormula::forall(&["x"], RelFormula::rel("x", RelTerm::Ident, "x"))).unwrap());
        let ex = RelFormula::exists(&["x", "y"], RelFormula::rel("x", RelTerm::sym("R"), "y"));
        assert!(!eval_formula(&f, &empty, &ex).unwrap());
        assert_eq!(
            eval_formula(&f, &empty, &RelFormula::rel("x", RelTerm::One, "y")),
            Err(RelError::UnboundPointVariable("x".into()))
        );
    }

    #[test]
    fn frame_condition_examples() {
        let f = frame(2, &[("T", &[(0, 1), (1, 0)])]);
        let gamma = vec![("total".to_string(), total("T")), ("functional".to_string(), functional("T"))];
        assert!(verify_frame_conditions(&f, &gamma).unwrap().iter().all(|r| r.passed));

        let g = FiniteFrame::new(vec!["1".into(), "2".into()], vec![("T".into(), vec![("1".into(), "2".into())])]).unwrap();
        let rep = verify_frame_conditions(&g, &[("total".to_string(), total("T"))]).unwrap();
        assert!(!rep[0].passed);
        assert_eq!(rep[0].witness.as_ref().unwrap()[0], ("x".to_string(), "2".to_string()));

        let h = FiniteFrame::new(vec!["1".into(), "2".into()], vec![("St0".into(), vec![("1".into(), "1".into())])]).unwrap();
        assert!(verify_frame_conditions(&h, &[("init".to_string(), initial("St0"))]).unwrap()[0].passed);
    }

    #[test]
    fn macro_text() {
        assert_eq!(total("T").to_string(), "forall x, y. (x (T ; 1) . 1' y <=> x 1' y)");
        assert_eq!(functional("T").to_string(), "forall x, y. (x T^ ; T y => x 1' y)");
        assert_eq!(initial("St0").to_string(), "forall x, y. (x St0 y => x 1' y)");
    }

    #[test]
    fn selftest_on_empty_relation() {
        let f = frame(3, &[("R", &[])]);
        let rep = axioms_selftest(&f).unwrap();
        assert!(rep.iter().all(|a| a.passed));
        assert!(rep.iter().any(|a| a.axiom == "Ax.9"));
        assert_eq!(rep[0].axiom, "Ax.1");
    }

    #[test]
    fn bounded_morphism_examples() {
        let f = frame(2, &[("T", &[(0, 1), (1, 0)])]);
        let id = FrameMap {
            rels: vec![("T".into(), "T".into())],
            states: vec![("s0".into(), "s0".into()), ("s1".into(), "s1".into())],
        };
        let b = EntailBudget::default();
        assert_eq!(check_bounded_morphism(&f, &f, &id, None, &b).unwrap().verdict, Verdict::True);

        // s0 and s1 have the same behaviour and fold onto one state
        let src = frame(3, &[("T", &[(0, 2), (1, 2), (2, 2)])]);
        let dst = frame(2, &[("T", &[(0, 1), (1, 1)])]);
        let fold = FrameMap {
            rels: vec![("T".into(), "T".into())],
            states: vec![("s0".into(), "s0".into()), ("s1".into(), "s0".into()), ("s2".into(), "s1".into())],
        };
        assert_eq!(check_bounded_morphism(&src, &dst, &fold, None, &b).unwrap().verdict, Verdict::True);

        // target adds an edge from h(s0) with no preimage edge
        let src = frame(2, &[("T", &[(1, 1)])]);
        let dst = frame(2, &[("T", &[(0, 1), (1, 1)])]);
        let m = FrameMap {
            rels: vec![("T".into(), "T".into())],
            states: vec![("s0".into(), "s0".into()), ("s1".into(), "s1".into())],
        };
        let rep = check_bounded_morphism(&src, &dst, &m, None, &b).unwrap();
        assert_eq!(rep.verdict, Verdict::False);
        assert!(rep.violation.unwrap().starts_with("backward"));

        let unmapped = FrameMap { rels: vec![], states: id.states.clone() };
        assert_eq!(check_bounded_morphism(&f, &f, &unmapped, None, &b), Err(RelError::UnmappedSymbol("T".into())));
    }
}
