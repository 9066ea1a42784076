//! Satisfaction checkers for LTL, CTL, first-order dynamic logic and
//! FOCTL* over finite frames whose states are [`StateTheory`](crate::theoria::StateTheory) values.
//!
//! Formulae arrive as a shared [`Surface`] syntax. Translating into a
//! logic resolves every state atom over the sum signature (rigid symbols
//! through `in_l`, flexible ones through `in_r`) and expands derived
//! operators into the primitive ones of that logic, so each checker only
//! implements the primitive clauses. Atoms are decided by entailment from
//! the pushout of the interpretation and the current state; verdicts are
//! three-valued and combined with strong Kleene connectives.

use std::collections::{HashMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::entail::{EntailBudget, UnknownReason, Verdict};
use crate::eqcore::{mk_term, EqError, EqSentence, GroundTerm, SumSignature, Sym, SymbolKind, Tag};
use crate::relalg::{functional, total, verify_frame_conditions, FiniteFrame, RelError, Relation};
use crate::theoria::{mk_interpretation, mk_state, InterpretationTheory, PreparedInterpretation, TheoriaError};

/// Name of the transition relation used by the temporal logics.
pub const TRANSITION: &str = "T";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogicError {
    #[error("`{0}` is not a state formula")]
    NotAStateFormula(String),
    #[error("{logic} has no construct `{construct}`")]
    NotInFragment { logic: Logic, construct: String },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("`{0}` is both rigid and flexible; write in_l({0}) or in_r({0})")]
    AmbiguousSymbol(String),
    #[error("ill-formed atom `{atom}`: {error}")]
    IllFormedAtom { atom: String, error: EqError },
    #[error("`{0}` is not a flexible constant")]
    NotFlexibleConstant(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("frame condition `{condition}` fails at {witness}")]
    FrameConditionViolated { condition: String, witness: String },
    #[error("quantifier domain for `{0}` is empty")]
    EmptyQuantDomain(String),
    #[error("states of the frame use different signatures")]
    MixedStateSignatures,
    #[error("path search bound must be at least 1")]
    ZeroBound,
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error(transparent)]
    Theoria(#[from] TheoriaError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Logic {
    Ltl,
    Ctl,
    Fodl,
    CtlStar,
}

impl Logic {
    pub fn name(self) -> &'static str {
        match self {
            Logic::Ltl => "ltl",
            Logic::Ctl => "ctl",
            Logic::Fodl => "pdl",
            Logic::CtlStar => "ctlstar",
        }
    }
}

impl fmt::Display for Logic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unresolved term: a symbol name, optionally with an explicit injection.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RawTerm {
    pub tag: Option<Tag>,
    pub head: String,
    pub args: Vec<RawTerm>,
}

impl RawTerm {
    pub fn name(head: &str) -> Self {
        RawTerm { tag: None, head: head.to_string(), args: Vec::new() }
    }

    pub fn app(head: &str, args: Vec<RawTerm>) -> Self {
        RawTerm { tag: None, head: head.to_string(), args }
    }

    fn is_infix(&self) -> bool {
        self.tag.is_none() && self.args.len() == 2 && crate::eqcore::is_operator_name(&self.head)
    }
}

impl fmt::Display for RawTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infix() {
            let side = |t: &RawTerm| if t.is_infix() { format!("({t})") } else { t.to_string() };
            return write!(f, "{} {} {}", side(&self.args[0]), self.head, side(&self.args[1]));
        }
        match self.tag {
            Some(Tag::Left) => write!(f, "in_l({})", self.head)?,
            Some(Tag::Right) => write!(f, "in_r({})", self.head)?,
            _ => f.write_str(&self.head)?,
        }
        if !self.args.is_empty() {
            let args: Vec<String> = self.args.iter().map(|a| a.to_string()).collect();
            write!(f, "({})", args.join(", "))?;
        }
        Ok(())
    }
}

/// Formula syntax shared by all logics, before resolution.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Surface {
    True,
    False,
    Eq(RawTerm, RawTerm),
    /// Predicate application; the head of the term is the predicate.
    Pred(RawTerm),
    Not(Box<Surface>),
    And(Box<Surface>, Box<Surface>),
    Or(Box<Surface>, Box<Surface>),
    Implies(Box<Surface>, Box<Surface>),
    Iff(Box<Surface>, Box<Surface>),
    Next(Box<Surface>),
    Finally(Box<Surface>),
    Globally(Box<Surface>),
    Until(Box<Surface>, Box<Surface>),
    Release(Box<Surface>, Box<Surface>),
    WeakUntil(Box<Surface>, Box<Surface>),
    StrongRelease(Box<Surface>, Box<Surface>),
    E(Box<Surface>),
    A(Box<Surface>),
    Exists(String, Box<Surface>),
    Forall(String, Box<Surface>),
    Diamond(Program, Box<Surface>),
    Box(Program, Box<Surface>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Program {
    Atom(String),
    Test(Box<Surface>),
    Choice(Box<Program>, Box<Program>),
    Seq(Box<Program>, Box<Program>),
    Star(Box<Program>),
    If(Box<Surface>, Box<Program>, Box<Program>),
    While(Box<Surface>, Box<Program>),
}

fn bx<T>(t: T) -> Box<T> {
    Box::new(t)
}

impl Surface {
    pub fn not(a: Surface) -> Self {
        Surface::Not(bx(a))
    }
    pub fn and(a: Surface, b: Surface) -> Self {
        Surface::And(bx(a), bx(b))
    }
    pub fn or(a: Surface, b: Surface) -> Self {
        Surface::Or(bx(a), bx(b))
    }
    pub fn prop(p: &str) -> Self {
        Surface::Pred(RawTerm::name(p))
    }

    fn is_binary(&self) -> bool {
        matches!(
            self,
            Surface::And(..)
                | Surface::Or(..)
                | Surface::Implies(..)
                | Surface::Iff(..)
                | Surface::Until(..)
                | Surface::Release(..)
                | Surface::WeakUntil(..)
                | Surface::StrongRelease(..)
                | Surface::Exists(..)
                | Surface::Forall(..)
                | Surface::Eq(..)
        ) || matches!(self, Surface::Pred(t) if t.is_infix())
    }

    /// True when no temporal operator occurs outside a path quantifier.
    fn is_state_formula(&self) -> bool {
        match self {
            Surface::True | Surface::False | Surface::Eq(..) | Surface::Pred(_) | Surface::E(_) | Surface::A(_) => true,
            Surface::Not(a) | Surface::Exists(_, a) | Surface::Forall(_, a) => a.is_state_formula(),
            Surface::And(a, b) | Surface::Or(a, b) | Surface::Implies(a, b) | Surface::Iff(a, b) => {
                a.is_state_formula() && b.is_state_formula()
            }
            Surface::Diamond(..) | Surface::Box(..) => true,
            _ => false,
        }
    }
}

fn paren(s: &Surface) -> String {
    if s.is_binary() {
        format!("({s})")
    } else {
        s.to_string()
    }
}

impl fmt::Display for Surface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let unary = |f: &mut fmt::Formatter<'_>, op: &str, a: &Surface| write!(f, "{op} {}", paren(a));
        let binary = |f: &mut fmt::Formatter<'_>, op: &str, a: &Surface, b: &Surface| {
            write!(f, "{} {op} {}", paren(a), paren(b))
        };
        match self {
            Surface::True => f.write_str("true"),
            Surface::False => f.write_str("false"),
            Surface::Eq(l, r) => write!(f, "{l} = {r}"),
            Surface::Pred(t) => write!(f, "{t}"),
            Surface::Not(a) => write!(f, "!{}", paren(a)),
            Surface::And(a, b) => binary(f, "&", a, b),
            Surface::Or(a, b) => binary(f, "|", a, b),
            Surface::Implies(a, b) => binary(f, "=>", a, b),
            Surface::Iff(a, b) => binary(f, "<=>", a, b),
            Surface::Next(a) => unary(f, "X", a),
            Surface::Finally(a) => unary(f, "F", a),
            Surface::Globally(a) => unary(f, "G", a),
            Surface::Until(a, b) => binary(f, "U", a, b),
            Surface::Release(a, b) => binary(f, "R", a, b),
            Surface::WeakUntil(a, b) => binary(f, "W", a, b),
            Surface::StrongRelease(a, b) => binary(f, "M", a, b),
            Surface::E(p) | Surface::A(p) => {
                let q = if matches!(self, Surface::E(_)) { "E" } else { "A" };
                match &**p {
                    Surface::Next(a) => unary(f, &format!("{q}X"), a),
                    Surface::Finally(a) => unary(f, &format!("{q}F"), a),
                    Surface::Globally(a) => unary(f, &format!("{q}G"), a),
                    Surface::Until(a, b) => write!(f, "{q}[{} U {}]", paren(a), paren(b)),
                    other => write!(f, "{q} ({other})"),
                }
            }
            Surface::Exists(x, a) => write!(f, "exists {x}. {}", paren(a)),
            Surface::Forall(x, a) => write!(f, "forall {x}. {}", paren(a)),
            Surface::Diamond(p, a) => write!(f, "<{p}>{}", paren(a)),
            Surface::Box(p, a) => write!(f, "[{p}]{}", paren(a)),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn sub(p: &Program) -> String {
            match p {
                Program::Atom(_) | Program::Test(_) | Program::Star(_) => p.to_string(),
                _ => format!("({p})"),
            }
        }
        match self {
            Program::Atom(a) => f.write_str(a),
            Program::Test(a) => write!(f, "({a})?"),
            Program::Choice(p, q) => write!(f, "{} + {}", sub(p), sub(q)),
            Program::Seq(p, q) => write!(f, "{} ; {}", sub(p), sub(q)),
            Program::Star(p) => write!(f, "{}*", sub(p)),
            Program::If(c, p, q) => write!(f, "if {} then {} else {}", paren(c), sub(p), sub(q)),
            Program::While(c, p) => write!(f, "while {} do {}", paren(c), sub(p)),
        }
    }
}

/// Resolves a raw term over the sum signature.
pub fn resolve_term(sum: &SumSignature, t: &RawTerm) -> Result<GroundTerm, LogicError> {
    let args = t.args.iter().map(|a| resolve_term(sum, a)).collect::<Result<Vec<_>, _>>()?;
    let head = resolve_symbol(sum, t, false)?;
    mk_term(&sum.combined, &head, args).map_err(|error| LogicError::IllFormedAtom { atom: t.to_string(), error })
}

fn resolve_symbol(sum: &SumSignature, t: &RawTerm, predicate: bool) -> Result<Sym, LogicError> {
    let fits = |tag: Tag| {
        let s = Sym::tagged(tag, &t.head);
        match sum.combined.lookup(&s) {
            Some((SymbolKind::Predicate, _)) => predicate,
            Some(_) => !predicate,
            None => false,
        }
    };
    match t.tag {
        Some(tag) => Ok(Sym::tagged(tag, &t.head)),
        None => match (fits(Tag::Left), fits(Tag::Right)) {
            (true, true) => Err(LogicError::AmbiguousSymbol(t.head.clone())),
            (true, false) => Ok(Sym::tagged(Tag::Left, &t.head)),
            (false, true) => Ok(Sym::tagged(Tag::Right, &t.head)),
            (false, false) => Err(LogicError::UnknownSymbol(t.head.clone())),
        },
    }
}

/// The state-sublanguage translation: an atom becomes a sentence of the
/// sum signature. Propositions are nullary flexible predicates.
pub fn rho_translate(logic: Logic, sum: &SumSignature, atom: &Surface) -> Result<EqSentence, LogicError> {
    let _ = logic;
    let s = match atom {
        Surface::Eq(l, r) => EqSentence::eq(resolve_term(sum, l)?, resolve_term(sum, r)?),
        Surface::Pred(t) => {
            let head = resolve_symbol(sum, t, true)?;
            let args = t.args.iter().map(|a| resolve_term(sum, a)).collect::<Result<Vec<_>, _>>()?;
            EqSentence::pred(head, args)
        }
        other => return Err(LogicError::NotAStateFormula(other.to_string())),
    };
    s.check(&sum.combined).map_err(|error| LogicError::IllFormedAtom { atom: atom.to_string(), error })?;
    Ok(s)
}

/// LTL over state atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ltl {
    True,
    Atom(EqSentence),
    Not(Box<Ltl>),
    Or(Box<Ltl>, Box<Ltl>),
    X(Box<Ltl>),
    U(Box<Ltl>, Box<Ltl>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Ctl {
    True,
    Atom(EqSentence),
    Not(Box<Ctl>),
    Or(Box<Ctl>, Box<Ctl>),
    EX(Box<Ctl>),
    EG(Box<Ctl>),
    EU(Box<Ctl>, Box<Ctl>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Fodl {
    True,
    Atom(EqSentence),
    Not(Box<Fodl>),
    Or(Box<Fodl>, Box<Fodl>),
    Exists(Sym, Box<Fodl>),
    Diamond(Prog, Box<Fodl>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Prog {
    Atom(String),
    Test(Box<Fodl>),
    Choice(Box<Prog>, Box<Prog>),
    Seq(Box<Prog>, Box<Prog>),
    Star(Box<Prog>),
}

/// FOCTL* state formulae.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StarState {
    True,
    Atom(EqSentence),
    Not(Box<StarState>),
    Or(Box<StarState>, Box<StarState>),
    Exists(Sym, Box<StarState>),
    E(Box<StarPath>),
}

/// FOCTL* path formulae.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum StarPath {
    State(Box<StarState>),
    Not(Box<StarPath>),
    Or(Box<StarPath>, Box<StarPath>),
    X(Box<StarPath>),
    U(Box<StarPath>, Box<StarPath>),
}

/// Boolean and temporal connectives shared by the primitive syntaxes, so
/// derived operators are expanded once for every logic.
trait Connectives: Sized + Clone {
    fn tt() -> Self;
    fn neg(self) -> Self;
    fn disj(self, other: Self) -> Self;
    fn ff() -> Self {
        Self::tt().neg()
    }
    fn conj(self, other: Self) -> Self {
        self.neg().disj(other.neg()).neg()
    }
    fn imp(self, other: Self) -> Self {
        self.neg().disj(other)
    }
    fn iff(self, other: Self) -> Self {
        self.clone().imp(other.clone()).conj(other.imp(self))
    }
}

trait Temporal: Connectives {
    fn next(self) -> Self;
    fn until(self, other: Self) -> Self;
    /// `F φ = true U φ`
    fn eventually(self) -> Self {
        Self::tt().until(self)
    }
    /// `G φ = ¬F¬φ`
    fn always(self) -> Self {
        self.neg().eventually().neg()
    }
    /// `φ R ψ = ¬(¬φ U ¬ψ)`
    fn release(self, other: Self) -> Self {
        self.neg().until(other.neg()).neg()
    }
    /// `φ W ψ = (φ U ψ) ∨ G φ`
    fn weak_until(self, other: Self) -> Self {
        self.clone().until(other).disj(self.always())
    }
    /// `φ M ψ = (φ R ψ) ∨ F φ`
    fn strong_release(self, other: Self) -> Self {
        self.clone().release(other).disj(self.eventually())
    }
}

macro_rules! connectives {
    ($t:ident) => {
        impl Connectives for $t {
            fn tt() -> Self {
                $t::True
            }
            fn neg(self) -> Self {
                match self {
                    $t::Not(a) => *a,
                    a => $t::Not(bx(a)),
                }
            }
            fn disj(self, other: Self) -> Self {
                $t::Or(bx(self), bx(other))
            }
        }
    };
}
connectives!(Ltl);
connectives!(Ctl);
connectives!(Fodl);
connectives!(StarState);

impl Connectives for StarPath {
    fn tt() -> Self {
        StarPath::State(bx(StarState::True))
    }
    fn neg(self) -> Self {
        match self {
            StarPath::Not(a) => *a,
            a => StarPath::Not(bx(a)),
        }
    }
    fn disj(self, other: Self) -> Self {
        StarPath::Or(bx(self), bx(other))
    }
}

impl Temporal for Ltl {
    fn next(self) -> Self {
        Ltl::X(bx(self))
    }
    fn until(self, other: Self) -> Self {
        Ltl::U(bx(self), bx(other))
    }
}

impl Temporal for StarPath {
    fn next(self) -> Self {
        StarPath::X(bx(self))
    }
    fn until(self, other: Self) -> Self {
        StarPath::U(bx(self), bx(other))
    }
}

fn boolean<T: Connectives>(
    s: &Surface,
    rec: &mut impl FnMut(&Surface) -> Result<T, LogicError>,
) -> Option<Result<T, LogicError>> {
    let two = |a: &Surface, b: &Surface, rec: &mut dyn FnMut(&Surface) -> Result<T, LogicError>| -> Result<(T, T), LogicError> {
        Ok((rec(a)?, rec(b)?))
    };
    Some(match s {
        Surface::True => Ok(T::tt()),
        Surface::False => Ok(T::ff()),
        Surface::Not(a) => rec(a).map(T::neg),
        Surface::Or(a, b) => two(a, b, rec).map(|(a, b)| a.disj(b)),
        Surface::And(a, b) => two(a, b, rec).map(|(a, b)| a.conj(b)),
        Surface::Implies(a, b) => two(a, b, rec).map(|(a, b)| a.imp(b)),
        Surface::Iff(a, b) => two(a, b, rec).map(|(a, b)| a.iff(b)),
        _ => return None,
    })
}

fn temporal<T: Temporal>(
    s: &Surface,
    rec: &mut impl FnMut(&Surface) -> Result<T, LogicError>,
) -> Option<Result<T, LogicError>> {
    let mut two = |a: &Surface, b: &Surface| -> Result<(T, T), LogicError> { Ok((rec(a)?, rec(b)?)) };
    Some(match s {
        Surface::Until(a, b) => two(a, b).map(|(a, b)| a.until(b)),
        Surface::Release(a, b) => two(a, b).map(|(a, b)| a.release(b)),
        Surface::WeakUntil(a, b) => two(a, b).map(|(a, b)| a.weak_until(b)),
        Surface::StrongRelease(a, b) => two(a, b).map(|(a, b)| a.strong_release(b)),
        Surface::Next(a) => rec(a).map(T::next),
        Surface::Finally(a) => rec(a).map(T::eventually),
        Surface::Globally(a) => rec(a).map(T::always),
        _ => return None,
    })
}

fn unsupported<T>(logic: Logic, s: &Surface) -> Result<T, LogicError> {
    let construct = match s {
        Surface::E(_) | Surface::A(_) => "path quantifier",
        Surface::Exists(..) | Surface::Forall(..) => "first-order quantifier",
        Surface::Diamond(..) | Surface::Box(..) => "program modality",
        Surface::Next(_) | Surface::Finally(_) | Surface::Globally(_) => "linear-time operator",
        _ => "temporal operator",
    };
    Err(LogicError::NotInFragment { logic, construct: format!("{construct} in `{s}`") })
}

pub fn to_ltl(sum: &SumSignature, s: &Surface) -> Result<Ltl, LogicError> {
    let mut rec = |x: &Surface| to_ltl(sum, x);
    if let Some(r) = boolean(s, &mut rec) {
        return r;
    }
    if let Some(r) = temporal(s, &mut rec) {
        return r;
    }
    match s {
        Surface::Eq(..) | Surface::Pred(_) => Ok(Ltl::Atom(rho_translate(Logic::Ltl, sum, s)?)),
        other => unsupported(Logic::Ltl, other),
    }
}

pub fn to_ctl(sum: &SumSignature, s: &Surface) -> Result<Ctl, LogicError> {
    let rec = |x: &Surface| to_ctl(sum, x);
    if let Some(r) = boolean(s, &mut |x: &Surface| to_ctl(sum, x)) {
        return r;
    }
    let eu = |a: Ctl, b: Ctl| Ctl::EU(bx(a), bx(b));
    let eg = |a: Ctl| Ctl::EG(bx(a));
    match s {
        Surface::Eq(..) | Surface::Pred(_) => Ok(Ctl::Atom(rho_translate(Logic::Ctl, sum, s)?)),
        Surface::E(p) => match &**p {
            Surface::Next(a) => Ok(Ctl::EX(bx(rec(a)?))),
            Surface::Globally(a) => Ok(eg(rec(a)?)),
            Surface::Until(a, b) => Ok(eu(rec(a)?, rec(b)?)),
            // EF φ = E[true U φ]
            Surface::Finally(a) => Ok(eu(Ctl::True, rec(a)?)),
            other => unsupported(Logic::Ctl, other),
        },
        Surface::A(p) => match &**p {
            // AX φ = ¬EX¬φ
            Surface::Next(a) => Ok(Ctl::EX(bx(rec(a)?.neg())).neg()),
            // AF φ = ¬EG¬φ
            Surface::Finally(a) => Ok(eg(rec(a)?.neg()).neg()),
            // AG φ = ¬EF¬φ
            Surface::Globally(a) => Ok(eu(Ctl::True, rec(a)?.neg()).neg()),
            // A[φ U ψ] = ¬(E[¬ψ U ¬(φ ∨ ψ)] ∨ EG ¬ψ)
            Surface::Until(a, b) => {
                let (a, b) = (rec(a)?, rec(b)?);
                Ok(eu(b.clone().neg(), a.disj(b.clone()).neg()).disj(eg(b.neg())).neg())
            }
            other => unsupported(Logic::Ctl, other),
        },
        other => unsupported(Logic::Ctl, other),
    }
}

fn flexible_constant(sum: &SumSignature, x: &str) -> Result<Sym, LogicError> {
    match sum.right.lookup(&Sym::new(x)) {
        Some((SymbolKind::Constant, _)) => Ok(Sym::tagged(Tag::Right, x)),
        _ => Err(LogicError::NotFlexibleConstant(x.to_string())),
    }
}

pub fn to_fodl(sum: &SumSignature, s: &Surface) -> Result<Fodl, LogicError> {
    if let Some(r) = boolean(s, &mut |x: &Surface| to_fodl(sum, x)) {
        return r;
    }
    match s {
        Surface::Eq(..) | Surface::Pred(_) => Ok(Fodl::Atom(rho_translate(Logic::Fodl, sum, s)?)),
        Surface::Exists(x, a) => Ok(Fodl::Exists(flexible_constant(sum, x)?, bx(to_fodl(sum, a)?))),
        Surface::Forall(x, a) => Ok(Fodl::Exists(flexible_constant(sum, x)?, bx(to_fodl(sum, a)?.neg())).neg()),
        Surface::Diamond(p, a) => Ok(Fodl::Diamond(to_prog(sum, p)?, bx(to_fodl(sum, a)?))),
        // [P]φ = ¬<P>¬φ
        Surface::Box(p, a) => Ok(Fodl::Diamond(to_prog(sum, p)?, bx(to_fodl(sum, a)?.neg())).neg()),
        other => unsupported(Logic::Fodl, other),
    }
}

pub fn to_prog(sum: &SumSignature, p: &Program) -> Result<Prog, LogicError> {
    let test = |c: &Surface| -> Result<Prog, LogicError> { Ok(Prog::Test(bx(to_fodl(sum, c)?))) };
    let seq = |a: Prog, b: Prog| Prog::Seq(bx(a), bx(b));
    Ok(match p {
        Program::Atom(a) => Prog::Atom(a.clone()),
        Program::Test(c) => test(c)?,
        Program::Choice(a, b) => Prog::Choice(bx(to_prog(sum, a)?), bx(to_prog(sum, b)?)),
        Program::Seq(a, b) => seq(to_prog(sum, a)?, to_prog(sum, b)?),
        Program::Star(a) => Prog::Star(bx(to_prog(sum, a)?)),
        // if α then P else Q = (α?;P) + ((¬α)?;Q)
        Program::If(c, a, b) => Prog::Choice(
            bx(seq(test(c)?, to_prog(sum, a)?)),
            bx(seq(test(&Surface::not((**c).clone()))?, to_prog(sum, b)?)),
        ),
        // while α do P = (α?;P)*;(¬α)?
        Program::While(c, a) => seq(
            Prog::Star(bx(seq(test(c)?, to_prog(sum, a)?))),
            test(&Surface::not((**c).clone()))?,
        ),
    })
}

pub fn to_ctlstar(sum: &SumSignature, s: &Surface) -> Result<StarState, LogicError> {
    if let Some(r) = boolean(s, &mut |x: &Surface| to_ctlstar(sum, x)) {
        return r;
    }
    match s {
        Surface::Eq(..) | Surface::Pred(_) => Ok(StarState::Atom(rho_translate(Logic::CtlStar, sum, s)?)),
        Surface::Exists(x, a) => Ok(StarState::Exists(flexible_constant(sum, x)?, bx(to_ctlstar(sum, a)?))),
        Surface::Forall(x, a) => {
            Ok(StarState::Exists(flexible_constant(sum, x)?, bx(to_ctlstar(sum, a)?.neg())).neg())
        }
        Surface::E(p) => Ok(StarState::E(bx(to_star_path(sum, p)?))),
        // A φ = ¬E¬φ
        Surface::A(p) => Ok(StarState::E(bx(to_star_path(sum, p)?.neg())).neg()),
        other => unsupported(Logic::CtlStar, other),
    }
}

fn to_star_path(sum: &SumSignature, s: &Surface) -> Result<StarPath, LogicError> {
    if s.is_state_formula() {
        return Ok(StarPath::State(bx(to_ctlstar(sum, s)?)));
    }
    let mut rec = |x: &Surface| to_star_path(sum, x);
    if let Some(r) = boolean(s, &mut rec) {
        return r;
    }
    if let Some(r) = temporal(s, &mut rec) {
        return r;
    }
    unsupported(Logic::CtlStar, s)
}

/// Ultimately periodic path `prefix · cycle^ω` of state indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LassoPath {
    pub prefix: Vec<usize>,
    pub cycle: Vec<usize>,
}

impl LassoPath {
    pub fn len(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycle.is_empty()
    }

    pub fn state(&self, i: usize) -> usize {
        if i < self.prefix.len() {
            self.prefix[i]
        } else {
            self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }

    fn succ(&self, i: usize) -> usize {
        if i + 1 < self.len() {
            i + 1
        } else {
            self.prefix.len()
        }
    }

    pub fn validate(&self, f: &FiniteFrame) -> Result<(), LogicError> {
        if self.cycle.is_empty() {
            return Err(LogicError::InvalidPath("empty cycle".into()));
        }
        if let Some(&s) = self.prefix.iter().chain(&self.cycle).find(|&&s| s >= f.size()) {
            return Err(LogicError::InvalidPath(format!("state index {s} outside the frame")));
        }
        let t = f.relation(TRANSITION)?;
        for i in 0..self.len() {
            let (a, b) = (self.state(i), self.state(self.succ(i)));
            if !t.contains(a, b) {
                return Err(LogicError::InvalidPath(format!(
                    "{} -> {} is not a transition",
                    f.state_name(a),
                    f.state_name(b)
                )));
            }
        }
        Ok(())
    }

    pub fn display(&self, f: &FiniteFrame) -> String {
        let names = |xs: &[usize]| xs.iter().map(|&i| f.state_name(i)).collect::<Vec<_>>().join(" ");
        format!("[{}] ({})^w", names(&self.prefix), names(&self.cycle))
    }
}

/// Per-flexible-constant ranges for first-order quantifiers.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QuantDomain {
    pub ranges: IndexMap<String, Vec<GroundTerm>>,
}

fn require_conditions(f: &FiniteFrame, conds: Vec<(String, crate::relalg::RelFormula)>) -> Result<(), LogicError> {
    for rep in verify_frame_conditions(f, &conds)? {
        if !rep.passed {
            let witness = rep
                .witness
                .unwrap_or_default()
                .iter()
                .map(|(v, s)| format!("{v}={s}"))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(LogicError::FrameConditionViolated { condition: rep.name, witness });
        }
    }
    Ok(())
}

fn require_total(f: &FiniteFrame) -> Result<(), LogicError> {
    f.relation(TRANSITION)?;
    require_conditions(f, vec![(format!("{TRANSITION} is total"), total(TRANSITION))])
}

fn require_total_functional(f: &FiniteFrame) -> Result<(), LogicError> {
    require_total(f)?;
    require_conditions(f, vec![(format!("{TRANSITION} is functional"), functional(TRANSITION))])
}

/// The unique lasso obtained by iterating a total functional `T`.
pub fn path_from(f: &FiniteFrame, start: usize) -> Result<LassoPath, LogicError> {
    require_total_functional(f)?;
    let t = f.relation(TRANSITION)?;
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut seq = Vec::new();
    let mut cur = start;
    while let std::collections::hash_map::Entry::Vacant(e) = seen.entry(cur) {
        e.insert(seq.len());
        seq.push(cur);
        cur = t.successors(cur).next().expect("total");
    }
    let k = seen[&cur];
    Ok(LassoPath { prefix: seq[..k].to_vec(), cycle: seq[k..].to_vec() })
}

type Vals = Vec<Verdict>;

/// An interpretation together with a frame, with atom verdicts computed on
/// demand and cached per query.
pub struct Model<'a> {
    frame: &'a FiniteFrame,
    budget: EntailBudget,
    prepared: PreparedInterpretation,
    atoms: HashMap<EqSentence, Vals>,
}

impl<'a> Model<'a> {
    pub fn new(i: &InterpretationTheory, frame: &'a FiniteFrame, b: &EntailBudget) -> Result<Self, LogicError> {
        let first = frame.theory(0);
        for k in 1..frame.size() {
            let s = frame.theory(k);
            if s.flexible_sig() != first.flexible_sig() || s.rigid_sig() != first.rigid_sig() {
                return Err(LogicError::MixedStateSignatures);
            }
        }
        if i.rigid_sig() != first.rigid_sig() {
            return Err(TheoriaError::SignatureMismatch.into());
        }
        let prepared = i.prepare(first.flexible_sig(), b)?;
        Ok(Model { frame, budget: *b, prepared, atoms: HashMap::new() })
    }

    /// Model with the empty interpretation over the states' rigid signature.
    pub fn uninterpreted(frame: &'a FiniteFrame, b: &EntailBudget) -> Result<Self, LogicError> {
        let i = mk_interpretation(frame.theory(0).rigid_sig().clone(), vec![], vec![])?;
        Model::new(&i, frame, b)
    }

    pub fn sum(&self) -> &SumSignature {
        self.prepared.sum()
    }

    pub fn frame(&self) -> &FiniteFrame {
        self.frame
    }

    pub fn budget(&self) -> &EntailBudget {
        &self.budget
    }

    /// Decides all `atoms` at every state, one closure per state.
    fn load_atoms(&mut self, atoms: Vec<EqSentence>) -> Result<(), LogicError> {
        let fresh: Vec<EqSentence> = {
            let mut seen = HashSet::new();
            atoms.into_iter().filter(|a| !self.atoms.contains_key(a) && seen.insert(a.clone())).collect()
        };
        if fresh.is_empty() {
            return Ok(());
        }
        let mut cols: Vec<Vals> = vec![Vec::with_capacity(self.frame.size()); fresh.len()];
        for s in 0..self.frame.size() {
            let vs = self.prepared.with_state(self.frame.theory(s))?.entails_many(&fresh).map_err(TheoriaError::from)?;
            for (col, v) in cols.iter_mut().zip(vs) {
                col.push(v);
            }
        }
        self.atoms.extend(fresh.into_iter().zip(cols));
        Ok(())
    }

    /// Verdict of a state atom at every state.
    pub fn atom(&mut self, a: &EqSentence) -> Result<Vals, LogicError> {
        self.load_atoms(vec![a.clone()])?;
        Ok(self.atoms[a].clone())
    }

    /// `variants[s][t]`: whether `t` is an `x`-variant of `s` with the value
    /// of `x` drawn from `qd`.
    fn variants(&self, x: &Sym, qd: &QuantDomain) -> Result<Vec<Vals>, LogicError> {
        let range = qd.ranges.get(x.name()).filter(|r| !r.is_empty()).ok_or_else(|| LogicError::EmptyQuantDomain(x.name().to_string()))?;
        let n = self.frame.size();
        let plain = x.with_tag(Tag::Plain);
        let goals: Vec<EqSentence> = range
            .iter()
            .map(|t| EqSentence::eq(GroundTerm::constant(x.clone()), t.retag(Tag::Left)))
            .collect();
        let mut in_range = Vec::with_capacity(n);
        let mut others = Vec::with_capacity(n);
        for s in 0..n {
            let th = self.frame.theory(s);
            in_range.push(Verdict::any(self.prepared.with_state(th)?.entails_many(&goals).map_err(TheoriaError::from)?));
            let defs = th.defs().iter().filter(|d| *d.symbol() != plain).cloned().collect();
            others.push(mk_state(th.flexible_sig().clone(), th.rigid_sig().clone(), defs)?);
        }
        let mut out = vec![vec![Verdict::False; n]; n];
        for s in 0..n {
            for t in 0..n {
                let agree = if s == t { Verdict::True } else { self.prepared.equivalent(&others[s], &others[t])? };
                out[s][t] = agree.and(in_range[t]);
            }
        }
        Ok(out)
    }
}

fn pointwise(a: &Vals, b: &Vals, f: impl Fn(Verdict, Verdict) -> Verdict) -> Vals {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn negate(a: Vals) -> Vals {
    a.into_iter().map(Verdict::not).collect()
}

/// Least fixpoint of `Z = b ∨ (a ∧ Z∘succ)` over positions, from `False`.
fn until_lfp(a: &Vals, b: &Vals, succs: &dyn Fn(usize) -> Vec<usize>) -> Vals {
    let mut z = vec![Verdict::False; a.len()];
    loop {
        let next: Vals = (0..a.len()).map(|i| b[i].or(a[i].and(Verdict::any(succs(i).into_iter().map(|j| z[j]))))).collect();
        if next == z {
            return z;
        }
        z = next;
    }
}

/// Greatest fixpoint of `Z = a ∧ EX Z`, from `True`.
fn globally_gfp(a: &Vals, t: &Relation) -> Vals {
    let mut z = vec![Verdict::True; a.len()];
    loop {
        let next: Vals = (0..a.len()).map(|i| a[i].and(Verdict::any(t.successors(i).map(|j| z[j])))).collect();
        if next == z {
            return z;
        }
        z = next;
    }
}

fn ltl_atoms(phi: &Ltl, out: &mut Vec<EqSentence>) {
    match phi {
        Ltl::True => {}
        Ltl::Atom(a) => out.push(a.clone()),
        Ltl::Not(a) | Ltl::X(a) => ltl_atoms(a, out),
        Ltl::Or(a, b) | Ltl::U(a, b) => {
            ltl_atoms(a, out);
            ltl_atoms(b, out);
        }
    }
}

fn ltl_positions(m: &Model, pi: &LassoPath, phi: &Ltl) -> Vals {
    let n = pi.len();
    match phi {
        Ltl::True => vec![Verdict::True; n],
        Ltl::Atom(a) => (0..n).map(|i| m.atoms[a][pi.state(i)]).collect(),
        Ltl::Not(a) => negate(ltl_positions(m, pi, a)),
        Ltl::Or(a, b) => pointwise(&ltl_positions(m, pi, a), &ltl_positions(m, pi, b), Verdict::or),
        Ltl::X(a) => {
            let v = ltl_positions(m, pi, a);
            (0..n).map(|i| v[pi.succ(i)]).collect()
        }
        Ltl::U(a, b) => until_lfp(&ltl_positions(m, pi, a), &ltl_positions(m, pi, b), &|i| vec![pi.succ(i)]),
    }
}

/// Evaluates `phi` at position 0 of the lasso `pi`.
pub fn ltl_check_in(m: &mut Model, pi: &LassoPath, phi: &Ltl) -> Result<Verdict, LogicError> {
    require_total_functional(m.frame)?;
    pi.validate(m.frame)?;
    let mut atoms = Vec::new();
    ltl_atoms(phi, &mut atoms);
    m.load_atoms(atoms)?;
    Ok(ltl_positions(m, pi, phi)[0])
}

pub fn ltl_check(
    i: &InterpretationTheory,
    f: &FiniteFrame,
    pi: &LassoPath,
    phi: &Ltl,
    b: &EntailBudget,
) -> Result<Verdict, LogicError> {
    ltl_check_in(&mut Model::new(i, f, b)?, pi, phi)
}

fn ctl_atoms(phi: &Ctl, out: &mut Vec<EqSentence>) {
    match phi {
        Ctl::True => {}
        Ctl::Atom(a) => out.push(a.clone()),
        Ctl::Not(a) | Ctl::EX(a) | Ctl::EG(a) => ctl_atoms(a, out),
        Ctl::Or(a, b) | Ctl::EU(a, b) => {
            ctl_atoms(a, out);
            ctl_atoms(b, out);
        }
    }
}

fn ctl_states(m: &Model, t: &Relation, phi: &Ctl) -> Vals {
    let n = m.frame.size();
    match phi {
        Ctl::True => vec![Verdict::True; n],
        Ctl::Atom(a) => m.atoms[a].clone(),
        Ctl::Not(a) => negate(ctl_states(m, t, a)),
        Ctl::Or(a, b) => pointwise(&ctl_states(m, t, a), &ctl_states(m, t, b), Verdict::or),
        Ctl::EX(a) => {
            let v = ctl_states(m, t, a);
            (0..n).map(|s| Verdict::any(t.successors(s).map(|j| v[j]))).collect()
        }
        Ctl::EG(a) => globally_gfp(&ctl_states(m, t, a), t),
        Ctl::EU(a, b) => {
            until_lfp(&ctl_states(m, t, a), &ctl_states(m, t, b), &|s| t.successors(s).collect())
        }
    }
}

/// Verdicts of `phi` at every state.
pub fn ctl_check_all(m: &mut Model, phi: &Ctl) -> Result<Vals, LogicError> {
    require_total(m.frame)?;
    let mut atoms = Vec::new();
    ctl_atoms(phi, &mut atoms);
    m.load_atoms(atoms)?;
    let t = m.frame.relation(TRANSITION)?.clone();
    Ok(ctl_states(m, &t, phi))
}

pub fn ctl_check(i: &InterpretationTheory, f: &FiniteFrame, s: usize, phi: &Ctl, b: &EntailBudget) -> Result<Verdict, LogicError> {
    Ok(ctl_check_all(&mut Model::new(i, f, b)?, phi)?[s])
}

fn fodl_atoms(phi: &Fodl, out: &mut Vec<EqSentence>) {
    match phi {
        Fodl::True => {}
        Fodl::Atom(a) => out.push(a.clone()),
        Fodl::Not(a) | Fodl::Exists(_, a) => fodl_atoms(a, out),
        Fodl::Or(a, b) => {
            fodl_atoms(a, out);
            fodl_atoms(b, out);
        }
        Fodl::Diamond(p, a) => {
            prog_atoms(p, out);
            fodl_atoms(a, out);
        }
    }
}

fn prog_atoms(p: &Prog, out: &mut Vec<EqSentence>) {
    match p {
        Prog::Atom(_) => {}
        Prog::Test(a) => fodl_atoms(a, out),
        Prog::Choice(a, b) | Prog::Seq(a, b) => {
            prog_atoms(a, out);
            prog_atoms(b, out);
        }
        Prog::Star(a) => prog_atoms(a, out),
    }
}

/// Program meaning as a pair of relations: pairs certainly in it, and pairs
/// possibly in it (differing only through tests with unknown verdicts).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProgRel {
    pub must: Relation,
    pub may: Relation,
}

struct FodlCtx<'m, 'a> {
    m: &'m Model<'a>,
    variants: HashMap<Sym, Vec<Vals>>,
}

impl FodlCtx<'_, '_> {
    fn states(&self, phi: &Fodl) -> Result<Vals, LogicError> {
        let n = self.m.frame.size();
        Ok(match phi {
            Fodl::True => vec![Verdict::True; n],
            Fodl::Atom(a) => self.m.atoms[a].clone(),
            Fodl::Not(a) => negate(self.states(a)?),
            Fodl::Or(a, b) => pointwise(&self.states(a)?, &self.states(b)?, Verdict::or),
            Fodl::Exists(x, a) => {
                let v = self.states(a)?;
                let var = &self.variants[x];
                (0..n).map(|s| Verdict::any((0..n).map(|t| var[s][t].and(v[t])))).collect()
            }
            Fodl::Diamond(p, a) => {
                let r = self.prog(p)?;
                let v = self.states(a)?;
                (0..n)
                    .map(|s| {
                        let sure = r.must.successors(s).any(|t| v[t].is_true());
                        let open = r.may.successors(s).any(|t| !v[t].is_false());
                        match (sure, open) {
                            (true, _) => Verdict::True,
                            (false, false) => Verdict::False,
                            (false, true) => {
                                let reasons = r.may.successors(s).filter_map(|t| v[t].reason()).min();
                                Verdict::Unknown(reasons.unwrap_or(UnknownReason::BudgetExhausted))
                            }
                        }
                    })
                    .collect()
            }
        })
    }

    fn prog(&self, p: &Prog) -> Result<ProgRel, LogicError> {
        let n = self.m.frame.size();
        Ok(match p {
            Prog::Atom(a) => {
                let r = self.m.frame.relation(a)?.clone();
                ProgRel { must: r.clone(), may: r }
            }
            Prog::Test(c) => {
                let v = self.states(c)?;
                ProgRel {
                    must: Relation::from_pairs(n, (0..n).filter(|&s| v[s].is_true()).map(|s| (s, s))),
                    may: Relation::from_pairs(n, (0..n).filter(|&s| !v[s].is_false()).map(|s| (s, s))),
                }
            }
            Prog::Choice(a, b) => {
                let (a, b) = (self.prog(a)?, self.prog(b)?);
                ProgRel { must: a.must.union(&b.must), may: a.may.union(&b.may) }
            }
            Prog::Seq(a, b) => {
                let (a, b) = (self.prog(a)?, self.prog(b)?);
                ProgRel { must: a.must.compose(&b.must), may: a.may.compose(&b.may) }
            }
            Prog::Star(a) => {
                let a = self.prog(a)?;
                ProgRel { must: a.must.closure(), may: a.may.closure() }
            }
        })
    }
}

fn fodl_quantified(phi: &Fodl, out: &mut Vec<Sym>) {
    match phi {
        Fodl::True | Fodl::Atom(_) => {}
        Fodl::Not(a) => fodl_quantified(a, out),
        Fodl::Or(a, b) => {
            fodl_quantified(a, out);
            fodl_quantified(b, out);
        }
        Fodl::Exists(x, a) => {
            out.push(x.clone());
            fodl_quantified(a, out);
        }
        Fodl::Diamond(p, a) => {
            prog_quantified(p, out);
            fodl_quantified(a, out);
        }
    }
}

fn prog_quantified(p: &Prog, out: &mut Vec<Sym>) {
    match p {
        Prog::Atom(_) => {}
        Prog::Test(a) => fodl_quantified(a, out),
        Prog::Choice(a, b) | Prog::Seq(a, b) => {
            prog_quantified(a, out);
            prog_quantified(b, out);
        }
        Prog::Star(a) => prog_quantified(a, out),
    }
}

fn variant_table(m: &Model, xs: Vec<Sym>, qd: &QuantDomain) -> Result<HashMap<Sym, Vec<Vals>>, LogicError> {
    let mut out = HashMap::new();
    for x in xs {
        if !out.contains_key(&x) {
            let v = m.variants(&x, qd)?;
            out.insert(x, v);
        }
    }
    Ok(out)
}

pub fn fodl_check_all(m: &mut Model, phi: &Fodl, qd: &QuantDomain) -> Result<Vals, LogicError> {
    let mut atoms = Vec::new();
    fodl_atoms(phi, &mut atoms);
    m.load_atoms(atoms)?;
    let mut xs = Vec::new();
    fodl_quantified(phi, &mut xs);
    let variants = variant_table(m, xs, qd)?;
    FodlCtx { m, variants }.states(phi)
}

/// Meaning of a program at the frame (tests evaluated under `m`).
pub fn fodl_program(m: &mut Model, p: &Prog, qd: &QuantDomain) -> Result<ProgRel, LogicError> {
    let mut atoms = Vec::new();
    prog_atoms(p, &mut atoms);
    m.load_atoms(atoms)?;
    let mut xs = Vec::new();
    prog_quantified(p, &mut xs);
    let variants = variant_table(m, xs, qd)?;
    FodlCtx { m, variants }.prog(p)
}

pub fn fodl_check(
    i: &InterpretationTheory,
    f: &FiniteFrame,
    s: usize,
    phi: &Fodl,
    qd: &QuantDomain,
    b: &EntailBudget,
) -> Result<Verdict, LogicError> {
    Ok(fodl_check_all(&mut Model::new(i, f, b)?, phi, qd)?[s])
}

/// Path formula flattened bottom-up; leaves index state-formula vectors.
#[derive(Clone, Copy, Debug)]
enum PNode {
    Leaf(usize),
    Not(usize),
    Or(usize, usize),
    X(usize),
    U(usize, usize),
}

/// Walk summaries are tabulated over 3^k inputs; beyond this many inputs
/// cycles are enumerated one by one instead.
const MAX_SUMMARY_INPUTS: usize = 6;

/// Entries of the successor profile that `step_back` reads.
fn needed_inputs(nodes: &[PNode]) -> Vec<usize> {
    let mut out: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| match *n {
            PNode::X(a) => Some(a),
            PNode::U(..) => Some(i),
            _ => None,
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

struct StarCtx<'m, 'a> {
    m: &'m Model<'a>,
    t: Relation,
    bound: usize,
    variants: HashMap<Sym, Vec<Vals>>,
}

fn star_atoms(phi: &StarState, atoms: &mut Vec<EqSentence>, xs: &mut Vec<Sym>) {
    match phi {
        StarState::True => {}
        StarState::Atom(a) => atoms.push(a.clone()),
        StarState::Not(a) => star_atoms(a, atoms, xs),
        StarState::Or(a, b) => {
            star_atoms(a, atoms, xs);
            star_atoms(b, atoms, xs);
        }
        StarState::Exists(x, a) => {
            xs.push(x.clone());
            star_atoms(a, atoms, xs);
        }
        StarState::E(p) => star_path_atoms(p, atoms, xs),
    }
}

fn star_path_atoms(p: &StarPath, atoms: &mut Vec<EqSentence>, xs: &mut Vec<Sym>) {
    match p {
        StarPath::State(s) => star_atoms(s, atoms, xs),
        StarPath::Not(a) | StarPath::X(a) => star_path_atoms(a, atoms, xs),
        StarPath::Or(a, b) | StarPath::U(a, b) => {
            star_path_atoms(a, atoms, xs);
            star_path_atoms(b, atoms, xs);
        }
    }
}

impl StarCtx<'_, '_> {
    fn states(&self, phi: &StarState) -> Result<Vals, LogicError> {
        let n = self.m.frame.size();
        Ok(match phi {
            StarState::True => vec![Verdict::True; n],
            StarState::Atom(a) => self.m.atoms[a].clone(),
            StarState::Not(a) => negate(self.states(a)?),
            StarState::Or(a, b) => pointwise(&self.states(a)?, &self.states(b)?, Verdict::or),
            StarState::Exists(x, a) => {
                let v = self.states(a)?;
                let var = &self.variants[x];
                (0..n).map(|s| Verdict::any((0..n).map(|t| var[s][t].and(v[t])))).collect()
            }
            StarState::E(p) => {
                let mut leaves = Vec::new();
                let mut nodes = Vec::new();
                self.flatten(p, &mut leaves, &mut nodes)?;
                self.exists_path(&leaves, &nodes)?
            }
        })
    }

    fn flatten(&self, p: &StarPath, leaves: &mut Vec<Vals>, nodes: &mut Vec<PNode>) -> Result<usize, LogicError> {
        let node = match p {
            StarPath::State(s) => {
                leaves.push(self.states(s)?);
                PNode::Leaf(leaves.len() - 1)
            }
            StarPath::Not(a) => PNode::Not(self.flatten(a, leaves, nodes)?),
            StarPath::Or(a, b) => {
                let a = self.flatten(a, leaves, nodes)?;
                PNode::Or(a, self.flatten(b, leaves, nodes)?)
            }
            StarPath::X(a) => PNode::X(self.flatten(a, leaves, nodes)?),
            StarPath::U(a, b) => {
                let a = self.flatten(a, leaves, nodes)?;
                PNode::U(a, self.flatten(b, leaves, nodes)?)
            }
        };
        nodes.push(node);
        Ok(nodes.len() - 1)
    }

    /// Values of every node at every position of a cycle `cs` (no prefix).
    fn cycle_profiles(&self, leaves: &[Vals], nodes: &[PNode], cs: &[usize]) -> Vec<Vals> {
        let k = cs.len();
        let succ = |i: usize| (i + 1) % k;
        let mut vals: Vec<Vals> = Vec::with_capacity(nodes.len());
        for node in nodes {
            let v = match *node {
                PNode::Leaf(l) => cs.iter().map(|&s| leaves[l][s]).collect(),
                PNode::Not(a) => vals[a].iter().map(|v| v.not()).collect(),
                PNode::Or(a, b) => pointwise(&vals[a], &vals[b], Verdict::or),
                PNode::X(a) => (0..k).map(|i| vals[a][succ(i)]).collect(),
                PNode::U(a, b) => until_lfp(&vals[a], &vals[b], &|i| vec![succ(i)]),
            };
            vals.push(v);
        }
        (0..k).map(|i| vals.iter().map(|v| v[i]).collect()).collect()
    }

    /// Profile at a prefix position in state `s` followed by `next`.
    fn step_back(&self, leaves: &[Vals], nodes: &[PNode], s: usize, next: &[Verdict]) -> Vals {
        let mut out: Vals = Vec::with_capacity(nodes.len());
        for node in nodes {
            let v = match *node {
                PNode::Leaf(l) => leaves[l][s],
                PNode::Not(a) => out[a].not(),
                PNode::Or(a, b) => out[a].or(out[b]),
                PNode::X(a) => next[a],
                PNode::U(a, b) => out[b].or(out[a].and(next[out.len()])),
            };
            out.push(v);
        }
        out
    }

    /// `E φ` at every state by search over lassos with prefix and cycle of
    /// length at most `bound`. Lassos are identified by the state they start
    /// in and the values of all subformulae there, which is all that
    /// matters for extending them backwards.
    fn exists_path(&self, leaves: &[Vals], nodes: &[PNode]) -> Result<Vals, LogicError> {
        let n = self.m.frame.size();
        let top = nodes.len() - 1;
        let mut seen: HashSet<(usize, Vals)> = HashSet::new();
        let mut frontier: Vec<(usize, Vals)> = Vec::new();
        for (start, p) in self.cycle_seeds(leaves, nodes) {
            if seen.insert((start, p.clone())) {
                frontier.push((start, p));
            }
        }
        for _ in 0..self.bound {
            let mut next = Vec::new();
            for (s, prof) in &frontier {
                for pred in 0..n {
                    if self.t.contains(pred, *s) {
                        let p = self.step_back(leaves, nodes, pred, prof);
                        if seen.insert((pred, p.clone())) {
                            next.push((pred, p));
                        }
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        let mut found = vec![Verdict::False; n];
        for (s, prof) in &seen {
            found[*s] = found[*s].or(prof[top]);
        }
        let temporal = nodes.iter().filter(|x| matches!(x, PNode::X(_) | PNode::U(..))).count();
        let threshold = n.saturating_mul(1usize.checked_shl(temporal as u32).unwrap_or(usize::MAX));
        Ok(found
            .into_iter()
            .map(|v| if v.is_false() && self.bound < threshold { Verdict::Unknown(UnknownReason::BudgetExhausted) } else { v })
            .collect())
    }

    /// Profiles at the start of every cycle of length at most `bound`.
    fn cycle_seeds(&self, leaves: &[Vals], nodes: &[PNode]) -> Vec<(usize, Vals)> {
        let inputs = needed_inputs(nodes);
        if inputs.len() > MAX_SUMMARY_INPUTS {
            return self.cycle_seeds_by_walks(leaves, nodes);
        }
        const VALUES: [Verdict; 4] = [
            Verdict::False,
            Verdict::True,
            Verdict::Unknown(UnknownReason::BudgetExhausted),
            Verdict::Unknown(UnknownReason::NoWitness),
        ];
        let code = |v: Verdict| VALUES.iter().position(|&w| w == v).unwrap();
        let combos = VALUES.len().pow(inputs.len() as u32);
        let expand = |mut c: usize| {
            let mut v = vec![Verdict::False; nodes.len()];
            for &i in &inputs {
                v[i] = VALUES[c % VALUES.len()];
                c /= VALUES.len();
            }
            v
        };
        let encode = |v: &[Verdict]| inputs.iter().rev().fold(0, |acc, &i| acc * VALUES.len() + code(v[i]));
        let n = self.m.frame.size();
        // profile at state s for every possible successor input
        let step: Vec<Vec<Vals>> =
            (0..n).map(|s| (0..combos).map(|c| self.step_back(leaves, nodes, s, &expand(c))).collect()).collect();
        let step_code: Vec<Vec<usize>> = step.iter().map(|row| row.iter().map(|v| encode(v)).collect()).collect();

        // A walk is summarised by the profile at its first state as a
        // function of the input read from the state after its last one;
        // walks with equal summaries and equal last states are
        // interchangeable, and the first one found is the shortest.
        let mut out = Vec::new();
        let mut seeds = HashSet::new();
        for start in 0..n {
            let mut seen: HashSet<(usize, Vec<Vals>)> = HashSet::new();
            seen.insert((start, step[start].clone()));
            let mut layer = vec![(start, step[start].clone())];
            for _ in 0..self.bound {
                let mut next = Vec::new();
                for (cur, table) in &layer {
                    if self.t.contains(*cur, start) {
                        // each round trip fixes one more level of nesting
                        let mut full = table[encode(&vec![Verdict::False; nodes.len()])].clone();
                        for _ in 0..=nodes.len() {
                            full = table[encode(&full)].clone();
                        }
                        if seeds.insert((start, full.clone())) {
                            out.push((start, full));
                        }
                    }
                    for nxt in self.t.successors(*cur) {
                        let t2: Vec<Vals> = step_code[nxt].iter().map(|&k| table[k].clone()).collect();
                        if seen.insert((nxt, t2.clone())) {
                            next.push((nxt, t2));
                        }
                    }
                }
                layer = next;
            }
        }
        out
    }

    fn cycle_seeds_by_walks(&self, leaves: &[Vals], nodes: &[PNode]) -> Vec<(usize, Vals)> {
        let mut out = Vec::new();
        for start in 0..self.m.frame.size() {
            for len in 1..=self.bound {
                let mut walk = vec![start];
                self.closed_walks(start, len, &mut walk, &mut |cs| {
                    // rotations starting elsewhere are found from their own start
                    out.push((start, self.cycle_profiles(leaves, nodes, cs).into_iter().next().unwrap()));
                });
            }
        }
        out
    }

    fn closed_walks(&self, start: usize, len: usize, walk: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        let last = *walk.last().unwrap();
        if walk.len() == len {
            if self.t.contains(last, start) {
                visit(walk);
            }
            return;
        }
        for nxt in self.t.successors(last).collect::<Vec<_>>() {
            walk.push(nxt);
            self.closed_walks(start, len, walk, visit);
            walk.pop();
        }
    }
}

pub fn foctlstar_check_all(m: &mut Model, phi: &StarState, qd: &QuantDomain, bound: usize) -> Result<Vals, LogicError> {
    if bound == 0 {
        return Err(LogicError::ZeroBound);
    }
    require_total(m.frame)?;
    let (mut atoms, mut xs) = (Vec::new(), Vec::new());
    star_atoms(phi, &mut atoms, &mut xs);
    m.load_atoms(atoms)?;
    let variants = variant_table(m, xs, qd)?;
    let t = m.frame.relation(TRANSITION)?.clone();
    StarCtx { m, t, bound, variants }.states(phi)
}

pub fn foctlstar_check(
    i: &InterpretationTheory,
    f: &FiniteFrame,
    s: usize,
    phi: &StarState,
    qd: &QuantDomain,
    bound: usize,
    b: &EntailBudget,
) -> Result<Verdict, LogicError> {
    Ok(foctlstar_check_all(&mut Model::new(i, f, b)?, phi, qd, bound)?[s])
}

fn eval_on_lasso(leaves: &[Vals], nodes: &[PNode], pi: &LassoPath) -> Verdict {
    let len = pi.len();
    let mut vals: Vec<Vals> = Vec::with_capacity(nodes.len());
    for node in nodes {
        let v = match *node {
            PNode::Leaf(l) => (0..len).map(|i| leaves[l][pi.state(i)]).collect(),
            PNode::Not(a) => negate(vals[a].clone()),
            PNode::Or(a, b) => pointwise(&vals[a], &vals[b], Verdict::or),
            PNode::X(a) => (0..len).map(|i| vals[a][pi.succ(i)]).collect(),
            PNode::U(a, b) => until_lfp(&vals[a], &vals[b], &|i| vec![pi.succ(i)]),
        };
        vals.push(v);
    }
    vals.last().expect("non-empty formula")[0]
}

fn star_path_ctx<'m, 'a>(
    m: &'m mut Model<'a>,
    phi: &StarPath,
    qd: &QuantDomain,
    bound: usize,
) -> Result<StarCtx<'m, 'a>, LogicError> {
    if bound == 0 {
        return Err(LogicError::ZeroBound);
    }
    require_total(m.frame)?;
    let (mut atoms, mut xs) = (Vec::new(), Vec::new());
    star_path_atoms(phi, &mut atoms, &mut xs);
    m.load_atoms(atoms)?;
    let variants = variant_table(m, xs, qd)?;
    let t = m.frame.relation(TRANSITION)?.clone();
    Ok(StarCtx { m, t, bound, variants })
}

/// Evaluates a FOCTL* path formula along a given lasso.
pub fn foctlstar_check_path(
    m: &mut Model,
    pi: &LassoPath,
    phi: &StarPath,
    qd: &QuantDomain,
    bound: usize,
) -> Result<Verdict, LogicError> {
    pi.validate(m.frame)?;
    let ctx = star_path_ctx(m, phi, qd, bound)?;
    let (mut leaves, mut nodes) = (Vec::new(), Vec::new());
    ctx.flatten(phi, &mut leaves, &mut nodes)?;
    Ok(eval_on_lasso(&leaves, &nodes, pi))
}

/// First lasso from `start`, with prefix and cycle of at most `bound`
/// states each, along which `phi` is true. Gives up after `limit` lassos.
pub fn find_witness_lasso(
    m: &mut Model,
    start: usize,
    phi: &StarPath,
    qd: &QuantDomain,
    bound: usize,
    limit: usize,
) -> Result<Option<LassoPath>, LogicError> {
    let ctx = star_path_ctx(m, phi, qd, bound)?;
    let (mut leaves, mut nodes) = (Vec::new(), Vec::new());
    ctx.flatten(phi, &mut leaves, &mut nodes)?;
    let mut budget = limit;
    let mut walk = vec![start];
    Ok(witness_walk(&ctx.t, bound, &leaves, &nodes, &mut walk, &mut budget))
}

fn witness_walk(
    t: &Relation,
    bound: usize,
    leaves: &[Vals],
    nodes: &[PNode],
    walk: &mut Vec<usize>,
    budget: &mut usize,
) -> Option<LassoPath> {
    let last = *walk.last().expect("non-empty walk");
    for k in walk.len().saturating_sub(bound)..walk.len().min(bound + 1) {
        if *budget == 0 {
            return None;
        }
        if t.contains(last, walk[k]) {
            *budget -= 1;
            let pi = LassoPath { prefix: walk[..k].to_vec(), cycle: walk[k..].to_vec() };
            if eval_on_lasso(leaves, nodes, &pi).is_true() {
                return Some(pi);
            }
        }
    }
    if walk.len() >= 2 * bound {
        return None;
    }
    for next in t.successors(last).collect::<Vec<_>>() {
        walk.push(next);
        let found = witness_walk(t, bound, leaves, nodes, walk, budget);
        walk.pop();
        if found.is_some() || *budget == 0 {
            return found;
        }
    }
    None
}
