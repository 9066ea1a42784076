//! Ground equational syntax: signatures, terms, atomic sentences and
//! signature morphisms.
//!
//! Every symbol carries a [`Tag`]. Symbols of an ordinary signature are
//! [`Tag::Plain`]; the coproduct built by [`sum_signature`] re-tags the
//! left (rigid) component with [`Tag::Left`] and the right (flexible)
//! component with [`Tag::Right`], so the two namespaces never collide even
//! when the same name occurs on both sides.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Injection tag of a symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    Plain,
    /// `in_l`: the rigid component of a sum signature.
    Left,
    /// `in_r`: the flexible component of a sum signature.
    Right,
}

/// An interned, tagged symbol name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Sym {
    tag: Tag,
    name: Arc<str>,
}

impl Sym {
    pub fn new(name: impl AsRef<str>) -> Self {
        Sym { tag: Tag::Plain, name: Arc::from(name.as_ref()) }
    }

    pub fn tagged(tag: Tag, name: impl AsRef<str>) -> Self {
        Sym { tag, name: Arc::from(name.as_ref()) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn with_tag(&self, tag: Tag) -> Self {
        Sym { tag, name: self.name.clone() }
    }
}

impl fmt::Debug for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Sym {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.tag {
            Tag::Plain => write!(f, "{}", self.name),
            Tag::Left => write!(f, "in_l({})", self.name),
            Tag::Right => write!(f, "in_r({})", self.name),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymbolKind {
    Constant,
    Function,
    Predicate,
}

impl fmt::Display for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolKind::Constant => "constant",
            SymbolKind::Function => "function",
            SymbolKind::Predicate => "predicate",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EqError {
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(Sym),
    #[error("symbol `{sym}` expects {expected} argument(s), got {got}")]
    ArityMismatch { sym: Sym, expected: usize, got: usize },
    #[error("symbol `{sym}` is a {found}, expected a {expected}")]
    KindMismatch { sym: Sym, expected: SymbolKind, found: SymbolKind },
    #[error("symbol `{0}` is declared twice")]
    DuplicateSymbol(Sym),
    #[error("function symbol `{0}` must have arity at least 1")]
    NullaryFunction(Sym),
    #[error("symbol `{0}` is not in the source signature of the morphism")]
    SymbolNotInSource(Sym),
    #[error("morphism maps `{from}` to `{to}`, which is missing from the target or has a different shape")]
    BadImage { from: Sym, to: Sym },
    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),
}

/// Equational signature: constants, function symbols and predicate symbols
/// with their arities. Names are unique across all three sets.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EqSignature {
    symbols: BTreeMap<Sym, (SymbolKind, usize)>,
}

impl EqSignature {
    pub fn new() -> Self {
        Self::default()
    }

    fn declare(&mut self, sym: Sym, kind: SymbolKind, arity: usize) -> Result<(), EqError> {
        if self.symbols.contains_key(&sym) {
            return Err(EqError::DuplicateSymbol(sym));
        }
        if kind == SymbolKind::Function && arity == 0 {
            return Err(EqError::NullaryFunction(sym));
        }
        self.symbols.insert(sym, (kind, arity));
        Ok(())
    }

    pub fn add_constant(&mut self, name: impl AsRef<str>) -> Result<(), EqError> {
        self.declare(Sym::new(name), SymbolKind::Constant, 0)
    }

    pub fn add_function(&mut self, name: impl AsRef<str>, arity: usize) -> Result<(), EqError> {
        self.declare(Sym::new(name), SymbolKind::Function, arity)
    }

    /// Predicates may be nullary; propositional letters are zero-arity
    /// flexible predicates.
    pub fn add_predicate(&mut self, name: impl AsRef<str>, arity: usize) -> Result<(), EqError> {
        self.declare(Sym::new(name), SymbolKind::Predicate, arity)
    }

    pub fn add_symbol(&mut self, sym: Sym, kind: SymbolKind, arity: usize) -> Result<(), EqError> {
        let arity = if kind == SymbolKind::Constant { 0 } else { arity };
        self.declare(sym, kind, arity)
    }

    /// Builder-style constructor used heavily in tests.
    pub fn with(
        constants: &[&str],
        functions: &[(&str, usize)],
        predicates: &[(&str, usize)],
    ) -> Result<Self, EqError> {
        let mut sig = EqSignature::new();
        for c in constants {
            sig.add_constant(c)?;
        }
        for (f, n) in functions {
            sig.add_function(f, *n)?;
        }
        for (p, n) in predicates {
            sig.add_predicate(p, *n)?;
        }
        Ok(sig)
    }

    pub fn lookup(&self, sym: &Sym) -> Option<(SymbolKind, usize)> {
        self.symbols.get(sym).copied()
    }

    pub fn contains(&self, sym: &Sym) -> bool {
        self.symbols.contains_key(sym)
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// All symbols in name order.
    pub fn symbols(&self) -> impl Iterator<Item = (&Sym, SymbolKind, usize)> {
        self.symbols.iter().map(|(s, (k, a))| (s, *k, *a))
    }

    pub fn of_kind(&self, kind: SymbolKind) -> impl Iterator<Item = (&Sym, usize)> {
        self.symbols
            .iter()
            .filter(move |(_, (k, _))| *k == kind)
            .map(|(s, (_, a))| (s, *a))
    }

    pub fn constants(&self) -> impl Iterator<Item = &Sym> {
        self.of_kind(SymbolKind::Constant).map(|(s, _)| s)
    }

    pub fn functions(&self) -> impl Iterator<Item = (&Sym, usize)> {
        self.of_kind(SymbolKind::Function)
    }

    pub fn predicates(&self) -> impl Iterator<Item = (&Sym, usize)> {
        self.of_kind(SymbolKind::Predicate)
    }

    /// Copy of this signature with every symbol re-tagged.
    pub fn retag(&self, tag: Tag) -> EqSignature {
        EqSignature {
            symbols: self.symbols.iter().map(|(s, v)| (s.with_tag(tag), *v)).collect(),
        }
    }

    /// Union of two signatures with disjoint symbol sets.
    pub fn union(&self, other: &EqSignature) -> Result<EqSignature, EqError> {
        let mut out = self.clone();
        for (s, k, a) in other.symbols() {
            out.declare(s.clone(), k, a)?;
        }
        Ok(out)
    }

    /// True when every symbol of `self` is declared in `other` with the same shape.
    pub fn is_subsignature_of(&self, other: &EqSignature) -> bool {
        self.symbols.iter().all(|(s, v)| other.symbols.get(s) == Some(v))
    }

    fn expect(&self, sym: &Sym, kind: SymbolKind) -> Result<usize, EqError> {
        match self.lookup(sym) {
            None => Err(EqError::UnknownSymbol(sym.clone())),
            Some((k, a)) if k == kind => Ok(a),
            // constants and functions both build terms
            Some((k, a))
                if kind != SymbolKind::Predicate && k != SymbolKind::Predicate =>
            {
                Ok(a)
            }
            Some((k, _)) => Err(EqError::KindMismatch { sym: sym.clone(), expected: kind, found: k }),
        }
    }
}

/// Ground term: constants at the leaves, function symbols at the nodes.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GroundTerm(Arc<TermNode>);

#[derive(PartialEq, Eq, Hash)]
struct TermNode {
    head: Sym,
    args: Vec<GroundTerm>,
    depth: usize,
}

impl GroundTerm {
    /// Unchecked constructor; callers that need validation use [`mk_term`].
    pub fn app(head: Sym, args: Vec<GroundTerm>) -> Self {
        let depth = 1 + args.iter().map(GroundTerm::depth).max().unwrap_or(0);
        GroundTerm(Arc::new(TermNode { head, args, depth }))
    }

    pub fn constant(head: Sym) -> Self {
        GroundTerm::app(head, Vec::new())
    }

    pub fn head(&self) -> &Sym {
        &self.0.head
    }

    pub fn args(&self) -> &[GroundTerm] {
        &self.0.args
    }

    /// Height of the term tree; constants have depth 1.
    pub fn depth(&self) -> usize {
        self.0.depth
    }

    pub fn is_constant(&self) -> bool {
        self.0.args.is_empty()
    }

    /// Pre-order visit of all subterms, including `self`.
    pub fn for_each_subterm(&self, f: &mut impl FnMut(&GroundTerm)) {
        f(self);
        for a in self.args() {
            a.for_each_subterm(f);
        }
    }

    pub fn symbols(&self) -> Vec<Sym> {
        let mut out = Vec::new();
        self.for_each_subterm(&mut |t| out.push(t.head().clone()));
        out
    }

    /// Rewrites every head symbol through `f`.
    pub fn map_symbols<E>(&self, f: &mut impl FnMut(&Sym) -> Result<Sym, E>) -> Result<GroundTerm, E> {
        let args = self.args().iter().map(|a| a.map_symbols(f)).collect::<Result<Vec<_>, _>>()?;
        Ok(GroundTerm::app(f(self.head())?, args))
    }

    pub fn retag(&self, tag: Tag) -> GroundTerm {
        self.map_symbols::<()>(&mut |s| Ok(s.with_tag(tag))).expect("infallible")
    }

    pub fn check(&self, sig: &EqSignature) -> Result<(), EqError> {
        let arity = sig.expect(self.head(), SymbolKind::Function)?;
        if arity != self.args().len() {
            return Err(EqError::ArityMismatch {
                sym: self.head().clone(),
                expected: arity,
                got: self.args().len(),
            });
        }
        self.args().iter().try_for_each(|a| a.check(sig))
    }
}

/// Terms are ordered by depth, then head symbol, then arguments. This is the
/// enumeration order used for schema instantiation.
impl Ord for GroundTerm {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.depth()
            .cmp(&other.depth())
            .then_with(|| self.head().cmp(other.head()))
            .then_with(|| self.args().cmp(other.args()))
    }
}

impl PartialOrd for GroundTerm {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for GroundTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) fn is_operator_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| "+-*/·<>%^~&|".contains(c))
}

impl fmt::Display for GroundTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn sub(t: &GroundTerm, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            if t.args().len() == 2 && is_operator_name(t.head().name()) {
                write!(f, "({t})")
            } else {
                write!(f, "{t}")
            }
        }
        let head = self.head();
        match self.args() {
            [] => write!(f, "{head}"),
            [l, r] if is_operator_name(head.name()) => {
                sub(l, f)?;
                write!(f, " {head} ")?;
                sub(r, f)
            }
            args => {
                write!(f, "{head}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Checked term constructor.
pub fn mk_term(sig: &EqSignature, symbol: &Sym, args: Vec<GroundTerm>) -> Result<GroundTerm, EqError> {
    let arity = sig.expect(symbol, SymbolKind::Function)?;
    if arity != args.len() {
        return Err(EqError::ArityMismatch { sym: symbol.clone(), expected: arity, got: args.len() });
    }
    for a in &args {
        a.check(sig)?;
    }
    Ok(GroundTerm::app(symbol.clone(), args))
}

/// Atomic equational sentence.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EqSentence {
    Equation(GroundTerm, GroundTerm),
    Pred(Sym, Vec<GroundTerm>),
}

impl EqSentence {
    pub fn eq(lhs: GroundTerm, rhs: GroundTerm) -> Self {
        EqSentence::Equation(lhs, rhs)
    }

    pub fn pred(p: Sym, args: Vec<GroundTerm>) -> Self {
        EqSentence::Pred(p, args)
    }

    pub fn check(&self, sig: &EqSignature) -> Result<(), EqError> {
        match self {
            EqSentence::Equation(l, r) => {
                l.check(sig)?;
                r.check(sig)
            }
            EqSentence::Pred(p, args) => {
                let arity = sig.expect(p, SymbolKind::Predicate)?;
                if arity != args.len() {
                    return Err(EqError::ArityMismatch { sym: p.clone(), expected: arity, got: args.len() });
                }
                args.iter().try_for_each(|a| a.check(sig))
            }
        }
    }

    pub fn map_symbols<E>(&self, f: &mut impl FnMut(&Sym) -> Result<Sym, E>) -> Result<EqSentence, E> {
        Ok(match self {
            EqSentence::Equation(l, r) => EqSentence::Equation(l.map_symbols(f)?, r.map_symbols(f)?),
            EqSentence::Pred(p, args) => EqSentence::Pred(
                f(p)?,
                args.iter().map(|a| a.map_symbols(f)).collect::<Result<_, _>>()?,
            ),
        })
    }

    pub fn retag(&self, tag: Tag) -> EqSentence {
        self.map_symbols::<()>(&mut |s| Ok(s.with_tag(tag))).expect("infallible")
    }

    /// All symbols occurring in the sentence, with repetitions.
    pub fn symbols(&self) -> Vec<Sym> {
        let mut out = Vec::new();
        if let EqSentence::Pred(p, _) = self {
            out.push(p.clone());
        }
        for t in self.term_list() {
            out.extend(t.symbols());
        }
        out
    }

    pub fn term_list(&self) -> Vec<&GroundTerm> {
        match self {
            EqSentence::Equation(l, r) => vec![l, r],
            EqSentence::Pred(_, args) => args.iter().collect(),
        }
    }
}

impl fmt::Debug for EqSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for EqSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EqSentence::Equation(l, r) => write!(f, "{l} = {r}"),
            EqSentence::Pred(p, args) if args.len() == 2 && is_operator_name(p.name()) => {
                let wrap = |t: &GroundTerm| {
                    if t.args().len() == 2 && is_operator_name(t.head().name()) {
                        format!("({t})")
                    } else {
                        t.to_string()
                    }
                };
                write!(f, "{} {p} {}", wrap(&args[0]), wrap(&args[1]))
            }
            EqSentence::Pred(p, args) if args.is_empty() => write!(f, "{p}"),
            EqSentence::Pred(p, args) => {
                write!(f, "{p}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Signature morphism: a total, kind- and arity-preserving symbol map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigMorphism {
    source: EqSignature,
    target: EqSignature,
    map: BTreeMap<Sym, Sym>,
}

impl SigMorphism {
    /// Builds a morphism from an explicit symbol map. Symbols of `source`
    /// missing from `map` are mapped to the symbol of the same name, which
    /// must then exist in `target`.
    pub fn new(
        source: EqSignature,
        target: EqSignature,
        map: impl IntoIterator<Item = (Sym, Sym)>,
    ) -> Result<Self, EqError> {
        let mut explicit: BTreeMap<Sym, Sym> = map.into_iter().collect();
        if let Some(extra) = explicit.keys().find(|s| !source.contains(s)) {
            return Err(EqError::SymbolNotInSource(extra.clone()));
        }
        let mut full = BTreeMap::new();
        for (s, kind, arity) in source.symbols() {
            let image = explicit.remove(s).unwrap_or_else(|| s.clone());
            match target.lookup(&image) {
                Some((k, a)) if k == kind && a == arity => {}
                _ => return Err(EqError::BadImage { from: s.clone(), to: image }),
            }
            full.insert(s.clone(), image);
        }
        Ok(SigMorphism { source, target, map: full })
    }

    pub fn identity(sig: &EqSignature) -> Self {
        SigMorphism {
            source: sig.clone(),
            target: sig.clone(),
            map: sig.symbols().map(|(s, _, _)| (s.clone(), s.clone())).collect(),
        }
    }

    /// Re-tagging inclusion of `sig` into `target` (used for sum injections).
    pub fn injection(sig: &EqSignature, target: &EqSignature, tag: Tag) -> Result<Self, EqError> {
        let map = sig.symbols().map(|(s, _, _)| (s.clone(), s.with_tag(tag))).collect::<Vec<_>>();
        SigMorphism::new(sig.clone(), target.clone(), map)
    }

    pub fn source(&self) -> &EqSignature {
        &self.source
    }

    pub fn target(&self) -> &EqSignature {
        &self.target
    }

    pub fn apply(&self, s: &Sym) -> Result<Sym, EqError> {
        self.map.get(s).cloned().ok_or_else(|| EqError::SymbolNotInSource(s.clone()))
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&Sym, &Sym)> {
        self.map.iter()
    }

    /// Homomorphic extension to terms.
    pub fn translate_term(&self, t: &GroundTerm) -> Result<GroundTerm, EqError> {
        t.map_symbols(&mut |s| self.apply(s))
    }

    /// Coproduct of two morphisms, acting on the tagged symbols of
    /// `sum_signature(left.source, right.source)`.
    pub fn sum(left: &SigMorphism, right: &SigMorphism) -> SigMorphism {
        let src = sum_signature(&left.source, &right.source);
        let tgt = sum_signature(&left.target, &right.target);
        let mut map = BTreeMap::new();
        for (s, t) in &left.map {
            map.insert(s.with_tag(Tag::Left), t.with_tag(Tag::Left));
        }
        for (s, t) in &right.map {
            map.insert(s.with_tag(Tag::Right), t.with_tag(Tag::Right));
        }
        SigMorphism { source: src.combined, target: tgt.combined, map }
    }
}

pub fn translate_sentence(m: &SigMorphism, s: &EqSentence) -> Result<EqSentence, EqError> {
    s.map_symbols(&mut |sym| m.apply(sym))
}

/// `compose_morphisms(m1, m2)` is "first `m1`, then `m2`".
pub fn compose_morphisms(m1: &SigMorphism, m2: &SigMorphism) -> Result<SigMorphism, EqError> {
    if m1.target != m2.source {
        return Err(EqError::SignatureMismatch(
            "target of the first morphism differs from the source of the second".into(),
        ));
    }
    let map = m1
        .map
        .iter()
        .map(|(s, mid)| Ok((s.clone(), m2.apply(mid)?)))
        .collect::<Result<_, EqError>>()?;
    Ok(SigMorphism { source: m1.source.clone(), target: m2.target.clone(), map })
}

/// Coproduct `left + right` of two signatures, with `in_l` tagging the left
/// (rigid) component and `in_r` the right (flexible) one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SumSignature {
    pub left: EqSignature,
    pub right: EqSignature,
    pub combined: EqSignature,
}

pub fn sum_signature(left: &EqSignature, right: &EqSignature) -> SumSignature {
    let combined = left
        .retag(Tag::Left)
        .union(&right.retag(Tag::Right))
        .expect("tags keep the components disjoint");
    SumSignature { left: left.clone(), right: right.clone(), combined }
}

impl SumSignature {
    pub fn in_l(&self) -> SigMorphism {
        SigMorphism::injection(&self.left, &self.combined, Tag::Left).expect("left injection is well-formed")
    }

    pub fn in_r(&self) -> SigMorphism {
        SigMorphism::injection(&self.right, &self.combined, Tag::Right).expect("right injection is well-formed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> GroundTerm {
        GroundTerm::constant(Sym::new(n))
    }

    #[test]
    fn mk_term_examples() {
        let sig = EqSignature::with(&["c"], &[("f", 1)], &[]).unwrap();
        let leaf = mk_term(&sig, &Sym::new("c"), vec![]).unwrap();
        assert_eq!(leaf, c("c"));
        let fc = mk_term(&sig, &Sym::new("f"), vec![c("c")]).unwrap();
        assert_eq!(fc.to_string(), "f(c)");
        assert_eq!(
            mk_term(&sig, &Sym::new("f"), vec![c("c"), c("c")]),
            Err(EqError::ArityMismatch { sym: Sym::new("f"), expected: 1, got: 2 })
        );
        assert!(matches!(mk_term(&sig, &Sym::new("g"), vec![]), Err(EqError::UnknownSymbol(_))));
    }

    #[test]
    fn signature_rejects_duplicates_and_nullary_functions() {
        let mut sig = EqSignature::with(&["a"], &[], &[]).unwrap();
        assert!(matches!(sig.add_predicate("a", 1), Err(EqError::DuplicateSymbol(_))));
        assert!(matches!(sig.add_function("g", 0), Err(EqError::NullaryFunction(_))));
    }

    #[test]
    fn depth_counts_constants_as_one() {
        let t = GroundTerm::app(Sym::new("+"), vec![c("0"), GroundTerm::app(Sym::new("+"), vec![c("0"), c("1")])]);
        assert_eq!(c("0").depth(), 1);
        assert_eq!(t.depth(), 3);
        assert_eq!(t.to_string(), "0 + (0 + 1)");
    }

    #[test]
    fn translate_identity_and_renaming() {
        let sig = EqSignature::with(&["a", "b"], &[("f", 1)], &[("P", 1)]).unwrap();
        let s = EqSentence::pred(Sym::new("P"), vec![GroundTerm::app(Sym::new("f"), vec![c("a")])]);
        let id = SigMorphism::identity(&sig);
        assert_eq!(translate_sentence(&id, &s).unwrap(), s);

        let tgt = EqSignature::with(&["b"], &[("g", 1)], &[("Q", 1)]).unwrap();
        let m = SigMorphism::new(
            sig.clone(),
            tgt.clone(),
            [(Sym::new("a"), Sym::new("b")), (Sym::new("f"), Sym::new("g")), (Sym::new("P"), Sym::new("Q"))],
        )
        .unwrap();
        let aa = EqSentence::eq(c("a"), c("a"));
        assert_eq!(translate_sentence(&m, &aa).unwrap(), EqSentence::eq(c("b"), c("b")));
        let out = translate_sentence(&m, &s).unwrap();
        assert_eq!(out.to_string(), "Q(g(b))");
        out.check(&tgt).unwrap();
    }

    #[test]
    fn translate_rejects_foreign_symbols() {
        let sig = EqSignature::with(&["a"], &[], &[]).unwrap();
        let id = SigMorphism::identity(&sig);
        let s = EqSentence::eq(c("z"), c("a"));
        assert_eq!(translate_sentence(&id, &s), Err(EqError::SymbolNotInSource(Sym::new("z"))));
    }

    #[test]
    fn morphism_must_preserve_arity() {
        let src = EqSignature::with(&[], &[("f", 1)], &[]).unwrap();
        let tgt = EqSignature::with(&[], &[("g", 2)], &[]).unwrap();
        let err = SigMorphism::new(src, tgt, [(Sym::new("f"), Sym::new("g"))]).unwrap_err();
        assert!(matches!(err, EqError::BadImage { .. }));
    }

    #[test]
    fn composition_laws() {
        let s1 = EqSignature::with(&["a"], &[], &[]).unwrap();
        let s2 = EqSignature::with(&["b"], &[], &[]).unwrap();
        let s3 = EqSignature::with(&["c"], &[], &[]).unwrap();
        let ab = SigMorphism::new(s1.clone(), s2.clone(), [(Sym::new("a"), Sym::new("b"))]).unwrap();
        let bc = SigMorphism::new(s2.clone(), s3.clone(), [(Sym::new("b"), Sym::new("c"))]).unwrap();
        assert_eq!(compose_morphisms(&SigMorphism::identity(&s1), &ab).unwrap(), ab);
        assert_eq!(compose_morphisms(&ab, &SigMorphism::identity(&s2)).unwrap(), ab);
        let ac = compose_morphisms(&ab, &bc).unwrap();
        assert_eq!(ac.apply(&Sym::new("a")).unwrap(), Sym::new("c"));
        assert!(matches!(compose_morphisms(&bc, &ab), Err(EqError::SignatureMismatch(_))));
    }

    #[test]
    fn sum_signature_examples() {
        let empty = sum_signature(&EqSignature::new(), &EqSignature::new());
        assert!(empty.combined.is_empty());

        let rigid = EqSignature::with(&["0", "1"], &[("+", 2), ("·", 2)], &[("<", 2)]).unwrap();
        let flex = EqSignature::with(&["x", "y"], &[], &[]).unwrap();
        let sum = sum_signature(&rigid, &flex);
        assert_eq!(sum.combined.len(), 7);
        assert!(sum.combined.contains(&Sym::tagged(Tag::Right, "x")));
        assert!(sum.combined.contains(&Sym::tagged(Tag::Left, "0")));
        assert!(!sum.combined.contains(&Sym::new("x")));
        let inl = sum.in_l();
        assert_eq!(inl.apply(&Sym::new("+")).unwrap(), Sym::tagged(Tag::Left, "+"));
        let inr = sum.in_r();
        assert_eq!(inr.apply(&Sym::new("x")).unwrap(), Sym::tagged(Tag::Right, "x"));
    }

    #[test]
    fn sum_disambiguates_name_clashes() {
        let a = EqSignature::with(&["x"], &[], &[]).unwrap();
        let sum = sum_signature(&a, &a);
        assert_eq!(sum.combined.len(), 2);
        assert_ne!(sum.in_l().apply(&Sym::new("x")).unwrap(), sum.in_r().apply(&Sym::new("x")).unwrap());
    }
}
