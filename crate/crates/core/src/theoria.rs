//! Interpretations, states as definitions of flexible symbols, and
//! satisfaction of state formulae through the pushout of the two.
//!
//! Rigid symbols live on the left of the sum signature (`in_l`), flexible
//! ones on the right (`in_r`).

use std::fmt;

use thiserror::Error;

use crate::entail::{EntailBudget, EntailError, Entailer, SchemaSentence, TheoryPres, Verdict};
use crate::eqcore::{
    sum_signature, EqError, EqSentence, EqSignature, GroundTerm, SigMorphism, SumSignature, Sym, SymbolKind, Tag,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoriaError {
    #[error("interpretation mentions flexible symbol `{symbol}` in `{sentence}`")]
    FlexibleSymbolInInterpretation { symbol: Sym, sentence: String },
    #[error("right-hand side of `{def}` mentions flexible symbol `{symbol}`")]
    NonRigidRightHandSide { symbol: Sym, def: String },
    #[error("`{0}` is not a flexible symbol of the state signature")]
    UnknownFlexibleSymbol(Sym),
    #[error("rigid signatures differ")]
    SignatureMismatch,
    #[error("ill-formed `{sentence}`: {error}")]
    IllFormed { sentence: String, error: EqError },
    #[error(transparent)]
    Eq(#[from] EqError),
    #[error(transparent)]
    Entail(#[from] EntailError),
}

/// An equational theory over the rigid signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterpretationTheory {
    rigid_sig: EqSignature,
    theory: TheoryPres,
}

impl InterpretationTheory {
    pub fn rigid_sig(&self) -> &EqSignature {
        &self.rigid_sig
    }

    pub fn theory(&self) -> &TheoryPres {
        &self.theory
    }

    pub fn axioms(&self) -> &[EqSentence] {
        &self.theory.axioms
    }

    pub fn schemas(&self) -> &[SchemaSentence] {
        &self.theory.schemas
    }

    /// The theory as seen through `in_l` inside a sum with `flexible`.
    fn tagged(&self, sum: &SumSignature) -> TheoryPres {
        TheoryPres {
            signature: sum.combined.clone(),
            axioms: self.theory.axioms.iter().map(|a| a.retag(Tag::Left)).collect(),
            schemas: self.theory.schemas.iter().map(|s| s.retag(Tag::Left)).collect(),
            schema_range: Some(self.rigid_sig.retag(Tag::Left)),
        }
    }

    /// Instantiates the schemas once so that many states can be checked
    /// against the same budget cheaply.
    pub fn prepare(&self, flexible: &EqSignature, b: &EntailBudget) -> Result<PreparedInterpretation, TheoriaError> {
        let sum = sum_signature(&self.rigid_sig, flexible);
        let entailer = Entailer::new(&self.tagged(&sum), b)?;
        Ok(PreparedInterpretation { rigid_sig: self.rigid_sig.clone(), flexible: flexible.clone(), sum, entailer })
    }
}

fn flexible_in(symbols: Vec<Sym>) -> Option<Sym> {
    symbols.into_iter().find(|s| s.tag() == Tag::Right)
}

pub fn mk_interpretation(
    sig: EqSignature,
    axioms: Vec<EqSentence>,
    schemas: Vec<SchemaSentence>,
) -> Result<InterpretationTheory, TheoriaError> {
    for a in &axioms {
        if let Some(symbol) = flexible_in(a.symbols()) {
            return Err(TheoriaError::FlexibleSymbolInInterpretation { symbol, sentence: a.to_string() });
        }
        a.check(&sig).map_err(|error| TheoriaError::IllFormed { sentence: a.to_string(), error })?;
    }
    for s in &schemas {
        if let Some(symbol) = flexible_in(s.symbols()) {
            return Err(TheoriaError::FlexibleSymbolInInterpretation { symbol, sentence: s.to_string() });
        }
        s.check(&sig).map_err(|error| TheoriaError::IllFormed { sentence: s.to_string(), error })?;
    }
    let theory = TheoryPres::new(sig.clone(), axioms, schemas)?;
    Ok(InterpretationTheory { rigid_sig: sig, theory })
}

/// Definition of one flexible symbol by rigid terms.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Definition {
    ConstDef { sym: Sym, rhs: GroundTerm },
    FuncDef { sym: Sym, args: Vec<GroundTerm>, rhs: GroundTerm },
    PredDef { sym: Sym, args: Vec<GroundTerm> },
}

impl Definition {
    pub fn symbol(&self) -> &Sym {
        match self {
            Definition::ConstDef { sym, .. } | Definition::FuncDef { sym, .. } | Definition::PredDef { sym, .. } => sym,
        }
    }

    fn rigid_terms(&self) -> Vec<&GroundTerm> {
        match self {
            Definition::ConstDef { rhs, .. } => vec![rhs],
            Definition::FuncDef { args, rhs, .. } => args.iter().chain(std::iter::once(rhs)).collect(),
            Definition::PredDef { args, .. } => args.iter().collect(),
        }
    }

    /// The definition as a sentence of the sum signature.
    pub fn to_sentence(&self) -> EqSentence {
        let rigid = |t: &GroundTerm| t.retag(Tag::Left);
        match self {
            Definition::ConstDef { sym, rhs } => EqSentence::eq(GroundTerm::constant(sym.with_tag(Tag::Right)), rigid(rhs)),
            Definition::FuncDef { sym, args, rhs } => EqSentence::eq(
                GroundTerm::app(sym.with_tag(Tag::Right), args.iter().map(rigid).collect()),
                rigid(rhs),
            ),
            Definition::PredDef { sym, args } => EqSentence::pred(sym.with_tag(Tag::Right), args.iter().map(rigid).collect()),
        }
    }

    fn rename(&self, flex: &SigMorphism, rigid: &SigMorphism) -> Result<Definition, EqError> {
        let r = |t: &GroundTerm| rigid.translate_term(t);
        let rs = |ts: &[GroundTerm]| ts.iter().map(r).collect::<Result<Vec<_>, _>>();
        Ok(match self {
            Definition::ConstDef { sym, rhs } => Definition::ConstDef { sym: flex.apply(sym)?, rhs: r(rhs)? },
            Definition::FuncDef { sym, args, rhs } => {
                Definition::FuncDef { sym: flex.apply(sym)?, args: rs(args)?, rhs: r(rhs)? }
            }
            Definition::PredDef { sym, args } => Definition::PredDef { sym: flex.apply(sym)?, args: rs(args)? },
        })
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |ts: &[GroundTerm]| ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            Definition::ConstDef { sym, rhs } => write!(f, "{sym} := {rhs}"),
            Definition::FuncDef { sym, args, rhs } => write!(f, "{sym}({}) := {rhs}", list(args)),
            Definition::PredDef { sym, args } if args.is_empty() => write!(f, "{sym}"),
            Definition::PredDef { sym, args } => write!(f, "{sym}({})", list(args)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StateTheory {
    flexible_sig: EqSignature,
    rigid_sig: EqSignature,
    defs: Vec<Definition>,
}

impl StateTheory {
    pub fn flexible_sig(&self) -> &EqSignature {
        &self.flexible_sig
    }

    pub fn rigid_sig(&self) -> &EqSignature {
        &self.rigid_sig
    }

    pub fn defs(&self) -> &[Definition] {
        &self.defs
    }

    /// Definitions as sentences of the sum signature.
    pub fn sentences(&self) -> Vec<EqSentence> {
        self.defs.iter().map(Definition::to_sentence).collect()
    }
}

pub fn mk_state(
    flexible_sig: EqSignature,
    rigid_sig: EqSignature,
    defs: Vec<Definition>,
) -> Result<StateTheory, TheoriaError> {
    for d in &defs {
        let sym = d.symbol();
        let (want, arity) = match d {
            Definition::ConstDef { .. } => (SymbolKind::Constant, 0),
            Definition::FuncDef { args, .. } => (SymbolKind::Function, args.len()),
            Definition::PredDef { args, .. } => (SymbolKind::Predicate, args.len()),
        };
        match flexible_sig.lookup(sym) {
            None => return Err(TheoriaError::UnknownFlexibleSymbol(sym.clone())),
            Some((kind, a)) if kind != want || a != arity => {
                let error = if kind != want {
                    EqError::KindMismatch { sym: sym.clone(), expected: want, found: kind }
                } else {
                    EqError::ArityMismatch { sym: sym.clone(), expected: a, got: arity }
                };
                return Err(TheoriaError::IllFormed { sentence: d.to_string(), error });
            }
            Some(_) => {}
        }
        for t in d.rigid_terms() {
            if let Some(symbol) = t.symbols().into_iter().find(|s| !rigid_sig.contains(s) && flexible_sig.contains(s)) {
                return Err(TheoriaError::NonRigidRightHandSide { symbol, def: d.to_string() });
            }
            t.check(&rigid_sig).map_err(|error| TheoriaError::IllFormed { sentence: d.to_string(), error })?;
        }
    }
    let mut seen = std::collections::HashSet::new();
    let defs = defs.into_iter().filter(|d| seen.insert(d.clone())).collect();
    Ok(StateTheory { flexible_sig, rigid_sig, defs })
}

/// Tagged union of an interpretation and a state over the sum signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PushoutTheory {
    pub sum: SumSignature,
    pub theory: TheoryPres,
}

pub fn pushout(i: &InterpretationTheory, s: &StateTheory) -> Result<PushoutTheory, TheoriaError> {
    if i.rigid_sig != s.rigid_sig {
        return Err(TheoriaError::SignatureMismatch);
    }
    let sum = sum_signature(&i.rigid_sig, &s.flexible_sig);
    let mut theory = i.tagged(&sum);
    theory.axioms.extend(s.sentences());
    Ok(PushoutTheory { sum, theory })
}

pub fn sat_state(
    i: &InterpretationTheory,
    s: &StateTheory,
    alpha: &EqSentence,
    b: &EntailBudget,
) -> Result<Verdict, TheoriaError> {
    let po = pushout(i, s)?;
    Ok(crate::entail::entails(&po.theory, alpha, b)?)
}

/// An interpretation whose schemas are already instantiated.
#[derive(Clone, Debug)]
pub struct PreparedInterpretation {
    rigid_sig: EqSignature,
    flexible: EqSignature,
    sum: SumSignature,
    entailer: Entailer,
}

impl PreparedInterpretation {
    pub fn sum(&self) -> &SumSignature {
        &self.sum
    }

    /// Entailment for the pushout with `s`.
    pub fn with_state(&self, s: &StateTheory) -> Result<Entailer, TheoriaError> {
        if s.rigid_sig != self.rigid_sig || s.flexible_sig != self.flexible {
            return Err(TheoriaError::SignatureMismatch);
        }
        Ok(self.entailer.extend(self.sum.combined.clone(), s.sentences()))
    }

    /// Whether two states are equi-derivable: each pushout entails the
    /// other's definitions.
    pub fn equivalent(&self, a: &StateTheory, b: &StateTheory) -> Result<Verdict, TheoriaError> {
        if a.defs == b.defs {
            return Ok(Verdict::True);
        }
        let ea = self.with_state(a)?.entails_many(&b.sentences())?;
        let eb = self.with_state(b)?.entails_many(&a.sentences())?;
        Ok(Verdict::all(ea.into_iter().chain(eb)))
    }
}

pub fn translate_state(m_flex: &SigMorphism, m_rigid: &SigMorphism, s: &StateTheory) -> Result<StateTheory, TheoriaError> {
    if m_flex.source() != &s.flexible_sig || m_rigid.source() != &s.rigid_sig {
        return Err(TheoriaError::SignatureMismatch);
    }
    let defs = s.defs.iter().map(|d| d.rename(m_flex, m_rigid)).collect::<Result<Vec<_>, _>>()?;
    mk_state(m_flex.target().clone(), m_rigid.target().clone(), defs)
}

pub fn translate_interpretation(m: &SigMorphism, i: &InterpretationTheory) -> Result<InterpretationTheory, TheoriaError> {
    if m.source() != &i.rigid_sig {
        return Err(TheoriaError::SignatureMismatch);
    }
    let axioms = i
        .theory
        .axioms
        .iter()
        .map(|a| crate::eqcore::translate_sentence(m, a))
        .collect::<Result<Vec<_>, _>>()?;
    let schemas = i.theory.schemas.iter().map(|s| s.translate(m)).collect::<Result<Vec<_>, _>>()?;
    mk_interpretation(m.target().clone(), axioms, schemas)
}

/// Translation of a sum-signature sentence along `[m_rigid, m_flex]`.
pub fn translate_state_sentence(
    m_flex: &SigMorphism,
    m_rigid: &SigMorphism,
    alpha: &EqSentence,
) -> Result<EqSentence, TheoriaError> {
    let m = SigMorphism::sum(m_rigid, m_flex);
    Ok(crate::eqcore::translate_sentence(&m, alpha)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entail::{Guard, Pattern, SentencePattern, UnknownReason};

    fn c(n: &str) -> GroundTerm {
        GroundTerm::constant(Sym::new(n))
    }
    fn add(a: GroundTerm, b: GroundTerm) -> GroundTerm {
        GroundTerm::app(Sym::new("+"), vec![a, b])
    }

    fn rigid() -> EqSignature {
        EqSignature::with(&["0", "1"], &[("+", 2), ("·", 2)], &[("<", 2)]).unwrap()
    }

    fn flex() -> EqSignature {
        EqSignature::with(&["x", "y"], &[], &[]).unwrap()
    }

    /// The running example: units, commutativity, distributivity and order.
    fn paper_i() -> InterpretationTheory {
        let m = Pattern::meta;
        let k = |n: &str| Pattern::constant(Sym::new(n));
        let op = |o: &str, a, b| Pattern::app(Sym::new(o), vec![a, b]);
        let eq = SentencePattern::Equation;
        let s = |vs: Vec<&str>, body, guards| SchemaSentence::new(vs, body, guards).unwrap();
        let nz = |v: &str| vec![Guard { var: v.into(), not_equal: c("0") }];
        let schemas = vec![
            s(vec!["t"], eq(op("+", k("0"), m("t")), m("t")), vec![]),
            s(vec!["t"], eq(op("·", k("1"), m("t")), m("t")), vec![]),
            s(vec!["t", "t'"], eq(op("+", m("t"), m("t'")), op("+", m("t'"), m("t"))), vec![]),
            s(vec!["t", "t'"], eq(op("·", m("t"), m("t'")), op("·", m("t'"), m("t"))), vec![]),
            s(
                vec!["t", "t'", "t''"],
                eq(op("+", m("t"), op("·", m("t'"), m("t''"))), op("·", op("+", m("t"), m("t'")), op("+", m("t"), m("t''")))),
                vec![],
            ),
            s(
                vec!["t", "t'", "t''"],
                eq(op("·", m("t"), op("+", m("t'"), m("t''"))), op("+", op("·", m("t"), m("t'")), op("·", m("t"), m("t''")))),
                vec![],
            ),
            s(vec!["t"], SentencePattern::Pred(Sym::new("<"), vec![k("0"), m("t")]), nz("t")),
            s(vec!["t", "t'"], SentencePattern::Pred(Sym::new("<"), vec![m("t"), op("+", m("t"), m("t'"))]), nz("t'")),
        ];
        mk_interpretation(rigid(), vec![], schemas).unwrap()
    }

    fn paper_s() -> StateTheory {
        let one = add(c("0"), c("1"));
        mk_state(
            flex(),
            rigid(),
            vec![
                Definition::ConstDef { sym: Sym::new("x"), rhs: one.clone() },
                Definition::ConstDef { sym: Sym::new("y"), rhs: add(one, c("1")) },
            ],
        )
        .unwrap()
    }

    fn r(n: &str) -> GroundTerm {
        GroundTerm::constant(Sym::tagged(Tag::Right, n))
    }

    #[test]
    fn empty_interpretation_and_state() {
        let i = mk_interpretation(EqSignature::new(), vec![], vec![]).unwrap();
        let s = mk_state(EqSignature::new(), EqSignature::new(), vec![]).unwrap();
        let po = pushout(&i, &s).unwrap();
        assert!(po.theory.axioms.is_empty() && po.theory.schemas.is_empty());
        assert!(po.sum.combined.is_empty());
    }

    #[test]
    fn flexible_symbol_in_interpretation_rejected() {
        let sig = EqSignature::with(&["a"], &[], &[]).unwrap();
        let ax = EqSentence::eq(c("a"), GroundTerm::constant(Sym::tagged(Tag::Right, "x")));
        assert!(matches!(
            mk_interpretation(sig, vec![ax], vec![]),
            Err(TheoriaError::FlexibleSymbolInInterpretation { .. })
        ));
    }

    #[test]
    fn state_validation() {
        let bad = mk_state(flex(), rigid(), vec![Definition::ConstDef { sym: Sym::new("x"), rhs: c("x") }]);
        assert!(matches!(bad, Err(TheoriaError::NonRigidRightHandSide { .. })));
        let unknown = mk_state(flex(), rigid(), vec![Definition::ConstDef { sym: Sym::new("z"), rhs: c("0") }]);
        assert_eq!(unknown, Err(TheoriaError::UnknownFlexibleSymbol(Sym::new("z"))));
    }

    #[test]
    fn pushout_of_the_running_example() {
        let po = pushout(&paper_i(), &paper_s()).unwrap();
        assert_eq!(po.theory.schemas.len(), 8);
        let shown: Vec<String> = po.theory.axioms.iter().map(|a| a.to_string()).collect();
        assert_eq!(shown, vec!["in_r(x) = in_l(0) in_l(+) in_l(1)", "in_r(y) = (in_l(0) in_l(+) in_l(1)) in_l(+) in_l(1)"]);
    }

    #[test]
    fn pushout_requires_matching_rigid_signatures() {
        let i = mk_interpretation(EqSignature::new(), vec![], vec![]).unwrap();
        assert_eq!(pushout(&i, &paper_s()), Err(TheoriaError::SignatureMismatch));
    }

    #[test]
    fn running_example_satisfaction() {
        let (i, s) = (paper_i(), paper_s());
        let lt = EqSentence::pred(Sym::tagged(Tag::Left, "<"), vec![r("x"), r("y")]);
        assert_eq!(sat_state(&i, &s, &lt, &EntailBudget::new(3, 10_000)).unwrap(), Verdict::True);
        // 1 + (1·0) = (1+1)·(1+0) with units and commutativity collapses 1 and 1 + 1
        let eq = EqSentence::eq(r("x"), r("y"));
        assert_eq!(sat_state(&i, &s, &eq, &EntailBudget::new(1, 10_000)).unwrap(), Verdict::True);
        let weaker = mk_interpretation(
            rigid(),
            vec![],
            i.schemas().iter().enumerate().filter(|(k, _)| *k != 4).map(|(_, s)| s.clone()).collect(),
        )
        .unwrap();
        for d in 1..=4 {
            assert_eq!(
                sat_state(&weaker, &s, &eq, &EntailBudget::new(d, 10_000)).unwrap(),
                Verdict::Unknown(UnknownReason::BudgetExhausted)
            );
        }
        assert_eq!(sat_state(&i, &s, &EqSentence::eq(r("x"), r("x")), &EntailBudget::default()).unwrap(), Verdict::True);
    }

    #[test]
    fn translate_state_renames() {
        let s = paper_s();
        let id = translate_state(&SigMorphism::identity(&flex()), &SigMorphism::identity(&rigid()), &s).unwrap();
        assert_eq!(id, s);

        let zflex = EqSignature::with(&["z", "y"], &[], &[]).unwrap();
        let mf = SigMorphism::new(flex(), zflex, [(Sym::new("x"), Sym::new("z"))]).unwrap();
        let t = translate_state(&mf, &SigMorphism::identity(&rigid()), &s).unwrap();
        assert_eq!(t.defs()[0].symbol(), &Sym::new("z"));

        let rig2 = EqSignature::with(&["0", "one"], &[("+", 2), ("·", 2)], &[("<", 2)]).unwrap();
        let mr = SigMorphism::new(rigid(), rig2, [(Sym::new("1"), Sym::new("one"))]).unwrap();
        let t = translate_state(&SigMorphism::identity(&flex()), &mr, &s).unwrap();
        assert_eq!(t.defs()[0].to_string(), "x := 0 + one");
    }

    #[test]
    fn prepared_interpretation_agrees_with_sat_state() {
        let (i, s) = (paper_i(), paper_s());
        let b = EntailBudget::new(2, 5_000);
        let p = i.prepare(&flex(), &b).unwrap();
        let lt = EqSentence::pred(Sym::tagged(Tag::Left, "<"), vec![r("x"), r("y")]);
        assert_eq!(p.with_state(&s).unwrap().entails(&lt).unwrap(), sat_state(&i, &s, &lt, &b).unwrap());
    }

    #[test]
    fn equivalent_states_by_mutual_entailment() {
        let i = paper_i();
        let s2 = mk_state(
            flex(),
            rigid(),
            vec![
                Definition::ConstDef { sym: Sym::new("x"), rhs: c("1") },
                Definition::ConstDef { sym: Sym::new("y"), rhs: add(c("1"), c("1")) },
            ],
        )
        .unwrap();
        let p = i.prepare(&flex(), &EntailBudget::new(2, 5_000)).unwrap();
        assert_eq!(p.equivalent(&paper_s(), &s2).unwrap(), Verdict::True);
    }
}
