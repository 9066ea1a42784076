//! Ground equational entailment.
//!
//! A [`TheoryPres`] holds ground axioms plus schematic axiom families whose
//! metavariables range over ground terms. Entailment instantiates the
//! families up to an [`EntailBudget`] and decides the resulting ground
//! problem with congruence closure. Ground theories are decided exactly;
//! schematic ones can only be confirmed, so a failed derivation there is
//! reported as [`Verdict::Unknown`].

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::eqcore::{EqError, EqSentence, EqSignature, GroundTerm, SigMorphism, Sym};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnknownReason {
    /// A larger budget might settle the question.
    BudgetExhausted,
    /// The search space was covered without a witness, but no completeness
    /// argument applies.
    NoWitness,
}

impl UnknownReason {
    pub fn as_str(self) -> &'static str {
        match self {
            UnknownReason::BudgetExhausted => "budget-exhausted",
            UnknownReason::NoWitness => "no-witness",
        }
    }
}

/// Three-valued answer. Boolean connectives follow strong Kleene logic, so
/// `Unknown` only survives when both outcomes remain possible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    True,
    False,
    Unknown(UnknownReason),
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn is_true(self) -> bool {
        self == Verdict::True
    }

    pub fn is_false(self) -> bool {
        self == Verdict::False
    }

    pub fn is_unknown(self) -> bool {
        matches!(self, Verdict::Unknown(_))
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Verdict::True => Some(true),
            Verdict::False => Some(false),
            Verdict::Unknown(_) => None,
        }
    }

    pub fn not(self) -> Self {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            u => u,
        }
    }

    pub fn or(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::True, _) | (_, Verdict::True) => Verdict::True,
            (Verdict::False, v) | (v, Verdict::False) => v,
            (Verdict::Unknown(a), Verdict::Unknown(b)) => Verdict::Unknown(a.min(b)),
        }
    }

    pub fn and(self, other: Verdict) -> Verdict {
        self.not().or(other.not()).not()
    }

    pub fn any(items: impl IntoIterator<Item = Verdict>) -> Verdict {
        let mut acc = Verdict::False;
        for v in items {
            acc = acc.or(v);
            if acc.is_true() {
                break;
            }
        }
        acc
    }

    pub fn all(items: impl IntoIterator<Item = Verdict>) -> Verdict {
        Verdict::any(items.into_iter().map(Verdict::not)).not()
    }

    pub fn reason(self) -> Option<UnknownReason> {
        match self {
            Verdict::Unknown(r) => Some(r),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::True => f.write_str("true"),
            Verdict::False => f.write_str("false"),
            Verdict::Unknown(r) => write!(f, "unknown ({})", r.as_str()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EntailBudget {
    /// Largest depth of a term substituted for a metavariable.
    pub max_term_depth: usize,
    pub max_instantiations: usize,
}

impl EntailBudget {
    pub const DEFAULT_DEPTH: usize = 3;
    pub const DEFAULT_MAX_INST: usize = 10_000;

    pub fn new(max_term_depth: usize, max_instantiations: usize) -> Self {
        EntailBudget { max_term_depth, max_instantiations }
    }
}

impl Default for EntailBudget {
    fn default() -> Self {
        EntailBudget::new(Self::DEFAULT_DEPTH, Self::DEFAULT_MAX_INST)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntailError {
    #[error("theory has axiom schemas but the instantiation budget is zero")]
    BudgetZeroWithSchemas,
    #[error("goal is not well-formed: {0}")]
    IllFormedGoal(EqError),
    #[error("metavariable `{0}` is used but not declared")]
    UndeclaredMetavariable(Arc<str>),
    #[error("ill-formed axiom: {0}")]
    IllFormedAxiom(EqError),
}

/// Term pattern with metavariables.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Pattern {
    Meta(Arc<str>),
    App(Sym, Vec<Pattern>),
}

impl Pattern {
    pub fn meta(name: &str) -> Self {
        Pattern::Meta(Arc::from(name))
    }

    pub fn app(head: Sym, args: Vec<Pattern>) -> Self {
        Pattern::App(head, args)
    }

    pub fn constant(head: Sym) -> Self {
        Pattern::App(head, Vec::new())
    }

    fn instantiate(&self, env: &HashMap<&str, &GroundTerm>) -> GroundTerm {
        match self {
            Pattern::Meta(m) => env[&**m].clone(),
            Pattern::App(h, args) => GroundTerm::app(h.clone(), args.iter().map(|a| a.instantiate(env)).collect()),
        }
    }

    fn metas<'a>(&'a self, out: &mut Vec<&'a Arc<str>>) {
        match self {
            Pattern::Meta(m) => out.push(m),
            Pattern::App(_, args) => args.iter().for_each(|a| a.metas(out)),
        }
    }

    fn check(&self, sig: &EqSignature) -> Result<(), EqError> {
        match self {
            Pattern::Meta(_) => Ok(()),
            Pattern::App(h, args) => {
                // reuse the term checker by substituting a dummy leaf shape
                match sig.lookup(h) {
                    None => Err(EqError::UnknownSymbol(h.clone())),
                    Some((crate::eqcore::SymbolKind::Predicate, _)) => Err(EqError::KindMismatch {
                        sym: h.clone(),
                        expected: crate::eqcore::SymbolKind::Function,
                        found: crate::eqcore::SymbolKind::Predicate,
                    }),
                    Some((_, arity)) if arity != args.len() => {
                        Err(EqError::ArityMismatch { sym: h.clone(), expected: arity, got: args.len() })
                    }
                    Some(_) => args.iter().try_for_each(|a| a.check(sig)),
                }
            }
        }
    }

    fn map_symbols(&self, m: &SigMorphism) -> Result<Pattern, EqError> {
        Ok(match self {
            Pattern::Meta(v) => Pattern::Meta(v.clone()),
            Pattern::App(h, args) => {
                Pattern::App(m.apply(h)?, args.iter().map(|a| a.map_symbols(m)).collect::<Result<_, _>>()?)
            }
        })
    }

    fn retag(&self, tag: crate::eqcore::Tag) -> Pattern {
        match self {
            Pattern::Meta(v) => Pattern::Meta(v.clone()),
            Pattern::App(h, args) => Pattern::App(h.with_tag(tag), args.iter().map(|a| a.retag(tag)).collect()),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn infix(p: &Pattern) -> bool {
            matches!(p, Pattern::App(h, a) if a.len() == 2 && crate::eqcore::is_operator_name(h.name()))
        }
        match self {
            Pattern::Meta(m) => write!(f, "{m}"),
            Pattern::App(h, args) if args.is_empty() => write!(f, "{h}"),
            Pattern::App(h, args) if infix(self) => {
                let side = |p: &Pattern| if infix(p) { format!("({p})") } else { p.to_string() };
                write!(f, "{} {h} {}", side(&args[0]), side(&args[1]))
            }
            Pattern::App(h, args) => {
                write!(f, "{h}(")?;
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

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum SentencePattern {
    Equation(Pattern, Pattern),
    Pred(Sym, Vec<Pattern>),
}

impl SentencePattern {
    fn patterns(&self) -> Vec<&Pattern> {
        match self {
            SentencePattern::Equation(l, r) => vec![l, r],
            SentencePattern::Pred(_, a) => a.iter().collect(),
        }
    }

    fn instantiate(&self, env: &HashMap<&str, &GroundTerm>) -> EqSentence {
        match self {
            SentencePattern::Equation(l, r) => EqSentence::Equation(l.instantiate(env), r.instantiate(env)),
            SentencePattern::Pred(p, args) => {
                EqSentence::Pred(p.clone(), args.iter().map(|a| a.instantiate(env)).collect())
            }
        }
    }
}

impl fmt::Display for SentencePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SentencePattern::Equation(l, r) => write!(f, "{l} = {r}"),
            SentencePattern::Pred(p, args) if args.len() == 2 && crate::eqcore::is_operator_name(p.name()) => {
                let side = |q: &Pattern| match q {
                    Pattern::App(h, a) if a.len() == 2 && crate::eqcore::is_operator_name(h.name()) => {
                        format!("({q})")
                    }
                    _ => q.to_string(),
                };
                write!(f, "{} {p} {}", side(&args[0]), side(&args[1]))
            }
            SentencePattern::Pred(p, args) if args.is_empty() => write!(f, "{p}"),
            SentencePattern::Pred(p, args) => {
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

/// Side condition `metavar != term`, checked syntactically on instances.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Guard {
    pub var: Arc<str>,
    pub not_equal: GroundTerm,
}

/// An axiom family `{ body }` indexed by ground terms for its metavariables.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct SchemaSentence {
    metavars: Vec<Arc<str>>,
    body: SentencePattern,
    guards: Vec<Guard>,
}

impl SchemaSentence {
    pub fn new(metavars: Vec<&str>, body: SentencePattern, guards: Vec<Guard>) -> Result<Self, EntailError> {
        let metavars: Vec<Arc<str>> = metavars.into_iter().map(Arc::from).collect();
        let mut used = Vec::new();
        for p in body.patterns() {
            p.metas(&mut used);
        }
        for m in used.into_iter().chain(guards.iter().map(|g| &g.var)) {
            if !metavars.contains(m) {
                return Err(EntailError::UndeclaredMetavariable(m.clone()));
            }
        }
        Ok(SchemaSentence { metavars, body, guards })
    }

    pub fn metavars(&self) -> &[Arc<str>] {
        &self.metavars
    }

    pub fn body(&self) -> &SentencePattern {
        &self.body
    }

    pub fn guards(&self) -> &[Guard] {
        &self.guards
    }

    pub fn check(&self, sig: &EqSignature) -> Result<(), EqError> {
        match &self.body {
            SentencePattern::Equation(l, r) => {
                l.check(sig)?;
                r.check(sig)
            }
            SentencePattern::Pred(p, args) => {
                match sig.lookup(p) {
                    Some((crate::eqcore::SymbolKind::Predicate, a)) if a == args.len() => {}
                    Some((crate::eqcore::SymbolKind::Predicate, a)) => {
                        return Err(EqError::ArityMismatch { sym: p.clone(), expected: a, got: args.len() })
                    }
                    Some((k, _)) => {
                        return Err(EqError::KindMismatch {
                            sym: p.clone(),
                            expected: crate::eqcore::SymbolKind::Predicate,
                            found: k,
                        })
                    }
                    None => return Err(EqError::UnknownSymbol(p.clone())),
                }
                args.iter().try_for_each(|a| a.check(sig))
            }
        }?;
        self.guards.iter().try_for_each(|g| g.not_equal.check(sig))
    }

    /// Symbols mentioned by the body and the guards.
    pub fn symbols(&self) -> Vec<Sym> {
        fn walk(p: &Pattern, out: &mut Vec<Sym>) {
            if let Pattern::App(h, args) = p {
                out.push(h.clone());
                args.iter().for_each(|a| walk(a, out));
            }
        }
        let mut out = Vec::new();
        if let SentencePattern::Pred(p, _) = &self.body {
            out.push(p.clone());
        }
        for p in self.body.patterns() {
            walk(p, &mut out);
        }
        for g in &self.guards {
            out.extend(g.not_equal.symbols());
        }
        out
    }

    pub fn translate(&self, m: &SigMorphism) -> Result<SchemaSentence, EqError> {
        let body = match &self.body {
            SentencePattern::Equation(l, r) => SentencePattern::Equation(l.map_symbols(m)?, r.map_symbols(m)?),
            SentencePattern::Pred(p, a) => {
                SentencePattern::Pred(m.apply(p)?, a.iter().map(|x| x.map_symbols(m)).collect::<Result<_, _>>()?)
            }
        };
        let guards = self
            .guards
            .iter()
            .map(|g| Ok(Guard { var: g.var.clone(), not_equal: m.translate_term(&g.not_equal)? }))
            .collect::<Result<_, EqError>>()?;
        Ok(SchemaSentence { metavars: self.metavars.clone(), body, guards })
    }

    pub fn retag(&self, tag: crate::eqcore::Tag) -> SchemaSentence {
        let body = match &self.body {
            SentencePattern::Equation(l, r) => SentencePattern::Equation(l.retag(tag), r.retag(tag)),
            SentencePattern::Pred(p, a) => SentencePattern::Pred(p.with_tag(tag), a.iter().map(|x| x.retag(tag)).collect()),
        };
        let guards = self
            .guards
            .iter()
            .map(|g| Guard { var: g.var.clone(), not_equal: g.not_equal.retag(tag) })
            .collect();
        SchemaSentence { metavars: self.metavars.clone(), body, guards }
    }

    fn admits(&self, env: &HashMap<&str, &GroundTerm>) -> bool {
        self.guards.iter().all(|g| *env[&*g.var] != g.not_equal)
    }
}

impl fmt::Display for SchemaSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vars: Vec<&str> = self.metavars.iter().map(|v| &**v).collect();
        write!(f, "{}", vars.join(", "))?;
        if !self.guards.is_empty() {
            let gs: Vec<String> = self.guards.iter().map(|g| format!("{} != {}", g.var, g.not_equal)).collect();
            write!(f, " where {}", gs.join(", "))?;
        }
        write!(f, " : {}", self.body)
    }
}

/// Theory presentation: a signature with ground axioms and schemas.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TheoryPres {
    pub signature: EqSignature,
    pub axioms: Vec<EqSentence>,
    pub schemas: Vec<SchemaSentence>,
    /// Signature whose ground terms the schema metavariables range over;
    /// `None` means the full signature.
    pub schema_range: Option<EqSignature>,
}

impl TheoryPres {
    pub fn new(signature: EqSignature, axioms: Vec<EqSentence>, schemas: Vec<SchemaSentence>) -> Result<Self, EntailError> {
        for a in &axioms {
            a.check(&signature).map_err(EntailError::IllFormedAxiom)?;
        }
        for s in &schemas {
            s.check(&signature).map_err(EntailError::IllFormedAxiom)?;
        }
        Ok(TheoryPres { signature, axioms, schemas, schema_range: None })
    }

    pub fn ground(signature: EqSignature, axioms: Vec<EqSentence>) -> Result<Self, EntailError> {
        TheoryPres::new(signature, axioms, Vec::new())
    }

    pub fn is_ground(&self) -> bool {
        self.schemas.is_empty()
    }

    fn range(&self) -> &EqSignature {
        self.schema_range.as_ref().unwrap_or(&self.signature)
    }
}

/// Ground terms of a signature by increasing depth, generated on demand.
struct TermUniverse {
    functions: Vec<(Sym, usize)>,
    /// All terms generated so far, sorted by the [`GroundTerm`] order.
    terms: Vec<GroundTerm>,
    /// `level_end[d]` is the number of terms of depth `<= d + 1`.
    level_end: Vec<usize>,
    cap: usize,
    truncated: bool,
}

impl TermUniverse {
    fn new(sig: &EqSignature, cap: usize) -> Self {
        let mut terms: Vec<GroundTerm> = sig.constants().map(|c| GroundTerm::constant(c.clone())).collect();
        terms.sort();
        let n = terms.len();
        TermUniverse {
            functions: sig.functions().map(|(f, a)| (f.clone(), a)).collect(),
            terms,
            level_end: vec![n],
            cap,
            truncated: false,
        }
    }

    /// Number of terms of depth at most `depth`, generating as needed.
    fn upto(&mut self, depth: usize) -> usize {
        while self.level_end.len() < depth && !self.truncated {
            self.grow();
        }
        self.level_end[(depth.min(self.level_end.len())).saturating_sub(1)]
    }

    fn grow(&mut self) {
        let prev = *self.level_end.last().unwrap();
        let prev_prev = if self.level_end.len() >= 2 { self.level_end[self.level_end.len() - 2] } else { 0 };
        let mut fresh = Vec::new();
        'outer: for (f, arity) in &self.functions {
            // tuples over terms[..prev] with at least one component in the newest level
            let mut idx = vec![0usize; *arity];
            if prev == 0 {
                break;
            }
            loop {
                if idx.iter().any(|&i| i >= prev_prev) {
                    fresh.push(GroundTerm::app(f.clone(), idx.iter().map(|&i| self.terms[i].clone()).collect()));
                    if self.terms.len() + fresh.len() > self.cap {
                        self.truncated = true;
                        break 'outer;
                    }
                }
                let mut k = *arity;
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < prev {
                        break;
                    }
                    idx[k] = 0;
                    if k == 0 {
                        k = usize::MAX;
                        break;
                    }
                }
                if k == usize::MAX {
                    break;
                }
            }
        }
        fresh.sort();
        self.terms.extend(fresh);
        self.level_end.push(self.terms.len());
    }
}

/// Result of instantiating a theory under a budget.
#[derive(Clone, Debug)]
pub struct Instantiation {
    pub sentences: Vec<EqSentence>,
    pub instances: usize,
    /// True when the instantiation cap cut the enumeration short.
    pub capped: bool,
}

/// Ground axioms followed by schema instances, by increasing depth of the
/// substituted terms and then lexicographically.
pub fn instantiate_schemas(t: &TheoryPres, b: &EntailBudget) -> Result<Vec<EqSentence>, EntailError> {
    Ok(instantiate(t, b)?.sentences)
}

pub fn instantiate(t: &TheoryPres, b: &EntailBudget) -> Result<Instantiation, EntailError> {
    let mut seen: HashSet<EqSentence> = HashSet::new();
    let mut sentences = Vec::new();
    for a in &t.axioms {
        if seen.insert(a.clone()) {
            sentences.push(a.clone());
        }
    }
    if t.schemas.is_empty() {
        return Ok(Instantiation { sentences, instances: 0, capped: false });
    }
    if b.max_instantiations == 0 {
        return Err(EntailError::BudgetZeroWithSchemas);
    }
    let mut universe = TermUniverse::new(t.range(), b.max_instantiations.saturating_mul(4).max(64));
    let mut instances = 0usize;
    let mut capped = false;

    // Zero-metavariable schemas are plain axioms.
    for s in t.schemas.iter().filter(|s| s.metavars.is_empty()) {
        let inst = s.body.instantiate(&HashMap::new());
        if seen.insert(inst.clone()) {
            sentences.push(inst);
        }
        instances += 1;
    }

    'levels: for level in 1..=b.max_term_depth {
        let hi = universe.upto(level);
        let lo = if level == 1 { 0 } else { universe.upto(level - 1) };
        if hi == lo && level > 1 {
            // no new terms at this depth: the universe is finite and exhausted
            break;
        }
        for s in t.schemas.iter().filter(|s| !s.metavars.is_empty()) {
            let k = s.metavars.len();
            if hi == 0 {
                continue;
            }
            let mut idx = vec![0usize; k];
            loop {
                if idx.iter().any(|&i| i >= lo) {
                    let env: HashMap<&str, &GroundTerm> =
                        s.metavars.iter().zip(&idx).map(|(m, &i)| (&**m, &universe.terms[i])).collect();
                    if s.admits(&env) {
                        if instances >= b.max_instantiations {
                            capped = true;
                            break 'levels;
                        }
                        instances += 1;
                        let inst = s.body.instantiate(&env);
                        if seen.insert(inst.clone()) {
                            sentences.push(inst);
                        }
                    }
                }
                // odometer increment, last position fastest
                let mut pos = k;
                let mut done = true;
                while pos > 0 {
                    pos -= 1;
                    idx[pos] += 1;
                    if idx[pos] < hi {
                        done = false;
                        break;
                    }
                    idx[pos] = 0;
                }
                if done {
                    break;
                }
            }
        }
    }
    if universe.truncated {
        capped = true;
    }
    Ok(Instantiation { sentences, instances, capped })
}

type NodeId = usize;

/// Congruence closure over a finite set of ground terms.
#[derive(Clone, Debug)]
pub struct Closure {
    ids: HashMap<GroundTerm, NodeId>,
    nodes: Vec<(Sym, Vec<NodeId>)>,
    terms: Vec<GroundTerm>,
    parent: Vec<NodeId>,
    facts: HashSet<(Sym, Vec<NodeId>)>,
}

impl Closure {
    fn new() -> Self {
        Closure { ids: HashMap::new(), nodes: Vec::new(), terms: Vec::new(), parent: Vec::new(), facts: HashSet::new() }
    }

    fn intern(&mut self, t: &GroundTerm) -> NodeId {
        if let Some(&id) = self.ids.get(t) {
            return id;
        }
        let args: Vec<NodeId> = t.args().iter().map(|a| self.intern(a)).collect();
        let id = self.nodes.len();
        self.nodes.push((t.head().clone(), args));
        self.terms.push(t.clone());
        self.parent.push(id);
        self.ids.insert(t.clone(), id);
        id
    }

    fn find(&self, mut x: NodeId) -> NodeId {
        while self.parent[x] != x {
            x = self.parent[x];
        }
        x
    }

    fn find_mut(&mut self, x: NodeId) -> NodeId {
        let root = self.find(x);
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    fn close(&mut self, equations: Vec<(NodeId, NodeId)>) {
        let n = self.nodes.len();
        let mut uses: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (id, (_, args)) in self.nodes.iter().enumerate() {
            for &a in args {
                uses[a].push(id);
            }
        }
        let mut table: HashMap<(Sym, Vec<NodeId>), NodeId> = HashMap::new();
        let mut pending = equations;
        for id in 0..n {
            if self.nodes[id].1.is_empty() {
                continue;
            }
            let key = self.signature(id);
            match table.get(&key) {
                Some(&other) => pending.push((id, other)),
                None => {
                    table.insert(key, id);
                }
            }
        }
        while let Some((a, b)) = pending.pop() {
            let (ra, rb) = (self.find_mut(a), self.find_mut(b));
            if ra == rb {
                continue;
            }
            let (winner, loser) = if uses[ra].len() >= uses[rb].len() { (ra, rb) } else { (rb, ra) };
            self.parent[loser] = winner;
            let moved = std::mem::take(&mut uses[loser]);
            for &p in &moved {
                let key = self.signature(p);
                match table.get(&key) {
                    Some(&q) if self.find(q) != self.find(p) => pending.push((p, q)),
                    Some(_) => {}
                    None => {
                        table.insert(key, p);
                    }
                }
            }
            uses[winner].extend(moved);
        }
    }

    fn signature(&self, id: NodeId) -> (Sym, Vec<NodeId>) {
        let (h, args) = &self.nodes[id];
        (h.clone(), args.iter().map(|&a| self.find(a)).collect())
    }

    pub fn contains(&self, t: &GroundTerm) -> bool {
        self.ids.contains_key(t)
    }

    /// Whether two terms are provably equal. Terms outside the universe are
    /// only equal to themselves.
    pub fn equivalent(&self, a: &GroundTerm, b: &GroundTerm) -> bool {
        match (self.ids.get(a), self.ids.get(b)) {
            (Some(&x), Some(&y)) => self.find(x) == self.find(y),
            _ => a == b,
        }
    }

    pub fn holds(&self, s: &EqSentence) -> bool {
        match s {
            EqSentence::Equation(l, r) => self.equivalent(l, r),
            EqSentence::Pred(p, args) => {
                let Some(ids) = args.iter().map(|a| self.ids.get(a).map(|&i| self.find(i))).collect::<Option<Vec<_>>>()
                else {
                    return false;
                };
                self.facts.contains(&(p.clone(), ids))
            }
        }
    }

    /// Equivalence classes, each sorted, in order of their least member.
    pub fn classes(&self) -> Vec<Vec<GroundTerm>> {
        let mut by_root: HashMap<NodeId, Vec<GroundTerm>> = HashMap::new();
        for (i, t) in self.terms.iter().enumerate() {
            by_root.entry(self.find(i)).or_default().push(t.clone());
        }
        let mut out: Vec<Vec<GroundTerm>> = by_root.into_values().collect();
        for c in &mut out {
            c.sort();
        }
        out.sort();
        out
    }

    pub fn universe(&self) -> &[GroundTerm] {
        &self.terms
    }

    /// Number of derived predicate facts, counted up to equality of arguments.
    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }
}

/// Congruence closure of `sentences` over `universe` extended with all
/// subterms of the sentences.
pub fn congruence_close<'a>(
    sentences: impl IntoIterator<Item = &'a EqSentence>,
    universe: impl IntoIterator<Item = &'a GroundTerm>,
) -> Closure {
    let mut cc = Closure::new();
    for t in universe {
        cc.intern(t);
    }
    let mut eqs = Vec::new();
    let mut preds = Vec::new();
    for s in sentences {
        match s {
            EqSentence::Equation(l, r) => {
                let (a, b) = (cc.intern(l), cc.intern(r));
                eqs.push((a, b));
            }
            EqSentence::Pred(p, args) => {
                let ids: Vec<NodeId> = args.iter().map(|a| cc.intern(a)).collect();
                preds.push((p.clone(), ids));
            }
        }
    }
    cc.close(eqs);
    let facts = preds.into_iter().map(|(p, ids)| (p, ids.into_iter().map(|i| cc.find(i)).collect())).collect();
    cc.facts = facts;
    cc
}

/// A theory instantiated once under a budget, reusable across goals.
#[derive(Clone, Debug)]
pub struct Entailer {
    signature: EqSignature,
    sentences: Vec<EqSentence>,
    schematic: bool,
    capped: bool,
}

impl Entailer {
    pub fn new(t: &TheoryPres, b: &EntailBudget) -> Result<Self, EntailError> {
        let inst = instantiate(t, b)?;
        Ok(Entailer {
            signature: t.signature.clone(),
            sentences: inst.sentences,
            schematic: !t.schemas.is_empty(),
            capped: inst.capped,
        })
    }

    /// Adds ground axioms over a (possibly larger) signature.
    pub fn extend(&self, signature: EqSignature, extra: impl IntoIterator<Item = EqSentence>) -> Self {
        let mut sentences = self.sentences.clone();
        sentences.extend(extra);
        Entailer { signature, sentences, schematic: self.schematic, capped: self.capped }
    }

    pub fn sentences(&self) -> &[EqSentence] {
        &self.sentences
    }

    pub fn is_schematic(&self) -> bool {
        self.schematic
    }

    pub fn was_capped(&self) -> bool {
        self.capped
    }

    pub fn signature(&self) -> &EqSignature {
        &self.signature
    }

    /// Decides several goals with a single closure computation.
    pub fn entails_many(&self, goals: &[EqSentence]) -> Result<Vec<Verdict>, EntailError> {
        for g in goals {
            g.check(&self.signature).map_err(EntailError::IllFormedGoal)?;
        }
        let goal_terms: Vec<&GroundTerm> = goals.iter().flat_map(|g| g.term_list()).collect();
        let cc = congruence_close(&self.sentences, goal_terms);
        Ok(goals
            .iter()
            .map(|g| {
                if cc.holds(g) {
                    Verdict::True
                } else if self.schematic {
                    Verdict::Unknown(UnknownReason::BudgetExhausted)
                } else {
                    Verdict::False
                }
            })
            .collect())
    }

    pub fn entails(&self, goal: &EqSentence) -> Result<Verdict, EntailError> {
        Ok(self.entails_many(std::slice::from_ref(goal))?[0])
    }
}

pub fn entails(t: &TheoryPres, goal: &EqSentence, b: &EntailBudget) -> Result<Verdict, EntailError> {
    goal.check(&t.signature).map_err(EntailError::IllFormedGoal)?;
    Entailer::new(t, b)?.entails(goal)
}
