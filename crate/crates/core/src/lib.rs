//! Relational semantics toolkit: ground equational logic, bounded
//! entailment, state theories and their pushouts, relation algebra over
//! finite frames, and model checkers for LTL, CTL, first-order dynamic logic
//! and FOCTL*.

pub mod dsl;
pub mod entail;
pub mod eqcore;
pub mod logics;
pub mod relalg;
pub mod theoria;

pub use dsl::{parse, print, Diagnostic, Workspace};
pub use entail::{entails, EntailBudget, EntailError, Entailer, TheoryPres, UnknownReason, Verdict};
pub use eqcore::{EqError, EqSentence, EqSignature, GroundTerm, SigMorphism, Sym, SymbolKind, Tag};
pub use logics::{LassoPath, Logic, LogicError, Model, QuantDomain, Surface};
pub use relalg::{FiniteFrame, FrameMap, RelError, RelFormula, RelTerm, Relation};
pub use theoria::{InterpretationTheory, StateTheory, TheoriaError};
