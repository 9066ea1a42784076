//! Random generators and brute-force oracles shared by the integration
//! tests and the acceptance suite. The oracles use plain vectors and sets and
//! never call into the engines they check.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use relkit::eqcore::{EqSentence, EqSignature, GroundTerm, Sym};
use relkit::logics::{Program, RawTerm, Surface, TRANSITION};
use relkit::theoria::{mk_state, Definition};
use relkit::{FiniteFrame, Relation};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn bx<T>(t: T) -> Box<T> {
    Box::new(t)
}

// ---------------------------------------------------------------- relations

pub type Matrix = Vec<Vec<bool>>;

pub fn random_matrix(r: &mut StdRng, n: usize, density: f64) -> Matrix {
    (0..n).map(|_| (0..n).map(|_| r.gen_bool(density)).collect()).collect()
}

pub fn to_relation(m: &Matrix) -> Relation {
    let n = m.len();
    Relation::from_pairs(n, (0..n).flat_map(|i| (0..n).filter(move |&j| m[i][j]).map(move |j| (i, j))))
}

pub fn from_relation(r: &Relation) -> Matrix {
    let n = r.size();
    (0..n).map(|i| (0..n).map(|j| r.contains(i, j)).collect()).collect()
}

pub fn mat_identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| i == j).collect()).collect()
}

pub fn mat_compose(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).any(|k| a[i][k] && b[k][j])).collect()).collect()
}

pub fn mat_union(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(x, y)| x.iter().zip(y).map(|(p, q)| *p || *q).collect()).collect()
}

/// Union of `r^0 .. r^n` by iterated composition.
pub fn naive_closure(r: &Matrix) -> Matrix {
    let n = r.len();
    let mut power = mat_identity(n);
    let mut acc = mat_identity(n);
    for _ in 0..n {
        power = mat_compose(&power, r);
        acc = mat_union(&acc, &power);
    }
    acc
}

/// Random frame over `s0..s{n-1}` with relations `R0..R{k-1}`.
pub fn random_frame(r: &mut StdRng, n: usize, k: usize) -> FiniteFrame {
    let rels = (0..k)
        .map(|i| {
            let d = r.gen_range(0.1..0.6);
            (format!("R{i}"), to_relation(&random_matrix(r, n, d)))
        })
        .collect();
    FiniteFrame::from_relations(n, rels).unwrap()
}

/// Random total relation with out-degree between 1 and `max_deg`.
pub fn random_total(r: &mut StdRng, n: usize, max_deg: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|_| {
            let deg = r.gen_range(1..=max_deg.min(n));
            let mut succ: BTreeSet<usize> = BTreeSet::new();
            while succ.len() < deg {
                succ.insert(r.gen_range(0..n));
            }
            succ.into_iter().collect()
        })
        .collect()
}

// ----------------------------------------------------- propositional frames

pub const PROPS: [&str; 2] = ["p", "q"];

/// Per-state sets of true propositions.
pub type Labels = Vec<BTreeSet<String>>;

pub fn random_labels(r: &mut StdRng, n: usize) -> Labels {
    (0..n).map(|_| PROPS.iter().filter(|_| r.gen_bool(0.5)).map(|p| p.to_string()).collect()).collect()
}

/// Frame whose states are labelled by nullary flexible predicates, with
/// the named relations given as successor lists.
pub fn prop_frame(labels: &Labels, rels: &[(&str, &[Vec<usize>])]) -> FiniteFrame {
    let flex = EqSignature::with(&[], &[], &PROPS.iter().map(|p| (*p, 0)).collect::<Vec<_>>()).unwrap();
    let states = labels
        .iter()
        .enumerate()
        .map(|(i, ls)| {
            let defs = ls.iter().map(|p| Definition::PredDef { sym: Sym::new(p), args: vec![] }).collect();
            (format!("s{i}"), Arc::new(mk_state(flex.clone(), EqSignature::new(), defs).unwrap()))
        })
        .collect();
    let rels = rels
        .iter()
        .map(|(name, succ)| {
            let pairs = succ
                .iter()
                .enumerate()
                .flat_map(|(a, bs)| bs.iter().map(move |b| (format!("s{a}"), format!("s{b}"))))
                .collect();
            (name.to_string(), pairs)
        })
        .collect();
    FiniteFrame::with_states(states, rels).unwrap()
}

pub fn kripke(labels: &Labels, t: &[Vec<usize>]) -> FiniteFrame {
    prop_frame(labels, &[(TRANSITION, t)])
}

// ----------------------------------------------------------------- formulas

pub fn p(name: &str) -> Surface {
    Surface::prop(name)
}

fn random_prop(r: &mut StdRng) -> Surface {
    match r.gen_range(0..5) {
        0 => Surface::True,
        1 | 2 => p("p"),
        _ => p("q"),
    }
}

/// Random LTL formula over `p`, `q` built from primitive operators only,
/// with operator nesting at most `depth`.
pub fn random_ltl(r: &mut StdRng, depth: usize) -> Surface {
    if depth == 0 || r.gen_bool(0.2) {
        return random_prop(r);
    }
    let d = depth - 1;
    match r.gen_range(0..5) {
        0 => Surface::not(random_ltl(r, d)),
        1 => Surface::or(random_ltl(r, d), random_ltl(r, d)),
        2 => Surface::and(random_ltl(r, d), random_ltl(r, d)),
        3 => Surface::Next(bx(random_ltl(r, d))),
        _ => Surface::Until(bx(random_ltl(r, d)), bx(random_ltl(r, d))),
    }
}

/// Operator nesting depth.
pub fn depth(s: &Surface) -> usize {
    match s {
        Surface::True | Surface::False | Surface::Eq(..) | Surface::Pred(_) => 0,
        Surface::Not(a)
        | Surface::Next(a)
        | Surface::Finally(a)
        | Surface::Globally(a)
        | Surface::E(a)
        | Surface::A(a)
        | Surface::Exists(_, a)
        | Surface::Forall(_, a)
        | Surface::Diamond(_, a)
        | Surface::Box(_, a) => 1 + depth(a),
        Surface::And(a, b)
        | Surface::Or(a, b)
        | Surface::Implies(a, b)
        | Surface::Iff(a, b)
        | Surface::Until(a, b)
        | Surface::Release(a, b)
        | Surface::WeakUntil(a, b)
        | Surface::StrongRelease(a, b) => 1 + depth(a).max(depth(b)),
    }
}

/// Random CTL formula with EX / EG / EU and boolean connectives. `depth`
/// bounds the nesting of path quantifiers.
pub fn random_ctl(r: &mut StdRng, depth: usize) -> Surface {
    if depth == 0 || r.gen_bool(0.15) {
        return random_prop(r);
    }
    let d = depth - 1;
    match r.gen_range(0..6) {
        0 => Surface::not(random_ctl(r, depth)),
        1 => Surface::or(random_ctl(r, d), random_ctl(r, d)),
        2 => Surface::E(bx(Surface::Next(bx(random_ctl(r, d))))),
        3 => Surface::E(bx(Surface::Globally(bx(random_ctl(r, d))))),
        _ => Surface::E(bx(Surface::Until(bx(random_ctl(r, d)), bx(random_ctl(r, d))))),
    }
}

// ---------------------------------------------------------- LTL unrolling

fn holds(labels: &Labels, s: usize, atom: &Surface) -> bool {
    match atom {
        Surface::True => true,
        Surface::False => false,
        Surface::Pred(t) => labels[s].contains(&t.head),
        other => panic!("not a propositional atom: {other}"),
    }
}

/// Evaluates `phi` at position 0 of the explicit unrolling
/// `prefix · cycle^(d+2)` of a lasso. Positions are never read past the end
/// of the unrolling: an operator at nesting level `k` is only evaluated
/// at positions below `|prefix| + k·|cycle|`.
pub fn ltl_unrolled(labels: &Labels, prefix: &[usize], cycle: &[usize], phi: &Surface) -> bool {
    let d = depth(phi);
    let mut word: Vec<usize> = prefix.to_vec();
    for _ in 0..d + 2 {
        word.extend_from_slice(cycle);
    }
    let (pl, cl) = (prefix.len(), cycle.len());
    fn ev(w: &[usize], labels: &Labels, pl: usize, cl: usize, i: usize, f: &Surface) -> bool {
        assert!(i < w.len(), "unrolling too short");
        match f {
            Surface::Not(a) => !ev(w, labels, pl, cl, i, a),
            Surface::Or(a, b) => ev(w, labels, pl, cl, i, a) || ev(w, labels, pl, cl, i, b),
            Surface::And(a, b) => ev(w, labels, pl, cl, i, a) && ev(w, labels, pl, cl, i, b),
            Surface::Next(a) => ev(w, labels, pl, cl, i + 1, a),
            Surface::Until(a, b) => {
                // positions from max(i, |prefix|) on repeat with period |cycle|
                let end = i.max(pl) + cl;
                for j in i..end {
                    if ev(w, labels, pl, cl, j, b) {
                        return true;
                    }
                    if !ev(w, labels, pl, cl, j, a) {
                        return false;
                    }
                }
                false
            }
            atom => holds(labels, w[i], atom),
        }
    }
    ev(&word, labels, pl, cl, 0, phi)
}

/// Direct semantic clauses for the derived LTL operators, evaluated on the
/// infinite lasso word (position `i` is folded onto the lasso).
pub fn ltl_semantic(labels: &Labels, prefix: &[usize], cycle: &[usize], phi: &Surface) -> bool {
    let (pl, cl) = (prefix.len(), cycle.len());
    let at = |i: usize| if i < pl { prefix[i] } else { cycle[(i - pl) % cl] };
    // every suffix from `i` equals the suffix from `fold(i)`
    let fold = |i: usize| if i < pl { i } else { pl + (i - pl) % cl };
    fn horizon(i: usize, pl: usize, cl: usize) -> usize {
        i.max(pl) + cl
    }
    fn ev(
        at: &dyn Fn(usize) -> usize,
        fold: &dyn Fn(usize) -> usize,
        labels: &Labels,
        pl: usize,
        cl: usize,
        i: usize,
        f: &Surface,
    ) -> bool {
        let i = fold(i);
        let e = |j: usize, g: &Surface| ev(at, fold, labels, pl, cl, j, g);
        let h = horizon(i, pl, cl);
        match f {
            Surface::Not(a) => !e(i, a),
            Surface::Or(a, b) => e(i, a) || e(i, b),
            Surface::And(a, b) => e(i, a) && e(i, b),
            Surface::Implies(a, b) => !e(i, a) || e(i, b),
            Surface::Iff(a, b) => e(i, a) == e(i, b),
            Surface::Next(a) => e(i + 1, a),
            Surface::Finally(a) => (i..h).any(|j| e(j, a)),
            Surface::Globally(a) => (i..h).all(|j| e(j, a)),
            Surface::Until(a, b) => (i..h).any(|j| e(j, b) && (i..j).all(|k| e(k, a))),
            // b holds up to and including the first a, or forever
            Surface::Release(a, b) => (i..h).all(|j| e(j, b) || (i..j).any(|k| e(k, a))),
            Surface::WeakUntil(a, b) => {
                (i..h).any(|j| e(j, b) && (i..j).all(|k| e(k, a))) || (i..h).all(|j| e(j, a))
            }
            Surface::StrongRelease(a, b) => {
                (i..h).all(|j| e(j, b) || (i..j).any(|k| e(k, a))) || (i..h).any(|j| e(j, a))
            }
            atom => holds(labels, at(i), atom),
        }
    }
    ev(&at, &fold, labels, pl, cl, 0, phi)
}

// ------------------------------------------------------ CTL path semantics

/// All simple lassos from `s`: distinct states `s = v0 .. vk` plus a back
/// edge from `vk` to some `vj`. Returned as (states, loop index j).
pub fn simple_lassos(succ: &[Vec<usize>], s: usize) -> Vec<(Vec<usize>, usize)> {
    let mut out = Vec::new();
    let mut path = vec![s];
    fn go(succ: &[Vec<usize>], path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, usize)>) {
        let last = *path.last().unwrap();
        for &t in &succ[last] {
            if let Some(j) = path.iter().position(|&v| v == t) {
                out.push((path.clone(), j));
            } else {
                path.push(t);
                go(succ, path, out);
                path.pop();
            }
        }
    }
    go(succ, &mut path, &mut out);
    out
}

/// Path formula over state-formula truth vectors along a simple lasso.
fn path_holds(lasso: &(Vec<usize>, usize), f: &Surface, sat: &dyn Fn(&Surface) -> Vec<bool>) -> bool {
    let (seq, j) = lasso;
    let next = |i: usize| if i + 1 < seq.len() { i + 1 } else { *j };
    match f {
        Surface::Next(a) => sat(a)[seq[next(0)]],
        Surface::Globally(a) => {
            let v = sat(a);
            seq.iter().all(|&s| v[s])
        }
        Surface::Finally(a) => {
            let v = sat(a);
            seq.iter().any(|&s| v[s])
        }
        Surface::Until(a, b) => {
            let (va, vb) = (sat(a), sat(b));
            for &s in seq {
                if vb[s] {
                    return true;
                }
                if !va[s] {
                    return false;
                }
            }
            false
        }
        Surface::Not(a) => !path_holds(lasso, a, sat),
        other => panic!("unsupported path formula {other}"),
    }
}

/// CTL by explicit enumeration of simple lassos: `E φ` holds iff some simple
/// lasso from the state satisfies `φ`, `A φ` iff all do.
pub fn ctl_paths(labels: &Labels, succ: &[Vec<usize>], phi: &Surface) -> Vec<bool> {
    let n = labels.len();
    let sat = |f: &Surface| ctl_paths(labels, succ, f);
    match phi {
        Surface::Not(a) => sat(a).into_iter().map(|v| !v).collect(),
        Surface::Or(a, b) => sat(a).into_iter().zip(sat(b)).map(|(x, y)| x || y).collect(),
        Surface::And(a, b) => sat(a).into_iter().zip(sat(b)).map(|(x, y)| x && y).collect(),
        Surface::Implies(a, b) => sat(a).into_iter().zip(sat(b)).map(|(x, y)| !x || y).collect(),
        Surface::E(path) => (0..n).map(|s| simple_lassos(succ, s).iter().any(|l| path_holds(l, path, &sat))).collect(),
        Surface::A(path) => (0..n).map(|s| simple_lassos(succ, s).iter().all(|l| path_holds(l, path, &sat))).collect(),
        atom => (0..n).map(|s| holds(labels, s, atom)).collect(),
    }
}

// ----------------------------------------------------------- FODL programs

/// Relational meaning of a propositional program; tests are decided by the
/// CTL oracle on state formulas (which here are propositional).
pub fn prog_oracle(labels: &Labels, rels: &[(&str, Matrix)], p: &Program) -> Matrix {
    let n = labels.len();
    let test = |c: &Surface| -> Matrix {
        let v = ctl_paths(labels, &vec![vec![]; n], c);
        (0..n).map(|i| (0..n).map(|j| i == j && v[i]).collect()).collect()
    };
    match p {
        Program::Atom(a) => rels.iter().find(|(name, _)| name == a).expect("declared program").1.clone(),
        Program::Test(c) => test(c),
        Program::Choice(a, b) => mat_union(&prog_oracle(labels, rels, a), &prog_oracle(labels, rels, b)),
        Program::Seq(a, b) => mat_compose(&prog_oracle(labels, rels, a), &prog_oracle(labels, rels, b)),
        Program::Star(a) => naive_closure(&prog_oracle(labels, rels, a)),
        Program::If(c, a, b) => {
            let v = ctl_paths(labels, &vec![vec![]; n], c);
            let (ma, mb) = (prog_oracle(labels, rels, a), prog_oracle(labels, rels, b));
            (0..n).map(|i| (0..n).map(|j| if v[i] { ma[i][j] } else { mb[i][j] }).collect()).collect()
        }
        Program::While(c, a) => {
            // pairs reachable by body steps through c-states, ending outside c
            let v = ctl_paths(labels, &vec![vec![]; n], c);
            let body = prog_oracle(labels, rels, a);
            let mut out = vec![vec![false; n]; n];
            for s in 0..n {
                let mut seen = vec![false; n];
                let mut stack = vec![s];
                seen[s] = true;
                while let Some(u) = stack.pop() {
                    if !v[u] {
                        out[s][u] = true;
                        continue;
                    }
                    for w in 0..n {
                        if body[u][w] && !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                }
            }
            out
        }
    }
}

/// Diamond / box over propositional programs and state formulas.
pub fn fodl_oracle(labels: &Labels, rels: &[(&str, Matrix)], phi: &Surface) -> Vec<bool> {
    let n = labels.len();
    let sat = |f: &Surface| fodl_oracle(labels, rels, f);
    match phi {
        Surface::Not(a) => sat(a).into_iter().map(|v| !v).collect(),
        Surface::Or(a, b) => sat(a).into_iter().zip(sat(b)).map(|(x, y)| x || y).collect(),
        Surface::And(a, b) => sat(a).into_iter().zip(sat(b)).map(|(x, y)| x && y).collect(),
        Surface::Diamond(prog, a) => {
            let (m, v) = (prog_oracle(labels, rels, prog), sat(a));
            (0..n).map(|s| (0..n).any(|t| m[s][t] && v[t])).collect()
        }
        Surface::Box(prog, a) => {
            let (m, v) = (prog_oracle(labels, rels, prog), sat(a));
            (0..n).map(|s| (0..n).all(|t| !m[s][t] || v[t])).collect()
        }
        atom => (0..n).map(|s| holds(labels, s, atom)).collect(),
    }
}

pub fn random_program(r: &mut StdRng, depth: usize, atoms: &[&str]) -> Program {
    if depth == 0 || r.gen_bool(0.25) {
        return Program::Atom(atoms[r.gen_range(0..atoms.len())].to_string());
    }
    let d = depth - 1;
    match r.gen_range(0..7) {
        0 => Program::Test(bx(random_ltl_prop(r))),
        1 => Program::Choice(bx(random_program(r, d, atoms)), bx(random_program(r, d, atoms))),
        2 => Program::Seq(bx(random_program(r, d, atoms)), bx(random_program(r, d, atoms))),
        3 => Program::Star(bx(random_program(r, d, atoms))),
        4 => Program::If(bx(random_ltl_prop(r)), bx(random_program(r, d, atoms)), bx(random_program(r, d, atoms))),
        _ => Program::While(bx(random_ltl_prop(r)), bx(random_program(r, d, atoms))),
    }
}

/// Propositional state formula of small size.
pub fn random_ltl_prop(r: &mut StdRng) -> Surface {
    match r.gen_range(0..4) {
        0 => Surface::not(random_prop(r)),
        1 => Surface::or(random_prop(r), random_prop(r)),
        _ => random_prop(r),
    }
}

// -------------------------------------------------- ground entailment

pub fn ground_sig() -> EqSignature {
    EqSignature::with(&["a", "b", "c", "d"], &[("f", 1), ("g", 2)], &[("p", 1), ("q", 2)]).unwrap()
}

pub fn random_term(r: &mut StdRng, depth: usize) -> GroundTerm {
    let c = |n: &str| GroundTerm::constant(Sym::new(n));
    if depth <= 1 || r.gen_bool(0.45) {
        return c(["a", "b", "c", "d"][r.gen_range(0..4)]);
    }
    if r.gen_bool(0.6) {
        GroundTerm::app(Sym::new("f"), vec![random_term(r, depth - 1)])
    } else {
        GroundTerm::app(Sym::new("g"), vec![random_term(r, depth - 1), random_term(r, depth - 1)])
    }
}

pub fn random_sentence(r: &mut StdRng, eq_bias: f64) -> EqSentence {
    if r.gen_bool(eq_bias) {
        EqSentence::eq(random_term(r, 3), random_term(r, 3))
    } else if r.gen_bool(0.5) {
        EqSentence::pred(Sym::new("p"), vec![random_term(r, 3)])
    } else {
        EqSentence::pred(Sym::new("q"), vec![random_term(r, 2), random_term(r, 2)])
    }
}

fn subterms(t: &GroundTerm, out: &mut Vec<GroundTerm>) {
    t.for_each_subterm(&mut |s| {
        if !out.contains(s) {
            out.push(s.clone())
        }
    });
}

pub fn sentence_subterms(ss: &[EqSentence]) -> Vec<GroundTerm> {
    let mut out = Vec::new();
    for s in ss {
        for t in s.term_list() {
            subterms(t, &mut out);
        }
    }
    out
}

/// Random ground theory with at most `max_axioms` sentences and at most
/// `max_subterms` distinct subterms.
pub fn random_ground_theory(r: &mut StdRng, max_axioms: usize, max_subterms: usize) -> Vec<EqSentence> {
    loop {
        let k = r.gen_range(1..=max_axioms);
        let axioms: Vec<EqSentence> = (0..k).map(|_| random_sentence(r, 0.7)).collect();
        if sentence_subterms(&axioms).len() <= max_subterms {
            return axioms;
        }
    }
}

/// Deductive closure by brute force over the subterms of the axioms and the
/// goal: reflexivity, symmetry, transitivity, congruence and predicate
/// substitution, iterated to a fixpoint.
pub fn closure_oracle(axioms: &[EqSentence], goal: &EqSentence) -> bool {
    let mut all = axioms.to_vec();
    all.push(goal.clone());
    let u = sentence_subterms(&all);
    let n = u.len();
    let ix = |t: &GroundTerm| u.iter().position(|s| s == t).unwrap();
    let mut eq = vec![vec![false; n]; n];
    let mut facts: HashSet<(Sym, Vec<usize>)> = HashSet::new();
    for (i, row) in eq.iter_mut().enumerate() {
        row[i] = true;
    }
    for a in axioms {
        match a {
            EqSentence::Equation(l, r) => eq[ix(l)][ix(r)] = true,
            EqSentence::Pred(p, args) => {
                facts.insert((p.clone(), args.iter().map(ix).collect()));
            }
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if eq[i][j] && !eq[j][i] {
                    eq[j][i] = true;
                    changed = true;
                }
                for k in 0..n {
                    if eq[i][j] && eq[j][k] && !eq[i][k] {
                        eq[i][k] = true;
                        changed = true;
                    }
                }
                if !eq[i][j]
                    && u[i].head() == u[j].head()
                    && u[i].args().len() == u[j].args().len()
                    && u[i].args().iter().zip(u[j].args()).all(|(x, y)| eq[ix(x)][ix(y)])
                {
                    eq[i][j] = true;
                    changed = true;
                }
            }
        }
        let snapshot: Vec<_> = facts.iter().cloned().collect();
        for (p, args) in snapshot {
            let tuples: Vec<Vec<usize>> = args.iter().fold(vec![vec![]], |acc, &a| {
                acc.into_iter()
                    .flat_map(|pre| (0..n).filter(|&b| eq[a][b]).map(move |b| [pre.clone(), vec![b]].concat()))
                    .collect()
            });
            for t in tuples {
                changed |= facts.insert((p.clone(), t));
            }
        }
        if !changed {
            break;
        }
    }
    match goal {
        EqSentence::Equation(l, r) => eq[ix(l)][ix(r)],
        EqSentence::Pred(p, args) => facts.contains(&(p.clone(), args.iter().map(ix).collect())),
    }
}

pub fn raw(t: &str) -> RawTerm {
    RawTerm::name(t)
}
