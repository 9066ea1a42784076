mod common;

use common::*;
use rand::rngs::StdRng;
use rand::Rng;
use relkit::logics::{
    ctl_check_all, fodl_check_all, fodl_program, foctlstar_check_all, ltl_check_in, to_ctl, to_ctlstar, to_fodl,
    to_ltl, to_prog, LassoPath, Program, Surface,
};
use relkit::relalg::{check_bounded_morphism, eval_relterm, FrameMap, RelTerm};
use relkit::{EntailBudget, Model, QuantDomain, Verdict};

/// Random lasso over distinct states with a functional transition relation.
fn random_lasso(r: &mut StdRng, max_len: usize) -> (Labels, LassoPath, Vec<Vec<usize>>) {
    let cl = r.gen_range(1..=max_len);
    let pl = r.gen_range(0..=max_len - cl);
    let n = pl + cl;
    let labels = random_labels(r, n);
    let succ = (0..n).map(|i| vec![if i + 1 < n { i + 1 } else { pl }]).collect();
    (labels, LassoPath { prefix: (0..pl).collect(), cycle: (pl..n).collect() }, succ)
}

fn ltl_verdict(m: &mut Model, pi: &LassoPath, phi: &Surface) -> bool {
    let sum = m.sum().clone();
    ltl_check_in(m, pi, &to_ltl(&sum, phi).unwrap()).unwrap().as_bool().expect("propositional verdicts are total")
}

fn ctl_verdicts(m: &mut Model, phi: &Surface) -> Vec<bool> {
    let sum = m.sum().clone();
    ctl_check_all(m, &to_ctl(&sum, phi).unwrap()).unwrap().into_iter().map(|v| v.as_bool().unwrap()).collect()
}

fn b() -> EntailBudget {
    EntailBudget::default()
}

#[test]
fn ltl_matches_unrolling_oracle() {
    let mut r = rng(0x5eed_0006);
    for case in 0..300 {
        let (labels, pi, succ) = random_lasso(&mut r, 6);
        let f = kripke(&labels, &succ);
        let mut m = Model::uninterpreted(&f, &b()).unwrap();
        let phi = random_ltl(&mut r, 3);
        let want = ltl_unrolled(&labels, &pi.prefix, &pi.cycle, &phi);
        assert_eq!(ltl_verdict(&mut m, &pi, &phi), want, "case {case}: {phi} on {pi:?} {labels:?}");
    }
}

fn bin(f: fn(Box<Surface>, Box<Surface>) -> Surface, a: Surface, c: Surface) -> Surface {
    f(bx(a), bx(c))
}

#[test]
fn ltl_derived_operators_match_expansions() {
    let mut r = rng(0x5eed_0008);
    for case in 0..150 {
        let (labels, pi, succ) = random_lasso(&mut r, 6);
        let f = kripke(&labels, &succ);
        let mut m = Model::uninterpreted(&f, &b()).unwrap();
        let (a, c) = (random_ltl(&mut r, 1), random_ltl(&mut r, 1));
        let not = Surface::not;
        let until = |x: Surface, y: Surface| bin(Surface::Until, x, y);
        let fin = |x: Surface| until(Surface::True, x);
        let glob = |x: Surface| not(fin(not(x)));
        let release = |x: Surface, y: Surface| not(until(not(x), not(y)));
        let pairs = [
            (Surface::Finally(bx(a.clone())), fin(a.clone())),
            (Surface::Globally(bx(a.clone())), glob(a.clone())),
            (bin(Surface::Release, a.clone(), c.clone()), release(a.clone(), c.clone())),
            (bin(Surface::WeakUntil, a.clone(), c.clone()), Surface::or(until(a.clone(), c.clone()), glob(a.clone()))),
            (
                bin(Surface::StrongRelease, a.clone(), c.clone()),
                Surface::or(release(a.clone(), c.clone()), fin(a.clone())),
            ),
            (bin(Surface::Implies, a.clone(), c.clone()), Surface::or(not(a.clone()), c.clone())),
        ];
        for (derived, expansion) in pairs {
            let got = ltl_verdict(&mut m, &pi, &derived);
            assert_eq!(got, ltl_unrolled(&labels, &pi.prefix, &pi.cycle, &expansion), "case {case}: {derived}");
            assert_eq!(got, ltl_semantic(&labels, &pi.prefix, &pi.cycle, &derived), "case {case}: {derived}");
        }
    }
}

#[test]
fn ctl_matches_path_semantics() {
    let mut r = rng(0x5eed_0007);
    for case in 0..100 {
        let n = r.gen_range(1..=5);
        let (labels, succ) = (random_labels(&mut r, n), random_total(&mut r, n, 3));
        let f = kripke(&labels, &succ);
        let mut m = Model::uninterpreted(&f, &b()).unwrap();
        for _ in 0..5 {
            let phi = random_ctl(&mut r, 3);
            assert_eq!(ctl_verdicts(&mut m, &phi), ctl_paths(&labels, &succ, &phi), "case {case}: {phi}");
        }
    }
}

#[test]
fn ctl_derived_operators_match_expansions() {
    let mut r = rng(0x5eed_0018);
    let e = |x: Surface| Surface::E(bx(x));
    let not = Surface::not;
    for case in 0..100 {
        let n = r.gen_range(1..=5);
        let (labels, succ) = (random_labels(&mut r, n), random_total(&mut r, n, 3));
        let f = kripke(&labels, &succ);
        let mut m = Model::uninterpreted(&f, &b()).unwrap();
        let (a, c) = (random_ctl(&mut r, 1), random_ctl(&mut r, 1));
        let eu = |x: Surface, y: Surface| e(bin(Surface::Until, x, y));
        let eg = |x: Surface| e(Surface::Globally(bx(x)));
        let pairs = [
            (e(Surface::Finally(bx(a.clone()))), eu(Surface::True, a.clone())),
            (Surface::A(bx(Surface::Next(bx(a.clone())))), not(e(Surface::Next(bx(not(a.clone())))))),
            (Surface::A(bx(Surface::Finally(bx(a.clone())))), not(eg(not(a.clone())))),
            (Surface::A(bx(Surface::Globally(bx(a.clone())))), not(eu(Surface::True, not(a.clone())))),
            (
                Surface::A(bx(bin(Surface::Until, a.clone(), c.clone()))),
                not(Surface::or(eu(not(c.clone()), not(Surface::or(a.clone(), c.clone()))), eg(not(c.clone())))),
            ),
        ];
        for (derived, expansion) in pairs {
            let got = ctl_verdicts(&mut m, &derived);
            assert_eq!(got, ctl_verdicts(&mut m, &expansion), "case {case}: {derived}");
            assert_eq!(got, ctl_paths(&labels, &succ, &derived), "case {case}: {derived} vs paths");
        }
    }
}

fn random_rels(r: &mut StdRng, n: usize) -> Vec<(&'static str, Matrix)> {
    vec![("a", random_matrix(r, n, 0.35)), ("b", random_matrix(r, n, 0.35))]
}

fn fodl_frame(labels: &Labels, rels: &[(&'static str, Matrix)]) -> relkit::FiniteFrame {
    let succ: Vec<(&str, Vec<Vec<usize>>)> = rels
        .iter()
        .map(|(name, m)| (*name, m.iter().map(|row| (0..row.len()).filter(|&j| row[j]).collect()).collect()))
        .collect();
    let view: Vec<(&str, &[Vec<usize>])> = succ.iter().map(|(k, v)| (*k, v.as_slice())).collect();
    prop_frame(labels, &view)
}

fn fodl_verdicts(m: &mut Model, phi: &Surface) -> Vec<bool> {
    let sum = m.sum().clone();
    fodl_check_all(m, &to_fodl(&sum, phi).unwrap(), &QuantDomain::default())
        .unwrap()
        .into_iter()
        .map(|v| v.as_bool().unwrap())
        .collect()
}

#[test]
fn fodl_matches_relational_oracle_and_sugar() {
    let mut r = rng(0x5eed_0028);
    let dia = |p: Program, x: Surface| Surface::Diamond(p, bx(x));
    let test = |c: Surface| Program::Test(bx(c));
    let seq = |x: Program, y: Program| Program::Seq(bx(x), bx(y));
    for case in 0..100 {
        let n = r.gen_range(1..=5);
        let labels = random_labels(&mut r, n);
        let rels = random_rels(&mut r, n);
        let f = fodl_frame(&labels, &rels);
        let mut m = Model::uninterpreted(&f, &b()).unwrap();

        let prog = random_program(&mut r, 3, &["a", "b"]);
        let post = random_ltl_prop(&mut r);
        let phi = dia(prog.clone(), post.clone());
        assert_eq!(fodl_verdicts(&mut m, &phi), fodl_oracle(&labels, &rels, &phi), "case {case}: {phi}");
        let boxed = Surface::Box(prog, bx(post.clone()));
        assert_eq!(fodl_verdicts(&mut m, &boxed), fodl_oracle(&labels, &rels, &boxed), "case {case}: {boxed}");

        let (c, p, q) = (
            random_ltl_prop(&mut r),
            random_program(&mut r, 1, &["a", "b"]),
            random_program(&mut r, 1, &["a", "b"]),
        );
        let ite = Program::If(bx(c.clone()), bx(p.clone()), bx(q.clone()));
        let ite_exp = Program::Choice(bx(seq(test(c.clone()), p.clone())), bx(seq(test(Surface::not(c.clone())), q)));
        let wh = Program::While(bx(c.clone()), bx(p.clone()));
        let wh_exp = seq(Program::Star(bx(seq(test(c.clone()), p))), test(Surface::not(c)));
        for (sugar, exp) in [(ite, ite_exp), (wh, wh_exp)] {
            let (x, y) = (dia(sugar, post.clone()), dia(exp, post.clone()));
            let got = fodl_verdicts(&mut m, &x);
            assert_eq!(got, fodl_verdicts(&mut m, &y), "case {case}: {x}");
            assert_eq!(got, fodl_oracle(&labels, &rels, &x), "case {case}: {x} vs oracle");
        }
    }
}

/// Program-to-relterm embedding for test-free programs.
fn embed(p: &Program) -> RelTerm {
    match p {
        Program::Atom(a) => RelTerm::sym(a),
        Program::Choice(a, b) => RelTerm::union(embed(a), embed(b)),
        Program::Seq(a, b) => RelTerm::comp(embed(a), embed(b)),
        Program::Star(a) => RelTerm::closure(embed(a)),
        other => panic!("no relational counterpart for {other}"),
    }
}

fn test_free(r: &mut StdRng, depth: usize) -> Program {
    if depth == 0 || r.gen_bool(0.3) {
        return Program::Atom(if r.gen_bool(0.5) { "a" } else { "b" }.into());
    }
    match r.gen_range(0..3) {
        0 => Program::Choice(bx(test_free(r, depth - 1)), bx(test_free(r, depth - 1))),
        1 => Program::Seq(bx(test_free(r, depth - 1)), bx(test_free(r, depth - 1))),
        _ => Program::Star(bx(test_free(r, depth - 1))),
    }
}

#[test]
fn program_meaning_is_homomorphic() {
    let mut r = rng(0x5eed_0038);
    for case in 0..100 {
        let n = r.gen_range(1..=5);
        let labels = random_labels(&mut r, n);
        let f = fodl_frame(&labels, &random_rels(&mut r, n));
        let mut m = Model::uninterpreted(&f, &b()).unwrap();
        let prog = test_free(&mut r, 4);
        let sum = m.sum().clone();
        let rel = fodl_program(&mut m, &to_prog(&sum, &prog).unwrap(), &QuantDomain::default()).unwrap();
        let want = eval_relterm(&f, &embed(&prog)).unwrap();
        assert_eq!(rel.must, want, "case {case}: {prog}");
        assert_eq!(rel.may, want, "case {case}: {prog}");
    }
}

/// Source frame that unfolds `dst`: each target state gets one or two
/// copies, and each copy keeps at least one edge into every successor class.
fn unfold(r: &mut StdRng, labels: &Labels, succ: &[Vec<usize>]) -> (Labels, Vec<Vec<usize>>, Vec<usize>) {
    let mut h = Vec::new();
    for d in 0..labels.len() {
        for _ in 0..r.gen_range(1..=2) {
            h.push(d);
        }
    }
    let copies = |d: usize| (0..h.len()).filter(|&c| h[c] == d).collect::<Vec<_>>();
    let src_succ = h
        .iter()
        .map(|&d| {
            let mut out = Vec::new();
            for &e in &succ[d] {
                let cs = copies(e);
                out.push(cs[r.gen_range(0..cs.len())]);
                if cs.len() > 1 && r.gen_bool(0.3) {
                    out.extend(cs);
                }
            }
            out.sort_unstable();
            out.dedup();
            out
        })
        .collect();
    (h.iter().map(|&d| labels[d].clone()).collect(), src_succ, h)
}

#[test]
fn ctl_is_invariant_under_bounded_morphisms() {
    let mut r = rng(0x5eed_0009);
    for case in 0..100 {
        let n = r.gen_range(1..=4);
        let (labels, succ) = (random_labels(&mut r, n), random_total(&mut r, n, 2));
        let (src_labels, src_succ, h) = unfold(&mut r, &labels, &succ);
        let (src, dst) = (kripke(&src_labels, &src_succ), kripke(&labels, &succ));
        let fm = FrameMap {
            rels: vec![("T".into(), "T".into())],
            states: h.iter().enumerate().map(|(c, &d)| (format!("s{c}"), format!("s{d}"))).collect(),
        };
        let report = check_bounded_morphism(&src, &dst, &fm, None, &b()).unwrap();
        assert_eq!(report.verdict, Verdict::True, "case {case}: {:?}", report.violation);
        let (mut ms, mut md) = (Model::uninterpreted(&src, &b()).unwrap(), Model::uninterpreted(&dst, &b()).unwrap());
        for _ in 0..5 {
            let phi = random_ctl(&mut r, 3);
            let (vs, vd) = (ctl_verdicts(&mut ms, &phi), ctl_verdicts(&mut md, &phi));
            for (c, &d) in h.iter().enumerate() {
                assert_eq!(vs[c], vd[d], "case {case}: {phi} at s{c} vs s{d}");
            }
        }
    }
}

#[test]
fn ctlstar_agrees_with_ctl_on_the_ctl_fragment() {
    let mut r = rng(0x5eed_0019);
    for case in 0..100 {
        let n = r.gen_range(1..=4);
        let (labels, succ) = (random_labels(&mut r, n), random_total(&mut r, n, 2));
        let f = kripke(&labels, &succ);
        let mut m = Model::uninterpreted(&f, &b()).unwrap();
        let sum = m.sum().clone();
        let phi = random_ctl(&mut r, 2);
        let want = ctl_verdicts(&mut m, &phi);
        // large enough for a definite answer
        let bound = n << 4;
        let got = foctlstar_check_all(&mut m, &to_ctlstar(&sum, &phi).unwrap(), &QuantDomain::default(), bound).unwrap();
        let got: Vec<bool> = got.into_iter().map(|v| v.as_bool().expect("bound is sufficient")).collect();
        assert_eq!(got, want, "case {case}: {phi}");
    }
}

#[test]
fn ctlstar_path_formulas_beyond_ctl() {
    // E (F G p) and E (G F p) on a frame with a p-sink and a p/!p cycle
    let labels: Labels = vec![["p"].iter().map(|s| s.to_string()).collect(), Default::default(), Default::default()];
    let f = kripke(&labels, &[vec![0, 1], vec![2], vec![1]]);
    let mut m = Model::uninterpreted(&f, &b()).unwrap();
    let sum = m.sum().clone();
    let fg = Surface::E(bx(Surface::Finally(bx(Surface::Globally(bx(p("p")))))));
    let gf = Surface::E(bx(Surface::Globally(bx(Surface::Finally(bx(p("p")))))));
    for (phi, want) in [(fg, [true, false, false]), (gf, [true, false, false])] {
        let got = foctlstar_check_all(&mut m, &to_ctlstar(&sum, &phi).unwrap(), &QuantDomain::default(), 32).unwrap();
        assert_eq!(got, want.map(Verdict::from_bool).to_vec(), "{phi}");
    }
}
