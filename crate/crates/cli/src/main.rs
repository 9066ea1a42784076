//! `relkit`: load `.rks` workspaces and run entailment, frame-verification,
//! morphism and model-checking jobs.
//!
//! Exit codes: 0 true/pass, 1 false/fail, 2 unknown, 3 usage or input error.

use std::io::{IsTerminal, Read};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use relkit::dsl::{self, validate_formula, Workspace};
use relkit::eqcore::sum_signature;
use relkit::logics::{
    ctl_check_all, find_witness_lasso, fodl_check_all, foctlstar_check_all, fodl_program, ltl_check_in, path_from, to_ctl,
    to_ctlstar, to_fodl, to_ltl, to_prog, LassoPath, Logic, Model, QuantDomain, StarState, Surface,
};
use relkit::relalg::{axioms_selftest, check_bounded_morphism, verify_frame_conditions};
use relkit::theoria::{mk_interpretation, sat_state, InterpretationTheory};
use relkit::{entails, EntailBudget, FiniteFrame, Verdict};

/// Upper bound on lassos examined when reconstructing a witness.
const WITNESS_LIMIT: usize = 200_000;

#[derive(Parser)]
#[command(name = "relkit", version, about = "Relational semantics toolkit")]
struct Cli {
    /// Emit a JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Print witnesses for true verdicts too (always printed on false/fail).
    #[arg(long, global = true)]
    witness: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct BudgetFlags {
    /// Maximum term depth for schema instantiation.
    #[arg(long, env = "RELKIT_DEPTH")]
    depth: Option<usize>,
    /// Maximum number of schema instances.
    #[arg(long = "max-inst")]
    max_inst: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether a theory entails a ground sentence.
    Entail {
        /// Input files (`-` for stdin).
        #[arg(required = true)]
        files: Vec<String>,
        /// Interpretation name.
        #[arg(long)]
        theory: String,
        /// Decide in the pushout of the interpretation and this state.
        #[arg(long)]
        state: Option<String>,
        /// Goal: an equation `t = t'` or a predicate atom.
        #[arg(long)]
        goal: String,
        #[command(flatten)]
        budget: BudgetFlags,
    },
    /// Check a frame against frame conditions.
    FrameVerify {
        #[arg(required = true)]
        files: Vec<String>,
        #[arg(long)]
        frame: String,
        /// Name of a `conditions` declaration.
        #[arg(long)]
        conditions: Option<String>,
        /// Run the relation-algebra axiom instances over the frame.
        #[arg(long = "axioms-selftest")]
        axioms_selftest: bool,
    },
    /// Model-check a formula, or a declared `check` job.
    Check {
        #[arg(required = true)]
        files: Vec<String>,
        /// Declared check to run; the other job flags then override it.
        #[arg(long)]
        job: Option<String>,
        /// ltl, ctl, pdl or ctlstar.
        #[arg(long)]
        logic: Option<String>,
        #[arg(long)]
        frame: Option<String>,
        /// Point of evaluation (start of the path for ltl).
        #[arg(long)]
        at: Option<String>,
        #[arg(long)]
        formula: Option<String>,
        /// Interpretation name (default: the empty interpretation).
        #[arg(long)]
        interp: Option<String>,
        /// Quantifier domain name.
        #[arg(long)]
        quant: Option<String>,
        /// Lasso bound for ctlstar path quantifiers (default: frame size).
        #[arg(long)]
        bound: Option<usize>,
        #[command(flatten)]
        budget: BudgetFlags,
    },
    /// Check that a frame map is a bounded morphism.
    Morphism {
        #[arg(required = true)]
        files: Vec<String>,
        /// Name of a `map` declaration.
        #[arg(long)]
        map: String,
        /// Interpretation used to compare state theories.
        #[arg(long)]
        interp: Option<String>,
        #[command(flatten)]
        budget: BudgetFlags,
    },
    /// Print the canonical form of the input.
    Fmt {
        #[arg(required = true)]
        files: Vec<String>,
    },
}

#[derive(Serialize)]
struct JobReport {
    job: &'static str,
    inputs: Value,
    verdict: String,
    reason: Option<String>,
    witness: Value,
    details: Value,
    budget: Value,
    ms: u128,
}

/// Error surfaced as exit code 3.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

enum Outcome {
    Verdict(Verdict),
    Pass(bool),
}

impl Outcome {
    fn code(&self) -> u8 {
        match self {
            Outcome::Verdict(Verdict::True) | Outcome::Pass(true) => 0,
            Outcome::Verdict(Verdict::False) | Outcome::Pass(false) => 1,
            Outcome::Verdict(Verdict::Unknown(_)) => 2,
        }
    }

    fn label(&self) -> (String, Option<String>) {
        match self {
            Outcome::Verdict(Verdict::True) => ("true".into(), None),
            Outcome::Verdict(Verdict::False) => ("false".into(), None),
            Outcome::Verdict(Verdict::Unknown(r)) => ("unknown".into(), Some(r.as_str().into())),
            Outcome::Pass(true) => ("pass".into(), None),
            Outcome::Pass(false) => ("fail".into(), None),
        }
    }

    fn is_negative(&self) -> bool {
        self.code() == 1
    }
}

struct Job {
    kind: &'static str,
    inputs: Value,
    outcome: Outcome,
    witness: Value,
    details: Value,
    budget: Value,
}

fn read_sources(files: &[String]) -> Result<String, Failure> {
    let mut src = String::new();
    for f in files {
        let mut bytes = Vec::new();
        if f == "-" {
            std::io::stdin().read_to_end(&mut bytes).map_err(|e| Failure(format!("stdin: {e}")))?;
        } else {
            bytes = std::fs::read(f).map_err(|e| Failure(format!("{f}: {e}")))?;
        }
        src.push_str(&String::from_utf8_lossy(&bytes));
        src.push('\n');
    }
    Ok(src)
}

fn load(files: &[String]) -> Result<Workspace, Failure> {
    let src = read_sources(files)?;
    dsl::parse(&src).map_err(|ds| {
        Failure(ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))
    })
}

fn budget(w: &Workspace, flags: &BudgetFlags) -> EntailBudget {
    let base = w.entail_budget();
    EntailBudget::new(flags.depth.unwrap_or(base.max_term_depth), flags.max_inst.unwrap_or(base.max_instantiations))
}

fn budget_json(b: &EntailBudget) -> Value {
    json!({ "depth": b.max_term_depth, "max_inst": b.max_instantiations })
}

fn interpretation(w: &Workspace, name: &str) -> Result<InterpretationTheory, Failure> {
    w.interpretations
        .get(name)
        .map(|d| d.theory.clone())
        .ok_or_else(|| Failure(format!("unknown interpretation `{name}`")))
}

fn frame<'w>(w: &'w Workspace, name: &str) -> Result<&'w FiniteFrame, Failure> {
    w.frames.get(name).ok_or_else(|| Failure(format!("unknown frame `{name}`")))
}

fn one_atom(src: &str) -> Result<Surface, Failure> {
    dsl::parse_atom(src).map_err(|ds| Failure(ds.iter().map(|d| format!("goal {d}")).collect::<Vec<_>>().join("\n")))
}

fn run_entail(
    w: &Workspace,
    theory: &str,
    state: Option<&str>,
    goal: &str,
    flags: &BudgetFlags,
) -> Result<Job, Failure> {
    let i = interpretation(w, theory)?;
    let b = budget(w, flags);
    let atom = one_atom(goal)?;
    let (verdict, goal_text) = match state {
        Some(s) => {
            let st = &w.states.get(s).ok_or_else(|| Failure(format!("unknown state `{s}`")))?.theory;
            let sum = sum_signature(st.rigid_sig(), st.flexible_sig());
            let alpha = relkit::logics::rho_translate(Logic::Fodl, &sum, &atom)?;
            (sat_state(&i, st, &alpha, &b)?, alpha.to_string())
        }
        None => {
            let alpha = dsl::resolve_plain_sentence(i.rigid_sig(), &atom)?;
            (entails(i.theory(), &alpha, &b)?, alpha.to_string())
        }
    };
    Ok(Job {
        kind: "entail",
        inputs: json!({ "theory": theory, "state": state, "goal": goal_text }),
        outcome: Outcome::Verdict(verdict),
        witness: Value::Null,
        details: Value::Null,
        budget: budget_json(&b),
    })
}

fn run_frame_verify(w: &Workspace, frame_name: &str, conds: Option<&str>, selftest: bool) -> Result<Job, Failure> {
    let f = frame(w, frame_name)?;
    if conds.is_none() && !selftest {
        return Err(Failure("frame-verify needs --conditions or --axioms-selftest".into()));
    }
    let mut reports = Vec::new();
    let mut witnesses = Vec::new();
    let mut ok = true;
    if let Some(c) = conds {
        let cs = w.conditions.get(c).ok_or_else(|| Failure(format!("unknown conditions `{c}`")))?;
        let gamma: Vec<_> = cs.iter().map(|c| c.expand()).collect();
        for r in verify_frame_conditions(f, &gamma)? {
            ok &= r.passed;
            let witness = r.witness.as_ref().map(|ws| {
                ws.iter().map(|(v, s)| (v.clone(), Value::String(s.clone()))).collect::<serde_json::Map<_, _>>()
            });
            if let Some(wv) = &witness {
                witnesses.push(json!({ "condition": r.name, "assignment": wv }));
            }
            reports.push(json!({ "name": r.name, "formula": r.formula, "passed": r.passed, "witness": witness }));
        }
    }
    if selftest {
        for a in axioms_selftest(f)? {
            ok &= a.passed;
            if !a.passed {
                witnesses.push(json!({ "condition": a.axiom, "formula": a.formula.to_string() }));
            }
            reports.push(json!({ "name": a.axiom, "formula": a.formula.to_string(), "passed": a.passed, "witness": null }));
        }
    }
    Ok(Job {
        kind: "frame-verify",
        inputs: json!({ "frame": frame_name, "conditions": conds, "axioms_selftest": selftest }),
        outcome: Outcome::Pass(ok),
        witness: if witnesses.is_empty() { Value::Null } else { Value::Array(witnesses) },
        details: Value::Array(reports),
        budget: Value::Null,
    })
}

fn lasso_json(f: &FiniteFrame, pi: &LassoPath) -> Value {
    let names = |xs: &[usize]| xs.iter().map(|&i| f.state_name(i).to_string()).collect::<Vec<_>>();
    json!({ "prefix": names(&pi.prefix), "cycle": names(&pi.cycle) })
}

struct CheckSpec {
    logic: Logic,
    frame: String,
    at: String,
    formula: Surface,
    interp: Option<String>,
    quant: Option<String>,
    bound: Option<usize>,
}

fn parse_logic(s: &str) -> Result<Logic, Failure> {
    match s {
        "ltl" => Ok(Logic::Ltl),
        "ctl" => Ok(Logic::Ctl),
        "pdl" => Ok(Logic::Fodl),
        "ctlstar" => Ok(Logic::CtlStar),
        other => Err(Failure(format!("unknown logic `{other}` (use ltl, ctl, pdl or ctlstar)"))),
    }
}

#[allow(clippy::too_many_arguments)]
fn check_spec(
    w: &Workspace,
    job: Option<&str>,
    logic: Option<&str>,
    frame: Option<&str>,
    at: Option<&str>,
    formula: Option<&str>,
    interp: Option<&str>,
    quant: Option<&str>,
    bound: Option<usize>,
) -> Result<CheckSpec, Failure> {
    let base = match job {
        Some(j) => Some(w.checks.get(j).ok_or_else(|| Failure(format!("unknown check `{j}`")))?),
        None => None,
    };
    let need = |flag: &str| Failure(format!("missing --{flag}"));
    let logic = match (logic, base) {
        (Some(l), _) => parse_logic(l)?,
        (None, Some(c)) => c.logic,
        _ => return Err(need("logic")),
    };
    let formula = match (formula, base) {
        (Some(f), _) => dsl::parse_formula(f)
            .map_err(|ds| Failure(ds.iter().map(|d| format!("formula {d}")).collect::<Vec<_>>().join("\n")))?,
        (None, Some(c)) => c.formula.clone(),
        _ => return Err(need("formula")),
    };
    let pick = |flag: Option<&str>, from: Option<&String>| flag.map(str::to_string).or_else(|| from.cloned());
    Ok(CheckSpec {
        logic,
        frame: pick(frame, base.map(|c| &c.frame)).ok_or_else(|| need("frame"))?,
        at: pick(at, base.map(|c| &c.at)).ok_or_else(|| need("at"))?,
        formula,
        interp: pick(interp, base.and_then(|c| c.interp.as_ref())),
        quant: pick(quant, base.and_then(|c| c.quant.as_ref())),
        bound: bound.or(base.and_then(|c| c.bound)),
    })
}

fn run_check(w: &Workspace, spec: CheckSpec, flags: &BudgetFlags, want_witness: bool) -> Result<Job, Failure> {
    let f = frame(w, &spec.frame)?;
    let s = f.state_index(&spec.at)?;
    let b = budget(w, flags);
    let i = match &spec.interp {
        Some(n) => interpretation(w, n)?,
        None => mk_interpretation(f.theory(0).rigid_sig().clone(), vec![], vec![])?,
    };
    let qd = match &spec.quant {
        Some(q) => w.quants.get(q).ok_or_else(|| Failure(format!("unknown quantifier domain `{q}`")))?.domain.clone(),
        None => QuantDomain::default(),
    };
    let bound = spec.bound.unwrap_or(f.size());
    validate_formula(f, spec.logic, &spec.formula)?;
    let mut m = Model::new(&i, f, &b)?;
    let sum = m.sum().clone();
    let mut witness = Value::Null;
    let verdict = match spec.logic {
        Logic::Ltl => {
            let pi = path_from(f, s)?;
            let v = ltl_check_in(&mut m, &pi, &to_ltl(&sum, &spec.formula)?)?;
            witness = json!({ "path": lasso_json(f, &pi) });
            v
        }
        Logic::Ctl => ctl_check_all(&mut m, &to_ctl(&sum, &spec.formula)?)?[s],
        Logic::Fodl => {
            let phi = to_fodl(&sum, &spec.formula)?;
            let v = fodl_check_all(&mut m, &phi, &qd)?[s];
            // witness for a top-level diamond: a reachable state satisfying the body
            if let Surface::Diamond(p, body) = &spec.formula {
                let rel = fodl_program(&mut m, &to_prog(&sum, p)?, &qd)?;
                let vals = fodl_check_all(&mut m, &to_fodl(&sum, body)?, &qd)?;
                let found = rel.must.successors(s).find(|&t| vals[t].is_true());
                if let (true, Some(t)) = (v.is_true(), found) {
                    witness = json!({ "state": f.state_name(t) });
                }
            }
            v
        }
        Logic::CtlStar => foctlstar_check_all(&mut m, &to_ctlstar(&sum, &spec.formula)?, &qd, bound)?[s],
    };
    // lasso witnesses for E-formulae that hold and A-formulae that fail
    if matches!(spec.logic, Logic::Ctl | Logic::CtlStar) && (want_witness || verdict.is_false()) {
        let target = match (&spec.formula, verdict) {
            (Surface::E(p), Verdict::True) => Some(to_ctlstar(&sum, &Surface::E(p.clone()))?),
            (Surface::A(p), Verdict::False) => Some(to_ctlstar(&sum, &Surface::E(Box::new(Surface::not((**p).clone()))))?),
            _ => None,
        };
        if let Some(StarState::E(path)) = target {
            if let Some(pi) = find_witness_lasso(&mut m, s, &path, &qd, bound.max(1), WITNESS_LIMIT)? {
                witness = json!({ "path": lasso_json(f, &pi) });
            }
        }
    }
    if witness.is_null() && verdict.is_false() {
        witness = json!({ "state": spec.at });
    }
    Ok(Job {
        kind: "check",
        inputs: json!({
            "logic": spec.logic.name(),
            "frame": spec.frame,
            "at": spec.at,
            "formula": spec.formula.to_string(),
            "interp": spec.interp,
            "quant": spec.quant,
        }),
        outcome: Outcome::Verdict(verdict),
        witness,
        details: Value::Null,
        budget: json!({ "depth": b.max_term_depth, "max_inst": b.max_instantiations, "bound": bound }),
    })
}

fn run_morphism(w: &Workspace, map: &str, interp: Option<&str>, flags: &BudgetFlags) -> Result<Job, Failure> {
    let d = w.maps.get(map).ok_or_else(|| Failure(format!("unknown map `{map}`")))?;
    let (src, dst) = (frame(w, &d.src)?, frame(w, &d.dst)?);
    let b = budget(w, flags);
    let i = interp.map(|n| interpretation(w, n)).transpose()?;
    let r = check_bounded_morphism(src, dst, &d.map, i.as_ref(), &b)?;
    Ok(Job {
        kind: "morphism",
        inputs: json!({ "map": map, "src": d.src, "dst": d.dst, "interp": interp }),
        outcome: Outcome::Verdict(r.verdict),
        witness: r.violation.map(Value::String).unwrap_or(Value::Null),
        details: Value::Null,
        budget: budget_json(&b),
    })
}

fn emit(job: Job, elapsed: u128, json_out: bool, want_witness: bool) -> u8 {
    let code = job.outcome.code();
    let (verdict, reason) = job.outcome.label();
    let show_witness = want_witness || job.outcome.is_negative() || job.kind == "check";
    let report = JobReport {
        job: job.kind,
        inputs: job.inputs,
        verdict,
        reason,
        witness: if show_witness { job.witness } else { Value::Null },
        details: job.details,
        budget: job.budget,
        ms: elapsed,
    };
    if json_out {
        println!("{}", serde_json::to_string(&report).expect("serializable report"));
        return code;
    }
    let color = std::io::stdout().is_terminal();
    let v = match (color, code) {
        (true, 0) => format!("\x1b[32m{}\x1b[0m", report.verdict),
        (true, 1) => format!("\x1b[31m{}\x1b[0m", report.verdict),
        (true, _) => format!("\x1b[33m{}\x1b[0m", report.verdict),
        _ => report.verdict.clone(),
    };
    match &report.reason {
        Some(r) => println!("{}: {v} ({r})", report.job),
        None => println!("{}: {v}", report.job),
    }
    if let Value::Array(items) = &report.details {
        for it in items {
            let mark = if it["passed"].as_bool() == Some(true) { "ok  " } else { "FAIL" };
            println!("  {mark} {}: {}", it["name"].as_str().unwrap_or(""), it["formula"].as_str().unwrap_or(""));
        }
    }
    if !report.witness.is_null() {
        println!("  witness: {}", report.witness);
    }
    code
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let start = Instant::now();
    let job = match &cli.cmd {
        Cmd::Entail { files, theory, state, goal, budget } => {
            run_entail(&load(files)?, theory, state.as_deref(), goal, budget)?
        }
        Cmd::FrameVerify { files, frame, conditions, axioms_selftest } => {
            run_frame_verify(&load(files)?, frame, conditions.as_deref(), *axioms_selftest)?
        }
        Cmd::Check { files, job, logic, frame, at, formula, interp, quant, bound, budget } => {
            let w = load(files)?;
            let spec = check_spec(
                &w,
                job.as_deref(),
                logic.as_deref(),
                frame.as_deref(),
                at.as_deref(),
                formula.as_deref(),
                interp.as_deref(),
                quant.as_deref(),
                *bound,
            )?;
            run_check(&w, spec, budget, cli.witness)?
        }
        Cmd::Morphism { files, map, interp, budget } => run_morphism(&load(files)?, map, interp.as_deref(), budget)?,
        Cmd::Fmt { files } => {
            print!("{}", dsl::print(&load(files)?));
            return Ok(0);
        }
    };
    Ok(emit(job, start.elapsed().as_millis(), cli.json, cli.witness))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            if cli.json {
                let report = json!({ "job": cli_job(&cli.cmd), "verdict": "error", "reason": msg, "witness": null, "ms": 0 });
                println!("{report}");
            }
            ExitCode::from(3)
        }
    }
}

fn cli_job(c: &Cmd) -> &'static str {
    match c {
        Cmd::Entail { .. } => "entail",
        Cmd::FrameVerify { .. } => "frame-verify",
        Cmd::Check { .. } => "check",
        Cmd::Morphism { .. } => "morphism",
        Cmd::Fmt { .. } => "fmt",
    }
}
