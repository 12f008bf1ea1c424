//! Command-line front end. Every subcommand prints deterministic output and
//! maps its result to an exit code: 0 success or VALID, 1 failure or
//! counterexample, 2 usage or precondition error, 3 INCONCLUSIVE.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::assertions::{Arity, Formula, RelAnnotation, UnaryAnnotation};
use crate::automata::{aut, edges, restrict_live, Automaton, ProgramAut};
use crate::kat::{equiv_commands, mkt};
use crate::normalform::{normalize, pc_bound, verify_norm_equiv};
use crate::proof::{
    check_proof_with, from_json, rel_pc_bound, synthesize_relational, synthesize_unary, to_json, CheckOptions,
    Judgment, Params, ProofDocument, ProofError, ProofTree, RelProblem, Rule, SynthError,
};
use crate::semantics::{run, show_store, DomainBound, RunStatus, Store, Verdict, DEFAULT_BUDGET, DEFAULT_HI, DEFAULT_LO};
use crate::specfile::{parse_spec, SpecFile};
use crate::syntax::{parse_program, pretty, Command, Label};
use crate::vcgen::{check_condition_c, discharge, encoded_rel_vcs, encoded_unary_vcs, rel_vcs, unary_vcs, RelSetup, Vc};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {msg}")]
    Input { path: String, msg: String },
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input { .. } | CliError::Precondition(_) => EXIT_USAGE,
            CliError::Failure(_) => EXIT_FAIL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gclrel", version, about = "Unary and relational verification of guarded command programs")]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// Lower end of the default value range.
    #[arg(long, default_value_t = DEFAULT_LO, allow_negative_numbers = true)]
    pub min: i64,
    /// Upper end of the default value range.
    #[arg(long, default_value_t = DEFAULT_HI, allow_negative_numbers = true)]
    pub max: i64,
    /// Per-variable range `x=LO..HI`; repeatable.
    #[arg(long = "range", value_name = "X=LO..HI")]
    pub ranges: Vec<String>,
    /// Step budget for executions.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: usize,
    /// Extra variables to enumerate, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub vars: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Parse a program and print it with explicit labels.
    Parse { file: PathBuf },
    /// Run a program from the given initial store.
    Run {
        file: PathBuf,
        /// Initial value `x=N`; repeatable. Unset variables start at 0.
        #[arg(long = "set", value_name = "X=N", allow_hyphen_values = true)]
        set: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
    },
    /// Print the program automaton.
    Aut {
        file: PathBuf,
        #[arg(long)]
        fin: Label,
        #[arg(long)]
        dump_edges: bool,
    },
    /// Print the automaton normal form.
    Normalize {
        file: PathBuf,
        #[arg(long)]
        fin: Label,
        #[arg(long, default_value = "pc")]
        pc: String,
        /// Also check the normal-form equivalence over the bound.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Decide equivalence of two programs over the bound.
    CheckEquiv {
        file: PathBuf,
        file2: PathBuf,
        /// Print the KAT terms of both programs.
        #[arg(long)]
        kat_dump: bool,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Unary verification conditions of an annotated program.
    Vcgen {
        file: PathBuf,
        #[arg(long)]
        fin: Label,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        discharge: bool,
        /// Conjoin each condition with its counter test.
        #[arg(long)]
        encoded: bool,
        #[arg(long, default_value = "pc")]
        pc: String,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Relational verification conditions of an annotated alignment automaton.
    Rvcgen {
        file: PathBuf,
        file2: PathBuf,
        #[arg(long)]
        fin: Label,
        #[arg(long)]
        fin2: Label,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        discharge: bool,
        /// Emit the counter-encoded conditions.
        #[arg(long)]
        encoded: bool,
        #[arg(long, default_value = "pc")]
        pc: String,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Synthesize and check an HL+ proof from an annotation.
    ProveUnary {
        file: PathBuf,
        #[arg(long)]
        fin: Label,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "pc")]
        pc: String,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Synthesize and check an RHL+ proof from an annotated alignment.
    ProveRel {
        file: PathBuf,
        file2: PathBuf,
        #[arg(long)]
        fin: Label,
        #[arg(long)]
        fin2: Label,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "pc")]
        pc: String,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        #[command(flatten)]
        bound: BoundArgs,
    },
    /// Check a proof document.
    CheckProof {
        file: PathBuf,
        /// Accept only certified equivalence shapes.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        bound: BoundArgs,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input { path: path.display().to_string(), msg: e.to_string() })
}

fn load_program(path: &Path) -> Result<Command, CliError> {
    parse_program(&read(path)?).map_err(|e| CliError::Input { path: path.display().to_string(), msg: e.to_string() })
}

fn load_spec(path: &Path, arity: Arity) -> Result<SpecFile, CliError> {
    parse_spec(&read(path)?, arity).map_err(|e| CliError::Input { path: path.display().to_string(), msg: e.to_string() })
}

fn load_aut(c: &Command, fin: Label) -> Result<ProgramAut, CliError> {
    aut(c, fin).map_err(|e| CliError::Precondition(e.to_string()))
}

fn require_fresh(pc: &str, cs: &[&Command]) -> Result<(), CliError> {
    if cs.iter().any(|c| c.vars().contains(pc)) {
        return Err(CliError::Precondition(format!("counter variable '{pc}' occurs in the input program")));
    }
    Ok(())
}

fn parse_range(s: &str) -> Result<(String, i64, i64), CliError> {
    let bad = || CliError::Precondition(format!("bad range '{s}', expected X=LO..HI"));
    let (x, r) = s.split_once('=').ok_or_else(bad)?;
    let (lo, hi) = r.split_once("..").ok_or_else(bad)?;
    let lo = lo.trim().parse().map_err(|_| bad())?;
    let hi = hi.trim().parse().map_err(|_| bad())?;
    Ok((x.trim().to_string(), lo, hi))
}

impl BoundArgs {
    pub fn bound(&self, vars: impl IntoIterator<Item = String>) -> Result<DomainBound, CliError> {
        let mut all: BTreeSet<String> = vars.into_iter().collect();
        all.extend(self.vars.iter().cloned());
        let all: Vec<String> = all.into_iter().collect();
        let mut b = DomainBound::new(&all, self.min, self.max).with_budget(self.budget);
        for r in &self.ranges {
            let (x, lo, hi) = parse_range(r)?;
            b = b.with_range(&x, lo, hi);
        }
        Ok(b)
    }
}

fn formula_vars(fs: &[&Formula]) -> BTreeSet<String> {
    fs.iter().flat_map(|f| f.vars_left().into_iter().chain(f.vars_right())).collect()
}

fn verdict_code(v: &Verdict) -> i32 {
    match v {
        Verdict::Valid => EXIT_OK,
        Verdict::Counterexample(_) => EXIT_FAIL,
        Verdict::Inconclusive(_) => EXIT_INCONCLUSIVE,
    }
}

fn show_vc_results(vcs: &[Vc], results: Option<&[(String, Verdict)]>, out: &mut String) -> Verdict {
    let mut total = Verdict::Valid;
    for (i, vc) in vcs.iter().enumerate() {
        out.push_str(&vc.to_string());
        out.push('\n');
        if let Some(rs) = results {
            let v = &rs[i].1;
            out.push_str(&format!("  {}\n", v.to_string().replace('\n', "\n  ")));
            total = total.and(v.clone());
        }
    }
    if let Some(rs) = results {
        let ok = rs.iter().filter(|(_, v)| v.is_valid()).count();
        out.push_str(&format!("{} conditions, {} valid: {}\n", rs.len(), ok, total.label()));
    }
    total
}

/// Unary annotation with the specification filling the initial and final points.
fn unary_annotation(spec: &SpecFile, c: &Command, fin: Label) -> UnaryAnnotation {
    let mut an = spec.unary.clone();
    if let Some(p) = &spec.pre {
        an.map.entry(c.lab()).or_insert_with(|| p.clone());
    }
    if let Some(q) = &spec.post {
        an.map.entry(fin).or_insert_with(|| q.clone());
    }
    an
}

fn rel_annotation(spec: &SpecFile, c: &Command, c2: &Command, fin: Label, fin2: Label) -> RelAnnotation {
    let mut an = spec.rel.clone();
    if let Some(p) = &spec.pre {
        an.map.entry((c.lab(), c2.lab())).or_insert_with(|| p.clone());
    }
    if let Some(q) = &spec.post {
        an.map.entry((fin, fin2)).or_insert_with(|| q.clone());
    }
    an
}

/// Adjusts the root to the declared pre- and postcondition when the
/// annotation's initial or final assertion differs from them.
fn fit_root(t: ProofTree, pre: Option<&Formula>, post: Option<&Formula>) -> Result<ProofTree, ProofError> {
    let pre = pre.unwrap_or(t.conclusion.pre()).clone();
    let post = post.unwrap_or(t.conclusion.post()).clone();
    if *t.conclusion.pre() == pre && *t.conclusion.post() == post {
        return Ok(t);
    }
    let j = t.conclusion.with_pre(pre).with_post(post);
    let rule = if matches!(j, Judgment::Unary { .. }) { Rule::Conseq } else { Rule::RConseq };
    ProofTree::build(rule, j, Params::None, vec![t])
}

fn rule_summary(t: &ProofTree) -> String {
    Rule::ALL
        .iter()
        .filter_map(|r| {
            let n = t.count(*r);
            (n > 0).then(|| format!("{}={}", r.name(), n))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn synth_error(e: SynthError) -> CliError {
    match e {
        SynthError::VcFailure(_) | SynthError::ConditionC(_) => CliError::Failure(e.to_string()),
        other => CliError::Precondition(other.to_string()),
    }
}

fn finish_proof(
    t: ProofTree,
    pc: &str,
    domain: Vec<Label>,
    bound: &DomainBound,
    output: Option<&PathBuf>,
    out: &mut String,
) -> Result<i32, CliError> {
    let pb = bound.clone().with_pc(pc, domain.clone());
    let report = check_proof_with(&t, &pb, &CheckOptions::default()).map_err(|e| CliError::Failure(e.to_string()))?;
    out.push_str(&format!("conclusion: {}\n", t.conclusion));
    out.push_str(&format!("nodes: {}  depth: {}\n", t.size(), t.depth()));
    out.push_str(&format!("rules: {}\n", rule_summary(&t)));
    out.push_str(&format!(
        "obligations: {}  certified equivalences: {}  bounded equivalences: {}\n",
        report.obligations, report.certified_equivalences, report.bounded_equivalences
    ));
    for f in report.failures.iter().take(10) {
        out.push_str(&format!("failed {}: {}\n", f.id, f.verdict.to_string().replace('\n', "\n  ")));
    }
    out.push_str(&format!("check: {}\n", report.verdict.label()));
    if let Some(path) = output {
        let mut domain = domain;
        domain.sort();
        domain.dedup();
        let doc = ProofDocument { pc: pc.to_string(), pc_domain: domain, root: t };
        fs::write(path, to_json(&doc))
            .map_err(|e| CliError::Input { path: path.display().to_string(), msg: e.to_string() })?;
        out.push_str(&format!("wrote {}\n", path.display()));
    }
    Ok(verdict_code(&report.verdict))
}

/// Executes a parsed command line, appending standard output to `out`.
pub fn execute(cli: &Cli, out: &mut String) -> Result<i32, CliError> {
    match &cli.cmd {
        Cmd::Parse { file } => {
            let c = load_program(file)?;
            out.push_str(&pretty(&c, false));
            out.push('\n');
            Ok(EXIT_OK)
        }
        Cmd::Run { file, set, budget } => {
            let c = load_program(file)?;
            let mut s = Store::new();
            for x in &c.vars() {
                s.insert(x.clone(), 0);
            }
            for a in set {
                let (x, v) = a
                    .split_once('=')
                    .and_then(|(x, v)| Some((x.trim().to_string(), v.trim().parse::<i64>().ok()?)))
                    .ok_or_else(|| CliError::Precondition(format!("bad assignment '{a}', expected X=N")))?;
                s.insert(x, v);
            }
            let r = run(&c, &s, *budget);
            for t in &r.outcomes {
                out.push_str(&format!("[{}]\n", show_store(t)));
            }
            if r.status == RunStatus::BudgetExceeded {
                out.push_str("INCONCLUSIVE (step budget exceeded)\n");
                return Ok(EXIT_INCONCLUSIVE);
            }
            if r.outcomes.is_empty() {
                out.push_str("no final store (blocked)\n");
            }
            Ok(EXIT_OK)
        }
        Cmd::Aut { file, fin, dump_edges } => {
            let c = load_program(file)?;
            let a = load_aut(&c, *fin)?;
            out.push_str(&format!("init: {}\nfin: {}\n", a.init(), a.fin));
            for n in a.labs() {
                out.push_str(&format!("{n}: fsuc={} sub={}\n", a.fsuc(n).expect("label"), a.sub(n).expect("label")));
            }
            if *dump_edges {
                for e in edges(&a) {
                    let guard = e.guard.map(|g| format!(" [{g}]")).unwrap_or_default();
                    let asg = e.assign.map(|(x, v)| format!(" {x} := {v}")).unwrap_or_default();
                    out.push_str(&format!("{} -> {} {}{}{}\n", e.from, e.to, e.kind.name(), guard, asg));
                }
            }
            Ok(EXIT_OK)
        }
        Cmd::Normalize { file, fin, pc, verify, bound } => {
            let c = load_program(file)?;
            require_fresh(pc, &[&c])?;
            let nf = normalize(&c, *fin, pc).map_err(|e| CliError::Precondition(e.to_string()))?;
            out.push_str(&nf.to_string());
            out.push('\n');
            if *verify {
                let b = bound.bound(c.vars())?;
                let v = verify_norm_equiv(&c, *fin, pc, &b).map_err(|e| CliError::Precondition(e.to_string()))?;
                out.push_str(&format!("normal-form equivalence: {v}\n"));
                return Ok(verdict_code(&v));
            }
            Ok(EXIT_OK)
        }
        Cmd::CheckEquiv { file, file2, kat_dump, bound } => {
            let (c, d) = (load_program(file)?, load_program(file2)?);
            if *kat_dump {
                out.push_str(&format!("left: {}\nright: {}\n", mkt(&c), mkt(&d)));
            }
            let b = bound.bound(c.vars().into_iter().chain(d.vars()))?;
            let v = equiv_commands(&c, &d, &b);
            out.push_str(&format!("equivalence: {v}\n"));
            Ok(verdict_code(&v))
        }
        Cmd::Vcgen { file, fin, spec, discharge: dis, encoded, pc, bound } => {
            let c = load_program(file)?;
            if *encoded {
                require_fresh(pc, &[&c])?;
            }
            let a = load_aut(&c, *fin)?;
            let sp = load_spec(spec, Arity::Unary)?;
            let an = unary_annotation(&sp, &c, *fin);
            let vcs = if *encoded { encoded_unary_vcs(&a, &an, pc) } else { unary_vcs(&a, &an) };
            let fs: Vec<&Formula> = an.map.values().collect();
            let b = bound.bound(c.vars().into_iter().chain(formula_vars(&fs)).chain(sp.vars.iter().cloned()))?;
            let b = if *encoded { pc_bound(&b, pc, a.ctrl()) } else { b };
            let results = dis.then(|| discharge(&vcs, &b));
            let v = show_vc_results(&vcs, results.as_deref(), out);
            Ok(verdict_code(&v))
        }
        Cmd::Rvcgen { file, file2, fin, fin2, spec, discharge: dis, encoded, pc, bound } => {
            let (c, c2) = (load_program(file)?, load_program(file2)?);
            if *encoded {
                require_fresh(pc, &[&c, &c2])?;
            }
            let (a, a2) = (load_aut(&c, *fin)?, load_aut(&c2, *fin2)?);
            let sp = load_spec(spec, Arity::Rel)?;
            let an = rel_annotation(&sp, &c, &c2, *fin, *fin2);
            let setup = RelSetup { left: &a, right: &a2, an: &an, l: &sp.l, r: &sp.r, j: &sp.j };
            let restricted = restrict_live(&a, &a2, &sp.l, &sp.r, &sp.j);
            let live = RelSetup { left: &a, right: &a2, an: &an, l: &restricted.0, r: &restricted.1, j: &restricted.2 };
            let vcs = if *encoded { encoded_rel_vcs(&live, pc) } else { rel_vcs(&setup) };
            let fs: Vec<&Formula> = an.map.values().collect();
            let b = bound.bound(c.vars().into_iter().chain(c2.vars()).chain(formula_vars(&fs)).chain(sp.vars.iter().cloned()))?;
            let b = if *encoded { pc_bound(&b, pc, a.ctrl().into_iter().chain(a2.ctrl())) } else { b };
            let results = dis.then(|| discharge(&vcs, &b));
            let mut v = show_vc_results(&vcs, results.as_deref(), out);
            if *dis {
                let cc = check_condition_c(&live, &b);
                out.push_str(&format!("alignment coverage: {}\n", cc.to_string().replace('\n', "\n  ")));
                v = v.and(cc);
            }
            Ok(verdict_code(&v))
        }
        Cmd::ProveUnary { file, fin, spec, pc, output, bound } => {
            let c = load_program(file)?;
            require_fresh(pc, &[&c])?;
            let sp = load_spec(spec, Arity::Unary)?;
            let an = unary_annotation(&sp, &c, *fin);
            let fs: Vec<&Formula> = an.map.values().collect();
            let b = bound.bound(c.vars().into_iter().chain(formula_vars(&fs)).chain(sp.vars.iter().cloned()))?;
            let t = synthesize_unary(&c, *fin, &an, pc, &b).map_err(synth_error)?;
            let t = fit_root(t, sp.pre.as_ref(), sp.post.as_ref()).map_err(|e| CliError::Failure(e.to_string()))?;
            let domain = c.labs().into_iter().chain([*fin]).collect();
            finish_proof(t, pc, domain, &b, output.as_ref(), out)
        }
        Cmd::ProveRel { file, file2, fin, fin2, spec, pc, output, bound } => {
            let (c, c2) = (load_program(file)?, load_program(file2)?);
            require_fresh(pc, &[&c, &c2])?;
            let sp = load_spec(spec, Arity::Rel)?;
            let an = rel_annotation(&sp, &c, &c2, *fin, *fin2);
            let fs: Vec<&Formula> = an.map.values().collect();
            let b = bound.bound(c.vars().into_iter().chain(c2.vars()).chain(formula_vars(&fs)).chain(sp.vars.iter().cloned()))?;
            let p = RelProblem {
                left: c.clone(),
                right: c2.clone(),
                fin: *fin,
                fin2: *fin2,
                l: sp.l.clone(),
                r: sp.r.clone(),
                j: sp.j.clone(),
                an,
                pc: pc.clone(),
            };
            let t = synthesize_relational(&p, &b).map_err(synth_error)?;
            let t = fit_root(t, sp.pre.as_ref(), sp.post.as_ref()).map_err(|e| CliError::Failure(e.to_string()))?;
            let domain = rel_pc_bound(&p, &b).pc.map(|(_, d)| d).unwrap_or_default();
            finish_proof(t, pc, domain, &b, output.as_ref(), out)
        }
        Cmd::CheckProof { file, strict, bound } => {
            let doc = from_json(&read(file)?).map_err(|e| CliError::Input { path: file.display().to_string(), msg: e.to_string() })?;
            let b = bound.bound(Vec::new())?.with_pc(&doc.pc, doc.pc_domain.clone());
            match check_proof_with(&doc.root, &b, &CheckOptions { strict: *strict }) {
                Err(e) => {
                    out.push_str(&format!("{e}\ncheck: MALFORMED\n"));
                    Ok(EXIT_FAIL)
                }
                Ok(report) => {
                    out.push_str(&format!("conclusion: {}\n", doc.root.conclusion));
                    out.push_str(&format!(
                        "nodes: {}  obligations: {}  certified equivalences: {}  bounded equivalences: {}\n",
                        report.nodes, report.obligations, report.certified_equivalences, report.bounded_equivalences
                    ));
                    for f in report.failures.iter().take(10) {
                        out.push_str(&format!("failed {}: {}\n", f.id, f.verdict.to_string().replace('\n', "\n  ")));
                    }
                    out.push_str(&format!("check: {}\n", report.verdict.label()));
                    Ok(verdict_code(&report.verdict))
                }
            }
        }
    }
}

/// Parses `argv`, runs the command and returns the exit code with the
/// standard output and error text.
pub fn main_with<I, T>(argv: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK { (code, text, String::new()) } else { (code, String::new(), text) };
        }
    };
    let mut out = String::new();
    match execute(&cli, &mut out) {
        Ok(code) => (code, out, String::new()),
        Err(e) => (e.code(), out, format!("error: {e}\n")),
    }
}
