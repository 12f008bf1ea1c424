//! Judgments and proof trees for the unary logic HL+ and the relational logic
//! RHL+, rule schemas, a checker with bounded side conditions, expansion of
//! derived rules, the two constructive proof synthesizers, a provenance
//! audit, and a JSON exchange format.
//!
//! Premises and conclusions are linked by syntactic equality of commands and
//! formulas, so every rule has one canonical shape for its premises. The
//! functions in this module build those shapes; the checker and the
//! synthesizers share them.

mod audit;
mod check;
mod derived;
mod json;
mod synth;

use std::fmt;

use thiserror::Error;

use crate::assertions::{Arity, Formula, Side};
use crate::syntax::{enab, BoolExpr, Command, GuardedCmd, IntExpr};

pub use audit::{audit_provenance, AuditIssue, Provenance};
pub use check::{check_proof, check_proof_with, certified_equivalence, CheckOptions, CheckReport, Failure};
pub use derived::expand_derived;
pub use json::{from_json, to_json, ProofDocument};
pub use synth::{
    rel_pc_bound,
    synthesize_relational, synthesize_relational_unchecked, synthesize_unary, synthesize_unary_unchecked, RelProblem,
    SynthError,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProofError {
    #[error("malformed node at {path}: {msg}")]
    Malformed { path: String, msg: String },
    #[error("proof document: {0}")]
    Format(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Skip,
    Asgn,
    Seq,
    If,
    Do,
    Conseq,
    False,
    Rewrite,
    Ghost,
    DSkip,
    DAsgn,
    DSeq,
    DIf,
    DDo,
    AsgnSkip,
    SkipAsgn,
    RConseq,
    RDisj,
    RFalse,
    RRewrite,
    RGhost,
    RDisjN,
    SeqSkip,
    IfSkip,
    DoSkip,
    AlgnIf,
}

impl Rule {
    pub const ALL: [Rule; 26] = [
        Rule::Skip,
        Rule::Asgn,
        Rule::Seq,
        Rule::If,
        Rule::Do,
        Rule::Conseq,
        Rule::False,
        Rule::Rewrite,
        Rule::Ghost,
        Rule::DSkip,
        Rule::DAsgn,
        Rule::DSeq,
        Rule::DIf,
        Rule::DDo,
        Rule::AsgnSkip,
        Rule::SkipAsgn,
        Rule::RConseq,
        Rule::RDisj,
        Rule::RFalse,
        Rule::RRewrite,
        Rule::RGhost,
        Rule::RDisjN,
        Rule::SeqSkip,
        Rule::IfSkip,
        Rule::DoSkip,
        Rule::AlgnIf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Rule::Skip => "Skip",
            Rule::Asgn => "Asgn",
            Rule::Seq => "Seq",
            Rule::If => "If",
            Rule::Do => "Do",
            Rule::Conseq => "Conseq",
            Rule::False => "False",
            Rule::Rewrite => "Rewrite",
            Rule::Ghost => "Ghost",
            Rule::DSkip => "dSkip",
            Rule::DAsgn => "dAsgn",
            Rule::DSeq => "dSeq",
            Rule::DIf => "dIf",
            Rule::DDo => "dDo",
            Rule::AsgnSkip => "AsgnSkip",
            Rule::SkipAsgn => "SkipAsgn",
            Rule::RConseq => "rConseq",
            Rule::RDisj => "rDisj",
            Rule::RFalse => "rFalse",
            Rule::RRewrite => "rRewrite",
            Rule::RGhost => "rGhost",
            Rule::RDisjN => "rDisjN",
            Rule::SeqSkip => "SeqSkip",
            Rule::IfSkip => "IfSkip",
            Rule::DoSkip => "DoSkip",
            Rule::AlgnIf => "AlgnIf",
        }
    }

    pub fn from_name(s: &str) -> Option<Rule> {
        Rule::ALL.iter().copied().find(|r| r.name() == s)
    }

    pub fn is_derived(&self) -> bool {
        matches!(self, Rule::RDisjN | Rule::SeqSkip | Rule::IfSkip | Rule::DoSkip | Rule::AlgnIf)
    }

    pub fn is_relational(&self) -> bool {
        !matches!(
            self,
            Rule::Skip | Rule::Asgn | Rule::Seq | Rule::If | Rule::Do | Rule::Conseq | Rule::False | Rule::Rewrite | Rule::Ghost
        )
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `c : {P}{Q}` or `c | c' : {R}{S}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Judgment {
    Unary { cmd: Command, pre: Formula, post: Formula },
    Rel { left: Command, right: Command, pre: Formula, post: Formula },
}

impl Judgment {
    pub fn unary(cmd: Command, pre: Formula, post: Formula) -> Judgment {
        Judgment::Unary { cmd, pre, post }
    }

    pub fn rel(left: Command, right: Command, pre: Formula, post: Formula) -> Judgment {
        Judgment::Rel { left, right, pre, post }
    }

    pub fn pre(&self) -> &Formula {
        match self {
            Judgment::Unary { pre, .. } | Judgment::Rel { pre, .. } => pre,
        }
    }

    pub fn post(&self) -> &Formula {
        match self {
            Judgment::Unary { post, .. } | Judgment::Rel { post, .. } => post,
        }
    }

    pub fn arity(&self) -> Arity {
        match self {
            Judgment::Unary { .. } => Arity::Unary,
            Judgment::Rel { .. } => Arity::Rel,
        }
    }

    pub fn commands(&self) -> Vec<&Command> {
        match self {
            Judgment::Unary { cmd, .. } => vec![cmd],
            Judgment::Rel { left, right, .. } => vec![left, right],
        }
    }

    pub fn with_pre(&self, f: Formula) -> Judgment {
        let mut j = self.clone();
        match &mut j {
            Judgment::Unary { pre, .. } | Judgment::Rel { pre, .. } => *pre = f,
        }
        j
    }

    pub fn with_post(&self, f: Formula) -> Judgment {
        let mut j = self.clone();
        match &mut j {
            Judgment::Unary { post, .. } | Judgment::Rel { post, .. } => *post = f,
        }
        j
    }
}

impl fmt::Display for Judgment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.arity();
        match self {
            Judgment::Unary { cmd, pre, post } => write!(f, "{cmd} : {{{}}}{{{}}}", pre.render(a), post.render(a)),
            Judgment::Rel { left, right, pre, post } => {
                write!(f, "{left} | {right} : {{{}}}{{{}}}", pre.render(a), post.render(a))
            }
        }
    }
}

/// Rule parameters that the conclusion does not determine.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum Params {
    #[default]
    None,
    Ghost(String),
    RGhost(String, String),
    /// The left-only and right-only conditions of a `dDo` instance.
    Align { l: Formula, r: Formula },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObligationKind {
    Entails { ante: Formula, cons: Formula },
    /// The loop side condition of `dDo`, as an entailment.
    SideCondition { ante: Formula, cons: Formula },
    /// `lhs ≃ rhs`, checked in the bounded model.
    Equiv { lhs: Command, rhs: Command },
    Ghost { var: String, cmd: Command },
    Indep { left: Option<String>, right: Option<String>, formula: Formula },
}

impl ObligationKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ObligationKind::Entails { .. } => "entails",
            ObligationKind::SideCondition { .. } => "side-condition",
            ObligationKind::Equiv { .. } => "equivalence",
            ObligationKind::Ghost { .. } => "ghost",
            ObligationKind::Indep { .. } => "indep",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Obligation {
    /// Name local to the node; the full id prefixes the node path.
    pub name: String,
    pub kind: ObligationKind,
}

impl Obligation {
    fn entails(name: &str, ante: &Formula, cons: &Formula) -> Obligation {
        Obligation { name: name.into(), kind: ObligationKind::Entails { ante: ante.clone(), cons: cons.clone() } }
    }

    fn equiv(name: &str, lhs: &Command, rhs: &Command) -> Obligation {
        Obligation { name: name.into(), kind: ObligationKind::Equiv { lhs: lhs.clone(), rhs: rhs.clone() } }
    }

    fn ghost(name: &str, var: &str, cmd: &Command) -> Obligation {
        Obligation { name: name.into(), kind: ObligationKind::Ghost { var: var.into(), cmd: cmd.clone() } }
    }

    fn indep(name: &str, left: Option<&str>, right: Option<&str>, f: &Formula) -> Obligation {
        Obligation {
            name: name.into(),
            kind: ObligationKind::Indep {
                left: left.map(str::to_string),
                right: right.map(str::to_string),
                formula: f.clone(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub rule: Rule,
    pub conclusion: Judgment,
    pub params: Params,
    pub premises: Vec<ProofTree>,
    pub obligations: Vec<Obligation>,
}

impl ProofTree {
    /// Builds a node, filling in the obligations its rule requires. Fails when
    /// the premises do not fit the rule.
    pub fn build(rule: Rule, conclusion: Judgment, params: Params, premises: Vec<ProofTree>) -> Result<ProofTree, ProofError> {
        let mut t = ProofTree { rule, conclusion, params, premises, obligations: Vec::new() };
        t.obligations = schema(&t).map_err(|msg| ProofError::Malformed { path: "/".into(), msg })?;
        Ok(t)
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(ProofTree::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.premises.iter().map(ProofTree::depth).max().unwrap_or(0)
    }

    /// Number of nodes using `rule`.
    pub fn count(&self, rule: Rule) -> usize {
        usize::from(self.rule == rule) + self.premises.iter().map(|p| p.count(rule)).sum::<usize>()
    }

    pub fn obligation_count(&self) -> usize {
        self.obligations.len() + self.premises.iter().map(ProofTree::obligation_count).sum::<usize>()
    }

    /// Visits nodes in preorder with their paths.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&[usize], &'a ProofTree)) {
        fn go<'a>(t: &'a ProofTree, path: &mut Vec<usize>, f: &mut impl FnMut(&[usize], &'a ProofTree)) {
            f(path, t);
            for (i, p) in t.premises.iter().enumerate() {
                path.push(i);
                go(p, path, f);
                path.pop();
            }
        }
        go(self, &mut Vec::new(), f)
    }

    pub fn node(&self, path: &[usize]) -> Option<&ProofTree> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.premises.get(*i)?.node(rest),
        }
    }

    pub fn node_mut(&mut self, path: &[usize]) -> Option<&mut ProofTree> {
        match path.split_first() {
            None => Some(self),
            Some((i, rest)) => self.premises.get_mut(*i)?.node_mut(rest),
        }
    }
}

pub fn path_string(path: &[usize]) -> String {
    if path.is_empty() {
        "/".to_string()
    } else {
        path.iter().map(|i| format!("/{i}")).collect()
    }
}

// ---------------------------------------------------------------------------
// Canonical formula shapes

/// `e ∧ P`, the premise precondition of `If` and `Do`.
pub fn guarded(e: &BoolExpr, p: &Formula) -> Formula {
    Formula::and(Formula::test(e.clone()), p.clone())
}

/// `P ∧ ¬enab(gcs)`.
pub fn do_post(p: &Formula, gcs: &[GuardedCmd]) -> Formula {
    Formula::and(p.clone(), Formula::not(Formula::test(enab(gcs))))
}

/// `R ∧ ⌊e⌋ ∧ ⌈e'⌉`.
pub fn dif_pre(r: &Formula, e: &BoolExpr, e2: &BoolExpr) -> Formula {
    Formula::and(Formula::and(r.clone(), Formula::lhs(e.clone())), Formula::rhs(e2.clone()))
}

/// `R ∧ ⌊e⌋` (or `⌈e⌉` on the right).
pub fn side_pre(r: &Formula, side: Side, e: &BoolExpr) -> Formula {
    Formula::and(r.clone(), Formula::on(side, e.clone()))
}

/// `Q ∧ ⌊e⌋ ∧ L`.
pub fn ddo_lo_pre(q: &Formula, e: &BoolExpr, l: &Formula) -> Formula {
    Formula::and(side_pre(q, Side::L, e), l.clone())
}

/// `Q ∧ ⌈e'⌉ ∧ R`.
pub fn ddo_ro_pre(q: &Formula, e2: &BoolExpr, r: &Formula) -> Formula {
    Formula::and(side_pre(q, Side::R, e2), r.clone())
}

/// `Q ∧ ⌊e⌋ ∧ ⌈e'⌉ ∧ ¬L ∧ ¬R`.
pub fn ddo_jo_pre(q: &Formula, e: &BoolExpr, e2: &BoolExpr, l: &Formula, r: &Formula) -> Formula {
    Formula::and(Formula::and(dif_pre(q, e, e2), Formula::not(l.clone())), Formula::not(r.clone()))
}

/// `Q ∧ ¬⌊enab(gcs)⌋ ∧ ¬⌈enab(gcs')⌉`.
pub fn ddo_post(q: &Formula, gcs: &[GuardedCmd], gcs2: &[GuardedCmd]) -> Formula {
    Formula::and(
        Formula::and(q.clone(), Formula::not(Formula::lhs(enab(gcs)))),
        Formula::not(Formula::rhs(enab(gcs2))),
    )
}

/// `⌊e⌋ = ⌈e'⌉` as a formula.
pub fn same_truth(e: &BoolExpr, e2: &BoolExpr) -> Formula {
    let (a, b) = (Formula::lhs(e.clone()), Formula::rhs(e2.clone()));
    Formula::or(Formula::and(a.clone(), b.clone()), Formula::and(Formula::not(a), Formula::not(b)))
}

/// Consequent of the `dDo` side condition.
pub fn ddo_side(gcs: &[GuardedCmd], gcs2: &[GuardedCmd], l: &Formula, r: &Formula) -> Formula {
    let (en, en2) = (enab(gcs), enab(gcs2));
    Formula::or(
        Formula::or(same_truth(&en, &en2), Formula::and(l.clone(), Formula::lhs(en))),
        Formula::and(r.clone(), Formula::rhs(en2)),
    )
}

/// `Q ∧ ¬⌊enab(gcs)⌋` (or the right-hand version).
pub fn one_sided_do_post(q: &Formula, side: Side, gcs: &[GuardedCmd]) -> Formula {
    Formula::and(q.clone(), Formula::not(Formula::on(side, enab(gcs))))
}

pub fn skip0() -> Command {
    Command::Skip(0)
}

/// `if true -> skip fi`.
pub fn if_true_skip() -> Command {
    Command::If(0, vec![GuardedCmd { guard: BoolExpr::True, body: skip0() }])
}

/// `do false -> skip od`.
pub fn do_false_skip() -> Command {
    Command::Do(0, vec![GuardedCmd { guard: BoolExpr::False, body: skip0() }])
}

// ---------------------------------------------------------------------------
// Rule schemas

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn unary_parts(j: &Judgment) -> Result<(&Command, &Formula, &Formula), String> {
    match j {
        Judgment::Unary { cmd, pre, post } => Ok((cmd, pre, post)),
        Judgment::Rel { .. } => Err("expected a unary judgment".into()),
    }
}

fn rel_parts(j: &Judgment) -> Result<(&Command, &Command, &Formula, &Formula), String> {
    match j {
        Judgment::Rel { left, right, pre, post } => Ok((left, right, pre, post)),
        Judgment::Unary { .. } => Err("expected a relational judgment".into()),
    }
}

fn premise_count(t: &ProofTree, n: usize) -> Result<(), String> {
    ensure!(t.premises.len() == n, "{} expects {} premise(s), found {}", t.rule, n, t.premises.len());
    Ok(())
}

fn no_params(t: &ProofTree) -> Result<(), String> {
    ensure!(t.params == Params::None, "{} takes no parameters", t.rule);
    Ok(())
}

fn assign_of(c: &Command) -> Option<(&str, &IntExpr)> {
    match c {
        Command::Assign(_, x, e) => Some((x.as_str(), e)),
        _ => None,
    }
}

fn is_skip(c: &Command) -> bool {
    matches!(c, Command::Skip(_))
}

fn gcs_of(c: &Command, want_do: bool) -> Option<&[GuardedCmd]> {
    match c {
        Command::Do(_, gcs) if want_do => Some(gcs),
        Command::If(_, gcs) if !want_do => Some(gcs),
        _ => None,
    }
}

/// Checks one unary premise against the expected command and assertions.
fn expect_unary(p: &ProofTree, i: usize, cmd: &Command, pre: &Formula, post: &Formula) -> Result<(), String> {
    let (c, a, b) = unary_parts(&p.conclusion).map_err(|e| format!("premise {i}: {e}"))?;
    ensure!(c == cmd, "premise {i}: command {c} does not match {cmd}");
    ensure!(a == pre, "premise {i}: precondition {} does not match {}", a.render(Arity::Unary), pre.render(Arity::Unary));
    ensure!(b == post, "premise {i}: postcondition {} does not match {}", b.render(Arity::Unary), post.render(Arity::Unary));
    Ok(())
}

/// Checks one relational premise; `None` commands only need to be `skip`.
fn expect_rel(
    p: &ProofTree,
    i: usize,
    left: Option<&Command>,
    right: Option<&Command>,
    pre: &Formula,
    post: &Formula,
) -> Result<(), String> {
    let (l, r, a, b) = rel_parts(&p.conclusion).map_err(|e| format!("premise {i}: {e}"))?;
    match left {
        Some(c) => ensure!(l == c, "premise {i}: left command {l} does not match {c}"),
        None => ensure!(is_skip(l), "premise {i}: left command {l} is not skip"),
    }
    match right {
        Some(c) => ensure!(r == c, "premise {i}: right command {r} does not match {c}"),
        None => ensure!(is_skip(r), "premise {i}: right command {r} is not skip"),
    }
    ensure!(a == pre, "premise {i}: precondition {} does not match {}", a.render(Arity::Rel), pre.render(Arity::Rel));
    ensure!(b == post, "premise {i}: postcondition {} does not match {}", b.render(Arity::Rel), post.render(Arity::Rel));
    Ok(())
}

/// Structural check of a node against its rule; returns the obligations the
/// rule requires, in order.
pub(crate) fn schema(t: &ProofTree) -> Result<Vec<Obligation>, String> {
    match t.params {
        Params::Ghost(_) if t.rule != Rule::Ghost => return Err(format!("{} takes no ghost parameter", t.rule)),
        Params::RGhost(..) if t.rule != Rule::RGhost => return Err(format!("{} takes no ghost parameters", t.rule)),
        Params::Align { .. } if t.rule != Rule::DDo => return Err(format!("{} takes no alignment parameters", t.rule)),
        _ => {}
    }
    if t.rule.is_relational() {
        rel_schema(t)
    } else {
        unary_schema(t)
    }
}

fn unary_schema(t: &ProofTree) -> Result<Vec<Obligation>, String> {
    let (c, pre, post) = unary_parts(&t.conclusion)?;
    match t.rule {
        Rule::Skip => {
            premise_count(t, 0)?;
            ensure!(is_skip(c), "Skip applies to skip, found {c}");
            ensure!(pre == post, "Skip needs equal pre- and postcondition");
            Ok(vec![])
        }
        Rule::Asgn => {
            premise_count(t, 0)?;
            let (x, e) = assign_of(c).ok_or_else(|| format!("Asgn applies to an assignment, found {c}"))?;
            ensure!(*pre == post.clone().subst1(x, e), "Asgn precondition must be the postcondition with {x} := {e}");
            Ok(vec![])
        }
        Rule::Seq => {
            premise_count(t, 2)?;
            let Command::Seq(a, b) = c else {
                return Err(format!("Seq applies to a sequence, found {c}"));
            };
            let mid = t.premises[0].conclusion.post().clone();
            expect_unary(&t.premises[0], 0, a, pre, &mid)?;
            expect_unary(&t.premises[1], 1, b, &mid, post)?;
            Ok(vec![])
        }
        Rule::If | Rule::Do => {
            let is_do = t.rule == Rule::Do;
            let gcs = gcs_of(c, is_do).ok_or_else(|| format!("{} does not apply to {c}", t.rule))?;
            premise_count(t, gcs.len())?;
            let inner_post = if is_do {
                ensure!(*post == do_post(pre, gcs), "Do postcondition must be P && !enab(gcs)");
                pre
            } else {
                post
            };
            for (i, gc) in gcs.iter().enumerate() {
                expect_unary(&t.premises[i], i, &gc.body, &guarded(&gc.guard, pre), inner_post)?;
            }
            Ok(vec![])
        }
        Rule::Conseq => {
            premise_count(t, 1)?;
            let (c1, r, s) = unary_parts(&t.premises[0].conclusion)?;
            ensure!(c1 == c, "Conseq premise command {c1} does not match {c}");
            Ok(vec![Obligation::entails("pre", pre, r), Obligation::entails("post", s, post)])
        }
        Rule::False => {
            premise_count(t, 0)?;
            ensure!(*pre == Formula::False, "False needs precondition false");
            Ok(vec![])
        }
        Rule::Rewrite => {
            premise_count(t, 1)?;
            let (c1, a, b) = unary_parts(&t.premises[0].conclusion)?;
            ensure!(a == pre && b == post, "Rewrite premise must have the same specification");
            Ok(vec![Obligation::equiv("equiv", c1, c)])
        }
        Rule::Ghost => {
            premise_count(t, 1)?;
            let Params::Ghost(x) = &t.params else {
                return Err("Ghost needs the ghost variable".into());
            };
            let (c1, a, b) = unary_parts(&t.premises[0].conclusion)?;
            ensure!(a == pre && b == post, "Ghost premise must have the same specification");
            ensure!(*c == c1.erase(x), "Ghost conclusion must erase {x} from the premise command");
            Ok(vec![
                Obligation::ghost("ghost", x, c1),
                Obligation::indep("indep-pre", Some(x), None, pre),
                Obligation::indep("indep-post", Some(x), None, post),
            ])
        }
        _ => unreachable!("relational rules are handled separately"),
    }
}

fn rel_schema(t: &ProofTree) -> Result<Vec<Obligation>, String> {
    let (c, c2, pre, post) = rel_parts(&t.conclusion)?;
    if !matches!(t.rule, Rule::DDo | Rule::RGhost) {
        no_params(t)?;
    }
    match t.rule {
        Rule::DSkip => {
            premise_count(t, 0)?;
            ensure!(is_skip(c) && is_skip(c2), "dSkip applies to skip | skip");
            ensure!(pre == post, "dSkip needs equal pre- and postcondition");
            Ok(vec![])
        }
        Rule::DAsgn | Rule::AsgnSkip | Rule::SkipAsgn => {
            premise_count(t, 0)?;
            let (l, r) = match t.rule {
                Rule::DAsgn => (assign_of(c), assign_of(c2)),
                Rule::AsgnSkip => {
                    ensure!(is_skip(c2), "AsgnSkip needs skip on the right");
                    (assign_of(c), None)
                }
                _ => {
                    ensure!(is_skip(c), "SkipAsgn needs skip on the left");
                    (None, assign_of(c2))
                }
            };
            ensure!(
                (l.is_some() || t.rule == Rule::SkipAsgn) && (r.is_some() || t.rule == Rule::AsgnSkip),
                "{} does not apply to {c} | {c2}",
                t.rule
            );
            ensure!(*pre == post.clone().subst_rel(l, r), "{} precondition must be the substituted postcondition", t.rule);
            Ok(vec![])
        }
        Rule::DSeq => {
            premise_count(t, 2)?;
            let (Command::Seq(a, b), Command::Seq(a2, b2)) = (c, c2) else {
                return Err(format!("dSeq applies to two sequences, found {c} | {c2}"));
            };
            let mid = t.premises[0].conclusion.post().clone();
            expect_rel(&t.premises[0], 0, Some(a), Some(a2), pre, &mid)?;
            expect_rel(&t.premises[1], 1, Some(b), Some(b2), &mid, post)?;
            Ok(vec![])
        }
        Rule::DIf => {
            let (Some(gcs), Some(gcs2)) = (gcs_of(c, false), gcs_of(c2, false)) else {
                return Err(format!("dIf applies to two conditionals, found {c} | {c2}"));
            };
            premise_count(t, gcs.len() * gcs2.len())?;
            for (i, gc) in gcs.iter().enumerate() {
                for (j, gc2) in gcs2.iter().enumerate() {
                    let k = i * gcs2.len() + j;
                    expect_rel(&t.premises[k], k, Some(&gc.body), Some(&gc2.body), &dif_pre(pre, &gc.guard, &gc2.guard), post)?;
                }
            }
            Ok(vec![])
        }
        Rule::DDo => {
            let Params::Align { l, r } = &t.params else {
                return Err("dDo needs its left-only and right-only conditions".into());
            };
            let (Some(gcs), Some(gcs2)) = (gcs_of(c, true), gcs_of(c2, true)) else {
                return Err(format!("dDo applies to two loops, found {c} | {c2}"));
            };
            let (n, m) = (gcs.len(), gcs2.len());
            premise_count(t, n + m + n * m)?;
            ensure!(*post == ddo_post(pre, gcs, gcs2), "dDo postcondition must be Q && !lhs(enab) && !rhs(enab')");
            for (i, gc) in gcs.iter().enumerate() {
                expect_rel(&t.premises[i], i, Some(&gc.body), None, &ddo_lo_pre(pre, &gc.guard, l), pre)?;
            }
            for (j, gc2) in gcs2.iter().enumerate() {
                let k = n + j;
                expect_rel(&t.premises[k], k, None, Some(&gc2.body), &ddo_ro_pre(pre, &gc2.guard, r), pre)?;
            }
            for (i, gc) in gcs.iter().enumerate() {
                for (j, gc2) in gcs2.iter().enumerate() {
                    let k = n + m + i * m + j;
                    let jo = ddo_jo_pre(pre, &gc.guard, &gc2.guard, l, r);
                    expect_rel(&t.premises[k], k, Some(&gc.body), Some(&gc2.body), &jo, pre)?;
                }
            }
            Ok(vec![Obligation {
                name: "side".into(),
                kind: ObligationKind::SideCondition { ante: pre.clone(), cons: ddo_side(gcs, gcs2, l, r) },
            }])
        }
        Rule::RConseq => {
            premise_count(t, 1)?;
            let (l, r, a, b) = rel_parts(&t.premises[0].conclusion)?;
            ensure!(l == c && r == c2, "rConseq premise commands must match the conclusion");
            Ok(vec![Obligation::entails("pre", pre, a), Obligation::entails("post", b, post)])
        }
        Rule::RDisj | Rule::RDisjN => {
            if t.rule == Rule::RDisj {
                premise_count(t, 2)?;
            }
            for (i, p) in t.premises.iter().enumerate() {
                let a = p.conclusion.pre().clone();
                expect_rel(p, i, Some(c), Some(c2), &a, post)?;
            }
            let pres: Vec<Formula> = t.premises.iter().map(|p| p.conclusion.pre().clone()).collect();
            let want = if t.rule == Rule::RDisj { Formula::or(pres[0].clone(), pres[1].clone()) } else { Formula::disj(pres) };
            ensure!(*pre == want, "{} precondition must be the disjunction of the premise preconditions", t.rule);
            Ok(vec![])
        }
        Rule::RFalse => {
            premise_count(t, 0)?;
            ensure!(*pre == Formula::False, "rFalse needs precondition false");
            Ok(vec![])
        }
        Rule::RRewrite => {
            premise_count(t, 1)?;
            let (l, r, a, b) = rel_parts(&t.premises[0].conclusion)?;
            ensure!(a == pre && b == post, "rRewrite premise must have the same specification");
            Ok(vec![Obligation::equiv("equiv-left", l, c), Obligation::equiv("equiv-right", r, c2)])
        }
        Rule::RGhost => {
            premise_count(t, 1)?;
            let Params::RGhost(x, x2) = &t.params else {
                return Err("rGhost needs the ghost variables".into());
            };
            let (l, r, a, b) = rel_parts(&t.premises[0].conclusion)?;
            ensure!(a == pre && b == post, "rGhost premise must have the same specification");
            ensure!(*c == l.erase(x) && *c2 == r.erase(x2), "rGhost conclusion must erase the ghost variables");
            Ok(vec![
                Obligation::ghost("ghost-left", x, l),
                Obligation::ghost("ghost-right", x2, r),
                Obligation::indep("indep-pre", Some(x), Some(x2), pre),
                Obligation::indep("indep-post", Some(x), Some(x2), post),
            ])
        }
        Rule::SeqSkip => {
            premise_count(t, 2)?;
            let side = one_sided(c, c2, |x| matches!(x, Command::Seq(..)))?;
            let seq = if side == Side::L { c } else { c2 };
            let Command::Seq(a, b) = seq else { unreachable!() };
            let mid = t.premises[0].conclusion.post().clone();
            let (p0, p1) = match side {
                Side::L => ((Some(&**a), None), (Some(&**b), None)),
                Side::R => ((None, Some(&**a)), (None, Some(&**b))),
            };
            expect_rel(&t.premises[0], 0, p0.0, p0.1, pre, &mid)?;
            expect_rel(&t.premises[1], 1, p1.0, p1.1, &mid, post)?;
            Ok(vec![])
        }
        Rule::IfSkip | Rule::DoSkip => {
            let is_do = t.rule == Rule::DoSkip;
            let side = one_sided(c, c2, |x| gcs_of(x, is_do).is_some())?;
            let gcs = gcs_of(if side == Side::L { c } else { c2 }, is_do).expect("checked above");
            premise_count(t, gcs.len())?;
            let inner_post = if is_do {
                ensure!(*post == one_sided_do_post(pre, side, gcs), "DoSkip postcondition must be Q && !enab(gcs) on the loop side");
                pre
            } else {
                post
            };
            for (i, gc) in gcs.iter().enumerate() {
                let (l, r) = if side == Side::L { (Some(&gc.body), None) } else { (None, Some(&gc.body)) };
                expect_rel(&t.premises[i], i, l, r, &side_pre(pre, side, &gc.guard), inner_post)?;
            }
            Ok(vec![])
        }
        Rule::AlgnIf => {
            premise_count(t, 2)?;
            let (Some([g1, g2]), Some([h1, h2])) = (gcs_of(c, false).and_then(two), gcs_of(c2, false).and_then(two)) else {
                return Err("AlgnIf applies to two conditionals with two branches each".into());
            };
            ensure!(g2.guard == BoolExpr::not(g1.guard.clone()), "AlgnIf left guards must be e and !e");
            ensure!(h2.guard == BoolExpr::not(h1.guard.clone()), "AlgnIf right guards must be e' and !e'");
            expect_rel(&t.premises[0], 0, Some(&g1.body), Some(&h1.body), &side_pre(pre, Side::L, &g1.guard), post)?;
            expect_rel(&t.premises[1], 1, Some(&g2.body), Some(&h2.body), &side_pre(pre, Side::L, &g2.guard), post)?;
            Ok(vec![Obligation::entails("align", pre, &same_truth(&g1.guard, &h1.guard))])
        }
        _ => unreachable!("unary rules are handled separately"),
    }
}

fn two(gcs: &[GuardedCmd]) -> Option<[&GuardedCmd; 2]> {
    match gcs {
        [a, b] => Some([a, b]),
        _ => None,
    }
}

/// Which side carries the construct in a one-sided rule, the other being skip.
fn one_sided(c: &Command, c2: &Command, is_construct: impl Fn(&Command) -> bool) -> Result<Side, String> {
    if is_construct(c) && is_skip(c2) {
        Ok(Side::L)
    } else if is_skip(c) && is_construct(c2) {
        Ok(Side::R)
    } else {
        Err(format!("one-sided rule does not apply to {c} | {c2}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::parse_formula;
    use crate::syntax::parse_command_exact;

    fn f(s: &str) -> Formula {
        parse_formula(s, Arity::Unary).unwrap()
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(Rule::from_name(r.name()), Some(r));
        }
        assert_eq!(Rule::ALL.iter().filter(|r| r.is_derived()).count(), 5);
    }

    #[test]
    fn assignment_schema() {
        let c = parse_command_exact("x@1 := x + 1").unwrap();
        let post = f("x > 1");
        let ok = Judgment::unary(c.clone(), post.clone().subst1("x", &crate::syntax::parse_int_expr("x + 1").unwrap()), post.clone());
        assert!(ProofTree::build(Rule::Asgn, ok, Params::None, vec![]).is_ok());
        let bad = Judgment::unary(c, f("x > 0"), post);
        assert!(ProofTree::build(Rule::Asgn, bad, Params::None, vec![]).is_err());
    }

    #[test]
    fn consequence_records_two_entailments() {
        let c = parse_command_exact("skip@1").unwrap();
        let leaf = ProofTree::build(Rule::Skip, Judgment::unary(c.clone(), f("x > 1"), f("x > 1")), Params::None, vec![]).unwrap();
        let t = ProofTree::build(Rule::Conseq, Judgment::unary(c, f("x > 2"), f("x > 0")), Params::None, vec![leaf]).unwrap();
        let names: Vec<&str> = t.obligations.iter().map(|o| o.name.as_str()).collect();
        assert_eq!(names, ["pre", "post"]);
        assert_eq!(t.size(), 2);
        assert_eq!(t.depth(), 2);
    }

    #[test]
    fn premise_count_is_checked() {
        let c = parse_command_exact("skip@1").unwrap();
        let j = Judgment::unary(c, f("true"), f("true"));
        assert!(ProofTree::build(Rule::Conseq, j, Params::None, vec![]).is_err());
    }

    #[test]
    fn paths_render() {
        assert_eq!(path_string(&[]), "/");
        assert_eq!(path_string(&[0, 2]), "/0/2");
    }
}
