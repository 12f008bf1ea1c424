//! Program-counter instrumentation and the automaton normal form
//! `!n ; do gcs od`, whose body has one guarded command per automaton edge.
//!
//! `!n` abbreviates `pc := n` and `?n` abbreviates `pc = n`. Synthesized
//! commands carry label 0.

use std::fmt;

use thiserror::Error;

use crate::kat::{equiv_semantic, mkt, mkt_bool, KatExpr};
use crate::semantics::{DomainBound, Verdict};
use crate::syntax::{enab, pretty, BoolExpr, Command, GuardedCmd, IntExpr, Label, SyntaxError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NfError {
    #[error("variable '{0}' occurs in the command")]
    PcNotFresh(String),
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("not a normal form guard: {0}")]
    NotNormalFormGuard(String),
}

/// `pc := n`, labeled 0.
pub fn set_pc(pc: &str, n: Label) -> Command {
    Command::Assign(0, pc.to_string(), IntExpr::Lit(n))
}

/// `pc = n`.
pub fn at_pc(pc: &str, n: Label) -> BoolExpr {
    BoolExpr::var_eq(pc, n)
}

fn fresh(pc: &str, c: &Command) -> Result<(), NfError> {
    if c.vars().contains(pc) {
        Err(NfError::PcNotFresh(pc.to_string()))
    } else {
        Ok(())
    }
}

/// Prefixes every labeled atom, conditional and loop with `!label`; loop
/// bodies also end by setting the counter back to the loop label.
pub fn add_pc(pc: &str, c: &Command) -> Result<Command, NfError> {
    fresh(pc, c)?;
    Ok(add(pc, c))
}

fn add(pc: &str, c: &Command) -> Command {
    match c {
        Command::Skip(n) | Command::Assign(n, ..) => Command::seq(set_pc(pc, *n), c.clone()),
        Command::Seq(a, b) => Command::seq(add(pc, a), add(pc, b)),
        Command::If(n, gcs) => {
            let body = gcs.iter().map(|gc| GuardedCmd { guard: gc.guard.clone(), body: add(pc, &gc.body) }).collect();
            Command::seq(set_pc(pc, *n), Command::If(*n, body))
        }
        Command::Do(n, gcs) => {
            let body = gcs
                .iter()
                .map(|gc| GuardedCmd { guard: gc.guard.clone(), body: Command::seq(add(pc, &gc.body), set_pc(pc, *n)) })
                .collect();
            Command::seq(set_pc(pc, *n), Command::Do(*n, body))
        }
    }
}

/// `add_pc(c) ; !f`, the instrumented program whose final counter is `f`.
pub fn instrumented(pc: &str, c: &Command, f: Label) -> Result<Command, NfError> {
    Ok(Command::seq(add_pc(pc, c)?, set_pc(pc, f)))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalForm {
    pub pc: String,
    pub init_assign: Command,
    pub body: Vec<GuardedCmd>,
    pub fin: Label,
}

impl NormalForm {
    /// The loop `do body od` on its own.
    pub fn loop_cmd(&self) -> Command {
        Command::Do(0, self.body.clone())
    }

    pub fn to_command(&self) -> Command {
        Command::seq(self.init_assign.clone(), self.loop_cmd())
    }

    pub fn init_label(&self) -> Label {
        match &self.init_assign {
            Command::Assign(_, _, IntExpr::Lit(n)) => *n,
            _ => unreachable!("normal form starts with a counter assignment"),
        }
    }
}

impl fmt::Display for NormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(&self.to_command(), true))
    }
}

/// The unique body `gcs` with `norm(c, f, gcs)`, followed by `!lab(c)`.
pub fn normalize(c: &Command, f: Label, pc: &str) -> Result<NormalForm, NfError> {
    c.check_okf(f)?;
    fresh(pc, c)?;
    let mut body = Vec::new();
    norm_into(c, f, pc, &mut body);
    Ok(NormalForm { pc: pc.to_string(), init_assign: set_pc(pc, c.lab()), body, fin: f })
}

/// Body construction without the well-formedness checks.
pub fn norm_body(c: &Command, f: Label, pc: &str) -> Vec<GuardedCmd> {
    let mut body = Vec::new();
    norm_into(c, f, pc, &mut body);
    body
}

fn dispatch(pc: &str, n: Label, e: &BoolExpr, m: Label) -> GuardedCmd {
    GuardedCmd { guard: BoolExpr::and(at_pc(pc, n), e.clone()), body: set_pc(pc, m) }
}

fn norm_into(c: &Command, f: Label, pc: &str, out: &mut Vec<GuardedCmd>) {
    match c {
        Command::Skip(n) => out.push(GuardedCmd { guard: at_pc(pc, *n), body: set_pc(pc, f) }),
        Command::Assign(n, x, e) => out.push(GuardedCmd {
            guard: at_pc(pc, *n),
            body: Command::seq(Command::Assign(0, x.clone(), e.clone()), set_pc(pc, f)),
        }),
        Command::Seq(a, b) => {
            norm_into(a, b.lab(), pc, out);
            norm_into(b, f, pc, out);
        }
        Command::If(n, gcs) => {
            for gc in gcs {
                out.push(dispatch(pc, *n, &gc.guard, gc.body.lab()));
            }
            for gc in gcs {
                norm_into(&gc.body, f, pc, out);
            }
        }
        Command::Do(n, gcs) => {
            for gc in gcs {
                out.push(dispatch(pc, *n, &gc.guard, gc.body.lab()));
            }
            out.push(dispatch(pc, *n, &BoolExpr::not(enab(gcs)), f));
            for gc in gcs {
                norm_into(&gc.body, *n, pc, out);
            }
        }
    }
}

/// Relational check of `norm(c, f, gcs)`, searching over every way of
/// splitting `gcs` among the sub-commands.
pub fn is_norm(c: &Command, f: Label, gcs: &[GuardedCmd], pc: &str) -> bool {
    match c {
        Command::Skip(n) => gcs == [GuardedCmd { guard: at_pc(pc, *n), body: set_pc(pc, f) }],
        Command::Assign(n, x, e) => {
            gcs == [GuardedCmd {
                guard: at_pc(pc, *n),
                body: Command::seq(Command::Assign(0, x.clone(), e.clone()), set_pc(pc, f)),
            }]
        }
        Command::Seq(a, b) => (1..gcs.len()).any(|k| is_norm(a, b.lab(), &gcs[..k], pc) && is_norm(b, f, &gcs[k..], pc)),
        Command::If(n, branches) | Command::Do(n, branches) => {
            let is_do = matches!(c, Command::Do(..));
            let mut head: Vec<GuardedCmd> = branches.iter().map(|gc| dispatch(pc, *n, &gc.guard, gc.body.lab())).collect();
            if is_do {
                head.push(dispatch(pc, *n, &BoolExpr::not(enab(branches)), f));
            }
            if gcs.len() < head.len() || gcs[..head.len()] != head[..] {
                return false;
            }
            let target = if is_do { *n } else { f };
            let bodies: Vec<&Command> = branches.iter().map(|gc| &gc.body).collect();
            norm_list(&bodies, target, &gcs[head.len()..], pc)
        }
    }
}

fn norm_list(cs: &[&Command], f: Label, gcs: &[GuardedCmd], pc: &str) -> bool {
    match cs {
        [] => gcs.is_empty(),
        [c] => is_norm(c, f, gcs, pc),
        [c, rest @ ..] => (1..gcs.len()).any(|k| is_norm(c, f, &gcs[..k], pc) && norm_list(rest, f, &gcs[k..], pc)),
    }
}

/// The five shapes of guarded commands in a normal form body.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GuardClass {
    Skip { k: Label, m: Label },
    Assign { k: Label, m: Label, x: String, e: IntExpr },
    IfBranch { k: Label, m: Label, guard: BoolExpr },
    DoEnter { k: Label, m: Label, guard: BoolExpr },
    DoExit { k: Label, m: Label },
}

impl GuardClass {
    pub fn name(&self) -> &'static str {
        match self {
            GuardClass::Skip { .. } => "skip",
            GuardClass::Assign { .. } => "assign",
            GuardClass::IfBranch { .. } => "if-branch",
            GuardClass::DoEnter { .. } => "do-enter",
            GuardClass::DoExit { .. } => "do-exit",
        }
    }

    /// Source and target control points.
    pub fn points(&self) -> (Label, Label) {
        match self {
            GuardClass::Skip { k, m }
            | GuardClass::Assign { k, m, .. }
            | GuardClass::IfBranch { k, m, .. }
            | GuardClass::DoEnter { k, m, .. }
            | GuardClass::DoExit { k, m } => (*k, *m),
        }
    }

    /// The program guard tested besides `?k`, if any.
    pub fn test(&self, c: &Command) -> Option<BoolExpr> {
        match self {
            GuardClass::Skip { .. } | GuardClass::Assign { .. } => None,
            GuardClass::IfBranch { guard, .. } | GuardClass::DoEnter { guard, .. } => Some(guard.clone()),
            GuardClass::DoExit { k, .. } => match c.sub(*k) {
                Some(Command::Do(_, gcs)) => Some(BoolExpr::not(enab(gcs))),
                _ => None,
            },
        }
    }

    /// The assignment performed besides the counter update, if any.
    pub fn assignment(&self) -> Option<(&str, &IntExpr)> {
        match self {
            GuardClass::Assign { x, e, .. } => Some((x.as_str(), e)),
            _ => None,
        }
    }
}

fn pc_lit(pc: &str, b: &BoolExpr) -> Option<Label> {
    match b {
        BoolExpr::Cmp(crate::syntax::CmpOp::Eq, IntExpr::Var(v), IntExpr::Lit(n)) if v == pc => Some(*n),
        _ => None,
    }
}

fn set_lit(pc: &str, c: &Command) -> Option<Label> {
    match c {
        Command::Assign(_, v, IntExpr::Lit(n)) if v == pc => Some(*n),
        _ => None,
    }
}

/// Identifies which of the five shapes `gc` has with respect to `c` and `f`,
/// checking the label correspondences.
pub fn classify_guard(gc: &GuardedCmd, c: &Command, f: Label, pc: &str) -> Result<GuardClass, NfError> {
    let bad = || NfError::NotNormalFormGuard(format!("{} -> {}", gc.guard, gc.body));
    let (k, test) = match &gc.guard {
        BoolExpr::And(a, e) if pc_lit(pc, a).is_some() => (pc_lit(pc, a).unwrap(), Some(&**e)),
        g => (pc_lit(pc, g).ok_or_else(bad)?, None),
    };
    let (asg, m) = match &gc.body {
        Command::Seq(a, b) => match (&**a, set_lit(pc, b)) {
            (Command::Assign(_, x, e), Some(m)) if x != pc => (Some((x.clone(), e.clone())), m),
            _ => return Err(bad()),
        },
        b => (None, set_lit(pc, b).ok_or_else(bad)?),
    };
    let sub = c.sub(k).ok_or_else(bad)?;
    let fsuc = c.fsuc(k, f);
    match (sub, test, asg) {
        (Command::Skip(_), None, None) if fsuc == Some(m) => Ok(GuardClass::Skip { k, m }),
        (Command::Assign(_, x, e), None, Some((x2, e2))) if *x == x2 && *e == e2 && fsuc == Some(m) => {
            Ok(GuardClass::Assign { k, m, x: x2, e: e2 })
        }
        (Command::If(_, gcs), Some(t), None) => gcs
            .iter()
            .find(|g| g.guard == *t && g.body.lab() == m)
            .map(|g| GuardClass::IfBranch { k, m, guard: g.guard.clone() })
            .ok_or_else(bad),
        (Command::Do(_, gcs), Some(t), None) => {
            if *t == BoolExpr::not(enab(gcs)) && fsuc == Some(m) {
                return Ok(GuardClass::DoExit { k, m });
            }
            gcs.iter()
                .find(|g| g.guard == *t && g.body.lab() == m)
                .map(|g| GuardClass::DoEnter { k, m, guard: g.guard.clone() })
                .ok_or_else(bad)
        }
        _ => Err(bad()),
    }
}

/// Bound whose counter ranges over `labs(c) ∪ {f}` (and `labs(c2) ∪ {f2}` for
/// two programs), unless the caller already fixed one for `pc`.
pub fn pc_bound(bound: &DomainBound, pc: &str, labels: impl IntoIterator<Item = Label>) -> DomainBound {
    if bound.pc_name() == Some(pc) {
        return bound.clone();
    }
    bound.clone().with_pc(pc, labels)
}

fn labels_with(c: &Command, f: Label) -> Vec<Label> {
    let mut v: Vec<Label> = c.labs().into_iter().collect();
    v.push(f);
    v
}

/// Bounded check of `!n ; do gcs od ≃ add_pc(c) ; !f`.
pub fn verify_norm_equiv(c: &Command, f: Label, pc: &str, bound: &DomainBound) -> Result<Verdict, NfError> {
    let nf = normalize(c, f, pc)?;
    let inst = instrumented(pc, c, f)?;
    let b = pc_bound(bound, pc, labels_with(c, f));
    Ok(equiv_semantic(&mkt(&nf.to_command()), &mkt(&inst), &b))
}

/// Bounded check that the body's enabling condition equals `∨_{i ∈ labs(c)} ?i`.
pub fn verify_enab_labels(c: &Command, f: Label, pc: &str, bound: &DomainBound) -> Result<Verdict, NfError> {
    let nf = normalize(c, f, pc)?;
    let labs = c.labs().into_iter().map(|i| at_pc(pc, i)).collect::<Vec<_>>();
    let any = labs.into_iter().reduce(BoolExpr::or).unwrap_or(BoolExpr::False);
    let b = pc_bound(bound, pc, labels_with(c, f));
    Ok(equiv_semantic(&mkt_bool(&enab(&nf.body)), &mkt_bool(&any), &b))
}

/// Bounded check of `erase(pc, add_pc(c)) ≃ c`.
pub fn verify_erase_equiv(c: &Command, pc: &str, bound: &DomainBound) -> Result<Verdict, NfError> {
    let erased = add_pc(pc, c)?.erase(pc);
    Ok(equiv_semantic(&mkt(&erased), &mkt(c), bound))
}

/// `mkt` of the normal form, for dumps.
pub fn nf_kat(nf: &NormalForm) -> KatExpr {
    mkt(&nf.to_command())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    #[test]
    fn single_assignment() {
        let c = parse_program("x@4 := x - 1").unwrap();
        let nf = normalize(&c, 2, "pc").unwrap();
        assert_eq!(nf.body.len(), 1);
        assert_eq!(format!("{} -> {}", nf.body[0].guard, nf.body[0].body), "pc = 4 -> x@0 := x - 1 ; pc@0 := 2");
        assert!(is_norm(&c, 2, &nf.body, "pc"));
    }

    #[test]
    fn add_pc_skip() {
        let c = parse_program("skip").unwrap();
        assert_eq!(add_pc("pc", &c).unwrap().to_string(), "pc@0 := 1 ; skip@1");
        assert_eq!(add_pc("x", &parse_program("x := 1").unwrap()), Err(NfError::PcNotFresh("x".into())));
    }
}
