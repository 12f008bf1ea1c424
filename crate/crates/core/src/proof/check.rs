//! Proof checking: structure against the rule schemas, then every obligation
//! against the bounded oracles.

use std::collections::HashMap;

use super::{path_string, schema, ObligationKind, ProofError, ProofTree};
use crate::assertions::{self, Arity, Formula};
use crate::kat;
use crate::normalform::{add_pc, normalize};
use crate::semantics::{DomainBound, Verdict, Witness};
use crate::syntax::{Command, GuardedCmd, IntExpr};

#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Accept only certified equivalence shapes instead of bounded checks.
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Failure {
    /// Node path followed by `#` and the obligation name.
    pub id: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub nodes: usize,
    pub obligations: usize,
    /// Equivalences decided by the bounded semantic oracle.
    pub bounded_equivalences: usize,
    /// Equivalences accepted as instances of certified laws.
    pub certified_equivalences: usize,
    pub failures: Vec<Failure>,
}

/// Checks `t`; `Err` for a structurally malformed tree, otherwise the
/// conjunction of all obligation verdicts.
pub fn check_proof(t: &ProofTree, bound: &DomainBound) -> Result<Verdict, ProofError> {
    check_proof_with(t, bound, &CheckOptions::default()).map(|r| r.verdict)
}

pub fn check_proof_with(t: &ProofTree, bound: &DomainBound, opts: &CheckOptions) -> Result<CheckReport, ProofError> {
    let mut work = Vec::new();
    let mut err = None;
    t.walk(&mut |path, node| {
        if err.is_some() {
            return;
        }
        let p = path_string(path);
        match schema(node) {
            Err(msg) => err = Some(ProofError::Malformed { path: p, msg }),
            Ok(obs) if obs != node.obligations => {
                err = Some(ProofError::Malformed {
                    path: p,
                    msg: format!("recorded obligations differ from those {} requires", node.rule),
                })
            }
            Ok(_) => work.push((p, node)),
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let mut report = CheckReport {
        verdict: Verdict::Valid,
        nodes: work.len(),
        obligations: 0,
        bounded_equivalences: 0,
        certified_equivalences: 0,
        failures: Vec::new(),
    };
    let mut cache: HashMap<(String, String), Verdict> = HashMap::new();
    for (p, node) in work {
        for ob in &node.obligations {
            report.obligations += 1;
            let v = match &ob.kind {
                ObligationKind::Entails { ante, cons } | ObligationKind::SideCondition { ante, cons } => {
                    let key = (ante.render(Arity::Rel), cons.render(Arity::Rel));
                    cache
                        .entry(key)
                        .or_insert_with(|| assertions::entails(ante, cons, &formula_bound(bound, &[ante, cons])))
                        .clone()
                }
                ObligationKind::Equiv { lhs, rhs } => {
                    if certified_equivalence(lhs, rhs).is_some() {
                        report.certified_equivalences += 1;
                        Verdict::Valid
                    } else if opts.strict {
                        Verdict::Counterexample(vec![Witness::Note(format!("{lhs} ≃ {rhs} is not a certified equivalence"))])
                    } else {
                        report.bounded_equivalences += 1;
                        let mut vars = lhs.vars();
                        vars.extend(rhs.vars());
                        kat::equiv_commands(lhs, rhs, &bound.extended(vars))
                    }
                }
                ObligationKind::Ghost { var, cmd } => {
                    if cmd.is_ghost(var) {
                        Verdict::Valid
                    } else {
                        Verdict::Counterexample(vec![Witness::Note(format!("{var} is read in {cmd}"))])
                    }
                }
                ObligationKind::Indep { left, right, formula } => {
                    assertions::independent(left.as_deref(), right.as_deref(), formula, &formula_bound(bound, &[formula]))
                }
            };
            if !v.is_valid() {
                report.failures.push(Failure { id: format!("{p}#{}", ob.name), verdict: v.clone() });
            }
            report.verdict = std::mem::replace(&mut report.verdict, Verdict::Valid).and(v);
        }
    }
    Ok(report)
}

fn formula_bound(bound: &DomainBound, fs: &[&Formula]) -> DomainBound {
    bound.extended(fs.iter().flat_map(|f| f.vars_left().into_iter().chain(f.vars_right())))
}

// ---------------------------------------------------------------------------
// Certified equivalence shapes

fn relabel(c: &Command) -> Command {
    let gcs = |gcs: &[GuardedCmd]| gcs.iter().map(|gc| GuardedCmd { guard: gc.guard.clone(), body: relabel(&gc.body) }).collect();
    match c {
        Command::Skip(_) => Command::Skip(0),
        Command::Assign(_, x, e) => Command::Assign(0, x.clone(), e.clone()),
        Command::Seq(a, b) => Command::seq(relabel(a), relabel(b)),
        Command::If(_, g) => Command::If(0, gcs(g)),
        Command::Do(_, g) => Command::Do(0, gcs(g)),
    }
}

fn is_skip(c: &Command) -> bool {
    matches!(c, Command::Skip(_))
}

/// Unit laws and the trivial conditional and loop, up to labels.
fn skip_law(lhs: &Command, rhs: &Command) -> bool {
    let (l, r) = (relabel(lhs), relabel(rhs));
    if let Command::Seq(a, b) = &l {
        if (is_skip(a) && **b == r) || (is_skip(b) && **a == r) {
            return true;
        }
    }
    is_skip(&r) && (l == super::if_true_skip() || l == super::do_false_skip())
}

fn counter_set(c: &Command) -> Option<(&str, i64)> {
    match c {
        Command::Assign(0, pc, IntExpr::Lit(n)) => Some((pc.as_str(), *n)),
        _ => None,
    }
}

/// Inverse of the counter instrumentation for the counter `pc`.
fn strip_pc(pc: &str, c: &Command) -> Option<Command> {
    let Command::Seq(a, b) = c else {
        return None;
    };
    if let Some((p, n)) = counter_set(a) {
        if p != pc {
            return None;
        }
        return match &**b {
            Command::Skip(m) | Command::Assign(m, ..) if *m == n => Some((**b).clone()),
            Command::If(m, gcs) if *m == n => {
                let body = gcs
                    .iter()
                    .map(|gc| Some(GuardedCmd { guard: gc.guard.clone(), body: strip_pc(pc, &gc.body)? }))
                    .collect::<Option<Vec<_>>>()?;
                Some(Command::If(n, body))
            }
            Command::Do(m, gcs) if *m == n => {
                let body = gcs
                    .iter()
                    .map(|gc| match &gc.body {
                        Command::Seq(x, back) if counter_set(back) == Some((pc, n)) => {
                            Some(GuardedCmd { guard: gc.guard.clone(), body: strip_pc(pc, x)? })
                        }
                        _ => None,
                    })
                    .collect::<Option<Vec<_>>>()?;
                Some(Command::Do(n, body))
            }
            _ => None,
        };
    }
    Some(Command::seq(strip_pc(pc, a)?, strip_pc(pc, b)?))
}

/// `!n ; do gcs od ≃ add_pc(c) ; !f` where the left side is the normal form of `c`.
fn normal_form_law(nf: &Command, inst: &Command) -> bool {
    let Command::Seq(x, fin) = inst else {
        return false;
    };
    let Some((pc, f)) = counter_set(fin) else {
        return false;
    };
    let Some(c) = strip_pc(pc, x) else {
        return false;
    };
    add_pc(pc, &c).ok().as_ref() == Some(&**x) && normalize(&c, f, pc).map(|n| n.to_command()).ok().as_ref() == Some(nf)
}

/// `erase(pc, add_pc(c)) ; skip ≃ c`.
fn erase_law(erased: &Command, c: &Command) -> bool {
    let Command::Seq(x, tail) = erased else {
        return false;
    };
    if **tail != Command::Skip(0) {
        return false;
    }
    let vars = c.vars();
    let mut pc = String::from("pc");
    while vars.contains(&pc) {
        pc.push('_');
    }
    add_pc(&pc, c).map(|a| a.erase(&pc)).ok().as_ref() == Some(&**x)
}

/// Name of the certified law `lhs ≃ rhs` is an instance of, in either direction.
pub fn certified_equivalence(lhs: &Command, rhs: &Command) -> Option<&'static str> {
    if relabel(lhs) == relabel(rhs) {
        return Some("reflexivity");
    }
    if skip_law(lhs, rhs) || skip_law(rhs, lhs) {
        return Some("skip");
    }
    if normal_form_law(lhs, rhs) || normal_form_law(rhs, lhs) {
        return Some("normal-form");
    }
    if erase_law(lhs, rhs) || erase_law(rhs, lhs) {
        return Some("erase");
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalform::instrumented;
    use crate::syntax::parse_program;

    #[test]
    fn certified_shapes() {
        let c = parse_program("x := y ; do x > 0 -> if x mod 2 = 0 -> x := x - 1 [] x mod 2 != 0 -> x := x - 2 fi od").unwrap();
        let nf = normalize(&c, 6, "pc").unwrap().to_command();
        let inst = instrumented("pc", &c, 6).unwrap();
        assert_eq!(strip_pc("pc", match &inst {
            Command::Seq(x, _) => x,
            _ => unreachable!(),
        }), Some(c.clone()));
        assert_eq!(certified_equivalence(&nf, &inst), Some("normal-form"));
        assert_eq!(certified_equivalence(&inst.erase("pc"), &c), Some("erase"));
        assert_eq!(certified_equivalence(&Command::seq(Command::Skip(3), Command::Skip(4)), &Command::Skip(1)), Some("skip"));
        assert_eq!(certified_equivalence(&c, &nf), None);
    }
}
