//! Structural audit of the assertions in a synthesized tree.
//!
//! Accepted formulas are boolean combinations of annotation values, alignment
//! conditions, program guards and counter tests `pc = n`, possibly under
//! substitutions performed by program assignments or counter updates.

use super::{path_string, ObligationKind, Params, ProofTree, RelProblem};
use crate::assertions::{Formula, RelAnnotation, Substitution, UnaryAnnotation};
use crate::automata::{aut, restrict_live};
use crate::syntax::{BoolExpr, CmpOp, Command, IntExpr};

#[derive(Clone, Debug, Default)]
pub struct Provenance {
    pub pc: String,
    /// Formulas accepted as atoms: annotation values and alignment conditions.
    pub atoms: Vec<Formula>,
    pub guards: Vec<BoolExpr>,
    pub assigns: Vec<(String, IntExpr)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditIssue {
    pub path: String,
    pub formula: String,
}

fn program_parts(c: &Command, guards: &mut Vec<BoolExpr>, assigns: &mut Vec<(String, IntExpr)>) {
    guards.extend(c.guards().into_iter().cloned());
    assigns.extend(c.assignments().into_iter().map(|(_, x, e)| (x.to_string(), e.clone())));
}

impl Provenance {
    pub fn unary(c: &Command, an: &UnaryAnnotation, pc: &str) -> Provenance {
        let mut p = Provenance { pc: pc.to_string(), atoms: an.map.values().cloned().collect(), ..Default::default() };
        program_parts(c, &mut p.guards, &mut p.assigns);
        p.atoms.push(Formula::False);
        p
    }

    pub fn relational(prob: &RelProblem) -> Provenance {
        let mut p = Provenance { pc: prob.pc.clone(), atoms: rel_atoms(&prob.an), ..Default::default() };
        let mut specs = vec![prob.l.clone(), prob.r.clone(), prob.j.clone()];
        if let (Ok(la), Ok(ra)) = (aut(&prob.left, prob.fin), aut(&prob.right, prob.fin2)) {
            let (l, r, j) = restrict_live(&la, &ra, &prob.l, &prob.r, &prob.j);
            specs.extend([l, r, j]);
        }
        for s in &specs {
            p.atoms.extend(s.clauses.iter().map(|c| c.cond.clone()));
        }
        program_parts(&prob.left, &mut p.guards, &mut p.assigns);
        program_parts(&prob.right, &mut p.guards, &mut p.assigns);
        p
    }

    fn counter_test(&self, b: &BoolExpr) -> bool {
        matches!(b, BoolExpr::Cmp(CmpOp::Eq, IntExpr::Var(v), IntExpr::Lit(_)) if *v == self.pc)
    }

    fn test_ok(&self, b: &BoolExpr) -> bool {
        if self.guards.contains(b) || self.counter_test(b) {
            return true;
        }
        match b {
            BoolExpr::True | BoolExpr::False => true,
            BoolExpr::Not(a) => self.test_ok(a),
            BoolExpr::And(a, c) | BoolExpr::Or(a, c) => self.test_ok(a) && self.test_ok(c),
            _ => false,
        }
    }

    fn subst_ok(&self, s: &Substitution) -> bool {
        let one = |p: &Option<(String, IntExpr)>| match p {
            None => true,
            Some((x, IntExpr::Lit(_))) if *x == self.pc => true,
            Some((x, e)) => self.assigns.iter().any(|(y, f)| y == x && f == e),
        };
        one(&s.left) && one(&s.right)
    }

    /// Whether `f` lies in the accepted grammar.
    pub fn accepts(&self, f: &Formula) -> bool {
        if self.atoms.contains(f) {
            return true;
        }
        match f {
            Formula::True | Formula::False => true,
            Formula::Test(_, b) => self.test_ok(b),
            Formula::Not(a) => self.accepts(a),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => self.accepts(a) && self.accepts(b),
            Formula::Subst(a, s) => self.subst_ok(s) && self.accepts(a),
            Formula::Cross(..) | Formula::Ext(_) => false,
        }
    }
}

fn rel_atoms(an: &RelAnnotation) -> Vec<Formula> {
    let mut v: Vec<Formula> = an.map.values().cloned().collect();
    v.push(Formula::False);
    v
}

/// Formulas of `t` outside the grammar of `prov`, with the node paths.
pub fn audit_provenance(t: &ProofTree, prov: &Provenance) -> Vec<AuditIssue> {
    let mut seen: Vec<Formula> = Vec::new();
    let mut issues = Vec::new();
    t.walk(&mut |path, node| {
        let mut fs: Vec<&Formula> = vec![node.conclusion.pre(), node.conclusion.post()];
        if let Params::Align { l, r } = &node.params {
            fs.extend([l, r]);
        }
        for ob in &node.obligations {
            match &ob.kind {
                ObligationKind::Entails { ante, cons } | ObligationKind::SideCondition { ante, cons } => fs.extend([ante, cons]),
                ObligationKind::Indep { formula, .. } => fs.push(formula),
                ObligationKind::Equiv { .. } | ObligationKind::Ghost { .. } => {}
            }
        }
        for f in fs {
            if seen.contains(f) {
                continue;
            }
            if prov.accepts(f) {
                seen.push(f.clone());
            } else {
                issues.push(AuditIssue { path: path_string(path), formula: f.render(node.conclusion.arity()) });
            }
        }
    });
    issues
}
