//! Constructive proof synthesis: an annotated program automaton yields an HL+
//! proof, and an annotated alignment automaton yields an RHL+ proof, each over
//! the counter-instrumented normal form with the counter finally erased.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{ddo_jo_pre, ddo_lo_pre, ddo_post, ddo_ro_pre, do_post, guarded, Judgment, Params, ProofError, ProofTree, Rule};
use crate::assertions::{Formula, RelAnnotation, Side, StateRelSpec, UnaryAnnotation};
use crate::automata::{aut, restrict_live, Automaton, ProgramAut};
use crate::normalform::{at_pc, classify_guard, instrumented, normalize, pc_bound, set_pc, GuardClass, NfError};
use crate::semantics::{DomainBound, Verdict};
use crate::syntax::{Command, GuardedCmd, IntExpr, Label, SyntaxError};
use crate::vcgen::{check_condition_c, discharge, encoded_rel_vcs, unary_vcs, RelSetup, Vc};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("counter variable '{0}' is not fresh")]
    PcNotFresh(String),
    #[error("verification conditions do not discharge: {}", .0.join(", "))]
    VcFailure(Vec<String>),
    #[error("annotation does not imply an alignment condition: {0}")]
    ConditionC(String),
    #[error(transparent)]
    Nf(#[from] NfError),
    #[error(transparent)]
    Proof(#[from] ProofError),
}

fn node(rule: Rule, j: Judgment, premises: Vec<ProofTree>) -> Result<ProofTree, SynthError> {
    Ok(ProofTree::build(rule, j, Params::None, premises)?)
}

fn mentions(f: &Formula, pc: &str) -> bool {
    f.vars_left().contains(pc) || f.vars_right().contains(pc)
}

fn vc_map(vcs: Vec<Vc>) -> BTreeMap<String, Vc> {
    vcs.into_iter().map(|vc| (vc.id.clone(), vc)).collect()
}

fn failed(results: Vec<(String, Verdict)>) -> Vec<String> {
    results.into_iter().filter(|(_, v)| !v.is_valid()).map(|(id, _)| id).collect()
}

fn lit(n: Label) -> IntExpr {
    IntExpr::Lit(n)
}

// ---------------------------------------------------------------------------
// Unary

fn check_unary_inputs(c: &Command, f: Label, an: &UnaryAnnotation, pc: &str) -> Result<ProgramAut, SynthError> {
    c.check_okf(f)?;
    if c.vars().contains(pc) || an.map.values().any(|g| mentions(g, pc)) {
        return Err(SynthError::PcNotFresh(pc.to_string()));
    }
    Ok(aut(c, f)?)
}

/// HL+ proof of `c : {an(lab c)}{an(f)}` from an annotation whose
/// verification conditions all discharge over `bound`.
pub fn synthesize_unary(
    c: &Command,
    f: Label,
    an: &UnaryAnnotation,
    pc: &str,
    bound: &DomainBound,
) -> Result<ProofTree, SynthError> {
    let a = check_unary_inputs(c, f, an, pc)?;
    let bad = failed(discharge(&unary_vcs(&a, an), &pc_bound(bound, pc, a.ctrl())));
    if !bad.is_empty() {
        return Err(SynthError::VcFailure(bad));
    }
    synthesize_unary_unchecked(c, f, an, pc)
}

/// The same construction without discharging the hypotheses; the resulting
/// tree fails checking exactly where a hypothesis fails.
pub fn synthesize_unary_unchecked(c: &Command, f: Label, an: &UnaryAnnotation, pc: &str) -> Result<ProofTree, SynthError> {
    let a = check_unary_inputs(c, f, an, pc)?;
    let vcs = vc_map(unary_vcs(&a, an));
    let at = |n: Label| Formula::test(at_pc(pc, n));
    let inv = Formula::and(
        Formula::disj(a.ctrl().into_iter().map(at).collect()),
        Formula::conj(a.ctrl().into_iter().map(|i| Formula::implies(at(i), an.get(i))).collect()),
    );
    // !m : {an(m)}{an(m) && ?m}
    let set = |m: Label| -> Result<ProofTree, SynthError> {
        let post = Formula::and(an.get(m), at(m));
        let cmd = set_pc(pc, m);
        let asgn = node(Rule::Asgn, Judgment::unary(cmd.clone(), post.clone().subst1(pc, &lit(m)), post.clone()), vec![])?;
        node(Rule::Conseq, Judgment::unary(cmd, an.get(m), post), vec![asgn])
    };
    let nf = normalize(c, f, pc)?;
    let mut premises = Vec::new();
    for gc in &nf.body {
        let class = classify_guard(gc, c, f, pc)?;
        let (k, m) = class.points();
        let vc = &vcs[&format!("unary:{k}->{m}")];
        let inner = match (&class, &gc.body) {
            (GuardClass::Assign { .. }, Command::Seq(asg, _)) => {
                let step = node(Rule::Asgn, Judgment::unary((**asg).clone(), vc.cons.clone(), an.get(m)), vec![])?;
                let step = node(Rule::Conseq, Judgment::unary((**asg).clone(), vc.ante.clone(), an.get(m)), vec![step])?;
                node(Rule::Seq, Judgment::unary(gc.body.clone(), vc.ante.clone(), Formula::and(an.get(m), at(m))), vec![step, set(m)?])?
            }
            _ => node(
                Rule::Conseq,
                Judgment::unary(gc.body.clone(), vc.ante.clone(), Formula::and(an.get(m), at(m))),
                vec![set(m)?],
            )?,
        };
        premises.push(node(Rule::Conseq, Judgment::unary(gc.body.clone(), guarded(&gc.guard, &inv), inv.clone()), vec![inner])?);
    }
    let (p, q) = (an.get(c.lab()), an.get(f));
    let lp = nf.loop_cmd();
    let lo = node(Rule::Do, Judgment::unary(lp.clone(), inv.clone(), do_post(&inv, &nf.body)), premises)?;
    let lo = node(Rule::Conseq, Judgment::unary(lp, Formula::and(p.clone(), at(c.lab())), q.clone()), vec![lo])?;
    let whole = node(Rule::Seq, Judgment::unary(nf.to_command(), p.clone(), q.clone()), vec![set(c.lab())?, lo])?;
    let inst = instrumented(pc, c, f)?;
    let t = node(Rule::Rewrite, Judgment::unary(inst.clone(), p.clone(), q.clone()), vec![whole])?;
    let t = ProofTree::build(
        Rule::Ghost,
        Judgment::unary(inst.erase(pc), p.clone(), q.clone()),
        Params::Ghost(pc.to_string()),
        vec![t],
    )?;
    node(Rule::Rewrite, Judgment::unary(c.clone(), p, q), vec![t])
}

// ---------------------------------------------------------------------------
// Relational

/// Inputs of the relational synthesis: two programs with final labels, the
/// alignment conditions, the product annotation and the counter name.
#[derive(Clone, Debug)]
pub struct RelProblem {
    pub left: Command,
    pub right: Command,
    pub fin: Label,
    pub fin2: Label,
    pub l: StateRelSpec,
    pub r: StateRelSpec,
    pub j: StateRelSpec,
    pub an: RelAnnotation,
    pub pc: String,
}

struct Prepared {
    la: ProgramAut,
    ra: ProgramAut,
    l: StateRelSpec,
    r: StateRelSpec,
    j: StateRelSpec,
}

fn prepare(p: &RelProblem) -> Result<Prepared, SynthError> {
    p.left.check_okf(p.fin)?;
    p.right.check_okf(p.fin2)?;
    let pc = p.pc.as_str();
    let specs = [&p.l, &p.r, &p.j];
    if p.left.vars().contains(pc)
        || p.right.vars().contains(pc)
        || p.an.map.values().any(|f| mentions(f, pc))
        || specs.iter().any(|s| s.clauses.iter().any(|c| mentions(&c.cond, pc)))
    {
        return Err(SynthError::PcNotFresh(pc.to_string()));
    }
    let la = aut(&p.left, p.fin)?;
    let ra = aut(&p.right, p.fin2)?;
    let (l, r, j) = restrict_live(&la, &ra, &p.l, &p.r, &p.j);
    Ok(Prepared { la, ra, l, r, j })
}

/// Counter bound over the control points of both programs.
pub fn rel_pc_bound(p: &RelProblem, bound: &DomainBound) -> DomainBound {
    let mut labels: Vec<Label> = p.left.labs().into_iter().chain(p.right.labs()).collect();
    labels.extend([p.fin, p.fin2]);
    pc_bound(bound, &p.pc, labels)
}

/// RHL+ proof of `left | right : {an(lab, lab')}{an(fin, fin')}`, provided the
/// encoded verification conditions discharge and the annotation implies an
/// alignment condition at every non-final control pair.
pub fn synthesize_relational(p: &RelProblem, bound: &DomainBound) -> Result<ProofTree, SynthError> {
    let pre = prepare(p)?;
    let setup = RelSetup { left: &pre.la, right: &pre.ra, an: &p.an, l: &pre.l, r: &pre.r, j: &pre.j };
    let bad = failed(discharge(&encoded_rel_vcs(&setup, &p.pc), &rel_pc_bound(p, bound)));
    if !bad.is_empty() {
        return Err(SynthError::VcFailure(bad));
    }
    let cc = check_condition_c(&setup, bound);
    if !cc.is_valid() {
        return Err(SynthError::ConditionC(cc.to_string()));
    }
    synthesize_relational_unchecked(p)
}

struct Rel<'a> {
    pc: &'a str,
    an: &'a RelAnnotation,
    q: Formula,
    vcs: BTreeMap<String, Vc>,
}

impl Rel<'_> {
    fn both(&self, i: Label, j: Label) -> Formula {
        Formula::and(Formula::at(Side::L, self.pc, i), Formula::at(Side::R, self.pc, j))
    }

    fn vc(&self, id: String) -> &Vc {
        &self.vcs[&id]
    }

    fn conseq(&self, l: &Command, r: &Command, pre: Formula, post: Formula, p: ProofTree) -> Result<ProofTree, SynthError> {
        node(Rule::RConseq, Judgment::rel(l.clone(), r.clone(), pre, post), vec![p])
    }

    fn vacuous(&self, l: &Command, r: &Command, pre: Formula) -> Result<ProofTree, SynthError> {
        let f = node(Rule::RFalse, Judgment::rel(l.clone(), r.clone(), Formula::False, self.q.clone()), vec![])?;
        self.conseq(l, r, pre, self.q.clone(), f)
    }

    /// Counter update `!m | !m'` (either side possibly `skip`) from `a` to `Q`,
    /// landing at `(m, m')`.
    fn set(&self, a: &Formula, m: Option<Label>, m2: Option<Label>, at: (Label, Label)) -> Result<ProofTree, SynthError> {
        let l = m.map_or(Command::Skip(0), |m| set_pc(self.pc, m));
        let r = m2.map_or(Command::Skip(0), |m| set_pc(self.pc, m));
        let post = Formula::and(self.an.get(at.0, at.1), self.both(at.0, at.1));
        let (el, er) = (m.map(lit), m2.map(lit));
        let sub = post.clone().subst_rel(el.as_ref().map(|e| (self.pc, e)), er.as_ref().map(|e| (self.pc, e)));
        let rule = match (m, m2) {
            (Some(_), Some(_)) => Rule::DAsgn,
            (Some(_), None) => Rule::AsgnSkip,
            _ => Rule::SkipAsgn,
        };
        let step = node(rule, Judgment::rel(l.clone(), r.clone(), sub, post), vec![])?;
        self.conseq(&l, &r, a.clone(), self.q.clone(), step)
    }
}

fn body_parts(gc: &GuardedCmd) -> (Option<&Command>, &Command) {
    match &gc.body {
        Command::Seq(a, b) => (Some(&**a), &**b),
        b => (None, b),
    }
}

fn step_rule(l: Option<&Command>, r: Option<&Command>) -> Rule {
    match (l, r) {
        (Some(_), Some(_)) => Rule::DAsgn,
        (Some(_), None) => Rule::AsgnSkip,
        _ => Rule::SkipAsgn,
    }
}

fn assign_pair(c: Option<&Command>) -> Option<(&str, &IntExpr)> {
    match c {
        Some(Command::Assign(_, x, e)) => Some((x.as_str(), e)),
        _ => None,
    }
}

/// The construction without discharging its hypotheses.
pub fn synthesize_relational_unchecked(p: &RelProblem) -> Result<ProofTree, SynthError> {
    let pre = prepare(p)?;
    let pc = p.pc.as_str();
    let setup = RelSetup { left: &pre.la, right: &pre.ra, an: &p.an, l: &pre.l, r: &pre.r, j: &pre.j };
    let (lctrl, rctrl) = (pre.la.ctrl(), pre.ra.ctrl());
    let mut rel = Rel { pc, an: &p.an, q: Formula::True, vcs: vc_map(encoded_rel_vcs(&setup, pc)) };
    let mut imps = Vec::new();
    let mut alts = Vec::new();
    for &i in &lctrl {
        for &j in &rctrl {
            imps.push(Formula::implies(rel.both(i, j), p.an.get(i, j)));
            alts.push(rel.both(i, j));
        }
    }
    rel.q = Formula::and(Formula::conj(imps), Formula::disj(alts));
    let q = rel.q.clone();
    let (lt, rt) = (pre.l.encode(pc), pre.r.encode(pc));
    let nf = normalize(&p.left, p.fin, pc)?;
    let nf2 = normalize(&p.right, p.fin2, pc)?;
    let lclass = nf.body.iter().map(|gc| classify_guard(gc, &p.left, p.fin, pc)).collect::<Result<Vec<_>, _>>()?;
    let rclass = nf2.body.iter().map(|gc| classify_guard(gc, &p.right, p.fin2, pc)).collect::<Result<Vec<_>, _>>()?;
    let skip = Command::Skip(0);
    let mut premises = Vec::new();

    // Left-only moves.
    for (gc, class) in nf.body.iter().zip(&lclass) {
        let (k, m) = class.points();
        let pre_lo = ddo_lo_pre(&q, &gc.guard, &lt);
        if rctrl.iter().all(|&j| pre.l.restrict(k, j) == Formula::False) {
            premises.push(rel.vacuous(&gc.body, &skip, pre_lo)?);
            continue;
        }
        let (asg, _) = body_parts(gc);
        let mut cases = Vec::new();
        for &j in &rctrl {
            let dj = Formula::and(Formula::at(Side::R, pc, j), pre_lo.clone());
            if pre.l.restrict(k, j) == Formula::False || p.an.get(k, j) == Formula::False {
                cases.push(rel.vacuous(&gc.body, &skip, dj)?);
                continue;
            }
            let vc = rel.vc(format!("lo:{k},{j}->{m},{j}")).clone();
            let aj = Formula::and(p.an.get(m, j), Formula::at(Side::R, pc, j));
            let set = rel.set(&aj, Some(m), None, (m, j))?;
            let bang = set_pc(pc, m);
            let inner = match asg {
                Some(a) => {
                    let sub = aj.clone().subst_rel(assign_pair(Some(a)), None);
                    let step = node(Rule::AsgnSkip, Judgment::rel(a.clone(), skip.clone(), sub, aj.clone()), vec![])?;
                    let step = rel.conseq(a, &skip, vc.ante.clone(), aj.clone(), step)?;
                    node(Rule::SeqSkip, Judgment::rel(gc.body.clone(), skip.clone(), vc.ante.clone(), q.clone()), vec![step, set])?
                }
                None => rel.conseq(&bang, &skip, vc.ante.clone(), q.clone(), set)?,
            };
            cases.push(rel.conseq(&gc.body, &skip, dj, q.clone(), inner)?);
        }
        let pres: Vec<Formula> = cases.iter().map(|c| c.conclusion.pre().clone()).collect();
        let d = node(Rule::RDisjN, Judgment::rel(gc.body.clone(), skip.clone(), Formula::disj(pres), q.clone()), cases)?;
        premises.push(rel.conseq(&gc.body, &skip, pre_lo, q.clone(), d)?);
    }

    // Right-only moves.
    for (gc, class) in nf2.body.iter().zip(&rclass) {
        let (k, m) = class.points();
        let pre_ro = ddo_ro_pre(&q, &gc.guard, &rt);
        if lctrl.iter().all(|&i| pre.r.restrict(i, k) == Formula::False) {
            premises.push(rel.vacuous(&skip, &gc.body, pre_ro)?);
            continue;
        }
        let (asg, _) = body_parts(gc);
        let mut cases = Vec::new();
        for &i in &lctrl {
            let di = Formula::and(Formula::at(Side::L, pc, i), pre_ro.clone());
            if pre.r.restrict(i, k) == Formula::False || p.an.get(i, k) == Formula::False {
                cases.push(rel.vacuous(&skip, &gc.body, di)?);
                continue;
            }
            let vc = rel.vc(format!("ro:{i},{k}->{i},{m}")).clone();
            let ai = Formula::and(p.an.get(i, m), Formula::at(Side::L, pc, i));
            let set = rel.set(&ai, None, Some(m), (i, m))?;
            let bang = set_pc(pc, m);
            let inner = match asg {
                Some(a) => {
                    let sub = ai.clone().subst_rel(None, assign_pair(Some(a)));
                    let step = node(Rule::SkipAsgn, Judgment::rel(skip.clone(), a.clone(), sub, ai.clone()), vec![])?;
                    let step = rel.conseq(&skip, a, vc.ante.clone(), ai.clone(), step)?;
                    node(Rule::SeqSkip, Judgment::rel(skip.clone(), gc.body.clone(), vc.ante.clone(), q.clone()), vec![step, set])?
                }
                None => rel.conseq(&skip, &bang, vc.ante.clone(), q.clone(), set)?,
            };
            cases.push(rel.conseq(&skip, &gc.body, di, q.clone(), inner)?);
        }
        let pres: Vec<Formula> = cases.iter().map(|c| c.conclusion.pre().clone()).collect();
        let d = node(Rule::RDisjN, Judgment::rel(skip.clone(), gc.body.clone(), Formula::disj(pres), q.clone()), cases)?;
        premises.push(rel.conseq(&skip, &gc.body, pre_ro, q.clone(), d)?);
    }

    // Joint moves.
    for (gc, class) in nf.body.iter().zip(&lclass) {
        for (gc2, class2) in nf2.body.iter().zip(&rclass) {
            let ((k, m), (k2, m2)) = (class.points(), class2.points());
            let pre_jo = ddo_jo_pre(&q, &gc.guard, &gc2.guard, &lt, &rt);
            if pre.j.restrict(k, k2) == Formula::False || p.an.get(k, k2) == Formula::False {
                premises.push(rel.vacuous(&gc.body, &gc2.body, pre_jo)?);
                continue;
            }
            let vc = rel.vc(format!("jo:{k},{k2}->{m},{m2}")).clone();
            let a = p.an.get(m, m2);
            let set = rel.set(&a, Some(m), Some(m2), (m, m2))?;
            let ((asg, bang), (asg2, bang2)) = (body_parts(gc), body_parts(gc2));
            let inner = if asg.is_none() && asg2.is_none() {
                rel.conseq(bang, bang2, vc.ante.clone(), q.clone(), set)?
            } else {
                let (sl, sr) = (asg.cloned().unwrap_or(Command::Skip(0)), asg2.cloned().unwrap_or(Command::Skip(0)));
                let step = node(step_rule(asg, asg2), Judgment::rel(sl.clone(), sr.clone(), vc.cons.clone(), a.clone()), vec![])?;
                let step = rel.conseq(&sl, &sr, vc.ante.clone(), a.clone(), step)?;
                let (lseq, rseq) = (Command::seq(sl, bang.clone()), Command::seq(sr, bang2.clone()));
                let d = node(Rule::DSeq, Judgment::rel(lseq.clone(), rseq.clone(), vc.ante.clone(), q.clone()), vec![step, set])?;
                if lseq == gc.body && rseq == gc2.body {
                    d
                } else {
                    node(Rule::RRewrite, Judgment::rel(gc.body.clone(), gc2.body.clone(), vc.ante.clone(), q.clone()), vec![d])?
                }
            };
            premises.push(rel.conseq(&gc.body, &gc2.body, pre_jo, q.clone(), inner)?);
        }
    }

    let (n, n2) = (p.left.lab(), p.right.lab());
    let (s, t) = (p.an.get(n, n2), p.an.get(p.fin, p.fin2));
    let (lp, rp) = (nf.loop_cmd(), nf2.loop_cmd());
    let d = ProofTree::build(
        Rule::DDo,
        Judgment::rel(lp.clone(), rp.clone(), q.clone(), ddo_post(&q, &nf.body, &nf2.body)),
        Params::Align { l: lt, r: rt },
        premises,
    )?;
    let d = rel.conseq(&lp, &rp, Formula::and(s.clone(), rel.both(n, n2)), t.clone(), d)?;
    let entry = {
        let post = Formula::and(s.clone(), rel.both(n, n2));
        let (l, r) = (set_pc(pc, n), set_pc(pc, n2));
        let sub = post.clone().subst_rel(Some((pc, &lit(n))), Some((pc, &lit(n2))));
        let step = node(Rule::DAsgn, Judgment::rel(l.clone(), r.clone(), sub, post.clone()), vec![])?;
        rel.conseq(&l, &r, s.clone(), post, step)?
    };
    let whole = node(Rule::DSeq, Judgment::rel(nf.to_command(), nf2.to_command(), s.clone(), t.clone()), vec![entry, d])?;
    let inst = instrumented(pc, &p.left, p.fin)?;
    let inst2 = instrumented(pc, &p.right, p.fin2)?;
    let w = node(Rule::RRewrite, Judgment::rel(inst.clone(), inst2.clone(), s.clone(), t.clone()), vec![whole])?;
    let w = ProofTree::build(
        Rule::RGhost,
        Judgment::rel(inst.erase(pc), inst2.erase(pc), s.clone(), t.clone()),
        Params::RGhost(pc.to_string(), pc.to_string()),
        vec![w],
    )?;
    node(Rule::RRewrite, Judgment::rel(p.left.clone(), p.right.clone(), s, t), vec![w])
}
