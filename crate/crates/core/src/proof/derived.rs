//! Expansion of the derived relational rules into primitive derivations.

use super::{
    ddo_post, dif_pre, do_false_skip, if_true_skip, one_sided_do_post, Judgment, Params, ProofTree, Rule,
};
use crate::assertions::{Formula, Side};
use crate::syntax::{BoolExpr, Command, GuardedCmd};

fn build(rule: Rule, j: Judgment, params: Params, premises: Vec<ProofTree>) -> ProofTree {
    ProofTree::build(rule, j, params, premises).expect("expansion produces well-formed nodes")
}

fn rel(j: &Judgment) -> (&Command, &Command, &Formula, &Formula) {
    match j {
        Judgment::Rel { left, right, pre, post } => (left, right, pre, post),
        Judgment::Unary { .. } => unreachable!("derived rules are relational"),
    }
}

/// `rConseq` from `p` to the judgment `j` with the same commands.
fn conseq(j: Judgment, p: ProofTree) -> ProofTree {
    build(Rule::RConseq, j, Params::None, vec![p])
}

/// `c | c' : {false}{post}`.
fn vacuous(left: &Command, right: &Command, pre: &Formula, post: &Formula) -> ProofTree {
    let f = build(Rule::RFalse, Judgment::rel(left.clone(), right.clone(), Formula::False, post.clone()), Params::None, vec![]);
    conseq(Judgment::rel(left.clone(), right.clone(), pre.clone(), post.clone()), f)
}

/// Rewrites the skip on `side` of `p` to `skip` with label `label`.
fn skip_label(p: ProofTree, side: Side, label: i64) -> ProofTree {
    let (l, r, pre, post) = rel(&p.conclusion);
    let (mut l2, mut r2) = (l.clone(), r.clone());
    let target = if side == Side::L { &mut l2 } else { &mut r2 };
    if *target == Command::Skip(label) {
        return p;
    }
    *target = Command::Skip(label);
    let j = Judgment::rel(l2, r2, pre.clone(), post.clone());
    build(Rule::RRewrite, j, Params::None, vec![p])
}

/// Replaces every derived-rule node of `t` by its primitive derivation. The
/// conclusion of every node present in `t` is preserved.
pub fn expand_derived(t: &ProofTree) -> ProofTree {
    let premises: Vec<ProofTree> = t.premises.iter().map(expand_derived).collect();
    if !t.rule.is_derived() {
        let mut out = t.clone();
        out.premises = premises;
        return out;
    }
    let (c, c2, pre, post) = rel(&t.conclusion);
    match t.rule {
        Rule::RDisjN => match premises.len() {
            0 => build(Rule::RFalse, t.conclusion.clone(), Params::None, vec![]),
            1 => conseq(t.conclusion.clone(), premises.into_iter().next().unwrap()),
            _ => {
                let mut it = premises.into_iter();
                let mut acc = it.next().unwrap();
                for p in it {
                    let f = Formula::or(acc.conclusion.pre().clone(), p.conclusion.pre().clone());
                    acc = build(Rule::RDisj, Judgment::rel(c.clone(), c2.clone(), f, post.clone()), Params::None, vec![acc, p]);
                }
                conseq(t.conclusion.clone(), acc)
            }
        },
        Rule::SeqSkip => {
            let side = if matches!(c, Command::Seq(..)) { Side::L } else { Side::R };
            let skips: Vec<Command> = premises
                .iter()
                .map(|p| {
                    let (l, r, _, _) = rel(&p.conclusion);
                    if side == Side::L { r.clone() } else { l.clone() }
                })
                .collect();
            let pair = Command::seq(skips[0].clone(), skips[1].clone());
            let (l, r) = if side == Side::L { (c.clone(), pair) } else { (pair, c2.clone()) };
            let d = build(Rule::DSeq, Judgment::rel(l, r, pre.clone(), post.clone()), Params::None, premises);
            build(Rule::RRewrite, t.conclusion.clone(), Params::None, vec![d])
        }
        Rule::IfSkip => {
            let side = if matches!(c, Command::If(..)) { Side::L } else { Side::R };
            let other = if side == Side::L { Side::R } else { Side::L };
            let trivial = if_true_skip();
            let gcs = match if side == Side::L { c } else { c2 } {
                Command::If(_, gcs) => gcs.clone(),
                _ => unreachable!(),
            };
            let prems = premises
                .into_iter()
                .zip(&gcs)
                .map(|(p, gc)| {
                    let p = skip_label(p, other, 0);
                    let want = if side == Side::L {
                        dif_pre(pre, &gc.guard, &BoolExpr::True)
                    } else {
                        dif_pre(pre, &BoolExpr::True, &gc.guard)
                    };
                    let (l, r, _, _) = rel(&p.conclusion);
                    conseq(Judgment::rel(l.clone(), r.clone(), want, post.clone()), p)
                })
                .collect();
            let (l, r) = if side == Side::L { (c.clone(), trivial) } else { (trivial, c2.clone()) };
            let d = build(Rule::DIf, Judgment::rel(l, r, pre.clone(), post.clone()), Params::None, prems);
            build(Rule::RRewrite, t.conclusion.clone(), Params::None, vec![d])
        }
        Rule::DoSkip => expand_do_skip(t, premises),
        Rule::AlgnIf => {
            let (Command::If(_, g), Command::If(_, h)) = (c, c2) else { unreachable!() };
            let mut it = premises.into_iter();
            let (p0, p1) = (it.next().unwrap(), it.next().unwrap());
            let mut prems = Vec::new();
            for (i, gi) in g.iter().enumerate() {
                for (j, hj) in h.iter().enumerate() {
                    let want = dif_pre(pre, &gi.guard, &hj.guard);
                    prems.push(match (i, j) {
                        (0, 0) => conseq(Judgment::rel(gi.body.clone(), hj.body.clone(), want, post.clone()), p0.clone()),
                        (1, 1) => conseq(Judgment::rel(gi.body.clone(), hj.body.clone(), want, post.clone()), p1.clone()),
                        _ => vacuous(&gi.body, &hj.body, &want, post),
                    });
                }
            }
            build(Rule::DIf, t.conclusion.clone(), Params::None, prems)
        }
        _ => unreachable!("not a derived rule"),
    }
}

fn expand_do_skip(t: &ProofTree, premises: Vec<ProofTree>) -> ProofTree {
    let (c, c2, q, _) = rel(&t.conclusion);
    let side = if matches!(c, Command::Do(..)) { Side::L } else { Side::R };
    let trivial = do_false_skip();
    let trivial_gcs = vec![GuardedCmd { guard: BoolExpr::False, body: Command::Skip(0) }];
    let gcs = match if side == Side::L { c } else { c2 } {
        Command::Do(_, gcs) => gcs.clone(),
        _ => unreachable!(),
    };
    let (lg, rg) = if side == Side::L { (gcs.clone(), trivial_gcs.clone()) } else { (trivial_gcs.clone(), gcs.clone()) };
    let (lt, rt) = (Formula::True, Formula::True);
    let skip = Command::Skip(0);
    let premises: Vec<ProofTree> = premises.into_iter().map(|p| skip_label(p, if side == Side::L { Side::R } else { Side::L }, 0)).collect();
    let mut prems = Vec::new();
    for (i, gc) in lg.iter().enumerate() {
        let want = super::ddo_lo_pre(q, &gc.guard, &lt);
        prems.push(if side == Side::L {
            conseq(Judgment::rel(gc.body.clone(), skip.clone(), want, q.clone()), premises[i].clone())
        } else {
            vacuous(&gc.body, &skip, &want, q)
        });
    }
    for (j, gc) in rg.iter().enumerate() {
        let want = super::ddo_ro_pre(q, &gc.guard, &rt);
        prems.push(if side == Side::R {
            conseq(Judgment::rel(skip.clone(), gc.body.clone(), want, q.clone()), premises[j].clone())
        } else {
            vacuous(&skip, &gc.body, &want, q)
        });
    }
    for gc in &lg {
        for gc2 in &rg {
            let want = super::ddo_jo_pre(q, &gc.guard, &gc2.guard, &lt, &rt);
            prems.push(vacuous(&gc.body, &gc2.body, &want, q));
        }
    }
    let (l, r) = if side == Side::L { (c.clone(), trivial) } else { (trivial, c2.clone()) };
    let d = build(
        Rule::DDo,
        Judgment::rel(l.clone(), r.clone(), q.clone(), ddo_post(q, &lg, &rg)),
        Params::Align { l: lt, r: rt },
        prems,
    );
    let post = one_sided_do_post(q, side, &gcs);
    let weakened = conseq(Judgment::rel(l, r, q.clone(), post), d);
    build(Rule::RRewrite, t.conclusion.clone(), Params::None, vec![weakened])
}
