//! Verification conditions for annotated program automata and alignment
//! products, in state-level form (control fixed) and pc-encoded form.

use std::fmt;

use crate::assertions::{self, Formula, RelAnnotation, Side, StateRelSpec, UnaryAnnotation};
use crate::automata::{edges, Automaton, Edge, EdgeKind, ProgramAut};
use crate::semantics::{DomainBound, Verdict, Witness};
use crate::syntax::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VcKind {
    Unary,
    Lo,
    Ro,
    Jo,
}

impl VcKind {
    pub fn tag(&self) -> &'static str {
        match self {
            VcKind::Unary => "unary",
            VcKind::Lo => "lo",
            VcKind::Ro => "ro",
            VcKind::Jo => "jo",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vc {
    pub id: String,
    pub kind: VcKind,
    pub src: Vec<Label>,
    pub dst: Vec<Label>,
    pub left_edge: Option<EdgeKind>,
    pub right_edge: Option<EdgeKind>,
    pub ante: Formula,
    pub cons: Formula,
}

impl Vc {
    fn new(kind: VcKind, src: Vec<Label>, dst: Vec<Label>, ante: Formula, cons: Formula) -> Vc {
        let show = |v: &[Label]| v.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",");
        let id = format!("{}:{}->{}", kind.tag(), show(&src), show(&dst));
        Vc { id, kind, src, dst, left_edge: None, right_edge: None, ante, cons }
    }

    pub fn arity(&self) -> assertions::Arity {
        if self.kind == VcKind::Unary {
            assertions::Arity::Unary
        } else {
            assertions::Arity::Rel
        }
    }

    pub fn formula(&self) -> Formula {
        Formula::implies(self.ante.clone(), self.cons.clone())
    }

    pub fn discharge(&self, bound: &DomainBound) -> Verdict {
        assertions::entails(&self.ante, &self.cons, bound)
    }
}

impl fmt::Display for Vc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a = self.arity();
        write!(f, "{}: {} ==> {}", self.id, self.ante.render(a), self.cons.render(a))
    }
}

fn guard_on(e: &Edge, side: Side) -> Option<Formula> {
    e.guard.clone().map(|g| Formula::on(side, g))
}

/// One condition per control-flow edge: `an(n) [∧ guard] ⇒ an(m)[update]`.
pub fn unary_vcs(a: &ProgramAut, an: &UnaryAnnotation) -> Vec<Vc> {
    edges(a)
        .into_iter()
        .map(|e| {
            let mut ante = vec![an.get(e.from)];
            ante.extend(guard_on(&e, Side::L));
            let mut cons = an.get(e.to);
            if let Some((x, ex)) = &e.assign {
                cons = cons.subst1(x, ex);
            }
            let mut vc = Vc::new(VcKind::Unary, vec![e.from], vec![e.to], Formula::conj(ante), cons);
            vc.left_edge = Some(e.kind);
            vc
        })
        .collect()
}

/// Alignment data shared by the relational generators.
pub struct RelSetup<'a> {
    pub left: &'a ProgramAut,
    pub right: &'a ProgramAut,
    pub an: &'a RelAnnotation,
    pub l: &'a StateRelSpec,
    pub r: &'a StateRelSpec,
    pub j: &'a StateRelSpec,
}

/// How the alignment condition enters a condition's antecedent.
enum Guarding<'a> {
    /// Restricted to the fixed control point; absent when it is `false` there.
    State,
    /// Encoded with `pc` together with control tests.
    Encoded(&'a str, [Formula; 3]),
}

fn generate(s: &RelSetup, mode: &Guarding) -> Vec<Vc> {
    let le = edges(s.left);
    let re = edges(s.right);
    let mut out = Vec::new();
    let ante_for = |which: usize, n: Label, m: Label, mut rest: Vec<Formula>| -> Option<Formula> {
        let spec = [s.l, s.r, s.j][which];
        let mut parts = Vec::new();
        match mode {
            Guarding::State => {
                let cond = spec.restrict(n, m);
                if cond == Formula::False {
                    return None;
                }
                parts.push(cond);
            }
            Guarding::Encoded(pc, enc) => {
                parts.push(enc[which].clone());
                parts.push(Formula::and(Formula::at(Side::L, pc, n), Formula::at(Side::R, pc, m)));
            }
        }
        parts.push(s.an.get(n, m));
        parts.append(&mut rest);
        Some(Formula::conj(parts))
    };
    for e in &le {
        for n2 in s.right.ctrl() {
            let Some(ante) = ante_for(0, e.from, n2, guard_on(e, Side::L).into_iter().collect()) else {
                continue;
            };
            let cons = s.an.get(e.to, n2).subst_rel(e.assign.as_ref().map(|(x, ex)| (x.as_str(), ex)), None);
            let mut vc = Vc::new(VcKind::Lo, vec![e.from, n2], vec![e.to, n2], ante, cons);
            vc.left_edge = Some(e.kind);
            out.push(vc);
        }
    }
    for e in &re {
        for n in s.left.ctrl() {
            let Some(ante) = ante_for(1, n, e.from, guard_on(e, Side::R).into_iter().collect()) else {
                continue;
            };
            let cons = s.an.get(n, e.to).subst_rel(None, e.assign.as_ref().map(|(x, ex)| (x.as_str(), ex)));
            let mut vc = Vc::new(VcKind::Ro, vec![n, e.from], vec![n, e.to], ante, cons);
            vc.right_edge = Some(e.kind);
            out.push(vc);
        }
    }
    for e in &le {
        for e2 in &re {
            let guards: Vec<Formula> = guard_on(e, Side::L).into_iter().chain(guard_on(e2, Side::R)).collect();
            let Some(ante) = ante_for(2, e.from, e2.from, guards) else {
                continue;
            };
            let cons = s.an.get(e.to, e2.to).subst_rel(
                e.assign.as_ref().map(|(x, ex)| (x.as_str(), ex)),
                e2.assign.as_ref().map(|(x, ex)| (x.as_str(), ex)),
            );
            let mut vc = Vc::new(VcKind::Jo, vec![e.from, e2.from], vec![e.to, e2.to], ante, cons);
            vc.left_edge = Some(e.kind);
            vc.right_edge = Some(e2.kind);
            out.push(vc);
        }
    }
    out
}

/// State-level relational conditions: one per product transition shape whose
/// alignment condition is not `false` at the source control point.
pub fn rel_vcs(s: &RelSetup) -> Vec<Vc> {
    generate(s, &Guarding::State)
}

/// Conditions over stores carrying the control in `pc`, one per edge shape and
/// opposite control point.
pub fn encoded_rel_vcs(s: &RelSetup, pc: &str) -> Vec<Vc> {
    let enc = [s.l.encode(pc), s.r.encode(pc), s.j.encode(pc)];
    generate(s, &Guarding::Encoded(pc, enc))
}

/// For every control pair other than `(fin, fin')`, the annotation implies one
/// of the alignment conditions.
pub fn check_condition_c(s: &RelSetup, bound: &DomainBound) -> Verdict {
    let mut v = Verdict::Valid;
    for n in s.left.ctrl() {
        for m in s.right.ctrl() {
            if (n, m) == (s.left.fin, s.right.fin) {
                continue;
            }
            let cover = Formula::disj(vec![s.l.restrict(n, m), s.r.restrict(n, m), s.j.restrict(n, m)]);
            let here = match assertions::entails(&s.an.get(n, m), &cover, bound) {
                Verdict::Counterexample(ws) => Verdict::Counterexample(
                    ws.into_iter()
                        .map(|w| match w {
                            Witness::Pair(a, b) => Witness::State { ctrl: (n, m), stores: (a, b) },
                            Witness::Store(a) => Witness::State { ctrl: (n, m), stores: (a, Default::default()) },
                            other => other,
                        })
                        .collect(),
                ),
                other => other,
            };
            v = v.and(here);
        }
    }
    v
}

/// Verdict per condition, in order.
pub fn discharge(vcs: &[Vc], bound: &DomainBound) -> Vec<(String, Verdict)> {
    vcs.iter().map(|vc| (vc.id.clone(), vc.discharge(bound))).collect()
}

/// Unary analogue of the encoded conditions: each condition conjoined with the
/// control test `pc = n`.
pub fn encoded_unary_vcs(a: &ProgramAut, an: &UnaryAnnotation, pc: &str) -> Vec<Vc> {
    unary_vcs(a, an)
        .into_iter()
        .map(|mut vc| {
            vc.ante = Formula::and(Formula::at(Side::L, pc, vc.src[0]), vc.ante);
            vc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assertions::{parse_formula, Arity};
    use crate::automata::aut;
    use crate::syntax::parse_program;

    #[test]
    fn c0_unary_count() {
        let c = parse_program("x := y ; do x > 0 -> if x mod 2 = 0 -> x := x - 1 [] x mod 2 != 0 -> x := x - 2 fi od").unwrap();
        let a = aut(&c, 6).unwrap();
        let mut an = UnaryAnnotation::default();
        for n in 1..=5 {
            an.set(n, Formula::True);
        }
        an.set(6, parse_formula("x <= 0", Arity::Unary).unwrap());
        let vcs = unary_vcs(&a, &an);
        assert_eq!(vcs.len(), 7);
        assert_eq!(vcs[0].id, "unary:1->2");
        let b = DomainBound::new(&["x", "y"], -4, 8);
        for (id, v) in discharge(&vcs, &b) {
            assert!(v.is_valid(), "{id}: {v}");
        }
    }
}
