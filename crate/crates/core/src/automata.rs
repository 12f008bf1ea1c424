//! Automata over stores: the automaton of a labeled program, alignment
//! products of two automata, and reachability-based checks on products.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use thiserror::Error;

use crate::assertions::{CompiledPair, ExtSet, Formula, Pat, RelAnnotation, Side, StateRelSpec, UnaryAnnotation};
use crate::semantics::{self, Config, DomainBound, Store, Verdict, Witness, MAX_WITNESSES};
use crate::syntax::{enab, BoolExpr, Command, IntExpr, Label, SyntaxError};

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("exploration exceeded {0} states")]
    Budget(usize),
}

/// Transition system with distinguished initial and final control points.
pub trait Automaton {
    type Ctrl: Clone + Eq + Hash + Ord + Debug;
    type Sto: Clone + Eq + Hash + Debug;

    fn init(&self) -> Self::Ctrl;
    fn fin(&self) -> Self::Ctrl;
    fn ctrl(&self) -> Vec<Self::Ctrl>;
    fn step(&self, n: &Self::Ctrl, s: &Self::Sto) -> Vec<(Self::Ctrl, Self::Sto)>;
}

/// Automaton of a program `c` followed by control point `fin`.
#[derive(Clone, Debug)]
pub struct ProgramAut {
    pub cmd: Command,
    pub fin: Label,
    subs: BTreeMap<Label, Command>,
    fsucs: BTreeMap<Label, Label>,
}

pub fn aut(c: &Command, fin: Label) -> Result<ProgramAut, SyntaxError> {
    c.check_okf(fin)?;
    let mut subs = BTreeMap::new();
    let mut fsucs = BTreeMap::new();
    for n in c.labs() {
        subs.insert(n, c.sub(n).expect("label has a subcommand").clone());
        fsucs.insert(n, c.fsuc(n, fin).expect("label has a successor"));
    }
    Ok(ProgramAut { cmd: c.clone(), fin, subs, fsucs })
}

impl ProgramAut {
    pub fn labs(&self) -> Vec<Label> {
        self.subs.keys().copied().collect()
    }

    pub fn fsuc(&self, n: Label) -> Option<Label> {
        self.fsucs.get(&n).copied()
    }

    pub fn sub(&self, n: Label) -> Option<&Command> {
        self.subs.get(&n)
    }

    /// Final stores reachable from `s`, via automaton steps.
    pub fn outcomes(&self, s: &Store, budget: usize) -> Result<BTreeSet<Store>, AutomatonError> {
        let states = reachable(self, vec![(self.init(), s.clone())], budget)?;
        Ok(states.into_iter().filter(|(n, _)| *n == self.fin).map(|(_, t)| t).collect())
    }
}

impl Automaton for ProgramAut {
    type Ctrl = Label;
    type Sto = Store;

    fn init(&self) -> Label {
        self.cmd.lab()
    }

    fn fin(&self) -> Label {
        self.fin
    }

    fn ctrl(&self) -> Vec<Label> {
        let mut v = self.labs();
        v.push(self.fin);
        v.sort();
        v
    }

    fn step(&self, n: &Label, s: &Store) -> Vec<(Label, Store)> {
        let Some(sub) = self.subs.get(n) else {
            return vec![];
        };
        let follow = self.fsucs[n];
        if let Command::Skip(_) = sub {
            return vec![(follow, s.clone())];
        }
        semantics::step(&Config { cmd: sub.clone(), store: s.clone() })
            .into_iter()
            .map(|cfg| {
                let l = cfg.cmd.lab();
                (if l > 0 { l } else { follow }, cfg.store)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Skip,
    Asgn,
    IfBranch,
    DoEnter,
    DoExit,
}

impl EdgeKind {
    pub fn name(&self) -> &'static str {
        match self {
            EdgeKind::Skip => "skip",
            EdgeKind::Asgn => "asgn",
            EdgeKind::IfBranch => "if-branch",
            EdgeKind::DoEnter => "do-enter",
            EdgeKind::DoExit => "do-exit",
        }
    }
}

/// Control-flow edge of a program automaton with its guard and update.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub from: Label,
    pub to: Label,
    pub kind: EdgeKind,
    pub guard: Option<BoolExpr>,
    pub assign: Option<(String, IntExpr)>,
}

/// Edges leaving each program label, in label order and then guard order.
pub fn edges(a: &ProgramAut) -> Vec<Edge> {
    let mut out = Vec::new();
    for (n, sub) in &a.subs {
        let follow = a.fsucs[n];
        match sub {
            Command::Skip(_) => out.push(Edge { from: *n, to: follow, kind: EdgeKind::Skip, guard: None, assign: None }),
            Command::Assign(_, x, e) => out.push(Edge {
                from: *n,
                to: follow,
                kind: EdgeKind::Asgn,
                guard: None,
                assign: Some((x.clone(), e.clone())),
            }),
            Command::If(_, gcs) => {
                for gc in gcs {
                    out.push(Edge {
                        from: *n,
                        to: gc.body.lab(),
                        kind: EdgeKind::IfBranch,
                        guard: Some(gc.guard.clone()),
                        assign: None,
                    });
                }
            }
            Command::Do(_, gcs) => {
                for gc in gcs {
                    out.push(Edge {
                        from: *n,
                        to: gc.body.lab(),
                        kind: EdgeKind::DoEnter,
                        guard: Some(gc.guard.clone()),
                        assign: None,
                    });
                }
                out.push(Edge {
                    from: *n,
                    to: follow,
                    kind: EdgeKind::DoExit,
                    guard: Some(BoolExpr::not(enab(gcs))),
                    assign: None,
                });
            }
            Command::Seq(..) => unreachable!("sequences carry no label"),
        }
    }
    out
}

/// Alignment product: left-only steps where `l` holds, right-only where `r`
/// holds, joint steps where `j` holds.
#[derive(Clone, Debug)]
pub struct Product<'a> {
    pub left: &'a ProgramAut,
    pub right: &'a ProgramAut,
    pub l: StateRelSpec,
    pub r: StateRelSpec,
    pub j: StateRelSpec,
}

impl<'a> Product<'a> {
    pub fn new(left: &'a ProgramAut, right: &'a ProgramAut, l: StateRelSpec, r: StateRelSpec, j: StateRelSpec) -> Product<'a> {
        Product { left, right, l, r, j }
    }

    /// `L ∨ R ∨ J ∨ [fin|fin']` at a product state.
    pub fn covered(&self, n: Label, m: Label, s: &Store, s2: &Store) -> bool {
        (n == self.left.fin && m == self.right.fin)
            || self.l.holds(n, m, s, s2)
            || self.r.holds(n, m, s, s2)
            || self.j.holds(n, m, s, s2)
    }
}

impl Automaton for Product<'_> {
    type Ctrl = (Label, Label);
    type Sto = (Store, Store);

    fn init(&self) -> (Label, Label) {
        (self.left.init(), self.right.init())
    }

    fn fin(&self) -> (Label, Label) {
        (self.left.fin, self.right.fin)
    }

    fn ctrl(&self) -> Vec<(Label, Label)> {
        let mut v = Vec::new();
        for n in self.left.ctrl() {
            for m in self.right.ctrl() {
                v.push((n, m));
            }
        }
        v
    }

    fn step(&self, c: &(Label, Label), st: &(Store, Store)) -> Vec<((Label, Label), (Store, Store))> {
        let (n, m) = *c;
        let (s, s2) = st;
        let mut out = Vec::new();
        if self.l.holds(n, m, s, s2) {
            for (n2, t) in self.left.step(&n, s) {
                out.push(((n2, m), (t, s2.clone())));
            }
        }
        if self.r.holds(n, m, s, s2) {
            for (m2, t2) in self.right.step(&m, s2) {
                out.push(((n, m2), (s.clone(), t2)));
            }
        }
        if self.j.holds(n, m, s, s2) {
            let rs = self.right.step(&m, s2);
            for (n2, t) in self.left.step(&n, s) {
                for (m2, t2) in &rs {
                    out.push(((n2, *m2), (t.clone(), t2.clone())));
                }
            }
        }
        let mut seen = HashSet::new();
        out.retain(|x| seen.insert(x.clone()));
        out
    }
}

/// Removes from each alignment condition the control points where the side
/// it moves cannot step: `fin` on the left for `l`, `fin'` on the right for
/// `r`, either for `j`.
pub fn restrict_live(
    left: &ProgramAut,
    right: &ProgramAut,
    l: &StateRelSpec,
    r: &StateRelSpec,
    j: &StateRelSpec,
) -> (StateRelSpec, StateRelSpec, StateRelSpec) {
    let lctrl = left.labs();
    let rctrl = right.labs();
    let expand = |p: Pat, live: &[Label], fin: Label| -> Vec<Pat> {
        match p {
            Pat::Any => live.iter().map(|n| Pat::At(*n)).collect(),
            Pat::At(n) if n == fin => vec![],
            Pat::At(n) => vec![Pat::At(n)],
        }
    };
    let restrict = |spec: &StateRelSpec, on_left: bool, on_right: bool| {
        let mut out = StateRelSpec::none();
        for c in &spec.clauses {
            let lefts = if on_left { expand(c.left, &lctrl, left.fin) } else { vec![c.left] };
            let rights = if on_right { expand(c.right, &rctrl, right.fin) } else { vec![c.right] };
            for lp in &lefts {
                for rp in &rights {
                    out = out.with(*lp, *rp, c.cond.clone());
                }
            }
        }
        out
    };
    (restrict(l, true, false), restrict(r, false, true), restrict(j, true, true))
}

/// States reachable from the given initial states, breadth first.
pub fn reachable<A: Automaton>(
    a: &A,
    inits: Vec<(A::Ctrl, A::Sto)>,
    budget: usize,
) -> Result<Vec<(A::Ctrl, A::Sto)>, AutomatonError> {
    let mut seen: HashSet<(A::Ctrl, A::Sto)> = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    for st in inits {
        if seen.insert(st.clone()) {
            queue.push_back(st.clone());
            order.push(st);
        }
    }
    while let Some((n, s)) = queue.pop_front() {
        for st in a.step(&n, &s) {
            if seen.insert(st.clone()) {
                if order.len() >= budget {
                    return Err(AutomatonError::Budget(budget));
                }
                queue.push_back(st.clone());
                order.push(st);
            }
        }
    }
    Ok(order)
}

fn side_bounds(p: &Product, pre: &Formula, bound: &DomainBound) -> (DomainBound, DomainBound) {
    let lb = bound.extended(p.left.cmd.vars().into_iter().chain(pre.vars_left()));
    let rb = bound.extended(p.right.cmd.vars().into_iter().chain(pre.vars_right()));
    (lb, rb)
}

/// Store pairs of the bound satisfying `pre`.
pub fn initial_pairs(p: &Product, pre: &Formula, bound: &DomainBound) -> Vec<(Store, Store)> {
    let (lb, rb) = side_bounds(p, pre, bound);
    let cp = CompiledPair::new(pre, &lb.universe(), &rb.universe());
    let lefts = lb.stores();
    let rights = rb.stores();
    let mut out = Vec::new();
    for s in &lefts {
        for s2 in &rights {
            if cp.holds(s, s2) {
                out.push((s.clone(), s2.clone()));
            }
        }
    }
    out
}

/// Every state reachable from a `pre`-pair at the initial control satisfies
/// `L ∨ R ∨ J ∨ [fin|fin']`.
pub fn check_manifest_adequacy(p: &Product, pre: &Formula, bound: &DomainBound) -> Verdict {
    let init = p.init();
    let inits = initial_pairs(p, pre, bound).into_iter().map(|st| (init, st)).collect();
    let states = match reachable(p, inits, bound.step_budget) {
        Ok(s) => s,
        Err(e) => return Verdict::Inconclusive(e.to_string()),
    };
    let mut ws = Vec::new();
    for ((n, m), (s, s2)) in states {
        if !p.covered(n, m, &s, &s2) {
            ws.push(Witness::State { ctrl: (n, m), stores: (s, s2) });
            if ws.len() >= MAX_WITNESSES {
                break;
            }
        }
    }
    if ws.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Counterexample(ws)
    }
}

/// Every pair of terminated unary runs from a `pre`-pair is matched by a
/// terminated product run.
pub fn check_adequacy(p: &Product, pre: &Formula, bound: &DomainBound) -> Verdict {
    let mut ws = Vec::new();
    for (s, s2) in initial_pairs(p, pre, bound) {
        let outs = match (p.left.outcomes(&s, bound.step_budget), p.right.outcomes(&s2, bound.step_budget)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return Verdict::Inconclusive(e.to_string()),
        };
        let prod = match reachable(p, vec![(p.init(), (s.clone(), s2.clone()))], bound.step_budget) {
            Ok(st) => st,
            Err(e) => return Verdict::Inconclusive(e.to_string()),
        };
        let fin = p.fin();
        let done: HashSet<(Store, Store)> = prod.into_iter().filter(|(c, _)| *c == fin).map(|(_, st)| st).collect();
        for t in &outs.0 {
            for t2 in &outs.1 {
                if !done.contains(&(t.clone(), t2.clone())) {
                    ws.push(Witness::RelRun { inputs: (s.clone(), s2.clone()), outputs: (t.clone(), t2.clone()) });
                    if ws.len() >= MAX_WITNESSES {
                        return Verdict::Counterexample(ws);
                    }
                }
            }
        }
    }
    if ws.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Counterexample(ws)
    }
}

fn ext_of(vars: &[(Side, String)], stores: impl Iterator<Item = Vec<i64>>) -> Formula {
    Formula::Ext(Arc::new(ExtSet { vars: vars.to_vec(), tuples: stores.collect() }))
}

/// Strongest invariant annotation: `pre` at the initial point, `post` (or the
/// reachable set) at the final point, reachable sets elsewhere, all over the bound.
pub fn strongest_annotation(
    a: &ProgramAut,
    pre: &Formula,
    post: Option<&Formula>,
    bound: &DomainBound,
) -> Result<UnaryAnnotation, AutomatonError> {
    let b = bound.extended(a.cmd.vars().into_iter().chain(pre.vars_left()));
    let universe = b.universe();
    let empty = Store::new();
    let inits = b.stores().into_iter().filter(|s| pre.holds(s, &empty)).map(|s| (a.init(), s)).collect();
    let states = reachable(a, inits, bound.step_budget)?;
    let mut by_ctrl: BTreeMap<Label, Vec<Vec<i64>>> = BTreeMap::new();
    for (n, s) in states {
        by_ctrl.entry(n).or_default().push(universe.iter().map(|x| s.get(x).copied().unwrap_or(0)).collect());
    }
    let vars: Vec<(Side, String)> = universe.iter().map(|x| (Side::L, x.clone())).collect();
    let mut an = UnaryAnnotation::default();
    for n in a.ctrl() {
        let f = if n == a.init() {
            pre.clone()
        } else if n == a.fin && post.is_some() {
            post.unwrap().clone()
        } else {
            ext_of(&vars, by_ctrl.remove(&n).unwrap_or_default().into_iter())
        };
        an.set(n, f);
    }
    Ok(an)
}

/// Relational analogue of [`strongest_annotation`] for a product automaton.
pub fn strongest_rel_annotation(
    p: &Product,
    pre: &Formula,
    post: Option<&Formula>,
    bound: &DomainBound,
) -> Result<RelAnnotation, AutomatonError> {
    let (lb, rb) = side_bounds(p, pre, bound);
    let (lu, ru) = (lb.universe(), rb.universe());
    let init = p.init();
    let inits = initial_pairs(p, pre, bound).into_iter().map(|st| (init, st)).collect();
    let states = reachable(p, inits, bound.step_budget)?;
    let mut by_ctrl: BTreeMap<(Label, Label), Vec<Vec<i64>>> = BTreeMap::new();
    for (c, (s, s2)) in states {
        let mut t: Vec<i64> = lu.iter().map(|x| s.get(x).copied().unwrap_or(0)).collect();
        t.extend(ru.iter().map(|x| s2.get(x).copied().unwrap_or(0)));
        by_ctrl.entry(c).or_default().push(t);
    }
    let mut vars: Vec<(Side, String)> = lu.iter().map(|x| (Side::L, x.clone())).collect();
    vars.extend(ru.iter().map(|x| (Side::R, x.clone())));
    let mut an = RelAnnotation::default();
    for c in p.ctrl() {
        let f = if c == init {
            pre.clone()
        } else if c == p.fin() && post.is_some() {
            post.unwrap().clone()
        } else {
            ext_of(&vars, by_ctrl.remove(&c).unwrap_or_default().into_iter())
        };
        an.set(c.0, c.1, f);
    }
    Ok(an)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::store_from;
    use crate::syntax::parse_program;

    const C0: &str = "x := y ; do x > 0 -> if x mod 2 = 0 -> x := x - 1 [] x mod 2 != 0 -> x := x - 2 fi od";

    #[test]
    fn c0_edges() {
        let a = aut(&parse_program(C0).unwrap(), 6).unwrap();
        let es: Vec<(Label, Label, &str)> = edges(&a).iter().map(|e| (e.from, e.to, e.kind.name())).collect();
        assert_eq!(
            es,
            vec![
                (1, 2, "asgn"),
                (2, 3, "do-enter"),
                (2, 6, "do-exit"),
                (3, 4, "if-branch"),
                (3, 5, "if-branch"),
                (4, 2, "asgn"),
                (5, 2, "asgn")
            ]
        );
    }

    #[test]
    fn c0_steps_match_edges() {
        let a = aut(&parse_program(C0).unwrap(), 6).unwrap();
        let s = store_from(&[("x", 3), ("y", 3)]);
        assert_eq!(a.step(&2, &s), vec![(3, s.clone())]);
        assert_eq!(a.step(&3, &s), vec![(5, s.clone())]);
        assert_eq!(a.step(&5, &s), vec![(2, store_from(&[("x", 1), ("y", 3)]))]);
        assert!(a.step(&6, &s).is_empty());
        assert_eq!(a.outcomes(&store_from(&[("y", 3)]), 1000).unwrap().len(), 1);
    }
}
