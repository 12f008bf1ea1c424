//! KAT expressions, the translation from commands, and their interpretation
//! as relations over a bounded store space.
//!
//! The store space is the cartesian product of the per-variable domains of a
//! [`DomainBound`], restricted to the variables the expressions mention. An
//! assignment whose result leaves the space has no successor, so every
//! relation stays inside the space and star reaches its fixed point.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::assertions::{self, Formula};
use crate::semantics::{arith, compare, DomainBound, Store, Verdict, Witness, MAX_WITNESSES};
use crate::syntax::{enab, ArithOp, BoolExpr, CmpOp, Command, GuardedCmd, IntExpr, Label};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KatError {
    #[error("variable '{0}' occurs in the command")]
    PcNotFresh(String),
    #[error("complement of a non-test expression: {0}")]
    NotATest(String),
    #[error("equation does not hold in the bounded model: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum KatExpr {
    Zero,
    One,
    /// Primitive test: `true`, `false` or a comparison.
    Test(BoolExpr),
    Action(String, IntExpr),
    Plus(Box<KatExpr>, Box<KatExpr>),
    Seq(Box<KatExpr>, Box<KatExpr>),
    Star(Box<KatExpr>),
    Neg(Box<KatExpr>),
}

impl KatExpr {
    pub fn plus(a: KatExpr, b: KatExpr) -> KatExpr {
        KatExpr::Plus(Box::new(a), Box::new(b))
    }

    pub fn seq(a: KatExpr, b: KatExpr) -> KatExpr {
        KatExpr::Seq(Box::new(a), Box::new(b))
    }

    pub fn star(a: KatExpr) -> KatExpr {
        KatExpr::Star(Box::new(a))
    }

    /// Test complement; rejects expressions that are not tests.
    pub fn neg(a: KatExpr) -> Result<KatExpr, KatError> {
        if !a.is_test() {
            return Err(KatError::NotATest(a.to_string()));
        }
        Ok(KatExpr::Neg(Box::new(a)))
    }

    pub fn is_test(&self) -> bool {
        match self {
            KatExpr::Zero | KatExpr::One | KatExpr::Test(_) => true,
            KatExpr::Action(..) | KatExpr::Star(_) => false,
            KatExpr::Plus(a, b) | KatExpr::Seq(a, b) => a.is_test() && b.is_test(),
            KatExpr::Neg(a) => a.is_test(),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    fn vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            KatExpr::Zero | KatExpr::One => {}
            KatExpr::Test(b) => b.vars_into(out),
            KatExpr::Action(x, e) => {
                out.insert(x.clone());
                e.vars_into(out);
            }
            KatExpr::Plus(a, b) | KatExpr::Seq(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            KatExpr::Star(a) | KatExpr::Neg(a) => a.vars_into(out),
        }
    }
}

fn kat_prec(k: &KatExpr) -> u8 {
    match k {
        KatExpr::Plus(..) => 0,
        KatExpr::Seq(..) => 1,
        _ => 2,
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, k: &KatExpr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({k})")
    } else {
        write!(f, "{k}")
    }
}

impl fmt::Display for KatExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KatExpr::Zero => f.write_str("0"),
            KatExpr::One => f.write_str("1"),
            KatExpr::Test(b) => write!(f, "[{b}]"),
            KatExpr::Action(x, e) => write!(f, "[{x} := {e}]"),
            KatExpr::Plus(a, b) => {
                write_child(f, a, false)?;
                f.write_str(" + ")?;
                write_child(f, b, kat_prec(b) == 0)
            }
            KatExpr::Seq(a, b) => {
                write_child(f, a, kat_prec(a) < 1)?;
                f.write_str(" ; ")?;
                write_child(f, b, kat_prec(b) <= 1)
            }
            KatExpr::Star(a) => {
                write_child(f, a, kat_prec(a) < 2)?;
                f.write_str("*")
            }
            KatExpr::Neg(a) => {
                f.write_str("!")?;
                write_child(f, a, kat_prec(a) < 2)
            }
        }
    }
}

/// Booleans map homomorphically; `true`, `false` and comparisons stay atomic.
pub fn mkt_bool(e: &BoolExpr) -> KatExpr {
    match e {
        BoolExpr::True | BoolExpr::False | BoolExpr::Cmp(..) => KatExpr::Test(e.clone()),
        BoolExpr::Not(a) => KatExpr::Neg(Box::new(mkt_bool(a))),
        BoolExpr::And(a, b) => KatExpr::seq(mkt_bool(a), mkt_bool(b)),
        BoolExpr::Or(a, b) => KatExpr::plus(mkt_bool(a), mkt_bool(b)),
    }
}

/// Sum of `guard ; body` over the list, right-nested; empty is `0`.
pub fn mkt_gcs(gcs: &[GuardedCmd]) -> KatExpr {
    let mut terms: Vec<KatExpr> = gcs.iter().map(|gc| KatExpr::seq(mkt_bool(&gc.guard), mkt(&gc.body))).collect();
    match terms.pop() {
        None => KatExpr::Zero,
        Some(last) => terms.into_iter().rev().fold(last, |acc, t| KatExpr::plus(t, acc)),
    }
}

pub fn mkt(c: &Command) -> KatExpr {
    match c {
        Command::Skip(_) => KatExpr::One,
        Command::Assign(_, x, e) => KatExpr::Action(x.clone(), e.clone()),
        Command::Seq(a, b) => KatExpr::seq(mkt(a), mkt(b)),
        Command::If(_, gcs) => mkt_gcs(gcs),
        Command::Do(_, gcs) => KatExpr::seq(KatExpr::star(mkt_gcs(gcs)), KatExpr::Neg(Box::new(mkt_bool(&enab(gcs))))),
    }
}

// ---------------------------------------------------------------------------
// Bounded relational model

/// Finite store space over an ordered variable list.
#[derive(Clone, Debug)]
pub struct StoreSpace {
    pub vars: Vec<String>,
    domains: Vec<Vec<i64>>,
}

type State = Vec<i64>;

impl StoreSpace {
    pub fn new(vars: &BTreeSet<String>, bound: &DomainBound) -> StoreSpace {
        let vars: Vec<String> = vars.iter().cloned().collect();
        let domains = vars.iter().map(|x| bound.domain(x)).collect();
        StoreSpace { vars, domains }
    }

    pub fn size(&self) -> usize {
        self.domains.iter().map(|d| d.len()).product()
    }

    fn contains(&self, i: usize, v: i64) -> bool {
        let d = &self.domains[i];
        match (d.first(), d.last()) {
            (Some(lo), Some(hi)) if d.len() as i64 == hi - lo + 1 => *lo <= v && v <= *hi,
            _ => d.binary_search(&v).is_ok(),
        }
    }

    fn states(&self) -> Vec<State> {
        let mut out = vec![Vec::with_capacity(self.vars.len())];
        for d in &self.domains {
            let mut next = Vec::with_capacity(out.len() * d.len());
            for s in &out {
                for v in d {
                    let mut t = s.clone();
                    t.push(*v);
                    next.push(t);
                }
            }
            out = next;
        }
        out
    }

    pub fn to_store(&self, s: &[i64]) -> Store {
        self.vars.iter().cloned().zip(s.iter().copied()).collect()
    }

    fn index(&self, x: &str) -> usize {
        self.vars.iter().position(|v| v == x).expect("variable in store space")
    }
}

enum CInt {
    Lit(i64),
    Var(usize),
    Bin(ArithOp, Box<CInt>, Box<CInt>),
}

impl CInt {
    fn eval(&self, s: &[i64]) -> i64 {
        match self {
            CInt::Lit(n) => *n,
            CInt::Var(i) => s[*i],
            CInt::Bin(op, a, b) => arith(*op, a.eval(s), b.eval(s)),
        }
    }
}

enum CBool {
    K(bool),
    Cmp(CmpOp, CInt, CInt),
}

enum Node {
    Zero,
    One,
    Test(CBool),
    Asgn(usize, CInt),
    Plus(Box<Node>, Box<Node>),
    Seq(Box<Node>, Box<Node>),
    Star(Box<Node>),
    Neg(Box<Node>),
}

fn compile_int(e: &IntExpr, sp: &StoreSpace) -> CInt {
    match e {
        IntExpr::Lit(n) => CInt::Lit(*n),
        IntExpr::Var(x) => CInt::Var(sp.index(x)),
        IntExpr::Bin(op, a, b) => CInt::Bin(*op, Box::new(compile_int(a, sp)), Box::new(compile_int(b, sp))),
    }
}

fn compile(k: &KatExpr, sp: &StoreSpace) -> Node {
    match k {
        KatExpr::Zero => Node::Zero,
        KatExpr::One => Node::One,
        KatExpr::Test(b) => Node::Test(match b {
            BoolExpr::True => CBool::K(true),
            BoolExpr::False => CBool::K(false),
            BoolExpr::Cmp(op, a, c) => CBool::Cmp(*op, compile_int(a, sp), compile_int(c, sp)),
            other => return compile(&mkt_bool(other), sp),
        }),
        KatExpr::Action(x, e) => Node::Asgn(sp.index(x), compile_int(e, sp)),
        KatExpr::Plus(a, b) => Node::Plus(Box::new(compile(a, sp)), Box::new(compile(b, sp))),
        KatExpr::Seq(a, b) => Node::Seq(Box::new(compile(a, sp)), Box::new(compile(b, sp))),
        KatExpr::Star(a) => Node::Star(Box::new(compile(a, sp))),
        KatExpr::Neg(a) => Node::Neg(Box::new(compile(a, sp))),
    }
}

fn test_holds(n: &Node, s: &[i64]) -> bool {
    match n {
        Node::Zero => false,
        Node::One => true,
        Node::Test(CBool::K(b)) => *b,
        Node::Test(CBool::Cmp(op, a, b)) => compare(*op, a.eval(s), b.eval(s)),
        Node::Plus(a, b) => test_holds(a, s) || test_holds(b, s),
        Node::Seq(a, b) => test_holds(a, s) && test_holds(b, s),
        Node::Neg(a) => !test_holds(a, s),
        Node::Asgn(..) | Node::Star(_) => unreachable!("tests are checked at construction"),
    }
}

fn dedup(mut v: Vec<State>) -> Vec<State> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Image of a set of states under the relation of `n`.
fn post(n: &Node, sp: &StoreSpace, input: Vec<State>) -> Vec<State> {
    match n {
        Node::Zero => Vec::new(),
        Node::One => input,
        Node::Test(_) | Node::Neg(_) => input.into_iter().filter(|s| test_holds(n, s)).collect(),
        Node::Asgn(i, e) => input
            .into_iter()
            .filter_map(|mut s| {
                let v = e.eval(&s);
                if sp.contains(*i, v) {
                    s[*i] = v;
                    Some(s)
                } else {
                    None
                }
            })
            .collect(),
        Node::Plus(a, b) => {
            let mut out = post(a, sp, input.clone());
            out.extend(post(b, sp, input));
            dedup(out)
        }
        Node::Seq(a, b) => {
            let mid = dedup(post(a, sp, input));
            if mid.is_empty() {
                return mid;
            }
            post(b, sp, mid)
        }
        Node::Star(a) => {
            let mut seen: HashSet<State> = input.iter().cloned().collect();
            let mut frontier = input;
            while !frontier.is_empty() {
                let next = post(a, sp, frontier);
                frontier = next.into_iter().filter(|s| seen.insert(s.clone())).collect();
            }
            dedup(seen.into_iter().collect())
        }
    }
}

/// A KAT expression compiled against a store space.
pub struct Interp {
    pub space: StoreSpace,
    node: Node,
}

impl Interp {
    pub fn new(k: &KatExpr, space: StoreSpace) -> Interp {
        let node = compile(k, &space);
        Interp { space, node }
    }

    /// Outcomes from one store, as stores over the space's variables.
    pub fn image(&self, s: &Store) -> Vec<Store> {
        let st: State = self.space.vars.iter().map(|x| s.get(x).copied().unwrap_or(0)).collect();
        post(&self.node, &self.space, vec![st]).iter().map(|t| self.space.to_store(t)).collect()
    }

    /// The whole relation as (input, output) pairs.
    pub fn relation(&self) -> Vec<(Store, Store)> {
        let mut out = Vec::new();
        for s in self.space.states() {
            for t in post(&self.node, &self.space, vec![s.clone()]) {
                out.push((self.space.to_store(&s), self.space.to_store(&t)));
            }
        }
        out
    }
}

/// Relation of `k` over the store space of its own variables.
pub fn interp(k: &KatExpr, bound: &DomainBound) -> Interp {
    Interp::new(k, StoreSpace::new(&k.vars(), bound))
}

/// Equality of the two relations over the store space of their joint variables.
pub fn equiv_semantic(k1: &KatExpr, k2: &KatExpr, bound: &DomainBound) -> Verdict {
    let mut vars = k1.vars();
    vars.extend(k2.vars());
    let sp = StoreSpace::new(&vars, bound);
    let (n1, n2) = (compile(k1, &sp), compile(k2, &sp));
    let mut ws = Vec::new();
    for s in sp.states() {
        let a = dedup(post(&n1, &sp, vec![s.clone()]));
        let b = dedup(post(&n2, &sp, vec![s.clone()]));
        if a != b {
            let only = |x: &[State], y: &[State]| -> Vec<Store> {
                x.iter().filter(|t| y.binary_search(t).is_err()).map(|t| sp.to_store(t)).collect()
            };
            ws.push(Witness::Equiv { input: sp.to_store(&s), only_left: only(&a, &b), only_right: only(&b, &a) });
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

/// Semantic command equivalence through the translation.
pub fn equiv_commands(c: &Command, d: &Command, bound: &DomainBound) -> Verdict {
    equiv_semantic(&mkt(c), &mkt(d), bound)
}

// ---------------------------------------------------------------------------
// Hypotheses

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EqTag {
    DiffTest,
    SetTest,
    TotIf,
    TestCommuteAsgn,
    HypFalse,
    HypAssign,
}

impl EqTag {
    pub fn name(&self) -> &'static str {
        match self {
            EqTag::DiffTest => "diffTest",
            EqTag::SetTest => "setTest",
            EqTag::TotIf => "totIf",
            EqTag::TestCommuteAsgn => "testCommuteAsgn",
            EqTag::HypFalse => "hyp-false",
            EqTag::HypAssign => "hyp-assign",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KatEquation {
    pub lhs: KatExpr,
    pub rhs: KatExpr,
    pub tag: EqTag,
}

impl KatEquation {
    /// Builds the equation after checking it in the bounded model.
    pub fn checked(lhs: KatExpr, rhs: KatExpr, tag: EqTag, bound: &DomainBound) -> Result<KatEquation, KatError> {
        let eq = KatEquation { lhs, rhs, tag };
        match eq.validate(bound) {
            Verdict::Valid => Ok(eq),
            v => Err(KatError::Invalid(format!("{eq}: {v}"))),
        }
    }

    pub fn validate(&self, bound: &DomainBound) -> Verdict {
        equiv_semantic(&self.lhs, &self.rhs, bound)
    }
}

impl fmt::Display for KatEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) {} = {}", self.tag.name(), self.lhs, self.rhs)
    }
}

/// `⟨e⟩ = 0` for a boolean expression unsatisfiable over the bound.
pub fn hyp_false(e: &BoolExpr, bound: &DomainBound) -> Result<KatEquation, KatError> {
    match assertions::satisfiable(&Formula::test(e.clone()), &bound.extended(e.vars())) {
        None => Ok(KatEquation { lhs: mkt_bool(e), rhs: KatExpr::Zero, tag: EqTag::HypFalse }),
        Some(w) => Err(KatError::Invalid(format!("{e} is satisfied by {w}"))),
    }
}

/// `⟨e0⟩ ; ⟨x:=e⟩ ; ¬⟨e1⟩ = 0` when `e0 ⇒ e1[x:=e]` holds over the bound.
pub fn hyp_assign(e0: &BoolExpr, x: &str, e: &IntExpr, e1: &BoolExpr, bound: &DomainBound) -> Result<KatEquation, KatError> {
    let ante = Formula::test(e0.clone());
    let cons = Formula::test(e1.clone()).subst1(x, e);
    let mut vars = e0.vars();
    vars.extend(e1.vars());
    vars.extend(e.vars());
    vars.insert(x.to_string());
    match assertions::entails(&ante, &cons, &bound.extended(vars)) {
        Verdict::Valid => Ok(KatEquation {
            lhs: KatExpr::seq(
                KatExpr::seq(mkt_bool(e0), KatExpr::Action(x.to_string(), e.clone())),
                KatExpr::Neg(Box::new(mkt_bool(e1))),
            ),
            rhs: KatExpr::Zero,
            tag: EqTag::HypAssign,
        }),
        v => Err(KatError::Invalid(format!("{e0} does not ensure {e1} after {x} := {e}: {v}"))),
    }
}

fn query(pc: &str, i: Label) -> KatExpr {
    KatExpr::Test(BoolExpr::var_eq(pc, i))
}

fn set(pc: &str, i: Label) -> KatExpr {
    KatExpr::Action(pc.to_string(), IntExpr::Lit(i))
}

fn ifs_of<'a>(c: &'a Command, out: &mut Vec<&'a [GuardedCmd]>) {
    match c {
        Command::Skip(_) | Command::Assign(..) => {}
        Command::Seq(a, b) => {
            ifs_of(a, out);
            ifs_of(b, out);
        }
        Command::If(_, gcs) | Command::Do(_, gcs) => {
            if matches!(c, Command::If(..)) {
                out.push(gcs);
            }
            for gc in gcs {
                ifs_of(&gc.body, out);
            }
        }
    }
}

/// The normal form axioms for `c` with counter `pc` and final label `f`.
pub fn nfax(pc: &str, c: &Command, f: Label) -> Result<Vec<KatEquation>, KatError> {
    if c.vars().contains(pc) {
        return Err(KatError::PcNotFresh(pc.to_string()));
    }
    let mut labels: Vec<Label> = c.labs().into_iter().collect();
    if !labels.contains(&f) {
        labels.push(f);
    }
    labels.sort();
    let mut out = Vec::new();
    for &i in &labels {
        for &j in &labels {
            if i != j {
                out.push(KatEquation { lhs: KatExpr::seq(query(pc, i), query(pc, j)), rhs: KatExpr::Zero, tag: EqTag::DiffTest });
            }
        }
    }
    for &i in &labels {
        out.push(KatEquation { lhs: KatExpr::seq(set(pc, i), query(pc, i)), rhs: set(pc, i), tag: EqTag::SetTest });
    }
    let mut ifs = Vec::new();
    ifs_of(c, &mut ifs);
    for gcs in ifs {
        out.push(KatEquation { lhs: KatExpr::Neg(Box::new(mkt_bool(&enab(gcs)))), rhs: KatExpr::Zero, tag: EqTag::TotIf });
    }
    let mut seen = HashSet::new();
    for (_, x, e) in c.assignments() {
        if x == pc || !seen.insert((x.to_string(), e.clone())) {
            continue;
        }
        let a = KatExpr::Action(x.to_string(), e.clone());
        for &i in &labels {
            out.push(KatEquation {
                lhs: KatExpr::seq(query(pc, i), a.clone()),
                rhs: KatExpr::seq(a.clone(), query(pc, i)),
                tag: EqTag::TestCommuteAsgn,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_bool_expr, parse_program};

    #[test]
    fn translation_rows() {
        assert_eq!(mkt(&parse_program("skip").unwrap()), KatExpr::One);
        let d = mkt(&parse_program("do x > 0 -> x := x - 1 od").unwrap());
        assert_eq!(d.to_string(), "([x > 0] ; [x := x - 1])* ; ![x > 0]");
        assert!(KatExpr::neg(KatExpr::Action("x".into(), IntExpr::Lit(1))).is_err());
    }

    #[test]
    fn skip_laws_and_distinct_assignments() {
        let b = DomainBound::new(&["x"], -2, 2);
        let one = parse_program("skip").unwrap();
        let two = parse_program("skip ; skip").unwrap();
        assert!(equiv_commands(&two, &one, &b).is_valid());
        let a1 = parse_program("x := 1").unwrap();
        let a2 = parse_program("x := 2").unwrap();
        assert!(!equiv_commands(&a1, &a2, &b).is_valid());
    }

    #[test]
    fn hypotheses_checked() {
        let b = DomainBound::new(&["x"], -3, 3);
        assert!(hyp_false(&parse_bool_expr("x > 0 && x < 0").unwrap(), &b).is_ok());
        assert!(hyp_false(&parse_bool_expr("x > 0").unwrap(), &b).is_err());
        let e0 = parse_bool_expr("x >= 0").unwrap();
        let e1 = parse_bool_expr("x > 0").unwrap();
        let e = IntExpr::bin(ArithOp::Add, IntExpr::var("x"), IntExpr::Lit(1));
        let h = hyp_assign(&e0, "x", &e, &e1, &b).unwrap();
        assert!(h.validate(&b).is_valid());
    }
}
