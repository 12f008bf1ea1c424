//! Stores, expression evaluation, the small-step transition relation and a
//! big-step denotation, plus bounded brute-force checks of unary and
//! relational correctness judgments.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use crate::assertions::Formula;
use crate::syntax::{enab, ArithOp, BoolExpr, CmpOp, Command, IntExpr, Label};

/// Total map from variable names to integers; absent variables read as 0.
pub type Store = BTreeMap<String, i64>;

pub const MAX_WITNESSES: usize = 5;

pub fn store_from(pairs: &[(&str, i64)]) -> Store {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

pub fn show_store(s: &Store) -> String {
    s.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(" ")
}

pub fn arith(op: ArithOp, a: i64, b: i64) -> i64 {
    match op {
        ArithOp::Add => a.wrapping_add(b),
        ArithOp::Sub => a.wrapping_sub(b),
        ArithOp::Mul => a.wrapping_mul(b),
        // Remainder takes the sign of the dividend; modulus 0 yields 0.
        ArithOp::Mod => {
            if b == 0 {
                0
            } else {
                a.wrapping_rem(b)
            }
        }
    }
}

pub fn compare(op: CmpOp, a: i64, b: i64) -> bool {
    match op {
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
    }
}

pub fn eval_int(e: &IntExpr, s: &Store) -> i64 {
    match e {
        IntExpr::Lit(v) => *v,
        IntExpr::Var(x) => s.get(x).copied().unwrap_or(0),
        IntExpr::Bin(op, a, b) => arith(*op, eval_int(a, s), eval_int(b, s)),
    }
}

pub fn eval_bool(b: &BoolExpr, s: &Store) -> bool {
    match b {
        BoolExpr::True => true,
        BoolExpr::False => false,
        BoolExpr::Cmp(op, x, y) => compare(*op, eval_int(x, s), eval_int(y, s)),
        BoolExpr::Not(a) => !eval_bool(a, s),
        BoolExpr::And(a, c) => eval_bool(a, s) && eval_bool(c, s),
        BoolExpr::Or(a, c) => eval_bool(a, s) || eval_bool(c, s),
    }
}

pub fn update(s: &Store, x: &str, v: i64) -> Store {
    let mut t = s.clone();
    t.insert(x.to_string(), v);
    t
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub cmd: Command,
    pub store: Store,
}

impl Config {
    pub fn is_terminal(&self) -> bool {
        matches!(self.cmd, Command::Skip(_))
    }
}

/// All one-step successors. Terminal configurations and conditionals with no
/// enabled guard have none.
pub fn step(cfg: &Config) -> Vec<Config> {
    let s = &cfg.store;
    match &cfg.cmd {
        Command::Skip(_) => vec![],
        Command::Assign(n, x, e) => {
            vec![Config { cmd: Command::Skip(-n), store: update(s, x, eval_int(e, s)) }]
        }
        Command::Seq(a, b) => {
            if let Command::Skip(_) = **a {
                return vec![Config { cmd: (**b).clone(), store: s.clone() }];
            }
            step(&Config { cmd: (**a).clone(), store: s.clone() })
                .into_iter()
                .map(|c| Config { cmd: Command::seq(c.cmd, (**b).clone()), store: c.store })
                .collect()
        }
        Command::If(_, gcs) => gcs
            .iter()
            .filter(|gc| eval_bool(&gc.guard, s))
            .map(|gc| Config { cmd: gc.body.clone(), store: s.clone() })
            .collect(),
        Command::Do(n, gcs) => {
            let enabled: Vec<_> = gcs.iter().filter(|gc| eval_bool(&gc.guard, s)).collect();
            if enabled.is_empty() {
                vec![Config { cmd: Command::Skip(-n), store: s.clone() }]
            } else {
                enabled
                    .into_iter()
                    .map(|gc| Config { cmd: Command::seq(gc.body.clone(), cfg.cmd.clone()), store: s.clone() })
                    .collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Complete,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunResult {
    pub outcomes: BTreeSet<Store>,
    pub status: RunStatus,
}

/// Final stores reachable by the transition relation, exploring at most
/// `budget` steps along each path.
pub fn run(c: &Command, s: &Store, budget: usize) -> RunResult {
    let mut outcomes = BTreeSet::new();
    let mut frontier: HashSet<Config> = HashSet::new();
    frontier.insert(Config { cmd: c.clone(), store: s.clone() });
    let mut steps = 0;
    while !frontier.is_empty() {
        let mut next = HashSet::new();
        for cfg in frontier {
            if cfg.is_terminal() {
                outcomes.insert(cfg.store);
            } else {
                next.extend(step(&cfg));
            }
        }
        if next.is_empty() {
            break;
        }
        if steps == budget {
            return RunResult { outcomes, status: RunStatus::BudgetExceeded };
        }
        steps += 1;
        frontier = next;
    }
    RunResult { outcomes, status: RunStatus::Complete }
}

/// Relational denotation computed compositionally; loops are unrolled with a
/// shared iteration budget.
pub fn denote_bigstep(c: &Command, s: &Store, budget: usize) -> RunResult {
    let mut fuel = budget;
    let mut exceeded = false;
    let init: BTreeSet<Store> = [s.clone()].into_iter().collect();
    let outcomes = big(c, init, &mut fuel, &mut exceeded);
    let status = if exceeded { RunStatus::BudgetExceeded } else { RunStatus::Complete };
    RunResult { outcomes, status }
}

fn big(c: &Command, ss: BTreeSet<Store>, fuel: &mut usize, exceeded: &mut bool) -> BTreeSet<Store> {
    match c {
        Command::Skip(_) => ss,
        Command::Assign(_, x, e) => ss.iter().map(|s| update(s, x, eval_int(e, s))).collect(),
        Command::Seq(a, b) => {
            let mid = big(a, ss, fuel, exceeded);
            big(b, mid, fuel, exceeded)
        }
        Command::If(_, gcs) => {
            let mut out = BTreeSet::new();
            for gc in gcs {
                let take: BTreeSet<Store> = ss.iter().filter(|s| eval_bool(&gc.guard, s)).cloned().collect();
                if !take.is_empty() {
                    out.extend(big(&gc.body, take, fuel, exceeded));
                }
            }
            out
        }
        Command::Do(_, gcs) => {
            let guard = enab(gcs);
            let mut out = BTreeSet::new();
            let mut cur = ss;
            while !cur.is_empty() {
                let (done, live): (BTreeSet<Store>, BTreeSet<Store>) =
                    cur.into_iter().partition(|s| !eval_bool(&guard, s));
                out.extend(done);
                if live.is_empty() {
                    break;
                }
                if *fuel == 0 {
                    *exceeded = true;
                    break;
                }
                *fuel -= 1;
                let mut next = BTreeSet::new();
                for gc in gcs {
                    let take: BTreeSet<Store> = live.iter().filter(|s| eval_bool(&gc.guard, s)).cloned().collect();
                    if !take.is_empty() {
                        next.extend(big(&gc.body, take, fuel, exceeded));
                    }
                }
                cur = next;
            }
            out
        }
    }
}

/// Finite enumeration domain: variables, value ranges, an optional program
/// counter with an explicit domain, and the step budget for executions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DomainBound {
    pub vars: Vec<String>,
    pub lo: i64,
    pub hi: i64,
    pub ranges: BTreeMap<String, (i64, i64)>,
    pub step_budget: usize,
    pub pc: Option<(String, Vec<i64>)>,
}

pub const DEFAULT_LO: i64 = -4;
pub const DEFAULT_HI: i64 = 8;
pub const DEFAULT_BUDGET: usize = 100_000;

impl DomainBound {
    pub fn new<S: AsRef<str>>(vars: &[S], lo: i64, hi: i64) -> DomainBound {
        let mut b = DomainBound {
            vars: Vec::new(),
            lo,
            hi,
            ranges: BTreeMap::new(),
            step_budget: DEFAULT_BUDGET,
            pc: None,
        };
        b.add_vars(vars.iter().map(|v| v.as_ref().to_string()));
        b
    }

    pub fn with_range(mut self, x: &str, lo: i64, hi: i64) -> DomainBound {
        self.ranges.insert(x.to_string(), (lo, hi));
        self.add_vars([x.to_string()]);
        self
    }

    pub fn with_budget(mut self, budget: usize) -> DomainBound {
        self.step_budget = budget;
        self
    }

    pub fn with_pc(mut self, pc: &str, domain: impl IntoIterator<Item = i64>) -> DomainBound {
        let mut d: Vec<i64> = domain.into_iter().collect();
        d.sort();
        d.dedup();
        self.pc = Some((pc.to_string(), d));
        self
    }

    pub fn add_vars(&mut self, vars: impl IntoIterator<Item = String>) {
        for v in vars {
            if !self.vars.contains(&v) {
                self.vars.push(v);
            }
        }
        self.vars.sort();
    }

    pub fn extended(&self, vars: impl IntoIterator<Item = String>) -> DomainBound {
        let mut b = self.clone();
        b.add_vars(vars);
        b
    }

    pub fn pc_name(&self) -> Option<&str> {
        self.pc.as_ref().map(|(n, _)| n.as_str())
    }

    pub fn domain(&self, x: &str) -> Vec<i64> {
        if let Some((pc, d)) = &self.pc {
            if pc == x {
                return d.clone();
            }
        }
        let (lo, hi) = self.ranges.get(x).copied().unwrap_or((self.lo, self.hi));
        (lo..=hi).collect()
    }

    pub fn in_domain(&self, x: &str, v: i64) -> bool {
        if let Some((pc, d)) = &self.pc {
            if pc == x {
                return d.contains(&v);
            }
        }
        let (lo, hi) = self.ranges.get(x).copied().unwrap_or((self.lo, self.hi));
        lo <= v && v <= hi
    }

    /// Variables enumerated for stores: the declared ones plus the counter if set.
    pub fn universe(&self) -> Vec<String> {
        let mut vs = self.vars.clone();
        if let Some((pc, _)) = &self.pc {
            if !vs.contains(pc) {
                vs.push(pc.clone());
                vs.sort();
            }
        }
        vs
    }

    pub fn stores(&self) -> Vec<Store> {
        stores_over(&self.universe(), |x| self.domain(x))
    }
}

/// Cartesian product of per-variable domains.
pub fn stores_over(vars: &[String], dom: impl Fn(&str) -> Vec<i64>) -> Vec<Store> {
    let mut out = vec![Store::new()];
    for v in vars {
        let d = dom(v);
        let mut next = Vec::with_capacity(out.len() * d.len());
        for s in &out {
            for x in &d {
                let mut t = s.clone();
                t.insert(v.clone(), *x);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Evidence attached to a negative verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    Store(Store),
    Pair(Store, Store),
    Run { input: Store, output: Store },
    RelRun { inputs: (Store, Store), outputs: (Store, Store) },
    State { ctrl: (Label, Label), stores: (Store, Store) },
    Equiv { input: Store, only_left: Vec<Store>, only_right: Vec<Store> },
    Note(String),
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::Store(s) => write!(f, "[{}]", show_store(s)),
            Witness::Pair(s, t) => write!(f, "[{}] | [{}]", show_store(s), show_store(t)),
            Witness::Run { input, output } => write!(f, "[{}] ~> [{}]", show_store(input), show_store(output)),
            Witness::RelRun { inputs, outputs } => write!(
                f,
                "[{}] | [{}] ~> [{}] | [{}]",
                show_store(&inputs.0),
                show_store(&inputs.1),
                show_store(&outputs.0),
                show_store(&outputs.1)
            ),
            Witness::State { ctrl, stores } => write!(
                f,
                "({},{}) [{}] | [{}]",
                ctrl.0,
                ctrl.1,
                show_store(&stores.0),
                show_store(&stores.1)
            ),
            Witness::Equiv { input, only_left, only_right } => {
                let show = |v: &Vec<Store>| v.iter().map(|s| format!("[{}]", show_store(s))).collect::<Vec<_>>().join(" ");
                write!(f, "from [{}]: only left {{{}}} only right {{{}}}", show_store(input), show(only_left), show(only_right))
            }
            Witness::Note(s) => f.write_str(s),
        }
    }
}

/// Outcome of a bounded check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    Counterexample(Vec<Witness>),
    Inconclusive(String),
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Valid => "VALID",
            Verdict::Counterexample(_) => "COUNTEREXAMPLE",
            Verdict::Inconclusive(_) => "INCONCLUSIVE",
        }
    }

    /// Conjunction of verdicts: counterexamples win over inconclusive results.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Counterexample(mut a), Verdict::Counterexample(b)) => {
                a.extend(b);
                a.truncate(MAX_WITNESSES);
                Verdict::Counterexample(a)
            }
            (c @ Verdict::Counterexample(_), _) | (_, c @ Verdict::Counterexample(_)) => c,
            (i @ Verdict::Inconclusive(_), _) | (_, i @ Verdict::Inconclusive(_)) => i,
            _ => Verdict::Valid,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => f.write_str("VALID"),
            Verdict::Counterexample(ws) => {
                f.write_str("COUNTEREXAMPLE")?;
                for w in ws {
                    write!(f, "\n  {w}")?;
                }
                Ok(())
            }
            Verdict::Inconclusive(why) => write!(f, "INCONCLUSIVE ({why})"),
        }
    }
}

fn bound_for(bound: &DomainBound, parts: &[BTreeSet<String>]) -> DomainBound {
    bound.extended(parts.iter().flat_map(|p| p.iter().cloned()))
}

/// Checks `c : {P}{Q}` by running `c` from every `P`-store of the bound.
pub fn check_unary(c: &Command, pre: &Formula, post: &Formula, bound: &DomainBound) -> Verdict {
    let b = bound_for(bound, &[c.vars(), pre.vars_left(), post.vars_left()]);
    let empty = Store::new();
    let mut witnesses = Vec::new();
    let mut inconclusive = None;
    for s in b.stores() {
        if !pre.holds(&s, &empty) {
            continue;
        }
        let r = run(c, &s, b.step_budget);
        if r.status == RunStatus::BudgetExceeded {
            inconclusive.get_or_insert_with(|| format!("step budget exceeded from [{}]", show_store(&s)));
        }
        for t in r.outcomes {
            if !post.holds(&t, &empty) {
                witnesses.push(Witness::Run { input: s.clone(), output: t });
                if witnesses.len() >= MAX_WITNESSES {
                    return Verdict::Counterexample(witnesses);
                }
            }
        }
    }
    if !witnesses.is_empty() {
        Verdict::Counterexample(witnesses)
    } else if let Some(why) = inconclusive {
        Verdict::Inconclusive(why)
    } else {
        Verdict::Valid
    }
}

/// Checks `c | c' : {R}{S}` over pairs of stores from the bound.
pub fn check_rel(c: &Command, c2: &Command, pre: &Formula, post: &Formula, bound: &DomainBound) -> Verdict {
    let lb = bound_for(bound, &[c.vars(), pre.vars_left(), post.vars_left()]);
    let rb = bound_for(bound, &[c2.vars(), pre.vars_right(), post.vars_right()]);
    let lefts: Vec<(Store, RunResult)> = lb
        .stores()
        .into_iter()
        .map(|s| {
            let r = run(c, &s, bound.step_budget);
            (s, r)
        })
        .collect();
    let rights: Vec<(Store, RunResult)> = rb
        .stores()
        .into_iter()
        .map(|s| {
            let r = run(c2, &s, bound.step_budget);
            (s, r)
        })
        .collect();
    let pre_c = crate::assertions::CompiledPair::new(pre, &lb.universe(), &rb.universe());
    let post_c = crate::assertions::CompiledPair::new(post, &lb.universe(), &rb.universe());
    let mut witnesses = Vec::new();
    let mut inconclusive = None;
    for (s, rs) in &lefts {
        for (s2, rs2) in &rights {
            if !pre_c.holds(s, s2) {
                continue;
            }
            for (st, r) in [(s, rs), (s2, rs2)] {
                if r.status == RunStatus::BudgetExceeded {
                    inconclusive.get_or_insert_with(|| format!("step budget exceeded from [{}]", show_store(st)));
                }
            }
            for t in &rs.outcomes {
                for t2 in &rs2.outcomes {
                    if !post_c.holds(t, t2) {
                        witnesses.push(Witness::RelRun { inputs: (s.clone(), s2.clone()), outputs: (t.clone(), t2.clone()) });
                        if witnesses.len() >= MAX_WITNESSES {
                            return Verdict::Counterexample(witnesses);
                        }
                    }
                }
            }
        }
    }
    if !witnesses.is_empty() {
        Verdict::Counterexample(witnesses)
    } else if let Some(why) = inconclusive {
        Verdict::Inconclusive(why)
    } else {
        Verdict::Valid
    }
}

/// Conditionals whose guards are not exhaustive over the bound, with a witness store.
pub fn non_total_ifs(c: &Command, bound: &DomainBound) -> Vec<(Label, Store)> {
    let mut out = Vec::new();
    let b = bound.extended(c.vars());
    collect_ifs(c, &mut |n, gcs| {
        let g = enab(gcs);
        if let Some(s) = b.stores().into_iter().find(|s| !eval_bool(&g, s)) {
            out.push((n, s));
        }
    });
    out
}

fn collect_ifs(c: &Command, f: &mut impl FnMut(Label, &[crate::syntax::GuardedCmd])) {
    match c {
        Command::Skip(_) | Command::Assign(..) => {}
        Command::Seq(a, b) => {
            collect_ifs(a, f);
            collect_ifs(b, f);
        }
        Command::If(n, gcs) => {
            f(*n, gcs);
            for gc in gcs {
                collect_ifs(&gc.body, f);
            }
        }
        Command::Do(_, gcs) => {
            for gc in gcs {
                collect_ifs(&gc.body, f);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_program;

    #[test]
    fn mod_follows_dividend_sign() {
        assert_eq!(arith(ArithOp::Mod, -3, 2), -1);
        assert_eq!(arith(ArithOp::Mod, 3, -2), 1);
        assert_eq!(arith(ArithOp::Mod, 5, 0), 0);
    }

    #[test]
    fn assignment_steps_to_negative_skip() {
        let c = parse_program("x := 3").unwrap();
        let next = step(&Config { cmd: c, store: Store::new() });
        assert_eq!(next.len(), 1);
        assert_eq!(next[0].cmd, Command::Skip(-1));
        assert_eq!(next[0].store, store_from(&[("x", 3)]));
    }

    #[test]
    fn budget_is_reported() {
        let c = parse_program("do true -> skip od").unwrap();
        let r = run(&c, &Store::new(), 50);
        assert_eq!(r.status, RunStatus::BudgetExceeded);
        assert!(r.outcomes.is_empty());
        assert_eq!(denote_bigstep(&c, &Store::new(), 50).status, RunStatus::BudgetExceeded);
    }

    #[test]
    fn nondeterministic_if() {
        let c = parse_program("if true -> x := 1 [] true -> x := 2 fi").unwrap();
        let r = run(&c, &Store::new(), 10);
        assert_eq!(r.outcomes.len(), 2);
        assert_eq!(denote_bigstep(&c, &Store::new(), 10).outcomes, r.outcomes);
    }
}
