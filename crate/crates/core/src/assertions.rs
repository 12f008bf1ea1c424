//! Store predicates and store relations as formulas, explicit substitution,
//! state-relation specifications with pc encoding, annotations, and a bounded
//! decision procedure for entailment.
//!
//! A single [`Formula`] type serves both arities: unary formulas mention only
//! the left store. Relational atoms are `lhs(b)`, `rhs(b)` and cross
//! comparisons `eq(e, e')`, `ne`, `lt`, `le`, `gt`, `ge` (left operand read in
//! the left store, right operand in the right store).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use crate::semantics::{arith, compare, eval_bool, eval_int, DomainBound, Store, Verdict, Witness, MAX_WITNESSES};
use crate::syntax::{ArithOp, BoolExpr, CmpOp, IntExpr, Label, Parser, SyntaxError, Tok};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    L,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Arity {
    Unary,
    Rel,
}

/// Simultaneous substitution on either side of a store pair.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Substitution {
    pub left: Option<(String, IntExpr)>,
    pub right: Option<(String, IntExpr)>,
}

/// A predicate given by the explicit list of value tuples it accepts.
#[derive(Clone, Debug)]
pub struct ExtSet {
    pub vars: Vec<(Side, String)>,
    pub tuples: HashSet<Vec<i64>>,
}

impl PartialEq for ExtSet {
    fn eq(&self, other: &ExtSet) -> bool {
        self.vars == other.vars && self.tuples == other.tuples
    }
}

impl Eq for ExtSet {}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Test(Side, BoolExpr),
    /// `e` on the left compared with `e'` on the right.
    Cross(CmpOp, IntExpr, IntExpr),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Subst(Box<Formula>, Substitution),
    Ext(Arc<ExtSet>),
}

pub type StoreFormula = Formula;
pub type RelFormula = Formula;

impl Formula {
    pub fn test(b: BoolExpr) -> Formula {
        Formula::Test(Side::L, b)
    }

    pub fn lhs(b: BoolExpr) -> Formula {
        Formula::Test(Side::L, b)
    }

    pub fn rhs(b: BoolExpr) -> Formula {
        Formula::Test(Side::R, b)
    }

    pub fn on(side: Side, b: BoolExpr) -> Formula {
        Formula::Test(side, b)
    }

    /// `pc = n` on the given side.
    pub fn at(side: Side, pc: &str, n: Label) -> Formula {
        Formula::Test(side, BoolExpr::var_eq(pc, n))
    }

    pub fn eq(a: IntExpr, b: IntExpr) -> Formula {
        Formula::Cross(CmpOp::Eq, a, b)
    }

    pub fn cross(op: CmpOp, a: IntExpr, b: IntExpr) -> Formula {
        Formula::Cross(op, a, b)
    }

    /// `x = x'` for each listed variable.
    pub fn agree(vars: &[&str]) -> Formula {
        Formula::conj(vars.iter().map(|x| Formula::eq(IntExpr::var(x), IntExpr::var(x))).collect())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: Formula) -> Formula {
        Formula::Not(Box::new(a))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Right-nested conjunction; empty is `true`.
    pub fn conj(mut fs: Vec<Formula>) -> Formula {
        match fs.pop() {
            None => Formula::True,
            Some(last) => fs.into_iter().rev().fold(last, |acc, f| Formula::and(f, acc)),
        }
    }

    /// Right-nested disjunction; empty is `false`.
    pub fn disj(mut fs: Vec<Formula>) -> Formula {
        match fs.pop() {
            None => Formula::False,
            Some(last) => fs.into_iter().rev().fold(last, |acc, f| Formula::or(f, acc)),
        }
    }

    pub fn subst1(self, x: &str, e: &IntExpr) -> Formula {
        Formula::Subst(Box::new(self), Substitution { left: Some((x.to_string(), e.clone())), right: None })
    }

    pub fn subst_side(self, side: Side, x: &str, e: &IntExpr) -> Formula {
        let pair = Some((x.to_string(), e.clone()));
        let sub = match side {
            Side::L => Substitution { left: pair, right: None },
            Side::R => Substitution { left: None, right: pair },
        };
        Formula::Subst(Box::new(self), sub)
    }

    pub fn subst_rel(self, left: Option<(&str, &IntExpr)>, right: Option<(&str, &IntExpr)>) -> Formula {
        if left.is_none() && right.is_none() {
            return self;
        }
        let own = |p: Option<(&str, &IntExpr)>| p.map(|(x, e)| (x.to_string(), e.clone()));
        Formula::Subst(Box::new(self), Substitution { left: own(left), right: own(right) })
    }

    /// Top-level conjuncts.
    pub fn conjuncts(&self) -> Vec<&Formula> {
        match self {
            Formula::And(a, b) => {
                let mut v = a.conjuncts();
                v.extend(b.conjuncts());
                v
            }
            _ => vec![self],
        }
    }

    /// Truth in the pair of stores `(s, s2)`; unary formulas ignore `s2`.
    pub fn holds(&self, s: &Store, s2: &Store) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Test(Side::L, b) => eval_bool(b, s),
            Formula::Test(Side::R, b) => eval_bool(b, s2),
            Formula::Cross(op, a, b) => compare(*op, eval_int(a, s), eval_int(b, s2)),
            Formula::Not(a) => !a.holds(s, s2),
            Formula::And(a, b) => a.holds(s, s2) && b.holds(s, s2),
            Formula::Or(a, b) => a.holds(s, s2) || b.holds(s, s2),
            Formula::Implies(a, b) => !a.holds(s, s2) || b.holds(s, s2),
            Formula::Subst(body, sub) => {
                let mut t = s.clone();
                let mut t2 = s2.clone();
                if let Some((x, e)) = &sub.left {
                    t.insert(x.clone(), eval_int(e, s));
                }
                if let Some((x, e)) = &sub.right {
                    t2.insert(x.clone(), eval_int(e, s2));
                }
                body.holds(&t, &t2)
            }
            Formula::Ext(ext) => {
                let tuple: Vec<i64> = ext
                    .vars
                    .iter()
                    .map(|(side, x)| {
                        let st = if *side == Side::L { s } else { s2 };
                        st.get(x).copied().unwrap_or(0)
                    })
                    .collect();
                ext.tuples.contains(&tuple)
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<(Side, String)> {
        let mut out = BTreeSet::new();
        self.fv_into(&mut out);
        out
    }

    fn fv_into(&self, out: &mut BTreeSet<(Side, String)>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Test(side, b) => out.extend(b.vars().into_iter().map(|x| (*side, x))),
            Formula::Cross(_, a, b) => {
                out.extend(a.vars().into_iter().map(|x| (Side::L, x)));
                out.extend(b.vars().into_iter().map(|x| (Side::R, x)));
            }
            Formula::Not(a) => a.fv_into(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.fv_into(out);
                b.fv_into(out);
            }
            Formula::Subst(body, sub) => {
                let mut inner = BTreeSet::new();
                body.fv_into(&mut inner);
                for (side, pair) in [(Side::L, &sub.left), (Side::R, &sub.right)] {
                    if let Some((x, e)) = pair {
                        if inner.remove(&(side, x.clone())) {
                            out.extend(e.vars().into_iter().map(|y| (side, y)));
                        }
                    }
                }
                out.extend(inner);
            }
            Formula::Ext(ext) => out.extend(ext.vars.iter().cloned()),
        }
    }

    pub fn vars_left(&self) -> BTreeSet<String> {
        self.free_vars().into_iter().filter(|(s, _)| *s == Side::L).map(|(_, x)| x).collect()
    }

    pub fn vars_right(&self) -> BTreeSet<String> {
        self.free_vars().into_iter().filter(|(s, _)| *s == Side::R).map(|(_, x)| x).collect()
    }

    /// Whether the formula mentions the right store.
    pub fn is_relational(&self) -> bool {
        self.free_vars().iter().any(|(s, _)| *s == Side::R) || self.has_cross()
    }

    fn has_cross(&self) -> bool {
        match self {
            Formula::Cross(..) => true,
            Formula::Not(a) => a.has_cross(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => a.has_cross() || b.has_cross(),
            Formula::Subst(a, _) => a.has_cross(),
            _ => false,
        }
    }

    /// Visits every atom (tests, cross equalities, extensional sets) and every
    /// substitution node.
    pub fn visit(&self, f: &mut impl FnMut(&Formula)) {
        f(self);
        match self {
            Formula::Not(a) => a.visit(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Formula::Subst(a, _) => a.visit(f),
            _ => {}
        }
    }

    pub fn render(&self, arity: Arity) -> String {
        let mut out = String::new();
        render_into(self, arity, &mut out);
        out
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }
}

// ---------------------------------------------------------------------------
// Rendering

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Implies(..) => 0,
        Formula::Or(..) => 1,
        Formula::And(..) => 2,
        Formula::Not(..) => 3,
        _ => 4,
    }
}

fn render_child(f: &Formula, arity: Arity, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        render_into(f, arity, out);
        out.push(')');
    } else {
        render_into(f, arity, out);
    }
}

fn render_into(f: &Formula, arity: Arity, out: &mut String) {
    match f {
        Formula::True => out.push_str("true"),
        Formula::False => out.push_str("false"),
        Formula::Test(Side::L, b @ BoolExpr::Cmp(..)) if arity == Arity::Unary => {
            let _ = write!(out, "{b}");
        }
        Formula::Test(side, b) => {
            let _ = write!(out, "{}({b})", if *side == Side::L { "lhs" } else { "rhs" });
        }
        Formula::Cross(op, a, b) => {
            let _ = write!(out, "{}({a}, {b})", cross_name(*op));
        }
        Formula::Not(a) => {
            out.push('!');
            let bare = match &**a {
                Formula::Test(Side::L, BoolExpr::Cmp(..)) => arity != Arity::Unary,
                Formula::And(..) | Formula::Or(..) | Formula::Implies(..) => false,
                _ => true,
            };
            render_child(a, arity, !bare, out);
        }
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
            let (p, op) = match f {
                Formula::And(..) => (2, " && "),
                Formula::Or(..) => (1, " || "),
                _ => (0, " ==> "),
            };
            render_child(a, arity, prec(a) <= p, out);
            out.push_str(op);
            render_child(b, arity, prec(b) < p, out);
        }
        Formula::Subst(body, sub) => {
            render_child(body, arity, true, out);
            out.push('[');
            match arity {
                Arity::Unary if sub.right.is_none() => {
                    if let Some((x, e)) = &sub.left {
                        let _ = write!(out, "{x} := {e}");
                    }
                }
                _ => {
                    let name = |p: &Option<(String, IntExpr)>| p.as_ref().map(|(x, _)| x.clone()).unwrap_or_default();
                    let expr = |p: &Option<(String, IntExpr)>| p.as_ref().map(|(_, e)| e.to_string()).unwrap_or_default();
                    let _ = write!(
                        out,
                        "{}|{} := {}|{}",
                        name(&sub.left),
                        name(&sub.right),
                        expr(&sub.left),
                        expr(&sub.right)
                    );
                }
            }
            out.push(']');
        }
        Formula::Ext(ext) => {
            out.push_str("in(");
            for (i, (side, x)) in ext.vars.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                if arity == Arity::Rel || *side == Side::R {
                    out.push_str(if *side == Side::L { "lhs " } else { "rhs " });
                }
                out.push_str(x);
            }
            out.push_str("){");
            let mut tuples: Vec<&Vec<i64>> = ext.tuples.iter().collect();
            tuples.sort();
            for (i, t) in tuples.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push('(');
                out.push_str(&t.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", "));
                out.push(')');
            }
            out.push('}');
        }
    }
}

fn cross_name(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "eq",
        CmpOp::Ne => "ne",
        CmpOp::Lt => "lt",
        CmpOp::Le => "le",
        CmpOp::Gt => "gt",
        CmpOp::Ge => "ge",
    }
}

fn cross_op(name: &str) -> Option<CmpOp> {
    Some(match name {
        "eq" => CmpOp::Eq,
        "ne" => CmpOp::Ne,
        "lt" => CmpOp::Lt,
        "le" => CmpOp::Le,
        "gt" => CmpOp::Gt,
        "ge" => CmpOp::Ge,
        _ => return None,
    })
}

// ---------------------------------------------------------------------------
// Parsing

pub type Defs = BTreeMap<String, Formula>;

pub fn parse_formula(src: &str, arity: Arity) -> Result<Formula, SyntaxError> {
    parse_formula_with(src, arity, &Defs::new())
}

pub fn parse_formula_with(src: &str, arity: Arity, defs: &Defs) -> Result<Formula, SyntaxError> {
    let mut p = Parser::new(src)?;
    let f = FormulaParser { p: &mut p, arity, defs }.implies()?;
    p.expect_eof()?;
    Ok(f)
}

struct FormulaParser<'a> {
    p: &'a mut Parser,
    arity: Arity,
    defs: &'a Defs,
}

impl FormulaParser<'_> {
    fn implies(&mut self) -> Result<Formula, SyntaxError> {
        let a = self.or()?;
        if self.p.eat_sym("==>") {
            let b = self.implies()?;
            return Ok(Formula::implies(a, b));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<Formula, SyntaxError> {
        let a = self.and()?;
        if self.p.eat_sym("||") {
            let b = self.or()?;
            return Ok(Formula::or(a, b));
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<Formula, SyntaxError> {
        let a = self.unary()?;
        if self.p.eat_sym("&&") {
            let b = self.and()?;
            return Ok(Formula::and(a, b));
        }
        Ok(a)
    }

    fn unary(&mut self) -> Result<Formula, SyntaxError> {
        if self.p.eat_sym("!") {
            return Ok(Formula::not(self.unary()?));
        }
        let mut f = self.primary()?;
        while self.p.eat_sym("[") {
            let sub = self.substitution()?;
            f = Formula::Subst(Box::new(f), sub);
        }
        Ok(f)
    }

    fn substitution(&mut self) -> Result<Substitution, SyntaxError> {
        if self.arity == Arity::Unary && !self.bar_ahead() {
            let x = self.p.ident()?;
            self.p.expect_sym(":=")?;
            let e = self.p.int_expr()?;
            self.p.expect_sym("]")?;
            return Ok(Substitution { left: Some((x, e)), right: None });
        }
        let x = if self.p.is_ident() { Some(self.p.ident()?) } else { None };
        self.p.expect_sym("|")?;
        let y = if self.p.is_ident() { Some(self.p.ident()?) } else { None };
        self.p.expect_sym(":=")?;
        let e = if x.is_some() { Some(self.p.int_expr()?) } else { None };
        self.p.expect_sym("|")?;
        let e2 = if y.is_some() { Some(self.p.int_expr()?) } else { None };
        self.p.expect_sym("]")?;
        Ok(Substitution { left: x.zip(e), right: y.zip(e2) })
    }

    fn bar_ahead(&self) -> bool {
        matches!(self.p.peek(), Tok::Sym("|")) || matches!(self.p.peek_at(1), Tok::Sym("|"))
    }

    fn primary(&mut self) -> Result<Formula, SyntaxError> {
        if self.p.eat_kw("true") {
            return Ok(Formula::True);
        }
        if self.p.eat_kw("false") {
            return Ok(Formula::False);
        }
        if self.p.is_sym("(") {
            let m = self.p.mark();
            self.p.eat_sym("(");
            let attempt = self.implies();
            match attempt {
                Ok(f) if self.p.eat_sym(")") && (self.arity == Arity::Rel || !self.p.at_operator()) => return Ok(f),
                Err(e) if self.arity == Arity::Rel => return Err(e),
                _ => {}
            }
            if self.arity == Arity::Rel {
                return self.p.err("expected ')'");
            }
            self.p.reset(m);
            return Ok(Formula::test(self.p.comparison()?));
        }
        if let Tok::Ident(name) = self.p.peek().clone() {
            let call = matches!(self.p.peek_at(1), Tok::Sym("("));
            match name.as_str() {
                "lhs" | "rhs" if call => {
                    self.p.ident()?;
                    self.p.expect_sym("(")?;
                    let b = self.p.bool_expr()?;
                    self.p.expect_sym(")")?;
                    return Ok(Formula::Test(if name == "lhs" { Side::L } else { Side::R }, b));
                }
                "eq" | "ne" | "lt" | "le" | "gt" | "ge" if call => {
                    let op = cross_op(&name).expect("cross comparison name");
                    self.p.ident()?;
                    self.p.expect_sym("(")?;
                    let a = self.p.int_expr()?;
                    self.p.expect_sym(",")?;
                    let b = self.p.int_expr()?;
                    self.p.expect_sym(")")?;
                    return Ok(Formula::Cross(op, a, b));
                }
                "in" if call => return self.ext(),
                _ => {}
            }
            if let Some(f) = self.defs.get(&name) {
                if !matches!(self.p.peek_at(1), Tok::Sym("+" | "-" | "*" | "%" | "=" | "==" | "!=" | "<" | "<=" | ">" | ">="))
                    && !matches!(self.p.peek_at(1), Tok::Ident(k) if k == "mod")
                {
                    self.p.ident()?;
                    return Ok(f.clone());
                }
            }
        }
        if self.arity == Arity::Unary {
            return Ok(Formula::test(self.p.comparison()?));
        }
        self.p.err("expected lhs(..), rhs(..), eq(..) or a connective")
    }

    fn ext(&mut self) -> Result<Formula, SyntaxError> {
        self.p.ident()?;
        self.p.expect_sym("(")?;
        let mut vars = Vec::new();
        if !self.p.is_sym(")") {
            loop {
                let side = if self.p.is_kw("lhs") && matches!(self.p.peek_at(1), Tok::Ident(_)) {
                    self.p.ident()?;
                    Side::L
                } else if self.p.is_kw("rhs") && matches!(self.p.peek_at(1), Tok::Ident(_)) {
                    self.p.ident()?;
                    Side::R
                } else {
                    Side::L
                };
                vars.push((side, self.p.ident()?));
                if !self.p.eat_sym(",") {
                    break;
                }
            }
        }
        self.p.expect_sym(")")?;
        self.p.expect_sym("{")?;
        let mut tuples = HashSet::new();
        if !self.p.is_sym("}") {
            loop {
                self.p.expect_sym("(")?;
                let mut t = Vec::new();
                if !self.p.is_sym(")") {
                    loop {
                        t.push(self.p.int()?);
                        if !self.p.eat_sym(",") {
                            break;
                        }
                    }
                }
                self.p.expect_sym(")")?;
                if t.len() != vars.len() {
                    return self.p.err("tuple arity does not match variable list");
                }
                tuples.insert(t);
                if !self.p.eat_sym(",") {
                    break;
                }
            }
        }
        self.p.expect_sym("}")?;
        Ok(Formula::Ext(Arc::new(ExtSet { vars, tuples })))
    }
}

// ---------------------------------------------------------------------------
// Compilation to slot form and bounded search

#[derive(Clone, Debug, PartialEq)]
enum CE {
    K(i64),
    S(usize),
    Bin(ArithOp, Box<CE>, Box<CE>),
}

#[derive(Clone, Debug, PartialEq)]
enum CF {
    K(bool),
    Cmp(CmpOp, CE, CE),
    Not(Box<CF>),
    And(Vec<CF>),
    Or(Vec<CF>),
    Ext(Vec<CE>, Arc<ExtSet>),
}

struct Slots {
    names: Vec<(Side, String)>,
    index: HashMap<(Side, String), usize>,
    domains: Vec<Vec<i64>>,
}

impl Slots {
    fn new() -> Slots {
        Slots { names: Vec::new(), index: HashMap::new(), domains: Vec::new() }
    }

    fn slot(&mut self, side: Side, x: &str, dom: &dyn Fn(&str) -> Vec<i64>) -> usize {
        let key = (side, x.to_string());
        if let Some(i) = self.index.get(&key) {
            return *i;
        }
        let i = self.names.len();
        self.names.push(key.clone());
        self.index.insert(key, i);
        self.domains.push(dom(x));
        i
    }
}

type Env = HashMap<(Side, String), CE>;

struct Compiler<'a> {
    slots: Slots,
    dom: &'a dyn Fn(&str) -> Vec<i64>,
}

impl Compiler<'_> {
    fn expr(&mut self, e: &IntExpr, side: Side, env: &Env) -> CE {
        match e {
            IntExpr::Lit(v) => CE::K(*v),
            IntExpr::Var(x) => match env.get(&(side, x.clone())) {
                Some(ce) => ce.clone(),
                None => CE::S(self.slots.slot(side, x, self.dom)),
            },
            IntExpr::Bin(op, a, b) => {
                let a = self.expr(a, side, env);
                let b = self.expr(b, side, env);
                match (&a, &b) {
                    (CE::K(x), CE::K(y)) => CE::K(arith(*op, *x, *y)),
                    _ => CE::Bin(*op, Box::new(a), Box::new(b)),
                }
            }
        }
    }

    fn bexpr(&mut self, b: &BoolExpr, side: Side, env: &Env) -> CF {
        match b {
            BoolExpr::True => CF::K(true),
            BoolExpr::False => CF::K(false),
            BoolExpr::Cmp(op, a, c) => CF::Cmp(*op, self.expr(a, side, env), self.expr(c, side, env)),
            BoolExpr::Not(a) => CF::Not(Box::new(self.bexpr(a, side, env))),
            BoolExpr::And(a, c) => CF::And(vec![self.bexpr(a, side, env), self.bexpr(c, side, env)]),
            BoolExpr::Or(a, c) => CF::Or(vec![self.bexpr(a, side, env), self.bexpr(c, side, env)]),
        }
    }

    fn formula(&mut self, f: &Formula, env: &Env) -> CF {
        match f {
            Formula::True => CF::K(true),
            Formula::False => CF::K(false),
            Formula::Test(side, b) => self.bexpr(b, *side, env),
            Formula::Cross(op, a, b) => CF::Cmp(*op, self.expr(a, Side::L, env), self.expr(b, Side::R, env)),
            Formula::Not(a) => CF::Not(Box::new(self.formula(a, env))),
            Formula::And(a, b) => CF::And(vec![self.formula(a, env), self.formula(b, env)]),
            Formula::Or(a, b) => CF::Or(vec![self.formula(a, env), self.formula(b, env)]),
            Formula::Implies(a, b) => CF::Or(vec![CF::Not(Box::new(self.formula(a, env))), self.formula(b, env)]),
            Formula::Subst(body, sub) => {
                let mut inner = env.clone();
                if let Some((x, e)) = &sub.left {
                    let ce = self.expr(e, Side::L, env);
                    inner.insert((Side::L, x.clone()), ce);
                }
                if let Some((x, e)) = &sub.right {
                    let ce = self.expr(e, Side::R, env);
                    inner.insert((Side::R, x.clone()), ce);
                }
                self.formula(body, &inner)
            }
            Formula::Ext(ext) => {
                let args = ext.vars.iter().map(|(side, x)| self.expr(&IntExpr::Var(x.clone()), *side, env)).collect();
                CF::Ext(args, ext.clone())
            }
        }
    }
}

type Iv = (i128, i128);
const FULL: Iv = (i64::MIN as i128, i64::MAX as i128);

fn clamp(iv: Iv) -> Iv {
    if iv.0 < FULL.0 || iv.1 > FULL.1 {
        FULL
    } else {
        iv
    }
}

struct Ctx<'a> {
    asg: &'a [Option<i64>],
    ranges: &'a [Iv],
}

impl Ctx<'_> {
    fn fold(&self, e: &CE) -> CE {
        match e {
            CE::K(_) => e.clone(),
            CE::S(i) => match self.asg[*i] {
                Some(v) => CE::K(v),
                None => e.clone(),
            },
            CE::Bin(op, a, b) => {
                let a = self.fold(a);
                let b = self.fold(b);
                match (&a, &b) {
                    (CE::K(x), CE::K(y)) => CE::K(arith(*op, *x, *y)),
                    _ => CE::Bin(*op, Box::new(a), Box::new(b)),
                }
            }
        }
    }

    fn interval(&self, e: &CE) -> Iv {
        match e {
            CE::K(v) => (*v as i128, *v as i128),
            CE::S(i) => match self.asg[*i] {
                Some(v) => (v as i128, v as i128),
                None => self.ranges[*i],
            },
            CE::Bin(op, a, b) => {
                let (a0, a1) = self.interval(a);
                let (b0, b1) = self.interval(b);
                match op {
                    ArithOp::Add => clamp((a0 + b0, a1 + b1)),
                    ArithOp::Sub => clamp((a0 - b1, a1 - b0)),
                    ArithOp::Mul => {
                        if (a0, a1) == FULL || (b0, b1) == FULL {
                            return FULL;
                        }
                        let ps = [a0 * b0, a0 * b1, a1 * b0, a1 * b1];
                        clamp((*ps.iter().min().unwrap(), *ps.iter().max().unwrap()))
                    }
                    ArithOp::Mod => {
                        let m = b0.abs().max(b1.abs());
                        if m == 0 {
                            return (0, 0);
                        }
                        let exact_pos = b0 == b1 || b0 > 0 || b1 < 0;
                        if exact_pos && a0 >= 0 && a1 < b0.abs().min(b1.abs()) {
                            return (a0, a1);
                        }
                        if a0 >= 0 {
                            (0, a1.min(m - 1))
                        } else if a1 <= 0 {
                            (a0.max(-(m - 1)), 0)
                        } else {
                            (-(m - 1), m - 1)
                        }
                    }
                }
            }
        }
    }

    /// Folds assigned slots and replaces subformulas whose value is fixed by
    /// interval reasoning with constants.
    fn simplify(&self, f: &CF) -> CF {
        match f {
            CF::K(_) => f.clone(),
            CF::Cmp(op, a, b) => {
                let a = self.fold(a);
                let b = self.fold(b);
                if let (CE::K(x), CE::K(y)) = (&a, &b) {
                    return CF::K(compare(*op, *x, *y));
                }
                let (a0, a1) = self.interval(&a);
                let (b0, b1) = self.interval(&b);
                let decided = match op {
                    CmpOp::Eq | CmpOp::Ne => {
                        let r = if a1 < b0 || a0 > b1 {
                            Some(false)
                        } else if a0 == a1 && b0 == b1 && a0 == b0 {
                            Some(true)
                        } else {
                            None
                        };
                        if *op == CmpOp::Ne {
                            r.map(|v| !v)
                        } else {
                            r
                        }
                    }
                    CmpOp::Lt => lt(a0, a1, b0, b1),
                    CmpOp::Le => lt(a0, a1, b0 + 1, b1 + 1),
                    CmpOp::Gt => lt(b0, b1, a0, a1),
                    CmpOp::Ge => lt(b0, b1, a0 + 1, a1 + 1),
                };
                match decided {
                    Some(v) => CF::K(v),
                    None => CF::Cmp(*op, a, b),
                }
            }
            CF::Not(a) => match self.simplify(a) {
                CF::K(v) => CF::K(!v),
                CF::Not(inner) => *inner,
                g => CF::Not(Box::new(g)),
            },
            CF::And(xs) | CF::Or(xs) => {
                let is_and = matches!(f, CF::And(_));
                let mut out = Vec::with_capacity(xs.len());
                for x in xs {
                    match self.simplify(x) {
                        CF::K(v) if v == is_and => {}
                        CF::K(v) => return CF::K(v),
                        CF::And(inner) if is_and => out.extend(inner),
                        CF::Or(inner) if !is_and => out.extend(inner),
                        g => out.push(g),
                    }
                }
                match out.len() {
                    0 => CF::K(is_and),
                    1 => out.pop().unwrap(),
                    _ => {
                        if is_and {
                            CF::And(out)
                        } else {
                            CF::Or(out)
                        }
                    }
                }
            }
            CF::Ext(args, ext) => {
                if ext.tuples.is_empty() {
                    return CF::K(false);
                }
                let args: Vec<CE> = args.iter().map(|a| self.fold(a)).collect();
                if args.iter().all(|a| matches!(a, CE::K(_))) {
                    let t: Vec<i64> = args.iter().map(|a| if let CE::K(v) = a { *v } else { 0 }).collect();
                    CF::K(ext.tuples.contains(&t))
                } else {
                    CF::Ext(args, ext.clone())
                }
            }
        }
    }
}

/// Decides `a < b` from intervals when possible.
fn lt(a0: i128, a1: i128, b0: i128, b1: i128) -> Option<bool> {
    if a1 < b0 {
        Some(true)
    } else if a0 >= b1 {
        Some(false)
    } else {
        None
    }
}

fn slots_of(f: &CF, out: &mut Vec<bool>) {
    fn ce(e: &CE, out: &mut Vec<bool>) {
        match e {
            CE::K(_) => {}
            CE::S(i) => out[*i] = true,
            CE::Bin(_, a, b) => {
                ce(a, out);
                ce(b, out);
            }
        }
    }
    match f {
        CF::K(_) => {}
        CF::Cmp(_, a, b) => {
            ce(a, out);
            ce(b, out);
        }
        CF::Not(a) => slots_of(a, out),
        CF::And(xs) | CF::Or(xs) => xs.iter().for_each(|x| slots_of(x, out)),
        CF::Ext(args, _) => args.iter().for_each(|a| ce(a, out)),
    }
}

/// Formula compiled against a domain bound, ready for search.
struct Problem {
    cf: CF,
    slots: Slots,
    order: Vec<usize>,
    ranges: Vec<Iv>,
}

impl Problem {
    fn new(f: &Formula, bound: &DomainBound) -> Problem {
        let dom = |x: &str| bound.domain(x);
        let mut comp = Compiler { slots: Slots::new(), dom: &dom };
        let cf = comp.formula(f, &Env::new());
        let slots = comp.slots;
        let pc = bound.pc_name().map(|s| s.to_string());
        let mut order: Vec<usize> = (0..slots.names.len()).collect();
        order.sort_by_key(|i| {
            let (side, name) = &slots.names[*i];
            (Some(name) != pc.as_ref(), slots.domains[*i].len(), name.clone(), *side)
        });
        let ranges = slots
            .domains
            .iter()
            .map(|d| match (d.iter().min(), d.iter().max()) {
                (Some(a), Some(b)) => (*a as i128, *b as i128),
                _ => (0, -1),
            })
            .collect();
        Problem { cf, slots, order, ranges }
    }

    /// Up to `limit` assignments on which the formula evaluates to `want`.
    fn search(&self, want: bool, limit: usize) -> Vec<Vec<i64>> {
        let mut asg = vec![None; self.slots.names.len()];
        let mut found = Vec::new();
        if self.slots.domains.iter().any(|d| d.is_empty()) {
            return found;
        }
        self.dfs(&self.cf, &mut asg, want, limit, &mut found);
        found
    }

    fn dfs(&self, f: &CF, asg: &mut Vec<Option<i64>>, want: bool, limit: usize, found: &mut Vec<Vec<i64>>) {
        let ctx = Ctx { asg, ranges: &self.ranges };
        let r = ctx.simplify(f);
        match r {
            CF::K(v) => {
                if v == want {
                    found.push(
                        asg.iter().enumerate().map(|(i, a)| a.unwrap_or(self.slots.domains[i][0])).collect(),
                    );
                }
            }
            _ => {
                let mut used = vec![false; asg.len()];
                slots_of(&r, &mut used);
                let next = self.order.iter().copied().find(|i| used[*i] && asg[*i].is_none());
                let Some(i) = next else {
                    return;
                };
                for v in &self.slots.domains[i] {
                    asg[i] = Some(*v);
                    self.dfs(&r, asg, want, limit, found);
                    asg[i] = None;
                    if found.len() >= limit {
                        return;
                    }
                }
            }
        }
    }

    fn witness(&self, vals: &[i64]) -> Witness {
        let mut s = Store::new();
        let mut s2 = Store::new();
        let mut rel = false;
        for (i, (side, x)) in self.slots.names.iter().enumerate() {
            match side {
                Side::L => {
                    s.insert(x.clone(), vals[i]);
                }
                Side::R => {
                    rel = true;
                    s2.insert(x.clone(), vals[i]);
                }
            }
        }
        if rel {
            Witness::Pair(s, s2)
        } else {
            Witness::Store(s)
        }
    }
}

/// Validity of `f` over the bound.
pub fn valid(f: &Formula, bound: &DomainBound) -> Verdict {
    let prob = Problem::new(f, bound);
    let bad = prob.search(false, MAX_WITNESSES);
    if bad.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Counterexample(bad.iter().map(|v| prob.witness(v)).collect())
    }
}

/// A model of `f` within the bound, if any.
pub fn satisfiable(f: &Formula, bound: &DomainBound) -> Option<Witness> {
    let prob = Problem::new(f, bound);
    prob.search(true, 1).first().map(|v| prob.witness(v))
}

/// `ante ⇒ cons` for every store (pair) in the bound.
pub fn entails(ante: &Formula, cons: &Formula, bound: &DomainBound) -> Verdict {
    if ante == cons || *ante == Formula::False || *cons == Formula::True {
        return Verdict::Valid;
    }
    let cs = ante.conjuncts();
    if cons.conjuncts().iter().all(|c| cs.contains(c)) {
        return Verdict::Valid;
    }
    valid(&Formula::implies(ante.clone(), cons.clone()), bound)
}

/// Formula compiled over fixed variable lists for repeated evaluation.
pub struct CompiledPair {
    cf: CF,
    left: Vec<String>,
    right: Vec<String>,
    extra: usize,
}

impl CompiledPair {
    pub fn new(f: &Formula, left: &[String], right: &[String]) -> CompiledPair {
        let dom = |_: &str| vec![0];
        let mut comp = Compiler { slots: Slots::new(), dom: &dom };
        for x in left {
            comp.slots.slot(Side::L, x, &dom);
        }
        for x in right {
            comp.slots.slot(Side::R, x, &dom);
        }
        let cf = comp.formula(f, &Env::new());
        let extra = comp.slots.names.len() - left.len() - right.len();
        CompiledPair { cf, left: left.to_vec(), right: right.to_vec(), extra }
    }

    pub fn holds(&self, s: &Store, s2: &Store) -> bool {
        let mut vals: Vec<Option<i64>> = Vec::with_capacity(self.left.len() + self.right.len() + self.extra);
        vals.extend(self.left.iter().map(|x| Some(s.get(x).copied().unwrap_or(0))));
        vals.extend(self.right.iter().map(|x| Some(s2.get(x).copied().unwrap_or(0))));
        vals.extend(std::iter::repeat_n(Some(0), self.extra));
        let ranges = vec![(0, 0); vals.len()];
        matches!(Ctx { asg: &vals, ranges: &ranges }.simplify(&self.cf), CF::K(true))
    }
}

/// `f` does not depend on `x` (left) and `x2` (right) over the bound.
pub fn independent(x: Option<&str>, x2: Option<&str>, f: &Formula, bound: &DomainBound) -> Verdict {
    let fv = f.free_vars();
    let touches = x.is_some_and(|v| fv.contains(&(Side::L, v.to_string())))
        || x2.is_some_and(|v| fv.contains(&(Side::R, v.to_string())));
    if !touches {
        return Verdict::Valid;
    }
    let fresh = |v: &str| format!("{v}__alt");
    let mut b = bound.clone();
    for v in [x, x2].into_iter().flatten() {
        let d = bound.domain(v);
        if let (Some(lo), Some(hi)) = (d.iter().min(), d.iter().max()) {
            b = b.with_range(&fresh(v), *lo, *hi);
        }
    }
    let xe = x.map(|v| IntExpr::var(&fresh(v)));
    let x2e = x2.map(|v| IntExpr::var(&fresh(v)));
    let moved = f.clone().subst_rel(x.zip(xe.as_ref()), x2.zip(x2e.as_ref()));
    let iff = Formula::and(Formula::implies(f.clone(), moved.clone()), Formula::implies(moved, f.clone()));
    valid(&iff, &b)
}

// ---------------------------------------------------------------------------
// State relations over product control points

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pat {
    Any,
    At(Label),
}

impl Pat {
    pub fn matches(&self, n: Label) -> bool {
        match self {
            Pat::Any => true,
            Pat::At(m) => *m == n,
        }
    }

    fn show(&self) -> String {
        match self {
            Pat::Any => "*".to_string(),
            Pat::At(n) => n.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub left: Pat,
    pub right: Pat,
    pub cond: Formula,
}

/// Set of product states given as a disjunction of control patterns with
/// store-relation conditions.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StateRelSpec {
    pub clauses: Vec<Clause>,
}

impl StateRelSpec {
    pub fn none() -> StateRelSpec {
        StateRelSpec { clauses: Vec::new() }
    }

    /// Every product state.
    pub fn all() -> StateRelSpec {
        StateRelSpec::none().with(Pat::Any, Pat::Any, Formula::True)
    }

    pub fn with(mut self, left: Pat, right: Pat, cond: Formula) -> StateRelSpec {
        self.clauses.push(Clause { left, right, cond });
        self
    }

    pub fn at(self, n: Label, m: Label) -> StateRelSpec {
        self.with(Pat::At(n), Pat::At(m), Formula::True)
    }

    /// Every control pair of the grid except `skip`, unconditionally.
    pub fn grid_except(ctrl: &[Label], ctrl2: &[Label], skip: (Label, Label)) -> StateRelSpec {
        let mut s = StateRelSpec::none();
        for n in ctrl {
            for m in ctrl2 {
                if (*n, *m) != skip {
                    s = s.at(*n, *m);
                }
            }
        }
        s
    }

    /// The store relation at control point `(n, m)`.
    pub fn restrict(&self, n: Label, m: Label) -> Formula {
        Formula::disj(
            self.clauses
                .iter()
                .filter(|c| c.left.matches(n) && c.right.matches(m))
                .map(|c| c.cond.clone())
                .collect(),
        )
    }

    pub fn holds(&self, n: Label, m: Label, s: &Store, s2: &Store) -> bool {
        self.clauses.iter().any(|c| c.left.matches(n) && c.right.matches(m) && c.cond.holds(s, s2))
    }

    /// Store relation reading control from `pc` on both sides.
    pub fn encode(&self, pc: &str) -> Formula {
        Formula::disj(
            self.clauses
                .iter()
                .map(|c| {
                    let mut parts = Vec::new();
                    if let Pat::At(n) = c.left {
                        parts.push(Formula::at(Side::L, pc, n));
                    }
                    if let Pat::At(m) = c.right {
                        parts.push(Formula::at(Side::R, pc, m));
                    }
                    if c.cond != Formula::True || parts.is_empty() {
                        parts.push(c.cond.clone());
                    }
                    Formula::conj(parts)
                })
                .collect(),
        )
    }

    pub fn render(&self) -> String {
        if self.clauses.is_empty() {
            return "false".to_string();
        }
        self.clauses
            .iter()
            .map(|c| format!("[{}|{}] {}", c.left.show(), c.right.show(), c.cond.render(Arity::Rel)))
            .collect::<Vec<_>>()
            .join(" || ")
    }
}

/// Product-state predicate encoded as a store relation over `pc`.
pub fn encode_pc(spec: &StateRelSpec, pc: &str) -> Formula {
    spec.encode(pc)
}

/// Assertion per control point of a program automaton; absent points are `false`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct UnaryAnnotation {
    pub map: BTreeMap<Label, Formula>,
}

impl UnaryAnnotation {
    pub fn get(&self, n: Label) -> Formula {
        self.map.get(&n).cloned().unwrap_or(Formula::False)
    }

    pub fn set(&mut self, n: Label, f: Formula) {
        self.map.insert(n, f);
    }
}

/// Relational assertion per product control point; absent points are `false`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelAnnotation {
    pub map: BTreeMap<(Label, Label), Formula>,
}

impl RelAnnotation {
    pub fn get(&self, n: Label, m: Label) -> Formula {
        self.map.get(&(n, m)).cloned().unwrap_or(Formula::False)
    }

    pub fn set(&mut self, n: Label, m: Label, f: Formula) {
        self.map.insert((n, m), f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::store_from;

    fn rel(s: &str) -> Formula {
        parse_formula(s, Arity::Rel).unwrap()
    }

    fn un(s: &str) -> Formula {
        parse_formula(s, Arity::Unary).unwrap()
    }

    #[test]
    fn render_roundtrip() {
        for src in [
            "lhs(x > 0) && rhs(y <= 2) || !eq(x, y)",
            "(lhs(x = 1) ==> rhs(x = 2)) ==> eq(x + 1, x)",
            "(eq(y, y))[x|x := y|y]",
            "(lhs(x > 0))[x| := x - 1|]",
            "in(lhs x, rhs x){(1, 2), (-3, 4)} && true",
        ] {
            let f = rel(src);
            assert_eq!(rel(&f.render(Arity::Rel)), f, "{src}");
        }
        for src in ["x > 0 && !(y = 1)", "(x + 1) * 2 > 3", "(x > 0)[x := y]", "lhs(x > 0 && true)", "in(x, y){(1, 2)}"] {
            let f = un(src);
            assert_eq!(un(&f.render(Arity::Unary)), f, "{src}");
        }
    }

    #[test]
    fn substitution_semantics() {
        let f = un("x > 0").subst1("x", &IntExpr::bin(ArithOp::Sub, IntExpr::var("y"), IntExpr::Lit(1)));
        assert!(f.holds(&store_from(&[("y", 2)]), &Store::new()));
        assert!(!f.holds(&store_from(&[("y", 1)]), &Store::new()));
    }

    #[test]
    fn entailment_and_counterexample() {
        let b = DomainBound::new(&["x"], -3, 3);
        assert!(entails(&un("x > 1"), &un("x > 0"), &b).is_valid());
        match entails(&un("x > 0"), &un("x > 1"), &b) {
            Verdict::Counterexample(ws) => assert_eq!(ws[0], Witness::Store(store_from(&[("x", 1)]))),
            v => panic!("{v}"),
        }
    }

    #[test]
    fn mod_interval() {
        let b = DomainBound::new(&["x"], -50, 50);
        assert!(valid(&un("x mod 7 < 7 && x mod 7 > -7"), &b).is_valid());
        assert!(!valid(&un("x mod 7 >= 0"), &b).is_valid());
    }

    #[test]
    fn encoding_restricts_to_control() {
        let spec = StateRelSpec::none().with(Pat::At(4), Pat::Any, rel("lhs(w mod 2 != 0)"));
        let enc = encode_pc(&spec, "pc");
        let s = store_from(&[("pc", 4), ("w", 1)]);
        let s2 = store_from(&[("pc", 7)]);
        assert!(enc.holds(&s, &s2));
        assert!(spec.holds(4, 7, &s, &s2));
        assert!(!spec.holds(5, 7, &s, &s2));
    }

    #[test]
    fn independence() {
        let b = DomainBound::new(&["x", "y"], -2, 2);
        assert!(independent(Some("x"), None, &un("y > 0"), &b).is_valid());
        assert!(independent(Some("x"), None, &un("x = x"), &b).is_valid());
        assert!(!independent(Some("x"), None, &un("x > y"), &b).is_valid());
    }
}
