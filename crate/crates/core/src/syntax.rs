//! Guarded command language: abstract syntax, structural functions on labeled
//! commands, a parser and a printer.
//!
//! Every command node except sequencing carries a label. Programs written
//! without labels are labeled in preorder, starting at 1 and skipping labels
//! that already appear explicitly.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Control point of a command. Positive for program points; `0` and negative
/// values occur only in synthesized commands and runtime configurations.
pub type Label = i64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Mod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntExpr {
    Lit(i64),
    Var(String),
    Bin(ArithOp, Box<IntExpr>, Box<IntExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoolExpr {
    True,
    False,
    Cmp(CmpOp, IntExpr, IntExpr),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GuardedCmd {
    pub guard: BoolExpr,
    pub body: Command,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Command {
    Skip(Label),
    Assign(Label, String, IntExpr),
    Seq(Box<Command>, Box<Command>),
    If(Label, Vec<GuardedCmd>),
    Do(Label, Vec<GuardedCmd>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("{line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },
    #[error("duplicate label {0}")]
    DuplicateLabel(Label),
    #[error("label {0} is not positive")]
    NonPositiveLabel(Label),
    #[error("final label {0} already occurs in the program")]
    FinalLabelInUse(Label),
}

impl IntExpr {
    pub fn var(x: &str) -> IntExpr {
        IntExpr::Var(x.to_string())
    }

    pub fn bin(op: ArithOp, a: IntExpr, b: IntExpr) -> IntExpr {
        IntExpr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            IntExpr::Lit(_) => {}
            IntExpr::Var(x) => {
                out.insert(x.clone());
            }
            IntExpr::Bin(_, a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    /// Replaces every occurrence of `x` by `e`.
    pub fn subst(&self, x: &str, e: &IntExpr) -> IntExpr {
        match self {
            IntExpr::Var(y) if y == x => e.clone(),
            IntExpr::Lit(_) | IntExpr::Var(_) => self.clone(),
            IntExpr::Bin(op, a, b) => IntExpr::bin(*op, a.subst(x, e), b.subst(x, e)),
        }
    }
}

impl BoolExpr {
    pub fn cmp(op: CmpOp, a: IntExpr, b: IntExpr) -> BoolExpr {
        BoolExpr::Cmp(op, a, b)
    }

    /// `x = n`, the control test used by normal forms.
    pub fn var_eq(x: &str, n: i64) -> BoolExpr {
        BoolExpr::Cmp(CmpOp::Eq, IntExpr::var(x), IntExpr::Lit(n))
    }

    pub fn not(b: BoolExpr) -> BoolExpr {
        BoolExpr::Not(Box::new(b))
    }

    pub fn and(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: BoolExpr, b: BoolExpr) -> BoolExpr {
        BoolExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolExpr::True | BoolExpr::False => {}
            BoolExpr::Cmp(_, a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            BoolExpr::Not(a) => a.vars_into(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    pub fn subst(&self, x: &str, e: &IntExpr) -> BoolExpr {
        match self {
            BoolExpr::True | BoolExpr::False => self.clone(),
            BoolExpr::Cmp(op, a, b) => BoolExpr::Cmp(*op, a.subst(x, e), b.subst(x, e)),
            BoolExpr::Not(a) => BoolExpr::not(a.subst(x, e)),
            BoolExpr::And(a, b) => BoolExpr::and(a.subst(x, e), b.subst(x, e)),
            BoolExpr::Or(a, b) => BoolExpr::or(a.subst(x, e), b.subst(x, e)),
        }
    }

    /// Comparison atoms in left-to-right order.
    pub fn atoms_into<'a>(&'a self, out: &mut Vec<&'a BoolExpr>) {
        match self {
            BoolExpr::True | BoolExpr::False | BoolExpr::Cmp(..) => out.push(self),
            BoolExpr::Not(a) => a.atoms_into(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.atoms_into(out);
                b.atoms_into(out);
            }
        }
    }
}

/// Disjunction of the guards, in order. The empty list yields `false`.
pub fn enab(gcs: &[GuardedCmd]) -> BoolExpr {
    let mut it = gcs.iter().rev();
    match it.next() {
        None => BoolExpr::False,
        Some(last) => it.fold(last.guard.clone(), |acc, gc| BoolExpr::or(gc.guard.clone(), acc)),
    }
}

impl Command {
    pub fn seq(a: Command, b: Command) -> Command {
        Command::Seq(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of a non-empty list.
    pub fn seq_all(mut cs: Vec<Command>) -> Command {
        let mut acc = cs.pop().expect("seq_all of empty list");
        while let Some(c) = cs.pop() {
            acc = Command::seq(c, acc);
        }
        acc
    }

    pub fn lab(&self) -> Label {
        match self {
            Command::Skip(n) | Command::Assign(n, _, _) | Command::If(n, _) | Command::Do(n, _) => *n,
            Command::Seq(a, _) => a.lab(),
        }
    }

    /// Labels in preorder, with repetitions.
    pub fn labels_preorder(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.labels_into(&mut out);
        out
    }

    fn labels_into(&self, out: &mut Vec<Label>) {
        match self {
            Command::Skip(n) | Command::Assign(n, _, _) => out.push(*n),
            Command::Seq(a, b) => {
                a.labels_into(out);
                b.labels_into(out);
            }
            Command::If(n, gcs) | Command::Do(n, gcs) => {
                out.push(*n);
                for gc in gcs {
                    gc.body.labels_into(out);
                }
            }
        }
    }

    pub fn labs(&self) -> BTreeSet<Label> {
        self.labels_preorder().into_iter().collect()
    }

    /// All labels positive and pairwise distinct.
    pub fn ok(&self) -> bool {
        let ls = self.labels_preorder();
        let set: BTreeSet<_> = ls.iter().copied().collect();
        set.len() == ls.len() && ls.iter().all(|n| *n > 0)
    }

    pub fn okf(&self, f: Label) -> bool {
        self.ok() && !self.labs().contains(&f)
    }

    pub fn check_okf(&self, f: Label) -> Result<(), SyntaxError> {
        let mut seen = BTreeSet::new();
        for n in self.labels_preorder() {
            if n <= 0 {
                return Err(SyntaxError::NonPositiveLabel(n));
            }
            if !seen.insert(n) {
                return Err(SyntaxError::DuplicateLabel(n));
            }
        }
        if seen.contains(&f) {
            return Err(SyntaxError::FinalLabelInUse(f));
        }
        Ok(())
    }

    /// The subcommand whose own label is `m`. Conditionals and loops are
    /// returned whole when their label matches.
    pub fn sub(&self, m: Label) -> Option<&Command> {
        match self {
            Command::Skip(n) | Command::Assign(n, _, _) => (*n == m).then_some(self),
            Command::Seq(a, b) => a.sub(m).or_else(|| b.sub(m)),
            Command::If(n, gcs) | Command::Do(n, gcs) => {
                if *n == m {
                    Some(self)
                } else {
                    gcs.iter().find_map(|gc| gc.body.sub(m))
                }
            }
        }
    }

    /// Following successor of control point `n` when `f` follows the whole command.
    pub fn fsuc(&self, n: Label, f: Label) -> Option<Label> {
        match self {
            Command::Skip(m) | Command::Assign(m, _, _) => (*m == n).then_some(f),
            Command::Seq(a, b) => {
                if a.labs().contains(&n) {
                    a.fsuc(n, b.lab())
                } else {
                    b.fsuc(n, f)
                }
            }
            Command::If(m, gcs) => {
                if *m == n {
                    Some(f)
                } else {
                    gcs.iter().find_map(|gc| gc.body.fsuc(n, f))
                }
            }
            Command::Do(m, gcs) => {
                if *m == n {
                    Some(f)
                } else {
                    gcs.iter().find_map(|gc| gc.body.fsuc(n, *m))
                }
            }
        }
    }

    pub fn vars_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Command::Skip(_) => {}
            Command::Assign(_, x, e) => {
                out.insert(x.clone());
                e.vars_into(out);
            }
            Command::Seq(a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Command::If(_, gcs) | Command::Do(_, gcs) => {
                for gc in gcs {
                    gc.guard.vars_into(out);
                    gc.body.vars_into(out);
                }
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.vars_into(&mut out);
        out
    }

    /// Every assignment in the command, in preorder.
    pub fn assignments(&self) -> Vec<(Label, &str, &IntExpr)> {
        let mut out = Vec::new();
        self.assignments_into(&mut out);
        out
    }

    fn assignments_into<'a>(&'a self, out: &mut Vec<(Label, &'a str, &'a IntExpr)>) {
        match self {
            Command::Skip(_) => {}
            Command::Assign(n, x, e) => out.push((*n, x, e)),
            Command::Seq(a, b) => {
                a.assignments_into(out);
                b.assignments_into(out);
            }
            Command::If(_, gcs) | Command::Do(_, gcs) => {
                for gc in gcs {
                    gc.body.assignments_into(out);
                }
            }
        }
    }

    /// Every guard of every conditional and loop, in preorder.
    pub fn guards(&self) -> Vec<&BoolExpr> {
        let mut out = Vec::new();
        self.guards_into(&mut out);
        out
    }

    fn guards_into<'a>(&'a self, out: &mut Vec<&'a BoolExpr>) {
        match self {
            Command::Skip(_) | Command::Assign(..) => {}
            Command::Seq(a, b) => {
                a.guards_into(out);
                b.guards_into(out);
            }
            Command::If(_, gcs) | Command::Do(_, gcs) => {
                for gc in gcs {
                    out.push(&gc.guard);
                    gc.body.guards_into(out);
                }
            }
        }
    }

    /// Replaces each assignment to `x` by a skip with the same label.
    pub fn erase(&self, x: &str) -> Command {
        match self {
            Command::Assign(n, y, _) if y == x => Command::Skip(*n),
            Command::Skip(_) | Command::Assign(..) => self.clone(),
            Command::Seq(a, b) => Command::seq(a.erase(x), b.erase(x)),
            Command::If(n, gcs) => Command::If(*n, erase_gcs(gcs, x)),
            Command::Do(n, gcs) => Command::Do(*n, erase_gcs(gcs, x)),
        }
    }

    /// `x` occurs only as the target of assignments to itself.
    pub fn is_ghost(&self, x: &str) -> bool {
        match self {
            Command::Skip(_) => true,
            Command::Assign(_, y, e) => y == x || !e.vars().contains(x),
            Command::Seq(a, b) => a.is_ghost(x) && b.is_ghost(x),
            Command::If(_, gcs) | Command::Do(_, gcs) => gcs
                .iter()
                .all(|gc| !gc.guard.vars().contains(x) && gc.body.is_ghost(x)),
        }
    }

    /// Nesting depth of conditionals and loops.
    pub fn depth(&self) -> usize {
        match self {
            Command::Skip(_) | Command::Assign(..) => 0,
            Command::Seq(a, b) => a.depth().max(b.depth()),
            Command::If(_, gcs) | Command::Do(_, gcs) => {
                1 + gcs.iter().map(|gc| gc.body.depth()).max().unwrap_or(0)
            }
        }
    }
}

fn erase_gcs(gcs: &[GuardedCmd], x: &str) -> Vec<GuardedCmd> {
    gcs.iter()
        .map(|gc| GuardedCmd { guard: gc.guard.clone(), body: gc.body.erase(x) })
        .collect()
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const SYMBOLS: &[&str] = &[
    "==>", ":=", "->", "[]", "==", "!=", "<=", ">=", "&&", "||", "<", ">", "=", "!", "(", ")", "+",
    "-", "*", "%", ";", "@", ",", "|", "[", "]", "{", "}",
];

const KEYWORDS: &[&str] = &["skip", "if", "fi", "do", "od", "true", "false", "mod"];

pub(crate) fn lex(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tl, tc) = (line, col);
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<i64>().map_err(|_| SyntaxError::Parse {
                line: tl,
                col: tc,
                msg: format!("integer literal {s} out of range"),
            })?;
            col += i - start;
            out.push(Token { tok: Tok::Int(v), line: tl, col: tc });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            col += i - start;
            out.push(Token { tok: Tok::Ident(s), line: tl, col: tc });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line: tl, col: tc });
            }
            None => {
                return Err(SyntaxError::Parse { line: tl, col: tc, msg: format!("unexpected character '{c}'") })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Parser

pub(crate) struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    pub fn new(src: &str) -> Result<Parser, SyntaxError> {
        Ok(Parser { toks: lex(src)?, pos: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub fn mark(&self) -> usize {
        self.pos
    }

    pub fn reset(&mut self, m: usize) {
        self.pos = m;
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub fn err<T>(&self, msg: impl Into<String>) -> Result<T, SyntaxError> {
        let t = &self.toks[self.pos];
        Err(SyntaxError::Parse { line: t.line, col: t.col, msg: msg.into() })
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    pub fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn eat_kw(&mut self, s: &str) -> bool {
        if self.is_kw(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", describe(self.peek())))
        }
    }

    pub fn expect_kw(&mut self, s: &str) -> Result<(), SyntaxError> {
        if self.eat_kw(s) {
            Ok(())
        } else {
            self.err(format!("expected '{s}', found {}", describe(self.peek())))
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    pub fn expect_eof(&self) -> Result<(), SyntaxError> {
        if self.at_eof() {
            Ok(())
        } else {
            self.err(format!("unexpected {}", describe(self.peek())))
        }
    }

    pub fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    pub fn int(&mut self) -> Result<i64, SyntaxError> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            t => self.err(format!("expected integer, found {}", describe(&t))),
        }
    }

    pub fn is_ident(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()))
    }

    // Integer expressions.

    pub fn int_expr(&mut self) -> Result<IntExpr, SyntaxError> {
        let mut lhs = self.int_term()?;
        loop {
            let op = if self.eat_sym("+") {
                ArithOp::Add
            } else if self.eat_sym("-") {
                ArithOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.int_term()?;
            lhs = IntExpr::bin(op, lhs, rhs);
        }
    }

    fn int_term(&mut self) -> Result<IntExpr, SyntaxError> {
        let mut lhs = self.int_unary()?;
        loop {
            let op = if self.eat_sym("*") {
                ArithOp::Mul
            } else if self.eat_kw("mod") || self.eat_sym("%") {
                ArithOp::Mod
            } else {
                return Ok(lhs);
            };
            let rhs = self.int_unary()?;
            lhs = IntExpr::bin(op, lhs, rhs);
        }
    }

    fn int_unary(&mut self) -> Result<IntExpr, SyntaxError> {
        if self.eat_sym("-") {
            if let Tok::Int(v) = self.peek().clone() {
                self.bump();
                return Ok(IntExpr::Lit(-v));
            }
            let e = self.int_unary()?;
            return Ok(IntExpr::bin(ArithOp::Sub, IntExpr::Lit(0), e));
        }
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(IntExpr::Lit(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.int_expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => Ok(IntExpr::Var(self.ident()?)),
        }
    }

    // Boolean expressions.

    pub fn bool_expr(&mut self) -> Result<BoolExpr, SyntaxError> {
        let lhs = self.bool_conj()?;
        if self.eat_sym("||") {
            let rhs = self.bool_expr()?;
            return Ok(BoolExpr::or(lhs, rhs));
        }
        Ok(lhs)
    }

    fn bool_conj(&mut self) -> Result<BoolExpr, SyntaxError> {
        let lhs = self.bool_unary()?;
        if self.eat_sym("&&") {
            let rhs = self.bool_conj()?;
            return Ok(BoolExpr::and(lhs, rhs));
        }
        Ok(lhs)
    }

    fn bool_unary(&mut self) -> Result<BoolExpr, SyntaxError> {
        if self.eat_sym("!") {
            return Ok(BoolExpr::not(self.bool_unary()?));
        }
        if self.eat_kw("true") {
            return Ok(BoolExpr::True);
        }
        if self.eat_kw("false") {
            return Ok(BoolExpr::False);
        }
        if self.is_sym("(") {
            let m = self.mark();
            self.bump();
            if let Ok(b) = self.bool_expr() {
                if self.eat_sym(")") && !self.at_operator() {
                    return Ok(b);
                }
            }
            self.reset(m);
        }
        self.comparison()
    }

    /// True when the next token continues an integer expression or comparison.
    pub fn at_operator(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Sym("+" | "-" | "*" | "%" | "=" | "==" | "!=" | "<" | "<=" | ">" | ">=")
        ) || self.is_kw("mod")
    }

    pub fn comparison(&mut self) -> Result<BoolExpr, SyntaxError> {
        let a = self.int_expr()?;
        let op = match self.peek() {
            Tok::Sym("=") | Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            t => return self.err(format!("expected comparison operator, found {}", describe(t))),
        };
        self.bump();
        let b = self.int_expr()?;
        Ok(BoolExpr::Cmp(op, a, b))
    }

    // Commands.

    fn label(&mut self) -> Result<Option<Label>, SyntaxError> {
        if self.eat_sym("@") {
            Ok(Some(self.int()?))
        } else {
            Ok(None)
        }
    }

    fn command(&mut self, labels: &mut Vec<Option<Label>>) -> Result<Command, SyntaxError> {
        let mut parts = vec![self.command_atom(labels)?];
        while self.eat_sym(";") {
            parts.push(self.command_atom(labels)?);
        }
        Ok(Command::seq_all(parts))
    }

    fn command_atom(&mut self, labels: &mut Vec<Option<Label>>) -> Result<Command, SyntaxError> {
        if self.eat_sym("{") {
            let c = self.command(labels)?;
            self.expect_sym("}")?;
            return Ok(c);
        }
        if self.eat_kw("skip") {
            labels.push(self.label()?);
            return Ok(Command::Skip(0));
        }
        for (kw, close) in [("if", "fi"), ("do", "od")] {
            if self.eat_kw(kw) {
                labels.push(self.label()?);
                let mut gcs = Vec::new();
                loop {
                    let guard = self.bool_expr()?;
                    self.expect_sym("->")?;
                    let body = self.command(labels)?;
                    gcs.push(GuardedCmd { guard, body });
                    if !self.eat_sym("[]") {
                        break;
                    }
                }
                self.expect_kw(close)?;
                return Ok(if kw == "if" { Command::If(0, gcs) } else { Command::Do(0, gcs) });
            }
        }
        if self.is_ident() {
            let x = self.ident()?;
            labels.push(self.label()?);
            self.expect_sym(":=")?;
            let e = self.int_expr()?;
            return Ok(Command::Assign(0, x, e));
        }
        self.err(format!("expected command, found {}", describe(self.peek())))
    }

    /// Parses a command, returning it with the labels written in the source
    /// in preorder (None where omitted); labels in the tree are placeholders.
    pub fn raw_command(&mut self) -> Result<(Command, Vec<Option<Label>>), SyntaxError> {
        let mut labels = Vec::new();
        let c = self.command(&mut labels)?;
        Ok((c, labels))
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Int(v) => format!("'{v}'"),
        Tok::Sym(s) => format!("'{s}'"),
        Tok::Eof => "end of input".to_string(),
    }
}

/// Writes labels into the tree in preorder.
fn relabel(c: &mut Command, labels: &mut impl Iterator<Item = Label>) {
    match c {
        Command::Skip(n) | Command::Assign(n, _, _) => *n = labels.next().expect("label count"),
        Command::Seq(a, b) => {
            relabel(a, labels);
            relabel(b, labels);
        }
        Command::If(n, gcs) | Command::Do(n, gcs) => {
            *n = labels.next().expect("label count");
            for gc in gcs {
                relabel(&mut gc.body, labels);
            }
        }
    }
}

/// Parses a program. Missing labels are assigned in preorder from 1, skipping
/// labels written explicitly; the result must be `ok`.
pub fn parse_program(src: &str) -> Result<Command, SyntaxError> {
    let mut p = Parser::new(src)?;
    let (mut c, written) = p.raw_command()?;
    p.expect_eof()?;
    let mut used = BTreeSet::new();
    for n in written.iter().flatten() {
        if *n <= 0 {
            return Err(SyntaxError::NonPositiveLabel(*n));
        }
        if !used.insert(*n) {
            return Err(SyntaxError::DuplicateLabel(*n));
        }
    }
    let mut next = 1;
    let mut assigned = Vec::with_capacity(written.len());
    for w in &written {
        match w {
            Some(n) => assigned.push(*n),
            None => {
                while used.contains(&next) {
                    next += 1;
                }
                used.insert(next);
                assigned.push(next);
            }
        }
    }
    relabel(&mut c, &mut assigned.into_iter());
    Ok(c)
}

/// Parses a command keeping labels exactly as written; omitted labels become 0.
/// Used for synthesized commands, which need not be `ok`.
pub fn parse_command_exact(src: &str) -> Result<Command, SyntaxError> {
    let mut p = Parser::new(src)?;
    let (mut c, written) = p.raw_command()?;
    p.expect_eof()?;
    relabel(&mut c, &mut written.into_iter().map(|w| w.unwrap_or(0)));
    Ok(c)
}

pub fn parse_int_expr(src: &str) -> Result<IntExpr, SyntaxError> {
    let mut p = Parser::new(src)?;
    let e = p.int_expr()?;
    p.expect_eof()?;
    Ok(e)
}

pub fn parse_bool_expr(src: &str) -> Result<BoolExpr, SyntaxError> {
    let mut p = Parser::new(src)?;
    let e = p.bool_expr()?;
    p.expect_eof()?;
    Ok(e)
}

// ---------------------------------------------------------------------------
// Printing

fn arith_prec(op: ArithOp) -> u8 {
    match op {
        ArithOp::Add | ArithOp::Sub => 1,
        ArithOp::Mul | ArithOp::Mod => 2,
    }
}

fn int_prec(e: &IntExpr) -> u8 {
    match e {
        IntExpr::Bin(op, _, _) => arith_prec(*op),
        _ => 3,
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Mod => "mod",
        })
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        })
    }
}

impl fmt::Display for IntExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntExpr::Lit(v) => write!(f, "{v}"),
            IntExpr::Var(x) => f.write_str(x),
            IntExpr::Bin(op, a, b) => {
                let p = arith_prec(*op);
                if int_prec(a) < p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {op} ")?;
                if int_prec(b) <= p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

fn bool_prec(b: &BoolExpr) -> u8 {
    match b {
        BoolExpr::Or(..) => 1,
        BoolExpr::And(..) => 2,
        _ => 3,
    }
}

impl fmt::Display for BoolExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoolExpr::True => f.write_str("true"),
            BoolExpr::False => f.write_str("false"),
            BoolExpr::Cmp(op, a, b) => write!(f, "{a} {op} {b}"),
            BoolExpr::Not(a) => match **a {
                BoolExpr::Not(_) | BoolExpr::True | BoolExpr::False => write!(f, "!{a}"),
                _ => write!(f, "!({a})"),
            },
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                let (p, op) = if matches!(self, BoolExpr::And(..)) { (2, "&&") } else { (1, "||") };
                if bool_prec(a) <= p {
                    write!(f, "({a})")?;
                } else {
                    write!(f, "{a}")?;
                }
                write!(f, " {op} ")?;
                if bool_prec(b) < p {
                    write!(f, "({b})")
                } else {
                    write!(f, "{b}")
                }
            }
        }
    }
}

/// Single-line rendering with every label explicit; parses back to the same
/// tree with [`parse_command_exact`].
impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Skip(n) => write!(f, "skip@{n}"),
            Command::Assign(n, x, e) => write!(f, "{x}@{n} := {e}"),
            Command::Seq(a, b) => {
                if matches!(**a, Command::Seq(..)) {
                    write!(f, "{{ {a} }} ; {b}")
                } else {
                    write!(f, "{a} ; {b}")
                }
            }
            Command::If(n, gcs) | Command::Do(n, gcs) => {
                let (open, close) = if matches!(self, Command::If(..)) { ("if", "fi") } else { ("do", "od") };
                write!(f, "{open}@{n} ")?;
                for (i, gc) in gcs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" [] ")?;
                    }
                    write!(f, "{} -> {}", gc.guard, gc.body)?;
                }
                write!(f, " {close}")
            }
        }
    }
}

/// Multi-line layout for humans. Labels equal to 0 are omitted when
/// `hide_zero` is set, which suits synthesized commands.
pub fn pretty(c: &Command, hide_zero: bool) -> String {
    let mut out = String::new();
    pretty_into(c, 0, hide_zero, &mut out);
    out
}

fn lab_suffix(n: Label, hide_zero: bool) -> String {
    if hide_zero && n == 0 {
        String::new()
    } else {
        format!("@{n}")
    }
}

fn pretty_into(c: &Command, ind: usize, hz: bool, out: &mut String) {
    let pad = "  ".repeat(ind);
    match c {
        Command::Skip(n) => out.push_str(&format!("{pad}skip{}", lab_suffix(*n, hz))),
        Command::Assign(n, x, e) => out.push_str(&format!("{pad}{x}{} := {e}", lab_suffix(*n, hz))),
        Command::Seq(a, b) => {
            if matches!(**a, Command::Seq(..)) {
                out.push_str(&format!("{pad}{{\n"));
                pretty_into(a, ind + 1, hz, out);
                out.push_str(&format!("\n{pad}}}"));
            } else {
                pretty_into(a, ind, hz, out);
            }
            out.push_str(" ;\n");
            pretty_into(b, ind, hz, out);
        }
        Command::If(n, gcs) | Command::Do(n, gcs) => {
            let (open, close) = if matches!(c, Command::If(..)) { ("if", "fi") } else { ("do", "od") };
            out.push_str(&format!("{pad}{open}{}\n", lab_suffix(*n, hz)));
            for (i, gc) in gcs.iter().enumerate() {
                let sep = if i == 0 { "  " } else { "[]" };
                out.push_str(&format!("{pad}{sep} {} ->\n", gc.guard));
                pretty_into(&gc.body, ind + 2, hz, out);
                out.push('\n');
            }
            out.push_str(&format!("{pad}{close}"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const C0: &str = "x := y ; do x > 0 -> if x mod 2 = 0 -> x := x - 1 [] x mod 2 != 0 -> x := x - 2 fi od";

    #[test]
    fn preorder_labels() {
        let c = parse_program(C0).unwrap();
        assert_eq!(c.labels_preorder(), vec![1, 2, 3, 4, 5]);
        assert!(c.okf(6));
        assert_eq!(c.lab(), 1);
    }

    #[test]
    fn explicit_labels_are_skipped() {
        let c = parse_program("x@2 := 1 ; y := 2 ; skip").unwrap();
        assert_eq!(c.labels_preorder(), vec![2, 1, 3]);
    }

    #[test]
    fn duplicate_label_rejected() {
        assert_eq!(parse_program("skip@1 ; skip@1"), Err(SyntaxError::DuplicateLabel(1)));
        assert_eq!(parse_program("skip@0"), Err(SyntaxError::NonPositiveLabel(0)));
    }

    #[test]
    fn fsuc_of_c0() {
        let c = parse_program(C0).unwrap();
        assert_eq!(c.fsuc(1, 6), Some(2));
        assert_eq!(c.fsuc(2, 6), Some(6));
        assert_eq!(c.fsuc(3, 6), Some(2));
        assert_eq!(c.fsuc(4, 6), Some(2));
        assert_eq!(c.fsuc(5, 6), Some(2));
        assert_eq!(c.fsuc(9, 6), None);
    }

    #[test]
    fn sub_returns_compound() {
        let c = parse_program(C0).unwrap();
        assert!(matches!(c.sub(2), Some(Command::Do(2, _))));
        assert!(matches!(c.sub(3), Some(Command::If(3, _))));
        assert!(matches!(c.sub(5), Some(Command::Assign(5, _, _))));
        assert!(c.sub(7).is_none());
    }

    #[test]
    fn print_parse_roundtrip() {
        let c = parse_program(C0).unwrap();
        assert_eq!(parse_command_exact(&c.to_string()).unwrap(), c);
        assert_eq!(parse_command_exact(&pretty(&c, false)).unwrap(), c);
        let left = Command::seq(Command::seq(Command::Skip(1), Command::Skip(2)), Command::Skip(3));
        assert_eq!(parse_command_exact(&left.to_string()).unwrap(), left);
    }

    #[test]
    fn expression_printing() {
        let e = parse_int_expr("(a - b) - (c - 2) * -3").unwrap();
        assert_eq!(e.to_string(), "a - b - (c - 2) * -3");
        assert_eq!(parse_int_expr(&e.to_string()).unwrap(), e);
        let b = parse_bool_expr("(x + 1) > 2 && !(y = 0 || true)").unwrap();
        assert_eq!(parse_bool_expr(&b.to_string()).unwrap(), b);
    }

    #[test]
    fn erase_and_ghost() {
        let c = parse_program("g := 1 ; x := x + 1 ; g := g + x").unwrap();
        assert!(c.is_ghost("g"));
        assert!(!parse_program("g := 1 ; x := g").unwrap().is_ghost("g"));
        assert!(!parse_program("do g > 0 -> skip od").unwrap().is_ghost("g"));
        assert!(!c.is_ghost("x"));
        assert_eq!(c.erase("g").to_string(), "skip@1 ; x@2 := x + 1 ; skip@3");
    }
}
