//! The imperative language WHILE.
//!
//! ```text
//! a ::= n | x | a + a | a - a | a * a | (a)
//! b ::= true | false | b or b | not b | a <= a | (b)
//! c ::= skip | x := a | c ; c | if b then c else c | while b do c | (c)
//! ```
//!
//! `;` is right-associative and binds looser than `if` and `while`, so a
//! sequence inside a branch or loop body needs parentheses.

use std::fmt;

use super::lexer::{Cursor, Token};
use super::{name, Name, Node, ParseError, Syntax, VarSet};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub const ALL: [ArithOp; 3] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul];

    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

/// Syntactic category of a phrase.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Sort {
    Arith,
    Bool,
    Cmd,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum PhraseKind {
    Num(u64),
    Var(Name),
    Arith { op: ArithOp, lhs: Phrase, rhs: Phrase },
    True,
    False,
    Or(Phrase, Phrase),
    Not(Phrase),
    Leq(Phrase, Phrase),
    Skip,
    /// The target is always a `Var` phrase.
    Assign { target: Phrase, value: Phrase },
    Seq(Phrase, Phrase),
    If { cond: Phrase, then_br: Phrase, else_br: Phrase },
    While { cond: Phrase, body: Phrase },
}

pub type Phrase = Node<PhraseKind>;

impl Syntax for PhraseKind {
    // No binders: every occurring variable is free.
    fn free_vars(&self) -> VarSet {
        let mut fv = VarSet::new();
        if let PhraseKind::Var(x) = self {
            fv.insert(x.clone());
        }
        for child in kind_children(self) {
            fv.extend(child.free_vars().iter().cloned());
        }
        fv
    }
}

fn kind_children(k: &PhraseKind) -> Vec<&Phrase> {
    match k {
        PhraseKind::Num(_) | PhraseKind::Var(_) | PhraseKind::True | PhraseKind::False | PhraseKind::Skip => vec![],
        PhraseKind::Not(b) => vec![b],
        PhraseKind::Arith { lhs: a, rhs: b, .. }
        | PhraseKind::Or(a, b)
        | PhraseKind::Leq(a, b)
        | PhraseKind::Seq(a, b)
        | PhraseKind::Assign { target: a, value: b }
        | PhraseKind::While { cond: a, body: b } => vec![a, b],
        PhraseKind::If { cond, then_br, else_br } => vec![cond, then_br, else_br],
    }
}

/// Immediate subphrases in source order (an assignment's target comes first).
pub fn children(p: &Phrase) -> Vec<&Phrase> {
    kind_children(p.kind())
}

pub fn size(p: &Phrase) -> usize {
    1 + children(p).into_iter().map(size).sum::<usize>()
}

pub fn sort(p: &Phrase) -> Sort {
    match p.kind() {
        PhraseKind::Num(_) | PhraseKind::Var(_) | PhraseKind::Arith { .. } => Sort::Arith,
        PhraseKind::True | PhraseKind::False | PhraseKind::Or(..) | PhraseKind::Not(_) | PhraseKind::Leq(..) => Sort::Bool,
        _ => Sort::Cmd,
    }
}

pub fn num(n: u64) -> Phrase {
    Node::new(PhraseKind::Num(n))
}

pub fn var(x: &str) -> Phrase {
    Node::new(PhraseKind::Var(name(x)))
}

pub fn arith(lhs: Phrase, op: ArithOp, rhs: Phrase) -> Phrase {
    Node::new(PhraseKind::Arith { op, lhs, rhs })
}

pub fn tt() -> Phrase {
    Node::new(PhraseKind::True)
}

pub fn ff() -> Phrase {
    Node::new(PhraseKind::False)
}

pub fn or(a: Phrase, b: Phrase) -> Phrase {
    Node::new(PhraseKind::Or(a, b))
}

pub fn not(b: Phrase) -> Phrase {
    Node::new(PhraseKind::Not(b))
}

pub fn leq(a: Phrase, b: Phrase) -> Phrase {
    Node::new(PhraseKind::Leq(a, b))
}

pub fn skip() -> Phrase {
    Node::new(PhraseKind::Skip)
}

pub fn assign(x: &str, value: Phrase) -> Phrase {
    Node::new(PhraseKind::Assign { target: var(x), value })
}

pub fn seq(c1: Phrase, c2: Phrase) -> Phrase {
    Node::new(PhraseKind::Seq(c1, c2))
}

pub fn if_then_else(cond: Phrase, then_br: Phrase, else_br: Phrase) -> Phrase {
    Node::new(PhraseKind::If { cond, then_br, else_br })
}

pub fn while_do(cond: Phrase, body: Phrase) -> Phrase {
    Node::new(PhraseKind::While { cond, body })
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

// Arithmetic: 0 sum, 1 product, 2 atom. Booleans: 0 or, 1 not/atom.
fn write_arith(f: &mut fmt::Formatter<'_>, p: &Phrase, ctx: u8) -> fmt::Result {
    match p.kind() {
        PhraseKind::Num(n) => write!(f, "{n}"),
        PhraseKind::Var(x) => f.write_str(x),
        PhraseKind::Arith { op, lhs, rhs } => {
            let prec = if *op == ArithOp::Mul { 1 } else { 0 };
            if prec < ctx {
                f.write_str("(")?;
            }
            write_arith(f, lhs, prec)?;
            write!(f, " {} ", op.symbol())?;
            write_arith(f, rhs, prec + 1)?;
            if prec < ctx {
                f.write_str(")")?;
            }
            Ok(())
        }
        _ => write_phrase(f, p),
    }
}

fn write_bool(f: &mut fmt::Formatter<'_>, p: &Phrase, ctx: u8) -> fmt::Result {
    match p.kind() {
        PhraseKind::True => f.write_str("true"),
        PhraseKind::False => f.write_str("false"),
        PhraseKind::Or(a, b) => {
            if ctx > 0 {
                f.write_str("(")?;
            }
            write_bool(f, a, 0)?;
            f.write_str(" or ")?;
            write_bool(f, b, 1)?;
            if ctx > 0 {
                f.write_str(")")?;
            }
            Ok(())
        }
        PhraseKind::Not(b) => {
            f.write_str("not ")?;
            write_bool(f, b, 1)
        }
        PhraseKind::Leq(a, b) => {
            write_arith(f, a, 0)?;
            f.write_str(" <= ")?;
            write_arith(f, b, 0)
        }
        _ => write_phrase(f, p),
    }
}

// Commands: 0 sequence, 1 single command.
fn write_cmd(f: &mut fmt::Formatter<'_>, p: &Phrase, ctx: u8) -> fmt::Result {
    match p.kind() {
        PhraseKind::Skip => f.write_str("skip"),
        PhraseKind::Assign { target, value } => {
            write_arith(f, target, 2)?;
            f.write_str(" := ")?;
            write_arith(f, value, 0)
        }
        PhraseKind::Seq(a, b) => {
            if ctx > 0 {
                f.write_str("(")?;
            }
            write_cmd(f, a, 1)?;
            f.write_str(" ; ")?;
            write_cmd(f, b, 0)?;
            if ctx > 0 {
                f.write_str(")")?;
            }
            Ok(())
        }
        PhraseKind::If { cond, then_br, else_br } => {
            f.write_str("if ")?;
            write_bool(f, cond, 0)?;
            f.write_str(" then ")?;
            write_cmd(f, then_br, 1)?;
            f.write_str(" else ")?;
            write_cmd(f, else_br, 1)
        }
        PhraseKind::While { cond, body } => {
            f.write_str("while ")?;
            write_bool(f, cond, 0)?;
            f.write_str(" do ")?;
            write_cmd(f, body, 1)
        }
        _ => write_phrase(f, p),
    }
}

fn write_phrase(f: &mut fmt::Formatter<'_>, p: &Phrase) -> fmt::Result {
    match sort(p) {
        Sort::Arith => write_arith(f, p, 0),
        Sort::Bool => write_bool(f, p, 0),
        Sort::Cmd => write_cmd(f, p, 0),
    }
}

impl fmt::Display for Node<PhraseKind> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_phrase(f, self)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

const WHILE_KEYWORDS: &[&str] = &["skip", "if", "then", "else", "while", "do", "not", "or", "true", "false"];

/// Parses a phrase of any sort: a command, a boolean or an arithmetic expression.
pub fn parse_while(src: &str) -> Result<Phrase, ParseError> {
    let mut cur = Cursor::new(src, WHILE_KEYWORDS)?;
    type Parser = fn(&mut Cursor) -> Result<Phrase, ParseError>;
    let parsers: [Parser; 3] = [parse_cmd, parse_bool, parse_arith];
    let mut best: Option<(usize, ParseError)> = None;
    for parse in parsers {
        cur.pos = 0;
        let attempt = parse(&mut cur).and_then(|p| cur.expect_eof().map(|_| p));
        match attempt {
            Ok(p) => return Ok(p),
            Err(e) => {
                if best.as_ref().is_none_or(|(pos, _)| cur.pos > *pos) {
                    best = Some((cur.pos, e));
                }
            }
        }
    }
    Err(best.expect("at least one parser ran").1)
}

fn parse_cmd(cur: &mut Cursor) -> Result<Phrase, ParseError> {
    let span = cur.span();
    let first = parse_single_cmd(cur)?;
    if cur.eat_sym(";") {
        let rest = parse_cmd(cur)?;
        Ok(Node::with_span(PhraseKind::Seq(first, rest), span))
    } else {
        Ok(first)
    }
}

fn parse_single_cmd(cur: &mut Cursor) -> Result<Phrase, ParseError> {
    let span = cur.span();
    if cur.eat_kw("skip") {
        return Ok(Node::with_span(PhraseKind::Skip, span));
    }
    if cur.eat_kw("if") {
        let cond = parse_bool(cur)?;
        cur.expect_kw("then")?;
        let then_br = parse_single_cmd(cur)?;
        cur.expect_kw("else")?;
        let else_br = parse_single_cmd(cur)?;
        return Ok(Node::with_span(PhraseKind::If { cond, then_br, else_br }, span));
    }
    if cur.eat_kw("while") {
        let cond = parse_bool(cur)?;
        cur.expect_kw("do")?;
        let body = parse_single_cmd(cur)?;
        return Ok(Node::with_span(PhraseKind::While { cond, body }, span));
    }
    if cur.eat_sym("(") {
        let c = parse_cmd(cur)?;
        cur.expect_sym(")")?;
        return Ok(c);
    }
    if cur.is_ident() {
        let x = cur.expect_ident()?;
        let target = Node::with_span(PhraseKind::Var(name(&x)), span);
        cur.expect_sym(":=")?;
        let value = parse_arith(cur)?;
        return Ok(Node::with_span(PhraseKind::Assign { target, value }, span));
    }
    Err(cur.unexpected("a command"))
}

fn parse_bool(cur: &mut Cursor) -> Result<Phrase, ParseError> {
    let span = cur.span();
    let mut lhs = parse_bool_unary(cur)?;
    while cur.eat_kw("or") {
        let rhs = parse_bool_unary(cur)?;
        lhs = Node::with_span(PhraseKind::Or(lhs, rhs), span);
    }
    Ok(lhs)
}

fn parse_bool_unary(cur: &mut Cursor) -> Result<Phrase, ParseError> {
    let span = cur.span();
    if cur.eat_kw("not") {
        let b = parse_bool_unary(cur)?;
        return Ok(Node::with_span(PhraseKind::Not(b), span));
    }
    if cur.eat_kw("true") {
        return Ok(Node::with_span(PhraseKind::True, span));
    }
    if cur.eat_kw("false") {
        return Ok(Node::with_span(PhraseKind::False, span));
    }
    // `(` opens either a comparison operand or a parenthesized boolean.
    let start = cur.pos;
    let comparison = parse_arith(cur).and_then(|a| {
        cur.expect_sym("<=")?;
        let b = parse_arith(cur)?;
        Ok(Node::with_span(PhraseKind::Leq(a, b), span))
    });
    match comparison {
        Ok(p) => Ok(p),
        Err(err) => {
            let failed_at = cur.pos;
            cur.pos = start;
            if cur.eat_sym("(") {
                match parse_bool(cur).and_then(|b| cur.expect_sym(")").map(|_| b)) {
                    Ok(b) => return Ok(b),
                    Err(e2) if cur.pos >= failed_at => return Err(e2),
                    Err(_) => {}
                }
            }
            cur.pos = failed_at;
            Err(err)
        }
    }
}

fn parse_arith(cur: &mut Cursor) -> Result<Phrase, ParseError> {
    let span = cur.span();
    let mut lhs = parse_product(cur)?;
    loop {
        let op = if cur.eat_sym("+") {
            ArithOp::Add
        } else if cur.eat_sym("-") {
            ArithOp::Sub
        } else {
            return Ok(lhs);
        };
        let rhs = parse_product(cur)?;
        lhs = Node::with_span(PhraseKind::Arith { op, lhs, rhs }, span);
    }
}

fn parse_product(cur: &mut Cursor) -> Result<Phrase, ParseError> {
    let span = cur.span();
    let mut lhs = parse_arith_atom(cur)?;
    while cur.eat_sym("*") {
        let rhs = parse_arith_atom(cur)?;
        lhs = Node::with_span(PhraseKind::Arith { op: ArithOp::Mul, lhs, rhs }, span);
    }
    Ok(lhs)
}

fn parse_arith_atom(cur: &mut Cursor) -> Result<Phrase, ParseError> {
    let span = cur.span();
    if cur.eat_sym("(") {
        let a = parse_arith(cur)?;
        cur.expect_sym(")")?;
        return Ok(a);
    }
    if let Token::Int(n) = *cur.peek() {
        cur.bump();
        return Ok(Node::with_span(PhraseKind::Num(n), span));
    }
    if cur.is_ident() {
        let x = cur.expect_ident()?;
        return Ok(Node::with_span(PhraseKind::Var(name(&x)), span));
    }
    Err(cur.unexpected("an arithmetic expression"))
}
