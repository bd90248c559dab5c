//! The functional language FUN, in an annotated variant (for checking) and an
//! unannotated variant (for inference).
//!
//! Concrete syntax, loosest to tightest:
//!
//! ```text
//! e ::= fun f (x : T) -> (e : T)      typed abstraction
//!     | fun f x -> e                  untyped abstraction
//!     | let x = e in e | if e then e else e
//!     | e = e | e <= e | e >= e       non-associative
//!     | e + e | e - e                 left-associative
//!     | e * e                         left-associative
//!     | e e                           application
//!     | n | true | false | x | (e)
//! T ::= int | bool | T -> T | (T)
//! ```

use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use super::lexer::{Cursor, Token};
use super::{name, Name, Node, ParseError, Syntax, VarSet};

/// Simple types of FUN.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum FunType {
    Int,
    Bool,
    Arrow(Arc<FunType>, Arc<FunType>),
}

impl FunType {
    pub fn arrow(domain: FunType, codomain: FunType) -> FunType {
        FunType::Arrow(Arc::new(domain), Arc::new(codomain))
    }

    pub fn parse(src: &str) -> Result<FunType, ParseError> {
        let mut cur = Cursor::new(src, FUN_KEYWORDS)?;
        let ty = parse_type(&mut cur)?;
        cur.expect_eof()?;
        Ok(ty)
    }
}

impl fmt::Display for FunType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunType::Int => f.write_str("int"),
            FunType::Bool => f.write_str("bool"),
            FunType::Arrow(a, b) => match **a {
                FunType::Arrow(..) => write!(f, "({a}) -> {b}"),
                _ => write!(f, "{a} -> {b}"),
            },
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Op {
    Add,
    Mul,
    Sub,
    Eq,
    Le,
    Ge,
}

impl Op {
    pub const ALL: [Op; 6] = [Op::Add, Op::Mul, Op::Sub, Op::Eq, Op::Le, Op::Ge];

    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Mul => "*",
            Op::Sub => "-",
            Op::Eq => "=",
            Op::Le => "<=",
            Op::Ge => ">=",
        }
    }

    /// Operand type and result type. Arithmetic is `int × int → int`,
    /// comparisons are `int × int → bool`.
    pub fn signature(self) -> (FunType, FunType) {
        match self {
            Op::Add | Op::Mul | Op::Sub => (FunType::Int, FunType::Int),
            Op::Eq | Op::Le | Op::Ge => (FunType::Int, FunType::Bool),
        }
    }

    fn precedence(self) -> u8 {
        match self {
            Op::Eq | Op::Le | Op::Ge => PREC_CMP,
            Op::Add | Op::Sub => PREC_ADD,
            Op::Mul => PREC_MUL,
        }
    }

    fn from_symbol(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|op| op.symbol() == s)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Constant {
    Int(u64),
    Bool(bool),
}

impl Constant {
    pub fn fun_type(self) -> FunType {
        match self {
            Constant::Int(_) => FunType::Int,
            Constant::Bool(_) => FunType::Bool,
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constant::Int(n) => write!(f, "{n}"),
            Constant::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// Type annotation carried by abstractions: [`FunType`] for the typed
/// language, `()` for the untyped one.
pub trait Annotation: Clone + Eq + Hash + fmt::Debug {
    const TYPED: bool;
    fn from_type(ty: Option<FunType>) -> Self;
    fn as_type(&self) -> Option<&FunType>;
}

impl Annotation for FunType {
    const TYPED: bool = true;

    fn from_type(ty: Option<FunType>) -> Self {
        ty.expect("typed abstraction without annotation")
    }

    fn as_type(&self) -> Option<&FunType> {
        Some(self)
    }
}

impl Annotation for () {
    const TYPED: bool = false;

    fn from_type(_: Option<FunType>) {}

    fn as_type(&self) -> Option<&FunType> {
        None
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ExprKind<A> {
    Const(Constant),
    Var(Name),
    /// `fun f (x : τx) -> (e : τe)`; `f` names the function inside its body.
    Abs { fun: Name, param: Name, param_ty: A, body: Expr<A>, body_ty: A },
    BinOp { op: Op, lhs: Expr<A>, rhs: Expr<A> },
    App { func: Expr<A>, arg: Expr<A> },
    If { cond: Expr<A>, then_br: Expr<A>, else_br: Expr<A> },
    Let { var: Name, bound: Expr<A>, body: Expr<A> },
}

pub type Expr<A> = Node<ExprKind<A>>;
pub type TypedExpr = Expr<FunType>;
pub type UntypedExpr = Expr<()>;

impl<A: Annotation> Syntax for ExprKind<A> {
    fn free_vars(&self) -> VarSet {
        match self {
            ExprKind::Const(_) => VarSet::new(),
            ExprKind::Var(x) => VarSet::from([x.clone()]),
            ExprKind::Abs { fun, param, body, .. } => {
                let mut fv = body.free_vars().clone();
                fv.remove(fun);
                fv.remove(param);
                fv
            }
            ExprKind::BinOp { lhs: a, rhs: b, .. } | ExprKind::App { func: a, arg: b } => {
                a.free_vars().union(b.free_vars()).cloned().collect()
            }
            ExprKind::If { cond, then_br, else_br } => {
                let mut fv = cond.free_vars().clone();
                fv.extend(then_br.free_vars().iter().cloned());
                fv.extend(else_br.free_vars().iter().cloned());
                fv
            }
            ExprKind::Let { var, bound, body } => {
                let mut fv = body.free_vars().clone();
                fv.remove(var);
                fv.extend(bound.free_vars().iter().cloned());
                fv
            }
        }
    }
}

pub fn int<A: Annotation>(n: u64) -> Expr<A> {
    Node::new(ExprKind::Const(Constant::Int(n)))
}

pub fn boolean<A: Annotation>(b: bool) -> Expr<A> {
    Node::new(ExprKind::Const(Constant::Bool(b)))
}

pub fn var<A: Annotation>(x: &str) -> Expr<A> {
    Node::new(ExprKind::Var(name(x)))
}

pub fn binop<A: Annotation>(lhs: Expr<A>, op: Op, rhs: Expr<A>) -> Expr<A> {
    Node::new(ExprKind::BinOp { op, lhs, rhs })
}

pub fn app<A: Annotation>(func: Expr<A>, arg: Expr<A>) -> Expr<A> {
    Node::new(ExprKind::App { func, arg })
}

pub fn if_then_else<A: Annotation>(cond: Expr<A>, then_br: Expr<A>, else_br: Expr<A>) -> Expr<A> {
    Node::new(ExprKind::If { cond, then_br, else_br })
}

pub fn let_in<A: Annotation>(x: &str, bound: Expr<A>, body: Expr<A>) -> Expr<A> {
    Node::new(ExprKind::Let { var: name(x), bound, body })
}

pub fn abs(fun: &str, param: &str, param_ty: FunType, body: TypedExpr, body_ty: FunType) -> TypedExpr {
    Node::new(ExprKind::Abs { fun: name(fun), param: name(param), param_ty, body, body_ty })
}

pub fn lambda(fun: &str, param: &str, body: UntypedExpr) -> UntypedExpr {
    Node::new(ExprKind::Abs { fun: name(fun), param: name(param), param_ty: (), body, body_ty: () })
}

/// Drops every type annotation.
pub fn erase(e: &TypedExpr) -> UntypedExpr {
    let kind = match e.kind() {
        ExprKind::Const(c) => ExprKind::Const(*c),
        ExprKind::Var(x) => ExprKind::Var(x.clone()),
        ExprKind::Abs { fun, param, body, .. } => {
            ExprKind::Abs { fun: fun.clone(), param: param.clone(), param_ty: (), body: erase(body), body_ty: () }
        }
        ExprKind::BinOp { op, lhs, rhs } => ExprKind::BinOp { op: *op, lhs: erase(lhs), rhs: erase(rhs) },
        ExprKind::App { func, arg } => ExprKind::App { func: erase(func), arg: erase(arg) },
        ExprKind::If { cond, then_br, else_br } => {
            ExprKind::If { cond: erase(cond), then_br: erase(then_br), else_br: erase(else_br) }
        }
        ExprKind::Let { var, bound, body } => ExprKind::Let { var: var.clone(), bound: erase(bound), body: erase(body) },
    };
    match e.span() {
        Some(span) => Node::with_span(kind, span),
        None => Node::new(kind),
    }
}

/// Immediate subexpressions in source order.
pub fn children<A: Annotation>(e: &Expr<A>) -> Vec<&Expr<A>> {
    match e.kind() {
        ExprKind::Const(_) | ExprKind::Var(_) => vec![],
        ExprKind::Abs { body, .. } => vec![body],
        ExprKind::BinOp { lhs: a, rhs: b, .. } | ExprKind::App { func: a, arg: b } => vec![a, b],
        ExprKind::If { cond, then_br, else_br } => vec![cond, then_br, else_br],
        ExprKind::Let { bound, body, .. } => vec![bound, body],
    }
}

pub fn size<A: Annotation>(e: &Expr<A>) -> usize {
    1 + children(e).into_iter().map(size).sum::<usize>()
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

const PREC_OPEN: u8 = 0;
const PREC_CMP: u8 = 1;
const PREC_ADD: u8 = 2;
const PREC_MUL: u8 = 3;
const PREC_APP: u8 = 4;
const PREC_ATOM: u8 = 5;

fn precedence<A>(e: &ExprKind<A>) -> u8 {
    match e {
        ExprKind::Const(_) | ExprKind::Var(_) => PREC_ATOM,
        ExprKind::App { .. } => PREC_APP,
        ExprKind::BinOp { op, .. } => op.precedence(),
        ExprKind::Abs { .. } | ExprKind::If { .. } | ExprKind::Let { .. } => PREC_OPEN,
    }
}

fn write_expr<A: Annotation>(f: &mut fmt::Formatter<'_>, e: &Expr<A>, ctx: u8) -> fmt::Result {
    let prec = precedence(e.kind());
    if prec < ctx {
        f.write_str("(")?;
        write_expr(f, e, PREC_OPEN)?;
        return f.write_str(")");
    }
    match e.kind() {
        ExprKind::Const(c) => write!(f, "{c}"),
        ExprKind::Var(x) => f.write_str(x),
        ExprKind::Abs { fun, param, param_ty, body, body_ty } => match (param_ty.as_type(), body_ty.as_type()) {
            (Some(tx), Some(te)) => {
                write!(f, "fun {fun} ({param} : {tx}) -> (")?;
                write_expr(f, body, PREC_OPEN)?;
                write!(f, " : {te})")
            }
            _ => {
                write!(f, "fun {fun} {param} -> ")?;
                write_expr(f, body, PREC_OPEN)
            }
        },
        ExprKind::BinOp { op, lhs, rhs } => {
            let (l, r) = if op.precedence() == PREC_CMP { (PREC_ADD, PREC_ADD) } else { (prec, prec + 1) };
            write_expr(f, lhs, l)?;
            write!(f, " {} ", op.symbol())?;
            write_expr(f, rhs, r)
        }
        ExprKind::App { func, arg } => {
            write_expr(f, func, PREC_APP)?;
            f.write_str(" ")?;
            write_expr(f, arg, PREC_ATOM)
        }
        ExprKind::If { cond, then_br, else_br } => {
            f.write_str("if ")?;
            write_expr(f, cond, PREC_OPEN)?;
            f.write_str(" then ")?;
            write_expr(f, then_br, PREC_OPEN)?;
            f.write_str(" else ")?;
            write_expr(f, else_br, PREC_OPEN)
        }
        ExprKind::Let { var, bound, body } => {
            write!(f, "let {var} = ")?;
            write_expr(f, bound, PREC_OPEN)?;
            f.write_str(" in ")?;
            write_expr(f, body, PREC_OPEN)
        }
    }
}

impl<A: Annotation> fmt::Display for Node<ExprKind<A>> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self, PREC_OPEN)
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

pub(crate) const FUN_KEYWORDS: &[&str] = &["fun", "let", "in", "if", "then", "else", "true", "false", "int", "bool"];

/// Parses annotated FUN.
pub fn parse_typed(src: &str) -> Result<TypedExpr, ParseError> {
    parse_expr_src(src)
}

/// Parses unannotated FUN.
pub fn parse_untyped(src: &str) -> Result<UntypedExpr, ParseError> {
    parse_expr_src(src)
}

pub fn parse_expr_src<A: Annotation>(src: &str) -> Result<Expr<A>, ParseError> {
    let mut cur = Cursor::new(src, FUN_KEYWORDS)?;
    let e = parse_expr(&mut cur)?;
    cur.expect_eof()?;
    Ok(e)
}

pub(crate) fn parse_type(cur: &mut Cursor) -> Result<FunType, ParseError> {
    let dom = if cur.eat_kw("int") {
        FunType::Int
    } else if cur.eat_kw("bool") {
        FunType::Bool
    } else if cur.eat_sym("(") {
        let t = parse_type(cur)?;
        cur.expect_sym(")")?;
        t
    } else {
        return Err(cur.unexpected("a type"));
    };
    if cur.eat_sym("->") {
        Ok(FunType::arrow(dom, parse_type(cur)?))
    } else {
        Ok(dom)
    }
}

fn parse_expr<A: Annotation>(cur: &mut Cursor) -> Result<Expr<A>, ParseError> {
    let span = cur.span();
    if cur.eat_kw("fun") {
        let fun = name(&cur.expect_ident()?);
        let kind = if A::TYPED {
            cur.expect_sym("(")?;
            let param = name(&cur.expect_ident()?);
            cur.expect_sym(":")?;
            let param_ty = parse_type(cur)?;
            cur.expect_sym(")")?;
            cur.expect_sym("->")?;
            cur.expect_sym("(")?;
            let body = parse_expr(cur)?;
            cur.expect_sym(":")?;
            let body_ty = parse_type(cur)?;
            cur.expect_sym(")")?;
            ExprKind::Abs { fun, param, param_ty: A::from_type(Some(param_ty)), body, body_ty: A::from_type(Some(body_ty)) }
        } else {
            let parenthesized = cur.eat_sym("(");
            let param = name(&cur.expect_ident()?);
            if parenthesized {
                cur.expect_sym(")")?;
            }
            cur.expect_sym("->")?;
            let body = parse_expr(cur)?;
            ExprKind::Abs { fun, param, param_ty: A::from_type(None), body, body_ty: A::from_type(None) }
        };
        return Ok(Node::with_span(kind, span));
    }
    if cur.eat_kw("let") {
        let var = name(&cur.expect_ident()?);
        cur.expect_sym("=")?;
        let bound = parse_expr(cur)?;
        cur.expect_kw("in")?;
        let body = parse_expr(cur)?;
        return Ok(Node::with_span(ExprKind::Let { var, bound, body }, span));
    }
    if cur.eat_kw("if") {
        let cond = parse_expr(cur)?;
        cur.expect_kw("then")?;
        let then_br = parse_expr(cur)?;
        cur.expect_kw("else")?;
        let else_br = parse_expr(cur)?;
        return Ok(Node::with_span(ExprKind::If { cond, then_br, else_br }, span));
    }
    parse_cmp(cur)
}

fn peek_op(cur: &Cursor) -> Option<Op> {
    match cur.peek() {
        Token::Sym(s) => Op::from_symbol(s),
        _ => None,
    }
}

fn parse_cmp<A: Annotation>(cur: &mut Cursor) -> Result<Expr<A>, ParseError> {
    let span = cur.span();
    let lhs = parse_binary(cur, PREC_ADD)?;
    match peek_op(cur) {
        Some(op) if op.precedence() == PREC_CMP => {
            cur.bump();
            let rhs = parse_binary(cur, PREC_ADD)?;
            if matches!(peek_op(cur), Some(o) if o.precedence() == PREC_CMP) {
                return Err(cur.unexpected("parentheses around chained comparison"));
            }
            Ok(Node::with_span(ExprKind::BinOp { op, lhs, rhs }, span))
        }
        _ => Ok(lhs),
    }
}

fn parse_binary<A: Annotation>(cur: &mut Cursor, level: u8) -> Result<Expr<A>, ParseError> {
    let span = cur.span();
    let mut lhs = if level == PREC_ADD { parse_binary(cur, PREC_MUL)? } else { parse_app(cur)? };
    while let Some(op) = peek_op(cur).filter(|op| op.precedence() == level) {
        cur.bump();
        let rhs = if level == PREC_ADD { parse_binary(cur, PREC_MUL)? } else { parse_app(cur)? };
        lhs = Node::with_span(ExprKind::BinOp { op, lhs, rhs }, span);
    }
    Ok(lhs)
}

fn starts_atom(cur: &Cursor) -> bool {
    matches!(cur.peek(), Token::Int(_)) || cur.is_sym("(") || cur.is_kw("true") || cur.is_kw("false") || cur.is_ident()
}

fn parse_app<A: Annotation>(cur: &mut Cursor) -> Result<Expr<A>, ParseError> {
    let span = cur.span();
    let mut func = parse_atom(cur)?;
    while starts_atom(cur) {
        let arg = parse_atom(cur)?;
        func = Node::with_span(ExprKind::App { func, arg }, span);
    }
    Ok(func)
}

fn parse_atom<A: Annotation>(cur: &mut Cursor) -> Result<Expr<A>, ParseError> {
    let span = cur.span();
    if cur.eat_sym("(") {
        let e = parse_expr(cur)?;
        cur.expect_sym(")")?;
        return Ok(e);
    }
    let kind = match cur.peek().clone() {
        Token::Int(n) => ExprKind::Const(Constant::Int(n)),
        Token::Word(w) if w == "true" => ExprKind::Const(Constant::Bool(true)),
        Token::Word(w) if w == "false" => ExprKind::Const(Constant::Bool(false)),
        Token::Word(w) if cur.is_ident() => ExprKind::Var(name(&w)),
        _ => return Err(cur.unexpected("an expression")),
    };
    cur.bump();
    Ok(Node::with_span(kind, span))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(names: &[&str]) -> VarSet {
        names.iter().map(|n| name(n)).collect()
    }

    #[test]
    fn free_vars_of_table_rows() {
        let e: TypedExpr = binop(var("n"), Op::Sub, int(1));
        assert_eq!(*e.free_vars(), set(&["n"]));
        assert!(int::<FunType>(7).free_vars().is_empty());
    }

    #[test]
    fn let_binds_only_in_body() {
        let e: TypedExpr = parse_typed("let x = y in x + z").unwrap();
        assert_eq!(*e.free_vars(), set(&["y", "z"]));
        let e: TypedExpr = parse_typed("let x = x in x").unwrap();
        assert_eq!(*e.free_vars(), set(&["x"]));
    }

    #[test]
    fn abstraction_binds_function_and_parameter() {
        let e = parse_typed("fun fact (n : int) -> (fact (n - 1) + m : int)").unwrap();
        assert_eq!(*e.free_vars(), set(&["m"]));
    }

    #[test]
    fn parses_grammar_images() {
        let e = parse_typed("let x = 1 in x").unwrap();
        assert_eq!(e, let_in("x", int(1), var("x")));
        let e = parse_typed("fun fact (n : int) -> (n : int)").unwrap();
        assert_eq!(e, abs("fact", "n", FunType::Int, var("n"), FunType::Int));
        let e = parse_untyped("fun f x -> x").unwrap();
        assert_eq!(e, lambda("f", "x", var("x")));
    }

    #[test]
    fn precedence_and_associativity() {
        let e: TypedExpr = parse_typed("1 + 2 * f x - 3 >= y").unwrap();
        let expected = binop(
            binop(binop(int(1), Op::Add, binop(int(2), Op::Mul, app(var("f"), var("x")))), Op::Sub, int(3)),
            Op::Ge,
            var("y"),
        );
        assert_eq!(e, expected);
        assert_eq!(e.to_string(), "1 + 2 * f x - 3 >= y");
    }

    #[test]
    fn prints_parentheses_where_needed() {
        let e: TypedExpr = binop(int(1), Op::Sub, binop(int(2), Op::Sub, int(3)));
        assert_eq!(e.to_string(), "1 - (2 - 3)");
        let e: TypedExpr = app(var("f"), app(var("g"), var("x")));
        assert_eq!(e.to_string(), "f (g x)");
        let e: TypedExpr = binop(if_then_else(boolean(true), int(1), int(2)), Op::Add, int(3));
        assert_eq!(e.to_string(), "(if true then 1 else 2) + 3");
        assert_eq!(parse_typed(&e.to_string()).unwrap(), e);
    }

    #[test]
    fn arrow_types_print_right_associative() {
        let t = FunType::arrow(FunType::arrow(FunType::Int, FunType::Bool), FunType::Int);
        assert_eq!(t.to_string(), "(int -> bool) -> int");
        assert_eq!(FunType::parse("(int -> bool) -> int").unwrap(), t);
        let t = FunType::parse("int -> int -> bool").unwrap();
        assert_eq!(t, FunType::arrow(FunType::Int, FunType::arrow(FunType::Int, FunType::Bool)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_typed("let x = \n  in x").unwrap_err();
        assert_eq!((err.line, err.col), (2, 3));
        assert!(parse_typed("fun f x -> x").is_err(), "typed FUN requires annotations");
        assert!(parse_typed("1 = 2 = 3").is_err());
    }

    #[test]
    fn spans_do_not_affect_equality() {
        let a = parse_typed("x + 1").unwrap();
        let b = parse_typed("  x   +    1").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.span(), b.span());
    }

    #[test]
    fn erase_drops_annotations() {
        let e = parse_typed("fun f (x : int) -> (x + 1 : int)").unwrap();
        assert_eq!(erase(&e).to_string(), "fun f x -> x + 1");
    }
}
