//! Random program generators and tree surgery shared by the integration
//! tests.
#![allow(dead_code)]

use increty::check::{check_f, FunEnv};
use increty::infer::{AType, InferEnv};
use increty::security::{Level, SecEnv, SecurityType};
use increty::terms::fun::{self as f, ExprKind, FunType, Op, TypedExpr};
use increty::terms::while_lang::{self as w, ArithOp, Phrase, PhraseKind, Sort};
use increty::terms::name;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Rand = ChaCha8Rng;

pub fn rng(seed: u64) -> Rand {
    ChaCha8Rng::seed_from_u64(seed)
}

const FUN_NAMES: [&str; 5] = ["x", "y", "n", "f", "g"];

/// Free variables every generated FUN program may use.
pub fn fun_env() -> FunEnv {
    [("p", FunType::Int), ("q", FunType::arrow(FunType::Int, FunType::Bool))].into_iter().collect()
}

/// The same variables with unknown types, for inference.
pub fn infer_env() -> InferEnv {
    [("p", AType::Var(0)), ("q", AType::Var(1))].into_iter().collect()
}

pub fn small_type(rng: &mut Rand) -> FunType {
    match rng.gen_range(0..10) {
        0..=3 => FunType::Int,
        4..=6 => FunType::Bool,
        7 | 8 => FunType::arrow(FunType::Int, FunType::Int),
        _ => FunType::arrow(FunType::Bool, FunType::Int),
    }
}

/// A program of type `ty` under `scope`, of depth at most about `fuel`.
pub fn gen_fun(rng: &mut Rand, scope: &FunEnv, ty: &FunType, fuel: u32) -> TypedExpr {
    let vars: Vec<&str> = scope.iter().filter(|(_, t)| *t == ty).map(|(x, _)| &**x).collect();
    let leaf = |rng: &mut Rand| -> Option<TypedExpr> {
        let pick_var = !vars.is_empty() && rng.gen_bool(0.6);
        match ty {
            _ if pick_var => Some(f::var(vars.choose(rng).unwrap())),
            FunType::Int => Some(f::int(rng.gen_range(0..10))),
            FunType::Bool => Some(f::boolean(rng.gen())),
            FunType::Arrow(..) if !vars.is_empty() => Some(f::var(vars.choose(rng).unwrap())),
            FunType::Arrow(..) => None,
        }
    };
    if fuel == 0 || rng.gen_bool(0.2) {
        if let Some(e) = leaf(rng) {
            return e;
        }
    }
    let fuel = fuel.saturating_sub(1);
    let choice = rng.gen_range(0..10);
    match (ty, choice) {
        (FunType::Arrow(a, b), _) if choice < 6 || fuel == 0 => {
            let fun = *FUN_NAMES.choose(rng).unwrap();
            let param = *FUN_NAMES.choose(rng).unwrap();
            let inner = scope.extend(&name(param), (**a).clone()).extend(&name(fun), ty.clone());
            let body = gen_fun(rng, &inner, b, fuel);
            f::abs(fun, param, (**a).clone(), body, (**b).clone())
        }
        (FunType::Int, 0..=2) => {
            let op = *[Op::Add, Op::Sub, Op::Mul].choose(rng).unwrap();
            f::binop(gen_fun(rng, scope, ty, fuel), op, gen_fun(rng, scope, ty, fuel))
        }
        (FunType::Bool, 0..=2) => {
            let op = *[Op::Eq, Op::Le, Op::Ge].choose(rng).unwrap();
            f::binop(gen_fun(rng, scope, &FunType::Int, fuel), op, gen_fun(rng, scope, &FunType::Int, fuel))
        }
        (_, 3 | 4) => f::if_then_else(
            gen_fun(rng, scope, &FunType::Bool, fuel),
            gen_fun(rng, scope, ty, fuel),
            gen_fun(rng, scope, ty, fuel),
        ),
        (_, 5 | 6) => {
            let arg_ty = small_type(rng);
            let fn_ty = FunType::arrow(arg_ty.clone(), ty.clone());
            f::app(gen_fun(rng, scope, &fn_ty, fuel), gen_fun(rng, scope, &arg_ty, fuel))
        }
        (_, 7 | 8) => {
            let x = *FUN_NAMES.choose(rng).unwrap();
            let bound_ty = small_type(rng);
            let bound = gen_fun(rng, scope, &bound_ty, fuel);
            let body = gen_fun(rng, &scope.extend(&name(x), bound_ty), ty, fuel);
            f::let_in(x, bound, body)
        }
        _ => leaf(rng).unwrap_or_else(|| gen_fun(rng, scope, ty, 0)),
    }
}

/// A well-typed closed-over-[`fun_env`] program of a random small type.
pub fn well_typed_fun(rng: &mut Rand, fuel: u32) -> TypedExpr {
    let ty = small_type(rng);
    let e = gen_fun(rng, &fun_env(), &ty, fuel);
    assert_eq!(check_f(&fun_env(), &e).as_ref(), Ok(&ty), "generator produced an ill-typed program: {e}");
    e
}

/// Environment under which the node at `path` is typed, following the
/// scoping rules of the checker.
pub fn scope_at(env: &FunEnv, e: &TypedExpr, path: &[usize]) -> FunEnv {
    let Some((&i, rest)) = path.split_first() else { return env.clone() };
    match e.kind() {
        ExprKind::Abs { fun, param, param_ty, body, body_ty } => {
            let inner = env
                .extend(param, param_ty.clone())
                .extend(fun, FunType::arrow(param_ty.clone(), body_ty.clone()));
            scope_at(&inner, body, rest)
        }
        ExprKind::Let { var, bound, body } if i == 1 => {
            let t = check_f(env, bound).expect("scope_at needs a typed let");
            scope_at(&env.extend(var, t), body, rest)
        }
        _ => scope_at(env, f::children(e)[i], rest),
    }
}

/// Every position of `e` in preorder.
pub fn fun_paths<A: f::Annotation>(e: &f::Expr<A>) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for (i, c) in f::children(e).into_iter().enumerate() {
        out.extend(fun_paths(c).into_iter().map(|mut p| {
            p.insert(0, i);
            p
        }));
    }
    out
}

pub fn fun_at<'a, A: f::Annotation>(e: &'a f::Expr<A>, path: &[usize]) -> &'a f::Expr<A> {
    path.iter().fold(e, |node, &i| f::children(node)[i])
}

/// `e` with the node at `path` replaced by `with`.
pub fn replace_fun(e: &TypedExpr, path: &[usize], with: TypedExpr) -> TypedExpr {
    let Some((&i, rest)) = path.split_first() else { return with };
    let sub = |c: &TypedExpr, j: usize| if j == i { replace_fun(c, rest, with.clone()) } else { c.clone() };
    match e.kind() {
        ExprKind::Const(_) | ExprKind::Var(_) => unreachable!("leaves have no children"),
        ExprKind::Abs { fun, param, param_ty, body, body_ty } => {
            f::abs(fun, param, param_ty.clone(), sub(body, 0), body_ty.clone())
        }
        ExprKind::BinOp { op, lhs, rhs } => f::binop(sub(lhs, 0), *op, sub(rhs, 1)),
        ExprKind::App { func, arg } => f::app(sub(func, 0), sub(arg, 1)),
        ExprKind::If { cond, then_br, else_br } => f::if_then_else(sub(cond, 0), sub(then_br, 1), sub(else_br, 2)),
        ExprKind::Let { var, bound, body } => f::let_in(var, sub(bound, 0), sub(body, 1)),
    }
}

/// Replaces a random subterm by a fresh one. Most replacements keep the
/// subterm's type; the rest usually make the program ill-typed.
pub fn mutate_fun(rng: &mut Rand, e: &TypedExpr, fuel: u32) -> TypedExpr {
    let paths = fun_paths(e);
    let path = paths.choose(rng).unwrap();
    let scope = scope_at(&fun_env(), e, path);
    let ty = if rng.gen_bool(0.75) {
        check_f(&scope, fun_at(e, path)).expect("subterms of typed programs are typed")
    } else {
        small_type(rng)
    };
    replace_fun(e, path, gen_fun(rng, &scope, &ty, fuel))
}

pub const WHILE_VARS: [&str; 3] = ["x", "y", "z"];

pub fn random_levels(rng: &mut Rand) -> SecEnv {
    WHILE_VARS
        .iter()
        .map(|x| (*x, SecurityType::Var(if rng.gen() { Level::H } else { Level::L })))
        .collect()
}

pub fn gen_while(rng: &mut Rand, sort: Sort, fuel: u32) -> Phrase {
    let var = |rng: &mut Rand| *WHILE_VARS.choose(rng).unwrap();
    let leaf = fuel == 0 || rng.gen_bool(0.25);
    let fuel = fuel.saturating_sub(1);
    match sort {
        Sort::Arith if leaf => {
            if rng.gen() {
                w::var(var(rng))
            } else {
                w::num(rng.gen_range(0..5))
            }
        }
        Sort::Arith => {
            let op = *ArithOp::ALL.choose(rng).unwrap();
            w::arith(gen_while(rng, Sort::Arith, fuel), op, gen_while(rng, Sort::Arith, fuel))
        }
        Sort::Bool if leaf => {
            if rng.gen() {
                w::tt()
            } else {
                w::ff()
            }
        }
        Sort::Bool => match rng.gen_range(0..4) {
            0 => w::or(gen_while(rng, Sort::Bool, fuel), gen_while(rng, Sort::Bool, fuel)),
            1 => w::not(gen_while(rng, Sort::Bool, fuel)),
            _ => w::leq(gen_while(rng, Sort::Arith, fuel), gen_while(rng, Sort::Arith, fuel)),
        },
        Sort::Cmd if leaf => {
            if rng.gen_bool(0.3) {
                w::skip()
            } else {
                w::assign(var(rng), gen_while(rng, Sort::Arith, fuel))
            }
        }
        Sort::Cmd => match rng.gen_range(0..5) {
            0 | 1 => w::seq(gen_while(rng, Sort::Cmd, fuel), gen_while(rng, Sort::Cmd, fuel)),
            2 => w::if_then_else(
                gen_while(rng, Sort::Bool, fuel),
                gen_while(rng, Sort::Cmd, fuel),
                gen_while(rng, Sort::Cmd, fuel),
            ),
            3 => w::while_do(gen_while(rng, Sort::Bool, fuel), gen_while(rng, Sort::Cmd, fuel)),
            _ => w::assign(var(rng), gen_while(rng, Sort::Arith, fuel)),
        },
    }
}

pub fn random_sort(rng: &mut Rand) -> Sort {
    match rng.gen_range(0..6) {
        0 => Sort::Arith,
        1 => Sort::Bool,
        _ => Sort::Cmd,
    }
}

pub fn while_paths(p: &Phrase) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for (i, c) in w::children(p).into_iter().enumerate() {
        out.extend(while_paths(c).into_iter().map(|mut q| {
            q.insert(0, i);
            q
        }));
    }
    out
}

pub fn while_at<'a>(p: &'a Phrase, path: &[usize]) -> &'a Phrase {
    path.iter().fold(p, |node, &i| w::children(node)[i])
}

pub fn replace_while(p: &Phrase, path: &[usize], with: Phrase) -> Phrase {
    let Some((&i, rest)) = path.split_first() else { return with };
    let sub = |c: &Phrase, j: usize| if j == i { replace_while(c, rest, with.clone()) } else { c.clone() };
    match p.kind() {
        PhraseKind::Arith { op, lhs, rhs } => w::arith(sub(lhs, 0), *op, sub(rhs, 1)),
        PhraseKind::Or(a, b) => w::or(sub(a, 0), sub(b, 1)),
        PhraseKind::Not(b) => w::not(sub(b, 0)),
        PhraseKind::Leq(a, b) => w::leq(sub(a, 0), sub(b, 1)),
        PhraseKind::Assign { target, value } => {
            let PhraseKind::Var(x) = target.kind() else { unreachable!() };
            match sub(target, 0).kind() {
                PhraseKind::Var(y) if i == 0 => w::assign(y, value.clone()),
                _ => w::assign(x, sub(value, 1)),
            }
        }
        PhraseKind::Seq(a, b) => w::seq(sub(a, 0), sub(b, 1)),
        PhraseKind::If { cond, then_br, else_br } => w::if_then_else(sub(cond, 0), sub(then_br, 1), sub(else_br, 2)),
        PhraseKind::While { cond, body } => w::while_do(sub(cond, 0), sub(body, 1)),
        _ => unreachable!("leaves have no children"),
    }
}

/// Replaces a random subphrase by a fresh one of the same sort.
pub fn mutate_while(rng: &mut Rand, p: &Phrase, fuel: u32) -> Phrase {
    let paths = while_paths(p);
    let path = paths.choose(rng).unwrap();
    let target = while_at(p, path);
    let replacement = match target.kind() {
        PhraseKind::Var(_) => w::var(WHILE_VARS.choose(rng).unwrap()),
        _ => gen_while(rng, w::sort(target), fuel),
    };
    replace_while(p, path, replacement)
}
