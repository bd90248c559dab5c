//! Type checking annotated FUN, from scratch and incrementally.

use crate::engine::dump::{decode_env, encode_env, CacheCodec};
use crate::engine::{Cache, FreshSupply, LanguageInstance, TypeError, Typed};
use crate::terms::fun::{children, parse_typed, ExprKind, FunType, Op, TypedExpr};
use crate::terms::{ParseError, Span, TypeEnv, VarSet};

pub type FunEnv = TypeEnv<FunType>;

fn fail(e: &TypedExpr, reason: impl Into<String>) -> TypeError {
    TypeError::new(e, e.span(), reason)
}

/// The standard checker for annotated FUN.
pub fn check_f(env: &FunEnv, e: &TypedExpr) -> Result<FunType, TypeError> {
    match e.kind() {
        ExprKind::Const(c) => Ok(c.fun_type()),
        ExprKind::Var(x) => env.get(x).cloned().ok_or_else(|| fail(e, format!("unbound variable `{x}`"))),
        ExprKind::Abs { fun, param, param_ty, body, body_ty } => {
            let fun_ty = FunType::arrow(param_ty.clone(), body_ty.clone());
            let inner = env.extend(param, param_ty.clone()).extend(fun, fun_ty.clone());
            let actual = check_f(&inner, body)?;
            if &actual != body_ty {
                return Err(fail(e, format!("τ_body = τ_e violated: body has type {actual}, annotation says {body_ty}")));
            }
            Ok(fun_ty)
        }
        ExprKind::BinOp { op, lhs, rhs } => {
            let t1 = check_f(env, lhs)?;
            let t2 = check_f(env, rhs)?;
            operator_result(e, *op, &t1, &t2)
        }
        ExprKind::App { func, arg } => {
            let tf = check_f(env, func)?;
            let ta = check_f(env, arg)?;
            match tf {
                FunType::Arrow(dom, cod) if *dom == ta => Ok((*cod).clone()),
                FunType::Arrow(dom, _) => {
                    Err(fail(e, format!("τ_x = τ_2 violated: function expects {dom}, argument has type {ta}")))
                }
                other => Err(fail(e, format!("τ_1 = τ_x → τ_e violated: {other} is not a function type"))),
            }
        }
        ExprKind::If { cond, then_br, else_br } => {
            let tc = check_f(env, cond)?;
            let tt = check_f(env, then_br)?;
            let te = check_f(env, else_br)?;
            if tc != FunType::Bool {
                return Err(fail(e, format!("τ_1 = bool violated: condition has type {tc}")));
            }
            if tt != te {
                return Err(fail(e, format!("τ_2 = τ_3 violated: branches have types {tt} and {te}")));
            }
            Ok(tt)
        }
        ExprKind::Let { var, bound, body } => {
            let tb = check_f(env, bound)?;
            check_f(&env.extend(var, tb), body)
        }
    }
}

fn operator_result(e: &TypedExpr, op: Op, t1: &FunType, t2: &FunType) -> Result<FunType, TypeError> {
    let (operand, result) = op.signature();
    if t1 != t2 {
        return Err(fail(e, format!("τ_1 = τ_2 violated: operands of `{}` have types {t1} and {t2}", op.symbol())));
    }
    if *t1 != operand {
        return Err(fail(e, format!("`{}` expects {operand} operands, found {t1}", op.symbol())));
    }
    Ok(result)
}

/// Equal types on every free variable, both environments defined there.
pub fn compat_f(env: &FunEnv, cached: &FunEnv, fv: &VarSet) -> bool {
    env.agrees_on(cached, fv, |a, b| a == b)
}

/// Annotated FUN as an instance of the incremental schema.
#[derive(Clone, Copy, Debug, Default)]
pub struct FunCheck;

impl LanguageInstance for FunCheck {
    type Term = TypedExpr;
    type Ty = FunType;
    type Res = FunType;
    type Frame = ();

    const NAME: &'static str = "fun-check";

    fn free_vars<'t>(&self, t: &'t TypedExpr) -> &'t VarSet {
        t.free_vars()
    }

    fn span(&self, t: &TypedExpr) -> Option<Span> {
        t.span()
    }

    fn base(&self, env: &FunEnv, t: &TypedExpr, _: &mut FreshSupply) -> Result<FunType, TypeError> {
        check_f(env, t)
    }

    fn subterms(&self, t: &TypedExpr) -> Vec<TypedExpr> {
        children(t).into_iter().cloned().collect()
    }

    fn open(&self, _: &TypedExpr, _: &FunEnv, _: &mut FreshSupply) {}

    fn tr(&self, t: &TypedExpr, _: &(), index: usize, env: &FunEnv, earlier: &[FunType]) -> Option<FunEnv> {
        match (t.kind(), index) {
            (ExprKind::Abs { fun, param, param_ty, body_ty, .. }, 0) => {
                let fun_ty = FunType::arrow(param_ty.clone(), body_ty.clone());
                Some(env.extend(param, param_ty.clone()).extend(fun, fun_ty))
            }
            (ExprKind::Let { var, .. }, 1) => Some(env.extend(var, earlier[0].clone())),
            _ => None,
        }
    }

    fn checkjoin(
        &self,
        t: &TypedExpr,
        _: &(),
        _: &FunEnv,
        rs: &[FunType],
        _: &mut FreshSupply,
    ) -> Result<FunType, TypeError> {
        match t.kind() {
            ExprKind::Abs { param_ty, body_ty, .. } => {
                if &rs[0] != body_ty {
                    return Err(fail(t, format!("τ_body = τ_e violated: body has type {}, annotation says {body_ty}", rs[0])));
                }
                Ok(FunType::arrow(param_ty.clone(), body_ty.clone()))
            }
            ExprKind::BinOp { op, .. } => operator_result(t, *op, &rs[0], &rs[1]),
            ExprKind::App { .. } => match &rs[0] {
                FunType::Arrow(dom, cod) if **dom == rs[1] => Ok((**cod).clone()),
                FunType::Arrow(dom, _) => {
                    Err(fail(t, format!("τ_x = τ_2 violated: function expects {dom}, argument has type {}", rs[1])))
                }
                other => Err(fail(t, format!("τ_1 = τ_x → τ_e violated: {other} is not a function type"))),
            },
            ExprKind::If { .. } => {
                if rs[0] != FunType::Bool {
                    return Err(fail(t, format!("τ_1 = bool violated: condition has type {}", rs[0])));
                }
                if rs[1] != rs[2] {
                    return Err(fail(t, format!("τ_2 = τ_3 violated: branches have types {} and {}", rs[1], rs[2])));
                }
                Ok(rs[1].clone())
            }
            ExprKind::Let { .. } => Ok(rs[1].clone()),
            ExprKind::Const(_) | ExprKind::Var(_) => unreachable!("leaves have no subterms"),
        }
    }

    fn compat(&self, env: &FunEnv, cached: &FunEnv, t: &TypedExpr) -> bool {
        compat_f(env, cached, t.free_vars())
    }
}

impl CacheCodec for FunCheck {
    fn parse_term(&self, src: &str) -> Result<TypedExpr, ParseError> {
        parse_typed(src)
    }

    fn encode_entry(&self, env: &FunEnv, result: &FunType) -> (String, String) {
        (encode_env(env, FunType::to_string), result.to_string())
    }

    fn decode_entry(&self, env: &str, result: &str) -> Result<(FunEnv, FunType), ParseError> {
        Ok((decode_env(env, FunType::parse)?, FunType::parse(result)?))
    }
}

/// Incremental checking of annotated FUN.
pub fn check_if(env: &FunEnv, cache: &mut Cache<FunCheck>, e: &TypedExpr) -> Result<Typed<FunType>, TypeError> {
    crate::engine::incremental_type(&FunCheck, env, cache, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{annotate, build_cache, incremental_type, verify_cache};
    use crate::terms::fun::{abs, app, binop, int, var};

    fn env(bindings: &[(&str, FunType)]) -> FunEnv {
        bindings.iter().cloned().collect()
    }

    fn int_to_int() -> FunType {
        FunType::arrow(FunType::Int, FunType::Int)
    }

    #[test]
    fn applies_a_known_function() {
        let e = app(var("fact"), int(7));
        assert_eq!(check_f(&env(&[("fact", int_to_int())]), &e), Ok(FunType::Int));
    }

    #[test]
    fn condition_must_be_boolean() {
        let e = parse_typed("if 1 then 1 else 2").unwrap();
        let err = check_f(&FunEnv::new(), &e).unwrap_err();
        assert!(err.reason.contains("τ_1 = bool"), "{err}");
        assert_eq!(err.node, "if 1 then 1 else 2");
    }

    #[test]
    fn comparisons_yield_booleans() {
        let e = parse_typed("n >= 3").unwrap();
        assert_eq!(check_f(&env(&[("n", FunType::Int)]), &e), Ok(FunType::Bool));
        let e = parse_typed("true = false").unwrap();
        assert!(check_f(&FunEnv::new(), &e).is_err());
    }

    #[test]
    fn recursive_function_sees_itself() {
        let e = parse_typed("fun fact (n : int) -> (if n <= 1 then 1 else n * fact (n - 1) : int)").unwrap();
        assert_eq!(check_f(&FunEnv::new(), &e), Ok(int_to_int()));
    }

    #[test]
    fn function_name_shadows_parameter() {
        let e = abs("f", "f", FunType::Int, var("f"), FunType::Int);
        let err = check_f(&FunEnv::new(), &e).unwrap_err();
        assert!(err.reason.contains("body has type int -> int"), "{err}");
    }

    #[test]
    fn compat_examples() {
        let n = var::<FunType>("n");
        assert!(compat_f(&env(&[("n", FunType::Int), ("z", FunType::Bool)]), &env(&[("n", FunType::Int)]), n.free_vars()));
        assert!(!compat_f(&env(&[("n", FunType::Bool)]), &env(&[("n", FunType::Int)]), n.free_vars()));
        assert!(!compat_f(&FunEnv::new(), &env(&[("n", FunType::Int)]), n.free_vars()));
    }

    #[test]
    fn failed_run_keeps_partial_cache() {
        let e = binop(int(1), Op::Add, crate::terms::fun::boolean(true));
        let mut cache = Cache::new();
        assert!(check_if(&FunEnv::new(), &mut cache, &e).is_err());
        assert!(cache.contains(&int(1), &FunEnv::new(), &FunType::Int));
        assert!(cache.entries_for(&e).is_empty());
    }

    #[test]
    fn annotate_marks_failing_root_only() {
        let e = binop(int(1), Op::Add, crate::terms::fun::boolean(true));
        let a = annotate(&FunCheck, &FunEnv::new(), &e);
        assert_eq!(a.result, None);
        assert_eq!(a.children[0].result, Some(FunType::Int));
        assert_eq!(a.children[1].result, Some(FunType::Bool));
    }

    #[test]
    fn forged_entry_is_reported() {
        let mut cache = Cache::<FunCheck>::new();
        cache.insert(int(1), FunEnv::new(), FunType::Bool);
        assert_eq!(verify_cache(&FunCheck, &cache).len(), 1);
    }

    #[test]
    fn variable_entry_is_restricted() {
        let x = var::<FunType>("x");
        let g = env(&[("x", FunType::Int), ("y", FunType::Bool)]);
        let cache = build_cache(&FunCheck, &annotate(&FunCheck, &g, &x), &g).unwrap();
        assert_eq!(cache.len(), 1);
        assert!(cache.contains(&x, &env(&[("x", FunType::Int)]), &FunType::Int));
    }

    #[test]
    fn second_run_hits_at_root() {
        let e = parse_typed("let y = x + 1 in if y <= 2 then y else x").unwrap();
        let g = env(&[("x", FunType::Int)]);
        let mut cache = Cache::new();
        let first = incremental_type(&FunCheck, &g, &mut cache, &e).unwrap();
        assert_eq!(first.result, FunType::Int);
        let before = cache.clone();
        let second = incremental_type(&FunCheck, &g, &mut cache, &e).unwrap();
        assert_eq!((second.stats.hits, second.stats.misses, second.stats.base_invocations), (1, 0, 0));
        assert!(cache.same_entries(&before));
        assert!(cache.contains(&var("y"), &env(&[("y", FunType::Int)]), &FunType::Int));
        assert!(!cache.entries_for(&var("x")).is_empty());
    }
}
