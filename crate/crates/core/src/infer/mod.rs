//! Type inference for unannotated FUN: algorithm W and its incremental
//! counterpart.
//!
//! Let-bound variables are monomorphic. Results pair a type with the
//! substitution the inference computed; the incremental instance keeps only
//! the part of that substitution acting on the environment's variables.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::engine::dump::{decode_env, encode_env, CacheCodec};
use crate::engine::{Cache, FreshSupply, LanguageInstance, TypeError, Typed};
use crate::terms::fun::{children, parse_untyped, Constant, ExprKind, FunType, UntypedExpr};
use crate::terms::{ParseError, Span, TypeEnv, VarSet};

pub mod subst;
pub mod types;
pub mod unify;

pub use subst::Subst;
pub use types::{AType, Namer, TyVar};
pub use unify::{unifiable, unify, UnifyError};

pub type InferEnv = TypeEnv<AType>;

/// A type together with the substitution that produced it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Inferred {
    pub ty: AType,
    pub subst: Subst,
}

impl Inferred {
    fn plain(ty: AType) -> Self {
        Inferred { ty, subst: Subst::identity() }
    }

    pub fn var_bound(&self) -> u64 {
        self.ty.var_bound().max(self.subst.var_bound())
    }

    fn show(&self, namer: &mut Namer) -> String {
        let ty = namer.show(&self.ty);
        format!("{ty} {}", self.subst.show(namer))
    }
}

impl fmt::Display for Inferred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.show(&mut Namer::new()))
    }
}

fn fail(e: &UntypedExpr, reason: impl Into<String>) -> TypeError {
    TypeError::new(e, e.span(), reason)
}

fn unify_at(e: &UntypedExpr, a: &AType, b: &AType) -> Result<Subst, TypeError> {
    unify(a, b).map_err(|err| {
        let mut n = Namer::new();
        let reason = match err {
            UnifyError::Clash(..) => format!("cannot unify {} with {}", n.show(a), n.show(b)),
            UnifyError::Occurs(v, t) => format!("infinite type: {} occurs in {}", n.name(v), n.show(&t)),
        };
        fail(e, reason)
    })
}

fn const_type(c: Constant) -> AType {
    (&c.fun_type()).into()
}

/// Algorithm W.
pub fn infer_w(env: &InferEnv, e: &UntypedExpr, fresh: &mut FreshSupply) -> Result<Inferred, TypeError> {
    match e.kind() {
        ExprKind::Const(c) => Ok(Inferred::plain(const_type(*c))),
        ExprKind::Var(x) => {
            env.get(x).cloned().map(Inferred::plain).ok_or_else(|| fail(e, format!("unbound variable `{x}`")))
        }
        ExprKind::Abs { fun, param, body, .. } => {
            let ax = AType::Var(fresh.fresh());
            let ae = AType::Var(fresh.fresh());
            let inner = env.extend(param, ax.clone()).extend(fun, AType::arrow(ax.clone(), ae.clone()));
            let Inferred { ty: te, subst: se } = infer_w(&inner, body, fresh)?;
            let s1 = unify_at(e, &te, &se.apply(&ae))?;
            let ty = AType::arrow(s1.apply(&se.apply(&ax)), s1.apply(&te));
            Ok(Inferred { ty, subst: s1.compose(&se) })
        }
        ExprKind::BinOp { op, lhs, rhs } => {
            let Inferred { ty: t1, subst: s1 } = infer_w(env, lhs, fresh)?;
            let Inferred { ty: t2, subst: s2 } = infer_w(&s1.apply_env(env), rhs, fresh)?;
            let (operand, result) = op.signature();
            let operand = AType::from(&operand);
            let s3 = unify_at(e, &s2.apply(&t1), &operand)?;
            let s4 = unify_at(e, &s3.apply(&t2), &operand)?;
            Ok(Inferred { ty: (&result).into(), subst: s4.compose(&s3.compose(&s2.compose(&s1))) })
        }
        ExprKind::App { func, arg } => {
            let Inferred { ty: t1, subst: s1 } = infer_w(env, func, fresh)?;
            let Inferred { ty: t2, subst: s2 } = infer_w(&s1.apply_env(env), arg, fresh)?;
            let a = AType::Var(fresh.fresh());
            let s3 = unify_at(e, &s2.apply(&t1), &AType::arrow(t2, a.clone()))?;
            Ok(Inferred { ty: s3.apply(&a), subst: s3.compose(&s2.compose(&s1)) })
        }
        ExprKind::If { cond, then_br, else_br } => {
            let Inferred { ty: t1, subst: s1 } = infer_w(env, cond, fresh)?;
            let env1 = s1.apply_env(env);
            let Inferred { ty: t2, subst: s2 } = infer_w(&env1, then_br, fresh)?;
            let Inferred { ty: t3, subst: s3 } = infer_w(&s2.apply_env(&env1), else_br, fresh)?;
            let s4 = unify_at(e, &s3.apply(&s2.apply(&t1)), &AType::Bool)?;
            let s5 = unify_at(e, &s4.apply(&t3), &s4.apply(&s3.apply(&t2)))?;
            let ty = s5.apply(&s4.apply(&t3));
            let subst = s5.compose(&s4.compose(&s3.compose(&s2.compose(&s1))));
            Ok(Inferred { ty, subst })
        }
        ExprKind::Let { var, bound, body } => {
            let Inferred { ty: t2, subst: s2 } = infer_w(env, bound, fresh)?;
            let inner = s2.apply_env(env).extend(var, t2);
            let Inferred { ty: t3, subst: s3 } = infer_w(&inner, body, fresh)?;
            Ok(Inferred { ty: t3, subst: s3.compose(&s2) })
        }
    }
}

/// Runs W with fresh variables chosen above every variable of `env`.
pub fn infer(env: &InferEnv, e: &UntypedExpr) -> Result<Inferred, TypeError> {
    let mut fresh = FreshSupply::starting_at(env_var_bound(env));
    infer_w(env, e, &mut fresh)
}

pub fn env_var_bound(env: &InferEnv) -> u64 {
    env.iter().map(|(_, t)| t.var_bound()).max().unwrap_or(0)
}

/// Type variables of the bindings for `fv`.
pub fn env_vars(env: &InferEnv, fv: &VarSet) -> BTreeSet<TyVar> {
    let mut out = BTreeSet::new();
    for y in fv {
        if let Some(t) = env.get(y) {
            t.collect_vars(&mut out);
        }
    }
    out
}

/// Each free variable's two bindings unify, checked one binding at a time.
pub fn compat_w(env: &InferEnv, cached: &InferEnv, fv: &VarSet) -> bool {
    env.agrees_on(cached, fv, unifiable)
}

/// A bijection between the type variables of two sides.
#[derive(Default, Debug, Clone)]
pub struct Renaming {
    fwd: HashMap<TyVar, TyVar>,
    bwd: HashMap<TyVar, TyVar>,
}

impl Renaming {
    pub fn new() -> Self {
        Self::default()
    }

    /// Renaming that must map each of `vars` to itself.
    pub fn fixing(vars: impl IntoIterator<Item = TyVar>) -> Self {
        let mut r = Self::new();
        for v in vars {
            r.fwd.insert(v, v);
            r.bwd.insert(v, v);
        }
        r
    }

    fn bind(&mut self, a: TyVar, b: TyVar) -> bool {
        match (self.fwd.get(&a), self.bwd.get(&b)) {
            (Some(x), Some(y)) => *x == b && *y == a,
            (None, None) => {
                self.fwd.insert(a, b);
                self.bwd.insert(b, a);
                true
            }
            _ => false,
        }
    }

    /// Extends the renaming so that it maps `a` onto `b`, if possible.
    pub fn matches(&mut self, a: &AType, b: &AType) -> bool {
        match (a, b) {
            (AType::Int, AType::Int) | (AType::Bool, AType::Bool) => true,
            (AType::Var(x), AType::Var(y)) => self.bind(*x, *y),
            (AType::Arrow(a1, b1), AType::Arrow(a2, b2)) => self.matches(a1, a2) && self.matches(b1, b2),
            _ => false,
        }
    }

    pub fn get(&self, v: TyVar) -> Option<TyVar> {
        self.fwd.get(&v).copied()
    }
}

/// Bijective renaming carrying `cached` onto `env` on the free variables.
pub fn variant_renaming(env: &InferEnv, cached: &InferEnv, fv: &VarSet) -> Option<Renaming> {
    let mut r = Renaming::new();
    env.agrees_on(cached, fv, |now, then| r.matches(then, now)).then_some(r)
}

/// The environments agree on the free variables up to renaming type variables.
pub fn compat_variant(env: &InferEnv, cached: &InferEnv, fv: &VarSet) -> bool {
    variant_renaming(env, cached, fv).is_some()
}

/// `actual` equals `expected` up to renaming the variables not in `env`,
/// and both substitutions agree on the variables of `env`.
pub fn same_up_to_renaming(env: &InferEnv, expected: &Inferred, actual: &Inferred) -> bool {
    let fixed = env.iter().fold(BTreeSet::new(), |mut acc, (_, t)| {
        t.collect_vars(&mut acc);
        acc
    });
    let mut r = Renaming::fixing(fixed.iter().copied());
    if !r.matches(&expected.ty, &actual.ty) {
        return false;
    }
    fixed.iter().all(|v| {
        let e = expected.subst.apply(&AType::Var(*v));
        let a = actual.subst.apply(&AType::Var(*v));
        r.matches(&e, &a)
    })
}

/// Unannotated FUN with algorithm W, as an instance of the incremental schema.
#[derive(Clone, Copy, Debug, Default)]
pub struct FunInfer;

/// Fresh variables for a function's parameter and body.
pub type AbsVars = Option<(TyVar, TyVar)>;

impl FunInfer {
    fn trim(&self, env: &InferEnv, t: &UntypedExpr, r: Inferred) -> Inferred {
        let keep = env_vars(env, t.free_vars());
        Inferred { ty: r.ty, subst: r.subst.restrict(&keep) }
    }
}

impl LanguageInstance for FunInfer {
    type Term = UntypedExpr;
    type Ty = AType;
    type Res = Inferred;
    type Frame = AbsVars;

    const NAME: &'static str = "fun-infer";

    fn free_vars<'t>(&self, t: &'t UntypedExpr) -> &'t VarSet {
        t.free_vars()
    }

    fn span(&self, t: &UntypedExpr) -> Option<Span> {
        t.span()
    }

    fn base(&self, env: &InferEnv, t: &UntypedExpr, fresh: &mut FreshSupply) -> Result<Inferred, TypeError> {
        infer_w(env, t, fresh)
    }

    fn subterms(&self, t: &UntypedExpr) -> Vec<UntypedExpr> {
        children(t).into_iter().cloned().collect()
    }

    fn open(&self, t: &UntypedExpr, _: &InferEnv, fresh: &mut FreshSupply) -> AbsVars {
        match t.kind() {
            ExprKind::Abs { .. } => Some((fresh.fresh(), fresh.fresh())),
            _ => None,
        }
    }

    fn tr(&self, t: &UntypedExpr, frame: &AbsVars, index: usize, env: &InferEnv, rs: &[Inferred]) -> Option<InferEnv> {
        match (t.kind(), index) {
            (ExprKind::Abs { fun, param, .. }, 0) => {
                let (ax, ae) = frame.expect("abstraction frame");
                let (ax, ae) = (AType::Var(ax), AType::Var(ae));
                Some(env.extend(param, ax.clone()).extend(fun, AType::arrow(ax, ae)))
            }
            (ExprKind::BinOp { .. } | ExprKind::App { .. } | ExprKind::If { .. }, 1) => {
                Some(rs[0].subst.apply_env(env))
            }
            (ExprKind::If { .. }, 2) => Some(rs[1].subst.apply_env(&rs[0].subst.apply_env(env))),
            (ExprKind::Let { var, .. }, 1) => Some(rs[0].subst.apply_env(env).extend(var, rs[0].ty.clone())),
            _ => None,
        }
    }

    fn checkjoin(
        &self,
        t: &UntypedExpr,
        frame: &AbsVars,
        env: &InferEnv,
        rs: &[Inferred],
        fresh: &mut FreshSupply,
    ) -> Result<Inferred, TypeError> {
        let joined = match t.kind() {
            ExprKind::Abs { .. } => {
                let (ax, ae) = frame.expect("abstraction frame");
                let (ax, ae) = (AType::Var(ax), AType::Var(ae));
                let (te, se) = (&rs[0].ty, &rs[0].subst);
                let s1 = unify_at(t, te, &se.apply(&ae))?;
                let ty = AType::arrow(s1.apply(&se.apply(&ax)), s1.apply(te));
                Inferred { ty, subst: s1.compose(se) }
            }
            ExprKind::BinOp { op, .. } => {
                let (operand, result) = op.signature();
                let operand = AType::from(&operand);
                let s3 = unify_at(t, &rs[1].subst.apply(&rs[0].ty), &operand)?;
                let s4 = unify_at(t, &s3.apply(&rs[1].ty), &operand)?;
                Inferred { ty: (&result).into(), subst: s4.compose(&s3.compose(&rs[1].subst.compose(&rs[0].subst))) }
            }
            ExprKind::App { .. } => {
                let a = AType::Var(fresh.fresh());
                let s3 = unify_at(t, &rs[1].subst.apply(&rs[0].ty), &AType::arrow(rs[1].ty.clone(), a.clone()))?;
                Inferred { ty: s3.apply(&a), subst: s3.compose(&rs[1].subst.compose(&rs[0].subst)) }
            }
            ExprKind::If { .. } => {
                let (s1, s2, s3) = (&rs[0].subst, &rs[1].subst, &rs[2].subst);
                let s4 = unify_at(t, &s3.apply(&s2.apply(&rs[0].ty)), &AType::Bool)?;
                let s5 = unify_at(t, &s4.apply(&rs[2].ty), &s4.apply(&s3.apply(&rs[1].ty)))?;
                let ty = s5.apply(&s4.apply(&rs[2].ty));
                Inferred { ty, subst: s5.compose(&s4.compose(&s3.compose(&s2.compose(s1)))) }
            }
            ExprKind::Let { .. } => Inferred { ty: rs[1].ty.clone(), subst: rs[1].subst.compose(&rs[0].subst) },
            ExprKind::Const(_) | ExprKind::Var(_) => unreachable!("leaves have no subterms"),
        };
        Ok(self.trim(env, t, joined))
    }

    fn compat(&self, env: &InferEnv, cached: &InferEnv, t: &UntypedExpr) -> bool {
        compat_variant(env, cached, t.free_vars())
    }

    /// Renames the cached result onto the current environment's variables;
    /// variables the environment does not mention become fresh.
    fn reuse(
        &self,
        t: &UntypedExpr,
        env: &InferEnv,
        cached_env: &InferEnv,
        cached: &Inferred,
        fresh: &mut FreshSupply,
    ) -> Inferred {
        let mut r = variant_renaming(env, cached_env, t.free_vars()).expect("reuse after a compatible lookup");
        let mut rename = |v: TyVar| match r.get(v) {
            Some(w) => w,
            None => {
                let w = fresh.fresh();
                r.bind(v, w);
                w
            }
        };
        let ty = subst::rename_type(&cached.ty, &mut rename);
        let subst = cached.subst.rename(&mut rename);
        Inferred { ty, subst }
    }

    fn fresh_floor(&self, env: &InferEnv, res: Option<&Inferred>) -> u64 {
        env_var_bound(env).max(res.map_or(0, Inferred::var_bound))
    }

    fn same_result(&self, env: &InferEnv, expected: &Inferred, actual: &Inferred) -> bool {
        same_up_to_renaming(env, expected, actual)
    }
}

impl CacheCodec for FunInfer {
    fn parse_term(&self, src: &str) -> Result<UntypedExpr, ParseError> {
        parse_untyped(src)
    }

    fn encode_entry(&self, env: &InferEnv, result: &Inferred) -> (String, String) {
        let mut namer = Namer::new();
        let env_text = encode_env(env, |t| namer.show(t));
        (env_text, result.show(&mut namer))
    }

    fn decode_entry(&self, env: &str, result: &str) -> Result<(InferEnv, Inferred), ParseError> {
        let mut names = HashMap::new();
        let env = decode_env(env, |t| AType::parse_with(t, &mut names))?;
        let bad = || ParseError { line: 1, col: 1, message: format!("malformed inference result `{result}`") };
        let (ty_text, subst_text) = result.rsplit_once(" [").ok_or_else(bad)?;
        let subst_text = subst_text.strip_suffix(']').ok_or_else(bad)?;
        let ty = AType::parse_with(ty_text, &mut names)?;
        let mut bindings = Vec::new();
        for b in subst_text.split(", ").filter(|b| !b.is_empty()) {
            let (v, t) = b.split_once(" := ").ok_or_else(bad)?;
            let AType::Var(v) = AType::parse_with(v, &mut names)? else { return Err(bad()) };
            bindings.push((v, AType::parse_with(t, &mut names)?));
        }
        let subst = Subst::normalized(bindings).map_err(|_| bad())?;
        Ok((env, Inferred { ty, subst }))
    }
}

/// Incremental inference.
pub fn infer_iw(env: &InferEnv, cache: &mut Cache<FunInfer>, e: &UntypedExpr) -> Result<Typed<Inferred>, TypeError> {
    crate::engine::incremental_type(&FunInfer, env, cache, e)
}

/// Whether an inferred type can be instantiated to a declared simple type.
pub fn agrees_with_declared(inferred: &AType, declared: &FunType) -> bool {
    unifiable(inferred, &declared.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{annotate, build_cache, verify_cache};
    use crate::terms::fun::parse_untyped as p;

    fn v(i: TyVar) -> AType {
        AType::Var(i)
    }

    fn env(bindings: &[(&str, AType)]) -> InferEnv {
        bindings.iter().cloned().collect()
    }

    #[test]
    fn identity_function() {
        let r = infer(&InferEnv::new(), &p("fun f x -> x").unwrap()).unwrap();
        assert_eq!(r.ty.to_string(), "'a -> 'a");
        assert!(r.subst.restrict(&BTreeSet::new()).is_identity());
    }

    #[test]
    fn conditional_binds_guard_variable() {
        let g = env(&[("x", v(0))]);
        let r = infer(&g, &p("if x then 1 else 2").unwrap()).unwrap();
        assert_eq!(r.ty, AType::Int);
        assert_eq!(r.subst.apply(&v(0)), AType::Bool);
    }

    #[test]
    fn branches_are_unified() {
        let g = env(&[("x", v(0)), ("y", v(1))]);
        let r = infer(&g, &p("if true then x else y + 1").unwrap()).unwrap();
        assert_eq!(r.ty, AType::Int);
        assert_eq!(r.subst.apply(&v(0)), AType::Int);
    }

    #[test]
    fn factorial_infers_int() {
        let src = "let fact = fun fact n -> if n >= 1 then n * fact (n - 1) else n in fact 7";
        assert_eq!(infer(&InferEnv::new(), &p(src).unwrap()).unwrap().ty, AType::Int);
    }

    #[test]
    fn self_application_fails_occurs_check() {
        let err = infer(&InferEnv::new(), &p("fun f x -> x x").unwrap()).unwrap_err();
        assert!(err.reason.contains("infinite type"), "{err}");
    }

    #[test]
    fn let_is_monomorphic() {
        let src = "let id = fun f x -> x in if id true then id 1 else 2";
        assert!(infer(&InferEnv::new(), &p(src).unwrap()).is_err());
    }

    #[test]
    fn literal_compat_examples() {
        let x = p("x").unwrap();
        assert!(compat_w(&env(&[("x", v(0))]), &env(&[("x", AType::Int)]), x.free_vars()));
        assert!(!compat_w(&env(&[("x", AType::Int)]), &env(&[("x", AType::Bool)]), x.free_vars()));
        let aa = AType::arrow(v(0), v(0));
        let ib = AType::arrow(AType::Int, AType::Bool);
        assert!(!compat_w(&env(&[("x", aa)]), &env(&[("x", ib)]), x.free_vars()));
    }

    #[test]
    fn variant_compat_requires_bijection() {
        let fv = p("x y").unwrap().free_vars().clone();
        let now = env(&[("x", v(5)), ("y", v(6))]);
        assert!(compat_variant(&now, &env(&[("x", v(0)), ("y", v(1))]), &fv));
        assert!(!compat_variant(&now, &env(&[("x", v(0)), ("y", v(0))]), &fv));
        assert!(!compat_variant(&now, &env(&[("x", v(0)), ("y", AType::Int)]), &fv));
    }

    #[test]
    fn empty_cache_matches_w_exactly() {
        let src = "let g = fun g x -> x + 1 in fun h y -> g (g y)";
        let e = p(src).unwrap();
        let mut cache = Cache::new();
        let iw = infer_iw(&InferEnv::new(), &mut cache, &e).unwrap().result;
        let w = infer(&InferEnv::new(), &e).unwrap();
        assert_eq!(iw.ty, w.ty);
        let built = build_cache(&FunInfer, &annotate(&FunInfer, &InferEnv::new(), &e), &InferEnv::new()).unwrap();
        assert!(built.same_entries(&cache));
        assert!(verify_cache(&FunInfer, &cache).is_empty());
    }

    #[test]
    fn reuse_renames_into_current_environment() {
        let e = p("x + 1").unwrap();
        let mut cache = Cache::new();
        infer_iw(&env(&[("x", v(0))]), &mut cache, &e).unwrap();
        let r = infer_iw(&env(&[("x", v(9))]), &mut cache, &e).unwrap();
        assert_eq!(r.stats.hits, 1);
        assert_eq!(r.result.subst.apply(&v(9)), AType::Int);
        assert!(infer_iw(&env(&[("x", AType::Bool)]), &mut cache, &e).is_err());
    }

    #[test]
    fn literal_compat_would_reuse_incoherently() {
        let e = p("x + 1").unwrap();
        let cached = env(&[("x", v(0))]);
        let now = env(&[("x", AType::Bool)]);
        assert!(compat_w(&now, &cached, e.free_vars()));
        assert!(infer(&now, &e).is_err());
        assert!(!compat_variant(&now, &cached, e.free_vars()));
    }

    #[test]
    fn codec_round_trip() {
        let g = env(&[("f", AType::arrow(v(4), v(7))), ("z", AType::Int)]);
        let r = Inferred { ty: AType::arrow(v(7), v(9)), subst: Subst::singleton(4, AType::arrow(v(9), AType::Bool)) };
        let (e, t) = FunInfer.encode_entry(&g, &r);
        assert_eq!(e, "f:'a -> 'b,z:int");
        assert_eq!(t, "'b -> 'c ['a := 'c -> bool]");
        let (g2, r2) = FunInfer.decode_entry(&e, &t).unwrap();
        assert_eq!(FunInfer.encode_entry(&g2, &r2), (e, t));
    }
}
