mod common;

use common::*;
use increty::check::{check_f, check_if, compat_f, FunCheck, FunEnv};
use increty::engine::dump::{dump, load};
use increty::engine::{annotate, build_cache, incremental_type, Cache};
use increty::infer::{unify, FunInfer, Subst};
use increty::security::{check_is, check_s, WhileSecurity};
use increty::terms::fun::{erase, parse_typed, parse_untyped, ExprKind, FunType, TypedExpr};
use increty::terms::while_lang::{self as w, parse_while, Phrase, PhraseKind};
use increty::terms::{name, Name, TypeEnv, VarSet};
use proptest::prelude::*;
use rand::Rng;
use std::collections::BTreeSet;

fn occurrences(e: &TypedExpr, bound: &mut Vec<Name>, out: &mut VarSet) {
    match e.kind() {
        ExprKind::Const(_) => {}
        ExprKind::Var(x) => {
            if !bound.contains(x) {
                out.insert(x.clone());
            }
        }
        ExprKind::Abs { fun, param, body, .. } => {
            bound.push(fun.clone());
            bound.push(param.clone());
            occurrences(body, bound, out);
            bound.truncate(bound.len() - 2);
        }
        ExprKind::BinOp { lhs: a, rhs: b, .. } | ExprKind::App { func: a, arg: b } => {
            occurrences(a, bound, out);
            occurrences(b, bound, out);
        }
        ExprKind::If { cond, then_br, else_br } => {
            for c in [cond, then_br, else_br] {
                occurrences(c, bound, out);
            }
        }
        ExprKind::Let { var, bound: b, body } => {
            occurrences(b, bound, out);
            bound.push(var.clone());
            occurrences(body, bound, out);
            bound.pop();
        }
    }
}

fn while_vars(p: &Phrase, out: &mut VarSet) {
    if let PhraseKind::Var(x) = p.kind() {
        out.insert(x.clone());
    }
    for c in w::children(p) {
        while_vars(c, out);
    }
}

fn program(seed: u64) -> TypedExpr {
    well_typed_fun(&mut rng(seed), 5)
}

fn phrase(seed: u64) -> Phrase {
    let mut r = rng(seed);
    let sort = random_sort(&mut r);
    gen_while(&mut r, sort, 5)
}

fn env_over(names: &[(u8, u8)]) -> TypeEnv<u8> {
    names.iter().map(|(k, v)| (name(&format!("v{k}")), *v)).collect()
}

fn var_set(ks: &[u8]) -> VarSet {
    ks.iter().map(|k| name(&format!("v{k}"))).collect()
}

proptest! {
    #[test]
    fn cached_free_vars_match_an_occurrence_walk(seed in any::<u64>()) {
        let e = program(seed);
        let mut fv = VarSet::new();
        occurrences(&e, &mut Vec::new(), &mut fv);
        prop_assert_eq!(e.free_vars(), &fv);

        let p = phrase(seed);
        let mut fv = VarSet::new();
        while_vars(&p, &mut fv);
        prop_assert_eq!(p.free_vars(), &fv);
    }

    #[test]
    fn printing_then_parsing_is_the_identity(seed in any::<u64>()) {
        let e = program(seed);
        prop_assert_eq!(parse_typed(&e.to_string()).unwrap(), e.clone());
        let u = erase(&e);
        prop_assert_eq!(parse_untyped(&u.to_string()).unwrap(), u);
        let p = phrase(seed);
        prop_assert_eq!(parse_while(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn restrict_matches_a_filter(
        bindings in prop::collection::vec((0u8..40, 0u8..4), 0..30),
        a in prop::collection::vec(0u8..40, 0..30),
        b in prop::collection::vec(0u8..40, 0..30),
    ) {
        let env = env_over(&bindings);
        let (va, vb) = (var_set(&a), var_set(&b));
        let r = env.restrict(&va);
        let expected: TypeEnv<u8> = env.iter().filter(|(k, _)| va.contains(*k)).map(|(k, v)| (k.clone(), *v)).collect();
        prop_assert_eq!(&r, &expected);
        prop_assert_eq!(&r.restrict(&va), &r);
        let both: VarSet = va.intersection(&vb).cloned().collect();
        prop_assert_eq!(r.restrict(&vb), env.restrict(&both));
    }

    #[test]
    fn agrees_on_matches_pointwise_lookup(
        left in prop::collection::vec((0u8..20, 0u8..2), 0..20),
        right in prop::collection::vec((0u8..20, 0u8..2), 0..20),
        vars in prop::collection::vec(0u8..20, 0..10),
    ) {
        let (l, r, vs) = (env_over(&left), env_over(&right), var_set(&vars));
        let naive = vs.iter().all(|v| matches!((l.get(v), r.get(v)), (Some(a), Some(b)) if a == b));
        prop_assert_eq!(l.agrees_on(&r, &vs, |a, b| a == b), naive);
    }

    #[test]
    fn unifiers_are_idempotent_and_compose_like_application(seed in any::<u64>()) {
        let mut r = rng(seed);
        let ty = |r: &mut Rand| {
            let src = ["int", "bool", "'a", "'b", "'a -> int", "'b -> 'a", "(int -> 'a) -> 'b", "'c -> 'c"];
            increty::infer::AType::parse(src[r.gen_range(0..src.len())]).unwrap()
        };
        let (a, b, t) = (ty(&mut r), ty(&mut r), ty(&mut r));
        if let Ok(th) = unify(&a, &b) {
            prop_assert_eq!(th.apply(&th.apply(&t)), th.apply(&t));
            let s = Subst::singleton(0, ty(&mut r));
            prop_assert_eq!(s.compose(&th).apply(&t), s.apply(&th.apply(&t)));
        }
    }

    #[test]
    fn compatible_environments_check_alike(seed in any::<u64>(), flips in prop::collection::vec(0usize..4, 0..4)) {
        let e = program(seed);
        let mut other = fun_env();
        let choices = [
            ("p", FunType::Bool),
            ("q", FunType::Int),
            ("r", FunType::Int),
            ("x", FunType::arrow(FunType::Int, FunType::Int)),
        ];
        for i in flips {
            let (x, t) = &choices[i];
            other.insert(name(x), t.clone());
        }
        let env: FunEnv = fun_env();
        if compat_f(&env, &other, e.free_vars()) {
            prop_assert_eq!(check_f(&env, &e), check_f(&other, &e));
        }
    }

    #[test]
    fn security_checking_is_coherent_after_edits(seed in any::<u64>()) {
        let mut r = rng(seed);
        let env = random_levels(&mut r);
        let p = phrase(seed);
        let q = mutate_while(&mut r, &p, 3);
        let mut cache = Cache::new();
        let _ = check_is(&env, &mut cache, &p);
        prop_assert_eq!(check_is(&env, &mut cache, &q).map(|t| t.result), check_s(&env, &q));
    }

    #[test]
    fn annotation_is_deterministic(seed in any::<u64>()) {
        let e = program(seed);
        let env = fun_env();
        let one = build_cache(&FunCheck, &annotate(&FunCheck, &env, &e), &env).unwrap();
        let two = build_cache(&FunCheck, &annotate(&FunCheck, &env, &e), &env).unwrap();
        prop_assert!(one.same_entries(&two));
    }

    #[test]
    fn rerunning_hits_the_root_and_caches_only_grow(seed in any::<u64>()) {
        let mut r = rng(seed);
        let e = program(seed);
        let q = mutate_fun(&mut r, &e, 3);
        let env = fun_env();
        let mut cache = Cache::new();
        check_if(&env, &mut cache, &e).unwrap();
        let before = cache.clone();
        let again = check_if(&env, &mut cache, &e).unwrap();
        prop_assert_eq!((again.stats.hits, again.stats.misses), (1, 0));
        prop_assert!(cache.same_entries(&before));
        let _ = check_if(&env, &mut cache, &q);
        prop_assert!(before.is_subset_of(&cache));
    }

    #[test]
    fn dumped_caches_load_back(seed in any::<u64>()) {
        let e = program(seed);
        let env = fun_env();
        let mut c = Cache::new();
        incremental_type(&FunCheck, &env, &mut c, &e).unwrap();
        let back = load(&FunCheck, &dump(&FunCheck, &c)).unwrap();
        prop_assert!(back.same_entries(&c));

        let u = erase(&e);
        let wenv = infer_env();
        let mut c = Cache::<FunInfer>::new();
        let _ = incremental_type(&FunInfer, &wenv, &mut c, &u);
        let text = dump(&FunInfer, &c);
        let back = load(&FunInfer, &text).unwrap();
        prop_assert_eq!(back.len(), c.len());
        prop_assert_eq!(back.fresh_counter(), c.fresh_counter());
        prop_assert_eq!(dump(&FunInfer, &back), text);

        let mut r = rng(seed);
        let senv = random_levels(&mut r);
        let p = phrase(seed);
        let mut c = Cache::<WhileSecurity>::new();
        let _ = incremental_type(&WhileSecurity, &senv, &mut c, &p);
        let back = load(&WhileSecurity, &dump(&WhileSecurity, &c)).unwrap();
        prop_assert!(back.same_entries(&c));
        let terms: BTreeSet<String> = back.iter().map(|(t, _)| t.to_string()).collect();
        prop_assert_eq!(terms.len(), c.iter().map(|(t, _)| t.to_string()).collect::<BTreeSet<_>>().len());
    }
}
