//! Type inference with a cache.
//!
//! Infers the type of a few unannotated programs, then re-infers an edited
//! program against the cache of the first version. Cached results come back
//! with their type variables renamed apart, so the answer is the same as a
//! fresh run up to renaming.
//!
//! ```text
//! cargo run --example infer_incremental
//! ```

use increty::engine::Cache;
use increty::infer::{infer, infer_iw, unify, AType, InferEnv, Namer};
use increty::terms::fun::parse_untyped;

fn main() {
    let env = InferEnv::new();
    for src in [
        "fun id x -> x",
        "fun compose f -> fun c g -> fun d x -> f (g x)",
        "let fact = fun fact n -> if n >= 1 then n * fact (n - 1) else 1 in fact",
        "fun loop x -> x x",
    ] {
        let e = parse_untyped(src).expect("parses");
        match infer(&env, &e) {
            Ok(r) => println!("{src}\n  : {}", r.ty),
            Err(err) => println!("{src}\n  rejected: {}", err.reason),
        }
    }

    let v1 = parse_untyped("let twice = fun t f -> fun u x -> f (f x) in twice (fun inc n -> n + 1)").unwrap();
    let v2 = parse_untyped("let twice = fun t f -> fun u x -> f (f x) in twice (fun dbl n -> n * 2)").unwrap();
    let mut cache = Cache::new();
    let first = infer_iw(&env, &mut cache, &v1).expect("well typed");
    println!("\nfirst version : {}   ({})", first.result.ty, first.stats);
    let second = infer_iw(&env, &mut cache, &v2).expect("well typed");
    println!("edited version: {}   ({})", second.result.ty, second.stats);

    let a = AType::arrow(AType::Var(0), AType::Var(1));
    let b = AType::arrow(AType::Int, AType::arrow(AType::Var(2), AType::Bool));
    let s = unify(&a, &b).expect("unifiable");
    let mut names = Namer::new();
    let (a, b, s) = (names.show(&a), names.show(&b), s.show(&mut names));
    println!("\nunify({a}, {b}) = {s}");
}
