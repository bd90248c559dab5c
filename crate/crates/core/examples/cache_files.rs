//! Saving, loading and auditing caches.
//!
//! A cache is written in a line-oriented text format, read back, and checked
//! entry by entry against the base algorithm. A hand-edited entry is then
//! caught by the audit.
//!
//! ```text
//! cargo run --example cache_files
//! ```

use increty::check::{check_if, FunCheck, FunEnv};
use increty::engine::dump::{dump, load};
use increty::engine::{verify_cache, Cache};
use increty::terms::fun::parse_typed;

fn main() {
    let program = parse_typed("let double = fun d (x : int) -> (x + x : int) in double 21 >= 40").unwrap();
    let mut cache = Cache::new();
    check_if(&FunEnv::new(), &mut cache, &program).expect("well typed");

    let text = dump(&FunCheck, &cache);
    print!("{text}");

    let loaded = load(&FunCheck, &text).expect("round trips");
    assert!(loaded.same_entries(&cache));
    println!("\nloaded {} entries, violations: {}", loaded.len(), verify_cache(&FunCheck, &loaded).len());

    let forged = text.replacen("\tx + x\tx:int\tint", "\tx + x\tx:int\tbool", 1);
    let bad = load(&FunCheck, &forged).expect("still well formed");
    for v in verify_cache(&FunCheck, &bad) {
        println!("forged entry caught: {v}");
    }

    let rejected = text.replacen("fun-check", "while-sec", 1);
    println!("loading as the wrong instance: {}", load(&FunCheck, &rejected).unwrap_err());
}
