//! Incremental checking of the annotated factorial program.
//!
//! Builds the cache for the program, prints it, then re-checks an edited
//! version and shows which nodes were reused.
//!
//! ```text
//! cargo run --example check_incremental
//! ```

use increty::check::{check_f, FunCheck, FunEnv};
use increty::engine::{annotate, build_cache, incremental_type_traced, Step};
use increty::terms::fun::parse_typed;

const ORIGINAL: &str = "let fact = fun fact (n : int) -> (if n >= 1 then n * fact (n - 1) else n : int) in fact 7";
const EDITED: &str = "let fact = fun fact (n : int) -> (if n >= 3 then n * fact (n - 1) else n : int) in fact 7";

fn main() {
    let env = FunEnv::new();
    let f = parse_typed(ORIGINAL).expect("parses");
    println!("check_f: {}", check_f(&env, &f).expect("well typed"));

    let ast = annotate(&FunCheck, &env, &f);
    let mut cache = build_cache(&FunCheck, &ast, &env).expect("fully typed");
    println!("\ncache after the first run ({} entries):", cache.len());
    let mut rows: Vec<String> = cache.iter().map(|(t, e)| format!("  [{}] {t} : {}", e.env, e.result)).collect();
    rows.sort();
    rows.iter().for_each(|r| println!("{r}"));

    let edited = parse_typed(EDITED).expect("parses");
    let (typed, trace) = incremental_type_traced(&FunCheck, &env, &mut cache, &edited).expect("well typed");
    println!("\nre-check after `n >= 1` became `n >= 3`: {}", typed.result);
    println!("{}", typed.stats);
    for ev in trace {
        let step = match ev.step {
            Step::Hit => "reused ",
            Step::BaseCall => "checked",
            Step::Join => "joined ",
        };
        println!("  {step} {}", ev.term);
    }
    println!("cache now holds {} entries", cache.len());
}
