//! Information-flow typing of WHILE programs.
//!
//! `x` holds a secret and `y` is public. Each program is reported with its
//! principal security type or the flow that makes it insecure.
//!
//! ```text
//! cargo run --example security_levels
//! ```

use increty::engine::Cache;
use increty::security::{check_is, check_s, parse_levels};
use increty::terms::while_lang::parse_while;

fn main() {
    let env = parse_levels("x = H\ny = L\n").expect("valid levels");
    let programs = [
        "x := y",
        "y := x",
        "if x <= 0 then y := 1 else y := 0",
        "if y <= 0 then x := 1 else x := 0",
        "while x <= 10 do y := y + 1",
        "while x <= 10 do x := x + 1",
        "y := 1 ; x := y + x",
    ];
    let mut cache = Cache::new();
    for src in programs {
        let p = parse_while(src).expect("parses");
        let plain = check_s(&env, &p);
        let cached = check_is(&env, &mut cache, &p).map(|t| t.result);
        assert_eq!(plain, cached);
        match plain {
            Ok(ty) => println!("{src:<36} : {ty}"),
            Err(e) => println!("{src:<36} rejected: {}", e.reason),
        }
    }
    println!("\n{} cache entries shared across the programs", cache.len());
}
