//! Re-typing throughput after simulated edits of growing size.
//!
//! ```text
//! cargo run --release --example diff_bench -- [depth] [nvars]
//! ```

use increty::bench::{bench, emit_csv, BenchOptions, DiffTarget, SyntheticSpec};

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("numeric argument"));
    let depth = args.next().unwrap_or(12);
    let nvars = args.next().unwrap_or(512);
    let spec = SyntheticSpec { depth, nvars, seed: 1 };
    let mut targets = vec![DiffTarget::Unchanged];
    targets.extend((0..depth).map(DiffTarget::Depth));
    let records = bench(&[spec], &targets, BenchOptions::default()).expect("valid spec");
    print!("{}", emit_csv(&records));
}
