pub mod bench;
pub mod check;
pub mod cli;
pub mod engine;
pub mod infer;
pub mod security;
pub mod terms;
