//! The `increty` command-line driver.
//!
//! Exit status is 0 on success, 1 when the input is ill-typed (or a cache
//! fails verification) and 2 for usage, parse and I/O problems.

use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench::{bench, emit_csv, BenchOptions, BenchRecord, DiffTarget, SyntheticSpec};
use crate::check::{FunCheck, FunEnv};
use crate::engine::dump::{dump, load, read_header, CacheCodec};
use crate::engine::{incremental_type_traced, verify_cache, Cache, LanguageInstance, Step};
use crate::infer::{FunInfer, InferEnv, Inferred};
use crate::security::{parse_levels, require_levels, SecEnv, WhileSecurity};
use crate::terms::fun::{parse_typed, parse_untyped};
use crate::terms::TypeEnv;
use crate::terms::while_lang::parse_while;

#[derive(Parser, Debug)]
#[command(name = "increty", version, about = "Incremental type checking, type inference and security typing")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format. `bench` defaults to csv, everything else to human.
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Type-check an annotated FUN program.
    Check(TypingArgs),
    /// Infer the type of an unannotated FUN program.
    Infer(TypingArgs),
    /// Compute the principal security type of a WHILE phrase.
    Secure {
        #[command(flatten)]
        typing: TypingArgs,
        /// File of `name=L|H` lines.
        #[arg(long)]
        levels: PathBuf,
    },
    /// Re-type a program against a saved cache and report reuse.
    Diff {
        /// Cache written by an earlier run; its header selects the language.
        cache: PathBuf,
        file: PathBuf,
        #[arg(long)]
        cache_out: Option<PathBuf>,
        /// Required for WHILE caches.
        #[arg(long)]
        levels: Option<PathBuf>,
        /// Also print which nodes were hits, base calls and joins.
        #[arg(long)]
        stats: bool,
    },
    /// Measure standard and incremental re-typing throughput.
    Bench(BenchArgs),
    /// Re-derive every entry of a saved cache with the base algorithm.
    CacheVerify { cache: PathBuf },
}

#[derive(Args, Debug)]
struct TypingArgs {
    file: PathBuf,
    #[arg(long)]
    cache_in: Option<PathBuf>,
    #[arg(long)]
    cache_out: Option<PathBuf>,
    /// Print engine statistics and the per-node trace.
    #[arg(long)]
    stats: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 12)]
    depth: usize,
    #[arg(long, default_value_t = 512)]
    vars: usize,
    /// Comma-separated depths of the simulated edit; all depths when omitted.
    #[arg(long, value_delimiter = ',')]
    diff_depths: Option<Vec<usize>>,
    #[arg(long, default_value_t = 21)]
    trials: usize,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

enum Failure {
    /// Ill-typed input or a failed verification.
    Rejected(String),
    Usage(String),
}

impl Failure {
    fn usage(e: impl Display) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(Failure::Rejected(msg)) => {
            let _ = writeln!(err, "{msg}");
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Outcome {
    let format = cli.format;
    let human = format.unwrap_or(Format::Human);
    match cli.command {
        Command::Check(a) => {
            let term = parse_typed(&read(&a.file)?).map_err(|e| located(&a.file, e))?;
            let job = Job { cache_in: a.cache_in.as_deref(), cache_out: a.cache_out.as_deref(), stats: a.stats, trace: a.stats };
            retype(&FunCheck, &FunEnv::new(), &term, job, human, out)
        }
        Command::Infer(a) => {
            let term = parse_untyped(&read(&a.file)?).map_err(|e| located(&a.file, e))?;
            let job = Job { cache_in: a.cache_in.as_deref(), cache_out: a.cache_out.as_deref(), stats: a.stats, trace: a.stats };
            retype(&FunInfer, &InferEnv::new(), &term, job, human, out)
        }
        Command::Secure { typing: a, levels } => {
            let (env, term) = security_input(&levels, &a.file)?;
            let job = Job { cache_in: a.cache_in.as_deref(), cache_out: a.cache_out.as_deref(), stats: a.stats, trace: a.stats };
            retype(&WhileSecurity, &env, &term, job, human, out)
        }
        Command::Diff { cache, file, cache_out, levels, stats } => {
            let text = read(&cache)?;
            let (instance, _) = read_header(&text).map_err(|e| located(&cache, e))?;
            let job = Job { cache_in: Some(&cache), cache_out: cache_out.as_deref(), stats: true, trace: stats };
            match instance {
                FunCheck::NAME => {
                    let term = parse_typed(&read(&file)?).map_err(|e| located(&file, e))?;
                    retype(&FunCheck, &FunEnv::new(), &term, job, human, out)
                }
                FunInfer::NAME => {
                    let term = parse_untyped(&read(&file)?).map_err(|e| located(&file, e))?;
                    retype(&FunInfer, &InferEnv::new(), &term, job, human, out)
                }
                WhileSecurity::NAME => {
                    let levels =
                        levels.ok_or_else(|| Failure::usage("a WHILE cache needs --levels"))?;
                    let (env, term) = security_input(&levels, &file)?;
                    retype(&WhileSecurity, &env, &term, job, human, out)
                }
                other => Err(Failure::Usage(format!("{}: unknown cache instance `{other}`", cache.display()))),
            }
        }
        Command::Bench(a) => run_bench(a, format.unwrap_or(Format::Csv), out),
        Command::CacheVerify { cache } => {
            let text = read(&cache)?;
            let (instance, _) = read_header(&text).map_err(|e| located(&cache, e))?;
            match instance {
                FunCheck::NAME => verify(&FunCheck, &cache, &text, out),
                FunInfer::NAME => verify(&FunInfer, &cache, &text, out),
                WhileSecurity::NAME => verify(&WhileSecurity, &cache, &text, out),
                other => Err(Failure::Usage(format!("{}: unknown cache instance `{other}`", cache.display()))),
            }
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn located(path: &Path, e: impl Display) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

fn io(e: std::io::Error) -> Failure {
    Failure::usage(e)
}

fn security_input(levels: &Path, file: &Path) -> Result<(SecEnv, crate::terms::while_lang::Phrase), Failure> {
    let env = parse_levels(&read(levels)?).map_err(|e| located(levels, e))?;
    let term = parse_while(&read(file)?).map_err(|e| located(file, e))?;
    require_levels(&env, &term).map_err(|e| located(levels, e))?;
    Ok((env, term))
}

struct Job<'a> {
    cache_in: Option<&'a Path>,
    cache_out: Option<&'a Path>,
    stats: bool,
    trace: bool,
}

/// How a command prints a typing result.
trait Report: CacheCodec {
    fn report(&self, result: &Self::Res) -> String {
        result.to_string()
    }
}

impl Report for FunCheck {}

impl Report for WhileSecurity {}

impl Report for FunInfer {
    fn report(&self, result: &Inferred) -> String {
        result.ty.to_string()
    }
}

fn retype<L: Report>(
    lang: &L,
    env: &TypeEnv<L::Ty>,
    term: &L::Term,
    job: Job<'_>,
    format: Format,
    out: &mut dyn Write,
) -> Outcome {
    let mut cache = match job.cache_in {
        Some(path) => load(lang, &read(path)?).map_err(|e| located(path, e))?,
        None => Cache::new(),
    };
    let (typed, trace) =
        incremental_type_traced(lang, env, &mut cache, term).map_err(|e| Failure::Rejected(e.to_string()))?;
    if let Some(path) = job.cache_out {
        write(path, &dump(lang, &cache))?;
    }
    let s = &typed.stats;
    match format {
        Format::Human => {
            writeln!(out, "{}", lang.report(&typed.result)).map_err(io)?;
            if job.stats {
                writeln!(out, "{s}").map_err(io)?;
            }
            if job.trace {
                for ev in &trace {
                    let step = match ev.step {
                        Step::Hit => "hit",
                        Step::BaseCall => "base",
                        Step::Join => "join",
                    };
                    writeln!(out, "{step:<4}  {:<12}  {}", path_label(&ev.path), ev.term).map_err(io)?;
                }
            }
        }
        Format::Csv => {
            writeln!(out, "result,nodes,hits,misses,base_calls,joins").map_err(io)?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                csv_field(&lang.report(&typed.result)),
                s.nodes_visited,
                s.hits,
                s.misses,
                s.base_invocations,
                s.joins
            )
            .map_err(io)?;
        }
    }
    Ok(())
}

fn path_label(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        path.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn verify<L: CacheCodec>(lang: &L, path: &Path, text: &str, out: &mut dyn Write) -> Outcome {
    let cache = load(lang, text).map_err(|e| located(path, e))?;
    let violations = verify_cache(lang, &cache);
    if violations.is_empty() {
        writeln!(out, "ok: {} entries verified", cache.len()).map_err(io)?;
        return Ok(());
    }
    let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    Err(Failure::Rejected(format!("{} of {} entries are wrong:\n{}", lines.len(), cache.len(), lines.join("\n"))))
}

fn run_bench(a: BenchArgs, format: Format, out: &mut dyn Write) -> Outcome {
    let spec = SyntheticSpec { depth: a.depth, nvars: a.vars, seed: a.seed };
    let depths = a.diff_depths.unwrap_or_else(|| (0..a.depth).collect());
    let mut targets = vec![DiffTarget::Unchanged];
    targets.extend(depths.into_iter().map(DiffTarget::Depth));
    let opts = BenchOptions { trials: a.trials, warmup: a.warmup };
    let records = bench(&[spec], &targets, opts).map_err(Failure::usage)?;
    match format {
        Format::Csv => write!(out, "{}", emit_csv(&records)).map_err(io),
        Format::Human => write_table(&records, out),
    }
}

fn write_table(records: &[BenchRecord], out: &mut dyn Write) -> Outcome {
    writeln!(out, "{:>5} {:>6} {:>10}  {:<17} {:>14} {:>6}", "depth", "vars", "diff", "mode", "retypings/s", "trials")
        .map_err(io)?;
    for r in records {
        writeln!(
            out,
            "{:>5} {:>6} {:>10}  {:<17} {:>14.1} {:>6}",
            r.depth,
            r.nvars,
            r.diff_nodes,
            r.mode.as_str(),
            r.retypings_per_sec,
            r.trials
        )
        .map_err(io)?;
    }
    Ok(())
}
