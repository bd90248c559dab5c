//! Synthetic workloads and throughput measurement for re-typing after edits.
//!
//! Programs are complete binary trees of `+` whose leaves are integer
//! variables. An edit is simulated by invalidating the cache entries of the
//! rightmost subtree at some depth together with the path leading to it.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::check::{check_f, FunCheck, FunEnv};
use crate::engine::{annotate, incremental_type, AnnotatedAst, Cache, LanguageInstance};
use crate::terms::fun::{ExprKind, FunType, Op, TypedExpr};
use crate::terms::{name, Node, TypeEnv};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BenchError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("need between 1 and {leaves} variables for {leaves} leaves, got {nvars}")]
    VarCount { nvars: usize, leaves: usize },
    #[error("target depth {target} is outside a tree of depth {depth}")]
    TargetDepth { target: usize, depth: usize },
    #[error("synthetic program failed to type: {0}")]
    Untyped(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SyntheticSpec {
    pub depth: usize,
    pub nvars: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn leaves(&self) -> usize {
        1usize << self.depth.saturating_sub(1)
    }

    pub fn nodes(&self) -> usize {
        (1usize << self.depth) - 1
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.depth == 0 {
            return Err(BenchError::ZeroDepth);
        }
        if self.nvars == 0 || self.nvars > self.leaves() {
            return Err(BenchError::VarCount { nvars: self.nvars, leaves: self.leaves() });
        }
        Ok(())
    }
}

/// Structurally equal subtrees are built once and shared.
#[derive(Default)]
struct Interner {
    nodes: HashMap<TypedExpr, TypedExpr>,
}

impl Interner {
    fn intern(&mut self, kind: ExprKind<FunType>) -> TypedExpr {
        let node = Node::new(kind);
        self.nodes.entry(node.clone()).or_insert(node).clone()
    }
}

/// A complete tree of `depth` levels with leaves `v0 … v(nvars-1)`, and the
/// environment typing every variable as `int`. Each variable is used at
/// least once; the rest of the leaves are drawn at random, and the leaf order
/// is shuffled.
pub fn gen_synthetic(spec: SyntheticSpec) -> Result<(TypedExpr, FunEnv), BenchError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let leaves = spec.leaves();
    let mut ids: Vec<usize> = (0..leaves).map(|i| if i < spec.nvars { i } else { rng.gen_range(0..spec.nvars) }).collect();
    ids.shuffle(&mut rng);

    let names: Vec<_> = (0..spec.nvars).map(|i| name(&format!("v{i}"))).collect();
    let mut interner = Interner::default();
    let mut level: Vec<TypedExpr> = ids.iter().map(|&i| interner.intern(ExprKind::Var(names[i].clone()))).collect();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| interner.intern(ExprKind::BinOp { op: Op::Add, lhs: pair[0].clone(), rhs: pair[1].clone() }))
            .collect();
    }
    let env = names.into_iter().map(|x| (x, FunType::Int)).collect();
    Ok((level.pop().expect("at least one leaf"), env))
}

/// Cache entries to drop for one simulated edit.
pub struct Invalidation<L: LanguageInstance> {
    pub removed: Vec<(L::Term, TypeEnv<L::Ty>)>,
    /// Invalidated positions: the path above the edited subtree plus the
    /// subtree's nodes.
    pub diff_nodes: usize,
}

impl<L: LanguageInstance> Invalidation<L> {
    pub fn apply(&self, cache: &mut Cache<L>) {
        for (t, env) in &self.removed {
            cache.remove(t, env);
        }
    }
}

impl<L: LanguageInstance> Clone for Invalidation<L> {
    fn clone(&self) -> Self {
        Invalidation { removed: self.removed.clone(), diff_nodes: self.diff_nodes }
    }
}

fn tree_depth<L: LanguageInstance>(a: &AnnotatedAst<L>) -> usize {
    1 + a.children.iter().map(tree_depth).max().unwrap_or(0)
}

/// Plans the invalidation of the rightmost subtree at `target_depth` (reached
/// by following last children from the root) and of the path above it.
///
/// An entry is removed only if no position outside the invalidated region
/// has the same term and environment.
pub fn plan_invalidation<L: LanguageInstance>(
    lang: &L,
    ast: &AnnotatedAst<L>,
    env: &TypeEnv<L::Ty>,
    target_depth: usize,
) -> Result<Invalidation<L>, BenchError> {
    let depth = tree_depth(ast);
    if target_depth >= depth {
        return Err(BenchError::TargetDepth { target: target_depth, depth });
    }
    let mut invalid = Vec::new();
    let mut surviving: Vec<(L::Term, TypeEnv<L::Ty>)> = Vec::new();
    // (node, env, on the path, inside the edited subtree, depth)
    let mut work = vec![(ast, env.clone(), true, target_depth == 0, 0usize)];
    while let Some((node, env, on_path, inside, d)) = work.pop() {
        let key = (node.term.clone(), env.restrict(&node.fv));
        if inside || on_path {
            invalid.push(key);
        } else {
            surviving.push(key);
        }
        let mut earlier = Vec::new();
        let last = node.children.len().saturating_sub(1);
        for (i, child) in node.children.iter().enumerate() {
            let frame = node.frame.as_ref().expect("inner nodes carry a frame");
            let child_env = lang.tr(&node.term, frame, i, &env, &earlier).unwrap_or_else(|| env.clone());
            let r = child.result.clone().ok_or_else(|| BenchError::Untyped(child.term.to_string()))?;
            earlier.push(r);
            let child_on_path = on_path && !inside && i == last && d + 1 < target_depth;
            let child_inside = inside || (on_path && i == last && d + 1 == target_depth);
            work.push((child, child_env, child_on_path, child_inside, d + 1));
        }
    }
    let diff_nodes = invalid.len();
    let invalid_terms: HashSet<&L::Term> = invalid.iter().map(|(t, _)| t).collect();
    let kept: HashSet<&(L::Term, TypeEnv<L::Ty>)> = surviving.iter().filter(|(t, _)| invalid_terms.contains(t)).collect();
    let mut seen = HashSet::new();
    let removed = invalid.iter().filter(|key| !kept.contains(key) && seen.insert(*key)).cloned().collect();
    Ok(Invalidation { removed, diff_nodes })
}

/// Returns a copy of `cache` with the edit's entries removed, and the number
/// of invalidated positions.
pub fn invalidate_diff<L: LanguageInstance>(
    lang: &L,
    cache: &Cache<L>,
    ast: &AnnotatedAst<L>,
    env: &TypeEnv<L::Ty>,
    target_depth: usize,
) -> Result<(Cache<L>, usize), BenchError> {
    let plan = plan_invalidation(lang, ast, env, target_depth)?;
    let mut out = cache.clone();
    plan.apply(&mut out);
    Ok((out, plan.diff_nodes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// The original checker on the whole program.
    Standard,
    /// Incremental re-typing against a warm cache.
    Incremental,
    /// Incremental typing starting from an empty cache.
    IncrementalFirstPass,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Incremental => "incremental",
            Mode::IncrementalFirstPass => "incremental-first",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        [Mode::Standard, Mode::Incremental, Mode::IncrementalFirstPass]
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

/// Which edit to simulate before each re-typing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiffTarget {
    Unchanged,
    Depth(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub depth: usize,
    pub nvars: usize,
    pub diff_nodes: usize,
    pub mode: Mode,
    pub retypings_per_sec: f64,
    pub trials: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct BenchOptions {
    pub trials: usize,
    pub warmup: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions { trials: 21, warmup: 3 }
    }
}

/// Median duration of `trials` timed calls of `run`; `setup` runs untimed
/// before each call.
pub fn time_median<S>(
    opts: BenchOptions,
    state: &mut S,
    mut setup: impl FnMut(&mut S),
    mut run: impl FnMut(&mut S),
) -> Duration {
    for _ in 0..opts.warmup {
        setup(state);
        run(state);
    }
    let mut samples: Vec<Duration> = (0..opts.trials.max(1))
        .map(|_| {
            setup(state);
            let start = Instant::now();
            run(state);
            start.elapsed()
        })
        .collect();
    samples.sort();
    samples[samples.len() / 2]
}

fn per_sec(d: Duration) -> f64 {
    1.0 / d.as_secs_f64().max(1e-9)
}

/// Measures standard and incremental re-typing throughput for every spec and
/// diff target.
pub fn bench(specs: &[SyntheticSpec], targets: &[DiffTarget], opts: BenchOptions) -> Result<Vec<BenchRecord>, BenchError> {
    let mut out = Vec::new();
    for spec in specs {
        let (tree, env) = gen_synthetic(*spec)?;
        let ast = annotate(&FunCheck, &env, &tree);
        let mut full = Cache::new();
        incremental_type(&FunCheck, &env, &mut full, &tree).map_err(|e| BenchError::Untyped(e.to_string()))?;
        let record = |diff_nodes, mode, d: Duration| BenchRecord {
            depth: spec.depth,
            nvars: spec.nvars,
            diff_nodes,
            mode,
            retypings_per_sec: per_sec(d),
            trials: opts.trials,
        };
        for target in targets {
            let standard = time_median(opts, &mut (), |_| {}, |_| {
                check_f(&env, &tree).expect("synthetic programs type");
            });
            let (plan, diff_nodes) = match target {
                DiffTarget::Unchanged => (None, 0),
                DiffTarget::Depth(d) => {
                    let plan = plan_invalidation(&FunCheck, &ast, &env, *d)?;
                    let n = plan.diff_nodes;
                    (Some(plan), n)
                }
            };
            out.push(record(diff_nodes, Mode::Standard, standard));

            if *target == DiffTarget::Unchanged {
                let first = time_median(opts, &mut Cache::new(), |c| *c = Cache::new(), |c| {
                    incremental_type(&FunCheck, &env, c, &tree).expect("synthetic programs type");
                });
                out.push(record(0, Mode::IncrementalFirstPass, first));
            }

            let steady = time_median(
                opts,
                &mut full.clone(),
                |c| {
                    if let Some(p) = &plan {
                        p.apply(c);
                    }
                },
                |c| {
                    incremental_type(&FunCheck, &env, c, &tree).expect("synthetic programs type");
                },
            );
            out.push(record(diff_nodes, Mode::Incremental, steady));
        }
    }
    Ok(out)
}

pub const CSV_HEADER: &str = "depth,nvars,diff_nodes,mode,retypings_per_sec,trials";

pub fn emit_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.depth, r.nvars, r.diff_nodes, r.mode, r.retypings_per_sec, r.trials
        ));
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("csv line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>, CsvError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(CsvError { line: 1, message: format!("expected header `{CSV_HEADER}`") }),
    }
    let mut out = Vec::new();
    for (i, line) in lines.filter(|(_, l)| !l.is_empty()) {
        let err = |m: String| CsvError { line: i + 1, message: m };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(err(format!("expected 6 fields, found {}", f.len())));
        }
        let num = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad integer `{s}`")));
        out.push(BenchRecord {
            depth: num(f[0])?,
            nvars: num(f[1])?,
            diff_nodes: num(f[2])?,
            mode: f[3].parse().map_err(err)?,
            retypings_per_sec: f[4].parse().map_err(|_| err(format!("bad number `{}`", f[4])))?,
            trials: num(f[5])?,
        });
    }
    Ok(out)
}

/// Spearman rank correlation, averaging the ranks of ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rx = ranks(xs);
    let ry = ranks(ys);
    let n = xs.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in &idx[i..=j] {
            out[*k] = avg;
        }
        i = j + 1;
    }
    out
}
