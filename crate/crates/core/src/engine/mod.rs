//! The language-independent incremental typing schema.
//!
//! A [`LanguageInstance`] describes an existing, syntax-directed typing
//! algorithm through its rule format: which subterms a rule types
//! ([`subterms`](LanguageInstance::subterms)), under which environments
//! ([`tr`](LanguageInstance::tr)), and how their results are checked and
//! combined ([`checkjoin`](LanguageInstance::checkjoin)). Given that, and an
//! environment-compatibility predicate, [`incremental_type`] types a term
//! while reusing a [`Cache`] of earlier per-subterm results:
//!
//! * **hit**: a cached entry for the term has a compatible environment; its
//!   result is reused and the cache is unchanged;
//! * **leaf miss**: the base algorithm types the term, and the result is
//!   cached under the environment restricted to the term's free variables;
//! * **inner miss**: subterms are typed incrementally under the `tr`
//!   environments, combined with `checkjoin`, and the result is cached.
//!
//! The hit template is always tried first, so exactly one template applies
//! at each node.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::sync::Arc;

use thiserror::Error;

use crate::terms::{Span, TypeEnv, VarSet};

pub mod dump;

/// Monotone supply of type-variable ids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FreshSupply {
    next: u64,
}

impl FreshSupply {
    pub fn starting_at(next: u64) -> Self {
        FreshSupply { next }
    }

    pub fn fresh(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }

    /// The next id that would be handed out.
    pub fn peek(&self) -> u64 {
        self.next
    }

    /// Never hands out ids below `floor`.
    pub fn reserve_below(&mut self, floor: u64) {
        self.next = self.next.max(floor);
    }
}

/// A typing failure at a specific node.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}type error in `{node}`: {reason}", .span.map(|s| format!("{s}: ")).unwrap_or_default())]
pub struct TypeError {
    /// Pretty-printed failing node.
    pub node: String,
    pub span: Option<Span>,
    /// The violated condition.
    pub reason: String,
}

impl TypeError {
    pub fn new(node: &impl fmt::Display, span: Option<Span>, reason: impl Into<String>) -> Self {
        TypeError { node: node.to_string(), span, reason: reason.into() }
    }
}

/// A typing algorithm presented in the rule format the schema needs.
///
/// `base` is the original algorithm and is never modified. The remaining
/// methods expose its rule structure: for a term `t` with subterms
/// `t_0 … t_n`, the rule types `t_i` under `tr(t, i, Γ, R_0 … R_{i-1})`
/// and then combines the results with `checkjoin`.
pub trait LanguageInstance {
    type Term: Clone + Eq + Hash + fmt::Display + fmt::Debug;
    type Ty: Clone + Eq + Hash + fmt::Display + fmt::Debug;
    type Res: Clone + Eq + fmt::Display + fmt::Debug;
    /// Per-node data chosen before the subterms are typed (fresh type
    /// variables introduced by a binder, for instance).
    type Frame: Clone + fmt::Debug;

    /// Tag used in cache files.
    const NAME: &'static str;

    fn free_vars<'t>(&self, t: &'t Self::Term) -> &'t VarSet;

    fn span(&self, _t: &Self::Term) -> Option<Span> {
        None
    }

    /// The original typing algorithm.
    fn base(&self, env: &TypeEnv<Self::Ty>, t: &Self::Term, fresh: &mut FreshSupply) -> Result<Self::Res, TypeError>;

    /// The subterms typed by the rule for `t`, in dependency order.
    fn subterms(&self, t: &Self::Term) -> Vec<Self::Term>;

    fn open(&self, t: &Self::Term, env: &TypeEnv<Self::Ty>, fresh: &mut FreshSupply) -> Self::Frame;

    /// Environment for subterm `index`, or `None` when it is `env` itself.
    fn tr(
        &self,
        t: &Self::Term,
        frame: &Self::Frame,
        index: usize,
        env: &TypeEnv<Self::Ty>,
        earlier: &[Self::Res],
    ) -> Option<TypeEnv<Self::Ty>>;

    fn checkjoin(
        &self,
        t: &Self::Term,
        frame: &Self::Frame,
        env: &TypeEnv<Self::Ty>,
        results: &[Self::Res],
        fresh: &mut FreshSupply,
    ) -> Result<Self::Res, TypeError>;

    /// Can an entry cached under `cached` be reused for `t` under `env`?
    fn compat(&self, env: &TypeEnv<Self::Ty>, cached: &TypeEnv<Self::Ty>, t: &Self::Term) -> bool;

    /// Result to return on a hit. Most instances return the cached result
    /// unchanged.
    fn reuse(
        &self,
        _t: &Self::Term,
        _env: &TypeEnv<Self::Ty>,
        _cached_env: &TypeEnv<Self::Ty>,
        cached: &Self::Res,
        _fresh: &mut FreshSupply,
    ) -> Self::Res {
        cached.clone()
    }

    /// Smallest id that is safe to hand out as fresh given `env` and `res`.
    fn fresh_floor(&self, _env: &TypeEnv<Self::Ty>, _res: Option<&Self::Res>) -> u64 {
        0
    }

    /// Whether `actual` is an acceptable stand-in for `expected` under `env`.
    fn same_result(&self, _env: &TypeEnv<Self::Ty>, expected: &Self::Res, actual: &Self::Res) -> bool {
        expected == actual
    }
}

/// One cached judgement for a term.
pub struct CacheEntry<L: LanguageInstance> {
    pub env: TypeEnv<L::Ty>,
    pub result: L::Res,
}

impl<L: LanguageInstance> Clone for CacheEntry<L> {
    fn clone(&self) -> Self {
        CacheEntry { env: self.env.clone(), result: self.result.clone() }
    }
}

impl<L: LanguageInstance> fmt::Debug for CacheEntry<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.env, self.result)
    }
}

/// A set of `(term, environment, result)` triples, indexed by term.
///
/// Terms are keyed structurally; a term may have several entries under
/// different environments, but never two with the same environment.
pub struct Cache<L: LanguageInstance> {
    entries: HashMap<L::Term, Vec<CacheEntry<L>>>,
    len: usize,
    fresh: u64,
}

impl<L: LanguageInstance> Clone for Cache<L> {
    fn clone(&self) -> Self {
        Cache { entries: self.entries.clone(), len: self.len, fresh: self.fresh }
    }
}

impl<L: LanguageInstance> Default for Cache<L> {
    fn default() -> Self {
        Cache { entries: HashMap::new(), len: 0, fresh: 0 }
    }
}

impl<L: LanguageInstance> fmt::Debug for Cache<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (t, e) in self.iter() {
            m.entry(&t.to_string(), e);
        }
        m.finish()
    }
}

impl<L: LanguageInstance> Cache<L> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of triples.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn fresh_counter(&self) -> u64 {
        self.fresh
    }

    pub fn set_fresh_counter(&mut self, fresh: u64) {
        self.fresh = fresh;
    }

    /// Adds a triple, replacing an existing one for the same term and
    /// environment. Returns `true` if the cache grew.
    pub fn insert(&mut self, term: L::Term, env: TypeEnv<L::Ty>, result: L::Res) -> bool {
        let slot = self.entries.entry(term).or_default();
        match slot.iter_mut().find(|e| e.env == env) {
            Some(existing) => {
                existing.result = result;
                false
            }
            None => {
                slot.push(CacheEntry { env, result });
                self.len += 1;
                true
            }
        }
    }

    /// Removes the triple for `term` under exactly `env`.
    pub fn remove(&mut self, term: &L::Term, env: &TypeEnv<L::Ty>) -> bool {
        let Some(slot) = self.entries.get_mut(term) else { return false };
        let Some(i) = slot.iter().position(|e| &e.env == env) else { return false };
        slot.swap_remove(i);
        if slot.is_empty() {
            self.entries.remove(term);
        }
        self.len -= 1;
        true
    }

    pub fn entries_for(&self, term: &L::Term) -> &[CacheEntry<L>] {
        self.entries.get(term).map(Vec::as_slice).unwrap_or_default()
    }

    pub fn contains(&self, term: &L::Term, env: &TypeEnv<L::Ty>, result: &L::Res) -> bool {
        self.entries_for(term).iter().any(|e| &e.env == env && &e.result == result)
    }

    /// The first entry for `t` whose environment is compatible with `env`.
    pub fn lookup(&self, lang: &L, t: &L::Term, env: &TypeEnv<L::Ty>) -> Option<&CacheEntry<L>> {
        self.entries.get(t)?.iter().find(|e| lang.compat(env, &e.env, t))
    }

    /// No compatible entry exists for `t` under `env`.
    pub fn miss(&self, lang: &L, t: &L::Term, env: &TypeEnv<L::Ty>) -> bool {
        self.lookup(lang, t, env).is_none()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&L::Term, &CacheEntry<L>)> {
        self.entries.iter().flat_map(|(t, es)| es.iter().map(move |e| (t, e)))
    }

    /// Set union of the triples; the fresh counter is the larger of the two.
    pub fn merge(mut self, other: &Cache<L>) -> Cache<L> {
        for (t, e) in other.iter() {
            if !self.contains(t, &e.env, &e.result) {
                self.insert(t.clone(), e.env.clone(), e.result.clone());
            }
        }
        self.fresh = self.fresh.max(other.fresh);
        self
    }

    /// Every triple of `self` is in `other`.
    pub fn is_subset_of(&self, other: &Cache<L>) -> bool {
        self.iter().all(|(t, e)| other.contains(t, &e.env, &e.result))
    }

    /// Same triples, ignoring the fresh counter.
    pub fn same_entries(&self, other: &Cache<L>) -> bool {
        self.len == other.len && self.is_subset_of(other)
    }
}

/// Counters for one incremental run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub hits: usize,
    pub misses: usize,
    /// Leaf misses, where the base algorithm was invoked.
    pub base_invocations: usize,
    /// Inner misses, where subterm results were combined.
    pub joins: usize,
    pub nodes_visited: usize,
}

impl fmt::Display for EngineStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "nodes={} hits={} misses={} base_calls={} joins={}",
            self.nodes_visited, self.hits, self.misses, self.base_invocations, self.joins
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Hit,
    BaseCall,
    Join,
}

/// One node visited during a traced run. `path` lists child indices from
/// the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEvent<T> {
    pub path: Vec<usize>,
    pub term: T,
    pub step: Step,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Typed<R> {
    pub result: R,
    pub stats: EngineStats,
}

/// A result together with its trace.
pub type Traced<L> = Result<(Typed<<L as LanguageInstance>::Res>, Vec<TraceEvent<<L as LanguageInstance>::Term>>), TypeError>;

/// Types `t` under `env`, reusing and extending `cache`.
///
/// On failure the cache keeps every entry added before the failing node.
pub fn incremental_type<L: LanguageInstance>(
    lang: &L,
    env: &TypeEnv<L::Ty>,
    cache: &mut Cache<L>,
    t: &L::Term,
) -> Result<Typed<L::Res>, TypeError> {
    Runner::new(lang, env, cache, false).run(t).map(|(typed, _)| typed)
}

/// Like [`incremental_type`], also recording which template fired at each
/// visited node, in visiting order.
pub fn incremental_type_traced<L: LanguageInstance>(
    lang: &L,
    env: &TypeEnv<L::Ty>,
    cache: &mut Cache<L>,
    t: &L::Term,
) -> Traced<L> {
    Runner::new(lang, env, cache, true).run(t)
}

/// An environment derived by `tr`, or `None` for the root environment.
type EnvSlot<T> = Option<Arc<TypeEnv<T>>>;

struct Pending<L: LanguageInstance> {
    term: L::Term,
    env: EnvSlot<L::Ty>,
    frame: L::Frame,
    subterms: Vec<L::Term>,
    results: Vec<L::Res>,
}

struct Runner<'a, L: LanguageInstance> {
    lang: &'a L,
    root_env: &'a TypeEnv<L::Ty>,
    cache: &'a mut Cache<L>,
    fresh: FreshSupply,
    stats: EngineStats,
    trace: Option<Vec<TraceEvent<L::Term>>>,
    path: Vec<usize>,
    stack: Vec<Pending<L>>,
}

impl<'a, L: LanguageInstance> Runner<'a, L> {
    fn new(lang: &'a L, env: &'a TypeEnv<L::Ty>, cache: &'a mut Cache<L>, traced: bool) -> Self {
        let mut fresh = FreshSupply::starting_at(cache.fresh);
        fresh.reserve_below(lang.fresh_floor(env, None));
        Runner {
            lang,
            root_env: env,
            cache,
            fresh,
            stats: EngineStats::default(),
            trace: traced.then(Vec::new),
            path: Vec::new(),
            stack: Vec::new(),
        }
    }

    fn run(mut self, t: &L::Term) -> Traced<L> {
        let outcome = self.drive(t.clone());
        self.cache.fresh = self.cache.fresh.max(self.fresh.peek());
        let result = outcome?;
        Ok((Typed { result, stats: self.stats }, self.trace.unwrap_or_default()))
    }

    fn record(&mut self, term: &L::Term, step: Step) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent { path: self.path.clone(), term: term.clone(), step });
        }
    }

    fn store(&mut self, term: L::Term, env: &TypeEnv<L::Ty>, result: L::Res) {
        let restricted = env.restrict(self.lang.free_vars(&term));
        self.cache.insert(term, restricted, result);
    }

    /// Applies the hit or leaf-miss template, or pushes a frame for an
    /// inner miss and returns `None`.
    fn visit(&mut self, term: L::Term, slot: EnvSlot<L::Ty>) -> Result<Option<L::Res>, TypeError> {
        self.stats.nodes_visited += 1;
        let root_env = self.root_env;
        let env = slot.as_deref().unwrap_or(root_env);
        if let Some(entry) = self.cache.lookup(self.lang, &term, env) {
            let reused = self.lang.reuse(&term, env, &entry.env, &entry.result, &mut self.fresh);
            self.stats.hits += 1;
            self.record(&term, Step::Hit);
            return Ok(Some(reused));
        }
        self.stats.misses += 1;
        let subterms = self.lang.subterms(&term);
        if subterms.is_empty() {
            self.stats.base_invocations += 1;
            self.record(&term, Step::BaseCall);
            let result = self.lang.base(env, &term, &mut self.fresh)?;
            self.store(term, env, result.clone());
            return Ok(Some(result));
        }
        let frame = self.lang.open(&term, env, &mut self.fresh);
        let results = Vec::with_capacity(subterms.len());
        self.stack.push(Pending { term, env: slot, frame, subterms, results });
        Ok(None)
    }

    fn drive(&mut self, root: L::Term) -> Result<L::Res, TypeError> {
        let root_env = self.root_env;
        if let Some(r) = self.visit(root, None)? {
            return Ok(r);
        }
        loop {
            let top = self.stack.last().expect("pending frame");
            let index = top.results.len();
            if index < top.subterms.len() {
                let child = top.subterms[index].clone();
                let env = top.env.as_deref().unwrap_or(root_env);
                let child_env = match self.lang.tr(&top.term, &top.frame, index, env, &top.results) {
                    Some(e) => Some(Arc::new(e)),
                    None => top.env.clone(),
                };
                self.path.push(index);
                if let Some(r) = self.visit(child, child_env)? {
                    self.path.pop();
                    self.stack.last_mut().expect("pending frame").results.push(r);
                }
            } else {
                let done = self.stack.pop().expect("pending frame");
                self.stats.joins += 1;
                self.record(&done.term, Step::Join);
                let env = done.env.as_deref().unwrap_or(root_env);
                let result = self.lang.checkjoin(&done.term, &done.frame, env, &done.results, &mut self.fresh)?;
                self.store(done.term, env, result.clone());
                match self.stack.last_mut() {
                    Some(parent) => {
                        self.path.pop();
                        parent.results.push(result);
                    }
                    None => return Ok(result),
                }
            }
        }
    }
}

/// A term whose nodes carry their typing results. `result` is `None` where
/// the subterm does not type, or could not be typed because an earlier
/// sibling failed.
pub struct AnnotatedAst<L: LanguageInstance> {
    pub term: L::Term,
    pub result: Option<L::Res>,
    pub fv: VarSet,
    pub children: Vec<AnnotatedAst<L>>,
    /// Frame chosen when the node was typed; replayed by [`build_cache`].
    pub frame: Option<L::Frame>,
}

impl<L: LanguageInstance> Clone for AnnotatedAst<L> {
    fn clone(&self) -> Self {
        AnnotatedAst {
            term: self.term.clone(),
            result: self.result.clone(),
            fv: self.fv.clone(),
            children: self.children.clone(),
            frame: self.frame.clone(),
        }
    }
}

impl<L: LanguageInstance> PartialEq for AnnotatedAst<L> {
    fn eq(&self, other: &Self) -> bool {
        self.term == other.term && self.result == other.result && self.fv == other.fv && self.children == other.children
    }
}

impl<L: LanguageInstance> fmt::Debug for AnnotatedAst<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnnotatedAst")
            .field("term", &self.term.to_string())
            .field("result", &self.result)
            .field("children", &self.children)
            .finish()
    }
}

impl<L: LanguageInstance> AnnotatedAst<L> {
    pub fn is_fully_typed(&self) -> bool {
        self.result.is_some() && self.children.iter().all(Self::is_fully_typed)
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Self::size).sum::<usize>()
    }
}

/// Annotates every node of `t` with the result the original algorithm gives
/// it under the environment `tr` produces along the path from the root.
pub fn annotate<L: LanguageInstance>(lang: &L, env: &TypeEnv<L::Ty>, t: &L::Term) -> AnnotatedAst<L> {
    let mut fresh = FreshSupply::starting_at(lang.fresh_floor(env, None));
    annotate_with(lang, env, t, &mut fresh)
}

pub fn annotate_with<L: LanguageInstance>(
    lang: &L,
    env: &TypeEnv<L::Ty>,
    t: &L::Term,
    fresh: &mut FreshSupply,
) -> AnnotatedAst<L> {
    let fv = lang.free_vars(t).clone();
    let subterms = lang.subterms(t);
    if subterms.is_empty() {
        let result = lang.base(env, t, fresh).ok();
        return AnnotatedAst { term: t.clone(), result, fv, children: vec![], frame: None };
    }
    let frame = lang.open(t, env, fresh);
    let mut results = Vec::with_capacity(subterms.len());
    let mut children = Vec::with_capacity(subterms.len());
    for (i, sub) in subterms.iter().enumerate() {
        if results.len() < i {
            children.push(untyped(lang, sub));
            continue;
        }
        let child_env = lang.tr(t, &frame, i, env, &results);
        let child = annotate_with(lang, child_env.as_ref().unwrap_or(env), sub, fresh);
        if let Some(r) = &child.result {
            results.push(r.clone());
        }
        children.push(child);
    }
    let result = if results.len() == subterms.len() {
        lang.checkjoin(t, &frame, env, &results, fresh).ok()
    } else {
        None
    };
    AnnotatedAst { term: t.clone(), result, fv, children, frame: Some(frame) }
}

fn untyped<L: LanguageInstance>(lang: &L, t: &L::Term) -> AnnotatedAst<L> {
    AnnotatedAst {
        term: t.clone(),
        result: None,
        fv: lang.free_vars(t).clone(),
        children: lang.subterms(t).iter().map(|s| untyped(lang, s)).collect(),
        frame: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot build a cache: `{node}` does not type")]
pub struct UntypedNode {
    pub node: String,
}

/// Depth-first walk of an annotated tree collecting
/// `(t, Γ|FV(t), R)` for every node, with child environments given by `tr`.
pub fn build_cache<L: LanguageInstance>(
    lang: &L,
    ast: &AnnotatedAst<L>,
    env: &TypeEnv<L::Ty>,
) -> Result<Cache<L>, UntypedNode> {
    let mut cache = Cache::new();
    let mut fresh = lang.fresh_floor(env, None);
    let mut work: Vec<(&AnnotatedAst<L>, TypeEnv<L::Ty>)> = vec![(ast, env.clone())];
    while let Some((node, env)) = work.pop() {
        let result = node.result.as_ref().ok_or_else(|| UntypedNode { node: node.term.to_string() })?;
        fresh = fresh.max(lang.fresh_floor(&env, Some(result)));
        let mut earlier = Vec::with_capacity(node.children.len());
        for (i, child) in node.children.iter().enumerate() {
            let frame = node.frame.as_ref().expect("inner nodes carry a frame");
            let child_env = lang.tr(&node.term, frame, i, &env, &earlier).unwrap_or_else(|| env.clone());
            let r = child.result.as_ref().ok_or_else(|| UntypedNode { node: child.term.to_string() })?;
            earlier.push(r.clone());
            work.push((child, child_env));
        }
        cache.insert(node.term.clone(), env.restrict(&node.fv), result.clone());
    }
    cache.fresh = fresh;
    Ok(cache)
}

/// A cached triple the original algorithm disagrees with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub term: String,
    pub env: String,
    pub cached: String,
    pub actual: Result<String, TypeError>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` under {} cached as {} but ", self.term, self.env, self.cached)?;
        match &self.actual {
            Ok(r) => write!(f, "types as {r}"),
            Err(e) => write!(f, "fails: {}", e.reason),
        }
    }
}

/// Re-runs the original algorithm on every cached triple and reports those
/// whose result differs.
pub fn verify_cache<L: LanguageInstance>(lang: &L, cache: &Cache<L>) -> Vec<Violation> {
    let mut out = Vec::new();
    for (t, entry) in cache.iter() {
        let mut fresh = FreshSupply::starting_at(lang.fresh_floor(&entry.env, Some(&entry.result)));
        let actual = lang.base(&entry.env, t, &mut fresh);
        let ok = matches!(&actual, Ok(r) if lang.same_result(&entry.env, &entry.result, r));
        if !ok {
            out.push(Violation {
                term: t.to_string(),
                env: entry.env.to_string(),
                cached: entry.result.to_string(),
                actual: actual.map(|r| r.to_string()),
            });
        }
    }
    out.sort_by(|a, b| (&a.term, &a.env).cmp(&(&b.term, &b.env)));
    out
}
