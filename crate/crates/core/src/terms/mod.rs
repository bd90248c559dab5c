//! Abstract syntax shared by the FUN and WHILE languages.
//!
//! Every syntax tree is built from [`Node`]s. A node caches its structural
//! hash and its free-variable set at construction time, so cache lookups and
//! environment-compatibility checks never re-walk the subtree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

pub mod fun;
pub(crate) mod lexer;
pub mod while_lang;

pub use lexer::ParseError;

/// Program variable names.
pub type Name = Arc<str>;

/// A set of variable names, ordered so that iteration is deterministic.
pub type VarSet = BTreeSet<Name>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// Source position (1-based) recorded by the parsers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// Node payloads know how to derive their free variables from their children.
pub trait Syntax: Eq + Hash {
    fn free_vars(&self) -> VarSet;
}

/// An immutable, cheaply clonable syntax tree node.
///
/// Equality is structural. Pointer equality and the cached hash are used as
/// fast paths, so comparing a tree with itself is O(1). The source span does
/// not take part in equality.
pub struct Node<K> {
    inner: Arc<NodeInner<K>>,
}

struct NodeInner<K> {
    kind: K,
    hash: u64,
    fv: Arc<VarSet>,
    span: Option<Span>,
}

impl<K: Syntax> Node<K> {
    pub fn new(kind: K) -> Self {
        Self::build(kind, None)
    }

    pub fn with_span(kind: K, span: Span) -> Self {
        Self::build(kind, Some(span))
    }

    fn build(kind: K, span: Option<Span>) -> Self {
        let mut hasher = DefaultHasher::new();
        kind.hash(&mut hasher);
        let hash = hasher.finish();
        let fv = Arc::new(kind.free_vars());
        Node { inner: Arc::new(NodeInner { kind, hash, fv, span }) }
    }
}

impl<K> Node<K> {
    pub fn kind(&self) -> &K {
        &self.inner.kind
    }

    /// Structural fingerprint; equal trees have equal fingerprints.
    pub fn fingerprint(&self) -> u64 {
        self.inner.hash
    }

    pub fn free_vars(&self) -> &VarSet {
        &self.inner.fv
    }

    pub fn span(&self) -> Option<Span> {
        self.inner.span
    }

    pub fn ptr_eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
    }
}

impl<K> Clone for Node<K> {
    fn clone(&self) -> Self {
        Node { inner: Arc::clone(&self.inner) }
    }
}

impl<K: PartialEq> PartialEq for Node<K> {
    fn eq(&self, other: &Self) -> bool {
        self.ptr_eq(other) || (self.inner.hash == other.inner.hash && self.inner.kind == other.inner.kind)
    }
}

impl<K: Eq> Eq for Node<K> {}

impl<K> Hash for Node<K> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.inner.hash);
    }
}

impl<K: fmt::Debug> fmt::Debug for Node<K> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.inner.kind.fmt(f)
    }
}

/// Every name in the sorted sequence `keys` is in `vars`.
fn covers<'a>(vars: &VarSet, keys: impl Iterator<Item = &'a Name>) -> bool {
    let mut wanted = vars.iter().peekable();
    keys.into_iter().all(|k| {
        while wanted.next_if(|v| *v < k).is_some() {}
        wanted.next_if(|v| *v == k).is_some()
    })
}

/// Looks up an ascending sequence of names, by merging with the map when
/// the sequence is not much shorter than it.
enum Bindings<'a, T> {
    Search(&'a BTreeMap<Name, T>),
    Walk(std::iter::Peekable<std::collections::btree_map::Iter<'a, Name, T>>),
}

impl<'a, T> Bindings<'a, T> {
    fn new(map: &'a BTreeMap<Name, T>, queries: usize) -> Self {
        if map.len() > queries.saturating_mul(8) {
            Bindings::Search(map)
        } else {
            Bindings::Walk(map.iter().peekable())
        }
    }

    fn find(&mut self, v: &Name) -> Option<&'a T> {
        match self {
            Bindings::Search(map) => map.get(v),
            Bindings::Walk(it) => {
                while it.next_if(|(k, _)| *k < v).is_some() {}
                it.next_if(|(k, _)| *k == v).map(|(_, t)| t)
            }
        }
    }
}

/// A finite map from variable names to types.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TypeEnv<T> {
    map: Arc<BTreeMap<Name, T>>,
}

impl<T> Default for TypeEnv<T> {
    fn default() -> Self {
        TypeEnv { map: Arc::default() }
    }
}

impl<T: Clone> TypeEnv<T> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `None` for unbound names.
    pub fn get(&self, x: &str) -> Option<&T> {
        self.map.get(x)
    }

    pub fn contains(&self, x: &str) -> bool {
        self.map.contains_key(x)
    }

    pub fn insert(&mut self, x: Name, ty: T) {
        Arc::make_mut(&mut self.map).insert(x, ty);
    }

    /// `Γ[x ↦ ty]` as a new environment.
    pub fn extend(&self, x: &Name, ty: T) -> Self {
        let mut out = self.clone();
        out.insert(x.clone(), ty);
        out
    }

    /// Keeps only the bindings whose name is in `vars`.
    pub fn restrict(&self, vars: &VarSet) -> Self {
        if vars.len().saturating_mul(8) < self.map.len() {
            let map = vars
                .iter()
                .filter_map(|v| self.map.get_key_value(v).map(|(k, t)| (k.clone(), t.clone())))
                .collect();
            return TypeEnv { map: Arc::new(map) };
        }
        if self.map.len() <= vars.len() && covers(vars, self.map.keys()) {
            return self.clone();
        }
        // Both sides are sorted: merge them, then bulk-build the map.
        let mut wanted = vars.iter().peekable();
        let mut kept = Vec::with_capacity(vars.len());
        for (k, t) in self.map.iter() {
            while wanted.next_if(|v| *v < k).is_some() {}
            match wanted.peek() {
                None => break,
                Some(v) if *v == k => kept.push((k.clone(), t.clone())),
                Some(_) => {}
            }
        }
        TypeEnv { map: Arc::new(kept.into_iter().collect()) }
    }

    /// Both environments bind every name in `vars`, and `same` holds pointwise.
    ///
    /// Either side is walked in step with `vars` unless it is much larger,
    /// in which case it is searched instead.
    pub fn agrees_on(&self, other: &Self, vars: &VarSet, mut same: impl FnMut(&T, &T) -> bool) -> bool {
        let mut mine = Bindings::new(&self.map, vars.len());
        let mut theirs = Bindings::new(&other.map, vars.len());
        vars.iter().all(|v| match (mine.find(v), theirs.find(v)) {
            (Some(a), Some(b)) => same(a, b),
            _ => false,
        })
    }

    pub fn map_values<U>(&self, mut f: impl FnMut(&T) -> U) -> TypeEnv<U> {
        TypeEnv { map: Arc::new(self.map.iter().map(|(k, v)| (k.clone(), f(v))).collect()) }
    }
}

impl<T> TypeEnv<T> {
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Bindings in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&Name, &T)> {
        self.map.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &Name> {
        self.map.keys()
    }
}

impl<T> FromIterator<(Name, T)> for TypeEnv<T> {
    fn from_iter<I: IntoIterator<Item = (Name, T)>>(iter: I) -> Self {
        TypeEnv { map: Arc::new(iter.into_iter().collect()) }
    }
}

impl<'a, T: Clone> FromIterator<(&'a str, T)> for TypeEnv<T> {
    fn from_iter<I: IntoIterator<Item = (&'a str, T)>>(iter: I) -> Self {
        TypeEnv { map: Arc::new(iter.into_iter().map(|(k, v)| (name(k), v)).collect()) }
    }
}

impl<T: fmt::Display> fmt::Display for TypeEnv<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} ↦ {v}")?;
        }
        f.write_str("}")
    }
}

impl<T: fmt::Debug> fmt::Debug for TypeEnv<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.map.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> VarSet {
        names.iter().map(|n| name(n)).collect()
    }

    #[test]
    fn restrict_keeps_only_requested_names() {
        let env: TypeEnv<&str> = [("n", "int"), ("fact", "int -> int")].into_iter().collect();
        let r = env.restrict(&vars(&["n"]));
        assert_eq!(r.len(), 1);
        assert_eq!(r.get("n"), Some(&"int"));
        assert!(env.restrict(&VarSet::new()).is_empty());
    }

    #[test]
    fn restrict_ignores_names_not_bound() {
        let env: TypeEnv<&str> = [("x", "H var"), ("y", "L var")].into_iter().collect();
        let r = env.restrict(&vars(&["y", "z"]));
        let expected: TypeEnv<&str> = [("y", "L var")].into_iter().collect();
        assert_eq!(r, expected);
    }

    #[test]
    fn unbound_lookup_is_none() {
        let env: TypeEnv<u8> = TypeEnv::new();
        assert!(env.get("x").is_none());
    }

    #[test]
    fn agrees_on_requires_both_domains() {
        let a: TypeEnv<u8> = [("n", 1), ("z", 2)].into_iter().collect();
        let b: TypeEnv<u8> = [("n", 1)].into_iter().collect();
        assert!(a.agrees_on(&b, &vars(&["n"]), |x, y| x == y));
        assert!(!a.agrees_on(&b, &vars(&["n", "z"]), |x, y| x == y));
        assert!(!b.agrees_on(&a, &vars(&["n", "z"]), |x, y| x == y));
        assert!(b.agrees_on(&a, &vars(&["n"]), |x, y| x == y));
        assert!(!a.agrees_on(&b, &vars(&["m"]), |x, y| x == y));
    }

    #[test]
    fn restrict_large_and_small_environments() {
        let env: TypeEnv<usize> = (0..100).map(|i| (name(&format!("v{i}")), i)).collect();
        let few = vars(&["v3", "v50", "w"]);
        let r = env.restrict(&few);
        assert_eq!(r.iter().map(|(_, t)| *t).collect::<Vec<_>>(), [3, 50]);
        let many: VarSet = (0..100).step_by(2).map(|i| name(&format!("v{i}"))).collect();
        assert_eq!(env.restrict(&many).len(), 50);
        assert_eq!(env.restrict(&many).restrict(&many), env.restrict(&many));
    }
}
