use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use super::types::{AType, Namer, TyVar};
use crate::terms::TypeEnv;

/// A finite map from type variables to types, never binding a variable to
/// itself.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Subst {
    map: BTreeMap<TyVar, AType>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("binding for {var} is cyclic")]
pub struct CyclicBinding {
    pub var: TyVar,
}

impl Subst {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn singleton(v: TyVar, t: AType) -> Self {
        let mut map = BTreeMap::new();
        if t != AType::Var(v) {
            map.insert(v, t);
        }
        Subst { map }
    }

    /// Builds an idempotent substitution by applying the bindings to
    /// themselves until nothing changes.
    pub fn normalized(bindings: impl IntoIterator<Item = (TyVar, AType)>) -> Result<Self, CyclicBinding> {
        let raw: BTreeMap<TyVar, AType> = bindings.into_iter().filter(|(v, t)| *t != AType::Var(*v)).collect();
        let mut map = BTreeMap::new();
        for v in raw.keys() {
            let resolved = resolve(&raw, &AType::Var(*v), &mut Vec::new())?;
            if resolved != AType::Var(*v) {
                map.insert(*v, resolved);
            }
        }
        Ok(Subst { map })
    }

    pub fn is_identity(&self) -> bool {
        self.map.is_empty()
    }

    pub fn get(&self, v: TyVar) -> Option<&AType> {
        self.map.get(&v)
    }

    pub fn domain(&self) -> impl Iterator<Item = TyVar> + '_ {
        self.map.keys().copied()
    }

    pub fn bindings(&self) -> impl Iterator<Item = (TyVar, &AType)> {
        self.map.iter().map(|(v, t)| (*v, t))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Simultaneous replacement in one pass.
    pub fn apply(&self, t: &AType) -> AType {
        if self.map.is_empty() {
            return t.clone();
        }
        match t {
            AType::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            AType::Arrow(a, b) => AType::arrow(self.apply(a), self.apply(b)),
            _ => t.clone(),
        }
    }

    pub fn apply_env(&self, env: &TypeEnv<AType>) -> TypeEnv<AType> {
        if self.map.is_empty() {
            return env.clone();
        }
        env.map_values(|t| self.apply(t))
    }

    /// `self ∘ first`: applying the result equals applying `first`, then `self`.
    pub fn compose(&self, first: &Subst) -> Subst {
        if self.map.is_empty() {
            return first.clone();
        }
        let mut map: BTreeMap<TyVar, AType> =
            first.map.iter().map(|(v, t)| (*v, self.apply(t))).filter(|(v, t)| *t != AType::Var(*v)).collect();
        for (v, t) in &self.map {
            if !first.map.contains_key(v) {
                map.insert(*v, t.clone());
            }
        }
        Subst { map }
    }

    /// Keeps only the bindings for `vars`.
    pub fn restrict(&self, vars: &BTreeSet<TyVar>) -> Subst {
        Subst { map: self.map.iter().filter(|(v, _)| vars.contains(v)).map(|(v, t)| (*v, t.clone())).collect() }
    }

    /// Renames variables on both sides of every binding, dropping bindings
    /// that become trivial.
    pub fn rename(&self, mut f: impl FnMut(TyVar) -> TyVar) -> Subst {
        let mut map = BTreeMap::new();
        for (v, t) in &self.map {
            let v2 = f(*v);
            let t2 = rename_type(t, &mut f);
            if t2 != AType::Var(v2) {
                map.insert(v2, t2);
            }
        }
        Subst { map }
    }

    /// Every variable in the domain or range.
    pub fn vars(&self) -> BTreeSet<TyVar> {
        let mut out: BTreeSet<TyVar> = self.map.keys().copied().collect();
        for t in self.map.values() {
            t.collect_vars(&mut out);
        }
        out
    }

    pub fn var_bound(&self) -> u64 {
        self.map.iter().map(|(v, t)| (v + 1).max(t.var_bound())).max().unwrap_or(0)
    }

    pub fn is_idempotent(&self) -> bool {
        self.map.values().all(|t| self.apply(t) == *t)
    }

    /// Prints with names taken from `namer`, bindings ordered by name.
    pub fn show(&self, namer: &mut Namer) -> String {
        let mut named: Vec<(usize, TyVar)> = self.map.keys().map(|v| (namer.index(*v), *v)).collect();
        named.sort_unstable();
        let parts: Vec<String> =
            named.iter().map(|(_, v)| format!("{} := {}", namer.name(*v), namer.show(&self.map[v]))).collect();
        format!("[{}]", parts.join(", "))
    }
}

pub(crate) fn rename_type(t: &AType, f: &mut impl FnMut(TyVar) -> TyVar) -> AType {
    match t {
        AType::Var(v) => AType::Var(f(*v)),
        AType::Arrow(a, b) => AType::arrow(rename_type(a, f), rename_type(b, f)),
        _ => t.clone(),
    }
}

fn resolve(raw: &BTreeMap<TyVar, AType>, t: &AType, visiting: &mut Vec<TyVar>) -> Result<AType, CyclicBinding> {
    match t {
        AType::Var(v) => match raw.get(v) {
            None => Ok(t.clone()),
            Some(_) if visiting.contains(v) => Err(CyclicBinding { var: *v }),
            Some(bound) => {
                visiting.push(*v);
                let r = resolve(raw, bound, visiting);
                visiting.pop();
                r
            }
        },
        AType::Arrow(a, b) => Ok(AType::arrow(resolve(raw, a, visiting)?, resolve(raw, b, visiting)?)),
        _ => Ok(t.clone()),
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.show(&mut Namer::new()))
    }
}

impl fmt::Debug for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.map.iter()).finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: TyVar) -> AType {
        AType::Var(i)
    }

    #[test]
    fn applies_bindings() {
        let s = Subst::singleton(0, AType::Int);
        assert_eq!(s.apply(&AType::arrow(v(0), v(1))), AType::arrow(AType::Int, v(1)));
        assert_eq!(Subst::identity().apply(&v(4)), v(4));
    }

    #[test]
    fn normalization_resolves_chains() {
        let s = Subst::normalized([(0, v(1)), (1, AType::Int)]).unwrap();
        assert_eq!(s.apply(&v(0)), AType::Int);
        assert_eq!(s.get(1), Some(&AType::Int));
        assert!(s.is_idempotent());
        assert!(Subst::normalized([(0, AType::arrow(v(0), AType::Int))]).is_err());
        assert!(Subst::normalized([(0, v(1)), (1, v(0))]).is_err());
        assert!(Subst::normalized([(0, v(0))]).unwrap().is_identity());
    }

    #[test]
    fn composition_example() {
        let c = Subst::singleton(1, AType::Bool).compose(&Subst::singleton(0, v(1)));
        assert_eq!(c.get(0), Some(&AType::Bool));
        assert_eq!(c.get(1), Some(&AType::Bool));
        let s = Subst::singleton(3, AType::Int);
        assert_eq!(Subst::identity().compose(&s), s);
        assert_eq!(s.compose(&Subst::identity()), s);
    }

    #[test]
    fn display_uses_canonical_names() {
        let s = Subst::singleton(5, AType::arrow(v(9), AType::Int));
        assert_eq!(s.to_string(), "['a := 'b -> int]");
    }
}
