use thiserror::Error;

use super::subst::Subst;
use super::types::{AType, TyVar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("cannot unify {0} with {1}")]
    Clash(AType, AType),
    #[error("type variable occurs in {1}")]
    Occurs(TyVar, AType),
}

/// Robinson unification. The result is idempotent.
pub fn unify(a: &AType, b: &AType) -> Result<Subst, UnifyError> {
    match (a, b) {
        (AType::Int, AType::Int) | (AType::Bool, AType::Bool) => Ok(Subst::identity()),
        (AType::Var(x), AType::Var(y)) if x == y => Ok(Subst::identity()),
        (AType::Var(x), t) | (t, AType::Var(x)) => {
            if t.occurs(*x) {
                Err(UnifyError::Occurs(*x, t.clone()))
            } else {
                Ok(Subst::singleton(*x, t.clone()))
            }
        }
        (AType::Arrow(a1, b1), AType::Arrow(a2, b2)) => {
            let s1 = unify(a1, a2)?;
            let s2 = unify(&s1.apply(b1), &s1.apply(b2))?;
            Ok(s2.compose(&s1))
        }
        _ => Err(UnifyError::Clash(a.clone(), b.clone())),
    }
}

pub fn unifiable(a: &AType, b: &AType) -> bool {
    unify(a, b).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: TyVar) -> AType {
        AType::Var(i)
    }

    #[test]
    fn binds_variable() {
        assert_eq!(unify(&v(0), &AType::Int), Ok(Subst::singleton(0, AType::Int)));
    }

    #[test]
    fn clashes() {
        assert!(matches!(unify(&AType::Int, &AType::Bool), Err(UnifyError::Clash(..))));
        assert!(unify(&AType::Int, &AType::arrow(AType::Int, AType::Int)).is_err());
    }

    #[test]
    fn occurs_check() {
        let t = AType::arrow(v(0), v(1));
        assert!(matches!(unify(&v(0), &t), Err(UnifyError::Occurs(0, _))));
    }

    #[test]
    fn arrows_unify_componentwise() {
        let a = AType::arrow(v(0), v(1));
        let b = AType::arrow(AType::Int, v(2));
        let s = unify(&a, &b).unwrap();
        assert_eq!(s.apply(&a), s.apply(&b));
        assert!(s.is_idempotent());
    }

    #[test]
    fn threads_earlier_bindings() {
        let a = AType::arrow(v(0), v(0));
        let b = AType::arrow(v(1), AType::arrow(AType::Int, AType::Int));
        let s = unify(&a, &b).unwrap();
        assert_eq!(s.apply(&v(1)), AType::arrow(AType::Int, AType::Int));
        assert!(s.is_idempotent());
    }
}
