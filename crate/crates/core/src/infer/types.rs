use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use crate::terms::fun::FunType;
use crate::terms::lexer::{Cursor, Token};
use crate::terms::ParseError;

/// Type variable identifier.
pub type TyVar = u64;

/// Types with type variables.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum AType {
    Int,
    Bool,
    Arrow(Arc<AType>, Arc<AType>),
    Var(TyVar),
}

impl AType {
    pub fn arrow(domain: AType, codomain: AType) -> AType {
        AType::Arrow(Arc::new(domain), Arc::new(codomain))
    }

    pub fn occurs(&self, v: TyVar) -> bool {
        match self {
            AType::Var(w) => *w == v,
            AType::Arrow(a, b) => a.occurs(v) || b.occurs(v),
            _ => false,
        }
    }

    pub fn vars(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<TyVar>) {
        match self {
            AType::Var(v) => {
                out.insert(*v);
            }
            AType::Arrow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            _ => {}
        }
    }

    /// Largest variable id plus one, or 0 for ground types.
    pub fn var_bound(&self) -> u64 {
        match self {
            AType::Var(v) => v + 1,
            AType::Arrow(a, b) => a.var_bound().max(b.var_bound()),
            _ => 0,
        }
    }

    pub fn is_ground(&self) -> bool {
        self.var_bound() == 0
    }

    pub fn to_fun_type(&self) -> Option<FunType> {
        match self {
            AType::Int => Some(FunType::Int),
            AType::Bool => Some(FunType::Bool),
            AType::Arrow(a, b) => Some(FunType::arrow(a.to_fun_type()?, b.to_fun_type()?)),
            AType::Var(_) => None,
        }
    }

    /// Reads a type written with `'a`-style variables, numbering distinct
    /// names from `names` in first-occurrence order.
    pub fn parse_with(src: &str, names: &mut HashMap<String, TyVar>) -> Result<AType, ParseError> {
        let mut cur = Cursor::new(src, &["int", "bool"])?;
        let ty = parse_atype(&mut cur, names)?;
        cur.expect_eof()?;
        Ok(ty)
    }

    pub fn parse(src: &str) -> Result<AType, ParseError> {
        Self::parse_with(src, &mut HashMap::new())
    }
}

fn parse_atype(cur: &mut Cursor, names: &mut HashMap<String, TyVar>) -> Result<AType, ParseError> {
    let dom = if cur.eat_kw("int") {
        AType::Int
    } else if cur.eat_kw("bool") {
        AType::Bool
    } else if cur.eat_sym("(") {
        let t = parse_atype(cur, names)?;
        cur.expect_sym(")")?;
        t
    } else if let Token::TyVar(v) = cur.peek().clone() {
        cur.bump();
        let next = names.len() as TyVar;
        AType::Var(*names.entry(v).or_insert(next))
    } else {
        return Err(cur.unexpected("a type"));
    };
    if cur.eat_sym("->") {
        Ok(AType::arrow(dom, parse_atype(cur, names)?))
    } else {
        Ok(dom)
    }
}

impl From<&FunType> for AType {
    fn from(t: &FunType) -> AType {
        match t {
            FunType::Int => AType::Int,
            FunType::Bool => AType::Bool,
            FunType::Arrow(a, b) => AType::arrow(a.as_ref().into(), b.as_ref().into()),
        }
    }
}

/// Names type variables `'a`, `'b`, … in the order it first meets them.
#[derive(Default, Debug, Clone)]
pub struct Namer {
    names: HashMap<TyVar, usize>,
}

impl Namer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn name(&mut self, v: TyVar) -> String {
        letter_name(self.index(v))
    }

    /// Position of `v` in naming order, naming it now if it is new.
    pub fn index(&mut self, v: TyVar) -> usize {
        let next = self.names.len();
        *self.names.entry(v).or_insert(next)
    }

    pub fn show(&mut self, t: &AType) -> String {
        let mut s = String::new();
        self.write(&mut s, t);
        s
    }

    fn write(&mut self, out: &mut String, t: &AType) {
        match t {
            AType::Int => out.push_str("int"),
            AType::Bool => out.push_str("bool"),
            AType::Var(v) => out.push_str(&self.name(*v)),
            AType::Arrow(a, b) => {
                if matches!(**a, AType::Arrow(..)) {
                    out.push('(');
                    self.write(out, a);
                    out.push(')');
                } else {
                    self.write(out, a);
                }
                out.push_str(" -> ");
                self.write(out, b);
            }
        }
    }
}

fn letter_name(i: usize) -> String {
    let letter = (b'a' + (i % 26) as u8) as char;
    match i / 26 {
        0 => format!("'{letter}"),
        n => format!("'{letter}{n}"),
    }
}

/// Prints with canonical variable names local to this type.
impl fmt::Display for AType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&Namer::new().show(self))
    }
}
