//! Information-flow typing for WHILE over the two-point lattice `L ⊑ H`.
//!
//! Expressions get the least level they can be typed at, commands the
//! greatest `τ cmd`; every other derivable type follows by subsumption.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::engine::dump::{decode_env, encode_env, CacheCodec};
use crate::engine::{Cache, FreshSupply, LanguageInstance, TypeError, Typed};
use crate::terms::while_lang::{children, parse_while, Phrase, PhraseKind};
use crate::terms::{name, ParseError, Span, TypeEnv, VarSet};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Level {
    L,
    H,
}

impl Level {
    pub const ALL: [Level; 2] = [Level::L, Level::H];

    pub fn flows_to(self, other: Level) -> bool {
        self <= other
    }

    pub fn join(self, other: Level) -> Level {
        self.max(other)
    }

    pub fn meet(self, other: Level) -> Level {
        self.min(other)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Level::L => "L",
            Level::H => "H",
        })
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Level, String> {
        match s {
            "L" => Ok(Level::L),
            "H" => Ok(Level::H),
            other => Err(format!("unknown security level `{other}`")),
        }
    }
}

/// Phrase types: `τ`, `τ var` and `τ cmd`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum SecurityType {
    Base(Level),
    Var(Level),
    Cmd(Level),
}

impl SecurityType {
    pub const ALL: [SecurityType; 6] = [
        SecurityType::Base(Level::L),
        SecurityType::Base(Level::H),
        SecurityType::Var(Level::L),
        SecurityType::Var(Level::H),
        SecurityType::Cmd(Level::L),
        SecurityType::Cmd(Level::H),
    ];

    pub fn level(self) -> Level {
        match self {
            SecurityType::Base(l) | SecurityType::Var(l) | SecurityType::Cmd(l) => l,
        }
    }

    pub fn parse(s: &str) -> Result<SecurityType, ParseError> {
        let err = || ParseError { line: 1, col: 1, message: format!("bad security type `{s}`") };
        let mut words = s.split_whitespace();
        let level: Level = words.next().ok_or_else(err)?.parse().map_err(|_| err())?;
        let ty = match words.next() {
            None => SecurityType::Base(level),
            Some("var") => SecurityType::Var(level),
            Some("cmd") => SecurityType::Cmd(level),
            Some(_) => return Err(err()),
        };
        if words.next().is_some() {
            return Err(err());
        }
        Ok(ty)
    }
}

impl fmt::Display for SecurityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SecurityType::Base(l) => write!(f, "{l}"),
            SecurityType::Var(l) => write!(f, "{l} var"),
            SecurityType::Cmd(l) => write!(f, "{l} cmd"),
        }
    }
}

/// `a ⊆ b`: bases are covariant, commands contravariant, variables invariant.
pub fn subtype(a: SecurityType, b: SecurityType) -> bool {
    use SecurityType::*;
    match (a, b) {
        (Base(x), Base(y)) => x.flows_to(y),
        (Cmd(x), Cmd(y)) => y.flows_to(x),
        (Var(x), Var(y)) => x == y,
        _ => false,
    }
}

pub type SecEnv = TypeEnv<SecurityType>;

fn fail(p: &Phrase, reason: impl Into<String>) -> TypeError {
    TypeError::new(p, p.span(), reason)
}

/// Level at which an expression result is read.
fn read_level(p: &Phrase, r: SecurityType) -> Result<Level, TypeError> {
    match r {
        SecurityType::Base(l) | SecurityType::Var(l) => Ok(l),
        SecurityType::Cmd(_) => Err(fail(p, format!("expected an expression, found a phrase of type {r}"))),
    }
}

fn cmd_level(p: &Phrase, r: SecurityType) -> Result<Level, TypeError> {
    match r {
        SecurityType::Cmd(l) => Ok(l),
        other => Err(fail(p, format!("expected a command, found a phrase of type {other}"))),
    }
}

fn leaf(env: &SecEnv, p: &Phrase) -> Result<SecurityType, TypeError> {
    match p.kind() {
        PhraseKind::Num(_) | PhraseKind::True | PhraseKind::False => Ok(SecurityType::Base(Level::L)),
        PhraseKind::Skip => Ok(SecurityType::Cmd(Level::H)),
        PhraseKind::Var(x) => match env.get(x) {
            Some(t @ SecurityType::Var(_)) => Ok(*t),
            Some(other) => Err(fail(p, format!("`{x}` must have a var type, found {other}"))),
            None => Err(fail(p, format!("no security level for `{x}`"))),
        },
        _ => unreachable!("not a leaf"),
    }
}

/// Combines principal types of the subphrases of `p`.
fn join(p: &Phrase, rs: &[SecurityType]) -> Result<SecurityType, TypeError> {
    let kids = children(p);
    let at = |i: usize| kids[i];
    match p.kind() {
        PhraseKind::Arith { .. } | PhraseKind::Or(..) | PhraseKind::Leq(..) => {
            let l = read_level(at(0), rs[0])?.join(read_level(at(1), rs[1])?);
            Ok(SecurityType::Base(l))
        }
        PhraseKind::Not(_) => Ok(SecurityType::Base(read_level(at(0), rs[0])?)),
        PhraseKind::Assign { target, .. } => {
            let SecurityType::Var(tx) = rs[0] else {
                return Err(fail(p, format!("assignment target `{target}` must have a var type, found {}", rs[0])));
            };
            let la = read_level(at(1), rs[1])?;
            if !la.flows_to(tx) {
                return Err(fail(p, format!("explicit flow: {la} value assigned to {tx} variable `{target}`")));
            }
            Ok(SecurityType::Cmd(tx))
        }
        PhraseKind::Seq(..) => Ok(SecurityType::Cmd(cmd_level(at(0), rs[0])?.meet(cmd_level(at(1), rs[1])?))),
        PhraseKind::If { .. } => {
            let lb = read_level(at(0), rs[0])?;
            let m = cmd_level(at(1), rs[1])?.meet(cmd_level(at(2), rs[2])?);
            if !lb.flows_to(m) {
                return Err(fail(p, format!("implicit flow: {lb} guard over branches that write {m} variables")));
            }
            Ok(SecurityType::Cmd(m))
        }
        PhraseKind::While { .. } => {
            let lb = read_level(at(0), rs[0])?;
            let m = cmd_level(at(1), rs[1])?;
            if !lb.flows_to(m) {
                return Err(fail(p, format!("implicit flow: {lb} loop guard over a body that writes {m} variables")));
            }
            Ok(SecurityType::Cmd(m))
        }
        _ => unreachable!("leaves have no subphrases"),
    }
}

/// The standard checker: principal security type of `p` under `env`.
pub fn check_s(env: &SecEnv, p: &Phrase) -> Result<SecurityType, TypeError> {
    let kids = children(p);
    if kids.is_empty() {
        return leaf(env, p);
    }
    let rs = kids.into_iter().map(|k| check_s(env, k)).collect::<Result<Vec<_>, _>>()?;
    join(p, &rs)
}

/// Whether `Γ ⊢ p : ς` is derivable, given the principal type.
pub fn derivable(principal: SecurityType, ty: SecurityType) -> bool {
    subtype(principal, ty)
}

pub fn compat_s(env: &SecEnv, cached: &SecEnv, fv: &VarSet) -> bool {
    env.agrees_on(cached, fv, |a, b| a == b)
}

/// WHILE security typing as an instance of the incremental schema.
#[derive(Clone, Copy, Debug, Default)]
pub struct WhileSecurity;

impl LanguageInstance for WhileSecurity {
    type Term = Phrase;
    type Ty = SecurityType;
    type Res = SecurityType;
    type Frame = ();

    const NAME: &'static str = "while-sec";

    fn free_vars<'t>(&self, t: &'t Phrase) -> &'t VarSet {
        t.free_vars()
    }

    fn span(&self, t: &Phrase) -> Option<Span> {
        t.span()
    }

    fn base(&self, env: &SecEnv, t: &Phrase, _: &mut FreshSupply) -> Result<SecurityType, TypeError> {
        check_s(env, t)
    }

    fn subterms(&self, t: &Phrase) -> Vec<Phrase> {
        children(t).into_iter().cloned().collect()
    }

    fn open(&self, _: &Phrase, _: &SecEnv, _: &mut FreshSupply) {}

    fn tr(&self, _: &Phrase, _: &(), _: usize, _: &SecEnv, _: &[SecurityType]) -> Option<SecEnv> {
        None
    }

    fn checkjoin(
        &self,
        t: &Phrase,
        _: &(),
        _: &SecEnv,
        rs: &[SecurityType],
        _: &mut FreshSupply,
    ) -> Result<SecurityType, TypeError> {
        join(t, rs)
    }

    fn compat(&self, env: &SecEnv, cached: &SecEnv, t: &Phrase) -> bool {
        compat_s(env, cached, t.free_vars())
    }
}

impl CacheCodec for WhileSecurity {
    fn parse_term(&self, src: &str) -> Result<Phrase, ParseError> {
        parse_while(src)
    }

    fn encode_entry(&self, env: &SecEnv, result: &SecurityType) -> (String, String) {
        (encode_env(env, SecurityType::to_string), result.to_string())
    }

    fn decode_entry(&self, env: &str, result: &str) -> Result<(SecEnv, SecurityType), ParseError> {
        Ok((decode_env(env, SecurityType::parse)?, SecurityType::parse(result)?))
    }
}

/// Incremental security checking.
pub fn check_is(env: &SecEnv, cache: &mut Cache<WhileSecurity>, p: &Phrase) -> Result<Typed<SecurityType>, TypeError> {
    crate::engine::incremental_type(&WhileSecurity, env, cache, p)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LevelsError {
    #[error("levels file line {line}: expected `name=L` or `name=H`, found `{text}`")]
    Malformed { line: usize, text: String },
    #[error("no security level declared for {}", .0.join(", "))]
    Missing(Vec<String>),
}

/// Reads `name=L|H` lines into an environment mapping each name to `τ var`.
/// Blank lines and `#` comments are ignored.
pub fn parse_levels(text: &str) -> Result<SecEnv, LevelsError> {
    let mut env = SecEnv::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let malformed = || LevelsError::Malformed { line: i + 1, text: raw.to_string() };
        let (x, l) = line.split_once('=').ok_or_else(malformed)?;
        let x = x.trim();
        if x.is_empty() || !x.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(malformed());
        }
        let level: Level = l.trim().parse().map_err(|_| malformed())?;
        env.insert(name(x), SecurityType::Var(level));
    }
    Ok(env)
}

/// Fails if some variable of `p` has no declared level.
pub fn require_levels(env: &SecEnv, p: &Phrase) -> Result<(), LevelsError> {
    let missing: Vec<String> = p.free_vars().iter().filter(|x| !env.contains(x)).map(|x| x.to_string()).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(LevelsError::Missing(missing))
    }
}
