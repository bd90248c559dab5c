//! Text format for persisting caches.
//!
//! ```text
//! increty-cache v1 <instance> fresh=<n>
//! <key>\t<term>\t<env>\t<result>
//! ```
//!
//! `key` is a CRC-32 of the printed term, in hex. Entry lines are sorted,
//! so dumping the same cache twice yields identical bytes.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Cache, LanguageInstance};
use crate::terms::{ParseError, TypeEnv};

const MAGIC: &str = "increty-cache v1";

/// Textual encoding of an instance's terms and cache entries.
pub trait CacheCodec: LanguageInstance {
    fn parse_term(&self, src: &str) -> Result<Self::Term, ParseError>;

    /// Environment and result of one entry, printed together so that type
    /// variables can be named consistently within the entry.
    fn encode_entry(&self, env: &TypeEnv<Self::Ty>, result: &Self::Res) -> (String, String);

    /// Inverse of [`encode_entry`](Self::encode_entry). Type variables are
    /// numbered from 0 within each entry.
    fn decode_entry(&self, env: &str, result: &str) -> Result<(TypeEnv<Self::Ty>, Self::Res), ParseError>;
}

#[derive(Debug, Error)]
pub enum CacheFileError {
    #[error("not a cache file: expected `{MAGIC} <instance> fresh=<n>` header")]
    BadHeader,
    #[error("cache was written for `{found}`, not `{expected}`")]
    WrongInstance { expected: &'static str, found: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

fn key_of(t: &impl std::fmt::Display) -> u32 {
    crc32fast::hash(t.to_string().as_bytes())
}

/// Serializes `cache` in the text format.
pub fn dump<L: CacheCodec>(lang: &L, cache: &Cache<L>) -> String {
    let mut lines: Vec<String> = cache
        .iter()
        .map(|(t, e)| {
            let (env, res) = lang.encode_entry(&e.env, &e.result);
            format!("{:08x}\t{t}\t{env}\t{res}", key_of(t))
        })
        .collect();
    lines.sort();
    let mut out = String::new();
    writeln!(out, "{MAGIC} {} fresh={}", L::NAME, cache.fresh_counter()).unwrap();
    for l in lines {
        out.push_str(&l);
        out.push('\n');
    }
    out
}

/// Instance tag and fresh counter from a cache file's header line.
pub fn read_header(text: &str) -> Result<(&str, u64), CacheFileError> {
    let header = text.lines().next().ok_or(CacheFileError::BadHeader)?;
    let rest = header.strip_prefix(MAGIC).and_then(|r| r.strip_prefix(' ')).ok_or(CacheFileError::BadHeader)?;
    let (instance, fresh) = rest.split_once(' ').ok_or(CacheFileError::BadHeader)?;
    let fresh = fresh.strip_prefix("fresh=").and_then(|n| n.parse().ok()).ok_or(CacheFileError::BadHeader)?;
    Ok((instance, fresh))
}

/// Reads a cache written by [`dump`] for the same instance.
pub fn load<L: CacheCodec>(lang: &L, text: &str) -> Result<Cache<L>, CacheFileError> {
    let (instance, fresh) = read_header(text)?;
    if instance != L::NAME {
        return Err(CacheFileError::WrongInstance { expected: L::NAME, found: instance.to_string() });
    }
    let lines = text.lines().enumerate().skip(1);

    let mut cache = Cache::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| CacheFileError::Line { line: i + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        let [key, term, env, res] = fields[..] else {
            return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
        };
        let key = u32::from_str_radix(key, 16).map_err(|_| err(format!("bad key `{key}`")))?;
        let term = lang.parse_term(term).map_err(|e| err(e.to_string()))?;
        if key_of(&term) != key {
            return Err(err(format!("key {key:08x} does not match term `{term}`")));
        }
        let (env, res) = lang.decode_entry(env, res).map_err(|e| err(e.to_string()))?;
        cache.insert(term, env, res);
    }
    cache.set_fresh_counter(fresh);
    Ok(cache)
}

/// `x:T,y:U` using each type's own printer.
pub fn encode_env<T: Clone>(env: &TypeEnv<T>, mut ty: impl FnMut(&T) -> String) -> String {
    env.iter().map(|(x, t)| format!("{x}:{}", ty(t))).collect::<Vec<_>>().join(",")
}

/// Inverse of [`encode_env`].
pub fn decode_env<T: Clone>(
    src: &str,
    mut ty: impl FnMut(&str) -> Result<T, ParseError>,
) -> Result<TypeEnv<T>, ParseError> {
    let mut env = TypeEnv::new();
    if src.is_empty() {
        return Ok(env);
    }
    for binding in src.split(',') {
        let (x, t) = binding
            .split_once(':')
            .ok_or_else(|| ParseError { line: 1, col: 1, message: format!("bad binding `{binding}`") })?;
        env.insert(crate::terms::name(x), ty(t)?);
    }
    Ok(env)
}
