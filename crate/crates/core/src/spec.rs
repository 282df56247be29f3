//! Parsers for the textual functional and set descriptions used by the CLI.
//!
//! Every `Display` impl of a parsed type prints a string this module reads
//! back to an equal value.

use std::str::FromStr;

use crate::error::{Result, RiskError};
use crate::scalar::ScalarRisk;
use crate::setrisk::SetValuedRiskMeasure;
use crate::sets::{HalfspaceRow, UpperConvexSet};
use crate::vector::{FunctionalRegistry, VectorFunctional, VectorRisk};

fn parse_err(input: &str, reason: impl Into<String>) -> RiskError {
    RiskError::Parse { input: input.to_string(), reason: reason.into() }
}

/// Comma-separated reals, optionally wrapped in brackets.
pub fn parse_list(input: &str) -> Result<Vec<f64>> {
    let body = input.trim();
    let body = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')).unwrap_or(body);
    if body.trim().is_empty() {
        return Err(parse_err(input, "empty list"));
    }
    body.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| parse_err(input, format!("`{}`: {e}", t.trim()))))
        .collect()
}

fn parse_number(input: &str, what: &str) -> Result<f64> {
    input.trim().parse::<f64>().map_err(|_| parse_err(input, format!("{what} is not a number")))
}

/// Splits on `sep` outside brackets and parentheses.
fn split_top(input: &str, sep: char) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in input.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(parse_err(input, "unbalanced brackets"));
                }
            }
            c if c == sep && depth == 0 => {
                parts.push(&input[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(parse_err(input, "unbalanced brackets"));
    }
    parts.push(&input[start..]);
    Ok(parts)
}

/// `key=value` pairs separated by `sep`; a piece without `=` continues the
/// previous value, so `beta=1,weights=0.5,0.5` yields a two-entry weight list.
fn key_values(input: &str, sep: char) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for piece in split_top(input, sep)? {
        match piece.split_once('=') {
            Some((k, v)) if !k.contains('[') => out.push((k.trim().to_string(), v.trim().to_string())),
            _ => match out.last_mut() {
                Some((_, v)) => {
                    v.push(sep);
                    v.push_str(piece.trim());
                }
                None => return Err(parse_err(input, format!("expected key=value, got `{piece}`"))),
            },
        }
    }
    Ok(out)
}

fn take<'a>(input: &str, pairs: &'a [(String, String)], key: &str) -> Result<&'a str> {
    pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str()).ok_or_else(|| parse_err(input, format!("missing {key}=...")))
}

fn only_keys(input: &str, pairs: &[(String, String)], allowed: &[&str]) -> Result<()> {
    match pairs.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        Some((k, _)) => Err(parse_err(input, format!("unknown parameter `{k}`"))),
        None => Ok(()),
    }
}

pub fn parse_scalar(input: &str) -> Result<ScalarRisk> {
    ScalarRisk::from_str(input)
}

/// `separable:[...]`, `aggregate_entropic:beta=..,weights=..` or `custom:NAME`.
pub fn parse_vector(input: &str, registry: &FunctionalRegistry) -> Result<VectorRisk> {
    let s = input.trim();
    let (kind, rest) = s.split_once(':').ok_or_else(|| parse_err(input, "expected KIND:PARAMS"))?;
    match kind.trim() {
        "separable" => {
            let body = rest.trim();
            let body = body
                .strip_prefix('[')
                .and_then(|b| b.strip_suffix(']'))
                .ok_or_else(|| parse_err(input, "separable expects a bracketed list"))?;
            let comps = split_top(body, ',')?
                .into_iter()
                .filter(|p| !p.trim().is_empty())
                .map(parse_scalar)
                .collect::<Result<Vec<_>>>()?;
            VectorRisk::separable(comps)
        }
        "aggregate_entropic" => {
            let pairs = key_values(rest, ',')?;
            only_keys(input, &pairs, &["beta", "weights"])?;
            VectorRisk::aggregate_entropic(parse_number(take(input, &pairs, "beta")?, "beta")?, parse_list(take(input, &pairs, "weights")?)?)
        }
        "custom" => registry
            .get(rest.trim())
            .cloned()
            .map(VectorRisk::custom)
            .ok_or_else(|| parse_err(input, format!("no registered functional `{}`", rest.trim()))),
        other => Err(parse_err(input, format!("unknown vector functional `{other}`"))),
    }
}

/// `[[a_1,...,a_N,b],...]`: each row is `a^T k >= b`.
fn parse_rows(input: &str) -> Result<Vec<HalfspaceRow>> {
    let body = input.trim();
    let body = body
        .strip_prefix('[')
        .and_then(|b| b.strip_suffix(']'))
        .ok_or_else(|| parse_err(input, "K must be a bracketed list of rows"))?;
    split_top(body, ',')?
        .into_iter()
        .map(|row| {
            let mut v = parse_list(row)?;
            if v.len() < 2 {
                return Err(parse_err(input, "a row of K needs a normal and an offset"));
            }
            let b = v.pop().expect("nonempty");
            Ok(HalfspaceRow { a: v, b })
        })
        .collect()
}

/// `orthant`, `halfspace:u=..;c=..`, `entropic:K=..;beta=..` or
/// `shift(v;SET)`. A bare `orthant` takes its dimension from `dim`.
pub fn parse_set(input: &str, dim: Option<usize>) -> Result<UpperConvexSet> {
    let s = input.trim();
    if let Some(inner) = s.strip_prefix("shift(").and_then(|b| b.strip_suffix(')')) {
        let (v, base) = inner.split_once(';').ok_or_else(|| parse_err(input, "expected shift(v;SET)"))?;
        let shift = parse_list(v)?;
        return parse_set(base, Some(shift.len()))?.shifted(shift);
    }
    let (kind, rest) = match s.split_once(':') {
        Some((k, r)) => (k.trim(), r),
        None => (s, ""),
    };
    match kind {
        "orthant" => {
            let n = if rest.trim().is_empty() {
                dim.ok_or_else(|| parse_err(input, "orthant needs a dimension (orthant:dim=N)"))?
            } else {
                let pairs = key_values(rest, ';')?;
                only_keys(input, &pairs, &["dim"])?;
                take(input, &pairs, "dim")?.trim().parse().map_err(|_| parse_err(input, "dim is not an integer"))?
            };
            UpperConvexSet::orthant(n)
        }
        "halfspace" => {
            let pairs = key_values(rest, ';')?;
            only_keys(input, &pairs, &["u", "c"])?;
            UpperConvexSet::halfspace(parse_list(take(input, &pairs, "u")?)?, parse_number(take(input, &pairs, "c")?, "c")?)
        }
        "entropic" => {
            let pairs = key_values(rest, ';')?;
            only_keys(input, &pairs, &["K", "beta"])?;
            UpperConvexSet::entropic(parse_rows(take(input, &pairs, "K")?)?, parse_list(take(input, &pairs, "beta")?)?)
        }
        other => Err(parse_err(input, format!("unknown set `{other}`"))),
    }
}

/// Byte offset of the first `pat` outside brackets.
fn find_top(input: &str, pat: &str) -> Option<usize> {
    let mut depth = 0i32;
    for (i, c) in input.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            _ if depth == 0 && input[i..].starts_with(pat) => return Some(i),
            _ => {}
        }
    }
    None
}

/// `svrm:vector_based:r=VECTOR;C=SET` or `svrm:aggregate_halfspace:beta=..;weights=..`.
pub fn parse_svrm(input: &str, registry: &FunctionalRegistry) -> Result<SetValuedRiskMeasure> {
    let s = input.trim();
    let body = s.strip_prefix("svrm:").ok_or_else(|| parse_err(input, "expected svrm:..."))?;
    let (kind, rest) = body.split_once(':').ok_or_else(|| parse_err(input, "expected svrm:KIND:PARAMS"))?;
    match kind {
        "vector_based" => {
            let r_part = rest.trim().strip_prefix("r=").ok_or_else(|| parse_err(input, "expected r=..."))?;
            let cut = find_top(r_part, ";C=").ok_or_else(|| parse_err(input, "expected ;C=..."))?;
            let r = parse_vector(&r_part[..cut], registry)?;
            let c = parse_set(&r_part[cut + 3..], Some(r.dim()))?;
            SetValuedRiskMeasure::vector_based(r, c)
        }
        "aggregate_halfspace" => {
            let pairs = key_values(rest, ';')?;
            only_keys(input, &pairs, &["beta", "weights"])?;
            SetValuedRiskMeasure::aggregate_halfspace(
                parse_number(take(input, &pairs, "beta")?, "beta")?,
                parse_list(take(input, &pairs, "weights")?)?,
            )
        }
        other => Err(parse_err(input, format!("unknown set-valued measure `{other}`"))),
    }
}

/// A parsed specification of any kind.
#[derive(Debug, Clone)]
pub enum Spec {
    Scalar(ScalarRisk),
    Vector(VectorRisk),
    Set(UpperConvexSet),
    SetValued(SetValuedRiskMeasure),
}

/// Dispatches on the leading keyword. `entropic:beta=..` is scalar while
/// `entropic:K=..` is a set.
pub fn parse_spec(input: &str, registry: &FunctionalRegistry, dim: Option<usize>) -> Result<Spec> {
    let s = input.trim();
    let kind = s.split(':').next().unwrap_or("").trim();
    match kind {
        "svrm" => parse_svrm(s, registry).map(Spec::SetValued),
        "separable" | "aggregate_entropic" | "custom" => parse_vector(s, registry).map(Spec::Vector),
        "orthant" | "halfspace" => parse_set(s, dim).map(Spec::Set),
        _ if s.starts_with("shift(") => parse_set(s, dim).map(Spec::Set),
        "entropic" if s.contains("K=") => parse_set(s, dim).map(Spec::Set),
        _ => parse_scalar(s).map(Spec::Scalar),
    }
}
