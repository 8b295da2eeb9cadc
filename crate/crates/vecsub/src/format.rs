//! Text format for filters.
//!
//! ```text
//! # comment
//! filter d=2 r=2 s=2 kind=rational
//! meta name=ex1
//! support [-3,3]x[-3,3]
//! (0,0): 1/4 0 -1/32 -3/32
//! ```
//!
//! Each entry line gives a lattice point and the row-major r×s block. Rationals are `p/q`,
//! complex floats `re+imi`. Several filters may follow each other in one file.

use crate::error::{Error, Result};
use crate::filter::{AnyFilter, BoxRange, MatrixFilter};
use crate::lattice::LatticePoint;
use crate::scalar::{ScalarKind, ScalarText, C64, Q};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// A parsed filter with its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct FilterRecord {
    pub filter: AnyFilter,
    pub meta: BTreeMap<String, String>,
}

pub fn write_filter<T: ScalarText>(f: &MatrixFilter<T>, meta: &[(&str, String)]) -> String {
    let mut out = String::new();
    let kind = match T::KIND {
        ScalarKind::Rational => "rational",
        _ => "complex",
    };
    writeln!(out, "filter d={} r={} s={} kind={kind}", f.dim(), f.rows(), f.cols()).unwrap();
    for (k, v) in meta {
        writeln!(out, "meta {k}={v}").unwrap();
    }
    if let Some(bx) = f.support() {
        let parts: Vec<String> = bx.lo.iter().zip(&bx.hi).map(|(l, h)| format!("[{l},{h}]")).collect();
        writeln!(out, "support {}", parts.join("x")).unwrap();
    }
    for (k, b) in f.iter_nonzero() {
        let pt: Vec<String> = k.iter().map(|c| c.to_string()).collect();
        let vals: Vec<String> = b.iter().map(|v| text_of(v)).collect();
        writeln!(out, "({}): {}", pt.join(","), vals.join(" ")).unwrap();
    }
    out
}

fn text_of<T: ScalarText>(v: &T) -> String {
    if T::KIND == ScalarKind::Real {
        // real backends are written as complex so the reader has one float kind
        crate::scalar::format_c64(&v.to_c64())
    } else {
        v.to_text()
    }
}

pub fn write_any(f: &AnyFilter, meta: &[(&str, String)]) -> String {
    match f {
        AnyFilter::Rational(x) => write_filter(x, meta),
        AnyFilter::Complex(x) => write_filter(x, meta),
    }
}

struct Header {
    d: usize,
    r: usize,
    s: usize,
    kind: ScalarKind,
}

struct Pending {
    header: Header,
    meta: BTreeMap<String, String>,
    support: Option<BoxRange>,
    entries: Vec<(LatticePoint, Vec<String>, usize, usize)>,
}

/// Every filter in the text, in order.
pub fn read_filters(text: &str) -> Result<Vec<FilterRecord>> {
    let mut out = Vec::new();
    let mut cur: Option<Pending> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let indent = line.len() - line.trim_start().len();
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("filter") {
            if let Some(p) = cur.take() {
                out.push(finish(p)?);
            }
            let header = parse_header(rest, line_no, indent + 6)?;
            cur = Some(Pending { header, meta: BTreeMap::new(), support: None, entries: Vec::new() });
            continue;
        }
        let Some(p) = cur.as_mut() else {
            return Err(Error::parse(line_no, indent + 1, "expected a `filter` header line"));
        };
        if let Some(rest) = line.strip_prefix("meta") {
            let (k, v) = rest.trim().split_once('=').ok_or_else(|| Error::parse(line_no, indent + 5, "meta needs key=value"))?;
            p.meta.insert(k.trim().to_string(), v.trim().to_string());
        } else if let Some(rest) = line.strip_prefix("support") {
            p.support = Some(parse_support(rest.trim(), p.header.d, line_no, indent + 8)?);
        } else if line.starts_with('(') {
            let close = line.find(')').ok_or_else(|| Error::parse(line_no, indent + 1, "unclosed lattice point"))?;
            let pt = parse_point(&line[1..close], p.header.d, line_no, indent + 2)?;
            let rest = &line[close + 1..];
            let rest = rest.trim_start().strip_prefix(':').ok_or_else(|| Error::parse(line_no, indent + close + 2, "expected `:` after the lattice point"))?;
            let col0 = indent + close + 3;
            let vals: Vec<String> = rest.split_whitespace().map(|s| s.to_string()).collect();
            if vals.len() != p.header.r * p.header.s {
                return Err(Error::parse(
                    line_no,
                    col0,
                    format!("expected {} values, found {}", p.header.r * p.header.s, vals.len()),
                ));
            }
            p.entries.push((pt, vals, line_no, col0));
        } else {
            return Err(Error::parse(line_no, indent + 1, format!("unrecognized line `{line}`")));
        }
    }
    if let Some(p) = cur.take() {
        out.push(finish(p)?);
    }
    Ok(out)
}

/// The single filter in the text.
pub fn read_filter(text: &str) -> Result<FilterRecord> {
    let mut all = read_filters(text)?;
    match all.len() {
        0 => Err(Error::parse(1, 1, "no filter found")),
        1 => Ok(all.pop().unwrap()),
        n => Err(Error::parse(1, 1, format!("expected one filter, found {n}"))),
    }
}

pub fn read_filter_file(path: &std::path::Path) -> Result<FilterRecord> {
    read_filter(&std::fs::read_to_string(path)?)
}

fn parse_header(rest: &str, line: usize, col: usize) -> Result<Header> {
    let mut d = None;
    let mut r = None;
    let mut s = None;
    let mut kind = ScalarKind::Rational;
    for tok in rest.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| Error::parse(line, col, format!("bad header field `{tok}`")))?;
        let num = || v.parse::<usize>().map_err(|_| Error::parse(line, col, format!("bad value in `{tok}`")));
        match k {
            "d" => d = Some(num()?),
            "r" => r = Some(num()?),
            "s" => s = Some(num()?),
            "kind" => {
                kind = match v {
                    "rational" => ScalarKind::Rational,
                    "complex" => ScalarKind::Complex,
                    _ => return Err(Error::parse(line, col, format!("unknown scalar kind `{v}`"))),
                }
            }
            _ => return Err(Error::parse(line, col, format!("unknown header field `{k}`"))),
        }
    }
    let d = d.ok_or_else(|| Error::parse(line, col, "header lacks d"))?;
    let r = r.ok_or_else(|| Error::parse(line, col, "header lacks r"))?;
    let s = s.unwrap_or(r);
    if d == 0 || r == 0 || s == 0 {
        return Err(Error::parse(line, col, "d, r and s must be positive"));
    }
    Ok(Header { d, r, s, kind })
}

fn parse_point(txt: &str, d: usize, line: usize, col: usize) -> Result<LatticePoint> {
    let pt: Vec<i64> = txt
        .split(',')
        .map(|c| c.trim().parse::<i64>().map_err(|_| Error::parse(line, col, format!("bad coordinate `{}`", c.trim()))))
        .collect::<Result<_>>()?;
    if pt.len() != d {
        return Err(Error::parse(line, col, format!("point has {} coordinates, expected {d}", pt.len())));
    }
    Ok(pt)
}

fn parse_support(txt: &str, d: usize, line: usize, col: usize) -> Result<BoxRange> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for part in txt.split('x') {
        let inner = part
            .trim()
            .strip_prefix('[')
            .and_then(|p| p.strip_suffix(']'))
            .ok_or_else(|| Error::parse(line, col, format!("bad support interval `{part}`")))?;
        let (l, h) = inner.split_once(',').ok_or_else(|| Error::parse(line, col, "interval needs lo,hi"))?;
        let l: i64 = l.trim().parse().map_err(|_| Error::parse(line, col, "bad interval bound"))?;
        let h: i64 = h.trim().parse().map_err(|_| Error::parse(line, col, "bad interval bound"))?;
        if l > h {
            return Err(Error::parse(line, col, "empty support interval"));
        }
        lo.push(l);
        hi.push(h);
    }
    if lo.len() != d {
        return Err(Error::parse(line, col, format!("support has {} intervals, expected {d}", lo.len())));
    }
    Ok(BoxRange::new(lo, hi))
}

fn build<T: ScalarText>(p: &Pending) -> Result<MatrixFilter<T>> {
    let mut entries = Vec::with_capacity(p.entries.len());
    for (pt, vals, line, col) in &p.entries {
        if let Some(bx) = &p.support {
            if !bx.contains(pt) {
                return Err(Error::parse(*line, 1, format!("point {pt:?} lies outside the declared support")));
            }
        }
        let v: Vec<T> = vals
            .iter()
            .map(|s| T::from_text(s).ok_or_else(|| Error::parse(*line, *col, format!("bad {} value `{s}`", T::KIND))))
            .collect::<Result<_>>()?;
        entries.push((pt.clone(), v));
    }
    Ok(MatrixFilter::from_entries(p.header.d, p.header.r, p.header.s, entries))
}

fn finish(p: Pending) -> Result<FilterRecord> {
    let filter = match p.header.kind {
        ScalarKind::Rational => AnyFilter::Rational(build::<Q>(&p)?),
        _ => AnyFilter::Complex(build::<C64>(&p)?),
    };
    Ok(FilterRecord { filter, meta: p.meta })
}

/// Rational view, or a parse-class error naming what was found.
pub fn expect_rational(rec: &FilterRecord) -> Result<&MatrixFilter<Q>> {
    rec.filter.as_rational().ok_or_else(|| Error::parse(1, 1, "this command needs a rational filter"))
}
