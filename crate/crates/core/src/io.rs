//! Plain-text formats shared by the command-line stages.
//!
//! Every file is line oriented, `#` starts a comment, and headers are
//! `key = value` lines.  Files that depend on a factor base record the
//! SHA-256 of that factor-base file so stale inputs are caught.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rug::Integer;
use sha2::{Digest, Sha256};

use crate::analytic::ApCache;
use crate::cubic::{BinaryCubicForm, CubicField, FactorBase, FactorBasePrime};
use crate::elliptic::{EllipticCurve, LocalReductionData, ReductionType};
use crate::error::{Error, Result};
use crate::gf2::SparseBitMatrix;
use crate::numeric::ProjRoot;
use crate::sieve::Relation;

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn int(s: &str, line: usize) -> Result<Integer> {
    s.trim().parse::<Integer>().map_err(|e| parse_err(line, format!("{s:?}: {e}")))
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.trim().parse::<T>().map_err(|e| parse_err(line, format!("{s:?}: {e}")))
}

/// `key = value` pairs, ignoring blank lines and comments.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| parse_err(i + 1, "expected key = value"))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| Error::Parse(format!("{t:?}: {e}"))))
        .collect()
}

// ---------------------------------------------------------------------------
// curves

/// A curve file: `a1 .. a6` plus optional `conductor`, `root_number`,
/// `bad_primes`, `rank_lower` and per-prime lines `local.P = type kodaira a_p
/// ord_disc f`.
#[derive(Clone, Debug)]
pub struct CurveSpec {
    pub curve: EllipticCurve,
    pub conductor: Option<Integer>,
    pub root_number: Option<i8>,
    pub bad_primes: Vec<Integer>,
    pub rank_lower: Option<i64>,
    pub local: Vec<LocalReductionData>,
}

pub fn parse_curve(text: &str) -> Result<CurveSpec> {
    let kv = parse_kv(text)?;
    let get = |k: &str| kv.get(k).ok_or_else(|| Error::Parse(format!("missing {k}")));
    let mut a: [Integer; 5] = Default::default();
    for (i, k) in ["a1", "a2", "a3", "a4", "a6"].iter().enumerate() {
        a[i] = int(get(k)?, 0)?;
    }
    let curve = EllipticCurve::new(a)?;
    let conductor = kv.get("conductor").map(|s| int(s, 0)).transpose()?;
    let root_number = match kv.get("root_number").map(String::as_str) {
        None => None,
        Some("1") | Some("+1") => Some(1),
        Some("-1") => Some(-1),
        Some(s) => return Err(Error::Parse(format!("root_number must be +1 or -1, got {s}"))),
    };
    let bad_primes = kv.get("bad_primes").map(|s| parse_list::<Integer>(s)).transpose()?.unwrap_or_default();
    let rank_lower = kv.get("rank_lower").map(|s| num(s, 0)).transpose()?;
    let mut local = Vec::new();
    for (k, v) in kv.iter().filter(|(k, _)| k.starts_with("local.")) {
        let p = int(&k["local.".len()..], 0)?;
        let f: Vec<&str> = v.split_whitespace().collect();
        if f.len() != 5 {
            return Err(Error::Parse(format!("{k}: expected `type kodaira a_p ord_disc f`")));
        }
        let reduction = ReductionType::parse(f[0]).ok_or_else(|| Error::Parse(format!("{k}: reduction type {}", f[0])))?;
        local.push(LocalReductionData {
            p,
            reduction,
            kodaira: f[1].to_string(),
            a_p: num(f[2], 0)?,
            ord_p_disc: num(f[3], 0)?,
            conductor_exponent: num(f[4], 0)?,
        });
    }
    local.sort_by(|x, y| x.p.cmp(&y.p));
    Ok(CurveSpec { curve, conductor, root_number, bad_primes, rank_lower, local })
}

pub fn format_local(d: &LocalReductionData) -> String {
    format!(
        "local.{} = {} {} {} {} {}",
        d.p,
        d.reduction.as_str(),
        d.kodaira,
        d.a_p,
        d.ord_p_disc,
        d.conductor_exponent
    )
}

/// A form file: `form = c3 c2 c1 c0` (other keys ignored).
pub fn parse_form(text: &str) -> Result<BinaryCubicForm> {
    let kv = parse_kv(text)?;
    let s = kv.get("form").ok_or_else(|| Error::Parse("missing form".into()))?;
    let c: Vec<Integer> = parse_list(s)?;
    let c: [Integer; 4] = c.try_into().map_err(|_| Error::Parse("form needs four coefficients".into()))?;
    Ok(BinaryCubicForm::new(c))
}

pub fn format_form(f: &BinaryCubicForm) -> String {
    let c = f.coeffs();
    format!("form = {} {} {} {}\n", c[0], c[1], c[2], c[3])
}

// ---------------------------------------------------------------------------
// factor base

pub fn write_factor_base(base: &FactorBase) -> String {
    let mut s = String::new();
    let c = base.field.form.coeffs();
    let _ = writeln!(s, "form = {} {} {} {}", c[0], c[1], c[2], c[3]);
    let _ = writeln!(s, "disc = {}", base.field.disc);
    let _ = writeln!(s, "bound = {}", base.bound);
    let _ = writeln!(s, "count = {}", base.len());
    let _ = writeln!(s, "---");
    for q in &base.primes {
        let (r, t) = q.root.coords();
        let _ = writeln!(s, "{} {} {} {} {}", q.p, r, t, q.ramified as u8, q.alpha_valuation);
    }
    s
}

fn split_header(text: &str) -> Result<(&str, &str)> {
    match text.find("\n---\n") {
        Some(i) => Ok((&text[..i], &text[i + 5..])),
        None if text.ends_with("\n---") => Ok((&text[..text.len() - 4], "")),
        None => Err(Error::Parse("missing --- separator".into())),
    }
}

pub fn read_factor_base(text: &str) -> Result<FactorBase> {
    let (head, body) = split_header(text)?;
    let kv = parse_kv(head)?;
    let form = parse_form(head)?;
    let field = CubicField::from_maximal_form(form)?;
    let disc = int(kv.get("disc").ok_or_else(|| Error::Parse("missing disc".into()))?, 0)?;
    if disc != field.disc {
        return Err(Error::Inconsistent(format!("recorded disc {disc} differs from disc(form) {}", field.disc)));
    }
    let bound: u64 = num(kv.get("bound").ok_or_else(|| Error::Parse("missing bound".into()))?, 0)?;
    let count: usize = num(kv.get("count").ok_or_else(|| Error::Parse("missing count".into()))?, 0)?;
    let mut primes = Vec::with_capacity(count);
    for (i, line) in body.lines().enumerate() {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.is_empty() {
            continue;
        }
        if f.len() != 5 {
            return Err(parse_err(i + 1, "expected `p r s ramified alpha_val`"));
        }
        let p: u64 = num(f[0], i + 1)?;
        let r: u64 = num(f[1], i + 1)?;
        let t: u64 = num(f[2], i + 1)?;
        let root = if t == 0 { ProjRoot::Infinity } else { ProjRoot::Affine(r) };
        primes.push(FactorBasePrime {
            p,
            root,
            ramified: num::<u8>(f[3], i + 1)? == 1,
            alpha_valuation: num(f[4], i + 1)?,
        });
    }
    if primes.len() != count {
        return Err(Error::Inconsistent(format!("count = {count} but {} entries", primes.len())));
    }
    Ok(FactorBase::from_parts(field, bound, primes))
}

// ---------------------------------------------------------------------------
// relations

pub fn write_relations(rels: &[Relation], base_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "factor-base-hash = {base_hash}");
    let _ = writeln!(s, "count = {}", rels.len());
    let _ = writeln!(s, "---");
    for r in rels {
        let _ = write!(s, "{} {} :", r.a, r.b);
        for (k, (c, e)) in r.exponents.iter().enumerate() {
            let _ = write!(s, "{}{c}^{e}", if k == 0 { " " } else { "," });
        }
        s.push('\n');
    }
    s
}

/// Relations and the factor-base hash they were written against.
pub fn read_relations(text: &str) -> Result<(Vec<Relation>, String)> {
    let (head, body) = split_header(text)?;
    let kv = parse_kv(head)?;
    let hash = kv.get("factor-base-hash").cloned().ok_or_else(|| Error::Parse("missing factor-base-hash".into()))?;
    let count: usize = num(kv.get("count").ok_or_else(|| Error::Parse("missing count".into()))?, 0)?;
    let mut rels = Vec::with_capacity(count);
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (ab, ex) = line.split_once(':').ok_or_else(|| parse_err(i + 1, "expected `a b : ...`"))?;
        let f: Vec<&str> = ab.split_whitespace().collect();
        if f.len() != 2 {
            return Err(parse_err(i + 1, "expected `a b`"));
        }
        let mut exponents = Vec::new();
        for t in ex.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let (c, e) = t.split_once('^').ok_or_else(|| parse_err(i + 1, format!("bad entry {t:?}")))?;
            exponents.push((num(c, i + 1)?, num(e, i + 1)?));
        }
        rels.push(Relation { a: num(f[0], i + 1)?, b: num(f[1], i + 1)?, exponents });
    }
    if rels.len() != count {
        return Err(Error::Inconsistent(format!("count = {count} but {} relations", rels.len())));
    }
    Ok((rels, hash))
}

// ---------------------------------------------------------------------------
// matrices

pub fn write_matrix(m: &SparseBitMatrix, base_hash: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "factor-base-hash = {base_hash}");
    let _ = writeln!(s, "rows = {}", m.nrows());
    let _ = writeln!(s, "cols = {}", m.ncols());
    let _ = writeln!(s, "---");
    for r in m.rows() {
        let line: Vec<String> = r.iter().map(u32::to_string).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

pub fn read_matrix(text: &str) -> Result<(SparseBitMatrix, String)> {
    let (head, body) = split_header(text)?;
    let kv = parse_kv(head)?;
    let hash = kv.get("factor-base-hash").cloned().unwrap_or_default();
    let rows: usize = num(kv.get("rows").ok_or_else(|| Error::Parse("missing rows".into()))?, 0)?;
    let cols: usize = num(kv.get("cols").ok_or_else(|| Error::Parse("missing cols".into()))?, 0)?;
    let mut m = SparseBitMatrix::new(cols);
    for (i, line) in body.lines().enumerate() {
        let r: Vec<u32> = line.split_whitespace().map(|t| num(t, i + 1)).collect::<Result<_>>()?;
        if r.iter().any(|&c| c as usize >= cols) {
            return Err(parse_err(i + 1, "column out of range"));
        }
        m.push_row(r);
    }
    if m.nrows() != rows {
        return Err(Error::Inconsistent(format!("rows = {rows} but {} lines", m.nrows())));
    }
    Ok((m, hash))
}

// ---------------------------------------------------------------------------
// a_p cache

pub fn read_ap_cache(text: &str) -> Result<ApCache> {
    let mut cache = ApCache::default();
    let mut last = 0u64;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 2 {
            return Err(parse_err(i + 1, "expected `p a_p`"));
        }
        let p: u64 = num(f[0], i + 1)?;
        if p <= last {
            return Err(parse_err(i + 1, "primes must be strictly increasing"));
        }
        let ap: i64 = num(f[1], i + 1)?;
        if (ap * ap) as f64 > 4.0 * p as f64 {
            return Err(parse_err(i + 1, format!("|a_p| = {} violates the Hasse bound", ap.abs())));
        }
        last = p;
        cache.values.insert(p, ap);
    }
    Ok(cache)
}

pub fn write_ap_cache(cache: &ApCache) -> String {
    let mut s = String::new();
    for (p, a) in &cache.values {
        let _ = writeln!(s, "{p} {a}");
    }
    s
}
