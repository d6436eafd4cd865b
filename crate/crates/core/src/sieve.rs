//! Relation collection over the factor base.
//!
//! A relation is a coprime pair `(a, b)` such that the fractional ideal
//! `(a + b alpha)` is supported on the factor base.  With `J^-1` the integral
//! ideal of norm `|c3|` supported on the `(1:0)` primes,
//! `(a + b alpha) J^-1` is integral of norm `|F(a, -b)|` and meets each
//! rational prime `p` only at the degree-one prime matching `(a : -b) mod p`.
//! So the exponent at that prime is `v_p(F(a, -b))`, and every relation also
//! carries the constant offset `-v_p(c3)` at each `(1:0)` prime.
//!
//! The line sieve accumulates `floor(v log2 p)` in bytes, with prime powers
//! sieved through Hensel-lifted roots, and exact valuations at ramified and
//! projective roots.  Survivors are re-factored exactly.

use std::collections::HashSet;

use rayon::prelude::*;
use rug::{Assign, Integer};

use crate::cubic::FactorBase;
use crate::error::{Error, Result};
use crate::numeric::{inv_mod, mod_u64, roots_mod_p_u64, ProjRoot};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub a: i64,
    pub b: i64,
    /// `(column, valuation)` sorted by column, zero valuations omitted.
    pub exponents: Vec<(u32, i32)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Sieved,
    Rational,
    Targeted,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Sieved => "sieved",
            Source::Rational => "rational",
            Source::Targeted => "targeted",
        }
    }
}

impl Relation {
    /// Exact check of `prod p^e = |F(a, -b)| / |c3|` and of the column indices.
    pub fn verify(&self, base: &FactorBase) -> Result<()> {
        let form = &base.field.form;
        let norm = form.norm_ab(self.a, self.b).abs();
        let mut num = Integer::from(1);
        let mut den = Integer::from(1);
        for &(col, e) in &self.exponents {
            let q = base
                .primes
                .get(col as usize)
                .ok_or_else(|| Error::Inconsistent(format!("column {col} out of range")))?;
            let pw = Integer::from(Integer::u_pow_u(q.p as u32, e.unsigned_abs()));
            if e > 0 {
                num *= pw;
            } else {
                den *= pw;
            }
        }
        if num * form.c3().clone().abs() != norm * den {
            return Err(Error::Inconsistent(format!(
                "norm identity fails for (a, b) = ({}, {})",
                self.a, self.b
            )));
        }
        Ok(())
    }

    pub fn exponent(&self, col: usize) -> i32 {
        self.exponents
            .binary_search_by_key(&(col as u32), |&(c, _)| c)
            .map(|i| self.exponents[i].1)
            .unwrap_or(0)
    }

    /// Columns with odd exponent, ascending.
    pub fn odd_columns(&self) -> Vec<u32> {
        self.exponents.iter().filter(|(_, e)| e % 2 != 0).map(|&(c, _)| c).collect()
    }
}

/// Relations with provenance and `(a, b)` deduplication.
#[derive(Clone, Debug, Default)]
pub struct RelationSet {
    pub relations: Vec<Relation>,
    pub sources: Vec<Source>,
    seen: HashSet<(i64, i64)>,
}

impl RelationSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds the relation unless `(a, b)` is already present.
    pub fn push(&mut self, rel: Relation, source: Source) -> bool {
        if !self.seen.insert((rel.a, rel.b)) {
            return false;
        }
        self.relations.push(rel);
        self.sources.push(source);
        true
    }

    pub fn extend(&mut self, rels: impl IntoIterator<Item = Relation>, source: Source) -> usize {
        rels.into_iter().map(|r| self.push(r, source) as usize).sum()
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn count(&self, source: Source) -> usize {
        self.sources.iter().filter(|&&s| s == source).count()
    }
}

fn gcd_i64(a: i64, b: i64) -> u64 {
    let (mut x, mut y) = (a.unsigned_abs(), b.unsigned_abs());
    while y != 0 {
        (x, y) = (y, x % y);
    }
    x
}

// ---------------------------------------------------------------------------
// exact factorisation

fn smoothness_data(base: &FactorBase) -> &(Integer, Vec<u64>) {
    base.smooth.get_or_init(|| {
        let rp = base.rational_primes();
        let root = crate::numeric::isqrt_u64(base.bound) + 1;
        let small = rp.iter().copied().filter(|&p| p <= root).collect();
        (product_tree(&rp), small)
    })
}

fn product_tree(v: &[u64]) -> Integer {
    match v.len() {
        0 => Integer::from(1),
        1 => Integer::from(v[0]),
        n => product_tree(&v[..n / 2]) * product_tree(&v[n / 2..]),
    }
}

/// Brent's variant of Pollard rho; `n` composite and odd.
fn pollard_brent(n: &Integer) -> Integer {
    for c in 1u32.. {
        let f = |x: &Integer| -> Integer { (Integer::from(x * x) + c) % n };
        let mut y = Integer::from(2);
        let mut r = 1u64;
        let mut q = Integer::from(1);
        let mut g = Integer::from(1);
        let mut x = y.clone();
        let mut ys = y.clone();
        let m = 64u64;
        while g == 1 {
            x.assign(&y);
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys.assign(&y);
                for _ in 0..m.min(r - k) {
                    y = f(&y);
                    q = (q * Integer::from(&x - &y).abs()) % n;
                }
                g = Integer::from(q.gcd_ref(n));
                k += m;
            }
            r *= 2;
            if r > 1 << 26 {
                break;
            }
        }
        if g == *n {
            loop {
                ys = f(&ys);
                g = Integer::from(Integer::from(&x - &ys).abs().gcd_ref(n));
                if g > 1 {
                    break;
                }
            }
        }
        if g > 1 && g != *n {
            return g;
        }
    }
    unreachable!()
}

fn split_smooth(n: Integer, out: &mut Vec<(u64, u32)>) {
    if n == 1 {
        return;
    }
    if crate::numeric::is_prime(&n) {
        let p = n.to_u64().expect("smooth factor below bound");
        out.push((p, 1));
        return;
    }
    if n.is_even() {
        let v = n.find_one(0).unwrap();
        out.push((2, v));
        split_smooth(n >> v, out);
        return;
    }
    if n.is_perfect_square() {
        let r = n.sqrt();
        let mut tmp = Vec::new();
        split_smooth(r, &mut tmp);
        out.extend(tmp.into_iter().map(|(p, e)| (p, 2 * e)));
        return;
    }
    let d = pollard_brent(&n);
    let rest = n / &d;
    split_smooth(d, out);
    split_smooth(rest, out);
}

/// Factor `|n|` over the base's rational primes, or `None` if some prime
/// factor is at least the bound.
fn factor_over_base(base: &FactorBase, n: &Integer) -> Option<Vec<(u64, u32)>> {
    let (primorial, small) = smoothness_data(base);
    let mut c = n.clone().abs();
    let mut out: Vec<(u64, u32)> = Vec::new();
    for &p in small {
        if c == 1 {
            break;
        }
        if c.is_divisible_u(p as u32) {
            let mut e = 0;
            while c.is_divisible_u(p as u32) {
                c /= p as u32;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if c == 1 {
        return Some(out);
    }
    if c < base.bound {
        // no factor below sqrt(bound), so c is prime
        out.push((c.to_u64().unwrap(), 1));
        return Some(out);
    }
    // exact smoothness: c | primorial^k
    let mut rest = c.clone();
    let mut g = Integer::from(primorial % &rest);
    loop {
        g.gcd_mut(&rest);
        if g == 1 {
            break;
        }
        while rest.is_divisible(&g) {
            rest /= &g;
        }
        if rest == 1 {
            break;
        }
        g = Integer::from(primorial % &rest);
    }
    if rest != 1 {
        return None;
    }
    let mut big = Vec::new();
    split_smooth(c, &mut big);
    big.sort_unstable();
    for (p, e) in big {
        match out.last_mut() {
            Some(last) if last.0 == p => last.1 += e,
            _ => out.push((p, e)),
        }
    }
    out.sort_unstable();
    Some(out)
}

/// The relation for `a + b alpha` if its ideal factors over the base.
pub fn trial_factor(base: &FactorBase, a: i64, b: i64) -> Option<Relation> {
    if gcd_i64(a, b) != 1 || b < 0 || !base.c3_supported {
        return None;
    }
    let n = base.field.form.norm_ab(a, b);
    if n == 0 {
        return None;
    }
    let fac = factor_over_base(base, &n)?;
    let mut exps: Vec<(u32, i32)> = Vec::with_capacity(fac.len() + base.pole_offsets.len());
    for (p, e) in fac {
        let bm = b.rem_euclid(p as i64) as u64;
        let root = if bm == 0 {
            ProjRoot::Infinity
        } else {
            let am = a.rem_euclid(p as i64) as u64;
            let inv = inv_mod(bm, p).expect("p prime");
            ProjRoot::Affine(((p - am) % p * inv % p) % p)
        };
        let col = base.column(p, root)?;
        exps.push((col as u32, e as i32));
    }
    for &(col, off) in &base.pole_offsets {
        exps.push((col as u32, off));
    }
    exps.sort_unstable();
    let mut merged: Vec<(u32, i32)> = Vec::with_capacity(exps.len());
    for (c, e) in exps {
        match merged.last_mut() {
            Some(last) if last.0 == c => last.1 += e,
            _ => merged.push((c, e)),
        }
    }
    merged.retain(|&(_, e)| e != 0);
    Some(Relation { a, b, exponents: merged })
}

/// `p + 0 alpha` for every `p < limit` all of whose primes have degree one,
/// ramified or not.  The exponents are the ramification indices.
pub fn rational_relations(base: &FactorBase, limit: u64) -> Vec<Relation> {
    let limit = limit.min(base.bound);
    let form = &base.field.form;
    base.rational_primes()
        .into_iter()
        .take_while(|&p| p < limit)
        .filter_map(|p| {
            let c = form.coeffs().clone().map(|x| mod_u64(&x, p));
            let roots = roots_mod_p_u64(c, p)?;
            if roots.iter().map(|r| r.multiplicity).sum::<u32>() != 3 {
                return None;
            }
            let mut exponents: Vec<(u32, i32)> = roots
                .iter()
                .map(|r| base.column(p, r.root).map(|col| (col as u32, r.multiplicity as i32)))
                .collect::<Option<_>>()?;
            exponents.sort_unstable();
            Some(Relation { a: p as i64, b: 0, exponents })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// line sieve

#[derive(Clone, Debug)]
pub struct SieveParams {
    /// Sieve `a` in `[-a_max, a_max]`.
    pub a_max: i64,
    /// Sieve `b` in `[b_min, b_max]`.
    pub b_min: i64,
    pub b_max: i64,
    /// Slack below `log2 |F(a, -b)|` accepted as a candidate.
    pub threshold_bits: f64,
    /// Entries per segment (one byte each).
    pub segment_len: usize,
    /// Largest segment allowed.
    pub max_segment_len: usize,
}

impl Default for SieveParams {
    fn default() -> Self {
        SieveParams { a_max: 1 << 10, b_min: 1, b_max: 16, threshold_bits: 20.0, segment_len: 1 << 26, max_segment_len: 1 << 28 }
    }
}

/// A progression `a ≡ -b r (mod q)` carrying weight `w`.
#[derive(Clone, Copy, Debug)]
struct Progression {
    q: u64,
    r: u64,
    w: u8,
}

/// Exact-valuation hits for a ramified or projective root.
#[derive(Clone, Copy, Debug)]
struct SpecialRoot {
    p: u64,
    root: ProjRoot,
    log2p: f64,
}

struct SievePlanData {
    progressions: Vec<Progression>,
    specials: Vec<SpecialRoot>,
    coeffs_f64: [f64; 4],
    coeffs_err: f64,
}

const MAX_POWER: u64 = 1 << 40;

fn weight(k: u32, log2p: f64) -> u8 {
    ((k as f64 * log2p).floor() - ((k - 1) as f64 * log2p).floor()) as u8
}

fn build_plan(base: &FactorBase) -> SievePlanData {
    let form = &base.field.form;
    let mut progressions = Vec::new();
    let mut specials = Vec::new();
    let mut i = 0;
    let n = base.primes.len();
    while i < n {
        let p = base.primes[i].p;
        let log2p = (p as f64).log2();
        let mut j = i;
        while j < n && base.primes[j].p == p {
            let q = base.primes[j];
            match q.root {
                ProjRoot::Affine(r) if !q.ramified => {
                    // Hensel lift the simple root
                    let c = form.coeffs().clone();
                    let fmod = |x: u64, m: u64| -> u64 {
                        let mut acc = mod_u64(&c[0], m) as u128;
                        for k in 1..4 {
                            acc = (acc * x as u128 + mod_u64(&c[k], m) as u128) % m as u128;
                        }
                        acc as u64
                    };
                    let dmod_p = {
                        let (c3, c2, c1) = (mod_u64(&c[0], p), mod_u64(&c[1], p), mod_u64(&c[2], p));
                        let r2 = r as u128 * r as u128 % p as u128;
                        ((3 * c3 as u128 * r2 + 2 * c2 as u128 * r as u128 + c1 as u128) % p as u128) as u64
                    };
                    let inv = inv_mod(dmod_p, p);
                    let mut rk = r;
                    let mut qk = p;
                    let mut k = 1;
                    loop {
                        progressions.push(Progression { q: qk, r: rk, w: weight(k, log2p) });
                        let Some(inv) = inv else { break };
                        let Some(next) = qk.checked_mul(p) else { break };
                        if next > MAX_POWER {
                            break;
                        }
                        let fv = fmod(rk, next);
                        // fv = qk * t
                        let t = fv / qk;
                        let corr = (t as u128 * inv as u128 % p as u128) as u64;
                        rk = ((rk as u128 + next as u128 - (corr as u128 * qk as u128) % next as u128) % next as u128) as u64;
                        qk = next;
                        k += 1;
                    }
                }
                root => specials.push(SpecialRoot { p, root, log2p }),
            }
            j += 1;
        }
        i = j;
    }
    let coeffs_f64 = form.coeffs().clone().map(|x| x.to_f64());
    let coeffs_err = coeffs_f64.iter().map(|x| x.abs()).sum::<f64>() * 1e-14;
    SievePlanData { progressions, specials, coeffs_f64, coeffs_err }
}

/// `v_p(F(a, -b))` capped by the working modulus.
fn exact_valuation(base: &FactorBase, p: u64, a: i64, b: i64) -> u32 {
    let mut m: u128 = p as u128;
    let mut k = 1u32;
    while m * (p as u128) < (1u128 << 62) {
        m *= p as u128;
        k += 1;
    }
    let c = base.field.form.coeffs();
    let mm = Integer::from(m);
    let cm: Vec<u128> = c
        .iter()
        .map(|x| {
            let mut r = Integer::from(x % &mm);
            if r < 0 {
                r += &mm;
            }
            r.to_u128().unwrap()
        })
        .collect();
    let am = (a as i128).rem_euclid(m as i128) as u128;
    let bm = ((-b) as i128).rem_euclid(m as i128) as u128;
    // F(x, y) = c3 x^3 + c2 x^2 y + c1 x y^2 + c0 y^3
    let mul = |x: u128, y: u128| -> u128 { x * y % m };
    let x2 = mul(am, am);
    let y2 = mul(bm, bm);
    let v = (mul(mul(cm[0], x2), am) + mul(mul(cm[1], x2), bm) + mul(mul(cm[2], am), y2) + mul(mul(cm[3], y2), bm)) % m;
    if v == 0 {
        return k;
    }
    let mut v = v;
    let mut e = 0;
    while v.is_multiple_of(p as u128) {
        v /= p as u128;
        e += 1;
    }
    e
}

fn sieve_segment(
    base: &FactorBase,
    plan: &SievePlanData,
    b: i64,
    a0: i64,
    len: usize,
    threshold_bits: f64,
    acc: &mut Vec<u8>,
) -> Vec<(i64, i64)> {
    acc.clear();
    acc.resize(len, 0);
    for pr in &plan.progressions {
        // a ≡ -b r (mod q)
        let q = pr.q as i128;
        let target = (-(b as i128) * pr.r as i128).rem_euclid(q);
        let start = (target - a0 as i128).rem_euclid(q) as usize;
        let step = pr.q as usize;
        let mut i = start;
        while i < len {
            acc[i] = acc[i].saturating_add(pr.w);
            i += step;
        }
    }
    for sp in &plan.specials {
        let p = sp.p as i64;
        let positions: Box<dyn Iterator<Item = usize>> = match sp.root {
            ProjRoot::Infinity => {
                if b % p != 0 {
                    continue;
                }
                Box::new(0..len)
            }
            ProjRoot::Affine(r) => {
                let target = (-(b as i128) * r as i128).rem_euclid(p as i128);
                let start = (target - a0 as i128).rem_euclid(p as i128) as usize;
                Box::new((start..len).step_by(p as usize))
            }
        };
        for i in positions {
            let a = a0 + i as i64;
            if a % p == 0 && b % p == 0 {
                continue;
            }
            let v = exact_valuation(base, sp.p, a, b);
            if v > 0 {
                let add = (v as f64 * sp.log2p).floor().min(255.0) as u8;
                acc[i] = acc[i].saturating_add(add);
            }
        }
    }
    let [c3, c2, c1, c0] = plan.coeffs_f64;
    let bf = b as f64;
    let mut out = Vec::new();
    for (i, &v) in acc.iter().enumerate() {
        let a = a0 + i as i64;
        let x = a as f64;
        let f = ((c3 * x - c2 * bf) * x + c1 * bf * bf) * x - c0 * bf * bf * bf;
        let scale = x.abs().max(bf).max(1.0).powi(3);
        let lower = (f.abs() - plan.coeffs_err * scale).max(1.0);
        if v as f64 + threshold_bits >= lower.log2() && gcd_i64(a, b) == 1 {
            out.push((a, b));
        }
    }
    out
}

/// Candidates `(a, b)` whose accumulated logarithm is within the threshold of
/// `log2 |F(a, -b)|`, sorted by `(b, a)`.
pub fn line_sieve(base: &FactorBase, params: &SieveParams) -> Result<Vec<(i64, i64)>> {
    if params.segment_len > params.max_segment_len {
        return Err(Error::RegionTooLarge(format!(
            "segment of {} entries exceeds the {} budget; use smaller segments",
            params.segment_len, params.max_segment_len
        )));
    }
    if base.is_empty() || params.a_max < 1 || params.b_max < params.b_min.max(1) {
        return Ok(Vec::new());
    }
    let plan = build_plan(base);
    let width = 2 * params.a_max as u64 + 1;
    let seg = params.segment_len.max(1) as u64;
    let nseg = width.div_ceil(seg);
    let units: Vec<(i64, u64)> = (params.b_min.max(1)..=params.b_max).flat_map(|b| (0..nseg).map(move |s| (b, s))).collect();
    let mut found: Vec<Vec<(i64, i64)>> = units
        .par_iter()
        .map_init(Vec::new, |acc, &(b, s)| {
            let a0 = -params.a_max + (s * seg) as i64;
            let len = seg.min(width - s * seg) as usize;
            sieve_segment(base, &plan, b, a0, len, params.threshold_bits, acc)
        })
        .collect();
    let mut out: Vec<(i64, i64)> = found.drain(..).flatten().collect();
    out.sort_unstable_by_key(|&(a, b)| (b, a));
    Ok(out)
}

/// Sieve and factor: relations found in `[-A, A] x [b_min, B]`, sorted by `(b, a)`.
pub fn sieve_relations(base: &FactorBase, params: &SieveParams) -> Result<Vec<Relation>> {
    let cands = line_sieve(base, params)?;
    Ok(cands.par_iter().filter_map(|&(a, b)| trial_factor(base, a, b)).collect())
}

/// Relations `a + b alpha` on lines through the prime in column `col` whose
/// exponent there is odd, nearest `a = 0` first.
pub fn targeted_relations(base: &FactorBase, col: usize, count: usize, a_limit: i64) -> Result<Vec<Relation>> {
    let q = base.primes[col];
    let p = q.p as i64;
    let plan = build_plan(base);
    let mut found = Vec::new();
    let mut acc = Vec::new();
    let b = match q.root {
        ProjRoot::Infinity => p,
        ProjRoot::Affine(_) => 1,
    };
    let mut radius: i64 = 1 << 12;
    let mut done: i64 = 0;
    while found.len() < count && done < a_limit {
        let r = radius.min(a_limit);
        // new annuli [-r, -done-1] and [done+1, r], plus a = 0 on the first pass
        let mut ranges = vec![(-r, r - done)];
        if done > 0 {
            ranges = vec![(-r, r - done), (done + 1, r - done)];
        } else {
            ranges[0] = (-r, 2 * r + 1);
        }
        for (a0, len) in ranges {
            let cands = sieve_segment(base, &plan, b, a0, len as usize, 20.0, &mut acc);
            let mut rels: Vec<Relation> = cands
                .par_iter()
                .filter_map(|&(a, b)| trial_factor(base, a, b))
                .filter(|rel| rel.exponent(col) % 2 != 0)
                .collect();
            found.append(&mut rels);
        }
        done = r;
        radius *= 4;
    }
    if found.len() < count {
        return Err(Error::TargetedNotFound { p: q.p, a_limit });
    }
    found.sort_by_key(|r| (r.a.unsigned_abs(), r.a));
    found.truncate(count);
    Ok(found)
}
