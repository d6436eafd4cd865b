//! Integer and high-precision real arithmetic shared by the other modules:
//! prime sieving and testing, word-size modular arithmetic, roots of binary
//! cubic forms modulo a prime, quadratic characters, the dilogarithm and
//! Dickman's rho function.
//!
//! Reals are MPFR floats through `rug`.  The default working precision is
//! 170 bits, a little over 50 decimal digits.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Integer};

use crate::error::{Error, Result};

/// Default working precision in bits (about 50 decimal digits).
pub const DEFAULT_PREC: u32 = 170;

/// Number of bits needed to carry `digits` significant decimal digits.
pub fn prec_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 4
}

// ---------------------------------------------------------------------------
// primes

/// All primes `p < n`, by a plain sieve of Eratosthenes over odd numbers.
pub fn primes_below(n: u64) -> Vec<u64> {
    if n <= 2 {
        return Vec::new();
    }
    let n = n as usize;
    // index i represents 2i+1
    let half = n / 2;
    let mut composite = vec![false; half];
    let mut i = 1;
    while (2 * i + 1) * (2 * i + 1) < n {
        if !composite[i] {
            let p = 2 * i + 1;
            let mut j = p * p / 2;
            while j < half {
                composite[j] = true;
                j += p;
            }
        }
        i += 1;
    }
    let mut out = vec![2u64];
    out.extend(
        (1..half)
            .filter(|&i| !composite[i])
            .map(|i| (2 * i + 1) as u64)
            .filter(|&p| (p as usize) < n),
    );
    out
}

/// Primes in `[lo, hi)` by a segmented sieve.
pub fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    if hi <= lo {
        return Vec::new();
    }
    let root = isqrt_u64(hi) + 1;
    let small = primes_below(root + 1);
    let len = (hi - lo) as usize;
    let mut composite = vec![false; len];
    for &p in &small {
        let start = std::cmp::max(p * p, lo.div_ceil(p) * p);
        let mut m = start;
        while m < hi {
            composite[(m - lo) as usize] = true;
            m += p;
        }
    }
    (0..len)
        .filter(|&i| !composite[i])
        .map(|i| lo + i as u64)
        .filter(|&x| x >= 2)
        .collect()
}

pub fn isqrt_u64(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|y| y <= n) {
        x += 1;
    }
    x
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, m: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % m as u128) as u64
}

#[inline]
pub fn sub_mod(a: u64, b: u64, m: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        m - (b - a)
    }
}

pub fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    r
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut new_t) = (0i128, 1i128);
    let (mut r, mut new_r) = (m as i128, (a % m) as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    if r != 1 {
        return None;
    }
    if t < 0 {
        t += m as i128;
    }
    Some(t as u64)
}

/// Deterministic Miller–Rabin for 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primality: deterministic below 2^64, 64 Miller–Rabin rounds above.
pub fn is_prime(n: &Integer) -> bool {
    match n.to_u64() {
        Some(v) => is_prime_u64(v),
        None => *n > 0 && n.is_probably_prime(64) != rug::integer::IsPrime::No,
    }
}

/// Smallest prime `>= n`.
pub fn next_prime_u64(mut n: u64) -> u64 {
    if n <= 2 {
        return 2;
    }
    if n.is_multiple_of(2) {
        n += 1;
    }
    while !is_prime_u64(n) {
        n += 2;
    }
    n
}

/// `x mod p` as a nonnegative residue.
pub fn mod_u64(x: &Integer, p: u64) -> u64 {
    let mut r = Integer::from(x % p);
    if r < 0 {
        r += p;
    }
    r.to_u64().expect("residue fits")
}

/// p-adic valuation of a nonzero integer.
pub fn valuation(x: &Integer, p: u64) -> u32 {
    if *x == 0 {
        return u32::MAX;
    }
    let p = Integer::from(p);
    let mut v = 0;
    let mut y = x.clone();
    while y.is_divisible(&p) {
        y /= &p;
        v += 1;
    }
    v
}

/// Jacobi symbol (a/n) for odd n.
pub fn jacobi_u64(a: u64, n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    let mut a = a % n;
    let mut n = n;
    let mut t = 1;
    while a != 0 {
        while a.is_multiple_of(2) {
            a /= 2;
            let r = n % 8;
            if r == 3 || r == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Additive Legendre character: 0 if `x` is a nonzero square mod `p`, 1 if not.
pub fn legendre_additive(x: &Integer, p: &Integer) -> Result<u8> {
    if *p == 2 || !is_prime(p) {
        return Err(Error::NotOddPrime(p.to_string()));
    }
    if x.is_divisible(p) {
        return Err(Error::CharacterUndefined { x: x.to_string(), p: p.to_string() });
    }
    Ok(if x.legendre(p) == 1 { 0 } else { 1 })
}

/// Additive Legendre character for word-size arguments; `None` when `p | x`.
#[inline]
pub fn legendre_bit(x: u64, p: u64) -> Option<u8> {
    match jacobi_u64(x, p) {
        1 => Some(0),
        -1 => Some(1),
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// roots of binary cubic forms mod p

/// A point of the projective line over F_p.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProjRoot {
    /// `(r : 1)`
    Affine(u64),
    /// `(1 : 0)`
    Infinity,
}

impl ProjRoot {
    /// `(r, s)` coordinates.
    pub fn coords(self) -> (u64, u64) {
        match self {
            ProjRoot::Affine(r) => (r, 1),
            ProjRoot::Infinity => (1, 0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RootMult {
    pub root: ProjRoot,
    pub multiplicity: u32,
}

// polynomials over F_p, coefficient vectors low degree first, no trailing zeros

fn trim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    trim(&mut r);
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p).expect("unit leading coefficient");
    while r.len() > dm {
        let k = r.len() - 1;
        let c = mul_mod(r[k], lead_inv, p);
        for i in 0..=dm {
            let j = k - dm + i;
            r[j] = sub_mod(r[j], mul_mod(c, m[i], p), p);
        }
        trim(&mut r);
    }
    r
}

fn poly_mul_rem(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = add_mod(prod[i + j], mul_mod(x, y, p), p);
        }
    }
    poly_rem(&prod, m, p)
}

fn poly_pow_rem(base: &[u64], mut e: u64, m: &[u64], p: u64) -> Vec<u64> {
    let mut result = vec![1u64];
    let mut b = poly_rem(base, m, p);
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mul_rem(&result, &b, m, p);
        }
        b = poly_mul_rem(&b, &b, m, p);
        e >>= 1;
    }
    result
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = poly_rem(&x, &y, p);
        x = y;
        y = r;
    }
    if let Some(&lead) = x.last() {
        let inv = inv_mod(lead, p).expect("unit");
        for c in x.iter_mut() {
            *c = mul_mod(*c, inv, p);
        }
    }
    x
}

fn poly_eval(f: &[u64], x: u64, p: u64) -> u64 {
    f.iter().rev().fold(0, |acc, &c| add_mod(mul_mod(acc, x, p), c, p))
}

/// Distinct roots of a squarefree split polynomial `g` by equal-degree splitting.
fn split_roots(g: &[u64], p: u64, out: &mut Vec<u64>) {
    let d = g.len() - 1;
    if d == 0 {
        return;
    }
    if d == 1 {
        let inv = inv_mod(g[1], p).expect("unit");
        out.push(mul_mod(sub_mod(0, g[0], p), inv, p));
        return;
    }
    if p == 2 {
        for x in 0..2 {
            if poly_eval(g, x, p) == 0 {
                out.push(x);
            }
        }
        return;
    }
    for a in 0..p {
        let w = poly_pow_rem(&[a, 1], (p - 1) / 2, g, p);
        let mut w = w;
        if w.is_empty() {
            w.push(0);
        }
        w[0] = sub_mod(w[0], 1, p);
        trim(&mut w);
        let h = poly_gcd(g, &w, p);
        let dh = h.len().saturating_sub(1);
        if dh > 0 && dh < d {
            let q = poly_div_exact(g, &h, p);
            split_roots(&h, p, out);
            split_roots(&q, p, out);
            return;
        }
    }
    unreachable!("equal-degree splitting exhausted shifts");
}

fn poly_div_exact(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let mut r = a.to_vec();
    trim(&mut r);
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p).expect("unit");
    let mut q = vec![0u64; r.len() - dm];
    while r.len() > dm {
        let k = r.len() - 1;
        let c = mul_mod(r[k], lead_inv, p);
        q[k - dm] = c;
        for i in 0..=dm {
            let j = k - dm + i;
            r[j] = sub_mod(r[j], mul_mod(c, m[i], p), p);
        }
        trim(&mut r);
    }
    q
}

/// Roots of the binary cubic form with coefficients `(c3, c2, c1, c0)` on the
/// projective line over F_p, with multiplicities, in the order affine roots
/// ascending then `(1:0)`.
pub fn roots_mod_p(coeffs: &[Integer; 4], p: &Integer) -> Result<Vec<RootMult>> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p.to_string()));
    }
    let pu = p
        .to_u64()
        .ok_or_else(|| Error::Domain { value: p.to_string(), domain: "primes below 2^64" })?;
    let c = [
        mod_u64(&coeffs[0], pu),
        mod_u64(&coeffs[1], pu),
        mod_u64(&coeffs[2], pu),
        mod_u64(&coeffs[3], pu),
    ];
    roots_mod_p_u64(c, pu).ok_or_else(|| Error::FormVanishesMod(p.to_string()))
}

/// As [`roots_mod_p`] with coefficients already reduced mod the prime `p`.
/// Returns `None` when the form vanishes identically.
pub fn roots_mod_p_u64(c: [u64; 4], p: u64) -> Option<Vec<RootMult>> {
    // f(x) = F(x, 1), low degree first
    let mut f = vec![c[3], c[2], c[1], c[0]];
    trim(&mut f);
    if f.is_empty() {
        return None;
    }
    let deg = f.len() - 1;
    let mut out = Vec::new();
    if deg > 0 {
        let mut roots = Vec::new();
        if p < 10_000 {
            roots.extend((0..p).filter(|&x| poly_eval(&f, x, p) == 0));
        } else {
            let xp = poly_pow_rem(&[0, 1], p, &f, p);
            let mut h = xp;
            if h.len() < 2 {
                h.resize(2, 0);
            }
            h[1] = sub_mod(h[1], 1, p);
            trim(&mut h);
            let g = if h.is_empty() { poly_gcd(&f, &[], p) } else { poly_gcd(&f, &h, p) };
            split_roots(&g, p, &mut roots);
            roots.sort_unstable();
        }
        for r in roots {
            let mut m = 0;
            let mut q = f.clone();
            loop {
                if poly_eval(&q, r, p) != 0 {
                    break;
                }
                m += 1;
                q = poly_div_exact(&q, &[sub_mod(0, r, p), 1], p);
                if q.len() <= 1 {
                    break;
                }
            }
            out.push(RootMult { root: ProjRoot::Affine(r), multiplicity: m });
        }
    }
    if deg < 3 {
        out.push(RootMult { root: ProjRoot::Infinity, multiplicity: (3 - deg) as u32 });
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// special functions

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

pub fn euler_gamma(prec: u32) -> Float {
    Float::with_val(prec, Constant::Euler)
}

/// Dilogarithm `Li2(x) = sum x^n / n^2` on `[0, 1]`.
pub fn dilog(x: &Float) -> Result<Float> {
    let prec = x.prec();
    if !(*x >= 0 && *x <= 1) {
        return Err(Error::Domain { value: x.to_string(), domain: "[0, 1]" });
    }
    let zeta2 = Float::with_val(prec, pi(prec).square_ref()) / 6u32;
    if *x == 1 {
        return Ok(zeta2);
    }
    if *x <= 0.5 {
        return Ok(dilog_series(x));
    }
    // Euler reflection: Li2(x) + Li2(1-x) = pi^2/6 - ln x ln(1-x)
    let y = Float::with_val(prec, 1 - x);
    let lx = Float::with_val(prec, x.ln_ref());
    let ly = Float::with_val(prec, y.ln_ref());
    Ok(zeta2 - lx * ly - dilog_series(&y))
}

fn dilog_series(x: &Float) -> Float {
    let prec = x.prec();
    let mut sum = Float::new(prec);
    if *x == 0 {
        return sum;
    }
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32) - 8));
    let mut pw = x.clone();
    let mut n = 1u64;
    loop {
        let term = Float::with_val(prec, &pw / (n * n));
        sum += &term;
        if term.abs() < eps {
            break;
        }
        pw *= x;
        n += 1;
    }
    sum
}

/// Dickman's rho by power series of the delay equation `u rho'(u) = -rho(u-1)`
/// on unit intervals, each expanded about its midpoint.
#[derive(Clone, Debug)]
pub struct DickmanRho {
    prec: u32,
    // tables[k] = Taylor coefficients on [k, k+1] in z = u - (k + 1/2)
    tables: Vec<Vec<Float>>,
}

impl DickmanRho {
    pub fn new(prec: u32) -> Self {
        let terms = (prec as usize) * 2 / 3 + 16;
        let mut first = vec![Float::new(prec); terms];
        first[0] = Float::with_val(prec, 1);
        DickmanRho { prec, tables: vec![first] }
    }

    fn extend_to(&mut self, k: usize) {
        let prec = self.prec;
        while self.tables.len() <= k {
            let kk = self.tables.len();
            let b = self.tables.last().unwrap();
            let n = b.len();
            let c = Float::with_val(prec, kk as f64 + 0.5);
            let mut a = vec![Float::new(prec); n];
            for i in 0..n - 1 {
                let num = Float::with_val(prec, -&b[i]) - Float::with_val(prec, &a[i] * i as u32);
                a[i + 1] = num / Float::with_val(prec, &c * (i as u32 + 1));
            }
            // continuity at the shared endpoint: a(-1/2) = b(+1/2)
            let half = Float::with_val(prec, 0.5);
            let right = horner(b, &half);
            a[0] = Float::new(prec);
            let left_rest = horner(&a, &Float::with_val(prec, -&half));
            a[0] = right - left_rest;
            self.tables.push(a);
        }
    }

    pub fn eval(&mut self, u: &Float) -> Result<Float> {
        if !u.is_finite() || *u < 0 {
            return Err(Error::Domain { value: u.to_string(), domain: "u >= 0" });
        }
        if *u <= 1 {
            return Ok(Float::with_val(self.prec, 1));
        }
        let fl = Float::with_val(self.prec, u.floor_ref());
        let mut k = fl.to_f64() as usize;
        if fl == *u {
            k -= 1;
        }
        self.extend_to(k);
        let z = Float::with_val(self.prec, u - (k as f64 + 0.5));
        Ok(horner(&self.tables[k], &z))
    }

    pub fn eval_f64(&mut self, u: f64) -> Result<f64> {
        let v = self.eval(&Float::with_val(self.prec, u))?;
        Ok(v.to_f64())
    }
}

fn horner(coeffs: &[Float], z: &Float) -> Float {
    let prec = z.prec();
    let mut acc = Float::new(prec);
    for c in coeffs.iter().rev() {
        acc *= z;
        acc += c;
    }
    acc
}

/// Dickman's rho at the precision of `u`.
pub fn dickman_rho(u: &Float) -> Result<Float> {
    DickmanRho::new(u.prec().max(64)).eval(u)
}

/// Neumaier-compensated running sum.
#[derive(Clone, Debug)]
pub struct CompensatedSum {
    sum: Float,
    comp: Float,
}

impl CompensatedSum {
    pub fn new(prec: u32) -> Self {
        CompensatedSum { sum: Float::new(prec), comp: Float::new(prec) }
    }

    pub fn add(&mut self, x: &Float) {
        let prec = self.sum.prec();
        let t = Float::with_val(prec, &self.sum + x);
        if Float::with_val(prec, self.sum.abs_ref()) >= Float::with_val(prec, x.abs_ref()) {
            self.comp += Float::with_val(prec, &self.sum - &t) + x;
        } else {
            self.comp += Float::with_val(prec, x - &t) + &self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> Float {
        Float::with_val(self.sum.prec(), &self.sum + &self.comp)
    }
}

/// `log2 |x|` for a nonzero integer, accurate well beyond f64 exponent range.
pub fn log2_abs(x: &Integer) -> f64 {
    let bits = x.significant_bits();
    if bits <= 1000 {
        let f = Float::with_val(64, x).abs();
        return f.log2().to_f64();
    }
    let shift = bits - 64;
    let top = Integer::from(x.abs_ref()) >> shift;
    top.to_f64().log2() + shift as f64
}

/// `base^e` as a float at precision `prec`.
pub fn powf(base: u64, e: &Float) -> Float {
    Float::with_val(e.prec(), base).pow(e)
}
