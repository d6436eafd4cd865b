//! Binary cubic forms and the cubic fields they define.
//!
//! A form `F(X, Y) = c3 X^3 + c2 X^2 Y + c1 X Y^2 + c0 Y^3` determines a cubic
//! ring of discriminant `disc(F)` (Delone–Faddeev).  When that ring is
//! maximal the factorisation of `F` modulo `p` describes how `p` splits, for
//! every `p` including those dividing `c3`.  Degree-one primes are then the
//! projective roots of `F` on `P^1(F_p)`.
//!
//! Reduction follows Cremona, "Reduction of binary cubic and quartic forms":
//! the Hessian for positive discriminant and Julia's covariant otherwise.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use rug::ops::{DivRounding, Pow};
use rug::{Float, Integer};

use crate::error::{Error, Result};
use crate::numeric::{mod_u64, primes_below, roots_mod_p_u64, ProjRoot};

pub type Matrix2 = [[Integer; 2]; 2];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryCubicForm {
    // (c3, c2, c1, c0)
    c: [Integer; 4],
}

impl fmt::Display for BinaryCubicForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.c[0], self.c[1], self.c[2], self.c[3])
    }
}

fn identity() -> Matrix2 {
    [[Integer::from(1), Integer::new()], [Integer::new(), Integer::from(1)]]
}

fn mat(a: i64, b: i64, c: i64, d: i64) -> Matrix2 {
    [[Integer::from(a), Integer::from(b)], [Integer::from(c), Integer::from(d)]]
}

pub fn mat_mul(x: &Matrix2, y: &Matrix2) -> Matrix2 {
    let e = |i: usize, j: usize| Integer::from(&x[i][0] * &y[0][j]) + Integer::from(&x[i][1] * &y[1][j]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn poly_mul(a: &[Integer], b: &[Integer]) -> Vec<Integer> {
    let mut out = vec![Integer::new(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += Integer::from(x * y);
        }
    }
    out
}

impl BinaryCubicForm {
    /// Form from `[c3, c2, c1, c0]`.
    pub fn new(c: [Integer; 4]) -> Self {
        BinaryCubicForm { c }
    }

    pub fn from_i64(c: [i64; 4]) -> Self {
        Self::new(c.map(Integer::from))
    }

    /// `[c3, c2, c1, c0]`.
    pub fn coeffs(&self) -> &[Integer; 4] {
        &self.c
    }

    /// Coefficient of `x^i` in `f(x) = F(x, 1)`.
    pub fn coeff(&self, i: usize) -> &Integer {
        &self.c[3 - i]
    }

    pub fn c3(&self) -> &Integer {
        &self.c[0]
    }

    pub fn c0(&self) -> &Integer {
        &self.c[3]
    }

    pub fn disc(&self) -> Integer {
        let [a, b, c, d] = &self.c;
        Integer::from(18 * a) * b * c * d - Integer::from(4 * b) * b * b * d + Integer::from(b * b) * c * c
            - Integer::from(4 * a) * c * c * c
            - Integer::from(27 * a) * a * d * d
    }

    pub fn eval(&self, x: &Integer, y: &Integer) -> Integer {
        let [a, b, c, d] = &self.c;
        let x2 = Integer::from(x * x);
        let y2 = Integer::from(y * y);
        Integer::from(a * &x2) * x + Integer::from(b * &x2) * y + Integer::from(c * x) * &y2 + Integer::from(d * &y2) * y
    }

    /// `F(a, -b)`, the norm form of `a + b*alpha` up to the factor `c3`.
    pub fn norm_ab(&self, a: i64, b: i64) -> Integer {
        self.eval(&Integer::from(a), &Integer::from(-b))
    }

    /// `F∘M`, i.e. `F(m00 X + m01 Y, m10 X + m11 Y)`.
    pub fn transform(&self, m: &Matrix2) -> Self {
        // binary forms as polynomials in X, index = power of X
        let l1 = [m[0][1].clone(), m[0][0].clone()];
        let l2 = [m[1][1].clone(), m[1][0].clone()];
        let one = vec![Integer::from(1)];
        let mut p1 = vec![one.clone()];
        let mut p2 = vec![one];
        for k in 1..=3 {
            p1.push(poly_mul(&p1[k - 1], &l1));
            p2.push(poly_mul(&p2[k - 1], &l2));
        }
        let mut out = vec![Integer::new(); 4];
        for i in 0..=3 {
            let term = poly_mul(&p1[i], &p2[3 - i]);
            for (j, t) in term.iter().enumerate() {
                out[j] += Integer::from(self.coeff(i) * t);
            }
        }
        BinaryCubicForm::new([out[3].clone(), out[2].clone(), out[1].clone(), out[0].clone()])
    }

    pub fn negate(&self) -> Self {
        BinaryCubicForm::new(self.c.clone().map(|x| -x))
    }

    pub fn content(&self) -> Integer {
        let mut g = Integer::new();
        for x in &self.c {
            g.gcd_mut(x);
        }
        g
    }

    /// Irreducible over Q: no linear factor `X`, `Y` or `(qX - pY)`.
    pub fn is_irreducible(&self) -> bool {
        let [a, b, c, d] = &self.c;
        if *a == 0 || *d == 0 {
            return false;
        }
        // t = a x turns f into the monic t^3 + b t^2 + ac t + a^2 d
        let c1 = Integer::from(a * c);
        let c0 = Integer::from(a * a) * d;
        integer_roots_monic_cubic(b, &c1, &c0).is_empty()
    }

    /// Largest coefficient bit length.
    pub fn max_bits(&self) -> u32 {
        self.c.iter().map(|x| x.significant_bits()).max().unwrap_or(0)
    }
}

fn eval_monic(b: &Integer, c: &Integer, d: &Integer, t: &Integer) -> Integer {
    ((Integer::from(t + b) * t) + c) * t + d
}

/// Integer roots of `t^3 + b t^2 + c t + d`, by bisection on monotone pieces.
pub fn integer_roots_monic_cubic(b: &Integer, c: &Integer, d: &Integer) -> Vec<Integer> {
    let bound = Integer::from(1) + b.clone().abs().max(c.clone().abs()).max(d.clone().abs());
    let lo = -bound.clone();
    let hi = bound;
    let g = |t: &Integer| eval_monic(b, c, d, t);
    let mut pieces: Vec<(Integer, Integer)> = Vec::new();
    // g'(t) = 3t^2 + 2bt + c, critical points (-b ± sqrt(b^2 - 3c)) / 3
    let disc = Integer::from(b * b) - Integer::from(3 * c);
    if disc <= 0 {
        pieces.push((lo.clone(), hi.clone()));
    } else {
        let s = disc.sqrt();
        let k1 = (-Integer::from(b) - &s - 1u32).div_floor(Integer::from(3)) - 1u32;
        let m1 = (-Integer::from(b) - &s).div_ceil(Integer::from(3));
        let m2 = (-Integer::from(b) + &s).div_floor(Integer::from(3));
        let k2 = (-Integer::from(b) + &s + 1u32).div_ceil(Integer::from(3)) + 1u32;
        pieces.push((lo.clone(), k1.clone()));
        pieces.push((m1.clone(), m2.clone()));
        pieces.push((k2.clone(), hi.clone()));
        // integers near the critical points are checked directly
        pieces.push((k1.clone(), m1.clone()));
        pieces.push((m2.clone(), k2.clone()));
    }
    let mut roots = Vec::new();
    for (i, (l, h)) in pieces.into_iter().enumerate() {
        if l > h {
            continue;
        }
        if i >= 3 || Integer::from(&h - &l) < 8 {
            let mut t = l.clone();
            while t <= h {
                if g(&t) == 0 {
                    roots.push(t.clone());
                }
                t += 1;
            }
            continue;
        }
        let gl = g(&l);
        let gh = g(&h);
        if gl == 0 {
            roots.push(l.clone());
        }
        if gh == 0 {
            roots.push(h.clone());
        }
        if gl.cmp0() == gh.cmp0() || gl == 0 || gh == 0 {
            continue;
        }
        let (mut a, mut z) = (l, h);
        let sa = gl.cmp0();
        while Integer::from(&z - &a) > 1 {
            let mid = Integer::from(&a + &z) >> 1u32;
            let gm = g(&mid);
            if gm == 0 {
                roots.push(mid.clone());
                break;
            }
            if gm.cmp0() == sa {
                a = mid;
            } else {
                z = mid;
            }
        }
    }
    roots.sort();
    roots.dedup();
    roots
}

/// Discriminant, failing when it vanishes.
pub fn disc(form: &BinaryCubicForm) -> Result<Integer> {
    let d = form.disc();
    if d == 0 {
        return Err(Error::ZeroDiscriminant);
    }
    Ok(d)
}

// ---------------------------------------------------------------------------
// reduction

/// Positive definite binary quadratic form used as a reduction covariant.
#[derive(Clone, Debug)]
enum Covariant {
    Exact([Integer; 3]),
    Real([Float; 3]),
}

impl Covariant {
    fn compose(&self, m: &Matrix2) -> Covariant {
        // Q(m00 x + m01 y, m10 x + m11 y)
        match self {
            Covariant::Exact([a, b, c]) => {
                let (p, q, r, s) = (&m[0][0], &m[0][1], &m[1][0], &m[1][1]);
                let na = Integer::from(a * p) * p + Integer::from(b * p) * r + Integer::from(c * r) * r;
                let nb = Integer::from(2 * a) * p * q + Integer::from(b * p) * s + Integer::from(b * q) * r
                    + Integer::from(2 * c) * r * s;
                let nc = Integer::from(a * q) * q + Integer::from(b * q) * s + Integer::from(c * s) * s;
                Covariant::Exact([na, nb, nc])
            }
            Covariant::Real([a, b, c]) => {
                let prec = a.prec();
                let f = |x: &Integer| Float::with_val(prec, x);
                let (p, q, r, s) = (f(&m[0][0]), f(&m[0][1]), f(&m[1][0]), f(&m[1][1]));
                let na = Float::with_val(prec, a * &p) * &p + Float::with_val(prec, b * &p) * &r
                    + Float::with_val(prec, c * &r) * &r;
                let nb = Float::with_val(prec, a * &p) * &q * 2u32
                    + Float::with_val(prec, b * &p) * &s
                    + Float::with_val(prec, b * &q) * &r
                    + Float::with_val(prec, c * &r) * &s * 2u32;
                let nc = Float::with_val(prec, a * &q) * &q + Float::with_val(prec, b * &q) * &s
                    + Float::with_val(prec, c * &s) * &s;
                Covariant::Real([na, nb, nc])
            }
        }
    }

    fn is_reduced(&self) -> bool {
        match self {
            Covariant::Exact([a, b, c]) => Integer::from(b.abs_ref()) <= *a && a <= c,
            Covariant::Real([a, b, c]) => {
                let prec = a.prec();
                let slack = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 3));
                let tol = Float::with_val(prec, a * &slack);
                Float::with_val(prec, b.abs_ref()) <= Float::with_val(prec, a + &tol)
                    && Float::with_val(prec, a - &tol) <= *c
            }
        }
    }

    /// One reduction step, or `None` when already reduced.
    fn step(&self) -> Option<Matrix2> {
        match self {
            Covariant::Exact([a, b, c]) => {
                if *b > *a || *b <= -Integer::from(a) {
                    let k = Integer::from(a - b).div_floor(Integer::from(2 * a));
                    Some([[Integer::from(1), k], [Integer::new(), Integer::from(1)]])
                } else if a > c {
                    Some(mat(0, -1, 1, 0))
                } else {
                    None
                }
            }
            Covariant::Real([a, b, c]) => {
                let prec = a.prec();
                let slack = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 3));
                let tol = Float::with_val(prec, a * &slack);
                if Float::with_val(prec, b.abs_ref()) > Float::with_val(prec, a + &tol) {
                    let k = Float::with_val(prec, -Float::with_val(prec, b / Float::with_val(prec, a * 2u32))).round();
                    let k = k.to_integer().expect("finite");
                    Some([[Integer::from(1), k], [Integer::new(), Integer::from(1)]])
                } else if Float::with_val(prec, a - &tol) > *c {
                    Some(mat(0, -1, 1, 0))
                } else {
                    None
                }
            }
        }
    }
}

/// Real roots of `f` (one when `disc < 0`), by bisection on a Cauchy bracket.
fn real_root(form: &BinaryCubicForm, prec: u32) -> Float {
    let f = |x: &Float| -> Float {
        let mut acc = Float::with_val(prec, form.coeff(3));
        for i in (0..3).rev() {
            acc *= x;
            acc += form.coeff(i);
        }
        acc
    };
    let lead = Float::with_val(prec, form.coeff(3));
    let mut r = Float::with_val(prec, 0);
    for i in 0..3 {
        let q = Float::with_val(prec, form.coeff(i)) / &lead;
        r = r.max(&q.abs());
    }
    r += 1u32;
    let mut lo = Float::with_val(prec, -&r);
    let mut hi = r;
    let s_lo = f(&lo).is_sign_negative();
    let iters = prec + 2 * form.max_bits() + 16;
    for _ in 0..iters {
        let mid = Float::with_val(prec, &lo + &hi) / 2u32;
        let v = f(&mid);
        if v.is_zero() {
            return mid;
        }
        if v.is_sign_negative() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Float::with_val(prec, &lo + &hi) / 2u32
}

/// Julia's covariant for negative discriminant:
/// `4 Im(b)^2 (x - a y)^2 + 2 |a - b|^2 |x - b y|^2`, with `a` the real root
/// and `b` a complex root.
fn julia_covariant(form: &BinaryCubicForm) -> Covariant {
    let prec = 4 * form.max_bits() + 256;
    let alpha = real_root(form, prec);
    // deflate: f = c3 (x - alpha)(x^2 + q1 x + q0)
    let c3 = Float::with_val(prec, form.coeff(3));
    let q1 = Float::with_val(prec, form.coeff(2)) / &c3 + &alpha;
    let q0 = Float::with_val(prec, form.coeff(1)) / &c3 + Float::with_val(prec, &alpha * &q1);
    // beta = -q1/2 + i sqrt(q0 - q1^2/4)
    let re = -Float::with_val(prec, &q1 / 2u32);
    let im2 = Float::with_val(prec, &q0 - Float::with_val(prec, &q1 * &q1) / 4u32);
    let im2 = im2.max(&Float::new(prec));
    let dre = Float::with_val(prec, &alpha - &re);
    let dist2 = Float::with_val(prec, &dre * &dre) + &im2; // |alpha - beta|^2
    let w1 = Float::with_val(prec, &im2 * 4u32);
    let w2 = Float::with_val(prec, &dist2 * 2u32);
    let babs2 = Float::with_val(prec, &re * &re) + &im2;
    let a = Float::with_val(prec, &w1 + &w2);
    let b = -(Float::with_val(prec, &w1 * &alpha) * 2u32) - Float::with_val(prec, &w2 * &re) * 2u32;
    let c = Float::with_val(prec, &w1 * &alpha) * &alpha + Float::with_val(prec, &w2 * &babs2);
    Covariant::Real([a, b, c])
}

/// Hessian `(b^2 - 3ac, bc - 9ad, c^2 - 3bd)`, positive definite for `disc > 0`.
fn hessian(form: &BinaryCubicForm) -> Covariant {
    let [a, b, c, d] = form.coeffs();
    Covariant::Exact([
        Integer::from(b * b) - Integer::from(3 * a) * c,
        Integer::from(b * c) - Integer::from(9 * a) * d,
        Integer::from(c * c) - Integer::from(3 * b) * d,
    ])
}

fn covariant(form: &BinaryCubicForm) -> Covariant {
    if form.disc() > 0 {
        hessian(form)
    } else {
        julia_covariant(form)
    }
}

fn abs_key(f: &BinaryCubicForm) -> [Integer; 4] {
    f.coeffs().clone().map(|x| x.abs())
}

/// GL2(Z)-reduce an irreducible form so that its covariant lies in the
/// fundamental domain `|B| <= A <= C`.  Ties on the boundary go to the
/// smallest `(|c3|, |c2|, |c1|, |c0|)`; signs are normalised to `c3 > 0`,
/// then `c2 >= 0`, then `c0 >= 0`.
pub fn julia_reduce(form: &BinaryCubicForm) -> Result<BinaryCubicForm> {
    if !form.is_irreducible() {
        return Err(Error::ReducibleForm);
    }
    let mut f = form.clone();
    for _ in 0..64 {
        let mut cov = covariant(&f);
        let mut m = identity();
        let mut moved = false;
        for _ in 0..10_000 {
            match cov.step() {
                Some(g) => {
                    cov = cov.compose(&g);
                    m = mat_mul(&m, &g);
                    moved = true;
                }
                None => break,
            }
        }
        if !moved {
            break;
        }
        f = f.transform(&m);
    }
    // boundary symmetries
    let cov = covariant(&f);
    let gens = [
        identity(),
        mat(1, 1, 0, 1),
        mat(1, -1, 0, 1),
        mat(0, -1, 1, 0),
        mat(0, -1, 1, 1),
        mat(0, -1, 1, -1),
        mat(1, -1, 1, 0),
        mat(-1, -1, 1, 0),
    ];
    let mut best = f.clone();
    for g in gens.iter() {
        if !cov.compose(g).is_reduced() {
            continue;
        }
        let cand = f.transform(g);
        if abs_key(&cand) < abs_key(&best) {
            best = cand;
        }
    }
    Ok(normalize_signs(best))
}

/// Representative of `{±F(X, ±Y)}` with `c3 > 0`, then `c2 >= 0`, then `c0 >= 0`.
pub fn normalize_signs(f: BinaryCubicForm) -> BinaryCubicForm {
    let mut f = f;
    if *f.c3() < 0 {
        f = f.negate();
    }
    let flip = f.transform(&mat(1, 0, 0, -1)); // (c3, -c2, c1, -c0)
    let c2 = f.coeff(2).cmp0();
    if c2 == std::cmp::Ordering::Less || (c2 == std::cmp::Ordering::Equal && *f.c0() < 0) {
        f = flip;
    }
    f
}

/// Equal up to `F -> -F` and `Y -> -Y`.
pub fn equivalent_up_to_sign(f: &BinaryCubicForm, g: &BinaryCubicForm) -> bool {
    normalize_signs(f.clone()) == normalize_signs(g.clone())
}

// ---------------------------------------------------------------------------
// index removal

// polynomials mod a (possibly large) prime, low degree first
fn ipoly_trim(v: &mut Vec<Integer>) {
    while v.last().is_some_and(|x| *x == 0) {
        v.pop();
    }
}

fn ipoly_rem(a: &[Integer], m: &[Integer], p: &Integer) -> Vec<Integer> {
    let mut r: Vec<Integer> = a.to_vec();
    ipoly_trim(&mut r);
    let dm = m.len() - 1;
    let inv = m[dm].clone().invert(p).expect("unit leading coefficient");
    while r.len() > dm {
        let k = r.len() - 1;
        let c = Integer::from(&r[k] * &inv) % p;
        for i in 0..=dm {
            let j = k - dm + i;
            r[j] = (&r[j] - Integer::from(&c * &m[i])).modulo(p);
        }
        ipoly_trim(&mut r);
    }
    r
}

fn ipoly_gcd(a: &[Integer], b: &[Integer], p: &Integer) -> Vec<Integer> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    ipoly_trim(&mut x);
    ipoly_trim(&mut y);
    while !y.is_empty() {
        let r = ipoly_rem(&x, &y, p);
        x = y;
        y = r;
    }
    if let Some(lead) = x.last().cloned() {
        let inv = lead.invert(p).expect("unit");
        for c in x.iter_mut() {
            *c = Integer::from(&*c * &inv).modulo(p);
        }
    }
    x
}

/// The repeated root of `F` modulo `p` as `(r : s)`, if any.
fn multiple_root_mod(form: &BinaryCubicForm, p: &Integer) -> Option<(Integer, Integer)> {
    let c: Vec<Integer> = (0..4).map(|i| form.coeff(i).clone().modulo(p)).collect();
    if c[3] == 0 && c[2] == 0 {
        return Some((Integer::from(1), Integer::new()));
    }
    let mut f = c.clone();
    ipoly_trim(&mut f);
    if f.len() < 3 {
        return None;
    }
    let df: Vec<Integer> = (1..f.len()).map(|i| Integer::from(&f[i] * i as u32).modulo(p)).collect();
    let mut df = df;
    ipoly_trim(&mut df);
    let g = if df.is_empty() { ipoly_gcd(&f, &[], p) } else { ipoly_gcd(&f, &df, p) };
    match g.len() {
        0 | 1 => None,
        2 => Some((Integer::from(-&g[0]).modulo(p), Integer::from(1))),
        _ => {
            // g = (x - r)^k with k >= 2
            let k = g.len() - 1;
            let r = if *p == 2 {
                // (x - r)^2 = x^2 + r over F_2; (x - r)^3 = x^3 + r x^2 + r x + r
                g[0].clone()
            } else if *p == k as u32 {
                // (x - r)^p = x^p - r
                Integer::from(-&g[0]).modulo(p)
            } else {
                let kinv = Integer::from(k as u32).invert(p).expect("unit");
                (Integer::from(-&g[k - 1]) * kinv).modulo(p)
            };
            Some((r, Integer::from(1)))
        }
    }
}

/// Remove the index of the ring of `F` at the prime `p`, as far as possible.
pub fn remove_index_at(form: &BinaryCubicForm, p: &Integer) -> BinaryCubicForm {
    let mut f = form.clone();
    let p2 = Integer::from(p * p);
    loop {
        if !f.disc().is_divisible(&p2) {
            return f;
        }
        if f.coeffs().iter().all(|x| x.is_divisible(p)) {
            f = BinaryCubicForm::new(f.coeffs().clone().map(|x| x / p));
            continue;
        }
        let Some((r, s)) = multiple_root_mod(&f, p) else {
            return f;
        };
        // move the repeated root to (1:0)
        let g = if s == 0 { identity() } else { [[r, Integer::from(-1)], [Integer::from(1), Integer::new()]] };
        let h = f.transform(&g);
        let [a, b, c, d] = h.coeffs();
        if a.is_divisible(&p2) && b.is_divisible(p) {
            f = BinaryCubicForm::new([Integer::from(a / &p2), Integer::from(b / p), c.clone(), Integer::from(d * p)]);
        } else {
            return f;
        }
    }
}

/// Index removal at the listed primes only, followed by reduction.  Use this
/// when the discriminant cannot be factored completely but every prime whose
/// square divides it is known.
pub fn maximalize_at(form: &BinaryCubicForm, primes: &[Integer]) -> Result<BinaryCubicForm> {
    let mut f = form.clone();
    for p in primes {
        f = remove_index_at(&f, p);
    }
    julia_reduce(&f)
}

/// Remove the index at every prime whose square divides `disc(F)` and reduce.
/// `factored_disc` must multiply out to `|disc(F)|`.
pub fn maximalize(form: &BinaryCubicForm, factored_disc: &[(Integer, u32)]) -> Result<CubicField> {
    let d = disc(form)?;
    let mut prod = Integer::from(1);
    for (p, e) in factored_disc {
        if !crate::numeric::is_prime(p) {
            return Err(Error::NotPrime(p.to_string()));
        }
        prod *= p.clone().pow(*e);
    }
    let abs = d.clone().abs();
    if prod != abs {
        let cof = if abs.is_divisible(&prod) { abs / prod } else { abs };
        return Err(Error::IncompleteFactorization(cof.to_string()));
    }
    let primes: Vec<Integer> = factored_disc.iter().filter(|(_, e)| *e >= 2).map(|(p, _)| p.clone()).collect();
    let f = maximalize_at(form, &primes)?;
    CubicField::from_maximal_form(f)
}

// ---------------------------------------------------------------------------
// fields

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubicField {
    pub form: BinaryCubicForm,
    pub disc: Integer,
    pub r1: u32,
    pub r2: u32,
}

impl CubicField {
    /// Field attached to a form whose discriminant is already the field
    /// discriminant.  Only the necessary congruence `d ≡ 0, 1 mod 4` is checked.
    pub fn from_maximal_form(form: BinaryCubicForm) -> Result<Self> {
        if !form.is_irreducible() {
            return Err(Error::ReducibleForm);
        }
        let d = disc(&form)?;
        let m = Integer::from(&d % 4u32).modulo(&Integer::from(4));
        if m != 0 && m != 1 {
            return Err(Error::Inconsistent(format!("discriminant {d} is not 0 or 1 mod 4")));
        }
        let (r1, r2) = if d > 0 { (3, 0) } else { (1, 1) };
        Ok(CubicField { form, disc: d, r1, r2 })
    }

    /// `(e, f)` for each prime above `p`.
    pub fn prime_decomposition(&self, p: u64) -> Vec<(u32, u32)> {
        let c = self.form.coeffs().clone().map(|x| mod_u64(&x, p));
        let roots = roots_mod_p_u64(c, p).expect("maximal forms are primitive");
        let mut out: Vec<(u32, u32)> = roots.iter().map(|r| (r.multiplicity, 1)).collect();
        let used: u32 = roots.iter().map(|r| r.multiplicity).sum();
        if used < 3 {
            out.push((1, 3 - used));
        }
        out
    }

    /// Number of primes of the field above `p`.
    pub fn primes_above(&self, p: u64) -> usize {
        self.prime_decomposition(p).len()
    }
}

/// `floor(12 ln(|d|)^2)`.
pub fn bach_bound(field: &CubicField) -> Integer {
    let d = Float::with_val(256, field.disc.clone().abs());
    let l = d.ln();
    let v = Float::with_val(256, &l * &l) * 12u32;
    v.floor().to_integer().expect("finite")
}

// ---------------------------------------------------------------------------
// factor base

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FactorBasePrime {
    pub p: u64,
    pub root: ProjRoot,
    pub ramified: bool,
    /// Valuation of the fractional ideal `(alpha)` at this prime.
    pub alpha_valuation: i32,
}

#[derive(Clone, Debug)]
pub struct FactorBase {
    pub field: CubicField,
    /// Exclusive bound on norms.
    pub bound: u64,
    pub primes: Vec<FactorBasePrime>,
    index: HashMap<(u64, ProjRoot), usize>,
    /// Columns at `(1:0)` primes with the constant offset `-v_p(c3)` carried
    /// by every `a + b alpha`.
    pub pole_offsets: Vec<(usize, i32)>,
    /// Whether every prime dividing `c3` lies below the bound.
    pub c3_supported: bool,
    /// Primorial of the rational primes and the primes up to `sqrt(bound)`.
    pub(crate) smooth: std::sync::OnceLock<(Integer, Vec<u64>)>,
}

impl FactorBase {
    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    pub fn column(&self, p: u64, root: ProjRoot) -> Option<usize> {
        self.index.get(&(p, root)).copied()
    }

    /// Columns of the primes above `p`.
    pub fn columns_over(&self, p: u64) -> Vec<usize> {
        let start = self.primes.partition_point(|q| q.p < p);
        (start..self.primes.len()).take_while(|&i| self.primes[i].p == p).collect()
    }

    /// Distinct rational primes in the base, ascending.
    pub fn rational_primes(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.primes.iter().map(|q| q.p).collect();
        v.dedup();
        v
    }

    /// Rebuild from explicit entries (e.g. read back from a file).
    pub fn from_parts(field: CubicField, bound: u64, primes: Vec<FactorBasePrime>) -> Self {
        let index = primes.iter().enumerate().map(|(i, q)| ((q.p, q.root), i)).collect();
        let pole_offsets = primes
            .iter()
            .enumerate()
            .filter(|(_, q)| q.root == ProjRoot::Infinity && q.alpha_valuation < 0)
            .map(|(i, q)| (i, q.alpha_valuation))
            .collect::<Vec<_>>();
        let mut c3 = field.form.c3().clone().abs();
        for q in primes.iter().filter(|q| q.root == ProjRoot::Infinity) {
            let p = Integer::from(q.p);
            while c3.is_divisible(&p) {
                c3 /= &p;
            }
        }
        FactorBase { field, bound, primes, index, pole_offsets, c3_supported: c3 == 1, smooth: Default::default() }
    }
}

/// Every degree-one prime of norm `< bound`, ordered by `(p, root)` with
/// `(1:0)` after the affine roots.
pub fn build_factor_base(field: &CubicField, bound: u64) -> FactorBase {
    let primes = primes_below(bound);
    let form = &field.form;
    let per_chunk: Vec<Vec<FactorBasePrime>> = primes
        .par_chunks(4096)
        .map(|chunk| {
            let mut out = Vec::new();
            for &p in chunk {
                let c = form.coeffs().clone().map(|x| mod_u64(&x, p));
                let Some(roots) = roots_mod_p_u64(c, p) else { continue };
                for r in roots {
                    let alpha_valuation = match r.root {
                        ProjRoot::Infinity => -(crate::numeric::valuation(form.c3(), p) as i32),
                        ProjRoot::Affine(0) => crate::numeric::valuation(form.c0(), p) as i32,
                        _ => 0,
                    };
                    out.push(FactorBasePrime { p, root: r.root, ramified: r.multiplicity > 1, alpha_valuation });
                }
            }
            out
        })
        .collect();
    let primes: Vec<FactorBasePrime> = per_chunk.into_iter().flatten().collect();
    FactorBase::from_parts(field.clone(), bound, primes)
}
