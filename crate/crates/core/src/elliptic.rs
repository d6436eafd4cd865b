//! Elliptic curves in integral Weierstrass form
//! `y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6`.
//!
//! Local data comes from Tate's algorithm (Silverman, Advanced Topics IV.9;
//! Cremona, Algorithms for Modular Elliptic Curves 3.2).  Traces of Frobenius
//! at good primes are counted with a table of quadratic residues, or by
//! exhaustive enumeration at 2 and 3.

use std::fmt;

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::cubic::BinaryCubicForm;
use crate::error::{Error, Result};
use crate::numeric::{is_prime, jacobi_u64, mod_u64};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EllipticCurve {
    a: [Integer; 5],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Invariants {
    pub b2: Integer,
    pub b4: Integer,
    pub b6: Integer,
    pub b8: Integer,
    pub c4: Integer,
    pub c6: Integer,
    pub disc: Integer,
}

fn invariants_of(a: &[Integer; 5]) -> Invariants {
    let [a1, a2, a3, a4, a6] = a;
    let b2 = Integer::from(a1 * a1) + Integer::from(4 * a2);
    let b4 = Integer::from(2 * a4) + Integer::from(a1 * a3);
    let b6 = Integer::from(a3 * a3) + Integer::from(4 * a6);
    let b8 = Integer::from(a1 * a1) * a6 + Integer::from(4 * a2) * a6 - Integer::from(a1 * a3) * a4
        + Integer::from(a3 * a3) * a2
        - Integer::from(a4 * a4);
    let c4 = Integer::from(&b2 * &b2) - Integer::from(24 * &b4);
    let c6 = -Integer::from(&b2 * &b2) * &b2 + Integer::from(36 * &b2) * &b4 - Integer::from(216 * &b6);
    let disc = -Integer::from(&b2 * &b2) * &b8 - Integer::from(8 * &b4) * &b4 * &b4
        - Integer::from(27 * &b6) * &b6
        + Integer::from(9 * &b2) * &b4 * &b6;
    Invariants { b2, b4, b6, b8, c4, c6, disc }
}

impl EllipticCurve {
    /// Curve from `[a1, a2, a3, a4, a6]`; fails on a singular model.
    pub fn new(a: [Integer; 5]) -> Result<Self> {
        if invariants_of(&a).disc == 0 {
            return Err(Error::SingularCurve);
        }
        Ok(EllipticCurve { a })
    }

    pub fn from_i64(a: [i64; 5]) -> Result<Self> {
        Self::new(a.map(Integer::from))
    }

    pub fn a_invariants(&self) -> &[Integer; 5] {
        &self.a
    }

    pub fn invariants(&self) -> Invariants {
        invariants_of(&self.a)
    }

    pub fn discriminant(&self) -> Integer {
        self.invariants().disc
    }
}

impl fmt::Display for EllipticCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}, {}]", self.a[0], self.a[1], self.a[2], self.a[3], self.a[4])
    }
}

/// The b-invariants and discriminant; fails when the model is singular.
pub fn invariants(curve: &EllipticCurve) -> Result<Invariants> {
    let inv = curve.invariants();
    if inv.disc == 0 {
        return Err(Error::SingularCurve);
    }
    Ok(inv)
}

/// Whether `(x, y)` lies on the curve, in exact rational arithmetic.
pub fn verify_point(curve: &EllipticCurve, x: &Rational, y: &Rational) -> bool {
    let [a1, a2, a3, a4, a6] = &curve.a;
    let lhs = Rational::from(y * y) + Rational::from(x * y) * a1 + Rational::from(y * a3);
    let x2 = Rational::from(x * x);
    let rhs = Rational::from(&x2 * x) + Rational::from(&x2 * a2) + Rational::from(x * a4) + a6;
    lhs == rhs
}

// ---------------------------------------------------------------------------
// traces of Frobenius

/// `a_p = p + 1 - #E(F_p)` at a prime of good reduction for this model.
pub fn count_ap(curve: &EllipticCurve, p: u64) -> Result<i64> {
    if !crate::numeric::is_prime_u64(p) {
        return Err(Error::NotPrime(p.to_string()));
    }
    if p > 1 << 32 {
        return Err(Error::Domain { value: p.to_string(), domain: "p <= 2^32" });
    }
    if curve.discriminant().is_divisible_u(p as u32) {
        return Err(Error::BadReduction(p.to_string()));
    }
    Ok(ap_model(&curve.a, p))
}

/// Trace of Frobenius of a model assumed nonsingular mod `p`.
fn ap_model(a: &[Integer; 5], p: u64) -> i64 {
    if p <= 3 {
        let r: Vec<u64> = a.iter().map(|x| mod_u64(x, p)).collect();
        let (a1, a2, a3, a4, a6) = (r[0], r[1], r[2], r[3], r[4]);
        let mut count = 1i64;
        for x in 0..p {
            for y in 0..p {
                let lhs = y * y + a1 * x * y + a3 * y;
                let rhs = x * x * x + a2 * x * x + a4 * x + a6;
                if lhs % p == rhs % p {
                    count += 1;
                }
            }
        }
        return p as i64 + 1 - count;
    }
    let inv = invariants_of(a);
    // (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    let b2 = mod_u64(&inv.b2, p);
    let b4 = mod_u64(&inv.b4, p);
    let b6 = mod_u64(&inv.b6, p);
    let g = |x: u64| -> u64 {
        let m = |u: u64, v: u64| ((u as u128 * v as u128) % p as u128) as u64;
        let mut acc = 4 % p;
        acc = (m(acc, x) + b2) % p;
        acc = (m(acc, x) + m(2, b4)) % p;
        (m(acc, x) + b6) % p
    };
    let mut sum = 0i64;
    if p <= 1 << 24 {
        let mut is_square = vec![false; p as usize];
        for y in 1..p.div_ceil(2) {
            is_square[((y * y) % p) as usize] = true;
        }
        for x in 0..p {
            let v = g(x);
            if v != 0 {
                sum += if is_square[v as usize] { 1 } else { -1 };
            }
        }
    } else {
        for x in 0..p {
            sum += jacobi_u64(g(x), p) as i64;
        }
    }
    -sum
}

// ---------------------------------------------------------------------------
// Tate's algorithm

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReductionType {
    Good,
    SplitMultiplicative,
    NonsplitMultiplicative,
    Additive,
}

impl ReductionType {
    pub fn is_multiplicative(self) -> bool {
        matches!(self, ReductionType::SplitMultiplicative | ReductionType::NonsplitMultiplicative)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ReductionType::Good => "good",
            ReductionType::SplitMultiplicative => "split",
            ReductionType::NonsplitMultiplicative => "nonsplit",
            ReductionType::Additive => "additive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "good" => ReductionType::Good,
            "split" => ReductionType::SplitMultiplicative,
            "nonsplit" => ReductionType::NonsplitMultiplicative,
            "additive" => ReductionType::Additive,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalReductionData {
    pub p: Integer,
    pub reduction: ReductionType,
    /// Kodaira symbol, e.g. `I0`, `I3`, `IV*`, `I2*`.
    pub kodaira: String,
    pub a_p: i64,
    /// Valuation of the minimal discriminant.
    pub ord_p_disc: u32,
    pub conductor_exponent: u32,
}

fn rst(a: &mut [Integer; 5], r: &Integer, s: &Integer, t: &Integer) {
    let [a1, a2, a3, a4, a6] = a.clone();
    let n1 = &a1 + Integer::from(2 * s);
    let n2 = a2.clone() - Integer::from(s * &a1) + Integer::from(3 * r) - Integer::from(s * s);
    let n3 = a3.clone() + Integer::from(r * &a1) + Integer::from(2 * t);
    let n4 = a4.clone() - Integer::from(s * &a3) + Integer::from(2 * r) * &a2
        - (t + Integer::from(r * s)) * &a1
        + Integer::from(3 * r) * r
        - Integer::from(2 * s) * t;
    let n6 = a6.clone() + Integer::from(r * &a4) + Integer::from(r * r) * &a2 + Integer::from(r * r) * r
        - Integer::from(t * &a3)
        - Integer::from(t * t)
        - Integer::from(r * t) * &a1;
    *a = [n1, n2, n3, n4, n6];
}

fn divides(p_pow: &Integer, x: &Integer) -> bool {
    x.is_divisible(p_pow)
}

/// Local reduction data at `p` via Tate's algorithm.  The model need not be
/// minimal at `p`.
pub fn tate_local(curve: &EllipticCurve, p: &Integer) -> Result<LocalReductionData> {
    if !is_prime(p) {
        return Err(Error::NotPrime(p.to_string()));
    }
    let pu = p.to_u64();
    let mut a = curve.a.clone();
    let p2 = Integer::from(p * p);
    let p3 = Integer::from(&p2 * p);
    let p4 = Integer::from(&p2 * &p2);
    let p6 = Integer::from(&p3 * &p3);
    let two = *p == 2;
    let small = *p <= 3;
    let half = if two { Integer::new() } else { Integer::from(p + 1u32) / 2 };
    let modp = |x: &Integer| -> Integer {
        let mut r = Integer::from(x % p);
        if r < 0 {
            r += p;
        }
        r
    };
    let mut vd = 0i64;
    let mut dd = curve.discriminant();
    while dd.is_divisible(p) {
        dd /= p;
        vd += 1;
    }
    let inconsistent = |step: &str| Error::Inconsistent(format!("Tate's algorithm at {p}: {step}"));

    loop {
        if vd == 0 {
            let pw = pu.filter(|&x| x <= 1 << 32).ok_or_else(|| Error::Domain {
                value: p.to_string(),
                domain: "good-reduction a_p needs p <= 2^32",
            })?;
            return Ok(LocalReductionData {
                p: p.clone(),
                reduction: ReductionType::Good,
                kodaira: "I0".into(),
                a_p: ap_model(&a, pw),
                ord_p_disc: 0,
                conductor_exponent: 0,
            });
        }
        // move the singular point to (0,0)
        let (r, t) = if small {
            singular_point_small(&a, pu.unwrap()).ok_or_else(|| inconsistent("no singular point"))?
        } else {
            let inv = invariants_of(&a);
            let inv12 = |x: &Integer| -> Integer {
                let m = modp(x);
                
                m.invert(p).expect("unit")
            };
            let r = if inv.c4.is_divisible(p) {
                modp(&(-(&inv.b2 * inv12(&Integer::from(12)))))
            } else {
                let num = &inv.c6 + Integer::from(&inv.b2 * &inv.c4);
                let den = inv12(&Integer::from(12 * &inv.c4));
                modp(&(-num * den))
            };
            let t = modp(&(-(Integer::from(&a[0] * &r) + &a[2]) * &half));
            (r, t)
        };
        rst(&mut a, &r, &Integer::new(), &t);
        if !(divides(p, &a[2]) && divides(p, &a[3]) && divides(p, &a[4])) {
            return Err(inconsistent("singular point not at origin"));
        }
        let inv = invariants_of(&a);
        if !inv.b2.is_divisible(p) {
            let split = if two {
                a[1].is_even()
            } else {
                inv.b2.legendre(p) == 1
            };
            return Ok(LocalReductionData {
                p: p.clone(),
                reduction: if split {
                    ReductionType::SplitMultiplicative
                } else {
                    ReductionType::NonsplitMultiplicative
                },
                kodaira: format!("I{vd}"),
                a_p: if split { 1 } else { -1 },
                ord_p_disc: vd as u32,
                conductor_exponent: 1,
            });
        }
        let additive = |kodaira: String, f: i64| LocalReductionData {
            p: p.clone(),
            reduction: ReductionType::Additive,
            kodaira,
            a_p: 0,
            ord_p_disc: vd as u32,
            conductor_exponent: f as u32,
        };
        if !divides(&p2, &a[4]) {
            return Ok(additive("II".into(), vd));
        }
        if !divides(&p3, &inv.b8) {
            return Ok(additive("III".into(), vd - 1));
        }
        if !divides(&p3, &inv.b6) {
            return Ok(additive("IV".into(), vd - 2));
        }
        // p | a1, a2; p^2 | a3, a4; p^3 | a6
        let (s, t) = if two {
            let s = modp(&a[1]);
            let q = Integer::from(&a[4] / 4u32);
            (s, (2 * modp(&q)))
        } else {
            let s = modp(&(-Integer::from(&a[0] * &half)));
            let t = -Integer::from(&a[2] * &half);
            (s, t)
        };
        rst(&mut a, &Integer::new(), &s, &t);
        if !(divides(p, &a[0])
            && divides(p, &a[1])
            && divides(&p2, &a[2])
            && divides(&p2, &a[3])
            && divides(&p3, &a[4]))
        {
            return Err(inconsistent("normalisation before I0*"));
        }
        let b = Integer::from(&a[1] / p);
        let c = Integer::from(&a[3] / &p2);
        let d = Integer::from(&a[4] / &p3);
        let w = Integer::from(27 * &d) * &d - Integer::from(&b * &b) * &c * &c
            + Integer::from(4 * &b) * &b * &b * &d
            - Integer::from(18 * &b) * &c * &d
            + Integer::from(4 * &c) * &c * &c;
        let x = Integer::from(3 * &c) - Integer::from(&b * &b);
        if !w.is_divisible(p) {
            return Ok(additive("I0*".into(), vd - 4));
        }
        if !x.is_divisible(p) {
            // double root of T^3 + bT^2 + cT + d: move it to 0
            let rho = if two {
                modp(&c)
            } else if *p == 3 {
                modp(&Integer::from(&b * &c))
            } else {
                let num = Integer::from(&b * &c) - Integer::from(9 * &d);
                let den = modp(&Integer::from(2 * &x)).invert(p).expect("unit");
                modp(&(num * den))
            };
            rst(&mut a, &Integer::from(p * &rho), &Integer::new(), &Integer::new());
            let (mut ix, mut iy) = (3i64, 3i64);
            let mut mx = p2.clone();
            let mut my = p2.clone();
            loop {
                let a3t = Integer::from(&a[2] / &my);
                let a6t = &a[4] / Integer::from(&mx * &my);
                let q = Integer::from(&a3t * &a3t) + Integer::from(4 * &a6t);
                if !q.is_divisible(p) {
                    break;
                }
                let tau = if two { modp(&a6t) } else { modp(&(-a3t * &half)) };
                rst(&mut a, &Integer::new(), &Integer::new(), &Integer::from(&my * &tau));
                my *= p;
                iy += 1;
                let a2t = Integer::from(&a[1] / p);
                let a4t = &a[3] / Integer::from(p * &mx);
                let a6t = &a[4] / Integer::from(&mx * &my);
                let q = Integer::from(&a4t * &a4t) - Integer::from(4 * &a2t) * &a6t;
                if !q.is_divisible(p) {
                    break;
                }
                let rho = if two {
                    modp(&Integer::from(&a6t * &a2t))
                } else {
                    let den = modp(&Integer::from(2 * &a2t)).invert(p).expect("unit");
                    modp(&(-a4t * den))
                };
                rst(&mut a, &Integer::from(&mx * &rho), &Integer::new(), &Integer::new());
                mx *= p;
                ix += 1;
            }
            let m = ix + iy - 5;
            return Ok(additive(format!("I{m}*"), vd - ix - iy + 1));
        }
        // triple root: move it to 0
        let rho = if two {
            modp(&b)
        } else if *p == 3 {
            modp(&(-d))
        } else {
            let inv3 = Integer::from(3).invert(p).expect("unit");
            modp(&(-b * inv3))
        };
        rst(&mut a, &Integer::from(p * &rho), &Integer::new(), &Integer::new());
        let x3 = Integer::from(&a[2] / &p2);
        let x6 = Integer::from(&a[4] / &p4);
        let q = Integer::from(&x3 * &x3) + Integer::from(4 * &x6);
        if !q.is_divisible(p) {
            return Ok(additive("IV*".into(), vd - 6));
        }
        let tau = if two { modp(&x6) } else { modp(&(-x3 * &half)) };
        rst(&mut a, &Integer::new(), &Integer::new(), &Integer::from(&p2 * &tau));
        if !divides(&p4, &a[3]) {
            return Ok(additive("III*".into(), vd - 7));
        }
        if !divides(&p6, &a[4]) {
            return Ok(additive("II*".into(), vd - 8));
        }
        // non-minimal: scale by p and start again
        for (i, e) in [1u32, 2, 3, 4, 6].into_iter().enumerate() {
            a[i] /= p.clone().pow(e);
        }
        vd -= 12;
    }
}

/// Singular point of the reduction mod 2 or 3 by enumeration.
fn singular_point_small(a: &[Integer; 5], p: u64) -> Option<(Integer, Integer)> {
    let r: Vec<i64> = a.iter().map(|x| mod_u64(x, p) as i64).collect();
    let (a1, a2, a3, a4, a6) = (r[0], r[1], r[2], r[3], r[4]);
    let p = p as i64;
    for x in 0..p {
        for y in 0..p {
            let f = y * y + a1 * x * y + a3 * y - x * x * x - a2 * x * x - a4 * x - a6;
            let fx = a1 * y - 3 * x * x - 2 * a2 * x - a4;
            let fy = 2 * y + a1 * x + a3;
            if f.rem_euclid(p) == 0 && fx.rem_euclid(p) == 0 && fy.rem_euclid(p) == 0 {
                return Some((Integer::from(x), Integer::from(y)));
            }
        }
    }
    None
}

/// The 2-division form `4X^3 + b2 X^2 Y + 2 b4 X Y^2 + b6 Y^3`.  Its root
/// field is the cubic subfield of `Q(E[2])`.
pub fn two_division_cubic(curve: &EllipticCurve) -> Result<BinaryCubicForm> {
    let inv = curve.invariants();
    let form = BinaryCubicForm::new([
        Integer::from(4),
        inv.b2.clone(),
        Integer::from(2 * &inv.b4),
        inv.b6.clone(),
    ]);
    if !form.is_irreducible() {
        return Err(Error::RationalTwoTorsion);
    }
    Ok(form)
}

/// Local data at every prime in `primes`; their product of `p^f` is the
/// conductor when the list covers every bad prime.
pub fn local_data_all(curve: &EllipticCurve, primes: &[Integer]) -> Result<Vec<LocalReductionData>> {
    primes.iter().map(|p| tate_local(curve, p)).collect()
}
