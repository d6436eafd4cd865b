//! Sieve parameter selection: skewness, Murphy's alpha, and relation-yield
//! estimates from Dickman's rho over concentric shells of the sieve region.
//!
//! All sizes are base-2 logarithms ("bits") in f64; the quantities involved
//! are smooth and far from f64 limits.

use rug::{Float, Integer};

use crate::cubic::BinaryCubicForm;
use crate::error::{Error, Result};
use crate::numeric::{log2_abs, mod_u64, primes_below, roots_mod_p_u64, DickmanRho};

/// `log2 s` for the skewness `s = A/B`: the minimiser of
/// `max_i (log2|c_i| + (i - 3/2) log2 s)`, where the two largest terms meet.
pub fn choose_skew_log2(form: &BinaryCubicForm) -> f64 {
    let lines: Vec<(f64, f64)> = (0..4)
        .filter(|&i| *form.coeff(i) != 0)
        .map(|i| (log2_abs(form.coeff(i)), i as f64 - 1.5))
        .collect();
    let envelope = |sigma: f64| lines.iter().map(|(l, m)| l + m * sigma).fold(f64::NEG_INFINITY, f64::max);
    let mut best = (f64::INFINITY, 0.0);
    for (i, &(li, mi)) in lines.iter().enumerate() {
        for &(lj, mj) in &lines[i + 1..] {
            if mi == mj {
                continue;
            }
            let sigma = (lj - li) / (mi - mj);
            let v = envelope(sigma);
            if v < best.0 {
                best = (v, sigma);
            }
        }
    }
    best.1
}

/// The skewness `s = A/B`.
pub fn choose_skew(form: &BinaryCubicForm) -> f64 {
    choose_skew_log2(form).exp2()
}

/// `log2 |c_i| A^i B^(3-i)` for each `i`.
pub fn term_bits(form: &BinaryCubicForm, a_bits: f64, b_bits: f64) -> [f64; 4] {
    let mut out = [f64::NEG_INFINITY; 4];
    for (i, o) in out.iter_mut().enumerate() {
        if *form.coeff(i) != 0 {
            *o = log2_abs(form.coeff(i)) + i as f64 * a_bits + (3 - i) as f64 * b_bits;
        }
    }
    out
}

/// `log2 sum_i |c_i| A^i B^(3-i)`, a bound for `|F|` on `[-A, A] x [1, B]`
/// attained up to a small factor at the corners.
pub fn max_norm_bits(form: &BinaryCubicForm, a_bits: f64, b_bits: f64) -> f64 {
    let t = term_bits(form, a_bits, b_bits);
    let m = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + t.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

/// `(log2 A, log2 B)` for region size `2AB = 2^S` and skew `A/B = 2^sigma`.
pub fn region_sides(region_bits: f64, skew_log2: f64) -> (f64, f64) {
    ((region_bits - 1.0 + skew_log2) / 2.0, (region_bits - 1.0 - skew_log2) / 2.0)
}

// ---------------------------------------------------------------------------
// Murphy alpha

/// Number of points of `P^1(Z/p^k)` where `F` vanishes mod `p^k`, for
/// `k = 1..=kmax`, by lifting roots one digit at a time.
fn projective_root_counts(form: &BinaryCubicForm, p: u64, kmax: u32) -> Vec<u64> {
    let modulus = (p as u128).pow(kmax);
    let c: Vec<u128> = (0..4)
        .map(|i| {
            let m = Integer::from(modulus);
            let mut r = Integer::from(form.coeff(i) % &m);
            if r < 0 {
                r += &m;
            }
            r.to_u128().unwrap()
        })
        .collect();
    let mulm = |a: u128, b: u128, m: u128| -> u128 { mul_mod_u128(a, b, m) };
    // chart y = 1: f(x) = F(x, 1); chart x = 1: g(y) = F(1, y) with p | y
    let f = |x: u128, m: u128| -> u128 {
        let mut acc = c[3] % m;
        for i in (0..3).rev() {
            acc = (mulm(acc, x, m) + c[i] % m) % m;
        }
        acc
    };
    let g = |y: u128, m: u128| -> u128 {
        let mut acc = c[0] % m;
        for i in 1..4 {
            acc = (mulm(acc, y, m) + c[i] % m) % m;
        }
        acc
    };
    let mut counts = vec![0u64; kmax as usize];
    const CAP: usize = 1 << 20;
    for chart in 0..2 {
        let p128 = p as u128;
        let mut level: Vec<u128> = if chart == 0 {
            (0..p as u128).filter(|&x| f(x, p128) == 0).collect()
        } else if g(0, p128) == 0 {
            vec![0]
        } else {
            Vec::new()
        };
        let mut pk = p128;
        for k in 1..=kmax {
            counts[(k - 1) as usize] += level.len() as u64;
            if k == kmax || level.is_empty() || level.len() > CAP {
                break;
            }
            let next_pk = pk * p128;
            let mut next = Vec::new();
            for &x in &level {
                for t in 0..p128 {
                    let y = x + t * pk;
                    let v = if chart == 0 { f(y, next_pk) } else { g(y, next_pk) };
                    if v == 0 {
                        next.push(y);
                    }
                }
            }
            level = next;
            pk = next_pk;
        }
    }
    counts
}


fn mul_mod_u128(a: u128, b: u128, m: u128) -> u128 {
    match a.checked_mul(b) {
        Some(x) => x % m,
        None => {
            let (mut a, mut b, mut r) = (a % m, b % m, 0u128);
            while b > 0 {
                if b & 1 == 1 {
                    r = (r + a) % m;
                }
                a = (a << 1) % m;
                b >>= 1;
            }
            r
        }
    }
}

/// Expected `p`-adic valuation of `F(a, b)` over coprime pairs.
pub fn expected_valuation(form: &BinaryCubicForm, p: u64) -> f64 {
    let c = form.coeffs().clone().map(|x| mod_u64(&x, p));
    let disc_mod = mod_u64(&form.disc(), p);
    if disc_mod != 0 {
        let n = roots_mod_p_u64(c, p).map_or(0, |r| r.len()) as f64;
        let pf = p as f64;
        return n * pf / (pf * pf - 1.0);
    }
    let mut kmax = 1;
    while (p as f64).powi(kmax + 1) <= 2f64.powi(40) && kmax < 60 {
        kmax += 1;
    }
    let counts = projective_root_counts(form, p, kmax as u32);
    let pf = p as f64;
    counts
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let k = i as i32 + 1;
            n as f64 / (pf.powi(k) + pf.powi(k - 1))
        })
        .sum()
}

/// Murphy's alpha in natural-log units:
/// `sum_{p <= cutoff} log p (1/(p-1) - E_p)` with `E_p` the expected
/// valuation of `F(a, b)` at coprime pairs.
pub fn murphy_alpha(form: &BinaryCubicForm, prime_cutoff: u64) -> f64 {
    primes_below(prime_cutoff + 1)
        .into_iter()
        .map(|p| {
            let pf = p as f64;
            pf.ln() * (1.0 / (pf - 1.0) - expected_valuation(form, p))
        })
        .sum()
}

/// `alpha` (natural-log units) as a shift in bits.
pub fn alpha_exact_bits(alpha: f64) -> f64 {
    alpha / std::f64::consts::LN_2
}

/// The `-2^x` shorthand for a shift of `-x` bits: `sign(alpha) 2^|bits|`.
pub fn alpha_shorthand(alpha: f64) -> f64 {
    let bits = alpha_exact_bits(alpha);
    bits.signum() * bits.abs().exp2()
}

/// Inverse of [`alpha_shorthand`]: `-2^x` becomes `-x` bits.
pub fn shorthand_to_bits(short: f64) -> f64 {
    if short == 0.0 {
        0.0
    } else {
        short.signum() * short.abs().log2()
    }
}

// ---------------------------------------------------------------------------
// yield model

/// Inputs of the shell-sum estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct YieldModel {
    /// Region size (bits) of the innermost shell.
    pub base_region_bits: f64,
    /// Norm size (bits) on the innermost boundary, alpha already applied.
    pub base_norm_bits: f64,
    /// `log2` of the smoothness bound.
    pub log2_bound: f64,
}

impl YieldModel {
    /// Reference constants for K28: area `2^42.25`, norm
    /// `174.6` bits, `log2 B = 20.2`.
    pub fn k28_reference() -> Self {
        YieldModel { base_region_bits: 42.25, base_norm_bits: 174.6, log2_bound: 20.2 }
    }

    /// Model computed from the form: the innermost region is the one whose
    /// short side is `B = 1` at the chosen skew.
    pub fn from_form(form: &BinaryCubicForm, smoothness_bound: u64, alpha: f64) -> Self {
        let sigma = choose_skew_log2(form);
        let base_region_bits = 1.0 + sigma;
        let (a_bits, b_bits) = region_sides(base_region_bits, sigma);
        let norm = max_norm_bits(form, a_bits, b_bits);
        YieldModel {
            base_region_bits,
            base_norm_bits: norm + alpha_exact_bits(alpha),
            log2_bound: (smoothness_bound as f64).log2(),
        }
    }
}

/// Expected relation count in a region of `2^region_bits` pairs: shells of
/// width `shell_bits` in log-area, each weighted by its new area times
/// `rho((norm + (3/2) * growth) / log2 B)`, divided by `zeta(2)`.
pub fn estimate_relations(model: &YieldModel, region_bits: f64, shell_bits: f64) -> Result<f64> {
    if !(shell_bits > 0.0) {
        return Err(Error::Domain { value: shell_bits.to_string(), domain: "shell width > 0" });
    }
    if region_bits < model.base_region_bits {
        return Err(Error::Domain {
            value: region_bits.to_string(),
            domain: "region at least the innermost shell",
        });
    }
    let mut rho = DickmanRho::new(96);
    let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
    let s0 = model.base_region_bits;
    let steps = (region_bits - s0) / shell_bits;
    let k = (steps + 1e-9).floor() as u64;
    let norm_at = |i: f64| (model.base_norm_bits + 1.5 * shell_bits * i) / model.log2_bound;
    let mut total = s0.exp2() * rho.eval_f64(norm_at(0.0))?;
    for i in 1..=k {
        let fi = i as f64;
        let beta = (s0 + shell_bits * fi).exp2() - (s0 + shell_bits * (fi - 1.0)).exp2();
        total += beta * rho.eval_f64(norm_at(fi))?;
    }
    let covered = s0 + shell_bits * k as f64;
    if region_bits > covered + 1e-12 {
        let beta = region_bits.exp2() - covered.exp2();
        total += beta * rho.eval_f64(norm_at(k as f64 + 1.0))?;
    }
    Ok(total / zeta2)
}

#[derive(Clone, Debug)]
pub struct SievePlan {
    pub skew_log2: f64,
    pub region_bits: f64,
    /// Half-width of the `a` range.
    pub a_max: Integer,
    /// Largest `b`.
    pub b_max: Integer,
    /// Murphy alpha, natural-log units.
    pub alpha: f64,
    pub smoothness_bound: u64,
    pub model: YieldModel,
    pub predicted_relations: f64,
}

impl SievePlan {
    /// Plan for `[-A, A] x [1, B]` with `2AB = 2^region_bits`.
    pub fn new(
        form: &BinaryCubicForm,
        smoothness_bound: u64,
        region_bits: f64,
        alpha_cutoff: u64,
        reference_model: bool,
    ) -> Result<Self> {
        let skew_log2 = choose_skew_log2(form);
        let alpha = murphy_alpha(form, alpha_cutoff);
        let model = if reference_model {
            YieldModel::k28_reference()
        } else {
            YieldModel::from_form(form, smoothness_bound, alpha)
        };
        let predicted_relations = estimate_relations(&model, region_bits, 0.25)?;
        let (_, b_bits) = region_sides(region_bits, skew_log2);
        let b_max = Integer::from_f64(b_bits.exp2().round().max(1.0)).unwrap();
        let area = Float::with_val(128, region_bits - 1.0).exp2();
        let a_max = (area / &b_max).round().to_integer().unwrap().max(Integer::from(1));
        Ok(SievePlan { skew_log2, region_bits, a_max, b_max, alpha, smoothness_bound, model, predicted_relations })
    }
}

