//! Explicit-formula bound on the analytic rank.
//!
//! With the Fejér kernel `f(t) = (sin(Delta pi t) / (Delta pi t))^2` and GRH
//! for `L(E, s)`, `r_an(E) <= sum_gamma f(gamma) = g + u + n` where
//!
//! ```text
//! g = -(1/(Delta pi)) sum_{p <= e^{2 pi Delta}} log p
//!       sum_{k=1}^{floor(2 pi Delta / log p)} s_k p^{-k/2} (1 - k log p / (2 pi Delta))
//! u = -gamma/(pi Delta) + (pi^2/6 - Li2(e^{-2 pi Delta})) / (2 pi^2 Delta^2)
//! n = (1/(Delta pi)) log(sqrt(N) / (2 pi))
//! ```
//!
//! Here `s_k = alpha_p^k + beta_p^k` in the analytic normalisation, and the
//! closed form for `u` equals `(1/pi) Re int psi(1 + it) f(t) dt`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use rug::{Float, Integer};

use crate::elliptic::{count_ap, tate_local, EllipticCurve, LocalReductionData, ReductionType};
use crate::error::{Error, Result};
use crate::numeric::{dilog, euler_gamma, pi, primes_below, CompensatedSum};

/// `L_p(s)^{-1} = 1 - s1 p^{-s} + q p^{-2s}` in the analytic normalisation.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalFactor {
    pub p: u64,
    pub s1: Float,
    pub q: Float,
}

impl LocalFactor {
    pub fn good(p: u64, a_p: i64, prec: u32) -> Self {
        let s1 = Float::with_val(prec, a_p) / Float::with_val(prec, p).sqrt();
        LocalFactor { p, s1, q: Float::with_val(prec, 1) }
    }

    /// `a_p = +1` split, `-1` non-split.
    pub fn multiplicative(p: u64, a_p: i64, prec: u32) -> Self {
        let s1 = Float::with_val(prec, a_p) / Float::with_val(prec, p).sqrt();
        LocalFactor { p, s1, q: Float::new(prec) }
    }

    pub fn additive(p: u64, prec: u32) -> Self {
        LocalFactor { p, s1: Float::new(prec), q: Float::new(prec) }
    }

    pub fn from_local_data(d: &LocalReductionData, prec: u32) -> Result<Self> {
        let p = d.p.to_u64().ok_or_else(|| Error::Domain { value: d.p.to_string(), domain: "p < 2^64" })?;
        Ok(match d.reduction {
            ReductionType::Good => Self::good(p, d.a_p, prec),
            ReductionType::SplitMultiplicative | ReductionType::NonsplitMultiplicative => {
                Self::multiplicative(p, d.a_p, prec)
            }
            ReductionType::Additive => Self::additive(p, prec),
        })
    }
}

/// `[s_0, s_1, ..., s_kmax]` from `s_k = s1 s_{k-1} - q s_{k-2}`, `s_0 = 2`.
pub fn power_sums(f: &LocalFactor, kmax: usize) -> Vec<Float> {
    let prec = f.s1.prec();
    let mut s = Vec::with_capacity(kmax + 1);
    s.push(Float::with_val(prec, 2));
    if kmax >= 1 {
        s.push(f.s1.clone());
    }
    for k in 2..=kmax {
        let v = Float::with_val(prec, &f.s1 * &s[k - 1]) - Float::with_val(prec, &f.q * &s[k - 2]);
        s.push(v);
    }
    s
}

/// Traces of Frobenius read from a file instead of counted.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ApCache {
    pub values: BTreeMap<u64, i64>,
}

impl ApCache {
    pub fn get(&self, p: u64) -> Option<i64> {
        self.values.get(&p).copied()
    }

    pub fn max_prime(&self) -> u64 {
        self.values.keys().next_back().copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug)]
pub struct AnalyticBoundParams {
    pub delta: Float,
    pub conductor: Integer,
    pub root_number: Option<i8>,
    /// Largest prime cutoff `e^{2 pi Delta}` allowed without a covering cache.
    pub prime_budget: u64,
    pub prec: u32,
}

impl AnalyticBoundParams {
    pub fn new(delta: f64, conductor: Integer, root_number: Option<i8>) -> Self {
        let prec = 128;
        AnalyticBoundParams { delta: Float::with_val(prec, delta), conductor, root_number, prime_budget: 10_000_000, prec }
    }
}

/// `floor(e^{2 pi Delta})`.
pub fn prime_cutoff(delta: &Float) -> Result<u64> {
    let prec = delta.prec();
    let x = Float::with_val(prec, pi(prec) * delta * 2u32).exp();
    if !x.is_finite() || x >= u64::MAX as f64 {
        return Err(Error::Domain { value: delta.to_string(), domain: "e^(2 pi Delta) < 2^64" });
    }
    Ok(x.floor().to_integer().and_then(|v| v.to_u64()).unwrap_or(u64::MAX))
}

fn check_delta(delta: &Float) -> Result<()> {
    if !(*delta >= 1) {
        return Err(Error::Domain { value: delta.to_string(), domain: "Delta >= 1" });
    }
    Ok(())
}

/// The contribution `log p sum_k s_k p^{-k/2} (1 - k log p / (2 pi Delta))`
/// of one prime, before the `-1/(Delta pi)` factor.
pub fn prime_contribution(f: &LocalFactor, delta: &Float) -> Float {
    let prec = f.s1.prec();
    let two_pi_delta = Float::with_val(prec, pi(prec) * delta) * 2u32;
    let logp = Float::with_val(prec, f.p).ln();
    let kmax = Float::with_val(prec, &two_pi_delta / &logp).floor().to_f64() as usize;
    if kmax == 0 {
        return Float::new(prec);
    }
    let s = power_sums(f, kmax);
    let inv_sqrt_p = Float::with_val(prec, f.p).sqrt().recip();
    let mut pw = Float::with_val(prec, 1);
    let mut acc = Float::new(prec);
    for (k, sk) in s.iter().enumerate().skip(1) {
        pw *= &inv_sqrt_p;
        let weight = 1 - Float::with_val(prec, &logp * k as u32) / &two_pi_delta;
        acc += Float::with_val(prec, sk * &pw) * weight;
    }
    acc * logp
}

/// `g_an(Delta, E)`.  Bad primes come from `bad` when listed there, and from
/// Tate's algorithm otherwise; good primes from `cache` when present.
pub fn arithmetic_term(
    curve: &EllipticCurve,
    params: &AnalyticBoundParams,
    bad: &[LocalReductionData],
    cache: Option<&ApCache>,
) -> Result<Float> {
    check_delta(&params.delta)?;
    let prec = params.prec;
    let delta = Float::with_val(prec, &params.delta);
    let cutoff = prime_cutoff(&delta)?;
    let covered = cache.map_or(0, ApCache::max_prime);
    if cutoff > params.prime_budget && covered < cutoff {
        return Err(Error::BudgetExceeded { cutoff, budget: params.prime_budget });
    }
    let disc = curve.discriminant();
    let supplied: BTreeMap<u64, &LocalReductionData> =
        bad.iter().filter_map(|d| d.p.to_u64().map(|p| (p, d))).collect();
    let primes = primes_below(cutoff + 1);
    let contributions: Vec<Float> = primes
        .par_iter()
        .map(|&p| -> Result<Float> {
            let factor = if let Some(d) = supplied.get(&p) {
                LocalFactor::from_local_data(d, prec)?
            } else if disc.is_divisible(&Integer::from(p)) {
                LocalFactor::from_local_data(&tate_local(curve, &Integer::from(p))?, prec)?
            } else if let Some(ap) = cache.and_then(|c| c.get(p)) {
                LocalFactor::good(p, ap, prec)
            } else {
                LocalFactor::good(p, count_ap(curve, p)?, prec)
            };
            Ok(prime_contribution(&factor, &delta))
        })
        .collect::<Result<_>>()?;
    let mut sum = CompensatedSum::new(prec);
    for c in &contributions {
        sum.add(c);
    }
    let scale = Float::with_val(prec, &delta * pi(prec));
    Ok(-(sum.value() / scale))
}

/// `u_an(Delta)`, the archimedean term in closed form.
pub fn archimedean_term(delta: &Float) -> Result<Float> {
    check_delta(delta)?;
    let prec = delta.prec().max(64);
    let p = pi(prec);
    let d = Float::with_val(prec, delta);
    let x = Float::with_val(prec, -Float::with_val(prec, &p * &d) * 2u32).exp();
    let li2 = dilog(&x)?;
    let zeta2 = Float::with_val(prec, p.square_ref()) / 6u32;
    let first = -(euler_gamma(prec) / Float::with_val(prec, &p * &d));
    let denom = Float::with_val(prec, p.square_ref()) * Float::with_val(prec, d.square_ref()) * 2u32;
    Ok(first + (zeta2 - li2) / denom)
}

/// `n_an = (1/(Delta pi)) log(sqrt(N) / (2 pi))`.
pub fn conductor_term(conductor: &Integer, delta: &Float) -> Result<Float> {
    if *conductor < 1 {
        return Err(Error::Domain { value: conductor.to_string(), domain: "N >= 1" });
    }
    let prec = delta.prec().max(64);
    let p = pi(prec);
    let ln_n = Float::with_val(prec, conductor).ln();
    let ln_2pi = Float::with_val(prec, &p * 2u32).ln();
    let v = ln_n / 2u32 - ln_2pi;
    Ok(v / Float::with_val(prec, delta * &p))
}

/// Largest integer `m <= raw` with `(-1)^m = eps`.
pub fn parity_refine(raw: &Float, eps: i8) -> i64 {
    let m = raw.clone().floor().to_integer().and_then(|v| v.to_i64()).unwrap_or(i64::MAX);
    let want_even = eps >= 0;
    if (m.rem_euclid(2) == 0) == want_even {
        m
    } else {
        m - 1
    }
}

#[derive(Clone, Debug)]
pub struct AnalyticBound {
    pub arithmetic: Float,
    pub archimedean: Float,
    pub conductor: Float,
    pub raw: Float,
    pub parity_refined: Option<i64>,
    pub prime_cutoff: u64,
}

pub fn analytic_rank_bound(
    curve: &EllipticCurve,
    params: &AnalyticBoundParams,
    bad: &[LocalReductionData],
    cache: Option<&ApCache>,
) -> Result<AnalyticBound> {
    let delta = Float::with_val(params.prec, &params.delta);
    let arithmetic = arithmetic_term(curve, params, bad, cache)?;
    let archimedean = archimedean_term(&delta)?;
    let conductor = conductor_term(&params.conductor, &delta)?;
    let raw = Float::with_val(params.prec, &arithmetic + &archimedean) + &conductor;
    let parity_refined = params.root_number.map(|e| parity_refine(&raw, e));
    Ok(AnalyticBound { arithmetic, archimedean, conductor, raw, parity_refined, prime_cutoff: prime_cutoff(&delta)? })
}
