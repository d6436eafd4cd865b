//! The Brumer–Kramer bound `dim Sel2(E) <= g + u + n` and its parity
//! refinement, for curves without rational 2-torsion.

use rug::Integer;

use crate::cubic::CubicField;
use crate::elliptic::{invariants, EllipticCurve, LocalReductionData, ReductionType};
use crate::error::{Error, Result};
use crate::numeric::valuation;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BKTerms {
    /// Bound on `dim Cl(K)[2]`.
    pub g: Option<i64>,
    pub u: i64,
    pub n: i64,
    /// Multiplicative primes with even `ord_p(Delta)`.
    pub phi_m: Vec<Integer>,
    /// Additive primes with the number of primes of `K` above each.
    pub phi_a: Vec<(Integer, u32)>,
    pub root_number: Option<i8>,
    pub known_rank_lower: Option<i64>,
    /// Part of `|Delta|` not covered by the local data, taken to consist of
    /// multiplicative primes of odd valuation.
    pub residual: Integer,
}

impl BKTerms {
    /// Terms given directly.
    pub fn from_parts(g: Option<i64>, u: i64, n: i64, root_number: Option<i8>) -> Self {
        BKTerms {
            g,
            u,
            n,
            phi_m: Vec::new(),
            phi_a: Vec::new(),
            root_number,
            known_rank_lower: None,
            residual: Integer::from(1),
        }
    }
}

/// `u`, `n`, `Phi_m` and `Phi_a` from local data at the primes dividing the
/// discriminant.  Primes of `|Delta|` missing from `local_data` must not
/// divide `c4` (so they are multiplicative) and their product must not be a
/// square.
pub fn compute_bk_terms(curve: &EllipticCurve, local_data: &[LocalReductionData], field: &CubicField) -> Result<BKTerms> {
    let inv = invariants(curve)?;
    let disc = inv.disc.clone();
    let u = if disc > 0 { 2 } else { 1 };
    let mut residual = disc.clone().abs();
    let mut seen: Vec<&Integer> = Vec::new();
    let mut phi_m = Vec::new();
    let mut phi_a = Vec::new();
    for d in local_data {
        if seen.contains(&&d.p) {
            return Err(Error::Inconsistent(format!("local data for {} given twice", d.p)));
        }
        seen.push(&d.p);
        if !disc.is_divisible(&d.p) {
            return Err(Error::Inconsistent(format!("{} does not divide the discriminant", d.p)));
        }
        while residual.is_divisible(&d.p) {
            residual /= &d.p;
        }
        match d.reduction {
            ReductionType::SplitMultiplicative | ReductionType::NonsplitMultiplicative => {
                if d.ord_p_disc % 2 == 0 {
                    phi_m.push(d.p.clone());
                }
            }
            ReductionType::Additive => {
                let p = d.p.to_u64().ok_or_else(|| Error::Domain { value: d.p.to_string(), domain: "p < 2^64" })?;
                phi_a.push((d.p.clone(), field.primes_above(p) as u32));
            }
            ReductionType::Good => {}
        }
    }
    if residual > 1 {
        let g = Integer::from(residual.gcd_ref(&inv.c4));
        if g > 1 {
            return Err(Error::MissingLocalData(format!("a prime factor of {g}")));
        }
        if residual.is_perfect_square() {
            return Err(Error::MissingLocalData(format!("the square part {residual} of the discriminant")));
        }
    }
    let n = phi_m.len() as i64 + phi_a.iter().map(|(_, np)| *np as i64 - 1).sum::<i64>();
    Ok(BKTerms { g: None, u, n, phi_m, phi_a, root_number: None, known_rank_lower: None, residual })
}

/// `ord_p(Delta)` of the model, for building local data by hand.
pub fn disc_valuation(curve: &EllipticCurve, p: u64) -> u32 {
    valuation(&curve.discriminant(), p)
}

/// `g + u + n`, less one when its parity disagrees with the root number.
pub fn selmer_upper_bound(terms: &BKTerms) -> Result<i64> {
    let g = terms.g.ok_or_else(|| Error::Inconsistent("no bound on the class group 2-rank".into()))?;
    let raw = g + terms.u + terms.n;
    Ok(match terms.root_number {
        Some(eps) if (raw.rem_euclid(2) == 0) != (eps > 0) => raw - 1,
        _ => raw,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub raw: i64,
    pub upper: i64,
    pub lower: Option<i64>,
    /// `known_rank_lower - u - n`, a lower bound on `dim Cl(K)[2]`.
    pub g_lower: Option<i64>,
    pub determined: bool,
}

pub fn rank_report(terms: &BKTerms) -> Result<RankReport> {
    let upper = selmer_upper_bound(terms)?;
    let raw = terms.g.unwrap_or(0) + terms.u + terms.n;
    if let Some(lo) = terms.known_rank_lower {
        if lo > upper {
            return Err(Error::Inconsistent(format!("rank lower bound {lo} exceeds Selmer bound {upper}")));
        }
    }
    Ok(RankReport {
        raw,
        upper,
        lower: terms.known_rank_lower,
        g_lower: terms.known_rank_lower.map(|lo| lo - terms.u - terms.n),
        determined: terms.known_rank_lower == Some(upper),
    })
}

impl RankReport {
    pub fn summary(&self) -> String {
        match (self.lower, self.determined) {
            (Some(lo), true) => format!("rank = {lo} (GRH)"),
            (Some(lo), false) => format!("{lo} <= rank <= {} (GRH)", self.upper),
            (None, _) => format!("rank <= {} (GRH)", self.upper),
        }
    }
}
