//! Bounds on the 2-rank of the class group of a cubic field.
//!
//! Upper bound (GRH): the right nullity of the relation matrix mod 2 after
//! pruning, provided every degree-one prime of norm at most the Belabas bound
//! survives.  Degree-two and degree-three primes need no columns: `p O_K` is
//! itself a relation among the primes above `p`, and if only one prime
//! lies above `p` its class is trivial.
//!
//! Lower bound (unconditional): left nullvectors of the relation matrix give
//! elements of the field 2-Selmer group `{beta : (beta) = I^2}`.  Quadratic
//! characters at auxiliary primes outside the base certify independence in
//! `K^*/K^{*2}`, and `dim Cl[2] = dim Sel2(K) - (r1 + r2)`.

use rayon::prelude::*;

use crate::cubic::{build_factor_base, CubicField, FactorBase};
use crate::error::{Error, Result};
use crate::gf2::{left_nullspace, prune, spurious_vectors, BitRow, PruneReport, SparseBitMatrix};
use crate::numeric::{legendre_bit, mod_u64, next_prime_u64, roots_mod_p_u64, ProjRoot};
use crate::sieve::{rational_relations, sieve_relations, targeted_relations, Relation, RelationSet, SieveParams, Source};

/// Product of relations `prod (a_i + b_i alpha)^{e_i}`, `e_i` in {0, 1},
/// optionally times `-1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelmerCandidate {
    /// Indices into the relation list.
    pub rows: Vec<u32>,
    pub minus_one: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpperBound {
    pub nullity: usize,
    /// Nullspace basis as column lists.
    pub basis: Vec<Vec<u32>>,
    /// Basis vectors that look spurious: at most three columns, all above
    /// the Belabas bound.
    pub spurious: Vec<usize>,
    pub removed_columns: usize,
    pub removed_rows: usize,
}

/// GRH upper bound on `dim Cl(K)[2]` from relations over `base`.
pub fn upper_bound_2rank(base: &FactorBase, rels: &[Relation], belabas: u64) -> Result<(UpperBound, PruneReport)> {
    if rels.is_empty() {
        return Err(Error::Inconsistent("no relations".into()));
    }
    if base.bound <= belabas {
        return Err(Error::Inconsistent(format!(
            "factor base bound {} does not exceed the protected bound {belabas}",
            base.bound
        )));
    }
    let m = SparseBitMatrix::from_relations(base.len(), rels);
    let report = prune(&m, base, belabas, 2);
    report.ensure_sound(base)?;
    let (nullity, basis) = report.nullity();
    let spurious = spurious_vectors(&basis, base, belabas);
    Ok((
        UpperBound {
            nullity,
            basis,
            spurious,
            removed_columns: report.removed_columns.len(),
            removed_rows: report.removed_rows.len(),
        },
        report,
    ))
}

/// One auxiliary prime ideal `(q, alpha - r)` and the characters it assigns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterColumn {
    pub q: u64,
    pub root: u64,
    /// One bit per candidate.
    pub bits: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelmerCertificate {
    pub candidates: usize,
    /// Characters that raised the rank, in order found.
    pub characters: Vec<CharacterColumn>,
    pub rank: usize,
    /// Auxiliary primes skipped because some candidate vanished there.
    pub skipped: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct SelmerParams {
    /// Stop after this many consecutive characters fail to raise the rank.
    pub stable_after: usize,
    /// Hard cap on characters evaluated.
    pub max_characters: usize,
}

impl Default for SelmerParams {
    fn default() -> Self {
        SelmerParams { stable_after: 64, max_characters: 4096 }
    }
}

/// `chi(a + b r)` for each relation at the prime `(q, alpha - r)`.
fn row_characters(rels: &[Relation], q: u64, r: u64) -> Option<BitRow> {
    let bits: Vec<Option<u8>> = rels
        .par_iter()
        .map(|rel| {
            let a = rel.a.rem_euclid(q as i64) as u128;
            let b = rel.b.rem_euclid(q as i64) as u128;
            let v = ((a + b * r as u128) % q as u128) as u64;
            legendre_bit(v, q)
        })
        .collect();
    let mut row = BitRow::zeros(rels.len());
    for (i, b) in bits.into_iter().enumerate() {
        if b? == 1 {
            row.set(i);
        }
    }
    Some(row)
}

/// Candidates from a row subset: a left-nullspace basis of those rows plus `-1`.
pub fn selmer_candidates(m: &SparseBitMatrix, rows: &[usize]) -> Vec<SelmerCandidate> {
    let sub = m.select_rows(rows);
    let mut out: Vec<SelmerCandidate> = left_nullspace(&sub)
        .into_iter()
        .map(|v| SelmerCandidate { rows: v.into_iter().map(|i| rows[i as usize] as u32).collect(), minus_one: false })
        .collect();
    out.push(SelmerCandidate { rows: Vec::new(), minus_one: true });
    out
}

/// Certified `dim` of the span of `candidates` in `K^*/K^{*2}`, by quadratic
/// characters at degree-one primes `q >= base.bound` not dividing `c3 disc`.
pub fn certify_candidates(
    base: &FactorBase,
    rels: &[Relation],
    candidates: &[SelmerCandidate],
    params: &SelmerParams,
) -> SelmerCertificate {
    let form = &base.field.form;
    let bad = rug::Integer::from(form.c3() * &base.field.disc);
    let n = candidates.len();
    // echelon basis over GF(2)^n, keyed by pivot
    let mut basis: Vec<(usize, BitRow)> = Vec::new();
    let mut characters = Vec::new();
    let mut skipped = Vec::new();
    let mut since_gain = 0;
    let mut evaluated = 0;
    let mut q = base.bound.max(3);
    while evaluated < params.max_characters && since_gain < params.stable_after && basis.len() < n {
        q = next_prime_u64(q);
        if mod_u64(&bad, q) == 0 {
            q += 1;
            continue;
        }
        let c = form.coeffs().clone().map(|x| mod_u64(&x, q));
        let roots = roots_mod_p_u64(c, q).unwrap_or_default();
        for root in roots {
            let ProjRoot::Affine(r) = root.root else { continue };
            let Some(row) = row_characters(rels, q, r) else {
                skipped.push(q);
                continue;
            };
            let minus = legendre_bit(q - 1, q).unwrap_or(0);
            let bits: Vec<u8> = candidates
                .iter()
                .map(|cand| {
                    let mut b = if cand.minus_one { minus } else { 0 };
                    for &i in &cand.rows {
                        b ^= row.get(i as usize) as u8;
                    }
                    b
                })
                .collect();
            evaluated += 1;
            let mut v = BitRow::zeros(n);
            for (i, &b) in bits.iter().enumerate() {
                if b == 1 {
                    v.set(i);
                }
            }
            for (piv, bv) in &basis {
                if v.get(*piv) {
                    v.xor_assign(bv);
                }
            }
            match v.ones().first() {
                Some(&piv) => {
                    basis.push((piv as usize, v));
                    characters.push(CharacterColumn { q, root: r, bits });
                    since_gain = 0;
                }
                None => since_gain += 1,
            }
        }
        q += 1;
    }
    SelmerCertificate { candidates: n, rank: basis.len(), characters, skipped }
}

/// Unconditional lower bound `max(0, r - (r1 + r2))` and its certificate.
pub fn selmer_lower_bound(
    base: &FactorBase,
    rels: &[Relation],
    m: &SparseBitMatrix,
    rows: &[usize],
    params: &SelmerParams,
) -> (usize, SelmerCertificate) {
    let candidates = selmer_candidates(m, rows);
    let cert = certify_candidates(base, rels, &candidates, params);
    let units = (base.field.r1 + base.field.r2) as usize;
    (cert.rank.saturating_sub(units), cert)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    /// Lower and upper bounds agree; exact under GRH.
    Exact,
    Range,
}

#[derive(Clone, Debug)]
pub struct ClassGroupReport {
    pub disc: rug::Integer,
    pub signature: (u32, u32),
    pub factor_base_size: usize,
    pub relations: usize,
    pub rational_relations: usize,
    pub targeted_relations: usize,
    /// GRH-conditional.
    pub upper: UpperBound,
    /// Unconditional.
    pub lower: usize,
    pub certificate: SelmerCertificate,
    pub status: Status,
}

#[derive(Clone, Debug)]
pub struct PipelineParams {
    pub bound: u64,
    /// Primes of norm at most this are never pruned (Belabas or Bach bound).
    pub protected_bound: u64,
    pub sieve: SieveParams,
    /// Relations requested per empty protected column.
    pub targeted_count: usize,
    pub targeted_a_limit: i64,
    pub selmer: SelmerParams,
}

/// Add targeted relations until pruning leaves no protected column empty.
/// Returns the relation matrix over the final set.
pub fn repair_protected(base: &FactorBase, set: &mut RelationSet, params: &PipelineParams) -> Result<SparseBitMatrix> {
    let mut m = SparseBitMatrix::from_relations(base.len(), &set.relations);
    let mut report = prune(&m, base, params.protected_bound, 2);
    let mut repaired = std::collections::HashSet::new();
    while let Some(&col) = report.zero_protected.iter().find(|c| !repaired.contains(*c)) {
        repaired.insert(col);
        let extra = targeted_relations(base, col, params.targeted_count, params.targeted_a_limit)?;
        set.extend(extra, Source::Targeted);
        m = SparseBitMatrix::from_relations(base.len(), &set.relations);
        report = prune(&m, base, params.protected_bound, 2);
    }
    Ok(m)
}

/// Factor base, relations, pruning, targeted repairs and both bounds.
pub fn class_group_report(field: &CubicField, params: &PipelineParams) -> Result<ClassGroupReport> {
    let base = build_factor_base(field, params.bound);
    if !base.c3_supported {
        return Err(Error::Inconsistent("a prime dividing c3 lies above the factor base bound".into()));
    }
    let mut set = RelationSet::new();
    set.extend(sieve_relations(&base, &params.sieve)?, Source::Sieved);
    set.extend(rational_relations(&base, params.bound), Source::Rational);
    let m = repair_protected(&base, &mut set, params)?;
    let (upper, report) = upper_bound_2rank(&base, &set.relations, params.protected_bound)?;
    let (lower, certificate) = selmer_lower_bound(&base, &set.relations, &m, &report.kept_rows, &params.selmer);
    let status = if lower == upper.nullity { Status::Exact } else { Status::Range };
    Ok(ClassGroupReport {
        disc: field.disc.clone(),
        signature: (field.r1, field.r2),
        factor_base_size: base.len(),
        relations: set.len(),
        rational_relations: set.count(Source::Rational),
        targeted_relations: set.count(Source::Targeted),
        upper,
        lower,
        certificate,
        status,
    })
}
