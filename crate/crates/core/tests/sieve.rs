mod common;

use proptest::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};

use rankbound::cubic::{build_factor_base, BinaryCubicForm, CubicField, FactorBase};
use rankbound::numeric::ProjRoot;
use rankbound::sieve::*;

fn field_of(c: [i64; 4]) -> CubicField {
    let form = BinaryCubicForm::from_i64(c);
    let disc = form.disc();
    let (r1, r2) = if disc > 0 { (3, 0) } else { (1, 1) };
    CubicField { form, disc, r1, r2 }
}

/// `prod p^e == |F(a, -b)| / |c3|` in exact rationals.
fn norm_matches(base: &FactorBase, rel: &Relation) -> bool {
    let mut prod = Rational::from(1);
    for &(col, e) in &rel.exponents {
        let pe = Integer::from(base.primes[col as usize].p).pow(e.unsigned_abs());
        if e > 0 {
            prod *= pe;
        } else {
            prod /= pe;
        }
    }
    prod == Rational::from((base.field.form.norm_ab(rel.a, rel.b).abs(), base.field.form.c3().clone().abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trial_factor_is_exact(a in -5000i64..5000, b in 1i64..300, c in prop::sample::select(vec![[1, 0, -1, -1], [2, 1, -3, 5], [12, -1, 2, 7], [49, 1, 3, 5]])) {
        prop_assume!(Integer::from(a).gcd(&Integer::from(b)) == 1);
        let base = build_factor_base(&field_of(c), 3000);
        let n = base.field.form.norm_ab(a, b);
        let smooth = n != 0 && {
            let mut m = n.clone().abs();
            for p in rankbound::numeric::primes_below(3000) {
                while m.is_divisible_u(p as u32) { m /= p as u32; }
            }
            m == 1
        };
        match trial_factor(&base, a, b) {
            Some(rel) => {
                prop_assert!(smooth);
                prop_assert!(rel.verify(&base).is_ok());
                prop_assert!(norm_matches(&base, &rel));
                prop_assert!(rel.exponents.windows(2).all(|w| w[0].0 < w[1].0));
                prop_assert!(rel.exponents.iter().all(|&(_, e)| e != 0));
            }
            None => prop_assert!(!smooth),
        }
    }
}

#[test]
fn unit_relation() {
    let base = build_factor_base(&field_of([1, 0, -1, -1]), 50);
    let params = SieveParams { a_max: 50, b_max: 5, threshold_bits: 1.0, ..SieveParams::default() };
    assert!(line_sieve(&base, &params).unwrap().contains(&(1, 1)));
    let rel = trial_factor(&base, 1, 1).unwrap();
    assert!(rel.exponents.is_empty());
    // F(-10, -1) = -1000 + 10 + 1 = -989 = -23 * 43
    let small = build_factor_base(&field_of([1, 0, -1, -1]), 30);
    assert!(trial_factor(&small, -10, 1).is_none());
    assert!(trial_factor(&base, -10, 1).is_some());
}

#[test]
fn rational_relation_counts() {
    for (r, bound, want) in [(28u32, 1_202_639u64, 15_518usize), (27, 575_316, 7_817)] {
        let field = CubicField::from_maximal_form(common::field_form(r)).unwrap();
        let base = build_factor_base(&field, bound);
        let rels = rational_relations(&base, bound);
        assert_eq!(rels.len(), want, "K{r}");
        for rel in rels.iter().take(200) {
            assert!(rel.verify(&base).is_ok());
            assert_eq!(rel.exponents.iter().map(|&(_, e)| e).sum::<i32>(), 3);
        }
        let split = rankbound::numeric::primes_below(bound)
            .into_iter()
            .filter(|&p| field.prime_decomposition(p).iter().all(|&(_, f)| f == 1))
            .count();
        assert_eq!(split, want);
    }
}

#[test]
fn sieve_output_is_independent_of_segmentation_and_threads() {
    let base = build_factor_base(&field_of([12, -1, 2, 7]), 500);
    let params = SieveParams { a_max: 3000, b_max: 40, threshold_bits: 10.0, ..SieveParams::default() };
    let reference = sieve_relations(&base, &params).unwrap();
    assert!(reference.len() > 100);
    for seg in [1usize, 37, 1000] {
        let p = SieveParams { segment_len: seg, ..params.clone() };
        assert_eq!(sieve_relations(&base, &p).unwrap(), reference, "segment {seg}");
    }
    // b-segments run separately add up to the whole
    let mut split = Vec::new();
    for (lo, hi) in [(1, 13), (14, 14), (15, 40)] {
        split.extend(sieve_relations(&base, &SieveParams { b_min: lo, b_max: hi, ..params.clone() }).unwrap());
    }
    assert_eq!(split, reference);
    for threads in [1, 3] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        assert_eq!(pool.install(|| sieve_relations(&base, &params)).unwrap(), reference);
    }
}

#[test]
fn pole_column_parity() {
    // c3 = 49 puts a prime above 7 at (1:0) where alpha has valuation -2
    let base = build_factor_base(&field_of([49, 1, 3, 5]), 400);
    let col = base.column(7, ProjRoot::Infinity).unwrap();
    assert_eq!(base.primes[col].alpha_valuation, -2);
    let params = SieveParams { a_max: 2000, b_max: 30, threshold_bits: 10.0, ..SieveParams::default() };
    let rels = sieve_relations(&base, &params).unwrap();
    assert!(!rels.is_empty());
    for r in rels.iter().filter(|r| r.b % 7 != 0) {
        assert_eq!(r.exponent(col), -2);
    }
    let targeted = targeted_relations(&base, col, 4, 1 << 20).unwrap();
    assert_eq!(targeted.len(), 4);
    for r in &targeted {
        assert_eq!(r.b, 7);
        assert!(r.exponent(col) % 2 != 0);
        assert!(norm_matches(&base, r));
    }
}

#[test]
fn relation_set_deduplicates() {
    let base = build_factor_base(&field_of([1, 0, -1, -1]), 50);
    let rel = trial_factor(&base, 1, 1).unwrap();
    let mut set = RelationSet::new();
    assert!(set.push(rel.clone(), Source::Sieved));
    assert!(!set.push(rel, Source::Targeted));
    assert_eq!(set.len(), 1);
    assert_eq!(set.count(Source::Targeted), 0);
}

#[test]
fn error_paths() {
    let base = build_factor_base(&field_of([1, 0, -1, -1]), 50);
    let params = SieveParams { segment_len: 1 << 20, max_segment_len: 1 << 10, ..SieveParams::default() };
    assert!(matches!(line_sieve(&base, &params), Err(rankbound::Error::RegionTooLarge(_))));
    let empty = build_factor_base(&field_of([1, 0, -1, -1]), 2);
    assert!(line_sieve(&empty, &SieveParams::default()).unwrap().is_empty());
    // a tiny budget finds nothing at the pole of a large form
    let base = build_factor_base(&field_of([49, 1, 3, 100_003]), 20);
    let col = base.column(7, ProjRoot::Infinity).unwrap();
    assert!(matches!(targeted_relations(&base, col, 50, 8), Err(rankbound::Error::TargetedNotFound { .. })));
}
