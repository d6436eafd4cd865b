mod common;

use proptest::prelude::*;
use rug::Integer;

use rankbound::cubic::CubicField;
use rankbound::elliptic::local_data_all;
use rankbound::numeric::primes_below;
use rankbound::rank::*;

fn small_bad_primes(r: u32) -> Vec<Integer> {
    let disc = common::curve(r).discriminant();
    primes_below(100_000).into_iter().filter(|&p| disc.is_divisible_u(p as u32)).map(Integer::from).collect()
}

proptest! {
    #[test]
    fn parity_adjustment(g in 0i64..40, u in 1i64..3, n in 0i64..12, eps in prop_oneof![Just(1i8), Just(-1i8)]) {
        let terms = BKTerms::from_parts(Some(g), u, n, Some(eps));
        let b = selmer_upper_bound(&terms).unwrap();
        prop_assert!(g + u + n - b == 0 || g + u + n - b == 1);
        prop_assert_eq!(b.rem_euclid(2) == 0, eps > 0);
        let unknown = BKTerms::from_parts(Some(g), u, n, None);
        prop_assert_eq!(selmer_upper_bound(&unknown).unwrap(), g + u + n);
    }

    #[test]
    fn report_brackets(g in 0i64..30, lo in 0i64..40) {
        let mut terms = BKTerms::from_parts(Some(g), 2, 3, Some(1));
        terms.known_rank_lower = Some(lo);
        let upper = selmer_upper_bound(&terms).unwrap();
        match rank_report(&terms) {
            Ok(rep) => {
                prop_assert!(lo <= upper);
                prop_assert_eq!(rep.determined, lo == upper);
                prop_assert_eq!(rep.g_lower, Some(lo - 5));
            }
            Err(_) => prop_assert!(lo > upper),
        }
    }
}

#[test]
fn e27_terms_from_local_data() {
    let e = common::curve(27);
    let k = CubicField::from_maximal_form(common::field_form(27)).unwrap();
    let local = local_data_all(&e, &small_bad_primes(27)).unwrap();
    let terms = compute_bk_terms(&e, &local, &k).unwrap();
    assert_eq!((terms.u, terms.n), (1, 5));
    let mut t = terms.clone();
    t.g = Some(22);
    t.root_number = Some(-1);
    t.known_rank_lower = Some(27);
    let rep = rank_report(&t).unwrap();
    assert!(rep.determined);
    assert_eq!(rep.summary(), "rank = 27 (GRH)");
}

#[test]
fn missing_or_wrong_local_data() {
    let e = common::curve(28);
    let k = CubicField::from_maximal_form(common::field_form(28)).unwrap();
    let all = local_data_all(&e, &small_bad_primes(28)).unwrap();
    assert!(compute_bk_terms(&e, &all, &k).is_ok());
    // 3 is additive, so it divides c4 and its absence is noticed
    let without3: Vec<_> = all.iter().filter(|d| d.p != 3).cloned().collect();
    assert!(matches!(compute_bk_terms(&e, &without3, &k), Err(rankbound::Error::MissingLocalData(_))));
    let mut twice = all.clone();
    twice.push(all[0].clone());
    assert!(compute_bk_terms(&e, &twice, &k).is_err());
    let mut stray = all[0].clone();
    stray.p = Integer::from(23);
    assert!(compute_bk_terms(&e, &[stray], &k).is_err());
    assert!(selmer_upper_bound(&BKTerms::from_parts(None, 1, 1, None)).is_err());
}

#[test]
fn lower_above_upper_is_inconsistent() {
    let mut terms = BKTerms::from_parts(Some(20), 2, 6, Some(1));
    terms.known_rank_lower = Some(29);
    assert!(rank_report(&terms).is_err());
    terms.known_rank_lower = Some(26);
    assert_eq!(rank_report(&terms).unwrap().summary(), "26 <= rank <= 28 (GRH)");
    terms.known_rank_lower = None;
    assert_eq!(rank_report(&terms).unwrap().summary(), "rank <= 28 (GRH)");
}
