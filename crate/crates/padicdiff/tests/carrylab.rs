use num_bigint::BigInt;
use padicdiff::carrylab::*;
use padicdiff::padic_core::{binomial, vp_rational, Valuation};
use padicdiff::Q;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn kummer_matches_factorials_on_integers(lam in -2000i64..2000, n in 0u64..400, pi in 0usize..3) {
        let p = [2u64, 3, 5][pi];
        let l = Q::from_integer(BigInt::from(lam));
        // <lam | n> = binom(lam + n, n)
        let want = vp_rational(&binomial(&(&l + Q::from_integer(BigInt::from(n))), n), p);
        prop_assert_eq!(vp_binom_kummer(&l, n, p).unwrap(), want);
    }

    #[test]
    fn kummer_matches_exact_binomial_on_rationals(a in -300i64..300, b in 1i64..30, n in 0u64..60, pi in 0usize..3) {
        let p = [2u64, 3, 5][pi];
        let den = b * p as i64 + 1;
        let l = Q::new(BigInt::from(a), BigInt::from(den));
        let want = vp_rational(&binomial(&(&l + Q::from_integer(BigInt::from(n))), n), p);
        prop_assert_eq!(vp_binom_kummer(&l, n, p).unwrap(), want);
    }
}

#[test]
fn grid_of_special_indices() {
    for q in [2u64, 3, 5] {
        for k in 1..=q {
            let odd = k == q && q > 2;
            for base in [6u32, 8, 10] {
                let big_n = if odd { base + 1 } else { base };
                let idx = special_index(q, 1, k, big_n).unwrap();
                let rep = qexp_check(&idx).unwrap();
                assert!(rep.passes(), "q={q} k={k} N={big_n}: {rep:?}");
                if idx.n < 100_000 {
                    assert!(dominant_scan(&idx).unique_at(idx.s), "q={q} k={k} N={big_n}");
                }
                assert!(idx.term_valuation(idx.s) <= Valuation::Finite(idx.bound()));
            }
        }
    }
}

#[test]
fn parity_violations_are_rejected() {
    assert!(special_index(3, 1, 1, 7).is_err());
    assert!(special_index(3, 1, 3, 8).is_err());
    assert!(special_index(2, 1, 2, 8).is_ok());
}
