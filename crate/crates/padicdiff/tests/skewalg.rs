use num_bigint::BigInt;
use padicdiff::ratfun::RatFun;
use padicdiff::skewalg::*;
use padicdiff::Q;
use proptest::prelude::*;

const P: u64 = 3;

fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn ratfun() -> impl Strategy<Value = RatFun> {
    (prop::collection::vec(-4i64..5, 0..4), prop::option::of((-2i64..3, 1usize..3, -3i64..4))).prop_map(
        |(poly, pole)| {
            let mut f = RatFun::from_poly(poly.into_iter().map(q).collect());
            if let Some((a, j, c)) = pole {
                f = f.add(&RatFun::pole_power(q(a), j, q(c)));
            }
            f
        },
    )
}

fn poly() -> impl Strategy<Value = RatFun> {
    prop::collection::vec(-4i64..5, 0..5).prop_map(|c| RatFun::from_poly(c.into_iter().map(q).collect()))
}

fn operator(coef: impl Strategy<Value = RatFun>) -> impl Strategy<Value = SkewLaurentSeries> {
    prop::collection::vec(coef, 1..4).prop_map(|cs| {
        let hi = cs.len() as i64 - 1;
        SkewLaurentSeries::from_terms(P, 0, hi, cs.into_iter().enumerate().map(|(j, c)| (j as i64, c))).unwrap()
    })
}

fn same(a: &SkewLaurentSeries, b: &SkewLaurentSeries) -> bool {
    let (lo, hi) = (a.window().0.min(b.window().0), a.window().1.max(b.window().1));
    (lo..=hi).all(|k| a.coeff(k) == b.coeff(k) && a.tag(k).is_exact() && b.tag(k).is_exact())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn star_is_associative(u in operator(ratfun()), v in operator(ratfun()), w in operator(ratfun())) {
        let l = u.star(&v, 0).unwrap().star(&w, 0).unwrap();
        let r = u.star(&v.star(&w, 0).unwrap(), 0).unwrap();
        prop_assert!(same(&l, &r));
    }

    #[test]
    fn star_is_composition_of_actions(u in operator(ratfun()), v in operator(ratfun()), f in ratfun()) {
        let (uv_f, t1) = u.star(&v, 0).unwrap().apply_to_function(&f).unwrap();
        let (v_f, t2) = v.apply_to_function(&f).unwrap();
        let (u_v_f, t3) = u.apply_to_function(&v_f).unwrap();
        prop_assert!(t1.is_exact() && t2.is_exact() && t3.is_exact());
        prop_assert_eq!(uv_f, u_v_f);
    }

    #[test]
    fn star_matches_ore_expansion(a in ratfun(), n in 0i64..4, b in ratfun()) {
        // d^n a = sum_m binom(n, m) a^{(n-m)} d^m, naive Leibniz oracle
        let lhs = SkewLaurentSeries::d_power(P, n).unwrap()
            .star(&SkewLaurentSeries::function(P, a.clone()).unwrap(), 0).unwrap()
            .star(&SkewLaurentSeries::function(P, b.clone()).unwrap(), 0).unwrap();
        let ab = a.mul(&b);
        for m in 0..=n {
            let binom: i64 = (0..m).fold(1, |acc, i| acc * (n - i) / (i + 1));
            prop_assert_eq!(lhs.coeff(m), ab.nth_derivative((n - m) as usize).scale(&q(binom)));
        }
    }

    #[test]
    fn transpose_is_an_involutive_anti_automorphism(u in operator(ratfun()), v in operator(ratfun())) {
        let ut = u.transpose().unwrap();
        prop_assert!(same(&ut.transpose().unwrap(), &u));
        let lhs = u.star(&v, 0).unwrap().transpose().unwrap();
        let rhs = v.transpose().unwrap().star(&ut, 0).unwrap();
        prop_assert!(same(&lhs, &rhs));
    }

    #[test]
    fn level_m_round_trip(u in operator(poly()), m in 0u32..4, p in prop::sample::select(vec![2u64, 3, 5])) {
        let u = SkewLaurentSeries::from_terms(p, 0, u.window().1, u.terms().map(|(j, c)| (j, c.clone()))).unwrap();
        let back = level_m_convert(&u, m).unwrap().to_series().unwrap();
        prop_assert!(same(&back, &u));
    }

    #[test]
    fn level_m_basis_action(k in 0u64..12, m in 0u32..3, f in ratfun()) {
        let s = DividedPowerOperator::basis(P, m, k).to_series().unwrap();
        let (got, tag) = s.apply_to_function(&f).unwrap();
        prop_assert!(tag.is_exact());
        prop_assert_eq!(got, DividedPowerOperator::apply_basis(&f, k, P, m));
    }
}

#[test]
fn left_inverse_of_d_recovers_the_function() {
    let a = RatFun::from_poly(vec![q(1), q(-2), q(0), q(5)]);
    let inv = ore_inverse_expansion(P, &a, 6).unwrap();
    let prod = SkewLaurentSeries::d_power(P, 1).unwrap().star(&inv, -7).unwrap();
    assert_eq!(prod.coeff(0), a);
    for k in -7..0 {
        assert!(prod.coeff(k).is_zero(), "k={k}");
    }
}
