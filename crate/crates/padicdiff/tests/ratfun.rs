use num_bigint::BigInt;
use padicdiff::ratfun::*;
use padicdiff::Q;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

fn factored() -> impl Strategy<Value = Factored> {
    ((-9i64..9).prop_filter("nonzero", |s| *s != 0), prop::collection::vec(((-12i64..12, 1i64..4), -3i64..4), 0..4))
        .prop_map(|(s, fs)| Factored::new(q(s, 1), fs.into_iter().map(|((a, b), e)| (q(a, b), e))).unwrap())
}

fn triangular() -> impl Strategy<Value = MobiusMap> {
    ((-6i64..6).prop_filter("nonzero", |a| *a != 0), -8i64..8, 1i64..4, (-6i64..6).prop_filter("nonzero", |d| *d != 0))
        .prop_map(|(a, b, bd, d)| MobiusMap::new(q(a, 1), q(b, bd), q(0, 1), q(d, 1)).unwrap())
}

fn ratfun() -> impl Strategy<Value = RatFun> {
    (prop::collection::vec(-6i64..6, 0..4), prop::collection::vec((-5i64..5, 1usize..3, -4i64..4), 0..3)).prop_map(
        |(poly, parts)| {
            let mut f = RatFun::from_poly(poly.into_iter().map(|c| q(c, 1)).collect());
            for (a, j, c) in parts {
                f = f.add(&RatFun::pole_power(q(a, 1), j, q(c, 1)));
            }
            f
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn divisor_is_additive(u in factored(), v in factored()) {
        let uv = u.mul(&v);
        let mut want = u.divisor().clone();
        for (a, e) in v.divisor() {
            *want.entry(a.clone()).or_insert(0) += e;
        }
        want.retain(|_, e| *e != 0);
        prop_assert_eq!(uv.divisor(), &want);
        prop_assert_eq!(uv.to_ratfun(), u.to_ratfun().mul(&v.to_ratfun()));
    }

    #[test]
    fn triangular_action_is_a_group_action(g in triangular(), h in triangular(), f in ratfun()) {
        let gh = g.compose(&h);
        prop_assert_eq!(gh.act_fn(&f), g.act_fn(&h.act_fn(&f)));
        prop_assert_eq!(g.act_fn(&g.inverse().act_fn(&f)), f);
    }

    #[test]
    fn action_is_multiplicative(g in triangular(), f1 in ratfun(), f2 in ratfun()) {
        prop_assert_eq!(g.act_fn(&f1.mul(&f2)), g.act_fn(&f1).mul(&g.act_fn(&f2)));
    }

    #[test]
    fn factored_action_matches(u in factored(), g in triangular()) {
        prop_assert_eq!(u.mobius_act(&g).to_ratfun(), g.act_fn(&u.to_ratfun()));
    }

    #[test]
    fn dlog_of_product(u in factored(), v in factored()) {
        prop_assert_eq!(u.mul(&v).dlog(), u.dlog().add(&v.dlog()));
    }
}

#[test]
fn point_action_and_function_action_for_a_contraction() {
    // g = (1, -a; 0, p^n): points z -> (z - a)/p^n, functions f -> f(a + p^n x)
    let (a, pn) = (q(2, 1), q(9, 1));
    let g = MobiusMap::new(q(1, 1), -a.clone(), q(0, 1), pn.clone()).unwrap();
    assert_eq!(g.act_point(&q(11, 1)), Some(q(1, 1)));
    assert_eq!(g.act_x(), RatFun::from_poly(vec![a, pn]));
    assert_eq!(g.rho().unwrap(), q(1, 9));
}
