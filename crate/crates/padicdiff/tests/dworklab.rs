use num_bigint::BigInt;
use num_traits::ToPrimitive;
use padicdiff::dworklab::*;
use padicdiff::ratfun::RatFun;
use padicdiff::skewalg::SkewLaurentSeries;
use padicdiff::Q;
use proptest::prelude::*;
use std::f64::consts::PI;

/// c_k = k! [t^k] (1/q) sum_zeta e^{(zeta - 1) t}, evaluated with complex roots of unity.
fn c_float(q: u64, k: usize) -> f64 {
    let mut total = 0.0;
    for r in 0..q {
        let th = 2.0 * PI * r as f64 / q as f64;
        // (zeta - 1)^k
        let (a, b) = (th.cos() - 1.0, th.sin());
        let (mut re, mut im) = (1.0, 0.0);
        for _ in 0..k {
            (re, im) = (re * a - im * b, re * b + im * a);
        }
        total += re;
    }
    total / q as f64
}

#[test]
fn coefficients_match_the_root_of_unity_filter() {
    for q in [2u64, 3, 4, 5] {
        let op = dwork_build(q, 20).unwrap();
        for (k, c) in op.coeffs.iter().enumerate() {
            let want = c_float(q, k);
            let got = c.to_f64().unwrap();
            assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "q={q} k={k} got={got} want={want}");
        }
    }
}

#[test]
fn identities_for_small_q() {
    for q in [2u64, 3] {
        let rep = dwork_identities(q, 12).unwrap();
        assert!(rep.passes(), "{rep:?}");
        for i in 0..q {
            assert!(frobenius_relation(q, &Q::from_integer(BigInt::from(1)), i, 12).unwrap().passes());
        }
    }
    assert!(dwork_build(6, 12).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_keeps_exactly_the_multiples_of_q(q in prop::sample::select(vec![2u64, 3, 4]), j in 0u64..9) {
        let op = dwork_build(q, 12).unwrap();
        let want = if j % q == 0 { 1 } else { 0 };
        prop_assert_eq!(op.apply_monomial(j).unwrap(), Q::from_integer(BigInt::from(want)));
    }

    #[test]
    fn euler_operator_two_routes(n in 0u32..4, cs in prop::collection::vec(-3i64..4, 1..4), shift in -2i64..3) {
        let terms = cs.iter().enumerate().map(|(j, c)| (j as i64, RatFun::monomial(Q::from_integer(BigInt::from(*c)), j as i64 + shift)));
        let u = SkewLaurentSeries::from_terms(2, 0, cs.len() as i64 - 1, terms).unwrap();
        // the commutator route carries the factor n!
        let nfact: i64 = (1..=n as i64).product();
        let direct = euler_apply(n, &u).unwrap().scale(&Q::from_integer(BigInt::from(nfact)));
        let comm = euler_via_commutators(n, &u, 0).unwrap();
        let hi = direct.window().1.max(comm.window().1);
        for k in 0..=hi {
            prop_assert_eq!(direct.coeff(k), comm.coeff(k), "k={}", k);
        }
    }

    #[test]
    fn euler_eigenvalue_on_monomials(n in 0u32..6, m in -6i64..10) {
        let xm = RatFun::monomial(Q::from_integer(BigInt::from(1)), m);
        prop_assert_eq!(euler_term(n, &xm, 0), xm.scale(&euler_basis_eigenvalue(n, m)));
    }
}
