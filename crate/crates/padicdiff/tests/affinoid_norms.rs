use num_bigint::BigInt;
use num_rational::Rational64;
use padicdiff::affinoid_norms::*;
use padicdiff::padic_core::Valuation;
use padicdiff::ratfun::{Factored, RatFun};
use padicdiff::twistlab::h_sequence;
use padicdiff::Q;
use proptest::prelude::*;

const P: u64 = 3;

fn q(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Unit disc minus holes at distinct residues, radii 3^{-e}.
fn cheese() -> impl Strategy<Value = (Vec<i64>, Cheese)> {
    (
        prop::sample::subsequence(vec![0i64, 1, 2], 1..=3),
        prop::collection::vec(1i64..3, 3),
        prop::collection::vec(0i64..3, 3),
    )
        .prop_map(|(res, es, lifts)| {
            let centers: Vec<i64> = res.iter().zip(&lifts).map(|(r, l)| r + 3 * l).collect();
            let holes = centers
                .iter()
                .zip(&es)
                .map(|(c, e)| Disc { center: q(*c, 1), e: Rational64::from_integer(-e) })
                .collect();
            (centers, Cheese::new(P, Disc { center: q(0, 1), e: Rational64::from_integer(0) }, holes).unwrap())
        })
}

fn fun_on(centers: &[i64], coefs: &[(i64, usize, i64)]) -> RatFun {
    let mut f = RatFun::constant(q(1, 1));
    for (i, (c, j, num)) in coefs.iter().enumerate() {
        let a = centers[i % centers.len()];
        f = f.add(&RatFun::pole_power(q(a, 1), *j, q(*num, 1 + c.rem_euclid(2))));
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn sup_norm_is_submultiplicative(
        (centers, x) in cheese(),
        c1 in prop::collection::vec((0i64..4, 1usize..3, -9i64..9), 1..3),
        c2 in prop::collection::vec((0i64..4, 1usize..3, -9i64..9), 1..3),
    ) {
        let u = fun_on(&centers, &c1);
        let v = fun_on(&centers, &c2);
        let nu = sup_norm(&u, &x).unwrap();
        let nv = sup_norm(&v, &x).unwrap();
        let nuv = sup_norm(&u.mul(&v), &x).unwrap();
        prop_assert!(nuv >= nu + nv);
    }

    #[test]
    fn twist_coefficients_obey_the_radius_bound((centers, x) in cheese(), exps in prop::collection::vec(-3i64..4, 3), d in prop::sample::select(vec![2i64, 4, 5])) {
        // |h^{[n]}|_X <= rho^{-n} when the divisor of u lies in the holes
        let u = Factored::new(q(1, 1), centers.iter().zip(&exps).map(|(c, e)| (q(*c, 1), *e))).unwrap();
        let td = h_sequence(P, &u, d, 6).unwrap();
        let lr = x.log_rho();
        for n in 0..=6usize {
            let v = sup_norm(td.h(n).unwrap(), &x).unwrap();
            prop_assert!(v >= Valuation::Finite(lr * Rational64::from_integer(n as i64)), "n={} v={}", n, v);
        }
    }
}

#[test]
fn residue_disc_holes_are_multiplicative() {
    let x = Cheese::new(
        P,
        Disc { center: q(0, 1), e: Rational64::from_integer(0) },
        vec![
            Disc { center: q(0, 1), e: Rational64::from_integer(0) },
            Disc { center: q(1, 1), e: Rational64::from_integer(0) },
        ],
    )
    .unwrap();
    let u = RatFun::pole_power(q(0, 1), 2, q(1, 1)).add(&RatFun::constant(q(3, 1)));
    let v = RatFun::pole_power(q(1, 1), 1, q(2, 1));
    let s = |f: &RatFun| sup_norm(f, &x).unwrap();
    assert_eq!(s(&u.mul(&v)), s(&u) + s(&v));
}
