//! The Dwork projector H = sum_k c_k x^k d^{[k]} onto exponents divisible
//! by q, its identities, and the binomial Euler operators.
//!
//! Operators of weight zero (x-degree equal to d-degree) are determined by
//! their action on monomials, and the truncation H_K acts exactly on x^n for
//! n <= K; identities involving x^{-i} are therefore checked on monomials.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::padic_core::{binomial, binomial_int, is_prime, Valuation};
use crate::ratfun::{qi, RatFun};
use crate::skewalg::{factorial, SkewLaurentSeries};
use crate::{Error, Result, Q};

/// The truncation H_K with exact integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DworkOperator {
    pub p: u64,
    pub q: u64,
    pub k: usize,
    /// c_k = sum_{q | j <= k} binom(k, j) (-1)^{k-j}
    pub coeffs: Vec<BigInt>,
}

/// The prime p with q = p^f.
pub fn prime_of_power(q: u64) -> Result<u64> {
    if q < 2 {
        return Err(Error::InvalidParameter(format!("q = {q} is not a prime power")));
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d)).unwrap();
    let mut r = q;
    while r.is_multiple_of(p) {
        r /= p;
    }
    if r != 1 || !is_prime(p) {
        return Err(Error::InvalidParameter(format!("q = {q} is not a prime power")));
    }
    Ok(p)
}

pub fn dwork_build(q: u64, k: usize) -> Result<DworkOperator> {
    let p = prime_of_power(q)?;
    if (k as u64) < q {
        return Err(Error::InvalidParameter(format!("truncation K = {k} below q = {q}")));
    }
    let coeffs = (0..=k)
        .map(|n| {
            (0..=n)
                .step_by(q as usize)
                .map(|j| {
                    let b = binomial_int(n as i64, j as u64);
                    if (n - j) % 2 == 0 {
                        b
                    } else {
                        -b
                    }
                })
                .sum()
        })
        .collect();
    Ok(DworkOperator { p, q, k, coeffs })
}

impl DworkOperator {
    /// H_K as a finite operator sum_k c_k x^k / k! d^k.
    pub fn series(&self) -> Result<SkewLaurentSeries> {
        SkewLaurentSeries::from_terms(
            self.p,
            0,
            self.k as i64,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(n, c)| (n as i64, RatFun::monomial(Q::new(c.clone(), factorial(n as u64)), n as i64))),
        )
    }

    /// H(x^j) = sum_k c_k binom(j, k) x^j, exact for 0 <= j <= K.
    pub fn apply_monomial(&self, j: u64) -> Result<Q> {
        if j as usize > self.k {
            return Err(Error::PrecisionExhausted { suggested: j as u32 });
        }
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .take(j as usize + 1)
            .map(|(n, c)| Q::from_integer(c * binomial_int(j as i64, n as u64)))
            .sum())
    }
}

/// Outcome of the Dwork identities on one truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DworkReport {
    pub q: u64,
    pub k: usize,
    /// d-degrees of H*H - H certified exact and found zero
    pub idempotent_through: i64,
    /// largest n with every monomial x^m, q-1 <= m <= n, fixed by sum_i x^i H x^{-i}
    pub partition_through: u64,
}

impl DworkReport {
    /// Both identities certified on the full exact range K - q.
    pub fn passes(&self) -> bool {
        self.idempotent_through == (self.k as u64 - self.q) as i64 && self.partition_through == self.k as u64 - self.q
    }
}

fn x_pow(e: i64) -> RatFun {
    RatFun::monomial(Q::one(), e)
}

/// x^i * H_K * x^{-i}
fn conjugate(h: &SkewLaurentSeries, i: i64) -> Result<SkewLaurentSeries> {
    let p = h.prime();
    let left = SkewLaurentSeries::function(p, x_pow(i))?;
    let right = SkewLaurentSeries::function(p, x_pow(-i))?;
    left.star(&h.star(&right, 0)?, 0)
}

/// H*H = H coefficientwise and sum_{i<q} x^i H x^{-i} = 1 on monomials;
/// a nonzero exact residual is an error.
pub fn dwork_identities(q: u64, k: usize) -> Result<DworkReport> {
    if (k as u64) < 3 * q {
        return Err(Error::InvalidParameter(format!("K = {k} below 3q = {}", 3 * q)));
    }
    let dw = dwork_build(q, k)?;
    let h = dw.series()?;

    // the omitted tail c_n x^n/n! d^n (n > K) has polynomial shape 0, so it only
    // reaches d-degrees > K; its valuation is unbounded below
    let shape = crate::skewalg::Tail::Bounded { val: Valuation::int(-(1 << 30)), shape: Some(0) };
    let ht = h.clone().with_upper_tail(shape);
    let h2 = ht.star(&ht, 0)?;
    let top = k as u64 - q;
    let mut idempotent_through = -1;
    for n in 0..=top as i64 {
        if !h2.tag(n).is_exact() {
            break;
        }
        if h2.coeff(n) != h.coeff(n) {
            return Err(Error::CheckFailed(format!("H^2 - H nonzero at d-degree {n}")));
        }
        idempotent_through = n;
    }

    let conj: Vec<SkewLaurentSeries> = (0..q as i64).map(|i| conjugate(&h, i)).collect::<Result<_>>()?;
    let mut partition_through = 0;
    for n in (q - 1)..=top {
        let f = x_pow(n as i64);
        let mut acc = RatFun::zero();
        for c in &conj {
            acc = acc.add(&c.apply_to_function(&f)?.0);
        }
        if acc != f {
            return Err(Error::CheckFailed(format!("partition identity fails on x^{n}")));
        }
        partition_through = n;
    }
    Ok(DworkReport { q, k, idempotent_through, partition_through })
}

/// Both sides of x^i ((1/q) x d H - ((lambda - i)/q) H) H x^{-i} = (1/q)(x d - lambda) x^i H x^{-i}
/// applied to x^n for q-1 <= n <= K-q.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrobeniusReport {
    pub q: u64,
    pub i: u64,
    pub lambda: Q,
    /// (n, lhs coefficient, rhs coefficient)
    pub rows: Vec<(u64, Q, Q)>,
}

impl FrobeniusReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.1 == r.2)
    }
}

pub fn frobenius_relation(q: u64, lambda: &Q, i: u64, k: usize) -> Result<FrobeniusReport> {
    if i >= q {
        return Err(Error::InvalidParameter(format!("i = {i} outside [0, q)")));
    }
    let dw = dwork_build(q, k)?;
    let p = dw.p;
    let h = dw.series()?;
    let qq = qi(q as i64);
    let xd = SkewLaurentSeries::monomial(p, RatFun::x(), 1)?;
    let inner = xd.star(&h, 0)?.scale(&qq.recip()).sub(&h.scale(&((lambda - qi(i as i64)) / &qq)))?;
    let xi = SkewLaurentSeries::function(p, x_pow(i as i64))?;
    let xmi = SkewLaurentSeries::function(p, x_pow(-(i as i64)))?;
    let lhs = xi.star(&inner.star(&h, 0)?.star(&xmi, 0)?, 0)?;
    let xd_minus = xd.sub(&SkewLaurentSeries::function(p, RatFun::constant(lambda.clone()))?)?.scale(&qq.recip());
    let rhs = xd_minus.star(&conjugate(&h, i as i64)?, 0)?;
    let mut rows = Vec::new();
    for n in (q - 1)..=(k as u64 - q) {
        let f = x_pow(n as i64);
        let coef = |op: &SkewLaurentSeries| -> Result<Q> {
            let r = op.apply_to_function(&f)?.0;
            Ok(r.poly_part().get(n as usize).cloned().unwrap_or_else(Q::zero))
        };
        rows.push((n, coef(&lhs)?, coef(&rhs)?));
    }
    Ok(FrobeniusReport { q, i, lambda: lambda.clone(), rows })
}

/// binom(x d - m, n)(f) d^m for one term f d^m.
pub fn euler_term(n: u32, f: &RatFun, m: i64) -> RatFun {
    // T f = x f' - m f
    let t = |g: &RatFun| RatFun::x().mul(&g.derivative()).sub(&g.scale(&qi(m)));
    let mut acc = f.clone();
    for r in 0..n {
        acc = t(&acc).sub(&acc.scale(&qi(r as i64)));
    }
    acc.scale(&Q::from_integer(factorial(n as u64)).recip())
}

/// E_n = binom(ad(x d), n) applied termwise.
pub fn euler_apply(n: u32, u: &SkewLaurentSeries) -> Result<SkewLaurentSeries> {
    let (lo, hi) = u.window();
    let terms: Vec<(i64, RatFun)> = u.terms().map(|(m, f)| (m, euler_term(n, f, m))).collect();
    SkewLaurentSeries::from_terms(u.prime(), lo, hi, terms)
}

/// E_n(v_m) = binom(m, n) v_m for v_m = x^m (m >= 0) or d^{-m} (m < 0).
pub fn euler_basis_eigenvalue(n: u32, m: i64) -> Q {
    binomial(&qi(m), n as u64)
}

/// n! binom(ad(x d), n)(D) computed as ad(t)(ad(t) - 1)...(ad(t) - n + 1)(D) with star products.
pub fn euler_via_commutators(n: u32, u: &SkewLaurentSeries, out_lo: i64) -> Result<SkewLaurentSeries> {
    let p = u.prime();
    let t = SkewLaurentSeries::monomial(p, RatFun::x(), 1)?;
    let (lo, hi) = u.window();
    let mut acc = u.clone();
    for r in 0..n {
        let ad = t.star(&acc, out_lo)?.sub(&acc.star(&t, out_lo)?)?;
        acc = ad.sub(&acc.scale(&qi(r as i64)))?.truncate(lo.min(out_lo), hi)?;
    }
    Ok(acc)
}

/// True when every coefficient of every polynomial coefficient is p-integral.
pub fn is_integral(u: &SkewLaurentSeries) -> bool {
    let p = u.prime();
    u.terms().all(|(_, f)| f.gauss_valuation(p) >= Valuation::int(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|x| BigInt::from(*x)).collect()
    }

    #[test]
    fn build_examples() {
        let h = dwork_build(2, 4).unwrap();
        assert_eq!(h.coeffs[..3], ints(&[1, -1, 2])[..]);
        for q in [2u64, 3, 4, 5, 9] {
            assert_eq!(dwork_build(q, 2 * q as usize).unwrap().coeffs[0], BigInt::one());
        }
        assert!(dwork_build(6, 12).is_err());
        assert!(dwork_build(3, 2).is_err());
    }

    #[test]
    fn projects_onto_multiples_of_q() {
        for q in [2u64, 3, 4] {
            let k = 12;
            let h = dwork_build(q, k).unwrap();
            let hs = h.series().unwrap();
            for j in 0..=(k as u64 - q) {
                let expect = if j % q == 0 { Q::one() } else { Q::zero() };
                assert_eq!(h.apply_monomial(j).unwrap(), expect);
                let (r, tag) = hs.apply_to_function(&x_pow(j as i64)).unwrap();
                assert!(tag.is_exact());
                assert_eq!(r, x_pow(j as i64).scale(&expect));
            }
        }
    }

    #[test]
    fn identities_hold() {
        let r = dwork_identities(2, 12).unwrap();
        assert!(r.passes(), "{r:?}");
        assert_eq!(r.idempotent_through, 10);
        assert_eq!(r.partition_through, 10);
        let r = dwork_identities(3, 12).unwrap();
        assert!(r.passes(), "{r:?}");
        assert_eq!(r.partition_through, 9);
    }

    #[test]
    fn frobenius_examples() {
        let z = frobenius_relation(3, &Q::zero(), 0, 12).unwrap();
        assert!(z.passes());
        let half = Q::new(1.into(), 2.into());
        let r = frobenius_relation(2, &half, 1, 12).unwrap();
        assert!(r.passes());
        assert_eq!(r.rows.last().unwrap().0, 10);
        // summing over i recovers (n - lambda)/q on every monomial
        let lam = Q::new(1.into(), 3.into());
        let reps: Vec<FrobeniusReport> = (0..3).map(|i| frobenius_relation(3, &lam, i, 12).unwrap()).collect();
        for (idx, row) in reps[0].rows.iter().enumerate() {
            let total: Q = reps.iter().map(|r| r.rows[idx].2.clone()).sum();
            assert_eq!(total, (qi(row.0 as i64) - &lam) / qi(3));
        }
    }

    #[test]
    fn euler_examples() {
        let p = 3;
        let u = SkewLaurentSeries::from_terms(p, -3, 2, [(2, RatFun::x()), (-3, RatFun::one())]).unwrap();
        assert!(euler_apply(0, &u).unwrap().agrees_with(&u));
        for m in 0..8 {
            for n in 0..5 {
                let e = euler_term(n, &x_pow(m), 0);
                assert_eq!(e, x_pow(m).scale(&euler_basis_eigenvalue(n, m)));
            }
        }
        assert_eq!(euler_term(2, &RatFun::one(), 3), RatFun::constant(qi(6)));
        assert_eq!(euler_basis_eigenvalue(2, -3), qi(6));
    }

    #[test]
    fn euler_matches_iterated_commutators() {
        let p = 3;
        let u = SkewLaurentSeries::from_terms(
            p,
            -2,
            3,
            [(3, RatFun::from_poly(alloc::vec![qi(1), qi(2), qi(0), qi(1)])), (0, RatFun::x()), (-2, x_pow(4))],
        )
        .unwrap();
        for n in 0..6u32 {
            let direct = euler_apply(n, &u).unwrap().scale(&Q::from_integer(factorial(n as u64)));
            let via = euler_via_commutators(n, &u, -2).unwrap();
            assert!(direct.agrees_with(&via.truncate(-2, 3).unwrap()), "n={n}");
            assert!(is_integral(&euler_apply(n, &u).unwrap()));
        }
    }
}
