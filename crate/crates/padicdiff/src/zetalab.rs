//! The twisted differential equation near y = 0 and its formal solution zeta.
//!
//! The uniformizer is taken to be p throughout, so q = p^f enters only
//! through the exponents and every coefficient stays rational. With
//! a = k/d and b = qk/d, eps = (1 - y^{q-1})^a and
//!
//!   nabla = -(1/p) eps^{-1} (y^2 d/dy - b y) eps.
//!
//! Series are exact over Q until they are reduced for valuation reports.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::carrylab::{coefficient_sum, normalize_k, special_index, SumSign};
use crate::dworklab::prime_of_power;
use crate::padic_core::{binomial, vp_rational, PadicNumber, Valuation};
use crate::ratfun::{qi, Factored, RatFun};
use crate::twistlab::h_sequence;
use crate::{Error, Result, Q};

/// A power series over Q known modulo y^len.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatSeries {
    coeffs: Vec<Q>,
}

impl RatSeries {
    pub fn zero(len: usize) -> Self {
        RatSeries { coeffs: vec![Q::zero(); len] }
    }

    pub fn one(len: usize) -> Self {
        let mut s = Self::zero(len);
        if len > 0 {
            s.coeffs[0] = Q::one();
        }
        s
    }

    /// Coefficients beyond `len` are dropped; missing ones are zero.
    pub fn from_coeffs(mut coeffs: Vec<Q>, len: usize) -> Self {
        coeffs.resize(len, Q::zero());
        RatSeries { coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: usize) -> Q {
        self.coeffs.get(i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn truncate(&self, len: usize) -> Self {
        Self::from_coeffs(self.coeffs.clone(), len)
    }

    pub fn add(&self, o: &Self) -> Self {
        let len = self.len().min(o.len());
        RatSeries { coeffs: (0..len).map(|i| &self.coeffs[i] + &o.coeffs[i]).collect() }
    }

    pub fn sub(&self, o: &Self) -> Self {
        let len = self.len().min(o.len());
        RatSeries { coeffs: (0..len).map(|i| &self.coeffs[i] - &o.coeffs[i]).collect() }
    }

    pub fn scale(&self, c: &Q) -> Self {
        RatSeries { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let len = self.len().min(o.len());
        let mut out = vec![Q::zero(); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(len - i) {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        RatSeries { coeffs: out }
    }

    /// Multiply by y^k, keeping the length.
    pub fn shift_up(&self, k: usize) -> Self {
        let n = self.len();
        let mut out = vec![Q::zero(); n];
        if k < n {
            out[k..].clone_from_slice(&self.coeffs[..n - k]);
        }
        RatSeries { coeffs: out }
    }

    /// Divide by y; the constant term must vanish. The length drops by one.
    pub fn shift_down(&self) -> Result<Self> {
        match self.coeffs.first() {
            Some(c) if !c.is_zero() => Err(Error::Domain("series not divisible by y".into())),
            None => Ok(self.clone()),
            Some(_) => Ok(RatSeries { coeffs: self.coeffs[1..].to_vec() }),
        }
    }

    /// d/dy; the length drops by one.
    pub fn derivative(&self) -> Self {
        RatSeries { coeffs: self.coeffs.iter().enumerate().skip(1).map(|(i, c)| c * qi(i as i64)).collect() }
    }

    /// Inverse of a series with nonzero constant term.
    pub fn inv(&self) -> Result<Self> {
        let c0 = self.coeff(0);
        if c0.is_zero() {
            return Err(Error::Domain("series with zero constant term is not invertible".into()));
        }
        let r0 = c0.recip();
        let mut out: Vec<Q> = Vec::with_capacity(self.len());
        out.push(r0.clone());
        for n in 1..self.len() {
            let mut acc = Q::zero();
            for i in 1..=n {
                if !self.coeffs[i].is_zero() {
                    acc += &self.coeffs[i] * &out[n - i];
                }
            }
            out.push(-acc * &r0);
        }
        Ok(RatSeries { coeffs: out })
    }

    /// self^e for constant term 1, by n c_n = sum_{i<=n} ((e+1) i - n) v_i c_{n-i}.
    pub fn power(&self, e: &Q) -> Result<Self> {
        if self.coeff(0) != Q::one() {
            return Err(Error::Domain("rational powers need constant term 1".into()));
        }
        let mut out: Vec<Q> = Vec::with_capacity(self.len());
        out.push(Q::one());
        let e1 = e + Q::one();
        for n in 1..self.len() {
            let mut acc = Q::zero();
            for i in 1..=n {
                if !self.coeffs[i].is_zero() {
                    acc += (&e1 * qi(i as i64) - qi(n as i64)) * &self.coeffs[i] * &out[n - i];
                }
            }
            out.push(acc / qi(n as i64));
        }
        Ok(RatSeries { coeffs: out })
    }

    /// f(y/(1-y)), by Horner with multiplication by sum_{j>=1} y^j.
    pub fn compose_eta(&self) -> Self {
        let len = self.len();
        let mut acc = vec![Q::zero(); len];
        for c in self.coeffs.iter().rev() {
            let mut next = vec![Q::zero(); len];
            let mut run = Q::zero();
            for n in 1..len {
                run += &acc[n - 1];
                next[n] = run.clone();
            }
            if len > 0 {
                next[0] += c;
            }
            acc = next;
        }
        RatSeries { coeffs: acc }
    }
}

/// Coefficients of a power series reduced to Q_p at a working precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicPowerSeries {
    var: char,
    p: u64,
    coeffs: Vec<PadicNumber>,
}

impl PadicPowerSeries {
    pub fn new(var: char, p: u64, coeffs: Vec<PadicNumber>) -> Self {
        PadicPowerSeries { var, p, coeffs }
    }

    pub fn from_exact(var: char, s: &RatSeries, p: u64, prec: u32) -> Self {
        let coeffs = s.coeffs.iter().map(|c| PadicNumber::from_rational(c, p, prec)).collect();
        PadicPowerSeries { var, p, coeffs }
    }

    pub fn var(&self) -> char {
        self.var
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: usize) -> &PadicNumber {
        &self.coeffs[i]
    }

    pub fn valuation(&self, i: usize) -> Valuation {
        self.coeffs[i].valuation().map(Valuation::int).unwrap_or(Valuation::Infinite)
    }

    /// Absolute precision of coefficient i.
    pub fn absprec(&self, i: usize) -> i64 {
        self.coeffs[i].absprec()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let len = self.len().min(o.len());
        let mut out = vec![PadicNumber::zero(self.p); len];
        for (i, a) in self.coeffs.iter().enumerate().take(len) {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.coeffs.iter().enumerate().take(len - i) {
                if !b.is_zero() {
                    out[i + j] = out[i + j].add(&a.mul(b));
                }
            }
        }
        PadicPowerSeries { var: self.var, p: self.p, coeffs: out }
    }
}

/// The data (q, k, d) with q = p^f, d | q+1 and 1 <= k <= d.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZetaParams {
    pub p: u64,
    pub q: u64,
    pub k: u64,
    pub d: u64,
}

impl ZetaParams {
    pub fn new(q: u64, k: u64, d: u64) -> Result<Self> {
        let p = prime_of_power(q)?;
        if d == 0 || !(q + 1).is_multiple_of(d) {
            return Err(Error::InvalidParameter(format!("d = {d} must divide q + 1 = {}", q + 1)));
        }
        if d.is_multiple_of(p) {
            return Err(Error::InvalidParameter(format!("p = {p} divides d = {d}")));
        }
        if k < 1 || k > d {
            return Err(Error::InvalidParameter(format!("k = {k} must satisfy 1 <= k <= d = {d}")));
        }
        Ok(ZetaParams { p, q, k, d })
    }

    /// As `new`, additionally rejecting the trivial twist k = d.
    pub fn nontrivial(q: u64, k: u64, d: u64) -> Result<Self> {
        let z = Self::new(q, k, d)?;
        if k == d {
            return Err(Error::InvalidParameter(format!(
                "k = d = {d}: qk/d is an integer and the recurrence divides by zero"
            )));
        }
        Ok(z)
    }

    /// k/d
    pub fn a(&self) -> Q {
        Q::new(BigInt::from(self.k), BigInt::from(self.d))
    }

    /// qk/d
    pub fn b(&self) -> Q {
        Q::new(BigInt::from(self.q * self.k), BigInt::from(self.d))
    }

    /// (1 - y^{q-1})^{k/d} via the power recurrence.
    pub fn epsilon(&self, len: usize) -> Result<RatSeries> {
        self.one_minus_s(len).power(&self.a())
    }

    fn one_minus_s(&self, len: usize) -> RatSeries {
        let mut s = RatSeries::one(len);
        let e = self.q as usize - 1;
        if e < len {
            s.coeffs[e] = -Q::one();
        }
        s
    }
}

/// The unit w / (h^{-1} w) in the y-coordinate and its d-th root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CocycleSeries {
    /// f in Z[y] with w/(h^{-1} w) = (1 + p y f / (1 - y^{q-1}))^k
    pub f: Vec<BigInt>,
    /// w / (h^{-1} w) modulo y^order
    pub unit: RatSeries,
    /// the d-th root with constant term 1
    pub c: RatSeries,
}

impl CocycleSeries {
    /// c^d - w/(h^{-1} w), computed by repeated multiplication.
    pub fn power_defect(&self, d: u64) -> RatSeries {
        let mut acc = RatSeries::one(self.c.len());
        for _ in 0..d {
            acc = acc.mul(&self.c);
        }
        acc.sub(&self.unit)
    }
}

pub fn build_cocycle_c(q: u64, k: u64, d: u64, order: usize) -> Result<CocycleSeries> {
    let zp = ZetaParams::new(q, k, d)?;
    let p = BigInt::from(zp.p);
    let qs = q as usize;
    // y(1-y)^q - y^q(1-y) over y - y^q, after cancelling y: (1-y)^q + y^q - 1 = p y f(y)
    let mut num = vec![BigInt::zero(); qs + 1];
    for (j, c) in num.iter_mut().enumerate() {
        let b = crate::padic_core::binomial_int(q as i64, j as u64);
        *c = if j % 2 == 0 { b } else { -b };
    }
    num[qs] += 1;
    num[0] -= 1;
    if num.iter().any(|c| (c % &p) != BigInt::zero()) {
        return Err(Error::CheckFailed("w/(h^{-1} w) is not 1 mod p y".into()));
    }
    let mut f: Vec<BigInt> = num[1..].iter().map(|c| c / &p).collect();
    while f.last().is_some_and(Zero::is_zero) {
        f.pop();
    }

    let mut pyf = RatSeries::zero(order);
    for (j, c) in f.iter().enumerate() {
        if j + 1 < order {
            pyf.coeffs[j + 1] = Q::from_integer(c * &p);
        }
    }
    let unit1 = RatSeries::one(order).add(&pyf.mul(&zp.one_minus_s(order).inv()?));
    let mut unit = RatSeries::one(order);
    for _ in 0..k {
        unit = unit.mul(&unit1);
    }
    let c = unit1.power(&zp.a())?;
    Ok(CocycleSeries { f, unit, c })
}

/// alpha_m and the residual of (y d/dy - b - 1)(sum alpha_m y^{(q-1)m}) = eps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaReport {
    pub alpha: Vec<Q>,
    pub residual: RatSeries,
}

impl AlphaReport {
    pub fn passes(&self) -> bool {
        self.residual.is_zero()
    }

    /// sum_m alpha_m y^{(q-1)m} modulo y^len.
    pub fn series(&self, q: u64, len: usize) -> RatSeries {
        let mut s = RatSeries::zero(len);
        for (m, a) in self.alpha.iter().enumerate() {
            let i = m * (q as usize - 1);
            if i < len {
                s.coeffs[i] = a.clone();
            }
        }
        s
    }
}

/// alpha_m = (-1)^m binom(k/d, m) / ((q-1)m - qk/d - 1)
pub fn alpha_coefficient(zp: &ZetaParams, m: u64) -> Q {
    let sign = if m.is_multiple_of(2) { Q::one() } else { -Q::one() };
    let den = qi(((zp.q - 1) * m) as i64) - zp.b() - Q::one();
    sign * binomial(&zp.a(), m) / den
}

pub fn alpha_and_j(q: u64, k: u64, d: u64, order: usize) -> Result<AlphaReport> {
    let zp = ZetaParams::nontrivial(q, k, d)?;
    let step = q as usize - 1;
    let alpha: Vec<Q> = (0..).take_while(|m| m * step < order).map(|m| alpha_coefficient(&zp, m as u64)).collect();
    let a_series = AlphaReport { alpha: alpha.clone(), residual: RatSeries::zero(0) }.series(q, order);
    let bb = zp.b() + Q::one();
    let lhs = RatSeries { coeffs: a_series.coeffs.iter().enumerate().map(|(i, c)| c * (qi(i as i64) - &bb)).collect() };
    let residual = lhs.sub(&zp.epsilon(order)?);
    Ok(AlphaReport { alpha, residual })
}

/// sum_m (-1)^m binom(k/d, m) y^{(q-1)m} [((1-y)^{mu_m} - 1)/(mu_m y)], mu_m = 1 + qk/d - (q-1)m.
fn bracket_sum(zp: &ZetaParams, len: usize) -> RatSeries {
    let step = zp.q as usize - 1;
    let mut out = RatSeries::zero(len);
    let mut m = 0usize;
    while m * step < len {
        let mu = Q::one() + zp.b() - qi((step * m) as i64);
        let sign = if m.is_multiple_of(2) { Q::one() } else { -Q::one() };
        let lead = sign * binomial(&zp.a(), m as u64);
        // coefficient of y^j: -binom(mu - 1, j) (-1)^j / (j + 1)
        let mut beta = -Q::one();
        for j in 0..(len - m * step) {
            if j > 0 {
                beta = -beta * (&mu - qi(j as i64)) / qi(j as i64 + 1);
            }
            out.coeffs[m * step + j] += &lead * &beta;
        }
        m += 1;
    }
    out
}

/// zeta = p eps^{-1} sum_m (...) as an exact series modulo y^order.
pub fn zeta_series(q: u64, k: u64, d: u64, order: usize) -> Result<RatSeries> {
    let zp = ZetaParams::nontrivial(q, k, d)?;
    if order < q as usize {
        return Err(Error::InvalidParameter(format!("order = {order} below q = {q}")));
    }
    let eps_inv = zp.one_minus_s(order).power(&-zp.a())?;
    Ok(bracket_sum(&zp, order).mul(&eps_inv).scale(&qi(zp.p as i64)))
}

/// zeta = -p eps^{-1} t^{qk} (eta(J) - J), with eta(y) = y/(1-y) applied by composition.
///
/// y t^{qk} (eta(J) - J) = (1-y)^{b+1} eta(A) - A for A = sum_m alpha_m y^{(q-1)m}.
pub fn zeta_series_via_eta(q: u64, k: u64, d: u64, order: usize) -> Result<RatSeries> {
    let zp = ZetaParams::nontrivial(q, k, d)?;
    let len = order + 1;
    let alpha = alpha_and_j(q, k, d, len)?;
    let a = alpha.series(q, len);
    let one_minus_y = RatSeries::from_coeffs(vec![Q::one(), -Q::one()], len);
    let g = one_minus_y.power(&(zp.b() + Q::one()))?.mul(&a.compose_eta()).sub(&a);
    let g = g.shift_down()?;
    let eps_inv = zp.epsilon(order)?.inv()?;
    Ok(g.mul(&eps_inv).scale(&-qi(zp.p as i64)))
}

/// nabla(f) = -(1/p) [y^2 f' + y^2 h1 f - b y f] with h1 = eps'/eps, modulo y^len.
pub fn nabla(zp: &ZetaParams, f: &RatSeries) -> Result<RatSeries> {
    let len = f.len();
    let eps = zp.epsilon(len + 1)?;
    let h1 = eps.derivative().mul(&eps.truncate(len).inv()?);
    let fp = RatSeries::from_coeffs(f.derivative().coeffs, len);
    let inner = fp.add(&h1.mul(f)).shift_up(2).sub(&f.shift_up(1).scale(&zp.b()));
    Ok(inner.scale(&-Q::new(BigInt::one(), BigInt::from(zp.p))))
}

/// Residual of nabla(zeta) = c - 1 and the recurrence oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdeReport {
    pub order: usize,
    pub prec: u32,
    pub residual: PadicPowerSeries,
    /// valuation floor a nonzero residual coefficient must clear
    pub floor: i64,
    /// the recurrence (n - qk/d) F_n = [-p eps (c - 1)]_{n+1} reproduces zeta exactly
    pub uniqueness_agrees: bool,
}

impl OdeReport {
    /// First coefficient below the floor.
    pub fn worst(&self) -> Option<(usize, Valuation)> {
        (0..self.residual.len()).map(|i| (i, self.residual.valuation(i))).find(|(_, v)| *v < Valuation::int(self.floor))
    }

    pub fn passes(&self) -> bool {
        self.worst().is_none() && self.uniqueness_agrees
    }
}

/// Solve (y d/dy - b) F = -p eps (c - 1) / y term by term and return eps^{-1} F.
pub fn zeta_by_recurrence(q: u64, k: u64, d: u64, order: usize) -> Result<RatSeries> {
    let zp = ZetaParams::nontrivial(q, k, d)?;
    let c = build_cocycle_c(q, k, d, order + 1)?.c;
    let eps = zp.epsilon(order + 1)?;
    let rhs = eps.mul(&c.sub(&RatSeries::one(order + 1))).scale(&-qi(zp.p as i64));
    let b = zp.b();
    let mut f = RatSeries::zero(order);
    for n in 0..order {
        let den = qi(n as i64) - &b;
        if den.is_zero() {
            return Err(Error::CheckFailed(format!("n = {n} equals qk/d")));
        }
        f.coeffs[n] = rhs.coeff(n + 1) / den;
    }
    Ok(f.mul(&eps.truncate(order).inv()?))
}

pub fn ode_residual(q: u64, k: u64, d: u64, order: usize, prec: u32) -> Result<OdeReport> {
    let zp = ZetaParams::nontrivial(q, k, d)?;
    let zeta = zeta_series(q, k, d, order)?;
    let c = build_cocycle_c(q, k, d, order)?.c;
    let res = nabla(&zp, &zeta)?.sub(&c.sub(&RatSeries::one(order)));
    let uniqueness_agrees = zeta_by_recurrence(q, k, d, order)? == zeta;
    Ok(OdeReport {
        order,
        prec,
        residual: PadicPowerSeries::from_exact('y', &res, zp.p, prec),
        floor: prec as i64 / 2,
        uniqueness_agrees,
    })
}

/// Largest y-degree n(q-1) for which the series route of the projected
/// coefficient is attempted.
pub const SERIES_ROUTE_MAX_DEGREE: u64 = 2000;

/// One N of the valuation profile.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiRow {
    pub big_n: u32,
    pub n: u64,
    /// valuation of the closed coefficient sum
    pub valuation: Valuation,
    pub bound: Rational64,
    /// valuation from the series assembly, when within reach
    pub series_valuation: Option<Valuation>,
    /// p-adic digits on which both routes agree
    pub agreement: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhiProfile {
    pub params: ZetaParams,
    pub prec: u32,
    pub rows: Vec<PhiRow>,
}

impl PhiProfile {
    pub fn passes(&self) -> bool {
        let bounded = self.rows.iter().all(|r| r.valuation <= Valuation::Finite(r.bound));
        let decreasing = self.rows.windows(2).all(|w| w[1].valuation < w[0].valuation);
        let agree = self.rows.iter().all(|r| r.agreement.is_none_or(|a| a >= self.prec as i64 / 2));
        bounded && decreasing && agree
    }
}

/// Coefficient of s^n in -(1/p)(1-s)^{k/d} Phi(zeta), assembled from the y-series of zeta in Q_p.
pub fn phi_coefficient_by_series(zp: &ZetaParams, n: u64, prec: u32) -> Result<PadicNumber> {
    let p = zp.p;
    let step = zp.q as usize - 1;
    let len = n as usize * step + 1;
    let pn = |x: &Q| PadicNumber::from_rational(x, p, prec);
    let b = zp.b();
    let a = zp.a();

    // bracket sum in Q_p, same shape as the exact route
    let mut f = vec![PadicNumber::zero(p); len];
    let mut lead = pn(&Q::one());
    let mut m = 0usize;
    while m * step < len {
        if m > 0 {
            // (-1)^m binom(a, m) from (-1)^{m-1} binom(a, m-1)
            lead = lead.mul(&pn(&(-(&a - qi(m as i64 - 1)) / qi(m as i64))));
        }
        let mu = Q::one() + &b - qi((step * m) as i64);
        let mut beta = pn(&-Q::one());
        for j in 0..(len - m * step) {
            if j > 0 {
                beta = beta.mul(&pn(&(-(&mu - qi(j as i64)) / qi(j as i64 + 1))));
            }
            f[m * step + j] = f[m * step + j].add(&lead.mul(&beta));
        }
        m += 1;
    }
    let f = PadicPowerSeries::new('y', p, f);

    // zeta = p eps^{-1} F with eps^{-1} = (1 - s)^{-a}
    let mut eps_inv = vec![PadicNumber::zero(p); len];
    let mut e = pn(&Q::one());
    for i in 0..=(n as usize) {
        if i > 0 {
            e = e.mul(&pn(&((&a + qi(i as i64 - 1)) / qi(i as i64))));
        }
        eps_inv[i * step] = e.clone();
    }
    let zeta = f.mul(&PadicPowerSeries::new('y', p, eps_inv)).mul(&PadicPowerSeries::new(
        'y',
        p,
        core::iter::once(pn(&qi(p as i64))).chain((1..len).map(|_| PadicNumber::zero(p))).collect(),
    ));

    // Phi keeps exponents divisible by q - 1
    let phi = PadicPowerSeries::new('s', p, (0..=n as usize).map(|i| zeta.coeff(i * step).clone()).collect());
    let mut eps_s = vec![PadicNumber::zero(p); n as usize + 1];
    let mut e = pn(&Q::one());
    for (i, slot) in eps_s.iter_mut().enumerate() {
        if i > 0 {
            e = e.mul(&pn(&(-(&a - qi(i as i64 - 1)) / qi(i as i64))));
        }
        *slot = e.clone();
    }
    let prod = phi.mul(&PadicPowerSeries::new('s', p, eps_s));
    prod.coeff(n as usize).div(&pn(&-qi(p as i64)))
}

pub fn phi_profile_row(q: u64, k: u64, d: u64, big_n: u32, prec: u32) -> Result<PhiRow> {
    let zp = ZetaParams::nontrivial(q, k, d)?;
    let f = (1..).find(|&f| zp.p.pow(f) == q).unwrap();
    let kn = normalize_k(q, k, d)?;
    let idx = special_index(zp.p, f, kn, big_n)?;
    crate::carrylab::check_cost(&idx)?;
    let (sum, _) = coefficient_sum(&idx, prec, SumSign::Series)?;
    let v = sum.valuation().ok_or(Error::PrecisionExhausted { suggested: prec * 2 })?;
    let (series_valuation, agreement) = if idx.n * (q - 1) <= SERIES_ROUTE_MAX_DEGREE {
        let s = phi_coefficient_by_series(&zp, idx.n, prec + 16)?;
        let sv = s.valuation().map(Valuation::int).unwrap_or(Valuation::Infinite);
        (Some(sv), Some(s.agreement_digits(&sum)))
    } else {
        (None, None)
    };
    Ok(PhiRow { big_n, n: idx.n, valuation: Valuation::int(v), bound: idx.bound(), series_valuation, agreement })
}

pub fn phi_valuation_profile(q: u64, k: u64, d: u64, big_ns: &[u32], prec: u32) -> Result<PhiProfile> {
    let params = ZetaParams::nontrivial(q, k, d)?;
    let rows = big_ns.iter().map(|&n| phi_profile_row(q, k, d, n, prec)).collect::<Result<Vec<_>>>()?;
    Ok(PhiProfile { params, prec, rows })
}

/// (xi beta(h))_0 on the x side and its expansion in y = p/x.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XvZeroReport {
    /// coefficient of y^j of (xi beta(h))_0(p/y), exact for j < order
    pub y_series: RatSeries,
    /// nabla of the truncated sum minus (1 - c) truncated at the same depth, exact
    pub residual_zero: bool,
}

/// -sum_{n=1}^{order} (1/n) (-p)^n h^{[n-1]} for w = (x^q - p^{q-1} x)^{-k}.
///
/// Needs x^q - p^{q-1} x to split over Q, so q = p in {2, 3}.
pub fn xvzero_series(q: u64, k: u64, d: u64, order: usize) -> Result<XvZeroReport> {
    let zp = ZetaParams::nontrivial(q, k, d)?;
    if zp.p != q || q > 3 {
        return Err(Error::InvalidParameter(format!(
            "q = {q}: the roots of x^q - p^(q-1) x are rational only for q = p <= 3"
        )));
    }
    let p = qi(q as i64);
    let mut roots = vec![Q::zero(), p.clone()];
    if q == 3 {
        roots.push(-p.clone());
    }
    let w = Factored::new(Q::one(), roots.into_iter().map(|r| (r, -(k as i64))))?;
    let td = h_sequence(zp.p, &w, d as i64, order + 1)?;

    let minus_p = -p.clone();
    let mut f = RatFun::zero();
    let mut c = RatFun::one();
    let mut pw = Q::one();
    for n in 1..=order {
        pw *= &minus_p;
        f = f.add(&td.h(n - 1)?.scale(&(-&pw / qi(n as i64))));
        c = c.add(&td.h(n)?.scale(&pw));
    }
    let nabla_f = f.derivative().add(&td.h(1)?.mul(&f));
    let residual_zero = nabla_f == RatFun::one().sub(&c);

    let e = f.expand_at_infinity(order);
    let mut y = RatSeries::zero(order);
    let mut pj = Q::one();
    for j in 0..order {
        y.coeffs[j] = e.coeff(j as i64) / &pj;
        pj *= &p;
    }
    Ok(XvZeroReport { y_series: y, residual_zero })
}

/// Minimum p-adic valuation over the first `len` coefficients.
pub fn min_valuation(s: &RatSeries, p: u64, len: usize) -> Valuation {
    s.coeffs.iter().take(len).map(|c| vp_rational(c, p)).min().unwrap_or(Valuation::Infinite)
}
