//! Valuations, digit expansions and capped-precision arithmetic in Q_p.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result, Q};

/// Default number of tracked unit digits.
pub const DEFAULT_PREC: u32 = 64;

/// Absolute precision carried by an exact zero.
const EXACT: i64 = i64::MAX / 4;

/// A p-adic valuation: a rational number or +infinity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Valuation {
    Finite(Rational64),
    Infinite,
}

impl Valuation {
    pub fn int(v: i64) -> Self {
        Valuation::Finite(Rational64::from_integer(v))
    }

    pub fn finite(self) -> Option<Rational64> {
        match self {
            Valuation::Finite(r) => Some(r),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }

    /// Shift by a finite amount; infinity absorbs.
    pub fn shift(self, by: Rational64) -> Self {
        match self {
            Valuation::Finite(r) => Valuation::Finite(r + by),
            Valuation::Infinite => Valuation::Infinite,
        }
    }
}

impl Ord for Valuation {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Valuation::Infinite, Valuation::Infinite) => Ordering::Equal,
            (Valuation::Infinite, _) => Ordering::Greater,
            (_, Valuation::Infinite) => Ordering::Less,
            (Valuation::Finite(a), Valuation::Finite(b)) => a.cmp(b),
        }
    }
}

impl PartialOrd for Valuation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl core::ops::Add for Valuation {
    type Output = Valuation;
    fn add(self, rhs: Valuation) -> Valuation {
        match (self, rhs) {
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a + b),
            _ => Valuation::Infinite,
        }
    }
}

impl From<i64> for Valuation {
    fn from(v: i64) -> Self {
        Valuation::int(v)
    }
}

impl From<Rational64> for Valuation {
    fn from(v: Rational64) -> Self {
        Valuation::Finite(v)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Valuation::Finite(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Valuation::Infinite => f.write_str("inf"),
        }
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn require_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(alloc::format!("p = {p} must be prime")))
    }
}

/// Exponent of p in a nonzero integer.
pub fn vp_bigint(n: &BigInt, p: u64) -> Option<u64> {
    if n.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut m = n.abs();
    let mut v = 0;
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        m = q;
        v += 1;
    }
}

/// Exponent of p in a nonzero machine integer.
pub fn vp_i128(mut n: i128, p: u64) -> Option<u32> {
    if n == 0 {
        return None;
    }
    let p = p as i128;
    let mut v = 0;
    while n % p == 0 {
        n /= p;
        v += 1;
    }
    Some(v)
}

/// v_p of a rational number; +infinity for zero.
pub fn vp_rational(a: &Q, p: u64) -> Valuation {
    match (vp_bigint(a.numer(), p), vp_bigint(a.denom(), p)) {
        (Some(n), Some(d)) => Valuation::int(n as i64 - d as i64),
        _ => Valuation::Infinite,
    }
}

/// Sum of the base-p digits of n.
pub fn digit_sum(mut n: u64, p: u64) -> u64 {
    let mut s = 0;
    while n > 0 {
        s += n % p;
        n /= p;
    }
    s
}

/// v_p(n!) = (n - s_p(n)) / (p - 1).
pub fn vp_factorial(n: u64, p: u64) -> u64 {
    (n - digit_sum(n, p)) / (p - 1)
}

/// v_p of the radius constant whose (p-1)-th power is -p.
pub fn varpi_valuation(p: u64) -> Rational64 {
    Rational64::new(1, p as i64 - 1)
}

/// v_p of the level-m constant (p^m)!^(1/p^m).
pub fn varpi_m_valuation(p: u64, m: u32) -> Rational64 {
    let pm = (p as i64).pow(m);
    Rational64::new(pm - 1, pm * (p as i64 - 1))
}

fn pow_p(p: u64, k: u32) -> BigUint {
    num_traits::pow(BigUint::from(p), k as usize)
}

/// Split a nonzero integer as p^v * rest with p not dividing rest.
fn strip_p(n: &BigInt, p: u64) -> (BigInt, u64) {
    let pb = BigInt::from(p);
    let mut m = n.clone();
    let mut v = 0;
    loop {
        let (q, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return (m, v);
        }
        m = q;
        v += 1;
    }
}

/// Reduce a rational with p-free denominator modulo p^k into [0, p^k).
fn residue(num: &BigInt, den: &BigInt, p: u64, k: u32) -> BigUint {
    let modulus = BigInt::from(pow_p(p, k));
    let d = den.mod_floor(&modulus);
    let inv = d.modinv(&modulus).expect("denominator coprime to p");
    let r = (num.mod_floor(&modulus) * inv).mod_floor(&modulus);
    r.to_biguint().expect("nonnegative residue")
}

/// First `count` base-p digits of a p-adic integer.
pub fn padic_digits(lam: &Q, count: usize, p: u64) -> Result<Vec<u8>> {
    require_prime(p)?;
    if lam.is_zero() {
        return Ok(alloc::vec![0; count]);
    }
    if vp_bigint(lam.denom(), p).unwrap_or(0) > 0 {
        return Err(Error::Domain(alloc::format!("{lam} is not a {p}-adic integer")));
    }
    let r = residue(lam.numer(), lam.denom(), p, count as u32);
    let pb = BigUint::from(p);
    let mut digits = Vec::with_capacity(count);
    let mut m = r;
    for _ in 0..count {
        let (q, d) = m.div_rem(&pb);
        digits.push(d.to_u8().unwrap());
        m = q;
    }
    Ok(digits)
}

/// Exact generalized binomial coefficient binom(a, n).
pub fn binomial(a: &Q, n: u64) -> Q {
    let mut acc = Q::one();
    for j in 0..n {
        acc = acc * (a - Q::from_integer(BigInt::from(j))) / Q::from_integer(BigInt::from(j + 1));
    }
    acc
}

/// Integer binomial binom(n, k) for any integer n, via (-1)^k binom(k-n-1, k) when n < 0.
pub fn binomial_int(n: i64, k: u64) -> BigInt {
    if n < 0 {
        let b = binomial_int(k as i64 - n - 1, k);
        return if k.is_multiple_of(2) { b } else { -b };
    }
    let n = n as u64;
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for j in 0..k {
        acc = acc * BigInt::from(n - j) / BigInt::from(j + 1);
    }
    acc
}

/// An element of Q_p known modulo p^absprec.
///
/// Nonzero values store `p^val * unit` with `unit` a residue mod `p^relprec`
/// prime to p. A tracked zero stores its absolute precision in `val`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PadicNumber {
    p: u64,
    val: i64,
    unit: BigUint,
    relprec: u32,
}

impl PadicNumber {
    /// The exact zero, absorbing under multiplication and neutral under addition.
    pub fn zero(p: u64) -> Self {
        PadicNumber { p, val: EXACT, unit: BigUint::zero(), relprec: 0 }
    }

    /// A zero known only modulo p^absprec.
    pub fn tracked_zero(p: u64, absprec: i64) -> Self {
        PadicNumber { p, val: absprec.min(EXACT), unit: BigUint::zero(), relprec: 0 }
    }

    pub fn from_rational(x: &Q, p: u64, prec: u32) -> Self {
        if x.is_zero() {
            return Self::zero(p);
        }
        let (n, vn) = strip_p(x.numer(), p);
        let (d, vd) = strip_p(x.denom(), p);
        let unit = residue(&n, &d, p, prec);
        PadicNumber { p, val: vn as i64 - vd as i64, unit, relprec: prec }
    }

    pub fn from_int(n: i64, p: u64, prec: u32) -> Self {
        Self::from_rational(&Q::from_integer(BigInt::from(n)), p, prec)
    }

    /// Build from `num/den` with machine-size integers.
    pub fn from_ratio_i128(num: i128, den: i128, p: u64, prec: u32) -> Self {
        Self::from_rational(&Q::new(BigInt::from(num), BigInt::from(den)), p, prec)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_zero()
    }

    /// Valuation of a nonzero value; `None` for a (tracked) zero.
    pub fn valuation(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.val)
        }
    }

    /// Value is known modulo p^absprec.
    pub fn absprec(&self) -> i64 {
        if self.is_zero() {
            self.val
        } else {
            self.val + self.relprec as i64
        }
    }

    pub fn relprec(&self) -> u32 {
        self.relprec
    }

    pub fn unit(&self) -> &BigUint {
        &self.unit
    }

    fn check_prime(&self, other: &Self) {
        assert_eq!(self.p, other.p, "mixed primes in p-adic arithmetic");
    }

    fn normalize(p: u64, base_val: i64, x: BigUint, digits: u32) -> Self {
        if x.is_zero() {
            return Self::tracked_zero(p, base_val + digits as i64);
        }
        let pb = BigUint::from(p);
        let mut m = x;
        let mut v = 0u32;
        loop {
            let (q, r) = m.div_rem(&pb);
            if !r.is_zero() {
                break;
            }
            m = q;
            v += 1;
        }
        PadicNumber { p, val: base_val + v as i64, unit: m, relprec: digits - v }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_prime(other);
        let p = self.p;
        let a = self.absprec().min(other.absprec());
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::tracked_zero(p, a),
            (true, false) => other.truncate_abs(a),
            (false, true) => self.truncate_abs(a),
            (false, false) => {
                let vmin = self.val.min(other.val);
                if a <= vmin {
                    return Self::tracked_zero(p, a);
                }
                let digits = (a - vmin) as u32;
                let modulus = pow_p(p, digits);
                let lift = |x: &Self| -> BigUint {
                    let shift = (x.val - vmin) as u32;
                    if shift >= digits {
                        BigUint::zero()
                    } else {
                        (&x.unit * pow_p(p, shift)) % &modulus
                    }
                };
                let s = (lift(self) + lift(other)) % &modulus;
                Self::normalize(p, vmin, s, digits)
            }
        }
    }

    /// Forget digits beyond absolute precision `a`.
    fn truncate_abs(&self, a: i64) -> Self {
        if self.is_zero() {
            return Self::tracked_zero(self.p, self.val.min(a));
        }
        if a <= self.val {
            return Self::tracked_zero(self.p, a);
        }
        let r = ((a - self.val) as u32).min(self.relprec);
        if r == self.relprec {
            return self.clone();
        }
        PadicNumber { p: self.p, val: self.val, unit: &self.unit % pow_p(self.p, r), relprec: r }
    }

    pub fn neg(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let modulus = pow_p(self.p, self.relprec);
        PadicNumber { p: self.p, val: self.val, unit: modulus - &self.unit, relprec: self.relprec }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_prime(other);
        let p = self.p;
        match (self.is_zero(), other.is_zero()) {
            (true, true) => Self::tracked_zero(p, self.val.saturating_add(other.val)),
            (true, false) => Self::tracked_zero(p, self.val.saturating_add(other.val)),
            (false, true) => Self::tracked_zero(p, other.val.saturating_add(self.val)),
            (false, false) => {
                let r = self.relprec.min(other.relprec);
                let unit = (&self.unit * &other.unit) % pow_p(p, r);
                PadicNumber { p, val: self.val + other.val, unit, relprec: r }
            }
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.check_prime(other);
        let p = self.p;
        if other.is_zero() {
            let suggested = (2 * self.relprec.max(other.val.clamp(1, 1 << 20) as u32)).max(2);
            return Err(Error::PrecisionExhausted { suggested });
        }
        if self.is_zero() {
            return Ok(Self::tracked_zero(p, self.val.saturating_sub(other.val)));
        }
        let r = self.relprec.min(other.relprec);
        let modulus = BigInt::from(pow_p(p, r));
        let inv = BigInt::from(other.unit.clone()).modinv(&modulus).expect("unit is invertible");
        let unit = (BigInt::from(self.unit.clone()) * inv).mod_floor(&modulus);
        Ok(PadicNumber { p, val: self.val - other.val, unit: unit.to_biguint().unwrap(), relprec: r })
    }

    /// The rational representative p^val * unit with 0 <= unit < p^relprec.
    pub fn to_rational(&self) -> Q {
        if self.is_zero() {
            return Q::zero();
        }
        let u = Q::from_integer(BigInt::from_biguint(Sign::Plus, self.unit.clone()));
        let pv = Q::from_integer(BigInt::from(self.p)).pow(self.val as i32);
        u * pv
    }

    /// Base-p digits of the unit part, least significant first.
    pub fn unit_digits(&self) -> Vec<u8> {
        let pb = BigUint::from(self.p);
        let mut m = self.unit.clone();
        let mut out = Vec::with_capacity(self.relprec as usize);
        for _ in 0..self.relprec {
            let (q, d) = m.div_rem(&pb);
            out.push(d.to_u8().unwrap());
            m = q;
        }
        out
    }

    /// Number of digits, counted from the valuation of `self`, on which the two values agree.
    ///
    /// Bounded above by the precision both inputs justify.
    pub fn agreement_digits(&self, other: &Self) -> i64 {
        let d = self.sub(other);
        let lead = match (self.valuation(), other.valuation()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => return 0,
        };
        let dv = d.valuation().unwrap_or(d.absprec());
        dv - lead
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            if self.val == EXACT {
                return f.write_str("0");
            }
            return write!(f, "O({}^{})", self.p, self.val);
        }
        write!(f, "{}^{} * {} + O({}^{})", self.p, self.val, self.unit, self.p, self.absprec())
    }
}

/// binom(lam, n) in Q_p at `prec` digits, by the running product (lam - j)/(j + 1).
pub fn padic_binom(lam: &Q, n: u64, p: u64, prec: u32) -> Result<PadicNumber> {
    require_prime(p)?;
    if vp_rational(lam, p) < Valuation::int(0) {
        return Err(Error::Domain(alloc::format!("{lam} is not a {p}-adic integer")));
    }
    let mut acc = PadicNumber::from_int(1, p, prec);
    for j in 0..n {
        let top = lam - Q::from_integer(BigInt::from(j));
        if top.is_zero() {
            return Ok(PadicNumber::zero(p));
        }
        let num = PadicNumber::from_rational(&top, p, prec);
        let den = PadicNumber::from_int(j as i64 + 1, p, prec);
        acc = acc.mul(&num).div(&den)?;
    }
    Ok(acc)
}
