//! Carries in p-adic addition, Kummer valuations of binomials, and the
//! dominant-term analysis of the sum
//! `sum_r binom(k/(q+1), r) binom(qk/(q+1) - (q-1) r, (n-r)(q-1)) / ((n-r)(q-1)+1)`
//! at the special indices `n_N`.

use alloc::format;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};

use crate::padic_core::{require_prime, vp_i128, PadicNumber, Valuation};
use crate::{Error, Result, Q};

/// Lazily generated base-p digits of a rational p-adic integer `num/den`.
///
/// Invariant: after emitting i digits, `num/den` is the i-fold shifted tail.
#[derive(Clone, Debug)]
pub struct DigitStream {
    p: i128,
    num: i128,
    den: i128,
    inv_den: i128,
    digits: Vec<u8>,
}

impl DigitStream {
    pub fn new(num: i128, den: i128, p: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        let p = p as i128;
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        if den % p == 0 {
            return Err(Error::Domain(format!("{num}/{den} is not a {p}-adic integer")));
        }
        let bound = i128::MAX / (4 * p);
        if num.abs() > bound || den > bound {
            return Err(Error::Domain("digit stream operands too large".into()));
        }
        let inv_den = mod_inverse(den.rem_euclid(p), p).expect("den prime to p");
        Ok(DigitStream { p, num, den, inv_den, digits: Vec::new() })
    }

    pub fn from_rational(x: &Q, p: u64) -> Result<Self> {
        let num = x.numer().to_i128().ok_or_else(|| Error::Domain("numerator too large".into()))?;
        let den = x.denom().to_i128().ok_or_else(|| Error::Domain("denominator too large".into()))?;
        Self::new(num, den, p)
    }

    pub fn digit(&mut self, i: usize) -> u8 {
        while self.digits.len() <= i {
            let d = (self.num.rem_euclid(self.p) * self.inv_den).rem_euclid(self.p);
            self.num = (self.num - d * self.den) / self.p;
            self.digits.push(d as u8);
        }
        self.digits[i]
    }

    /// True when the value is a negative integer.
    pub fn negative_integer(&self) -> Option<i128> {
        if self.digits.is_empty() && self.num < 0 && self.num % self.den == 0 {
            Some(self.num / self.den)
        } else {
            None
        }
    }
}

fn mod_inverse(a: i128, m: i128) -> Option<i128> {
    let (mut r0, mut r1) = (m, a.rem_euclid(m));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        None
    } else {
        Some(t0.rem_euclid(m))
    }
}

fn base_digits(mut n: u128, b: u128) -> Vec<u8> {
    let mut out = Vec::new();
    while n > 0 {
        out.push((n % b) as u8);
        n /= b;
    }
    out
}

/// Carry bits of `lam + n`, computed until carrying provably stops.
///
/// Returns `None` when carrying never stops (lam a negative integer with n >= -lam).
fn carry_bits(lam: &mut DigitStream, n: u128, p: u64) -> Option<Vec<u8>> {
    if let Some(neg) = lam.negative_integer() {
        if n as i128 >= -neg {
            return None;
        }
    }
    let nd = base_digits(n, p as u128);
    let mut bits = Vec::new();
    let mut carry = 0u8;
    let mut i = 0usize;
    loop {
        if i >= nd.len() && carry == 0 {
            break;
        }
        let ni = nd.get(i).copied().unwrap_or(0);
        let s = lam.digit(i) as u64 + ni as u64 + carry as u64;
        carry = (s > p - 1) as u8;
        bits.push(carry);
        i += 1;
    }
    while bits.last() == Some(&0) {
        bits.pop();
    }
    Some(bits)
}

/// Number of carries in `lam + n`, or `None` when it is infinite.
pub fn carry_count(lam: &mut DigitStream, n: u128, p: u64) -> Option<u64> {
    carry_bits(lam, n, p).map(|b| b.iter().map(|&x| x as u64).sum())
}

/// Carry data of the p-adic addition `lam + n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CarryProfile {
    pub p: u64,
    pub lam: Q,
    pub n: u64,
    /// gamma_0 .. gamma_{m-1}
    pub gamma: Vec<u8>,
    /// Position after which no carry occurs; `None` means infinity.
    pub last: Option<u64>,
    /// noncarries[j] = #{ i < j : gamma_i = 0 } for j = 0..=m
    pub noncarries: Vec<u64>,
}

pub fn carry_profile(lam: &Q, n: u64, m: usize, p: u64) -> Result<CarryProfile> {
    require_prime(p)?;
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    let mut stream = DigitStream::from_rational(lam, p)?;
    let bits = carry_bits(&mut stream.clone(), n as u128, p);
    let gamma: Vec<u8> = match &bits {
        Some(b) => (0..m).map(|i| b.get(i).copied().unwrap_or(0)).collect(),
        None => {
            // Carrying never stops; generate the prefix directly.
            let nd = base_digits(n as u128, p as u128);
            let mut carry = 0u8;
            (0..m)
                .map(|i| {
                    let s = stream.digit(i) as u64 + nd.get(i).copied().unwrap_or(0) as u64 + carry as u64;
                    carry = (s > p - 1) as u8;
                    carry
                })
                .collect()
        }
    };
    let mut noncarries = Vec::with_capacity(m + 1);
    noncarries.push(0);
    for g in &gamma {
        let last = *noncarries.last().unwrap();
        noncarries.push(last + (*g == 0) as u64);
    }
    Ok(CarryProfile { p, lam: lam.clone(), n, gamma, last: bits.map(|b| b.len() as u64), noncarries })
}

/// v_p of binom(lam + n, n) as the total number of carries in `lam + n`.
pub fn vp_binom_kummer(lam: &Q, n: u64, p: u64) -> Result<Valuation> {
    require_prime(p)?;
    let mut s = DigitStream::from_rational(lam, p)?;
    Ok(match carry_count(&mut s, n as u128, p) {
        Some(c) => Valuation::int(c as i64),
        None => Valuation::Infinite,
    })
}

/// Which digit pattern of the special index applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternCase {
    /// 1 <= k <= q-2
    A,
    /// k = q-1, q > 2
    B,
    /// k = 1, q = 2
    C,
    /// k = 2, q = 2
    D,
    /// k = q > 2
    E,
}

impl PatternCase {
    pub fn of(q: u64, k: u64) -> PatternCase {
        if q == 2 {
            if k == 1 {
                PatternCase::C
            } else {
                PatternCase::D
            }
        } else if k == q {
            PatternCase::E
        } else if k == q - 1 {
            PatternCase::B
        } else {
            PatternCase::A
        }
    }

    pub fn label(self) -> char {
        match self {
            PatternCase::A => 'a',
            PatternCase::B => 'b',
            PatternCase::C => 'c',
            PatternCase::D => 'd',
            PatternCase::E => 'e',
        }
    }

    /// Offset of M below N.
    pub fn m_offset(self) -> u32 {
        match self {
            PatternCase::A | PatternCase::E => 1,
            PatternCase::B | PatternCase::D => 2,
            PatternCase::C => 3,
        }
    }

    /// Required parity of M (true = odd).
    pub fn m_odd(self) -> bool {
        matches!(self, PatternCase::A | PatternCase::C)
    }

    /// Patterns of the base-q digits of s and of k/(q+1) - s.
    fn patterns(self, q: u64, k: u64) -> (DigitPattern, DigitPattern) {
        use alloc::vec;
        match self {
            PatternCase::A => ((vec![q - 1], [q - k - 2, q - 2]), (vec![], [k + 1, 1])),
            PatternCase::B => ((vec![q - 1], [q - 1, q - 3]), (vec![], [0, 2])),
            PatternCase::C => ((vec![1, 1], [1, 0]), (vec![0, 0], [1, 0])),
            PatternCase::D => ((vec![1, 0, 1], [1, 0]), (vec![1, 0, 0], [1, 0])),
            PatternCase::E => ((vec![q - 1], [q - 2, q - 3]), (vec![], [1, 2])),
        }
    }
}

/// A digit prefix followed by a repeating pair.
type DigitPattern = (Vec<u64>, [u64; 2]);

fn expand_pattern(prefix: &[u64], rep: [u64; 2], len: usize) -> Vec<u64> {
    (0..len).map(|i| if i < prefix.len() { prefix[i] } else { rep[(i - prefix.len()) % 2] }).collect()
}

/// The special index n_N together with M_n and s_n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecialIndex {
    pub p: u64,
    pub f: u32,
    pub q: u64,
    pub k: u64,
    pub big_n: u32,
    pub n: u64,
    pub m: u32,
    pub s: u64,
}

/// Parity rule on N: even when 1 <= k <= q-1 or k = q = 2, odd when k = q > 2.
pub fn parity_ok(q: u64, k: u64, big_n: u32) -> bool {
    let want_odd = k == q && q > 2;
    (big_n % 2 == 1) == want_odd
}

pub const PARITY_RULE: &str = "N must be even when 1 <= k <= q-1 or k = q = 2, and odd when k = q > 2";

pub fn special_index(p: u64, f: u32, k: u64, big_n: u32) -> Result<SpecialIndex> {
    require_prime(p)?;
    if f == 0 {
        return Err(Error::InvalidParameter("f must be at least 1".into()));
    }
    let q = p.checked_pow(f).ok_or_else(|| Error::InvalidParameter("q = p^f overflows".into()))?;
    if k < 1 || k > q {
        return Err(Error::InvalidParameter(format!("k = {k} must satisfy 1 <= k <= q = {q}")));
    }
    if big_n < 6 {
        return Err(Error::InvalidParameter(format!("N = {big_n} must be at least 6")));
    }
    if !parity_ok(q, k, big_n) {
        return Err(Error::InvalidParameter(format!("N = {big_n} with q = {q}, k = {k}: {PARITY_RULE}")));
    }
    let modulus = (q as u128)
        .checked_pow(big_n)
        .filter(|&m| m < (1u128 << 62))
        .ok_or_else(|| Error::InvalidParameter(format!("q^N = {q}^{big_n} exceeds 2^62")))?;
    let m128 = modulus as i128;
    let inv = mod_inverse(((q * q - 1) as i128).rem_euclid(m128), m128).expect("q^2-1 prime to q");
    let mut n = ((q * k) as i128 * inv).rem_euclid(m128) as u64;
    if n == 0 {
        n = modulus as u64;
    }
    let mut m = 0u32;
    let mut partial = 1u64; // 1 + q + ... + q^m
    let mut qpow = 1u64;
    loop {
        let next = partial + qpow * q;
        if next > n {
            break;
        }
        qpow *= q;
        partial = next;
        m += 1;
    }
    let s = n - partial;
    let idx = SpecialIndex { p, f, q, k, big_n, n, m, s };
    let want = big_n - PatternCase::of(q, k).m_offset();
    if m != want {
        return Err(Error::CheckFailed(format!("M = {m} but the case table gives {want} for q={q}, k={k}, N={big_n}")));
    }
    Ok(idx)
}

impl SpecialIndex {
    pub fn case(&self) -> PatternCase {
        PatternCase::of(self.q, self.k)
    }

    /// Rough count of p-adic multiplications needed by [`sum_estimate`].
    pub fn cost_estimate(&self) -> u64 {
        self.n.saturating_mul(self.q + 2)
    }

    /// lam = k/(q+1) as (numerator, denominator).
    fn lam(&self) -> (i128, i128) {
        (self.k as i128, self.q as i128 + 1)
    }

    /// alpha = qk/(q+1) - n(q-1) as (numerator, denominator).
    fn alpha(&self) -> (i128, i128) {
        let q = self.q as i128;
        (q * self.k as i128 - self.n as i128 * (q * q - 1), q + 1)
    }

    /// v_p((n-r)(q-1)+1).
    pub fn denom_valuation(&self, r: u64) -> u32 {
        denom_valuation(self.n, r, self.q, self.p)
    }

    /// Kummer valuation of the r-th summand.
    pub fn term_valuation(&self, r: u64) -> Valuation {
        let (ln, ld) = self.lam();
        let (an, ad) = self.alpha();
        let mut lam_minus_r = DigitStream::new(ln - r as i128 * ld, ld, self.p).expect("p-adic integer");
        let mut alpha = DigitStream::new(an, ad, self.p).expect("p-adic integer");
        let b = (self.n - r) as u128 * (self.q as u128 - 1);
        let c1 = carry_count(&mut lam_minus_r, r as u128, self.p);
        let c2 = carry_count(&mut alpha, b, self.p);
        match (c1, c2) {
            (Some(a), Some(b)) => Valuation::int(a as i64 + b as i64 - self.denom_valuation(r) as i64),
            _ => Valuation::Infinite,
        }
    }

    /// Kummer valuation of S_{n,r}.
    pub fn s_valuation(&self, r: u64) -> Valuation {
        let (an, ad) = self.alpha();
        let mut alpha = DigitStream::new(an, ad, self.p).expect("p-adic integer");
        let b = (self.n - r) as u128 * (self.q as u128 - 1);
        match carry_count(&mut alpha, b, self.p) {
            Some(c) => Valuation::int(c as i64),
            None => Valuation::Infinite,
        }
    }

    /// The bound (3 - N)/2 on the dominant valuation.
    pub fn bound(&self) -> Rational64 {
        Rational64::new(3 - self.big_n as i64, 2)
    }
}

/// v_p((n-r)(q-1)+1).
pub fn denom_valuation(n: u64, r: u64, q: u64, p: u64) -> u32 {
    let x = (n - r) as i128 * (q as i128 - 1) + 1;
    vp_i128(x, p).expect("positive")
}

/// Digit-pattern verification for one special index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QExpReport {
    pub case: PatternCase,
    pub s_digits: Vec<u64>,
    pub s_expected: Vec<u64>,
    pub rest_digits: Vec<u64>,
    pub rest_expected: Vec<u64>,
    pub m_parity_ok: bool,
    /// L(lam - s, s) in p-adic digit positions.
    pub carry_stop: u64,
    /// (M+1) f
    pub stop_bound: u64,
    pub last_gamma_zero: bool,
}

impl QExpReport {
    pub fn passes(&self) -> bool {
        self.s_digits == self.s_expected
            && self.rest_digits == self.rest_expected
            && self.m_parity_ok
            && self.carry_stop < self.stop_bound
            && self.last_gamma_zero
    }
}

pub fn qexp_check(idx: &SpecialIndex) -> Result<QExpReport> {
    let len = idx.m as usize + 1;
    let q = idx.q;
    let case = idx.case();
    let s_digits: Vec<u64> = {
        let mut d: Vec<u64> = base_digits(idx.s as u128, q as u128).into_iter().map(u64::from).collect();
        d.resize(len, 0);
        d
    };
    let modulus = (q as i128).pow(len as u32);
    let (ln, ld) = idx.lam();
    let inv = mod_inverse(ld.rem_euclid(modulus), modulus).expect("q+1 prime to q");
    let rest = ((ln - idx.s as i128 * ld).rem_euclid(modulus) * inv).rem_euclid(modulus);
    let mut rest_digits: Vec<u64> = base_digits(rest as u128, q as u128).into_iter().map(u64::from).collect();
    rest_digits.resize(len, 0);
    let ((sp, sr), (rp, rr)) = case.patterns(q, idx.k);
    let profile = carry_profile(
        &Q::new(BigInt::from(ln - idx.s as i128 * ld), BigInt::from(ld)),
        idx.s,
        (idx.m as usize + 1) * idx.f as usize,
        idx.p,
    )?;
    let stop_bound = (idx.m as u64 + 1) * idx.f as u64;
    Ok(QExpReport {
        case,
        s_expected: expand_pattern(&sp, sr, len),
        rest_expected: expand_pattern(&rp, rr, len),
        s_digits,
        rest_digits,
        m_parity_ok: (idx.m % 2 == 1) == case.m_odd(),
        carry_stop: profile.last.unwrap_or(u64::MAX),
        stop_bound,
        last_gamma_zero: profile.gamma[stop_bound as usize - 1] == 0,
    })
}

/// Result of scanning all summands by their Kummer valuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominantScan {
    pub argmin: Vec<u64>,
    pub min: Valuation,
    /// Smallest valuation among r != s.
    pub runner_up: Valuation,
}

impl DominantScan {
    pub fn unique_at(&self, s: u64) -> bool {
        self.argmin == [s]
    }
}

pub fn dominant_scan(idx: &SpecialIndex) -> DominantScan {
    let mut min = Valuation::Infinite;
    let mut argmin = Vec::new();
    let mut runner_up = Valuation::Infinite;
    for r in 0..=idx.n {
        let v = idx.term_valuation(r);
        if r != idx.s && v < runner_up {
            runner_up = v;
        }
        match v.cmp(&min) {
            core::cmp::Ordering::Less => {
                min = v;
                argmin.clear();
                argmin.push(r);
            }
            core::cmp::Ordering::Equal => argmin.push(r),
            _ => {}
        }
    }
    DominantScan { argmin, min, runner_up }
}

/// Sign convention for the summands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SumSign {
    /// All summands added with sign +1.
    Unsigned,
    /// Summand r carries (-1)^(n + (n-r) q): the coefficient of s^n in the
    /// series assembly of the projected zeta series.
    Series,
}

/// Valuations from the capped-precision summation.
#[derive(Clone, Debug)]
pub struct SumEstimate {
    pub index: SpecialIndex,
    pub value: PadicNumber,
    pub v_sum: Valuation,
    /// Kummer valuation of the r = s summand.
    pub v_dominant: Valuation,
    /// Valuation of the r = s summand as computed numerically.
    pub v_dominant_numeric: Valuation,
    pub bound: Rational64,
    pub second_val_ok: bool,
}

impl SumEstimate {
    pub fn passes(&self) -> bool {
        self.v_sum == self.v_dominant
            && self.v_dominant == self.v_dominant_numeric
            && self.v_sum <= Valuation::Finite(self.bound)
            && self.second_val_ok
    }
}

/// Largest N admitted for q = 2 and q = 3; other q are capped by [`MAX_COST`].
pub const MAX_N_Q2: u32 = 12;
pub const MAX_N_Q3: u32 = 10;
pub const MAX_COST: u64 = 400_000;

pub fn check_cost(idx: &SpecialIndex) -> Result<()> {
    let cap = match idx.q {
        2 => Some(MAX_N_Q2),
        3 => Some(MAX_N_Q3),
        _ => None,
    };
    let too_big = match cap {
        Some(c) => idx.big_n > c,
        None => idx.cost_estimate() > MAX_COST,
    };
    if too_big {
        return Err(Error::InvalidParameter(format!(
            "N = {} for q = {} needs about {} p-adic multiplications (n = {}); beyond the desk-scale cap",
            idx.big_n,
            idx.q,
            idx.cost_estimate(),
            idx.n
        )));
    }
    Ok(())
}

/// Reduce (k, d) with d | q+1 to the normalized k' = k (q+1)/d.
pub fn normalize_k(q: u64, k: u64, d: u64) -> Result<u64> {
    if d == 0 || !(q + 1).is_multiple_of(d) {
        return Err(Error::InvalidParameter(format!("d = {d} must divide q + 1 = {}", q + 1)));
    }
    let k2 = k * ((q + 1) / d);
    if k2 < 1 || k2 > q {
        return Err(Error::InvalidParameter(format!("normalized k = {k2} must satisfy 1 <= k <= q = {q}")));
    }
    Ok(k2)
}

/// The full sum evaluated in Q_p at `prec` digits.
///
/// binom(lam, r) is accumulated forward in r and S_{n,r} = <alpha | (n-r)(q-1)>
/// is updated as (n-r)(q-1) grows, so the cost is O(n q) multiplications.
pub fn coefficient_sum(idx: &SpecialIndex, prec: u32, sign: SumSign) -> Result<(PadicNumber, PadicNumber)> {
    let p = idx.p;
    let n = idx.n;
    let q = idx.q as i128;
    let (ln, ld) = idx.lam();
    let (an, ad) = idx.alpha();
    let mut binoms = Vec::with_capacity(n as usize + 1);
    let mut b = PadicNumber::from_int(1, p, prec);
    for r in 0..=n {
        binoms.push(b.clone());
        if r < n {
            let top = ln - r as i128 * ld;
            b = b.mul(&PadicNumber::from_ratio_i128(top, ld, p, prec)).div(&PadicNumber::from_ratio_i128(
                r as i128 + 1,
                1,
                p,
                prec,
            ))?;
        }
    }
    let mut sum = PadicNumber::zero(p);
    let mut dominant = PadicNumber::zero(p);
    let mut s_val = PadicNumber::from_int(1, p, prec);
    let mut big_b: i128 = 0;
    for r in (0..=n).rev() {
        let target = (n - r) as i128 * (q - 1);
        while big_b < target {
            big_b += 1;
            let num = PadicNumber::from_ratio_i128(an + big_b * ad, ad, p, prec);
            s_val = s_val.mul(&num).div(&PadicNumber::from_ratio_i128(big_b, 1, p, prec))?;
        }
        let den = PadicNumber::from_ratio_i128(big_b + 1, 1, p, prec);
        let mut term = binoms[r as usize].mul(&s_val).div(&den)?;
        if sign == SumSign::Series {
            let e = n as i128 + (n - r) as i128 * q;
            if e % 2 != 0 {
                term = term.neg();
            }
        }
        if r == idx.s {
            dominant = term.clone();
        }
        sum = sum.add(&term);
    }
    Ok((sum, dominant))
}

pub fn sum_estimate(idx: &SpecialIndex, prec: u32) -> Result<SumEstimate> {
    check_cost(idx)?;
    let (sum, dominant) = coefficient_sum(idx, prec, SumSign::Unsigned)?;
    let v_dominant = idx.term_valuation(idx.s);
    if sum.is_zero() {
        return Err(Error::PrecisionExhausted { suggested: prec * 2 });
    }
    let v_sum = Valuation::int(sum.valuation().unwrap());
    let v_dominant_numeric = dominant.valuation().map(Valuation::int).unwrap_or(Valuation::Infinite);
    Ok(SumEstimate {
        index: idx.clone(),
        v_sum,
        v_dominant,
        v_dominant_numeric,
        bound: idx.bound(),
        second_val_ok: idx.s_valuation(idx.s) == Valuation::int(0),
        value: sum,
    })
}

/// Exact rational value of the summand r (oracle for small n).
pub fn term_exact(idx: &SpecialIndex, r: u64) -> Q {
    use crate::padic_core::binomial;
    let qq = idx.q as i64;
    let lam = Q::new(BigInt::from(idx.k), BigInt::from(qq + 1));
    let top = Q::new(BigInt::from(qq * idx.k as i64), BigInt::from(qq + 1))
        - Q::from_integer(BigInt::from((qq - 1) * r as i64));
    let bb = (idx.n - r) * (idx.q - 1);
    let den = Q::from_integer(BigInt::from(bb + 1));
    let v = binomial(&lam, r) * binomial(&top, bb) / den;
    debug_assert!(!v.is_zero() || r > idx.n);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic_core::{binomial, vp_factorial, vp_rational};

    fn q(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn carry_profile_examples() {
        let c = carry_profile(&q(5, 1), 7, 2, 3).unwrap();
        assert_eq!(c.gamma, [1, 1]);
        assert_eq!(c.last, Some(2));
        assert_eq!(c.noncarries[2], 0);
        let z = carry_profile(&q(0, 1), 41, 6, 3).unwrap();
        assert!(z.gamma.iter().all(|&g| g == 0));
        assert_eq!(z.last, Some(0));
        let h = carry_profile(&q(-3, 2), 2, 3, 3).unwrap();
        assert_eq!(h.gamma[0], 0);
        assert_eq!(h.last, Some(0));
        let inf = carry_profile(&q(-4, 1), 4, 5, 2).unwrap();
        assert_eq!(inf.last, None);
        assert_eq!(inf.gamma.len(), 5);
    }

    #[test]
    fn kummer_examples() {
        assert_eq!(vp_binom_kummer(&q(5, 1), 7, 3).unwrap(), Valuation::int(2));
        assert_eq!(
            Valuation::int(vp_factorial(12, 3) as i64 - vp_factorial(7, 3) as i64 - vp_factorial(5, 3) as i64),
            Valuation::int(2)
        );
        assert_eq!(vp_binom_kummer(&q(3, 7), 0, 5).unwrap(), Valuation::int(0));
        assert_eq!(vp_binom_kummer(&q(-3, 2), 2, 3).unwrap(), Valuation::int(0));
        assert_eq!(vp_binom_kummer(&q(-2, 1), 5, 3).unwrap(), Valuation::Infinite);
    }

    #[test]
    fn carstop_exhaustive() {
        for lam in -50i64..=50 {
            for n in 0..=100u64 {
                let c = carry_profile(&q(lam, 1), n, 4, 3).unwrap();
                let infinite = lam < 0 && n as i64 >= -lam;
                assert_eq!(c.last.is_none(), infinite, "lam={lam} n={n}");
                if !infinite {
                    let exact = binomial(&q(lam + n as i64, 1), n);
                    assert_eq!(vp_binom_kummer(&q(lam, 1), n, 3).unwrap(), vp_rational(&exact, 3));
                }
            }
        }
    }

    #[test]
    fn special_index_examples() {
        let i = special_index(3, 1, 1, 6).unwrap();
        assert_eq!((i.n, i.m, i.s), (456, 5, 92));
        assert_eq!(special_index(2, 1, 1, 6).unwrap().m, 3);
        assert_eq!(special_index(5, 1, 4, 8).unwrap().m, 6);
        assert!(special_index(3, 1, 1, 7).is_err());
        assert!(special_index(3, 1, 3, 6).is_err());
        assert!(special_index(3, 1, 4, 6).is_err());
        assert!(special_index(3, 1, 1, 4).is_err());
    }

    #[test]
    fn qexp_examples() {
        let r = qexp_check(&special_index(3, 1, 1, 6).unwrap()).unwrap();
        assert_eq!(r.s_digits, [2, 0, 1, 0, 1, 0]);
        assert!(r.passes());
        let r = qexp_check(&special_index(2, 1, 2, 6).unwrap()).unwrap();
        assert_eq!(&r.s_digits[..5], &[1, 0, 1, 1, 0]);
        assert!(r.passes());
    }

    #[test]
    fn qexp_grid_including_prime_powers() {
        for (p, f) in [(2u64, 1u32), (3, 1), (5, 1), (2, 2), (3, 2), (7, 1)] {
            let qq = p.pow(f);
            for k in 1..=qq {
                let odd = k == qq && qq > 2;
                for n in [6u32, 7, 8, 9, 10] {
                    if (n % 2 == 1) != odd {
                        continue;
                    }
                    let idx = special_index(p, f, k, n).unwrap();
                    assert!(qexp_check(&idx).unwrap().passes(), "p={p} f={f} k={k} N={n}");
                }
            }
        }
    }

    #[test]
    fn denom_valuation_examples() {
        assert_eq!(denom_valuation(456, 92, 3, 3), 6);
        assert_eq!(denom_valuation(456, 456, 3, 3), 0);
        assert_eq!(denom_valuation(456, 91, 3, 3), 0);
    }

    #[test]
    fn term_valuation_matches_exact_summand() {
        let idx = special_index(2, 1, 1, 6).unwrap();
        for r in 0..=idx.n {
            assert_eq!(idx.term_valuation(r), vp_rational(&term_exact(&idx, r), 2), "r={r}");
        }
        let idx = special_index(3, 1, 1, 6).unwrap();
        for r in (0..=idx.n).step_by(7) {
            assert_eq!(idx.term_valuation(r), vp_rational(&term_exact(&idx, r), 3), "r={r}");
        }
    }

    #[test]
    fn sum_matches_exact_rational_sum_for_small_index() {
        let idx = special_index(2, 1, 1, 6).unwrap();
        let exact: Q = (0..=idx.n).map(|r| term_exact(&idx, r)).sum();
        let (sum, _) = coefficient_sum(&idx, 40, SumSign::Unsigned).unwrap();
        let e = PadicNumber::from_rational(&exact, 2, 40);
        assert!(sum.agreement_digits(&e) >= 30);
        assert_eq!(Valuation::int(sum.valuation().unwrap()), vp_rational(&exact, 2));
    }

    #[test]
    fn sum_estimate_at_n6() {
        let idx = special_index(3, 1, 1, 6).unwrap();
        let est = sum_estimate(&idx, 60).unwrap();
        assert!(est.passes());
        assert!(est.v_sum <= Valuation::int(-2));
        let again = sum_estimate(&idx, 120).unwrap();
        assert_eq!(again.v_sum, est.v_sum);
        assert!(again.value.agreement_digits(&est.value) >= 55);
        assert!(dominant_scan(&idx).unique_at(idx.s));
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_k(3, 1, 4).unwrap(), 1);
        assert_eq!(normalize_k(5, 1, 3).unwrap(), 2);
        assert!(normalize_k(3, 1, 3).is_err());
        assert!(normalize_k(3, 4, 4).is_err());
    }
}
