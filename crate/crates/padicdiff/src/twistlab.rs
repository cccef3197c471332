//! Twisting by a d-th root of a rational function u.
//!
//! With z = u^{-1/d}, h^{[n]} = z^{-1} d^{[n]}(z) and the twist is
//! theta(d^{[n]}) = sum_a h^{[n-a]} d^{[a]}. Everything stays in Q(x).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::affinoid_norms::{sup_norm, Cheese};
use crate::padic_core::{binomial, varpi_valuation, vp_factorial, vp_rational, Valuation};
use crate::ratfun::{poles_unit_separated, Factored, FirstOrderOperator, MobiusMap, RatFun};
use crate::skewalg::{factorial, SkewLaurentSeries, Tag, Tail};
use crate::{Error, Result, Q};

/// The sequence h^{[0..=N]} for a pair (u, d).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistData {
    p: u64,
    u: Factored,
    d: i64,
    h: Vec<RatFun>,
}

/// h^{[n]} for n <= depth, by (l+1) h^{[l+1]} = (h^{[l]})' + h^{[1]} h^{[l]}.
pub fn h_sequence(p: u64, u: &Factored, d: i64, depth: usize) -> Result<TwistData> {
    if d == 0 || d.rem_euclid(p as i64) == 0 {
        return Err(Error::InvalidParameter(format!("d = {d} must be nonzero and prime to p = {p}")));
    }
    let mut td = TwistData { p, u: u.clone(), d, h: vec![RatFun::one()] };
    td.extend(depth);
    Ok(td)
}

impl TwistData {
    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn u(&self) -> &Factored {
        &self.u
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.h.len() - 1
    }

    pub fn h(&self, n: usize) -> Result<&RatFun> {
        self.h.get(n).ok_or_else(|| Error::InvalidParameter(format!("h depth {} < {n}", self.depth())))
    }

    pub fn extend(&mut self, depth: usize) {
        if self.h.len() == 1 && depth >= 1 {
            self.h.push(self.u.dlog().scale(&-Q::new(BigInt::one(), BigInt::from(self.d))));
        }
        while self.h.len() <= depth {
            let l = self.h.len() - 1;
            let next = self.h[l].derivative().add(&self.h[1].mul(&self.h[l]));
            self.h.push(next.scale(&Q::new(BigInt::one(), BigInt::from(l as i64 + 1))));
        }
    }

    /// Gauss valuations of the stored h are meaningful bounds: poles
    /// p-integral and unit-separated, every h^{[n]} of valuation >= 0.
    pub fn is_integral(&self) -> bool {
        poles_unit_separated(self.u.divisor().keys(), self.p)
            && self.h.iter().all(|h| h.gauss_valuation(self.p) >= Valuation::int(0))
    }
}

/// binom(-k/d, n) (x - a)^{-n}
pub fn h_monomial_closed_form(a: &Q, k: i64, d: i64, n: usize) -> RatFun {
    let c = binomial(&Q::new(BigInt::from(-k), BigInt::from(d)), n as u64);
    if n == 0 {
        RatFun::constant(c)
    } else {
        RatFun::pole_power(a.clone(), n, c)
    }
}

/// (l+1) h^{[l+1]} = sum_{n<=l} h^{[n]} d^{[l-n]}(h^{[1]})
pub fn h_recurrence_a_holds(td: &TwistData, l: usize) -> Result<bool> {
    let lhs = td.h(l + 1)?.scale(&Q::from_integer(BigInt::from(l as i64 + 1)));
    let h1 = td.h(1)?;
    let mut rhs = RatFun::zero();
    let mut dh = h1.clone();
    for k in 0..=l {
        if k > 0 {
            dh = dh.derivative();
        }
        // d^{[k]}(h1) = h1^{(k)} / k!
        let term = td.h(l - k)?.mul(&dh).scale(&Q::from_integer(factorial(k as u64)).recip());
        rhs = rhs.add(&term);
    }
    Ok(lhs == rhs)
}

/// theta(d) = d + h^{[1]}
pub fn theta_d(td: &TwistData) -> Result<SkewLaurentSeries> {
    SkewLaurentSeries::from_terms(td.p, 0, 1, [(0, td.h(1)?.clone()), (1, RatFun::one())])
}

/// theta applied to an exact operator sum_n a_n d^n with nonnegative window.
pub fn theta_apply(td: &TwistData, q: &SkewLaurentSeries) -> Result<SkewLaurentSeries> {
    let (lo, hi) = q.window();
    if lo < 0 || !q.is_exact() {
        return Err(Error::Domain("theta acts on exact operators with nonnegative window".into()));
    }
    if (hi as usize) > td.depth() {
        return Err(Error::InvalidParameter(format!("h depth {} below operator degree {hi}", td.depth())));
    }
    let mut out = SkewLaurentSeries::zero(td.p, 0, hi)?;
    let mut acc: Vec<RatFun> = vec![RatFun::zero(); hi as usize + 1];
    for (n, a) in q.terms() {
        if a.is_zero() {
            continue;
        }
        // a d^n = a n! d^{[n]} -> a sum_al (n!/al!) h^{[n-al]} d^al
        let nf = factorial(n as u64);
        for al in 0..=n {
            let s = Q::from_integer(nf.clone()) / Q::from_integer(factorial(al as u64));
            let term = a.mul(td.h((n - al) as usize)?).scale(&s);
            acc[al as usize] = acc[al as usize].add(&term);
        }
    }
    for (k, c) in acc.into_iter().enumerate() {
        out.set_coeff(k as i64, c, Tag::Exact)?;
    }
    Ok(out)
}

/// xi = sum_{n=1}^{K} (-1)^{n-1} (n-1)! h^{[n-1]} d^{-n}, with the omitted tail bounded by v_p(K!).
pub fn xi_build(td: &TwistData, k_neg: usize) -> Result<SkewLaurentSeries> {
    if k_neg == 0 {
        return Err(Error::InvalidParameter("K_neg must be positive".into()));
    }
    let mut td = td.clone();
    td.extend(k_neg);
    let mut out = xi_finite(&td, k_neg)?;
    let tail = if td.h.iter().all(|h| h.is_polynomial()) && td.h.iter().skip(1).all(|h| h.is_zero()) {
        Tail::Zero
    } else if td.is_integral() {
        Tail::Bounded { val: Valuation::int(vp_factorial(k_neg as u64, td.p) as i64), shape: None }
    } else {
        Tail::Unknown
    };
    out = out.with_lower_tail(tail);
    Ok(out)
}

fn xi_finite(td: &TwistData, k_neg: usize) -> Result<SkewLaurentSeries> {
    let mut out = SkewLaurentSeries::zero(td.p, -(k_neg as i64), -1)?;
    for n in 1..=k_neg {
        let sign = if n % 2 == 1 { Q::one() } else { -Q::one() };
        let c = td.h(n - 1)?.scale(&(Q::from_integer(factorial(n as u64 - 1)) * sign));
        out.set_coeff(-(n as i64), c, Tag::Exact)?;
    }
    Ok(out)
}

/// Residual coefficient of xi*theta(d) - 1 and theta(d)*xi - 1 at one degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualRow {
    pub degree: i64,
    pub left: Valuation,
    pub right: Valuation,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualReport {
    pub k_neg: usize,
    pub threshold: Valuation,
    pub rows: Vec<ResidualRow>,
}

impl ResidualReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.left >= self.threshold && r.right >= self.threshold)
    }

    fn at_offset(&self, off: i64) -> Option<&ResidualRow> {
        self.rows.iter().find(|r| r.degree == -(self.k_neg as i64) - off)
    }

    /// Residuals at equal offsets below the truncation point are no larger in `finer`
    /// and strictly smaller wherever `self` is nonzero.
    pub fn shrinks_to(&self, finer: &ResidualReport) -> bool {
        self.rows.iter().all(|r| {
            let off = -(self.k_neg as i64) - r.degree;
            match finer.at_offset(off) {
                Some(f) => {
                    let ok = |a: Valuation, b: Valuation| a.is_infinite() || b > a;
                    ok(r.left, f.left) && ok(r.right, f.right)
                }
                None => true,
            }
        })
    }
}

/// Two-sided residuals of the truncated microlocal inverse, down to
/// degree -K_neg - extra; nonzero only at degrees <= -K_neg.
pub fn micro_inverse_residual(td: &TwistData, k_neg: usize, extra: usize) -> Result<ResidualReport> {
    let mut td = td.clone();
    td.extend(k_neg);
    let xi = xi_finite(&td, k_neg)?;
    let th = theta_d(&td)?;
    let lo = -(k_neg as i64) - extra as i64;
    let left = xi.star(&th, lo)?;
    let right = th.star(&xi, lo)?;
    let p = td.p;
    let mut rows = Vec::new();
    for k in lo..=0 {
        let one = if k == 0 { RatFun::one() } else { RatFun::zero() };
        let l = left.coeff(k).sub(&one);
        let r = right.coeff(k).sub(&one);
        rows.push(ResidualRow { degree: k, left: l.gauss_valuation(p), right: r.gauss_valuation(p) });
    }
    let threshold = Valuation::int(vp_factorial(k_neg.saturating_sub(2) as u64, p) as i64);
    Ok(ResidualReport { k_neg, threshold, rows })
}

/// A first-order operator f d + g as a series.
pub fn operator_series(p: u64, op: &FirstOrderOperator) -> Result<SkewLaurentSeries> {
    SkewLaurentSeries::from_terms(p, 0, 1, [(0, op.d0.clone()), (1, op.d1.clone())])
}

/// P.z / z = sum_n binom(k/d, n) n! P_n (x-a)^{-n} for z = (x-a)^{k/d}.
pub fn pz_direct(a: &Q, k: i64, d: i64, q: &SkewLaurentSeries) -> RatFun {
    let e = Q::new(BigInt::from(k), BigInt::from(d));
    let mut acc = RatFun::zero();
    for (n, pn) in q.terms() {
        if n < 0 || pn.is_zero() {
            continue;
        }
        let c = binomial(&e, n as u64) * Q::from_integer(factorial(n as u64));
        acc = acc.add(&pn.mul(&RatFun::shifted_power(a, -n, c)));
    }
    acc
}

/// The same quantity through the twist: theta_{u^{-1},d}(P)(1).
pub fn pz_via_theta(p: u64, a: &Q, k: i64, d: i64, q: &SkewLaurentSeries) -> Result<RatFun> {
    let (_, hi) = q.window();
    let td = h_sequence(p, &Factored::monomial(a.clone(), -k), d, hi.max(0) as usize)?;
    Ok(theta_apply(&td, q)?.apply_to_function(&RatFun::one())?.0)
}

/// Coefficients (n - k/d) Q_n + (x - a) Q_{n-1} of Q * ((x-a) d - k/d).
pub fn qr_direct(a: &Q, k: i64, d: i64, q: &SkewLaurentSeries) -> Result<SkewLaurentSeries> {
    let (lo, hi) = q.window();
    let e = Q::new(BigInt::from(k), BigInt::from(d));
    let lin = RatFun::from_poly(vec![-a.clone(), Q::one()]);
    let mut terms = Vec::new();
    for n in lo..=hi + 1 {
        let c = q.coeff(n).scale(&(Q::from_integer(BigInt::from(n)) - &e)).add(&lin.mul(&q.coeff(n - 1)));
        terms.push((n, c));
    }
    SkewLaurentSeries::from_terms(q.prime(), lo, hi + 1, terms)
}

/// beta(g) = sum_n (g.x - x)^n d^{[n]} truncated at degree N.
pub fn beta_build(p: u64, g: &MobiusMap, n: usize) -> Result<SkewLaurentSeries> {
    let w = g.displacement();
    let mut out = SkewLaurentSeries::zero(p, 0, n as i64)?;
    let mut pw = RatFun::one();
    for k in 0..=n {
        if k > 0 {
            pw = pw.mul(&w);
        }
        out.set_coeff(k as i64, pw.scale(&Q::from_integer(factorial(k as u64)).recip()), Tag::Exact)?;
    }
    if w.is_zero() {
        return Ok(out);
    }
    // coefficient of d^m is w^m/m!, of valuation >= m (v(w) - 1/(p-1))
    let gw = w.gauss_valuation(p);
    let slope = gw.finite().map(|v| v - varpi_valuation(p));
    let tail = match slope {
        Some(s) if s > Rational64::zero() && poles_unit_separated(w.poles(), p) => Tail::Bounded {
            val: Valuation::Finite(s * Rational64::from_integer(n as i64 + 1)),
            shape: w.poly_degree().filter(|d| *d <= 1).map(|d| d as i64 - 1),
        },
        _ => Tail::Unknown,
    };
    Ok(out.with_upper_tail(tail))
}

/// Membership of g in G_r on the cheese X: |g.x - x|_X < varpi / r.
pub fn in_g_r(g: &MobiusMap, log_r: Rational64, x: &Cheese) -> Result<bool> {
    let v = sup_norm(&g.displacement(), x)?;
    Ok(v > Valuation::Finite(varpi_valuation(x.prime()) + log_r))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigmaRhoReport {
    /// (m, beta(g)(x^m) == (g.x)^m)
    pub rows: Vec<(u32, bool)>,
}

impl SigmaRhoReport {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.1)
    }
}

/// beta(g) applied to x^m against (g.x)^m.
pub fn sigma_rho_check(p: u64, g: &MobiusMap, m_max: u32, n: usize) -> Result<SigmaRhoReport> {
    let beta = beta_build(p, g, n.max(m_max as usize))?;
    let gx = g.act_x();
    let mut rows = Vec::new();
    for m in 0..=m_max {
        let (v, tag) = beta
            .truncate(0, n.max(m_max as usize) as i64)?
            .with_upper_tail(Tail::Zero)
            .apply_to_function(&RatFun::monomial(Q::one(), m as i64))?;
        rows.push((m, tag.is_exact() && v == gx.pow(m)));
    }
    Ok(SigmaRhoReport { rows })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomomorphismReport {
    /// degrees whose product coefficient is certified exact
    pub certified: Vec<i64>,
    /// certified degrees where beta(gh) and beta(g)*beta(h) differ
    pub mismatches: Vec<i64>,
}

impl HomomorphismReport {
    pub fn passes(&self, through: i64) -> bool {
        self.mismatches.is_empty() && (0..=through).all(|k| self.certified.contains(&k))
    }
}

/// beta(gh) against beta(g) * beta(h) on every certified degree.
pub fn beta_homomorphism_check(p: u64, g: &MobiusMap, h: &MobiusMap, n: usize) -> Result<HomomorphismReport> {
    let bg = beta_build(p, g, n)?;
    let bh = beta_build(p, h, n)?;
    let prod = bg.star(&bh, 0)?;
    let bgh = beta_build(p, &g.compose(h), 2 * n)?;
    let mut certified = Vec::new();
    let mut mismatches = Vec::new();
    for k in 0..=2 * n as i64 {
        if prod.tag(k).is_exact() {
            certified.push(k);
            if prod.coeff(k) != bgh.coeff(k) {
                mismatches.push(k);
            }
        }
    }
    Ok(HomomorphismReport { certified, mismatches })
}

/// Coefficients of beta(g) * beta(g^{-1}) - 1 on certified degrees.
pub fn beta_inverse_residual(p: u64, g: &MobiusMap, n: usize) -> Result<Vec<(i64, bool)>> {
    let prod = beta_build(p, g, n)?.star(&beta_build(p, &g.inverse(), n)?, 0)?;
    let mut rows = Vec::new();
    for k in 0..=n as i64 {
        let one = if k == 0 { RatFun::one() } else { RatFun::zero() };
        rows.push((k, prod.tag(k).is_exact() && prod.coeff(k) == one));
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CocycleReport {
    /// c_N = sum_{m<=N} (g.x - x)^m h^{[m]}
    pub c: RatFun,
    /// lower bound for every truncation defect below
    pub bound: Valuation,
    /// min valuation over a of [theta(beta_N) - c_N beta_N] at d^{[a]}
    pub theta_beta_defect: Valuation,
    /// min valuation of the t = 1/x coefficients of c_N^d - u/(g.u) through t^N
    pub power_defect: Valuation,
    /// c_N - 1 has positive Gauss valuation
    pub small_unit: bool,
}

impl CocycleReport {
    pub fn passes(&self) -> bool {
        self.small_unit && self.theta_beta_defect >= self.bound && self.power_defect >= self.bound
    }
}

/// The truncated cocycle c_{u,d}(g) for upper triangular g and its defining identities.
pub fn cocycle(td: &TwistData, g: &MobiusMap, n: usize) -> Result<CocycleReport> {
    if !g.is_upper_triangular() {
        return Err(Error::Domain("cocycle checks need upper triangular g".into()));
    }
    let p = td.p;
    let mut td = td.clone();
    td.extend(n);
    let w = g.displacement();
    let mut c = RatFun::zero();
    let mut partial = Vec::with_capacity(n + 1);
    let mut pw = RatFun::one();
    for m in 0..=n {
        if m > 0 {
            pw = pw.mul(&w);
        }
        c = c.add(&pw.mul(td.h(m)?));
        partial.push(c.clone());
    }
    let gw = w.gauss_valuation(p);
    // every omitted term carries w^m with m > N
    let bound = match gw.finite() {
        Some(v) if td.is_integral() => Valuation::Finite(v * Rational64::from_integer(n as i64 + 1)),
        Some(_) => Valuation::int(0),
        None => Valuation::Infinite,
    };

    // theta(beta_N) at d^{[a]} is c_{N-a} w^a; c_N beta_N has c_N w^a
    let beta = beta_build(p, g, n)?.with_upper_tail(Tail::Zero);
    let tb = theta_apply(&td, &beta)?;
    let mut theta_beta_defect = Valuation::Infinite;
    for a in 0..=n as i64 {
        let af = Q::from_integer(factorial(a as u64));
        let lhs = tb.coeff(a).scale(&af);
        let rhs = c.mul(&beta.coeff(a).scale(&af));
        theta_beta_defect = theta_beta_defect.min(lhs.sub(&rhs).gauss_valuation(p));
    }

    let ratio = td.u.mul(&td.u.mobius_act(g).inv());
    let (cd, target) = if td.d > 0 {
        (c.pow(td.d as u32), ratio.to_ratfun())
    } else {
        (c.pow((-td.d) as u32), ratio.inv().to_ratfun())
    };
    let diff = cd.sub(&target).expand_at_infinity(n + 1);
    let mut power_defect = Valuation::Infinite;
    for e in diff.lowest..=n as i64 {
        power_defect = power_defect.min(vp_rational(&diff.coeff(e), p));
    }
    let small_unit = c.sub(&RatFun::one()).gauss_valuation(p) > Valuation::int(0);
    Ok(CocycleReport { c, bound, theta_beta_defect, power_defect, small_unit })
}

/// Gauss valuation of c_{uv,d}(g) - c_{u,d}(g) c_{v,d}(g) after truncation at N.
pub fn cocycle_product_defect(tu: &TwistData, tv: &TwistData, g: &MobiusMap, n: usize) -> Result<Valuation> {
    if tu.d != tv.d || tu.p != tv.p {
        return Err(Error::InvalidParameter("cocycles over different (p, d)".into()));
    }
    let tuv = h_sequence(tu.p, &tu.u.mul(&tv.u), tu.d, n)?;
    let cu = cocycle(tu, g, n)?.c;
    let cv = cocycle(tv, g, n)?.c;
    let cuv = cocycle(&tuv, g, n)?.c;
    let diff = cuv.sub(&cu.mul(&cv));
    if g.displacement().as_constant().is_some() {
        // translations: exact through t^N at infinity
        let e = diff.expand_at_infinity(n + 1);
        let mut v = Valuation::Infinite;
        for k in e.lowest..=n as i64 {
            v = v.min(vp_rational(&e.coeff(k), tu.p));
        }
        return Ok(v);
    }
    Ok(diff.gauss_valuation(tu.p))
}
