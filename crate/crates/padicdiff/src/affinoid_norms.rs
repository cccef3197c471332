//! Cheeses (closed discs minus open holes) with rational centers and
//! p-power radii, and exact sup norms of rational functions on them.
//!
//! Norms are reported as valuations: `|f| = p^{-v}`.

use alloc::format;
use alloc::vec::Vec;

use num_rational::Rational64;
use num_traits::{One, Zero};

use crate::padic_core::{is_prime, varpi_valuation, vp_rational, Valuation};
use crate::ratfun::{qi, MobiusMap, RatFun};
use crate::{Error, Result, Q};

/// A disc of radius p^e around a rational center.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Disc {
    pub center: Q,
    pub e: Rational64,
}

/// Closed outer disc minus pairwise disjoint open holes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cheese {
    p: u64,
    outer: Disc,
    holes: Vec<Disc>,
}

fn log_abs(x: &Q, p: u64) -> Option<Rational64> {
    vp_rational(x, p).finite().map(|v| -v)
}

impl Cheese {
    pub fn new(p: u64, outer: Disc, holes: Vec<Disc>) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidParameter(format!("{p} is not prime")));
        }
        for (i, h) in holes.iter().enumerate() {
            if h.e > outer.e {
                return Err(Error::InvalidParameter("hole larger than the outer disc".into()));
            }
            if log_abs(&(&h.center - &outer.center), p).is_some_and(|l| l > outer.e) {
                return Err(Error::InvalidParameter("hole center outside the outer disc".into()));
            }
            for g in &holes[..i] {
                let dist = log_abs(&(&h.center - &g.center), p);
                // open discs are disjoint iff the centers are at least max(radius) apart
                if dist.is_none_or(|l| l < h.e.max(g.e)) {
                    return Err(Error::InvalidParameter("holes overlap".into()));
                }
            }
        }
        Ok(Cheese { p, outer, holes })
    }

    pub fn unit_disc(p: u64) -> Result<Self> {
        Self::new(p, Disc { center: Q::zero(), e: Rational64::zero() }, Vec::new())
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn outer(&self) -> &Disc {
        &self.outer
    }

    pub fn holes(&self) -> &[Disc] {
        &self.holes
    }

    pub fn with_hole(&self, hole: Disc) -> Result<Self> {
        let mut holes = self.holes.clone();
        holes.push(hole);
        Self::new(self.p, self.outer.clone(), holes)
    }

    /// log_p rho(X): the smallest hole radius, or the outer radius without holes.
    pub fn log_rho(&self) -> Rational64 {
        self.holes.iter().map(|h| h.e).min().unwrap_or(self.outer.e)
    }

    /// log_p r(X) = -log_p rho(X) - 1/(p-1).
    pub fn log_r(&self) -> Rational64 {
        -self.log_rho() - varpi_valuation(self.p)
    }

    /// Strict comparison r > r(X).
    pub fn is_admissible(&self, log_radius: Rational64) -> bool {
        log_radius > self.log_r()
    }

    /// Non-strict comparison r >= r(X).
    pub fn is_dagger_admissible(&self, log_radius: Rational64) -> bool {
        log_radius >= self.log_r()
    }

    /// Image under an upper triangular map acting on points.
    pub fn transform(&self, g: &MobiusMap) -> Result<Self> {
        let rho = g.rho()?;
        let shift = log_abs(&rho, self.p).expect("nonzero rho");
        let move_disc = |d: &Disc| Disc { center: g.act_point(&d.center).unwrap(), e: d.e + shift };
        Self::new(self.p, move_disc(&self.outer), self.holes.iter().map(move_disc).collect())
    }

    /// Sup norm of a rational function on the cheese, as a valuation.
    pub fn sup_norm(&self, f: &RatFun) -> Result<Valuation> {
        sup_norm(f, self)
    }
}

#[derive(Clone, Copy)]
enum Home {
    Outer,
    Hole(usize),
}

struct Term {
    home: Home,
    order: usize,
    coef: Q,
    /// a - center of home
    offset: Q,
    /// slope of the lower bound in the re-expansion index
    slope: Option<Rational64>,
    base: Rational64,
}

/// Sup norm via the Mittag-Leffler expansion on the cheese.
pub fn sup_norm(f: &RatFun, x: &Cheese) -> Result<Valuation> {
    let p = x.p;
    let a0 = &x.outer.center;
    let mut terms: Vec<Term> = Vec::new();
    for (a, part) in f.principal_parts() {
        let home = if let Some(i) = x.holes.iter().position(|h| log_abs(&(a - &h.center), p).is_none_or(|l| l < h.e)) {
            Home::Hole(i)
        } else if log_abs(&(a - a0), p).is_some_and(|l| l > x.outer.e) {
            Home::Outer
        } else {
            return Err(Error::Domain(format!("pole {a} lies on the cheese")));
        };
        for (j, c) in part.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let jj = j + 1;
            let vc = vp_rational(c, p).finite().unwrap();
            let (offset, slope, base) = match home {
                Home::Hole(i) => {
                    let h = &x.holes[i];
                    let off = a - &h.center;
                    let slope = log_abs(&off, p).map(|l| h.e - l);
                    (off, slope, vc + h.e * Rational64::from_integer(jj as i64))
                }
                Home::Outer => {
                    let off = a - a0;
                    let l = log_abs(&off, p).unwrap();
                    (off, Some(l - x.outer.e), vc + l * Rational64::from_integer(jj as i64))
                }
            };
            terms.push(Term { home, order: jj, coef: c.clone(), offset, slope, base });
        }
    }
    // polynomial part around the outer center
    let poly = crate::ratfun::taylor_shift(f.poly_part(), a0);
    let mut best = Valuation::Infinite;
    let weight = |v: Valuation, n: i64, e: Rational64| v.shift(e * Rational64::from_integer(n));
    let max_order = terms.iter().map(|t| t.order).max().unwrap_or(0);
    let mut l: usize = 0;
    loop {
        // outer slot l: (x - a0)^l
        let mut outer = poly.get(l).cloned().unwrap_or_else(Q::zero);
        for t in terms.iter().filter(|t| matches!(t.home, Home::Outer)) {
            // c (x-a)^{-J} = c (-off)^{-J} sum_l binom(J+l-1,l) off^{-l} (x-a0)^l
            let jj = t.order as i64;
            let b = crate::padic_core::binomial_int(jj + l as i64 - 1, l as u64);
            let mut v = &t.coef * Q::from_integer(b) * (-&t.offset).recip().pow(jj as i32);
            v *= t.offset.recip().pow(l as i32);
            outer += v;
        }
        best = best.min(weight(vp_rational(&outer, p), -(l as i64), x.outer.e));
        // hole slots of index n = l + 1
        let n = l + 1;
        for (i, h) in x.holes.iter().enumerate() {
            let mut acc = Q::zero();
            for t in terms.iter().filter(|t| matches!(t.home, Home::Hole(k) if k == i)) {
                if t.order > n {
                    continue;
                }
                let ll = n - t.order;
                if t.offset.is_zero() {
                    if ll == 0 {
                        acc += &t.coef;
                    }
                    continue;
                }
                let b = crate::padic_core::binomial_int(n as i64 - 1, ll as u64);
                acc += &t.coef * Q::from_integer(b) * t.offset.pow(ll as i32);
            }
            best = best.min(weight(vp_rational(&acc, p), n as i64, h.e));
        }
        l += 1;
        if l >= poly.len() && l > max_order {
            // every remaining slot is bounded below by base + (index - order) * slope
            let mut lower = Valuation::Infinite;
            for t in &terms {
                let idx = match t.home {
                    Home::Outer => l as i64,
                    Home::Hole(_) => l as i64 + 1 - t.order as i64,
                };
                if let Some(s) = t.slope {
                    lower = lower.min(Valuation::Finite(t.base + s * Rational64::from_integer(idx)));
                }
            }
            if lower >= best {
                return Ok(best);
            }
        }
        if l > 100_000 {
            return Err(Error::PrecisionExhausted { suggested: 0 });
        }
    }
}

/// Operator norm of d^{[n]} on the cheese and the witness ratio.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DivPowNorm {
    /// valuation of rho^{-n}
    pub value: Valuation,
    /// valuation of |d^{[n]} w| / |w| for the extremal witness w
    pub witness: Valuation,
}

impl DivPowNorm {
    pub fn attained(&self) -> bool {
        self.value == self.witness
    }
}

/// The divided-power operator norm rho^{-n} with a witness attaining it.
pub fn divided_power_norm_check(x: &Cheese, n: u32) -> Result<DivPowNorm> {
    let value = Valuation::Finite(x.log_rho() * Rational64::from_integer(n as i64));
    let (w, dw) = match x.holes.iter().min_by_key(|h| h.e) {
        Some(h) => {
            // d^{[n]} (x-a)^{-1} = (-1)^n (x-a)^{-n-1}
            let sign = if n.is_multiple_of(2) { Q::one() } else { -Q::one() };
            (
                RatFun::pole_power(h.center.clone(), 1, Q::one()),
                RatFun::pole_power(h.center.clone(), n as usize + 1, sign),
            )
        }
        None => {
            let w = RatFun::shifted_power(&x.outer.center, n as i64, Q::one());
            (w, RatFun::one())
        }
    };
    let nw = sup_norm(&w, x)?;
    let ndw = sup_norm(&dw, x)?;
    let witness = match (ndw.finite(), nw.finite()) {
        (Some(a), Some(b)) => Valuation::Finite(a - b),
        _ => Valuation::Infinite,
    };
    Ok(DivPowNorm { value, witness })
}

/// |c|: helper producing an element of absolute value p^{-v} for integer v.
pub fn p_power(p: u64, v: i64) -> Q {
    let pq = qi(p as i64);
    if v >= 0 {
        pq.pow(v as i32)
    } else {
        pq.recip().pow((-v) as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn q(n: i64) -> Q {
        qi(n)
    }

    #[test]
    fn rho_and_r_examples() {
        let x = Cheese::unit_disc(3).unwrap();
        assert_eq!(x.log_rho(), r(0, 1));
        assert_eq!(x.log_r(), -r(1, 2));
        let y = x.with_hole(Disc { center: q(0), e: r(-2, 1) }).unwrap();
        assert_eq!(y.log_r(), r(2, 1) - r(1, 2));
        assert!(y.is_dagger_admissible(y.log_r()));
        assert!(!y.is_admissible(y.log_r()));
        // r(gX) = r(X)/|rho(g)|
        let g = MobiusMap::new(q(1), q(2), q(0), q(9)).unwrap();
        let gy = y.transform(&g).unwrap();
        assert_eq!(gy.log_r(), y.log_r() - r(2, 1));
    }

    #[test]
    fn sup_norm_examples() {
        let x = Cheese::unit_disc(5).unwrap();
        assert_eq!(sup_norm(&RatFun::x(), &x).unwrap(), Valuation::int(0));
        let y = x.with_hole(Disc { center: q(1), e: r(-1, 1) }).unwrap();
        let f = RatFun::pole_power(q(1), 1, q(5));
        assert_eq!(sup_norm(&f, &y).unwrap(), Valuation::int(0));
        // pole off-center inside the hole
        let g = RatFun::pole_power(q(26), 1, q(5));
        assert_eq!(sup_norm(&g, &y).unwrap(), Valuation::int(0));
        // pole outside the outer disc
        let h = RatFun::pole_power(Q::new(1.into(), 5.into()), 2, q(1));
        assert_eq!(sup_norm(&h, &x).unwrap(), Valuation::int(2));
        assert!(sup_norm(&RatFun::pole_power(q(2), 1, q(1)), &x).is_err());
    }

    #[test]
    fn sup_norm_multiplicativity_depends_on_the_shilov_boundary() {
        // holes of different radii: each function peaks on a different boundary circle
        let y = Cheese::new(
            3,
            Disc { center: q(0), e: r(0, 1) },
            vec![Disc { center: q(0), e: r(-1, 1) }, Disc { center: q(1), e: r(-2, 1) }],
        )
        .unwrap();
        let f = RatFun::pole_power(q(9), 2, q(1)).add(&RatFun::x().scale(&q(7)));
        let g = RatFun::pole_power(q(28), 1, q(2)).add(&RatFun::constant(q(1)));
        let nf = sup_norm(&f, &y).unwrap();
        let ng = sup_norm(&g, &y).unwrap();
        assert_eq!((nf, ng), (Valuation::int(-2), Valuation::int(-2)));
        assert_eq!(sup_norm(&f.mul(&g), &y).unwrap(), Valuation::int(-2));
        // residue-disc holes leave only the Gauss point on the boundary
        let z = Cheese::new(
            3,
            Disc { center: q(0), e: r(0, 1) },
            vec![Disc { center: q(0), e: r(0, 1) }, Disc { center: q(1), e: r(0, 1) }],
        )
        .unwrap();
        let nf = sup_norm(&f, &z).unwrap();
        let ng = sup_norm(&g, &z).unwrap();
        assert_eq!(sup_norm(&f.mul(&g), &z).unwrap(), nf + ng);
    }

    #[test]
    fn divided_power_norm_examples() {
        let x = Cheese::unit_disc(2).unwrap();
        for n in 0..6 {
            let d = divided_power_norm_check(&x, n).unwrap();
            assert_eq!(d.value, Valuation::int(0));
            assert!(d.attained());
        }
        let y = x.with_hole(Disc { center: q(0), e: r(-1, 1) }).unwrap();
        let d = divided_power_norm_check(&y, 2).unwrap();
        assert_eq!(d.value, Valuation::int(-2));
        assert!(d.attained());
    }
}
