//! One runner per subcommand; each returns a filled [`Report`].

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::Rational64;
use padicdiff::carrylab::{
    check_cost, dominant_scan, parity_ok, qexp_check as qexp_report, special_index, sum_estimate as sum_est,
    vp_binom_kummer, PatternCase, PARITY_RULE,
};
use padicdiff::dworklab::{dwork_build, dwork_identities, frobenius_relation, prime_of_power};
use padicdiff::padic_core::{is_prime, varpi_m_valuation, vp_factorial, vp_rational, Valuation};
use padicdiff::ratfun::{Factored, MobiusMap, RatFun};
use padicdiff::skewalg::{epsilon_valuation, level_m_convert, SkewLaurentSeries};
use padicdiff::twistlab::{
    beta_homomorphism_check, beta_inverse_residual, cocycle, h_sequence, micro_inverse_residual, sigma_rho_check,
};
use padicdiff::zetalab::{ode_residual, phi_profile_row, PhiProfile, ZetaParams};
use padicdiff::Q;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{RunConfig, Twist};
use crate::report::{opt, rat, val, Report};
use crate::{run, CliError, Command};

type Res<T> = Result<T, CliError>;

fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Independent stream `stream` of the seeded generator.
fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn require_prime(p: u64) -> Res<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(CliError::Config(format!("p = {p} is not prime")))
    }
}

fn elapsed_ms(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

// ---------------------------------------------------------------- kummer-table

#[derive(Clone, Copy)]
enum Kind {
    Integer,
    Rational,
}

/// v_p(binom(lam + n, n)) for integer lam from Legendre's formula.
fn legendre_oracle(lam: i64, n: u64, p: u64) -> Valuation {
    let vf = |x: u64| vp_factorial(x, p) as i64;
    let s = lam + n as i64;
    if lam >= 0 {
        Valuation::int(vf(s as u64) - vf(lam as u64) - vf(n))
    } else if s >= 0 {
        // 0 <= lam + n < n: the binomial vanishes
        Valuation::Infinite
    } else {
        // binom(-m, n) = (-1)^n binom(m + n - 1, n)
        let m = (-s) as u64;
        Valuation::int(vf(m + n - 1) - vf(m - 1) - vf(n))
    }
}

pub fn kummer_table(cfg: &RunConfig) -> Res<Report> {
    let primes = match cfg.p {
        Some(p) => {
            require_prime(p)?;
            vec![p]
        }
        None => vec![2, 3, 5],
    };
    let int_cases = cfg.cases.unwrap_or(10_000);
    let rat_cases = (int_cases / 10).max(1);
    let mut rep = Report::new(
        "kummer-table",
        "carry count of lam + n equals v_p of the binomial coefficient binom(lam + n, n)",
        &["p", "kind", "cases", "mismatches", "min_valuation", "max_valuation"],
    );
    rep.param("primes", primes.clone());
    rep.param("integer_cases", int_cases);
    rep.param("rational_cases", rat_cases);
    let seed = cfg.seed();
    let jobs: Vec<(u64, Kind)> = primes.iter().flat_map(|&p| [(p, Kind::Integer), (p, Kind::Rational)]).collect();
    let rows = jobs
        .par_iter()
        .enumerate()
        .map(|(stream, &(p, kind))| -> Res<(u64, Kind, usize, usize, Valuation, Valuation)> {
            let mut r = rng(seed, stream as u64);
            let (cases, mut bad) = (if matches!(kind, Kind::Integer) { int_cases } else { rat_cases }, 0usize);
            let (mut lo, mut hi) = (Valuation::Infinite, Valuation::int(0));
            for _ in 0..cases {
                let (lam, n, want) = match kind {
                    Kind::Integer => {
                        // small |lam| half the time so vanishing binomials occur
                        let span = if r.gen_bool(0.5) { 1_000_000 } else { 3000 };
                        let lam = r.gen_range(-span..=span);
                        let n = r.gen_range(0u64..=5000);
                        (qi(lam), n, legendre_oracle(lam, n, p))
                    }
                    Kind::Rational => {
                        let b = loop {
                            let b = r.gen_range(2i64..60);
                            if b % p as i64 != 0 {
                                break b;
                            }
                        };
                        let lam = qr(r.gen_range(-10_000i64..=10_000), b);
                        let n = r.gen_range(0u64..=200);
                        // binom(lam + n, n) = prod_{i=1}^{n} (lam + i) / i
                        let mut want = Valuation::int(-(vp_factorial(n, p) as i64));
                        for i in 1..=n {
                            want = want + vp_rational(&(&lam + qi(i as i64)), p);
                        }
                        (lam, n, want)
                    }
                };
                let got = vp_binom_kummer(&lam, n, p)?;
                if got != want {
                    bad += 1;
                }
                lo = lo.min(got);
                if !got.is_infinite() {
                    hi = hi.max(got);
                }
            }
            Ok((p, kind, cases, bad, lo, hi))
        })
        .collect::<Res<Vec<_>>>()?;
    for (p, kind, cases, bad, lo, hi) in rows {
        let name = if matches!(kind, Kind::Integer) { "integer" } else { "rational" };
        if bad > 0 {
            rep.fail(format!("p = {p}, {name}: {bad} mismatches"));
        }
        rep.push(vec![p.into(), name.into(), cases.into(), bad.into(), val(lo), val(hi)]);
    }
    Ok(rep)
}

// ---------------------------------------------------------------- sum-estimate

/// The parameter sets run when no twist is given.
pub const SUM_ESTIMATE_SETS: [Twist; 3] = [Twist::new(3, 1, 1, 4), Twist::new(2, 1, 1, 3), Twist::new(3, 1, 3, 4)];

fn twist_sets(cfg: &RunConfig, defaults: &[Twist]) -> Res<Vec<(Twist, Vec<u32>)>> {
    let sets: Vec<Twist> = if cfg.has_twist() { vec![cfg.twist_or(defaults[0])] } else { defaults.to_vec() };
    let mut out = Vec::new();
    for (i, t) in sets.into_iter().enumerate() {
        // an explicit N list applies to the first set only
        let ns = match &cfg.big_n {
            Some(ns) if i == 0 => ns.clone(),
            Some(_) => continue,
            None => t.default_ns()?,
        };
        t.validate_ns(&ns)?;
        out.push((t, ns));
    }
    Ok(out)
}

pub fn sum_estimate(cfg: &RunConfig) -> Res<Report> {
    let prec = cfg.prec();
    let sets = twist_sets(cfg, &SUM_ESTIMATE_SETS)?;
    let mut cols = vec!["p", "f", "k", "d", "N", "n_N", "M", "s", "v_sum", "v_dominant", "bound", "pass"];
    if cfg.timing() {
        cols.push("runtime_ms");
    }
    let mut rep = Report::new(
        "sum-estimate",
        "valuation of the coefficient sum at n_N equals that of its dominant summand r = s and is at most (3 - N)/2, \
         strictly decreasing in N",
        &cols,
    );
    rep.param(
        "sets",
        sets.iter().map(|(t, ns)| json!({"p": t.p, "f": t.f, "k": t.k, "d": t.d, "N": ns})).collect::<Vec<_>>(),
    );
    let jobs: Vec<(Twist, u32)> = sets.iter().flat_map(|(t, ns)| ns.iter().map(move |&n| (*t, n))).collect();
    // validate cost up front so a too-large N is a config error, not a long run
    for &(t, n) in &jobs {
        let idx = special_index(t.p, t.f, t.validate()?, n)?;
        check_cost(&idx)?;
    }
    let rows = jobs
        .par_iter()
        .map(|&(t, n)| -> Res<_> {
            let start = Instant::now();
            let idx = special_index(t.p, t.f, t.validate()?, n)?;
            eprintln!("sum-estimate: (p,f,k,d) = ({},{},{},{}), N = {n}, n_N = {} ...", t.p, t.f, t.k, t.d, idx.n);
            let est = sum_est(&idx, prec)?;
            Ok((t, idx, est, elapsed_ms(start)))
        })
        .collect::<Res<Vec<_>>>()?;
    for (t, idx, est, ms) in &rows {
        if !est.passes() {
            rep.fail(format!(
                "({},{},{},{}) N = {}: v_sum {} v_dominant {} bound {}",
                t.p, t.f, t.k, t.d, idx.big_n, est.v_sum, est.v_dominant, est.bound
            ));
        }
        let mut row = vec![
            t.p.into(),
            t.f.into(),
            t.k.into(),
            t.d.into(),
            idx.big_n.into(),
            idx.n.into(),
            idx.m.into(),
            idx.s.into(),
            val(est.v_sum),
            val(est.v_dominant),
            rat(est.bound),
            est.passes().into(),
        ];
        if cfg.timing() {
            row.push((*ms).into());
        }
        rep.push(row);
    }
    for w in rows.windows(2) {
        if w[0].0 == w[1].0 && w[1].2.v_sum >= w[0].2.v_sum {
            rep.fail(format!("valuation not strictly decreasing from N = {} to N = {}", w[0].1.big_n, w[1].1.big_n));
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------- qexp-check

pub fn qexp_check(cfg: &RunConfig) -> Res<Report> {
    let qs = cfg.q.clone().unwrap_or_else(|| vec![2, 3, 5]);
    let mut jobs = Vec::new();
    for &q in &qs {
        let p = prime_of_power(q)?;
        let f = (1..).find(|&f| p.pow(f) == q).unwrap();
        let ks: Vec<u64> = match cfg.k {
            Some(k) => vec![k],
            None => (1..=q).collect(),
        };
        for k in ks {
            if k < 1 || k > q {
                return Err(CliError::Config(format!("k = {k} must satisfy 1 <= k <= q = {q}")));
            }
            let odd = k == q && q > 2;
            let ns: Vec<u32> = match &cfg.big_n {
                Some(ns) => {
                    if let Some(n) = ns.iter().find(|&&n| !parity_ok(q, k, n)) {
                        return Err(CliError::Config(format!("N = {n} with q = {q}, k = {k}: {PARITY_RULE}")));
                    }
                    ns.clone()
                }
                None => [6u32, 8, 10].iter().map(|n| if odd { n + 1 } else { *n }).collect(),
            };
            jobs.extend(ns.into_iter().map(|n| (p, f, q, k, n)));
        }
    }
    let mut rep = Report::new(
        "qexp-check",
        "base-q digits of s_n and of k/(q+1) - s_n follow the case patterns, M_n matches the case table, \
         and the dominant summand is the unique minimum",
        &[
            "q",
            "k",
            "N",
            "case",
            "n_N",
            "M",
            "M_table",
            "s_digits",
            "rest_digits",
            "M_parity",
            "carry_stop",
            "stop_bound",
            "dominant",
            "pass",
        ],
    );
    rep.param("q", qs);
    let rows = jobs
        .par_iter()
        .map(|&(p, f, q, k, n)| -> Res<_> {
            let idx = special_index(p, f, k, n)?;
            let r = qexp_report(&idx)?;
            let dominant = if idx.n < 100_000 {
                if dominant_scan(&idx).unique_at(idx.s) {
                    "unique"
                } else {
                    "not unique"
                }
            } else {
                "skipped"
            };
            Ok((q, k, idx, r, dominant))
        })
        .collect::<Res<Vec<_>>>()?;
    for (q, k, idx, r, dominant) in rows {
        let table = idx.big_n - PatternCase::of(q, k).m_offset();
        let bounded = idx.term_valuation(idx.s) <= Valuation::Finite(idx.bound());
        let pass = r.passes() && idx.m == table && dominant != "not unique" && bounded;
        if !pass {
            rep.fail(format!("q = {q}, k = {k}, N = {}", idx.big_n));
        }
        rep.push(vec![
            q.into(),
            k.into(),
            idx.big_n.into(),
            r.case.label().to_string().into(),
            idx.n.into(),
            idx.m.into(),
            table.into(),
            (r.s_digits == r.s_expected).into(),
            (r.rest_digits == r.rest_expected).into(),
            r.m_parity_ok.into(),
            r.carry_stop.into(),
            r.stop_bound.into(),
            dominant.into(),
            pass.into(),
        ]);
    }
    Ok(rep)
}

// ---------------------------------------------------------------- zeta-valuations

pub fn zeta_valuations(cfg: &RunConfig) -> Res<Report> {
    let prec = cfg.prec();
    let t = cfg.twist_or(Twist::new(3, 1, 1, 4));
    let kn = t.validate()?;
    let ns = match &cfg.big_n {
        Some(ns) => ns.clone(),
        None => t.default_ns()?,
    };
    t.validate_ns(&ns)?;
    let q = t.q();
    let params = ZetaParams::nontrivial(q, t.k, t.d)?;
    for &n in &ns {
        check_cost(&special_index(t.p, t.f, kn, n)?)?;
    }
    let mut rep = Report::new(
        "zeta-valuations",
        "coefficient of s^{n_N} in the projected zeta series, assembled from the y-series and from the closed sum, \
         with valuation equal to the sum-estimate table",
        &["N", "n_N", "v_closed", "v_series", "agreement_digits", "v_sum_estimate", "bound", "pass"],
    );
    rep.param("p", t.p);
    rep.param("f", t.f);
    rep.param("k", t.k);
    rep.param("d", t.d);
    rep.param("N", ns.clone());
    let rows = ns
        .par_iter()
        .map(|&n| -> Res<_> {
            eprintln!("zeta-valuations: N = {n} ...");
            let row = phi_profile_row(q, t.k, t.d, n, prec)?;
            let est = sum_est(&special_index(t.p, t.f, kn, n)?, prec)?;
            Ok((row, est.v_sum))
        })
        .collect::<Res<Vec<_>>>()?;
    let profile = PhiProfile { params, prec, rows: rows.iter().map(|r| r.0.clone()).collect() };
    if !profile.passes() {
        rep.fail("profile is not bounded, strictly decreasing and in agreement to prec/2 digits");
    }
    if profile.rows.iter().all(|r| r.agreement.is_none()) {
        rep.fail("no N within reach of the series route; include N = 6");
    }
    for (row, v_sum) in &rows {
        let pass = row.valuation == *v_sum
            && row.valuation <= Valuation::Finite(row.bound)
            && row.series_valuation.is_none_or(|v| v == row.valuation)
            && row.agreement.is_none_or(|a| a >= prec as i64 / 2);
        if !pass {
            rep.fail(format!("N = {}", row.big_n));
        }
        rep.push(vec![
            row.big_n.into(),
            row.n.into(),
            val(row.valuation),
            opt(row.series_valuation.map(|v| v.to_string())),
            opt(row.agreement),
            val(*v_sum),
            rat(row.bound),
            pass.into(),
        ]);
    }
    Ok(rep)
}

// ---------------------------------------------------------------- ode-check

pub fn ode_check(cfg: &RunConfig) -> Res<Report> {
    let prec = cfg.prec();
    let t = cfg.twist_or(Twist::new(3, 1, 1, 4));
    t.validate()?;
    // highest retained y-degree; the series length is one more
    let order = cfg.order.unwrap_or(200);
    let r = ode_residual(t.q(), t.k, t.d, order + 1, prec)?;
    let mut rep = Report::new(
        "ode-check",
        "residual of nabla(zeta) = c - 1 in the y-coordinate, with zeta also rebuilt by the uniqueness recurrence",
        &["y_degree", "residual_valuation", "floor", "pass"],
    );
    rep.param("p", t.p);
    rep.param("f", t.f);
    rep.param("k", t.k);
    rep.param("d", t.d);
    rep.param("order", order);
    rep.param("floor", r.floor);
    rep.param("recurrence_agrees", r.uniqueness_agrees);
    for i in 0..r.residual.len() {
        let v = r.residual.valuation(i);
        rep.push(vec![i.into(), val(v), r.floor.into(), (v >= Valuation::int(r.floor)).into()]);
    }
    if let Some((i, v)) = r.worst() {
        rep.fail(format!("coefficient of y^{i} has valuation {v} below the floor {}", r.floor));
    }
    if !r.uniqueness_agrees {
        rep.fail("the uniqueness recurrence does not reproduce zeta");
    }
    Ok(rep)
}

// ---------------------------------------------------------------- micro-inverse

pub fn micro_inverse(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.p.unwrap_or(5);
    require_prime(p)?;
    let ds: Vec<u64> = cfg.d.map(|d| vec![d]).unwrap_or_else(|| vec![2, 3]);
    let ks: Vec<u64> = cfg.k.map(|k| vec![k]).unwrap_or_else(|| vec![1, 2]);
    let k_neg = cfg.k_neg.unwrap_or(20);
    if k_neg < 2 {
        return Err(CliError::Config(format!("K_neg = {k_neg} must be at least 2")));
    }
    let extra = 4;
    let mut rep = Report::new(
        "micro-inverse",
        "two-sided residuals of xi * theta(d) - 1 for u = x^k meet the tail threshold and improve when K_neg doubles",
        &["d", "k", "K_neg", "degree", "v_left", "v_right", "threshold"],
    );
    rep.param("p", p);
    rep.param("K_neg", vec![k_neg, 2 * k_neg]);
    let jobs: Vec<(u64, u64)> = ds.iter().flat_map(|&d| ks.iter().map(move |&k| (d, k))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(d, k)| -> Res<_> {
            let td = h_sequence(p, &Factored::monomial(qi(0), k as i64), d as i64, 0)?;
            let coarse = micro_inverse_residual(&td, k_neg, extra)?;
            let fine = micro_inverse_residual(&td, 2 * k_neg, extra)?;
            Ok((d, k, coarse, fine))
        })
        .collect::<Res<Vec<_>>>()?;
    for (d, k, coarse, fine) in rows {
        if !coarse.passes() || !fine.passes() {
            rep.fail(format!("d = {d}, k = {k}: residual below the threshold"));
        }
        if !coarse.shrinks_to(&fine) {
            rep.fail(format!("d = {d}, k = {k}: residuals do not shrink from K_neg = {k_neg} to {}", 2 * k_neg));
        }
        for r in [&coarse, &fine] {
            for row in r.rows.iter().filter(|row| row.degree <= -(r.k_neg as i64)) {
                rep.push(vec![
                    d.into(),
                    k.into(),
                    r.k_neg.into(),
                    row.degree.into(),
                    val(row.left),
                    val(row.right),
                    val(r.threshold),
                ]);
            }
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------- dwork-check

fn max_abs(diffs: impl Iterator<Item = Q>) -> Q {
    diffs.map(|d| if d < qi(0) { -d } else { d }).fold(qi(0), |a, b| if b > a { b } else { a })
}

/// (q, identity, lambda, through, max residual, pass)
type DworkRow = (u64, String, String, i64, String, bool);

pub fn dwork_check(cfg: &RunConfig) -> Res<Report> {
    let qs = cfg.q.clone().unwrap_or_else(|| vec![2, 3]);
    let big_k = cfg.dwork_k.unwrap_or(12);
    let lambdas = [qi(0), qr(1, 2)];
    let mut rep = Report::new(
        "dwork-check",
        "H * H = H, sum_i x^i H x^-i = 1, H keeps exactly the x^j with q | j, and the Frobenius relation \
         x^i (x d H/q - (lambda - i) H/q) H x^-i = (x d - lambda) x^i H x^-i / q",
        &["q", "K", "identity", "lambda", "through", "max_residual", "pass"],
    );
    rep.param("q", qs.clone());
    rep.param("K", big_k);
    let rows = qs
        .par_iter()
        .map(|&q| -> Res<Vec<DworkRow>> {
            let mut out = Vec::new();
            let top = big_k as i64 - q as i64;
            match dwork_identities(q, big_k) {
                Ok(r) => {
                    out.push((
                        q,
                        "idempotent".into(),
                        String::new(),
                        r.idempotent_through,
                        "0".into(),
                        r.idempotent_through == top,
                    ));
                    out.push((
                        q,
                        "partition".into(),
                        String::new(),
                        r.partition_through as i64,
                        "0".into(),
                        r.partition_through as i64 == top,
                    ));
                }
                Err(padicdiff::Error::CheckFailed(m)) => {
                    out.push((q, "idempotent/partition".into(), String::new(), -1, format!("nonzero: {m}"), false));
                }
                Err(e) => return Err(e.into()),
            }
            let h = dwork_build(q, big_k)?;
            let proj = max_abs((0..=top as u64).map(|j| {
                let want = if j % q == 0 { qi(1) } else { qi(0) };
                h.apply_monomial(j).map(|v| v - want).unwrap_or_else(|_| qi(1))
            }));
            out.push((q, "projector".into(), String::new(), top, proj.to_string(), proj == qi(0)));
            for lam in &lambdas {
                for i in 0..q {
                    let fr = frobenius_relation(q, lam, i, big_k)?;
                    let res = max_abs(fr.rows.iter().map(|r| &r.1 - &r.2));
                    let through = fr.rows.last().map(|r| r.0 as i64).unwrap_or(-1);
                    out.push((
                        q,
                        format!("frobenius i={i}"),
                        lam.to_string(),
                        through,
                        res.to_string(),
                        fr.passes() && through == top,
                    ));
                }
            }
            Ok(out)
        })
        .collect::<Res<Vec<_>>>()?;
    for (q, name, lam, through, res, pass) in rows.into_iter().flatten() {
        if !pass {
            rep.fail(format!("q = {q}: {name} {lam}"));
        }
        rep.push(vec![q.into(), big_k.into(), name.into(), lam.into(), through.into(), res.into(), pass.into()]);
    }
    Ok(rep)
}

// ---------------------------------------------------------------- beta-check, cocycle-check

fn mobius_text(g: &MobiusMap) -> String {
    format!("({},{};{},{})", g.a, g.b, g.c, g.d)
}

/// (a, b; 0, d) with a a unit, d = a mod p and p | b.
fn small_triangular(r: &mut ChaCha8Rng, p: u64) -> Res<MobiusMap> {
    let p = p as i64;
    let a = loop {
        let a = r.gen_range(1..p) + p * r.gen_range(-1i64..=1);
        if a != 0 {
            break a;
        }
    };
    let d = loop {
        let d = a + p * r.gen_range(-2i64..=2);
        if d != 0 {
            break d;
        }
    };
    Ok(MobiusMap::new(qi(a), qi(p * r.gen_range(-3i64..=3)), qi(0), qi(d))?)
}

/// Largest m in the substitution check beta(g)(x^m) = (g.x)^m.
pub const SIGMA_M_MAX: u32 = 30;

pub fn beta_check(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.p.unwrap_or(5);
    require_prime(p)?;
    let cases = cfg.cases.unwrap_or(50);
    let n = cfg.k_pos.unwrap_or(10);
    let translations = 10usize;
    let mut rep = Report::new(
        "beta-check",
        "beta(g)(x^m) = (g.x)^m for translations, beta(gh) = beta(g) * beta(h) and beta(g) * beta(g^-1) = 1 \
         on certified degrees",
        &["case", "kind", "g", "h", "through", "pass"],
    );
    rep.param("p", p);
    rep.param("cases", cases);
    rep.param("K_pos", n);
    rep.param("m_max", SIGMA_M_MAX);
    let seed = cfg.seed();
    let mut jobs: Vec<(usize, bool)> = (0..translations).map(|i| (i, true)).collect();
    jobs.extend((0..cases).map(|i| (i, false)));
    let rows = jobs
        .par_iter()
        .map(|&(i, sigma)| -> Res<(usize, &str, String, String, i64, bool)> {
            let mut r = rng(seed, if sigma { 1 << 32 | i as u64 } else { i as u64 });
            if sigma {
                let g = MobiusMap::translation(qi(p as i64 * r.gen_range(-9i64..=9)));
                let ok = sigma_rho_check(p, &g, SIGMA_M_MAX, SIGMA_M_MAX as usize)?.passes();
                Ok((i, "substitution", mobius_text(&g), String::new(), SIGMA_M_MAX as i64, ok))
            } else {
                let g = small_triangular(&mut r, p)?;
                let h = small_triangular(&mut r, p)?;
                let ok = beta_homomorphism_check(p, &g, &h, n)?.passes(n as i64)
                    && beta_inverse_residual(p, &g, n)?.iter().all(|x| x.1);
                Ok((i, "homomorphism", mobius_text(&g), mobius_text(&h), n as i64, ok))
            }
        })
        .collect::<Res<Vec<_>>>()?;
    for (i, kind, g, h, through, pass) in rows {
        if !pass {
            rep.fail(format!("{kind} case {i}: g = {g}"));
        }
        rep.push(vec![i.into(), kind.into(), g.into(), h.into(), through.into(), pass.into()]);
    }
    Ok(rep)
}

fn divisor_text(u: &Factored) -> String {
    let parts: Vec<String> = u.divisor().iter().map(|(a, e)| format!("(x-{a})^{e}")).collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

pub fn cocycle_check(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.p.unwrap_or(5);
    require_prime(p)?;
    let cases = cfg.cases.unwrap_or(50);
    let n = cfg.k_pos.unwrap_or(10);
    if let Some(d) = cfg.d {
        if d == 0 || d % p == 0 {
            return Err(CliError::Config(format!("d = {d} must be nonzero and prime to p = {p}")));
        }
    }
    let twists: Vec<u64> = (1..=4).filter(|d| d % p != 0).collect();
    let centers = p.min(3) as i64;
    let mut rep = Report::new(
        "cocycle-check",
        "c = sum_m (g.x - x)^m h^[m] satisfies theta(beta(g)) = c beta(g) and c^d = u/(g.u) within the tail bound",
        &["case", "u", "d", "g", "bound", "theta_beta_defect", "power_defect", "pass"],
    );
    rep.param("p", p);
    rep.param("cases", cases);
    rep.param("K_pos", n);
    let seed = cfg.seed();
    let rows = (0..cases)
        .into_par_iter()
        .map(|i| -> Res<_> {
            let mut r = rng(seed, i as u64);
            let g = small_triangular(&mut r, p)?;
            let u = Factored::new(qi(1), (0..centers).map(|c| (qi(c), r.gen_range(-2i64..=2))))?;
            let d = cfg.d.unwrap_or(twists[r.gen_range(0..twists.len())]);
            let td = h_sequence(p, &u, d as i64, 0)?;
            let c = cocycle(&td, &g, n)?;
            Ok((i, divisor_text(&u), d, mobius_text(&g), c))
        })
        .collect::<Res<Vec<_>>>()?;
    for (i, u, d, g, c) in rows {
        if !c.passes() {
            rep.fail(format!("case {i}: u = {u}, d = {d}, g = {g}"));
        }
        rep.push(vec![
            i.into(),
            u.into(),
            d.into(),
            g.into(),
            val(c.bound),
            val(c.theta_beta_defect),
            val(c.power_defect),
            c.passes().into(),
        ]);
    }
    Ok(rep)
}

// ---------------------------------------------------------------- star-props

fn random_ratfun(r: &mut ChaCha8Rng) -> RatFun {
    let len = r.gen_range(0..4usize);
    let mut f = RatFun::from_poly((0..len).map(|_| qi(r.gen_range(-4i64..=4))).collect());
    if r.gen_bool(0.5) {
        f = f.add(&RatFun::pole_power(qi(r.gen_range(-2i64..=2)), r.gen_range(1..=2usize), qi(r.gen_range(-3i64..=3))));
    }
    f
}

fn random_operator(r: &mut ChaCha8Rng, p: u64, poly_only: bool) -> Res<SkewLaurentSeries> {
    let len = r.gen_range(1..=3usize);
    let cs: Vec<RatFun> = (0..len)
        .map(|_| {
            if poly_only {
                RatFun::from_poly((0..r.gen_range(0..5usize)).map(|_| qi(r.gen_range(-4i64..=4))).collect())
            } else {
                random_ratfun(r)
            }
        })
        .collect();
    Ok(SkewLaurentSeries::from_terms(p, 0, len as i64 - 1, cs.into_iter().enumerate().map(|(j, c)| (j as i64, c)))?)
}

fn same_exact(a: &SkewLaurentSeries, b: &SkewLaurentSeries) -> bool {
    let lo = a.window().0.min(b.window().0);
    let hi = a.window().1.max(b.window().1);
    (lo..=hi).all(|k| a.coeff(k) == b.coeff(k) && a.tag(k).is_exact() && b.tag(k).is_exact())
}

#[derive(Clone, Copy)]
enum Prop {
    Associativity,
    Transpose,
    LevelM,
    Epsilon,
    FactorialVarpi,
    LevelMFactorial,
}

impl Prop {
    const ALL: [Prop; 6] = [
        Prop::Associativity,
        Prop::Transpose,
        Prop::LevelM,
        Prop::Epsilon,
        Prop::FactorialVarpi,
        Prop::LevelMFactorial,
    ];

    fn name(self) -> &'static str {
        match self {
            Prop::Associativity => "star associativity",
            Prop::Transpose => "transpose involution and anti-automorphism",
            Prop::LevelM => "level-m basis round trip",
            Prop::Epsilon => "-m <= v(eps_n) <= 0",
            Prop::FactorialVarpi => "0 <= n/(p-1) - v(n!) <= 1 + log_p n",
            Prop::LevelMFactorial => "v(k!) - v(q_k!) - k v(varpi_m) in [-m, 0]",
        }
    }

    /// One seeded case; `Ok(Some(text))` describes a failure.
    fn case(self, r: &mut ChaCha8Rng, p: u64) -> Res<Option<String>> {
        let primes = [2u64, 3, 5];
        Ok(match self {
            Prop::Associativity => {
                let (u, v, w) =
                    (random_operator(r, p, false)?, random_operator(r, p, false)?, random_operator(r, p, false)?);
                let l = u.star(&v, 0)?.star(&w, 0)?;
                let rr = u.star(&v.star(&w, 0)?, 0)?;
                (!same_exact(&l, &rr)).then(|| format!("{u:?}"))
            }
            Prop::Transpose => {
                let (u, v) = (random_operator(r, p, false)?, random_operator(r, p, false)?);
                let ut = u.transpose()?;
                let inv = same_exact(&ut.transpose()?, &u);
                let anti = same_exact(&u.star(&v, 0)?.transpose()?, &v.transpose()?.star(&ut, 0)?);
                (!(inv && anti)).then(|| format!("{u:?}"))
            }
            Prop::LevelM => {
                let pp = primes[r.gen_range(0..3)];
                let m = r.gen_range(0..=3u32);
                let u = random_operator(r, pp, true)?;
                let back = level_m_convert(&u, m)?.to_series()?;
                (!same_exact(&back, &u)).then(|| format!("p = {pp}, m = {m}"))
            }
            Prop::Epsilon => {
                let pp = primes[r.gen_range(0..3)];
                let m = r.gen_range(0..=3u32);
                let n = r.gen_range(-10_000i64..=10_000);
                let e = epsilon_valuation(n, pp, m);
                let ok = e >= Rational64::from_integer(-(m as i64)) && e <= Rational64::from_integer(0);
                (!ok).then(|| format!("p = {pp}, m = {m}, n = {n}: {e}"))
            }
            Prop::FactorialVarpi => {
                let pp = [2u64, 3, 5, 7][r.gen_range(0..4)];
                let n = r.gen_range(1u64..=100_000);
                let gap =
                    Rational64::new(n as i64, pp as i64 - 1) - Rational64::from_integer(vp_factorial(n, pp) as i64);
                let logp = (n as f64).ln() / (pp as f64).ln();
                let ok = gap >= Rational64::from_integer(0)
                    && (*gap.numer() as f64) / (*gap.denom() as f64) <= 1.0 + logp + 1e-9;
                (!ok).then(|| format!("p = {pp}, n = {n}"))
            }
            Prop::LevelMFactorial => {
                let pp = primes[r.gen_range(0..3)];
                let m = r.gen_range(0..=4u32);
                let k = r.gen_range(0u64..=10_000);
                let qk = k / pp.pow(m);
                let v = Rational64::from_integer(vp_factorial(k, pp) as i64 - vp_factorial(qk, pp) as i64)
                    - varpi_m_valuation(pp, m) * Rational64::from_integer(k as i64);
                let ok = v >= Rational64::from_integer(-(m as i64)) && v <= Rational64::from_integer(0);
                (!ok).then(|| format!("p = {pp}, m = {m}, k = {k}: {v}"))
            }
        })
    }
}

pub fn star_props(cfg: &RunConfig) -> Res<Report> {
    let p = cfg.p.unwrap_or(3);
    require_prime(p)?;
    let cases = cfg.cases.unwrap_or(300);
    let seed = cfg.seed();
    let mut rep = Report::new(
        "star-props",
        "randomized identities of the star product, transpose and level-m bases, and the factorial valuation bounds",
        &["property", "cases", "failures", "first_failure"],
    );
    rep.param("p", p);
    rep.param("cases", cases);
    let rows = Prop::ALL
        .par_iter()
        .enumerate()
        .map(|(stream, &prop)| -> Res<_> {
            let mut r = rng(seed, stream as u64);
            let mut bad = 0usize;
            let mut first = None;
            for _ in 0..cases {
                if let Some(f) = prop.case(&mut r, p)? {
                    bad += 1;
                    first.get_or_insert(f);
                }
            }
            Ok((prop, bad, first))
        })
        .collect::<Res<Vec<_>>>()?;
    for (prop, bad, first) in rows {
        if bad > 0 {
            rep.fail(format!("{}: {bad} failures", prop.name()));
        }
        rep.push(vec![prop.name().into(), cases.into(), bad.into(), opt(first)]);
    }
    Ok(rep)
}

// ---------------------------------------------------------------- all

pub fn all(cfg: &RunConfig) -> Res<Report> {
    let mut rep = Report::new("all", "every subcommand with the shared configuration", &["command", "rows", "verdict"]);
    for cmd in Command::EACH {
        eprintln!("all: {} ...", cmd.name());
        let sub = run(cmd, cfg).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", cmd.name())),
            CliError::Io(m) => CliError::Io(format!("{}: {m}", cmd.name())),
            CliError::Check(m) => CliError::Check(format!("{}: {m}", cmd.name())),
            CliError::Precision(m) => CliError::Precision(format!("{}: {m}", cmd.name())),
        })?;
        if !sub.passes() {
            rep.fail(format!("{}: {}", cmd.name(), sub.verdict()));
        }
        rep.push(vec![Value::from(cmd.name()), sub.rows.len().into(), sub.verdict().into()]);
    }
    Ok(rep)
}
