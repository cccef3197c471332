//! The eight acceptance criteria as runnable checks.

use crate::config::{RunConfig, Twist};
use crate::report::Report;
use crate::{checks, run, CliError, Command};

/// Precision used by every criterion.
pub const PREC: u32 = 60;
/// Wall-clock budget per N for the coefficient sum.
pub const SUM_BUDGET_MS: u64 = 60_000;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn base() -> RunConfig {
    RunConfig { prec: Some(PREC), ..Default::default() }
}

fn twist(t: Twist) -> RunConfig {
    RunConfig { p: Some(t.p), f: Some(t.f), k: Some(t.k), d: Some(t.d), ..base() }
}

/// Folds several runs into one verdict.
fn combine(runs: Vec<(&str, Result<Report, CliError>)>) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in runs {
        match r {
            Ok(rep) => {
                pass &= rep.passes();
                parts.push(format!("{name}: {} ({} rows)", rep.verdict(), rep.rows.len()));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    (pass, parts.join("; "))
}

fn sum_estimate_within_budget() -> Result<Report, CliError> {
    let cfg = RunConfig { timing: Some(true), ..base() };
    let mut rep = run(Command::SumEstimate, &cfg)?;
    let (col, n) = (rep.col("runtime_ms").expect("timing column"), rep.col("N").expect("N column"));
    let slow: Vec<String> = rep
        .rows
        .iter()
        .filter(|r| r[col].as_u64().unwrap_or(u64::MAX) > SUM_BUDGET_MS)
        .map(|r| format!("N = {} took {} ms", r[n], r[col]))
        .collect();
    for s in slow {
        rep.fail(s);
    }
    Ok(rep)
}

pub const TITLES: [&str; 8] = [
    "coefficient-sum valuations for (3,1,1,4), (2,1,1,3) and (3,1,3,4)",
    "projected zeta coefficients: series and closed routes agree, profile matches",
    "first-order equation residual for zeta through y^200",
    "microlocal inverse residuals for u = x^k, p = 5, d in {2, 3}",
    "Dwork operator identities for q in {2, 3}, K = 12",
    "beta(g) substitution, homomorphism and twisted cocycle identities",
    "Kummer carries, digit patterns and the M table",
    "randomized algebra property suite",
];

pub fn criterion(id: u8) -> Outcome {
    let runs: Vec<(&str, Result<Report, CliError>)> = match id {
        1 => vec![("sum-estimate", sum_estimate_within_budget())],
        2 => vec![("zeta-valuations", run(Command::ZetaValuations, &twist(Twist::new(3, 1, 1, 4))))],
        3 => vec![(
            "ode-check",
            run(Command::OdeCheck, &RunConfig { order: Some(200), ..twist(Twist::new(3, 1, 1, 4)) }),
        )],
        4 => vec![("micro-inverse", run(Command::MicroInverse, &RunConfig { p: Some(5), k_neg: Some(20), ..base() }))],
        5 => vec![(
            "dwork-check",
            run(Command::DworkCheck, &RunConfig { q: Some(vec![2, 3]), dwork_k: Some(12), ..base() }),
        )],
        6 => {
            let cfg = RunConfig { p: Some(5), cases: Some(50), ..base() };
            vec![("beta-check", run(Command::BetaCheck, &cfg)), ("cocycle-check", run(Command::CocycleCheck, &cfg))]
        }
        7 => vec![
            ("kummer-table", run(Command::KummerTable, &RunConfig { cases: Some(10_000), ..base() })),
            ("qexp-check", run(Command::QexpCheck, &base())),
        ],
        8 => vec![("star-props", checks::star_props(&RunConfig { cases: Some(300), ..base() }))],
        _ => vec![("unknown", Err(CliError::Config(format!("no criterion {id}"))))],
    };
    let (pass, detail) = combine(runs);
    let title = TITLES.get(id as usize - 1).copied().unwrap_or("unknown");
    Outcome { id, title, pass, detail }
}
