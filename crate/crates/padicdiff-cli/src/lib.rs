//! Verification runner for `padicdiff`: configuration, checks and report encoding.

pub mod acceptance;
pub mod checks;
pub mod config;
pub mod report;

use std::fmt;

use clap::Subcommand;

pub use config::{Format, RunConfig, Twist};
pub use report::Report;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CliError {
    /// bad flags, config file or parameter combination (exit 2)
    Config(String),
    /// output could not be written (exit 2)
    Io(String),
    /// an identity failed on an exact coefficient (exit 1)
    Check(String),
    /// capped precision ran out (exit 3)
    Precision(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Precision(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "configuration error: {s}"),
            CliError::Io(s) => write!(f, "output error: {s}"),
            CliError::Check(s) => write!(f, "check failed: {s}"),
            CliError::Precision(s) => write!(f, "{s}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<padicdiff::Error> for CliError {
    fn from(e: padicdiff::Error) -> Self {
        use padicdiff::Error as E;
        match e {
            E::InvalidParameter(_) | E::Domain(_) => CliError::Config(e.to_string()),
            E::PrecisionExhausted { .. } => CliError::Precision(e.to_string()),
            E::CheckFailed(_) => CliError::Check(e.to_string()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Kummer carry valuations against factorial and exact-binomial oracles
    KummerTable,
    /// valuation of the closed coefficient sum at the special indices n_N
    SumEstimate,
    /// digit patterns of s_n and the M table over a (q, k, N) grid
    QexpCheck,
    /// projected zeta coefficients by two routes, with their valuation profile
    ZetaValuations,
    /// residual of the first-order equation satisfied by zeta
    OdeCheck,
    /// two-sided residuals of the truncated microlocal inverse
    MicroInverse,
    /// Dwork operator identities
    DworkCheck,
    /// beta(g) substitution and homomorphism checks
    BetaCheck,
    /// twisted cocycle identities for sampled (g, u)
    CocycleCheck,
    /// randomized algebra property suite
    StarProps,
    /// every subcommand in turn
    All,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::KummerTable => "kummer-table",
            Command::SumEstimate => "sum-estimate",
            Command::QexpCheck => "qexp-check",
            Command::ZetaValuations => "zeta-valuations",
            Command::OdeCheck => "ode-check",
            Command::MicroInverse => "micro-inverse",
            Command::DworkCheck => "dwork-check",
            Command::BetaCheck => "beta-check",
            Command::CocycleCheck => "cocycle-check",
            Command::StarProps => "star-props",
            Command::All => "all",
        }
    }

    /// Every subcommand except `all`, in run order.
    pub const EACH: [Command; 10] = [
        Command::KummerTable,
        Command::SumEstimate,
        Command::QexpCheck,
        Command::ZetaValuations,
        Command::OdeCheck,
        Command::MicroInverse,
        Command::DworkCheck,
        Command::BetaCheck,
        Command::CocycleCheck,
        Command::StarProps,
    ];
}

/// Runs one subcommand; the report's verdict decides between exit 0 and 1.
pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    let start = std::time::Instant::now();
    let mut rep = match cmd {
        Command::KummerTable => checks::kummer_table(cfg),
        Command::SumEstimate => checks::sum_estimate(cfg),
        Command::QexpCheck => checks::qexp_check(cfg),
        Command::ZetaValuations => checks::zeta_valuations(cfg),
        Command::OdeCheck => checks::ode_check(cfg),
        Command::MicroInverse => checks::micro_inverse(cfg),
        Command::DworkCheck => checks::dwork_check(cfg),
        Command::BetaCheck => checks::beta_check(cfg),
        Command::CocycleCheck => checks::cocycle_check(cfg),
        Command::StarProps => checks::star_props(cfg),
        Command::All => checks::all(cfg),
    }?;
    rep.param("prec", cfg.prec());
    rep.param("seed", cfg.seed());
    if cfg.timing() {
        rep.runtime_ms = start.elapsed().as_millis() as u64;
    }
    Ok(rep)
}

/// Exit code for a finished run.
pub fn exit_code(result: &Result<Report, CliError>) -> i32 {
    match result {
        Ok(r) if r.passes() => 0,
        Ok(_) => 1,
        Err(e) => e.exit_code(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_codes() {
        use padicdiff::Error as E;
        assert_eq!(CliError::from(E::PrecisionExhausted { suggested: 8 }).exit_code(), 3);
        assert_eq!(CliError::from(E::InvalidParameter("x".into())).exit_code(), 2);
        assert_eq!(CliError::from(E::CheckFailed("x".into())).exit_code(), 1);
        assert_eq!(exit_code(&Err(CliError::Precision("x".into()))), 3);
    }
}
