//! Run configuration: TOML file merged with command-line flags.

use std::path::Path;

use clap::{Args, ValueEnum};
use padicdiff::carrylab::{normalize_k, parity_ok, PARITY_RULE};
use padicdiff::padic_core::is_prime;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

pub const DEFAULT_PREC: u32 = 64;
pub const DEFAULT_SEED: u64 = 1;

/// Every tunable; `None` means "use the subcommand default".
///
/// The same struct is read from TOML and from flags; flags win.
#[derive(Clone, Debug, Default, Deserialize, Serialize, Args)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// residue characteristic p
    #[arg(long, global = true)]
    pub p: Option<u64>,
    /// residue degree f, q = p^f
    #[arg(long, global = true)]
    pub f: Option<u32>,
    /// twist numerator k (twist k/d)
    #[arg(long, global = true)]
    pub k: Option<u64>,
    /// twist denominator d
    #[arg(long, global = true)]
    pub d: Option<u64>,
    /// comma-separated list of N
    #[arg(long = "N", global = true, value_delimiter = ',')]
    #[serde(rename = "N")]
    pub big_n: Option<Vec<u32>>,
    /// comma-separated list of q (Dwork operator, digit-pattern grid)
    #[arg(long, global = true, value_delimiter = ',')]
    pub q: Option<Vec<u64>>,
    /// truncation K of the Dwork operator
    #[arg(long = "K", global = true)]
    #[serde(rename = "K")]
    pub dwork_k: Option<usize>,
    /// series order in y
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// negative truncation of the microlocal inverse
    #[arg(long = "k-neg", global = true)]
    pub k_neg: Option<usize>,
    /// positive truncation of beta(g) and the cocycle
    #[arg(long = "k-pos", global = true)]
    pub k_pos: Option<usize>,
    /// p-adic digits carried by capped-precision arithmetic
    #[arg(long, global = true)]
    pub prec: Option<u32>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// seed for the randomized suites
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// number of sampled cases
    #[arg(long, global = true)]
    pub cases: Option<usize>,
    /// record wall-clock times (set by the --timing flag)
    #[arg(skip)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<bool>,
}

macro_rules! overlay {
    ($dst:ident, $src:ident; $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// `self` with every field set in `flags` replaced.
    pub fn overridden_by(mut self, flags: &RunConfig) -> Self {
        overlay!(self, flags; p, f, k, d, big_n, q, dwork_k, order, k_neg, k_pos, prec, format, seed, cases);
        if flags.timing == Some(true) {
            self.timing = Some(true);
        }
        self
    }

    pub fn prec(&self) -> u32 {
        self.prec.unwrap_or(DEFAULT_PREC)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn timing(&self) -> bool {
        self.timing.unwrap_or(false)
    }

    /// True when any of p, f, k, d was given.
    pub fn has_twist(&self) -> bool {
        self.p.is_some() || self.f.is_some() || self.k.is_some() || self.d.is_some()
    }

    /// (p, f, k, d) with the given defaults filling unset fields.
    pub fn twist_or(&self, dflt: Twist) -> Twist {
        Twist {
            p: self.p.unwrap_or(dflt.p),
            f: self.f.unwrap_or(dflt.f),
            k: self.k.unwrap_or(dflt.k),
            d: self.d.unwrap_or(dflt.d),
        }
    }
}

/// Parameters (p, f, k, d) of the twist u^{k/d} over q = p^f.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Twist {
    pub p: u64,
    pub f: u32,
    pub k: u64,
    pub d: u64,
}

impl Twist {
    pub const fn new(p: u64, f: u32, k: u64, d: u64) -> Self {
        Twist { p, f, k, d }
    }

    pub fn q(&self) -> u64 {
        self.p.pow(self.f)
    }

    /// Checks p prime, d | q + 1, p not dividing d, 1 <= k <= d; returns the normalized k(q+1)/d.
    pub fn validate(&self) -> Result<u64, CliError> {
        if !is_prime(self.p) {
            return Err(CliError::Config(format!("p = {} is not prime", self.p)));
        }
        if self.f == 0 || self.f > 8 {
            return Err(CliError::Config(format!("f = {} must lie in [1, 8]", self.f)));
        }
        let q = self.q();
        if self.d == 0 || !(q + 1).is_multiple_of(self.d) {
            return Err(CliError::Config(format!("d = {} must divide p^f + 1 = {}", self.d, q + 1)));
        }
        if self.d.is_multiple_of(self.p) {
            return Err(CliError::Config(format!("p = {} must not divide d = {}", self.p, self.d)));
        }
        if self.k < 1 || self.k > self.d {
            return Err(CliError::Config(format!("k = {} must satisfy 1 <= k <= d = {}", self.k, self.d)));
        }
        normalize_k(q, self.k, self.d).map_err(CliError::from)
    }

    /// Rejects any N violating the parity rule for the normalized k.
    pub fn validate_ns(&self, ns: &[u32]) -> Result<(), CliError> {
        let kn = self.validate()?;
        for &n in ns {
            if n < 6 {
                return Err(CliError::Config(format!("N = {n} must be at least 6")));
            }
            if !parity_ok(self.q(), kn, n) {
                return Err(CliError::Config(format!(
                    "N = {n} violates the parity rule for q = {}, k(q+1)/d = {kn}: {PARITY_RULE}",
                    self.q()
                )));
            }
        }
        Ok(())
    }

    /// {6, 8, 10}, or {7, 9} when the parity rule asks for odd N.
    pub fn default_ns(&self) -> Result<Vec<u32>, CliError> {
        let kn = self.validate()?;
        if kn == self.q() && self.q() > 2 {
            Ok(vec![7, 9])
        } else {
            Ok(vec![6, 8, 10])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_toml_str("p = 3\nprec = 60\nN = [6, 8]\n").unwrap();
        let flags = RunConfig { prec: Some(80), ..Default::default() };
        let c = file.overridden_by(&flags);
        assert_eq!(c.prec(), 80);
        assert_eq!(c.p, Some(3));
        assert_eq!(c.big_n, Some(vec![6, 8]));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("precision = 3\n").is_err());
    }

    #[test]
    fn twist_rules() {
        assert_eq!(Twist::new(3, 1, 1, 4).validate().unwrap(), 1);
        assert_eq!(Twist::new(3, 1, 3, 4).validate().unwrap(), 3);
        assert!(Twist::new(3, 1, 1, 5).validate().is_err());
        assert!(Twist::new(4, 1, 1, 5).validate().is_err());
        let err = Twist::new(3, 1, 1, 4).validate_ns(&[7]).unwrap_err();
        assert!(err.to_string().contains("parity rule"));
        assert_eq!(Twist::new(3, 1, 3, 4).default_ns().unwrap(), vec![7, 9]);
    }
}
