use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::DEFAULT_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Rsma,
    Sdma,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Rsma => "rsma",
            Scheme::Sdma => "sdma",
        }
    }

    pub fn has_common(self) -> bool {
        matches!(self, Scheme::Rsma)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rsma" => Ok(Scheme::Rsma),
            "sdma" => Ok(Scheme::Sdma),
            other => Err(Error::invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

/// How the common-stream decodability constraint treats the SAA samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommonRateMode {
    /// One constraint per (user, subcarrier) on the sample-averaged MSE.
    #[default]
    SampleAverage,
    /// One constraint per (sample, user, subcarrier).
    PerSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveConfig {
    pub scheme: Scheme,
    /// Total transmit power `P_t` (noise power is one).
    pub power: f64,
    /// Fraction of the power budget that must be focused on the AU pilots.
    pub rho: f64,
    /// SAA sample count `M`.
    pub samples: usize,
    /// Seed of the SAA sample streams.
    pub seed: u64,
    /// Outer (WSR) tolerance in bits per subcarrier.
    pub eps_r: f64,
    /// Inner (WMMSE objective) tolerance in nats per subcarrier.
    pub eps_m: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub solver_tol: f64,
    pub common_rate_mode: CommonRateMode,
    /// RSMA only: also start from the SDMA solution and keep the better
    /// result.
    pub sdma_start: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rsma,
            power: 100.0,
            rho: 0.0,
            samples: 16,
            seed: 0,
            eps_r: 1e-4,
            eps_m: 1e-4,
            max_outer: 200,
            max_inner: 20,
            solver_tol: DEFAULT_TOLERANCE,
            common_rate_mode: CommonRateMode::SampleAverage,
            sdma_start: true,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::invalid(format!(
                "power {} must be positive",
                self.power
            )));
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::invalid(format!("rho {} outside [0, 1]", self.rho)));
        }
        if self.samples == 0 {
            return Err(Error::invalid("SAA sample count must be >= 1"));
        }
        if !(self.eps_r > 0.0 && self.eps_m > 0.0 && self.solver_tol > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::invalid("iteration caps must be >= 1"));
        }
        Ok(())
    }
}
