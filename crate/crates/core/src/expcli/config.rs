use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::evenly_spaced_pilots;
use crate::error::{Error, Result};
use crate::optimizer::{CommonRateMode, Scheme};

/// Channel scenario of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelModel {
    /// Flat steering-vector channels: IU 1 at broadside, IU 2 at `theta`,
    /// the AU at `beta`. The AU covariance averages the steering phase
    /// uniformly over `[0, au_spread]`.
    Deterministic {
        theta: f64,
        beta: f64,
        #[serde(default = "default_au_spread")]
        au_spread: f64,
    },
    /// Tapped delay line with an exponential power-delay profile. The AU
    /// covariance is the identity (spatially white taps).
    Selective {
        #[serde(default = "default_delay_spread")]
        delay_spread: f64,
        #[serde(default = "default_spacing")]
        spacing: f64,
        #[serde(default = "default_tap_spacing")]
        tap_spacing: f64,
        #[serde(default = "default_taps")]
        taps: usize,
        #[serde(default)]
        seed: u64,
    },
}

fn default_au_spread() -> f64 {
    4.0 * PI / 9.0
}

fn default_delay_spread() -> f64 {
    1200e-9
}

fn default_spacing() -> f64 {
    60e3
}

fn default_tap_spacing() -> f64 {
    520e-9
}

fn default_taps() -> usize {
    8
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel::Deterministic {
            theta: 4.0 * PI / 9.0,
            beta: 2.0 * PI / 9.0,
            au_spread: default_au_spread(),
        }
    }
}

/// Pilot subcarrier set: a count placed evenly from the first subcarrier,
/// or explicit zero-based indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PilotSpec {
    Count(usize),
    Indices { indices: Vec<usize> },
}

impl PilotSpec {
    pub fn resolve(&self, subcarriers: usize) -> Result<Vec<usize>> {
        match self {
            PilotSpec::Count(c) => {
                if *c == 0 {
                    return Err(Error::Config("pilot count must be >= 1".into()));
                }
                evenly_spaced_pilots(*c, subcarriers)
            }
            PilotSpec::Indices { indices } => {
                let mut v = indices.clone();
                v.sort_unstable();
                v.dedup();
                if v.is_empty() || v.len() != indices.len() {
                    return Err(Error::Config(
                        "pilot indices must be nonempty and distinct".into(),
                    ));
                }
                if v.iter().any(|&n| n >= subcarriers) {
                    return Err(Error::Config(format!(
                        "pilot index outside 0..{subcarriers}"
                    )));
                }
                Ok(v)
            }
        }
    }

    fn rescale(&self, from: usize, to: usize) -> PilotSpec {
        match self {
            PilotSpec::Count(c) => PilotSpec::Count((c * to / from).clamp(1, to)),
            PilotSpec::Indices { indices } => {
                let mut v: Vec<usize> = indices.iter().map(|n| n * to / from).collect();
                v.dedup();
                PilotSpec::Indices { indices: v }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n_t: usize,
    pub users: usize,
    pub adversaries: usize,
    pub subcarriers: usize,
    pub pilot_sets: Vec<PilotSpec>,
    pub snr_db: Vec<f64>,
    pub schemes: Vec<Scheme>,
    pub strategy: u8,
    pub base_rho: f64,
    /// CSIT quality exponent.
    pub alpha: f64,
    /// Ignore the CSIT error model and optimize on the true channels.
    pub perfect_csit: bool,
    /// SAA sample count.
    pub samples: usize,
    pub channel: ChannelModel,
    pub eps_r: f64,
    pub eps_m: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub solver_tol: f64,
    pub common_rate_mode: CommonRateMode,
    pub sdma_start: bool,
    pub seed: u64,
    /// Write measured wall time into the CSV. Off by default so that
    /// repeated runs produce byte-identical files.
    pub record_wall_time: bool,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_t: 4,
            users: 2,
            adversaries: 1,
            subcarriers: 32,
            pilot_sets: vec![
                PilotSpec::Count(4),
                PilotSpec::Count(8),
                PilotSpec::Count(16),
            ],
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0],
            schemes: vec![Scheme::Rsma, Scheme::Sdma],
            strategy: 1,
            base_rho: 0.9,
            alpha: 0.6,
            perfect_csit: false,
            samples: 16,
            channel: ChannelModel::default(),
            eps_r: 1e-4,
            eps_m: 1e-4,
            max_outer: 200,
            max_inner: 20,
            solver_tol: crate::solver::DEFAULT_TOLERANCE,
            common_rate_mode: CommonRateMode::SampleAverage,
            sdma_start: true,
            seed: 1,
            record_wall_time: false,
            out_dir: PathBuf::from("results"),
        }
    }
}

/// Subcarrier count of the reduced CI grid.
pub const QUICK_SUBCARRIERS: usize = 8;

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t == 0 || self.users == 0 || self.subcarriers == 0 {
            return Err(Error::Config(
                "n_t, users and subcarriers must be >= 1".into(),
            ));
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config(
                "snr_db must be a nonempty list of finite values".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("schemes must not be empty".into()));
        }
        if self
            .schemes
            .iter()
            .enumerate()
            .any(|(i, s)| self.schemes[..i].contains(s))
        {
            return Err(Error::Config("schemes must be distinct".into()));
        }
        if !matches!(self.strategy, 1 | 2) {
            return Err(Error::Config(format!("unknown strategy {}", self.strategy)));
        }
        if !(0.0..=1.0).contains(&self.base_rho) {
            return Err(Error::Config("base_rho must lie in [0, 1]".into()));
        }
        if !(self.alpha >= 0.0) {
            return Err(Error::Config("alpha must be >= 0".into()));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be >= 1".into()));
        }
        if self.adversaries > 0 && self.pilot_sets.is_empty() {
            return Err(Error::Config(
                "pilot_sets must not be empty when adversaries are present".into(),
            ));
        }
        let mut sizes = Vec::new();
        for p in &self.pilot_sets {
            let size = p.resolve(self.subcarriers)?.len();
            if sizes.contains(&size) {
                return Err(Error::Config(format!("two pilot sets have {size} pilots")));
            }
            sizes.push(size);
        }
        match &self.channel {
            ChannelModel::Deterministic { au_spread, .. } => {
                if self.users > 2 || self.adversaries > 1 {
                    return Err(Error::Config(
                        "the deterministic scenario supports K <= 2 and L <= 1".into(),
                    ));
                }
                if !(*au_spread >= 0.0) {
                    return Err(Error::Config("au_spread must be >= 0".into()));
                }
            }
            ChannelModel::Selective {
                delay_spread,
                spacing,
                tap_spacing,
                taps,
                ..
            } => {
                if !(*delay_spread > 0.0 && *spacing > 0.0 && *tap_spacing > 0.0) || *taps == 0 {
                    return Err(Error::Config(
                        "selective channel parameters must be positive".into(),
                    ));
                }
            }
        }
        if !(self.eps_r > 0.0 && self.eps_m > 0.0 && self.solver_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::Config("iteration caps must be >= 1".into()));
        }
        Ok(())
    }

    /// Reduced scale for CI: `N = 8`, `M = 4`, coarse tolerances. Pilot
    /// sets keep their fraction of the band.
    pub fn quick(&self) -> Self {
        let n = QUICK_SUBCARRIERS;
        Self {
            subcarriers: n,
            pilot_sets: self
                .pilot_sets
                .iter()
                .map(|p| p.rescale(self.subcarriers, n))
                .collect(),
            samples: 4,
            eps_r: 1e-3,
            eps_m: 1e-3,
            max_outer: 50,
            max_inner: 10,
            solver_tol: 1e-6,
            ..self.clone()
        }
    }

    /// The pilot sets on the configured band; an empty list without
    /// adversaries stands for a single set with no pilots.
    pub fn resolved_pilots(&self) -> Result<Vec<Vec<usize>>> {
        if self.adversaries == 0 && self.pilot_sets.is_empty() {
            return Ok(vec![vec![]]);
        }
        self.pilot_sets
            .iter()
            .map(|p| p.resolve(self.subcarriers))
            .collect()
    }
}
