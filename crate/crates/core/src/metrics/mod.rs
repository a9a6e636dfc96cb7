//! Per-subcarrier link metrics: interference terms, SINR, MMSE filter, MSE,
//! mutual information and focused jamming power.
//!
//! Noise power is fixed to one. Reported rates are in bits; the `_nats`
//! variants feed the optimizer's natural-log bookkeeping.

mod report;

pub use report::{rate_report, sample_average_info, Diagnostics, JammingReport, RateReport};

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{abs2_inner, hermitian_form, inner, norm2, CVector, C64};

pub const NOISE_POWER: f64 = 1.0;

/// Which decoding stage of successive interference cancellation a metric
/// refers to: the common stream (all private streams act as interference)
/// or a private stream (common stream already removed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    Common,
    Private,
}

/// Precoders for every subcarrier: common stream, one private stream per IU
/// and one artificial-noise stream per AU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecoderSet {
    pub n_t: usize,
    pub subcarriers: usize,
    #[serde(with = "crate::linalg::serde_vecs")]
    pub common: Vec<CVector>,
    #[serde(with = "crate::linalg::serde_nested")]
    pub private: Vec<Vec<CVector>>,
    #[serde(with = "crate::linalg::serde_nested")]
    pub jamming: Vec<Vec<CVector>>,
}

impl PrecoderSet {
    pub fn zeros(n_t: usize, subcarriers: usize, users: usize, adversaries: usize) -> Self {
        let z = CVector::zeros(n_t);
        Self {
            n_t,
            subcarriers,
            common: vec![z.clone(); subcarriers],
            private: vec![vec![z.clone(); subcarriers]; users],
            jamming: vec![vec![z; subcarriers]; adversaries],
        }
    }

    pub fn num_users(&self) -> usize {
        self.private.len()
    }

    pub fn num_adversaries(&self) -> usize {
        self.jamming.len()
    }

    /// Every precoder active on subcarrier `n`.
    pub fn streams(&self, n: usize) -> impl Iterator<Item = &CVector> {
        std::iter::once(&self.common[n])
            .chain(self.private.iter().map(move |p| &p[n]))
            .chain(self.jamming.iter().map(move |f| &f[n]))
    }

    pub fn subcarrier_power(&self, n: usize) -> f64 {
        self.streams(n).map(norm2).sum()
    }

    pub fn total_power(&self) -> f64 {
        (0..self.subcarriers)
            .map(|n| self.subcarrier_power(n))
            .sum()
    }

    /// Multiplies every precoder by `factor`.
    pub fn scale(&mut self, factor: f64) {
        let f = C64::new(factor, 0.0);
        for p in self
            .common
            .iter_mut()
            .chain(self.private.iter_mut().flatten())
            .chain(self.jamming.iter_mut().flatten())
        {
            *p *= f;
        }
    }
}

/// Received interference powers at one IU on one subcarrier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceTerms {
    /// `Z_c`: all private streams, seen while decoding the common stream.
    pub common: f64,
    /// `Z`: the other users' private streams.
    pub private: f64,
    /// `J`: artificial-noise leakage.
    pub jamming: f64,
    pub noise: f64,
}

impl InterferenceTerms {
    pub fn new(common: f64, private: f64, jamming: f64) -> Self {
        Self {
            common,
            private,
            jamming,
            noise: NOISE_POWER,
        }
    }

    /// Interference plus noise for the given stage.
    pub fn disturbance(&self, stage: Stage) -> f64 {
        let z = match stage {
            Stage::Common => self.common,
            Stage::Private => self.private,
        };
        z + self.jamming + self.noise
    }
}

pub fn interference_terms(
    h: &CVector,
    precoders: &PrecoderSet,
    n: usize,
    k: usize,
) -> InterferenceTerms {
    let mut common = 0.0;
    let mut private = 0.0;
    for (i, p) in precoders.private.iter().enumerate() {
        let g = abs2_inner(h, &p[n]);
        common += g;
        if i != k {
            private += g;
        }
    }
    let jamming = precoders.jamming.iter().map(|f| abs2_inner(h, &f[n])).sum();
    InterferenceTerms::new(common, private, jamming)
}

/// The precoder decoded at `stage` by user `k`.
pub fn target(precoders: &PrecoderSet, n: usize, k: usize, stage: Stage) -> &CVector {
    match stage {
        Stage::Common => &precoders.common[n],
        Stage::Private => &precoders.private[k][n],
    }
}

pub fn sinr(h: &CVector, p: &CVector, terms: &InterferenceTerms, stage: Stage) -> f64 {
    abs2_inner(h, p) / terms.disturbance(stage)
}

/// `g = pᴴh / (|hᴴp|² + Z + J + N0)`.
pub fn mmse_filter(h: &CVector, p: &CVector, terms: &InterferenceTerms, stage: Stage) -> C64 {
    let hp = inner(h, p);
    let total = hp.norm_sqr() + terms.disturbance(stage);
    if total == 0.0 {
        return C64::new(0.0, 0.0);
    }
    hp.conj() / total
}

/// `ε = (Z + J + N0) / (|hᴴp|² + Z + J + N0)`, defined as one when both
/// numerator and denominator vanish.
pub fn mse_opt(h: &CVector, p: &CVector, terms: &InterferenceTerms, stage: Stage) -> f64 {
    let d = terms.disturbance(stage);
    let total = abs2_inner(h, p) + d;
    if total == 0.0 {
        return 1.0;
    }
    d / total
}

/// `E|g y - s|²` for an arbitrary receive filter `g`.
pub fn mse_with_filter(
    h: &CVector,
    p: &CVector,
    terms: &InterferenceTerms,
    stage: Stage,
    g: C64,
) -> f64 {
    let hp = inner(h, p);
    g.norm_sqr() * (hp.norm_sqr() + terms.disturbance(stage)) - 2.0 * (g * hp).re + 1.0
}

pub fn mutual_info_nats(h: &CVector, p: &CVector, terms: &InterferenceTerms, stage: Stage) -> f64 {
    -mse_opt(h, p, terms, stage).ln()
}

/// `I = -log₂ ε = log₂(1 + SINR)`.
pub fn mutual_info(h: &CVector, p: &CVector, terms: &InterferenceTerms, stage: Stage) -> f64 {
    mutual_info_nats(h, p, terms, stage) / LN_2
}

/// Instantaneous focused power `Λ` on subcarrier `n` for a known AU channel.
pub fn jamming_power_realized(g: &CVector, precoders: &PrecoderSet, n: usize) -> f64 {
    precoders.streams(n).map(|p| abs2_inner(g, p)).sum()
}

/// Average focused power `Λ̄ = Σ_streams pᴴ R p` on subcarrier `n`.
pub fn jamming_power_avg(r: &crate::linalg::CMatrix, precoders: &PrecoderSet, n: usize) -> f64 {
    precoders.streams(n).map(|p| hermitian_form(r, p)).sum()
}

pub(crate) fn check_split(split: &[Vec<f64>], users: usize, subcarriers: usize) -> Result<()> {
    if split.len() != users || split.iter().any(|c| c.len() != subcarriers) {
        return Err(Error::invalid("common split has wrong dimensions"));
    }
    Ok(())
}
