//! Synthetic frequency-selective channels from a tapped delay line.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{complex_gaussian, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub power: f64,
    /// Delay in seconds.
    pub delay: f64,
}

/// Power-delay profile with tap powers normalized to unit sum.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayProfile {
    taps: Vec<Tap>,
}

impl DelayProfile {
    pub fn new(taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::invalid("delay profile is empty"));
        }
        if taps.iter().any(|t| {
            !(t.power >= 0.0) || !(t.delay >= 0.0) || !t.power.is_finite() || !t.delay.is_finite()
        }) {
            return Err(Error::invalid(
                "tap powers and delays must be finite and nonnegative",
            ));
        }
        let total: f64 = taps.iter().map(|t| t.power).sum();
        if total <= 0.0 {
            return Err(Error::invalid("delay profile carries no power"));
        }
        let taps = taps
            .into_iter()
            .map(|t| Tap {
                power: t.power / total,
                delay: t.delay,
            })
            .collect();
        Ok(Self { taps })
    }

    pub fn single_tap() -> Self {
        Self {
            taps: vec![Tap {
                power: 1.0,
                delay: 0.0,
            }],
        }
    }

    /// Exponentially decaying profile, `power_i ∝ exp(-delay_i / rms)`, with
    /// `n_taps` taps spaced `tap_spacing` seconds apart.
    pub fn exponential(rms_delay_spread: f64, tap_spacing: f64, n_taps: usize) -> Result<Self> {
        if n_taps == 0 || !(rms_delay_spread > 0.0) || !(tap_spacing > 0.0) {
            return Err(Error::invalid(
                "exponential profile needs n_taps >= 1 and positive spreads",
            ));
        }
        Self::new(
            (0..n_taps)
                .map(|i| {
                    let delay = i as f64 * tap_spacing;
                    Tap {
                        power: (-delay / rms_delay_spread).exp(),
                        delay,
                    }
                })
                .collect(),
        )
    }

    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectiveConfig {
    pub n_t: usize,
    pub users: usize,
    pub adversaries: usize,
    pub subcarriers: usize,
    pub subcarrier_spacing: f64,
    pub seed: u64,
}

/// Frequency response of a spatially white tapped delay line per user:
/// `h_n = Σ_i a_i e^{-j2π n Δf τ_i}` with `a_i ~ CN(0, P_i I)`.
pub fn synth_selective_channel(
    profile: &DelayProfile,
    cfg: &SelectiveConfig,
) -> Result<ChannelSet> {
    if cfg.n_t == 0 || cfg.subcarriers == 0 || cfg.users == 0 {
        return Err(Error::invalid("selective channel needs n_t, N, K >= 1"));
    }
    if !(cfg.subcarrier_spacing > 0.0) {
        return Err(Error::invalid("subcarrier spacing must be positive"));
    }
    let draw = |group: u64, index: usize| -> Vec<CVector> {
        let mut rng = rng::stream(
            cfg.seed,
            rng::domain::SELECTIVE_CHANNEL,
            &[group, index as u64],
        );
        let taps: Vec<CVector> = profile
            .taps
            .iter()
            .map(|t| complex_gaussian(&mut rng, cfg.n_t, t.power))
            .collect();
        (0..cfg.subcarriers)
            .map(|n| {
                let mut h = CVector::zeros(cfg.n_t);
                for (a, t) in taps.iter().zip(&profile.taps) {
                    let rot = C64::from_polar(
                        1.0,
                        -2.0 * PI * n as f64 * cfg.subcarrier_spacing * t.delay,
                    );
                    h += a * rot;
                }
                h
            })
            .collect()
    };
    let users = (0..cfg.users).map(|k| draw(0, k)).collect();
    let adversaries = (0..cfg.adversaries).map(|l| draw(1, l)).collect();
    ChannelSet::new(cfg.n_t, cfg.subcarriers, users, adversaries)
}
