//! First-order lower bounds of the jamming power and the thresholds they
//! must exceed.

use crate::channel::AuStatistics;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_form, inner, CMatrix, CVector};
use crate::metrics::PrecoderSet;

/// Affine minorant `Λ̄ᵗ(P) = Σ_s 2Re{(p_sᵗ)ᴴ R p_s} - (p_sᵗ)ᴴ R p_sᵗ` of the
/// average focused power on one subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct JammingLinearization {
    /// `R p_sᵗ` per stream in [`PrecoderSet::streams`] order.
    pub gradients: Vec<CVector>,
    /// `-Σ_s (p_sᵗ)ᴴ R p_sᵗ`.
    pub offset: f64,
}

impl JammingLinearization {
    pub fn eval<'a>(&self, streams: impl IntoIterator<Item = &'a CVector>) -> f64 {
        let linear: f64 = self
            .gradients
            .iter()
            .zip(streams)
            .map(|(g, p)| 2.0 * inner(g, p).re)
            .sum();
        linear + self.offset
    }
}

/// `φ̄ᵗ(p) = 2Re{(pᵗ)ᴴRp} - (pᵗ)ᴴRpᵗ`.
pub fn taylor_bound(p: &CVector, p_t: &CVector, r: &CMatrix) -> f64 {
    let rp = r * p_t;
    2.0 * inner(&rp, p).re - hermitian_form(r, p_t)
}

pub fn linearize_jamming(precoders: &PrecoderSet, r: &CMatrix, n: usize) -> JammingLinearization {
    let mut gradients = Vec::new();
    let mut offset = 0.0;
    for p in precoders.streams(n) {
        let rp = r * p;
        offset -= inner(p, &rp).re;
        gradients.push(rp);
    }
    JammingLinearization { gradients, offset }
}

/// `J_thr = ρ P_t τ / (|S_p| L)`.
pub fn jamming_threshold(
    rho: f64,
    power: f64,
    pilot_count: usize,
    adversaries: usize,
    tau: f64,
) -> f64 {
    rho * power / (pilot_count * adversaries) as f64 * tau
}

/// Strategy 1 scales `base_rho` with the pilot density, strategy 2 uses it
/// as is. Clamped to `[0, 1]`.
pub fn threshold_strategy(
    strategy: u8,
    pilot_count: usize,
    subcarriers: usize,
    base_rho: f64,
) -> Result<f64> {
    if pilot_count > subcarriers {
        return Err(Error::invalid(format!(
            "{pilot_count} pilots exceed {subcarriers} subcarriers"
        )));
    }
    let rho = match strategy {
        1 => base_rho * pilot_count as f64 / (subcarriers as f64 / 2.0),
        2 => base_rho,
        other => {
            return Err(Error::invalid(format!(
                "unknown threshold strategy {other}"
            )))
        }
    };
    Ok(rho.clamp(0.0, 1.0))
}

/// Thresholds `[l][n]`, zero off the pilot set.
pub fn thresholds(stats: &AuStatistics, rho: f64, power: f64, subcarriers: usize) -> Vec<Vec<f64>> {
    let l_count = stats.num_adversaries();
    let pilots = stats.pilots().len();
    (0..l_count)
        .map(|l| {
            (0..subcarriers)
                .map(|n| {
                    if stats.is_pilot(n) && pilots > 0 {
                        jamming_threshold(rho, power, pilots, l_count, stats.tau(l, n))
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}
