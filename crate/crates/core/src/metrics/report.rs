use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use super::{check_split, interference_terms, mutual_info_nats, target, PrecoderSet, Stage};
use crate::channel::SampleSet;
use crate::error::{Error, Result};

/// Slack allowed between the common split and the decodable common rate.
pub const SPLIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JammingReport {
    pub adversary: usize,
    pub subcarrier: usize,
    /// `Λ̄` from the AU covariance.
    pub average: f64,
    /// `Λ` on the true AU channel, when known.
    pub realized: Option<f64>,
    pub threshold: f64,
}

impl JammingReport {
    pub fn margin(&self) -> f64 {
        self.average - self.threshold
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub converged: bool,
    /// Sum-rate (bits per subcarrier) at the initial point and after every
    /// outer iteration.
    pub wsr_trace: Vec<f64>,
    /// Per outer iteration: subproblem objective at the warm start followed
    /// by the value after each inner solve (nats per subcarrier).
    pub wmmse_trace: Vec<Vec<f64>>,
    /// Subproblem solves that hit the iteration cap (their iterates are
    /// still feasible).
    #[serde(default)]
    pub solver_max_iter: usize,
    /// Name of the starting point that produced the returned solution.
    #[serde(default)]
    pub start: String,
}

/// Rates of one precoder set. Mutual informations are sample averages over
/// the SAA set and expressed in bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// `I_{k,n}`, `[k][n]`.
    pub private_info: Vec<Vec<f64>>,
    /// `I_{c,k,n}`, `[k][n]`.
    pub common_info: Vec<Vec<f64>>,
    /// `C_{k,n}`, `[k][n]`.
    pub common_split: Vec<Vec<f64>>,
    /// `R_k = I_k / N`.
    pub private_rates: Vec<f64>,
    /// `C_k / N`.
    pub common_rates: Vec<f64>,
    pub common_rate: f64,
    pub sum_rate: f64,
    pub jamming: Vec<JammingReport>,
    pub diagnostics: Diagnostics,
}

impl RateReport {
    pub fn num_users(&self) -> usize {
        self.private_rates.len()
    }

    /// Rate of user `k` including its share of the common stream.
    pub fn user_rate(&self, k: usize) -> f64 {
        self.private_rates[k] + self.common_rates[k]
    }

    pub fn min_jamming_margin(&self) -> Option<f64> {
        self.jamming
            .iter()
            .map(JammingReport::margin)
            .reduce(f64::min)
    }
}

/// Sample-averaged `(I_private, I_common)` in nats, each `[k][n]`.
pub fn sample_average_info(
    samples: &SampleSet,
    precoders: &PrecoderSet,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let (m, users, subs) = (samples.len(), samples.num_users(), samples.subcarriers());
    let mut private = vec![vec![0.0; subs]; users];
    let mut common = vec![vec![0.0; subs]; users];
    for k in 0..users {
        for n in 0..subs {
            let (mut ip, mut ic) = (0.0, 0.0);
            for s in 0..m {
                let h = samples.channel(s, k, n);
                let terms = interference_terms(h, precoders, n, k);
                ip += mutual_info_nats(
                    h,
                    target(precoders, n, k, Stage::Private),
                    &terms,
                    Stage::Private,
                );
                ic += mutual_info_nats(
                    h,
                    target(precoders, n, k, Stage::Common),
                    &terms,
                    Stage::Common,
                );
            }
            private[k][n] = ip / m as f64;
            common[k][n] = ic / m as f64;
        }
    }
    (private, common)
}

/// Builds a report from an explicit common split (bits). `None` means no
/// common rate is assigned (SDMA).
pub fn rate_report(
    samples: &SampleSet,
    precoders: &PrecoderSet,
    split: Option<&[Vec<f64>]>,
) -> Result<RateReport> {
    let (users, subs) = (samples.num_users(), samples.subcarriers());
    if precoders.num_users() != users || precoders.subcarriers != subs {
        return Err(Error::invalid(
            "precoders do not match the channel dimensions",
        ));
    }
    let (private_nats, common_nats) = sample_average_info(samples, precoders);
    let to_bits = |v: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
        v.into_iter()
            .map(|row| row.into_iter().map(|x| x / LN_2).collect())
            .collect()
    };
    let private_info = to_bits(private_nats);
    let common_info = to_bits(common_nats);
    let common_split = match split {
        Some(c) => {
            check_split(c, users, subs)?;
            c.to_vec()
        }
        None => vec![vec![0.0; subs]; users],
    };
    for n in 0..subs {
        let total: f64 = (0..users).map(|k| common_split[k][n]).sum();
        let decodable = (0..users)
            .map(|k| common_info[k][n])
            .fold(f64::INFINITY, f64::min);
        if (0..users).any(|k| !(common_split[k][n] >= 0.0)) || total > decodable + SPLIT_TOLERANCE {
            return Err(Error::Infeasible {
                reason: format!(
                    "common split on subcarrier {n} sums to {total:.6e} but only {decodable:.6e} bits are decodable"
                ),
                constraints: vec![format!("common_rate[n={n}]")],
            });
        }
    }
    let nf = subs as f64;
    let private_rates: Vec<f64> = private_info
        .iter()
        .map(|row| row.iter().sum::<f64>() / nf)
        .collect();
    let common_rates: Vec<f64> = common_split
        .iter()
        .map(|row| row.iter().sum::<f64>() / nf)
        .collect();
    let common_rate = common_rates.iter().sum();
    let sum_rate = private_rates
        .iter()
        .zip(&common_rates)
        .map(|(p, c)| p + c)
        .sum();
    Ok(RateReport {
        private_info,
        common_info,
        common_split,
        private_rates,
        common_rates,
        common_rate,
        sum_rate,
        jamming: vec![],
        diagnostics: Diagnostics::default(),
    })
}
