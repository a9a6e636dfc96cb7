//! Starting points for the alternating optimization.

use crate::channel::{AuStatistics, CsitModel};
use crate::error::{Error, Result};
use crate::linalg::{dominant_eigenvector, norm2, weighted_outer_sum, CVector, C64};
use crate::metrics::{jamming_power_avg, PrecoderSet};

use super::config::{Scheme, SolveConfig};

/// Dominant left singular vector of `[ĥ_1 … ĥ_K]` on subcarrier `n`.
pub(crate) fn common_direction(csit: &CsitModel, n: usize) -> CVector {
    let users = csit.num_users();
    let gram = weighted_outer_sum(csit.n_t(), (0..users).map(|k| (1.0, csit.estimate(k, n))));
    dominant_eigenvector(&gram)
}

fn unit(v: &CVector) -> CVector {
    let norm = norm2(v).sqrt();
    if norm > 0.0 {
        v / C64::new(norm, 0.0)
    } else {
        let mut e = CVector::zeros(v.len());
        e[0] = C64::new(1.0, 0.0);
        e
    }
}

/// Jamming precoders `√(J_thr/τ) v_max(R)` on the pilots meet each threshold
/// by themselves; the remaining power is split equally over subcarriers and,
/// for RSMA, half to the common stream and half to private MRT beams.
pub fn initialize(
    csit: &CsitModel,
    stats: &AuStatistics,
    thresholds: &[Vec<f64>],
    config: &SolveConfig,
) -> Result<PrecoderSet> {
    let (n_t, subs, users) = (csit.n_t(), csit.subcarriers(), csit.num_users());
    let adversaries = stats.num_adversaries();
    let mut p = PrecoderSet::zeros(n_t, subs, users, adversaries);
    let mut jam_power = 0.0;
    for l in 0..adversaries {
        for n in 0..subs {
            let thr = thresholds[l][n];
            if thr <= 0.0 {
                continue;
            }
            let tau = stats.tau(l, n);
            let amp = (thr / tau).sqrt();
            p.jamming[l][n] = dominant_eigenvector(stats.covariance(l, n)) * C64::new(amp, 0.0);
            jam_power += thr / tau;
        }
    }
    if jam_power > config.power * (1.0 + 1e-12) {
        return Err(Error::Infeasible {
            reason: format!(
                "jamming initialization needs {jam_power:.6e} but the budget is {:.6e}",
                config.power
            ),
            constraints: vec!["power".into()],
        });
    }
    let per_sub = (config.power - jam_power).max(0.0) / subs as f64;
    let common_share = if config.scheme == Scheme::Rsma {
        0.5
    } else {
        0.0
    };
    for n in 0..subs {
        if common_share > 0.0 {
            p.common[n] =
                common_direction(csit, n) * C64::new((common_share * per_sub).sqrt(), 0.0);
        }
        let amp = ((1.0 - common_share) * per_sub / users as f64).sqrt();
        for k in 0..users {
            p.private[k][n] = unit(csit.estimate(k, n)) * C64::new(amp, 0.0);
        }
    }
    Ok(p)
}

/// Moves a fraction `delta` of the private power on every subcarrier into
/// the common stream. On jammed pilots the common beam falls back to the
/// AU's dominant eigenvector when the common direction would break a
/// threshold; subcarriers where neither keeps all thresholds are left alone.
pub(crate) fn seed_common_stream(
    base: &PrecoderSet,
    csit: &CsitModel,
    stats: &AuStatistics,
    thresholds: &[Vec<f64>],
    delta: f64,
) -> PrecoderSet {
    let mut out = base.clone();
    let keep = C64::new((1.0 - delta).sqrt(), 0.0);
    for n in 0..base.subcarriers {
        let private_power: f64 = base.private.iter().map(|p| norm2(&p[n])).sum();
        if private_power <= 0.0 {
            continue;
        }
        let amp = C64::new((delta * private_power).sqrt(), 0.0);
        let mut candidates = vec![common_direction(csit, n)];
        if stats.num_adversaries() > 0 {
            let sum_r = (0..stats.num_adversaries())
                .map(|l| stats.covariance(l, n).clone())
                .fold(crate::linalg::CMatrix::zeros(base.n_t, base.n_t), |a, b| {
                    a + b
                });
            candidates.push(dominant_eigenvector(&sum_r));
        }
        for dir in candidates {
            let mut trial = out.clone();
            trial.common[n] = &base.common[n] + dir * amp;
            for k in 0..base.num_users() {
                trial.private[k][n] = &base.private[k][n] * keep;
            }
            let ok = (0..stats.num_adversaries()).all(|l| {
                let thr = thresholds[l][n];
                thr <= 0.0 || jamming_power_avg(stats.covariance(l, n), &trial, n) >= thr
            });
            if ok && trial.subcarrier_power(n) <= base.subcarrier_power(n) * (1.0 + 1e-12) {
                out = trial;
                break;
            }
        }
    }
    out
}
