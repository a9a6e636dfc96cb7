//! Imperfect CSIT for information users and the SAA sample sets drawn from it.

use super::{complex_gaussian, ChannelSet};
use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};
use crate::rng;

/// Channel estimates `ĥ_{k,n}` with error model
/// `h = √(1-σ²) ĥ + σ h̃`, `h̃` i.i.d. `CN(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsitModel {
    estimates: Vec<Vec<CVector>>,
    error_variance: f64,
    alpha: f64,
}

impl CsitModel {
    pub fn new(estimates: Vec<Vec<CVector>>, error_variance: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&error_variance) {
            return Err(Error::invalid(format!(
                "CSIT error variance {error_variance} outside [0, 1]"
            )));
        }
        if !(alpha >= 0.0) {
            return Err(Error::invalid(format!(
                "CSIT exponent {alpha} must be >= 0"
            )));
        }
        if estimates.is_empty() || estimates[0].is_empty() {
            return Err(Error::invalid(
                "CSIT needs at least one user and subcarrier",
            ));
        }
        let n_sub = estimates[0].len();
        let n_t = estimates[0][0].len();
        if estimates
            .iter()
            .any(|per_sub| per_sub.len() != n_sub || per_sub.iter().any(|h| h.len() != n_t))
        {
            return Err(Error::invalid(
                "CSIT estimates have inconsistent dimensions",
            ));
        }
        Ok(Self {
            estimates,
            error_variance,
            alpha,
        })
    }

    /// Uses the IU channels of `channels` as the transmitter's estimates.
    pub fn from_channels(channels: &ChannelSet, error_variance: f64, alpha: f64) -> Result<Self> {
        Self::new(channels.users().to_vec(), error_variance, alpha)
    }

    pub fn perfect(channels: &ChannelSet) -> Self {
        Self::from_channels(channels, 0.0, 0.0).expect("channel set is validated")
    }

    pub fn estimate(&self, k: usize, n: usize) -> &CVector {
        &self.estimates[k][n]
    }

    pub fn estimates(&self) -> &[Vec<CVector>] {
        &self.estimates
    }

    pub fn error_variance(&self) -> f64 {
        self.error_variance
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_users(&self) -> usize {
        self.estimates.len()
    }

    pub fn subcarriers(&self) -> usize {
        self.estimates[0].len()
    }

    pub fn n_t(&self) -> usize {
        self.estimates[0][0].len()
    }
}

/// `σ_ie² = (P_t / N)^(-α)`, clamped to `[0, 1]`.
pub fn csit_error_variance(power: f64, subcarriers: usize, alpha: f64) -> f64 {
    let ratio = power / subcarriers as f64;
    ratio.powf(-alpha).clamp(0.0, 1.0)
}

/// SAA channel realizations, `samples[m][k][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    samples: Vec<Vec<Vec<CVector>>>,
}

impl SampleSet {
    pub fn new(samples: Vec<Vec<Vec<CVector>>>) -> Result<Self> {
        if samples.is_empty() || samples[0].is_empty() || samples[0][0].is_empty() {
            return Err(Error::invalid("sample set needs M, K, N >= 1"));
        }
        let (k, n) = (samples[0].len(), samples[0][0].len());
        if samples
            .iter()
            .any(|s| s.len() != k || s.iter().any(|per_sub| per_sub.len() != n))
        {
            return Err(Error::invalid("sample set has inconsistent dimensions"));
        }
        Ok(Self { samples })
    }

    /// A single "sample" holding the exact channels.
    pub fn exact(channels: &ChannelSet) -> Self {
        Self {
            samples: vec![channels.users().to_vec()],
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_users(&self) -> usize {
        self.samples[0].len()
    }

    pub fn subcarriers(&self) -> usize {
        self.samples[0][0].len()
    }

    pub fn n_t(&self) -> usize {
        self.samples[0][0][0].len()
    }

    pub fn channel(&self, m: usize, k: usize, n: usize) -> &CVector {
        &self.samples[m][k][n]
    }
}

/// Draws `m` SAA realizations of the IU channels; sample `i` uses its own
/// RNG stream so the set is reproducible and order independent.
pub fn draw_csit_samples(csit: &CsitModel, m: usize, seed: u64) -> Result<SampleSet> {
    if m == 0 {
        return Err(Error::invalid("SAA sample count must be >= 1"));
    }
    let var = csit.error_variance;
    let sigma = var.sqrt();
    let scale = C64::new((1.0 - var).sqrt(), 0.0);
    let n_t = csit.n_t();
    let samples = (0..m)
        .map(|i| {
            if var == 0.0 {
                return csit.estimates.clone();
            }
            let mut rng = rng::stream(seed, rng::domain::CSIT_SAMPLES, &[i as u64]);
            csit.estimates
                .iter()
                .map(|per_sub| {
                    per_sub
                        .iter()
                        .map(|h_hat| {
                            h_hat * scale
                                + complex_gaussian(&mut rng, n_t, 1.0) * C64::new(sigma, 0.0)
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    SampleSet::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::make_deterministic_scenario;

    fn model(var: f64) -> CsitModel {
        let c = make_deterministic_scenario(1.2, 0.4, 4, 2, 2, 0).unwrap();
        CsitModel::from_channels(&c, var, 0.6).unwrap()
    }

    #[test]
    fn error_variance_formula() {
        assert_eq!(csit_error_variance(32.0, 32, 0.6), 1.0);
        assert_eq!(csit_error_variance(1000.0, 32, 0.0), 1.0);
        let expected = (100.0f64 / 32.0).powf(-0.6);
        assert!((csit_error_variance(100.0, 32, 0.6) - expected).abs() < 1e-15);
        assert!((expected - 0.5048).abs() < 1e-4);
        // clamped below P_t = N
        assert_eq!(csit_error_variance(3.0, 32, 0.6), 1.0);
    }

    #[test]
    fn zero_error_samples_equal_estimate() {
        let csit = model(0.0);
        let s = draw_csit_samples(&csit, 5, 1).unwrap();
        for m in 0..5 {
            for k in 0..2 {
                for n in 0..2 {
                    assert_eq!(s.channel(m, k, n), csit.estimate(k, n));
                }
            }
        }
    }

    #[test]
    fn samples_are_deterministic() {
        let csit = model(0.3);
        assert_eq!(
            draw_csit_samples(&csit, 4, 9).unwrap(),
            draw_csit_samples(&csit, 4, 9).unwrap()
        );
        assert_ne!(
            draw_csit_samples(&csit, 4, 9).unwrap(),
            draw_csit_samples(&csit, 4, 10).unwrap()
        );
    }

    #[test]
    fn sample_moments_converge() {
        let var = 0.3;
        let csit = model(var);
        let m = 10_000;
        let s = draw_csit_samples(&csit, m, 77).unwrap();
        let scale = (1.0 - var).sqrt();
        let sigma = var.sqrt();
        for k in 0..2 {
            for a in 0..4 {
                let target = csit.estimate(k, 0)[a] * scale;
                let mut mean = C64::new(0.0, 0.0);
                let mut second = 0.0;
                for i in 0..m {
                    let e = s.channel(i, k, 0)[a] - target;
                    mean += e;
                    second += e.norm_sqr();
                }
                mean /= m as f64;
                let bound = 3.0 * sigma / (m as f64).sqrt();
                assert!(
                    mean.re.abs() < bound && mean.im.abs() < bound,
                    "mean {mean}"
                );
                let var_hat = second / m as f64;
                assert!((var_hat - var).abs() < 0.1 * var, "variance {var_hat}");
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(draw_csit_samples(&model(0.1), 0, 1).is_err());
        let c = make_deterministic_scenario(1.2, 0.4, 4, 2, 2, 0).unwrap();
        assert!(CsitModel::from_channels(&c, 1.5, 0.6).is_err());
        assert!(CsitModel::from_channels(&c, 0.5, -1.0).is_err());
    }
}
