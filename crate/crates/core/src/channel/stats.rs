//! Second-order statistics of the AU channels and pilot placement.

use crate::error::{Error, Result};
use crate::linalg::{check_hermitian, hermitian_eigen, CMatrix, C64};

/// Statistical CSIT of the adversarial users.
#[derive(Debug, Clone, PartialEq)]
pub struct AuStatistics {
    covariances: Vec<Vec<CMatrix>>,
    tau: Vec<Vec<f64>>,
    pilots: Vec<usize>,
}

impl AuStatistics {
    /// `covariances[l][n]` per AU and subcarrier; `pilots` are zero-based
    /// subcarrier indices.
    pub fn new(covariances: Vec<Vec<CMatrix>>, pilots: Vec<usize>) -> Result<Self> {
        let n_sub = covariances.first().map(|c| c.len());
        let mut pilots = pilots;
        pilots.sort_unstable();
        pilots.dedup();
        if let Some(n_sub) = n_sub {
            if let Some(&bad) = pilots.iter().find(|&&p| p >= n_sub) {
                return Err(Error::invalid(format!(
                    "pilot subcarrier {bad} out of range for N={n_sub}"
                )));
            }
        }
        let mut tau = Vec::with_capacity(covariances.len());
        for per_sub in &covariances {
            if Some(per_sub.len()) != n_sub {
                return Err(Error::invalid(
                    "AU covariances have inconsistent subcarrier counts",
                ));
            }
            tau.push(
                per_sub
                    .iter()
                    .map(largest_eigenvalue)
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        Ok(Self {
            covariances,
            tau,
            pilots,
        })
    }

    /// Same covariance for every AU and subcarrier.
    pub fn uniform(
        covariance: CMatrix,
        adversaries: usize,
        subcarriers: usize,
        pilots: Vec<usize>,
    ) -> Result<Self> {
        let per_sub = vec![covariance; subcarriers];
        Self::new(vec![per_sub; adversaries], pilots)
    }

    /// No adversaries.
    pub fn none() -> Self {
        Self {
            covariances: vec![],
            tau: vec![],
            pilots: vec![],
        }
    }

    pub fn num_adversaries(&self) -> usize {
        self.covariances.len()
    }

    pub fn covariance(&self, l: usize, n: usize) -> &CMatrix {
        &self.covariances[l][n]
    }

    pub fn tau(&self, l: usize, n: usize) -> f64 {
        self.tau[l][n]
    }

    pub fn pilots(&self) -> &[usize] {
        &self.pilots
    }

    pub fn is_pilot(&self, n: usize) -> bool {
        self.pilots.binary_search(&n).is_ok()
    }

    /// True when jamming constraints exist.
    pub fn jamming_active(&self) -> bool {
        self.num_adversaries() > 0 && !self.pilots.is_empty()
    }
}

/// `R_{m,p} = (1/δ) ∫₀^δ e^{-j(m-p)β} dβ = e^{-j d δ/2} sinc(d δ / 2)`,
/// the covariance of a steering channel with phase uniform on `[0, δ]`.
pub fn au_covariance_uniform_phase(delta: f64, n_t: usize) -> CMatrix {
    CMatrix::from_fn(n_t, n_t, |m, p| {
        let d = m as f64 - p as f64;
        if d == 0.0 {
            return C64::new(1.0, 0.0);
        }
        let half = 0.5 * d * delta;
        let sinc = if half.abs() < 1e-8 {
            1.0 - half * half / 6.0
        } else {
            half.sin() / half
        };
        C64::from_polar(sinc, -half)
    })
}

/// Composite Simpson evaluation of the same integral, kept as a
/// cross-check for the closed form.
pub fn au_covariance_quadrature(delta: f64, n_t: usize, intervals: usize) -> CMatrix {
    if delta == 0.0 {
        return CMatrix::from_element(n_t, n_t, C64::new(1.0, 0.0));
    }
    let intervals = intervals.max(2) + intervals % 2;
    let h = delta / intervals as f64;
    CMatrix::from_fn(n_t, n_t, |m, p| {
        let d = m as f64 - p as f64;
        let f = |beta: f64| C64::from_polar(1.0, -d * beta);
        let mut acc = f(0.0) + f(delta);
        for i in 1..intervals {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += f(i as f64 * h) * w;
        }
        acc * (h / 3.0) / delta
    })
}

/// Spectral radius of a Hermitian PSD matrix.
pub fn largest_eigenvalue(r: &CMatrix) -> Result<f64> {
    check_hermitian(r, 1e-12)?;
    let (values, _) = hermitian_eigen(r);
    let top = values.first().copied().unwrap_or(0.0);
    let bottom = values.last().copied().unwrap_or(0.0);
    Ok(top.max(-bottom).max(0.0))
}

/// `count` pilots evenly spread over `subcarriers`, starting at the first
/// subcarrier: indices `⌊j N / count⌋`, zero-based.
pub fn evenly_spaced_pilots(count: usize, subcarriers: usize) -> Result<Vec<usize>> {
    if count > subcarriers {
        return Err(Error::invalid(format!(
            "{count} pilots do not fit in {subcarriers} subcarriers"
        )));
    }
    Ok((0..count).map(|j| j * subcarriers / count).collect())
}
