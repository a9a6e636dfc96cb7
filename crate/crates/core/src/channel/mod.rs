//! Channel generation for information users (IUs) and adversarial users (AUs).
//!
//! Channels are stored as column vectors whose entries are the conjugates of
//! the row-vector convention `hᴴ = [1, e^{jφ}, …]`, i.e. entry `m` of a
//! steering channel is `e^{-jmφ}`. Rates are invariant to a global
//! conjugation, so precoder dumps are interpreted against this convention.

mod csit;
mod selective;
mod stats;

pub use csit::{csit_error_variance, draw_csit_samples, CsitModel, SampleSet};
pub use selective::{synth_selective_channel, DelayProfile, SelectiveConfig, Tap};
pub use stats::{
    au_covariance_quadrature, au_covariance_uniform_phase, evenly_spaced_pilots,
    largest_eigenvalue, AuStatistics,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

/// True per-subcarrier channels of all IUs and AUs.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    n_t: usize,
    subcarriers: usize,
    users: Vec<Vec<CVector>>,
    adversaries: Vec<Vec<CVector>>,
}

impl ChannelSet {
    /// `users[k][n]` and `adversaries[l][n]` are `n_t`-vectors.
    pub fn new(
        n_t: usize,
        subcarriers: usize,
        users: Vec<Vec<CVector>>,
        adversaries: Vec<Vec<CVector>>,
    ) -> Result<Self> {
        if n_t == 0 || subcarriers == 0 || users.is_empty() {
            return Err(Error::invalid(
                "channel set needs n_t >= 1, N >= 1 and at least one user",
            ));
        }
        for (kind, set) in [("user", &users), ("adversary", &adversaries)] {
            for (i, per_sub) in set.iter().enumerate() {
                if per_sub.len() != subcarriers {
                    return Err(Error::invalid(format!(
                        "{kind} {i} has {} subcarriers, expected {subcarriers}",
                        per_sub.len()
                    )));
                }
                for h in per_sub {
                    if h.len() != n_t {
                        return Err(Error::invalid(format!(
                            "{kind} {i} channel has length {}, expected {n_t}",
                            h.len()
                        )));
                    }
                    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                        return Err(Error::invalid(format!("{kind} {i} channel is not finite")));
                    }
                }
            }
        }
        Ok(Self {
            n_t,
            subcarriers,
            users,
            adversaries,
        })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_adversaries(&self) -> usize {
        self.adversaries.len()
    }

    pub fn user(&self, k: usize, n: usize) -> &CVector {
        &self.users[k][n]
    }

    pub fn adversary(&self, l: usize, n: usize) -> &CVector {
        &self.adversaries[l][n]
    }

    pub fn users(&self) -> &[Vec<CVector>] {
        &self.users
    }

    pub fn adversaries(&self) -> &[Vec<CVector>] {
        &self.adversaries
    }

    /// True when every channel is identical across subcarriers.
    pub fn is_flat(&self) -> bool {
        self.users
            .iter()
            .chain(self.adversaries.iter())
            .all(|per_sub| per_sub.iter().all(|h| h == &per_sub[0]))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ChannelSetJson::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ChannelSetJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

/// JSON layout: nested arrays `[user][subcarrier][antenna] = [re, im]`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelSetJson {
    n_t: usize,
    subcarriers: usize,
    users: Vec<Vec<Vec<[f64; 2]>>>,
    adversaries: Vec<Vec<Vec<[f64; 2]>>>,
}

fn pack(set: &[Vec<CVector>]) -> Vec<Vec<Vec<[f64; 2]>>> {
    set.iter()
        .map(|per_sub| {
            per_sub
                .iter()
                .map(|h| h.iter().map(|z| [z.re, z.im]).collect())
                .collect()
        })
        .collect()
}

fn unpack(set: Vec<Vec<Vec<[f64; 2]>>>) -> Vec<Vec<CVector>> {
    set.into_iter()
        .map(|per_sub| {
            per_sub
                .into_iter()
                .map(|h| {
                    CVector::from_iterator(h.len(), h.into_iter().map(|[re, im]| C64::new(re, im)))
                })
                .collect()
        })
        .collect()
}

impl From<&ChannelSet> for ChannelSetJson {
    fn from(c: &ChannelSet) -> Self {
        Self {
            n_t: c.n_t,
            subcarriers: c.subcarriers,
            users: pack(&c.users),
            adversaries: pack(&c.adversaries),
        }
    }
}

impl TryFrom<ChannelSetJson> for ChannelSet {
    type Error = Error;

    fn try_from(raw: ChannelSetJson) -> Result<Self> {
        ChannelSet::new(
            raw.n_t,
            raw.subcarriers,
            unpack(raw.users),
            unpack(raw.adversaries),
        )
    }
}

/// Uniform-linear-array steering channel with entries `e^{-j m φ}`.
pub fn steering_channel(phase: f64, n_t: usize) -> CVector {
    CVector::from_fn(n_t, |m, _| C64::from_polar(1.0, -(m as f64) * phase))
}

/// Flat two-user scenario: IU 1 at broadside (all ones), IU 2 at `theta`,
/// optional AU at `beta`, identical on every subcarrier.
pub fn make_deterministic_scenario(
    theta: f64,
    beta: f64,
    n_t: usize,
    subcarriers: usize,
    users: usize,
    adversaries: usize,
) -> Result<ChannelSet> {
    if !(1..=2).contains(&users) || adversaries > 1 {
        return Err(Error::Unsupported(format!(
            "deterministic scenario supports K in {{1, 2}} and L in {{0, 1}}, got K={users}, L={adversaries}"
        )));
    }
    let per_user = [steering_channel(0.0, n_t), steering_channel(theta, n_t)];
    let users = per_user[..users]
        .iter()
        .map(|h| vec![h.clone(); subcarriers])
        .collect();
    let adversaries = (0..adversaries)
        .map(|_| vec![steering_channel(beta, n_t); subcarriers])
        .collect();
    ChannelSet::new(n_t, subcarriers, users, adversaries)
}

/// Circularly-symmetric complex Gaussian vector with per-entry variance `var`.
pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize, var: f64) -> CVector {
    let s = (0.5 * var).sqrt();
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(s * re, s * im)
    })
}
