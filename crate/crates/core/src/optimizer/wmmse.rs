//! Weight and receive-filter updates and the augmented MSE they induce.

use crate::channel::SampleSet;
use crate::linalg::{weighted_outer_sum, CMatrix, CVector, C64};
use crate::metrics::{
    interference_terms, mmse_filter, mse_opt, target, PrecoderSet, Stage, NOISE_POWER,
};

/// Values indexed `[sample][user][subcarrier]` for both decoding stages.
#[derive(Debug, Clone, PartialEq)]
pub struct PerStream<T> {
    pub common: Vec<Vec<Vec<T>>>,
    pub private: Vec<Vec<Vec<T>>>,
}

impl<T: Copy> PerStream<T> {
    fn build(
        samples: &SampleSet,
        precoders: &PrecoderSet,
        f: impl Fn(&CVector, &CVector, &crate::metrics::InterferenceTerms, Stage) -> T,
    ) -> Self {
        let grid = |stage: Stage| {
            (0..samples.len())
                .map(|m| {
                    (0..samples.num_users())
                        .map(|k| {
                            (0..samples.subcarriers())
                                .map(|n| {
                                    let h = samples.channel(m, k, n);
                                    let terms = interference_terms(h, precoders, n, k);
                                    f(h, target(precoders, n, k, stage), &terms, stage)
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect()
        };
        Self {
            common: grid(Stage::Common),
            private: grid(Stage::Private),
        }
    }

    pub fn get(&self, stage: Stage, m: usize, k: usize, n: usize) -> T {
        match stage {
            Stage::Common => self.common[m][k][n],
            Stage::Private => self.private[m][k][n],
        }
    }
}

/// `u = 1/ε_opt`, the minimizer of `u ε - ln u`.
pub fn update_weights(samples: &SampleSet, precoders: &PrecoderSet) -> PerStream<f64> {
    PerStream::build(samples, precoders, |h, p, t, s| 1.0 / mse_opt(h, p, t, s))
}

/// MMSE receive filters.
pub fn update_filters(samples: &SampleSet, precoders: &PrecoderSet) -> PerStream<C64> {
    PerStream::build(samples, precoders, mmse_filter)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WmmseState {
    pub weights: PerStream<f64>,
    pub filters: PerStream<C64>,
}

impl WmmseState {
    pub fn at(samples: &SampleSet, precoders: &PrecoderSet) -> Self {
        Self {
            weights: update_weights(samples, precoders),
            filters: update_filters(samples, precoders),
        }
    }
}

/// `ξ = u E|g y - s|² - ln u` as a quadratic in the precoders of one
/// subcarrier:
/// `ξ = Σ_s p_sᴴ A p_s - 2 Re{cᴴ p_target} + d`, where `s` ranges over every
/// stream heard at `stage` (all streams for the common stage, all but the
/// common stream for the private stage).
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMse {
    pub stage: Stage,
    /// `A = u |g|² h hᴴ`.
    pub hessian: CMatrix,
    /// `c = u ḡ h`.
    pub linear: CVector,
    /// `d = u (|g|² N0 + 1) - ln u`.
    pub constant: f64,
}

pub fn augmented_mse_quadratic(u: f64, g: C64, h: &CVector, stage: Stage) -> AugmentedMse {
    let g2 = g.norm_sqr();
    AugmentedMse {
        stage,
        hessian: weighted_outer_sum(h.len(), [(u * g2, h)]),
        linear: h * (g.conj() * u),
        constant: u * (g2 * NOISE_POWER + 1.0) - u.ln(),
    }
}

impl AugmentedMse {
    pub fn eval(&self, precoders: &PrecoderSet, n: usize, k: usize) -> f64 {
        let quad: f64 = precoders
            .streams(n)
            .skip(usize::from(self.stage == Stage::Private))
            .map(|p| crate::linalg::hermitian_form(&self.hessian, p))
            .sum();
        let t = target(precoders, n, k, self.stage);
        quad - 2.0 * crate::linalg::inner(&self.linear, t).re + self.constant
    }
}

/// Sample-averaged `ξ̄` per `[user][subcarrier]` for the given stage.
pub fn average_augmented_mse(
    state: &WmmseState,
    samples: &SampleSet,
    precoders: &PrecoderSet,
    stage: Stage,
) -> Vec<Vec<f64>> {
    let m_count = samples.len() as f64;
    (0..samples.num_users())
        .map(|k| {
            (0..samples.subcarriers())
                .map(|n| {
                    (0..samples.len())
                        .map(|m| {
                            let q = augmented_mse_quadratic(
                                state.weights.get(stage, m, k, n),
                                state.filters.get(stage, m, k, n),
                                samples.channel(m, k, n),
                                stage,
                            );
                            q.eval(precoders, n, k)
                        })
                        .sum::<f64>()
                        / m_count
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::hermitian_eigen;
    use crate::metrics::{mse_with_filter, mutual_info_nats};
    use crate::rng;
    use rand::Rng;

    fn random_vec(rng: &mut impl Rng, n: usize) -> CVector {
        CVector::from_fn(n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_instance(seed: u64) -> (SampleSet, PrecoderSet) {
        let mut rng = rng::stream(seed, rng::domain::TEST, &[]);
        let (m, k, n, nt) = (3, 2, 2, 3);
        let samples = SampleSet::new(
            (0..m)
                .map(|_| {
                    (0..k)
                        .map(|_| (0..n).map(|_| random_vec(&mut rng, nt)).collect())
                        .collect()
                })
                .collect(),
        )
        .unwrap();
        let mut p = PrecoderSet::zeros(nt, n, k, 1);
        for s in 0..n {
            p.common[s] = random_vec(&mut rng, nt) * C64::new(2.0, 0.0);
            for u in 0..k {
                p.private[u][s] = random_vec(&mut rng, nt) * C64::new(2.0, 0.0);
            }
            p.jamming[0][s] = random_vec(&mut rng, nt);
        }
        (samples, p)
    }

    #[test]
    fn weights_invert_mse() {
        let (s, p) = random_instance(1);
        let w = update_weights(&s, &p);
        let h = s.channel(1, 0, 1);
        let t = interference_terms(h, &p, 1, 0);
        let eps = mse_opt(h, &p.private[0][1], &t, Stage::Private);
        assert!((w.private[1][0][1] * eps - 1.0).abs() < 1e-12);
        let zero = update_weights(&s, &PrecoderSet::zeros(3, 2, 2, 1));
        assert!(zero.common.iter().flatten().flatten().all(|&u| u == 1.0));
        let f = update_filters(&s, &PrecoderSet::zeros(3, 2, 2, 1));
        assert!(f
            .private
            .iter()
            .flatten()
            .flatten()
            .all(|g| g.norm() == 0.0));
    }

    #[test]
    fn scalar_filter() {
        let h = CVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let s = SampleSet::new(vec![vec![vec![h]]]).unwrap();
        let mut p = PrecoderSet::zeros(2, 1, 1, 0);
        p.private[0][0] = CVector::from_vec(vec![C64::new(3f64.sqrt(), 0.0), C64::new(0.0, 0.0)]);
        let f = update_filters(&s, &p);
        assert!((f.private[0][0][0] - C64::new(3f64.sqrt() / 4.0, 0.0)).norm() < 1e-12);
        assert!((update_weights(&s, &p).private[0][0][0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn fresh_state_gives_one_minus_info() {
        let (s, p) = random_instance(2);
        let st = WmmseState::at(&s, &p);
        for stage in [Stage::Common, Stage::Private] {
            for m in 0..s.len() {
                for k in 0..2 {
                    for n in 0..2 {
                        let h = s.channel(m, k, n);
                        let q = augmented_mse_quadratic(
                            st.weights.get(stage, m, k, n),
                            st.filters.get(stage, m, k, n),
                            h,
                            stage,
                        );
                        let t = interference_terms(h, &p, n, k);
                        let info = mutual_info_nats(h, target(&p, n, k, stage), &t, stage);
                        assert!((q.eval(&p, n, k) - (1.0 - info)).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn quadratic_matches_filter_mse() {
        let (s, p) = random_instance(3);
        let h = s.channel(0, 1, 0);
        let g = C64::new(0.3, -0.2);
        let u = 1.7;
        for stage in [Stage::Common, Stage::Private] {
            let q = augmented_mse_quadratic(u, g, h, stage);
            let t = interference_terms(h, &p, 0, 1);
            let direct = u * mse_with_filter(h, target(&p, 0, 1, stage), &t, stage, g) - u.ln();
            assert!((q.eval(&p, 0, 1) - direct).abs() < 1e-12);
        }
        let unit = augmented_mse_quadratic(1.0, C64::new(0.0, 0.0), h, Stage::Private);
        assert_eq!(unit.eval(&p, 0, 1), 1.0);
    }

    #[test]
    fn hessian_is_psd() {
        let mut rng = rng::stream(9, rng::domain::TEST, &[]);
        for _ in 0..50 {
            let h = random_vec(&mut rng, 4);
            let g = C64::new(rng.random::<f64>(), rng.random::<f64>());
            let q = augmented_mse_quadratic(rng.random::<f64>() * 5.0 + 0.1, g, &h, Stage::Common);
            let (vals, _) = hermitian_eigen(&q.hessian);
            assert!(vals.iter().all(|&v| v >= -1e-12));
        }
    }

    #[test]
    fn filters_minimize_average_mse() {
        let (s, p) = random_instance(4);
        let f = update_filters(&s, &p);
        let mut rng = rng::stream(5, rng::domain::TEST, &[]);
        let avg = |g: &dyn Fn(usize) -> C64| -> f64 {
            (0..s.len())
                .map(|m| {
                    let h = s.channel(m, 0, 0);
                    let t = interference_terms(h, &p, 0, 0);
                    mse_with_filter(h, &p.private[0][0], &t, Stage::Private, g(m))
                })
                .sum::<f64>()
        };
        let best = avg(&|m| f.private[m][0][0]);
        for _ in 0..100 {
            let d: Vec<C64> = (0..s.len())
                .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * 0.1)
                .collect();
            assert!(avg(&|m| f.private[m][0][0] + d[m]) >= best - 1e-12);
        }
    }
}
