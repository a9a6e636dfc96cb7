//! Builds the per-iteration convex subproblem in the scaled real variables
//! `v = [Re p; Im p] / √P_t` and maps solutions back to precoders.

use crate::channel::{AuStatistics, SampleSet};
use crate::linalg::{embed_hermitian, embed_linear, from_real, to_real, CMatrix, C64};
use crate::metrics::{PrecoderSet, Stage};
use crate::solver::{
    AffineConstraint, ConvexSubproblem, DenseMatrix, QuadBlock, QuadConstraint, QuadForm,
};

use super::config::CommonRateMode;
use super::sca::linearize_jamming;
use super::wmmse::{augmented_mse_quadratic, WmmseState};

/// Variable layout: one block per subcarrier holding
/// `[p_c (RSMA), p_1..p_K, f_1..f_L (jammed pilots only), X_1..X_K (RSMA)]`.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub n_t: usize,
    pub users: usize,
    pub adversaries: usize,
    pub subcarriers: usize,
    pub common: bool,
    /// Whether jamming streams exist on each subcarrier.
    pub jam: Vec<bool>,
    pub power: f64,
}

impl Layout {
    pub fn new(
        n_t: usize,
        users: usize,
        adversaries: usize,
        common: bool,
        thresholds: &[Vec<f64>],
        subcarriers: usize,
        power: f64,
    ) -> Self {
        let jam = (0..subcarriers)
            .map(|n| thresholds.iter().any(|t| t[n] > 0.0))
            .collect();
        Self {
            n_t,
            users,
            adversaries,
            subcarriers,
            common,
            jam,
            power,
        }
    }

    fn stream_count(&self, n: usize) -> usize {
        usize::from(self.common) + self.users + if self.jam[n] { self.adversaries } else { 0 }
    }

    fn stream_dim(&self) -> usize {
        2 * self.n_t
    }

    pub fn block_size(&self, n: usize) -> usize {
        self.stream_count(n) * self.stream_dim() + if self.common { self.users } else { 0 }
    }

    pub fn blocks(&self) -> Vec<usize> {
        (0..self.subcarriers).map(|n| self.block_size(n)).collect()
    }

    fn offsets(&self) -> Vec<usize> {
        let mut acc = 0;
        (0..self.subcarriers)
            .map(|n| {
                let o = acc;
                acc += self.block_size(n);
                o
            })
            .collect()
    }

    fn common_slot(&self) -> Option<usize> {
        self.common.then_some(0)
    }

    fn private_slot(&self, k: usize) -> usize {
        usize::from(self.common) + k
    }

    fn jamming_slot(&self, n: usize, l: usize) -> Option<usize> {
        self.jam[n].then(|| usize::from(self.common) + self.users + l)
    }

    /// Offset of `X_k` within block `n`.
    fn x_slot(&self, n: usize, k: usize) -> Option<usize> {
        self.common
            .then(|| self.stream_count(n) * self.stream_dim() + k)
    }

    /// Streams heard at `stage` on subcarrier `n`, as slots.
    fn heard(&self, n: usize, stage: Stage) -> Vec<usize> {
        let first = match stage {
            Stage::Common => 0,
            Stage::Private => usize::from(self.common),
        };
        (first..self.stream_count(n)).collect()
    }

    /// `(slot, precoder)` pairs present on subcarrier `n`.
    fn slots<'a>(&self, p: &'a PrecoderSet, n: usize) -> Vec<(usize, &'a crate::linalg::CVector)> {
        let mut out = Vec::new();
        if let Some(s) = self.common_slot() {
            out.push((s, &p.common[n]));
        }
        for k in 0..self.users {
            out.push((self.private_slot(k), &p.private[k][n]));
        }
        for l in 0..self.adversaries {
            if let Some(s) = self.jamming_slot(n, l) {
                out.push((s, &p.jamming[l][n]));
            }
        }
        out
    }

    /// Flat variable vector for given precoders and split variables `x[k][n]`.
    pub fn pack(&self, p: &PrecoderSet, x: Option<&[Vec<f64>]>) -> Vec<f64> {
        let scale = 1.0 / self.power.sqrt();
        let mut out = Vec::new();
        for n in 0..self.subcarriers {
            let mut block = vec![0.0; self.block_size(n)];
            for (slot, v) in self.slots(p, n) {
                let r = to_real(v);
                let o = slot * self.stream_dim();
                for (i, val) in r.iter().enumerate() {
                    block[o + i] = val * scale;
                }
            }
            if let Some(x) = x {
                for k in 0..self.users {
                    if let Some(o) = self.x_slot(n, k) {
                        block[o] = x[k][n];
                    }
                }
            }
            out.extend(block);
        }
        out
    }

    /// Precoders and split variables `x[k][n]` from a flat vector.
    pub fn unpack(&self, flat: &[f64]) -> (PrecoderSet, Vec<Vec<f64>>) {
        let scale = C64::new(self.power.sqrt(), 0.0);
        let mut p = PrecoderSet::zeros(self.n_t, self.subcarriers, self.users, self.adversaries);
        let mut x = vec![vec![0.0; self.subcarriers]; self.users];
        let d = self.stream_dim();
        for (n, base) in self.offsets().into_iter().enumerate() {
            let get =
                |slot: usize| from_real(&flat[base + slot * d..base + (slot + 1) * d]) * scale;
            if let Some(s) = self.common_slot() {
                p.common[n] = get(s);
            }
            for k in 0..self.users {
                p.private[k][n] = get(self.private_slot(k));
                if let Some(o) = self.x_slot(n, k) {
                    x[k][n] = flat[base + o];
                }
            }
            for l in 0..self.adversaries {
                if let Some(s) = self.jamming_slot(n, l) {
                    p.jamming[l][n] = get(s);
                }
            }
        }
        (p, x)
    }
}

/// Adds the real embedding of `a` to the diagonal sub-block of every slot.
fn add_stream_blocks(m: &mut DenseMatrix, a: &CMatrix, slots: &[usize], d: usize) {
    let e = embed_hermitian(a);
    for &s in slots {
        let o = s * d;
        for i in 0..d {
            for j in 0..d {
                let v = e[(i, j)];
                if v != 0.0 {
                    m.add(o + i, o + j, v);
                }
            }
        }
    }
}

fn add_linear(
    lin: &mut Vec<(usize, f64)>,
    base: usize,
    coeffs: &nalgebra::DVector<f64>,
    scale: f64,
) {
    for (i, c) in coeffs.iter().enumerate() {
        if *c != 0.0 {
            lin.push((base + i, c * scale));
        }
    }
}

/// Quadratic, linear and constant parts of the (averaged) augmented MSE of
/// user `k` on subcarrier `n`, over the given samples.
struct MseAccum {
    hessian: CMatrix,
    linear: crate::linalg::CVector,
    constant: f64,
}

fn accumulate(
    state: &WmmseState,
    samples: &SampleSet,
    stage: Stage,
    k: usize,
    n: usize,
    which: &[usize],
    weight: f64,
) -> MseAccum {
    let n_t = samples.n_t();
    let mut acc = MseAccum {
        hessian: CMatrix::zeros(n_t, n_t),
        linear: crate::linalg::zeros(n_t),
        constant: 0.0,
    };
    for &m in which {
        let q = augmented_mse_quadratic(
            state.weights.get(stage, m, k, n),
            state.filters.get(stage, m, k, n),
            samples.channel(m, k, n),
            stage,
        );
        acc.hessian += q.hessian * C64::new(weight, 0.0);
        acc.linear += q.linear * C64::new(weight, 0.0);
        acc.constant += q.constant * weight;
    }
    acc
}

pub(crate) struct SubproblemInputs<'a> {
    pub layout: &'a Layout,
    pub samples: &'a SampleSet,
    pub state: &'a WmmseState,
    /// Taylor point of the jamming linearization.
    pub taylor: &'a PrecoderSet,
    pub stats: &'a AuStatistics,
    pub thresholds: &'a [Vec<f64>],
    pub common_mode: CommonRateMode,
}

/// Objective `(1/N) Σ_n Σ_k (X_{k,n} + ξ̄_{k,n})` subject to common-rate,
/// linearized jamming, total power and sign constraints.
pub(crate) fn build_subproblem(inp: &SubproblemInputs) -> ConvexSubproblem {
    let lay = inp.layout;
    let d = lay.stream_dim();
    let pt = lay.power;
    let sq = pt.sqrt();
    let offsets = lay.offsets();
    let m_count = inp.samples.len();
    let all_samples: Vec<usize> = (0..m_count).collect();
    let inv_n = 1.0 / lay.subcarriers as f64;

    let mut objective = QuadForm::default();
    let mut quadratic_constraints = Vec::new();
    let mut affine_constraints = Vec::new();
    let mut sign_constraints = Vec::new();

    for n in 0..lay.subcarriers {
        let base = offsets[n];
        let size = lay.block_size(n);

        // Objective: private augmented MSEs.
        let mut q = DenseMatrix::zeros(size);
        for k in 0..lay.users {
            let acc = accumulate(
                inp.state,
                inp.samples,
                Stage::Private,
                k,
                n,
                &all_samples,
                inv_n / m_count as f64,
            );
            add_stream_blocks(
                &mut q,
                &(acc.hessian * C64::new(pt, 0.0)),
                &lay.heard(n, Stage::Private),
                d,
            );
            add_linear(
                &mut objective.linear,
                base + lay.private_slot(k) * d,
                &embed_linear(&acc.linear),
                -2.0 * sq,
            );
            objective.constant += acc.constant;
            if let Some(o) = lay.x_slot(n, k) {
                objective.linear.push((base + o, inv_n));
            }
        }
        objective.quadratic.push(QuadBlock {
            block: n,
            matrix: q,
        });

        // Common-stream decodability.
        if let Some(cs) = lay.common_slot() {
            let groups: Vec<(String, Vec<usize>)> = match inp.common_mode {
                CommonRateMode::SampleAverage => vec![(String::new(), all_samples.clone())],
                CommonRateMode::PerSample => {
                    (0..m_count).map(|m| (format!(",m={m}"), vec![m])).collect()
                }
            };
            for k in 0..lay.users {
                for (tag, which) in &groups {
                    let acc = accumulate(
                        inp.state,
                        inp.samples,
                        Stage::Common,
                        k,
                        n,
                        which,
                        1.0 / which.len() as f64,
                    );
                    let mut cq = DenseMatrix::zeros(size);
                    add_stream_blocks(
                        &mut cq,
                        &(acc.hessian * C64::new(pt, 0.0)),
                        &lay.heard(n, Stage::Common),
                        d,
                    );
                    let mut linear = Vec::new();
                    add_linear(
                        &mut linear,
                        base + cs * d,
                        &embed_linear(&acc.linear),
                        -2.0 * sq,
                    );
                    for j in 0..lay.users {
                        linear.push((base + lay.x_slot(n, j).expect("common layout has X"), -1.0));
                    }
                    quadratic_constraints.push(QuadConstraint {
                        label: format!("common_rate[k={k},n={n}{tag}]"),
                        form: QuadForm {
                            quadratic: vec![QuadBlock {
                                block: n,
                                matrix: cq,
                            }],
                            linear,
                            constant: acc.constant - 1.0,
                        },
                    });
                }
            }
            for k in 0..lay.users {
                sign_constraints.push(base + lay.x_slot(n, k).expect("common layout has X"));
            }
        }

        // Linearized jamming power.
        for l in 0..lay.adversaries {
            let thr = inp.thresholds.get(l).map_or(0.0, |t| t[n]);
            if thr <= 0.0 {
                continue;
            }
            let r = inp.stats.covariance(l, n);
            let lin = linearize_jamming(inp.taylor, r, n);
            // Gradients follow `PrecoderSet::streams` order: common, private, jamming.
            let mut coeffs = Vec::new();
            let mut push = |slot: Option<usize>, g: &crate::linalg::CVector| {
                if let Some(s) = slot {
                    add_linear(&mut coeffs, base + s * d, &embed_linear(g), 2.0 / sq);
                }
            };
            push(lay.common_slot(), &lin.gradients[0]);
            for k in 0..lay.users {
                push(Some(lay.private_slot(k)), &lin.gradients[1 + k]);
            }
            for j in 0..lay.adversaries {
                push(lay.jamming_slot(n, j), &lin.gradients[1 + lay.users + j]);
            }
            affine_constraints.push(AffineConstraint {
                label: format!("jamming[l={l},n={n}]"),
                coeffs,
                lower: (thr - lin.offset) / pt,
            });
        }
    }

    // Total power.
    let power_blocks = (0..lay.subcarriers)
        .map(|n| {
            let size = lay.block_size(n);
            let mut m = DenseMatrix::zeros(size);
            for i in 0..lay.stream_count(n) * d {
                m.add(i, i, 1.0);
            }
            QuadBlock {
                block: n,
                matrix: m,
            }
        })
        .collect();
    quadratic_constraints.push(QuadConstraint {
        label: "power".into(),
        form: QuadForm {
            quadratic: power_blocks,
            linear: vec![],
            constant: -1.0,
        },
    });

    ConvexSubproblem {
        blocks: lay.blocks(),
        objective,
        quadratic_constraints,
        affine_constraints,
        sign_constraints,
    }
}
