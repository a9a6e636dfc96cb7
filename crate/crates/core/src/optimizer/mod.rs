//! Alternating WMMSE / successive convex approximation design of the
//! communication and jamming precoders.
//!
//! The outer loop refreshes the MMSE weights and filters at the current
//! precoders and records the sum-rate; the inner loop re-solves the convex
//! subproblem with the jamming constraint linearized at the latest iterate.

mod assemble;
pub mod config;
mod init;
pub mod sca;
pub mod wmmse;

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

pub use config::{CommonRateMode, Scheme, SolveConfig};
pub use init::initialize;
pub use sca::{
    jamming_threshold, linearize_jamming, taylor_bound, threshold_strategy, thresholds,
    JammingLinearization,
};
pub use wmmse::{
    augmented_mse_quadratic, update_filters, update_weights, AugmentedMse, PerStream, WmmseState,
};

use crate::channel::{draw_csit_samples, AuStatistics, CsitModel, SampleSet};
use crate::error::{Error, Result};
use crate::metrics::{
    interference_terms, jamming_power_avg, mutual_info_nats, rate_report, sample_average_info,
    Diagnostics, JammingReport, PrecoderSet, RateReport, Stage,
};
use crate::solver::{max_violation, ConvexSolver, ConvexSubproblem, InteriorPoint, SolveStatus};
use assemble::{build_subproblem, Layout, SubproblemInputs};

/// Share of the private power moved into the common stream when RSMA is
/// started from the SDMA solution.
const COMMON_SEED_FRACTION: f64 = 0.3;

/// Common-rate split variables `X = -C` in nats, `[k][n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommonSplitVars {
    pub x: Vec<Vec<f64>>,
}

impl CommonSplitVars {
    /// `C = -X` in bits.
    pub fn rates_bits(&self) -> Vec<Vec<f64>> {
        self.x
            .iter()
            .map(|row| row.iter().map(|v| -v / LN_2).collect())
            .collect()
    }
}

/// One convergence trace record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub start: String,
    pub outer: usize,
    /// Zero for the outer-loop record, otherwise the inner iteration.
    pub inner: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wsr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wmmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_violation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub precoders: PrecoderSet,
    pub split: CommonSplitVars,
    pub report: RateReport,
    /// Trace of every start that was run, in order.
    pub trace: Vec<TraceEvent>,
}

impl Solution {
    pub fn trace_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.trace {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// The SDMA variant of a configuration: no common stream, no common-rate
/// constraints and no split variables.
pub fn sdma_restrict(config: &SolveConfig) -> SolveConfig {
    SolveConfig {
        scheme: Scheme::Sdma,
        ..config.clone()
    }
}

/// Decodable common information per subcarrier (nats): the smallest
/// sample-averaged `I_c` over users, or under [`CommonRateMode::PerSample`]
/// the smallest over users and samples.
pub fn common_budget(
    samples: &SampleSet,
    precoders: &PrecoderSet,
    mode: CommonRateMode,
) -> Vec<f64> {
    let (users, subs) = (samples.num_users(), samples.subcarriers());
    match mode {
        CommonRateMode::SampleAverage => {
            let (_, ic) = sample_average_info(samples, precoders);
            (0..subs)
                .map(|n| (0..users).map(|k| ic[k][n]).fold(f64::INFINITY, f64::min))
                .collect()
        }
        CommonRateMode::PerSample => (0..subs)
            .map(|n| {
                let mut best = f64::INFINITY;
                for m in 0..samples.len() {
                    for k in 0..users {
                        let h = samples.channel(m, k, n);
                        let t = interference_terms(h, precoders, n, k);
                        best =
                            best.min(mutual_info_nats(h, &precoders.common[n], &t, Stage::Common));
                    }
                }
                best
            })
            .collect(),
    }
}

/// Sum-rate in bits per subcarrier with the common rate set to the
/// decodable common information on each subcarrier.
pub fn weighted_sum_rate(
    samples: &SampleSet,
    precoders: &PrecoderSet,
    scheme: Scheme,
    mode: CommonRateMode,
) -> f64 {
    let (ip, _) = sample_average_info(samples, precoders);
    let subs = samples.subcarriers();
    let mut total: f64 = ip.iter().flatten().sum();
    if scheme.has_common() {
        total += common_budget(samples, precoders, mode).iter().sum::<f64>();
    }
    total / subs as f64 / LN_2
}

/// SAA sample set; exact CSIT collapses to a single sample.
pub fn saa_samples(csit: &CsitModel, config: &SolveConfig) -> Result<SampleSet> {
    if csit.error_variance() == 0.0 {
        return draw_csit_samples(csit, 1, config.seed);
    }
    draw_csit_samples(csit, config.samples, config.seed)
}

struct Problem<'a> {
    csit: &'a CsitModel,
    stats: &'a AuStatistics,
    config: &'a SolveConfig,
    samples: SampleSet,
    thresholds: Vec<Vec<f64>>,
    layout: Layout,
    solver: InteriorPoint,
}

struct RunResult {
    precoders: PrecoderSet,
    x: Vec<Vec<f64>>,
    wsr: f64,
    diagnostics: Diagnostics,
    trace: Vec<TraceEvent>,
}

impl Problem<'_> {
    /// `X` with `Σ_k X_k = -min_k Ī_c` (nats), spread evenly.
    fn tight_split(&self, p: &PrecoderSet) -> Vec<Vec<f64>> {
        let users = self.csit.num_users();
        let subs = self.csit.subcarriers();
        if !self.config.scheme.has_common() {
            return vec![vec![0.0; subs]; users];
        }
        let budget = common_budget(&self.samples, p, self.config.common_rate_mode);
        let mut x = vec![vec![0.0; subs]; users];
        for (n, b) in budget.iter().enumerate() {
            for row in x.iter_mut() {
                row[n] = -b / users as f64;
            }
        }
        x
    }

    fn run(&self, start: PrecoderSet, name: &str) -> Result<RunResult> {
        let cfg = self.config;
        let mut p_hat = start;
        let mut x_hat = self.tight_split(&p_hat);
        let mut wsr_prev =
            weighted_sum_rate(&self.samples, &p_hat, cfg.scheme, cfg.common_rate_mode);
        let mut diag = Diagnostics {
            wsr_trace: vec![wsr_prev],
            start: name.to_string(),
            ..Diagnostics::default()
        };
        let mut trace = vec![TraceEvent {
            start: name.to_string(),
            outer: 0,
            inner: 0,
            wsr: Some(wsr_prev),
            wmmse: None,
            max_violation: None,
        }];
        for outer in 1..=cfg.max_outer {
            let state = WmmseState::at(&self.samples, &p_hat);
            let start_split = self.tight_split(&p_hat);
            let mut p_t = p_hat.clone();
            let mut x_t = start_split.clone();
            let mut wmmse_prev = {
                let prob = self.subproblem(&state, &p_t);
                prob.objective
                    .eval(&self.layout.pack(&p_t, Some(&x_t)), &prob.block_offsets())
            };
            let mut wmmse_trace = vec![wmmse_prev];
            for inner in 1..=cfg.max_inner {
                let prob = self.subproblem(&state, &p_t);
                let res = self.solver.solve(&prob, cfg.solver_tol)?;
                match res.status {
                    SolveStatus::Optimal => {}
                    SolveStatus::MaxIter => {
                        diag.solver_max_iter += 1;
                    }
                    SolveStatus::Infeasible => {
                        return Err(Error::Infeasible {
                            reason: format!("subproblem infeasible at outer iteration {outer}, inner iteration {inner}"),
                            constraints: res.violated,
                        })
                    }
                }
                diag.inner_iterations += 1;
                // The current iterate is feasible for this subproblem, so a
                // worse answer means the solve fell short; keep the iterate.
                if !(res.objective_value <= wmmse_prev) {
                    wmmse_trace.push(wmmse_prev);
                    break;
                }
                let (p_new, x_new) = self.layout.unpack(&res.primal);
                p_t = p_new;
                x_t = x_new;
                let wmmse = res.objective_value;
                wmmse_trace.push(wmmse);
                trace.push(TraceEvent {
                    start: name.to_string(),
                    outer,
                    inner,
                    wsr: None,
                    wmmse: Some(wmmse),
                    max_violation: Some(max_violation(&prob, &res.primal)),
                });
                let done = (wmmse - wmmse_prev).abs() <= cfg.eps_m;
                wmmse_prev = wmmse;
                if done {
                    break;
                }
            }
            diag.wmmse_trace.push(wmmse_trace);
            diag.outer_iterations = outer;
            p_hat = p_t;
            x_hat = x_t;
            let wsr = weighted_sum_rate(&self.samples, &p_hat, cfg.scheme, cfg.common_rate_mode);
            diag.wsr_trace.push(wsr);
            trace.push(TraceEvent {
                start: name.to_string(),
                outer,
                inner: 0,
                wsr: Some(wsr),
                wmmse: None,
                max_violation: None,
            });
            let done = (wsr - wsr_prev).abs() <= cfg.eps_r;
            wsr_prev = wsr;
            if done {
                diag.converged = true;
                break;
            }
        }
        Ok(RunResult {
            precoders: p_hat,
            x: x_hat,
            wsr: wsr_prev,
            diagnostics: diag,
            trace,
        })
    }

    fn subproblem(&self, state: &WmmseState, taylor: &PrecoderSet) -> ConvexSubproblem {
        build_subproblem(&SubproblemInputs {
            layout: &self.layout,
            samples: &self.samples,
            state,
            taylor,
            stats: self.stats,
            thresholds: &self.thresholds,
            common_mode: self.config.common_rate_mode,
        })
    }

    /// Common split in bits, scaled so that `Σ_k C_{k,n}` equals the
    /// decodable common information `min_k Ī_{c,k,n}`.
    fn final_split(&self, p: &PrecoderSet, x: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
        if !self.config.scheme.has_common() {
            return None;
        }
        let budgets = common_budget(&self.samples, p, self.config.common_rate_mode);
        let users = x.len();
        let subs = self.csit.subcarriers();
        let mut c = vec![vec![0.0; subs]; users];
        for n in 0..subs {
            let budget = budgets[n].max(0.0);
            let solver: Vec<f64> = (0..users).map(|k| (-x[k][n]).max(0.0)).collect();
            let total: f64 = solver.iter().sum();
            for k in 0..users {
                let share = if total > 0.0 {
                    solver[k] / total
                } else {
                    1.0 / users as f64
                };
                c[k][n] = budget * share / LN_2;
            }
        }
        Some(c)
    }

    fn finish(&self, run: RunResult, mut trace: Vec<TraceEvent>) -> Result<Solution> {
        let split_bits = self.final_split(&run.precoders, &run.x);
        let mut report = rate_report(&self.samples, &run.precoders, split_bits.as_deref())?;
        report.diagnostics = run.diagnostics;
        report.jamming = jamming_reports(self.stats, &self.thresholds, &run.precoders);
        let x = match &split_bits {
            Some(c) => c
                .iter()
                .map(|row| row.iter().map(|v| -v * LN_2).collect())
                .collect(),
            None => run.x,
        };
        trace.extend(run.trace);
        Ok(Solution {
            precoders: run.precoders,
            split: CommonSplitVars { x },
            report,
            trace,
        })
    }
}

/// Average focused power against the thresholds on every jammed pilot.
pub fn jamming_reports(
    stats: &AuStatistics,
    thresholds: &[Vec<f64>],
    p: &PrecoderSet,
) -> Vec<JammingReport> {
    let mut out = Vec::new();
    for l in 0..stats.num_adversaries() {
        for &n in stats.pilots() {
            out.push(JammingReport {
                adversary: l,
                subcarrier: n,
                average: jamming_power_avg(stats.covariance(l, n), p, n),
                realized: None,
                threshold: thresholds[l][n],
            });
        }
    }
    out
}

fn check_dimensions(csit: &CsitModel, stats: &AuStatistics) -> Result<()> {
    if stats.num_adversaries() > 0 {
        let r = stats.covariance(0, 0);
        if r.nrows() != csit.n_t() {
            return Err(Error::invalid(
                "AU covariance size does not match the antenna count",
            ));
        }
        if stats.pilots().iter().any(|&n| n >= csit.subcarriers()) {
            return Err(Error::invalid("pilot index outside the subcarrier range"));
        }
        for l in 0..stats.num_adversaries() {
            if (0..csit.subcarriers()).any(|n| stats.covariance(l, n).nrows() != csit.n_t()) {
                return Err(Error::invalid(
                    "AU statistics do not cover every subcarrier",
                ));
            }
        }
        if !stats.jamming_active() {
            return Err(Error::invalid("jamming requires a nonempty pilot set"));
        }
    }
    Ok(())
}

fn problem<'a>(
    csit: &'a CsitModel,
    stats: &'a AuStatistics,
    config: &'a SolveConfig,
) -> Result<Problem<'a>> {
    config.validate()?;
    check_dimensions(csit, stats)?;
    let subs = csit.subcarriers();
    let thresholds = thresholds(stats, config.rho, config.power, subs);
    let layout = Layout::new(
        csit.n_t(),
        csit.num_users(),
        stats.num_adversaries(),
        config.scheme.has_common(),
        &thresholds,
        subs,
        config.power,
    );
    Ok(Problem {
        csit,
        stats,
        config,
        samples: saa_samples(csit, config)?,
        thresholds,
        layout,
        solver: InteriorPoint::default(),
    })
}

/// Runs the two-loop algorithm from the default starting point. For RSMA
/// with `sdma_start`, the SDMA solution is computed as well and serves both
/// as a candidate (a common stream of zero power is RSMA-feasible) and, with
/// part of its power moved into the common stream, as a second start; the
/// best sum-rate wins.
pub fn optimize(csit: &CsitModel, stats: &AuStatistics, config: &SolveConfig) -> Result<Solution> {
    if config.scheme == Scheme::Rsma && config.sdma_start {
        let sdma = optimize(csit, stats, &sdma_restrict(config))?;
        return optimize_with_sdma(csit, stats, config, &sdma);
    }
    let prob = problem(csit, stats, config)?;
    let start = initialize(csit, stats, &prob.thresholds, config)?;
    let run = prob.run(start, "default")?;
    prob.finish(run, vec![])
}

/// Convex subproblem of the first inner iteration from the default start,
/// with that start as a flat vector. Variables are the precoders scaled by
/// `1/√P_t` followed by the split variables, block by subcarrier.
pub fn initial_subproblem(
    csit: &CsitModel,
    stats: &AuStatistics,
    config: &SolveConfig,
) -> Result<(ConvexSubproblem, Vec<f64>)> {
    let prob = problem(csit, stats, config)?;
    let start = initialize(csit, stats, &prob.thresholds, config)?;
    let state = WmmseState::at(&prob.samples, &start);
    let sub = prob.subproblem(&state, &start);
    let x0 = prob.layout.pack(&start, Some(&prob.tight_split(&start)));
    Ok((sub, x0))
}

/// RSMA multi-start reusing an SDMA solution computed on the same inputs.
pub fn optimize_with_sdma(
    csit: &CsitModel,
    stats: &AuStatistics,
    config: &SolveConfig,
    sdma: &Solution,
) -> Result<Solution> {
    if config.scheme != Scheme::Rsma {
        return Err(Error::invalid("multi-start from SDMA applies to RSMA only"));
    }
    let prob = problem(csit, stats, config)?;
    let start = initialize(csit, stats, &prob.thresholds, config)?;
    let mut best = prob.run(start, "default")?;
    let mut trace = Vec::new();

    let seeded = init::seed_common_stream(
        &sdma.precoders,
        csit,
        stats,
        &prob.thresholds,
        COMMON_SEED_FRACTION,
    );
    let second = prob.run(seeded, "sdma_seeded")?;
    if second.wsr > best.wsr {
        trace.append(&mut best.trace);
        best = second;
    } else {
        let mut t = second.trace;
        trace.append(&mut t);
    }

    let sdma_wsr = weighted_sum_rate(
        &prob.samples,
        &sdma.precoders,
        Scheme::Rsma,
        config.common_rate_mode,
    );
    if sdma_wsr > best.wsr {
        trace.append(&mut best.trace);
        let mut diagnostics = sdma.report.diagnostics.clone();
        diagnostics.start = "sdma".into();
        best = RunResult {
            precoders: sdma.precoders.clone(),
            x: prob.tight_split(&sdma.precoders),
            wsr: sdma_wsr,
            diagnostics,
            trace: vec![],
        };
    }
    prob.finish(best, trace)
}
