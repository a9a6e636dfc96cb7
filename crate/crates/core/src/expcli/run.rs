use std::time::Instant;

use rayon::prelude::*;

use super::config::{ChannelModel, ExperimentConfig};
use super::table::{CellStatus, ResultRow, ResultTable};
use crate::channel::{
    au_covariance_uniform_phase, csit_error_variance, make_deterministic_scenario,
    synth_selective_channel, AuStatistics, ChannelSet, CsitModel, DelayProfile, SelectiveConfig,
};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::metrics::jamming_power_realized;
use crate::optimizer::{
    optimize, optimize_with_sdma, sdma_restrict, threshold_strategy, Scheme, Solution, SolveConfig,
};
use crate::rng;

/// One evaluated cell: the table row plus the full solution when the
/// optimizer succeeded.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: ResultRow,
    pub solution: Option<Solution>,
    pub error: Option<String>,
}

pub fn build_channels(cfg: &ExperimentConfig) -> Result<ChannelSet> {
    match &cfg.channel {
        ChannelModel::Deterministic { theta, beta, .. } => make_deterministic_scenario(
            *theta,
            *beta,
            cfg.n_t,
            cfg.subcarriers,
            cfg.users,
            cfg.adversaries,
        ),
        ChannelModel::Selective {
            delay_spread,
            spacing,
            tap_spacing,
            taps,
            seed,
        } => {
            let profile = DelayProfile::exponential(*delay_spread, *tap_spacing, *taps)?;
            synth_selective_channel(
                &profile,
                &SelectiveConfig {
                    n_t: cfg.n_t,
                    users: cfg.users,
                    adversaries: cfg.adversaries,
                    subcarriers: cfg.subcarriers,
                    subcarrier_spacing: *spacing,
                    seed: *seed,
                },
            )
        }
    }
}

/// AU covariance shared by every subcarrier.
pub fn au_covariance(cfg: &ExperimentConfig) -> CMatrix {
    match &cfg.channel {
        ChannelModel::Deterministic { au_spread, .. } => {
            au_covariance_uniform_phase(*au_spread, cfg.n_t)
        }
        ChannelModel::Selective { .. } => CMatrix::identity(cfg.n_t, cfg.n_t),
    }
}

pub fn snr_to_power(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

/// SAA seed of every cell at SNR index `snr`. Schemes and pilot sets at the
/// same SNR share it, so their comparisons use common random numbers.
pub fn cell_seed(cfg: &ExperimentConfig, snr: usize) -> u64 {
    rng::stream_id(rng::domain::EXPERIMENT, &[cfg.seed, snr as u64])
}

/// Optimizer inputs of one cell.
pub fn cell_inputs(
    cfg: &ExperimentConfig,
    channels: &ChannelSet,
    snr: usize,
    pilots: &[usize],
    scheme: Scheme,
) -> Result<(CsitModel, AuStatistics, SolveConfig)> {
    let power = snr_to_power(cfg.snr_db[snr]);
    let variance = if cfg.perfect_csit {
        0.0
    } else {
        csit_error_variance(power, cfg.subcarriers, cfg.alpha)
    };
    let csit = CsitModel::from_channels(channels, variance, cfg.alpha)?;
    let (stats, rho) = if cfg.adversaries == 0 {
        (AuStatistics::none(), 0.0)
    } else {
        let stats = AuStatistics::uniform(
            au_covariance(cfg),
            cfg.adversaries,
            cfg.subcarriers,
            pilots.to_vec(),
        )?;
        (
            stats,
            threshold_strategy(cfg.strategy, pilots.len(), cfg.subcarriers, cfg.base_rho)?,
        )
    };
    let solve = SolveConfig {
        scheme,
        power,
        rho,
        samples: cfg.samples,
        seed: cell_seed(cfg, snr),
        eps_r: cfg.eps_r,
        eps_m: cfg.eps_m,
        max_outer: cfg.max_outer,
        max_inner: cfg.max_inner,
        solver_tol: cfg.solver_tol,
        common_rate_mode: cfg.common_rate_mode,
        sdma_start: cfg.sdma_start,
    };
    Ok((csit, stats, solve))
}

fn outcome(
    cfg: &ExperimentConfig,
    channels: &ChannelSet,
    snr: usize,
    pilots: &[usize],
    scheme: Scheme,
    result: Result<Solution>,
    wall_ms: u64,
) -> CellOutcome {
    let snr_db = cfg.snr_db[snr];
    match result {
        Ok(mut sol) => {
            if channels.num_adversaries() > 0 {
                for j in &mut sol.report.jamming {
                    j.realized = Some(jamming_power_realized(
                        channels.adversary(j.adversary, j.subcarrier),
                        &sol.precoders,
                        j.subcarrier,
                    ));
                }
            }
            let r = &sol.report;
            let status = if r.diagnostics.converged {
                CellStatus::Optimal
            } else {
                CellStatus::MaxIter
            };
            let row = ResultRow {
                snr_db,
                scheme,
                strategy: cfg.strategy,
                pilot_count: pilots.len(),
                sum_rate: r.sum_rate,
                common_rate: r.common_rate,
                user_rates: r.private_rates.clone(),
                jam_margin: r.min_jamming_margin(),
                iters: r.diagnostics.outer_iterations,
                wall_ms: if cfg.record_wall_time { wall_ms } else { 0 },
                status,
            };
            CellOutcome {
                row,
                solution: Some(sol),
                error: None,
            }
        }
        Err(e) => {
            let status = match e {
                Error::Infeasible { .. } => CellStatus::Infeasible,
                _ => CellStatus::Failed,
            };
            CellOutcome {
                row: ResultRow {
                    snr_db,
                    scheme,
                    strategy: cfg.strategy,
                    pilot_count: pilots.len(),
                    sum_rate: 0.0,
                    common_rate: 0.0,
                    user_rates: vec![0.0; cfg.users],
                    jam_margin: None,
                    iters: 0,
                    wall_ms: if cfg.record_wall_time { wall_ms } else { 0 },
                    status,
                },
                solution: None,
                error: Some(e.to_string()),
            }
        }
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, u64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_millis() as u64)
}

/// All cells sharing one (SNR, pilot set): SDMA runs first and, for RSMA
/// with `sdma_start`, is reused as a starting point.
fn run_group(
    cfg: &ExperimentConfig,
    channels: &ChannelSet,
    snr: usize,
    pilots: &[usize],
) -> Vec<CellOutcome> {
    let inputs = |scheme| cell_inputs(cfg, channels, snr, pilots, scheme);
    let want_sdma = cfg.schemes.contains(&Scheme::Sdma);
    let want_rsma = cfg.schemes.contains(&Scheme::Rsma);
    let sdma = (want_sdma || (want_rsma && cfg.sdma_start)).then(|| {
        timed(|| {
            let (csit, stats, solve) = inputs(Scheme::Sdma)?;
            optimize(&csit, &stats, &sdma_restrict(&solve))
        })
    });
    let rsma = want_rsma.then(|| {
        timed(|| {
            let (csit, stats, solve) = inputs(Scheme::Rsma)?;
            match (&sdma, solve.sdma_start) {
                (Some((Ok(s), _)), true) => optimize_with_sdma(&csit, &stats, &solve, s),
                (Some((Err(e), _)), true) => {
                    Err(Error::NumericalFailure(format!("SDMA start failed: {e}")))
                }
                _ => optimize(&csit, &stats, &solve),
            }
        })
    });
    let mut sdma = sdma;
    let mut rsma = rsma;
    cfg.schemes
        .iter()
        .map(|&scheme| {
            let (result, ms) = match scheme {
                Scheme::Sdma => sdma.take(),
                Scheme::Rsma => rsma.take(),
            }
            .expect("scheme was requested");
            outcome(cfg, channels, snr, pilots, scheme, result, ms)
        })
        .collect()
}

fn run_all(cfg: &ExperimentConfig) -> Result<Vec<CellOutcome>> {
    let channels = build_channels(cfg)?;
    let pilot_sets = cfg.resolved_pilots()?;
    let groups: Vec<(usize, usize)> = (0..cfg.snr_db.len())
        .flat_map(|i| (0..pilot_sets.len()).map(move |j| (i, j)))
        .collect();
    let cells: Vec<Vec<CellOutcome>> = groups
        .par_iter()
        .map(|&(i, j)| run_group(cfg, &channels, i, &pilot_sets[j]))
        .collect();
    Ok(cells.into_iter().flatten().collect())
}

/// Runs every cell, in parallel over (SNR, pilot set) groups, with rows in
/// a fixed order: SNR, then pilot set, then scheme as listed. `threads`
/// bounds the worker count; `None` uses the global pool.
pub fn run_cells(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<Vec<CellOutcome>> {
    cfg.validate()?;
    match threads {
        None => run_all(cfg),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run_all(cfg)),
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    let cells = run_cells(cfg, None)?;
    Ok(ResultTable {
        users: cfg.users,
        rows: cells.into_iter().map(|c| c.row).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expcli::PilotSpec;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            subcarriers: 4,
            pilot_sets: vec![PilotSpec::Count(1), PilotSpec::Count(2)],
            snr_db: vec![10.0],
            samples: 2,
            eps_r: 1e-3,
            eps_m: 1e-3,
            max_outer: 20,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn row_order_and_shape() {
        let cfg = tiny();
        let table = run_experiment(&cfg).unwrap();
        let keys: Vec<(usize, Scheme)> = table
            .rows
            .iter()
            .map(|r| (r.pilot_count, r.scheme))
            .collect();
        assert_eq!(
            keys,
            vec![
                (1, Scheme::Rsma),
                (1, Scheme::Sdma),
                (2, Scheme::Rsma),
                (2, Scheme::Sdma)
            ]
        );
        for r in &table.rows {
            assert_eq!(r.user_rates.len(), 2);
            assert!(r.sum_rate.is_finite() && r.sum_rate > 0.0);
            assert_eq!(r.wall_ms, 0);
        }
    }

    #[test]
    fn single_cell_matches_direct_call() {
        let cfg = ExperimentConfig {
            pilot_sets: vec![PilotSpec::Count(2)],
            schemes: vec![Scheme::Rsma],
            base_rho: 0.0,
            ..tiny()
        };
        let cells = run_cells(&cfg, Some(1)).unwrap();
        let channels = build_channels(&cfg).unwrap();
        let (csit, stats, solve) = cell_inputs(&cfg, &channels, 0, &[0, 2], Scheme::Rsma).unwrap();
        let direct = optimize(&csit, &stats, &solve).unwrap();
        let got = cells[0].solution.as_ref().unwrap();
        assert_eq!(got.precoders, direct.precoders);
        assert_eq!(
            got.report.sum_rate.to_bits(),
            direct.report.sum_rate.to_bits()
        );
    }

    #[test]
    fn cells_at_one_snr_share_samples() {
        let cfg = tiny();
        assert_eq!(cell_seed(&cfg, 0), cell_seed(&cfg, 0));
        assert_ne!(cell_seed(&cfg, 0), cell_seed(&cfg, 1));
    }
}
