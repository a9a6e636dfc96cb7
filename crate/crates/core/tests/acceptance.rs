//! Acceptance criteria. Prints one `[PASS]`/`[FAIL]` line per criterion and
//! exits nonzero if any criterion fails.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::{LN_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rsma_jam::channel::{
    au_covariance_uniform_phase, csit_error_variance, draw_csit_samples, evenly_spaced_pilots,
    largest_eigenvalue, make_deterministic_scenario, synth_selective_channel, AuStatistics,
    CsitModel, DelayProfile, SampleSet, SelectiveConfig,
};
use rsma_jam::expcli::{
    run_cells, write_outputs, CellOutcome, ExperimentConfig, PilotSpec, ResultTable, RESULTS_CSV,
};
use rsma_jam::linalg::{CMatrix, CVector, C64};
use rsma_jam::metrics::{mse_opt, sample_average_info, sinr, InterferenceTerms, Stage};
use rsma_jam::optimizer::{
    initial_subproblem, optimize, saa_samples, taylor_bound, threshold_strategy, Scheme, Solution,
    SolveConfig,
};
use rsma_jam::solver::{solve, ConvexSubproblem, QuadForm, SolveStatus};

type Check = Result<String, String>;

type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn cgauss(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CVector {
    CVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * (scale / 2f64.sqrt())
    })
}

fn random_psd(rng: &mut ChaCha8Rng, n: usize, rank: usize) -> CMatrix {
    let mut r = CMatrix::zeros(n, n);
    for _ in 0..rank {
        let a = cgauss(rng, n, 1.0);
        r += &a * a.adjoint();
    }
    r
}

/// `pᴴ R p` by explicit double sum.
fn herm_form(r: &CMatrix, p: &CVector) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..p.len() {
        for j in 0..p.len() {
            acc += p[i].conj() * r[(i, j)] * p[j];
        }
    }
    acc.re
}

fn norm_sq(p: &CVector) -> f64 {
    p.iter().map(|z| z.re * z.re + z.im * z.im).sum()
}

/// Largest eigenvalue of a Hermitian matrix by cyclic Jacobi sweeps on its
/// real symmetric embedding `[Re -Im; Im Re]`.
fn jacobi_max_eig(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let m = 2 * n;
    let mut s = vec![vec![0.0; m]; m];
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            s[i][j] = z.re;
            s[i + n][j + n] = z.re;
            s[i][j + n] = -z.im;
            s[i + n][j] = z.im;
        }
    }
    for _ in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i][j] * s[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if s[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let (kp, kq) = (s[k][p], s[k][q]);
                    s[k][p] = c * kp - sn * kq;
                    s[k][q] = sn * kp + c * kq;
                }
                for k in 0..m {
                    let (pk, qk) = (s[p][k], s[q][k]);
                    s[p][k] = c * pk - sn * qk;
                    s[q][k] = sn * pk + c * qk;
                }
            }
        }
    }
    (0..m).map(|i| s[i][i]).fold(f64::NEG_INFINITY, f64::max)
}

// 1. Rate-MSE identity

fn identity_check() -> Check {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let n = r.random_range(1..=8);
        let (hs, ps) = (r.random_range(-1.0..1.0), r.random_range(-2.0..2.0));
        let h = cgauss(&mut r, n, 10f64.powf(hs));
        let p = cgauss(&mut r, n, 10f64.powf(ps));
        let z = 10f64.powf(r.random_range(-3.0..3.0)) * r.random::<f64>();
        let terms = InterferenceTerms::new(z + r.random::<f64>(), z, r.random::<f64>() * 10.0);
        for stage in [Stage::Common, Stage::Private] {
            let eps = mse_opt(&h, &p, &terms, stage);
            let s = sinr(&h, &p, &terms, stage);
            worst = worst.max((-eps.log2() - (1.0 + s).log2()).abs());
        }
    }
    ensure(worst < 1e-10, || format!("max error {worst:.3e}"))?;
    Ok(format!(
        "max |-log2 eps - log2(1+SINR)| = {worst:.2e} over 10^4 triples"
    ))
}

// 2. Taylor lower bound

fn taylor_check() -> Check {
    let mut r = rng(2);
    let (mut worst_gap, mut worst_eq) = (f64::NEG_INFINITY, 0.0f64);
    for _ in 0..1000 {
        let n = r.random_range(1..=6);
        let rank = r.random_range(1..=n);
        let rm = random_psd(&mut r, n, rank);
        let p = cgauss(&mut r, n, 2.0);
        let pt = cgauss(&mut r, n, 2.0);
        let exact = herm_form(&rm, &p);
        worst_gap = worst_gap.max(taylor_bound(&p, &pt, &rm) - exact);
        let at = herm_form(&rm, &pt);
        worst_eq = worst_eq.max((taylor_bound(&pt, &pt, &rm) - at).abs() / (1.0 + at.abs()));
    }
    ensure(worst_gap <= 1e-9, || {
        format!("bound exceeded by {worst_gap:.3e}")
    })?;
    ensure(worst_eq <= 1e-12, || {
        format!("not tight at the expansion point ({worst_eq:.3e})")
    })?;
    Ok(format!(
        "max(phi - pHRp) = {worst_gap:.2e}, tightness error {worst_eq:.1e} over 10^3 draws"
    ))
}

// 3 and 4. Random desk-scale instances

struct Instance {
    csit: CsitModel,
    stats: AuStatistics,
    config: SolveConfig,
    cov: CMatrix,
    solution: Solution,
}

fn desk_instances() -> &'static Vec<Instance> {
    static CELL: OnceLock<Vec<Instance>> = OnceLock::new();
    CELL.get_or_init(|| {
        let profile = DelayProfile::exponential(1200e-9, 520e-9, 4).unwrap();
        (0..20u64)
            .map(|i| {
                let mut r = rng(300 + i);
                let ch = synth_selective_channel(
                    &profile,
                    &SelectiveConfig {
                        n_t: 4,
                        users: 2,
                        adversaries: 1,
                        subcarriers: 8,
                        subcarrier_spacing: 60e3,
                        seed: i,
                    },
                )
                .unwrap();
                let snr = [0.0, 10.0, 20.0, 30.0][i as usize % 4];
                let power = 10f64.powf(snr / 10.0);
                let csit =
                    CsitModel::from_channels(&ch, csit_error_variance(power, 8, 0.6), 0.6).unwrap();
                let mut cov = random_psd(&mut r, 4, 2);
                let tr: f64 = (0..4).map(|k| cov[(k, k)].re).sum();
                cov *= C64::new(4.0 / tr, 0.0);
                let count = [2, 4][i as usize % 2];
                let strategy = 1 + (i / 2 % 2) as u8;
                let stats = AuStatistics::uniform(
                    cov.clone(),
                    1,
                    8,
                    evenly_spaced_pilots(count, 8).unwrap(),
                )
                .unwrap();
                let config = SolveConfig {
                    scheme: if i % 4 < 2 {
                        Scheme::Rsma
                    } else {
                        Scheme::Sdma
                    },
                    power,
                    rho: threshold_strategy(strategy, count, 8, 0.9).unwrap(),
                    samples: 4,
                    seed: i,
                    ..SolveConfig::default()
                };
                let solution = optimize(&csit, &stats, &config).unwrap();
                Instance {
                    csit,
                    stats,
                    config,
                    cov,
                    solution,
                }
            })
            .collect()
    })
}

fn monotone_check() -> Check {
    let t = Instant::now();
    let instances = desk_instances();
    let tol = 1e-6;
    let mut outer_total = 0;
    for (i, inst) in instances.iter().enumerate() {
        let d = &inst.solution.report.diagnostics;
        ensure(d.outer_iterations <= inst.config.max_outer, || {
            format!("instance {i}: outer cap exceeded")
        })?;
        ensure(d.wsr_trace.windows(2).all(|w| w[1] >= w[0] - tol), || {
            format!("instance {i}: WSR decreased: {:?}", d.wsr_trace)
        })?;
        for (o, inner) in d.wmmse_trace.iter().enumerate() {
            ensure(inner.len() <= inst.config.max_inner + 1, || {
                format!("instance {i}: inner cap exceeded")
            })?;
            ensure(inner.windows(2).all(|w| w[1] <= w[0] + tol), || {
                format!("instance {i}, outer {o}: inner objective increased: {inner:?}")
            })?;
        }
        // Every start that was run, not only the returned one.
        let mut starts: Vec<&str> = inst
            .solution
            .trace
            .iter()
            .map(|e| e.start.as_str())
            .collect();
        starts.dedup();
        for s in starts {
            let events: Vec<_> = inst
                .solution
                .trace
                .iter()
                .filter(|e| e.start == s)
                .collect();
            let wsr: Vec<f64> = events.iter().filter_map(|e| e.wsr).collect();
            ensure(wsr.windows(2).all(|w| w[1] >= w[0] - tol), || {
                format!("instance {i}, start {s}: WSR decreased")
            })?;
            let max_outer = events.iter().map(|e| e.outer).max().unwrap_or(0);
            for o in 1..=max_outer {
                let w: Vec<f64> = events
                    .iter()
                    .filter(|e| e.outer == o)
                    .filter_map(|e| e.wmmse)
                    .collect();
                ensure(w.windows(2).all(|x| x[1] <= x[0] + tol), || {
                    format!("instance {i}, start {s}, outer {o}: inner objective increased")
                })?;
            }
        }
        outer_total += d.outer_iterations;
    }
    let el = t.elapsed();
    ensure(el < Duration::from_secs(300), || {
        format!("took {:.0} s", el.as_secs_f64())
    })?;
    Ok(format!(
        "20 instances, {outer_total} outer iterations, traces monotone within 1e-6 ({:.1} s)",
        el.as_secs_f64()
    ))
}

fn constraint_check() -> Check {
    let mut worst_jam = f64::INFINITY;
    let mut worst_power = f64::NEG_INFINITY;
    let mut worst_split = f64::NEG_INFINITY;
    for (i, inst) in desk_instances().iter().enumerate() {
        let p = &inst.solution.precoders;
        let cfg = &inst.config;
        let tau = jacobi_max_eig(&inst.cov);
        let pilots = inst.stats.pilots();
        let thr = cfg.rho * cfg.power / pilots.len() as f64 * tau;
        for &n in pilots {
            let avg = herm_form(&inst.cov, &p.common[n])
                + p.private
                    .iter()
                    .map(|q| herm_form(&inst.cov, &q[n]))
                    .sum::<f64>()
                + p.jamming
                    .iter()
                    .map(|f| herm_form(&inst.cov, &f[n]))
                    .sum::<f64>();
            worst_jam = worst_jam.min(avg - thr);
        }
        let total: f64 = (0..p.subcarriers)
            .map(|n| {
                norm_sq(&p.common[n])
                    + p.private
                        .iter()
                        .chain(&p.jamming)
                        .map(|q| norm_sq(&q[n]))
                        .sum::<f64>()
            })
            .sum();
        worst_power = worst_power.max(total - cfg.power);
        let samples = saa_samples(&inst.csit, cfg).unwrap();
        let (_, ic) = sample_average_info(&samples, p);
        let split = &inst.solution.report.common_split;
        for n in 0..p.subcarriers {
            let c: f64 = split.iter().map(|row| row[n]).sum();
            let budget = ic
                .iter()
                .map(|row| row[n] / LN_2)
                .fold(f64::INFINITY, f64::min);
            worst_split = worst_split.max(c - budget);
            ensure(split.iter().all(|row| row[n] >= -1e-12), || {
                format!("instance {i}: negative common rate")
            })?;
        }
        if cfg.scheme == Scheme::Sdma {
            ensure(p.common.iter().all(|c| norm_sq(c) == 0.0), || {
                format!("instance {i}: SDMA common stream")
            })?;
        }
    }
    ensure(worst_jam >= -1e-6, || {
        format!("jamming margin {worst_jam:.3e}")
    })?;
    ensure(worst_power <= 1e-9, || {
        format!("power excess {worst_power:.3e}")
    })?;
    ensure(worst_split <= 1e-6, || {
        format!("common split excess {worst_split:.3e}")
    })?;
    Ok(format!(
        "min jam margin {worst_jam:.2e}, max power excess {worst_power:.1e}, max split excess {worst_split:.1e}"
    ))
}

// 5. Water-filling reduction

fn water_filling(gains: &[f64], power: f64) -> f64 {
    let alloc = |mu: f64| -> f64 { gains.iter().map(|g| (mu - 1.0 / g).max(0.0)).sum() };
    let (mut lo, mut hi) = (
        0.0,
        power + gains.iter().map(|g| 1.0 / g).fold(0.0, f64::max),
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if alloc(mid) > power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    gains
        .iter()
        .map(|g| (1.0 + (mu - 1.0 / g).max(0.0) * g).log2())
        .sum::<f64>()
        / gains.len() as f64
}

fn water_filling_check() -> Check {
    let t = Instant::now();
    let profile = DelayProfile::exponential(1200e-9, 520e-9, 6).unwrap();
    let mut worst = 0.0f64;
    for (seed, snr) in [(3u64, 0.0), (4, 10.0), (5, 20.0), (6, 30.0)] {
        let ch = synth_selective_channel(
            &profile,
            &SelectiveConfig {
                n_t: 4,
                users: 1,
                adversaries: 0,
                subcarriers: 8,
                subcarrier_spacing: 60e3,
                seed,
            },
        )
        .unwrap();
        let power = 10f64.powf(snr / 10.0);
        let gains: Vec<f64> = (0..8).map(|n| norm_sq(ch.user(0, n))).collect();
        let spread = gains.iter().cloned().fold(0.0, f64::max)
            / gains.iter().cloned().fold(f64::INFINITY, f64::min);
        ensure(spread > 1.5, || {
            format!("seed {seed}: channel is nearly flat")
        })?;
        let oracle = water_filling(&gains, power);
        let cfg = SolveConfig {
            power,
            ..SolveConfig::default()
        };
        let sol = optimize(&CsitModel::perfect(&ch), &AuStatistics::none(), &cfg)
            .map_err(|e| e.to_string())?;
        let rel = (sol.report.sum_rate - oracle).abs() / oracle;
        ensure(sol.report.sum_rate <= oracle + 1e-9, || {
            format!("snr {snr}: beats the capacity oracle")
        })?;
        ensure(rel <= 0.01, || {
            format!(
                "snr {snr}: {} vs oracle {oracle} ({rel:.2e})",
                sol.report.sum_rate
            )
        })?;
        worst = worst.max(rel);
    }
    let el = t.elapsed();
    ensure(el < Duration::from_secs(60), || {
        format!("took {:.0} s", el.as_secs_f64())
    })?;
    Ok(format!(
        "max relative gap {worst:.2e} at SNR 0..30 dB ({:.1} s)",
        el.as_secs_f64()
    ))
}

// 6. Brute-force solver oracle

/// Dense `xᵀQx + cᵀx + d` assembled from the problem data.
struct Dense {
    q: Vec<f64>,
    c: Vec<f64>,
    d: f64,
    n: usize,
}

impl Dense {
    fn from_form(form: &QuadForm, offsets: &[usize], n: usize) -> Self {
        let mut q = vec![0.0; n * n];
        for b in &form.quadratic {
            let o = offsets[b.block];
            for i in 0..b.matrix.dim {
                for j in 0..b.matrix.dim {
                    q[(o + i) * n + o + j] += b.matrix.data[i * b.matrix.dim + j];
                }
            }
        }
        let mut c = vec![0.0; n];
        for &(i, v) in &form.linear {
            c[i] += v;
        }
        Dense {
            q,
            c,
            d: form.constant,
            n,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = self.d;
        for i in 0..self.n {
            let row = &self.q[i * self.n..(i + 1) * self.n];
            let qx: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            acc += x[i] * qx + self.c[i] * x[i];
        }
        acc
    }

    fn grad_norm(&self, x: &[f64]) -> f64 {
        (0..self.n)
            .map(|i| {
                let g: f64 = (0..self.n)
                    .map(|j| (self.q[i * self.n + j] + self.q[j * self.n + i]) * x[j])
                    .sum::<f64>()
                    + self.c[i];
                g * g
            })
            .sum::<f64>()
            .sqrt()
    }

    fn frobenius(&self) -> f64 {
        self.q.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Every constraint as `g(x) <= 0`.
fn constraint_forms(p: &ConvexSubproblem, offsets: &[usize], n: usize) -> Vec<Dense> {
    let mut out: Vec<Dense> = p
        .quadratic_constraints
        .iter()
        .map(|c| Dense::from_form(&c.form, offsets, n))
        .collect();
    for a in &p.affine_constraints {
        let mut c = vec![0.0; n];
        for &(i, v) in &a.coeffs {
            c[i] -= v;
        }
        out.push(Dense {
            q: vec![0.0; n * n],
            c,
            d: a.lower,
            n,
        });
    }
    for &i in &p.sign_constraints {
        let mut c = vec![0.0; n];
        c[i] = 1.0;
        out.push(Dense {
            q: vec![0.0; n * n],
            c,
            d: 0.0,
            n,
        });
    }
    out
}

/// Smallest objective over feasible points of the lattice `origin + step·z`
/// with `z_i ∈ [lo, hi]`.
fn grid_min(
    obj: &Dense,
    cons: &[Dense],
    origin: &[f64],
    step: f64,
    lo: i64,
    hi: i64,
) -> (f64, usize) {
    let n = origin.len();
    let mut z = vec![lo; n];
    let mut x = vec![0.0; n];
    let (mut best, mut feasible) = (f64::INFINITY, 0usize);
    loop {
        for i in 0..n {
            x[i] = origin[i] + step * z[i] as f64;
        }
        if cons.iter().all(|c| c.eval(&x) <= 0.0) {
            feasible += 1;
            best = best.min(obj.eval(&x));
        }
        let mut i = 0;
        loop {
            if i == n {
                return (best, feasible);
            }
            z[i] += 1;
            if z[i] <= hi {
                break;
            }
            z[i] = lo;
            i += 1;
        }
    }
}

fn brute_force_check() -> Check {
    let t = Instant::now();
    let ch = make_deterministic_scenario(4.0 * PI / 9.0, 2.0 * PI / 9.0, 2, 1, 1, 1)
        .map_err(|e| e.to_string())?;
    let stats = AuStatistics::uniform(
        au_covariance_uniform_phase(4.0 * PI / 9.0, 2),
        1,
        1,
        vec![0],
    )
    .unwrap();
    let cfg = SolveConfig {
        scheme: Scheme::Sdma,
        power: 10.0,
        rho: 0.5,
        ..SolveConfig::default()
    };
    let (prob, _) =
        initial_subproblem(&CsitModel::perfect(&ch), &stats, &cfg).map_err(|e| e.to_string())?;
    let n = prob.num_vars();
    let offsets: Vec<usize> = prob
        .blocks
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b;
            Some(o)
        })
        .collect();
    let obj = Dense::from_form(&prob.objective, &offsets, n);
    let cons = constraint_forms(&prob, &offsets, n);
    let res = solve(&prob, 1e-9).map_err(|e| e.to_string())?;
    ensure(res.status == SolveStatus::Optimal, || {
        format!("solver status {:?}", res.status)
    })?;
    let x = &res.primal;
    let f_star = obj.eval(x);
    ensure(
        (f_star - res.objective_value).abs() <= 1e-9 * (1.0 + f_star.abs()),
        || "reported objective differs from the problem data".into(),
    )?;
    ensure(cons.iter().all(|c| c.eval(x) <= 1e-9), || {
        "solver point infeasible".into()
    })?;

    // Whole feasible box (the power constraint keeps every scaled variable
    // in [-1, 1]) on a coarse lattice.
    let (coarse, coarse_n) = grid_min(&obj, &cons, &vec![0.0; n], 0.25, -4, 4);
    // Fine lattice with step 0.02 around the solver point. The objective is
    // convex, so a better point anywhere implies better lattice points
    // in this window.
    let h = 0.02;
    let origin: Vec<f64> = x.iter().map(|v| (v / h).round() * h).collect();
    let (fine, fine_n) = grid_min(&obj, &cons, &origin, h, -3, 3);
    let r = h * (n as f64).sqrt();
    let resolution = obj.grad_norm(x) * r + obj.frobenius() * r * r;
    ensure(coarse_n > 0 && fine_n > 0, || {
        "no feasible lattice point".into()
    })?;
    ensure(coarse >= f_star - 1e-7, || {
        format!("coarse grid {coarse} beats solver {f_star}")
    })?;
    ensure(fine >= f_star - 1e-7, || {
        format!("fine grid {fine} beats solver {f_star}")
    })?;
    ensure(fine - f_star <= resolution, || {
        format!("fine grid {fine} vs solver {f_star} exceeds resolution {resolution:.3e}")
    })?;
    let el = t.elapsed();
    ensure(el < Duration::from_secs(120), || {
        format!("took {:.0} s", el.as_secs_f64())
    })?;
    Ok(format!(
        "{n} variables: solver {f_star:.6}, grid {fine:.6} (resolution {resolution:.1e}), coarse {coarse:.4} over {coarse_n} feasible points ({:.1} s)",
        el.as_secs_f64()
    ))
}

// 7 and 8. Default scenario grid

struct Grid {
    tables: Vec<(u8, Vec<CellOutcome>)>,
    elapsed: Duration,
}

fn grid_config(strategy: u8) -> ExperimentConfig {
    ExperimentConfig {
        subcarriers: 16,
        pilot_sets: vec![
            PilotSpec::Count(2),
            PilotSpec::Count(4),
            PilotSpec::Count(8),
        ],
        snr_db: vec![5.0, 15.0, 25.0],
        strategy,
        seed: 7,
        ..ExperimentConfig::default()
    }
}

fn scenario_grid() -> &'static Result<Grid, String> {
    static CELL: OnceLock<Result<Grid, String>> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let tables = [1u8, 2]
            .iter()
            .map(|&s| {
                run_cells(&grid_config(s), None)
                    .map(|c| (s, c))
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Grid {
            tables,
            elapsed: t.elapsed(),
        })
    })
}

fn rate(cells: &[CellOutcome], snr: f64, scheme: Scheme, pilots: usize) -> Result<f64, String> {
    let c = cells
        .iter()
        .find(|c| c.row.snr_db == snr && c.row.scheme == scheme && c.row.pilot_count == pilots)
        .ok_or_else(|| format!("missing cell snr {snr} {scheme} |Sp|={pilots}"))?;
    ensure(c.row.status.has_result(), || {
        format!("cell snr {snr} {scheme} |Sp|={pilots}: {}", c.row.status)
    })?;
    Ok(c.row.sum_rate)
}

fn dominance_check() -> Check {
    let grid = scenario_grid().as_ref().map_err(|e| e.clone())?;
    let mut worst = f64::INFINITY;
    let mut cells = 0;
    for (s, table) in &grid.tables {
        for snr in [5.0, 15.0, 25.0] {
            for pc in [2, 4, 8] {
                let gain =
                    rate(table, snr, Scheme::Rsma, pc)? - rate(table, snr, Scheme::Sdma, pc)?;
                ensure(gain >= -1e-6, || {
                    format!("strategy {s}, snr {snr}, |Sp|={pc}: RSMA - SDMA = {gain:.3e}")
                })?;
                worst = worst.min(gain);
                cells += 1;
            }
        }
    }
    ensure(grid.elapsed < Duration::from_secs(900), || {
        format!("grid took {:.0} s", grid.elapsed.as_secs_f64())
    })?;
    Ok(format!(
        "{cells} cells, min RSMA - SDMA = {worst:.2e} bits ({:.0} s for both strategies)",
        grid.elapsed.as_secs_f64()
    ))
}

fn trend_check() -> Check {
    let grid = scenario_grid().as_ref().map_err(|e| e.clone())?;
    let mut summary = Vec::new();
    for (s, table) in &grid.tables {
        for scheme in [Scheme::Rsma, Scheme::Sdma] {
            for snr in [5.0, 15.0, 25.0] {
                let r: Vec<f64> = [2, 4, 8]
                    .iter()
                    .map(|&pc| rate(table, snr, scheme, pc))
                    .collect::<Result<_, _>>()?;
                match s {
                    1 => ensure(r[1] <= r[0] + 1e-6 && r[2] <= r[1] + 1e-6, || {
                        format!("strategy 1, {scheme}, snr {snr}: not non-increasing {r:?}")
                    })?,
                    _ if snr >= 15.0 => ensure(r[1] >= r[0] - 1e-6 && r[2] >= r[1] - 1e-6, || {
                        format!("strategy 2, {scheme}, snr {snr}: not non-decreasing {r:?}")
                    })?,
                    _ => {}
                }
                if scheme == Scheme::Rsma && snr == 25.0 {
                    summary.push(format!("S{s}@25dB {:.2}/{:.2}/{:.2}", r[0], r[1], r[2]));
                }
            }
        }
    }
    ensure(grid.elapsed < Duration::from_secs(1200), || {
        format!("grid took {:.0} s", grid.elapsed.as_secs_f64())
    })?;
    Ok(format!(
        "orderings hold for both schemes; RSMA |Sp|=2/4/8: {}",
        summary.join(", ")
    ))
}

// 9. SAA degeneracy and determinism

fn degeneracy_check() -> Check {
    let det = make_deterministic_scenario(4.0 * PI / 9.0, 2.0 * PI / 9.0, 4, 8, 2, 1).unwrap();
    let sel = synth_selective_channel(
        &DelayProfile::exponential(1200e-9, 520e-9, 4).unwrap(),
        &SelectiveConfig {
            n_t: 4,
            users: 2,
            adversaries: 1,
            subcarriers: 8,
            subcarrier_spacing: 60e3,
            seed: 9,
        },
    )
    .unwrap();
    for (name, ch) in [("deterministic", &det), ("selective", &sel)] {
        let stats = AuStatistics::uniform(
            au_covariance_uniform_phase(4.0 * PI / 9.0, 4),
            1,
            8,
            vec![0, 4],
        )
        .unwrap();
        let zero = CsitModel::from_channels(ch, 0.0, 0.6).unwrap();
        let drawn = draw_csit_samples(&zero, 1, 11).unwrap();
        let exact = SampleSet::exact(ch);
        for k in 0..2 {
            for n in 0..8 {
                ensure(drawn.channel(0, k, n) == exact.channel(0, k, n), || {
                    format!("{name}: sample differs")
                })?;
            }
        }
        let base = SolveConfig {
            power: 100.0,
            rho: 0.45,
            seed: 11,
            ..SolveConfig::default()
        };
        let saa = optimize(
            &zero,
            &stats,
            &SolveConfig {
                samples: 1,
                ..base.clone()
            },
        )
        .map_err(|e| e.to_string())?;
        let perfect =
            optimize(&CsitModel::perfect(ch), &stats, &base).map_err(|e| e.to_string())?;
        ensure(saa.precoders == perfect.precoders, || {
            format!("{name}: precoders differ")
        })?;
        ensure(
            saa.report.sum_rate.to_bits() == perfect.report.sum_rate.to_bits(),
            || format!("{name}: sum-rates differ"),
        )?;
    }

    let cfg = ExperimentConfig {
        subcarriers: 8,
        pilot_sets: vec![PilotSpec::Count(1), PilotSpec::Count(2)],
        snr_db: vec![5.0, 20.0],
        samples: 4,
        seed: 5,
        ..ExperimentConfig::default()
    };
    let mut csvs = Vec::new();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for threads in [1usize, 2, 4, 1] {
        let cells = run_cells(&cfg, Some(threads)).map_err(|e| e.to_string())?;
        let out = dir.path().join(format!("t{threads}_{}", csvs.len()));
        write_outputs(&out, &cfg, &cells, true).map_err(|e| e.to_string())?;
        csvs.push(std::fs::read(out.join(RESULTS_CSV)).map_err(|e| e.to_string())?);
    }
    ensure(csvs.windows(2).all(|w| w[0] == w[1]), || {
        "CSV bytes differ across runs".into()
    })?;
    let table: ResultTable = rsma_jam::expcli::parse_csv(std::str::from_utf8(&csvs[0]).unwrap())
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "M=1 exact CSIT matches perfect CSIT bitwise (2 channels); {} -row CSV identical under 1, 2, 4 threads",
        table.rows.len()
    ))
}

// 10. AU statistics

fn simpson_covariance(delta: f64, n_t: usize, intervals: usize) -> CMatrix {
    let h = delta / intervals as f64;
    CMatrix::from_fn(n_t, n_t, |m, p| {
        let d = m as f64 - p as f64;
        let f = |b: f64| C64::from_polar(1.0, -d * b);
        let mut acc = f(0.0) + f(delta);
        for i in 1..intervals {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += f(i as f64 * h) * w;
        }
        acc * (h / 3.0 / delta)
    })
}

fn au_statistics_check() -> Check {
    let mut worst_cov = 0.0f64;
    for &delta in &[PI / 18.0, 2.0 * PI / 9.0, 4.0 * PI / 9.0, PI, 2.0 * PI] {
        for n_t in [2, 4, 8] {
            let closed = au_covariance_uniform_phase(delta, n_t);
            let oracle = simpson_covariance(delta, n_t, 20_000);
            for i in 0..n_t {
                ensure(closed[(i, i)] == C64::new(1.0, 0.0), || {
                    "diagonal is not exactly one".into()
                })?;
                for j in 0..n_t {
                    worst_cov = worst_cov.max((closed[(i, j)] - oracle[(i, j)]).norm());
                }
            }
        }
    }
    ensure(worst_cov <= 1e-8, || {
        format!("covariance error {worst_cov:.3e}")
    })?;

    let mut r = rng(10);
    let mut mats: Vec<CMatrix> = [0.0, PI / 18.0, 4.0 * PI / 9.0, PI]
        .iter()
        .flat_map(|&d| [2, 4, 8].map(|n| au_covariance_uniform_phase(d, n)))
        .collect();
    for _ in 0..20 {
        let n = r.random_range(1..=6);
        let rank = r.random_range(1..=n);
        mats.push(random_psd(&mut r, n, rank));
    }
    let mut worst_eig = 0.0f64;
    for m in &mats {
        let got = largest_eigenvalue(m).map_err(|e| e.to_string())?;
        let oracle = jacobi_max_eig(m);
        worst_eig = worst_eig.max((got - oracle).abs() / oracle.abs().max(1e-300));
    }
    ensure(worst_eig <= 1e-9, || {
        format!("eigenvalue error {worst_eig:.3e}")
    })?;
    Ok(format!(
        "covariance vs quadrature {worst_cov:.1e}; largest eigenvalue vs Jacobi {worst_eig:.1e} (rel) on {} matrices",
        mats.len()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("rate-MSE identity", identity_check),
        ("Taylor lower bound", taylor_check),
        ("monotone convergence", monotone_check),
        ("constraints at convergence", constraint_check),
        ("water-filling reduction", water_filling_check),
        ("brute-force solver oracle", brute_force_check),
        ("RSMA >= SDMA dominance", dominance_check),
        ("pilot-count trends", trend_check),
        ("SAA degeneracy and determinism", degeneracy_check),
        ("AU statistics", au_statistics_check),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("[PASS] {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {:>2} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
