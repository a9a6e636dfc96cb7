//! Feasible primal-dual interior-point method for convex QCQPs.
//!
//! Phase I minimizes a slack `s` subject to `f_i(x) <= s` (and `s >= -1`)
//! until a strictly feasible point is found; Phase II then runs the standard
//! primal-dual iterations from that point. Every accepted iterate keeps all
//! constraint values strictly negative, so returned primals are feasible
//! without any tolerance.

use nalgebra::{DMatrix, DVector};

use super::compiled::{Compiled, Func};
use super::kkt::{Blocks, KktSystem};
use super::{ConvexSolver, ConvexSubproblem, SolveStatus, SolverResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct InteriorPoint {
    pub max_iter: usize,
    /// Barrier parameter growth factor.
    pub mu: f64,
    /// Armijo fraction for the residual-norm line search.
    pub armijo: f64,
    pub backtrack: f64,
}

impl Default for InteriorPoint {
    fn default() -> Self {
        Self {
            max_iter: 300,
            mu: 4.0,
            armijo: 0.01,
            backtrack: 0.5,
        }
    }
}

/// Feasibility margin at which Phase I stops even if not yet centred.
const PHASE1_MARGIN: f64 = 1e-6;

/// Lower bound placed on the Phase I slack.
const SLACK_FLOOR: f64 = -1.0;

#[derive(Clone)]
struct Point {
    x: Blocks,
    s: f64,
}

enum Phase {
    Feasibility,
    Optimality,
}

/// Problem view for one phase: constraints are `f_i(x) - s <= 0` in Phase I
/// (plus `SLACK_FLOOR - s <= 0`) and `f_i(x) <= 0` in Phase II.
struct View<'a> {
    c: &'a Compiled,
    phase: Phase,
}

struct Eval {
    values: Vec<f64>,
    /// Gradient pieces of each constraint w.r.t. x (aligned with
    /// `Func::pieces`) and its derivative w.r.t. the slack.
    grads: Vec<(Vec<DVector<f64>>, f64)>,
    obj_grad: (Vec<DVector<f64>>, f64),
}

impl<'a> View<'a> {
    fn phase1(&self) -> bool {
        matches!(self.phase, Phase::Feasibility)
    }

    fn funcs(&self) -> &'a [Func] {
        &self.c.constraints
    }

    fn num_constraints(&self) -> usize {
        self.c.constraints.len() + usize::from(self.phase1())
    }

    fn values(&self, p: &Point) -> Vec<f64> {
        let mut v: Vec<f64> = self.funcs().iter().map(|f| f.eval(&p.x)).collect();
        if self.phase1() {
            for x in v.iter_mut() {
                *x -= p.s;
            }
            v.push(SLACK_FLOOR - p.s);
        }
        v
    }

    fn objective(&self, p: &Point) -> f64 {
        if self.phase1() {
            p.s
        } else {
            self.c.objective.eval(&p.x)
        }
    }

    fn evaluate(&self, p: &Point) -> Eval {
        let values = self.values(p);
        let ds = if self.phase1() { -1.0 } else { 0.0 };
        let mut grads: Vec<(Vec<DVector<f64>>, f64)> = self
            .funcs()
            .iter()
            .map(|f| (f.gradient(&p.x), ds))
            .collect();
        if self.phase1() {
            grads.push((vec![], -1.0));
        }
        let obj_grad = if self.phase1() {
            (vec![], 1.0)
        } else {
            (self.c.objective.gradient(&p.x), 0.0)
        };
        Eval {
            values,
            grads,
            obj_grad,
        }
    }

    /// Pieces of constraint `i` (empty for the slack floor).
    fn pieces(&self, i: usize) -> &'a [super::compiled::Piece] {
        self.funcs()
            .get(i)
            .map(|f| f.pieces.as_slice())
            .unwrap_or(&[])
    }

    /// Lagrangian gradient `∇f0 + Σ λ_i ∇f_i` as (x blocks, slack).
    fn dual_residual(&self, e: &Eval, lambda: &[f64]) -> (Blocks, f64) {
        let mut rx: Blocks = self.c.blocks.iter().map(|&b| DVector::zeros(b)).collect();
        for (piece, g) in self.c.objective.pieces.iter().zip(&e.obj_grad.0) {
            if !self.phase1() {
                rx[piece.block] += g;
            }
        }
        let mut rs = e.obj_grad.1;
        for (i, (gx, gs)) in e.grads.iter().enumerate() {
            for (piece, g) in self.pieces(i).iter().zip(gx) {
                rx[piece.block].axpy(lambda[i], g, 1.0);
            }
            rs += lambda[i] * gs;
        }
        (rx, rs)
    }
}

fn inf_norm(rx: &Blocks, rs: f64, phase1: bool) -> f64 {
    let m = rx.iter().map(|b| b.amax()).fold(0.0, f64::max);
    if phase1 {
        m.max(rs.abs())
    } else {
        m
    }
}

/// Starting barrier weight `1/t`: a duality gap on the scale of the
/// objective, so the first centring stays cheap.
fn initial_weight(view: &View, f0: f64) -> f64 {
    (1.0 + f0.abs()) / view.num_constraints().max(1) as f64
}

fn residual_norm(rx: &Blocks, rs: f64, values: &[f64], lambda: &[f64], inv_t: f64) -> f64 {
    let mut acc: f64 = rx.iter().map(|b| b.norm_squared()).sum::<f64>() + rs * rs;
    for (f, l) in values.iter().zip(lambda) {
        let rc = -l * f - inv_t;
        acc += rc * rc;
    }
    acc.sqrt()
}

/// Gap below which the barrier stage hands over to the primal-dual stage,
/// relative to the objective scale.
const HANDOVER_GAP: f64 = 1e-3;

/// Barrier steps may shrink any constraint slack by at most this factor.
const BOUNDARY_FRACTION: f64 = 0.1;

/// Line-search failures in a row after which the iterate is final.
const MAX_STALLS: usize = 3;

/// Accepted primal-dual steps shorter than this count as no progress.
const CRAWL_STEP: f64 = 1e-3;

/// Smallest step tried by the line searches.
const MIN_STEP: f64 = 1e-14;

struct Outcome {
    point: Point,
    lambda: Vec<f64>,
    iterations: usize,
    gap: f64,
    dual_residual: f64,
    status: SolveStatus,
}

type Criterion<'f> = &'f dyn Fn(&Point, &[f64], f64, f64) -> Option<SolveStatus>;

impl InteriorPoint {
    /// Newton direction for the system whose Hessian weights constraint
    /// `i` by `lambda[i]` (curvature) and `lambda[i] / -f_i` (normal), with
    /// right-hand side `-(∇f0 + Σ centre_i ∇f_i)`.
    fn direction(
        &self,
        view: &View,
        e: &Eval,
        lambda: &[f64],
        centre: &[f64],
    ) -> Result<(Blocks, f64)> {
        let phase1 = view.phase1();
        let mut blocks: Vec<DMatrix<f64>> = view
            .c
            .blocks
            .iter()
            .map(|&b| DMatrix::zeros(b, b))
            .collect();
        if !phase1 {
            for piece in &view.c.objective.pieces {
                if let Some(q) = &piece.q {
                    blocks[piece.block] += q * 2.0;
                }
            }
        }
        let mut globals = Vec::new();
        let mut border: Blocks = view.c.blocks.iter().map(|&b| DVector::zeros(b)).collect();
        let mut corner = 0.0;
        for (i, (gx, gs)) in e.grads.iter().enumerate() {
            let w = lambda[i] / -e.values[i];
            let pieces = view.pieces(i);
            for (piece, g) in pieces.iter().zip(gx) {
                if let Some(q) = &piece.q {
                    blocks[piece.block] += q * (2.0 * lambda[i]);
                }
                if phase1 {
                    border[piece.block].axpy(w * gs, g, 1.0);
                }
            }
            corner += w * gs * gs;
            if pieces.len() == 1 {
                let g = &gx[0];
                blocks[pieces[0].block].ger(w, g, g, 1.0);
            } else if pieces.len() > 1 {
                globals.push((
                    pieces
                        .iter()
                        .map(|p| p.block)
                        .zip(gx.iter().cloned())
                        .collect(),
                    w,
                ));
            }
        }
        let mut sys = KktSystem::new(blocks);
        sys.globals = globals;
        if phase1 {
            sys.border = Some((border, corner));
        }
        let (rx, rs) = view.dual_residual(e, centre);
        let rhs_x: Blocks = rx.iter().map(|r| -r).collect();
        Ok(sys.factor()?.solve(&rhs_x, -rs))
    }

    /// Log-barrier Newton iterations from a strictly feasible `start`.
    /// With `λ_i = 1/(t (-f_i))` the duality gap is exactly `m/t` and the
    /// dual residual is the gradient of the scaled barrier function. `stop`
    /// inspects (point, constraint values, gap, dual residual) after every
    /// step; the method also returns once it is centred with a gap below
    /// `handover`.
    fn barrier(
        &self,
        view: &View,
        start: Point,
        handover: f64,
        stop: Criterion,
    ) -> Result<Outcome> {
        let m = view.num_constraints();
        let phase1 = view.phase1();
        let mut p = start;
        let mut e = view.evaluate(&p);
        let mut inv_t = initial_weight(view, view.objective(&p));
        let duals = |values: &[f64], inv_t: f64| -> Vec<f64> {
            values.iter().map(|f| inv_t / -f).collect()
        };
        let outcome = |p: Point, lambda: Vec<f64>, it: usize, r: f64, inv_t: f64, status| Outcome {
            gap: m as f64 * inv_t,
            point: p,
            lambda,
            iterations: it,
            dual_residual: r,
            status,
        };
        let mut stalls = 0;
        for it in 0..self.max_iter {
            let lambda = duals(&e.values, inv_t);
            let gap = m as f64 * inv_t;
            let (rx, rs) = view.dual_residual(&e, &lambda);
            let r_inf = inf_norm(&rx, rs, phase1);
            if let Some(status) = stop(&p, &e.values, gap, r_inf) {
                return Ok(outcome(p, lambda, it, r_inf, inv_t, status));
            }
            let (dx, ds) = self.direction(view, &e, &lambda, &lambda)?;
            let slope: f64 = rx.iter().zip(&dx).map(|(r, d)| r.dot(d)).sum::<f64>() + rs * ds;

            // Backtrack until strictly feasible with sufficient decrease.
            let merit = |p: &Point, values: &[f64]| {
                view.objective(p) - inv_t * values.iter().map(|f| (-f).ln()).sum::<f64>()
            };
            let phi = merit(&p, &e.values);
            let mut step = 1.0f64;
            let mut accepted = None;
            while slope < 0.0 && step >= MIN_STEP {
                let cand = Point {
                    x: p.x.iter().zip(&dx).map(|(x, d)| x + d * step).collect(),
                    s: p.s + ds * step,
                };
                let vals = view.values(&cand);
                if vals
                    .iter()
                    .zip(&e.values)
                    .all(|(v, f)| *v <= BOUNDARY_FRACTION * f)
                {
                    let value = merit(&cand, &vals);
                    if value < phi && value <= phi + self.armijo * step * slope {
                        accepted = Some(cand);
                        break;
                    }
                }
                step *= self.backtrack;
            }
            let centred = match accepted {
                Some(cand) => {
                    p = cand;
                    e = view.evaluate(&p);
                    stalls = 0;
                    -slope <= 1e-3 * gap
                }
                None => {
                    stalls += 1;
                    if stalls >= MAX_STALLS {
                        return Ok(outcome(p, lambda, it, r_inf, inv_t, SolveStatus::MaxIter));
                    }
                    true
                }
            };
            if centred {
                if gap <= handover {
                    let lambda = duals(&e.values, inv_t);
                    return Ok(outcome(
                        p,
                        lambda,
                        it + 1,
                        r_inf,
                        inv_t,
                        SolveStatus::MaxIter,
                    ));
                }
                inv_t /= self.mu;
            }
        }
        let lambda = duals(&e.values, inv_t);
        let (rx, rs) = view.dual_residual(&e, &lambda);
        Ok(outcome(
            p,
            lambda,
            self.max_iter,
            inf_norm(&rx, rs, phase1),
            inv_t,
            SolveStatus::MaxIter,
        ))
    }

    /// Primal-dual Newton iterations from a strictly feasible, roughly
    /// centred point. Converges fast locally and keeps the duals accurate
    /// when constraints are nearly active. `stalled` decides the status when
    /// no step makes progress.
    fn primal_dual(
        &self,
        view: &View,
        start: Point,
        lambda: Vec<f64>,
        budget: usize,
        stop: Criterion,
        stalled: Criterion,
    ) -> Result<Outcome> {
        let m = view.num_constraints();
        let phase1 = view.phase1();
        let mut p = start;
        let mut e = view.evaluate(&p);
        let mut lambda = lambda;
        let mut crawls = 0;
        for it in 0..budget {
            let gap: f64 = -e
                .values
                .iter()
                .zip(&lambda)
                .map(|(f, l)| f * l)
                .sum::<f64>();
            let (rx, rs) = view.dual_residual(&e, &lambda);
            let r_inf = inf_norm(&rx, rs, phase1);
            let inv_t = if m == 0 {
                0.0
            } else {
                gap / (self.mu * m as f64)
            };
            let finish = |p: Point, lambda: Vec<f64>, status| Outcome {
                point: p,
                lambda,
                iterations: it,
                gap,
                dual_residual: r_inf,
                status,
            };
            if let Some(status) = stop(&p, &e.values, gap, r_inf) {
                return Ok(finish(p, lambda, status));
            }
            let centre: Vec<f64> = e.values.iter().map(|f| inv_t / -f).collect();
            let (dx, ds) = self.direction(view, &e, &lambda, &centre)?;
            let dlambda: Vec<f64> = (0..m)
                .map(|i| {
                    let (gx, gs) = &e.grads[i];
                    let slope: f64 = view
                        .pieces(i)
                        .iter()
                        .zip(gx)
                        .map(|(piece, g)| g.dot(&dx[piece.block]))
                        .sum::<f64>()
                        + gs * ds;
                    let f = e.values[i];
                    (lambda[i] * f + inv_t + lambda[i] * slope) / -f
                })
                .collect();

            // Keep λ > 0 and f < 0, then reduce the KKT residual.
            let mut step = 1.0f64;
            for (l, dl) in lambda.iter().zip(&dlambda) {
                if *dl < 0.0 {
                    step = step.min(-l / dl);
                }
            }
            step *= 0.99;
            let r_norm = residual_norm(&rx, rs, &e.values, &lambda, inv_t);
            let mut accepted = None;
            while step >= MIN_STEP {
                let cand = Point {
                    x: p.x.iter().zip(&dx).map(|(x, d)| x + d * step).collect(),
                    s: p.s + ds * step,
                };
                if view.values(&cand).iter().all(|v| *v < 0.0) {
                    let lam: Vec<f64> = lambda
                        .iter()
                        .zip(&dlambda)
                        .map(|(l, d)| l + step * d)
                        .collect();
                    let ce = view.evaluate(&cand);
                    let (crx, crs) = view.dual_residual(&ce, &lam);
                    if residual_norm(&crx, crs, &ce.values, &lam, inv_t)
                        <= (1.0 - self.armijo * step) * r_norm
                    {
                        accepted = Some((cand, lam, ce));
                        break;
                    }
                }
                step *= self.backtrack;
            }
            let crawling = accepted.is_some() && step < CRAWL_STEP;
            crawls = if crawling { crawls + 1 } else { 0 };
            if crawls >= MAX_STALLS {
                if let Some(status) = stalled(&p, &e.values, gap, r_inf) {
                    return Ok(finish(p, lambda, status));
                }
            }
            match accepted {
                Some((cand, lam, ce)) => {
                    p = cand;
                    lambda = lam;
                    e = ce;
                }
                None => {
                    // No further progress is possible in floating point.
                    let status = stalled(&p, &e.values, gap, r_inf).unwrap_or(SolveStatus::MaxIter);
                    return Ok(finish(p, lambda, status));
                }
            }
        }
        let gap: f64 = -e
            .values
            .iter()
            .zip(&lambda)
            .map(|(f, l)| f * l)
            .sum::<f64>();
        let (rx, rs) = view.dual_residual(&e, &lambda);
        Ok(Outcome {
            dual_residual: inf_norm(&rx, rs, phase1),
            point: p,
            lambda,
            iterations: budget,
            gap,
            status: SolveStatus::MaxIter,
        })
    }

    /// Finds a strictly feasible point or an infeasibility certificate.
    fn phase_one(
        &self,
        c: &Compiled,
        labels: &[String],
        tol: f64,
    ) -> Result<std::result::Result<(Blocks, usize), SolverResult>> {
        let x0: Blocks = c.blocks.iter().map(|&b| DVector::zeros(b)).collect();
        let base_max = c
            .constraints
            .iter()
            .map(|f| f.eval(&x0))
            .fold(f64::NEG_INFINITY, f64::max);
        if base_max < 0.0 || c.constraints.is_empty() {
            return Ok(Ok((x0, 0)));
        }
        let s0 = base_max.max(SLACK_FLOOR) + 1.0 + 0.1 * base_max.abs();
        let view = View {
            c,
            phase: Phase::Feasibility,
        };
        let n_base = c.constraints.len();
        let out = self.barrier(&view, Point { x: x0, s: s0 }, 0.0, &|p, values, gap, r| {
            let worst = values[..n_base]
                .iter()
                .fold(f64::NEG_INFINITY, |a, &v| a.max(v))
                + p.s;
            if worst < 0.0 && -worst >= gap.min(PHASE1_MARGIN) {
                return Some(SolveStatus::Optimal);
            }
            if r <= tol && (p.s - gap > 0.0 || (gap <= 0.1 * tol && worst >= 0.0)) {
                return Some(SolveStatus::Infeasible);
            }
            None
        })?;
        let worst = c
            .constraints
            .iter()
            .map(|f| f.eval(&out.point.x))
            .fold(f64::NEG_INFINITY, f64::max);
        if out.status == SolveStatus::Optimal || worst < 0.0 {
            return Ok(Ok((out.point.x, out.iterations)));
        }
        let lmax = out.lambda[..n_base].iter().fold(0.0f64, |a, &b| a.max(b));
        let violated = labels
            .iter()
            .zip(&out.lambda[..n_base])
            .filter(|(_, &l)| l >= 1e-3 * lmax)
            .map(|(s, _)| s.clone())
            .collect();
        Ok(Err(SolverResult {
            primal: Compiled::flatten(&out.point.x),
            duals: out.lambda[..n_base].to_vec(),
            objective_value: f64::NAN,
            status: SolveStatus::Infeasible,
            kkt_residual: out.dual_residual,
            duality_gap: out.gap,
            iterations: out.iterations,
            violated,
        }))
    }
}

impl ConvexSolver for InteriorPoint {
    fn solve(&self, problem: &ConvexSubproblem, tol: f64) -> Result<SolverResult> {
        if !(tol > 0.0) {
            return Err(Error::invalid("solver tolerance must be positive"));
        }
        problem.validate()?;
        let c = Compiled::new(problem);
        let labels = problem.constraint_labels();
        let (x0, phase1_iters) = match self.phase_one(&c, &labels, tol)? {
            Ok(v) => v,
            Err(infeasible) => return Ok(infeasible),
        };
        let view = View {
            c: &c,
            phase: Phase::Optimality,
        };
        // Criteria are relative to the objective's value and gradient scale:
        // the dual update loses about `eps / min |f_i|` in absolute accuracy.
        let target = 0.5 * tol;
        let scales = |p: &Point| {
            let g = c
                .objective
                .gradient(&p.x)
                .iter()
                .map(|v| v.amax())
                .fold(0.0, f64::max);
            (1.0 + c.objective.eval(&p.x).abs(), 1.0 + g)
        };
        let converged = |p: &Point, _: &[f64], gap: f64, r: f64| {
            let (sg, sd) = scales(p);
            (gap <= target * sg && r <= target * sd).then_some(SolveStatus::Optimal)
        };
        let close = |p: &Point, _: &[f64], gap: f64, r: f64| {
            let (sg, sd) = scales(p);
            (gap <= 100.0 * tol * sg && r <= 100.0 * tol * sd).then_some(SolveStatus::Optimal)
        };
        let start = Point { x: x0, s: 0.0 };
        let handover = HANDOVER_GAP * scales(&start).0;
        let warm = self.barrier(&view, start, handover, &converged)?;
        let out = if warm.status == SolveStatus::Optimal {
            warm
        } else {
            let budget = self.max_iter.saturating_sub(warm.iterations);
            let mut out =
                self.primal_dual(&view, warm.point, warm.lambda, budget, &converged, &close)?;
            out.iterations += warm.iterations;
            out
        };
        let objective_value = view.objective(&out.point);
        Ok(SolverResult {
            primal: Compiled::flatten(&out.point.x),
            duals: out.lambda,
            objective_value,
            status: out.status,
            kkt_residual: out.dual_residual,
            duality_gap: out.gap,
            iterations: phase1_iters + out.iterations,
            violated: vec![],
        })
    }
}
