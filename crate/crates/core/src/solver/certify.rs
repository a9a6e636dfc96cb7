//! Independent re-evaluation of a solver result straight from the problem
//! data (no compiled representation).

use super::{ConvexSubproblem, SolveStatus, SolverResult};

/// Constraint values `f_i(x)` (feasible iff `<= 0`) in dual order.
pub fn constraint_values(problem: &ConvexSubproblem, x: &[f64]) -> Vec<f64> {
    let off = problem.block_offsets();
    let mut out = Vec::with_capacity(problem.num_constraints());
    for c in &problem.quadratic_constraints {
        out.push(c.form.eval(x, &off));
    }
    for c in &problem.affine_constraints {
        let lhs: f64 = c.coeffs.iter().map(|&(i, v)| v * x[i]).sum();
        out.push(c.lower - lhs);
    }
    for &i in &problem.sign_constraints {
        out.push(x[i]);
    }
    out
}

pub fn max_violation(problem: &ConvexSubproblem, x: &[f64]) -> f64 {
    constraint_values(problem, x)
        .into_iter()
        .fold(0.0, f64::max)
}

/// `‖∇f0(x) + Σ λ_i ∇f_i(x)‖_∞`.
pub fn stationarity_residual(problem: &ConvexSubproblem, x: &[f64], duals: &[f64]) -> f64 {
    let off = problem.block_offsets();
    let mut g = problem.objective.gradient(x, &off);
    let mut k = 0;
    for c in &problem.quadratic_constraints {
        let gi = c.form.gradient(x, &off);
        for (a, b) in g.iter_mut().zip(gi) {
            *a += duals[k] * b;
        }
        k += 1;
    }
    for c in &problem.affine_constraints {
        for &(i, v) in &c.coeffs {
            g[i] -= duals[k] * v;
        }
        k += 1;
    }
    for &i in &problem.sign_constraints {
        g[i] += duals[k];
        k += 1;
    }
    g.into_iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// True iff `result` is optimal, primal feasible, dual feasible, stationary
/// and has a surrogate duality gap within `tol`.
pub fn certify(problem: &ConvexSubproblem, result: &SolverResult, tol: f64) -> bool {
    if result.status != SolveStatus::Optimal
        || result.primal.len() != problem.num_vars()
        || result.duals.len() != problem.num_constraints()
        || result.primal.iter().any(|v| !v.is_finite())
    {
        return false;
    }
    if result.duals.iter().any(|&l| !(l >= 0.0)) {
        return false;
    }
    let values = constraint_values(problem, &result.primal);
    if values.iter().any(|&f| f > tol) {
        return false;
    }
    let gap: f64 = values.iter().zip(&result.duals).map(|(f, l)| -f * l).sum();
    if gap.abs() > tol {
        return false;
    }
    stationarity_residual(problem, &result.primal, &result.duals) <= tol
}
