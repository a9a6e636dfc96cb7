//! Convex QCQP solver for the per-iteration precoder subproblem.
//!
//! Problems are stated over a real vector partitioned into contiguous
//! blocks. Every quadratic term lives inside a single block; constraints
//! whose linear part spans several blocks (the total power budget) are the
//! only coupling. The interior-point method exploits this: its Newton
//! systems are block diagonal plus a low-rank correction.

mod certify;
mod compiled;
mod ipm;
mod kkt;

pub use certify::{certify, constraint_values, max_violation, stationarity_residual};
pub use ipm::InteriorPoint;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Dense symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    pub fn from_nalgebra(m: &nalgebra::DMatrix<f64>) -> Self {
        let dim = m.nrows();
        Self {
            dim,
            data: (0..dim * dim).map(|i| m[(i / dim, i % dim)]).collect(),
        }
    }
}

/// `xᵀ Q x` restricted to one block; `matrix` is indexed by offsets within
/// the block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadBlock {
    pub block: usize,
    pub matrix: DenseMatrix,
}

/// `Σ_b x_bᵀ Q_b x_b + Σ_i c_i x_i + d`. Linear entries use global indices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadForm {
    pub quadratic: Vec<QuadBlock>,
    pub linear: Vec<(usize, f64)>,
    pub constant: f64,
}

/// `form(x) <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadConstraint {
    pub label: String,
    pub form: QuadForm,
}

/// `Σ coeffs_i x_i >= lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineConstraint {
    pub label: String,
    pub coeffs: Vec<(usize, f64)>,
    pub lower: f64,
}

/// A convex QCQP: minimize `objective` subject to convex quadratic
/// constraints, affine lower bounds and `x_i <= 0` sign constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexSubproblem {
    /// Sizes of the contiguous variable blocks.
    pub blocks: Vec<usize>,
    pub objective: QuadForm,
    pub quadratic_constraints: Vec<QuadConstraint>,
    pub affine_constraints: Vec<AffineConstraint>,
    pub sign_constraints: Vec<usize>,
}

impl ConvexSubproblem {
    pub fn num_vars(&self) -> usize {
        self.blocks.iter().sum()
    }

    pub fn num_constraints(&self) -> usize {
        self.quadratic_constraints.len()
            + self.affine_constraints.len()
            + self.sign_constraints.len()
    }

    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.blocks.len() + 1);
        let mut acc = 0;
        off.push(0);
        for b in &self.blocks {
            acc += b;
            off.push(acc);
        }
        off
    }

    /// Constraint labels in dual order: quadratic, affine, sign.
    pub fn constraint_labels(&self) -> Vec<String> {
        self.quadratic_constraints
            .iter()
            .map(|c| c.label.clone())
            .chain(self.affine_constraints.iter().map(|c| c.label.clone()))
            .chain(self.sign_constraints.iter().map(|i| format!("sign[x{i}]")))
            .collect()
    }

    /// Checks dimensions, finiteness and PSD Hessians (within 1e-10).
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if n == 0 {
            return Err(Error::invalid("subproblem has no variables"));
        }
        let check_form = |what: &str, f: &QuadForm| -> Result<()> {
            for q in &f.quadratic {
                let size = *self.blocks.get(q.block).ok_or_else(|| {
                    Error::invalid(format!("{what}: block {} does not exist", q.block))
                })?;
                if q.matrix.dim != size || q.matrix.data.len() != size * size {
                    return Err(Error::invalid(format!(
                        "{what}: block {} matrix has wrong size",
                        q.block
                    )));
                }
                if q.matrix.data.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("{what}: non-finite Hessian entry")));
                }
                let m = q.matrix.to_nalgebra();
                let asym = (&m - m.transpose()).amax();
                let scale = m.amax().max(1.0);
                if asym > 1e-10 * scale {
                    return Err(Error::invalid(format!("{what}: Hessian is not symmetric")));
                }
                let cm = m.map(|v| num_complex::Complex64::new(v, 0.0));
                let (values, _) = hermitian_eigen(&cm);
                if values.last().copied().unwrap_or(0.0) < -1e-10 * scale {
                    return Err(Error::invalid(format!("{what}: Hessian is not PSD")));
                }
            }
            for &(i, v) in &f.linear {
                if i >= n || !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "{what}: bad linear term ({i}, {v})"
                    )));
                }
            }
            if !f.constant.is_finite() {
                return Err(Error::invalid(format!("{what}: non-finite constant")));
            }
            Ok(())
        };
        check_form("objective", &self.objective)?;
        for c in &self.quadratic_constraints {
            check_form(&c.label, &c.form)?;
        }
        for c in &self.affine_constraints {
            if c.coeffs.iter().any(|&(i, v)| i >= n || !v.is_finite()) || !c.lower.is_finite() {
                return Err(Error::invalid(format!(
                    "{}: bad affine constraint",
                    c.label
                )));
            }
        }
        if let Some(&i) = self.sign_constraints.iter().find(|&&i| i >= n) {
            return Err(Error::invalid(format!(
                "sign constraint on missing variable {i}"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl QuadForm {
    /// Direct evaluation from the stored data.
    pub fn eval(&self, x: &[f64], offsets: &[usize]) -> f64 {
        let mut v = self.constant;
        for q in &self.quadratic {
            let base = offsets[q.block];
            let d = q.matrix.dim;
            for i in 0..d {
                let xi = x[base + i];
                if xi == 0.0 {
                    continue;
                }
                let row = &q.matrix.data[i * d..(i + 1) * d];
                let s: f64 = row.iter().zip(&x[base..base + d]).map(|(a, b)| a * b).sum();
                v += xi * s;
            }
        }
        for &(i, c) in &self.linear {
            v += c * x[i];
        }
        v
    }

    /// Dense gradient.
    pub fn gradient(&self, x: &[f64], offsets: &[usize]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for q in &self.quadratic {
            let base = offsets[q.block];
            let d = q.matrix.dim;
            for i in 0..d {
                let row = &q.matrix.data[i * d..(i + 1) * d];
                let s: f64 = row.iter().zip(&x[base..base + d]).map(|(a, b)| a * b).sum();
                g[base + i] += 2.0 * s;
            }
        }
        for &(i, c) in &self.linear {
            g[i] += c;
        }
        g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub primal: Vec<f64>,
    /// Multipliers in the order of [`ConvexSubproblem::constraint_labels`].
    pub duals: Vec<f64>,
    pub objective_value: f64,
    pub status: SolveStatus,
    /// Infinity norm of the Lagrangian gradient.
    pub kkt_residual: f64,
    /// Surrogate duality gap `-Σ λ_i f_i(x)`.
    pub duality_gap: f64,
    pub iterations: usize,
    /// For infeasible problems: constraints carrying the Phase I certificate.
    pub violated: Vec<String>,
}

/// Adapter interface so the optimizer can delegate to another solver with
/// the same result contract.
pub trait ConvexSolver: Send + Sync {
    fn solve(&self, problem: &ConvexSubproblem, tol: f64) -> Result<SolverResult>;
}

/// Solves with the default interior-point method.
pub fn solve(problem: &ConvexSubproblem, tol: f64) -> Result<SolverResult> {
    InteriorPoint::default().solve(problem, tol)
}
