//! Newton systems of the form
//!
//! ```text
//! [ D + Σ_j w_j u_j u_jᵀ   b ] [dx]   [r_x]
//! [ bᵀ                     c ] [ds] = [r_s]
//! ```
//!
//! with `D` block diagonal, a handful of coupling rank-one terms and an
//! optional scalar border variable (the Phase I slack). `D` is factored
//! block by block and the rank-one terms are folded in with Woodbury.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

pub(crate) type Blocks = Vec<DVector<f64>>;

/// Vector stored as its nonzero `(block, values)` pieces.
pub(crate) type SparseBlocks = Vec<(usize, DVector<f64>)>;

pub(crate) struct KktSystem {
    pub blocks: Vec<DMatrix<f64>>,
    /// Sparse-by-block vectors `u_j` with weights `w_j`.
    pub globals: Vec<(SparseBlocks, f64)>,
    pub border: Option<(Blocks, f64)>,
}

pub(crate) struct Factored {
    chol: Vec<Cholesky<f64, Dyn>>,
    globals: Vec<SparseBlocks>,
    /// `D⁻¹ u_j`, dense by block.
    d_inv_u: Vec<Blocks>,
    capacitance: Option<Cholesky<f64, Dyn>>,
    border: Option<(Blocks, f64)>,
    /// `A⁻¹ b` and the Schur complement `c - bᵀ A⁻¹ b`.
    border_solve: Option<(Blocks, f64)>,
}

fn robust_cholesky(m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Ok(c);
    }
    let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(1.0, f64::max);
    let mut shift = 1e-14 * scale;
    for _ in 0..8 {
        let mut shifted = m.clone();
        for i in 0..m.nrows() {
            shifted[(i, i)] += shift;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Ok(c);
        }
        shift *= 100.0;
    }
    Err(Error::NumericalFailure(
        "Newton system is not positive definite".into(),
    ))
}

fn dot_blocks(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn dot_sparse(u: &[(usize, DVector<f64>)], v: &Blocks) -> f64 {
    u.iter().map(|(b, x)| x.dot(&v[*b])).sum()
}

impl KktSystem {
    pub fn new(blocks: Vec<DMatrix<f64>>) -> Self {
        Self {
            blocks,
            globals: Vec::new(),
            border: None,
        }
    }

    pub fn factor(self) -> Result<Factored> {
        let chol = self
            .blocks
            .into_iter()
            .map(robust_cholesky)
            .collect::<Result<Vec<_>>>()?;
        let sizes: Vec<usize> = chol.iter().map(|c| c.l_dirty().nrows()).collect();
        let mut d_inv_u = Vec::with_capacity(self.globals.len());
        let mut weights = Vec::with_capacity(self.globals.len());
        let mut globals = Vec::with_capacity(self.globals.len());
        for (u, w) in self.globals {
            if w <= 0.0 {
                continue;
            }
            let mut dense: Blocks = sizes.iter().map(|&s| DVector::zeros(s)).collect();
            for (b, x) in &u {
                dense[*b] = chol[*b].solve(x);
            }
            d_inv_u.push(dense);
            weights.push(w);
            globals.push(u);
        }
        let capacitance = if globals.is_empty() {
            None
        } else {
            let r = globals.len();
            let s = DMatrix::from_fn(r, r, |i, j| {
                let v = dot_sparse(&globals[i], &d_inv_u[j]);
                if i == j {
                    v + 1.0 / weights[i]
                } else {
                    v
                }
            });
            let s = (&s + s.transpose()) * 0.5;
            Some(robust_cholesky(s)?)
        };
        let mut f = Factored {
            chol,
            globals,
            d_inv_u,
            capacitance,
            border: None,
            border_solve: None,
        };
        if let Some((b, c)) = self.border {
            let z = f.solve_inner(&b);
            let schur = c - dot_blocks(&b, &z);
            if !(schur > 0.0) {
                return Err(Error::NumericalFailure(
                    "bordered Newton system is singular".into(),
                ));
            }
            f.border_solve = Some((z, schur));
            f.border = Some((b, c));
        }
        Ok(f)
    }
}

impl Factored {
    /// `A⁻¹ v` with `A = D + Σ w_j u_j u_jᵀ`.
    fn solve_inner(&self, v: &Blocks) -> Blocks {
        let mut x: Blocks = self.chol.iter().zip(v).map(|(c, r)| c.solve(r)).collect();
        if let Some(cap) = &self.capacitance {
            let proj = DVector::from_iterator(
                self.globals.len(),
                self.globals.iter().map(|u| dot_sparse(u, &x)),
            );
            let coef = cap.solve(&proj);
            for (j, y) in self.d_inv_u.iter().enumerate() {
                for (xb, yb) in x.iter_mut().zip(y) {
                    xb.axpy(-coef[j], yb, 1.0);
                }
            }
        }
        x
    }

    pub fn solve(&self, rhs_x: &Blocks, rhs_s: f64) -> (Blocks, f64) {
        let mut x = self.solve_inner(rhs_x);
        match (&self.border, &self.border_solve) {
            (Some((b, _)), Some((z, schur))) => {
                let ds = (rhs_s - dot_blocks(b, &x)) / schur;
                for (xb, zb) in x.iter_mut().zip(z) {
                    xb.axpy(-ds, zb, 1.0);
                }
                (x, ds)
            }
            _ => (x, 0.0),
        }
    }
}
