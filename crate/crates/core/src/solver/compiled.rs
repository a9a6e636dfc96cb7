//! Block-local representation of the problem functions used by the
//! interior-point iterations.

use nalgebra::{DMatrix, DVector};

use super::{ConvexSubproblem, QuadForm};

/// `x_bᵀ Q x_b + cᵀ x_b` on one block.
#[derive(Debug, Clone)]
pub(crate) struct Piece {
    pub block: usize,
    pub q: Option<DMatrix<f64>>,
    pub c: DVector<f64>,
}

/// Sum of pieces over distinct blocks plus a constant.
#[derive(Debug, Clone)]
pub(crate) struct Func {
    pub pieces: Vec<Piece>,
    pub constant: f64,
}

impl Func {
    fn from_parts(
        blocks: &[usize],
        block_of: &[(usize, usize)],
        quad: Vec<(usize, DMatrix<f64>)>,
        linear: &[(usize, f64)],
        constant: f64,
    ) -> Self {
        let mut pieces: Vec<Piece> = Vec::new();
        let slot = |b: usize, pieces: &mut Vec<Piece>| -> usize {
            if let Some(i) = pieces.iter().position(|p| p.block == b) {
                i
            } else {
                pieces.push(Piece {
                    block: b,
                    q: None,
                    c: DVector::zeros(blocks[b]),
                });
                pieces.len() - 1
            }
        };
        for (b, m) in quad {
            let i = slot(b, &mut pieces);
            pieces[i].q = Some(match pieces[i].q.take() {
                Some(prev) => prev + m,
                None => m,
            });
        }
        for &(idx, v) in linear {
            let (b, off) = block_of[idx];
            let i = slot(b, &mut pieces);
            pieces[i].c[off] += v;
        }
        pieces.sort_by_key(|p| p.block);
        Func { pieces, constant }
    }

    pub fn eval(&self, x: &[DVector<f64>]) -> f64 {
        let mut v = self.constant;
        for p in &self.pieces {
            let xb = &x[p.block];
            if let Some(q) = &p.q {
                v += xb.dot(&(q * xb));
            }
            v += p.c.dot(xb);
        }
        v
    }

    /// Gradient pieces, aligned with `self.pieces`.
    pub fn gradient(&self, x: &[DVector<f64>]) -> Vec<DVector<f64>> {
        self.pieces
            .iter()
            .map(|p| match &p.q {
                Some(q) => q * &x[p.block] * 2.0 + &p.c,
                None => p.c.clone(),
            })
            .collect()
    }
}

/// All problem functions with constraints normalized to `f_i(x) <= 0`.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub blocks: Vec<usize>,
    pub objective: Func,
    pub constraints: Vec<Func>,
}

impl Compiled {
    pub fn new(p: &ConvexSubproblem) -> Self {
        let mut block_of = Vec::with_capacity(p.num_vars());
        for (b, &size) in p.blocks.iter().enumerate() {
            for off in 0..size {
                block_of.push((b, off));
            }
        }
        let from_form = |f: &QuadForm| {
            let quad = f
                .quadratic
                .iter()
                .map(|q| (q.block, q.matrix.to_nalgebra()))
                .collect();
            Func::from_parts(&p.blocks, &block_of, quad, &f.linear, f.constant)
        };
        let objective = from_form(&p.objective);
        let mut constraints: Vec<Func> = p
            .quadratic_constraints
            .iter()
            .map(|c| from_form(&c.form))
            .collect();
        for c in &p.affine_constraints {
            let neg: Vec<(usize, f64)> = c.coeffs.iter().map(|&(i, v)| (i, -v)).collect();
            constraints.push(Func::from_parts(
                &p.blocks,
                &block_of,
                vec![],
                &neg,
                c.lower,
            ));
        }
        for &i in &p.sign_constraints {
            constraints.push(Func::from_parts(
                &p.blocks,
                &block_of,
                vec![],
                &[(i, 1.0)],
                0.0,
            ));
        }
        Self {
            blocks: p.blocks.clone(),
            objective,
            constraints,
        }
    }

    pub fn flatten(x: &[DVector<f64>]) -> Vec<f64> {
        x.iter().flat_map(|b| b.iter().copied()).collect()
    }
}
