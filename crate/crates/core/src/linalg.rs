//! Small complex linear-algebra helpers shared by the channel, metric and
//! optimizer layers.
//!
//! Complex vectors are mapped to real vectors as `[Re p; Im p]`. Under that
//! map a Hermitian form `pᴴ A p` becomes `vᵀ [Re A, -Im A; Im A, Re A] v` and
//! `Re{cᴴ p}` becomes `[Re c; Im c]ᵀ v`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CVector = DVector<C64>;
pub type CMatrix = DMatrix<C64>;

/// `aᴴ b`.
#[inline]
pub fn inner(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

/// `|aᴴ b|²`.
#[inline]
pub fn abs2_inner(a: &CVector, b: &CVector) -> f64 {
    inner(a, b).norm_sqr()
}

/// `pᴴ A p`, real part only (exact for Hermitian `A`).
pub fn hermitian_form(a: &CMatrix, p: &CVector) -> f64 {
    inner(p, &(a * p)).re
}

pub fn norm2(p: &CVector) -> f64 {
    p.iter().map(|z| z.norm_sqr()).sum()
}

pub fn zeros(n: usize) -> CVector {
    CVector::zeros(n)
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn check_hermitian(a: &CMatrix, tol: f64) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid(format!(
            "matrix is {}x{}, expected square",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
    let defect = hermitian_defect(a);
    if defect > tol * scale {
        return Err(Error::invalid(format!(
            "matrix is not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// Real symmetric embedding of a Hermitian matrix.
pub fn embed_hermitian(a: &CMatrix) -> DMatrix<f64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i, j + n)] = -z.im;
            out[(i + n, j)] = z.im;
        }
    }
    out
}

/// Real coefficients `w` such that `Re{cᴴ p} = wᵀ v`.
pub fn embed_linear(c: &CVector) -> DVector<f64> {
    let n = c.len();
    DVector::from_fn(2 * n, |i, _| if i < n { c[i].re } else { c[i - n].im })
}

pub fn to_real(p: &CVector) -> DVector<f64> {
    embed_linear(p)
}

pub fn from_real(v: &[f64]) -> CVector {
    let n = v.len() / 2;
    CVector::from_fn(n, |i, _| C64::new(v[i], v[i + n]))
}

/// `Σ w_m h_m h_mᴴ`.
pub fn weighted_outer_sum<'a>(
    n: usize,
    terms: impl IntoIterator<Item = (f64, &'a CVector)>,
) -> CMatrix {
    let mut out = CMatrix::zeros(n, n);
    for (w, h) in terms {
        if w == 0.0 {
            continue;
        }
        for j in 0..n {
            let hj = h[j].conj() * w;
            for i in 0..n {
                out[(i, j)] += h[i] * hj;
            }
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, Vec<CVector>) {
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    (values, vectors)
}

/// Unit-norm dominant eigenvector of a Hermitian matrix, with the phase
/// fixed so that its largest-magnitude entry is real and positive.
pub fn dominant_eigenvector(a: &CMatrix) -> CVector {
    let (_, vectors) = hermitian_eigen(a);
    let mut v = vectors.into_iter().next().expect("non-empty matrix");
    let pivot = v
        .iter()
        .copied()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    if pivot.norm() > 0.0 {
        let phase = pivot.conj() / pivot.norm();
        v *= phase;
    }
    let n = v.norm();
    if n > 0.0 {
        v /= C64::new(n, 0.0);
    }
    v
}

/// Serde adapter: a list of complex vectors as nested `[re, im]` pairs.
pub mod serde_vecs {
    use super::{CVector, C64};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub(crate) fn pack(v: &CVector) -> Vec<[f64; 2]> {
        v.iter().map(|z| [z.re, z.im]).collect()
    }

    pub(crate) fn unpack(v: Vec<[f64; 2]>) -> CVector {
        CVector::from_iterator(v.len(), v.into_iter().map(|[re, im]| C64::new(re, im)))
    }

    pub fn serialize<S: Serializer>(v: &[CVector], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(pack).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CVector>, D::Error> {
        let raw: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(unpack).collect())
    }
}

/// Serde adapter for `[outer][inner]` grids of complex vectors.
pub mod serde_nested {
    use super::serde_vecs::{pack, unpack};
    use super::CVector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<CVector>], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|row| row.iter().map(pack).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<CVector>>, D::Error> {
        let raw: Vec<Vec<Vec<[f64; 2]>>> = Vec::deserialize(d)?;
        Ok(raw
            .into_iter()
            .map(|row| row.into_iter().map(unpack).collect())
            .collect())
    }
}
