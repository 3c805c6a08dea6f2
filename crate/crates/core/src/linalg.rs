//! Dense helpers on top of nalgebra shared by the model and the pair sweep.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rayon::prelude::*;

use crate::error::{BeamError, Result};

/// Column block width for the parallel cross products. Fixed so results do
/// not depend on the worker count.
const CROSS_BLOCK: usize = 128;

/// `aᵀ b` computed column-block by column-block in parallel.
pub(crate) fn cross_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.nrows(), b.nrows());
    let ncols = b.ncols();
    if ncols <= CROSS_BLOCK {
        return a.tr_mul(b);
    }
    let starts: Vec<usize> = (0..ncols).step_by(CROSS_BLOCK).collect();
    let blocks: Vec<DMatrix<f64>> = starts
        .par_iter()
        .map(|&c0| {
            let w = CROSS_BLOCK.min(ncols - c0);
            a.tr_mul(&b.columns(c0, w))
        })
        .collect();
    let mut out = DMatrix::zeros(a.ncols(), ncols);
    for (&c0, block) in starts.iter().zip(&blocks) {
        out.columns_mut(c0, block.ncols()).copy_from(block);
    }
    out
}

/// Gram matrix `aᵀ a`, symmetrized exactly.
pub(crate) fn gram(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = cross_product(a, a);
    symmetrize(&mut g);
    g
}

/// Replaces `m` by `(m + mᵀ) / 2`.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for j in 0..p {
        for i in (j + 1)..p {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenvalues of a symmetric matrix, sorted non-increasing.
pub(crate) fn sym_eigenvalues_desc(m: DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

pub(crate) fn cholesky(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(m).ok_or_else(|| BeamError::numerical(format!("{what} is not positive definite")))
}

/// Inverse of an SPD matrix through its Cholesky factor, symmetrized.
pub(crate) fn spd_inverse(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let mut inv = cholesky(m, what)?.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}
