//! Small dense block-matrix helpers.

use nalgebra::{DMatrix, DVector};

/// Horizontal concatenation; all blocks must share the row count `rows`.
pub fn hcat(rows: usize, blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        out.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    out
}

/// Vertical concatenation; all blocks must share the column count `cols`.
pub fn vcat(cols: usize, blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    out
}

pub fn vcat_vec(parts: &[&DVector<f64>]) -> DVector<f64> {
    DVector::from_iterator(
        parts.iter().map(|p| p.len()).sum(),
        parts.iter().flat_map(|p| p.iter().copied()),
    )
}

pub fn blockdiag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

pub fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

pub fn select_cols(m: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), cols.len(), |i, j| m[(i, cols[j])])
}

pub fn select_entries(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Indices of columns with some entry above `tol` in absolute value.
pub fn nonzero_columns(m: &DMatrix<f64>, tol: f64) -> Vec<usize> {
    (0..m.ncols()).filter(|&j| m.column(j).amax() > tol).collect()
}

/// Numerical rank from the singular values, relative tolerance `rtol`.
pub fn rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rtol * top).count()
}

/// Moore–Penrose pseudo-inverse.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return DMatrix::zeros(m.ncols(), m.nrows());
    }
    let svd = m.clone().svd(true, true);
    let tol = 1e-12 * svd.singular_values.max().max(1.0) * m.nrows().max(m.ncols()) as f64;
    svd.pseudo_inverse(tol).expect("u and v were computed")
}

/// Orthonormal basis of the left null space `{u : uᵀm = 0}`, as columns.
pub fn left_null_space(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::identity(n, n);
    }
    // Pad to a square matrix so the SVD returns a full U.
    let padded = if m.ncols() < n {
        hcat(n, &[m, &DMatrix::zeros(n, n - m.ncols())])
    } else {
        m.clone()
    };
    let svd = padded.svd(true, false);
    let u = svd.u.expect("u was requested");
    let top = svd.singular_values.max();
    let cols: Vec<usize> = (0..n)
        .filter(|&i| i >= svd.singular_values.len() || svd.singular_values[i] <= rtol * top.max(1e-300))
        .collect();
    select_cols(&u, &cols)
}
