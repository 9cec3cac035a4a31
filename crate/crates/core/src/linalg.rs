//! SVD helpers with sorted spectra and full right singular bases.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values in descending order with the matching right singular
/// vectors as columns of `v` (`ncols × ncols`). Wide matrices are padded
/// with zero rows so every column direction is represented.
pub(crate) struct SortedSvd {
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn sorted_svd(a: &DMatrix<f64>) -> Result<SortedSvd> {
    let (r, c) = a.shape();
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.rows_mut(0, r).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = padded
        .try_svd(false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Singular("SVD did not converge".into()))?;
    let vt = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let sigma = order.iter().map(|&i| svd.singular_values[i]).collect();
    let v = DMatrix::from_fn(c, c, |row, col| vt[(order[col], row)]);
    Ok(SortedSvd { sigma, v })
}

impl SortedSvd {
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(0.0);
        self.sigma.iter().filter(|&&s| s > rel_tol * smax).count()
    }

    /// Right singular vectors spanning the numerical kernel, each with its
    /// largest-magnitude component made positive.
    pub fn kernel(&self, rel_tol: f64) -> Vec<DVector<f64>> {
        let rank = self.rank(rel_tol);
        (rank..self.v.ncols()).map(|j| canonical_sign(self.v.column(j).into_owned())).collect()
    }

    /// Right singular vector of the smallest singular value.
    pub fn smallest(&self) -> DVector<f64> {
        self.v.column(self.v.ncols() - 1).into_owned()
    }
}

pub(crate) fn canonical_sign(mut v: DVector<f64>) -> DVector<f64> {
    if !v.is_empty() && v[v.iamax()] < 0.0 {
        v.neg_mut();
    }
    v
}

/// Minimum-norm least-squares solution of `a x = b`, singular values below
/// `rel_tol · σ_max` treated as zero.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> Result<DVector<f64>> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, rel_tol * smax).map_err(|e| Error::Singular(e.to_string()))
}

/// Row-sum norm of a matrix.
pub(crate) fn norm_inf(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Eigenvalues as `[re, im]`, ordered by decreasing modulus.
pub(crate) fn eigenvalues(a: &DMatrix<f64>) -> Vec<[f64; 2]> {
    let ev = a.complex_eigenvalues();
    let mut out: Vec<[f64; 2]> = ev.iter().map(|z| [z.re, z.im]).collect();
    out.sort_by(|x, y| y[0].hypot(y[1]).total_cmp(&x[0].hypot(x[1])));
    out
}
