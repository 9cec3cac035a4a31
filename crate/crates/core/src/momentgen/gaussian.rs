use nalgebra::DMatrix;

use super::{MomentSequence, Provenance};
use crate::error::{Error, Result};
use crate::multi_index::enumerate_basis;

/// Exact moments of `exp(-x^T Σ x) dx` on `R^n` by the Isserlis recursion
/// for a centred Gaussian with covariance `(2Σ)^{-1}`.
pub fn gaussian_moments_oracle(sigma: &DMatrix<f64>, max_order: usize) -> Result<MomentSequence> {
    let n = sigma.nrows();
    if n == 0 || sigma.ncols() != n {
        return Err(Error::InvalidArgument("Sigma must be square and non-empty".into()));
    }
    let asym = (sigma - sigma.transpose()).amax();
    if asym > 1e-12 * sigma.amax().max(1.0) {
        return Err(Error::InvalidArgument("Sigma must be symmetric".into()));
    }
    let chol = sigma.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
    let det: f64 = chol.l().diagonal().iter().map(|d| d * d).product();
    let cov = (sigma * 2.0).try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let mass = std::f64::consts::PI.powf(n as f64 / 2.0) / det.sqrt();
    let basis = enumerate_basis(n, max_order)?;
    let mut expect = vec![0.0; basis.len()];
    expect[0] = 1.0;
    for (idx, alpha) in basis.iter().enumerate().skip(1) {
        // E[x_i x^{α'}] = Σ_j C_ij α'_j E[x^{α' - e_j}]
        let i = alpha.exponents().iter().position(|&a| a > 0).expect("nonzero index");
        let rest = alpha.sub_unit(i).expect("positive exponent");
        let mut v = 0.0;
        for (j, &aj) in rest.exponents().iter().enumerate() {
            if aj > 0 {
                v += cov[(i, j)] * aj as f64 * expect[rest.sub_unit(j).expect("positive").rank()];
            }
        }
        expect[idx] = v;
    }
    MomentSequence::new(
        n,
        max_order,
        expect.into_iter().map(|e| mass * e).collect(),
        Provenance::ClosedForm,
    )
}
