use nalgebra::DMatrix;

use super::region::{ellipsoid_matrix, RegionKind};
use super::{MomentSequence, Provenance};
use crate::error::{Error, Result};
use crate::multi_index::MultiIndex;

/// Γ(k/2) for a positive integer `k`, by the half-step recursion.
fn gamma_half(k: u32) -> f64 {
    let mut g = if k.is_multiple_of(2) { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if k.is_multiple_of(2) { 1.0 } else { 0.5 };
    while 2.0 * x < k as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `∫_{|x|<r} x^α dx` in `α.dim()` dimensions.
pub(crate) fn ball_moment(alpha: &MultiIndex, r: f64) -> f64 {
    let e = alpha.exponents();
    if e.iter().any(|a| a % 2 == 1) {
        return 0.0;
    }
    let m = (e.len() + alpha.degree()) as u32;
    let num: f64 = e.iter().map(|&a| gamma_half(a + 1)).product();
    r.powi(m as i32) * 2.0 * num / (m as f64 * gamma_half(m))
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

fn simplex_moment(alpha: &MultiIndex) -> f64 {
    let num: f64 = alpha.exponents().iter().map(|&a| factorial(a)).product();
    num / factorial((alpha.degree() + alpha.dim()) as u32)
}

fn box_moment(alpha: &MultiIndex, lower: &[f64], upper: &[f64]) -> f64 {
    alpha
        .exponents()
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&a, (&lo, &hi))| {
            let k = a as i32 + 1;
            (hi.powi(k) - lo.powi(k)) / k as f64
        })
        .product()
}

/// Exact moments for region kinds that have a closed form, `None` otherwise.
pub(crate) fn moments(kind: &RegionKind, order: usize) -> Result<Option<MomentSequence>> {
    let pv = Provenance::ClosedForm;
    let y = match kind {
        RegionKind::Disk { radius } => MomentSequence::from_fn(2, order, pv, |a| ball_moment(a, *radius))?,
        RegionKind::Annulus { s } => {
            let inner = s.sqrt();
            MomentSequence::from_fn(2, order, pv, |a| ball_moment(a, 1.0) - ball_moment(a, inner))?
        }
        RegionKind::Simplex { n } => MomentSequence::from_fn(*n, order, pv, simplex_moment)?,
        RegionKind::Box { lower, upper } => {
            MomentSequence::from_fn(lower.len(), order, pv, |a| box_moment(a, lower, upper))?
        }
        RegionKind::Ellipsoid { matrix } => {
            // {x^T A x < 1} = L^{-T} · unit ball with A = L L^T
            let a = ellipsoid_matrix(matrix)?;
            let n = a.nrows();
            let chol = a.cholesky().ok_or(Error::NotPositiveDefinite)?;
            let map: DMatrix<f64> = chol
                .l()
                .transpose()
                .try_inverse()
                .ok_or_else(|| Error::Singular("ellipsoid Cholesky factor".into()))?;
            let ball = MomentSequence::from_fn(n, order, pv, |a| ball_moment(a, 1.0))?;
            ball.pushforward(&map, &vec![0.0; n], map.determinant().abs())?
        }
        _ => return Ok(None),
    };
    Ok(Some(y))
}
