use nalgebra::{DMatrix, DVector};

use super::quadrature::rule;
use super::{MomentSequence, Provenance};
use crate::error::{Error, Result};
use crate::multi_index::enumerate_basis;
use crate::polynomial::DensePolynomial;

/// Default largest truncation half-width (in the integration frame).
pub const DEFAULT_BOX_GROWTH_LIMIT: f64 = 64.0;

const MAX_POINTS: usize = 1 << 22;

/// Moments of `exp(-g(x)) dx` over `R^n`.
///
/// For quadratic `g` with positive definite Hessian the integrand factors in
/// the frame where `g` is `g(c) + |u|^2 / 2` and the moments are exact.
/// Otherwise the integral is taken in the original coordinates: truncation boxes `[-w, w]^n` grow by a factor 2 from `w = 2`
/// until consecutive boxes agree to `tol`; failing that before
/// `box_growth_limit`, `g` is reported as not in the cone C.
pub fn moments_exp_global(
    g: &DensePolynomial,
    max_order: usize,
    tol: f64,
    box_growth_limit: f64,
) -> Result<MomentSequence> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    if !(box_growth_limit >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "box growth limit {box_growth_limit} must be at least 2"
        )));
    }
    let n = g.n();
    let (linear, center) = frame(g)?;
    let local = g.compose_affine(&linear, center.as_slice())?;
    if let Some(gc) = standard_gaussian_offset(&local) {
        let values = gaussian_frame_moments(n, max_order, gc)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotIntegrable(format!("exp(-g) overflows: minimum of g is {gc}")));
        }
        let jac = linear.determinant().abs();
        let seq = MomentSequence::new(n, max_order, values, Provenance::ClosedForm)?;
        return Ok(seq.pushforward(&linear, center.as_slice(), jac)?.with_provenance(Provenance::ClosedForm));
    }
    let mut w = 2.0;
    let mut prev: Option<Vec<f64>> = None;
    loop {
        let values = tensor_integrate(&local, max_order, w, tol)?;
        if let Some(p) = &prev {
            let settled = values
                .iter()
                .zip(p)
                .all(|(v, q)| (v - q).abs() <= tol * v.abs().max(1.0));
            if settled {
                let jac = linear.determinant().abs();
                let truncation_box = (0..n)
                    .map(|i| {
                        let r: f64 = (0..n).map(|j| linear[(i, j)].abs()).sum::<f64>() * w;
                        [center[i] - r, center[i] + r]
                    })
                    .collect();
                let seq = MomentSequence::new(n, max_order, values, Provenance::ClosedForm)?;
                return Ok(seq.pushforward(&linear, center.as_slice(), jac)?.with_provenance(
                    Provenance::Quadrature {
                        tol,
                        truncation_box: Some(truncation_box),
                    },
                ));
            }
        }
        prev = Some(values);
        w *= 2.0;
        if w > box_growth_limit {
            return Err(Error::NotIntegrable(format!(
                "integrals over nested boxes did not settle to tol {tol:.1e} by half-width {}",
                w / 2.0
            )));
        }
    }
}

/// `Some(g(c))` when `local` is `g(c) + |u|^2 / 2` up to rounding.
fn standard_gaussian_offset(local: &DensePolynomial) -> Option<f64> {
    if local.degree() != 2 {
        return None;
    }
    let ok = local.terms().all(|(a, c)| {
        let e = a.exponents();
        let want = if a.degree() == 2 && e.contains(&2) { 0.5 } else { 0.0 };
        a.is_zero() || (c - want).abs() <= 1e-12
    });
    ok.then(|| local.coeffs()[0])
}

/// `∫ u^α exp(-c - |u|^2/2) du` as products of `(k-1)!! sqrt(2π)`.
fn gaussian_frame_moments(n: usize, order: usize, c: f64) -> Result<Vec<f64>> {
    let mut one_d = vec![0.0; order + 1];
    one_d[0] = (2.0 * std::f64::consts::PI).sqrt();
    for k in (2..=order).step_by(2) {
        one_d[k] = one_d[k - 2] * (k - 1) as f64;
    }
    let scale = (-c).exp();
    Ok(enumerate_basis(n, order)?
        .iter()
        .map(|a| scale * a.exponents().iter().map(|&k| one_d[k as usize]).product::<f64>())
        .collect())
}

/// `(L, c)` with `x = c + L u`.
fn frame(g: &DensePolynomial) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = g.n();
    let identity = (DMatrix::identity(n, n), DVector::zeros(n));
    if g.degree() != 2 {
        return Ok(identity);
    }
    // Hessian H = 2Q and gradient at 0
    let mut h = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for (alpha, c) in g.terms() {
        let e = alpha.exponents();
        match alpha.degree() {
            1 => b[e.iter().position(|&a| a == 1).unwrap()] = c,
            2 => {
                let idx: Vec<usize> = (0..n).flat_map(|i| std::iter::repeat_n(i, e[i] as usize)).collect();
                let (i, j) = (idx[0], idx[1]);
                if i == j {
                    h[(i, i)] = 2.0 * c;
                } else {
                    h[(i, j)] = c;
                    h[(j, i)] = c;
                }
            }
            _ => {}
        }
    }
    let Some(chol) = h.clone().cholesky() else {
        return Ok(identity);
    };
    let center = -chol.solve(&b);
    let linear = chol
        .l()
        .transpose()
        .try_inverse()
        .ok_or_else(|| Error::Singular("Hessian Cholesky factor".into()))?;
    Ok((linear, center))
}

/// Composite 16-point Gauss–Legendre on `[-w, w]^n`, doubling the panel
/// count until the result settles.
fn tensor_integrate(g: &DensePolynomial, order: usize, w: f64, tol: f64) -> Result<Vec<f64>> {
    let mut panels = 1usize;
    let mut prev: Option<Vec<f64>> = None;
    loop {
        let values = tensor_pass(g, order, w, panels)?;
        if let Some(p) = &prev {
            if values.iter().zip(p).all(|(v, q)| (v - q).abs() <= 0.1 * tol * v.abs().max(1.0)) {
                return Ok(values);
            }
        }
        prev = Some(values);
        panels *= 2;
        if (16 * panels).checked_pow(g.n() as u32).is_none_or(|p| p > MAX_POINTS) {
            return Err(Error::QuadratureNonConvergence(format!(
                "tensor Gauss–Legendre on [-{w}, {w}]^{} did not settle within {MAX_POINTS} points",
                g.n()
            )));
        }
    }
}

fn tensor_pass(g: &DensePolynomial, order: usize, w: f64, panels: usize) -> Result<Vec<f64>> {
    let n = g.n();
    let r = rule(16);
    let width = 2.0 * w / panels as f64;
    let mut xs = Vec::with_capacity(16 * panels);
    let mut ws = Vec::with_capacity(16 * panels);
    for p in 0..panels {
        let mid = -w + width * (p as f64 + 0.5);
        for (x, wt) in r.nodes.iter().zip(&r.weights) {
            xs.push(mid + 0.5 * width * x);
            ws.push(0.5 * width * wt);
        }
    }
    let m = xs.len();
    let basis = enumerate_basis(n, order)?;
    let parents: Vec<(usize, usize)> = basis
        .iter()
        .skip(1)
        .map(|a| {
            let i = a.exponents().iter().position(|&e| e > 0).expect("nonzero index");
            (a.sub_unit(i).expect("positive").rank(), i)
        })
        .collect();
    // Neumaier-compensated sums: millions of terms otherwise leave ~1e-13 noise
    let mut acc = vec![0.0; basis.len()];
    let mut comp = vec![0.0; basis.len()];
    let mut mono = vec![0.0; basis.len()];
    let mut idx = vec![0usize; n];
    let mut u = vec![0.0; n];
    loop {
        let mut weight = 1.0;
        for k in 0..n {
            u[k] = xs[idx[k]];
            weight *= ws[idx[k]];
        }
        let v = (-g.eval_unchecked(&u)).exp() * weight;
        if !v.is_finite() {
            return Err(Error::NotIntegrable(format!(
                "exp(-g) overflows at {u:?} inside the truncation box of half-width {w}"
            )));
        }
        if v != 0.0 {
            mono[0] = v;
            for (k, &(p, i)) in parents.iter().enumerate() {
                mono[k + 1] = mono[p] * u[i];
            }
            for ((a, c), &mv) in acc.iter_mut().zip(comp.iter_mut()).zip(&mono) {
                let t = *a + mv;
                *c += if a.abs() >= mv.abs() { (*a - t) + mv } else { (mv - t) + *a };
                *a = t;
            }
        }
        // odometer over the tensor grid
        let mut k = 0;
        loop {
            if k == n {
                return Ok(acc.iter().zip(&comp).map(|(a, c)| a + c).collect());
            }
            idx[k] += 1;
            if idx[k] < m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
