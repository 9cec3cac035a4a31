//! Dense polynomials over the graded monomial basis.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::{enumerate_basis, Basis, MultiIndex};

/// Polynomial of degree at most `d` in `n` variables, stored as one
/// coefficient per basis monomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct DensePolynomial {
    basis: Basis,
    coeffs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    n: usize,
    d: usize,
    coeffs: Vec<f64>,
}

impl TryFrom<PolyRepr> for DensePolynomial {
    type Error = Error;

    fn try_from(r: PolyRepr) -> Result<Self> {
        DensePolynomial::from_coeffs(enumerate_basis(r.n, r.d)?, r.coeffs)
    }
}

impl From<DensePolynomial> for PolyRepr {
    fn from(p: DensePolynomial) -> Self {
        PolyRepr {
            n: p.basis.n(),
            d: p.basis.degree(),
            coeffs: p.coeffs,
        }
    }
}

impl DensePolynomial {
    pub fn from_coeffs(basis: Basis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: coeffs.len(),
            });
        }
        Ok(DensePolynomial { basis, coeffs })
    }

    pub fn zeros(n: usize, d: usize) -> Result<Self> {
        let basis = enumerate_basis(n, d)?;
        let coeffs = vec![0.0; basis.len()];
        Ok(DensePolynomial { basis, coeffs })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        let mut p = Self::zeros(n, 0)?;
        p.coeffs[0] = c;
        Ok(p)
    }

    /// Builds a polynomial from `(exponents, coefficient)` terms; repeated
    /// exponents accumulate.
    pub fn from_terms(n: usize, d: usize, terms: &[(&[u32], f64)]) -> Result<Self> {
        let mut p = Self::zeros(n, d)?;
        for (exps, c) in terms {
            let alpha = MultiIndex::new(exps.to_vec())?;
            let pos = p.basis.position(&alpha).ok_or_else(|| {
                Error::InvalidArgument(format!("term {alpha} outside R[x]_{d} in {n} variables"))
            })?;
            p.coeffs[pos] += c;
        }
        Ok(p)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    /// Degree of the storage basis (an upper bound on the true degree).
    pub fn storage_degree(&self) -> usize {
        self.basis.degree()
    }

    /// Largest `|α|` with a nonzero coefficient; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.basis
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(a, _)| a.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, alpha: &MultiIndex) -> f64 {
        self.basis.position(alpha).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.basis.iter().zip(self.coeffs.iter().copied())
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms()
            .filter(|(_, c)| *c != 0.0)
            .map(|(a, c)| c * a.monomial(x))
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let n = self.n();
        let mut grad = vec![0.0; n];
        for (alpha, c) in self.terms() {
            if c == 0.0 {
                continue;
            }
            for (j, g) in grad.iter_mut().enumerate() {
                if let Some(lower) = alpha.sub_unit(j) {
                    *g += c * alpha.exponents()[j] as f64 * lower.monomial(x);
                }
            }
        }
        debug_assert_eq!(grad.len(), n);
        Ok(grad)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// The homogeneous component `g_k`, kept in the same basis.
    pub fn homogeneous_part(&self, k: usize) -> Result<DensePolynomial> {
        if k > self.storage_degree() {
            return Err(Error::InvalidArgument(format!(
                "degree {k} exceeds polynomial degree {}",
                self.storage_degree()
            )));
        }
        let range = self.basis.degree_range(k);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if range.contains(&i) { c } else { 0.0 })
            .collect();
        Ok(DensePolynomial {
            basis: self.basis.clone(),
            coeffs,
        })
    }

    /// `Σ_k k g_k`, which is `<x, ∇p(x)>` as a polynomial.
    pub fn euler_weighted_sum(&self) -> DensePolynomial {
        let coeffs = self
            .terms()
            .map(|(a, c)| a.degree() as f64 * c)
            .collect();
        DensePolynomial {
            basis: self.basis.clone(),
            coeffs,
        }
    }

    /// Re-expresses the polynomial over a basis of degree `d >= storage_degree`.
    pub fn with_degree(&self, d: usize) -> Result<DensePolynomial> {
        if d < self.degree() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate a degree-{} polynomial to degree {d}",
                self.degree()
            )));
        }
        let basis = enumerate_basis(self.n(), d)?;
        let mut coeffs = vec![0.0; basis.len()];
        for (alpha, c) in self.terms() {
            if c != 0.0 {
                coeffs[alpha.rank()] = c;
            }
        }
        Ok(DensePolynomial { basis, coeffs })
    }

    pub fn scale(&self, s: f64) -> DensePolynomial {
        DensePolynomial {
            basis: self.basis.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &DensePolynomial) -> Result<DensePolynomial> {
        self.same_dim(other)?;
        let d = self.storage_degree().max(other.storage_degree());
        let mut out = self.with_degree(d)?;
        for (alpha, c) in other.terms() {
            out.coeffs[alpha.rank()] += c;
        }
        Ok(out)
    }

    pub fn mul(&self, other: &DensePolynomial) -> Result<DensePolynomial> {
        self.same_dim(other)?;
        let mut out =
            DensePolynomial::zeros(self.n(), self.storage_degree() + other.storage_degree())?;
        for (a, ca) in self.terms().filter(|(_, c)| *c != 0.0) {
            for (b, cb) in other.terms().filter(|(_, c)| *c != 0.0) {
                out.coeffs[a.add(b).rank()] += ca * cb;
            }
        }
        Ok(out)
    }

    fn same_dim(&self, other: &DensePolynomial) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: other.n(),
            });
        }
        Ok(())
    }

    /// The polynomial `x ↦ p(c + L x)`, of the same degree.
    pub fn compose_affine(&self, linear: &DMatrix<f64>, shift: &[f64]) -> Result<DensePolynomial> {
        let n = self.n();
        if linear.nrows() != n || linear.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: linear.nrows(),
            });
        }
        self.check_point(shift)?;
        let d = self.storage_degree();
        let forms = affine_forms(linear, shift)?;
        let powers = form_powers(&forms, d)?;
        let mut out = DensePolynomial::zeros(n, d)?;
        for (alpha, c) in self.terms().filter(|(_, c)| *c != 0.0) {
            let mut term = DensePolynomial::constant(n, c)?;
            for (i, &a) in alpha.exponents().iter().enumerate() {
                if a > 0 {
                    term = term.mul(&powers[i][a as usize])?;
                }
            }
            for (b, cb) in term.terms() {
                if cb != 0.0 {
                    out.coeffs[b.rank()] += cb;
                }
            }
        }
        Ok(out)
    }

    /// Coefficients (ascending powers of the last coordinate) of the
    /// univariate polynomial obtained by fixing the first `n - 1` coordinates.
    pub fn restrict_last(&self, prefix: &[f64]) -> Vec<f64> {
        let n = self.n();
        debug_assert_eq!(prefix.len() + 1, n);
        let mut uni = vec![0.0; self.storage_degree() + 1];
        for (alpha, c) in self.terms().filter(|(_, c)| *c != 0.0) {
            let e = alpha.exponents();
            let w: f64 = e[..n - 1]
                .iter()
                .zip(prefix)
                .map(|(&a, &x)| x.powi(a as i32))
                .product();
            uni[e[n - 1] as usize] += c * w;
        }
        uni
    }
}

/// Linear forms `c_i + Σ_j L_ij x_j`, one per output coordinate.
pub(crate) fn affine_forms(linear: &DMatrix<f64>, shift: &[f64]) -> Result<Vec<DensePolynomial>> {
    let n = shift.len();
    (0..n)
        .map(|i| {
            let mut f = DensePolynomial::zeros(n, 1)?;
            f.coeffs[0] = shift[i];
            for j in 0..n {
                f.coeffs[1 + j] = linear[(i, j)];
            }
            Ok(f)
        })
        .collect()
}

/// `powers[i][k]` is the k-th power of `forms[i]`, for `k <= d`.
pub(crate) fn form_powers(forms: &[DensePolynomial], d: usize) -> Result<Vec<Vec<DensePolynomial>>> {
    let n = forms.len();
    forms
        .iter()
        .map(|f| {
            let mut pw = vec![DensePolynomial::constant(n, 1.0)?];
            for k in 1..=d {
                let next = pw[k - 1].mul(f)?;
                pw.push(next);
            }
            Ok(pw)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// (1 - r^2)(2/3 - r^2) = 2/3 - 5/3 r^2 + r^4 expanded by hand.
    fn annulus_quartic() -> DensePolynomial {
        DensePolynomial::from_terms(
            2,
            4,
            &[
                (&[0, 0], 2.0 / 3.0),
                (&[2, 0], -5.0 / 3.0),
                (&[0, 2], -5.0 / 3.0),
                (&[4, 0], 1.0),
                (&[2, 2], 2.0),
                (&[0, 4], 1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn eval_examples() {
        let one = DensePolynomial::constant(3, 1.0).unwrap();
        assert_eq!(one.eval(&[0.4, -2.0, 7.0]).unwrap(), 1.0);
        let q = annulus_quartic();
        assert!(q.eval(&[1.0, 0.0]).unwrap().abs() < 1e-15);
        let lin = DensePolynomial::from_terms(2, 1, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]).unwrap();
        assert!((lin.eval(&[0.3, 0.7]).unwrap() - 1.0).abs() < 1e-15);
        assert!(lin.eval(&[0.3]).is_err());
    }

    #[test]
    fn annulus_quartic_matches_product() {
        let r2 = DensePolynomial::from_terms(2, 2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)]).unwrap();
        let a = DensePolynomial::constant(2, 1.0).unwrap().add(&r2.scale(-1.0)).unwrap();
        let b = DensePolynomial::constant(2, 2.0 / 3.0)
            .unwrap()
            .add(&r2.scale(-1.0))
            .unwrap();
        let prod = a.mul(&b).unwrap();
        for (x, y) in prod.coeffs().iter().zip(annulus_quartic().coeffs()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn homogeneous_parts() {
        let p = DensePolynomial::from_terms(2, 2, &[(&[0, 0], 1.0), (&[1, 0], 1.0), (&[1, 1], 1.0)])
            .unwrap();
        let g2 = p.homogeneous_part(2).unwrap();
        assert_eq!(g2.coeffs(), &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let g0 = annulus_quartic().homogeneous_part(0).unwrap();
        assert_eq!(g0.coeff(&MultiIndex::zero(2)), 2.0 / 3.0);
        assert_eq!(g0.degree(), 0);
        let g3 = annulus_quartic().homogeneous_part(3).unwrap();
        assert!(g3.coeffs().iter().all(|&c| c == 0.0));
        assert!(p.homogeneous_part(3).is_err());
    }

    #[test]
    fn euler_weights() {
        let x1sq = DensePolynomial::from_terms(2, 2, &[(&[2, 0], 1.0)]).unwrap();
        assert_eq!(x1sq.euler_weighted_sum().coeff(&"2,0".parse().unwrap()), 2.0);
        let p = DensePolynomial::from_terms(2, 2, &[(&[0, 0], 1.0), (&[1, 0], 1.0), (&[0, 2], 1.0)])
            .unwrap();
        let e = p.euler_weighted_sum();
        assert_eq!(e.coeffs(), &[0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
        let expected = DensePolynomial::from_terms(
            2,
            4,
            &[
                (&[2, 0], -10.0 / 3.0),
                (&[0, 2], -10.0 / 3.0),
                (&[4, 0], 4.0),
                (&[2, 2], 8.0),
                (&[0, 4], 4.0),
            ],
        )
        .unwrap();
        for (x, y) in annulus_quartic().euler_weighted_sum().coeffs().iter().zip(expected.coeffs()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn compose_affine_translation() {
        // (x1 - 0.3)^2 + (x2 - 0.1)^2 from r^2 composed with x - c
        let r2 = DensePolynomial::from_terms(2, 2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)]).unwrap();
        let shifted = r2
            .compose_affine(&DMatrix::identity(2, 2), &[-0.3, -0.1])
            .unwrap();
        for x in [[0.0, 0.0], [1.2, -0.4], [0.3, 0.1]] {
            let want = (x[0] - 0.3f64).powi(2) + (x[1] - 0.1f64).powi(2);
            assert!((shifted.eval(&x).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn json_format() {
        let p = DensePolynomial::from_terms(2, 1, &[(&[1, 0], 1.0), (&[0, 1], 2.5)]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":2,"d":1,"coeffs":[0.0,1.0,2.5]}"#);
        let back: DensePolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<DensePolynomial>(r#"{"n":2,"d":1,"coeffs":[1.0]}"#).is_err());
    }

    fn poly_strategy(n: usize, d: usize) -> impl Strategy<Value = DensePolynomial> {
        let len = crate::multi_index::basis_size(n, d);
        prop::collection::vec(-2.0f64..2.0, len)
            .prop_map(move |c| DensePolynomial::from_coeffs(enumerate_basis(n, d).unwrap(), c).unwrap())
    }

    proptest! {
        #[test]
        fn homogeneous_parts_sum_exactly(p in poly_strategy(3, 4)) {
            let mut acc = vec![0.0; p.coeffs().len()];
            for k in 0..=4 {
                for (a, c) in acc.iter_mut().zip(p.homogeneous_part(k).unwrap().coeffs()) {
                    *a += c;
                }
            }
            prop_assert_eq!(acc.as_slice(), p.coeffs());
        }

        #[test]
        fn euler_sum_is_radial_derivative(
            p in poly_strategy(2, 5),
            x in prop::collection::vec(-1.0f64..1.0, 2),
        ) {
            // central finite difference of the gradient
            let h = 1e-6;
            let mut dot = 0.0;
            for j in 0..2 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                dot += x[j] * (p.eval(&xp).unwrap() - p.eval(&xm).unwrap()) / (2.0 * h);
            }
            let e = p.euler_weighted_sum().eval(&x).unwrap();
            let scale = 1.0 + e.abs();
            prop_assert!((e - dot).abs() <= 1e-6 * scale, "euler {} vs fd {}", e, dot);
        }

        #[test]
        fn restriction_agrees_with_eval(p in poly_strategy(3, 3), x in prop::collection::vec(-1.5f64..1.5, 3)) {
            let uni = p.restrict_last(&x[..2]);
            let v: f64 = uni.iter().enumerate().map(|(k, c)| c * x[2].powi(k as i32)).sum();
            prop_assert!((v - p.eval(&x).unwrap()).abs() < 1e-12);
        }
    }
}
