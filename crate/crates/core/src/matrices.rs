//! Moment-matrix families built from a [`MomentSequence`].
//!
//! Rows and columns are labelled by multi-indices in graded lexicographic
//! order. A kernel vector `(-1, g)` of any of the kernel families encodes the
//! polynomial `g` with `g(0) = 0` and `g = 1` on the boundary.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentgen::MomentSequence;
use crate::multi_index::{enumerate_basis, MultiIndex};
use crate::polynomial::DensePolynomial;

/// Reading of the coordinate-wise identity used by [`assemble_coordinate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoordinateVariant {
    /// `y_{α+β-e_j}`, zero when `α_j + β_j = 0`.
    PaperLiteral,
    /// `y_{α+β}`, the expansion of `∫ f + x_j ∂f/∂x_j = 0` over `f = x^α (1 - g)`.
    #[default]
    Derived,
}

impl FromStr for CoordinateVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-literal" => Ok(CoordinateVariant::PaperLiteral),
            "derived" => Ok(CoordinateVariant::Derived),
            other => Err(Error::InvalidArgument(format!(
                "unknown variant '{other}' (expected paper-literal or derived)"
            ))),
        }
    }
}

impl fmt::Display for CoordinateVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoordinateVariant::PaperLiteral => "paper-literal",
            CoordinateVariant::Derived => "derived",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum MatrixFamily {
    Renorm,
    /// Coordinate `j` is zero-based.
    Coordinate { j: usize, variant: CoordinateVariant },
    /// The `n` coordinate matrices stacked vertically.
    CoordinateStack { variant: CoordinateVariant },
    ExpDensity { p: DensePolynomial },
    ExpGlobal,
    Plain,
}

impl MatrixFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixFamily::Renorm => "renorm",
            MatrixFamily::Coordinate { .. } => "coordinate",
            MatrixFamily::CoordinateStack { .. } => "coordinate-stack",
            MatrixFamily::ExpDensity { .. } => "exp-density",
            MatrixFamily::ExpGlobal => "exp-global",
            MatrixFamily::Plain => "plain",
        }
    }
}

/// Dense matrix with multi-index labels.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    rows: Vec<MultiIndex>,
    cols: Vec<MultiIndex>,
    entries: DMatrix<f64>,
    family: MatrixFamily,
    source_order: usize,
}

impl MomentMatrix {
    pub fn new(
        rows: Vec<MultiIndex>,
        cols: Vec<MultiIndex>,
        entries: DMatrix<f64>,
        family: MatrixFamily,
        source_order: usize,
    ) -> Result<Self> {
        if entries.nrows() != rows.len() || entries.ncols() != cols.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len() * cols.len(),
                got: entries.len(),
            });
        }
        Ok(MomentMatrix {
            rows,
            cols,
            entries,
            family,
            source_order,
        })
    }

    pub fn rows(&self) -> &[MultiIndex] {
        &self.rows
    }

    pub fn cols(&self) -> &[MultiIndex] {
        &self.cols
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn family(&self) -> &MatrixFamily {
        &self.family
    }

    /// Highest moment order the entries consume.
    pub fn source_order(&self) -> usize {
        self.source_order
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    /// Row-sum (infinity) norm.
    pub fn norm_inf(&self) -> f64 {
        self.entries
            .row_iter()
            .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Stacks matrices with identical column labels.
    pub fn vstack(parts: &[MomentMatrix], family: MatrixFamily) -> Result<MomentMatrix> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to stack".into()))?;
        if parts.iter().any(|p| p.cols != first.cols) {
            return Err(Error::InvalidArgument("stacked matrices must share column labels".into()));
        }
        let nrows: usize = parts.iter().map(|p| p.nrows()).sum();
        let mut entries = DMatrix::zeros(nrows, first.ncols());
        let mut rows = Vec::with_capacity(nrows);
        let mut at = 0;
        for p in parts {
            entries.rows_mut(at, p.nrows()).copy_from(&p.entries);
            rows.extend(p.rows.iter().cloned());
            at += p.nrows();
        }
        let source_order = parts.iter().map(|p| p.source_order).max().unwrap_or(0);
        MomentMatrix::new(rows, first.cols.clone(), entries, family, source_order)
    }

    /// CSV with a header row of column labels and a leading label column.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec![String::new()];
        header.extend(self.cols.iter().map(|c| c.to_string()));
        out.write_record(&header)?;
        for (i, r) in self.rows.iter().enumerate() {
            let mut rec = vec![r.to_string()];
            rec.extend((0..self.ncols()).map(|j| crate::io::fmt_f64(self.entries[(i, j)])));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
    }
}

/// The diagonal matrices `Δ`, `D`, `Δ₀` over the degree-`d` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalFactors {
    pub delta: DVector<f64>,
    pub dee: DVector<f64>,
    pub delta0: DVector<f64>,
}

impl DiagonalFactors {
    pub fn delta_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.delta)
    }

    pub fn dee_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.dee)
    }

    pub fn delta0_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.delta0)
    }
}

/// `Δ(α,α) = 1/(n+|α|)`, `D(α,α) = max(|α|, 1)`, `Δ₀(α,α) = 1 - 1/(n+|α|)`.
pub fn diagonal_factors(n: usize, d: usize) -> Result<DiagonalFactors> {
    let basis = enumerate_basis(n, d)?;
    let m = basis.len();
    let mut delta = DVector::zeros(m);
    let mut dee = DVector::zeros(m);
    let mut delta0 = DVector::zeros(m);
    for (i, a) in basis.iter().enumerate() {
        let w = 1.0 / (n + a.degree()) as f64;
        delta[i] = w;
        dee[i] = if a.is_zero() { 1.0 } else { a.degree() as f64 };
        delta0[i] = (n + a.degree() - 1) as f64 / (n + a.degree()) as f64;
    }
    Ok(DiagonalFactors { delta, dee, delta0 })
}

fn labels(n: usize, d: usize) -> Result<Vec<MultiIndex>> {
    Ok(enumerate_basis(n, d)?.indices().to_vec())
}

fn fill(
    rows: &[MultiIndex],
    cols: &[MultiIndex],
    mut entry: impl FnMut(&MultiIndex, &MultiIndex) -> f64,
) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| entry(&rows[i], &cols[j]))
}

/// `y_γ` by rank; callers have checked the order.
fn at(y: &MomentSequence, gamma: &MultiIndex) -> f64 {
    y.values()[gamma.rank()]
}

/// `M^d_k(α,β) = (n+|α|+|β|)/(n+|α|) · y_{α+β}`, rows `|α| <= k`, columns `|β| <= d`.
pub fn assemble_renorm(y: &MomentSequence, d: usize, k: usize) -> Result<MomentMatrix> {
    y.require_order(k + d)?;
    let n = y.n();
    let (rows, cols) = (labels(n, k)?, labels(n, d)?);
    let entries = fill(&rows, &cols, |a, b| {
        let na = (n + a.degree()) as f64;
        (na + b.degree() as f64) / na * at(y, &a.add(b))
    });
    MomentMatrix::new(rows, cols, entries, MatrixFamily::Renorm, k + d)
}

/// Coordinate-wise matrix for the zero-based coordinate `j`, rows `|α| <= 2d`.
pub fn assemble_coordinate(
    y: &MomentSequence,
    d: usize,
    j: usize,
    variant: CoordinateVariant,
) -> Result<MomentMatrix> {
    let n = y.n();
    if j >= n {
        return Err(Error::InvalidArgument(format!("coordinate {j} out of range for n = {n}")));
    }
    let order = match variant {
        CoordinateVariant::Derived => 3 * d,
        CoordinateVariant::PaperLiteral => (3 * d).saturating_sub(1),
    };
    y.require_order(order)?;
    let (rows, cols) = (labels(n, 2 * d)?, labels(n, d)?);
    let entries = fill(&rows, &cols, |a, b| {
        let (aj, bj) = (a.exponents()[j] as f64, b.exponents()[j] as f64);
        let c = (1.0 + aj + bj) / (1.0 + aj);
        let sum = a.add(b);
        match variant {
            CoordinateVariant::Derived => c * at(y, &sum),
            CoordinateVariant::PaperLiteral => sum.sub_unit(j).map_or(0.0, |g| c * at(y, &g)),
        }
    });
    MomentMatrix::new(rows, cols, entries, MatrixFamily::Coordinate { j, variant }, order)
}

/// Exponential-density matrix for moments of `exp(p) dx`:
/// `(n+|α|+|β|) y_{α+β} + Σ_{γ≠0} |γ| p_γ y_{α+β+γ}`.
pub fn assemble_expdensity(y: &MomentSequence, d: usize, k: usize, p: &DensePolynomial) -> Result<MomentMatrix> {
    let n = y.n();
    if p.n() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.n() });
    }
    let t = p.degree();
    y.require_order(k + d + t)?;
    let weighted: Vec<(MultiIndex, f64)> = p
        .terms()
        .filter(|(g, c)| !g.is_zero() && *c != 0.0)
        .map(|(g, c)| (g.clone(), g.degree() as f64 * c))
        .collect();
    let (rows, cols) = (labels(n, k)?, labels(n, d)?);
    let entries = fill(&rows, &cols, |a, b| {
        let ab = a.add(b);
        let base = (n + ab.degree()) as f64 * at(y, &ab);
        base + weighted.iter().map(|(g, w)| w * at(y, &ab.add(g))).sum::<f64>()
    });
    MomentMatrix::new(rows, cols, entries, MatrixFamily::ExpDensity { p: p.clone() }, k + d + t)
}

/// `M^d(α,β) = y_α` for `β = 0`, else `|β| y_{α+β} / (n+|α|)`.
pub fn assemble_expglobal(y: &MomentSequence, d: usize) -> Result<MomentMatrix> {
    y.require_order(2 * d)?;
    let n = y.n();
    let idx = labels(n, d)?;
    let entries = fill(&idx, &idx, |a, b| {
        if b.is_zero() {
            at(y, a)
        } else {
            b.degree() as f64 * at(y, &a.add(b)) / (n + a.degree()) as f64
        }
    });
    MomentMatrix::new(idx.clone(), idx, entries, MatrixFamily::ExpGlobal, 2 * d)
}

/// The moment matrix `M_d(α,β) = y_{α+β}`.
pub fn assemble_plain(y: &MomentSequence, d: usize) -> Result<MomentMatrix> {
    y.require_order(2 * d)?;
    let idx = labels(y.n(), d)?;
    let entries = fill(&idx, &idx, |a, b| at(y, &a.add(b)));
    MomentMatrix::new(idx.clone(), idx, entries, MatrixFamily::Plain, 2 * d)
}

/// `Θ = Δ · M_d · D`. It agrees with the exp-global matrix except in
/// column 0, where `M^d[:,0] = Θ[:,0] + Δ₀ y^d`.
pub fn theta_matrix(y: &MomentSequence, d: usize) -> Result<DMatrix<f64>> {
    let plain = assemble_plain(y, d)?;
    let f = diagonal_factors(y.n(), d)?;
    Ok(f.delta_matrix() * plain.entries() * f.dee_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momentgen::{gaussian_moments_oracle, moments_indicator, MomentMethod, RegionSpec};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn simplex() -> MomentSequence {
        moments_indicator(&RegionSpec::simplex(2), 8, MomentMethod::ClosedForm).unwrap()
    }

    fn disk() -> MomentSequence {
        moments_indicator(&RegionSpec::disk(1.0), 12, MomentMethod::ClosedForm).unwrap()
    }

    fn gaussian1(order: usize) -> MomentSequence {
        gaussian_moments_oracle(&DMatrix::from_element(1, 1, 1.0), order).unwrap()
    }

    fn disk_kernel() -> DVector<f64> {
        DVector::from_vec(vec![-1.0, 0.0, 0.0, 1.0, 0.0, 1.0])
    }

    #[test]
    fn simplex_renorm_matches_printed_matrix() {
        let m = assemble_renorm(&simplex(), 1, 1).unwrap();
        let want = DMatrix::from_row_slice(
            3,
            3,
            &[0.5, 0.25, 0.25, 1.0 / 6.0, 1.0 / 9.0, 1.0 / 18.0, 1.0 / 6.0, 1.0 / 18.0, 1.0 / 9.0],
        );
        assert!((m.entries() - want).amax() < 1e-15);
        assert_eq!(m.source_order(), 2);
    }

    #[test]
    fn zero_moments_give_zero_matrix() {
        let y = simplex().scale(0.0);
        assert_eq!(assemble_renorm(&y, 2, 2).unwrap().entries().amax(), 0.0);
        let p = DensePolynomial::from_terms(2, 1, &[(&[1, 0], 1.0)]).unwrap();
        assert_eq!(assemble_expdensity(&y, 1, 1, &p).unwrap().entries().amax(), 0.0);
    }

    #[test]
    fn disk_renorm_entry() {
        let m = assemble_renorm(&disk(), 2, 2).unwrap();
        assert!((m.entries()[(0, 3)] - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn missing_order_is_named() {
        let y = disk().truncate(5).unwrap();
        match assemble_renorm(&y, 2, 4) {
            Err(Error::MissingMoment { alpha, max_order }) => {
                assert_eq!(alpha.to_string(), "6,0");
                assert_eq!(max_order, 5);
            }
            other => panic!("{other:?}"),
        }
        assert!(assemble_coordinate(&y, 2, 0, CoordinateVariant::Derived).is_err());
        assert!(assemble_coordinate(&disk(), 2, 2, CoordinateVariant::Derived).is_err());
    }

    #[test]
    fn disk_kernels() {
        let y = disk();
        for k in 2..=4 {
            let m = assemble_renorm(&y, 2, k).unwrap();
            let r = m.entries() * disk_kernel();
            assert!(r.amax() < 1e-14 * m.norm_inf(), "k={k}");
        }
        for j in 0..2 {
            let m = assemble_coordinate(&y, 2, j, CoordinateVariant::Derived).unwrap();
            assert!((m.entries()[(0, 0)] - PI).abs() < 1e-15);
            assert!((m.entries() * disk_kernel()).amax() < 1e-14);
        }
    }

    #[test]
    fn literal_variant_zero_convention() {
        let m = assemble_coordinate(&disk(), 2, 0, CoordinateVariant::PaperLiteral).unwrap();
        for (i, a) in m.rows().iter().enumerate() {
            for (j, b) in m.cols().iter().enumerate() {
                if a.exponents()[0] + b.exponents()[0] == 0 {
                    assert_eq!(m.entries()[(i, j)], 0.0);
                }
            }
        }
        assert_eq!(m.source_order(), 5);
    }

    #[test]
    fn derived_coordinate_on_origin_boundary_disk() {
        // {(x1 - 1)^2 + x2^2 < 1}: boundary polynomial x1^2 - 2 x1 + x2^2 has no constant term
        let r = RegionSpec::disk(1.0).translated(vec![1.0, 0.0]).unwrap();
        let y = moments_indicator(&r, 6, MomentMethod::Quadrature { tol: 1e-12 }).unwrap();
        let v = DVector::from_vec(vec![0.0, -2.0, 0.0, 1.0, 0.0, 1.0]);
        for j in 0..2 {
            let m = assemble_coordinate(&y, 2, j, CoordinateVariant::Derived).unwrap();
            assert!((m.entries() * &v).amax() < 1e-8 * m.norm_inf(), "j={j}");
        }
    }

    #[test]
    fn expdensity_disk_kernel_from_quadrature() {
        let p = DensePolynomial::from_terms(2, 1, &[(&[1, 0], 1.0)]).unwrap();
        let y = crate::momentgen::moments_exp_density(&RegionSpec::disk(1.0), &p, 5, 1e-11).unwrap();
        let m = assemble_expdensity(&y, 2, 2, &p).unwrap();
        assert_eq!(m.source_order(), 5);
        assert!((m.entries() * disk_kernel()).amax() < 1e-7 * m.norm_inf());
    }

    #[test]
    fn expdensity_with_zero_weight_is_row_scaled_renorm() {
        let y = simplex();
        let zero = DensePolynomial::zeros(2, 1).unwrap();
        let e = assemble_expdensity(&y, 2, 2, &zero).unwrap();
        let r = assemble_renorm(&y, 2, 2).unwrap();
        for (i, a) in e.rows().iter().enumerate() {
            let s = (2 + a.degree()) as f64;
            for j in 0..e.ncols() {
                assert!((e.entries()[(i, j)] - s * r.entries()[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn expglobal_gaussian_row() {
        let m = assemble_expglobal(&gaussian1(4), 2).unwrap();
        let sp = PI.sqrt();
        assert!((m.entries()[(0, 0)] - sp).abs() < 1e-15);
        assert_eq!(m.entries()[(0, 1)], 0.0);
        assert!((m.entries()[(0, 2)] - sp).abs() < 1e-15);
        // column 0 is the plain moment column
        let y = gaussian1(4);
        for i in 0..3 {
            assert_eq!(m.entries()[(i, 0)], y.values()[i]);
        }
    }

    #[test]
    fn plain_gaussian_and_definiteness() {
        let m = assemble_plain(&gaussian1(2), 1).unwrap();
        let sp = PI.sqrt();
        let want = DMatrix::from_row_slice(2, 2, &[sp, 0.0, 0.0, sp / 2.0]);
        assert!((m.entries() - want).amax() < 1e-15);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 0.8]);
        let y = gaussian_moments_oracle(&sigma, 6).unwrap();
        for d in 1..=3 {
            let p = assemble_plain(&y, d).unwrap();
            assert_eq!(p.entries(), &p.entries().transpose());
            let ev = p.entries().clone().symmetric_eigenvalues();
            assert!(ev.min() > 0.0, "d={d}");
        }
    }

    #[test]
    fn diagonal_factor_examples() {
        let f = diagonal_factors(2, 1).unwrap();
        assert!((f.delta[1] - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(f.dee[1], 1.0);
        assert!((f.delta0[1] - 2.0 / 3.0).abs() < 1e-16);
        assert_eq!(f.dee[0], 1.0);
        assert_eq!(f.delta0[0], 0.5);
        let g = diagonal_factors(1, 2).unwrap();
        assert!((g.delta[2] - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(g.dee[2], 2.0);
        assert!((g.delta0[2] - 2.0 / 3.0).abs() < 1e-16);
    }

    #[test]
    fn theta_factorization() {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 2.0]);
        let y = gaussian_moments_oracle(&sigma, 6).unwrap();
        let d = 3;
        let theta = theta_matrix(&y, d).unwrap();
        let md = assemble_expglobal(&y, d).unwrap();
        let f = diagonal_factors(2, d).unwrap();
        let scale = md.entries().amax();
        for i in 0..theta.nrows() {
            for j in 1..theta.ncols() {
                assert!((theta[(i, j)] - md.entries()[(i, j)]).abs() <= 1e-14 * scale);
            }
            let col0 = theta[(i, 0)] + f.delta0[i] * y.values()[i];
            assert!((col0 - md.entries()[(i, 0)]).abs() <= 1e-14 * scale);
        }
    }

    #[test]
    fn csv_labels() {
        let m = assemble_renorm(&simplex(), 1, 1).unwrap();
        let s = m.to_csv_string().unwrap();
        let first = s.lines().next().unwrap();
        assert_eq!(first, r#","0,0","1,0","0,1""#);
        assert!(s.lines().nth(1).unwrap().starts_with(r#""0,0",5.0000000000000000e-1"#));
    }

    #[test]
    fn vstack_shapes() {
        let y = disk();
        let parts: Vec<_> = (0..2)
            .map(|j| assemble_coordinate(&y, 2, j, CoordinateVariant::Derived).unwrap())
            .collect();
        let s = MomentMatrix::vstack(&parts, MatrixFamily::CoordinateStack { variant: CoordinateVariant::Derived })
            .unwrap();
        assert_eq!((s.nrows(), s.ncols()), (30, 6));
    }

    proptest! {
        #[test]
        fn kernel_is_scale_invariant(c in 0.01f64..100.0) {
            let y = disk();
            let m = assemble_renorm(&y.scale(c), 2, 4).unwrap();
            prop_assert!((m.entries() * disk_kernel()).amax() <= 1e-13 * m.norm_inf());
        }
    }
}
