//! Ground-truth moment sequences.
//!
//! Moments of Lebesgue measure on a region come from closed forms where the
//! region admits one, and otherwise from line-section quadrature or Monte
//! Carlo. Exponential densities on regions and global weights `exp(-g)` on
//! `R^n` are integrated numerically; Gaussian weights also have an exact
//! Isserlis oracle.

mod closed_form;
mod gaussian;
mod global;
mod montecarlo;
pub(crate) mod quadrature;
mod region;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multi_index::{enumerate_basis, Basis, MultiIndex};
use crate::polynomial::{affine_forms, DensePolynomial};

pub use gaussian::gaussian_moments_oracle;
pub use global::{moments_exp_global, DEFAULT_BOX_GROWTH_LIMIT};
pub use quadrature::real_roots_in;
pub use region::{Constraint, RegionKind, RegionSpec, Sublevel};

/// How a moment sequence was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Quadrature {
        tol: f64,
        /// Half-widths of the final truncation box (global weights only).
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_box: Option<Vec<[f64; 2]>>,
    },
    MonteCarlo {
        samples: u64,
        seed: u64,
        std_errors: Vec<f64>,
    },
    Extended,
}

/// All moments `y_α` with `|α| <= max_order`, in graded lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSequence {
    basis: Basis,
    values: Vec<f64>,
    provenance: Provenance,
}

impl MomentSequence {
    pub fn new(n: usize, max_order: usize, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        let basis = enumerate_basis(n, max_order)?;
        if values.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: values.len(),
            });
        }
        Ok(MomentSequence {
            basis,
            values,
            provenance,
        })
    }

    /// Builds a sequence by evaluating `f` at every basis index.
    pub fn from_fn(
        n: usize,
        max_order: usize,
        provenance: Provenance,
        mut f: impl FnMut(&MultiIndex) -> f64,
    ) -> Result<Self> {
        let basis = enumerate_basis(n, max_order)?;
        let values = basis.iter().map(&mut f).collect();
        Ok(MomentSequence {
            basis,
            values,
            provenance,
        })
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn max_order(&self) -> usize {
        self.basis.degree()
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, f64)> + '_ {
        self.basis.iter().zip(self.values.iter().copied())
    }

    pub fn get(&self, alpha: &MultiIndex) -> Result<f64> {
        self.basis
            .position(alpha)
            .map(|i| self.values[i])
            .ok_or_else(|| Error::MissingMoment {
                alpha: alpha.clone(),
                max_order: self.max_order(),
            })
    }

    /// Mass `y_0`.
    pub fn mass(&self) -> f64 {
        self.values[0]
    }

    /// The first-moment centroid `(y_{e_i} / y_0)`.
    pub fn centroid(&self) -> Result<Vec<f64>> {
        if self.max_order() < 1 {
            return Err(Error::MissingMoment {
                alpha: MultiIndex::unit(self.n(), 0),
                max_order: 0,
            });
        }
        Ok((0..self.n()).map(|i| self.values[1 + i] / self.values[0]).collect())
    }

    /// Moments of order at most `order` (prefix of the graded order).
    pub fn truncate(&self, order: usize) -> Result<MomentSequence> {
        if order > self.max_order() {
            return Err(Error::MissingMoment {
                alpha: first_index_of_degree(self.n(), self.max_order() + 1),
                max_order: self.max_order(),
            });
        }
        let basis = enumerate_basis(self.n(), order)?;
        let values = self.values[..basis.len()].to_vec();
        Ok(MomentSequence {
            basis,
            values,
            provenance: self.provenance.clone(),
        })
    }

    pub fn scale(&self, c: f64) -> MomentSequence {
        MomentSequence {
            basis: self.basis.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Fails unless the sequence reaches `order`, naming the first absent index.
    pub fn require_order(&self, order: usize) -> Result<()> {
        if self.max_order() < order {
            return Err(Error::MissingMoment {
                alpha: first_index_of_degree(self.n(), self.max_order() + 1),
                max_order: self.max_order(),
            });
        }
        Ok(())
    }

    /// Moments of the image measure under `x ↦ shift + linear·x`, multiplied
    /// by `jacobian`. With `jacobian = |det L|` this maps moments of a region
    /// `G` to moments of `shift + L·G`.
    pub fn pushforward(&self, linear: &DMatrix<f64>, shift: &[f64], jacobian: f64) -> Result<MomentSequence> {
        let n = self.n();
        if shift.len() != n || linear.nrows() != n || linear.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: shift.len(),
            });
        }
        let forms = affine_forms(linear, shift)?;
        let basis = self.basis.clone();
        // expansions[i] holds the coefficients of (shift + L x)^{α_i}
        let mut expansions: Vec<DensePolynomial> = Vec::with_capacity(basis.len());
        let mut values = Vec::with_capacity(basis.len());
        for alpha in &basis {
            let poly = if alpha.is_zero() {
                DensePolynomial::constant(n, 1.0)?
            } else {
                let i = alpha.exponents().iter().position(|&a| a > 0).unwrap();
                let lower = alpha.sub_unit(i).unwrap();
                expansions[lower.rank()].mul(&forms[i])?
            };
            let v: f64 = poly
                .terms()
                .filter(|(_, c)| *c != 0.0)
                .map(|(b, c)| c * self.values[b.rank()])
                .sum();
            values.push(jacobian * v);
            expansions.push(poly);
        }
        Ok(MomentSequence {
            basis,
            values,
            provenance: self.provenance.clone(),
        })
    }

    /// Moments of the translated measure `G + t`.
    pub fn translate(&self, t: &[f64]) -> Result<MomentSequence> {
        self.pushforward(&DMatrix::identity(self.n(), self.n()), t, 1.0)
    }
}

pub(crate) fn first_index_of_degree(n: usize, k: usize) -> MultiIndex {
    let mut e = vec![0u32; n];
    e[0] = k as u32;
    MultiIndex::new(e).expect("n >= 1")
}

/// Method selector for [`moments_indicator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MomentMethod {
    /// Closed form when the region has one, quadrature otherwise.
    Auto { tol: f64 },
    ClosedForm,
    Quadrature { tol: f64 },
    MonteCarlo { samples: u64, seed: u64 },
}

/// Moments of Lebesgue measure restricted to `region`, up to `max_order`.
pub fn moments_indicator(region: &RegionSpec, max_order: usize, method: MomentMethod) -> Result<MomentSequence> {
    region.validate()?;
    let local = match method {
        MomentMethod::ClosedForm => closed_form::moments(region.kind(), max_order)?.ok_or_else(|| {
            Error::InvalidArgument(format!("no closed form for region kind {}", region.kind().name()))
        })?,
        MomentMethod::Auto { tol } => match closed_form::moments(region.kind(), max_order)? {
            Some(y) => y,
            None => quadrature::region_moments(region.kind(), max_order, None, tol)?,
        },
        MomentMethod::Quadrature { tol } => quadrature::region_moments(region.kind(), max_order, None, tol)?,
        MomentMethod::MonteCarlo { samples, seed } => {
            montecarlo::region_moments(region.kind(), max_order, samples, seed)?
        }
    };
    match region.translate() {
        Some(t) => local.translate(t),
        None => Ok(local),
    }
}

/// Moments of `exp(p(x)) dx` restricted to `region`.
pub fn moments_exp_density(
    region: &RegionSpec,
    p: &DensePolynomial,
    max_order: usize,
    tol: f64,
) -> Result<MomentSequence> {
    region.validate()?;
    if p.n() != region.dim() {
        return Err(Error::DimensionMismatch {
            expected: region.dim(),
            got: p.n(),
        });
    }
    let n = region.dim();
    // integrate in the untranslated frame, where the weight is p(x + t)
    let (local_p, t) = match region.translate() {
        Some(t) => (p.compose_affine(&DMatrix::identity(n, n), t)?, Some(t)),
        None => (p.clone(), None),
    };
    let local = quadrature::region_moments(region.kind(), max_order, Some(&local_p), tol)?;
    match t {
        Some(t) => local.translate(t),
        None => Ok(local),
    }
}

/// Moments over `{x in bbox : g(x) <= level}` with an optional `exp(p)`
/// weight. Fails if the set reaches the faces of `bbox`.
pub fn moments_sublevel(
    g: &DensePolynomial,
    level: f64,
    bbox: &[[f64; 2]],
    weight: Option<&DensePolynomial>,
    max_order: usize,
    tol: f64,
) -> Result<MomentSequence> {
    let kind = RegionKind::PolynomialSublevel {
        poly: g.clone(),
        level,
        probe: bbox.to_vec(),
    };
    let spec = RegionSpec::new(kind, None)?;
    spec.validate()?;
    quadrature::region_moments(spec.kind(), max_order, weight, tol)
}

/// Sparse collection of moments keyed by multi-index, tagged by origin.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentTable {
    pub entries: BTreeMap<MultiIndex, (f64, EntrySource)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntrySource {
    Input,
    Extended,
}

impl MomentTable {
    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.entries.get(alpha).map(|(v, _)| *v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
