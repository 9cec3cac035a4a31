//! Multi-indices and the graded lexicographic monomial basis.
//!
//! A [`MultiIndex`] is the exponent vector of a monomial `x^α`. A [`Basis`]
//! lists every multi-index of total degree at most `d` in graded
//! lexicographic order with `x1 > x2 > ... > xn`, so for `n = 2` the columns
//! read `1, x1, x2, x1^2, x1 x2, x2^2, ...`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector of a monomial.
///
/// `Ord` is the basis order: lower total degree first, then lexicographically
/// larger exponents first within a degree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidArgument(
                "multi-index must have at least one coordinate".into(),
            ));
        }
        Ok(MultiIndex(exponents))
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// The unit index `e_j`.
    pub fn unit(n: usize, j: usize) -> Self {
        let mut e = vec![0; n];
        e[j] = 1;
        MultiIndex(e)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&a| a as usize).sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.dim(), other.dim());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - e_j`, or `None` when the j-th exponent is already zero.
    pub fn sub_unit(&self, j: usize) -> Option<MultiIndex> {
        if self.0[j] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[j] -= 1;
        Some(MultiIndex(e))
    }

    /// Evaluates `x^α`.
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&a, &xi)| xi.powi(a as i32))
            .product()
    }

    /// Position in the graded lexicographic basis of dimension `self.dim()`.
    pub fn rank(&self) -> usize {
        let n = self.dim();
        let k = self.degree();
        let below = if k == 0 { 0 } else { basis_size(n, k - 1) };
        let mut within = 0usize;
        let mut rem = k;
        for i in 0..n.saturating_sub(1) {
            let ai = self.0[i] as usize;
            let parts = n - i - 1;
            for v in (ai + 1)..=rem {
                within += binomial(rem - v + parts - 1, parts - 1);
            }
            rem -= ai;
        }
        below + within
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let exps = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Format(format!("bad multi-index '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        MultiIndex::new(exps)
    }
}

/// Binomial coefficient `C(n, k)`.
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// `s(d) = C(n + d, n)`, the number of monomials of degree at most `d`.
pub fn basis_size(n: usize, d: usize) -> usize {
    binomial(n + d, n)
}

/// Graded lexicographic list of all multi-indices with `|α| <= d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    n: usize,
    d: usize,
    indices: Vec<MultiIndex>,
}

impl Basis {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        enumerate_basis(n, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.indices.iter()
    }

    /// Position of `alpha`, or `None` if it is outside the basis.
    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        if alpha.dim() != self.n || alpha.degree() > self.d {
            return None;
        }
        Some(alpha.rank())
    }

    /// Index range of the degree-`k` block.
    pub fn degree_range(&self, k: usize) -> std::ops::Range<usize> {
        let start = if k == 0 { 0 } else { basis_size(self.n, k - 1) };
        start..basis_size(self.n, k)
    }
}

impl<'a> IntoIterator for &'a Basis {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;

    fn into_iter(self) -> Self::IntoIter {
        self.indices.iter()
    }
}

/// Enumerates the graded lexicographic basis of `R[x]_d` in `n` variables.
pub fn enumerate_basis(n: usize, d: usize) -> Result<Basis> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension n must be at least 1".into()));
    }
    let mut indices = Vec::with_capacity(basis_size(n, d));
    let mut buf = vec![0u32; n];
    for k in 0..=d {
        push_degree_block(&mut buf, 0, k as u32, &mut indices);
    }
    Ok(Basis { n, d, indices })
}

fn push_degree_block(buf: &mut [u32], pos: usize, rem: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = rem;
        out.push(MultiIndex(buf.to_vec()));
        return;
    }
    for a in (0..=rem).rev() {
        buf[pos] = a;
        push_degree_block(buf, pos + 1, rem - a, out);
    }
    buf[pos] = 0;
}
