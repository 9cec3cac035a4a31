use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::DensePolynomial;

/// `{x : poly(x) <= level}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sublevel {
    pub poly: DensePolynomial,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegionKind {
    /// Planar disk `x1^2 + x2^2 < radius^2`.
    Disk { radius: f64 },
    /// Planar annulus `s < x1^2 + x2^2 < 1`.
    Annulus { s: f64 },
    /// Unit simplex `x >= 0, Σ x_i <= 1`.
    Simplex { n: usize },
    /// Axis-aligned box.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `x^T A x < 1` for symmetric positive definite `A` (row-major).
    Ellipsoid { matrix: Vec<Vec<f64>> },
    /// `poly(x) <= level`, searched inside the `probe` box.
    PolynomialSublevel {
        poly: DensePolynomial,
        level: f64,
        probe: Vec<[f64; 2]>,
    },
    IntersectionOfSublevels {
        constraints: Vec<Sublevel>,
        probe: Vec<[f64; 2]>,
    },
    /// `u1 >= -1, u2 >= 1, u2 <= exp(-u1)`: a region with one transcendental edge.
    ExpCurveDemo,
}

impl RegionKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegionKind::Disk { .. } => "disk",
            RegionKind::Annulus { .. } => "annulus",
            RegionKind::Simplex { .. } => "simplex",
            RegionKind::Box { .. } => "box",
            RegionKind::Ellipsoid { .. } => "ellipsoid",
            RegionKind::PolynomialSublevel { .. } => "polynomial-sublevel",
            RegionKind::IntersectionOfSublevels { .. } => "intersection-of-sublevels",
            RegionKind::ExpCurveDemo => "exp-curve-demo",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            RegionKind::Disk { .. } | RegionKind::Annulus { .. } | RegionKind::ExpCurveDemo => 2,
            RegionKind::Simplex { n } => *n,
            RegionKind::Box { lower, .. } => lower.len(),
            RegionKind::Ellipsoid { matrix } => matrix.len(),
            RegionKind::PolynomialSublevel { poly, .. } => poly.n(),
            RegionKind::IntersectionOfSublevels { probe, .. } => probe.len(),
        }
    }

    pub fn bounding_box(&self) -> Vec<[f64; 2]> {
        match self {
            RegionKind::Disk { radius } => vec![[-radius, *radius]; 2],
            RegionKind::Annulus { .. } => vec![[-1.0, 1.0]; 2],
            RegionKind::Simplex { n } => vec![[0.0, 1.0]; *n],
            RegionKind::Box { lower, upper } => lower.iter().zip(upper).map(|(&a, &b)| [a, b]).collect(),
            RegionKind::Ellipsoid { matrix } => {
                // half-widths sqrt((A^{-1})_ii)
                let inv = ellipsoid_matrix(matrix)
                    .ok()
                    .and_then(|a| a.try_inverse())
                    .unwrap_or_else(|| DMatrix::identity(matrix.len(), matrix.len()));
                (0..matrix.len())
                    .map(|i| {
                        let h = inv[(i, i)].max(0.0).sqrt();
                        [-h, h]
                    })
                    .collect()
            }
            RegionKind::PolynomialSublevel { probe, .. } | RegionKind::IntersectionOfSublevels { probe, .. } => {
                probe.clone()
            }
            RegionKind::ExpCurveDemo => vec![[-1.0, 0.0], [1.0, std::f64::consts::E]],
        }
    }

    /// Inequalities `c(x) <= 0` whose intersection is the region.
    pub fn constraints(&self) -> Result<Vec<Constraint>> {
        let n = self.dim();
        let poly = |terms: &[(&[u32], f64)], d: usize| DensePolynomial::from_terms(n, d, terms);
        Ok(match self {
            RegionKind::Disk { radius } => vec![Constraint::Poly(poly(
                &[(&[2, 0], 1.0), (&[0, 2], 1.0), (&[0, 0], -radius * radius)],
                2,
            )?)],
            RegionKind::Annulus { s } => vec![
                Constraint::Poly(poly(&[(&[2, 0], 1.0), (&[0, 2], 1.0), (&[0, 0], -1.0)], 2)?),
                Constraint::Poly(poly(&[(&[2, 0], -1.0), (&[0, 2], -1.0), (&[0, 0], *s)], 2)?),
            ],
            RegionKind::Simplex { n } => {
                let mut cs = Vec::with_capacity(n + 1);
                for i in 0..*n {
                    let mut e = vec![0u32; *n];
                    e[i] = 1;
                    cs.push(Constraint::Poly(DensePolynomial::from_terms(*n, 1, &[(&e, -1.0)])?));
                }
                let mut sum = DensePolynomial::constant(*n, -1.0)?.with_degree(1)?;
                for i in 0..*n {
                    let mut e = vec![0u32; *n];
                    e[i] = 1;
                    sum = sum.add(&DensePolynomial::from_terms(*n, 1, &[(&e, 1.0)])?)?;
                }
                cs.push(Constraint::Poly(sum));
                cs
            }
            RegionKind::Box { lower, upper } => {
                let mut cs = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let mut e = vec![0u32; n];
                    e[i] = 1;
                    let zero = vec![0u32; n];
                    cs.push(Constraint::Poly(poly(&[(&e, -1.0), (&zero, lower[i])], 1)?));
                    cs.push(Constraint::Poly(poly(&[(&e, 1.0), (&zero, -upper[i])], 1)?));
                }
                cs
            }
            RegionKind::Ellipsoid { matrix } => {
                let mut q = DensePolynomial::constant(n, -1.0)?.with_degree(2)?;
                for i in 0..n {
                    for j in 0..n {
                        let mut e = vec![0u32; n];
                        e[i] += 1;
                        e[j] += 1;
                        q = q.add(&DensePolynomial::from_terms(n, 2, &[(&e, matrix[i][j])])?)?;
                    }
                }
                vec![Constraint::Poly(q)]
            }
            RegionKind::PolynomialSublevel { poly, level, .. } => {
                vec![Constraint::Poly(poly.add(&DensePolynomial::constant(n, -level)?)?)]
            }
            RegionKind::IntersectionOfSublevels { constraints, .. } => constraints
                .iter()
                .map(|s| Ok(Constraint::Poly(s.poly.add(&DensePolynomial::constant(n, -s.level)?)?)))
                .collect::<Result<_>>()?,
            RegionKind::ExpCurveDemo => vec![
                Constraint::Poly(poly(&[(&[1, 0], -1.0), (&[0, 0], -1.0)], 1)?),
                Constraint::Poly(poly(&[(&[0, 1], -1.0), (&[0, 0], 1.0)], 1)?),
                Constraint::BelowExpGraph,
            ],
        })
    }
}

/// One inequality `c(x) <= 0` of a region description.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Poly(DensePolynomial),
    /// `x2 - exp(-x1) <= 0` in the plane.
    BelowExpGraph,
}

impl Constraint {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Constraint::Poly(p) => p.eval_unchecked(x),
            Constraint::BelowExpGraph => x[1] - (-x[0]).exp(),
        }
    }

    /// Ascending coefficients in the last coordinate with the others fixed.
    pub fn restrict_last(&self, prefix: &[f64]) -> Vec<f64> {
        match self {
            Constraint::Poly(p) => p.restrict_last(prefix),
            Constraint::BelowExpGraph => vec![-(-prefix[0]).exp(), 1.0],
        }
    }
}

/// A region together with an optional translation of the coordinate origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    #[serde(flatten)]
    kind: RegionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    translate: Option<Vec<f64>>,
}

impl RegionSpec {
    pub fn new(kind: RegionKind, translate: Option<Vec<f64>>) -> Result<Self> {
        let spec = RegionSpec { kind, translate };
        if let Some(t) = &spec.translate {
            if t.len() != spec.kind.dim() {
                return Err(Error::DimensionMismatch {
                    expected: spec.kind.dim(),
                    got: t.len(),
                });
            }
        }
        Ok(spec)
    }

    pub fn disk(radius: f64) -> Self {
        RegionSpec {
            kind: RegionKind::Disk { radius },
            translate: None,
        }
    }

    pub fn annulus(s: f64) -> Result<Self> {
        let r = RegionSpec {
            kind: RegionKind::Annulus { s },
            translate: None,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn simplex(n: usize) -> Self {
        RegionSpec {
            kind: RegionKind::Simplex { n },
            translate: None,
        }
    }

    pub fn cuboid(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        RegionSpec {
            kind: RegionKind::Box { lower, upper },
            translate: None,
        }
    }

    pub fn ellipsoid(a: &DMatrix<f64>) -> Self {
        let matrix = (0..a.nrows())
            .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
            .collect();
        RegionSpec {
            kind: RegionKind::Ellipsoid { matrix },
            translate: None,
        }
    }

    pub fn exp_curve() -> Self {
        RegionSpec {
            kind: RegionKind::ExpCurveDemo,
            translate: None,
        }
    }

    pub fn translated(mut self, t: Vec<f64>) -> Result<Self> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: t.len(),
            });
        }
        self.translate = Some(t);
        Ok(self)
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn translate(&self) -> Option<&[f64]> {
        self.translate.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    /// Checks the decidable boundedness conditions.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        match &self.kind {
            RegionKind::Disk { radius } if !(*radius > 0.0) => return bad(format!("disk radius {radius} must be > 0")),
            RegionKind::Annulus { s } if !(*s > 0.0 && *s < 1.0) => {
                return bad(format!("annulus parameter s = {s} must satisfy 0 < s < 1"))
            }
            RegionKind::Simplex { n } if *n == 0 => return bad("simplex dimension must be >= 1".into()),
            RegionKind::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    return bad("box bounds must be non-empty and of equal length".into());
                }
                if lower.iter().zip(upper).any(|(a, b)| !(a < b)) {
                    return bad("box lower bounds must be below upper bounds".into());
                }
            }
            RegionKind::Ellipsoid { matrix } => {
                let a = ellipsoid_matrix(matrix)?;
                if a.cholesky().is_none() {
                    return Err(Error::NotPositiveDefinite);
                }
            }
            RegionKind::PolynomialSublevel { poly, probe, .. } => {
                check_probe(probe, poly.n())?;
                super::quadrature::probe_faces(&self.kind.constraints()?, probe)?;
            }
            RegionKind::IntersectionOfSublevels { constraints, probe } => {
                if constraints.is_empty() {
                    return bad("intersection needs at least one sublevel set".into());
                }
                check_probe(probe, constraints[0].poly.n())?;
                if constraints.iter().any(|c| c.poly.n() != probe.len()) {
                    return bad("all sublevel polynomials must share the probe dimension".into());
                }
                super::quadrature::probe_faces(&self.kind.constraints()?, probe)?;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let local: Vec<f64> = match &self.translate {
            Some(t) => x.iter().zip(t).map(|(a, b)| a - b).collect(),
            None => x.to_vec(),
        };
        Ok(self.kind.constraints()?.iter().all(|c| c.eval(&local) <= 0.0))
    }

    /// Points on the boundary, roughly `count` of them, in the translated frame.
    pub fn boundary_samples(&self, count: usize) -> Result<Vec<Vec<f64>>> {
        let count = count.max(8);
        let circle = |r: f64, m: usize| -> Vec<Vec<f64>> {
            (0..m)
                .map(|i| {
                    let th = 2.0 * std::f64::consts::PI * i as f64 / m as f64;
                    vec![r * th.cos(), r * th.sin()]
                })
                .collect()
        };
        let segment = |a: [f64; 2], b: [f64; 2], m: usize| -> Vec<Vec<f64>> {
            (0..m)
                .map(|i| {
                    let t = (i as f64 + 0.5) / m as f64;
                    vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
                })
                .collect()
        };
        let mut pts = match &self.kind {
            RegionKind::Disk { radius } => circle(*radius, count),
            RegionKind::Annulus { s } => {
                let mut p = circle(1.0, count / 2);
                p.extend(circle(s.sqrt(), count - count / 2));
                p
            }
            RegionKind::Simplex { n: 2 } => {
                let m = count / 3;
                let mut p = segment([0.0, 0.0], [1.0, 0.0], m);
                p.extend(segment([1.0, 0.0], [0.0, 1.0], m));
                p.extend(segment([0.0, 1.0], [0.0, 0.0], count - 2 * m));
                p
            }
            RegionKind::Box { lower, upper } if lower.len() == 2 => {
                let (a, b) = ([lower[0], lower[1]], [upper[0], upper[1]]);
                let m = count / 4;
                let mut p = segment(a, [b[0], a[1]], m);
                p.extend(segment([b[0], a[1]], b, m));
                p.extend(segment(b, [a[0], b[1]], m));
                p.extend(segment([a[0], b[1]], a, count - 3 * m));
                p
            }
            RegionKind::Ellipsoid { matrix } if matrix.len() == 2 => {
                let a = ellipsoid_matrix(matrix)?;
                circle(1.0, count)
                    .into_iter()
                    .map(|u| {
                        let v = nalgebra::DVector::from_vec(u);
                        let q = (v.transpose() * &a * &v)[(0, 0)];
                        let s = 1.0 / q.sqrt();
                        vec![v[0] * s, v[1] * s]
                    })
                    .collect()
            }
            RegionKind::ExpCurveDemo => {
                let e = std::f64::consts::E;
                let m = count / 3;
                let mut p = segment([-1.0, 1.0], [0.0, 1.0], m);
                p.extend(segment([-1.0, 1.0], [-1.0, e], m));
                p.extend((0..count - 2 * m).map(|i| {
                    let u1 = -1.0 + (i as f64 + 0.5) / (count - 2 * m) as f64;
                    vec![u1, (-u1).exp()]
                }));
                p
            }
            other => {
                return Err(Error::InvalidArgument(format!(
                    "boundary sampling is not available for {}",
                    other.name()
                )))
            }
        };
        if let Some(t) = &self.translate {
            for p in &mut pts {
                for (x, s) in p.iter_mut().zip(t) {
                    *x += s;
                }
            }
        }
        Ok(pts)
    }
}

pub(crate) fn ellipsoid_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidArgument("ellipsoid matrix must be square and non-empty".into()));
    }
    let a = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if (0..n).any(|i| (0..n).any(|j| (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * (1.0 + a[(i, j)].abs()))) {
        return Err(Error::InvalidArgument("ellipsoid matrix must be symmetric".into()));
    }
    Ok(a)
}

fn check_probe(probe: &[[f64; 2]], n: usize) -> Result<()> {
    if probe.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: probe.len(),
        });
    }
    if probe.iter().any(|[a, b]| !(a < b)) {
        return Err(Error::InvalidArgument("probe box must have lower < upper".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RegionSpec::annulus(1.5).is_err());
        assert!(RegionSpec::disk(-1.0).validate().is_err());
        let not_pd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(RegionSpec::ellipsoid(&not_pd).validate(), Err(Error::NotPositiveDefinite)));
        assert!(RegionSpec::disk(1.0).translated(vec![1.0]).is_err());
    }

    #[test]
    fn unbounded_sublevel_is_rejected() {
        // x1^2 <= 1 is a strip, it leaves any probe box through the x2 faces
        let strip = DensePolynomial::from_terms(2, 2, &[(&[2, 0], 1.0)]).unwrap();
        let spec = RegionSpec::new(
            RegionKind::PolynomialSublevel {
                poly: strip,
                level: 1.0,
                probe: vec![[-2.0, 2.0], [-2.0, 2.0]],
            },
            None,
        )
        .unwrap();
        assert!(matches!(spec.validate(), Err(Error::Unbounded(_))));
    }

    #[test]
    fn membership() {
        let r = RegionSpec::exp_curve();
        assert!(r.contains(&[-0.5, 1.2]).unwrap());
        assert!(!r.contains(&[-0.5, 1.7]).unwrap());
        assert!(!r.contains(&[0.2, 1.0 - 1e-9]).unwrap());
        let t = RegionSpec::disk(1.0).translated(vec![1.0, 0.0]).unwrap();
        assert!(t.contains(&[1.9, 0.0]).unwrap());
        assert!(!t.contains(&[-0.1, 0.0]).unwrap());
    }

    #[test]
    fn serde_shape() {
        let r = RegionSpec::annulus(0.5).unwrap().translated(vec![0.1, 0.0]).unwrap();
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"kind":"annulus","s":0.5,"translate":[0.1,0.0]}"#);
        let back: RegionSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }
}
