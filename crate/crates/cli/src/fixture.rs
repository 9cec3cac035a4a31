//! Named fixtures: `name` or `name:key=value,key=value`.

use std::collections::BTreeMap;
use std::str::FromStr;

use momentshape::momentgen::{moments_exp_global, moments_indicator, MomentMethod, DEFAULT_BOX_GROWTH_LIMIT};
use momentshape::{DensePolynomial, Error, MomentSequence, MultiIndex, RegionSpec, Result};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Fixture {
    /// `{s < x1^2 + x2^2 < 1}`.
    Annulus { s: f64 },
    /// The unit simplex in `n` dimensions.
    Simplex { n: usize },
    /// Disk of radius `r` centred at `(cx, cy)`.
    Disk { r: f64, cx: f64, cy: f64 },
    /// `{u1 >= -1, u2 >= 1, u2 <= exp(-u1)}`.
    ExpCurve,
    /// Global weight `exp(-|x|^2 / 2)` on `R^n`.
    Gaussian { n: usize },
}

fn parse_params(name: &str, rest: &str) -> Result<BTreeMap<String, f64>> {
    let mut map = BTreeMap::new();
    for part in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("fixture {name}: expected key=value, got '{part}'")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("fixture {name}: '{v}' is not a number")))?;
        map.insert(k.trim().to_string(), v);
    }
    Ok(map)
}

fn take(map: &mut BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    map.remove(key).unwrap_or(default)
}

fn count(name: &str, v: f64) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!("fixture {name}: dimension {v} must be a positive integer")))
    }
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut p = parse_params(name, rest)?;
        let fixture = match name {
            "annulus" => Fixture::Annulus {
                s: take(&mut p, "s", 2.0 / 3.0),
            },
            "simplex" => Fixture::Simplex {
                n: count(name, take(&mut p, "n", 2.0))?,
            },
            "disk" => Fixture::Disk {
                r: take(&mut p, "r", 1.0),
                cx: take(&mut p, "cx", 0.0),
                cy: take(&mut p, "cy", 0.0),
            },
            "exp-curve" => Fixture::ExpCurve,
            "gaussian" => Fixture::Gaussian {
                n: count(name, take(&mut p, "n", 2.0))?,
            },
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown fixture '{other}' (expected annulus, simplex, disk, exp-curve or gaussian)"
                )))
            }
        };
        if let Some(k) = p.keys().next() {
            return Err(Error::InvalidArgument(format!("fixture {name} has no parameter '{k}'")));
        }
        Ok(fixture)
    }
}

/// How indicator moments are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethodArg {
    /// Closed form when available, quadrature otherwise.
    Auto,
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl Fixture {
    pub fn region(&self) -> Result<Option<RegionSpec>> {
        Ok(match *self {
            Fixture::Annulus { s } => Some(RegionSpec::annulus(s)?),
            Fixture::Simplex { n } => Some(RegionSpec::simplex(n)),
            Fixture::Disk { r, cx, cy } => {
                let disk = RegionSpec::disk(r);
                Some(if cx != 0.0 || cy != 0.0 { disk.translated(vec![cx, cy])? } else { disk })
            }
            Fixture::ExpCurve => Some(RegionSpec::exp_curve()),
            Fixture::Gaussian { .. } => None,
        })
    }

    /// `|x|^2 / 2` for the Gaussian fixture.
    pub fn weight(&self) -> Result<Option<DensePolynomial>> {
        match *self {
            Fixture::Gaussian { n } => {
                let squares: Vec<Vec<u32>> = (0..n)
                    .map(|i| MultiIndex::unit(n, i).add(&MultiIndex::unit(n, i)).exponents().to_vec())
                    .collect();
                let terms: Vec<(&[u32], f64)> = squares.iter().map(|e| (e.as_slice(), 0.5)).collect();
                Ok(Some(DensePolynomial::from_terms(n, 2, &terms)?))
            }
            _ => Ok(None),
        }
    }

    pub fn moments(
        &self,
        max_order: usize,
        method: MomentMethodArg,
        tol: f64,
        samples: u64,
        seed: u64,
    ) -> Result<MomentSequence> {
        if let Some(g) = self.weight()? {
            return moments_exp_global(&g, max_order, tol, DEFAULT_BOX_GROWTH_LIMIT);
        }
        let region = self.region()?.expect("indicator fixture");
        let method = match method {
            MomentMethodArg::Auto => MomentMethod::Auto { tol },
            MomentMethodArg::ClosedForm => MomentMethod::ClosedForm,
            MomentMethodArg::Quadrature => MomentMethod::Quadrature { tol },
            MomentMethodArg::MonteCarlo => MomentMethod::MonteCarlo { samples, seed },
        };
        moments_indicator(&region, max_order, method)
    }
}
