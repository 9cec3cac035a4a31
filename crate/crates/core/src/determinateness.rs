//! Moment identities and extension of truncated moment sequences.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::momentgen::{
    moments_exp_global, moments_sublevel, EntrySource, MomentSequence, MomentTable, Provenance,
    DEFAULT_BOX_GROWTH_LIMIT,
};
use crate::multi_index::MultiIndex;
use crate::polynomial::DensePolynomial;
use crate::recovery::{recover_boundary, recover_boundary_expdensity, recover_exp_weight, RecoveryReport, DEFAULT_RANK_TOL};

/// Floor on `|oracle|` in relative errors.
pub const REL_ERROR_FLOOR: f64 = 1e-300;

/// Half-width of the probe box in standard deviations, before inflation.
const PROBE_SIGMAS: f64 = 3.0;
const PROBE_INFLATION: f64 = 1.1;
const PROBE_DOUBLINGS: usize = 8;

fn check_poly_dim(y: &MomentSequence, g: &DensePolynomial) -> Result<()> {
    if g.n() != y.n() {
        return Err(Error::DimensionMismatch {
            expected: y.n(),
            got: g.n(),
        });
    }
    Ok(())
}

fn indices_up_to(n: usize, max_alpha: usize) -> Result<Vec<MultiIndex>> {
    Ok(crate::multi_index::enumerate_basis(n, max_alpha)?.indices().to_vec())
}

/// Residual of the boundary identity
/// `y_α - Σ g_β y_{α+β} - Σ_k k/(n+|α|) Σ_{|β|=k} g_β y_{α+β}` for `|α| <= max_alpha`.
/// It vanishes when `g = 1` on the boundary of the region carrying `y`.
pub fn stokes_residual(
    y: &MomentSequence,
    g: &DensePolynomial,
    max_alpha: usize,
) -> Result<BTreeMap<MultiIndex, f64>> {
    check_poly_dim(y, g)?;
    y.require_order(max_alpha + g.degree())?;
    let n = y.n();
    let terms: Vec<(MultiIndex, f64)> = g.terms().filter(|(_, c)| *c != 0.0).map(|(b, c)| (b.clone(), c)).collect();
    let mut out = BTreeMap::new();
    for a in indices_up_to(n, max_alpha)? {
        let w = 1.0 / (n + a.degree()) as f64;
        let mut r = y.get(&a)?;
        for (b, c) in &terms {
            let v = y.get(&a.add(b))?;
            r -= c * v * (1.0 + b.degree() as f64 * w);
        }
        out.insert(a, r);
    }
    Ok(out)
}

/// Residual of `(n+|α|) y_α = Σ_k k Σ_{|β|=k} g_β y_{α+β}` for global moments
/// of `exp(-g) dx`.
pub fn euler_identity_check(
    y: &MomentSequence,
    g: &DensePolynomial,
    max_alpha: usize,
) -> Result<BTreeMap<MultiIndex, f64>> {
    check_poly_dim(y, g)?;
    y.require_order(max_alpha + g.degree())?;
    let n = y.n();
    let mut out = BTreeMap::new();
    for a in indices_up_to(n, max_alpha)? {
        let mut r = (n + a.degree()) as f64 * y.get(&a)?;
        for (b, c) in g.terms() {
            if c != 0.0 && !b.is_zero() {
                r -= b.degree() as f64 * c * y.get(&a.add(b))?;
            }
        }
        out.insert(a, r);
    }
    Ok(out)
}

/// Largest absolute value in a residual map.
pub fn max_abs(residuals: &BTreeMap<MultiIndex, f64>) -> f64 {
    residuals.values().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckedEntry {
    pub extended: f64,
    pub oracle: f64,
    pub rel_error: f64,
}

impl CheckedEntry {
    pub fn new(extended: f64, oracle: f64) -> CheckedEntry {
        CheckedEntry {
            extended,
            oracle,
            rel_error: (extended - oracle).abs() / oracle.abs().max(REL_ERROR_FLOOR),
        }
    }
}

/// Input prefix plus the requested targets, with the recovery that produced
/// them. `table` holds the prefix (tagged input) and every target.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionResult {
    pub prefix: MomentSequence,
    pub table: MomentTable,
    pub recovered: RecoveryReport,
    pub checked: BTreeMap<MultiIndex, CheckedEntry>,
    pub warnings: Vec<String>,
    /// Integration box used for sublevel quadrature, if any.
    pub probe_box: Option<Vec<[f64; 2]>>,
}

impl ExtensionResult {
    pub fn get(&self, alpha: &MultiIndex) -> Option<f64> {
        self.table.get(alpha)
    }

    /// Records every extended entry that `oracle` also carries.
    pub fn check_against(&mut self, oracle: &MomentSequence) {
        for (a, (v, src)) in &self.table.entries {
            if *src == EntrySource::Extended && a.degree() <= oracle.max_order() {
                if let Ok(o) = oracle.get(a) {
                    self.checked.insert(a.clone(), CheckedEntry::new(*v, o));
                }
            }
        }
    }

    pub fn max_rel_error(&self) -> f64 {
        self.checked.values().fold(0.0, |m, c| m.max(c.rel_error))
    }

    /// CSV with columns `alpha,extended,oracle,rel_error`.
    pub fn write_checked_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["alpha", "extended", "oracle", "rel_error"])?;
        for (a, c) in &self.checked {
            out.write_record([
                a.to_string(),
                crate::io::fmt_f64(c.extended),
                crate::io::fmt_f64(c.oracle),
                crate::io::fmt_f64(c.rel_error),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

fn check_targets(y: &MomentSequence, targets: &[MultiIndex]) -> Result<usize> {
    let mut top = 0;
    for t in targets {
        if t.dim() != y.n() {
            return Err(Error::DimensionMismatch {
                expected: y.n(),
                got: t.dim(),
            });
        }
        top = top.max(t.degree());
    }
    Ok(top)
}

/// Builds the result table: prefix entries keep their input values, and a
/// recomputed prefix entry is kept as a consistency check.
fn assemble(
    y: &MomentSequence,
    targets: &[MultiIndex],
    computed: &MomentSequence,
    recovered: RecoveryReport,
    mut warnings: Vec<String>,
    probe_box: Option<Vec<[f64; 2]>>,
) -> Result<ExtensionResult> {
    let mut table = MomentTable::default();
    for (a, v) in y.iter() {
        table.entries.insert(a.clone(), (v, EntrySource::Input));
    }
    let mut checked = BTreeMap::new();
    for t in targets {
        let v = computed.get(t)?;
        if t.degree() <= y.max_order() {
            checked.insert(t.clone(), CheckedEntry::new(v, y.get(t)?));
        } else {
            table.entries.insert(t.clone(), (v, EntrySource::Extended));
        }
    }
    if !(computed.mass() > 0.0) {
        warnings.push("recomputed mass is not positive".into());
    }
    Ok(ExtensionResult {
        prefix: y.clone(),
        table,
        recovered,
        checked,
        warnings,
        probe_box,
    })
}

/// Box `centroid ± 3σ` per coordinate, from the first two moments.
fn moment_box(y: &MomentSequence) -> Result<Vec<[f64; 2]>> {
    y.require_order(2)?;
    let n = y.n();
    let c = y.centroid()?;
    let y0 = y.mass();
    (0..n)
        .map(|i| {
            let mut e = vec![0u32; n];
            e[i] = 2;
            let second = y.get(&MultiIndex::new(e)?)? / y0;
            let var = (second - c[i] * c[i]).max(0.0);
            let half = PROBE_SIGMAS * var.sqrt().max(1e-12 * (1.0 + c[i].abs()));
            Ok([c[i] - half, c[i] + half])
        })
        .collect()
}

fn scale_box(b: &[[f64; 2]], factor: f64) -> Vec<[f64; 2]> {
    b.iter()
        .map(|[lo, hi]| {
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo) * factor);
            [mid - half, mid + half]
        })
        .collect()
}

fn sublevel_extension(
    y: &MomentSequence,
    targets: &[MultiIndex],
    recovered: RecoveryReport,
    weight: Option<&DensePolynomial>,
    tol: f64,
) -> Result<ExtensionResult> {
    let top = check_targets(y, targets)?;
    let g = &recovered.polynomial;
    let mut base = moment_box(y)?;
    let mut warnings = Vec::new();
    let mut attempt = 0;
    let (computed, used) = loop {
        let probe = scale_box(&base, PROBE_INFLATION);
        match moments_sublevel(g, 1.0, &probe, weight, top, tol) {
            Ok(m) => break (m, probe),
            Err(Error::Unbounded(msg)) => {
                attempt += 1;
                if attempt > PROBE_DOUBLINGS {
                    return Err(Error::Unbounded(format!(
                        "recovered set {{g <= 1}} still reaches the probe box after {PROBE_DOUBLINGS} doublings: {msg}"
                    )));
                }
                base = scale_box(&base, 2.0);
            }
            Err(e) => return Err(e),
        }
    };
    if attempt > 0 {
        warnings.push(format!(
            "probe box from the second moments was too small; doubled {attempt} time(s)"
        ));
    }
    let y0 = y.mass();
    let rel = (computed.mass() - y0).abs() / y0.abs().max(REL_ERROR_FLOOR);
    if rel > 10.0 * tol.max(1e-14) {
        warnings.push(format!(
            "integral of 1 over the recovered set is {:.10e}, input y0 is {:.10e} (relative gap {rel:.2e}); {{g < 1}} may have components outside the region",
            computed.mass(),
            y0
        ));
    }
    let computed = computed.with_provenance(Provenance::Extended);
    assemble(y, targets, &computed, recovered, warnings, Some(used))
}

/// Recovers `g` from the order-`3d` prefix and integrates `x^β` over
/// `{g <= 1}` for each target.
pub fn extend_moments(y: &MomentSequence, d: usize, targets: &[MultiIndex], tol: f64) -> Result<ExtensionResult> {
    check_tol(tol)?;
    let recovered = recover_boundary(y, d, DEFAULT_RANK_TOL)?;
    sublevel_extension(y, targets, recovered, None, tol)
}

/// As [`extend_moments`] for moments of `exp(p) dx` on `{g < 1}`.
pub fn extend_moments_expdensity(
    y: &MomentSequence,
    d: usize,
    p: &DensePolynomial,
    targets: &[MultiIndex],
    tol: f64,
) -> Result<ExtensionResult> {
    check_tol(tol)?;
    check_poly_dim(y, p)?;
    let recovered = recover_boundary_expdensity(y, d, p, DEFAULT_RANK_TOL)?;
    let weight = (p.degree() > 0 || p.coeffs().iter().any(|&c| c != 0.0)).then_some(p);
    sublevel_extension(y, targets, recovered, weight, tol)
}

/// Recovers `g` from global moments of `exp(-g) dx` to order `2d` and
/// integrates the targets against `exp(-g)`.
pub fn extend_moments_expglobal(
    y: &MomentSequence,
    d: usize,
    targets: &[MultiIndex],
    tol: f64,
) -> Result<ExtensionResult> {
    check_tol(tol)?;
    let top = check_targets(y, targets)?;
    let recovered = recover_exp_weight(y, d, tol)?;
    let computed = moments_exp_global(&recovered.polynomial, top, tol, DEFAULT_BOX_GROWTH_LIMIT)?
        .with_provenance(Provenance::Extended);
    assemble(y, targets, &computed, recovered, Vec::new(), None)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}
