//! Line-section quadrature.
//!
//! The last coordinate is integrated exactly over the chords cut out by the
//! constraints (roots of univariate restrictions); the remaining coordinates
//! use globally adaptive Gauss–Legendre with a 10/20-point error estimate.
//! All moments up to the requested order are integrated together.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use super::region::{Constraint, RegionKind};
use super::{MomentSequence, Provenance};
use crate::error::{Error, Result};
use crate::multi_index::{enumerate_basis, MultiIndex};
use crate::polynomial::DensePolynomial;

const MAX_INTERVALS: usize = 4000;

pub(crate) struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    fn new(deg: usize) -> Rule {
        let gl = GaussLegendre::new(deg).expect("degree >= 2");
        let (nodes, weights) = gl.as_node_weight_pairs().iter().copied().unzip();
        Rule { nodes, weights }
    }
}

pub(crate) fn rule(deg: usize) -> &'static Rule {
    static R10: OnceLock<Rule> = OnceLock::new();
    static R16: OnceLock<Rule> = OnceLock::new();
    static R20: OnceLock<Rule> = OnceLock::new();
    match deg {
        10 => R10.get_or_init(|| Rule::new(10)),
        16 => R16.get_or_init(|| Rule::new(16)),
        20 => R20.get_or_init(|| Rule::new(20)),
        _ => unreachable!("unsupported rule degree {deg}"),
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<f64>,
    err: Vec<f64>,
}

struct Keyed(f64, usize);

impl PartialEq for Keyed {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Keyed {}
impl PartialOrd for Keyed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Keyed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then_with(|| other.1.cmp(&self.1))
    }
}

fn eval_panel<F>(f: &mut F, a: f64, b: f64, len: usize) -> Result<Panel>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut g10 = vec![0.0; len];
    let mut g20 = vec![0.0; len];
    for (r, acc) in [(rule(10), &mut g10), (rule(20), &mut g20)] {
        for (x, w) in r.nodes.iter().zip(&r.weights) {
            let v = f(mid + half * x)?;
            for (s, vi) in acc.iter_mut().zip(&v) {
                *s += w * half * vi;
            }
        }
    }
    if g20.iter().any(|v| !v.is_finite()) {
        return Err(Error::QuadratureNonConvergence(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    let err = g10.iter().zip(&g20).map(|(x, y)| (x - y).abs()).collect();
    Ok(Panel { a, b, value: g20, err })
}

/// Globally adaptive integration of a vector-valued `f` over `[a, b]`.
/// Converges when, for every entry, the summed error estimate is at most
/// `tol * max(1, |I|)`.
pub(crate) fn integrate_vec<F>(f: F, a: f64, b: f64, len: usize, tol: f64, initial: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    integrate_vec_pieces(f, &[a, b], len, tol, initial)
}

/// As [`integrate_vec`] over `[breaks[0], breaks.last()]`, with every
/// break point kept as a panel boundary.
pub(crate) fn integrate_vec_pieces<F>(mut f: F, breaks: &[f64], len: usize, tol: f64, initial: usize) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let (a, b) = (breaks[0], breaks[breaks.len() - 1]);
    if !(b > a) {
        return Ok(vec![0.0; len]);
    }
    let initial = initial.max(1);
    let mut panels = Vec::with_capacity(64);
    for w in breaks.windows(2) {
        let (pa, pb) = (w[0], w[1]);
        if !(pb > pa) {
            continue;
        }
        let pieces = ((initial as f64 * (pb - pa) / (b - a)).ceil() as usize).max(1);
        for i in 0..pieces {
            let lo = pa + (pb - pa) * i as f64 / pieces as f64;
            let hi = if i + 1 == pieces { pb } else { pa + (pb - pa) * (i + 1) as f64 / pieces as f64 };
            panels.push(eval_panel(&mut f, lo, hi, len)?);
        }
    }
    let mut total = vec![0.0; len];
    let mut total_err = vec![0.0; len];
    for p in &panels {
        for e in 0..len {
            total[e] += p.value[e];
            total_err[e] += p.err[e];
        }
    }
    let scale: Vec<f64> = total.iter().map(|v| v.abs().max(1.0)).collect();
    let score = |p: &Panel| -> f64 { p.err.iter().zip(&scale).map(|(e, s)| e / s).fold(0.0, f64::max) };
    let mut heap: BinaryHeap<Keyed> = panels.iter().enumerate().map(|(i, p)| Keyed(score(p), i)).collect();
    let done = |total: &[f64], err: &[f64]| total.iter().zip(err).all(|(v, e)| *e <= tol * v.abs().max(1.0));
    loop {
        if done(&total, &total_err) {
            // confirm with exact sums, the running ones accumulate rounding
            let mut t = vec![0.0; len];
            let mut te = vec![0.0; len];
            for p in &panels {
                for e in 0..len {
                    t[e] += p.value[e];
                    te[e] += p.err[e];
                }
            }
            total = t;
            total_err = te;
            if done(&total, &total_err) {
                return Ok(total);
            }
        }
        if panels.len() >= MAX_INTERVALS {
            let worst = total
                .iter()
                .zip(&total_err)
                .map(|(v, e)| e / v.abs().max(1.0))
                .fold(0.0, f64::max);
            return Err(Error::QuadratureNonConvergence(format!(
                "{} intervals on [{a}, {b}] left relative error estimate {worst:.3e} above tol {tol:.3e}",
                panels.len()
            )));
        }
        let Some(Keyed(_, idx)) = heap.pop() else {
            return Ok(total);
        };
        let (pa, pb) = (panels[idx].a, panels[idx].b);
        let m = 0.5 * (pa + pb);
        if !(m > pa && m < pb) {
            // cannot split further; accept the panel as is
            continue;
        }
        let left = eval_panel(&mut f, pa, m, len)?;
        let right = eval_panel(&mut f, m, pb, len)?;
        for e in 0..len {
            total[e] += left.value[e] + right.value[e] - panels[idx].value[e];
            total_err[e] += left.err[e] + right.err[e] - panels[idx].err[e];
        }
        heap.push(Keyed(score(&left), idx));
        heap.push(Keyed(score(&right), panels.len()));
        panels[idx] = left;
        panels.push(right);
    }
}

const SUPPORT_SCAN: usize = 64;

/// Break points at the edges of the support of `f` (where its first entry,
/// the section measure, turns zero or nonzero), located by a grid scan and
/// bisection. Without them a panel can straddle an edge with every node
/// outside the set and report a zero error estimate.
fn support_breaks<F>(f: &mut F, a: f64, b: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<Vec<f64>>,
{
    let mut breaks = vec![a];
    let grid: Vec<f64> = (0..=SUPPORT_SCAN).map(|k| a + (b - a) * k as f64 / SUPPORT_SCAN as f64).collect();
    let mut inside = Vec::with_capacity(grid.len());
    for &x in &grid {
        inside.push(f(x)?[0] != 0.0);
    }
    for k in 0..SUPPORT_SCAN {
        if inside[k] == inside[k + 1] {
            continue;
        }
        let (mut lo, mut hi) = (grid[k], grid[k + 1]);
        let lo_inside = inside[k];
        while hi - lo > 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
            let m = 0.5 * (lo + hi);
            if !(m > lo && m < hi) {
                break;
            }
            if (f(m)?[0] != 0.0) == lo_inside {
                lo = m;
            } else {
                hi = m;
            }
        }
        breaks.push(0.5 * (lo + hi));
    }
    breaks.push(b);
    Ok(breaks)
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * t + ci)
}

/// Real roots of the univariate polynomial `Σ c_k t^k` strictly inside
/// `(lo, hi)`, in increasing order. Roots of even multiplicity (no sign
/// change) are reported only when the polynomial vanishes exactly there.
pub fn real_roots_in(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let mut deg = coeffs.len();
    while deg > 0 && coeffs[deg - 1] == 0.0 {
        deg -= 1;
    }
    let c = &coeffs[..deg];
    if deg <= 1 || !(hi > lo) {
        return Vec::new();
    }
    if deg == 2 {
        let r = -c[0] / c[1];
        return if r > lo && r < hi { vec![r] } else { Vec::new() };
    }
    let deriv: Vec<f64> = c.iter().enumerate().skip(1).map(|(k, &ck)| k as f64 * ck).collect();
    let crit = real_roots_in(&deriv, lo, hi);
    let mut pts = Vec::with_capacity(crit.len() + 2);
    pts.push(lo);
    pts.extend(crit);
    pts.push(hi);
    let mut roots = Vec::new();
    for w in pts.windows(2) {
        let (mut u, mut v) = (w[0], w[1]);
        let mut fu = horner(c, u);
        let fv = horner(c, v);
        if fu == 0.0 {
            if u > lo {
                roots.push(u);
            }
            continue;
        }
        if fv == 0.0 || (fu < 0.0) == (fv < 0.0) {
            continue;
        }
        let root = loop {
            let m = 0.5 * (u + v);
            if m <= u || m >= v {
                break m;
            }
            let fm = horner(c, m);
            if fm == 0.0 {
                break m;
            }
            if (fm < 0.0) == (fu < 0.0) {
                u = m;
                fu = fm;
            } else {
                v = m;
            }
        };
        roots.push(root);
    }
    roots.dedup();
    roots
}

/// Sub-intervals of `[lo, hi]` on which every restricted constraint is <= 0.
fn feasible_intervals(restricted: &[Vec<f64>], lo: f64, hi: f64) -> Vec<[f64; 2]> {
    let mut cuts = vec![lo, hi];
    for c in restricted {
        cuts.extend(real_roots_in(c, lo, hi));
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut out: Vec<[f64; 2]> = Vec::new();
    for w in cuts.windows(2) {
        let m = 0.5 * (w[0] + w[1]);
        if restricted.iter().all(|c| horner(c, m) <= 0.0) {
            match out.last_mut() {
                Some(last) if last[1] == w[0] => last[1] = w[1],
                _ => out.push([w[0], w[1]]),
            }
        }
    }
    out
}

struct Integrator<'a> {
    n: usize,
    order: usize,
    constraints: &'a [Constraint],
    weight: Option<&'a DensePolynomial>,
    bbox: &'a [[f64; 2]],
    /// For level `i`: each suffix index as (power of x_i, rank of the rest).
    tables: Vec<Vec<(u32, usize)>>,
}

impl Integrator<'_> {
    fn level(&self, i: usize, prefix: &mut Vec<f64>, tol: f64) -> Result<Vec<f64>> {
        if i + 1 == self.n {
            return self.innermost(prefix, tol);
        }
        let [a, b] = self.bbox[i];
        let inner_tol = tol * 0.1 / (b - a).max(1.0);
        let table = &self.tables[i];
        let order = self.order;
        let mut f = |x: f64| -> Result<Vec<f64>> {
            prefix.push(x);
            let inner = self.level(i + 1, prefix, inner_tol);
            prefix.pop();
            let inner = inner?;
            let mut pw = Vec::with_capacity(order + 1);
            pw.push(1.0);
            for k in 1..=order {
                pw.push(pw[k - 1] * x);
            }
            Ok(table.iter().map(|&(p, r)| pw[p as usize] * inner[r]).collect())
        };
        let breaks = support_breaks(&mut f, a, b)?;
        integrate_vec_pieces(f, &breaks, table.len(), tol, 8)
    }

    fn innermost(&self, prefix: &[f64], tol: f64) -> Result<Vec<f64>> {
        let [lo, hi] = self.bbox[self.n - 1];
        let restricted: Vec<Vec<f64>> = self.constraints.iter().map(|c| c.restrict_last(prefix)).collect();
        let chords = feasible_intervals(&restricted, lo, hi);
        let len = self.order + 1;
        let mut acc = vec![0.0; len];
        match self.weight {
            None => {
                for [a, b] in chords {
                    let (mut pa, mut pb) = (a, b);
                    for (k, slot) in acc.iter_mut().enumerate() {
                        *slot += (pb - pa) / (k + 1) as f64;
                        pa *= a;
                        pb *= b;
                    }
                }
            }
            Some(p) => {
                let q = p.restrict_last(prefix);
                for [a, b] in chords {
                    let f = |t: f64| -> Result<Vec<f64>> {
                        let e = horner(&q, t).exp();
                        let mut v = Vec::with_capacity(len);
                        let mut m = e;
                        for _ in 0..len {
                            v.push(m);
                            m *= t;
                        }
                        Ok(v)
                    };
                    let part = integrate_vec(f, a, b, len, tol / (hi - lo).max(1.0), 1)?;
                    for (s, v) in acc.iter_mut().zip(part) {
                        *s += v;
                    }
                }
            }
        }
        Ok(acc)
    }
}

fn suffix_tables(n: usize, order: usize) -> Result<Vec<Vec<(u32, usize)>>> {
    let mut tables = Vec::with_capacity(n.saturating_sub(1));
    for i in 0..n.saturating_sub(1) {
        let m = n - i;
        let basis = enumerate_basis(m, order)?;
        let table = basis
            .iter()
            .map(|beta| {
                let e = beta.exponents();
                let rest = MultiIndex::new(e[1..].to_vec()).expect("m >= 2");
                (e[0], rest.rank())
            })
            .collect();
        tables.push(table);
    }
    Ok(tables)
}

/// Moments of `exp(weight)` (or of 1) over the region, up to `order`.
pub(crate) fn region_moments(
    kind: &RegionKind,
    order: usize,
    weight: Option<&DensePolynomial>,
    tol: f64,
) -> Result<MomentSequence> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let constraints = kind.constraints()?;
    let bbox = kind.bounding_box();
    integrate_constraints(&constraints, &bbox, order, weight, tol)
}

pub(crate) fn integrate_constraints(
    constraints: &[Constraint],
    bbox: &[[f64; 2]],
    order: usize,
    weight: Option<&DensePolynomial>,
    tol: f64,
) -> Result<MomentSequence> {
    let n = bbox.len();
    if let Some(w) = weight {
        if w.n() != n {
            return Err(Error::DimensionMismatch { expected: n, got: w.n() });
        }
    }
    let integrator = Integrator {
        n,
        order,
        constraints,
        weight,
        bbox,
        tables: suffix_tables(n, order)?,
    };
    let values = integrator.level(0, &mut Vec::with_capacity(n), tol)?;
    MomentSequence::new(
        n,
        order,
        values,
        Provenance::Quadrature {
            tol,
            truncation_box: None,
        },
    )
}

/// Fails with `Unbounded` if the constrained set meets a face of `probe`.
/// Faces transverse to the last coordinate are scanned by exact chords,
/// the others by a point grid.
pub(crate) fn probe_faces(constraints: &[Constraint], probe: &[[f64; 2]]) -> Result<()> {
    let n = probe.len();
    let free = n.saturating_sub(2);
    let per_dim = if free == 0 { 1 } else { ((40_000f64).powf(1.0 / free as f64) as usize).clamp(3, 2001) };
    let grid = |lo: f64, hi: f64, m: usize| -> Vec<f64> {
        (0..m).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / m as f64).collect()
    };
    let escape = |face: String| Err(Error::Unbounded(format!("set reaches the probe face {face}")));
    for i in 0..n {
        for bound in &probe[i] {
            let name = format!("x{} = {}", i + 1, bound);
            if i + 1 < n {
                // chords along the last coordinate over a grid of the others
                let others: Vec<usize> = (0..n - 1).filter(|&j| j != i).collect();
                let total = per_dim.pow(others.len() as u32);
                for idx in 0..total {
                    let mut prefix = vec![0.0; n - 1];
                    prefix[i] = *bound;
                    let mut r = idx;
                    for &j in &others {
                        let pts = grid(probe[j][0], probe[j][1], per_dim);
                        prefix[j] = pts[r % per_dim];
                        r /= per_dim;
                    }
                    let restricted: Vec<Vec<f64>> = constraints.iter().map(|c| c.restrict_last(&prefix)).collect();
                    if !feasible_intervals(&restricted, probe[n - 1][0], probe[n - 1][1]).is_empty() {
                        return escape(name);
                    }
                }
            } else {
                let others: Vec<usize> = (0..n - 1).collect();
                let m = if others.is_empty() {
                    1
                } else {
                    ((200_000f64).powf(1.0 / others.len() as f64) as usize).clamp(3, 2001)
                };
                let total = m.pow(others.len() as u32);
                for idx in 0..total {
                    let mut x = vec![0.0; n];
                    x[n - 1] = *bound;
                    let mut r = idx;
                    for &j in &others {
                        let pts = grid(probe[j][0], probe[j][1], m);
                        x[j] = pts[r % m];
                        r /= m;
                    }
                    if constraints.iter().all(|c| c.eval(&x) <= 0.0) {
                        return escape(name);
                    }
                }
            }
        }
    }
    Ok(())
}
