//! Recovery of boundary polynomials and exponential weights from moments.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, eigenvalues, lstsq, norm_inf, sorted_svd};
use crate::matrices::{
    assemble_coordinate, assemble_expdensity, assemble_expglobal, assemble_renorm, diagonal_factors, theta_matrix,
    CoordinateVariant, MatrixFamily, MomentMatrix,
};
use crate::momentgen::{moments_exp_global, MomentSequence, DEFAULT_BOX_GROWTH_LIMIT};
use crate::multi_index::enumerate_basis;
use crate::polynomial::DensePolynomial;

/// Relative singular-value threshold used when none is supplied.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Floor for the gradient norm in [`boundary_fit`].
pub const FIT_GRADIENT_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub k: usize,
    pub rank: usize,
    pub rows: usize,
    pub cols: usize,
    /// `σ_min / σ_max` of the matrix.
    pub sigma_min_rel: f64,
}

impl fmt::Display for RankEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let full = self.rank == self.cols.min(self.rows);
        write!(
            f,
            "k={} ({}x{}): {}rank {}",
            self.k,
            self.rows,
            self.cols,
            if full { "full " } else { "" },
            self.rank
        )
    }
}

/// Outcome of a recovery, with the diagnostics needed to judge it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    /// The recovered polynomial.
    pub polynomial: DensePolynomial,
    /// The boundary is `{polynomial = boundary_level}`; `None` for weights.
    pub boundary_level: Option<f64>,
    pub rank_profile: Vec<RankEntry>,
    /// Singular values of the decisive matrix, descending.
    pub spectrum: Vec<f64>,
    /// Eigenvalues `[re, im]` of the decisive matrix when it is square.
    pub eigenvalues: Option<Vec<[f64; 2]>>,
    /// The coefficient vector the decisive matrix was applied to.
    pub solution_vector: Vec<f64>,
    /// `‖M v‖∞ / ‖M‖∞` for the decisive matrix `M` and `v = solution_vector`.
    pub residual: f64,
    pub unique: bool,
    /// Whether the decisive system has a (numerically) nonzero kernel.
    pub consistent: bool,
    /// Kernel basis of the decisive matrix when it is not one-dimensional.
    pub kernel: Vec<Vec<f64>>,
    pub method: String,
    pub decisive_k: Option<usize>,
    pub notes: Vec<String>,
}

impl RecoveryReport {
    /// Recomputes the normalized residual of `solution_vector` against `m`.
    pub fn residual_against(&self, m: &MomentMatrix) -> Result<f64> {
        residual(m.entries(), &self.solution_vector)
    }

    pub fn to_json(&self) -> Result<String> {
        crate::io::to_json_string(self)
    }
}

fn residual(a: &DMatrix<f64>, v: &[f64]) -> Result<f64> {
    if a.ncols() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: v.len(),
        });
    }
    let norm = norm_inf(a);
    if norm == 0.0 {
        return Ok(0.0);
    }
    Ok((a * DVector::from_column_slice(v)).amax() / norm)
}

fn rank_entry(k: usize, m: &MomentMatrix, rank_tol: f64) -> Result<RankEntry> {
    let s = sorted_svd(m.entries())?;
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let smin = s.sigma.last().copied().unwrap_or(0.0);
    Ok(RankEntry {
        k,
        rank: s.rank(rank_tol),
        rows: m.nrows(),
        cols: m.ncols(),
        sigma_min_rel: if smax > 0.0 { smin / smax } else { 0.0 },
    })
}

fn polynomial_over_cols(m: &MomentMatrix, coeffs: Vec<f64>) -> Result<DensePolynomial> {
    let n = m.cols()[0].dim();
    let d = m.cols().last().map(|c| c.degree()).unwrap_or(0);
    DensePolynomial::from_coeffs(enumerate_basis(n, d)?, coeffs)
}

fn check_rank_tol(rank_tol: f64) -> Result<()> {
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::InvalidArgument(format!("rank tolerance {rank_tol} must lie in (0, 1)")));
    }
    Ok(())
}

/// Splits `M = [m₀ | M₁]` and solves `M₁ g = m₀` in least squares, so that
/// `M (-1, g) ≈ 0`.
pub fn kernel_solve(m: &MomentMatrix, rank_tol: f64) -> Result<RecoveryReport> {
    check_rank_tol(rank_tol)?;
    let a = m.entries();
    let c = a.ncols();
    if c == 0 {
        return Err(Error::InvalidArgument("matrix has no columns".into()));
    }
    let full = sorted_svd(a)?;
    let smax = full.sigma[0];
    let rank = full.rank(rank_tol);
    let consistent = rank < c;
    let m0: DVector<f64> = a.column(0).into_owned();
    let m0_zero = m0.iter().all(|&v| v == 0.0);
    let (g, unique) = if c == 1 {
        (DVector::zeros(0), true)
    } else {
        let m1 = a.columns(1, c - 1).into_owned();
        let s1 = sorted_svd(&m1)?;
        let (hi, lo) = (s1.sigma[0], *s1.sigma.last().expect("nonempty"));
        let unique = hi > 0.0 && lo / hi > rank_tol && m1.nrows() >= m1.ncols();
        if m0_zero && !unique {
            return Err(Error::DegenerateSystem(
                "first column is zero and the coefficient block is singular; the constant cannot be normalized to -1"
                    .into(),
            ));
        }
        let g = if hi > 0.0 { lstsq(&m1, &m0, rank_tol)? } else { DVector::zeros(c - 1) };
        (g, unique)
    };
    if smax == 0.0 {
        return Err(Error::DegenerateSystem("matrix is identically zero".into()));
    }
    let mut v = Vec::with_capacity(c);
    v.push(-1.0);
    // with a one-dimensional kernel and full-rank M₁ the normalized null
    // vector is the same solution, and it is markedly more accurate than
    // least squares on the tall block
    let null = full.smallest();
    if unique && rank + 1 == c && null[0].abs() > 1e-8 * null.amax() {
        v.extend(null.iter().skip(1).map(|x| x / -null[0]));
    } else {
        v.extend(g.iter().copied());
    }
    let mut coeffs = v.clone();
    coeffs[0] = 0.0;
    let kernel = if rank + 1 == c {
        Vec::new()
    } else {
        full.kernel(rank_tol).into_iter().map(|k| k.as_slice().to_vec()).collect()
    };
    Ok(RecoveryReport {
        polynomial: polynomial_over_cols(m, coeffs)?,
        boundary_level: Some(1.0),
        rank_profile: Vec::new(),
        spectrum: full.sigma.clone(),
        eigenvalues: (a.nrows() == c).then(|| eigenvalues(a)),
        residual: residual(a, &v)?,
        solution_vector: v,
        unique,
        consistent,
        kernel,
        method: format!("kernel-solve ({})", m.family().name()),
        decisive_k: None,
        notes: Vec::new(),
    })
}

fn verdict(report: &RecoveryReport, what: &str) -> Option<String> {
    if !report.consistent {
        let r = report.rank_profile.last().map(|e| e.rank).unwrap_or(0);
        Some(format!("{what}: full rank {r}, no solution"))
    } else if !report.unique {
        Some(format!(
            "{what}: solution not unique (kernel dimension {})",
            report.kernel.len().max(2)
        ))
    } else {
        None
    }
}

fn profile_text(profile: &[RankEntry]) -> String {
    profile.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

/// Solves `M^d_{2d}(y) (-1, g) = 0`. The rank profile covers `k = d..=2d`.
pub fn recover_boundary(y: &MomentSequence, d: usize, rank_tol: f64) -> Result<RecoveryReport> {
    y.require_order(3 * d)?;
    let mut profile = Vec::with_capacity(d + 1);
    for k in d..=2 * d {
        profile.push(rank_entry(k, &assemble_renorm(y, d, k)?, rank_tol)?);
    }
    let m = assemble_renorm(y, d, 2 * d)?;
    let mut report = kernel_solve(&m, rank_tol)?;
    report.rank_profile = profile;
    report.decisive_k = Some(2 * d);
    report.method = format!("recover-boundary (M^{d}_{})", 2 * d);
    if let Some(v) = verdict(&report, &format!("M^{d}_{}", 2 * d)) {
        return Err(Error::AssumptionsViolated(format!(
            "{v}; rank profile: {}",
            profile_text(&report.rank_profile)
        )));
    }
    flag_unbounded(&mut report);
    Ok(report)
}

/// Tries `k = d, d+1, ...` and stops at the first uniquely solvable system.
pub fn recover_min_order(y: &MomentSequence, d: usize, rank_tol: f64) -> Result<RecoveryReport> {
    y.require_order(2 * d)?;
    let k_max = (2 * d).min(y.max_order() - d);
    let mut profile = Vec::new();
    for k in d..=k_max {
        let m = assemble_renorm(y, d, k)?;
        profile.push(rank_entry(k, &m, rank_tol)?);
        let mut report = match kernel_solve(&m, rank_tol) {
            Ok(r) => r,
            Err(Error::DegenerateSystem(_)) => continue,
            Err(e) => return Err(e),
        };
        if report.unique && report.consistent {
            report.rank_profile = profile;
            report.decisive_k = Some(k);
            report.method = format!("recover-min-order (M^{d}_{k})");
            flag_unbounded(&mut report);
            return Ok(report);
        }
    }
    let first = profile.first().map(|e| {
        if e.rank == e.cols.min(e.rows) {
            format!("M^{d}_{d} has full rank {}, no solution; ", e.rank)
        } else {
            String::new()
        }
    });
    Err(Error::AssumptionsViolated(format!(
        "{}no k in {d}..={k_max} gives a unique solution; rank profile: {}",
        first.unwrap_or_default(),
        profile_text(&profile)
    )))
}

/// Solves the `k = d` system, optionally in the frame centred at the
/// centroid, and returns `g` in the original coordinates.
pub fn recover_convex(y: &MomentSequence, d: usize, recenter: bool, rank_tol: f64) -> Result<RecoveryReport> {
    y.require_order(2 * d)?;
    let n = y.n();
    let centre = if recenter { Some(y.centroid()?) } else { None };
    let local = match &centre {
        Some(c) => y.translate(&c.iter().map(|v| -v).collect::<Vec<_>>())?,
        None => y.clone(),
    };
    let m = assemble_renorm(&local, d, d)?;
    let mut report = kernel_solve(&m, rank_tol)?;
    report.rank_profile = vec![rank_entry(d, &m, rank_tol)?];
    report.decisive_k = Some(d);
    report.method = format!("recover-convex (M^{d}_{d}{})", if recenter { ", centroid frame" } else { "" });
    if let Some(v) = verdict(&report, &format!("M^{d}_{d}")) {
        return Err(Error::AssumptionsViolated(v));
    }
    if let Some(c) = centre {
        let shift: Vec<f64> = c.iter().map(|v| -v).collect();
        report.polynomial = report.polynomial.compose_affine(&DMatrix::identity(n, n), &shift)?;
        report.notes.push(format!(
            "solved at the centroid {c:?}; solution vector and residual refer to that frame"
        ));
    }
    flag_unbounded(&mut report);
    Ok(report)
}

/// Stacks the `n` coordinate matrices and takes their common kernel.
pub fn recover_singular(
    y: &MomentSequence,
    d: usize,
    variant: CoordinateVariant,
    rank_tol: f64,
) -> Result<RecoveryReport> {
    check_rank_tol(rank_tol)?;
    let n = y.n();
    let parts = (0..n)
        .map(|j| assemble_coordinate(y, d, j, variant))
        .collect::<Result<Vec<_>>>()?;
    let m = MomentMatrix::vstack(&parts, MatrixFamily::CoordinateStack { variant })?;
    let a = m.entries();
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateSystem("stacked coordinate system is identically zero".into()));
    }
    let s = sorted_svd(a)?;
    let rank = s.rank(rank_tol);
    let c = a.ncols();
    let entry = RankEntry {
        k: 2 * d,
        rank,
        rows: m.nrows(),
        cols: c,
        sigma_min_rel: s.sigma[c - 1] / s.sigma[0],
    };
    if rank == c {
        return Err(Error::AssumptionsViolated(format!(
            "stacked {variant} system: full rank {rank}, no solution"
        )));
    }
    if rank + 1 < c {
        return Err(Error::AssumptionsViolated(format!(
            "stacked {variant} system: kernel of dimension {}, solution not unique",
            c - rank
        )));
    }
    let mut v = canonical_sign(s.smallest());
    let mut notes = Vec::new();
    let level;
    if v[0].abs() > 1e-8 * v.amax() {
        v /= -v[0];
        level = 1.0;
    } else {
        // boundary through the origin: report {g = 0} with g = 1 at the centroid
        let centroid = y.centroid()?;
        let q = polynomial_over_cols(&m, v.as_slice().to_vec())?;
        let at = q.eval(&centroid)?;
        if at.abs() > 1e-12 * v.amax() {
            v /= at;
        } else {
            notes.push("kernel polynomial vanishes at the centroid; left unit-normalized".into());
        }
        level = 0.0;
        notes.push("constant coefficient is zero: the boundary passes through the origin, reported as {g = 0}".into());
    }
    let mut coeffs = v.as_slice().to_vec();
    if level == 1.0 {
        coeffs[0] = 0.0;
    }
    Ok(RecoveryReport {
        polynomial: polynomial_over_cols(&m, coeffs)?,
        boundary_level: Some(level),
        rank_profile: vec![entry],
        spectrum: s.sigma.clone(),
        eigenvalues: None,
        residual: residual(a, v.as_slice())?,
        solution_vector: v.as_slice().to_vec(),
        unique: true,
        consistent: true,
        kernel: Vec::new(),
        method: format!("recover-singular ({variant}, {n} stacked coordinate matrices)"),
        decisive_k: Some(2 * d),
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApproxMode {
    #[default]
    Eigen,
    Svd,
}

impl FromStr for ApproxMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eigen" => Ok(ApproxMode::Eigen),
            "svd" => Ok(ApproxMode::Svd),
            other => Err(Error::InvalidArgument(format!("unknown mode '{other}' (expected eigen or svd)"))),
        }
    }
}

/// Polynomial whose coefficient vector is the eigenvector of `M^d_d` for
/// the eigenvalue of smallest modulus (or the last right singular vector).
/// The boundary estimate is its zero set.
pub fn approx_boundary(y: &MomentSequence, d: usize, mode: ApproxMode) -> Result<RecoveryReport> {
    let m = assemble_renorm(y, d, d)?;
    let a = m.entries();
    let s = sorted_svd(a)?;
    if s.sigma[0] == 0.0 {
        return Err(Error::DegenerateSystem("matrix is identically zero".into()));
    }
    let eig = eigenvalues(a);
    let mut notes = Vec::new();
    let lmax = eig.first().map(|z| z[0].hypot(z[1])).unwrap_or(0.0);
    let all_real = eig.iter().all(|z| z[1].abs() <= 1e-9 * lmax);
    let mut used = mode;
    if mode == ApproxMode::Eigen && !all_real {
        notes.push("spectrum has complex eigenvalues; used the smallest singular vector instead".into());
        used = ApproxMode::Svd;
    }
    let (vector, selected, runner_up) = match used {
        ApproxMode::Eigen => {
            let mut mods: Vec<(f64, f64)> = eig.iter().map(|z| (z[0].abs(), z[0])).collect();
            mods.sort_by(|x, y| x.0.total_cmp(&y.0));
            let lambda = mods[0].1;
            let shifted = a - DMatrix::identity(a.nrows(), a.ncols()) * lambda;
            let v = sorted_svd(&shifted)?.smallest();
            (v, mods[0].0, mods.get(1).map_or(f64::INFINITY, |x| x.0))
        }
        ApproxMode::Svd => {
            let k = s.sigma.len();
            (s.smallest(), s.sigma[k - 1], if k > 1 { s.sigma[k - 2] } else { f64::INFINITY })
        }
    };
    let mut v = vector.normalize();
    if v[0] > 0.0 {
        v.neg_mut();
    }
    notes.push(format!(
        "selected {} {:.3e} ({:.3e} relative to the largest)",
        if used == ApproxMode::Eigen { "eigenvalue modulus" } else { "singular value" },
        selected,
        selected / if used == ApproxMode::Eigen { lmax } else { s.sigma[0] }
    ));
    Ok(RecoveryReport {
        polynomial: polynomial_over_cols(&m, v.as_slice().to_vec())?,
        boundary_level: Some(0.0),
        rank_profile: vec![rank_entry(d, &m, DEFAULT_RANK_TOL)?],
        spectrum: s.sigma.clone(),
        eigenvalues: Some(eig),
        residual: residual(a, v.as_slice())?,
        solution_vector: v.as_slice().to_vec(),
        unique: selected < 0.5 * runner_up,
        consistent: true,
        kernel: Vec::new(),
        method: format!(
            "approx-boundary (M^{d}_{d}, {})",
            if used == ApproxMode::Eigen { "eigen" } else { "svd" }
        ),
        decisive_k: Some(d),
        notes,
    })
}

/// Recovers `g` from moments of `exp(p) dx` on `{g < 1}` using the
/// exponential-density matrix with `k = 2d`.
pub fn recover_boundary_expdensity(
    y: &MomentSequence,
    d: usize,
    p: &DensePolynomial,
    rank_tol: f64,
) -> Result<RecoveryReport> {
    y.require_order(3 * d + p.degree())?;
    let m = assemble_expdensity(y, d, 2 * d, p)?;
    let mut report = kernel_solve(&m, rank_tol)?;
    report.rank_profile = vec![rank_entry(2 * d, &m, rank_tol)?];
    report.decisive_k = Some(2 * d);
    report.method = format!("recover-boundary-expdensity (M^{d}_{})", 2 * d);
    if let Some(v) = verdict(&report, &format!("exp-density M^{d}_{}", 2 * d)) {
        return Err(Error::AssumptionsViolated(v));
    }
    Ok(report)
}

/// Recovers `g` (including `g₀`) from global moments of `exp(-g) dx` by
/// solving `Θ (-1, v) = Δ₀ y^d` with `Θ = Δ M_d D`.
pub fn recover_exp_weight(y: &MomentSequence, d: usize, tol: f64) -> Result<RecoveryReport> {
    y.require_order(2 * d)?;
    let n = y.n();
    let theta = theta_matrix(y, d)?;
    let f = diagonal_factors(n, d)?;
    let s = f.delta.len();
    let yd = DVector::from_column_slice(&y.values()[..s]);
    let rhs = f.delta0.component_mul(&yd);
    let svd = sorted_svd(&theta)?;
    let cond = svd.sigma[s - 1] / svd.sigma[0];
    if !(cond > 1e-15) {
        return Err(Error::Singular(format!(
            "Θ(y) has relative smallest singular value {cond:.3e}"
        )));
    }
    let x = theta
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Θ(y) is singular".into()))?;
    let mut notes = Vec::new();
    if (x[0] + 1.0).abs() > 1e-6 {
        notes.push(format!("first solution component is {:.6e}, expected -1", x[0]));
    }
    let mut coeffs: Vec<f64> = x.iter().copied().collect();
    coeffs[0] = 0.0;
    let basis = enumerate_basis(n, d)?;
    let tilde = DensePolynomial::from_coeffs(basis.clone(), coeffs.clone())?;
    let mass = moments_exp_global(&tilde, 0, tol, DEFAULT_BOX_GROWTH_LIMIT)?.values()[0];
    let y0 = y.mass();
    if !(y0 > 0.0) {
        return Err(Error::InvalidArgument(format!("y0 = {y0} must be positive")));
    }
    coeffs[0] = mass.ln() - y0.ln();
    let md = assemble_expglobal(y, d)?;
    let mut v: Vec<f64> = x.iter().copied().collect();
    v[0] = -1.0;
    let theta_res = (&theta * &x - &rhs).amax() / norm_inf(&theta).max(f64::MIN_POSITIVE);
    notes.push(format!("Θ system residual {theta_res:.3e}, relative σ_min {cond:.3e}"));
    Ok(RecoveryReport {
        polynomial: DensePolynomial::from_coeffs(basis, coeffs)?,
        boundary_level: None,
        rank_profile: vec![RankEntry {
            k: d,
            rank: svd.rank(DEFAULT_RANK_TOL),
            rows: s,
            cols: s,
            sigma_min_rel: cond,
        }],
        spectrum: svd.sigma.clone(),
        eigenvalues: Some(eigenvalues(&theta)),
        residual: residual(md.entries(), &v)?,
        solution_vector: v,
        unique: true,
        consistent: true,
        kernel: Vec::new(),
        method: format!("recover-exp-weight (Θ of order {d})"),
        decisive_k: Some(d),
        notes,
    })
}

/// First-order distance proxy `max |p(x) - level| / max(‖∇p(x)‖, ε)` over
/// the sample points.
pub fn boundary_fit(p: &DensePolynomial, level: f64, samples: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in samples {
        let v = p.eval(x)? - level;
        let g = p.gradient(x)?;
        let norm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        worst = worst.max(v.abs() / norm.max(FIT_GRADIENT_FLOOR));
    }
    Ok(worst)
}

/// Whether the top-degree form of `g` is positive in every sampled
/// direction, the usual sign that `{g <= c}` is bounded.
pub fn leading_form_positive(g: &DensePolynomial) -> bool {
    let deg = g.degree();
    if deg == 0 || deg % 2 == 1 {
        return false;
    }
    let Ok(top) = g.homogeneous_part(deg) else {
        return false;
    };
    let n = g.n();
    let dirs: Vec<Vec<f64>> = match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..720)
            .map(|i| {
                let t = std::f64::consts::PI * i as f64 / 360.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            (0..4000)
                .map(|_| {
                    let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                    let s = v.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
                    v.into_iter().map(|c| c / s).collect()
                })
                .collect()
        }
    };
    let scale = top.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    dirs.iter().all(|u| top.eval_unchecked(u) > 1e-12 * scale)
}

fn flag_unbounded(report: &mut RecoveryReport) {
    if report.boundary_level == Some(1.0) && !leading_form_positive(&report.polynomial) {
        report.notes.push(
            "{g < 1} is unbounded: 1 - g vanishes only on part of the boundary, and <x, n_x> = 0 on the rest".into(),
        );
    }
}
