//! Property tests over random polynomials, regions and moment scalings.

use momentshape::determinateness::{extend_moments, max_abs, stokes_residual};
use momentshape::matrices::{assemble_expdensity, assemble_renorm};
use momentshape::momentgen::{moments_exp_global, moments_indicator, moments_sublevel, MomentMethod, DEFAULT_BOX_GROWTH_LIMIT};
use momentshape::recovery::{recover_boundary, recover_min_order, DEFAULT_RANK_TOL};
use momentshape::{enumerate_basis, DensePolynomial, MomentSequence, MultiIndex, RegionSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn random_poly(n: usize, d: usize) -> impl Strategy<Value = DensePolynomial> {
    let len = enumerate_basis(n, d).unwrap().len();
    prop::collection::vec(-2.0f64..2.0, len)
        .prop_map(move |c| DensePolynomial::from_coeffs(enumerate_basis(n, d).unwrap(), c).unwrap())
}

/// Symmetric matrix with eigenvalues in `[1, 10]` and a random rotation.
fn pd2() -> impl Strategy<Value = DMatrix<f64>> {
    (1.0f64..10.0, 1.0f64..10.0, 0.0f64..std::f64::consts::PI).prop_map(|(a, b, t)| {
        let (c, s) = (t.cos(), t.sin());
        let q = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        &q * DMatrix::from_diagonal(&DVector::from_vec(vec![a, b])) * q.transpose()
    })
}

fn ellipse_g(a: &DMatrix<f64>) -> DensePolynomial {
    DensePolynomial::from_terms(2, 2, &[(&[2, 0], a[(0, 0)]), (&[1, 1], 2.0 * a[(0, 1)]), (&[0, 2], a[(1, 1)])])
        .unwrap()
}

fn exact(r: &RegionSpec, order: usize) -> MomentSequence {
    moments_indicator(r, order, MomentMethod::ClosedForm).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn euler_sum_is_radial_derivative(p in random_poly(3, 4), x in prop::collection::vec(-1.5f64..1.5, 3)) {
        let h = 1e-5;
        let mut radial = 0.0;
        for i in 0..3 {
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[i] += h;
            xm[i] -= h;
            radial += x[i] * (p.eval(&xp).unwrap() - p.eval(&xm).unwrap()) / (2.0 * h);
        }
        let e = p.euler_weighted_sum().eval(&x).unwrap();
        prop_assert!((e - radial).abs() <= 1e-6 * e.abs().max(1.0), "{e} vs {radial}");
    }

    #[test]
    fn homogeneous_parts_sum_exactly(p in random_poly(2, 5)) {
        let mut sum = DensePolynomial::zeros(2, 5).unwrap();
        for k in 0..=5 {
            sum = sum.add(&p.homogeneous_part(k).unwrap()).unwrap();
        }
        prop_assert_eq!(sum.coeffs(), p.coeffs());
    }

    #[test]
    fn polynomial_json_round_trip(p in random_poly(3, 3)) {
        let s = serde_json::to_string(&p).unwrap();
        let back: DensePolynomial = serde_json::from_str(&s).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn kernels_are_scale_invariant(a in pd2(), c in 0.01f64..100.0) {
        let y = exact(&RegionSpec::ellipsoid(&a), 6);
        for m in [assemble_renorm(&y, 2, 4).unwrap(), assemble_renorm(&y.scale(c), 2, 4).unwrap()] {
            let g = ellipse_g(&a);
            let mut v = g.coeffs().to_vec();
            v[0] = -1.0;
            let r = (m.entries() * DVector::from_vec(v)).amax() / m.norm_inf();
            prop_assert!(r < 1e-12, "residual {r}");
        }
    }

    #[test]
    fn boundary_vector_annihilates_renorm_matrix(a in pd2(), t in prop::collection::vec(-0.2f64..0.2, 2)) {
        // a translated ellipse with the origin inside: g = (x-t)^T A (x-t) rescaled so g(0) = 0
        let region = RegionSpec::ellipsoid(&a).translated(t.clone()).unwrap();
        let y = exact(&region, 6);
        let q = ellipse_g(&a).compose_affine(&DMatrix::identity(2, 2), &[-t[0], -t[1]]).unwrap();
        let c0 = q.coeffs()[0];
        prop_assume!(c0 < 0.9);
        // q = 1 on the boundary; h = (q - c0) / (1 - c0) has h(0) = 0 and h = 1 there
        let mut v: Vec<f64> = q.coeffs().iter().map(|c| c / (1.0 - c0)).collect();
        v[0] = -1.0;
        let m = assemble_renorm(&y, 2, 4).unwrap();
        let r = (m.entries() * DVector::from_vec(v)).amax() / m.norm_inf();
        prop_assert!(r < 1e-8, "residual {r}");
    }

    #[test]
    fn recovery_is_scale_invariant_and_honest(a in pd2(), c in 0.01f64..100.0) {
        let y = exact(&RegionSpec::ellipsoid(&a), 6);
        let r1 = recover_boundary(&y, 2, DEFAULT_RANK_TOL).unwrap();
        let r2 = recover_boundary(&y.scale(c), 2, DEFAULT_RANK_TOL).unwrap();
        for (u, v) in r1.polynomial.coeffs().iter().zip(r2.polynomial.coeffs()) {
            prop_assert!((u - v).abs() < 1e-12 * u.abs().max(1.0));
        }
        let m = assemble_renorm(&y, 2, 4).unwrap();
        prop_assert!((r1.residual_against(&m).unwrap() - r1.residual).abs() <= f64::EPSILON * r1.residual.max(1e-300));
        let min = recover_min_order(&y, 2, DEFAULT_RANK_TOL).unwrap();
        for (u, v) in r1.polynomial.coeffs().iter().zip(min.polynomial.coeffs()) {
            prop_assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_weight_expdensity_shares_kernel(a in pd2()) {
        let y = exact(&RegionSpec::ellipsoid(&a), 6);
        let zero = DensePolynomial::zeros(2, 1).unwrap();
        let me = assemble_expdensity(&y, 2, 4, &zero).unwrap();
        let mut v = ellipse_g(&a).coeffs().to_vec();
        v[0] = -1.0;
        let r = (me.entries() * DVector::from_vec(v)).amax() / me.norm_inf();
        prop_assert!(r < 1e-12);
    }
}

fn mi(e: &[u32]) -> MultiIndex {
    MultiIndex::new(e.to_vec()).unwrap()
}

#[test]
fn dilation_and_translation_covariance() {
    for lambda in [0.5, 2.0] {
        let base = exact(&RegionSpec::cuboid(vec![0.0, -1.0], vec![1.0, 2.0]), 5);
        let big = exact(&RegionSpec::cuboid(vec![0.0, -lambda], vec![lambda, 2.0 * lambda]), 5);
        for (a, v) in base.iter() {
            let w = big.get(a).unwrap();
            assert!((w - lambda.powi(2 + a.degree() as i32) * v).abs() < 1e-12 * w.abs().max(1.0));
        }
    }
    let t = vec![0.4, -0.3];
    let shifted = RegionSpec::disk(1.0).translated(t.clone()).unwrap();
    let by_pushforward = exact(&RegionSpec::disk(1.0), 4).translate(&t).unwrap();
    let by_quadrature = moments_indicator(&shifted, 4, MomentMethod::Quadrature { tol: 1e-12 }).unwrap();
    for ((a, u), v) in by_pushforward.iter().zip(by_quadrature.values()) {
        assert!((u - v).abs() < 1e-10, "{a}");
    }
}

#[test]
fn quasi_homogeneous_scaling_of_gaussian_moments() {
    // g = c x^2: y_α(λ^u c) = λ y_α(c) with u = -2/(1+α)
    for lambda in [0.5f64, 2.0] {
        for alpha in [0u32, 2, 4] {
            let u = -2.0 / (1.0 + alpha as f64);
            let g = |c: f64| DensePolynomial::from_terms(1, 2, &[(&[2], c)]).unwrap();
            let at = |c: f64| {
                moments_exp_global(&g(c), alpha as usize, 1e-12, DEFAULT_BOX_GROWTH_LIMIT)
                    .unwrap()
                    .get(&mi(&[alpha]))
                    .unwrap()
            };
            let c = 1.3;
            let lhs = at(lambda.powf(u) * c);
            assert!((lhs - lambda * at(c)).abs() < 1e-10 * lhs, "λ={lambda}, α={alpha}");
        }
    }
}

#[test]
fn stokes_residuals_vanish_to_order_2d() {
    let a = DMatrix::from_row_slice(2, 2, &[3.0, -0.4, -0.4, 1.5]);
    let y = exact(&RegionSpec::ellipsoid(&a), 6);
    assert!(max_abs(&stokes_residual(&y, &ellipse_g(&a), 4).unwrap()) < 1e-8 * y.mass());
}

#[test]
fn determinateness_closure_on_sublevel_fixtures() {
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let ellipse = exact(&RegionSpec::ellipsoid(&a).translated(vec![0.2, -0.1]).unwrap(), 10);
    // {x1^4 + x2^4 + x1^2 - x1 x2 < 1}, moments by quadrature
    let quartic = DensePolynomial::from_terms(2, 4, &[(&[4, 0], 1.0), (&[0, 4], 1.0), (&[2, 0], 1.0), (&[1, 1], -1.0)])
        .unwrap();
    let bbox = [[-1.5, 1.5], [-1.5, 1.5]];
    let quartic_y = moments_sublevel(&quartic, 1.0, &bbox, None, 16, 1e-14).unwrap();
    for (oracle, d, tol) in [(ellipse, 2usize, 1e-10), (quartic_y, 4, 1e-9)] {
        let top = 3 * d + 4;
        let targets: Vec<MultiIndex> = oracle.iter().filter(|(b, _)| b.degree() > 3 * d).map(|(b, _)| b.clone()).collect();
        assert_eq!(oracle.max_order(), top);
        let ext = extend_moments(&oracle.truncate(3 * d).unwrap(), d, &targets, tol).unwrap();
        assert!(ext.warnings.is_empty(), "{:?}", ext.warnings);
        for t in &targets {
            let (o, v) = (oracle.get(t).unwrap(), ext.get(t).unwrap());
            assert!((v - o).abs() <= 10.0 * tol * o.abs().max(1.0), "d={d} {t}: {v} vs {o}");
        }
    }
}

#[test]
fn annulus_is_not_a_sublevel_fixture() {
    // its boundary polynomial has {g < 1} = inner disk plus an unbounded exterior
    let y = exact(&RegionSpec::annulus(2.0 / 3.0).unwrap(), 12);
    let err = extend_moments(&y, 4, &[mi(&[14, 0])], 1e-10).unwrap_err();
    assert_eq!(err.kind(), "unbounded-region");
    let rep = recover_boundary(&y, 4, DEFAULT_RANK_TOL).unwrap();
    assert!(rep.notes.iter().any(|n| n.contains("unbounded")));
}

#[test]
fn extension_is_idempotent_on_prefix_targets() {
    let y = exact(&RegionSpec::disk(1.0), 6);
    let prefix: Vec<MultiIndex> = y.iter().map(|(a, _)| a.clone()).collect();
    let ext = extend_moments(&y, 2, &prefix, 1e-11).unwrap();
    for (a, v) in y.iter() {
        assert_eq!(ext.get(a), Some(v));
    }
    assert_eq!(ext.table.len(), y.values().len());
    for (a, c) in &ext.checked {
        assert!((c.extended - c.oracle).abs() < 1e-9, "{a}");
    }
}
