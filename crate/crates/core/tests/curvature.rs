mod common;

use common::*;
use rand::Rng;
use resolvent_geometry::curvature::{
    default_fd_step, glk_metric_det, ricci_tensor_fd, ricci_trace_state, ricci_vector_state,
    spanning_coordinates, CurvatureMethod, MetricField, PencilMetric, TraceMetric,
    VectorStateMetric,
};
use resolvent_geometry::linalg::{self, identity, CMatrix, CVector, C64};
use resolvent_geometry::operator_gallery::AnalyticOperator;
use resolvent_geometry::{MatrixTuple, PencilPoint, StateFunctional};

/// `(V − z)⁻¹x` by a dense solve.
fn resolve(v: &CMatrix, x: &CVector, z: C64) -> CVector {
    let shifted = v - identity(v.nrows()) * z;
    linalg::solve(&shifted, x).unwrap()
}

/// `−¼Δ log ‖(V − z)⁻¹x‖²` by the five-point Laplacian. Increments of `g` come
/// from the resolvent identity `r(z + δ) − r(z) = δ(V − z − δ)⁻¹r(z)`, so the
/// second difference is free of cancellation even for small `h`.
fn fd_vector_ricci(v: &CMatrix, x: &CVector, z: C64, h: f64) -> f64 {
    let r = resolve(v, x, z);
    let g = r.norm_squared();
    let mut acc = 0.0;
    for d in [c(h, 0.0), c(-h, 0.0), c(0.0, h), c(0.0, -h)] {
        let dr = resolve(v, &r, z + d) * d;
        let dg = 2.0 * linalg::inner(&dr, &r).re + dr.norm_squared();
        acc += (dg / g).ln_1p();
    }
    -0.25 * acc / (h * h)
}

#[test]
fn eigenvectors_are_flat() {
    let mut r = rng(30);
    for _ in 0..50 {
        let k = r.random_range(2..=5);
        let s = well_conditioned(&mut r, k, 0.5);
        let d: Vec<C64> = (0..k).map(|_| random_complex(&mut r)).collect();
        let v = &s * linalg::diagonal(&d) * linalg::inverse(&s).unwrap();
        let i = r.random_range(0..k);
        let x = s.column(i).into_owned();
        let x = x.unscale(x.norm());
        let z = random_complex(&mut r) * c(3.0, 0.0);
        if d.iter().any(|l| (l - z).norm() < 0.05) {
            continue;
        }
        let rc = ricci_vector_state(&v, &x, z).unwrap();
        assert!(rc.abs() <= 1e-10, "{rc}");
    }
}

#[test]
fn upper_triangular_trace_curvature() {
    let mut r = rng(31);
    for _ in 0..50 {
        let (a11, a12, a22) = (random_complex(&mut r), random_complex(&mut r), random_complex(&mut r));
        let v = CMatrix::from_row_slice(2, 2, &[a11, a12, c(0.0, 0.0), a22]);
        let z = random_complex(&mut r) * c(3.0, 0.0);
        if (z - a11).norm() < 0.05 || (z - a22).norm() < 0.05 {
            continue;
        }
        let den = (z - a11).norm_sqr() + (z - a22).norm_sqr() + a12.norm_sqr();
        let want = -((a11 - a22).norm_sqr() + 2.0 * a12.norm_sqr()) / (den * den);
        let got = ricci_trace_state(&v, z).unwrap();
        assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
    }
}

#[test]
fn analytic_matches_accurate_finite_differences() {
    let mut r = rng(32);
    let h = 1e-4;
    for _ in 0..20 {
        let raw = random_matrix(&mut r, 4);
        let v = raw.unscale(linalg::spectral_norm(&raw) * 1.05);
        let x = random_unit_vector(&mut r, 4);
        let z = c(3.0, 2.0);
        let analytic = ricci_vector_state(&v, &x, z).unwrap();
        let fd = fd_vector_ricci(&v, &x, z, h);
        assert!((analytic - fd).abs() <= 10.0 * h * h * analytic.abs(), "{analytic} vs {fd}");
    }
}

#[test]
fn finite_difference_error_is_second_order() {
    let mut r = rng(33);
    let v = random_matrix(&mut r, 3);
    let x = random_unit_vector(&mut r, 3);
    let eig = v.clone().schur().unpack().1.diagonal()[0];
    let z = eig + c(0.12, 0.16);
    let analytic = ricci_vector_state(&v, &x, z).unwrap();
    let field = VectorStateMetric::new(&v, x).unwrap();
    let hs = [1e-2, 1e-3, 1e-4];
    let errs: Vec<f64> = hs
        .iter()
        .map(|&h| {
            let s = ricci_tensor_fd(&field, &PencilPoint::new(vec![z]).unwrap(), h).unwrap();
            assert_eq!(s.method, CurvatureMethod::FiniteDifference);
            (s.scalar_ricci.unwrap() - analytic).abs()
        })
        .collect();
    let slope = loglog_slope(&hs, &errs);
    assert!((slope - 2.0).abs() <= 0.3, "slope {slope}, errors {errs:?}");
}

#[test]
fn vector_state_curvature_is_non_positive() {
    let mut r = rng(34);
    let mut done = 0;
    while done < 200 {
        let k = r.random_range(1..=6);
        let v = random_matrix(&mut r, k);
        let x = random_unit_vector(&mut r, k);
        let z = random_complex(&mut r) * c(2.0, 0.0);
        match ricci_vector_state(&v, &x, z) {
            Ok(rc) => assert!(rc <= 1e-10, "{rc}"),
            Err(_) => continue,
        }
        done += 1;
    }
    // Gallery operators go through the same closed form.
    let j = AnalyticOperator::jordan(4).unwrap();
    assert!(ricci_vector_state(&j, &j.distinguished_vector(), c(0.3, 0.1)).unwrap() < 0.0);
    let vol = AnalyticOperator::volterra(128).unwrap();
    assert!(ricci_vector_state(&vol, &vol.distinguished_vector(), c(0.5, 0.5)).unwrap() <= 1e-10);
    assert!(ricci_vector_state(&j, &CVector::zeros(4), c(1.0, 0.0)).is_err());
    assert!(ricci_vector_state(&j, &j.distinguished_vector(), c(0.0, 0.0)).is_err());
}

#[test]
fn scalar_tuple_is_flat() {
    let t = MatrixTuple::new(vec![identity(1)]).unwrap();
    let m = PencilMetric::new(t, StateFunctional::trace()).unwrap();
    let z = PencilPoint::from_real(&[2.0]);
    let s = ricci_tensor_fd(&m, &z, default_fd_step(&z)).unwrap();
    assert!(s.scalar_ricci.unwrap().abs() < 1e-6);
    assert_eq!(s.step, Some(2e-4));
}

#[test]
fn non_scalar_trace_metric_is_negative() {
    let v = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.5, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let field = TraceMetric::new(v.clone()).unwrap();
    let z = PencilPoint::from_real(&[3.0]);
    let fd = ricci_tensor_fd(&field, &z, default_fd_step(&z)).unwrap().scalar_ricci.unwrap();
    let analytic = ricci_trace_state(&v, c(3.0, 0.0)).unwrap();
    assert!(fd < 0.0 && analytic < 0.0);
    assert!((fd - analytic).abs() < 1e-6 * analytic.abs().max(1e-3));
}

#[test]
fn scalar_matrices_are_rigid() {
    let mut r = rng(35);
    for _ in 0..20 {
        let lambda = random_complex(&mut r);
        let v = identity(3) * lambda;
        for _ in 0..5 {
            let z = random_complex(&mut r) * c(3.0, 0.0);
            if (z - lambda).norm() < 0.05 {
                continue;
            }
            assert!(ricci_trace_state(&v, z).unwrap().abs() < 1e-10);
            let x = random_unit_vector(&mut r, 3);
            assert!(ricci_vector_state(&v, &x, z).unwrap().abs() < 1e-10);
        }
    }
    // Conversely, a non-scalar matrix is curved at some of five well-separated points.
    for _ in 0..20 {
        let v = random_matrix(&mut r, 3);
        let worst = [c(3.0, 0.0), c(-3.0, 0.0), c(0.0, 3.0), c(0.0, -3.0), c(2.0, 2.0)]
            .iter()
            .map(|&z| ricci_trace_state(&v, z).unwrap().abs())
            .fold(0.0, f64::max);
        let spread = (&v - identity(3) * (v.trace() / 3.0)).norm();
        assert!(worst >= 1e-8 || spread < 1e-6);
    }
}

fn standard_basis(k: usize) -> MatrixTuple {
    let mats = (0..k * k)
        .map(|m| {
            let mut e = CMatrix::zeros(k, k);
            e[(m / k, m % k)] = c(1.0, 0.0);
            e
        })
        .collect();
    MatrixTuple::new(mats).unwrap()
}

#[test]
fn glk_determinant_examples() {
    let t = standard_basis(2);
    let at_identity = glk_metric_det(&t, &PencilPoint::from_real(&[1.0, 0.0, 0.0, 1.0])).unwrap();
    assert!((at_identity.det_g - 1.0).abs() < 1e-12);
    assert!((at_identity.predicted - 1.0).abs() < 1e-12);
    assert_eq!(at_identity.trace_scale, 2);
    let alpha = spanning_coordinates(&t);
    // Columns of α are the unit vectors in some order: a permutation matrix.
    assert!((&alpha * alpha.adjoint() - identity(4)).norm() < 1e-15);

    let diag = glk_metric_det(&t, &PencilPoint::from_real(&[2.0, 0.0, 0.0, 1.0])).unwrap();
    assert!((diag.predicted - 1.0 / 16.0).abs() < 1e-14);
    assert!(diag.relative_gap() < 1e-10);

    let mut r = rng(36);
    let z = resolvent_point(&mut r, &t, 1e-2);
    let base = glk_metric_det(&t, &z).unwrap().det_g;
    let lambda = c(0.7, -1.1);
    let scaled = PencilPoint::new(z.coords().iter().map(|w| w * lambda).collect()).unwrap();
    let got = glk_metric_det(&t, &scaled).unwrap().det_g;
    assert!((got / base - lambda.norm().powi(-8)).abs() < 1e-9 * lambda.norm().powi(-8));

    // Too few members, or a dependent family.
    let short = MatrixTuple::new(vec![identity(2)]).unwrap();
    assert!(glk_metric_det(&short, &PencilPoint::from_real(&[1.0])).is_err());
}

#[test]
fn spanning_tuples_are_ricci_flat() {
    let mut r = rng(37);
    for _ in 0..10 {
        let t = random_tuple(&mut r, 2, 4);
        let z = resolvent_point(&mut r, &t, 0.05);
        let glk = glk_metric_det(&t, &z).unwrap();
        assert!(glk.relative_gap() <= 1e-8, "{glk:?}");
    }
    // The stencil error grows like the inverse fourth power of the distance to
    // the spectrum, so the points keep cond A(z) <= 10.
    let m = PencilMetric::new(standard_basis(2), StateFunctional::trace()).unwrap();
    assert_eq!(m.dim(), 4);
    for _ in 0..10 {
        let z = resolvent_point(&mut r, &standard_basis(2), 0.1);
        let s = ricci_tensor_fd(&m, &z, default_fd_step(&z)).unwrap();
        assert!(s.max_abs() <= 1e-4, "{}", s.ricci);
    }
}

#[test]
fn fd_guards() {
    let t = MatrixTuple::new(vec![identity(1)]).unwrap();
    let m = PencilMetric::new(t, StateFunctional::trace()).unwrap();
    assert!(ricci_tensor_fd(&m, &PencilPoint::from_real(&[2.0]), 0.0).is_err());
    assert!(ricci_tensor_fd(&m, &PencilPoint::from_real(&[2.0, 1.0]), 1e-4).is_err());
    // One stencil point lands on the singular point 0.
    assert!(ricci_tensor_fd(&m, &PencilPoint::from_real(&[1e-4]), 1e-4).is_err());
}
