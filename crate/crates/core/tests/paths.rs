mod common;

use std::f64::consts::{SQRT_2, TAU};

use common::*;
use rand::Rng;
use resolvent_geometry::curvature::{scalar_metric, Euclidean, PencilMetric, TraceMetric, VectorStateMetric};
use resolvent_geometry::geometry_paths::{
    circle_length, distance_lower_bound, path_length, principal_part, riesz_projection,
    riesz_projection_op, winding_number, ContourSpec, Orientation, ParamPath,
};
use resolvent_geometry::linalg::{basis_vector, identity, jordan_block, real_diagonal, CMatrix, CVector, C64};
use resolvent_geometry::operator_gallery::{shift_vector_metric, AnalyticOperator, ShiftKind};
use resolvent_geometry::{GeometryError, PencilPoint, StateFunctional};

fn eigenvalues(v: &CMatrix) -> Vec<C64> {
    v.clone().schur().unpack().1.diagonal().iter().copied().collect()
}

fn unilateral_g1() -> impl resolvent_geometry::curvature::MetricField {
    scalar_metric(|z| shift_vector_metric(ShiftKind::Unilateral, z))
}

/// `∫_a^b dr/√(r² − 1)` by composite Simpson after `r = 1 + s²`, which makes
/// the integrand `2/√(2 + s²)` smooth.
fn arccosh_oracle(a: f64, b: f64) -> f64 {
    let (s0, s1) = ((a - 1.0).sqrt(), (b - 1.0).sqrt());
    let n = 2000;
    let h = (s1 - s0) / n as f64;
    let f = |s: f64| 2.0 / (2.0 + s * s).sqrt();
    let mut acc = f(s0) + f(s1);
    for i in 1..n {
        acc += f(s0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn unilateral_segment_length() {
    let g = unilateral_g1();
    let path = ParamPath::segment(c(1.0 + 1e-8, 0.0), c(2.0, 0.0)).unwrap();
    let l = path_length(&g, &path).unwrap();
    assert!(!l.divergent);
    let oracle = arccosh_oracle(1.0 + 1e-8, 2.0);
    assert!((l.value - oracle).abs() < 1e-8, "{} vs {oracle}", l.value);
    assert!(l.value <= SQRT_2);
    // The cut at 1 + 1e-8 removes arccosh(1 + 1e-8) ≈ √(2e-8) from arccosh 2.
    assert!((l.value + (1.0 + 1e-8f64).acosh() - 2f64.acosh()).abs() < 1e-8);

    // Starting on the unit circle the endpoint is improper but integrable.
    let full = ParamPath::segment(c(1.0, 0.0), c(2.0, 0.0)).unwrap();
    let l = path_length(&g, &full).unwrap();
    assert!(!l.divergent);
    assert!((l.value - 2f64.acosh()).abs() < 1e-6, "{}", l.value);
    assert!((l.value - 1.316958).abs() < 1e-6);
}

#[test]
fn eigenvector_circle_has_length_two_pi() {
    let v = real_diagonal(&[0.5, -1.0, 3.0]);
    let x = basis_vector(3, 0);
    let g = VectorStateMetric::new(&v, x.clone()).unwrap();
    for r in [1e-3, 0.1, 0.7, 1.2] {
        let path = ParamPath::circle(c(0.5, 0.0), r, 1, Orientation::CounterClockwise).unwrap();
        let l = path_length(&g, &path).unwrap();
        assert!((l.value - TAU).abs() < 1e-7, "r = {r}: {}", l.value);
        assert!((circle_length(&v, &x, r, c(0.5, 0.0)).unwrap() - TAU).abs() < 1e-9);
    }
}

#[test]
fn euclidean_lengths() {
    let path = ParamPath::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
    assert!((path_length(&Euclidean { dim: 1 }, &path).unwrap().value - 1.0).abs() < 1e-12);
    let poly = ParamPath::polyline(vec![
        PencilPoint::from_real(&[0.0, 0.0]),
        PencilPoint::from_real(&[3.0, 0.0]),
        PencilPoint::from_real(&[3.0, 4.0]),
    ])
    .unwrap();
    assert!((path_length(&Euclidean { dim: 2 }, &poly).unwrap().value - 7.0).abs() < 1e-12);
    let circ = ParamPath::circle(c(1.0, 1.0), 2.0, 2, Orientation::Clockwise).unwrap();
    assert!((path_length(&Euclidean { dim: 1 }, &circ).unwrap().value - 4.0 * TAU).abs() < 1e-9);
    assert!(matches!(
        path_length(&Euclidean { dim: 2 }, &circ),
        Err(GeometryError::DimensionMismatch { .. })
    ));
    assert!(ParamPath::circle(c(0.0, 0.0), 0.0, 1, Orientation::Clockwise).is_err());
}

#[test]
fn smooth_lengths_converge_with_tolerance() {
    use resolvent_geometry::geometry_paths::{path_length_with, LengthOptions};
    let g = TraceMetric::new(jordan_block(3) + real_diagonal(&[0.0, 1.0, 2.0])).unwrap();
    let path = ParamPath::segment(c(-1.0, 1.0), c(3.0, 0.5)).unwrap();
    let reference = path_length_with(&g, &path, &LengthOptions::with_rel_tol(1e-13)).unwrap().value;
    let mut last = f64::INFINITY;
    for tol in [1e-4, 1e-6, 1e-8, 1e-10] {
        let l = path_length_with(&g, &path, &LengthOptions::with_rel_tol(tol)).unwrap().value;
        let err = (l - reference).abs();
        assert!(err <= tol * reference);
        assert!(err <= last);
        last = err;
    }
}

#[test]
fn circle_length_examples() {
    let zero = CMatrix::zeros(1, 1);
    let one = basis_vector(1, 0);
    for r in [1e-3, 1.0, 50.0] {
        assert!((circle_length(&zero, &one, r, c(0.0, 0.0)).unwrap() - TAU).abs() < 1e-10);
    }

    let j2 = AnalyticOperator::jordan(2).unwrap();
    let l = circle_length(&j2, &basis_vector(2, 0), 1e-2, c(0.0, 0.0)).unwrap();
    assert!(l >= TAU - 1e-10 && (l - TAU).abs() < 1e-9);
    // e₂ picks up the 1/z² term and is longer.
    assert!(circle_length(&j2, &basis_vector(2, 1), 1e-2, c(0.0, 0.0)).unwrap() > 50.0);

    let v = real_diagonal(&[0.0, 5.0]);
    let x = (basis_vector(2, 0) + basis_vector(2, 1)).unscale(SQRT_2);
    let l = circle_length(&v, &x, 0.1, c(0.0, 0.0)).unwrap();
    let p0x = riesz_projection(&v, &ContourSpec::circle(c(0.0, 0.0), 0.1).unwrap()).unwrap().p0 * &x;
    assert!((p0x.norm() - 1.0 / SQRT_2).abs() < 1e-12);
    assert!(l >= TAU * p0x.norm());

    assert!(circle_length(&v, &(x.clone() * c(2.0, 0.0)), 0.1, c(0.0, 0.0)).is_err());
    assert!(circle_length(&v, &x, -1.0, c(0.0, 0.0)).is_err());
    assert!(circle_length(&v, &x, 5.0, c(0.0, 0.0)).is_err());
}

#[test]
fn distance_lower_bound_examples() {
    let mut r = rng(20);
    let t = random_tuple(&mut r, 3, 2);
    let p = resolvent_point(&mut r, &t, 1e-3);
    assert_eq!(distance_lower_bound(&t, &p, &p).unwrap(), 0.0);

    let s = resolvent_geometry::MatrixTuple::new(vec![identity(1)]).unwrap();
    let b = distance_lower_bound(
        &s,
        &PencilPoint::from_real(&[1.0]),
        &PencilPoint::from_real(&[std::f64::consts::E]),
    )
    .unwrap();
    assert!((b - 1.0).abs() < 1e-15);
    // The segment from 1 to e under 1/|z|² has length exactly 1.
    let m = PencilMetric::new(s.clone(), StateFunctional::trace()).unwrap();
    let path = ParamPath::segment(c(1.0, 0.0), c(std::f64::consts::E, 0.0)).unwrap();
    assert!((path_length(&m, &path).unwrap().value - 1.0).abs() < 1e-9);

    assert!(distance_lower_bound(&s, &PencilPoint::from_real(&[0.0]), &PencilPoint::from_real(&[1.0])).is_err());
}

#[test]
fn lower_bound_never_exceeds_polyline_lengths() {
    let mut r = rng(21);
    for case in 0..50 {
        let t = random_tuple(&mut r, 3, 2);
        let verts: Vec<PencilPoint> = (0..3).map(|_| resolvent_point(&mut r, &t, 1e-2)).collect();
        let (p, q) = (verts[0].clone(), verts[2].clone());
        let path = ParamPath::polyline(verts).unwrap();
        let m = PencilMetric::new(t.clone(), StateFunctional::trace()).unwrap();
        let l = match path_length(&m, &path) {
            Ok(l) => l,
            // A polyline clipping the joint spectrum is not a valid test case.
            Err(GeometryError::SingularPoint { .. } | GeometryError::OutOfDomain(_)) => continue,
            Err(e) => panic!("case {case}: {e}"),
        };
        let bound = distance_lower_bound(&t, &p, &q).unwrap();
        assert!(l.divergent || l.value >= bound - 1e-6, "case {case}: {} < {bound}", l.value);
    }
}

#[test]
fn winding_numbers() {
    let once = ParamPath::circle(c(0.0, 0.0), 1.0, 1, Orientation::CounterClockwise).unwrap();
    let twice = ParamPath::circle(c(0.0, 0.0), 1.0, 2, Orientation::CounterClockwise).unwrap();
    assert_eq!(winding_number(&once, c(0.0, 0.0)).unwrap(), 1);
    assert_eq!(winding_number(&twice, c(0.0, 0.0)).unwrap(), 2);
    assert_eq!(winding_number(&once, c(3.0, 0.0)).unwrap(), 0);
    let back = ParamPath::circle(c(1.0, 1.0), 0.5, 3, Orientation::Clockwise).unwrap();
    assert_eq!(winding_number(&back, c(1.2, 0.9)).unwrap(), -3);
    assert!(winding_number(&once, c(1.0, 0.0)).is_err());

    // A closed square around the origin.
    let sq = ParamPath::polyline(
        [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (1.0, 1.0)]
            .iter()
            .map(|&(a, b)| PencilPoint::new(vec![c(a, b)]).unwrap())
            .collect(),
    )
    .unwrap();
    assert_eq!(winding_number(&sq, c(0.2, -0.3)).unwrap(), 1);
    assert_eq!(winding_number(&sq, c(2.0, 0.0)).unwrap(), 0);
}

#[test]
fn length_dominates_two_pi_times_winding() {
    let mut r = rng(22);
    for case in 0..50 {
        let k = r.random_range(2..=6);
        let v = random_matrix(&mut r, k);
        let x = random_unit_vector(&mut r, k);
        let reach = eigenvalues(&v).iter().fold(0.0f64, |m, l| m.max(l.norm()));
        let radius = reach + r.random_range(0.1..1.0);
        let turns = 1 + case % 2;
        let path = ParamPath::circle(c(0.0, 0.0), radius, turns as u32, Orientation::CounterClockwise).unwrap();
        let g = VectorStateMetric::new(&v, x).unwrap();
        let l = path_length(&g, &path).unwrap();
        let slack = l.value - TAU * turns as f64;
        assert!(slack >= -1e-6, "case {case}: slack {slack}");
    }
}

#[test]
fn length_diverges_toward_an_eigenvalue() {
    let mut r = rng(23);
    let v = random_matrix(&mut r, 3);
    let eig = eigenvalues(&v);
    let lambda = eig[0];
    // Approach from the side facing away from the other eigenvalues.
    let away = eig[1..].iter().fold(c(0.0, 0.0), |acc, l| acc + (lambda - l) / (lambda - l).norm());
    let dir = if away.norm() > 1e-6 { away / away.norm() } else { c(1.0, 0.0) };
    let g = TraceMetric::new(v).unwrap();
    let start = lambda + dir * 0.5;
    let eps = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let lengths: Vec<f64> = eps
        .iter()
        .map(|&e| {
            let path = ParamPath::segment(start, lambda + dir * e).unwrap();
            path_length(&g, &path).unwrap().value
        })
        .collect();
    for w in lengths.windows(2) {
        assert!(w[1] > w[0]);
    }
    // Least-squares slope of L against log(1/ε).
    let xs: Vec<f64> = eps.iter().map(|e| (1.0 / e).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, lengths.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&lengths).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!(slope > 0.1, "slope {slope}");

    let to_eig = ParamPath::segment(start, lambda).unwrap();
    assert!(path_length(&g, &to_eig).unwrap().divergent);
}

#[test]
fn riesz_examples() {
    let j3 = jordan_block(3);
    for (center, radius) in [(c(0.0, 0.0), 0.5), (c(0.1, -0.2), 1.0), (c(0.0, 0.0), 10.0)] {
        let pair = riesz_projection(&j3, &ContourSpec::circle(center, radius).unwrap()).unwrap();
        assert!(max_abs(&(&pair.p0 - identity(3))) < 1e-10);
        let want = &j3 - identity(3) * center;
        assert!(max_abs(&(&pair.v0 - want)) < 1e-10 * radius.max(1.0));
    }

    let d = real_diagonal(&[0.0, 5.0]);
    let pair = riesz_projection(&d, &ContourSpec::circle(c(0.0, 0.0), 1.0).unwrap()).unwrap();
    assert!(max_abs(&(&pair.p0 - real_diagonal(&[1.0, 0.0]))) < 1e-12);
    assert!(max_abs(&pair.v0) < 1e-12);

    let mut r = rng(24);
    let v = random_matrix(&mut r, 4);
    let reach = eigenvalues(&v).iter().fold(0.0f64, |m, l| m.max(l.norm()));
    let pair = riesz_projection(&v, &ContourSpec::circle(c(0.0, 0.0), reach + 1.0).unwrap()).unwrap();
    assert!(max_abs(&(&pair.p0 - identity(4))) < 1e-9);
    // Enclosing everything with center 0 gives V₀ = V.
    assert!(max_abs(&(&pair.v0 - &v)) < 1e-8);

    assert!(matches!(
        riesz_projection(&d, &ContourSpec::circle(c(0.0, 0.0), 5.0).unwrap()),
        Err(GeometryError::SingularPoint { .. })
    ));
    assert!(ContourSpec::new(c(0.0, 0.0), 1.0, 4).is_err());
    assert!(ContourSpec::circle(c(0.0, 0.0), 0.0).is_err());

    let op = AnalyticOperator::jordan(4).unwrap();
    let pair = riesz_projection_op(&op, &ContourSpec::circle(c(0.0, 0.0), 1.0).unwrap()).unwrap();
    assert!(max_abs(&(&pair.v0 - jordan_block(4))) < 1e-10);
    let volterra = AnalyticOperator::volterra(32).unwrap();
    assert!(riesz_projection_op(&volterra, &ContourSpec::circle(c(0.0, 0.0), 1.0).unwrap()).is_err());
}

#[test]
fn riesz_corpus_is_idempotent_and_commuting() {
    let mut r = rng(25);
    let mut done = 0;
    while done < 100 {
        let k = r.random_range(2..=6);
        let v = random_matrix(&mut r, k) * c(2.0, 0.0);
        let eig = eigenvalues(&v);
        let center = random_complex(&mut r);
        let radius = r.random_range(0.2..2.0);
        // Keep the contour a fixed margin away from every eigenvalue.
        if eig.iter().any(|l| ((l - center).norm() - radius).abs() < 0.05) {
            continue;
        }
        let pair = riesz_projection(&v, &ContourSpec::circle(center, radius).unwrap()).unwrap();
        let p = &pair.p0;
        assert!((p * p - p).norm() <= 1e-8 * p.norm().max(1.0), "case {done}");
        assert!((p * &v - &v * p).norm() <= 1e-8 * v.norm().max(1.0) * p.norm().max(1.0), "case {done}");
        // Trace of P₀ counts the enclosed eigenvalues.
        let inside = eig.iter().filter(|l| (*l - center).norm() < radius).count();
        assert!((p.trace().re - inside as f64).abs() < 1e-8);
        done += 1;
    }
}

fn assert_terms(terms: &[CVector], want: &[CVector]) {
    assert_eq!(terms.len(), want.len());
    for (t, w) in terms.iter().zip(want) {
        assert!((t - w).norm() < 1e-10, "{t} vs {w}");
    }
}

#[test]
fn principal_part_examples() {
    let circle = ContourSpec::circle(c(0.0, 0.0), 1.0).unwrap();
    let terms = principal_part(&jordan_block(2), &basis_vector(2, 1), &circle, 16).unwrap();
    assert_terms(&terms, &[basis_vector(2, 1), basis_vector(2, 0), CVector::zeros(2)]);

    let v = real_diagonal(&[2.0, -1.0, 0.5]);
    let x = basis_vector(3, 0);
    let around = ContourSpec::circle(c(2.0, 0.0), 0.5).unwrap();
    let terms = principal_part(&v, &x, &around, 16).unwrap();
    assert_terms(&terms, &[x.clone(), CVector::zeros(3)]);

    let terms = principal_part(&jordan_block(4), &basis_vector(4, 3), &circle, 16).unwrap();
    assert_eq!(terms.len(), 5);
    assert_eq!(terms.iter().filter(|t| t.norm() > 1e-12).count(), 4);
    for (i, t) in terms.iter().take(4).enumerate() {
        assert!((t - basis_vector(4, 3 - i)).norm() < 1e-10);
    }

    // max_terms caps the sequence.
    let terms = principal_part(&jordan_block(4), &basis_vector(4, 3), &circle, 2).unwrap();
    assert_eq!(terms.len(), 2);
    assert!(principal_part(&jordan_block(4), &basis_vector(3, 0), &circle, 4).is_err());
}
