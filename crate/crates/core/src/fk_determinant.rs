//! Fuglede–Kadison determinants, φ-singular points, the dihedral pencil's
//! integral determinant and logarithmic potentials.

use std::f64::consts::{PI, TAU};

use crate::error::{GeometryError, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::pencil::{MatrixTuple, PencilPoint, DEFAULT_SINGULAR_TOL};
use crate::quadrature::{self, LogSingularity, QuadOptions};

/// Singular values at or below this count as exact zeros.
pub const UNDERFLOW_TOL: f64 = 1e-300;
/// `fk_det(A(z)) ≤ PHI_SINGULAR_TOL` marks a φ-singular point.
pub const PHI_SINGULAR_TOL: f64 = 1e-12;
/// An exponent below this is reported as a vanishing determinant.
pub const LOG_DIVERGENCE_CUTOFF: f64 = -1e3;

/// `exp((1/k)Σ log σ_i(x))` for a `k×k` matrix, i.e. `|det x|^{1/k}`.
pub fn fk_det(x: &CMatrix) -> f64 {
    let sv = linalg::singular_values(x);
    if sv.is_empty() {
        return 1.0;
    }
    if sv.iter().any(|&s| s <= UNDERFLOW_TOL) {
        return 0.0;
    }
    (sv.iter().map(|s| s.ln()).sum::<f64>() / sv.len() as f64).exp()
}

/// Whether `A(z)` has vanishing FK determinant. Besides the threshold on
/// `fk_det`, a pencil value flagged singular by the relative singular-value
/// test also counts: round-off keeps exact zeros from reaching the threshold.
pub fn phi_singular(tuple: &MatrixTuple, z: &PencilPoint) -> Result<bool> {
    let value = tuple.eval(z)?;
    if fk_det(&value) <= PHI_SINGULAR_TOL {
        return Ok(true);
    }
    tuple.in_joint_spectrum(z)
}

/// Coefficients of `1 − z₁² − z₂² − 2z₁z₂ cos θ = a + b cos θ`.
pub fn dihedral_symbol(z1: C64, z2: C64) -> (C64, C64) {
    (C64::new(1.0, 0.0) - z1 * z1 - z2 * z2, -2.0 * z1 * z2)
}

/// `exp((1/4π)∫₀^{2π} log|1 − z₁² − z₂² − 2z₁z₂ cos θ| dθ)`.
///
/// Real zeros of the integrand's argument are removed by subtracting their
/// `log|θ − θ₀|` terms and integrating those in closed form.
pub fn dihedral_fk_det(z1: C64, z2: C64) -> Result<f64> {
    dihedral_fk_det_with(z1, z2, &QuadOptions::default())
}

pub fn dihedral_fk_det_with(z1: C64, z2: C64, opts: &QuadOptions) -> Result<f64> {
    if !(linalg::is_finite(z1) && linalg::is_finite(z2)) {
        return Err(GeometryError::InvalidInput("non-finite coordinate".into()));
    }
    let exponent = dihedral_log_fk_det(z1, z2, opts);
    if exponent < LOG_DIVERGENCE_CUTOFF {
        Ok(0.0)
    } else {
        Ok(exponent.exp())
    }
}

/// `½·mean log|a + b cos θ|`, possibly `−∞`.
fn dihedral_log_fk_det(z1: C64, z2: C64, opts: &QuadOptions) -> f64 {
    let (a, b) = dihedral_symbol(z1, z2);
    if b.norm() <= UNDERFLOW_TOL {
        return 0.5 * a.norm().ln();
    }
    // a + b cos θ = b (cos θ − c)
    let c = -a / b;
    let singular = real_cosine_roots(c);
    let integrand = |t: f64| (C64::new(t.cos(), 0.0) - c).norm().ln();
    let value = if singular.is_empty() {
        quadrature::integrate(integrand, 0.0, TAU, opts).value
    } else {
        quadrature::integrate_log_singular(integrand, 0.0, TAU, &singular, opts).value
    };
    0.5 * (b.norm().ln() + value / TAU)
}

/// Zeros of `cos θ − c` in `[0, 2π]` with their log weights.
fn real_cosine_roots(c: C64) -> Vec<LogSingularity> {
    if c.im.abs() > 1e-14 * c.norm().max(1.0) || c.re.abs() > 1.0 {
        return Vec::new();
    }
    let x = c.re;
    if x == 1.0 {
        vec![
            LogSingularity { at: 0.0, weight: 2.0 },
            LogSingularity { at: TAU, weight: 2.0 },
        ]
    } else if x == -1.0 {
        vec![LogSingularity { at: PI, weight: 2.0 }]
    } else {
        let t0 = x.acos();
        vec![
            LogSingularity { at: t0, weight: 1.0 },
            LogSingularity { at: TAU - t0, weight: 1.0 },
        ]
    }
}

/// A probability measure on `ℂ`.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralMeasure {
    Atomic(Vec<(C64, f64)>),
    /// Normalized arclength on a circle.
    UniformCircle { center: C64, radius: f64 },
}

impl SpectralMeasure {
    pub fn atomic(atoms: Vec<(C64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(GeometryError::InvalidInput("measure has no atoms".into()));
        }
        let mut total = 0.0;
        for &(l, w) in &atoms {
            if !linalg::is_finite(l) || !(w >= 0.0) {
                return Err(GeometryError::InvalidInput(format!(
                    "invalid atom {l} with weight {w}"
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(GeometryError::InvalidInput(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self::Atomic(atoms))
    }

    pub fn uniform_circle(center: C64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !linalg::is_finite(center) {
            return Err(GeometryError::InvalidInput("circle needs a positive radius".into()));
        }
        Ok(Self::UniformCircle { center, radius })
    }

    /// `⟨E(·)x, x⟩` for a normal matrix, read off its Schur form.
    pub fn from_normal_matrix(v: &CMatrix, x: &CVector) -> Result<Self> {
        if !v.is_square() || x.len() != v.nrows() {
            return Err(GeometryError::DimensionMismatch {
                expected: v.nrows(),
                actual: x.len(),
            });
        }
        let defect = linalg::frobenius(&linalg::commutator(v, &v.adjoint()));
        if defect > 1e-10 * (1.0 + linalg::frobenius(v)).powi(2) {
            return Err(GeometryError::InvalidInput("matrix is not normal".into()));
        }
        let (q, t) = v.clone().schur().unpack();
        let coeffs = q.adjoint() * x.unscale(x.norm());
        let atoms = (0..v.nrows())
            .map(|i| (t[(i, i)], coeffs[i].norm_sqr()))
            .collect::<Vec<_>>();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        Self::atomic(atoms.into_iter().map(|(l, w)| (l, w / total)).collect())
    }
}

/// `∫ log(1/|λ − z|) dμ(λ)`; `+∞` on an atom of positive weight.
pub fn log_potential(mu: &SpectralMeasure, z: C64) -> f64 {
    match mu {
        SpectralMeasure::Atomic(atoms) => {
            let mut acc = 0.0;
            for &(l, w) in atoms {
                if w == 0.0 {
                    continue;
                }
                let d = (l - z).norm();
                if d == 0.0 {
                    return f64::INFINITY;
                }
                acc -= w * d.ln();
            }
            acc
        }
        &SpectralMeasure::UniformCircle { center, radius } => {
            let u = z - center;
            // Start the period at arg(u) so a point on the circle sits at the ends.
            let t0 = u.im.atan2(u.re);
            let integrand =
                |t: f64| (C64::from_polar(radius, t) - u).norm().ln();
            let opts = QuadOptions::default();
            let on_circle = (u.norm() - radius).abs() <= 1e-14 * radius;
            let mean = if on_circle {
                let ends = [
                    LogSingularity { at: t0, weight: 1.0 },
                    LogSingularity { at: t0 + TAU, weight: 1.0 },
                ];
                quadrature::integrate_log_singular(integrand, t0, t0 + TAU, &ends, &opts).value
            } else {
                quadrature::integrate(integrand, t0, t0 + TAU, &opts).value
            } / TAU;
            -mean
        }
    }
}

/// Closed form of the uniform-circle potential: `−log max(ρ, |z − c|)`.
pub fn circle_potential_closed_form(center: C64, radius: f64, z: C64) -> f64 {
    -(z - center).norm().max(radius).ln()
}

/// `fk_det` of the pencil value, together with the relative singular-value
/// test used by the joint spectrum.
pub fn fk_det_at(tuple: &MatrixTuple, z: &PencilPoint) -> Result<(f64, bool)> {
    let value = tuple.eval(z)?;
    let sv = linalg::singular_values(&value);
    let invertible = sv.last().copied().unwrap_or(0.0) > DEFAULT_SINGULAR_TOL * sv[0];
    Ok((fk_det(&value), invertible))
}
