//! Fundamental form, states, and the metric matrix `g(z)` they induce.
//!
//! Convention: `g_{jk} = φ(ω_k* ω_j)` with `ω_j = A(z)⁻¹A_j`, so the quadratic
//! form `Σ v_j g_{jk} conj(v_k)` equals `φ((A⁻¹(z)A(v))* A⁻¹(z)A(v))`.

use crate::error::{GeometryError, Result};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::pencil::{MatrixTuple, PencilPoint, DEFAULT_SINGULAR_TOL};

/// Tolerance on the normalization and positivity of a state.
pub const STATE_TOL: f64 = 1e-12;
/// `g` is positive definite when `λ_min > PD_REL_TOL · ‖g‖₂`.
pub const PD_REL_TOL: f64 = 1e-10;

/// A positive normalized linear functional on `k×k` matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum StateFunctional {
    /// `Tr(a)/k`.
    NormalizedTrace,
    /// `⟨a x, x⟩` for a unit vector `x`.
    Vector(CVector),
    /// `Tr(ρ a)` for a density matrix `ρ`.
    Density(CMatrix),
}

impl StateFunctional {
    pub fn trace() -> Self {
        Self::NormalizedTrace
    }

    pub fn vector(x: CVector) -> Result<Self> {
        let s = Self::Vector(x);
        s.validate(None)?;
        Ok(s)
    }

    pub fn density(rho: CMatrix) -> Result<Self> {
        let s = Self::Density(rho);
        s.validate(None)?;
        Ok(s)
    }

    /// Unit vector state, normalizing `x` first.
    pub fn vector_normalized(x: &CVector) -> Result<Self> {
        let n = x.norm();
        if n == 0.0 {
            return Err(GeometryError::InvalidState("zero vector".into()));
        }
        Self::vector(x.unscale(n))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::NormalizedTrace => "trace",
            Self::Vector(_) => "vector",
            Self::Density(_) => "density",
        }
    }

    /// Checks `φ(I) = 1` and positivity; with `Some(k)` also the dimension.
    pub fn validate(&self, k: Option<usize>) -> Result<()> {
        match self {
            Self::NormalizedTrace => Ok(()),
            Self::Vector(x) => {
                if let Some(k) = k {
                    if x.len() != k {
                        return Err(GeometryError::DimensionMismatch {
                            expected: k,
                            actual: x.len(),
                        });
                    }
                }
                if (x.norm() - 1.0).abs() > STATE_TOL {
                    return Err(GeometryError::InvalidState(format!(
                        "vector state needs a unit vector, norm = {}",
                        x.norm()
                    )));
                }
                Ok(())
            }
            Self::Density(rho) => {
                if !rho.is_square() {
                    return Err(GeometryError::InvalidState("density must be square".into()));
                }
                if let Some(k) = k {
                    if rho.nrows() != k {
                        return Err(GeometryError::DimensionMismatch {
                            expected: k,
                            actual: rho.nrows(),
                        });
                    }
                }
                let herm_defect = linalg::frobenius(&(rho - rho.adjoint()));
                if herm_defect > STATE_TOL * (1.0 + linalg::frobenius(rho)) {
                    return Err(GeometryError::InvalidState("density is not Hermitian".into()));
                }
                let tr = rho.trace();
                if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
                    return Err(GeometryError::InvalidState(format!(
                        "density trace is {tr}, expected 1"
                    )));
                }
                let lo = linalg::hermitian_eigenvalues(&linalg::hermitian_part(rho))[0];
                if lo < -STATE_TOL {
                    return Err(GeometryError::InvalidState(format!(
                        "density has negative eigenvalue {lo:e}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// `φ(a)`.
    pub fn eval(&self, a: &CMatrix) -> C64 {
        match self {
            Self::NormalizedTrace => a.trace() / a.nrows() as f64,
            Self::Vector(x) => linalg::inner(&(a * x), x),
            Self::Density(rho) => (rho * a).trace(),
        }
    }

    /// `φ(a* b)` without forming the product when the state allows it.
    pub fn pair(&self, a: &CMatrix, b: &CMatrix) -> C64 {
        match self {
            Self::NormalizedTrace => {
                let s: C64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
                s / a.nrows() as f64
            }
            Self::Vector(x) => linalg::inner(&(b * x), &(a * x)),
            Self::Density(rho) => (rho * a.adjoint() * b).trace(),
        }
    }
}

/// The metric matrix at one point with positivity diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSample {
    pub z: PencilPoint,
    pub g: CMatrix,
    pub min_eigenvalue: f64,
    pub positive_definite: bool,
}

impl MetricSample {
    /// Symmetrizes `g` and fills in the eigenvalue diagnostics.
    pub fn from_matrix(z: PencilPoint, g: CMatrix) -> Self {
        let g = linalg::hermitian_part(&g);
        let ev = linalg::hermitian_eigenvalues(&g);
        let min_eigenvalue = ev[0];
        let norm = ev.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        Self {
            z,
            g,
            min_eigenvalue,
            positive_definite: min_eigenvalue > PD_REL_TOL * norm,
        }
    }

    /// Scalar metric `g(z) = value`, the `n = 1` case.
    pub fn scalar(z: PencilPoint, value: f64) -> Self {
        Self::from_matrix(z, CMatrix::from_element(1, 1, C64::new(value, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    /// `‖g‖₂`.
    pub fn norm(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.g)
            .iter()
            .fold(0.0f64, |m, e| m.max(e.abs()))
    }

    /// `det g` (real for Hermitian `g`).
    pub fn det(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.g).iter().product()
    }

    /// `Σ_{jk} v_j g_{jk} conj(v_k)`, the squared speed of tangent vector `v`.
    pub fn quadratic_form(&self, v: &[C64]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for (j, vj) in v.iter().enumerate() {
            for (k, vk) in v.iter().enumerate() {
                acc += vj * self.g[(j, k)] * vk.conj();
            }
        }
        acc.re
    }
}

/// `Ω_{jk}(z) = ω_j(z)* ω_k(z)` for all index pairs.
pub fn fundamental_form(tuple: &MatrixTuple, z: &PencilPoint) -> Result<Vec<Vec<CMatrix>>> {
    let omega = tuple.maurer_cartan_coeffs(z)?;
    Ok(omega
        .iter()
        .map(|wj| omega.iter().map(|wk| wj.adjoint() * wk).collect())
        .collect())
}

/// `g_{jk}(z) = φ(A_k*(A⁻¹(z))*A⁻¹(z)A_j)`, symmetrized.
pub fn metric_matrix(
    tuple: &MatrixTuple,
    z: &PencilPoint,
    state: &StateFunctional,
) -> Result<MetricSample> {
    metric_matrix_with_tol(tuple, z, state, DEFAULT_SINGULAR_TOL)
}

pub fn metric_matrix_with_tol(
    tuple: &MatrixTuple,
    z: &PencilPoint,
    state: &StateFunctional,
    singular_tol: f64,
) -> Result<MetricSample> {
    state.validate(Some(tuple.dim()))?;
    let omega = tuple.maurer_cartan_coeffs_with_tol(z, singular_tol)?;
    Ok(MetricSample::from_matrix(
        z.clone(),
        metric_from_coeffs(&omega, state),
    ))
}

pub(crate) fn metric_from_coeffs(omega: &[CMatrix], state: &StateFunctional) -> CMatrix {
    let n = omega.len();
    CMatrix::from_fn(n, n, |j, k| state.pair(&omega[k], &omega[j]))
}

/// Smallest eigenvalue of `G_{jk} = φ(A_j* A_k)`; positive exactly when the
/// state is faithful on the span of the tuple.
pub fn faithfulness_check(state: &StateFunctional, tuple: &MatrixTuple) -> Result<f64> {
    state.validate(Some(tuple.dim()))?;
    let a = tuple.matrices();
    let n = a.len();
    let gram = CMatrix::from_fn(n, n, |j, k| state.pair(&a[j], &a[k]));
    Ok(linalg::hermitian_eigenvalues(&linalg::hermitian_part(&gram))[0])
}

/// `max_{j<k} ‖[ω_j(z), ω_k(z)]‖_F` for a normalized tuple.
pub fn kahler_defect(tuple: &MatrixTuple, z: &PencilPoint) -> Result<f64> {
    if !tuple.is_normalized() {
        return Err(GeometryError::NotNormalized);
    }
    let omega = tuple.maurer_cartan_coeffs(z)?;
    let mut worst: f64 = 0.0;
    for j in 0..omega.len() {
        for k in j + 1..omega.len() {
            worst = worst.max(linalg::frobenius(&linalg::commutator(&omega[j], &omega[k])));
        }
    }
    Ok(worst)
}

/// Finite-difference defect of the Kähler condition `∂_i g_{jk} = ∂_j g_{ik}`
/// for `φ(Ω_A)`, using central differences of step `h` in every real
/// direction. The error is `O(h²)` when the metric is closed.
pub fn closedness_defect(
    tuple: &MatrixTuple,
    z: &PencilPoint,
    state: &StateFunctional,
    h: f64,
) -> Result<f64> {
    let n = tuple.len();
    // d[i] = ∂_i g as an n×n matrix.
    let mut d = Vec::with_capacity(n);
    for i in 0..n {
        let zi = z.coords()[i];
        let g = |dz: C64| metric_matrix(tuple, &z.with(i, zi + dz), state).map(|m| m.g);
        let gx = (g(C64::new(h, 0.0))? - g(C64::new(-h, 0.0))?).unscale(2.0 * h);
        let gy = (g(C64::new(0.0, h))? - g(C64::new(0.0, -h))?).unscale(2.0 * h);
        d.push((gx - gy * C64::new(0.0, 1.0)).unscale(2.0));
    }
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                worst = worst.max((d[i][(j, k)] - d[j][(i, k)]).norm());
            }
        }
    }
    Ok(worst)
}
