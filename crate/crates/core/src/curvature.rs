//! Ricci curvature `R_{jk} = −∂_j∂̄_k log det g` of induced metrics.
//!
//! Finite differences use the Wirtinger identities
//! `∂_j∂̄_k f = ¼(f_{x_j x_k} + f_{y_j y_k} + i(f_{x_j y_k} − f_{y_j x_k}))`
//! with `z_j = x_j + i y_j`: three-point second differences on the diagonal
//! and the four-point cross stencil
//! `f_{st} ≈ (f(+,+) − f(+,−) − f(−,+) + f(−,−))/(4h²)` off it.

use crate::error::{GeometryError, Result};
use crate::forms_metric::{self, MetricSample, StateFunctional};
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::operator_gallery::ResolventOperator;
use crate::pencil::{MatrixTuple, PencilPoint, DEFAULT_SINGULAR_TOL, GRAM_REL_TOL};

/// A Hermitian metric `z ↦ g(z)` on an open subset of `ℂⁿ`.
pub trait MetricField: Sync {
    fn dim(&self) -> usize;

    fn sample(&self, z: &PencilPoint) -> Result<MetricSample>;

    /// `log det g(z)`; fails when the determinant is not positive.
    fn log_det(&self, z: &PencilPoint) -> Result<f64> {
        let s = self.sample(z)?;
        let mut acc = 0.0;
        for e in linalg::hermitian_eigenvalues(&s.g) {
            if !(e > 0.0) {
                return Err(GeometryError::OutOfDomain(format!(
                    "metric determinant is not positive (eigenvalue {e:e})"
                )));
            }
            acc += e.ln();
        }
        Ok(acc)
    }
}

/// `φ(Ω_A)` for a tuple and state. Points whose pencil value is within ten
/// times the singularity tolerance are refused.
#[derive(Debug, Clone)]
pub struct PencilMetric {
    pub tuple: MatrixTuple,
    pub state: StateFunctional,
    pub guard_tol: f64,
}

impl PencilMetric {
    pub fn new(tuple: MatrixTuple, state: StateFunctional) -> Result<Self> {
        state.validate(Some(tuple.dim()))?;
        Ok(Self {
            tuple,
            state,
            guard_tol: 10.0 * DEFAULT_SINGULAR_TOL,
        })
    }

    pub fn with_singular_tol(mut self, tol: f64) -> Self {
        self.guard_tol = 10.0 * tol;
        self
    }
}

impl MetricField for PencilMetric {
    fn dim(&self) -> usize {
        self.tuple.len()
    }

    fn sample(&self, z: &PencilPoint) -> Result<MetricSample> {
        forms_metric::metric_matrix_with_tol(&self.tuple, z, &self.state, self.guard_tol)
    }
}

fn single_coordinate(z: &PencilPoint) -> Result<C64> {
    if z.len() != 1 {
        return Err(GeometryError::DimensionMismatch {
            expected: 1,
            actual: z.len(),
        });
    }
    Ok(z.coords()[0])
}

/// `g_x(z) = ‖(V − z)⁻¹x‖²` on the resolvent set of one operator.
pub struct VectorStateMetric<'a, R: ResolventOperator + ?Sized> {
    pub op: &'a R,
    pub x: CVector,
}

impl<'a, R: ResolventOperator + ?Sized> VectorStateMetric<'a, R> {
    pub fn new(op: &'a R, x: CVector) -> Result<Self> {
        if x.len() != op.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: op.dim(),
                actual: x.len(),
            });
        }
        if x.norm() == 0.0 {
            return Err(GeometryError::InvalidState("zero vector".into()));
        }
        Ok(Self { op, x })
    }

    pub fn value(&self, z: C64) -> Result<f64> {
        Ok(self.op.resolvent_apply(&self.x, z)?.norm_squared())
    }
}

impl<R: ResolventOperator + ?Sized> MetricField for VectorStateMetric<'_, R> {
    fn dim(&self) -> usize {
        1
    }

    fn sample(&self, z: &PencilPoint) -> Result<MetricSample> {
        Ok(MetricSample::scalar(z.clone(), self.value(single_coordinate(z)?)?))
    }

    fn log_det(&self, z: &PencilPoint) -> Result<f64> {
        Ok(self.value(single_coordinate(z)?)?.ln())
    }
}

/// `g(z) = Tr((V − z)⁻¹*(V − z)⁻¹)/k` for one `k×k` matrix.
#[derive(Debug, Clone)]
pub struct TraceMetric {
    pub v: CMatrix,
}

impl TraceMetric {
    pub fn new(v: CMatrix) -> Result<Self> {
        if !v.is_square() || v.is_empty() {
            return Err(GeometryError::InvalidInput("matrix must be square".into()));
        }
        Ok(Self { v })
    }

    fn resolvent(&self, z: C64) -> Result<CMatrix> {
        resolvent_matrix(&self.v, z)
    }

    pub fn value(&self, z: C64) -> Result<f64> {
        let r = self.resolvent(z)?;
        Ok(r.norm_squared() / self.v.nrows() as f64)
    }
}

impl MetricField for TraceMetric {
    fn dim(&self) -> usize {
        1
    }

    fn sample(&self, z: &PencilPoint) -> Result<MetricSample> {
        Ok(MetricSample::scalar(z.clone(), self.value(single_coordinate(z)?)?))
    }

    fn log_det(&self, z: &PencilPoint) -> Result<f64> {
        Ok(self.value(single_coordinate(z)?)?.ln())
    }
}

/// A metric given by a closure.
pub struct FnMetric<F> {
    dim: usize,
    f: F,
}

impl<F> FnMetric<F>
where
    F: Fn(&PencilPoint) -> Result<CMatrix> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> MetricField for FnMetric<F>
where
    F: Fn(&PencilPoint) -> Result<CMatrix> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, z: &PencilPoint) -> Result<MetricSample> {
        let g = (self.f)(z)?;
        if g.nrows() != self.dim || g.ncols() != self.dim {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim,
                actual: g.nrows(),
            });
        }
        Ok(MetricSample::from_matrix(z.clone(), g))
    }
}

/// Scalar metric from a closure `z ↦ g(z) > 0` on `ℂ`.
pub fn scalar_metric<F>(f: F) -> FnMetric<impl Fn(&PencilPoint) -> Result<CMatrix> + Sync>
where
    F: Fn(C64) -> Result<f64> + Sync,
{
    FnMetric::new(1, move |z: &PencilPoint| {
        let v = f(single_coordinate(z)?)?;
        Ok(CMatrix::from_element(1, 1, C64::new(v, 0.0)))
    })
}

/// The flat metric `g ≡ I` on `ℂⁿ`.
#[derive(Debug, Clone, Copy)]
pub struct Euclidean {
    pub dim: usize,
}

impl MetricField for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }

    fn sample(&self, z: &PencilPoint) -> Result<MetricSample> {
        Ok(MetricSample::from_matrix(z.clone(), linalg::identity(self.dim)))
    }

    fn log_det(&self, _z: &PencilPoint) -> Result<f64> {
        Ok(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureMethod {
    Analytic,
    FiniteDifference,
}

impl CurvatureMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Analytic => "analytic",
            Self::FiniteDifference => "finite_difference",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSample {
    pub z: PencilPoint,
    pub ricci: CMatrix,
    /// The real value `R(z)` when `n = 1`.
    pub scalar_ricci: Option<f64>,
    pub method: CurvatureMethod,
    /// Finite-difference step, absent for analytic values.
    pub step: Option<f64>,
}

impl CurvatureSample {
    pub fn analytic_scalar(z: PencilPoint, value: f64) -> Self {
        Self {
            z,
            ricci: CMatrix::from_element(1, 1, C64::new(value, 0.0)),
            scalar_ricci: Some(value),
            method: CurvatureMethod::Analytic,
            step: None,
        }
    }

    /// Largest entry modulus of `R(z)`.
    pub fn max_abs(&self) -> f64 {
        self.ricci.iter().fold(0.0f64, |m, c| m.max(c.norm()))
    }
}

fn resolvent_matrix(v: &CMatrix, z: C64) -> Result<CMatrix> {
    let mut shifted = v.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] -= z;
    }
    let sample = crate::pencil::ResolventSample::from_matrix(
        PencilPoint::from(vec![z]),
        shifted,
        DEFAULT_SINGULAR_TOL,
    );
    sample.into_inverse()
}

/// `−(‖F'‖²‖F‖² − |⟨F', F⟩|²)/‖F‖⁴` for a holomorphic `F` with value `f`
/// and derivative `df`, given the three inner products.
fn log_norm_curvature(ff: f64, dd: f64, df: C64) -> f64 {
    -(dd * ff - df.norm_sqr()).max(0.0) / (ff * ff)
}

/// Curvature of `g_x(z) = ‖(V − z)⁻¹x‖²` in closed form: with
/// `r₁ = (V − z)⁻¹x` and `r₂ = (V − z)⁻¹r₁`,
/// `R = −(‖r₂‖²‖r₁‖² − |⟨r₂, r₁⟩|²)/‖r₁‖⁴`. Invariant under scaling of `x`.
pub fn ricci_vector_state<R: ResolventOperator + ?Sized>(
    op: &R,
    x: &CVector,
    z: C64,
) -> Result<f64> {
    if x.norm() == 0.0 {
        return Err(GeometryError::InvalidState("zero vector".into()));
    }
    let r1 = op.resolvent_apply(x, z)?;
    let r2 = op.resolvent_apply(&r1, z)?;
    Ok(log_norm_curvature(
        r1.norm_squared(),
        r2.norm_squared(),
        linalg::inner(&r2, &r1),
    ))
}

/// Curvature of the trace metric `Tr((V − z)⁻¹*(V − z)⁻¹)/k`: the same
/// closed form with Frobenius inner products of `(V − z)⁻¹` and `(V − z)⁻²`.
pub fn ricci_trace_state(v: &CMatrix, z: C64) -> Result<f64> {
    let r1 = resolvent_matrix(v, z)?;
    let r2 = &r1 * &r1;
    let df: C64 = r2.iter().zip(r1.iter()).map(|(a, b)| a * b.conj()).sum();
    Ok(log_norm_curvature(r1.norm_squared(), r2.norm_squared(), df))
}

/// `10⁻⁴·max(1, |z|)`.
pub fn default_fd_step(z: &PencilPoint) -> f64 {
    1e-4 * z.norm().max(1.0)
}

/// `R_{jk} = −∂_j∂̄_k log det g` by central differences of step `h`.
pub fn ricci_tensor_fd<M: MetricField + ?Sized>(
    field: &M,
    z: &PencilPoint,
    h: f64,
) -> Result<CurvatureSample> {
    let n = field.dim();
    if z.len() != n {
        return Err(GeometryError::DimensionMismatch {
            expected: n,
            actual: z.len(),
        });
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(GeometryError::InvalidInput("finite-difference step must be positive".into()));
    }
    let i = C64::new(0.0, 1.0);
    // Real direction d ∈ 0..2n: coordinate d/2, real part for even d.
    let unit = |d: usize| if d % 2 == 0 { C64::new(h, 0.0) } else { i * h };
    let at = |moves: &[(usize, f64)]| -> Result<f64> {
        let mut c = z.coords().to_vec();
        for &(d, s) in moves {
            c[d / 2] += unit(d) * s;
        }
        field.log_det(&PencilPoint::from(c))
    };
    let center = at(&[])?;
    let second = |d: usize| -> Result<f64> {
        Ok((at(&[(d, 1.0)])? - 2.0 * center + at(&[(d, -1.0)])?) / (h * h))
    };
    let cross = |d: usize, e: usize| -> Result<f64> {
        Ok((at(&[(d, 1.0), (e, 1.0)])? - at(&[(d, 1.0), (e, -1.0)])?
            - at(&[(d, -1.0), (e, 1.0)])?
            + at(&[(d, -1.0), (e, -1.0)])?)
            / (4.0 * h * h))
    };

    let mut ricci = CMatrix::zeros(n, n);
    for j in 0..n {
        let (xj, yj) = (2 * j, 2 * j + 1);
        let lap = second(xj)? + second(yj)?;
        ricci[(j, j)] = C64::new(-0.25 * lap, 0.0);
        for k in j + 1..n {
            let (xk, yk) = (2 * k, 2 * k + 1);
            let re = cross(xj, xk)? + cross(yj, yk)?;
            let im = cross(xj, yk)? - cross(yj, xk)?;
            let v = -0.25 * C64::new(re, im);
            ricci[(j, k)] = v;
            ricci[(k, j)] = v.conj();
        }
    }
    let scalar_ricci = (n == 1).then(|| ricci[(0, 0)].re);
    Ok(CurvatureSample {
        z: z.clone(),
        ricci,
        scalar_ricci,
        method: CurvatureMethod::FiniteDifference,
        step: Some(h),
    })
}

/// Determinant of the unnormalized-trace metric of a tuple spanning `M_k`
/// next to its closed form `|det α|²·|det A(z)|^{−2k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlkDeterminant {
    pub det_g: f64,
    pub predicted: f64,
    /// `k`: the unnormalized metric is `k` times the normalized-trace one.
    pub trace_scale: usize,
}

impl GlkDeterminant {
    pub fn relative_gap(&self) -> f64 {
        (self.det_g - self.predicted).abs() / self.det_g.abs()
    }
}

/// `α = [vec(A₁) ⋯ vec(A_n)]`, the coordinates of the tuple in `M_k`.
pub fn spanning_coordinates(tuple: &MatrixTuple) -> CMatrix {
    let k2 = tuple.dim() * tuple.dim();
    let mats = tuple.matrices();
    CMatrix::from_fn(k2, mats.len(), |r, c| mats[c].as_slice()[r])
}

pub fn glk_metric_det(tuple: &MatrixTuple, z: &PencilPoint) -> Result<GlkDeterminant> {
    let k = tuple.dim();
    if tuple.len() != k * k {
        return Err(GeometryError::InvalidTuple(format!(
            "a spanning tuple of {k}x{k} matrices has {} members, got {}",
            k * k,
            tuple.len()
        )));
    }
    let alpha = spanning_coordinates(tuple);
    let s = linalg::singular_values(&alpha);
    if !(s[s.len() - 1] > GRAM_REL_TOL * s[0]) {
        return Err(GeometryError::InvalidTuple("tuple does not span the matrix algebra".into()));
    }
    let omega = tuple.maurer_cartan_coeffs(z)?;
    let g = forms_metric::metric_from_coeffs(&omega, &StateFunctional::NormalizedTrace)
        .scale(k as f64);
    let det_g: f64 = linalg::hermitian_eigenvalues(&linalg::hermitian_part(&g))
        .iter()
        .product();
    let det_alpha = alpha.lu().determinant().norm();
    let det_a = tuple.eval(z)?.lu().determinant().norm();
    Ok(GlkDeterminant {
        det_g,
        predicted: det_alpha * det_alpha * det_a.powi(-2 * k as i32),
        trace_scale: k,
    })
}
