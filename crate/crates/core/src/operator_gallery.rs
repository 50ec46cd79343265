//! Concrete operators with closed-form or truncated resolvent data behind one
//! interface: Jordan nilpotents, the Volterra operator, shift truncations, the
//! truncated dihedral pencil and plain matrices.

use std::f64::consts::PI;

use crate::error::{GeometryError, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};
use crate::pencil::{MatrixTuple, DEFAULT_SINGULAR_TOL};

/// Default sample count for the discretized Volterra operator.
pub const VOLTERRA_DEFAULT_SAMPLES: usize = 512;

/// Anything that can apply `(V − z)⁻¹` to a vector.
pub trait ResolventOperator: Sync {
    fn dim(&self) -> usize;
    /// `V x`.
    fn apply(&self, x: &CVector) -> CVector;
    /// `(V − z)⁻¹ x`.
    fn resolvent_apply(&self, x: &CVector, z: C64) -> Result<CVector>;
}

impl ResolventOperator for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &CVector) -> CVector {
        self * x
    }

    fn resolvent_apply(&self, x: &CVector, z: C64) -> Result<CVector> {
        check_len(self.nrows(), x)?;
        let shifted = shift(self, z);
        check_invertible(&shifted)?;
        linalg::solve(&shifted, x).ok_or(GeometryError::SingularPoint {
            sigma_min: 0.0,
            sigma_max: linalg::spectral_norm(&shifted),
        })
    }
}

fn check_len(k: usize, x: &CVector) -> Result<()> {
    if x.len() != k {
        return Err(GeometryError::DimensionMismatch {
            expected: k,
            actual: x.len(),
        });
    }
    Ok(())
}

fn shift(v: &CMatrix, z: C64) -> CMatrix {
    let mut m = v.clone();
    for i in 0..m.nrows() {
        m[(i, i)] -= z;
    }
    m
}

fn check_invertible(m: &CMatrix) -> Result<()> {
    let s = linalg::singular_values(m);
    let (hi, lo) = (s[0], *s.last().unwrap());
    if !(lo > DEFAULT_SINGULAR_TOL * hi) {
        return Err(GeometryError::SingularPoint {
            sigma_min: lo,
            sigma_max: hi,
        });
    }
    Ok(())
}

fn nonzero(z: C64) -> Result<C64> {
    if z == ZERO || !linalg::is_finite(z) {
        return Err(GeometryError::SingularPoint {
            sigma_min: 0.0,
            sigma_max: 1.0,
        });
    }
    Ok(z)
}

/// Either an exact resolvent norm or a rigorous two-sided bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolventNorm {
    Exact(f64),
    Bracket { lower: f64, upper: f64 },
}

impl ResolventNorm {
    pub fn lower(&self) -> f64 {
        match *self {
            Self::Exact(v) => v,
            Self::Bracket { lower, .. } => lower,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            Self::Exact(v) => v,
            Self::Bracket { upper, .. } => upper,
        }
    }
}

/// Which shift a closed-form vector metric refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftKind {
    Unilateral,
    Bilateral,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticOperator {
    /// `n×n` nilpotent Jordan block.
    Jordan { n: usize },
    /// `Vf(x) = ∫₀ˣ f`, acting on cell-centered samples of `[0, 1]`.
    Volterra { samples: usize },
    /// `N×N` compression of the unilateral shift to `span{1, w, …, w^{N−1}}`.
    UnilateralShift { n: usize },
    /// Multiplication by `e^{iθ}` sampled at `2N+1` equispaced angles.
    BilateralShift { n: usize },
    /// `λ(a)` of the truncated dihedral pencil with `M` angle samples.
    DihedralPencil { m: usize },
    FiniteMatrix(CMatrix),
}

impl AnalyticOperator {
    pub fn jordan(n: usize) -> Result<Self> {
        Self::checked(Self::Jordan { n }, n)
    }

    pub fn volterra(samples: usize) -> Result<Self> {
        if samples < 16 {
            return Err(GeometryError::InvalidInput(
                "Volterra grid needs at least 16 samples".into(),
            ));
        }
        Ok(Self::Volterra { samples })
    }

    pub fn unilateral_shift(n: usize) -> Result<Self> {
        Self::checked(Self::UnilateralShift { n }, n)
    }

    pub fn bilateral_shift(n: usize) -> Result<Self> {
        Self::checked(Self::BilateralShift { n }, n)
    }

    pub fn dihedral(m: usize) -> Result<Self> {
        Self::checked(Self::DihedralPencil { m }, m)
    }

    pub fn matrix(v: CMatrix) -> Result<Self> {
        if !v.is_square() || v.is_empty() {
            return Err(GeometryError::InvalidInput("operator matrix must be square".into()));
        }
        if !v.iter().all(|&c| linalg::is_finite(c)) {
            return Err(GeometryError::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(Self::FiniteMatrix(v))
    }

    fn checked(op: Self, size: usize) -> Result<Self> {
        if size < 2 {
            return Err(GeometryError::InvalidInput(
                "truncation parameter must be at least 2".into(),
            ));
        }
        Ok(op)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Jordan { n } => format!("jordan:{n}"),
            Self::Volterra { samples } => format!("volterra:{samples}"),
            Self::UnilateralShift { n } => format!("ushift:{n}"),
            Self::BilateralShift { n } => format!("bshift:{n}"),
            Self::DihedralPencil { m } => format!("dihedral:{m}"),
            Self::FiniteMatrix(v) => format!("matrix:{}x{}", v.nrows(), v.ncols()),
        }
    }

    pub fn has_exact_resolvent_norm(&self) -> bool {
        !matches!(self, Self::Volterra { .. })
    }

    pub fn has_exact_vector_metric(&self) -> bool {
        matches!(
            self,
            Self::Jordan { .. }
                | Self::Volterra { .. }
                | Self::UnilateralShift { .. }
                | Self::BilateralShift { .. }
        )
    }

    /// Dense matrix form; `None` for the Volterra operator.
    pub fn to_matrix(&self) -> Option<CMatrix> {
        match self {
            Self::Jordan { n } => Some(linalg::jordan_block(*n)),
            Self::Volterra { .. } => None,
            Self::UnilateralShift { n } => Some(linalg::jordan_block(*n).transpose()),
            Self::BilateralShift { n } => Some(linalg::diagonal(&bilateral_nodes(*n))),
            Self::DihedralPencil { m } => Some(dihedral_blocks(*m).0),
            Self::FiniteMatrix(v) => Some(v.clone()),
        }
    }

    /// The distinguished cyclic vector: `1` for the shifts (unit in `ℓ²`),
    /// the last basis vector for Jordan blocks, samples of `f₀ ≡ 1` (unit in
    /// `L²[0, 1]`) for Volterra.
    pub fn distinguished_vector(&self) -> CVector {
        let k = ResolventOperator::dim(self);
        match self {
            Self::UnilateralShift { .. } => linalg::basis_vector(k, 0),
            Self::BilateralShift { .. } => {
                CVector::from_element(k, C64::new(1.0 / (k as f64).sqrt(), 0.0))
            }
            Self::Volterra { .. } => CVector::from_element(k, ONE),
            _ => linalg::basis_vector(k, k - 1),
        }
    }

    pub fn spectrum_description(&self) -> String {
        match self {
            Self::Jordan { n } => format!("{{0}} (nilpotent of order {n})"),
            Self::Volterra { .. } => "{0} (quasi-nilpotent)".into(),
            Self::UnilateralShift { n } => format!(
                "{{0}} for the {n}x{n} truncation; closed unit disk for the shift"
            ),
            Self::BilateralShift { n } => format!(
                "the {} roots of unity; unit circle for the shift",
                2 * n + 1
            ),
            Self::DihedralPencil { m } => format!(
                "{{±1}} for lambda(a); joint spectrum of I + z1 lambda(a) + z2 lambda(t) is the union over x = cos(2 pi j/{m}) of 1 - z1^2 - z2^2 - 2 z1 z2 x = 0"
            ),
            Self::FiniteMatrix(_) => "eigenvalues of the matrix".into(),
        }
    }

    /// `‖(V − z)⁻¹‖`, exact where available and bracketed for Volterra.
    pub fn resolvent_norm(&self, z: C64) -> Result<ResolventNorm> {
        match self {
            Self::Volterra { .. } => {
                nonzero(z)?;
                Ok(ResolventNorm::Bracket {
                    lower: volterra_indicator_norm_sq(0.0, z)?.sqrt(),
                    upper: volterra_norm_upper(z)?,
                })
            }
            Self::Jordan { n } => {
                let r = nilpotent_resolvent_matrix(*n, z)?;
                Ok(ResolventNorm::Exact(linalg::spectral_norm(&r)))
            }
            Self::UnilateralShift { n } => {
                let w = 1.0 / nonzero(z)?;
                // Lower triangular Toeplitz with entries −w^{i−j+1}.
                let powers: Vec<C64> = (0..=*n).map(|p| w.powu(p as u32)).collect();
                let r = CMatrix::from_fn(*n, *n, |i, j| {
                    if i >= j {
                        -powers[i - j + 1]
                    } else {
                        ZERO
                    }
                });
                Ok(ResolventNorm::Exact(linalg::spectral_norm(&r)))
            }
            Self::BilateralShift { n } => {
                let mut worst: f64 = 0.0;
                for node in bilateral_nodes(*n) {
                    let d = (node - z).norm();
                    if d <= DEFAULT_SINGULAR_TOL {
                        return Err(GeometryError::SingularPoint {
                            sigma_min: d,
                            sigma_max: 1.0 + z.norm(),
                        });
                    }
                    worst = worst.max(1.0 / d);
                }
                Ok(ResolventNorm::Exact(worst))
            }
            Self::DihedralPencil { .. } | Self::FiniteMatrix(_) => {
                let v = self.to_matrix().expect("finite variant");
                let shifted = shift(&v, z);
                check_invertible(&shifted)?;
                let inv = linalg::inverse(&shifted).ok_or(GeometryError::SingularPoint {
                    sigma_min: 0.0,
                    sigma_max: linalg::spectral_norm(&shifted),
                })?;
                Ok(ResolventNorm::Exact(linalg::spectral_norm(&inv)))
            }
        }
    }

    /// `‖(V − z)⁻¹x‖²` for the distinguished vector of a shift truncation.
    pub fn truncated_shift_metric(&self, z: C64) -> Result<f64> {
        match self {
            Self::UnilateralShift { .. } | Self::BilateralShift { .. } => Ok(self
                .resolvent_apply(&self.distinguished_vector(), z)?
                .norm_squared()),
            _ => Err(GeometryError::InvalidInput(
                "shift metric needs a shift truncation".into(),
            )),
        }
    }
}

impl ResolventOperator for AnalyticOperator {
    fn dim(&self) -> usize {
        match self {
            Self::Jordan { n } | Self::UnilateralShift { n } => *n,
            Self::Volterra { samples } => *samples,
            Self::BilateralShift { n } => 2 * n + 1,
            Self::DihedralPencil { m } => 2 * m,
            Self::FiniteMatrix(v) => v.nrows(),
        }
    }

    fn apply(&self, x: &CVector) -> CVector {
        match self {
            Self::Volterra { .. } => volterra_apply(x),
            Self::Jordan { n } => {
                CVector::from_fn(*n, |i, _| if i + 1 < *n { x[i + 1] } else { ZERO })
            }
            Self::UnilateralShift { n } => {
                CVector::from_fn(*n, |i, _| if i > 0 { x[i - 1] } else { ZERO })
            }
            Self::BilateralShift { n } => {
                let nodes = bilateral_nodes(*n);
                CVector::from_fn(nodes.len(), |i, _| nodes[i] * x[i])
            }
            _ => self.to_matrix().expect("finite variant") * x,
        }
    }

    fn resolvent_apply(&self, x: &CVector, z: C64) -> Result<CVector> {
        check_len(ResolventOperator::dim(self), x)?;
        match self {
            Self::Jordan { n } => nilpotent_resolvent_apply(*n, x, z),
            Self::Volterra { .. } => volterra_resolvent_apply(x, z),
            Self::UnilateralShift { n } => {
                // (S − z)y = x with S the forward shift: y₀ = −x₀/z,
                // y_j = (y_{j−1} − x_j)/z.
                let w = 1.0 / nonzero(z)?;
                let mut y = CVector::zeros(*n);
                y[0] = -x[0] * w;
                for j in 1..*n {
                    y[j] = (y[j - 1] - x[j]) * w;
                }
                Ok(y)
            }
            Self::BilateralShift { n } => {
                let nodes = bilateral_nodes(*n);
                let mut y = CVector::zeros(nodes.len());
                for (i, node) in nodes.iter().enumerate() {
                    let d = node - z;
                    if d.norm() <= DEFAULT_SINGULAR_TOL {
                        return Err(GeometryError::SingularPoint {
                            sigma_min: d.norm(),
                            sigma_max: 1.0 + z.norm(),
                        });
                    }
                    y[i] = x[i] / d;
                }
                Ok(y)
            }
            Self::DihedralPencil { .. } | Self::FiniteMatrix(_) => {
                self.to_matrix().expect("finite variant").resolvent_apply(x, z)
            }
        }
    }
}

/// `(J − z)⁻¹x = −w(x + wJx + ⋯ + w^{n−1}J^{n−1}x)` with `w = 1/z`.
pub fn nilpotent_resolvent_apply(n: usize, x: &CVector, z: C64) -> Result<CVector> {
    check_len(n, x)?;
    let w = 1.0 / nonzero(z)?;
    let mut term = x.clone();
    let mut acc = CVector::zeros(n);
    let mut scale = -w;
    for _ in 0..n {
        acc += term.map(|c| c * scale);
        // J e_{j+1} = e_j shifts entries up by one.
        term = CVector::from_fn(n, |i, _| if i + 1 < n { term[i + 1] } else { ZERO });
        scale *= w;
    }
    Ok(acc)
}

/// Full resolvent matrix of the `n×n` Jordan block from the Neumann sum.
pub fn nilpotent_resolvent_matrix(n: usize, z: C64) -> Result<CMatrix> {
    let w = 1.0 / nonzero(z)?;
    Ok(CMatrix::from_fn(n, n, |i, j| {
        if j >= i {
            -w.powu((j - i + 1) as u32)
        } else {
            ZERO
        }
    }))
}

/// `‖(V − z)⁻¹f_α‖²` for `f_α = 1_{[α, 1]}`:
/// `(e^{2 Re z (1−α)/|z|²} − 1)/(2 Re z)`, with the limit `(1−α)/|z|²` on the
/// imaginary axis.
pub fn volterra_indicator_norm_sq(alpha: f64, z: C64) -> Result<f64> {
    check_alpha(alpha)?;
    nonzero(z)?;
    let r2 = z.norm_sqr();
    let a = 2.0 * z.re * (1.0 - alpha) / r2;
    if a == 0.0 {
        return Ok((1.0 - alpha) / r2);
    }
    // expm1(a)/(2 Re z) = (1−α)/|z|² · expm1(a)/a.
    Ok((1.0 - alpha) / r2 * (a.exp_m1() / a))
}

/// Natural log of [`volterra_indicator_norm_sq`], finite even where the
/// value itself overflows.
pub fn volterra_indicator_log_norm_sq(alpha: f64, z: C64) -> Result<f64> {
    check_alpha(alpha)?;
    nonzero(z)?;
    let r2 = z.norm_sqr();
    let base = (1.0 - alpha).ln() - r2.ln();
    let a = 2.0 * z.re * (1.0 - alpha) / r2;
    let factor = if a == 0.0 {
        0.0
    } else if a > 0.0 {
        // log(expm1(a)/a) = a + log(−expm1(−a)) − log a
        a + (-(-a).exp_m1()).ln() - a.ln()
    } else {
        (a.exp_m1() / a).ln()
    };
    Ok(base + factor)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(GeometryError::InvalidInput(format!(
            "indicator offset must lie in [0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// `(1/|z|)e^{1/|z|}`, an upper bound for `‖(V − z)⁻¹‖`.
pub fn volterra_norm_upper(z: C64) -> Result<f64> {
    let r = nonzero(z)?.norm();
    Ok((1.0 / r) * (1.0 / r).exp())
}

/// `log((1/|z|)e^{1/|z|})`.
pub fn volterra_log_norm_upper(z: C64) -> Result<f64> {
    let r = nonzero(z)?.norm();
    Ok(1.0 / r - r.ln())
}

/// Cell-centered sample points `x_i = (i + ½)/N`.
pub fn volterra_grid(samples: usize) -> Vec<f64> {
    (0..samples)
        .map(|i| (i as f64 + 0.5) / samples as f64)
        .collect()
}

/// Samples of `f_α = 1_{[α, 1]}` on the cell-centered grid, as a unit vector
/// in the discrete `L²` norm when `normalize` is set.
pub fn volterra_indicator_samples(alpha: f64, samples: usize, normalize: bool) -> Result<CVector> {
    check_alpha(alpha)?;
    let mut v = CVector::from_iterator(
        samples,
        volterra_grid(samples)
            .into_iter()
            .map(|x| if x > alpha { ONE } else { ZERO }),
    );
    if normalize {
        let n = l2_norm(&v);
        if n == 0.0 {
            return Err(GeometryError::InvalidInput("indicator has no samples".into()));
        }
        v.unscale_mut(n);
    }
    Ok(v)
}

/// Discrete `L²[0, 1]` norm of cell samples (midpoint rule).
pub fn l2_norm(v: &CVector) -> f64 {
    (v.norm_squared() / v.len() as f64).sqrt()
}

/// `Vf` on the cell grid, exact for piecewise-constant `f`.
pub fn volterra_apply(f: &CVector) -> CVector {
    let n = f.len();
    let dx = 1.0 / n as f64;
    let mut out = CVector::zeros(n);
    let mut acc = ZERO;
    for i in 0..n {
        out[i] = acc + f[i] * (0.5 * dx);
        acc += f[i] * dx;
    }
    out
}

/// `(V − z)⁻¹f = −w(f(x) + w∫₀ˣ e^{w(x−t)}f(t)dt)`, with the kernel integral
/// taken exactly cell by cell for piecewise-constant `f`.
pub fn volterra_resolvent_apply(f: &CVector, z: C64) -> Result<CVector> {
    let n = f.len();
    if n < 16 {
        return Err(GeometryError::InvalidInput(
            "Volterra grid needs at least 16 samples".into(),
        ));
    }
    let w = 1.0 / nonzero(z)?;
    let dx = 1.0 / n as f64;
    let full = (w * dx).exp();
    let half = (w * (0.5 * dx)).exp();
    // (e^{wh} − 1)/w evaluated without cancellation for small |wh|.
    let weight = |h: f64| {
        let t = w * h;
        if t.norm() < 1e-5 {
            h * (ONE + t / 2.0 + t * t / 6.0)
        } else {
            (t.exp() - ONE) / w
        }
    };
    let (wf, wh) = (weight(dx), weight(0.5 * dx));
    let mut out = CVector::zeros(n);
    // e = ∫₀^{iΔ} e^{w(iΔ−t)} f(t) dt
    let mut e = ZERO;
    for i in 0..n {
        let kernel = half * e + f[i] * wh;
        out[i] = -w * (f[i] + w * kernel);
        e = full * e + f[i] * wf;
    }
    if !out.iter().all(|&c| linalg::is_finite(c)) {
        return Err(GeometryError::NonConvergence(
            "Volterra kernel overflowed; increase |z| or the grid size".into(),
        ));
    }
    Ok(out)
}

/// Closed-form `g₁(z) = ‖(T − z)⁻¹1‖²`: `1/(|z|² − 1)` for the unilateral
/// shift (|z| > 1) and `1/|1 − |z|²|` for the bilateral shift.
pub fn shift_vector_metric(kind: ShiftKind, z: C64) -> Result<f64> {
    let r2 = z.norm_sqr();
    if !r2.is_finite() || (r2 - 1.0).abs() <= DEFAULT_SINGULAR_TOL {
        return Err(GeometryError::OutOfDomain("|z| = 1 lies on the spectrum".into()));
    }
    match kind {
        ShiftKind::Unilateral if r2 < 1.0 => Err(GeometryError::OutOfDomain(
            "unilateral shift metric needs |z| > 1".into(),
        )),
        ShiftKind::Unilateral => Ok(1.0 / (r2 - 1.0)),
        ShiftKind::Bilateral => Ok(1.0 / (1.0 - r2).abs()),
    }
}

/// Upper bound for the gap between the truncated and exact shift metrics.
pub fn shift_truncation_tail(kind: ShiftKind, n: usize, z: C64) -> f64 {
    let r2 = z.norm_sqr();
    match kind {
        ShiftKind::Unilateral => r2.powi(-(n as i32)) / (r2 - 1.0),
        ShiftKind::Bilateral => {
            let m = (2 * n + 1) as i32;
            let q = if r2 < 1.0 { r2.sqrt() } else { 1.0 / r2.sqrt() };
            let qm = q.powi(m);
            2.0 * qm / ((1.0 - qm) * (1.0 - r2).abs())
        }
    }
}

/// `e^{2πij/(2N+1)}` for `j = 0..2N`.
fn bilateral_nodes(n: usize) -> Vec<C64> {
    let m = 2 * n + 1;
    (0..m)
        .map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64))
        .collect()
}

/// `(λ(a), λ(t))` on `L ⊕ tL` with the bilateral shift replaced by
/// `diag(e^{2πij/M})`.
fn dihedral_blocks(m: usize) -> (CMatrix, CMatrix) {
    let mut la = CMatrix::zeros(2 * m, 2 * m);
    let mut lt = CMatrix::zeros(2 * m, 2 * m);
    for j in 0..m {
        let u = C64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64);
        la[(j, m + j)] = u;
        la[(m + j, j)] = u.conj();
        lt[(j, m + j)] = ONE;
        lt[(m + j, j)] = ONE;
    }
    (la, lt)
}

/// Normalized tuple `(I, λ(a), λ(t))` of the truncated dihedral pencil.
pub fn dihedral_tuple(m: usize) -> Result<MatrixTuple> {
    if m < 2 {
        return Err(GeometryError::InvalidInput(
            "truncation parameter must be at least 2".into(),
        ));
    }
    let (la, lt) = dihedral_blocks(m);
    MatrixTuple::normalized(vec![la, lt])?
        .with_labels(vec!["I".into(), "lambda(a)".into(), "lambda(t)".into()])
}

/// The angles `x = cos(2πj/M)` whose conics make up the truncated spectrum.
pub fn dihedral_conic_parameters(m: usize) -> Vec<f64> {
    (0..m)
        .map(|j| (2.0 * PI * j as f64 / m as f64).cos())
        .collect()
}
