//! Matrix tuples, the linear pencil `A(z) = Σ z_j A_j`, resolvents and
//! membership in the projective joint spectrum.

use rayon::prelude::*;

use crate::error::{GeometryError, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};

/// `A(z)` is singular when `σ_min ≤ tol · σ_max`.
pub const DEFAULT_SINGULAR_TOL: f64 = 1e-8;
/// Relative eigenvalue floor of the trace Gram matrix for linear independence.
pub const GRAM_REL_TOL: f64 = 1e-10;

/// A point `z ∈ ℂⁿ` of the pencil's parameter space.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilPoint(Vec<C64>);

impl PencilPoint {
    pub fn new(coords: Vec<C64>) -> Result<Self> {
        if coords.iter().all(|&c| linalg::is_finite(c)) {
            Ok(Self(coords))
        } else {
            Err(GeometryError::InvalidInput(
                "pencil point has non-finite coordinates".into(),
            ))
        }
    }

    pub fn from_real(coords: &[f64]) -> Self {
        Self(coords.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// The standard basis vector `e_{index+1}` in `ℂⁿ`.
    pub fn unit(n: usize, index: usize) -> Self {
        let mut c = vec![ZERO; n];
        c[index] = ONE;
        Self(c)
    }

    pub fn coords(&self) -> &[C64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scale(&self, lambda: C64) -> Self {
        Self(self.0.iter().map(|&c| c * lambda).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Copy with coordinate `index` replaced.
    pub fn with(&self, index: usize, value: C64) -> Self {
        let mut c = self.0.clone();
        c[index] = value;
        Self(c)
    }
}

impl From<Vec<C64>> for PencilPoint {
    fn from(coords: Vec<C64>) -> Self {
        Self(coords)
    }
}

/// Ordered tuple `(A_1, …, A_n)` of linearly independent `k×k` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTuple {
    matrices: Vec<CMatrix>,
    normalized: bool,
    labels: Option<Vec<String>>,
}

impl MatrixTuple {
    pub fn new(matrices: Vec<CMatrix>) -> Result<Self> {
        Self::from_parts(matrices, false, None)
    }

    /// Tuple `(I, A_1, …, A_n)` with the identity prepended.
    pub fn normalized(rest: Vec<CMatrix>) -> Result<Self> {
        let k = rest
            .first()
            .map(|m| m.nrows())
            .ok_or_else(|| GeometryError::InvalidTuple("empty tuple".into()))?;
        let mut matrices = Vec::with_capacity(rest.len() + 1);
        matrices.push(linalg::identity(k));
        matrices.extend(rest);
        Self::from_parts(matrices, true, None)
    }

    pub fn from_parts(
        matrices: Vec<CMatrix>,
        normalized: bool,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| GeometryError::InvalidTuple("empty tuple".into()))?;
        let k = first.nrows();
        if k == 0 {
            return Err(GeometryError::InvalidTuple("matrices must be at least 1x1".into()));
        }
        for (j, m) in matrices.iter().enumerate() {
            if m.nrows() != k || m.ncols() != k {
                return Err(GeometryError::InvalidTuple(format!(
                    "entry {j} is {}x{}, expected {k}x{k}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !m.iter().all(|&c| linalg::is_finite(c)) {
                return Err(GeometryError::InvalidTuple(format!(
                    "entry {j} has non-finite values"
                )));
            }
        }
        if normalized && matrices[0] != linalg::identity(k) {
            return Err(GeometryError::InvalidTuple(
                "normalized tuple must start with the identity".into(),
            ));
        }
        if let Some(l) = &labels {
            if l.len() != matrices.len() {
                return Err(GeometryError::DimensionMismatch {
                    expected: matrices.len(),
                    actual: l.len(),
                });
            }
        }
        let tuple = Self {
            matrices,
            normalized,
            labels,
        };
        let gram = linalg::hermitian_eigenvalues(&tuple.gram_matrix());
        let (lo, hi) = (gram[0], gram[gram.len() - 1]);
        if !(hi > 0.0 && lo > GRAM_REL_TOL * hi) {
            return Err(GeometryError::InvalidTuple(format!(
                "entries are linearly dependent (Gram eigenvalues {lo:e} .. {hi:e})"
            )));
        }
        Ok(tuple)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.matrices.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.matrices.len(),
                actual: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Number of entries `n`.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    /// Matrix size `k`.
    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.matrices
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// `G_{jk} = Tr(A_j* A_k)`.
    pub fn gram_matrix(&self) -> CMatrix {
        let n = self.len();
        CMatrix::from_fn(n, n, |j, k| {
            self.matrices[j]
                .iter()
                .zip(self.matrices[k].iter())
                .map(|(a, b)| a.conj() * b)
                .sum()
        })
    }

    /// The tuple `(L A_1, …, L A_n)`; the normalized flag is dropped.
    pub fn left_multiply(&self, l: &CMatrix) -> Result<Self> {
        if l.nrows() != self.dim() || l.ncols() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                actual: l.nrows(),
            });
        }
        Self::new(self.matrices.iter().map(|a| l * a).collect())
    }

    fn check_point(&self, z: &PencilPoint) -> Result<()> {
        if z.len() != self.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.len(),
                actual: z.len(),
            });
        }
        Ok(())
    }

    /// `A(z) = Σ_j z_j A_j`, summed in index order.
    pub fn eval(&self, z: &PencilPoint) -> Result<CMatrix> {
        self.check_point(z)?;
        Ok(self.eval_unchecked(z.coords()))
    }

    pub(crate) fn eval_unchecked(&self, z: &[C64]) -> CMatrix {
        let k = self.dim();
        let mut out = CMatrix::zeros(k, k);
        for (zj, aj) in z.iter().zip(&self.matrices) {
            if *zj != ZERO {
                out += aj * *zj;
            }
        }
        out
    }

    /// `A(v)` for a tangent direction `v` (same formula as [`Self::eval`]).
    pub fn direction(&self, v: &[C64]) -> Result<CMatrix> {
        if v.len() != self.len() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.len(),
                actual: v.len(),
            });
        }
        Ok(self.eval_unchecked(v))
    }

    pub fn resolvent(&self, z: &PencilPoint) -> Result<ResolventSample> {
        self.resolvent_with_tol(z, DEFAULT_SINGULAR_TOL)
    }

    pub fn resolvent_with_tol(&self, z: &PencilPoint, tol: f64) -> Result<ResolventSample> {
        let value = self.eval(z)?;
        Ok(ResolventSample::from_matrix(z.clone(), value, tol))
    }

    pub fn in_joint_spectrum(&self, z: &PencilPoint) -> Result<bool> {
        Ok(!self.resolvent(z)?.invertible)
    }

    /// Coefficients `ω_j(z) = A(z)⁻¹ A_j` of the Maurer–Cartan form.
    pub fn maurer_cartan_coeffs(&self, z: &PencilPoint) -> Result<Vec<CMatrix>> {
        self.maurer_cartan_coeffs_with_tol(z, DEFAULT_SINGULAR_TOL)
    }

    pub fn maurer_cartan_coeffs_with_tol(&self, z: &PencilPoint, tol: f64) -> Result<Vec<CMatrix>> {
        let inv = self.resolvent_with_tol(z, tol)?.into_inverse()?;
        Ok(self.matrices.iter().map(|a| &inv * a).collect())
    }
}

/// `A(z)` together with its inverse (when it exists) and extreme singular values.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSample {
    pub z: PencilPoint,
    pub pencil_value: CMatrix,
    pub inverse: Option<CMatrix>,
    pub smallest_singular_value: f64,
    pub largest_singular_value: f64,
    pub invertible: bool,
}

impl ResolventSample {
    pub fn from_matrix(z: PencilPoint, value: CMatrix, tol: f64) -> Self {
        let sv = linalg::singular_values(&value);
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(0.0);
        let mut invertible = smin > tol * smax;
        let inverse = if invertible {
            linalg::inverse(&value)
        } else {
            None
        };
        if inverse.is_none() {
            invertible = false;
        }
        Self {
            z,
            pencil_value: value,
            inverse,
            smallest_singular_value: smin,
            largest_singular_value: smax,
            invertible,
        }
    }

    /// `σ_min / σ_max`, zero for the zero matrix.
    pub fn relative_sigma(&self) -> f64 {
        if self.largest_singular_value > 0.0 {
            self.smallest_singular_value / self.largest_singular_value
        } else {
            0.0
        }
    }

    /// `‖A(z)·A(z)⁻¹ − I‖_F`, or `None` when singular.
    pub fn residual(&self) -> Option<f64> {
        self.inverse.as_ref().map(|inv| {
            let k = inv.nrows();
            linalg::frobenius(&(&self.pencil_value * inv - linalg::identity(k)))
        })
    }

    pub fn into_inverse(self) -> Result<CMatrix> {
        match self.inverse {
            Some(inv) if self.invertible => Ok(inv),
            _ => Err(GeometryError::SingularPoint {
                sigma_min: self.smallest_singular_value,
                sigma_max: self.largest_singular_value,
            }),
        }
    }
}

/// Which real part of a complex coordinate a grid axis moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Re,
    Im,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FreeAxis {
    pub coord: usize,
    pub part: Part,
}

/// Uniform samples `lo, …, hi` (`n` points).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn step(&self) -> f64 {
        if self.n > 1 {
            (self.hi - self.lo) / (self.n - 1) as f64
        } else {
            0.0
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.n > 1 {
            self.lo + self.step() * i as f64
        } else {
            self.lo
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub x: GridAxis,
    pub y: GridAxis,
}

/// A real two-dimensional slice through `ℂⁿ`: `base` with two real
/// coordinates replaced by grid values. One free complex coordinate is the
/// pair `(j, Re), (j, Im)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSpec {
    pub base: PencilPoint,
    pub axes: [FreeAxis; 2],
}

impl SliceSpec {
    pub fn complex_coordinate(base: PencilPoint, coord: usize) -> Self {
        Self {
            base,
            axes: [
                FreeAxis {
                    coord,
                    part: Part::Re,
                },
                FreeAxis {
                    coord,
                    part: Part::Im,
                },
            ],
        }
    }

    pub fn real_pair(base: PencilPoint, first: usize, second: usize) -> Self {
        Self {
            base,
            axes: [
                FreeAxis {
                    coord: first,
                    part: Part::Re,
                },
                FreeAxis {
                    coord: second,
                    part: Part::Re,
                },
            ],
        }
    }

    pub fn point(&self, u: f64, v: f64) -> PencilPoint {
        let mut c = self.base.coords().to_vec();
        for (axis, val) in self.axes.iter().zip([u, v]) {
            let old = c[axis.coord];
            c[axis.coord] = match axis.part {
                Part::Re => C64::new(val, old.im),
                Part::Im => C64::new(old.re, val),
            };
        }
        PencilPoint(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceOptions {
    pub refine_depth: usize,
    /// Accepted points satisfy `σ_min ≤ refine_tol · σ_max`.
    pub refine_tol: f64,
}

impl Default for SliceOptions {
    fn default() -> Self {
        Self {
            refine_depth: 30,
            refine_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub grid_index: (usize, usize),
    /// Slice coordinates `(u, v)` after refinement.
    pub uv: (f64, f64),
    pub z: PencilPoint,
    pub relative_sigma: f64,
}

/// Locates the joint spectrum on a real 2-D slice.
///
/// Grid nodes whose relative `σ_min` is no larger than its largest jump to a
/// neighbouring node are flagged (the node sits within about one cell of the
/// zero set); each flagged node is then refined by a compass search whose
/// step is halved `refine_depth` times. Points are returned in grid order.
pub fn spectrum_slice(
    tuple: &MatrixTuple,
    slice: &SliceSpec,
    grid: &Grid2,
    opts: &SliceOptions,
) -> Result<Vec<SpectrumPoint>> {
    if grid.x.n == 0 || grid.y.n == 0 {
        return Err(GeometryError::InvalidInput("empty grid".into()));
    }
    if slice.base.len() != tuple.len() {
        return Err(GeometryError::DimensionMismatch {
            expected: tuple.len(),
            actual: slice.base.len(),
        });
    }
    if slice.axes.iter().any(|a| a.coord >= tuple.len()) {
        return Err(GeometryError::InvalidInput("slice axis out of range".into()));
    }
    let rel_sigma = |u: f64, v: f64| -> f64 {
        let z = slice.point(u, v);
        let sv = linalg::singular_values(&tuple.eval_unchecked(z.coords()));
        let smax = sv[0];
        if smax > 0.0 {
            sv[sv.len() - 1] / smax
        } else {
            0.0
        }
    };
    let (nx, ny) = (grid.x.n, grid.y.n);
    let values: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| rel_sigma(grid.x.value(idx / ny), grid.y.value(idx % ny)))
        .collect();
    let at = |i: usize, j: usize| values[i * ny + j];

    let mut flagged = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let s = at(i, j);
            if s <= opts.refine_tol {
                flagged.push((i, j));
                continue;
            }
            let mut jump: f64 = 0.0;
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    if (di, dj) == (0, 0) || ii < 0 || jj < 0 || ii >= nx as i64 || jj >= ny as i64 {
                        continue;
                    }
                    jump = jump.max((at(ii as usize, jj as usize) - s).abs());
                }
            }
            if s <= jump {
                flagged.push((i, j));
            }
        }
    }

    let hx = if nx > 1 { grid.x.step().abs() } else { grid.y.step().abs() };
    let hy = if ny > 1 { grid.y.step().abs() } else { hx };
    let refined: Vec<Option<SpectrumPoint>> = flagged
        .par_iter()
        .map(|&(i, j)| {
            let (mut u, mut v) = (grid.x.value(i), grid.y.value(j));
            let mut best = at(i, j);
            let (mut sx, mut sy) = (hx, hy);
            for _ in 0..opts.refine_depth {
                for _ in 0..4 {
                    let mut moved = false;
                    let mut cand = (u, v, best);
                    for di in -1i32..=1 {
                        for dj in -1i32..=1 {
                            if (di, dj) == (0, 0) {
                                continue;
                            }
                            let (cu, cv) = (u + di as f64 * sx, v + dj as f64 * sy);
                            let s = rel_sigma(cu, cv);
                            if s < cand.2 {
                                cand = (cu, cv, s);
                                moved = true;
                            }
                        }
                    }
                    (u, v, best) = cand;
                    if !moved || best == 0.0 {
                        break;
                    }
                }
                if best == 0.0 {
                    break;
                }
                sx *= 0.5;
                sy *= 0.5;
            }
            (best <= opts.refine_tol).then(|| SpectrumPoint {
                grid_index: (i, j),
                uv: (u, v),
                z: slice.point(u, v),
                relative_sigma: best,
            })
        })
        .collect();

    let merge = 1e-9 * (hx.max(hy)).max(f64::MIN_POSITIVE);
    let mut out: Vec<SpectrumPoint> = Vec::new();
    for p in refined.into_iter().flatten() {
        if !out
            .iter()
            .any(|q| (q.uv.0 - p.uv.0).abs() <= merge && (q.uv.1 - p.uv.1).abs() <= merge)
        {
            out.push(p);
        }
    }
    Ok(out)
}
