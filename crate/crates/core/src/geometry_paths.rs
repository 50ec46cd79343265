//! Path lengths under (possibly singular) metrics, circle lengths, the
//! FK-determinant distance bound, winding numbers and contour-quadrature
//! Riesz projections.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::curvature::MetricField;
use crate::error::{GeometryError, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};
use crate::operator_gallery::{AnalyticOperator, ResolventOperator};
use crate::pencil::{MatrixTuple, PencilPoint, DEFAULT_SINGULAR_TOL};
use crate::quadrature::{self, Endpoint, ImproperOptions, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

impl Orientation {
    fn sign(self) -> f64 {
        match self {
            Self::CounterClockwise => 1.0,
            Self::Clockwise => -1.0,
        }
    }
}

type PathFn = Arc<dyn Fn(f64) -> Vec<C64> + Send + Sync>;

/// A path `t ↦ z(t)` on `[0, 1]` with its derivative.
#[derive(Clone)]
pub struct CallablePath {
    dim: usize,
    point: PathFn,
    velocity: PathFn,
}

impl CallablePath {
    pub fn new<F, G>(dim: usize, point: F, velocity: G) -> Self
    where
        F: Fn(f64) -> Vec<C64> + Send + Sync + 'static,
        G: Fn(f64) -> Vec<C64> + Send + Sync + 'static,
    {
        Self {
            dim,
            point: Arc::new(point),
            velocity: Arc::new(velocity),
        }
    }
}

impl fmt::Debug for CallablePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallablePath").field("dim", &self.dim).finish()
    }
}

#[derive(Debug, Clone)]
pub enum ParamPath {
    /// Straight segments through the vertices, uniform in `t`.
    Polyline(Vec<PencilPoint>),
    Circle {
        center: C64,
        radius: f64,
        turns: u32,
        orientation: Orientation,
    },
    Callable(CallablePath),
}

impl ParamPath {
    pub fn polyline(vertices: Vec<PencilPoint>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(GeometryError::InvalidInput("polyline needs two vertices".into()));
        }
        let n = vertices[0].len();
        if let Some(v) = vertices.iter().find(|v| v.len() != n) {
            return Err(GeometryError::DimensionMismatch {
                expected: n,
                actual: v.len(),
            });
        }
        Ok(Self::Polyline(vertices))
    }

    /// Segment between two points of `ℂ`.
    pub fn segment(a: C64, b: C64) -> Result<Self> {
        Self::polyline(vec![PencilPoint::new(vec![a])?, PencilPoint::new(vec![b])?])
    }

    pub fn circle(center: C64, radius: f64, turns: u32, orientation: Orientation) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !linalg::is_finite(center) {
            return Err(GeometryError::InvalidInput("circle needs a positive radius".into()));
        }
        if turns == 0 {
            return Err(GeometryError::InvalidInput("circle needs at least one turn".into()));
        }
        Ok(Self::Circle {
            center,
            radius,
            turns,
            orientation,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Polyline(v) => v[0].len(),
            Self::Circle { .. } => 1,
            Self::Callable(c) => c.dim,
        }
    }

    fn circle_angle(turns: u32, orientation: Orientation, t: f64) -> (f64, f64) {
        let speed = orientation.sign() * TAU * turns as f64;
        (speed * t, speed)
    }

    pub fn point(&self, t: f64) -> Vec<C64> {
        match self {
            Self::Polyline(v) => {
                let (seg, s) = self.locate(t);
                let (a, b) = (v[seg].coords(), v[seg + 1].coords());
                a.iter().zip(b).map(|(a, b)| a + (b - a) * s).collect()
            }
            &Self::Circle {
                center,
                radius,
                turns,
                orientation,
            } => {
                let (angle, _) = Self::circle_angle(turns, orientation, t);
                vec![center + C64::from_polar(radius, angle)]
            }
            Self::Callable(c) => (c.point)(t),
        }
    }

    pub fn velocity(&self, t: f64) -> Vec<C64> {
        match self {
            Self::Polyline(v) => {
                let (seg, _) = self.locate(t);
                let m = (v.len() - 1) as f64;
                let (a, b) = (v[seg].coords(), v[seg + 1].coords());
                a.iter().zip(b).map(|(a, b)| (b - a) * m).collect()
            }
            &Self::Circle {
                radius,
                turns,
                orientation,
                ..
            } => {
                let (angle, speed) = Self::circle_angle(turns, orientation, t);
                vec![C64::new(0.0, speed) * C64::from_polar(radius, angle)]
            }
            Self::Callable(c) => (c.velocity)(t),
        }
    }

    /// Segment index and local parameter of a polyline.
    fn locate(&self, t: f64) -> (usize, f64) {
        match self {
            Self::Polyline(v) => {
                let m = v.len() - 1;
                let x = (t.clamp(0.0, 1.0) * m as f64).min(m as f64);
                let seg = (x.floor() as usize).min(m - 1);
                (seg, x - seg as f64)
            }
            _ => (0, t),
        }
    }

    /// Parameter values where the path is only piecewise smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Polyline(v) => {
                let m = v.len() - 1;
                (0..=m).map(|i| i as f64 / m as f64).collect()
            }
            _ => vec![0.0, 1.0],
        }
    }
}

/// Result of a length computation; `value` is `+∞` when divergent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthEstimate {
    pub value: f64,
    pub divergent: bool,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthOptions {
    pub quad: QuadOptions,
    pub divergence_cap: f64,
}

impl Default for LengthOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions::with_rel_tol(1e-8),
            divergence_cap: 1e6,
        }
    }
}

impl LengthOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            quad: QuadOptions::with_rel_tol(rel_tol),
            ..Self::default()
        }
    }
}

/// `√(Σ z'_j g_{jk} conj(z'_k))` at parameter `t`.
fn speed<M: MetricField + ?Sized>(field: &M, path: &ParamPath, t: f64) -> Result<f64> {
    let z = PencilPoint::new(path.point(t))?;
    let sample = field.sample(&z)?;
    let q = sample.quadratic_form(&path.velocity(t));
    if !q.is_finite() {
        return Err(GeometryError::OutOfDomain(format!("metric is not finite at t = {t}")));
    }
    Ok(q.max(0.0).sqrt())
}

/// `L(γ) = ∫₀¹ √(z'(t)* g(z(t)) z'(t)) dt`.
///
/// An end of the path where the metric cannot be evaluated is treated as an
/// improper endpoint: the integral is refined dyadically toward it and
/// declared divergent when the partial sums grow without bound.
pub fn path_length<M: MetricField + ?Sized>(field: &M, path: &ParamPath) -> Result<LengthEstimate> {
    path_length_with(field, path, &LengthOptions::default())
}

pub fn path_length_with<M: MetricField + ?Sized>(
    field: &M,
    path: &ParamPath,
    opts: &LengthOptions,
) -> Result<LengthEstimate> {
    if path.dim() != field.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: field.dim(),
            actual: path.dim(),
        });
    }
    let end_ok = |t: f64| speed(field, path, t).is_ok();
    let (start_singular, end_singular) = (!end_ok(0.0), !end_ok(1.0));
    let cuts = path.breakpoints();
    let last = cuts.len() - 2;
    let mut total = 0.0;
    let mut abs_error = 0.0;
    for (i, w) in cuts.windows(2).enumerate() {
        let end = match (i == 0 && start_singular, i == last && end_singular) {
            (true, true) => Some(Endpoint::Both),
            (true, false) => Some(Endpoint::Left),
            (false, true) => Some(Endpoint::Right),
            (false, false) => None,
        };
        let f = |t: f64| speed(field, path, t);
        match end {
            None => {
                let r = quadrature::integrate_fallible(f, w[0], w[1], &opts.quad)?;
                if !r.converged {
                    return Err(GeometryError::NonConvergence(format!(
                        "length quadrature on [{}, {}] did not converge",
                        w[0], w[1]
                    )));
                }
                total += r.value;
                abs_error += r.abs_error;
            }
            Some(end) => {
                let iopts = ImproperOptions {
                    quad: opts.quad,
                    divergence_cap: opts.divergence_cap,
                    ..ImproperOptions::default()
                };
                let r = quadrature::integrate_improper(f, w[0], w[1], end, &iopts)?;
                if r.divergent {
                    return Ok(LengthEstimate {
                        value: f64::INFINITY,
                        divergent: true,
                        abs_error: f64::INFINITY,
                    });
                }
                total += r.value;
                abs_error += opts.quad.rel_tol * r.value.abs();
            }
        }
    }
    Ok(LengthEstimate {
        value: total,
        divergent: false,
        abs_error,
    })
}

/// `2πr∫₀¹‖(V − c − re^{2πit})⁻¹x‖dt` for a unit vector `x`.
pub fn circle_length<R: ResolventOperator + ?Sized>(
    op: &R,
    x: &CVector,
    radius: f64,
    center: C64,
) -> Result<f64> {
    if (x.norm() - 1.0).abs() > 1e-12 {
        return Err(GeometryError::InvalidState("circle length needs a unit vector".into()));
    }
    if !(radius > 0.0) {
        return Err(GeometryError::InvalidInput("radius must be positive".into()));
    }
    let mean = quadrature::periodic_trapezoid(
        |t| {
            let z = center + C64::from_polar(radius, TAU * t);
            Ok(op.resolvent_apply(x, z)?.norm())
        },
        64,
        1e-11,
        1 << 20,
    )?;
    Ok(TAU * radius * mean)
}

/// `(1/k)|Σ log σ_i(A(p)) − Σ log σ_i(A(q))|`, a lower bound for the trace
/// metric distance between `p` and `q`.
pub fn distance_lower_bound(tuple: &MatrixTuple, p: &PencilPoint, q: &PencilPoint) -> Result<f64> {
    let log_det = |z: &PencilPoint| -> Result<f64> {
        let value = tuple.eval(z)?;
        let sv = linalg::singular_values(&value);
        if !(sv.last().copied().unwrap_or(0.0) > DEFAULT_SINGULAR_TOL * sv[0]) {
            return Err(GeometryError::SingularPoint {
                sigma_min: sv.last().copied().unwrap_or(0.0),
                sigma_max: sv[0],
            });
        }
        Ok(sv.iter().map(|s| s.ln()).sum::<f64>() / sv.len() as f64)
    };
    Ok((log_det(p)? - log_det(q)?).abs())
}

/// Number of turns of a planar path around `p`.
pub fn winding_number(path: &ParamPath, p: C64) -> Result<i64> {
    if path.dim() != 1 {
        return Err(GeometryError::InvalidInput("winding number needs a planar path".into()));
    }
    let at = |t: f64| path.point(t)[0] - p;
    let mut n = 256usize;
    while n <= 1 << 22 {
        let pts: Vec<C64> = (0..=n).map(|i| at(i as f64 / n as f64)).collect();
        let scale = pts.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if pts.iter().any(|z| z.norm() <= 1e-12 * scale.max(1.0)) {
            return Err(GeometryError::OutOfDomain("point lies on the path".into()));
        }
        let mut total = 0.0;
        let mut fine = true;
        for w in pts.windows(2) {
            let step = (w[1] / w[0]).arg();
            if step.abs() >= 0.5 * PI {
                fine = false;
                break;
            }
            total += step;
        }
        if fine {
            return Ok((total / TAU).round() as i64);
        }
        n *= 2;
    }
    Err(GeometryError::NonConvergence(
        "argument steps did not resolve; the point is too close to the path".into(),
    ))
}

/// Circle `|z − center| = radius` traversed with `nodes` trapezoid nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub center: C64,
    pub radius: f64,
    pub nodes: usize,
}

impl ContourSpec {
    pub fn new(center: C64, radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !linalg::is_finite(center) {
            return Err(GeometryError::InvalidInput("contour needs a positive radius".into()));
        }
        if nodes < 8 {
            return Err(GeometryError::InvalidInput("contour needs at least 8 nodes".into()));
        }
        Ok(Self {
            center,
            radius,
            nodes,
        })
    }

    /// 32 starting nodes.
    pub fn circle(center: C64, radius: f64) -> Result<Self> {
        Self::new(center, radius, 32)
    }
}

/// Riesz projection `P₀` and `V₀ = (V − c)P₀` for the part of the spectrum
/// inside a contour centered at `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RieszPair {
    pub p0: CMatrix,
    pub v0: CMatrix,
    /// Node count at which successive doublings agreed.
    pub nodes: usize,
}

pub const RIESZ_REL_TOL: f64 = 1e-8;
const RIESZ_MAX_NODES: usize = 1 << 16;

/// `P₀ = (1/2πi)∮(z − V)⁻¹dz` and `V₀ = (1/2πi)∮(z − c)(z − V)⁻¹dz` by the
/// trapezoid rule, doubling the node count until both change by less than
/// `1e-8` relative.
pub fn riesz_projection(v: &CMatrix, contour: &ContourSpec) -> Result<RieszPair> {
    if !v.is_square() {
        return Err(GeometryError::InvalidInput("operator matrix must be square".into()));
    }
    let k = v.nrows();
    let node_terms = |m: usize, offset: bool| -> Result<(CMatrix, CMatrix)> {
        let terms: Vec<(CMatrix, CMatrix)> = (0..m)
            .into_par_iter()
            .map(|j| {
                let shift = if offset { 0.5 } else { 0.0 };
                let u = C64::from_polar(contour.radius, TAU * (j as f64 + shift) / m as f64);
                let mut a = -v.clone();
                for i in 0..k {
                    a[(i, i)] += contour.center + u;
                }
                let sample = crate::pencil::ResolventSample::from_matrix(
                    PencilPoint::from(vec![contour.center + u]),
                    a,
                    DEFAULT_SINGULAR_TOL,
                );
                let inv = sample.into_inverse()?;
                Ok((inv.scale_complex(u), inv.scale_complex(u * u)))
            })
            .collect::<Result<_>>()?;
        let mut p = CMatrix::zeros(k, k);
        let mut q = CMatrix::zeros(k, k);
        for (a, b) in terms {
            p += a;
            q += b;
        }
        Ok((p, q))
    };
    let mut m = contour.nodes;
    let (mut psum, mut vsum) = node_terms(m, false)?;
    let (mut p0, mut v0) = (psum.unscale(m as f64), vsum.unscale(m as f64));
    while m < RIESZ_MAX_NODES {
        // Doubling adds the midpoints of the current nodes.
        let (pe, ve) = node_terms(m, true)?;
        psum += pe;
        vsum += ve;
        m *= 2;
        let (p_new, v_new) = (psum.unscale(m as f64), vsum.unscale(m as f64));
        let pscale = p_new.norm().max(1.0);
        let vscale = v_new.norm().max(contour.radius * pscale);
        let dp = (&p_new - &p0).norm();
        let dv = (&v_new - &v0).norm();
        p0 = p_new;
        v0 = v_new;
        if dp <= RIESZ_REL_TOL * pscale && dv <= RIESZ_REL_TOL * vscale {
            return Ok(RieszPair { p0, v0, nodes: m });
        }
    }
    Err(GeometryError::NonConvergence(format!(
        "contour quadrature did not settle within {RIESZ_MAX_NODES} nodes"
    )))
}

trait ScaleComplex {
    fn scale_complex(&self, c: C64) -> CMatrix;
}

impl ScaleComplex for CMatrix {
    fn scale_complex(&self, c: C64) -> CMatrix {
        self.map(|x| x * c)
    }
}

/// Riesz pair for a gallery operator with a matrix form.
pub fn riesz_projection_op(op: &AnalyticOperator, contour: &ContourSpec) -> Result<RieszPair> {
    let v = op.to_matrix().ok_or_else(|| {
        GeometryError::InvalidInput(format!("{} has no matrix form", op.name()))
    })?;
    riesz_projection(&v, contour)
}

/// Principal-part threshold: a term below this norm ends the sequence.
pub const PRINCIPAL_PART_TOL: f64 = 1e-12;

/// `[P₀x, V₀x, V₀²x, …]`, ending with the first term of norm below `1e-12`
/// (included) or after `max_terms` terms.
pub fn principal_part(
    v: &CMatrix,
    x: &CVector,
    contour: &ContourSpec,
    max_terms: usize,
) -> Result<Vec<CVector>> {
    if x.len() != v.nrows() {
        return Err(GeometryError::DimensionMismatch {
            expected: v.nrows(),
            actual: x.len(),
        });
    }
    let pair = riesz_projection(v, contour)?;
    Ok(principal_terms(&pair, x, max_terms))
}

pub(crate) fn principal_terms(pair: &RieszPair, x: &CVector, max_terms: usize) -> Vec<CVector> {
    let mut out = Vec::new();
    let mut term = &pair.p0 * x;
    while out.len() < max_terms {
        let small = term.norm() < PRINCIPAL_PART_TOL;
        let next = &pair.v0 * &term;
        out.push(if small { term.map(|_| ZERO) } else { term });
        if small {
            break;
        }
        term = next;
    }
    out
}
