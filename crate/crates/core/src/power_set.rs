//! Blow-up exponents `k_x = limsup_{|z|→0} log g_x(z)/log g(z)` at an isolated
//! spectral point `0`, the power set they form, the `M_τ` filtration and the
//! similarity invariance of exponents.
//!
//! Matrices are handled through the Laurent split
//! `(V − z)⁻¹ = −Σ_{j<m} V₀ʲP₀/z^{j+1} + (V − z)⁻¹(I − P₀)`: the principal part
//! is exact for the nilpotent `V₀` and the regular part stays well
//! conditioned near `0`, so radii far below `ε^{1/m}` remain meaningful.

use std::f64::consts::TAU;

use rayon::prelude::*;

use crate::error::{GeometryError, Result};
use crate::geometry_paths::{self, ContourSpec, PRINCIPAL_PART_TOL};
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};
use crate::operator_gallery::{self, AnalyticOperator, ResolventOperator};

/// Geometric radii `r₀qʲ` and equispaced approach angles.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSchedule {
    pub r0: f64,
    pub q: f64,
    pub count: usize,
    pub angles: usize,
    /// Eigenvalues within this distance of `0` belong to the spectral point
    /// at `0`; `None` picks `10⁻²·max(1, ‖V‖)`.
    pub cluster_radius: Option<f64>,
}

impl Default for PowerSchedule {
    fn default() -> Self {
        Self {
            r0: 0.1,
            q: 10f64.powf(-0.5),
            count: 12,
            angles: 16,
            cluster_radius: None,
        }
    }
}

/// Radii used for the limsup surrogate.
pub const LIMSUP_WINDOW: usize = 3;
/// Exponents closer than this are merged in a power set.
pub const DEDUP_TOL: f64 = 0.02;

impl PowerSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0 && self.q > 0.0 && self.q < 1.0) {
            return Err(GeometryError::InvalidInput(
                "radius schedule needs r0 > 0 and 0 < q < 1".into(),
            ));
        }
        if self.count < LIMSUP_WINDOW || self.angles == 0 {
            return Err(GeometryError::InvalidInput(format!(
                "radius schedule needs at least {LIMSUP_WINDOW} radii and one angle"
            )));
        }
        Ok(())
    }

    pub fn radii(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.r0 * self.q.powi(j as i32)).collect()
    }

    /// `2πj/angles`; always contains `θ = 0`.
    pub fn angle_set(&self) -> Vec<f64> {
        (0..self.angles)
            .map(|j| TAU * j as f64 / self.angles as f64)
            .collect()
    }
}

/// A vector whose exponent is estimated.
#[derive(Debug, Clone, PartialEq)]
pub enum Probe {
    Vector { id: String, x: CVector },
    /// `f_α = 1_{[α, 1]}` for the Volterra operator, through closed forms.
    VolterraIndicator { alpha: f64 },
}

impl Probe {
    pub fn vector(id: impl Into<String>, x: CVector) -> Self {
        Self::Vector { id: id.into(), x }
    }

    pub fn basis(k: usize, index: usize) -> Self {
        Self::vector(format!("e{}", index + 1), linalg::basis_vector(k, index))
    }

    pub fn id(&self) -> String {
        match self {
            Self::Vector { id, .. } => id.clone(),
            Self::VolterraIndicator { alpha } => format!("f_{alpha}"),
        }
    }
}

/// Per-radius record of an estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusDiagnostic {
    pub radius: f64,
    /// Max over angles of the ratio (midpoint of the bracket when bracketed).
    pub ratio: f64,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
    /// Angle attaining the maximum.
    pub angle: f64,
    pub log_gx: f64,
    pub log_g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerEstimate {
    pub vector_id: String,
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    pub ratios: Vec<f64>,
    pub k_hat: f64,
    pub bracket: Option<(f64, f64)>,
    /// Whether the ratios move monotonically as the radius shrinks.
    pub monotone: bool,
    pub diagnostics: Vec<RadiusDiagnostic>,
}

impl PowerEstimate {
    pub fn half_width(&self) -> f64 {
        self.bracket.map(|(lo, hi)| 0.5 * (hi - lo)).unwrap_or(0.0)
    }
}

/// Resolvent of a matrix near an isolated spectral point at `0`, split into
/// its principal part and a regular remainder.
#[derive(Debug, Clone)]
pub struct LaurentResolvent {
    /// `V₀ʲP₀` for `j < order`.
    principal: Vec<CMatrix>,
    complement: CMatrix,
    /// `V(I − P₀) + P₀`, invertible near `0`.
    regular: CMatrix,
    has_regular_part: bool,
    v: CMatrix,
    pub p0: CMatrix,
    pub v0: CMatrix,
}

impl LaurentResolvent {
    pub fn new(v: &CMatrix, cluster_radius: Option<f64>) -> Result<Self> {
        if !v.is_square() || v.is_empty() {
            return Err(GeometryError::InvalidInput("operator matrix must be square".into()));
        }
        let k = v.nrows();
        let scale = linalg::spectral_norm(v).max(1.0);
        let delta = cluster_radius.unwrap_or(1e-2 * scale);
        let eig = v.clone().schur().eigenvalues().ok_or_else(|| {
            GeometryError::NonConvergence("Schur decomposition failed".into())
        })?;
        let moduli: Vec<f64> = eig.iter().map(|l| l.norm()).collect();
        let inner = moduli.iter().filter(|&&m| m <= delta).count();
        if inner == 0 {
            return Err(GeometryError::OutOfDomain(
                "0 is not an eigenvalue, so it is not a spectral point".into(),
            ));
        }
        let (p0, v0) = if inner == k {
            (linalg::identity(k), v.clone())
        } else {
            let cluster = moduli.iter().copied().filter(|&m| m <= delta).fold(0.0, f64::max);
            let outside = moduli.iter().copied().filter(|&m| m > delta).fold(f64::INFINITY, f64::min);
            // Geometric mean keeps the contour away from both groups.
            let radius = (cluster.max(0.1 * outside) * outside).sqrt();
            let pair = geometry_paths::riesz_projection(v, &ContourSpec::circle(ZERO, radius)?)?;
            (pair.p0, pair.v0)
        };
        let v0_norm = linalg::spectral_norm(&v0).max(1.0);
        let mut principal = vec![p0.clone()];
        loop {
            let next = &v0 * principal.last().unwrap();
            let j = principal.len() as i32;
            if linalg::spectral_norm(&next) <= PRINCIPAL_PART_TOL * v0_norm.powi(j) {
                break;
            }
            if principal.len() > k {
                return Err(GeometryError::NonConvergence(
                    "principal part is not nilpotent; 0 may not be isolated".into(),
                ));
            }
            principal.push(next);
        }
        let complement = linalg::identity(k) - &p0;
        let regular = v * &complement + &p0;
        Ok(Self {
            has_regular_part: inner < k,
            principal,
            complement,
            regular,
            v: v.clone(),
            p0,
            v0,
        })
    }

    /// Nilpotency order of `V₀` on the range of `P₀`.
    pub fn order(&self) -> usize {
        self.principal.len()
    }

    /// `(V − z)⁻¹` as a matrix.
    pub fn matrix(&self, z: C64) -> Result<CMatrix> {
        if z == ZERO {
            return Err(GeometryError::SingularPoint {
                sigma_min: 0.0,
                sigma_max: 1.0,
            });
        }
        let w = 1.0 / z;
        let k = self.v.nrows();
        let mut out = CMatrix::zeros(k, k);
        let mut wp = -w;
        for term in &self.principal {
            out += term.map(|c| c * wp);
            wp *= w;
        }
        if self.has_regular_part {
            let b = &self.regular - self.complement.map(|c| c * z);
            let inv = crate::pencil::ResolventSample::from_matrix(
                crate::pencil::PencilPoint::from(vec![z]),
                b,
                crate::pencil::DEFAULT_SINGULAR_TOL,
            )
            .into_inverse()?;
            out += inv * &self.complement;
        }
        if !out.iter().all(|&c| linalg::is_finite(c)) {
            return Err(GeometryError::NonConvergence(
                "resolvent overflowed at this radius".into(),
            ));
        }
        Ok(out)
    }
}

impl ResolventOperator for LaurentResolvent {
    fn dim(&self) -> usize {
        self.v.nrows()
    }

    fn apply(&self, x: &CVector) -> CVector {
        &self.v * x
    }

    fn resolvent_apply(&self, x: &CVector, z: C64) -> Result<CVector> {
        Ok(self.matrix(z)? * x)
    }
}

/// Source of `log g_x` and `log g` at a point.
enum Sampler {
    Jordan(usize),
    Laurent(LaurentResolvent),
    Volterra,
}

impl Sampler {
    fn for_operator(op: &AnalyticOperator, schedule: &PowerSchedule) -> Result<Self> {
        match op {
            AnalyticOperator::Jordan { n } => Ok(Self::Jordan(*n)),
            AnalyticOperator::Volterra { .. } => Ok(Self::Volterra),
            other => {
                let v = other.to_matrix().expect("finite variant");
                Ok(Self::Laurent(LaurentResolvent::new(&v, schedule.cluster_radius)?))
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Self::Jordan(n) => Some(*n),
            Self::Laurent(l) => Some(l.dim()),
            Self::Volterra => None,
        }
    }

    /// `(log g_x, log g_lower, log g_upper)` at `z`.
    fn logs(&self, probe: &Probe, z: C64) -> Result<(f64, f64, f64)> {
        match (self, probe) {
            (Self::Volterra, Probe::VolterraIndicator { alpha }) => {
                let gx = operator_gallery::volterra_indicator_log_norm_sq(*alpha, z)?;
                let lo = operator_gallery::volterra_indicator_log_norm_sq(0.0, z)?;
                let hi = 2.0 * operator_gallery::volterra_log_norm_upper(z)?;
                Ok((gx, lo, hi))
            }
            (Self::Volterra, Probe::Vector { .. }) => Err(GeometryError::InvalidInput(
                "Volterra exponents are estimated for indicator functions".into(),
            )),
            (_, Probe::VolterraIndicator { .. }) => Err(GeometryError::InvalidInput(
                "indicator probes apply to the Volterra operator only".into(),
            )),
            (sampler, Probe::Vector { x, .. }) => {
                let r = match sampler {
                    Self::Jordan(n) => operator_gallery::nilpotent_resolvent_matrix(*n, z)?,
                    Self::Laurent(l) => l.matrix(z)?,
                    Self::Volterra => unreachable!(),
                };
                let gx = (&r * x).norm_squared().ln();
                let g = 2.0 * linalg::spectral_norm(&r).ln();
                Ok((gx, g, g))
            }
        }
    }
}

fn normalized_probe(probe: &Probe, dim: Option<usize>) -> Result<Probe> {
    match probe {
        Probe::Vector { id, x } => {
            if let Some(k) = dim {
                if x.len() != k {
                    return Err(GeometryError::DimensionMismatch {
                        expected: k,
                        actual: x.len(),
                    });
                }
            }
            let n = x.norm();
            if !(n > 0.0 && n.is_finite()) {
                return Err(GeometryError::InvalidInput("probe vector must be nonzero".into()));
            }
            Ok(Probe::Vector {
                id: id.clone(),
                x: x.unscale(n),
            })
        }
        other => Ok(other.clone()),
    }
}

/// Estimates `k_x` by the largest of the max-over-angle ratios at the three
/// smallest radii. The Volterra operator is sampled along `θ = 0` only,
/// where its closed-form bracket is informative.
pub fn power_exponent(
    op: &AnalyticOperator,
    probe: &Probe,
    schedule: &PowerSchedule,
) -> Result<PowerEstimate> {
    schedule.validate()?;
    let sampler = Sampler::for_operator(op, schedule)?;
    estimate(&sampler, probe, schedule)
}

fn estimate(sampler: &Sampler, probe: &Probe, schedule: &PowerSchedule) -> Result<PowerEstimate> {
    let probe = normalized_probe(probe, sampler.dim())?;
    let radii = schedule.radii();
    let angles = match sampler {
        Sampler::Volterra => vec![0.0],
        _ => schedule.angle_set(),
    };
    let bracketed = matches!(sampler, Sampler::Volterra);
    let diagnostics = radii
        .par_iter()
        .map(|&r| {
            let mut best: Option<RadiusDiagnostic> = None;
            for &theta in &angles {
                let z = C64::from_polar(r, theta);
                let (gx, lo, hi) = sampler.logs(&probe, z)?;
                if !(lo > 0.0) || !gx.is_finite() || !hi.is_finite() {
                    return Err(GeometryError::OutOfDomain(format!(
                        "log g is not positive at radius {r:e}; shrink the schedule"
                    )));
                }
                let (ratio_lower, ratio_upper) = if gx >= 0.0 {
                    (gx / hi, gx / lo)
                } else {
                    (gx / lo, gx / hi)
                };
                let d = RadiusDiagnostic {
                    radius: r,
                    ratio: 0.5 * (ratio_lower + ratio_upper),
                    ratio_lower,
                    ratio_upper,
                    angle: theta,
                    log_gx: gx,
                    log_g: 0.5 * (lo + hi),
                };
                if best.as_ref().is_none_or(|b| d.ratio > b.ratio) {
                    best = Some(d);
                }
            }
            Ok(best.expect("at least one angle"))
        })
        .collect::<Result<Vec<_>>>()?;
    let window = &diagnostics[diagnostics.len() - LIMSUP_WINDOW..];
    let max_of = |f: fn(&RadiusDiagnostic) -> f64| window.iter().map(f).fold(f64::MIN, f64::max);
    let min_of = |f: fn(&RadiusDiagnostic) -> f64| window.iter().map(f).fold(f64::MAX, f64::min);
    let (lo, hi) = (max_of(|d| d.ratio_lower), max_of(|d| d.ratio_upper));
    // Finite-radius ratios still carry an O(r|log r|) bias. The spread across
    // the window bounds what is left of it, so the bracket is widened by that much.
    let tail = |f: fn(&RadiusDiagnostic) -> f64| max_of(f) - min_of(f);
    let widened = (
        min_of(|d| d.ratio_lower) - tail(|d| d.ratio_lower),
        hi + tail(|d| d.ratio_upper),
    );
    let ratios: Vec<f64> = diagnostics.iter().map(|d| d.ratio).collect();
    let steps: Vec<f64> = ratios.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = steps.iter().all(|&s| s >= -1e-12) || steps.iter().all(|&s| s <= 1e-12);
    Ok(PowerEstimate {
        vector_id: probe.id(),
        radii,
        angles,
        ratios,
        k_hat: if bracketed { 0.5 * (lo + hi) } else { max_of(|d| d.ratio) },
        bracket: bracketed.then_some(widened),
        monotone,
        diagnostics,
    })
}

/// One element of a sampled power set with the probes attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSetEntry {
    pub exponent: f64,
    pub witnesses: Vec<String>,
}

/// Sorted, deduplicated exponents over a list of probes.
pub fn power_set_sample(
    op: &AnalyticOperator,
    probes: &[Probe],
    schedule: &PowerSchedule,
) -> Result<(Vec<PowerSetEntry>, Vec<PowerEstimate>)> {
    schedule.validate()?;
    let sampler = Sampler::for_operator(op, schedule)?;
    let estimates = probes
        .iter()
        .map(|p| estimate(&sampler, p, schedule))
        .collect::<Result<Vec<_>>>()?;
    Ok((deduplicate(&estimates), estimates))
}

fn deduplicate(estimates: &[PowerEstimate]) -> Vec<PowerSetEntry> {
    let mut sorted: Vec<&PowerEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| a.k_hat.total_cmp(&b.k_hat));
    let mut groups: Vec<Vec<&PowerEstimate>> = Vec::new();
    for e in sorted {
        match groups.last_mut() {
            Some(g) if e.k_hat - g[0].k_hat <= DEDUP_TOL => g.push(e),
            _ => groups.push(vec![e]),
        }
    }
    groups
        .into_iter()
        .map(|g| PowerSetEntry {
            exponent: g.iter().map(|e| e.k_hat).sum::<f64>() / g.len() as f64,
            witnesses: g.iter().map(|e| e.vector_id.clone()).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationProbe {
    pub tau: f64,
    /// Indices into the corpus of vectors with `k̂ ≤ τ`.
    pub members: Vec<usize>,
    pub member_exponents: Vec<f64>,
    /// Orthonormal basis of the span of the members.
    pub basis: Vec<CVector>,
    /// `max_B ‖(I − Π)BΠ‖₂` over the commutant generators.
    pub commutant_defect: f64,
}

/// Rank cutoff when orthonormalizing filtration members.
pub const SPAN_REL_TOL: f64 = 1e-8;

pub fn filtration_probe(
    v: &CMatrix,
    tau: f64,
    corpus: &[CVector],
    generators: &[CMatrix],
    schedule: &PowerSchedule,
) -> Result<FiltrationProbe> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(GeometryError::InvalidInput(format!("tau must lie in [0, 1], got {tau}")));
    }
    let k = v.nrows();
    let vnorm = linalg::spectral_norm(v);
    for (i, b) in generators.iter().enumerate() {
        if b.nrows() != k || b.ncols() != k {
            return Err(GeometryError::DimensionMismatch {
                expected: k,
                actual: b.nrows(),
            });
        }
        let defect = linalg::frobenius(&linalg::commutator(b, v));
        if defect > 1e-10 * (1.0 + linalg::spectral_norm(b) * vnorm) {
            return Err(GeometryError::InvalidInput(format!(
                "generator {i} does not commute with the operator (defect {defect:e})"
            )));
        }
    }
    schedule.validate()?;
    let sampler = Sampler::Laurent(LaurentResolvent::new(v, schedule.cluster_radius)?);
    let mut members = Vec::new();
    let mut member_exponents = Vec::new();
    for (i, x) in corpus.iter().enumerate() {
        let e = estimate(&sampler, &Probe::vector(format!("v{i}"), x.clone()), schedule)?;
        if e.k_hat <= tau {
            members.push(i);
            member_exponents.push(e.k_hat);
        }
    }
    let span: Vec<CVector> = members.iter().map(|&i| corpus[i].clone()).collect();
    let basis = linalg::orthonormal_basis(&span, SPAN_REL_TOL);
    let commutant_defect = if basis.is_empty() {
        0.0
    } else {
        let q = CMatrix::from_fn(k, basis.len(), |r, c| basis[c][r]);
        let pi = &q * q.adjoint();
        let outside = linalg::identity(k) - &pi;
        generators
            .iter()
            .map(|b| linalg::spectral_norm(&(&outside * b * &pi)))
            .fold(0.0, f64::max)
    };
    Ok(FiltrationProbe {
        tau,
        members,
        member_exponents,
        basis,
        commutant_defect,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityEntry {
    pub vector_id: String,
    /// `k_x(S⁻¹VS)`.
    pub similar: f64,
    /// `k_{Sx/‖Sx‖}(V)`.
    pub original: f64,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub condition: f64,
    pub entries: Vec<SimilarityEntry>,
    pub max_discrepancy: f64,
}

/// Largest condition number accepted for a similarity.
pub const SIMILARITY_MAX_CONDITION: f64 = 1e6;

/// Compares `k_x(S⁻¹VS)` with `k_{Sx}(V)` for each probe vector.
pub fn similarity_invariance_check(
    v: &CMatrix,
    s: &CMatrix,
    vectors: &[CVector],
    schedule: &PowerSchedule,
) -> Result<SimilarityReport> {
    if s.nrows() != v.nrows() || !s.is_square() {
        return Err(GeometryError::DimensionMismatch {
            expected: v.nrows(),
            actual: s.nrows(),
        });
    }
    let condition = linalg::condition_number(s);
    if !(condition <= SIMILARITY_MAX_CONDITION) {
        return Err(GeometryError::InvalidInput(format!(
            "similarity is too ill-conditioned (condition {condition:e})"
        )));
    }
    schedule.validate()?;
    let s_inv = linalg::inverse(s).ok_or_else(|| {
        GeometryError::InvalidInput("similarity is singular".into())
    })?;
    let w = &s_inv * v * s;
    let original = Sampler::Laurent(LaurentResolvent::new(v, schedule.cluster_radius)?);
    let similar = Sampler::Laurent(LaurentResolvent::new(&w, schedule.cluster_radius)?);
    let mut entries = Vec::new();
    for (i, x) in vectors.iter().enumerate() {
        let id = format!("v{i}");
        let a = estimate(&similar, &Probe::vector(id.clone(), x.clone()), schedule)?;
        let b = estimate(&original, &Probe::vector(id.clone(), s * x), schedule)?;
        entries.push(SimilarityEntry {
            vector_id: id,
            similar: a.k_hat,
            original: b.k_hat,
            discrepancy: (a.k_hat - b.k_hat).abs(),
        });
    }
    let max_discrepancy = entries.iter().map(|e| e.discrepancy).fold(0.0, f64::max);
    Ok(SimilarityReport {
        condition,
        entries,
        max_discrepancy,
    })
}

/// Radius sweep of `r^{N−1}·L_x(C_r)` next to `‖V₀ᴺx‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct NilpotencyProbe {
    pub order: usize,
    pub scaled_lengths: Vec<(f64, f64)>,
    /// The scaled lengths did not grow by more than a factor 10 across the sweep.
    pub bounded: bool,
    pub v0_power_norm: f64,
}

/// If `r^{N−1}L_x(C_r)` stays bounded as `r → 0`, then `V₀ᴺx = 0`.
pub fn nilpotency_probe(
    v: &CMatrix,
    x: &CVector,
    order: usize,
    radii: &[f64],
) -> Result<NilpotencyProbe> {
    if radii.len() < 2 || order == 0 {
        return Err(GeometryError::InvalidInput(
            "nilpotency probe needs two radii and a positive order".into(),
        ));
    }
    let laurent = LaurentResolvent::new(v, None)?;
    let x = x.unscale(x.norm());
    let mut scaled = Vec::with_capacity(radii.len());
    for &r in radii {
        let l = geometry_paths::circle_length(&laurent, &x, r, ZERO)?;
        scaled.push((r, r.powi(order as i32 - 1) * l));
    }
    let mut sorted = scaled.clone();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (first, last) = (sorted[0].1, sorted[sorted.len() - 1].1);
    let mut y = laurent.p0.clone() * &x;
    for _ in 0..order {
        y = &laurent.v0 * y;
    }
    Ok(NilpotencyProbe {
        order,
        scaled_lengths: scaled,
        bounded: last <= 10.0 * first,
        v0_power_norm: y.norm(),
    })
}
