//! One-dimensional quadrature: globally adaptive Gauss–Kronrod (7/15),
//! subtraction of known logarithmic singularities, and dyadic refinement
//! toward a possibly singular endpoint.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{GeometryError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_subdivisions: 4000,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > scaled {
            scaled = min_err;
        }
    }
    scaled
}

/// 15-point Kronrod rule on `[a, b]` with the embedded 7-point Gauss error.
fn gk15<F>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center)?;
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = rescale_error((res_k - res_g) * half, res_abs * half.abs(), res_asc * half.abs());
    Ok((res_k * half, err))
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration of a fallible integrand. An integrand error
/// aborts the integration and is returned unchanged.
pub fn integrate_fallible<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
            converged: true,
        });
    }
    let (v0, e0) = gk15(&mut f, a, b)?;
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v0,
        error: e0,
    });
    let mut total = v0;
    let mut total_err = e0;
    let mut panels = 1;
    loop {
        if !total.is_finite() {
            return Ok(QuadResult {
                value: total,
                abs_error: f64::INFINITY,
                evaluations,
                converged: false,
            });
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if total_err <= target {
            return Ok(QuadResult {
                value: total,
                abs_error: total_err,
                evaluations,
                converged: true,
            });
        }
        if panels >= opts.max_subdivisions {
            return Ok(QuadResult {
                value: total,
                abs_error: total_err,
                evaluations,
                converged: false,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            total_err = heap.iter().map(|p| p.error).sum();
            continue;
        }
        let (vl, el) = gk15(&mut f, worst.a, mid)?;
        let (vr, er) = gk15(&mut f, mid, worst.b)?;
        evaluations += 30;
        total += vl + vr - worst.value;
        total_err += el + er - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: vl,
            error: el,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: vr,
            error: er,
        });
        panels += 1;
        if panels % 64 == 0 {
            // Refresh running sums against drift.
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
}

pub fn integrate<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> QuadResult
where
    F: FnMut(f64) -> f64,
{
    integrate_fallible(|t| Ok(f(t)), a, b, opts).expect("infallible integrand")
}

/// A term `weight · log|t - at|` contained in an integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSingularity {
    pub at: f64,
    pub weight: f64,
}

/// `∫_a^b log|t - s| dt` in closed form.
pub fn log_abs_integral(a: f64, b: f64, s: f64) -> f64 {
    fn antiderivative(u: f64) -> f64 {
        if u == 0.0 {
            0.0
        } else {
            u * u.abs().ln() - u
        }
    }
    antiderivative(b - s) - antiderivative(a - s)
}

/// Integrates `f` whose logarithmic singularities are listed in `singular`.
///
/// The listed terms are subtracted from `f` so the adaptive rule only sees a
/// bounded remainder, and are added back in closed form. The interval is split
/// at interior singular points.
pub fn integrate_log_singular<F>(
    mut f: F,
    a: f64,
    b: f64,
    singular: &[LogSingularity],
    opts: &QuadOptions,
) -> QuadResult
where
    F: FnMut(f64) -> f64,
{
    let mut cuts = vec![a];
    let mut interior: Vec<f64> = singular
        .iter()
        .map(|s| s.at)
        .filter(|&s| s > a && s < b)
        .collect();
    interior.sort_by(|x, y| x.total_cmp(y));
    interior.dedup();
    cuts.extend(interior);
    cuts.push(b);

    let mut remainder = |t: f64| {
        let subtracted: f64 = singular
            .iter()
            .map(|s| s.weight * (t - s.at).abs().ln())
            .sum();
        f(t) - subtracted
    };
    let mut value = 0.0;
    let mut abs_error = 0.0;
    let mut evaluations = 0;
    let mut converged = true;
    for w in cuts.windows(2) {
        let piece = integrate(&mut remainder, w[0], w[1], opts);
        value += piece.value;
        abs_error += piece.abs_error;
        evaluations += piece.evaluations;
        converged &= piece.converged;
    }
    let closed: f64 = singular
        .iter()
        .map(|s| s.weight * log_abs_integral(a, b, s.at))
        .sum();
    QuadResult {
        value: value + closed,
        abs_error,
        evaluations,
        converged,
    }
}

/// Which end of the interval may carry a singularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Left,
    Right,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImproperResult {
    /// `+∞` when divergent.
    pub value: f64,
    pub divergent: bool,
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImproperOptions {
    pub quad: QuadOptions,
    /// Partial sums beyond this are declared divergent.
    pub divergence_cap: f64,
    pub max_levels: usize,
}

impl Default for ImproperOptions {
    fn default() -> Self {
        Self {
            quad: QuadOptions::with_rel_tol(1e-10),
            divergence_cap: 1e6,
            max_levels: 60,
        }
    }
}

/// Integral of a nonnegative integrand with a possible singularity at one or
/// both endpoints, by dyadic panels shrinking toward the singular end.
///
/// Level contributions of an integrable power singularity decay
/// geometrically and the tail is extrapolated from the last ratio; a
/// logarithmically divergent integral produces non-decaying contributions and
/// is reported as divergent.
pub fn integrate_improper<F>(
    mut f: F,
    a: f64,
    b: f64,
    end: Endpoint,
    opts: &ImproperOptions,
) -> Result<ImproperResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    improper_dyn(&mut f, a, b, end, opts)
}

fn improper_dyn(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    a: f64,
    b: f64,
    end: Endpoint,
    opts: &ImproperOptions,
) -> Result<ImproperResult> {
    match end {
        Endpoint::Both => {
            let mid = 0.5 * (a + b);
            let left = improper_dyn(f, a, mid, Endpoint::Left, opts)?;
            if left.divergent {
                return Ok(left);
            }
            let right = improper_dyn(f, mid, b, Endpoint::Right, opts)?;
            Ok(ImproperResult {
                value: left.value + right.value,
                divergent: right.divergent,
                levels: left.levels.max(right.levels),
            })
        }
        Endpoint::Left => {
            // Mirror onto a right-singular problem.
            improper_dyn(&mut |t| f(a + b - t), a, b, Endpoint::Right, opts)
        }
        Endpoint::Right => {
            let len = b - a;
            let mut sum = 0.0;
            let mut prev: Option<f64> = None;
            let mut stalled = 0;
            let mut lo = a;
            let mut last_estimate: Option<f64> = None;
            for level in 1..=opts.max_levels {
                let hi = b - len * 0.5f64.powi(level as i32);
                let piece = integrate_fallible(&mut *f, lo, hi, &opts.quad)?;
                let c = piece.value;
                sum += c;
                lo = hi;
                if !sum.is_finite() || sum.abs() > opts.divergence_cap {
                    return Ok(divergent(level));
                }
                let small = c.abs() <= opts.quad.rel_tol * sum.abs().max(opts.quad.abs_tol);
                if small && level >= 3 {
                    return Ok(ImproperResult {
                        value: sum,
                        divergent: false,
                        levels: level,
                    });
                }
                if let Some(p) = prev {
                    let ratio = if p != 0.0 { c / p } else { 0.0 };
                    if level >= 4 && ratio >= 0.97 {
                        stalled += 1;
                        if stalled >= 6 {
                            return Ok(divergent(level));
                        }
                    } else {
                        stalled = 0;
                    }
                    if (0.0..0.9).contains(&ratio) {
                        // Geometric tail of a power-law endpoint singularity.
                        let estimate = sum + c * ratio / (1.0 - ratio);
                        if let Some(last) = last_estimate {
                            if level >= 4
                                && (estimate - last).abs() <= opts.quad.rel_tol * estimate.abs()
                            {
                                return Ok(ImproperResult {
                                    value: estimate,
                                    divergent: false,
                                    levels: level,
                                });
                            }
                        }
                        last_estimate = Some(estimate);
                    } else {
                        last_estimate = None;
                    }
                }
                prev = Some(c);
            }
            // Out of levels: accept only if the last panel no longer matters.
            match prev {
                Some(c) if c.abs() <= 1e-6 * sum.abs() => Ok(ImproperResult {
                    value: sum,
                    divergent: false,
                    levels: opts.max_levels,
                }),
                _ => Err(GeometryError::NonConvergence(
                    "endpoint refinement exhausted its levels".into(),
                )),
            }
        }
    }
}

fn divergent(levels: usize) -> ImproperResult {
    ImproperResult {
        value: f64::INFINITY,
        divergent: true,
        levels,
    }
}

/// Trapezoid rule for a smooth 1-periodic integrand over `[0, 1)`, doubling
/// the node count from `start` until successive values agree to `rel_tol`.
pub fn periodic_trapezoid<F>(mut f: F, start: usize, rel_tol: f64, max_nodes: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut m = start.max(4);
    let mut sum: f64 = (0..m).map(|i| f(i as f64 / m as f64)).sum::<Result<f64>>()?;
    let mut value = sum / m as f64;
    while m < max_nodes {
        // New nodes are the midpoints of the old ones.
        let extra: f64 = (0..m)
            .map(|i| f((i as f64 + 0.5) / m as f64))
            .sum::<Result<f64>>()?;
        sum += extra;
        m *= 2;
        let next = sum / m as f64;
        if (next - value).abs() <= rel_tol * next.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        value = next;
    }
    Err(GeometryError::NonConvergence(format!(
        "periodic trapezoid did not settle within {max_nodes} nodes"
    )))
}
