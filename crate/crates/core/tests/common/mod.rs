#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resolvent_geometry::linalg::{self, CMatrix, CVector, C64};
use resolvent_geometry::{MatrixTuple, PencilPoint};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_complex(rng: &mut ChaCha8Rng) -> C64 {
    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Entries uniform in the unit square.
pub fn random_matrix(rng: &mut ChaCha8Rng, k: usize) -> CMatrix {
    CMatrix::from_fn(k, k, |_, _| random_complex(rng))
}

pub fn random_vector(rng: &mut ChaCha8Rng, k: usize) -> CVector {
    CVector::from_fn(k, |_, _| random_complex(rng))
}

pub fn random_unit_vector(rng: &mut ChaCha8Rng, k: usize) -> CVector {
    let v = random_vector(rng, k);
    v.unscale(v.norm())
}

/// `I + s·G/√k`, condition number at most `(1 + s)/(1 − s)` for `s < 1`
/// in expectation; good enough for the corpora here.
pub fn well_conditioned(rng: &mut ChaCha8Rng, k: usize, s: f64) -> CMatrix {
    linalg::identity(k) + random_matrix(rng, k) * c(s / (k as f64).sqrt(), 0.0)
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize) -> PencilPoint {
    PencilPoint::new((0..n).map(|_| random_complex(rng)).collect()).unwrap()
}

/// `(I, S D₁ S⁻¹, …, S D_m S⁻¹)` with random diagonals: a commuting tuple.
pub fn commuting_normalized_tuple(rng: &mut ChaCha8Rng, k: usize, m: usize) -> MatrixTuple {
    let s = well_conditioned(rng, k, 0.5);
    let s_inv = linalg::inverse(&s).unwrap();
    let rest = (0..m)
        .map(|_| {
            let d: Vec<C64> = (0..k).map(|_| random_complex(rng) * c(2.0, 0.0)).collect();
            &s * linalg::diagonal(&d) * &s_inv
        })
        .collect();
    MatrixTuple::normalized(rest).unwrap()
}

pub fn random_tuple(rng: &mut ChaCha8Rng, k: usize, n: usize) -> MatrixTuple {
    MatrixTuple::new((0..n).map(|_| random_matrix(rng, k)).collect()).unwrap()
}

/// Relative σ_min of the pencil value, for picking points well inside the resolvent set.
pub fn relative_sigma(tuple: &MatrixTuple, z: &PencilPoint) -> f64 {
    tuple.resolvent(z).unwrap().relative_sigma()
}

/// A random point with relative σ_min above `floor`.
pub fn resolvent_point(rng: &mut ChaCha8Rng, tuple: &MatrixTuple, floor: f64) -> PencilPoint {
    loop {
        let z = random_point(rng, tuple.len());
        if relative_sigma(tuple, &z) > floor {
            return z;
        }
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}
