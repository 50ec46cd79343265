//! Dense complex linear algebra shared by every module.
//!
//! Thin wrappers over `nalgebra` plus one structural shortcut: a square matrix
//! whose sparsity pattern splits into independent index blocks (after a
//! symmetric permutation) is factored block by block. Truncated group pencils
//! are direct sums of 2×2 blocks, which turns an O(k³) SVD into O(k).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn identity(k: usize) -> CMatrix {
    CMatrix::identity(k, k)
}

/// Nilpotent Jordan block with `J e_{j+1} = e_j` and `J e_1 = 0`.
pub fn jordan_block(n: usize) -> CMatrix {
    let mut j = CMatrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        j[(i, i + 1)] = ONE;
    }
    j
}

pub fn diagonal(entries: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(entries))
}

pub fn real_diagonal(entries: &[f64]) -> CMatrix {
    CMatrix::from_fn(entries.len(), entries.len(), |i, j| {
        if i == j {
            C64::new(entries[i], 0.0)
        } else {
            ZERO
        }
    })
}

/// Standard basis vector `e_{index+1}` of length `k`.
pub fn basis_vector(k: usize, index: usize) -> CVector {
    let mut v = CVector::zeros(k);
    v[index] = ONE;
    v
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Hermitian inner product `<u, v> = Σ u_i conj(v_i)`, linear in `u`.
pub fn inner(u: &CVector, v: &CVector) -> C64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum()
}

/// Connected components of the sparsity graph of a square matrix. Two indices
/// are linked when either off-diagonal entry between them is nonzero.
pub fn block_components(m: &CMatrix) -> Vec<Vec<usize>> {
    let k = m.nrows();
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..k {
        for i in 0..k {
            if i != j && m[(i, j)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; k];
    for i in 0..k {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

fn sub_block(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut out: Vec<f64> = if m.is_square() {
        let blocks = block_components(m);
        if blocks.len() == 1 {
            m.singular_values().iter().copied().collect()
        } else {
            blocks
                .iter()
                .flat_map(|idx| {
                    sub_block(m, idx)
                        .singular_values()
                        .iter()
                        .copied()
                        .collect::<Vec<_>>()
                })
                .collect()
        }
    } else {
        m.singular_values().iter().copied().collect()
    };
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Ratio σ_max/σ_min; infinite for singular input.
pub fn condition_number(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).unscale(2.0)
}

/// Inverse by partial-pivot LU; `None` when a pivot vanishes exactly.
pub fn inverse(m: &CMatrix) -> Option<CMatrix> {
    m.clone().lu().try_inverse()
}

pub fn solve(m: &CMatrix, rhs: &CVector) -> Option<CVector> {
    m.clone().lu().solve(rhs)
}

/// Orthonormal basis of the column span, dropping directions whose singular
/// value is below `rel_tol · σ_max`.
pub fn orthonormal_basis(columns: &[CVector], rel_tol: f64) -> Vec<CVector> {
    if columns.is_empty() {
        return Vec::new();
    }
    let k = columns[0].len();
    let stacked = CMatrix::from_fn(k, columns.len(), |i, j| columns[j][i]);
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Vec::new();
    }
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel_tol * smax)
        .map(|(i, _)| u.column(i).into_owned())
        .collect()
}

pub fn is_finite(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}
