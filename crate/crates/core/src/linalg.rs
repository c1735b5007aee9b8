//! Small dense helpers shared by the state algebra and the engines.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

/// Gram matrix `G[i][j] = <v_i|v_j>`.
pub fn gram(vecs: &[DVector<C64>]) -> DMatrix<C64> {
    let n = vecs.len();
    DMatrix::from_fn(n, n, |i, j| vecs[i].dotc(&vecs[j]))
}

/// Largest entrywise deviation of a square matrix from the identity.
pub fn identity_deviation(m: &DMatrix<C64>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            worst = worst.max((m[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn orthonormality_deviation(vecs: &[DVector<C64>]) -> f64 {
    identity_deviation(&gram(vecs))
}

pub fn unitarity_deviation(m: &DMatrix<C64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    if let Some(rows) = SparseRows::of(m) {
        return rows.unitarity_deviation();
    }
    identity_deviation(&(m.adjoint() * m))
}

/// Row lists of a mostly-zero matrix. Large permutation-like unitaries are
/// common (history and cell swaps), and dense products on them dominate.
pub struct SparseRows {
    cols: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseRows {
    const MIN_DIM: usize = 32;

    /// Sparse form when at most one entry in eight is nonzero.
    pub fn of(m: &DMatrix<C64>) -> Option<Self> {
        let (r, c) = m.shape();
        if r.min(c) < Self::MIN_DIM {
            return None;
        }
        let budget = r * c / 8;
        let mut rows = vec![Vec::new(); r];
        let mut nnz = 0;
        // column-major walk keeps each row list sorted by column
        for (j, col) in m.column_iter().enumerate() {
            for (i, z) in col.iter().enumerate() {
                if *z != C64::new(0.0, 0.0) {
                    nnz += 1;
                    if nnz > budget {
                        return None;
                    }
                    rows[i].push((j, *z));
                }
            }
        }
        Some(Self { cols: c, rows })
    }

    pub fn mul_vec(&self, v: &DVector<C64>) -> DVector<C64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows
                .iter()
                .map(|row| row.iter().map(|&(j, a)| a * v[j]).sum()),
        )
    }

    /// Entrywise deviation of `M^dagger M` from the identity.
    fn unitarity_deviation(&self) -> f64 {
        let mut acc: std::collections::HashMap<(usize, usize), C64> =
            std::collections::HashMap::new();
        for row in &self.rows {
            for &(j, a) in row {
                for &(k, b) in row {
                    *acc.entry((j, k)).or_default() += a.conj() * b;
                }
            }
        }
        let mut worst = 0.0_f64;
        for (&(j, k), &z) in &acc {
            let target = if j == k {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            worst = worst.max((z - target).norm());
        }
        if (0..self.cols).any(|j| !acc.contains_key(&(j, j))) {
            worst = worst.max(1.0);
        }
        worst
    }
}

pub fn hermiticity_deviation(m: &DMatrix<C64>) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    (m - m.adjoint())
        .iter()
        .fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `|u><v|`
pub fn outer(u: &DVector<C64>, v: &DVector<C64>) -> DMatrix<C64> {
    u * v.adjoint()
}

/// Projector onto the span of an orthonormal list.
pub fn projector(vecs: &[DVector<C64>], dim: usize) -> DMatrix<C64> {
    let mut p = DMatrix::zeros(dim, dim);
    for v in vecs {
        p += outer(v, v);
    }
    p
}

/// Sum of singular values.
pub fn nuclear_norm(m: &DMatrix<C64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Closest matrix with orthonormal columns (polar factor `U V^†`).
pub fn polar_orthonormalize(m: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^T");
    u * v_t
}

pub fn basis_vector(dim: usize, index: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[index] = C64::new(1.0, 0.0);
    v
}

/// Rotate a vector's global phase so that its first component with modulus
/// above `1e-8` is real and positive.
pub fn fix_phase(v: &mut DVector<C64>) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-8).copied() {
        let phase = z.conj() / z.norm();
        for x in v.iter_mut() {
            *x *= phase;
        }
    }
}

/// Frobenius norm of `A B - B A`.
pub fn commutator_norm(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a * b - b * a).norm()
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Complex exponential `e^{i theta}`.
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}
