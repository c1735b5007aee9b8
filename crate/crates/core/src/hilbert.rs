//! Composite-system state algebra.
//!
//! States are dense amplitude vectors over an ordered list of subsystems.
//! Subsystem 0 is the slowest-varying digit of the flattened index, so the
//! amplitude of `|i_0 i_1 ... i_{n-1}>` lives at
//! `((i_0 * d_1 + i_1) * d_2 + i_2) ...`.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{fix_phase, identity_deviation, orthonormality_deviation, unitarity_deviation};

pub const NORM_TOL: f64 = 1e-9;
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;
/// Relative modulus gap below which Schmidt coefficients are treated as one
/// degenerate group.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Projection weights below this are treated as exactly orthogonal outcomes.
pub const ZERO_PROJECTION: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Normalized pure state of a composite system.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    dims: Vec<usize>,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        Self::with_tolerance(dims, amps, NORM_TOL)
    }

    pub fn with_tolerance(dims: Vec<usize>, amps: Vec<C64>, tol: f64) -> Result<Self> {
        check_dims(&dims, amps.len())?;
        let norm = l2(&amps);
        if (norm - 1.0).abs() > tol {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { dims, amps })
    }

    /// Normalizes the given amplitudes; fails only on the zero vector.
    pub fn from_unnormalized(dims: Vec<usize>, mut amps: Vec<C64>) -> Result<Self> {
        check_dims(&dims, amps.len())?;
        let norm = l2(&amps);
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized { norm });
        }
        for a in amps.iter_mut() {
            *a /= norm;
        }
        Ok(Self { dims, amps })
    }

    /// Computational basis state `|digits>`.
    pub fn basis(dims: Vec<usize>, digits: &[usize]) -> Result<Self> {
        if digits.len() != dims.len() {
            return Err(Error::LengthMismatch {
                expected: dims.len(),
                actual: digits.len(),
            });
        }
        let total = check_dims(&dims, dims.iter().product())?;
        let mut amps = vec![ZERO; total];
        amps[flat_index(&dims, digits)?] = C64::new(1.0, 0.0);
        Ok(Self { dims, amps })
    }

    /// Single-subsystem state from a vector.
    pub fn single(amps: Vec<C64>) -> Result<Self> {
        let d = amps.len();
        Self::new(vec![d], amps)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn norm(&self) -> f64 {
        l2(&self.amps)
    }

    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<C64> {
        Ok(self.amps[flat_index(&self.dims, digits)?])
    }
}

fn l2(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

fn check_dims(dims: &[usize], len: usize) -> Result<usize> {
    if dims.is_empty() {
        return Err(Error::Empty("subsystem dimensions"));
    }
    if dims.contains(&0) {
        return Err(Error::Parameter("subsystem dimension 0".into()));
    }
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Parameter("dimension product overflows".into()))?;
    if total != len {
        return Err(Error::DimensionMismatch {
            expected: total,
            actual: len,
        });
    }
    Ok(total)
}

pub fn flat_index(dims: &[usize], digits: &[usize]) -> Result<usize> {
    let mut idx = 0;
    for (k, (&d, &i)) in dims.iter().zip(digits).enumerate() {
        if i >= d {
            return Err(Error::InvalidSubsystem {
                index: k,
                count: dims.len(),
            });
        }
        idx = idx * d + i;
    }
    Ok(idx)
}

pub fn digits_of(dims: &[usize], mut index: usize) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Flat offsets of every joint configuration of `subsystems` (row-major in the
/// listed order) with all other digits zero.
pub fn offsets(dims: &[usize], subsystems: &[usize]) -> Vec<usize> {
    let st = strides(dims);
    let mut out = vec![0usize];
    for &s in subsystems {
        let mut next = Vec::with_capacity(out.len() * dims[s]);
        for &base in &out {
            for i in 0..dims[s] {
                next.push(base + i * st[s]);
            }
        }
        out = next;
    }
    out
}

fn check_subsystems(dims: &[usize], subs: &[usize]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for &s in subs {
        if s >= dims.len() {
            return Err(Error::InvalidSubsystem {
                index: s,
                count: dims.len(),
            });
        }
        if !seen.insert(s) {
            return Err(Error::Parameter(format!("subsystem {s} listed twice")));
        }
    }
    Ok(())
}

fn complement(n: usize, subs: &[usize]) -> Vec<usize> {
    (0..n).filter(|i| !subs.contains(i)).collect()
}

/// A split of the subsystems into a "system" side and an "environment" side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Bipartition {
    pub fn new(left: Vec<usize>, subsystems: usize) -> Result<Self> {
        let mut left = left;
        left.sort_unstable();
        left.dedup();
        if left.is_empty() {
            return Err(Error::InvalidCut("left side is empty".into()));
        }
        if let Some(&bad) = left.iter().find(|&&i| i >= subsystems) {
            return Err(Error::InvalidSubsystem {
                index: bad,
                count: subsystems,
            });
        }
        if left.len() == subsystems {
            return Err(Error::InvalidCut("left side is not a proper subset".into()));
        }
        let right = complement(subsystems, &left);
        Ok(Self { left, right })
    }

    /// `{0..k} | {k..n}`
    pub fn prefix(k: usize, subsystems: usize) -> Result<Self> {
        Self::new((0..k).collect(), subsystems)
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn subsystems(&self) -> usize {
        self.left.len() + self.right.len()
    }

    fn check(&self, state: &StateVector) -> Result<()> {
        if self.subsystems() != state.subsystems() {
            return Err(Error::InvalidCut(format!(
                "cut covers {} subsystems, state has {}",
                self.subsystems(),
                state.subsystems()
            )));
        }
        Ok(())
    }
}

/// Unitary acting on an ordered list of subsystems.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalUnitary {
    targets: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl LocalUnitary {
    pub fn new(targets: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::Empty("unitary targets"));
        }
        let deviation = unitarity_deviation(&matrix);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self { targets, matrix })
    }

    pub fn identity(targets: Vec<usize>, dim: usize) -> Self {
        Self {
            targets,
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        identity_deviation(&self.matrix) <= tol
    }
}

pub fn tensor_product(parts: &[StateVector]) -> Result<StateVector> {
    let (first, rest) = parts.split_first().ok_or(Error::Empty("tensor factors"))?;
    let mut dims = first.dims.clone();
    let mut amps = first.amps.clone();
    for p in rest {
        dims.extend_from_slice(&p.dims);
        let mut next = Vec::with_capacity(amps.len() * p.amps.len());
        for a in &amps {
            for b in &p.amps {
                next.push(a * b);
            }
        }
        amps = next;
    }
    StateVector::new(dims, amps)
}

pub fn apply_local(state: &StateVector, u: &LocalUnitary) -> Result<StateVector> {
    check_subsystems(&state.dims, &u.targets)?;
    let target_dim: usize = u.targets.iter().map(|&t| state.dims[t]).product();
    if target_dim != u.dim() {
        return Err(Error::DimensionMismatch {
            expected: target_dim,
            actual: u.dim(),
        });
    }
    let inner = offsets(&state.dims, &u.targets);
    let bases = offsets(&state.dims, &complement(state.subsystems(), &u.targets));
    let mut out = vec![ZERO; state.len()];
    let sparse = crate::linalg::SparseRows::of(&u.matrix);
    let mut buf = DVector::zeros(target_dim);
    for &b in &bases {
        for (t, &o) in inner.iter().enumerate() {
            buf[t] = state.amps[b + o];
        }
        let w = match &sparse {
            Some(rows) => rows.mul_vec(&buf),
            None => &u.matrix * &buf,
        };
        for (t, &o) in inner.iter().enumerate() {
            out[b + o] = w[t];
        }
    }
    StateVector::with_tolerance(state.dims.clone(), out, 1e-8)
}

/// Apply a basis permutation `|x> -> |f(x)>` on the target subsystems,
/// where `f` may depend on the target digits only. Fails unless `f` is a
/// bijection of the target configurations.
pub fn apply_basis_permutation<F>(
    state: &StateVector,
    targets: &[usize],
    f: F,
) -> Result<StateVector>
where
    F: Fn(&[usize]) -> Vec<usize>,
{
    check_subsystems(&state.dims, targets)?;
    let tdims: Vec<usize> = targets.iter().map(|&t| state.dims[t]).collect();
    let tdim: usize = tdims.iter().product();
    let mut image = vec![usize::MAX; tdim];
    let mut hit = vec![false; tdim];
    for (src, slot) in image.iter_mut().enumerate() {
        let dst = flat_index(&tdims, &f(&digits_of(&tdims, src)))?;
        if hit[dst] {
            return Err(Error::Parameter("basis map is not a permutation".into()));
        }
        hit[dst] = true;
        *slot = dst;
    }
    let inner = offsets(&state.dims, targets);
    let bases = offsets(&state.dims, &complement(state.subsystems(), targets));
    let mut out = vec![ZERO; state.len()];
    for &b in &bases {
        for (src, &dst) in image.iter().enumerate() {
            out[b + inner[dst]] = state.amps[b + inner[src]];
        }
    }
    Ok(StateVector {
        dims: state.dims.clone(),
        amps: out,
    })
}

/// Reorder subsystems: new subsystem `i` is old subsystem `order[i]`.
pub fn permute_subsystems(state: &StateVector, order: &[usize]) -> Result<StateVector> {
    if order.len() != state.subsystems() {
        return Err(Error::LengthMismatch {
            expected: state.subsystems(),
            actual: order.len(),
        });
    }
    check_subsystems(&state.dims, order)?;
    let src = offsets(&state.dims, order);
    let dims: Vec<usize> = order.iter().map(|&o| state.dims[o]).collect();
    let amps = src.iter().map(|&i| state.amps[i]).collect();
    Ok(StateVector { dims, amps })
}

/// Amplitude matrix `A[i][j]` with rows over `left` and columns over `right`.
pub fn amplitude_matrix(state: &StateVector, left: &[usize], right: &[usize]) -> DMatrix<C64> {
    let ol = offsets(&state.dims, left);
    let or = offsets(&state.dims, right);
    DMatrix::from_fn(ol.len(), or.len(), |i, j| state.amps[ol[i] + or[j]])
}

/// Options for [`schmidt_with`].
#[derive(Clone, Copy, Debug)]
pub struct SchmidtOptions {
    pub zero_tol: f64,
    /// Rotate every coefficient real-nonnegative by absorbing its phase into
    /// the right basis.
    pub canonicalize: bool,
}

impl Default for SchmidtOptions {
    fn default() -> Self {
        Self {
            zero_tol: DEFAULT_ZERO_TOL,
            canonicalize: false,
        }
    }
}

/// `sum_k a_k |s_k> (x) |e_k>` across a bipartition.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub coeffs: Vec<C64>,
    pub left_basis: Vec<DVector<C64>>,
    pub right_basis: Vec<DVector<C64>>,
    cut: Bipartition,
    dims: Vec<usize>,
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn cut(&self) -> &Bipartition {
        &self.cut
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn left_dim(&self) -> usize {
        self.cut.left.iter().map(|&i| self.dims[i]).product()
    }

    pub fn right_dim(&self) -> usize {
        self.cut.right.iter().map(|&i| self.dims[i]).product()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.coeffs.iter().map(|a| a.norm()).collect()
    }

    /// Unnormalized `sum_k a_k |s_k>|e_k>` in the original subsystem order.
    pub fn reconstruct_amps(&self) -> Vec<C64> {
        let ol = offsets(&self.dims, &self.cut.left);
        let or = offsets(&self.dims, &self.cut.right);
        let mut amps = vec![ZERO; ol.len() * or.len()];
        for ((a, s), e) in self
            .coeffs
            .iter()
            .zip(&self.left_basis)
            .zip(&self.right_basis)
        {
            for (i, &oi) in ol.iter().enumerate() {
                let si = a * s[i];
                if si == ZERO {
                    continue;
                }
                for (j, &oj) in or.iter().enumerate() {
                    amps[oi + oj] += si * e[j];
                }
            }
        }
        amps
    }

    pub fn reconstruct(&self) -> Result<StateVector> {
        StateVector::with_tolerance(self.dims.clone(), self.reconstruct_amps(), 1e-8)
    }

    /// Largest Gram deviation over both bases.
    pub fn orthonormality_deviation(&self) -> f64 {
        orthonormality_deviation(&self.left_basis).max(orthonormality_deviation(&self.right_basis))
    }
}

pub fn schmidt(
    state: &StateVector,
    cut: &Bipartition,
    zero_tol: f64,
) -> Result<SchmidtDecomposition> {
    schmidt_with(
        state,
        cut,
        SchmidtOptions {
            zero_tol,
            canonicalize: false,
        },
    )
}

pub fn schmidt_with(
    state: &StateVector,
    cut: &Bipartition,
    opts: SchmidtOptions,
) -> Result<SchmidtDecomposition> {
    cut.check(state)?;
    if opts.zero_tol < 0.0 || !opts.zero_tol.is_finite() {
        return Err(Error::Parameter(
            "zero_tol must be finite and nonnegative".into(),
        ));
    }
    let full = amplitude_matrix(state, &cut.left, &cut.right);
    let full_rows = full.nrows();
    // all-zero rows never carry a Schmidt vector; drop them before the SVD
    let live: Vec<usize> = (0..full_rows)
        .filter(|&i| full.row(i).iter().any(|z| *z != ZERO))
        .collect();
    let a = if live.len() < full_rows {
        full.select_rows(&live)
    } else {
        full
    };
    let (rows, cols) = a.shape();
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .total_cmp(&svd.singular_values[i])
            .then(i.cmp(&j))
    });
    let kept: Vec<(usize, f64)> = order
        .into_iter()
        .map(|i| (i, svd.singular_values[i]))
        .filter(|&(_, s)| s > opts.zero_tol)
        .collect();

    // group by relative modulus gap, then fix a deterministic basis per group
    let mut left_basis: Vec<DVector<C64>> = Vec::with_capacity(kept.len());
    let mut start = 0;
    while start < kept.len() {
        let head = kept[start].1;
        let mut end = start + 1;
        while end < kept.len() && (head - kept[end].1) <= DEGENERACY_TOL * head {
            end += 1;
        }
        let cols_u: Vec<DVector<C64>> = kept[start..end]
            .iter()
            .map(|&(i, _)| u.column(i).into_owned())
            .collect();
        if cols_u.len() == 1 {
            left_basis.extend(cols_u);
        } else {
            left_basis.extend(canonical_group_basis(&cols_u, rows));
        }
        start = end;
    }

    let mut coeffs = Vec::with_capacity(left_basis.len());
    let mut right_basis = Vec::with_capacity(left_basis.len());
    let a_t = a.transpose();
    for s in left_basis.iter_mut() {
        fix_phase(s);
        // unnormalized right partner: (<s| (x) 1) psi
        let r = &a_t * s.map(|z| z.conj());
        let n = r.norm();
        let mut e = if n > 0.0 {
            r.clone() / C64::new(n, 0.0)
        } else {
            r.clone()
        };
        fix_phase(&mut e);
        let mut coeff = e.dotc(&r);
        if opts.canonicalize && coeff.norm() > 0.0 {
            let phase = coeff / coeff.norm();
            e *= phase;
            coeff = C64::new(coeff.norm(), 0.0);
        }
        coeffs.push(coeff);
        right_basis.push(e);
    }
    debug_assert!(right_basis.iter().all(|e| e.len() == cols));
    if rows < full_rows {
        for s in left_basis.iter_mut() {
            let mut lifted = DVector::zeros(full_rows);
            for (&i, z) in live.iter().zip(s.iter()) {
                lifted[i] = *z;
            }
            *s = lifted;
        }
    }
    Ok(SchmidtDecomposition {
        coeffs,
        left_basis,
        right_basis,
        cut: cut.clone(),
        dims: state.dims.clone(),
    })
}

/// Orthonormal basis of `span(group)` obtained by projecting the coordinate
/// vectors in index order and orthonormalizing.
///
/// The group is orthonormal, so the work runs on coefficient vectors in the
/// group's own basis and only the chosen vectors are expanded at the end.
fn canonical_group_basis(group: &[DVector<C64>], dim: usize) -> Vec<DVector<C64>> {
    let r = group.len();
    let mut chosen: Vec<DVector<C64>> = Vec::with_capacity(r);
    let orthogonalize = |mut v: DVector<C64>, chosen: &[DVector<C64>]| {
        for _ in 0..2 {
            for c in chosen {
                let ov = c.dotc(&v);
                v -= c * ov;
            }
        }
        v
    };
    // projections of the coordinate vectors, in index order
    let coords = (0..dim).map(|i| DVector::from_fn(r, |k, _| group[k][i].conj()));
    for p in coords {
        if chosen.len() == r {
            break;
        }
        let v = orthogonalize(p, &chosen);
        let n = v.norm();
        if n > 1e-4 {
            chosen.push(v / C64::new(n, 0.0));
        }
    }
    // fall back to the group itself for anything the coordinates missed
    for k in 0..r {
        if chosen.len() == r {
            break;
        }
        let mut e = DVector::zeros(r);
        e[k] = C64::new(1.0, 0.0);
        let v = orthogonalize(e, &chosen);
        let n = v.norm();
        if n > 1e-8 {
            chosen.push(v / C64::new(n, 0.0));
        }
    }
    chosen
        .iter()
        .map(|c| {
            let mut v = DVector::zeros(dim);
            for (g, &ck) in group.iter().zip(c.iter()) {
                v += g * ck;
            }
            v
        })
        .collect()
}

/// Project `subsystem` onto `outcome` and return the projection norm together
/// with the normalized relative state of the remaining subsystems.
pub fn conditional_state(
    state: &StateVector,
    subsystem: usize,
    outcome: &DVector<C64>,
) -> Result<(f64, StateVector)> {
    let n = state.subsystems();
    if subsystem >= n {
        return Err(Error::InvalidSubsystem {
            index: subsystem,
            count: n,
        });
    }
    if n < 2 {
        return Err(Error::InvalidCut(
            "conditioning needs at least two subsystems".into(),
        ));
    }
    let d = state.dims[subsystem];
    if outcome.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: outcome.len(),
        });
    }
    let on = outcome.norm();
    if (on - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized { norm: on });
    }
    let rest = complement(n, &[subsystem]);
    let a = amplitude_matrix(state, &[subsystem], &rest);
    let residual: Vec<C64> = (0..a.ncols())
        .map(|j| (0..d).map(|i| outcome[i].conj() * a[(i, j)]).sum())
        .collect();
    let weight = l2(&residual);
    if weight < ZERO_PROJECTION {
        return Err(Error::ZeroProjection { weight });
    }
    let dims: Vec<usize> = rest.iter().map(|&i| state.dims[i]).collect();
    let residual = StateVector::from_unnormalized(dims, residual)?;
    Ok((weight, residual))
}

/// Reduced density matrix on `keep`. Validation oracle only: none of the
/// engines rely on it.
pub fn reduced_probe(state: &StateVector, keep: &[usize]) -> Result<DMatrix<C64>> {
    let cut = Bipartition::new(keep.to_vec(), state.subsystems())?;
    let a = amplitude_matrix(state, &cut.left, &cut.right);
    Ok(&a * a.adjoint())
}

/// `|<a|b>|`, clamped to `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

/// On-disk state: `{"dims": [..], "amps": [[re, im], ..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub amps: Vec<[f64; 2]>,
}

impl StateFile {
    pub fn from_state(state: &StateVector) -> Self {
        Self {
            dims: state.dims.clone(),
            amps: state.amps.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    /// Validate against the index convention and a norm tolerance.
    pub fn into_state(self, norm_tol: f64) -> Result<StateVector> {
        let amps = self.amps.iter().map(|&[re, im]| C64::new(re, im)).collect();
        StateVector::with_tolerance(self.dims, amps, norm_tol)
    }
}

pub const STATE_FILE_NORM_TOL: f64 = 1e-6;

pub fn parse_state(text: &str, norm_tol: f64) -> Result<StateVector> {
    let file: StateFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_state(norm_tol)
}

pub fn load_state(path: &Path, norm_tol: f64) -> Result<StateVector> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_state(&text, norm_tol)
}

pub fn state_to_json(state: &StateVector) -> String {
    serde_json::to_string_pretty(&StateFile::from_state(state)).expect("plain data serializes")
}
