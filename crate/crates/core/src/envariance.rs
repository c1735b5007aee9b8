//! Environment-assisted invariance: deciding whether a unitary on the system
//! side of an entangled state can be undone by acting on the environment
//! alone, and building the undoing ("counter") transformations.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{
    apply_local, fidelity, schmidt, Bipartition, LocalUnitary, SchmidtDecomposition, StateVector,
    DEFAULT_ZERO_TOL, DEGENERACY_TOL,
};
use crate::linalg::{
    cis, gram, identity_deviation, nuclear_norm, outer, polar_orthonormalize, projector, SparseRows,
};

/// Default tolerance of the Gram-identity decision.
pub const DECISION_TOL: f64 = 1e-8;
/// Final fidelity a protocol run must reach to count as restored.
pub const RESTORATION_TOL: f64 = 1e-12;

/// `e^{i phi} |b_k><b_l| + h.c.` on Schmidt indices `k`, `l`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SwapSpec {
    pub k: usize,
    pub l: usize,
    pub phase: f64,
}

impl SwapSpec {
    pub fn new(k: usize, l: usize, phase: f64) -> Self {
        Self { k, l, phase }
    }

    pub fn is_trivial(&self) -> bool {
        self.k == self.l
    }
}

#[derive(Clone, Debug)]
pub struct EnvarianceVerdict {
    pub envariant: bool,
    pub counter: Option<LocalUnitary>,
    pub residual_infidelity: f64,
    /// Largest entrywise deviation of the candidate Gram matrix from identity.
    pub gram_deviation: f64,
}

/// Serializable view of a verdict.
#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub envariant: bool,
    pub residual_infidelity: f64,
    pub gram_deviation: f64,
    pub counter_targets: Option<Vec<usize>>,
    pub counter_matrix: Option<Vec<Vec<[f64; 2]>>>,
}

impl EnvarianceVerdict {
    pub fn report(&self) -> VerdictReport {
        VerdictReport {
            envariant: self.envariant,
            residual_infidelity: self.residual_infidelity,
            gram_deviation: self.gram_deviation,
            counter_targets: self.counter.as_ref().map(|c| c.targets().to_vec()),
            counter_matrix: self.counter.as_ref().map(|c| matrix_rows(c.matrix())),
        }
    }
}

pub fn matrix_rows(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

/// Identity outside `span(vecs)` plus `body` inside it. `vecs` orthonormal.
fn embed(body: DMatrix<C64>, span: &[DVector<C64>], dim: usize) -> DMatrix<C64> {
    DMatrix::identity(dim, dim) - projector(span, dim) + body
}

/// `u_S = sum_k e^{i phi_k} |s_k><s_k|`, identity off the Schmidt support.
pub fn schmidt_phase_unitary(dec: &SchmidtDecomposition, phases: &[f64]) -> Result<LocalUnitary> {
    check_len(dec, phases)?;
    let dim = dec.left_dim();
    let mut body = DMatrix::zeros(dim, dim);
    for (s, &phi) in dec.left_basis.iter().zip(phases) {
        body += outer(s, s) * cis(phi);
    }
    LocalUnitary::new(dec.cut().left().to_vec(), embed(body, &dec.left_basis, dim))
}

/// Counter-transformation `u_E = sum_k e^{-i phi_k} |e_k><e_k|` undoing the
/// Schmidt-phase unitary with the same phases.
pub fn phase_counter(dec: &SchmidtDecomposition, phases: &[f64]) -> Result<LocalUnitary> {
    check_len(dec, phases)?;
    let dim = dec.right_dim();
    let mut body = DMatrix::zeros(dim, dim);
    for (e, &phi) in dec.right_basis.iter().zip(phases) {
        body += outer(e, e) * cis(-phi);
    }
    LocalUnitary::new(
        dec.cut().right().to_vec(),
        embed(body, &dec.right_basis, dim),
    )
}

fn check_len(dec: &SchmidtDecomposition, phases: &[f64]) -> Result<()> {
    if phases.len() != dec.rank() {
        return Err(Error::LengthMismatch {
            expected: dec.rank(),
            actual: phases.len(),
        });
    }
    Ok(())
}

fn pair_operator(b_k: &DVector<C64>, b_l: &DVector<C64>, phase: f64, dim: usize) -> DMatrix<C64> {
    let body = outer(b_k, b_l) * cis(phase) + outer(b_l, b_k) * cis(-phase);
    embed(body, &[b_k.clone(), b_l.clone()], dim)
}

/// Swap `e^{i phi}|b_k><b_l| + h.c.` within an orthonormal list, identity on
/// the rest of the space.
pub fn swap_unitary(
    spec: SwapSpec,
    basis: &[DVector<C64>],
    targets: Vec<usize>,
) -> Result<LocalUnitary> {
    let dim = basis
        .first()
        .map(|b| b.len())
        .ok_or(Error::Empty("swap basis"))?;
    for &i in &[spec.k, spec.l] {
        if i >= basis.len() {
            return Err(Error::SchmidtIndex {
                index: i,
                rank: basis.len(),
            });
        }
    }
    if spec.is_trivial() {
        return Ok(LocalUnitary::identity(targets, dim));
    }
    LocalUnitary::new(
        targets,
        pair_operator(&basis[spec.k], &basis[spec.l], spec.phase, dim),
    )
}

/// The swap on the system side of a decomposition.
pub fn system_swap(dec: &SchmidtDecomposition, spec: SwapSpec) -> Result<LocalUnitary> {
    swap_unitary(spec, &dec.left_basis, dec.cut().left().to_vec())
}

/// Counterswap on the environment side: `e^{-i theta}|e_k><e_l| + h.c.` with
/// `theta = phi_kl + arg(a_l) - arg(a_k)`.
pub fn counterswap(dec: &SchmidtDecomposition, spec: SwapSpec) -> Result<LocalUnitary> {
    let rank = dec.rank();
    for &i in &[spec.k, spec.l] {
        if i >= rank {
            return Err(Error::SchmidtIndex { index: i, rank });
        }
        if dec.coeffs[i].norm() == 0.0 {
            return Err(Error::ZeroCoefficient { index: i });
        }
    }
    let dim = dec.right_dim();
    let targets = dec.cut().right().to_vec();
    if spec.is_trivial() {
        return Ok(LocalUnitary::identity(targets, dim));
    }
    let theta = spec.phase + dec.coeffs[spec.l].arg() - dec.coeffs[spec.k].arg();
    LocalUnitary::new(
        targets,
        pair_operator(
            &dec.right_basis[spec.k],
            &dec.right_basis[spec.l],
            -theta,
            dim,
        ),
    )
}

/// Schmidt indices whose left states span the same subspace as `new_basis`.
fn spanned_indices(dec: &SchmidtDecomposition, new_basis: &[DVector<C64>]) -> Result<Vec<usize>> {
    let dim = dec.left_dim();
    if let Some(v) = new_basis.iter().find(|v| v.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v.len(),
        });
    }
    let dev = identity_deviation(&gram(new_basis));
    if dev > 1e-9 {
        return Err(Error::NotOrthonormal { deviation: dev });
    }
    let p = projector(new_basis, dim);
    let mut idx = Vec::new();
    for (k, s) in dec.left_basis.iter().enumerate() {
        let inside = (&p * s).norm();
        if inside > 1.0 - 1e-9 {
            idx.push(k);
        } else if inside > 1e-9 {
            return Err(Error::SubspaceMismatch);
        }
    }
    if idx.len() != new_basis.len() {
        return Err(Error::SubspaceMismatch);
    }
    Ok(idx)
}

fn modulus_spread(dec: &SchmidtDecomposition, idx: &[usize]) -> f64 {
    let m: Vec<f64> = idx.iter().map(|&k| dec.coeffs[k].norm()).collect();
    let max = m.iter().cloned().fold(0.0, f64::max);
    let min = m.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        (max - min) / max
    }
}

/// Partial swap `sum_k |s~_k><s_k|` taking the Schmidt states that span
/// `new_basis` (in Schmidt order) onto `new_basis` (in list order).
pub fn partial_swap_unitary(
    dec: &SchmidtDecomposition,
    new_basis: &[DVector<C64>],
) -> Result<LocalUnitary> {
    let idx = spanned_indices(dec, new_basis)?;
    let dim = dec.left_dim();
    let mut body = DMatrix::zeros(dim, dim);
    let old: Vec<DVector<C64>> = idx.iter().map(|&k| dec.left_basis[k].clone()).collect();
    for (t, s) in new_basis.iter().zip(&old) {
        body += outer(t, s);
    }
    LocalUnitary::new(dec.cut().left().to_vec(), embed(body, &old, dim))
}

/// Environment counter for [`partial_swap_unitary`]:
/// `e~_l = sum_k e^{i phi_k} <s~_l|s_k> e_k` and `u_E = sum_k e^{-i phi_k}|e~_k><e_k|`.
pub fn partial_swap_counter(
    dec: &SchmidtDecomposition,
    new_basis: &[DVector<C64>],
) -> Result<LocalUnitary> {
    let idx = spanned_indices(dec, new_basis)?;
    let spread = modulus_spread(dec, &idx);
    if spread > DEGENERACY_TOL {
        return Err(Error::NotEven { spread });
    }
    let dim = dec.right_dim();
    let phases: Vec<C64> = idx
        .iter()
        .map(|&k| dec.coeffs[k] / dec.coeffs[k].norm())
        .collect();
    let tilde = partner_states(dec, new_basis, &idx);
    let old: Vec<DVector<C64>> = idx.iter().map(|&k| dec.right_basis[k].clone()).collect();
    let mut body = DMatrix::zeros(dim, dim);
    for ((t, e), ph) in tilde.iter().zip(&old).zip(&phases) {
        body += outer(t, e) * ph.conj();
    }
    LocalUnitary::new(dec.cut().right().to_vec(), embed(body, &old, dim))
}

/// Environment partners `e~_l` of a rotated basis inside an even subspace.
pub fn partner_states(
    dec: &SchmidtDecomposition,
    new_basis: &[DVector<C64>],
    idx: &[usize],
) -> Vec<DVector<C64>> {
    let dim = dec.right_dim();
    new_basis
        .iter()
        .map(|t| {
            let mut v = DVector::zeros(dim);
            for &k in idx {
                let ph = dec.coeffs[k] / dec.coeffs[k].norm();
                v += &dec.right_basis[k] * (ph * t.dotc(&dec.left_basis[k]));
            }
            v
        })
        .collect()
}

/// Constructive envariance decision for `u_S` acting on the left side of `cut`.
///
/// With `psi = sum_k a_k |s_k>|e_k>` and `eta = (u_S (x) 1) psi`, the
/// candidate environment images are
/// `w_j = sum_k (a_k / a_j) <s_j|u_S|s_k> |e_k>`; a counter exists iff they
/// are orthonormal, in which case it maps `w_j -> e_j`. Otherwise the best
/// reachable fidelity is the nuclear norm of `X = sum_j a_j^* |v_j><e_j|`,
/// `v_j = (<s_j| (x) 1) eta`.
pub fn check_envariance(
    state: &StateVector,
    cut: &Bipartition,
    u_s: &LocalUnitary,
    tol: f64,
) -> Result<EnvarianceVerdict> {
    let mut targets = u_s.targets().to_vec();
    targets.sort_unstable();
    if targets != cut.left() {
        return Err(Error::InvalidCut(
            "u_S must act on exactly the left side of the cut, in order".into(),
        ));
    }
    if u_s.targets() != cut.left() {
        return Err(Error::InvalidCut(
            "u_S targets must be listed in ascending order".into(),
        ));
    }
    let dec = schmidt(state, cut, DEFAULT_ZERO_TOL)?;
    check_decomposition(state, &dec, u_s, tol)
}

/// [`check_envariance`] on a precomputed decomposition of `state`.
pub fn check_decomposition(
    state: &StateVector,
    dec: &SchmidtDecomposition,
    u_s: &LocalUnitary,
    tol: f64,
) -> Result<EnvarianceVerdict> {
    let rank = dec.rank();
    let dim_e = dec.right_dim();
    let u = u_s.matrix();
    if u.nrows() != dec.left_dim() {
        return Err(Error::DimensionMismatch {
            expected: dec.left_dim(),
            actual: u.nrows(),
        });
    }
    let images: Vec<DVector<C64>> = match SparseRows::of(u) {
        Some(rows) => dec.left_basis.iter().map(|s| rows.mul_vec(s)).collect(),
        None => dec.left_basis.iter().map(|s| u * s).collect(),
    };
    // mixing[j][k] = <s_j|u_S|s_k>
    let mixing = DMatrix::from_fn(rank, rank, |j, k| dec.left_basis[j].dotc(&images[k]));

    let mut v_cols = Vec::with_capacity(rank);
    for j in 0..rank {
        let mut v = DVector::zeros(dim_e);
        for k in 0..rank {
            v += &dec.right_basis[k] * (dec.coeffs[k] * mixing[(j, k)]);
        }
        v_cols.push(v);
    }
    let w: Vec<DVector<C64>> = v_cols
        .iter()
        .zip(&dec.coeffs)
        .map(|(v, a)| v / *a)
        .collect();
    let gram_deviation = identity_deviation(&gram(&w));

    if gram_deviation <= tol {
        let w_mat = DMatrix::from_columns(&w);
        let w_orth = polar_orthonormalize(&w_mat);
        let w_cols: Vec<DVector<C64>> = w_orth.column_iter().map(|c| c.into_owned()).collect();
        let mut body = DMatrix::zeros(dim_e, dim_e);
        for (e, wj) in dec.right_basis.iter().zip(&w_cols) {
            body += outer(e, wj);
        }
        let counter = LocalUnitary::new(
            dec.cut().right().to_vec(),
            embed(body, &dec.right_basis, dim_e),
        )?;
        let restored = apply_local(&apply_local(state, u_s)?, &counter)?;
        let residual = (1.0 - fidelity(&restored, state)?).max(0.0);
        Ok(EnvarianceVerdict {
            envariant: true,
            counter: Some(counter),
            residual_infidelity: residual,
            gram_deviation,
        })
    } else {
        // best achievable overlap over all environment unitaries
        let mut x = DMatrix::zeros(dim_e, dim_e);
        for ((v, e), a) in v_cols.iter().zip(&dec.right_basis).zip(&dec.coeffs) {
            x += outer(v, e) * a.conj();
        }
        let best = nuclear_norm(&x).min(1.0);
        Ok(EnvarianceVerdict {
            envariant: false,
            counter: None,
            residual_infidelity: (1.0 - best).max(0.0),
            gram_deviation,
        })
    }
}

/// True iff the nonzero Schmidt moduli agree to relative spread `tol`.
pub fn is_even(dec: &SchmidtDecomposition, tol: f64) -> bool {
    let idx: Vec<usize> = (0..dec.rank())
        .filter(|&k| dec.coeffs[k].norm() > 0.0)
        .collect();
    modulus_spread(dec, &idx) <= tol
}

/// Named fidelity checkpoint of a swap protocol run.
#[derive(Clone, Debug, Serialize)]
pub struct Checkpoint {
    pub stage: &'static str,
    pub fidelity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Transcript {
    pub spec: SwapSpec,
    pub checkpoints: Vec<Checkpoint>,
    pub restored: bool,
}

impl Transcript {
    pub fn final_fidelity(&self) -> f64 {
        self.checkpoints.last().map(|c| c.fidelity).unwrap_or(0.0)
    }
}

/// Confirm the state, swap two Schmidt states on the system, confirm again,
/// apply the counterswap on the environment, confirm the result.
pub fn protocol_run(state: &StateVector, cut: &Bipartition, spec: SwapSpec) -> Result<Transcript> {
    let dec = schmidt(state, cut, DEFAULT_ZERO_TOL)?;
    let u_s = system_swap(&dec, spec)?;
    let u_e = counterswap(&dec, spec)?;
    let confirmed = fidelity(state, state)?;
    let swapped = apply_local(state, &u_s)?;
    let after_swap = fidelity(&swapped, state)?;
    let restored_state = apply_local(&swapped, &u_e)?;
    let after_counter = fidelity(&restored_state, state)?;
    Ok(Transcript {
        spec,
        checkpoints: vec![
            Checkpoint {
                stage: "confirm",
                fidelity: confirmed,
            },
            Checkpoint {
                stage: "swap",
                fidelity: after_swap,
            },
            Checkpoint {
                stage: "counterswap",
                fidelity: after_counter,
            },
        ],
        restored: after_counter >= 1.0 - RESTORATION_TOL,
    })
}
