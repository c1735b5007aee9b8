//! Pointer states from correlation stability.
//!
//! A truth-table premeasurement correlates an apparatus with a system; an
//! environment coupled to the apparatus through a Hamiltonian diagonal in
//! the record basis then leaves exactly the record basis with product
//! conditional states. Scores measure how far a candidate apparatus basis is
//! from that property.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::Serialize;

use crate::born::{born_probabilities, BornResult};
use crate::error::{Error, Result};
use crate::hilbert::{
    amplitude_matrix, conditional_state, Bipartition, StateVector, NORM_TOL, ZERO_PROJECTION,
};
use crate::linalg::{basis_vector, cis, hermiticity_deviation, orthonormality_deviation};
use crate::sample::{haar_unitary, rng};

/// Tolerance for orthonormality of candidate bases and record states.
pub const BASIS_TOL: f64 = 1e-10;
/// Score spread below which a search landscape is reported as flat.
pub const FLAT_TOL: f64 = 1e-9;
/// Random restarts of the basis search.
pub const RESTARTS: usize = 5;

/// Default time grid for decoherence sweeps.
pub const SWEEP_T0: f64 = 0.0;
pub const SWEEP_T1: f64 = 10.0;
pub const SWEEP_STEPS: usize = 200;

/// Which system states the apparatus records, and where.
#[derive(Clone, Debug)]
pub struct TruthTable {
    system_basis: Vec<DVector<C64>>,
    record_map: Vec<usize>,
}

impl TruthTable {
    /// Record `|s_k>` in apparatus level `k + 1`; level 0 is the ready state.
    pub fn new(system_basis: Vec<DVector<C64>>) -> Result<Self> {
        let map = (1..=system_basis.len()).collect();
        Self::with_map(system_basis, map)
    }

    pub fn with_map(system_basis: Vec<DVector<C64>>, record_map: Vec<usize>) -> Result<Self> {
        if system_basis.is_empty() {
            return Err(Error::Empty("truth table"));
        }
        if record_map.len() != system_basis.len() {
            return Err(Error::LengthMismatch {
                expected: system_basis.len(),
                actual: record_map.len(),
            });
        }
        let dim = system_basis[0].len();
        for v in &system_basis {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.len(),
                });
            }
            if (v.norm() - 1.0).abs() > NORM_TOL {
                return Err(Error::NotNormalized { norm: v.norm() });
            }
        }
        let mut seen = record_map.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != record_map.len() {
            return Err(Error::Parameter("record map is not injective".into()));
        }
        if record_map.contains(&0) {
            return Err(Error::Parameter("record level 0 is the ready state".into()));
        }
        Ok(Self {
            system_basis,
            record_map,
        })
    }

    /// Coordinate basis of a `dim`-level system.
    pub fn coordinate(dim: usize) -> Result<Self> {
        Self::new((0..dim).map(|k| basis_vector(dim, k)).collect())
    }

    pub fn system_basis(&self) -> &[DVector<C64>] {
        &self.system_basis
    }

    pub fn record_map(&self) -> &[usize] {
        &self.record_map
    }

    pub fn outcomes(&self) -> usize {
        self.system_basis.len()
    }

    pub fn system_dim(&self) -> usize {
        self.system_basis[0].len()
    }

    fn is_orthonormal(&self) -> bool {
        orthonormality_deviation(&self.system_basis) <= BASIS_TOL
    }

    /// Expansion coefficients of `phi` in the (possibly non-orthogonal) basis.
    fn coefficients(&self, phi: &DVector<C64>) -> Result<DVector<C64>> {
        if self.is_orthonormal() {
            return Ok(DVector::from_iterator(
                self.outcomes(),
                self.system_basis.iter().map(|s| s.dotc(phi)),
            ));
        }
        let b = DMatrix::from_columns(&self.system_basis);
        let svd = b.clone().svd(true, true);
        let c = svd
            .solve(phi, 1e-12)
            .map_err(|e| Error::Inconsistent(format!("truth table solve: {e}")))?;
        if (&b * &c - phi).norm() > 1e-9 {
            return Err(Error::Parameter(
                "state lies outside the span of the recorded states".into(),
            ));
        }
        Ok(c)
    }
}

/// Hamiltonian couplings `g[k][nu]`: rows are apparatus levels, columns are
/// environment levels. Units of inverse time.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    g: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        if g.is_empty() {
            return Err(Error::Empty("coupling matrix"));
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter("coupling entries must be finite".into()));
        }
        Ok(Self { g })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows
            .first()
            .map(|r| r.len())
            .ok_or(Error::Empty("coupling matrix"))?;
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Parse("coupling rows differ in length".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }

    /// JSON array of rows.
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_rows(&rows)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn records(&self) -> usize {
        self.g.nrows()
    }

    pub fn levels(&self) -> usize {
        self.g.ncols()
    }

    pub fn get(&self, k: usize, nu: usize) -> f64 {
        self.g[(k, nu)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }
}

/// Initial environment amplitudes `gamma_nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpectrum {
    gamma: Vec<C64>,
}

impl EnvSpectrum {
    pub fn new(gamma: Vec<C64>) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::Empty("environment spectrum"));
        }
        let norm = gamma.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { gamma })
    }

    pub fn uniform(levels: usize) -> Result<Self> {
        let a = 1.0 / (levels as f64).sqrt();
        Self::new(vec![C64::new(a, 0.0); levels])
    }

    pub fn gamma(&self) -> &[C64] {
        &self.gamma
    }

    pub fn levels(&self) -> usize {
        self.gamma.len()
    }
}

/// `|A_0>|s_k> -> |A_{r(k)}>|s_k>` extended linearly to `system_state`.
/// The output layout is `[S, A]`. With `destructive`, the system ends in its
/// coordinate state `|0>` and only the apparatus keeps the record.
pub fn premeasure(
    system_state: &StateVector,
    table: &TruthTable,
    apparatus_dim: usize,
    destructive: bool,
) -> Result<StateVector> {
    let outcomes = table.outcomes();
    let highest = table.record_map.iter().copied().max().unwrap_or(0);
    if apparatus_dim < outcomes + 1 || apparatus_dim <= highest {
        return Err(Error::ApparatusTooSmall {
            dim: apparatus_dim,
            outcomes,
        });
    }
    let d = table.system_dim();
    if system_state.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: system_state.len(),
        });
    }
    let phi = DVector::from_column_slice(system_state.amps());
    let c = table.coefficients(&phi)?;
    let mut amps = vec![C64::new(0.0, 0.0); d * apparatus_dim];
    for k in 0..outcomes {
        let a = table.record_map[k];
        if destructive {
            amps[a] += c[k];
        } else {
            for i in 0..d {
                amps[i * apparatus_dim + a] += c[k] * table.system_basis[k][i];
            }
        }
    }
    // non-orthogonal tables do not preserve the norm
    StateVector::from_unnormalized(vec![d, apparatus_dim], amps)
}

/// Premeasure a pure system state in the table's basis and count the
/// resulting system–apparatus entanglement with the fine-graining engine.
pub fn born_from_measurement(
    system_state: &StateVector,
    table: &TruthTable,
    m_max: u64,
) -> Result<BornResult> {
    let joint = premeasure(system_state, table, table.outcomes() + 1, false)?;
    born_probabilities(&joint, &Bipartition::prefix(1, 2)?, m_max)
}

/// Multiply the amplitude of `|A_k>|e_nu>` by `e^{-i g_{k nu} t}`.
pub fn apply_coupling(
    state: &StateVector,
    apparatus: usize,
    environment: usize,
    couplings: &CouplingMatrix,
    t: f64,
) -> Result<StateVector> {
    let n = state.subsystems();
    for &s in &[apparatus, environment] {
        if s >= n {
            return Err(Error::InvalidSubsystem { index: s, count: n });
        }
    }
    if apparatus == environment {
        return Err(Error::Parameter(
            "apparatus and environment must differ".into(),
        ));
    }
    let dims = state.dims();
    if dims[apparatus] != couplings.records() {
        return Err(Error::DimensionMismatch {
            expected: couplings.records(),
            actual: dims[apparatus],
        });
    }
    if dims[environment] != couplings.levels() {
        return Err(Error::DimensionMismatch {
            expected: couplings.levels(),
            actual: dims[environment],
        });
    }
    let stride = |s: usize| dims[s + 1..].iter().product::<usize>();
    let (sa, se) = (stride(apparatus), stride(environment));
    let amps: Vec<C64> = state
        .amps()
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let k = (i / sa) % dims[apparatus];
            let nu = (i / se) % dims[environment];
            a * cis(-couplings.get(k, nu) * t)
        })
        .collect();
    StateVector::with_tolerance(dims.to_vec(), amps, 1e-8)
}

/// Append an environment prepared in `sum_nu gamma_nu |e_nu>` as the last
/// subsystem and evolve for time `t` under the record-diagonal coupling.
pub fn evolve(
    state: &StateVector,
    apparatus: usize,
    couplings: &CouplingMatrix,
    spectrum: &EnvSpectrum,
    t: f64,
) -> Result<StateVector> {
    if spectrum.levels() != couplings.levels() {
        return Err(Error::DimensionMismatch {
            expected: couplings.levels(),
            actual: spectrum.levels(),
        });
    }
    let env = StateVector::single(spectrum.gamma().to_vec())?;
    let joint = crate::hilbert::tensor_product(&[state.clone(), env])?;
    let e = joint.subsystems() - 1;
    apply_coupling(&joint, apparatus, e, couplings, t)
}

/// `sum_nu |gamma_nu|^2 e^{i (g_{k' nu} - g_{k nu}) t}`, the overlap
/// `<eps_{k'}(t)|eps_k(t)>` of the environment states tied to two records.
pub fn decoherence_factor(
    couplings: &CouplingMatrix,
    spectrum: &EnvSpectrum,
    k: usize,
    k2: usize,
    t: f64,
) -> Result<C64> {
    let r = couplings.records();
    for &i in &[k, k2] {
        if i >= r {
            return Err(Error::EventIndex { index: i, size: r });
        }
    }
    if spectrum.levels() != couplings.levels() {
        return Err(Error::DimensionMismatch {
            expected: couplings.levels(),
            actual: spectrum.levels(),
        });
    }
    Ok(spectrum
        .gamma()
        .iter()
        .enumerate()
        .map(|(nu, g)| cis((couplings.get(k2, nu) - couplings.get(k, nu)) * t) * g.norm_sqr())
        .sum())
}

/// One row of a decoherence sweep: `zeta_{k k'}(t)` for every pair `k < k'`.
#[derive(Clone, Debug, Serialize)]
pub struct ZetaRow {
    pub t: f64,
    pub pairs: Vec<(usize, usize, C64)>,
}

pub fn decoherence_sweep(
    couplings: &CouplingMatrix,
    spectrum: &EnvSpectrum,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<Vec<ZetaRow>> {
    if steps == 0 || !(t1 >= t0) {
        return Err(Error::Parameter(
            "sweep needs t1 >= t0 and at least one step".into(),
        ));
    }
    let r = couplings.records();
    (0..=steps)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / steps as f64;
            let mut pairs = Vec::new();
            for k in 0..r {
                for k2 in k + 1..r {
                    pairs.push((k, k2, decoherence_factor(couplings, spectrum, k, k2, t)?));
                }
            }
            Ok(ZetaRow { t, pairs })
        })
        .collect()
}

/// Per-outcome entanglement scores `1 - lambda_max^2` of the conditional
/// states; `None` marks outcomes the state does not reach.
#[derive(Clone, Debug, Serialize)]
pub struct PointerScore {
    pub per_outcome: Vec<Option<f64>>,
    pub max_score: f64,
}

impl PointerScore {
    pub fn sum(&self) -> f64 {
        self.per_outcome.iter().flatten().sum()
    }
}

fn product_score(residual: &StateVector, left: &[usize], right: &[usize]) -> f64 {
    if left.is_empty() || right.is_empty() {
        return 0.0;
    }
    let a = amplitude_matrix(residual, left, right);
    let top = a
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    (1.0 - top * top).clamp(0.0, 1.0)
}

/// Score each candidate apparatus state by the entanglement left between
/// the subsystems before the apparatus and those after it.
pub fn pointer_score(
    state: &StateVector,
    apparatus: usize,
    candidate_basis: &[DVector<C64>],
) -> Result<PointerScore> {
    let n = state.subsystems();
    if apparatus >= n {
        return Err(Error::InvalidSubsystem {
            index: apparatus,
            count: n,
        });
    }
    let d = state.dims()[apparatus];
    if candidate_basis.len() != d {
        return Err(Error::LengthMismatch {
            expected: d,
            actual: candidate_basis.len(),
        });
    }
    if let Some(v) = candidate_basis.iter().find(|v| v.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: v.len(),
        });
    }
    let deviation = orthonormality_deviation(candidate_basis);
    if deviation > BASIS_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    // residual subsystems keep their order with the apparatus removed
    let left: Vec<usize> = (0..apparatus).collect();
    let right: Vec<usize> = (apparatus..n - 1).collect();
    let mut per_outcome = Vec::with_capacity(d);
    for b in candidate_basis {
        match conditional_state(state, apparatus, b) {
            Ok((weight, residual)) if weight >= ZERO_PROJECTION => {
                per_outcome.push(Some(product_score(&residual, &left, &right)));
            }
            Ok(_) | Err(Error::ZeroProjection { .. }) => per_outcome.push(None),
            Err(e) => return Err(e),
        }
    }
    let max_score = per_outcome.iter().flatten().cloned().fold(0.0, f64::max);
    Ok(PointerScore {
        per_outcome,
        max_score,
    })
}

/// Outcome of a basis search.
#[derive(Clone, Debug)]
pub struct PointerSearch {
    pub basis: Vec<DVector<C64>>,
    pub score: PointerScore,
    /// Every start scored the same: the minimizer is not unique.
    pub flat: bool,
}

fn columns(u: &DMatrix<C64>) -> Vec<DVector<C64>> {
    (0..u.ncols()).map(|j| u.column(j).into_owned()).collect()
}

fn objective(state: &StateVector, apparatus: usize, u: &DMatrix<C64>) -> Result<f64> {
    let s = pointer_score(state, apparatus, &columns(u))?;
    Ok(s.max_score + 1e-3 * s.sum())
}

/// Rotate columns `i`, `j` of `u` by angle `theta` with relative phase `phi`.
fn givens(u: &DMatrix<C64>, i: usize, j: usize, theta: f64, phi: f64) -> DMatrix<C64> {
    let (c, s) = (theta.cos(), theta.sin());
    let mut out = u.clone();
    let ci = u.column(i).into_owned();
    let cj = u.column(j).into_owned();
    out.set_column(i, &(&ci * C64::new(c, 0.0) + &cj * (cis(phi) * s)));
    out.set_column(j, &(&cj * C64::new(c, 0.0) - &ci * (cis(-phi) * s)));
    out
}

fn descend(
    state: &StateVector,
    apparatus: usize,
    mut u: DMatrix<C64>,
    iterations: usize,
) -> Result<(DMatrix<C64>, f64)> {
    let d = u.ncols();
    let mut best = objective(state, apparatus, &u)?;
    let mut step = 0.5;
    let phases = [
        0.0,
        std::f64::consts::FRAC_PI_2,
        std::f64::consts::PI,
        -std::f64::consts::FRAC_PI_2,
    ];
    for _ in 0..iterations {
        if best <= 1e-15 || step < 1e-9 {
            break;
        }
        let mut improved = false;
        for i in 0..d {
            for j in i + 1..d {
                for &phi in &phases {
                    let trial = givens(&u, i, j, step, phi);
                    let f = objective(state, apparatus, &trial)?;
                    if f < best {
                        best = f;
                        u = trial;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((u, best))
}

/// Local search for the apparatus basis with the smallest pointer score:
/// coordinate descent over two-level rotations from the coordinate basis and
/// from `RESTARTS` Haar-random starts.
pub fn find_pointer_basis(
    state: &StateVector,
    apparatus: usize,
    iterations: usize,
    seed: u64,
) -> Result<PointerSearch> {
    let n = state.subsystems();
    if apparatus >= n {
        return Err(Error::InvalidSubsystem {
            index: apparatus,
            count: n,
        });
    }
    let d = state.dims()[apparatus];
    if d > 8 {
        return Err(Error::Parameter(format!(
            "apparatus dimension {d} exceeds the search limit of 8"
        )));
    }
    let mut r = rng(seed);
    let mut starts = vec![DMatrix::identity(d, d)];
    starts.extend((0..RESTARTS).map(|_| haar_unitary(d, &mut r)));
    let initial: Vec<f64> = starts
        .iter()
        .map(|u| objective(state, apparatus, u))
        .collect::<Result<_>>()?;
    let lo = initial.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = initial.iter().cloned().fold(0.0, f64::max);
    let flat = hi - lo < FLAT_TOL;
    if flat {
        let basis = columns(&starts[0]);
        let score = pointer_score(state, apparatus, &basis)?;
        return Ok(PointerSearch { basis, score, flat });
    }
    let mut best: Option<(DMatrix<C64>, f64)> = None;
    for u in starts {
        let (u, f) = descend(state, apparatus, u, iterations)?;
        if best.as_ref().is_none_or(|(_, b)| f < *b) {
            best = Some((u, f));
        }
    }
    let (u, _) = best.expect("at least one start");
    let basis = columns(&u);
    let score = pointer_score(state, apparatus, &basis)?;
    Ok(PointerSearch { basis, score, flat })
}

/// Coordinate (record) basis of the apparatus.
pub fn record_basis(dim: usize) -> Vec<DVector<C64>> {
    (0..dim).map(|k| basis_vector(dim, k)).collect()
}

/// Record basis with levels `i` and `j` rotated into each other by `angle`.
pub fn rotated_basis(dim: usize, i: usize, j: usize, angle: f64) -> Vec<DVector<C64>> {
    let mut basis = record_basis(dim);
    let (c, s) = (C64::new(angle.cos(), 0.0), C64::new(angle.sin(), 0.0));
    let (bi, bj) = (basis[i].clone(), basis[j].clone());
    basis[i] = &bi * c + &bj * s;
    basis[j] = &bj * c - &bi * s;
    basis
}

/// Discrete Fourier basis `B_l = sum_k e^{2 pi i l k / d} |A_k> / sqrt(d)`.
pub fn fourier_basis(dim: usize) -> Vec<DVector<C64>> {
    let norm = 1.0 / (dim as f64).sqrt();
    (0..dim)
        .map(|l| {
            DVector::from_fn(dim, |k, _| {
                cis(std::f64::consts::TAU * (l * k) as f64 / dim as f64) * norm
            })
        })
        .collect()
}

/// Couplings drawn uniformly from `[0, scale)`.
pub fn random_couplings<R: Rng + ?Sized>(
    records: usize,
    levels: usize,
    scale: f64,
    rng: &mut R,
) -> Result<CouplingMatrix> {
    CouplingMatrix::new(DMatrix::from_fn(records, levels, |_, _| {
        rng.random_range(0.0..scale)
    }))
}

/// Frobenius norm of `[Lambda (x) 1, H_AE]` with
/// `H_AE = sum_{k,nu} g_{k nu} |A_k><A_k| (x) |e_nu><e_nu|`.
pub fn commutator_norm(
    pointer_observable: &DMatrix<C64>,
    couplings: &CouplingMatrix,
) -> Result<f64> {
    let d = couplings.records();
    if pointer_observable.nrows() != d || pointer_observable.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: pointer_observable.nrows(),
        });
    }
    let deviation = hermiticity_deviation(pointer_observable);
    if deviation > 1e-10 {
        return Err(Error::NotHermitian { deviation });
    }
    // H is diagonal, so the (k nu, k' nu) entry is Lambda_{k k'} (g_{k' nu} - g_{k nu})
    let mut acc = 0.0;
    for k in 0..d {
        for k2 in 0..d {
            let l = pointer_observable[(k, k2)].norm_sqr();
            if l == 0.0 {
                continue;
            }
            for nu in 0..couplings.levels() {
                let dg = couplings.get(k2, nu) - couplings.get(k, nu);
                acc += l * dg * dg;
            }
        }
    }
    Ok(acc.sqrt())
}
