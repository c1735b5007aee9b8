//! Fine-graining engine.
//!
//! Unequal Schmidt weights `|a_k|^2 = m_k / M` are turned into an even state
//! of `M` equal-amplitude cells by attaching a counter `C`, splitting each
//! `|C_k>` into `m_k` cells and correlating each cell with its own
//! environment state (the c-shift). Probabilities are then obtained by
//! counting cells per coarse outcome.

use std::fmt;

use num_bigint::BigUint;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::envariance::is_even;
use crate::error::{Error, Result};
use crate::hilbert::{
    apply_basis_permutation, schmidt, Bipartition, SchmidtDecomposition, StateVector,
    DEFAULT_ZERO_TOL,
};
use crate::linalg::cis;

/// Largest dense fine-grained state (amplitude count) built explicitly.
pub const DENSE_CAP: usize = 1 << 22;
/// Relative modulus spread accepted as "even" for fine-grained states.
pub const EVEN_TOL: f64 = 1e-9;

/// Positive integer weights `m_k` with `M = sum m_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector {
    m: Vec<BigUint>,
    total: BigUint,
}

impl WeightVector {
    pub fn new(m: Vec<BigUint>) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::Empty("weights"));
        }
        if m.iter().any(|x| x.is_zero()) {
            return Err(Error::Parameter("weights must be at least 1".into()));
        }
        let total = m.iter().sum();
        Ok(Self { m, total })
    }

    pub fn from_u64(m: &[u64]) -> Result<Self> {
        Self::new(m.iter().map(|&x| BigUint::from(x)).collect())
    }

    /// `"m1,m2,...,mk"`
    pub fn parse(text: &str) -> Result<Self> {
        let m = text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<BigUint>()
                    .map_err(|e| Error::Parse(format!("weight {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(m)
    }

    pub fn m(&self) -> &[BigUint] {
        &self.m
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// `mu_k = m_1 + ... + m_k`, with `mu_0 = 0` first.
    pub fn prefix_sums(&self) -> Vec<BigUint> {
        let mut out = vec![BigUint::zero()];
        for x in &self.m {
            let next = out.last().unwrap() + x;
            out.push(next);
        }
        out
    }

    fn small(&self) -> Result<(Vec<usize>, usize)> {
        let too_big = || Error::SizeCap {
            needed: u128::MAX,
            cap: DENSE_CAP as u128,
        };
        let m = self
            .m
            .iter()
            .map(|x| x.to_usize().ok_or_else(too_big))
            .collect::<Result<Vec<_>>>()?;
        let total = self.total.to_usize().ok_or_else(too_big)?;
        Ok((m, total))
    }

    /// `m_k / M` as exact fractions.
    pub fn fractions(&self) -> Vec<BigRational> {
        self.m
            .iter()
            .map(|x| BigRational::new(x.clone().into(), self.total.clone().into()))
            .collect()
    }
}

impl fmt::Display for WeightVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.m.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Best integer weights with denominator exactly `total` (minimax deviation).
fn apportion(p: &[f64], total: u64) -> (Vec<u64>, f64) {
    let t = total as f64;
    let mut m: Vec<u64> = p.iter().map(|&x| ((x * t).round() as u64).max(1)).collect();
    let mut sum: u64 = m.iter().sum();
    let dev = |k: usize, v: u64| (v as f64 / t - p[k]).abs();
    while sum < total {
        let k = (0..m.len())
            .min_by(|&i, &j| {
                dev(i, m[i] + 1)
                    .total_cmp(&dev(j, m[j] + 1))
                    .then(i.cmp(&j))
            })
            .expect("nonempty");
        m[k] += 1;
        sum += 1;
    }
    while sum > total {
        let k = (0..m.len())
            .filter(|&i| m[i] > 1)
            .min_by(|&i, &j| {
                dev(i, m[i] - 1)
                    .total_cmp(&dev(j, m[j] - 1))
                    .then(i.cmp(&j))
            })
            .expect("total >= len leaves a decrementable weight");
        m[k] -= 1;
        sum -= 1;
    }
    let err = (0..m.len()).map(|k| dev(k, m[k])).fold(0.0, f64::max);
    (m, err)
}

/// Integer weights with one common denominator `M <= m_max` minimizing the
/// largest deviation `| |a_k|^2 - m_k/M |`; the smallest such `M` wins ties.
pub fn rationalize(amplitudes: &[C64], m_max: u64) -> Result<(WeightVector, f64)> {
    if amplitudes.is_empty() {
        return Err(Error::Empty("amplitudes"));
    }
    let p: Vec<f64> = amplitudes.iter().map(|a| a.norm_sqr()).collect();
    let norm: f64 = p.iter().sum();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm: norm.sqrt() });
    }
    let n = p.len() as u64;
    if m_max < n {
        return Err(Error::DenominatorTooSmall {
            max: m_max,
            needed: n,
        });
    }
    let mut best: Option<(Vec<u64>, f64)> = None;
    for total in n..=m_max {
        let (m, err) = apportion(&p, total);
        let better = match &best {
            None => true,
            Some((_, e)) => err < *e - 1e-15,
        };
        if better {
            best = Some((m, err));
        }
    }
    let (m, err) = best.expect("at least one denominator scanned");
    Ok((WeightVector::from_u64(&m)?, err))
}

/// Phases carried by the fine cells.
#[derive(Clone, Copy, Debug)]
pub enum CellPhases<'a> {
    /// Every cell of outcome `k` inherits `phi_k`.
    Inherit(&'a [f64]),
    /// One phase per fine cell (length `M`).
    PerCell(&'a [f64]),
}

impl CellPhases<'_> {
    fn resolve(&self, weights: &WeightVector, total: usize) -> Result<Vec<f64>> {
        match *self {
            CellPhases::Inherit(ph) => {
                if ph.len() != weights.len() {
                    return Err(Error::LengthMismatch {
                        expected: weights.len(),
                        actual: ph.len(),
                    });
                }
                let (m, _) = weights.small()?;
                Ok(m.iter()
                    .zip(ph)
                    .flat_map(|(&mk, &phi)| std::iter::repeat_n(phi, mk))
                    .collect())
            }
            CellPhases::PerCell(ph) => {
                if ph.len() != total {
                    return Err(Error::LengthMismatch {
                        expected: total,
                        actual: ph.len(),
                    });
                }
                Ok(ph.to_vec())
            }
        }
    }
}

/// Staircase `k(j)`: coarse outcome owning fine cell `j` (0-based).
pub fn staircase(weights: &WeightVector) -> Result<Vec<usize>> {
    let (m, _) = weights.small()?;
    Ok(m.iter()
        .enumerate()
        .flat_map(|(k, &mk)| std::iter::repeat_n(k, mk))
        .collect())
}

/// Subsystem order of fine-grained states.
pub const SYSTEM: usize = 0;
pub const ENVIRONMENT: usize = 1;
pub const COUNTER: usize = 2;

/// Fine-grained `S-E-C` state with inherited phases.
pub fn fine_grain(weights: &WeightVector, phases: &[f64]) -> Result<StateVector> {
    fine_grain_with(weights, CellPhases::Inherit(phases))
}

/// Build `sum_k sqrt(m_k/M) e^{i phi_k} |k>_S |eps_k>_E |C_k>_C` with
/// `|C_k> = sum_{j in block k} |c_j>/sqrt(m_k)` and `|eps_k> = |e_{mu_{k-1}}>`,
/// then apply the c-shift `|c_j>|eps_{k(j)}> -> |c_j>|e_j>`.
pub fn fine_grain_with(weights: &WeightVector, phases: CellPhases<'_>) -> Result<StateVector> {
    let (m, total) = weights.small()?;
    let n = m.len();
    let needed = (n as u128) * (total as u128) * (total as u128);
    if needed > DENSE_CAP as u128 {
        return Err(Error::SizeCap {
            needed,
            cap: DENSE_CAP as u128,
        });
    }
    let cell_phase = phases.resolve(weights, total)?;
    let k_of = staircase(weights)?;
    let starts: Vec<usize> = {
        let mut acc = 0;
        m.iter()
            .map(|&mk| {
                let s = acc;
                acc += mk;
                s
            })
            .collect()
    };
    let dims = vec![n, total, total];
    let mut amps = vec![C64::new(0.0, 0.0); n * total * total];
    let cell_amp = 1.0 / (total as f64).sqrt();
    for (j, &k) in k_of.iter().enumerate() {
        // sqrt(m_k/M) * 1/sqrt(m_k) = 1/sqrt(M)
        let idx = (k * total + starts[k]) * total + j;
        amps[idx] = cis(cell_phase[j]) * cell_amp;
    }
    let pre = StateVector::new(dims, amps)?;
    let c_shift = |d: &[usize]| {
        let (c, e) = (d[0], d[1]);
        let home = starts[k_of[c]];
        let e2 = if e == home {
            c
        } else if e == c {
            home
        } else {
            e
        };
        vec![c, e2]
    };
    apply_basis_permutation(&pre, &[COUNTER, ENVIRONMENT], c_shift)
}

/// Sparse form of a fine-grained state: `(outcome, cell, env level, amplitude)`.
#[derive(Clone, Debug)]
pub struct FineGrainedTerms {
    pub outcomes: usize,
    pub cells: usize,
    pub terms: Vec<(usize, usize, usize, C64)>,
}

/// Term-list construction for denominators too large for a dense state.
pub fn fine_grain_terms(
    weights: &WeightVector,
    phases: CellPhases<'_>,
) -> Result<FineGrainedTerms> {
    let (m, total) = weights.small()?;
    let cell_phase = phases.resolve(weights, total)?;
    let k_of = staircase(weights)?;
    let amp = 1.0 / (total as f64).sqrt();
    let terms = k_of
        .iter()
        .enumerate()
        // the c-shift moves the environment of cell j from e_{mu_{k-1}} to e_j
        .map(|(j, &k)| (k, j, j, cis(cell_phase[j]) * amp))
        .collect();
    Ok(FineGrainedTerms {
        outcomes: m.len(),
        cells: total,
        terms,
    })
}

impl FineGrainedTerms {
    /// Cells per coarse outcome, after checking that the term list is a
    /// Schmidt form across `(S,C) | E` with equal moduli.
    pub fn count_cells(&self) -> Result<Vec<usize>> {
        let mut sc_seen = std::collections::HashSet::new();
        let mut e_seen = std::collections::HashSet::new();
        let mut counts = vec![0usize; self.outcomes];
        let reference = self
            .terms
            .first()
            .map(|t| t.3.norm())
            .ok_or(Error::Empty("terms"))?;
        for &(k, j, e, a) in &self.terms {
            if !sc_seen.insert((k, j)) || !e_seen.insert(e) {
                return Err(Error::Inconsistent(
                    "term list is not in Schmidt form".into(),
                ));
            }
            let spread = (a.norm() - reference).abs() / reference;
            if spread > EVEN_TOL {
                return Err(Error::NotEven { spread });
            }
            counts[k] += 1;
        }
        Ok(counts)
    }
}

/// Cells per coarse outcome of a dense fine-grained state, read from its
/// Schmidt decomposition across `(S,C) | E`.
pub fn count_cells(fine: &StateVector) -> Result<Vec<usize>> {
    let dims = fine.dims();
    if dims.len() != 3 {
        return Err(Error::Parameter(
            "fine-grained state must have S, E, C subsystems".into(),
        ));
    }
    let (n, cells) = (dims[SYSTEM], dims[COUNTER]);
    let cut = Bipartition::new(vec![SYSTEM, COUNTER], 3)?;
    let dec = schmidt(fine, &cut, DEFAULT_ZERO_TOL)?;
    if !is_even(&dec, EVEN_TOL) {
        return Err(Error::NotEven {
            spread: spread(&dec),
        });
    }
    let mut counts = vec![0usize; n];
    for v in &dec.left_basis {
        let block: Vec<f64> = (0..n)
            .map(|k| (0..cells).map(|c| v[k * cells + c].norm_sqr()).sum())
            .collect();
        let k = (0..n)
            .find(|&k| block[k] > 1.0 - 1e-9)
            .ok_or_else(|| Error::Inconsistent("fine cell straddles coarse outcomes".into()))?;
        counts[k] += 1;
    }
    Ok(counts)
}

fn spread(dec: &SchmidtDecomposition) -> f64 {
    let m = dec.moduli();
    let max = m.iter().cloned().fold(0.0, f64::max);
    let min = m.iter().cloned().fold(f64::INFINITY, f64::min);
    (max - min) / max
}

/// Which representation carried the fine-grained state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FinePath {
    Dense,
    Terms,
}

#[derive(Clone, Debug)]
pub struct BornResult {
    pub weights: WeightVector,
    pub probs_exact: Vec<BigRational>,
    /// `|a_k|^2` of the input Schmidt coefficients.
    pub probs_float: Vec<f64>,
    pub rationalization_error: f64,
    pub decomposition: SchmidtDecomposition,
    pub path: FinePath,
}

/// Schmidt decomposition, rationalization, fine-graining and cell counting.
pub fn born_probabilities(
    state: &StateVector,
    cut: &Bipartition,
    m_max: u64,
) -> Result<BornResult> {
    let dec = schmidt(state, cut, DEFAULT_ZERO_TOL)?;
    let (weights, err) = rationalize(&dec.coeffs, m_max)?;
    let phases: Vec<f64> = dec.coeffs.iter().map(|a| a.arg()).collect();
    let (m, total) = weights.small()?;
    let dense = (m.len() as u128) * (total as u128) * (total as u128) <= DENSE_CAP as u128;
    let counts = if dense {
        count_cells(&fine_grain(&weights, &phases)?)?
    } else {
        fine_grain_terms(&weights, CellPhases::Inherit(&phases))?.count_cells()?
    };
    if counts != m {
        return Err(Error::Inconsistent(format!(
            "cell counts {counts:?} differ from weights {m:?}"
        )));
    }
    let denom = BigUint::from(counts.iter().sum::<usize>());
    let probs_exact = counts
        .iter()
        .map(|&c| BigRational::new(BigUint::from(c).into(), denom.clone().into()))
        .collect();
    Ok(BornResult {
        weights,
        probs_exact,
        probs_float: dec.coeffs.iter().map(|a| a.norm_sqr()).collect(),
        rationalization_error: err,
        decomposition: dec,
        path: if dense {
            FinePath::Dense
        } else {
            FinePath::Terms
        },
    })
}

/// `sum_{k in subset} m_k / M`.
pub fn coarse_probability(result: &BornResult, subset: &[usize]) -> Result<BigRational> {
    let n = result.probs_exact.len();
    let mut members: Vec<usize> = subset.to_vec();
    members.sort_unstable();
    members.dedup();
    let mut acc = BigRational::zero();
    for k in members {
        let p = result
            .probs_exact
            .get(k)
            .ok_or(Error::EventIndex { index: k, size: n })?;
        acc += p;
    }
    Ok(acc)
}

/// Exact fraction as `"a/b"` (or `"a"` when integral).
pub fn fraction_string(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}
