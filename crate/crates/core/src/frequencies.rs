//! Relative frequencies in a superensemble of repeated two-outcome
//! measurements.
//!
//! Each run is fine-grained into `M` equal cells, `m` of which record
//! outcome "0". Histories of `N` runs are then equiprobable, so the
//! distribution of the number of "1" detections is a matter of counting.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::born::{fine_grain, WeightVector};
use crate::envariance::{check_decomposition, DECISION_TOL};
use crate::error::{Error, Result};
use crate::hilbert::{
    digits_of, flat_index, permute_subsystems, schmidt, Bipartition, LocalUnitary,
    SchmidtDecomposition, StateVector, DEFAULT_ZERO_TOL,
};
use crate::sample::rng;

/// Largest dense superensemble state (amplitude count).
pub const DENSE_CAP: usize = 1 << 22;
/// Largest system–counter space on which the dense envariance check runs.
pub const SWAP_CHECK_CAP: usize = 1296;
/// Largest run count with an explicit detection register.
pub const REGISTER_MAX_RUNS: usize = 3;

/// `N` runs of a measurement with `|alpha|^2 = m/M`, `|beta|^2 = (M-m)/M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExperimentSpec {
    m: u64,
    total: u64,
    runs: usize,
}

impl ExperimentSpec {
    pub fn new(m: u64, total: u64, runs: usize) -> Result<Self> {
        if m == 0 || m >= total {
            return Err(Error::InvalidExperiment(format!(
                "need 1 <= m < M, got m = {m}, M = {total}"
            )));
        }
        if runs == 0 {
            return Err(Error::InvalidExperiment("need at least one run".into()));
        }
        Ok(Self { m, total, runs })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    /// `|alpha|^2`
    pub fn alpha_sq(&self) -> f64 {
        self.m as f64 / self.total as f64
    }

    /// `|beta|^2`
    pub fn beta_sq(&self) -> f64 {
        (self.total - self.m) as f64 / self.total as f64
    }
}

/// Exact binomial coefficient by the multiplicative formula.
pub fn binomial(n: usize, k: usize) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= BigUint::from(n - i);
        acc /= BigUint::from(i + 1);
    }
    acc
}

/// Number of fine-grained histories with `n` "1" detections, `n = 0..=N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HistoryTally {
    pub counts: Vec<BigUint>,
    pub total: BigUint,
}

/// `counts(n) = C(N, n) m^{N-n} (M-m)^n`, summing to `M^N`.
pub fn history_counts(spec: &ExperimentSpec) -> HistoryTally {
    let n_runs = spec.runs;
    let a = BigUint::from(spec.m);
    let b = BigUint::from(spec.total - spec.m);
    let counts = (0..=n_runs)
        .map(|n| binomial(n_runs, n) * a.pow((n_runs - n) as u32) * b.pow(n as u32))
        .collect();
    HistoryTally {
        counts,
        total: BigUint::from(spec.total).pow(n_runs as u32),
    }
}

/// Multi-outcome tally: for cell counts `m_1..m_K` and `N` runs, the number
/// of histories with each detection profile `(n_1, ..., n_K)`.
pub fn multinomial_counts(weights: &[u64], runs: usize) -> Result<BTreeMap<Vec<usize>, BigUint>> {
    if weights.is_empty() || weights.contains(&0) {
        return Err(Error::InvalidExperiment("weights must be positive".into()));
    }
    let mut out = BTreeMap::new();
    let mut profile = vec![0usize; weights.len()];
    fn walk(
        k: usize,
        left: usize,
        weights: &[u64],
        profile: &mut Vec<usize>,
        coeff: BigUint,
        out: &mut BTreeMap<Vec<usize>, BigUint>,
    ) {
        if k + 1 == weights.len() {
            profile[k] = left;
            let c = coeff * BigUint::from(weights[k]).pow(left as u32);
            out.insert(profile.clone(), c);
            return;
        }
        for n in 0..=left {
            profile[k] = n;
            let c = &coeff * binomial(left, n) * BigUint::from(weights[k]).pow(n as u32);
            walk(k + 1, left - n, weights, profile, c, out);
        }
    }
    walk(0, runs, weights, &mut profile, BigUint::one(), &mut out);
    Ok(out)
}

/// `p_N(n) = counts(n) / M^N` exactly.
pub fn frequency_distribution(spec: &ExperimentSpec) -> Vec<BigRational> {
    let tally = history_counts(spec);
    let denom: num_bigint::BigInt = tally.total.into();
    tally
        .counts
        .into_iter()
        .map(|c| BigRational::new(c.into(), denom.clone()))
        .collect()
}

/// Gaussian with the exponent `-((n - N|beta|^2) / (sqrt(N)|alpha beta|))^2`
/// and prefactor `1/(sqrt(2 pi N)|alpha beta|)`, taken literally.
pub fn gaussian_approx(spec: &ExperimentSpec, n: f64) -> f64 {
    let ab = (spec.alpha_sq() * spec.beta_sq()).sqrt();
    let big_n = spec.runs as f64;
    let z = (n - big_n * spec.beta_sq()) / (big_n.sqrt() * ab);
    (-z * z).exp() / ((2.0 * std::f64::consts::PI * big_n).sqrt() * ab)
}

/// De Moivre–Laplace normal density with variance `N |alpha beta|^2`.
pub fn gaussian_standard(spec: &ExperimentSpec, n: f64) -> f64 {
    let sd = deviation(spec);
    let z = (n - spec.runs as f64 * spec.beta_sq()) / sd;
    (-0.5 * z * z).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sd)
}

/// Expected spread `sqrt(N) |alpha beta|` of the detection count.
pub fn deviation(spec: &ExperimentSpec) -> f64 {
    (spec.runs as f64).sqrt() * (spec.alpha_sq() * spec.beta_sq()).sqrt()
}

/// Largest gap between the exact distribution and a density evaluated at
/// integer `n`.
pub fn sup_gap(spec: &ExperimentSpec, density: impl Fn(&ExperimentSpec, f64) -> f64) -> f64 {
    let p = frequency_distribution(spec);
    let raw: Vec<f64> = (0..p.len()).map(|n| density(spec, n as f64)).collect();
    let scale: f64 = raw.iter().sum();
    p.iter()
        .zip(&raw)
        .map(|(pn, g)| (pn.to_f64().unwrap_or(f64::NAN) - g / scale).abs())
        .fold(0.0, f64::max)
}

/// Detection counts `n` whose relative frequency misses `|beta|^2` by more
/// than `dr`, decided in exact arithmetic: `|n M - N (M-m)| > dr N M`.
pub fn maverick_set(spec: &ExperimentSpec, dr: f64) -> Result<Vec<usize>> {
    if !(dr > 0.0 && dr < 1.0) {
        return Err(Error::Parameter(format!(
            "frequency window {dr} must lie in (0, 1)"
        )));
    }
    let dr = BigRational::from_float(dr).expect("finite window");
    let big_n = spec.runs as i128;
    let (m, total) = (spec.m as i128, spec.total as i128);
    let bound = dr * BigRational::from_integer((big_n * total).into());
    Ok((0..=spec.runs)
        .filter(|&n| {
            let gap =
                BigRational::from_integer((n as i128 * total - big_n * (total - m)).into()).abs();
            gap > bound
        })
        .collect())
}

/// Exact probability mass of the maverick detection counts.
pub fn maverick_mass(spec: &ExperimentSpec, dr: f64) -> Result<BigRational> {
    let p = frequency_distribution(spec);
    Ok(maverick_set(spec, dr)?
        .into_iter()
        .fold(BigRational::zero(), |acc, n| acc + &p[n]))
}

/// Superensemble of `N` fine-grained runs. Run `r` occupies subsystems
/// `3r` (system, 2 levels), `3r+1` (environment, `M`) and `3r+2` (counter,
/// `M`), optionally followed by a detection register of `N+1` levels.
/// Only the `M^N` nonzero amplitudes are stored, keyed by their flat index.
#[derive(Clone, Debug)]
pub struct Superensemble {
    spec: ExperimentSpec,
    dims: Vec<usize>,
    terms: Vec<(usize, C64)>,
    register: bool,
}

/// One history: the fine cell chosen in every run.
pub type History = Vec<usize>;

impl Superensemble {
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn terms(&self) -> &[(usize, C64)] {
        &self.terms
    }

    pub fn spec(&self) -> &ExperimentSpec {
        &self.spec
    }

    pub fn has_register(&self) -> bool {
        self.register
    }

    /// Amplitude count of the materialized tensor.
    pub fn full_len(&self) -> u128 {
        self.dims.iter().map(|&d| d as u128).product()
    }

    /// Dense state, when under the size cap.
    pub fn to_state(&self) -> Result<StateVector> {
        let needed = self.full_len();
        if needed > DENSE_CAP as u128 {
            return Err(Error::SizeCap {
                needed,
                cap: DENSE_CAP as u128,
            });
        }
        let mut amps = vec![C64::new(0.0, 0.0); needed as usize];
        for &(i, a) in &self.terms {
            amps[i] = a;
        }
        StateVector::new(self.dims.clone(), amps)
    }

    fn outcome_of(&self, cell: usize) -> usize {
        usize::from(cell as u64 >= self.spec.m)
    }

    /// Flat index of the history's term with its environment cells `env`.
    fn index(&self, cells: &[usize], env: &[usize]) -> usize {
        let mut digits = Vec::with_capacity(self.dims.len());
        let mut ones = 0;
        for (&c, &e) in cells.iter().zip(env) {
            let k = self.outcome_of(c);
            ones += k;
            digits.extend_from_slice(&[k, e, c]);
        }
        if self.register {
            digits.push(ones);
        }
        flat_index(&self.dims, &digits).expect("digits within dims")
    }

    /// Number of "1" detections per term, read from the system digits (or
    /// from the register when present).
    pub fn census(&self) -> Vec<BigUint> {
        let mut counts = vec![BigUint::zero(); self.spec.runs + 1];
        for &(i, _) in &self.terms {
            let d = digits_of(&self.dims, i);
            let n = if self.register {
                d[d.len() - 1]
            } else {
                (0..self.spec.runs).map(|r| d[3 * r]).sum()
            };
            counts[n] += 1u32;
        }
        counts
    }

    /// Largest deviation of any term modulus from `M^{-N/2}`.
    pub fn modulus_deviation(&self) -> f64 {
        let target = (self.spec.total as f64).powf(-(self.spec.runs as f64) / 2.0);
        self.terms
            .iter()
            .map(|(_, a)| (a.norm() - target).abs())
            .fold(0.0, f64::max)
    }

    fn overlap(&self, other: &[(usize, C64)]) -> f64 {
        let map: HashMap<usize, C64> = other.iter().copied().collect();
        self.terms
            .iter()
            .map(|(i, a)| map.get(i).map_or(C64::new(0.0, 0.0), |b| a.conj() * b))
            .sum::<C64>()
            .norm()
    }

    /// Exchange two histories on the system–counter side, then exchange
    /// their environment states. Returns the fidelity with the original.
    pub fn swap_restoration(&self, h1: &History, h2: &History) -> Result<f64> {
        let n = self.spec.runs;
        if h1.len() != n || h2.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: h1.len().min(h2.len()),
            });
        }
        let total = self.spec.total as usize;
        if h1.iter().chain(h2).any(|&c| c >= total) {
            return Err(Error::Parameter("history cell out of range".into()));
        }
        if self.register && self.ones(h1) != self.ones(h2) {
            return Err(Error::Parameter(
                "register histories must share the detection count".into(),
            ));
        }
        // a term's system-counter part and environment part, as cell lists
        let split = |i: usize| {
            let d = digits_of(&self.dims, i);
            let cells: Vec<usize> = (0..n).map(|r| d[3 * r + 2]).collect();
            let env: Vec<usize> = (0..n).map(|r| d[3 * r + 1]).collect();
            (cells, env)
        };
        let swap = |x: &Vec<usize>| {
            if x == h1 {
                h2.clone()
            } else if x == h2 {
                h1.clone()
            } else {
                x.clone()
            }
        };
        let swapped: Vec<(usize, C64)> = self
            .terms
            .iter()
            .map(|&(i, a)| {
                let (cells, env) = split(i);
                (self.index(&swap(&cells), &env), a)
            })
            .collect();
        let restored: Vec<(usize, C64)> = swapped
            .iter()
            .map(|&(i, a)| {
                let (cells, env) = split(i);
                (self.index(&cells, &swap(&env)), a)
            })
            .collect();
        Ok(self.overlap(&restored).min(1.0))
    }

    fn ones(&self, h: &History) -> usize {
        h.iter().map(|&c| self.outcome_of(c)).sum()
    }

    /// Dense envariance decision for the system–counter history swap,
    /// across the cut `(S, C) | E` of every run.
    pub fn swap_is_envariant(&self, h1: &History, h2: &History) -> Result<bool> {
        let (state, dec) = self.swap_check_setup()?;
        self.swap_verdict(&state, &dec, h1, h2)
    }

    /// Dense state and its `(S, C) | E` decomposition, shared by every swap
    /// checked against the same superensemble.
    fn swap_check_setup(&self) -> Result<(StateVector, SchmidtDecomposition)> {
        if self.register {
            return Err(Error::Parameter(
                "dense swap check runs without the register".into(),
            ));
        }
        let ldim: usize = self.swap_side().iter().map(|&s| self.dims[s]).product();
        if ldim > SWAP_CHECK_CAP {
            return Err(Error::SizeCap {
                needed: ldim as u128,
                cap: SWAP_CHECK_CAP as u128,
            });
        }
        let state = self.to_state()?;
        let cut = Bipartition::new(self.swap_side(), self.dims.len())?;
        let dec = schmidt(&state, &cut, DEFAULT_ZERO_TOL)?;
        Ok((state, dec))
    }

    fn swap_side(&self) -> Vec<usize> {
        (0..self.spec.runs)
            .flat_map(|r| [3 * r, 3 * r + 2])
            .collect()
    }

    fn swap_verdict(
        &self,
        state: &StateVector,
        dec: &SchmidtDecomposition,
        h1: &History,
        h2: &History,
    ) -> Result<bool> {
        let left = self.swap_side();
        let ldims: Vec<usize> = left.iter().map(|&s| self.dims[s]).collect();
        let ldim: usize = ldims.iter().product();
        let digits = |h: &History| -> Vec<usize> {
            h.iter().flat_map(|&c| [self.outcome_of(c), c]).collect()
        };
        let (i1, i2) = (
            flat_index(&ldims, &digits(h1))?,
            flat_index(&ldims, &digits(h2))?,
        );
        let mut u = nalgebra::DMatrix::<C64>::identity(ldim, ldim);
        if i1 != i2 {
            for (a, b) in [(i1, i1), (i2, i2)] {
                u[(a, b)] = C64::new(0.0, 0.0);
            }
            u[(i1, i2)] = C64::new(1.0, 0.0);
            u[(i2, i1)] = C64::new(1.0, 0.0);
        }
        let verdict = check_decomposition(state, dec, &LocalUnitary::new(left, u)?, DECISION_TOL)?;
        Ok(verdict.envariant)
    }

    /// Fidelity between the state and itself with the run order permuted.
    pub fn permutation_fidelity(&self, order: &[usize]) -> Result<f64> {
        let n = self.spec.runs;
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(Error::Parameter("run order must be a permutation".into()));
        }
        let mut sub_order: Vec<usize> = order
            .iter()
            .flat_map(|&r| [3 * r, 3 * r + 1, 3 * r + 2])
            .collect();
        if self.register {
            sub_order.push(3 * n);
        }
        if self.full_len() <= DENSE_CAP as u128 {
            let s = self.to_state()?;
            let p = permute_subsystems(&s, &sub_order)?;
            return crate::hilbert::fidelity(&s, &p);
        }
        let new_dims: Vec<usize> = sub_order.iter().map(|&s| self.dims[s]).collect();
        let moved: Vec<(usize, C64)> = self
            .terms
            .iter()
            .map(|&(i, a)| {
                let d = digits_of(&self.dims, i);
                let nd: Vec<usize> = sub_order.iter().map(|&s| d[s]).collect();
                (flat_index(&new_dims, &nd).expect("permuted digits"), a)
            })
            .collect();
        Ok(self.overlap(&moved).min(1.0))
    }
}

/// Build the superensemble: every history of cells `(j_1, ..., j_N)` has
/// amplitude `M^{-N/2}` on `|k(j_r)>_S |e_{j_r}>_E |c_{j_r}>_C` in each run.
pub fn build_superensemble(spec: &ExperimentSpec, register: bool) -> Result<Superensemble> {
    if register && spec.runs > REGISTER_MAX_RUNS {
        return Err(Error::InvalidExperiment(format!(
            "the detection register is available up to {REGISTER_MAX_RUNS} runs"
        )));
    }
    let total = spec.total as usize;
    let terms_needed = (spec.total as u128).pow(spec.runs as u32);
    if terms_needed > DENSE_CAP as u128 {
        return Err(Error::SizeCap {
            needed: terms_needed,
            cap: DENSE_CAP as u128,
        });
    }
    let mut dims: Vec<usize> = (0..spec.runs).flat_map(|_| [2, total, total]).collect();
    if register {
        dims.push(spec.runs + 1);
    }
    let full: u128 = dims.iter().map(|&d| d as u128).product();
    if full > usize::MAX as u128 {
        return Err(Error::SizeCap {
            needed: full,
            cap: usize::MAX as u128,
        });
    }
    let mut ens = Superensemble {
        spec: *spec,
        dims,
        terms: Vec::new(),
        register,
    };
    let amp = C64::new((spec.total as f64).powf(-(spec.runs as f64) / 2.0), 0.0);
    let cell_dims = vec![total; spec.runs];
    ens.terms = (0..terms_needed as usize)
        .map(|h| {
            let cells = digits_of(&cell_dims, h);
            (ens.index(&cells, &cells), amp)
        })
        .collect();
    ens.terms.sort_unstable_by_key(|t| t.0);
    Ok(ens)
}

/// Outcome of one sampled history exchange.
#[derive(Clone, Debug, Serialize)]
pub struct HistorySwapCheck {
    pub first: History,
    pub second: History,
    pub restoration_fidelity: f64,
    /// Dense envariance verdict, when the state is small enough.
    pub envariant: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuperensembleReport {
    pub spec: ExperimentSpec,
    pub dims: Vec<usize>,
    pub terms: usize,
    pub census: Vec<String>,
    pub census_matches: bool,
    pub modulus_deviation: f64,
    pub swaps: Vec<HistorySwapCheck>,
    pub permutation_fidelity: f64,
}

fn random_history<R: Rng + ?Sized>(spec: &ExperimentSpec, rng: &mut R) -> History {
    (0..spec.runs)
        .map(|_| rng.random_range(0..spec.total as usize))
        .collect()
}

/// Build the superensemble and cross-check it: census against the
/// combinatorial tally, term moduli, `samples` random history swaps with
/// their environment counterswaps, and one random run permutation.
pub fn build_superensemble_explicit(
    spec: &ExperimentSpec,
    samples: usize,
    seed: u64,
    register: bool,
) -> Result<(Superensemble, SuperensembleReport)> {
    let ens = build_superensemble(spec, register)?;
    let census = ens.census();
    let census_matches = census == history_counts(spec).counts;
    let mut r = rng(seed);
    let left_dim = (2 * spec.total as usize).pow(spec.runs as u32);
    let dense_check =
        !register && left_dim <= SWAP_CHECK_CAP && ens.full_len() <= DENSE_CAP as u128;
    let dense = if dense_check {
        Some(ens.swap_check_setup()?)
    } else {
        None
    };
    let mut swaps = Vec::with_capacity(samples);
    for _ in 0..samples {
        let first = random_history(spec, &mut r);
        let mut second = random_history(spec, &mut r);
        if register {
            // keep the detection count so the register stays untouched
            second = first.clone();
            second.shuffle(&mut r);
        }
        let restoration_fidelity = ens.swap_restoration(&first, &second)?;
        let envariant = match &dense {
            Some((state, dec)) => Some(ens.swap_verdict(state, dec, &first, &second)?),
            None => None,
        };
        swaps.push(HistorySwapCheck {
            first,
            second,
            restoration_fidelity,
            envariant,
        });
    }
    let mut order: Vec<usize> = (0..spec.runs).collect();
    order.shuffle(&mut r);
    let permutation_fidelity = ens.permutation_fidelity(&order)?;
    let report = SuperensembleReport {
        spec: *spec,
        dims: ens.dims.clone(),
        terms: ens.terms.len(),
        census: census.iter().map(|c| c.to_string()).collect(),
        census_matches,
        modulus_deviation: ens.modulus_deviation(),
        swaps,
        permutation_fidelity,
    };
    Ok((ens, report))
}

/// Single-run superensemble as produced by the fine-graining engine.
pub fn single_run_fine_grain(spec: &ExperimentSpec) -> Result<StateVector> {
    let w = WeightVector::from_u64(&[spec.m, spec.total - spec.m])?;
    fine_grain(&w, &[0.0, 0.0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn big(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&x| BigUint::from(x)).collect()
    }

    #[test]
    fn coin_tally() {
        let s = ExperimentSpec::new(1, 2, 2).unwrap();
        let t = history_counts(&s);
        assert_eq!(t.counts, big(&[1, 2, 1]));
        assert_eq!(t.total, BigUint::from(4u32));
        assert_eq!(frequency_distribution(&s), vec![q(1, 4), q(1, 2), q(1, 4)]);
    }

    #[test]
    fn thirds_tally() {
        let s = ExperimentSpec::new(1, 3, 3).unwrap();
        assert_eq!(history_counts(&s).counts, big(&[1, 6, 12, 8]));
        assert_eq!(
            frequency_distribution(&s),
            vec![q(1, 27), q(6, 27), q(12, 27), q(8, 27)]
        );
    }

    #[test]
    fn invalid_specs() {
        assert!(ExperimentSpec::new(0, 2, 1).is_err());
        assert!(ExperimentSpec::new(2, 2, 1).is_err());
        assert!(ExperimentSpec::new(1, 2, 0).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(3, 4), BigUint::zero());
        assert_eq!(
            binomial(100, 50).to_string(),
            "100891344545564193334812497256"
        );
    }

    #[test]
    fn multinomial_reduces_to_binomial() {
        let mc = multinomial_counts(&[1, 2], 3).unwrap();
        let t = history_counts(&ExperimentSpec::new(1, 3, 3).unwrap());
        for n in 0..=3 {
            assert_eq!(mc[&vec![3 - n, n]], t.counts[n]);
        }
        let three = multinomial_counts(&[1, 1, 2], 4).unwrap();
        let sum: BigUint = three.values().sum();
        assert_eq!(sum, BigUint::from(4u32).pow(4));
    }

    #[test]
    fn gaussian_peak_and_deviation() {
        let s = ExperimentSpec::new(1, 2, 100).unwrap();
        assert!((deviation(&s) - 5.0).abs() < 1e-12);
        let peak = gaussian_approx(&s, 50.0);
        assert!((peak - 1.0 / ((2.0 * std::f64::consts::PI * 100.0).sqrt() * 0.5)).abs() < 1e-15);
    }

    #[test]
    fn maverick_edges() {
        let s = ExperimentSpec::new(1, 4, 10).unwrap();
        assert_eq!(maverick_mass(&s, 0.75).unwrap(), q(0, 1));
        let one = ExperimentSpec::new(1, 4, 1).unwrap();
        // |0 - 3/4| > 0.5 but |1 - 3/4| is not
        assert_eq!(maverick_mass(&one, 0.5).unwrap(), q(1, 4));
        assert!(maverick_mass(&s, 0.0).is_err());
    }

    #[test]
    fn explicit_coin() {
        let s = ExperimentSpec::new(1, 2, 2).unwrap();
        let (ens, report) = build_superensemble_explicit(&s, 4, 1, false).unwrap();
        assert_eq!(ens.full_len(), 64);
        assert_eq!(report.census, vec!["1", "2", "1"]);
        assert!(report.census_matches);
        assert!(report.modulus_deviation <= 1e-12);
        for sw in &report.swaps {
            assert!(sw.restoration_fidelity >= 1.0 - 1e-12);
            assert_eq!(sw.envariant, Some(true));
        }
        assert!((report.permutation_fidelity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_run_matches_fine_grain() {
        let s = ExperimentSpec::new(1, 3, 1).unwrap();
        let ens = build_superensemble(&s, false).unwrap().to_state().unwrap();
        let fg = single_run_fine_grain(&s).unwrap();
        assert_eq!(ens.dims(), fg.dims());
        assert!((crate::hilbert::fidelity(&ens, &fg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn register_census() {
        let s = ExperimentSpec::new(1, 3, 3).unwrap();
        let (ens, report) = build_superensemble_explicit(&s, 3, 2, true).unwrap();
        assert!(ens.has_register());
        assert!(report.census_matches);
        assert!(report
            .swaps
            .iter()
            .all(|c| c.restoration_fidelity >= 1.0 - 1e-12));
        assert!(build_superensemble(&ExperimentSpec::new(1, 2, 4).unwrap(), true).is_err());
    }
}
