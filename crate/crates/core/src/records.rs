//! Boolean algebra of record events.
//!
//! An event is a set of pointer-basis outcomes; its projector is diagonal in
//! that basis and is materialized only to check the lattice at the operator
//! level. Probabilities come from fine-grained cell counts.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde::Serialize;

use crate::born::{born_probabilities, BornResult};
use crate::error::{Error, Result};
use crate::hilbert::{Bipartition, StateVector};
use crate::sample::rng;

/// Tolerance of projector-level comparisons.
pub const PROJECTOR_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RecordEvent {
    universe: usize,
    members: BTreeSet<usize>,
}

impl RecordEvent {
    pub fn new(universe: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        if universe == 0 {
            return Err(Error::Empty("universe"));
        }
        let members: BTreeSet<usize> = members.into_iter().collect();
        if let Some(&k) = members.iter().find(|&&k| k >= universe) {
            return Err(Error::EventIndex {
                index: k,
                size: universe,
            });
        }
        Ok(Self { universe, members })
    }

    pub fn empty(universe: usize) -> Result<Self> {
        Self::new(universe, [])
    }

    pub fn full(universe: usize) -> Result<Self> {
        Self::new(universe, 0..universe)
    }

    /// Comma-separated 1-based outcome labels, e.g. `"1,2,5"`; an empty
    /// string is the empty event.
    pub fn parse(text: &str, universe: usize) -> Result<Self> {
        let mut members = Vec::new();
        for t in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let label: usize = t
                .parse()
                .map_err(|e| Error::Parse(format!("event label {t:?}: {e}")))?;
            if label == 0 || label > universe {
                return Err(Error::EventIndex {
                    index: label,
                    size: universe,
                });
            }
            members.push(label - 1);
        }
        Self::new(universe, members)
    }

    /// Event of a projector given in the pointer basis. Off-diagonal entries
    /// mean the projector does not commute with the pointer basis.
    pub fn from_projector(p: &DMatrix<C64>) -> Result<Self> {
        let n = p.nrows();
        if p.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: p.ncols(),
            });
        }
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off.max(p[(i, j)].norm());
                }
            }
        }
        if off > PROJECTOR_TOL {
            return Err(Error::NonCommuting { deviation: off });
        }
        let mut members = Vec::new();
        for i in 0..n {
            let d = p[(i, i)];
            if (d - C64::new(1.0, 0.0)).norm() <= PROJECTOR_TOL {
                members.push(i);
            } else if d.norm() > PROJECTOR_TOL {
                return Err(Error::Parameter(format!(
                    "diagonal entry {i} is neither 0 nor 1"
                )));
            }
        }
        Self::new(n, members)
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn members(&self) -> &BTreeSet<usize> {
        &self.members
    }

    pub fn contains(&self, k: usize) -> bool {
        self.members.contains(&k)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn same_universe(&self, other: &Self) -> Result<()> {
        if self.universe != other.universe {
            return Err(Error::UniverseMismatch(self.universe, other.universe));
        }
        Ok(())
    }

    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.same_universe(other)?;
        Ok(Self {
            universe: self.universe,
            members: &self.members & &other.members,
        })
    }

    pub fn join(&self, other: &Self) -> Result<Self> {
        self.same_universe(other)?;
        Ok(Self {
            universe: self.universe,
            members: &self.members | &other.members,
        })
    }

    pub fn complement(&self) -> Self {
        let members = (0..self.universe)
            .filter(|k| !self.members.contains(k))
            .collect();
        Self {
            universe: self.universe,
            members,
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.universe == other.universe && self.members.is_subset(&other.members)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.members.is_disjoint(&other.members)
    }

    /// Diagonal projector onto the spanned record subspace.
    pub fn projector(&self) -> DMatrix<f64> {
        let diag = DVector::from_fn(self.universe, |i, _| {
            if self.members.contains(&i) {
                1.0
            } else {
                0.0
            }
        });
        DMatrix::from_diagonal(&diag)
    }
}

/// `P_a P_b`
pub fn meet_projector(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b
}

/// `P_a + P_b - P_a P_b`
pub fn join_projector(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a + b - a * b
}

/// `1 - P_a`
pub fn complement_projector(a: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::identity(a.nrows(), a.ncols()) - a
}

fn projector_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}

/// Violation counts of one axiom pair.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct AxiomTally {
    pub axiom: &'static str,
    pub checked: usize,
    pub set_violations: usize,
    pub projector_violations: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub universe_size: usize,
    pub trials: usize,
    pub axioms: Vec<AxiomTally>,
    /// Lattice operations whose projector result differs from the projector
    /// of the set result.
    pub isomorphism_violations: usize,
}

impl AxiomReport {
    pub fn violations(&self) -> usize {
        self.isomorphism_violations
            + self
                .axioms
                .iter()
                .map(|a| a.set_violations + a.projector_violations)
                .sum::<usize>()
    }
}

pub const AXIOMS: [&str; 10] = [
    "commutativity (meet)",
    "commutativity (join)",
    "associativity (meet)",
    "associativity (join)",
    "absorptivity (meet over join)",
    "absorptivity (join over meet)",
    "distributivity (meet over join)",
    "distributivity (join over meet)",
    "orthocompleteness (meet)",
    "orthocompleteness (join)",
];

pub fn random_event<R: Rng + ?Sized>(universe: usize, rng: &mut R) -> RecordEvent {
    let members: BTreeSet<usize> = (0..universe).filter(|_| rng.random_bool(0.5)).collect();
    RecordEvent { universe, members }
}

/// Check every axiom pair on random triples, once with sets and once with
/// projector arithmetic.
pub fn verify_axioms(universe_size: usize, trials: usize, seed: u64) -> Result<AxiomReport> {
    if universe_size == 0 {
        return Err(Error::Empty("universe"));
    }
    let mut r = rng(seed);
    let mut tallies: Vec<AxiomTally> = AXIOMS
        .iter()
        .map(|&axiom| AxiomTally {
            axiom,
            checked: 0,
            set_violations: 0,
            projector_violations: 0,
        })
        .collect();
    let mut iso = 0;
    let empty = RecordEvent::empty(universe_size)?;
    let full = RecordEvent::full(universe_size)?;
    let (pe, pf) = (empty.projector(), full.projector());
    for _ in 0..trials {
        let (a, b, c) = (
            random_event(universe_size, &mut r),
            random_event(universe_size, &mut r),
            random_event(universe_size, &mut r),
        );
        let (pa, pb, pc) = (a.projector(), b.projector(), c.projector());
        let m = |x: &RecordEvent, y: &RecordEvent| x.meet(y).expect("shared universe");
        let j = |x: &RecordEvent, y: &RecordEvent| x.join(y).expect("shared universe");
        let (mp, jp) = (meet_projector, join_projector);

        let sets = [
            (m(&a, &b), m(&b, &a)),
            (j(&a, &b), j(&b, &a)),
            (m(&a, &m(&b, &c)), m(&m(&a, &b), &c)),
            (j(&a, &j(&b, &c)), j(&j(&a, &b), &c)),
            (m(&a, &j(&a, &b)), a.clone()),
            (j(&a, &m(&a, &b)), a.clone()),
            (m(&a, &j(&b, &c)), j(&m(&a, &b), &m(&a, &c))),
            (j(&a, &m(&b, &c)), m(&j(&a, &b), &j(&a, &c))),
            (m(&a, &a.complement()), empty.clone()),
            (j(&a, &a.complement()), full.clone()),
        ];
        let mats = [
            (mp(&pa, &pb), mp(&pb, &pa)),
            (jp(&pa, &pb), jp(&pb, &pa)),
            (mp(&pa, &mp(&pb, &pc)), mp(&mp(&pa, &pb), &pc)),
            (jp(&pa, &jp(&pb, &pc)), jp(&jp(&pa, &pb), &pc)),
            (mp(&pa, &jp(&pa, &pb)), pa.clone()),
            (jp(&pa, &mp(&pa, &pb)), pa.clone()),
            (mp(&pa, &jp(&pb, &pc)), jp(&mp(&pa, &pb), &mp(&pa, &pc))),
            (jp(&pa, &mp(&pb, &pc)), mp(&jp(&pa, &pb), &jp(&pa, &pc))),
            (mp(&pa, &complement_projector(&pa)), pe.clone()),
            (jp(&pa, &complement_projector(&pa)), pf.clone()),
        ];
        for (t, ((sl, sr), (ml, mr))) in tallies.iter_mut().zip(sets.iter().zip(mats.iter())) {
            t.checked += 1;
            if sl != sr {
                t.set_violations += 1;
            }
            if projector_distance(ml, mr) > PROJECTOR_TOL {
                t.projector_violations += 1;
            }
            if projector_distance(&sl.projector(), ml) > PROJECTOR_TOL {
                iso += 1;
            }
        }
    }
    Ok(AxiomReport {
        universe_size,
        trials,
        axioms: tallies,
        isomorphism_violations: iso,
    })
}

/// Fine-grained cell counts per outcome; zero marks an unreachable outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FineTally {
    counts: Vec<BigUint>,
    total: BigUint,
}

impl FineTally {
    pub fn new(counts: Vec<BigUint>) -> Result<Self> {
        let total: BigUint = counts.iter().sum();
        if total.is_zero() {
            return Err(Error::Parameter("tally has no cells".into()));
        }
        Ok(Self { counts, total })
    }

    /// `N` equally weighted outcomes.
    pub fn even(n: usize) -> Result<Self> {
        Self::new(vec![BigUint::one(); n])
    }

    pub fn from_result(result: &BornResult) -> Self {
        Self::new(result.weights.m().to_vec()).expect("weights are positive")
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn universe(&self) -> usize {
        self.counts.len()
    }
}

/// Cells in the event over all cells.
pub fn event_probability(tally: &FineTally, event: &RecordEvent) -> Result<BigRational> {
    if event.universe() != tally.universe() {
        return Err(Error::UniverseMismatch(event.universe(), tally.universe()));
    }
    let n: BigUint = event.members().iter().map(|&k| &tally.counts[k]).sum();
    Ok(BigRational::new(n.into(), tally.total.clone().into()))
}

/// Probability of `event` given the fine outcome `k`: 1 if `k` is in it.
pub fn conditional(event: &RecordEvent, k: usize) -> Result<BigRational> {
    if k >= event.universe() {
        return Err(Error::EventIndex {
            index: k,
            size: event.universe(),
        });
    }
    Ok(if event.contains(k) {
        BigRational::one()
    } else {
        BigRational::zero()
    })
}

/// Probability of a `subset_size`-element event in an even universe of
/// size `universe`, peeling off one outcome at a time:
/// `prod_{j=0}^{N-n-1} (1 - 1/(N-j))`.
pub fn equal_cell_recursion(universe: usize, subset_size: usize) -> Result<BigRational> {
    if universe == 0 {
        return Err(Error::Empty("universe"));
    }
    if subset_size > universe {
        return Err(Error::EventIndex {
            index: subset_size,
            size: universe,
        });
    }
    let mut p = BigRational::one();
    for j in 0..universe - subset_size {
        let remaining = BigRational::from_integer(((universe - j) as u64).into());
        p *= BigRational::one() - remaining.recip();
    }
    Ok(p)
}

/// Check that `partition` is a family of disjoint events covering every
/// outcome of nonzero weight.
fn check_partition(amplitudes: &[C64], partition: &[RecordEvent]) -> Result<Vec<Option<usize>>> {
    let n = amplitudes.len();
    let mut cell_of = vec![None; n];
    for (c, ev) in partition.iter().enumerate() {
        if ev.universe() != n {
            return Err(Error::UniverseMismatch(ev.universe(), n));
        }
        for &k in ev.members() {
            if cell_of[k].is_some() {
                return Err(Error::OverlappingCells(k));
            }
            cell_of[k] = Some(c);
        }
    }
    for (k, a) in amplitudes.iter().enumerate() {
        if a.norm() > crate::hilbert::DEFAULT_ZERO_TOL && cell_of[k].is_none() {
            return Err(Error::UncoveredOutcome(k));
        }
    }
    Ok(cell_of)
}

/// Subsystem order of record states.
pub const COARSE: usize = 0;
pub const FINE: usize = 1;

/// `sum_k a_k |coarse(k)> |A_k> |s_k> |eps_k>` over outcomes of nonzero
/// amplitude, with layout `[coarse register, fine register, S, E]`.
pub fn build_upsilon(amplitudes: &[C64], partition: &[RecordEvent]) -> Result<StateVector> {
    if partition.is_empty() {
        return Err(Error::Empty("partition"));
    }
    let cell_of = check_partition(amplitudes, partition)?;
    let n = amplitudes.len();
    let cells = partition.len();
    let mut amps = vec![C64::new(0.0, 0.0); cells * n * n * n];
    for (k, a) in amplitudes.iter().enumerate() {
        if a.norm() <= crate::hilbert::DEFAULT_ZERO_TOL {
            continue;
        }
        let c = cell_of[k].expect("support is covered");
        amps[((c * n + k) * n + k) * n + k] = *a;
    }
    StateVector::with_tolerance(vec![cells, n, n, n], amps, 1e-8)
}

/// Record state from a Born pipeline result; outcomes follow its Schmidt order.
pub fn build_upsilon_from(result: &BornResult, partition: &[RecordEvent]) -> Result<StateVector> {
    build_upsilon(&result.decomposition.coeffs, partition)
}

/// Coarse-cell probabilities read back from a record state by counting
/// fine cells across the cut `coarse register | rest`.
pub fn coarse_from_upsilon(upsilon: &StateVector, m_max: u64) -> Result<Vec<BigRational>> {
    let cut = Bipartition::new(vec![COARSE], upsilon.subsystems())?;
    let r = born_probabilities(upsilon, &cut, m_max)?;
    let cells = upsilon.dims()[COARSE];
    let mut out = vec![BigRational::zero(); cells];
    for (v, p) in r.decomposition.left_basis.iter().zip(&r.probs_exact) {
        let c = (0..cells)
            .find(|&c| v[c].norm() > 1.0 - 1e-9)
            .ok_or_else(|| {
                Error::Inconsistent("coarse Schmidt vector is not a register state".into())
            })?;
        out[c] = p.clone();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(n: usize, m: &[usize]) -> RecordEvent {
        RecordEvent::new(n, m.iter().copied()).unwrap()
    }

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn lattice_examples() {
        let k = ev(8, &[0, 3, 5]);
        assert_eq!(k.meet(&k).unwrap(), k);
        assert_eq!(
            k.join(&k.complement()).unwrap(),
            RecordEvent::full(8).unwrap()
        );
        let (l, m) = (ev(8, &[1, 3, 6]), ev(8, &[0, 6, 7]));
        assert_eq!(
            k.meet(&l.join(&m).unwrap()).unwrap(),
            k.meet(&l).unwrap().join(&k.meet(&m).unwrap()).unwrap()
        );
        assert_eq!(k.complement().complement(), k);
        assert!(matches!(
            k.meet(&ev(4, &[0])),
            Err(Error::UniverseMismatch(8, 4))
        ));
    }

    #[test]
    fn axioms_hold() {
        let r = verify_axioms(8, 500, 7).unwrap();
        assert_eq!(r.violations(), 0);
        assert!(r.axioms.iter().all(|a| a.checked == 500));
        assert_eq!(verify_axioms(1, 20, 1).unwrap().violations(), 0);
    }

    #[test]
    fn non_pointer_projectors_are_rejected() {
        let h = C64::new(0.5, 0.0);
        let plus = DMatrix::from_element(2, 2, h);
        assert!(matches!(
            RecordEvent::from_projector(&plus),
            Err(Error::NonCommuting { .. })
        ));
        let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ]));
        assert_eq!(RecordEvent::from_projector(&diag).unwrap(), ev(2, &[0]));
    }

    #[test]
    fn probabilities_and_conditionals() {
        let t = FineTally::even(4).unwrap();
        let k = ev(4, &[0, 1]);
        assert_eq!(event_probability(&t, &k).unwrap(), q(1, 2));
        assert_eq!(conditional(&k, 0).unwrap(), q(1, 1));
        assert_eq!(conditional(&k, 3).unwrap(), q(0, 1));
        assert!(event_probability(&t, &ev(3, &[0])).is_err());
    }

    #[test]
    fn recursion_examples() {
        assert_eq!(equal_cell_recursion(4, 2).unwrap(), q(1, 2));
        assert_eq!(equal_cell_recursion(5, 5).unwrap(), q(1, 1));
        assert_eq!(equal_cell_recursion(5, 0).unwrap(), q(0, 1));
        for n in 1..=8 {
            for s in 0..=n {
                assert_eq!(equal_cell_recursion(n, s).unwrap(), q(s as i64, n as i64));
            }
        }
    }

    #[test]
    fn parse_one_based() {
        assert_eq!(RecordEvent::parse("1,2", 4).unwrap(), ev(4, &[0, 1]));
        assert_eq!(RecordEvent::parse("", 4).unwrap(), ev(4, &[]));
        assert!(RecordEvent::parse("0", 4).is_err());
        assert!(RecordEvent::parse("5", 4).is_err());
    }

    #[test]
    fn upsilon_coarse_weights() {
        let a = vec![C64::new(0.5, 0.0); 4];
        let part = [ev(4, &[0, 1]), ev(4, &[2, 3])];
        let u = build_upsilon(&a, &part).unwrap();
        assert_eq!(coarse_from_upsilon(&u, 16).unwrap(), vec![q(1, 2), q(1, 2)]);
    }

    #[test]
    fn upsilon_skips_zero_amplitudes() {
        let a = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.8)];
        let part = [ev(3, &[0]), ev(3, &[2])];
        let u = build_upsilon(&a, &part).unwrap();
        // outcome 1 has no fine-register term
        for (i, z) in u.amps().iter().enumerate() {
            let fine = (i / 9) % 3;
            if fine == 1 {
                assert_eq!(z.norm(), 0.0);
            }
        }
        assert_eq!(
            coarse_from_upsilon(&u, 25).unwrap(),
            vec![q(9, 25), q(16, 25)]
        );
    }

    #[test]
    fn partitions_must_be_disjoint_and_cover() {
        let a = vec![C64::new(0.5, 0.0); 4];
        assert!(matches!(
            build_upsilon(&a, &[ev(4, &[0, 1]), ev(4, &[1, 2, 3])]),
            Err(Error::OverlappingCells(1))
        ));
        assert!(matches!(
            build_upsilon(&a, &[ev(4, &[0, 1])]),
            Err(Error::UncoveredOutcome(2))
        ));
    }
}
