//! Randomized invariants.

use envlab_core::born::{self, born_probabilities, fine_grain, rationalize, WeightVector};
use envlab_core::continuum::{self, Mesh, WaveFunction};
use envlab_core::envariance::{self, SwapSpec, DECISION_TOL};
use envlab_core::frequencies::{self, ExperimentSpec};
use envlab_core::hilbert::{self, schmidt, DEFAULT_ZERO_TOL};
use envlab_core::pointer::{self, EnvSpectrum, TruthTable};
use envlab_core::records::{self, FineTally, RecordEvent};
use envlab_core::{sample, BigRational, BigUint, Bipartition, C64};
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn weights() -> impl Strategy<Value = Vec<u64>> {
    prop::collection::vec(1u64..=12, 1..=5)
        .prop_filter("total at most 64", |w| w.iter().sum::<u64>() <= 64)
}

fn event(universe: usize) -> impl Strategy<Value = RecordEvent> {
    prop::collection::vec(any::<bool>(), universe).prop_map(move |bits| {
        RecordEvent::new(
            universe,
            bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i),
        )
        .unwrap()
    })
}

fn sc_cut() -> Bipartition {
    Bipartition::new(vec![born::SYSTEM, born::COUNTER], 3).unwrap()
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn fine_grained_states_are_even(w in weights(), seed in any::<u64>()) {
        let wv = WeightVector::from_u64(&w).unwrap();
        let phases = sample::random_phases(w.len(), &mut sample::rng(seed));
        let fine = fine_grain(&wv, &phases).unwrap();
        let dec = schmidt(&fine, &sc_cut(), DEFAULT_ZERO_TOL).unwrap();
        let total: u64 = w.iter().sum();
        prop_assert_eq!(dec.rank() as u64, total);
        prop_assert!(envariance::is_even(&dec, born::EVEN_TOL));
        let cells = born::count_cells(&fine).unwrap();
        prop_assert_eq!(cells.iter().map(|&c| c as u64).collect::<Vec<_>>(), w);
    }

    #[test]
    fn cell_swaps_are_envariant(w in weights(), pick in any::<(u64, u64)>(), phase in 0.0..6.3f64) {
        let wv = WeightVector::from_u64(&w).unwrap();
        let fine = fine_grain(&wv, &vec![0.0; w.len()]).unwrap();
        let dec = schmidt(&fine, &sc_cut(), DEFAULT_ZERO_TOL).unwrap();
        let total = dec.rank() as u64;
        prop_assume!(total >= 2);
        let k = (pick.0 % total) as usize;
        let l = (k + 1 + (pick.1 % (total - 1)) as usize) % total as usize;
        let u = envariance::system_swap(&dec, SwapSpec::new(k, l, phase)).unwrap();
        let v = envariance::check_envariance(&fine, &sc_cut(), &u, DECISION_TOL).unwrap();
        prop_assert!(v.envariant);
        prop_assert!(v.residual_infidelity <= 1e-10);
    }

    #[test]
    fn pipeline_counts_the_weights(w in weights(), seed in any::<u64>()) {
        let total: u64 = w.iter().sum();
        let mut rng = sample::rng(seed);
        let moduli: Vec<f64> = w.iter().map(|&m| (m as f64 / total as f64).sqrt()).collect();
        let coeffs = sample::decorate(&moduli, &mut rng);
        let s = sample::state_with_schmidt(&coeffs, w.len() + 1, w.len(), &mut rng);
        let r = born_probabilities(&s, &Bipartition::prefix(1, 2).unwrap(), total).unwrap();
        let mut got: Vec<BigRational> = r.probs_exact.clone();
        let mut want: Vec<BigRational> = w.iter().map(|&m| BigRational::new(m.into(), total.into())).collect();
        got.sort();
        want.sort();
        prop_assert_eq!(got, want);
        let probe = hilbert::reduced_probe(&s, &[0]).unwrap();
        let mut ev: Vec<f64> = probe.symmetric_eigen().eigenvalues.iter().cloned().filter(|x| *x > 1e-12).collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        for (p, e) in r.probs_float.iter().zip(&ev) {
            prop_assert!((p - e).abs() < 1e-10);
        }
    }

    #[test]
    fn rationalization_error_shrinks_with_the_budget(seed in any::<u64>(), n in 2usize..5) {
        let s = sample::random_state(&[n], &mut sample::rng(seed));
        let errs: Vec<f64> = [10, 100, 1000].iter().map(|&m| rationalize(s.amps(), m).unwrap().1).collect();
        prop_assert!(errs[1] <= errs[0] && errs[2] <= errs[1]);
        prop_assert!(errs[2] <= 0.5 / 1000.0 * n as f64);
    }

    #[test]
    fn phase_counters_restore(seed in any::<u64>(), left in 2usize..5, right in 2usize..6) {
        let mut rng = sample::rng(seed);
        let s = sample::random_state(&[left, right], &mut rng);
        let cut = Bipartition::prefix(1, 2).unwrap();
        let dec = schmidt(&s, &cut, DEFAULT_ZERO_TOL).unwrap();
        let phases = sample::random_phases(dec.rank(), &mut rng);
        let u = envariance::schmidt_phase_unitary(&dec, &phases).unwrap();
        let c = envariance::phase_counter(&dec, &phases).unwrap();
        let back = hilbert::apply_local(&hilbert::apply_local(&s, &u).unwrap(), &c).unwrap();
        prop_assert!(hilbert::fidelity(&back, &s).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn premeasurement_is_an_isometry(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = sample::rng(seed);
        let basis: Vec<_> = {
            let u = sample::haar_unitary(d, &mut rng);
            (0..d).map(|k| u.column(k).into_owned()).collect()
        };
        let table = TruthTable::new(basis).unwrap();
        let phi = sample::random_state(&[d], &mut rng);
        let chi = sample::random_state(&[d], &mut rng);
        let p_phi = pointer::premeasure(&phi, &table, d + 1, false).unwrap();
        let p_chi = pointer::premeasure(&chi, &table, d + 1, false).unwrap();
        let before = phi.inner(&chi).unwrap();
        let after = p_phi.inner(&p_chi).unwrap();
        prop_assert!((before - after).norm() < 1e-12);
        prop_assert!((p_phi.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn records_never_entangle(seed in any::<u64>(), records in 2usize..5, t in 0.0..20.0f64) {
        let mut rng = sample::rng(seed);
        let g = pointer::random_couplings(records + 1, 12, 2.0, &mut rng).unwrap();
        let gamma = EnvSpectrum::uniform(12).unwrap();
        let sys = sample::random_state(&[records], &mut rng);
        let joint = pointer::premeasure(&sys, &TruthTable::coordinate(records).unwrap(), records + 1, false).unwrap();
        let s = pointer::evolve(&joint, 1, &g, &gamma, t).unwrap();
        let score = pointer::pointer_score(&s, 1, &pointer::record_basis(records + 1)).unwrap();
        prop_assert!(score.max_score <= 1e-10);
    }
}

proptest! {
    #![proptest_config(config(128))]

    #[test]
    fn set_and_projector_semantics_agree((a, b) in (1usize..=10).prop_flat_map(|n| (event(n), event(n)))) {
        let (pa, pb) = (a.projector(), b.projector());
        let meet = a.meet(&b).unwrap().projector() - records::meet_projector(&pa, &pb);
        let join = a.join(&b).unwrap().projector() - records::join_projector(&pa, &pb);
        let comp = a.complement().projector() - records::complement_projector(&pa);
        for m in [meet, join, comp] {
            prop_assert!(m.amax() <= records::PROJECTOR_TOL);
        }
    }

    #[test]
    fn double_complement_and_unity(a in (1usize..=10).prop_flat_map(event)) {
        prop_assert_eq!(a.complement().complement(), a.clone());
        prop_assert_eq!(a.join(&a.complement()).unwrap(), RecordEvent::full(a.universe()).unwrap());
        prop_assert!(a.meet(&a.complement()).unwrap().is_empty());
    }

    #[test]
    fn probability_is_additive_and_monotone(
        (counts, a, b) in (1usize..=6).prop_flat_map(|n| (prop::collection::vec(0u64..9, n), event(n), event(n)))
    ) {
        prop_assume!(counts.iter().any(|&c| c > 0));
        let tally = FineTally::new(counts.iter().map(|&c| BigUint::from(c)).collect()).unwrap();
        let p = |e: &RecordEvent| records::event_probability(&tally, e).unwrap();
        let only_a = a.meet(&b.complement()).unwrap();
        prop_assert_eq!(p(&only_a.join(&b).unwrap()), p(&only_a) + p(&b));
        let both = a.meet(&b).unwrap();
        prop_assert!(p(&both) <= p(&a));
        prop_assert!(p(&a) <= p(&a.join(&b).unwrap()));
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn census_equals_tally(total in 2u64..=3, m_pick in any::<u64>(), runs in 1usize..=4) {
        let m = 1 + m_pick % (total - 1);
        let spec = ExperimentSpec::new(m, total, runs).unwrap();
        let ens = frequencies::build_superensemble(&spec, false).unwrap();
        prop_assert_eq!(ens.census(), frequencies::history_counts(&spec).counts);
        prop_assert!(ens.modulus_deviation() <= 1e-12);
    }

    #[test]
    fn discretization_conserves_probability(center in -2.0..2.0f64, width in 0.3..2.0f64, dx in 0.05..1.0f64) {
        let psi = WaveFunction::gaussian(center, width).unwrap();
        let d = continuum::discretize(&psi, &Mesh::spanning(-16.0, 16.0, dx).unwrap(), 16).unwrap();
        let total: f64 = d.cell_probabilities().iter().sum::<f64>() + d.remainder_sq;
        prop_assert!((total - 1.0).abs() < 1e-8);
        prop_assert!(d.remainder_sq >= -1e-12);
    }

    #[test]
    fn refinement_keeps_aligned_intervals(parts in 2usize..5, lo in 0usize..8, len in 1usize..8) {
        // piecewise-constant amplitude: cell averages are exact at every level
        let psi = WaveFunction::box_mixture(vec![
            (-2.0, 0.0, C64::new(1.0, 0.0)),
            (0.0, 1.0, C64::new(0.0, 2.0)),
        ]).unwrap();
        let coarse = Mesh::uniform(-2.0, 0.25, 12).unwrap();
        let fine = coarse.refine(parts).unwrap();
        let dc = continuum::discretize(&psi, &coarse, 16).unwrap();
        let df = continuum::discretize(&psi, &fine, 16).unwrap();
        let hi = (lo + len).min(12);
        let (x1, x2) = (-2.0 + 0.25 * lo as f64, -2.0 + 0.25 * hi as f64);
        prop_assume!(x2 > x1);
        let pc = continuum::interval_probability(&dc, x1, x2).unwrap();
        let pf = continuum::interval_probability(&df, x1, x2).unwrap();
        prop_assert!(!pc.approximate && !pf.approximate);
        prop_assert!((pc.probability - pf.probability).abs() < 1e-12);
    }
}

#[test]
fn zero_weight_outcomes_never_reach_upsilon() {
    let amps: Vec<C64> = [0.5f64, 0.0, 0.5]
        .iter()
        .map(|p| C64::new(p.sqrt(), 0.0))
        .collect();
    let part = vec![
        RecordEvent::new(3, [0, 1]).unwrap(),
        RecordEvent::new(3, [2]).unwrap(),
    ];
    let ups = records::build_upsilon(&amps, &part).unwrap();
    for (i, a) in ups.amps().iter().enumerate() {
        if a.norm() > 0.0 {
            assert_ne!(hilbert::digits_of(ups.dims(), i)[records::FINE], 1);
        }
    }
}
