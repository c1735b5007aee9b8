//! Benchmark fixtures shared by the criterion targets.

use envlab_core::continuum::{Mesh, WaveFunction};
use envlab_core::frequencies::ExperimentSpec;
use envlab_core::{sample, Bipartition, StateVector};

/// Random two-party state of shape `left x right` with a fixed seed.
pub fn bipartite_state(left: usize, right: usize) -> (StateVector, Bipartition) {
    let state = sample::random_state(&[left, right], &mut sample::rng(7));
    (state, Bipartition::prefix(1, 2).expect("two subsystems"))
}

/// State whose system marginal carries the given integer weights.
pub fn weighted_state(weights: &[u64]) -> (StateVector, u64) {
    let total: u64 = weights.iter().sum();
    let mut rng = sample::rng(11);
    let moduli: Vec<f64> = weights
        .iter()
        .map(|&m| (m as f64 / total as f64).sqrt())
        .collect();
    let coeffs = sample::decorate(&moduli, &mut rng);
    let state = sample::state_with_schmidt(&coeffs, weights.len(), weights.len(), &mut rng);
    (state, total)
}

pub fn experiment(m: u64, total: u64, runs: usize) -> ExperimentSpec {
    ExperimentSpec::new(m, total, runs).expect("valid experiment")
}

/// Unit Gaussian on a uniform mesh over `[-8, 8]`.
pub fn gaussian_on_mesh(dx: f64) -> (WaveFunction, Mesh) {
    let psi = WaveFunction::gaussian(0.0, 1.0).expect("gaussian");
    (psi, Mesh::spanning(-8.0, 8.0, dx).expect("mesh"))
}
