//! Seeded random fixtures: states, unitaries, phases.
//!
//! All generators take an explicit RNG so a master seed fully determines a run.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hilbert::StateVector;
use crate::linalg::cis;

pub type LabRng = ChaCha8Rng;

pub fn rng(seed: u64) -> LabRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Uniformly random (Haar) pure state on the given subsystem dimensions.
pub fn random_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> StateVector {
    let total: usize = dims.iter().product();
    let amps: Vec<C64> = (0..total).map(|_| gaussian_complex(rng)).collect();
    StateVector::from_unnormalized(dims.to_vec(), amps).expect("nonzero gaussian vector")
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| gaussian_complex(rng));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the
/// diagonal phase correction.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| gaussian_complex(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_phases<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}

/// `sum_k a_k |u_k>|v_k>` for given coefficients and the first columns of two
/// unitaries: a state with prescribed Schmidt coefficients in random bases.
pub fn state_with_schmidt<R: Rng + ?Sized>(
    coeffs: &[C64],
    left_dim: usize,
    right_dim: usize,
    rng: &mut R,
) -> StateVector {
    assert!(coeffs.len() <= left_dim.min(right_dim));
    let u = haar_unitary(left_dim, rng);
    let v = haar_unitary(right_dim, rng);
    let mut amps = vec![C64::new(0.0, 0.0); left_dim * right_dim];
    for (k, a) in coeffs.iter().enumerate() {
        for i in 0..left_dim {
            for j in 0..right_dim {
                amps[i * right_dim + j] += a * u[(i, k)] * v[(j, k)];
            }
        }
    }
    StateVector::from_unnormalized(vec![left_dim, right_dim], amps).expect("nonzero coefficients")
}

/// Random phases applied to a list of moduli.
pub fn decorate<R: Rng + ?Sized>(moduli: &[f64], rng: &mut R) -> Vec<C64> {
    moduli
        .iter()
        .map(|&m| cis(rng.random_range(0.0..std::f64::consts::TAU)) * m)
        .collect()
}
