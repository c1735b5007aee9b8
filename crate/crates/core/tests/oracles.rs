//! Independent reference computations checked against the library, with the
//! reference results frozen as literal expectations.

use std::f64::consts::PI;

use envlab_core::born::{born_probabilities, fine_grain, rationalize, staircase, WeightVector};
use envlab_core::continuum::{self, CoefficientSequence, Mesh, WaveFunction};
use envlab_core::frequencies::{self, ExperimentSpec};
use envlab_core::hilbert::{self, digits_of, schmidt, tensor_product, DEFAULT_ZERO_TOL};
use envlab_core::pointer::{self, CouplingMatrix, EnvSpectrum};
use envlab_core::{sample, BigRational, BigUint, Bipartition, DMatrix, DVector, StateVector, C64};
use num_traits::{One, ToPrimitive, Zero};

// ---------------------------------------------------------------------------
// dense linear algebra without the library's decompositions

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
#[allow(clippy::needless_range_loop)]
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    ev
}

/// Hermitian eigenvalues via the real embedding `[[Re, -Im], [Im, Re]]`,
/// whose spectrum repeats each eigenvalue twice.
fn hermitian_eigenvalues(h: &DMatrix<C64>) -> Vec<f64> {
    let n = h.nrows();
    let mut r = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            r[i][j] = z.re;
            r[i + n][j + n] = z.re;
            r[i][j + n] = -z.im;
            r[i + n][j] = z.im;
        }
    }
    jacobi_eigenvalues(r).into_iter().step_by(2).collect()
}

fn singular_values(a: &DMatrix<C64>) -> Vec<f64> {
    hermitian_eigenvalues(&(a * a.adjoint()))
        .into_iter()
        .map(|x| x.max(0.0).sqrt())
        .collect()
}

#[test]
fn jacobi_oracle_sanity() {
    let ev = jacobi_eigenvalues(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
    assert!((ev[0] - 3.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
}

// ---------------------------------------------------------------------------
// hilbert

#[test]
fn product_of_random_vectors_is_normalized() {
    let mut rng = sample::rng(11);
    let parts: Vec<StateVector> = [2, 3, 4]
        .iter()
        .map(|&d| sample::random_state(&[d], &mut rng))
        .collect();
    let t = tensor_product(&parts).unwrap();
    let norm: f64 = t.amps().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn schmidt_coefficients_match_singular_value_oracle() {
    let mut rng = sample::rng(21);
    for _ in 0..20 {
        let s = sample::random_state(&[3, 4], &mut rng);
        let dec = schmidt(&s, &Bipartition::prefix(1, 2).unwrap(), DEFAULT_ZERO_TOL).unwrap();
        let a = DMatrix::from_fn(3, 4, |i, j| s.amps()[i * 4 + j]);
        let sv = singular_values(&a);
        assert_eq!(dec.rank(), 3);
        for (x, y) in dec.moduli().iter().zip(&sv) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
        let rec = dec.reconstruct_amps();
        let err: f64 = rec
            .iter()
            .zip(s.amps())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10);
    }
}

#[test]
fn schmidt_across_a_middle_cut() {
    let mut rng = sample::rng(22);
    let s = sample::random_state(&[2, 3, 2], &mut rng);
    let dec = schmidt(&s, &Bipartition::new(vec![1], 3).unwrap(), DEFAULT_ZERO_TOL).unwrap();
    let mut a = DMatrix::zeros(3, 4);
    for (i, amp) in s.amps().iter().enumerate() {
        let d = digits_of(&[2, 3, 2], i);
        a[(d[1], d[0] * 2 + d[2])] = *amp;
    }
    for (x, y) in dec.moduli().iter().zip(singular_values(&a)) {
        assert!((x - y).abs() < 1e-10);
    }
}

#[test]
fn probe_eigenvalues_are_squared_coefficients() {
    let mut rng = sample::rng(23);
    for dims in [[2usize, 5], [4, 3], [3, 3]] {
        let s = sample::random_state(&dims, &mut rng);
        let rho = hilbert::reduced_probe(&s, &[0]).unwrap();
        let dec = schmidt(&s, &Bipartition::prefix(1, 2).unwrap(), DEFAULT_ZERO_TOL).unwrap();
        let ev = hermitian_eigenvalues(&rho);
        for (k, m) in dec.moduli().iter().enumerate() {
            assert!((ev[k] - m * m).abs() < 1e-9);
        }
    }
}

// ---------------------------------------------------------------------------
// born

/// Smallest minimax deviation over every denominator and every positive
/// composition: the exhaustive reference for the rationalizer.
fn best_rationalization(p: &[f64], m_max: u64) -> (f64, u64) {
    fn compositions(parts: usize, total: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 1..=total - (parts as u64 - 1) {
            prefix.push(first);
            compositions(parts - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut best = (f64::INFINITY, 0);
    for total in p.len() as u64..=m_max {
        let mut all = Vec::new();
        compositions(p.len(), total, &mut Vec::new(), &mut all);
        for m in all {
            let err = m
                .iter()
                .zip(p)
                .map(|(&mk, pk)| (mk as f64 / total as f64 - pk).abs())
                .fold(0.0, f64::max);
            if err < best.0 - 1e-15 {
                best = (err, total);
            }
        }
    }
    best
}

#[test]
fn inverse_pi_rationalization_matches_exhaustive_scan() {
    let p1 = 1.0 / PI;
    let amps = [C64::new(p1.sqrt(), 0.0), C64::new((1.0 - p1).sqrt(), 0.0)];
    let (w, err) = rationalize(&amps, 113).unwrap();
    let (oracle_err, oracle_m) = best_rationalization(&[p1, 1.0 - p1], 113);
    assert!((err - oracle_err).abs() < 1e-15);
    assert_eq!(w.total(), &BigUint::from(oracle_m));
    // frozen: 7/22, the second convergent of 1/pi
    assert_eq!(w.to_string(), "7,15");
    assert!((err - 1.2806800197251444e-4).abs() < 1e-15);
    assert!(err <= 1.0 / 113.0);
}

#[test]
fn greedy_apportionment_is_minimax_optimal() {
    let mut rng = sample::rng(31);
    for _ in 0..25 {
        let s = sample::random_state(&[3], &mut rng);
        let p: Vec<f64> = s.amps().iter().map(|a| a.norm_sqr()).collect();
        for m_max in [3, 5, 8, 12] {
            let (_, err) = rationalize(s.amps(), m_max).unwrap();
            let (oracle, _) = best_rationalization(&p, m_max);
            assert!(
                (err - oracle).abs() < 1e-15,
                "m_max {m_max}: {err} vs {oracle}"
            );
        }
    }
}

#[test]
fn fine_grained_state_term_by_term() {
    let w = WeightVector::from_u64(&[2, 3, 5]).unwrap();
    assert_eq!(staircase(&w).unwrap(), vec![0, 0, 1, 1, 1, 2, 2, 2, 2, 2]);
    let fine = fine_grain(&w, &[0.0, 0.0, 0.0]).unwrap();
    assert_eq!(fine.dims(), &[3, 10, 10]);
    let owner = |j: usize| match j {
        0..=1 => 0,
        2..=4 => 1,
        _ => 2,
    };
    for (i, a) in fine.amps().iter().enumerate() {
        let (k, e, c) = (i / 100, (i / 10) % 10, i % 10);
        let expected = if e == c && owner(c) == k {
            1.0 / 10f64.sqrt()
        } else {
            0.0
        };
        assert!(
            (a - C64::new(expected, 0.0)).norm() < 1e-15,
            "term {k},{e},{c}"
        );
    }
}

#[test]
fn pipeline_recovers_integer_weights() {
    let amps: Vec<C64> = [0.2f64, 0.3, 0.5]
        .iter()
        .map(|p| C64::new(p.sqrt(), 0.0))
        .collect();
    let mut full = vec![C64::new(0.0, 0.0); 9];
    for (k, a) in amps.iter().enumerate() {
        full[k * 3 + k] = *a;
    }
    let s = StateVector::new(vec![3, 3], full).unwrap();
    let r = born_probabilities(&s, &Bipartition::prefix(1, 2).unwrap(), 10).unwrap();
    // Schmidt order is descending, so outcome 3 comes first
    let expected = [(1, 2), (3, 10), (1, 5)];
    for (q, (a, b)) in r.probs_exact.iter().zip(expected) {
        assert_eq!(*q, BigRational::new(a.into(), b.into()));
    }
    assert!(r.rationalization_error <= 1e-15);
}

// ---------------------------------------------------------------------------
// frequencies

/// Enumerate every cell history of `runs` runs and bin by the number of
/// cells at or beyond `m` (those record outcome "1").
fn enumerate_histories(m: u64, total: u64, runs: usize) -> Vec<u64> {
    let mut counts = vec![0u64; runs + 1];
    let histories = total.pow(runs as u32);
    for h in 0..histories {
        let mut rest = h;
        let mut ones = 0;
        for _ in 0..runs {
            if rest % total >= m {
                ones += 1;
            }
            rest /= total;
        }
        counts[ones] += 1;
    }
    counts
}

#[test]
fn history_tally_matches_enumeration() {
    let spec = ExperimentSpec::new(1, 3, 3).unwrap();
    let tally = frequencies::history_counts(&spec);
    let oracle = enumerate_histories(1, 3, 3);
    assert_eq!(oracle, vec![1, 6, 12, 8]);
    assert_eq!(
        tally.counts,
        oracle.iter().map(|&c| BigUint::from(c)).collect::<Vec<_>>()
    );
    assert_eq!(tally.total, BigUint::from(27u32));
    let p = frequencies::frequency_distribution(&spec);
    let frozen = [1, 6, 12, 8].map(|c| BigRational::new(c.into(), 27.into()));
    assert_eq!(p, frozen);
    for (m, total, runs) in [(1, 2, 5), (2, 3, 4), (1, 3, 5), (2, 3, 2)] {
        let t = frequencies::history_counts(&ExperimentSpec::new(m, total, runs).unwrap());
        let o = enumerate_histories(m, total, runs);
        assert_eq!(
            t.counts,
            o.iter().map(|&c| BigUint::from(c)).collect::<Vec<_>>()
        );
    }
}

/// Row `n` of Pascal's triangle built by addition.
fn pascal_row(n: usize) -> Vec<BigUint> {
    let mut row = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = vec![BigUint::one()];
        next.extend(row.windows(2).map(|w| &w[0] + &w[1]));
        next.push(BigUint::one());
        row = next;
    }
    row
}

#[test]
fn maverick_mass_from_the_opposite_side() {
    let spec = ExperimentSpec::new(1, 2, 100).unwrap();
    let mass = frequencies::maverick_mass(&spec, 0.1).unwrap();
    // complement: the typical window |n - 50| <= 10, summed from the centre out
    let row = pascal_row(100);
    let mut typical = BigUint::zero();
    for offset in 0..=10usize {
        typical += &row[50 + offset];
        if offset > 0 {
            typical += &row[50 - offset];
        }
    }
    let denom = BigUint::one() << 100u32;
    let oracle = BigRational::one() - BigRational::new(typical.into(), denom.into());
    assert_eq!(mass, oracle);
    assert!((mass.to_f64().unwrap() - 0.03520020021770481).abs() < 1e-16);
}

/// `ln C(n, k)` by summing logarithms.
fn ln_binomial(n: usize, k: usize) -> f64 {
    (1..=k)
        .map(|i| ((n - k + i) as f64).ln() - (i as f64).ln())
        .sum()
}

fn oracle_sup_gap(runs: usize, density: impl Fn(f64) -> f64) -> f64 {
    let p: Vec<f64> = (0..=runs)
        .map(|n| (ln_binomial(runs, n) - runs as f64 * 2f64.ln()).exp())
        .collect();
    let g: Vec<f64> = (0..=runs).map(|n| density(n as f64)).collect();
    let z: f64 = g.iter().sum();
    p.iter()
        .zip(&g)
        .map(|(a, b)| (a - b / z).abs())
        .fold(0.0, f64::max)
}

#[test]
fn gaussian_gap_shrinks_with_more_runs() {
    let mut last_printed = f64::INFINITY;
    let mut last_standard = f64::INFINITY;
    for runs in [64, 128, 256] {
        let spec = ExperimentSpec::new(1, 2, runs).unwrap();
        let printed = frequencies::sup_gap(&spec, frequencies::gaussian_approx);
        let standard = frequencies::sup_gap(&spec, frequencies::gaussian_standard);
        let mean = runs as f64 / 2.0;
        let sd = (runs as f64).sqrt() / 2.0;
        let o_printed = oracle_sup_gap(runs, |n| (-((n - mean) / sd).powi(2)).exp());
        let o_standard = oracle_sup_gap(runs, |n| (-0.5 * ((n - mean) / sd).powi(2)).exp());
        assert!((printed - o_printed).abs() < 1e-12);
        assert!((standard - o_standard).abs() < 1e-12);
        assert!(printed < last_printed && standard < last_standard);
        assert!(standard < printed);
        last_printed = printed;
        last_standard = standard;
    }
}

#[test]
fn gaussian_prefactor_at_the_peak() {
    let spec = ExperimentSpec::new(1, 3, 90).unwrap();
    let peak = frequencies::gaussian_approx(&spec, 60.0);
    let ab = (2.0f64 / 9.0).sqrt();
    assert!((peak - 1.0 / ((2.0 * PI * 90.0).sqrt() * ab)).abs() < 1e-15);
}

// ---------------------------------------------------------------------------
// pointer

fn decoherence_direct(g: &CouplingMatrix, gamma: &[C64], k: usize, l: usize, t: f64) -> C64 {
    (0..g.levels())
        .map(|nu| gamma[nu].norm_sqr() * C64::from_polar(1.0, (g.get(l, nu) - g.get(k, nu)) * t))
        .sum()
}

#[test]
fn two_level_decoherence_factor_vanishes() {
    let g = CouplingMatrix::from_rows(&[vec![0.0, 0.0], vec![0.0, PI]]).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let gamma = EnvSpectrum::new(vec![C64::new(h, 0.0), C64::new(h, 0.0)]).unwrap();
    let z = pointer::decoherence_factor(&g, &gamma, 0, 1, 1.0).unwrap();
    assert!(z.norm() < 1e-15);
}

#[test]
fn many_level_decoherence_decays_then_fluctuates() {
    let g = pointer::random_couplings(2, 32, 2.0, &mut sample::rng(41)).unwrap();
    let gamma = EnvSpectrum::uniform(32).unwrap();
    let z0 = pointer::decoherence_factor(&g, &gamma, 0, 1, 0.0).unwrap();
    assert!((z0 - C64::new(1.0, 0.0)).norm() < 1e-14);
    let mut late = Vec::new();
    for i in 0..=200 {
        let t = 20.0 + 0.1 * i as f64;
        let z = pointer::decoherence_factor(&g, &gamma, 0, 1, t).unwrap();
        assert!((z - decoherence_direct(&g, gamma.gamma(), 0, 1, t)).norm() < 1e-12);
        late.push(z.norm());
    }
    // the plateau sits on the 1/sqrt(32) scale, well below the start
    let mean = late.iter().sum::<f64>() / late.len() as f64;
    assert!(mean > 0.05 && mean < 0.5, "plateau mean {mean}");
}

#[test]
fn bit_flip_commutator_by_explicit_matrices() {
    let g = CouplingMatrix::from_rows(&[vec![0.3, 1.1], vec![0.9, -0.4]]).unwrap();
    let flip = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|x| C64::new(x, 0.0)));
    let h = DMatrix::from_diagonal(&DVector::from_vec(
        vec![0.3, 1.1, 0.9, -0.4]
            .into_iter()
            .map(|x| C64::new(x, 0.0))
            .collect(),
    ));
    let lam = envlab_core::linalg::kron(&flip, &DMatrix::identity(2, 2));
    let direct = (&lam * &h - &h * &lam).norm();
    let lib = pointer::commutator_norm(&flip, &g).unwrap();
    assert!((lib - direct).abs() < 1e-14);
    assert!((lib - 2.2847319317591723).abs() < 1e-14);
    let diag = DMatrix::from_diagonal(&DVector::from_vec(vec![
        C64::new(1.0, 0.0),
        C64::new(-2.0, 0.0),
    ]));
    assert!(pointer::commutator_norm(&diag, &g).unwrap() <= 1e-12);
}

/// `sum_k a_k |s_k>|A_k>|E_k(t)>` with `E_k(t) = sum_nu gamma_nu e^{-i g_{k nu} t}|nu>`.
fn measured_state(a: &[f64], g: &CouplingMatrix, t: f64) -> StateVector {
    let (n, levels) = (a.len(), g.levels());
    let gamma = 1.0 / (levels as f64).sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); n * n * levels];
    for k in 0..n {
        for nu in 0..levels {
            amps[(k * n + k) * levels + nu] = C64::from_polar(a[k] * gamma, -g.get(k, nu) * t);
        }
    }
    StateVector::new(vec![n, n, levels], amps).unwrap()
}

/// Entanglement left in the S|E residual after finding the two-level
/// apparatus in `b`: `1 - lambda_max / trace` of the 2x2 Gram matrix.
fn oracle_score(a: &[f64], g: &CouplingMatrix, t: f64, b: [C64; 2]) -> f64 {
    let levels = g.levels();
    let gamma = 1.0 / (levels as f64).sqrt();
    let rows: Vec<Vec<C64>> = (0..2)
        .map(|k| {
            (0..levels)
                .map(|nu| b[k].conj() * C64::from_polar(a[k] * gamma, -g.get(k, nu) * t))
                .collect()
        })
        .collect();
    let dot = |x: &[C64], y: &[C64]| -> C64 { x.iter().zip(y).map(|(p, q)| p * q.conj()).sum() };
    let (g00, g11, g01) = (
        dot(&rows[0], &rows[0]).re,
        dot(&rows[1], &rows[1]).re,
        dot(&rows[0], &rows[1]),
    );
    let tr = g00 + g11;
    let det = g00 * g11 - g01.norm_sqr();
    let top = (tr + (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0;
    (1.0 - top / tr).max(0.0)
}

fn grid_basis(theta: f64, phi: f64) -> [[C64; 2]; 2] {
    let (c, s) = (C64::new(theta.cos(), 0.0), theta.sin());
    [[c, C64::from_polar(s, phi)], [-C64::from_polar(s, -phi), c]]
}

#[test]
fn pointer_basis_grid_search() {
    let a = [0.6, 0.8];
    let g = pointer::random_couplings(2, 16, 2.0, &mut sample::rng(51)).unwrap();
    let gamma = EnvSpectrum::uniform(16).unwrap();
    let t = (1..200)
        .map(|i| i as f64 * 0.05)
        .find(|&t| {
            pointer::decoherence_factor(&g, &gamma, 0, 1, t)
                .unwrap()
                .norm()
                < 0.3
        })
        .expect("decoherence sets in");
    let state = measured_state(&a, &g, t);
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=100 {
        let theta = i as f64 * PI / 200.0;
        for j in 0..16 {
            let phi = j as f64 * PI / 8.0;
            let basis = grid_basis(theta, phi);
            let score = basis
                .iter()
                .map(|b| oracle_score(&a, &g, t, *b))
                .fold(0.0, f64::max);
            if i % 25 == 3 && j % 5 == 0 {
                let lib_basis: Vec<DVector<C64>> =
                    basis.iter().map(|b| DVector::from_row_slice(b)).collect();
                let lib = pointer::pointer_score(&state, 1, &lib_basis).unwrap();
                assert!((lib.max_score - score).abs() < 1e-10);
            }
            if score < best.0 {
                best = (score, theta);
            }
        }
    }
    assert!(best.0 <= 1e-10);
    assert!(best.1 < 1e-12 || (best.1 - PI / 2.0).abs() < 1e-12);
    let found = pointer::find_pointer_basis(&state, 1, 200, 7).unwrap();
    assert!(!found.flat);
    for v in &found.basis {
        let overlap = v[0].norm_sqr().max(v[1].norm_sqr());
        assert!(overlap >= 1.0 - 1e-6, "overlap {overlap}");
    }
}

#[test]
fn uncorrelated_environment_leaves_a_flat_landscape() {
    let a = [0.6, 0.8];
    let g = pointer::random_couplings(2, 16, 2.0, &mut sample::rng(52)).unwrap();
    for i in 0..=20 {
        let basis = grid_basis(i as f64 * PI / 40.0, 0.7);
        for b in basis {
            assert!(oracle_score(&a, &g, 0.0, b) <= 1e-10);
        }
    }
    let found = pointer::find_pointer_basis(&measured_state(&a, &g, 0.0), 1, 50, 1).unwrap();
    assert!(found.flat);
}

#[test]
fn fourier_scores_on_even_records() {
    for n in [2usize, 3, 4] {
        let mut amps = vec![C64::new(0.0, 0.0); n * n * n];
        for k in 0..n {
            amps[(k * n + k) * n + k] = C64::new(1.0 / (n as f64).sqrt(), 0.0);
        }
        let s = StateVector::new(vec![n, n, n], amps).unwrap();
        let score = pointer::pointer_score(&s, 1, &pointer::fourier_basis(n)).unwrap();
        for sc in score.per_outcome {
            assert!((sc.unwrap() - (1.0 - 1.0 / n as f64)).abs() < 1e-12);
        }
    }
}

// ---------------------------------------------------------------------------
// continuum

/// `erf(x)` by its Maclaurin series.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for n in 1..60 {
        term *= -x * x / n as f64;
        sum += term / (2 * n + 1) as f64;
    }
    2.0 / PI.sqrt() * sum
}

/// Cell average of `psi` by composite Simpson.
fn simpson_average(psi: &WaveFunction, a: f64, b: f64) -> C64 {
    let n = 200;
    let h = (b - a) / n as f64;
    let mut acc = psi.eval(a) + psi.eval(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += psi.eval(a + i as f64 * h) * w;
    }
    acc * (h / 3.0) / (b - a)
}

#[test]
fn erf_reference() {
    assert!((erf_series(1.0) - 0.8427007929497149).abs() < 1e-15);
    let psi = WaveFunction::standard_gaussian();
    let d = continuum::discretize(&psi, &Mesh::spanning(-8.0, 8.0, 1e-3).unwrap(), 16).unwrap();
    let ip = continuum::interval_probability(&d, -1.0, 1.0).unwrap();
    assert!(!ip.approximate);
    assert!((ip.probability - erf_series(1.0)).abs() < 1e-6);
}

#[test]
fn remainder_matches_simpson_oracle_and_shrinks() {
    let psi = WaveFunction::standard_gaussian();
    let mut last = f64::INFINITY;
    for dx in [0.5, 0.25, 0.125] {
        let mesh = Mesh::spanning(-8.0, 8.0, dx).unwrap();
        let d = continuum::discretize(&psi, &mesh, 16).unwrap();
        let edges = mesh.edges();
        let kept: f64 = edges
            .windows(2)
            .map(|w| simpson_average(&psi, w[0], w[1]).norm_sqr() * (w[1] - w[0]))
            .sum();
        assert!((d.remainder_sq - (1.0 - kept)).abs() < 1e-10);
        assert!(d.remainder_sq < last);
        last = d.remainder_sq;
    }
}

#[test]
fn cross_term_vanishes_with_high_order_quadrature() {
    let psi = WaveFunction::standard_gaussian();
    let d = continuum::discretize(&psi, &Mesh::spanning(-8.0, 8.0, 0.5).unwrap(), 64).unwrap();
    assert!(continuum::cross_term(&d, &psi, 64).norm() <= 1e-8);
}

#[test]
fn interval_error_converges_at_least_linearly() {
    let psi = WaveFunction::standard_gaussian();
    let reference = erf_series(1.0);
    let ladder = [0.2, 0.1, 0.05, 0.025];
    let pts: Vec<(f64, f64)> = ladder
        .iter()
        .map(|&dx| {
            let d =
                continuum::discretize(&psi, &Mesh::spanning(-8.0, 8.0, dx).unwrap(), 16).unwrap();
            let p = continuum::interval_probability(&d, -1.0, 1.0)
                .unwrap()
                .probability;
            (dx.ln(), (p - reference).abs().ln())
        })
        .collect();
    let n = pts.len() as f64;
    let (sx, sy) = (
        pts.iter().map(|p| p.0).sum::<f64>(),
        pts.iter().map(|p| p.1).sum::<f64>(),
    );
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(slope >= 0.9, "slope {slope}");
}

#[test]
fn uniform_and_adaptive_meshes_agree() {
    let psi = WaveFunction::standard_gaussian();
    let quad = 16;
    let uniform =
        continuum::discretize(&psi, &Mesh::spanning(-8.0, 8.0, 0.01).unwrap(), quad).unwrap();
    let adaptive_mesh = Mesh::equal_mass(&psi, -8.0, 8.0, 1600, quad).unwrap();
    let adaptive = continuum::discretize(&psi, &adaptive_mesh, quad).unwrap();
    // tolerance: mass of any partially covered cell plus the discarded remainder
    let tol = |d: &continuum::DiscretizedState, x1: f64, x2: f64| {
        let edges = d.mesh.edges();
        let partial: f64 = d
            .cell_probabilities()
            .iter()
            .enumerate()
            .filter(|(k, _)| [x1, x2].iter().any(|&x| edges[*k] < x && x < edges[k + 1]))
            .map(|(_, p)| p)
            .sum();
        partial + d.remainder_sq
    };
    for (x1, x2) in [(-1.0, 1.0), (-0.37, 2.1), (0.0, 0.5)] {
        let pu = continuum::interval_probability(&uniform, x1, x2)
            .unwrap()
            .probability;
        let pa = continuum::interval_probability(&adaptive, x1, x2)
            .unwrap()
            .probability;
        assert!(
            (pu - pa).abs() <= tol(&uniform, x1, x2) + tol(&adaptive, x1, x2),
            "[{x1}, {x2})"
        );
    }
}

#[test]
fn geometric_tail_cutoff() {
    let t = continuum::truncate(&CoefficientSequence::geometric(), 0.1).unwrap();
    assert_eq!(t.kept, 7);
    // partial sums against the closed form 2^-N
    let kept: f64 = (1..=7).map(|k| 0.5f64.powi(k)).sum();
    assert!((t.delta_sq - (1.0 - kept)).abs() < 1e-15);
    assert!((t.delta_sq - 0.5f64.powi(7)).abs() < 1e-15);
    assert!(0.5f64.powi(6) > 0.01);
}

#[test]
fn continuum_pipeline_tracks_direct_cell_weights() {
    let psi = WaveFunction::standard_gaussian();
    let mesh = Mesh::uniform(-8.25, 0.5, 33).unwrap();
    let d = continuum::discretize(&psi, &mesh, 16).unwrap();
    let b = continuum::born_continuum(&d, 10_000, continuum::default_fold_below(10_000)).unwrap();
    let direct: Vec<f64> = mesh
        .edges()
        .windows(2)
        .map(|w| simpson_average(&psi, w[0], w[1]).norm_sqr() * 0.5)
        .collect();
    for (x, y) in b.direct.iter().zip(&direct) {
        assert!((x - y).abs() < 1e-12);
    }
    assert!(b.max_gap() < 1e-4);
}
