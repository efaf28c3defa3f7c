//! Invariants of pressure, equilibrium states and maximum cycle means, each
//! checked against an independent computation.

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use rotset::maximizing::{max_cycle_mean, WeightedDeBruijn};
use rotset::transfer::{
    measure_entropy, scalar_integral, solve_transfer, MarkovMeasure, ScalarPotential,
};

fn pressure(psi: &ScalarPotential) -> f64 {
    solve_transfer(psi, 1e-13, 100_000).unwrap().pressure
}

fn random_scalar(rng: &mut StdRng, q: usize, r: usize) -> ScalarPotential {
    let n = q.pow(r as u32);
    ScalarPotential::new(q, r, (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()).unwrap()
}

fn random_chain(rng: &mut StdRng, q: usize, r: usize) -> MarkovMeasure {
    let states = q.pow(r as u32 - 1);
    let mut p = Vec::with_capacity(states * q);
    for _ in 0..states {
        let row: Vec<f64> = (0..q).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = row.iter().sum();
        p.extend(row.iter().map(|x| x / s));
    }
    MarkovMeasure::from_transitions(q, r, p).unwrap()
}

/// Log spectral radius of the dense transfer matrix.
fn dense_pressure(psi: &ScalarPotential) -> f64 {
    let g = psi.graph();
    let n = g.num_states();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (e, v) in psi.values().iter().enumerate() {
        m[(g.source(e), g.target(e))] += v.exp();
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
        .ln()
}

#[test]
fn pressure_matches_dense_eigenvalues() {
    let mut rng = StdRng::seed_from_u64(10);
    for (q, r) in [(2, 1), (2, 2), (2, 3), (3, 2), (4, 2), (2, 4)] {
        for _ in 0..5 {
            let psi = random_scalar(&mut rng, q, r);
            assert_abs_diff_eq!(pressure(&psi), dense_pressure(&psi), epsilon = 1e-10);
        }
    }
}

#[test]
fn shift_adds_to_pressure() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..20 {
        let psi = random_scalar(&mut rng, 3, 2);
        let c = rng.gen_range(-5.0..5.0);
        assert_abs_diff_eq!(
            pressure(&psi.shifted(c).unwrap()),
            pressure(&psi) + c,
            epsilon = 1e-11
        );
    }
}

#[test]
fn pressure_is_convex() {
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..20 {
        let (a, b) = (random_scalar(&mut rng, 2, 3), random_scalar(&mut rng, 2, 3));
        let s = rng.gen_range(0.0..1.0);
        let mid = pressure(&a.mix(&b, s).unwrap());
        let chord = s * pressure(&a) + (1.0 - s) * pressure(&b);
        assert!(mid <= chord + 1e-12, "{mid} > {chord}");
    }
}

#[test]
fn equilibrium_beats_other_chains() {
    let mut rng = StdRng::seed_from_u64(13);
    for (q, r) in [(2, 2), (3, 2), (2, 3)] {
        let psi = random_scalar(&mut rng, q, r);
        let sol = solve_transfer(&psi, 1e-13, 100_000).unwrap();
        let best = measure_entropy(&sol.markov) + scalar_integral(&sol.markov, &psi).unwrap();
        assert_abs_diff_eq!(best, sol.pressure, epsilon = 1e-10);
        for _ in 0..20 {
            let nu = random_chain(&mut rng, q, r);
            let value = measure_entropy(&nu) + scalar_integral(&nu, &psi).unwrap();
            assert!(value <= sol.pressure + 1e-12, "{value} > {}", sol.pressure);
        }
    }
}

#[test]
fn derivative_in_t_is_the_integral() {
    // dP(tψ)/dt = ∫ψ dμ_t, here deep in the low-temperature regime
    let mut rng = StdRng::seed_from_u64(14);
    for _ in 0..5 {
        let psi = random_scalar(&mut rng, 2, 3);
        let t = 200.0;
        let h = 1e-3;
        let fd = (pressure(&psi.scaled(t + h).unwrap()) - pressure(&psi.scaled(t - h).unwrap()))
            / (2.0 * h);
        let sol = solve_transfer(&psi.scaled(t).unwrap(), 1e-13, 100_000).unwrap();
        assert_abs_diff_eq!(
            fd,
            scalar_integral(&sol.markov, &psi).unwrap(),
            epsilon = 1e-6
        );
    }
}

#[test]
fn max_mean_is_affine_equivariant() {
    let mut rng = StdRng::seed_from_u64(15);
    for (q, r) in [(2usize, 3usize), (3, 2), (2, 5)] {
        let n = q.pow(r as u32);
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (c, d) = (rng.gen_range(0.1..4.0), rng.gen_range(-3.0..3.0));
        let base = max_cycle_mean(&WeightedDeBruijn::new(q, r, w.clone()).unwrap());
        let moved = max_cycle_mean(
            &WeightedDeBruijn::new(q, r, w.iter().map(|x| c * x + d).collect()).unwrap(),
        );
        assert_abs_diff_eq!(moved.value, c * base.value + d, epsilon = 1e-12);
        assert_eq!(moved.witness_cycle, base.witness_cycle);
        assert_eq!(moved.optimal_edges, base.optimal_edges);
    }
}

#[test]
fn pressure_sandwiches_the_max_mean() {
    // m ≤ P(tψ)/t ≤ m + log q / t
    let mut rng = StdRng::seed_from_u64(16);
    for (q, r) in [(2, 3), (4, 2)] {
        let psi = random_scalar(&mut rng, q, r);
        let m = max_cycle_mean(&WeightedDeBruijn::from_scalar(&psi)).value;
        for t in [50.0, 100.0, 200.0] {
            let p = pressure(&psi.scaled(t).unwrap()) / t;
            assert!(p >= m - 1e-12, "t = {t}: {p} < {m}");
            assert!(
                p <= m + (q as f64).ln() / t + 1e-12,
                "t = {t}: {p} too large"
            );
        }
    }
}
