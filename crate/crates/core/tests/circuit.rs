mod common;

use cyclic_qsim::circuit::{displacement_histogram, total_variation};
use cyclic_qsim::discretizer::DEFAULT_CAUSAL_TOL;
use cyclic_qsim::{
    build_memory_states, build_step_unitary, causal_structure, discretize, gram_spectrum_dft,
    stationary_density_entropy, von_neumann_entropy, ShiftModel, SimulatorState, StepMode,
    StepOutcome, TransitionColumn,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn gaussian8() -> TransitionColumn {
    discretize(&ShiftModel::gaussian(0.0, 0.05).unwrap(), 3).unwrap()
}

#[test]
fn measured_steps_reproduce_transitions_from_every_start() {
    let col = gaussian8();
    let mset = build_memory_states(&col).unwrap();
    let u = build_step_unitary(&mset).unwrap();
    for start in 0..col.len() {
        let mut sim = SimulatorState::new(&mset, start, 1000 + start as u64).unwrap();
        for _ in 0..100_000 {
            sim.step(&u, StepMode::Measure).unwrap();
        }
        let hist = displacement_histogram(start, sim.history(), col.len());
        let tv = total_variation(&hist, col.probs());
        assert!(tv <= 0.01, "start {start}: TV {tv}");
    }
}

#[test]
fn conditional_transitions_match_rotated_columns() {
    // bucket every step of one long run by its source site
    let col = gaussian8();
    let n = col.len();
    let mset = build_memory_states(&col).unwrap();
    let u = build_step_unitary(&mset).unwrap();
    let mut sim = SimulatorState::new(&mset, 0, 7).unwrap();
    for _ in 0..800_000 {
        sim.step(&u, StepMode::Measure).unwrap();
    }
    let mut counts = vec![vec![0.0; n]; n];
    let mut prev = 0;
    for &s in sim.history() {
        counts[prev][s] += 1.0;
        prev = s;
    }
    for (j, row) in counts.iter().enumerate() {
        let total: f64 = row.iter().sum();
        let emp: Vec<f64> = row.iter().map(|c| c / total).collect();
        let exact: Vec<f64> = (0..n).map(|k| col.transition(j, k)).collect();
        let tv = total_variation(&emp, &exact);
        assert!(tv <= 0.01, "source {j}: TV {tv} over {total} steps");
    }
}

#[test]
fn norm_is_preserved_and_memory_collapses() {
    let col = gaussian8();
    let mset = build_memory_states(&col).unwrap();
    let u = build_step_unitary(&mset).unwrap();
    let mut sim = SimulatorState::new(&mset, 3, 11).unwrap();
    for _ in 0..1000 {
        let StepOutcome::Emitted(k) = sim.step(&u, StepMode::Measure).unwrap() else {
            panic!("measured step deferred");
        };
        assert!((sim.norm() - 1.0).abs() <= 1e-10);
        let mem = sim.memory().unwrap();
        for (a, b) in mem.iter().zip(mset.state(k).iter()) {
            assert!((a - b).norm() <= 1e-10);
        }
    }
}

#[test]
fn deferred_tapes_carry_the_joint_distribution() {
    let col = discretize(&ShiftModel::gaussian(0.1, 0.15).unwrap(), 2).unwrap();
    let n = col.len();
    let mset = build_memory_states(&col).unwrap();
    let u = build_step_unitary(&mset).unwrap();
    let mut sim = SimulatorState::new(&mset, 0, 5).unwrap();
    for i in 0..2 {
        assert_eq!(
            sim.step(&u, StepMode::Defer).unwrap(),
            StepOutcome::Deferred { tape: i }
        );
    }
    assert!(sim.memory().is_err());
    let exact: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (a, b) = (idx / n, idx % n);
            col.transition(0, a) * col.transition(a, b)
        })
        .collect();
    let dist = sim.deferred_distribution();
    for (p, q) in dist.iter().zip(&exact) {
        assert!((p - q).abs() <= 1e-12);
    }
    let shots = sim.sample_deferred(100_000, 99);
    let mut emp = vec![0.0; n * n];
    for s in &shots {
        emp[s[0] * n + s[1]] += 1.0 / shots.len() as f64;
    }
    let tv = total_variation(&emp, &exact);
    assert!(tv <= 0.02, "TV {tv}");

    let symbols = sim.measure_deferred();
    assert_eq!(symbols.len(), 2);
    let mem = sim.memory().unwrap();
    for (a, b) in mem.iter().zip(mset.state(symbols[1]).iter()) {
        assert!((a - b).norm() <= 1e-10);
    }
}

#[test]
fn defer_budget_is_enforced() {
    let mset = build_memory_states(&gaussian8()).unwrap();
    let u = build_step_unitary(&mset).unwrap();
    let mut sim = SimulatorState::new(&mset, 0, 0).unwrap();
    for _ in 0..4 {
        sim.step(&u, StepMode::Defer).unwrap();
    }
    assert!(sim.step(&u, StepMode::Defer).is_err());
    let big = build_memory_states(&discretize(&ShiftModel::uniform(), 4).unwrap()).unwrap();
    let ub = build_step_unitary(&big).unwrap();
    let mut sim = SimulatorState::new(&big, 0, 0).unwrap();
    assert!(sim.step(&ub, StepMode::Defer).is_err());
}

#[test]
fn density_entropy_matches_gram_spectrum() {
    for model in [
        ShiftModel::gaussian(0.0, 0.05).unwrap(),
        ShiftModel::gaussian(0.4, 0.02).unwrap(),
        ShiftModel::tophat(0.0, 0.1).unwrap(),
        ShiftModel::tophat(0.2, 0.3).unwrap(),
        ShiftModel::dirac(0.6).unwrap(),
        ShiftModel::uniform(),
    ] {
        for n_bits in 1..=4 {
            let col = discretize(&model, n_bits).unwrap();
            let rho = stationary_density_entropy(&build_memory_states(&col).unwrap()).unwrap();
            let gram = von_neumann_entropy(&gram_spectrum_dft(&col).unwrap());
            assert!(
                (rho - gram).abs() <= 1e-8,
                "{:?} n={n_bits}: {rho} vs {gram}",
                model.kind()
            );
        }
    }
}

#[test]
fn dirac_has_no_quantum_advantage() {
    for n_bits in 1..=4 {
        let col = discretize(&ShiftModel::dirac(0.3).unwrap(), n_bits).unwrap();
        let mset = build_memory_states(&col).unwrap();
        let n = col.len();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(mset.gram()[(i, j)], if i == j { 1.0 } else { 0.0 });
            }
        }
        let h = stationary_density_entropy(&mset).unwrap();
        let c = causal_structure(&col, DEFAULT_CAUSAL_TOL)
            .unwrap()
            .c_mu_bits;
        assert!((h - c).abs() <= 1e-9);
    }
}

#[test]
fn gram_entries_match_quadrature_column() {
    let (mu, sigma) = (0.0, 0.05);
    let n = 8usize;
    let p: Vec<f64> = (0..n)
        .map(|k| {
            let c = k as f64 / n as f64;
            common::integrate(
                |x| common::wrapped_normal(x, mu, sigma),
                c - 0.5 / n as f64,
                c + 0.5 / n as f64,
                4,
                1e-16,
            )
        })
        .collect();
    let mset =
        build_memory_states(&discretize(&ShiftModel::gaussian(mu, sigma).unwrap(), 3).unwrap())
            .unwrap();
    for j in 0..n {
        let direct: f64 = (0..n).map(|k| (p[k] * p[(k + n - j) % n]).sqrt()).sum();
        assert!((mset.gram()[(0, j)] - direct).abs() <= 1e-10, "j={j}");
    }
}

#[test]
fn gram_at_fixed_separation_approaches_continuum() {
    let model = ShiftModel::gaussian(0.0, 0.05).unwrap();
    let g = cyclic_qsim::asymptotic_gram_function(&model, 0.125).unwrap();
    let mut prev = f64::INFINITY;
    for n_bits in 3..=4 {
        let n = 1usize << n_bits;
        let mset = build_memory_states(&discretize(&model, n_bits).unwrap()).unwrap();
        let gap = (mset.gram()[(0, n / 8)] - g).abs() / g;
        assert!(gap < prev, "n={n_bits}: {gap}");
        prev = gap;
    }
    let ov = cyclic_qsim::overlap_profile(&discretize(&model, 12).unwrap());
    assert!((ov[512] - g).abs() / g <= 0.05);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_columns_give_unitary_steps(n_bits in 1u32..=4, seed in any::<u64>()) {
        let col = TransitionColumn::new(n_bits, common::random_column(n_bits, seed)).unwrap();
        let mset = build_memory_states(&col).unwrap();
        let u = build_step_unitary(&mset).unwrap();
        prop_assert!(u.unitarity_error() <= 1e-10);
        let n = col.len();
        let m = u.matrix();
        for j in 0..n {
            // U (|j> (x) |S_0>) = |j> (x) |S_j>
            for r in 0..n * n {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..n {
                    acc += m[(r, j * n + t)] * mset.state(0)[t];
                }
                let want = if r / n == j { mset.state(j)[r % n] } else { Complex64::new(0.0, 0.0) };
                prop_assert!((acc - want).norm() <= 1e-10);
            }
        }
        let g = mset.gram();
        for i in 0..n {
            prop_assert!((g[(i, i)] - 1.0).abs() <= 1e-12);
            for j in 0..n {
                prop_assert!((g[(i, j)] - g[(j, i)]).abs() <= 1e-15);
                prop_assert!((g[(i, j)] - g[(0, (j + n - i) % n)]).abs() <= 1e-12);
                prop_assert!((-1e-15..=1.0 + 1e-12).contains(&g[(i, j)]));
            }
        }
    }
}
