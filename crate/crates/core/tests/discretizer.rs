mod common;

use cyclic_qsim::discretizer::DEFAULT_CAUSAL_TOL;
use cyclic_qsim::{
    causal_structure, discretize, discretize_with, gram_spectrum_dft, von_neumann_entropy,
    Discretization, ShiftModel, TransitionColumn,
};
use proptest::prelude::*;

fn smooth_model() -> impl Strategy<Value = ShiftModel> {
    prop_oneof![
        (-1.0..1.0f64, 0.005..0.15f64).prop_map(|(mu, s)| ShiftModel::gaussian(mu, s).unwrap()),
        (-1.0..1.0f64, 0.002..0.499f64).prop_map(|(mu, d)| ShiftModel::tophat(mu, d).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn refinement_merges_back(model in smooth_model(), n_bits in 1u32..12) {
        let coarse = discretize(&model, n_bits).unwrap();
        let fine = discretize(&model, n_bits + 1).unwrap();
        let (f, m) = (fine.probs(), fine.len());
        let w = 1.0 / m as f64;
        let mass = |a: f64, b: f64| model.interval_probability(a * w, b * w).unwrap();
        for (k, &c) in coarse.probs().iter().enumerate() {
            let j = 2 * k as i64;
            let x = j as f64;
            // coarse site k is [j - 1, j + 1) in fine units: the outer half of
            // fine site j - 1, all of fine site j, the inner half of fine site j + 1
            let left = f[((j - 1).rem_euclid(m as i64)) as usize] - mass(x - 1.5, x - 1.0);
            let right = f[((j + 1) as usize) % m] - mass(x + 1.0, x + 1.5);
            prop_assert!((c - (left + f[j as usize] + right)).abs() < 1e-10);
        }
    }

    #[test]
    fn every_shift_is_stochastic(model in smooth_model(), n_bits in 1u32..10) {
        let col = discretize(&model, n_bits).unwrap();
        let n = col.len();
        for shift in [0, 1, n / 2, n - 1] {
            let s: f64 = col.rotated(shift).probs().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-10);
        }
        for j in 0..n {
            let row: f64 = (0..n).map(|k| col.transition(j, k)).sum();
            prop_assert!((row - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_is_stationary(model in smooth_model(), n_bits in 1u32..8) {
        let col = discretize(&model, n_bits).unwrap();
        let n = col.len();
        let u = vec![1.0 / n as f64; n];
        for (a, b) in col.apply(&u).iter().zip(&u) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn c_mu_is_n_for_smooth_models(model in smooth_model(), n_bits in 1u32..12) {
        let col = discretize(&model, n_bits).unwrap();
        let cs = causal_structure(&col, DEFAULT_CAUSAL_TOL).unwrap();
        prop_assert!(cs.c_mu_bits <= n_bits as f64);
        prop_assert_eq!(cs.n_distinct, 1usize << n_bits);
    }
}

#[test]
fn gaussian_column_matches_quadrature() {
    let (mu, sigma) = (0.0, 0.01);
    let col = discretize(&ShiftModel::gaussian(mu, sigma).unwrap(), 8).unwrap();
    let n = col.len() as f64;
    for (k, &p) in col.probs().iter().enumerate() {
        let c = k as f64 / n;
        let oracle = common::integrate(
            |x| common::wrapped_normal(x, mu, sigma),
            c - 0.5 / n,
            c + 0.5 / n,
            4,
            1e-16,
        );
        assert!((p - oracle).abs() <= 1e-10, "k={k}: {p} vs {oracle}");
    }
}

#[test]
fn degenerate_columns_collapse_causal_states() {
    let uni = discretize(&ShiftModel::uniform(), 10).unwrap();
    assert_eq!(
        causal_structure(&uni, DEFAULT_CAUSAL_TOL)
            .unwrap()
            .n_distinct,
        1
    );
    // a two-peaked column with period N/2
    let mut p = vec![0.0; 16];
    p[3] = 0.5;
    p[11] = 0.5;
    let col = TransitionColumn::new(4, p).unwrap();
    let cs = causal_structure(&col, DEFAULT_CAUSAL_TOL).unwrap();
    assert_eq!(cs.n_distinct, 8);
    assert_eq!(cs.c_mu_bits, 3.0);
}

#[test]
fn source_averaged_converges_to_midpoint() {
    let mut prev_gap = f64::INFINITY;
    for n_bits in [6u32, 8, 10] {
        let model = ShiftModel::gaussian(0.0, 0.02).unwrap();
        let mid = discretize(&model, n_bits).unwrap();
        let avg = discretize_with(&model, n_bits, Discretization::SourceAveraged).unwrap();
        let h_mid = von_neumann_entropy(&gram_spectrum_dft(&mid).unwrap());
        let h_avg = von_neumann_entropy(&gram_spectrum_dft(&avg).unwrap());
        let gap = (h_mid - h_avg).abs();
        assert!(
            gap < prev_gap,
            "n={n_bits}: gap {gap} did not shrink from {prev_gap}"
        );
        prev_gap = gap;
    }
    assert!(prev_gap < 1e-3, "{prev_gap}");
}

#[test]
fn source_averaged_tophat_is_trapezoid() {
    // a top-hat smeared by the start-position average is a trapezoid; with
    // delta on a site centre the edge sites carry exactly 1/8 of a full site each
    let delta = 0.25;
    let avg = discretize_with(
        &ShiftModel::tophat(0.0, delta).unwrap(),
        3,
        Discretization::SourceAveraged,
    )
    .unwrap();
    let p = avg.probs();
    let s: f64 = p.iter().sum();
    assert!((s - 1.0).abs() < 1e-12);
    // brute force: average the midpoint column over many start offsets
    let n = 8usize;
    let reps = 4000;
    let mut brute = vec![0.0; n];
    for r in 0..reps {
        let y0 = -0.5 / n as f64 + (r as f64 + 0.5) / (reps as f64 * n as f64);
        for (k, b) in brute.iter_mut().enumerate() {
            let c = (k as f64 / n as f64 - y0 + 0.5).rem_euclid(1.0) - 0.5;
            let lo = (c - 0.5 / n as f64).max(-delta);
            let hi = (c + 0.5 / n as f64).min(delta);
            *b += (hi - lo).max(0.0) / (2.0 * delta) / reps as f64;
        }
    }
    for k in 0..n {
        assert!(
            (p[k] - brute[k]).abs() < 1e-6,
            "k={k}: {} vs {}",
            p[k],
            brute[k]
        );
    }
}

#[test]
fn column_csv_file_round_trip() {
    let col = discretize(&ShiftModel::tophat(0.3, 0.07).unwrap(), 7).unwrap();
    let mut buf = Vec::new();
    col.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("index,probability\n0,"));
    assert_eq!(TransitionColumn::read_csv(buf.as_slice()).unwrap(), col);
}
