//! Oracles shared by the integration tests. Nothing here calls into the
//! library's numerical paths.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

fn gl5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS)
        .map(|(x, w)| w * f(c + h * x))
        .sum::<f64>()
        * h
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let l = gl5(f, a, m);
    let r = gl5(f, m, b);
    if depth == 0 || (l + r - whole).abs() <= tol {
        return l + r;
    }
    adapt(f, a, m, l, 0.5 * tol, depth - 1) + adapt(f, m, b, r, 0.5 * tol, depth - 1)
}

/// Adaptive 5-point Gauss-Legendre quadrature, pre-split into `panels` pieces.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize, tol: f64) -> f64 {
    let w = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * w, a + (i + 1) as f64 * w);
            adapt(&f, lo, hi, gl5(&f, lo, hi), tol / panels as f64, 30)
        })
        .sum()
}

/// Wrapped normal density written out directly (images m in -5..=5).
pub fn wrapped_normal(x: f64, mu: f64, sigma: f64) -> f64 {
    (-5..=5)
        .map(|m| {
            let z = (x - mu + m as f64) / sigma;
            (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        })
        .sum()
}

/// Random probability column of length `2^n_bits`; roughly a third of the
/// entries are zero.
pub fn random_column(n_bits: u32, seed: u64) -> Vec<f64> {
    let n = 1usize << n_bits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < 0.33 {
                0.0
            } else {
                rng.gen::<f64>().powi(3)
            }
        })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

/// Shannon entropy in bits, summed in index order.
pub fn shannon_bits(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum()
}
