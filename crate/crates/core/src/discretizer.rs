//! Rounding the continuous walk to `n` bits: the circulant transition column,
//! its causal-state count, and a classical sampler.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{param, Error, Result};
use crate::quad::adaptive_simpson;
use crate::shift_models::ShiftModel;

/// Largest supported precision; `N = 2^24` reals is a few hundred MB once transformed.
pub const MAX_N_BITS: u32 = 24;

/// Tolerance on the column sum.
pub const SUM_TOL: f64 = 1e-10;

/// Default per-entry tolerance when comparing shifted columns.
pub const DEFAULT_CAUSAL_TOL: f64 = 1e-12;

/// First column of the circulant transition matrix: `probs[k]` is the
/// probability of stepping from site 0 to site `k`. Entry `(k, j)` of the full
/// matrix is `probs[(k - j) mod N]`; the matrix itself is never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionColumn {
    n_bits: u32,
    probs: Vec<f64>,
}

/// How the start position inside the source interval is treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Discretization {
    /// The walker starts exactly at the site centre `y_j = j/N`.
    #[default]
    Midpoint,
    /// The start position is uniformly distributed over the source interval.
    SourceAveraged,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CausalStructure {
    pub n_distinct: usize,
    /// `log2(n_distinct)`; the causal states are equiprobable in the stationary state.
    pub c_mu_bits: f64,
}

impl TransitionColumn {
    pub fn new(n_bits: u32, probs: Vec<f64>) -> Result<Self> {
        if n_bits == 0 || n_bits > MAX_N_BITS {
            return param(format!("n_bits must lie in 1..={MAX_N_BITS}, got {n_bits}"));
        }
        let n = 1usize << n_bits;
        if probs.len() != n {
            return param(format!("column has {} entries, expected {n}", probs.len()));
        }
        if let Some(k) = probs.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return param(format!("probability at index {k} is {}", probs[k]));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return param(format!("column sums to {sum}, expected 1"));
        }
        Ok(Self { n_bits, probs })
    }

    /// Builds a column from a power-of-two length vector.
    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        let n = probs.len();
        if n < 2 || !n.is_power_of_two() {
            return param(format!("column length {n} is not a power of two >= 2"));
        }
        Self::new(n.trailing_zeros(), probs)
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `p_{to, from}`.
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        let n = self.len();
        self.probs[(to + n - from % n) % n]
    }

    /// Applies the transition matrix to a vector over sites (cyclic convolution).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(v.len(), n, "vector length must match the column");
        (0..n)
            .map(|k| (0..n).map(|j| self.probs[(k + n - j) % n] * v[j]).sum())
            .collect()
    }

    /// The column cyclically rotated by `shift` sites.
    pub fn rotated(&self, shift: usize) -> Self {
        let n = self.len();
        let probs = (0..n)
            .map(|k| self.probs[(k + n - shift % n) % n])
            .collect();
        Self {
            n_bits: self.n_bits,
            probs,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["index", "probability"])?;
        for (k, p) in self.probs.iter().enumerate() {
            wtr.write_record([k.to_string(), p.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the `index,probability` layout written by [`Self::write_csv`].
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut rows: Vec<(usize, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let k = rec
                .get(0)
                .and_then(|s| s.parse::<usize>().ok())
                .ok_or_else(|| Error::Parameter("bad index column".into()))?;
            let p = rec
                .get(1)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| Error::Parameter("bad probability column".into()))?;
            rows.push((k, p));
        }
        let n = rows.len();
        let mut probs = vec![f64::NAN; n];
        for (k, p) in rows {
            if k >= n || !probs[k].is_nan() {
                return param(format!("index {k} is out of range or repeated"));
            }
            probs[k] = p;
        }
        Self::from_probs(probs)
    }
}

/// Midpoint discretization: `probs[k]` is the mass of `P°` on the interval
/// of half-width `1/(2N)` around `k/N`.
pub fn discretize(model: &ShiftModel, n_bits: u32) -> Result<TransitionColumn> {
    discretize_with(model, n_bits, Discretization::Midpoint)
}

pub fn discretize_with(
    model: &ShiftModel,
    n_bits: u32,
    scheme: Discretization,
) -> Result<TransitionColumn> {
    if n_bits == 0 || n_bits > MAX_N_BITS {
        return param(format!("n_bits must lie in 1..={MAX_N_BITS}, got {n_bits}"));
    }
    let n = 1usize << n_bits;
    let nf = n as f64;
    let half = 0.5 / nf;
    let probs: Vec<f64> = match scheme {
        Discretization::Midpoint => (0..n)
            .into_par_iter()
            .map(|k| {
                let c = k as f64 / nf;
                model.interval_unchecked(c - half, c + half)
            })
            .collect(),
        Discretization::SourceAveraged => {
            let mut probs: Vec<f64> = (0..n)
                .into_par_iter()
                .map(|k| source_averaged_entry(model, k, nf))
                .collect();
            let s: f64 = probs.iter().sum();
            probs.iter_mut().for_each(|p| *p /= s);
            probs
        }
    };
    TransitionColumn::new(n_bits, probs)
}

fn source_averaged_entry(model: &ShiftModel, k: usize, nf: f64) -> f64 {
    use crate::shift_models::ModelKind;
    let half = 0.5 / nf;
    let c = k as f64 / nf;
    match model.kind() {
        ModelKind::Uniform => 1.0 / nf,
        ModelKind::Dirac => {
            // overlap of the start interval [-h, h) with the starts that land in I_k
            let x0 = model.param().unwrap_or(0.0);
            let lo = c - half - x0;
            let hi = c + half - x0;
            let mut len = 0.0;
            for m in -2..=2 {
                let (l, h) = (lo + m as f64, hi + m as f64);
                let ov = h.min(half) - l.max(-half);
                if ov > 0.0 {
                    len += ov;
                }
            }
            (len * nf).min(1.0)
        }
        _ => {
            let f = |y0: f64| model.interval_unchecked(c - half - y0, c + half - y0);
            nf * adaptive_simpson(&f, -half, half, 1e-15 / nf)
        }
    }
}

/// Counts the distinct conditional futures, i.e. the distinct cyclic shifts of
/// the column, comparing entries with absolute tolerance `tol`.
pub fn causal_structure(col: &TransitionColumn, tol: f64) -> Result<CausalStructure> {
    if tol.is_nan() || tol < 0.0 {
        return param("causal-state tolerance must be non-negative");
    }
    let n = col.len();
    let p = col.probs();
    // invariant shifts form a subgroup of Z_N, generated by a power of two
    let mut period = 1;
    while period < n {
        let invariant = (0..n).all(|k| (p[(k + period) % n] - p[k]).abs() <= tol);
        if invariant {
            break;
        }
        period *= 2;
    }
    Ok(CausalStructure {
        n_distinct: period,
        c_mu_bits: (period as f64).log2(),
    })
}

/// Inverse-CDF lookup of `u in [0, 1)` in a cumulative table, skipping
/// trailing zero-probability entries if `u` lands past the rounded total.
pub(crate) fn sample_cdf(cdf: &[f64], u: f64) -> usize {
    let i = cdf.partition_point(|&c| c <= u);
    if i < cdf.len() {
        return i;
    }
    let last = *cdf.last().unwrap();
    cdf.iter().position(|&c| c >= last).unwrap_or(cdf.len() - 1)
}

pub(crate) fn cumulative(weights: &[f64]) -> Vec<f64> {
    weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect()
}

/// Samples `steps` successive sites of the discretized walk started at `start`.
pub fn sample_classical_trajectory(
    col: &TransitionColumn,
    start: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let n = col.len();
    if start >= n {
        return param(format!("start site {start} out of range 0..{n}"));
    }
    let cdf = cumulative(col.probs());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut site = start;
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        let offset = sample_cdf(&cdf, rng.gen::<f64>());
        site = (site + offset) % n;
        out.push(site);
    }
    Ok(out)
}
