//! Eigenvalues of the quantum memory ensemble and their entropy.
//!
//! The ensemble `rho = (1/N) sum_j |S_j><S_j|` has the same nonzero spectrum
//! as the Gram matrix `g_ab = <S_a|S_b> / N`. The walk is rotation invariant,
//! so `g` is circulant and its eigenvalues are the DFT of its first row. By
//! the circular convolution theorem that is
//!
//! ```text
//! lambda_k = (1/N) F[sqrt p_j](k) * F[sqrt p_{(N-j) mod N}](k)
//! ```
//!
//! which [`gram_spectrum_dft`] evaluates with two FFTs. [`dense_oracle_spectrum`]
//! builds `g` entry by entry and diagonalizes it, as an independent check.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::discretizer::TransitionColumn;
use crate::error::{Error, Result};

/// Eigenvalues in `[-CLAMP_TOL, 0)` are rounding noise and are set to zero.
pub const CLAMP_TOL: f64 = 1e-10;

/// Bound on the imaginary part of each DFT product.
pub const IMAG_TOL: f64 = 1e-9;

/// Bound on `|sum lambda - 1|` for exactly computed spectra.
pub const TRACE_TOL: f64 = 1e-9;

/// Largest `N` handed to the dense eigensolver.
pub const DENSE_MAX_N: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumMethod {
    DftExact,
    DenseOracle,
    Asymptotic,
}

/// `N` eigenvalues in positional order `k = 0..N`.
///
/// Exact spectra are non-negative and have unit trace. Asymptotic spectra
/// keep their normalization defect.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    lambdas: Vec<f64>,
    method: SpectrumMethod,
    n_bits: u32,
}

impl Spectrum {
    /// Clamps rounding noise and checks positivity and (for exact methods) the trace.
    pub fn new(mut lambdas: Vec<f64>, method: SpectrumMethod, n_bits: u32) -> Result<Self> {
        if lambdas.len() != 1usize << n_bits {
            return Err(Error::Parameter(format!(
                "{} eigenvalues for n_bits = {n_bits}",
                lambdas.len()
            )));
        }
        for (k, l) in lambdas.iter_mut().enumerate() {
            if !l.is_finite() || *l < -CLAMP_TOL {
                return Err(Error::Numerical(format!(
                    "eigenvalue {k} is {l}; the Gram matrix must be positive semidefinite"
                )));
            }
            if *l < 0.0 {
                *l = 0.0;
            }
        }
        if method != SpectrumMethod::Asymptotic {
            let trace: f64 = lambdas.iter().sum();
            if (trace - 1.0).abs() > TRACE_TOL {
                return Err(Error::Numerical(format!(
                    "spectrum trace is {trace}, expected 1"
                )));
            }
        }
        Ok(Self {
            lambdas,
            method,
            n_bits,
        })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn method(&self) -> SpectrumMethod {
        self.method
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// Eigenvalues in descending order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        let mut v = self.lambdas.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// `(k, lambda_k)` with `k` running over `-N/2 ..= N/2 - 1`.
    pub fn centered(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let n = self.lambdas.len() as i64;
        (-n / 2..n / 2).map(move |k| (k, self.lambdas[k.rem_euclid(n) as usize]))
    }

    /// Writes `k,lambda` rows with centred `k`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["k", "lambda"])?;
        for (k, l) in self.centered() {
            wtr.write_record([k.to_string(), l.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn fft_in_place(buf: &mut [Complex64]) {
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(buf.len()).process(buf);
}

/// Spectrum of the ensemble state through the circulant DFT identity.
pub fn gram_spectrum_dft(col: &TransitionColumn) -> Result<Spectrum> {
    let n = col.len();
    let roots: Vec<f64> = col.probs().iter().map(|p| p.sqrt()).collect();
    let mut fwd: Vec<Complex64> = roots.iter().map(|&r| Complex64::new(r, 0.0)).collect();
    let mut rev: Vec<Complex64> = (0..n)
        .map(|j| Complex64::new(roots[(n - j) % n], 0.0))
        .collect();
    fft_in_place(&mut fwd);
    fft_in_place(&mut rev);

    let scale = 1.0 / n as f64;
    let mut lambdas = Vec::with_capacity(n);
    for (k, (a, b)) in fwd.iter().zip(&rev).enumerate() {
        let z = a * b * scale;
        if z.im.abs() > IMAG_TOL {
            return Err(Error::Numerical(format!(
                "DFT product at k = {k} has imaginary part {}",
                z.im
            )));
        }
        lambdas.push(z.re);
    }
    Spectrum::new(lambdas, SpectrumMethod::DftExact, col.n_bits())
}

/// Overlaps `<S_0|S_j>` for all `j`, the circular autocorrelation of `sqrt p`.
pub fn overlap_profile(col: &TransitionColumn) -> Vec<f64> {
    let n = col.len();
    let mut buf: Vec<Complex64> = col
        .probs()
        .iter()
        .map(|p| Complex64::new(p.sqrt(), 0.0))
        .collect();
    fft_in_place(&mut buf);
    buf.iter_mut()
        .for_each(|z| *z = Complex64::new(z.norm_sqr(), 0.0));
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

/// Spectrum from an explicit `N x N` Gram matrix and a dense symmetric eigensolver.
pub fn dense_oracle_spectrum(col: &TransitionColumn) -> Result<Spectrum> {
    let n = col.len();
    if n > DENSE_MAX_N {
        return Err(Error::Capability(format!(
            "dense eigensolver limited to N <= {DENSE_MAX_N}, got N = {n}"
        )));
    }
    let roots: Vec<f64> = col.probs().iter().map(|p| p.sqrt()).collect();
    // sqrt(p_{gamma, alpha}) = roots[(gamma - alpha) mod N]
    let amp = |gamma: usize, alpha: usize| roots[(gamma + n - alpha) % n];
    let inv_n = 1.0 / n as f64;
    let mut g = DMatrix::<f64>::zeros(n, n);
    for a in 0..n {
        for b in a..n {
            let s: f64 = (0..n).map(|c| amp(c, a) * amp(c, b)).sum::<f64>() * inv_n;
            g[(a, b)] = s;
            g[(b, a)] = s;
        }
    }
    let eig = g.symmetric_eigen();
    Spectrum::new(
        eig.eigenvalues.iter().copied().collect(),
        SpectrumMethod::DenseOracle,
        col.n_bits(),
    )
}

/// Shannon entropy in bits of a list of non-negative weights, `0 log 0 = 0`,
/// accumulated from the largest weight down.
pub(crate) fn entropy_bits(weights: &[f64]) -> f64 {
    let mut w: Vec<f64> = weights.iter().copied().filter(|&l| l > 0.0).collect();
    w.sort_by(|a, b| b.total_cmp(a));
    let h: f64 = w.iter().map(|&l| -l * l.log2()).sum();
    h.max(0.0)
}

/// `-sum lambda_k log2 lambda_k`.
pub fn von_neumann_entropy(spec: &Spectrum) -> f64 {
    entropy_bits(spec.lambdas())
}
