//! Large-`N` closed forms for the Gaussian and top-hat examples.
//!
//! For large `N` the Gram row sampled at `y = j/N` tends to the overlap
//! function `g(y) = integral sqrt(P(x)) sqrt(P°(x - y)) dx`, and the
//! eigenvalues approach its continuous Fourier transform at integer `k`:
//!
//! * Gaussian `sigma`: `lambda_k = G(k; 0, 1/(4 pi sigma))`,
//! * top-hat `delta`: `lambda_k = 2 delta sinc^2(2 k delta)`.
//!
//! The sampled spectra are not renormalized; [`AsymptoticSpectrum::normalization_defect`]
//! reports how far they are from unit trace at the chosen `N` (the aliasing error).

use std::f64::consts::{E, LN_2, PI};

use crate::error::{param, Error, Result};
use crate::shift_models::{wrap_centered, ModelKind, ShiftModel, DEFAULT_SIGMA_CAP};
use crate::spectral::{entropy_bits, Spectrum, SpectrumMethod};

/// Upper end of the Gaussian bound's validity range, `1/(2 e sqrt(2 pi))` rounded down.
pub const GAUSSIAN_BOUND_SIGMA_MAX: f64 = 0.073;

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticSpectrum {
    pub model_kind: ModelKind,
    pub param: f64,
    pub n_bits: u32,
    /// `lambdas[i]` belongs to `k = i - N/2`.
    pub lambdas: Vec<f64>,
}

impl AsymptoticSpectrum {
    fn sample(model_kind: ModelKind, param: f64, n_bits: u32, f: impl Fn(f64) -> f64) -> Self {
        let n = 1i64 << n_bits;
        let lambdas = (-n / 2..n / 2).map(|k| f(k as f64)).collect();
        Self {
            model_kind,
            param,
            n_bits,
            lambdas,
        }
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// `lambda_k` for `k in -N/2 ..= N/2 - 1`.
    pub fn at(&self, k: i64) -> f64 {
        let n = self.lambdas.len() as i64;
        self.lambdas[(k + n / 2) as usize]
    }

    /// `lambda_k` for any integer `k`, reduced modulo `N` into the centred window.
    pub fn at_periodic(&self, k: i64) -> f64 {
        let n = self.lambdas.len() as i64;
        self.lambdas[(k + n / 2).rem_euclid(n) as usize]
    }

    pub fn trace(&self) -> f64 {
        self.lambdas.iter().sum()
    }

    /// `sum lambda - 1`.
    pub fn normalization_defect(&self) -> f64 {
        self.trace() - 1.0
    }

    pub fn entropy_bits(&self) -> f64 {
        entropy_bits(&self.lambdas)
    }

    /// Reorders into positional `k = 0..N` order, tagged as asymptotic.
    pub fn to_spectrum(&self) -> Result<Spectrum> {
        let n = self.lambdas.len() as i64;
        let positional = (0..n).map(|k| self.at_periodic(k)).collect();
        Spectrum::new(positional, SpectrumMethod::Asymptotic, self.n_bits)
    }
}

fn check_n_bits(n_bits: u32) -> Result<()> {
    if n_bits == 0 || n_bits > crate::discretizer::MAX_N_BITS {
        return param(format!("n_bits must lie in 1..=24, got {n_bits}"));
    }
    Ok(())
}

/// Normal density with standard deviation `1/(4 pi sigma)` sampled at integer `k`.
pub fn gaussian_asymptotic_spectrum(sigma: f64, n_bits: u32) -> Result<AsymptoticSpectrum> {
    if !(sigma > 0.0 && sigma <= DEFAULT_SIGMA_CAP) {
        return param(format!(
            "sigma must lie in (0, {DEFAULT_SIGMA_CAP}], got {sigma}"
        ));
    }
    check_n_bits(n_bits)?;
    let amp = 4.0 * PI * sigma / (2.0 * PI).sqrt();
    let b = 8.0 * PI * PI * sigma * sigma;
    Ok(AsymptoticSpectrum::sample(
        ModelKind::Gaussian,
        sigma,
        n_bits,
        |k| amp * (-b * k * k).exp(),
    ))
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// `2 delta sinc^2(2 k delta)` sampled at integer `k`.
pub fn tophat_asymptotic_spectrum(delta: f64, n_bits: u32) -> Result<AsymptoticSpectrum> {
    if !(delta > 0.0 && delta < 0.5) {
        return param(format!("delta must lie in (0, 1/2), got {delta}"));
    }
    check_n_bits(n_bits)?;
    Ok(AsymptoticSpectrum::sample(
        ModelKind::TopHat,
        delta,
        n_bits,
        |k| {
            let s = sinc(2.0 * k * delta);
            2.0 * delta * s * s
        },
    ))
}

/// Upper bound in bits on the limiting `H_Q` of the Gaussian walk:
/// `1/(2 ln 2) - (1 + 2A) log2 A` with `A = 2 sqrt(2 pi) sigma`.
///
/// The derivation needs `-lambda ln lambda` to decrease monotonically away
/// from `k = 0`, which holds for `sigma < 0.073`.
pub fn gaussian_entropy_bound(sigma: f64) -> Result<f64> {
    if sigma.is_nan() || sigma <= 0.0 {
        return param(format!("sigma must be positive, got {sigma}"));
    }
    if sigma >= GAUSSIAN_BOUND_SIGMA_MAX {
        return Err(Error::Validity(format!(
            "the Gaussian entropy bound needs sigma < {GAUSSIAN_BOUND_SIGMA_MAX}, got {sigma}"
        )));
    }
    let a = 2.0 * (2.0 * PI).sqrt() * sigma;
    Ok(0.5 / LN_2 - (1.0 + 2.0 * a) * a.log2())
}

/// Upper bound in bits on the limiting `H_Q` of the top-hat walk, with the
/// constants kept in closed form:
/// `8 exp((1-e)/(2e)) / (pi ln2 sqrt(2 delta)) + 4 exp((1-e)/e) / ln2`.
pub fn tophat_entropy_bound(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    let c1 = 8.0 / (PI * LN_2 * 2f64.sqrt()) * ((1.0 - E) / (2.0 * E)).exp();
    let c0 = 4.0 / LN_2 * ((1.0 - E) / E).exp();
    Ok(c1 / delta.sqrt() + c0)
}

/// The same bound with its constants rounded: `1.894 / sqrt(delta) + 3.067`.
pub fn tophat_entropy_bound_rounded(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(1.894 / delta.sqrt() + 3.067)
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 0.5) {
        return param(format!("delta must lie in (0, 1/2), got {delta}"));
    }
    Ok(())
}

/// Continuous-limit overlap `g(y)` between memory states separated by `y`.
///
/// Gaussian: `exp(-y^2 / (8 sigma^2))`; top-hat: the triangle
/// `1 - |y| / (2 delta)` on `|y| <= 2 delta`. Both are summed over the
/// periodic images of `y`, which is exact for the top-hat on the circle.
pub fn asymptotic_gram_function(model: &ShiftModel, y: f64) -> Result<f64> {
    if !(-0.5..0.5).contains(&y) {
        return param(format!("y must lie in [-1/2, 1/2), got {y}"));
    }
    let y = wrap_centered(y);
    let images = [-1.0, 0.0, 1.0];
    match (model.kind(), model.param()) {
        (ModelKind::Gaussian, Some(sigma)) => Ok(images
            .iter()
            .map(|m| {
                let d = y + m;
                (-d * d / (8.0 * sigma * sigma)).exp()
            })
            .sum()),
        (ModelKind::TopHat, Some(delta)) => Ok(images
            .iter()
            .map(|m| (1.0 - (y + m).abs() / (2.0 * delta)).max(0.0))
            .sum()),
        _ => Err(Error::Unsupported(format!(
            "no closed-form overlap for the {} model",
            model.kind()
        ))),
    }
}
