//! Shift densities `P(x)` on the unit circle.
//!
//! Every model is treated through its 1-periodic extension
//! `P°(x) = sum_m P(x + m)`, so intervals may start anywhere on the real
//! line and wrap around the ring.

use std::fmt;
use std::io::Read;
use std::path::Path;

use libm::{erf, erfc};
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

/// Largest Gaussian width accepted by [`ShiftModel::gaussian`].
pub const DEFAULT_SIGMA_CAP: f64 = 0.15;

/// Number of winding images `m in -K..=K` summed for the wrapped Gaussian.
pub const DEFAULT_WINDINGS: u32 = 3;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gaussian,
    TopHat,
    Dirac,
    Uniform,
    Tabulated,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gaussian => "gaussian",
            ModelKind::TopHat => "tophat",
            ModelKind::Dirac => "dirac",
            ModelKind::Uniform => "uniform",
            ModelKind::Tabulated => "tabulated",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(ModelKind::Gaussian),
            "tophat" | "top-hat" => Ok(ModelKind::TopHat),
            "dirac" | "delta" => Ok(ModelKind::Dirac),
            "uniform" => Ok(ModelKind::Uniform),
            "tabulated" => Ok(ModelKind::Tabulated),
            other => param(format!("unknown model kind `{other}`")),
        }
    }
}

/// A validated shift density on the unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftModel {
    shape: Shape,
}

#[derive(Clone, Debug, PartialEq)]
enum Shape {
    Gaussian { mu: f64, sigma: f64, windings: u32 },
    TopHat { mu: f64, delta: f64 },
    Dirac { x0: f64 },
    Uniform,
    Tabulated(Table),
}

/// Piecewise-linear periodic density, stored on breakpoints spanning `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
struct Table {
    knots: Vec<(f64, f64)>,
    xs: Vec<f64>,
    ys: Vec<f64>,
    // cum[i] = integral of the density over [0, xs[i]]
    cum: Vec<f64>,
}

impl ShiftModel {
    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        Self::gaussian_with_cap(mu, sigma, DEFAULT_SIGMA_CAP)
    }

    /// Gaussian with a caller-chosen upper limit on `sigma`.
    pub fn gaussian_with_cap(mu: f64, sigma: f64, cap: f64) -> Result<Self> {
        if !mu.is_finite() {
            return param("gaussian mu must be finite");
        }
        if !(sigma > 0.0 && sigma <= cap) {
            return param(format!(
                "gaussian sigma must lie in (0, {cap}], got {sigma}"
            ));
        }
        Ok(Self {
            shape: Shape::Gaussian {
                mu,
                sigma,
                windings: DEFAULT_WINDINGS,
            },
        })
    }

    pub fn tophat(mu: f64, delta: f64) -> Result<Self> {
        if !mu.is_finite() {
            return param("tophat mu must be finite");
        }
        if !(delta > 0.0 && delta < 0.5) {
            return param(format!("tophat delta must lie in (0, 1/2), got {delta}"));
        }
        Ok(Self {
            shape: Shape::TopHat { mu, delta },
        })
    }

    pub fn dirac(x0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&x0) {
            return param(format!("dirac x0 must lie in [0, 1), got {x0}"));
        }
        Ok(Self {
            shape: Shape::Dirac { x0 },
        })
    }

    pub fn uniform() -> Self {
        Self {
            shape: Shape::Uniform,
        }
    }

    /// Piecewise-linear density through `(position, density)` knots, wrapping
    /// from the last knot back to the first. Renormalized to unit mass.
    pub fn tabulated(knots: &[(f64, f64)]) -> Result<Self> {
        Table::new(knots).map(|t| Self {
            shape: Shape::Tabulated(t),
        })
    }

    /// Reads a two-column `position,density` CSV. A non-numeric first row is
    /// treated as a header.
    pub fn tabulated_from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut knots = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return param(format!(
                    "table row {} has {} columns, expected 2",
                    i + 1,
                    rec.len()
                ));
            }
            let x = rec[0].parse::<f64>();
            let y = rec[1].parse::<f64>();
            match (x, y) {
                (Ok(x), Ok(y)) => knots.push((x, y)),
                _ if i == 0 => continue,
                _ => return param(format!("table row {} is not numeric", i + 1)),
            }
        }
        Self::tabulated(&knots)
    }

    pub fn tabulated_from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())?;
        Self::tabulated_from_reader(f)
    }

    /// Overrides the number of Gaussian winding images (no effect on other models).
    pub fn with_windings(mut self, k: u32) -> Self {
        if let Shape::Gaussian { windings, .. } = &mut self.shape {
            *windings = k;
        }
        self
    }

    pub fn kind(&self) -> ModelKind {
        match self.shape {
            Shape::Gaussian { .. } => ModelKind::Gaussian,
            Shape::TopHat { .. } => ModelKind::TopHat,
            Shape::Dirac { .. } => ModelKind::Dirac,
            Shape::Uniform => ModelKind::Uniform,
            Shape::Tabulated(_) => ModelKind::Tabulated,
        }
    }

    /// The width parameter: `sigma`, `delta` or `x0`, depending on the model.
    pub fn param(&self) -> Option<f64> {
        match self.shape {
            Shape::Gaussian { sigma, .. } => Some(sigma),
            Shape::TopHat { delta, .. } => Some(delta),
            Shape::Dirac { x0 } => Some(x0),
            Shape::Uniform | Shape::Tabulated(_) => None,
        }
    }

    pub fn mu(&self) -> Option<f64> {
        match self.shape {
            Shape::Gaussian { mu, .. } | Shape::TopHat { mu, .. } => Some(mu),
            _ => None,
        }
    }

    /// The same model displaced by `offset` (the Dirac peak is re-wrapped into `[0, 1)`).
    pub fn shifted(&self, offset: f64) -> Result<Self> {
        match &self.shape {
            Shape::Gaussian {
                mu,
                sigma,
                windings,
            } => Ok(Self {
                shape: Shape::Gaussian {
                    mu: mu + offset,
                    sigma: *sigma,
                    windings: *windings,
                },
            }),
            Shape::TopHat { mu, delta } => Self::tophat(mu + offset, *delta),
            Shape::Dirac { x0 } => Self::dirac(wrap01(x0 + offset)),
            Shape::Uniform => Ok(self.clone()),
            Shape::Tabulated(t) => {
                let mut knots: Vec<(f64, f64)> = t
                    .knots
                    .iter()
                    .map(|&(x, y)| (wrap01(x + offset), y))
                    .collect();
                knots.sort_by(|a, b| a.0.total_cmp(&b.0));
                Self::tabulated(&knots)
            }
        }
    }

    /// Probability mass of `P°` on `[a, b)`.
    ///
    /// Point masses use `(a, b]` so a Dirac peak lying exactly on the border
    /// of two rounding intervals is counted in the lower-index one.
    pub fn interval_probability(&self, a: f64, b: f64) -> Result<f64> {
        if !(a.is_finite() && b.is_finite()) || a >= b || b - a > 1.0 + 1e-12 {
            return param(format!("invalid interval [{a}, {b})"));
        }
        Ok(self.interval_unchecked(a, b))
    }

    pub(crate) fn interval_unchecked(&self, a: f64, b: f64) -> f64 {
        let p = match &self.shape {
            Shape::Gaussian {
                mu,
                sigma,
                windings,
            } => gaussian_interval(*mu, *sigma, *windings, a, b),
            Shape::TopHat { mu, delta } => tophat_interval(*mu, *delta, a, b),
            Shape::Dirac { x0 } => ((b - x0).floor() - (a - x0).floor()).clamp(0.0, 1.0),
            Shape::Uniform => b - a,
            Shape::Tabulated(t) => t.periodic_cdf(b) - t.periodic_cdf(a),
        };
        p.clamp(0.0, 1.0)
    }

    /// Pointwise value of `P°(x)`.
    pub fn density(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return param("density evaluated at a non-finite position");
        }
        match &self.shape {
            Shape::Gaussian {
                mu,
                sigma,
                windings,
            } => {
                let d = wrap_centered(x - mu);
                let k = *windings as i64;
                let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
                Ok((-k..=k)
                    .map(|m| {
                        let z = (d + m as f64) / sigma;
                        norm * (-0.5 * z * z).exp()
                    })
                    .sum())
            }
            Shape::TopHat { mu, delta } => {
                let d = wrap_centered(x - mu).abs();
                Ok(if d <= *delta { 0.5 / delta } else { 0.0 })
            }
            Shape::Dirac { .. } => Err(Error::Unsupported(
                "a Dirac shift has no pointwise density".into(),
            )),
            Shape::Uniform => Ok(1.0),
            Shape::Tabulated(t) => Ok(t.density(wrap01(x))),
        }
    }
}

/// `x - floor(x)`, forced into `[0, 1)`.
pub(crate) fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative of `x` modulo 1 in `[-1/2, 1/2)`.
pub(crate) fn wrap_centered(x: f64) -> f64 {
    wrap01(x + 0.5) - 0.5
}

/// `Phi(hi) - Phi(lo)` for the standard normal, using the tail that avoids cancellation.
fn normal_mass(lo: f64, hi: f64) -> f64 {
    if lo >= 0.0 {
        0.5 * (erfc(lo * FRAC_1_SQRT_2) - erfc(hi * FRAC_1_SQRT_2))
    } else if hi <= 0.0 {
        0.5 * (erfc(-hi * FRAC_1_SQRT_2) - erfc(-lo * FRAC_1_SQRT_2))
    } else {
        0.5 * (erf(hi * FRAC_1_SQRT_2) - erf(lo * FRAC_1_SQRT_2))
    }
}

fn gaussian_interval(mu: f64, sigma: f64, windings: u32, a: f64, b: f64) -> f64 {
    // move the window next to mu so that the images m in -K..=K are the relevant ones
    let s = (0.5 * (a + b) - mu).round();
    let (a, b) = (a - s - mu, b - s - mu);
    let k = windings as i64;
    (-k..=k)
        .map(|m| normal_mass((a + m as f64) / sigma, (b + m as f64) / sigma))
        .sum()
}

fn tophat_interval(mu: f64, delta: f64, a: f64, b: f64) -> f64 {
    let lo_m = (a - mu - delta).floor() as i64 - 1;
    let hi_m = (b - mu + delta).ceil() as i64 + 1;
    let mut len = 0.0;
    for m in lo_m..=hi_m {
        let c = mu + m as f64;
        let lo = a.max(c - delta);
        let hi = b.min(c + delta);
        if hi > lo {
            len += hi - lo;
        }
    }
    len / (2.0 * delta)
}

impl Table {
    fn new(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.is_empty() {
            return param("tabulated model needs at least one knot");
        }
        for (i, &(x, y)) in knots.iter().enumerate() {
            if !(0.0..1.0).contains(&x) {
                return param(format!("knot position {x} outside [0, 1)"));
            }
            if !(y.is_finite() && y >= 0.0) {
                return param(format!("knot density {y} must be finite and non-negative"));
            }
            if i > 0 && x <= knots[i - 1].0 {
                return param("knot positions must be strictly increasing");
            }
        }

        // density at 0 by interpolating across the wrap segment
        let (x_last, y_last) = *knots.last().unwrap();
        let (x_first, y_first) = knots[0];
        let span = x_first + 1.0 - x_last;
        let y_at_zero = if knots.len() == 1 {
            y_first
        } else {
            y_last + (y_first - y_last) * (1.0 - x_last) / span
        };

        let mut xs = Vec::with_capacity(knots.len() + 2);
        let mut ys = Vec::with_capacity(knots.len() + 2);
        if x_first > 0.0 {
            xs.push(0.0);
            ys.push(y_at_zero);
        }
        for &(x, y) in knots {
            xs.push(x);
            ys.push(y);
        }
        xs.push(1.0);
        ys.push(ys[0]);

        let mut cum = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cum[i] = cum[i - 1] + 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
        }
        let total = *cum.last().unwrap();
        if total.is_nan() || total <= 0.0 {
            return param("tabulated density integrates to zero");
        }
        ys.iter_mut().for_each(|y| *y /= total);
        cum.iter_mut().for_each(|c| *c /= total);

        Ok(Self {
            knots: knots.to_vec(),
            xs,
            ys,
            cum,
        })
    }

    fn segment(&self, t: f64) -> usize {
        // last i with xs[i] <= t, capped so that i + 1 is valid
        let i = self.xs.partition_point(|&x| x <= t);
        i.saturating_sub(1).min(self.xs.len() - 2)
    }

    fn density(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let w = (t - x0) / (x1 - x0);
        self.ys[i] + w * (self.ys[i + 1] - self.ys[i])
    }

    /// Integral over `[0, t]` for `t in [0, 1)`.
    fn cdf(&self, t: f64) -> f64 {
        let i = self.segment(t);
        let h = t - self.xs[i];
        let slope = (self.ys[i + 1] - self.ys[i]) / (self.xs[i + 1] - self.xs[i]);
        self.cum[i] + self.ys[i] * h + 0.5 * slope * h * h
    }

    fn periodic_cdf(&self, x: f64) -> f64 {
        let fl = x.floor();
        fl + self.cdf(wrap01(x))
    }
}
