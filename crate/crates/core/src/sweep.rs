//! Precision sweeps: `C_mu` and `H_Q` over a grid of models and `n`.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{
    gaussian_asymptotic_spectrum, gaussian_entropy_bound, tophat_asymptotic_spectrum,
    tophat_entropy_bound, GAUSSIAN_BOUND_SIGMA_MAX,
};
use crate::discretizer::{causal_structure, discretize, DEFAULT_CAUSAL_TOL};
use crate::error::{param, Error, Result};
use crate::shift_models::{ModelKind, ShiftModel};
use crate::spectral::{gram_spectrum_dft, von_neumann_entropy};

pub const DEFAULT_PLATEAU_TOL: f64 = 1e-3;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 9] = [
    "model",
    "param",
    "n_bits",
    "c_mu_bits",
    "h_q_bits",
    "h_q_asym_bits",
    "bound_bits",
    "wall_time_ms",
    "error",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SweepMode {
    #[default]
    Exact,
    Asymptotic,
    Both,
}

impl std::str::FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SweepMode::Exact),
            "asymptotic" => Ok(SweepMode::Asymptotic),
            "both" => Ok(SweepMode::Both),
            other => param(format!("unknown sweep mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    pub models: Vec<ShiftModel>,
    /// Strictly ascending precisions.
    pub n_bits: Vec<u32>,
    pub mode: SweepMode,
    pub plateau_tol: f64,
    pub causal_tol: f64,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// When false `wall_time_ms` is left empty so reruns are byte-identical.
    pub timing: bool,
}

impl SweepConfig {
    pub fn new(models: Vec<ShiftModel>, n_bits: Vec<u32>) -> Self {
        Self {
            models,
            n_bits,
            mode: SweepMode::Exact,
            plateau_tol: DEFAULT_PLATEAU_TOL,
            causal_tol: DEFAULT_CAUSAL_TOL,
            threads: None,
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return param("sweep needs at least one model");
        }
        if self.n_bits.is_empty() {
            return param("sweep needs at least one precision");
        }
        if self.n_bits.windows(2).any(|w| w[0] >= w[1]) {
            return param("n_bits grid must be strictly ascending");
        }
        if self.plateau_tol.is_nan() || self.plateau_tol < 0.0 {
            return param("plateau tolerance must be non-negative");
        }
        if self.causal_tol.is_nan() || self.causal_tol < 0.0 {
            return param("causal-state tolerance must be non-negative");
        }
        if self.threads == Some(0) {
            return param("thread count must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub model: String,
    pub param: Option<f64>,
    pub n_bits: u32,
    pub c_mu_bits: Option<f64>,
    pub h_q_bits: Option<f64>,
    pub h_q_asym_bits: Option<f64>,
    pub bound_bits: Option<f64>,
    pub wall_time_ms: Option<f64>,
    pub error: Option<String>,
}

/// Smallest `n` at which consecutive `H_Q` values differ by at most the tolerance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlateauReport {
    pub model: String,
    pub param: Option<f64>,
    pub plateau_n_bits: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub plateaus: Vec<PlateauReport>,
}

/// The analytic entropy bound for the model, if one applies.
pub fn entropy_bound(model: &ShiftModel) -> Option<f64> {
    match (model.kind(), model.param()) {
        (ModelKind::Gaussian, Some(s)) if s < GAUSSIAN_BOUND_SIGMA_MAX => {
            gaussian_entropy_bound(s).ok()
        }
        (ModelKind::TopHat, Some(d)) => tophat_entropy_bound(d).ok(),
        _ => None,
    }
}

fn asymptotic_entropy(model: &ShiftModel, n_bits: u32) -> Result<Option<f64>> {
    let spec = match (model.kind(), model.param()) {
        (ModelKind::Gaussian, Some(s)) => gaussian_asymptotic_spectrum(s, n_bits)?,
        (ModelKind::TopHat, Some(d)) => tophat_asymptotic_spectrum(d, n_bits)?,
        _ => return Ok(None),
    };
    Ok(Some(spec.entropy_bits()))
}

fn run_point(model: &ShiftModel, n_bits: u32, cfg: &SweepConfig) -> SweepRecord {
    let started = Instant::now();
    let mut rec = SweepRecord {
        model: model.kind().to_string(),
        param: model.param(),
        n_bits,
        c_mu_bits: None,
        h_q_bits: None,
        h_q_asym_bits: None,
        bound_bits: entropy_bound(model),
        wall_time_ms: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let col = discretize(model, n_bits)?;
        rec.c_mu_bits = Some(causal_structure(&col, cfg.causal_tol)?.c_mu_bits);
        if cfg.mode != SweepMode::Asymptotic {
            rec.h_q_bits = Some(von_neumann_entropy(&gram_spectrum_dft(&col)?));
        }
        if cfg.mode != SweepMode::Exact {
            rec.h_q_asym_bits = asymptotic_entropy(model, n_bits)?;
        }
        Ok(())
    })();
    if let Err(e) = result {
        rec.error = Some(e.to_string());
    }
    if cfg.timing {
        rec.wall_time_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    rec
}

fn plateau(records: &[SweepRecord], tol: f64) -> Option<u32> {
    let value = |r: &SweepRecord| r.h_q_bits.or(r.h_q_asym_bits);
    records
        .windows(2)
        .find_map(|w| match (value(&w[0]), value(&w[1])) {
            (Some(a), Some(b)) if (b - a).abs() <= tol => Some(w[1].n_bits),
            _ => None,
        })
}

/// Evaluates every `(model, n_bits)` grid point. Records come back in grid
/// order (models outer, precisions inner) whatever the thread count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let grid: Vec<(usize, u32)> = (0..cfg.models.len())
        .flat_map(|m| cfg.n_bits.iter().map(move |&n| (m, n)))
        .collect();
    let compute = || -> Vec<SweepRecord> {
        grid.par_iter()
            .map(|&(m, n)| run_point(&cfg.models[m], n, cfg))
            .collect()
    };
    let records = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Capability(format!("thread pool: {e}")))?
            .install(compute),
        None => compute(),
    };
    let per_model = cfg.n_bits.len();
    let plateaus = records
        .chunks(per_model)
        .map(|chunk| PlateauReport {
            model: chunk[0].model.clone(),
            param: chunk[0].param,
            plateau_n_bits: plateau(chunk, cfg.plateau_tol),
        })
        .collect();
    Ok(SweepOutput { records, plateaus })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(records: &[SweepRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(CSV_COLUMNS)?;
    for r in records {
        wtr.write_record([
            r.model.clone(),
            opt(r.param),
            r.n_bits.to_string(),
            opt(r.c_mu_bits),
            opt(r.h_q_bits),
            opt(r.h_q_asym_bits),
            opt(r.bound_bits),
            opt(r.wall_time_ms),
            r.error.clone().unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// JSON array of objects keyed like the CSV columns.
pub fn write_json<W: Write>(records: &[SweepRecord], mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, records)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    writeln!(w)?;
    Ok(())
}
