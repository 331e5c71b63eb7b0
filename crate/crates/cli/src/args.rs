use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::Failure;

/// Memory costs of simulating discretized cyclic random walks, classically and quantumly.
#[derive(Debug, Parser)]
#[command(name = "cyclic-qsim", version)]
pub struct Cli {
    /// Flat TOML file of `key = value` defaults; flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of the quantum memory ensemble as `k,lambda` rows.
    Spectrum(SpectrumArgs),
    /// C_mu and H_Q over a grid of models and precisions.
    Sweep(SweepArgs),
    /// Run the quantum circuit and check its statistics.
    Simulate(SimulateArgs),
    /// Built-in golden checks.
    Validate,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// gaussian | tophat | dirac | uniform | tabulated
    #[arg(long)]
    pub model: Option<String>,
    /// Gaussian standard deviation (sweep accepts a comma list).
    #[arg(long)]
    pub sigma: Option<String>,
    /// Top-hat half-width (sweep accepts a comma list).
    #[arg(long)]
    pub delta: Option<String>,
    /// Mean displacement per step for gaussian and tophat.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Point-mass location for dirac.
    #[arg(long)]
    pub x0: Option<String>,
    /// Two-column `position,density` CSV for tabulated.
    #[arg(long, value_name = "CSV")]
    pub table: Option<String>,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Precision in bits, N = 2^n.
    #[arg(long)]
    pub n: Option<String>,
    /// dft | dense | asymptotic
    #[arg(long)]
    pub method: Option<String>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Precisions: `8`, `4,6,8` or the inclusive range `4..13`.
    #[arg(long)]
    pub n: Option<String>,
    /// exact | asymptotic | both
    #[arg(long)]
    pub mode: Option<String>,
    /// Plateau threshold on consecutive H_Q values, in bits.
    #[arg(long)]
    pub plateau_tol: Option<String>,
    /// Per-entry tolerance when comparing causal states.
    #[arg(long)]
    pub causal_tol: Option<String>,
    /// csv | json
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
    /// Leave `wall_time_ms` empty so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Precision in bits (N = 2^n <= 16).
    #[arg(long)]
    pub n: Option<String>,
    /// Measured steps, or unmeasured tapes in defer mode.
    #[arg(long)]
    pub steps: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Starting site.
    #[arg(long)]
    pub start: Option<String>,
    /// measure | defer
    #[arg(long)]
    pub mode: Option<String>,
    /// Joint readouts drawn in defer mode.
    #[arg(long)]
    pub shots: Option<String>,
    #[arg(long)]
    pub out: Option<String>,
}

const KNOWN_KEYS: &[&str] = &[
    "model",
    "sigma",
    "delta",
    "mu",
    "x0",
    "table",
    "n",
    "method",
    "format",
    "out",
    "mode",
    "plateau-tol",
    "causal-tol",
    "timing",
    "steps",
    "seed",
    "start",
    "shots",
];

/// Effective settings: config-file values overlaid with explicit flags.
#[derive(Debug, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

fn scalar_text(key: &str, v: &toml::Value) -> Result<String, Failure> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        toml::Value::Array(items) => items
            .iter()
            .map(|x| match x {
                toml::Value::Array(_) | toml::Value::Table(_) => Err(Failure::param(format!(
                    "config key `{key}`: nested values are not allowed"
                ))),
                other => scalar_text(key, other),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|v| v.join(",")),
        _ => Err(Failure::param(format!(
            "config key `{key}` must be a plain value"
        ))),
    }
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let mut s = Settings::default();
        let Some(path) = path else { return Ok(s) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::param(format!("cannot read config {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| Failure::param(format!("config {}: {e}", path.display())))?;
        for (key, value) in &table {
            let norm = key.replace('_', "-");
            if !KNOWN_KEYS.contains(&norm.as_str()) {
                return Err(Failure::param(format!("unknown config key `{key}`")));
            }
            s.values.insert(norm, scalar_text(key, value)?);
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, flag: &Option<String>) {
        if let Some(v) = flag {
            self.values.insert(key.to_string(), v.clone());
        }
    }

    pub fn apply_model(&mut self, m: &ModelArgs) {
        self.set("model", &m.model);
        self.set("sigma", &m.sigma);
        self.set("delta", &m.delta);
        self.set("mu", &m.mu);
        self.set("x0", &m.x0);
        self.set("table", &m.table);
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .trim()
                .parse()
                .map(Some)
                .map_err(|_| Failure::param(format!("--{key}: cannot parse `{v}`"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, Failure> {
        self.get(key)?
            .ok_or_else(|| Failure::param(format!("--{key} is required")))
    }

    pub fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, Failure> {
        let Some(v) = self.raw(key) else {
            return Ok(None);
        };
        v.split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| Failure::param(format!("--{key}: cannot parse `{x}`")))
            })
            .collect::<Result<Vec<T>, _>>()
            .map(Some)
    }
}

/// Parses `8`, `4,6,8` or an inclusive range `4..13` (also `4..=13`).
pub fn parse_precisions(text: &str) -> Result<Vec<u32>, Failure> {
    let bad = || Failure::param(format!("--n: cannot parse `{text}`"));
    let t = text.trim();
    if let Some((a, b)) = t.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let lo: u32 = a.trim().parse().map_err(|_| bad())?;
        let hi: u32 = b.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(Failure::param(format!("--n: empty range `{text}`")));
        }
        return Ok((lo..=hi).collect());
    }
    t.split(',')
        .map(|x| x.trim().parse().map_err(|_| bad()))
        .collect()
}
