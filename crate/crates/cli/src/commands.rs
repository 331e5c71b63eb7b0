use std::io::Write;
use std::path::PathBuf;

use cyclic_qsim::circuit::{
    displacement_histogram, total_variation, write_joint_shots, write_trajectory, TrajectoryHeader,
    MAX_CIRCUIT_N,
};
use cyclic_qsim::discretizer::DEFAULT_CAUSAL_TOL;
use cyclic_qsim::sweep::{write_csv, write_json, DEFAULT_PLATEAU_TOL};
use cyclic_qsim::{
    build_memory_states, build_step_unitary, dense_oracle_spectrum, discretize,
    gaussian_asymptotic_spectrum, gram_spectrum_dft, run_sweep, tophat_asymptotic_spectrum,
    von_neumann_entropy, ModelKind, ShiftModel, SimulatorState, StepMode, SweepConfig, SweepMode,
    TransitionColumn,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{parse_precisions, Settings};
use crate::output::{check_writable, emit};
use crate::Failure;

const THREADS_ENV: &str = "CYCLIC_QSIM_THREADS";
const TV_STEPS: usize = 100_000;
const TV_MEASURE: f64 = 0.01;
const TV_DEFER: f64 = 0.02;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

fn format(s: &Settings) -> Result<Format, Failure> {
    match s.raw("format").unwrap_or("csv") {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        other => Err(Failure::param(format!(
            "--format must be csv or json, got `{other}`"
        ))),
    }
}

fn out_path(s: &Settings) -> Option<PathBuf> {
    s.raw("out").map(PathBuf::from)
}

/// Builds one model per listed `sigma`/`delta` value; `multi` allows lists.
fn models(s: &Settings, multi: bool) -> Result<Vec<ShiftModel>, Failure> {
    let kind: ModelKind = s.require::<String>("model")?.parse()?;
    let mu = s.get::<f64>("mu")?.unwrap_or(0.0);
    let values = |key: &str| -> Result<Vec<f64>, Failure> {
        let v = s
            .list::<f64>(key)?
            .ok_or_else(|| Failure::param(format!("--{key} is required for the {kind} model")))?;
        if v.len() > 1 && !multi {
            return Err(Failure::param(format!("--{key} takes a single value here")));
        }
        Ok(v)
    };
    let out = match kind {
        ModelKind::Gaussian => values("sigma")?
            .into_iter()
            .map(|sigma| ShiftModel::gaussian(mu, sigma))
            .collect::<Result<Vec<_>, _>>()?,
        ModelKind::TopHat => values("delta")?
            .into_iter()
            .map(|delta| ShiftModel::tophat(mu, delta))
            .collect::<Result<Vec<_>, _>>()?,
        ModelKind::Dirac => vec![ShiftModel::dirac(s.require("x0")?)?],
        ModelKind::Uniform => vec![ShiftModel::uniform()],
        ModelKind::Tabulated => {
            let path: String = s.require("table")?;
            vec![ShiftModel::tabulated_from_csv(path)?]
        }
    };
    Ok(out)
}

fn single_model(s: &Settings) -> Result<ShiftModel, Failure> {
    Ok(models(s, false)?.remove(0))
}

fn single_precision(s: &Settings) -> Result<u32, Failure> {
    let v = parse_precisions(&s.require::<String>("n")?)?;
    match v.as_slice() {
        [n] => Ok(*n),
        _ => Err(Failure::param("--n takes a single precision here")),
    }
}

fn check_precision(n: u32) -> Result<(), Failure> {
    let max = cyclic_qsim::discretizer::MAX_N_BITS;
    if n == 0 || n > max {
        return Err(Failure::param(format!(
            "--n must lie in 1..={max}, got {n}"
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectrumJson {
    model: String,
    param: Option<f64>,
    n_bits: u32,
    method: cyclic_qsim::SpectrumMethod,
    trace: f64,
    entropy_bits: f64,
    k: Vec<i64>,
    lambda: Vec<f64>,
}

pub fn spectrum(s: &Settings) -> Result<(), Failure> {
    let model = single_model(s)?;
    let n_bits = single_precision(s)?;
    check_precision(n_bits)?;
    let fmt = format(s)?;
    let out = out_path(s);
    check_writable(out.as_deref())?;
    let method = s.raw("method").unwrap_or("dft");
    let spec = match method {
        "dft" => gram_spectrum_dft(&discretize(&model, n_bits)?)?,
        "dense" => dense_oracle_spectrum(&discretize(&model, n_bits)?)?,
        "asymptotic" => match (model.kind(), model.param()) {
            (ModelKind::Gaussian, Some(sigma)) => gaussian_asymptotic_spectrum(sigma, n_bits)?,
            (ModelKind::TopHat, Some(delta)) => tophat_asymptotic_spectrum(delta, n_bits)?,
            _ => {
                return Err(Failure::param(format!(
                    "no closed-form spectrum for the {} model",
                    model.kind()
                )))
            }
        }
        .to_spectrum()?,
        other => {
            return Err(Failure::param(format!(
                "--method must be dft, dense or asymptotic, got `{other}`"
            )))
        }
    };
    let h = von_neumann_entropy(&spec);
    emit(out.as_deref(), |buf| {
        match fmt {
            Format::Csv => spec.write_csv(&mut *buf)?,
            Format::Json => {
                let (k, lambda) = spec.centered().unzip();
                let doc = SpectrumJson {
                    model: model.kind().to_string(),
                    param: model.param(),
                    n_bits,
                    method: spec.method(),
                    trace: spec.trace(),
                    entropy_bits: h,
                    k,
                    lambda,
                };
                serde_json::to_writer_pretty(&mut *buf, &doc).map_err(std::io::Error::other)?;
                writeln!(buf)?;
            }
        }
        Ok(())
    })?;
    eprintln!(
        "{} n={n_bits}: H_Q = {h:.9} bits, trace = {:.12}",
        model.kind(),
        spec.trace()
    );
    Ok(())
}

fn thread_cap() -> Result<Option<usize>, Failure> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::param(format!(
            "{THREADS_ENV} must be a positive integer, got `{v}`"
        ))
    })?;
    let avail = std::thread::available_parallelism().map_or(1, |a| a.get());
    Ok(Some(n.min(avail)))
}

pub fn sweep(s: &Settings) -> Result<(), Failure> {
    let models = models(s, true)?;
    let n_bits = parse_precisions(&s.require::<String>("n")?)?;
    n_bits.iter().try_for_each(|&n| check_precision(n))?;
    let mut cfg = SweepConfig::new(models, n_bits);
    cfg.mode = s
        .get::<String>("mode")?
        .map_or(Ok(SweepMode::Exact), |m| m.parse())?;
    cfg.plateau_tol = s.get("plateau-tol")?.unwrap_or(DEFAULT_PLATEAU_TOL);
    cfg.causal_tol = s.get("causal-tol")?.unwrap_or(DEFAULT_CAUSAL_TOL);
    cfg.timing = s.get("timing")?.unwrap_or(true);
    cfg.threads = thread_cap()?;
    cfg.validate()?;
    let fmt = format(s)?;
    let out = out_path(s);
    check_writable(out.as_deref())?;

    let result = run_sweep(&cfg)?;
    emit(out.as_deref(), |buf| {
        match fmt {
            Format::Csv => write_csv(&result.records, &mut *buf)?,
            Format::Json => write_json(&result.records, &mut *buf)?,
        }
        Ok(())
    })?;
    for p in &result.plateaus {
        let param = p.param.map(|x| format!(" {x}")).unwrap_or_default();
        match p.plateau_n_bits {
            Some(n) => eprintln!(
                "{}{param}: H_Q plateau (tol {}) reached at n = {n}",
                p.model, cfg.plateau_tol
            ),
            None => eprintln!(
                "{}{param}: no H_Q plateau within tol {} on this grid",
                p.model, cfg.plateau_tol
            ),
        }
    }
    let failed = result.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("warning: {failed} grid point(s) failed; see the error column");
    }
    Ok(())
}

fn verdict(samples: usize, tv: f64, threshold: f64) -> (&'static str, bool) {
    if samples < TV_STEPS {
        ("not assessed (needs at least 100000 samples)", true)
    } else if tv <= threshold {
        ("PASS", true)
    } else {
        ("FAIL", false)
    }
}

pub fn simulate(s: &Settings) -> Result<(), Failure> {
    let model = single_model(s)?;
    let n_bits = single_precision(s)?;
    check_precision(n_bits)?;
    if (1usize << n_bits) > MAX_CIRCUIT_N {
        return Err(Failure::capability(format!(
            "circuit simulation is limited to N <= {MAX_CIRCUIT_N}, got n = {n_bits}"
        )));
    }
    let mode = match s.raw("mode").unwrap_or("measure") {
        "measure" => StepMode::Measure,
        "defer" => StepMode::Defer,
        other => {
            return Err(Failure::param(format!(
                "--mode must be measure or defer, got `{other}`"
            )))
        }
    };
    let default_steps = if mode == StepMode::Measure { 1000 } else { 2 };
    let steps: usize = s.get("steps")?.unwrap_or(default_steps);
    let seed: u64 = s.get("seed")?.unwrap_or(0);
    let start: usize = s.get("start")?.unwrap_or(0);
    let shots: usize = s.get("shots")?.unwrap_or(TV_STEPS);
    let out = out_path(s);
    check_writable(out.as_deref())?;

    let col = discretize(&model, n_bits)?;
    let mset = build_memory_states(&col)?;
    let u = build_step_unitary(&mset)?;
    let mut sim = SimulatorState::new(&mset, start, seed)?;
    let n = col.len();
    eprintln!(
        "unitarity error ||U^dag U - I||_max = {:.2e}",
        u.unitarity_error()
    );

    let ok = match mode {
        StepMode::Measure => {
            for _ in 0..steps {
                sim.step(&u, StepMode::Measure)?;
            }
            let header = TrajectoryHeader {
                model: model.kind().to_string(),
                param: model.param(),
                n_bits,
                seed,
                start,
            };
            emit(out.as_deref(), |buf| {
                Ok(write_trajectory(&mut *buf, &header, sim.history())?)
            })?;
            let hist = displacement_histogram(start, sim.history(), n);
            let tv = total_variation(&hist, col.probs());
            let (v, ok) = verdict(steps, tv, TV_MEASURE);
            eprintln!("one-step TV vs analytic transitions over {steps} steps: {tv:.5} (threshold {TV_MEASURE}): {v}");
            ok
        }
        StepMode::Defer => {
            if steps == 0 {
                return Err(Failure::param("--steps must be at least 1 in defer mode"));
            }
            for _ in 0..steps {
                sim.step(&u, StepMode::Defer)?;
            }
            let readouts = sim.sample_deferred(shots, seed);
            emit(out.as_deref(), |buf| {
                Ok(write_joint_shots(&mut *buf, &readouts)?)
            })?;
            let exact = joint_distribution(&col, start, steps);
            let mut emp = vec![0.0; exact.len()];
            for r in &readouts {
                let idx = r.iter().fold(0, |acc, &t| acc * n + t);
                emp[idx] += 1.0 / shots as f64;
            }
            let tv = total_variation(&emp, &exact);
            let (v, ok) = verdict(shots, tv, TV_DEFER);
            eprintln!("joint TV vs chained transitions over {shots} shots of {steps} tapes: {tv:.5} (threshold {TV_DEFER}): {v}");
            ok
        }
    };
    if ok {
        Ok(())
    } else {
        Err(Failure::validation(
            "simulated statistics exceed the TV threshold",
        ))
    }
}

/// Exact probability of every `m`-symbol string starting from `start`, first symbol most significant.
fn joint_distribution(col: &TransitionColumn, start: usize, m: usize) -> Vec<f64> {
    let n = col.len();
    (0..n.pow(m as u32))
        .map(|mut idx| {
            let mut syms = vec![0; m];
            for slot in syms.iter_mut().rev() {
                *slot = idx % n;
                idx /= n;
            }
            let mut prev = start;
            syms.iter().fold(1.0, |acc, &t| {
                let p = col.transition(prev, t);
                prev = t;
                acc * p
            })
        })
        .collect()
}

fn golden_random_column(n_bits: u32, rng: &mut ChaCha8Rng) -> Result<TransitionColumn, Failure> {
    let n = 1usize << n_bits;
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < 0.3 {
                0.0
            } else {
                rng.gen::<f64>()
            }
        })
        .collect();
    w[rng.gen_range(0..n)] += 0.5;
    let total: f64 = w.iter().sum();
    Ok(TransitionColumn::new(
        n_bits,
        w.into_iter().map(|x| x / total).collect(),
    )?)
}

pub fn validate() -> Result<(), Failure> {
    let mut all = true;
    let mut report = |name: &str, ok: bool, detail: String| {
        all &= ok;
        println!("[{}] {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    };

    let (mut dev, mut hdev) = (0.0f64, 0.0f64);
    for n_bits in 2..=10 {
        let spec = gram_spectrum_dft(&discretize(&ShiftModel::dirac(0.25)?, n_bits)?)?;
        let inv = 1.0 / spec.len() as f64;
        dev = spec
            .lambdas()
            .iter()
            .fold(dev, |m, l| m.max((l - inv).abs()));
        hdev = hdev.max((von_neumann_entropy(&spec) - n_bits as f64).abs());
    }
    report(
        "delta shift",
        dev <= 1e-10 && hdev <= 1e-9,
        format!("n=2..10, max|lambda-1/N| = {dev:.1e}, max|H_Q-n| = {hdev:.1e}"),
    );

    let (mut l0, mut rest, mut h) = (0.0f64, 0.0f64, 0.0f64);
    for n_bits in 2..=10 {
        let spec = gram_spectrum_dft(&discretize(&ShiftModel::uniform(), n_bits)?)?;
        l0 = l0.max((spec.lambdas()[0] - 1.0).abs());
        rest = spec.lambdas()[1..].iter().fold(rest, |m, &x| m.max(x));
        h = h.max(von_neumann_entropy(&spec).abs());
    }
    report(
        "uniform shift",
        l0 <= 1e-10 && rest <= 1e-10 && h <= 1e-9,
        format!("n=2..10, |lambda_0-1| = {l0:.1e}, max other = {rest:.1e}, max H_Q = {h:.1e}"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    let mut count = 0;
    for n_bits in 1..=7 {
        for _ in 0..20 {
            let col = golden_random_column(n_bits, &mut rng)?;
            let a = gram_spectrum_dft(&col)?.sorted_desc();
            let b = dense_oracle_spectrum(&col)?.sorted_desc();
            worst = a
                .iter()
                .zip(&b)
                .fold(worst, |m, (x, y)| m.max((x - y).abs()));
            count += 1;
        }
    }
    report(
        "oracle equivalence",
        worst <= 1e-8,
        format!("{count} random columns, N=2..128, max sorted deviation {worst:.1e}"),
    );

    if all {
        Ok(())
    } else {
        Err(Failure::validation("golden suite failed"))
    }
}
