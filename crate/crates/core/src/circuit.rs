//! Statevector simulation of the quantum step circuit for small `N`.
//!
//! The memory holds `|S_j> = sum_k sqrt(p_kj) |k>`. One step attaches a tape
//! qudit in the fiducial state `|S_0>`, applies the controlled unitary
//! `U |j>|S_0> = |j>|S_j>`, swaps memory and tape, and either measures the
//! tape in the computational basis or keeps it unmeasured.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretizer::{cumulative, sample_cdf, TransitionColumn};
use crate::error::{param, Error, Result};
use crate::spectral::{von_neumann_entropy, Spectrum, SpectrumMethod};

/// Largest `N` for which memory states and step unitaries are built.
pub const MAX_CIRCUIT_N: usize = 16;

/// Largest `N` allowed while tapes are kept unmeasured.
pub const MAX_DEFER_N: usize = 8;

/// Most tapes that may be held unmeasured at once.
pub const MAX_DEFER_TAPES: usize = 4;

/// Candidates whose residual norm falls below this are considered parallel
/// to the basis built so far and skipped.
pub const COMPLETION_TOL: f64 = 1e-8;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The `N` memory states and their overlap matrix.
#[derive(Clone, Debug)]
pub struct MemoryStateSet {
    n_bits: u32,
    states: Vec<DVector<Complex64>>,
    gram: DMatrix<f64>,
}

impl MemoryStateSet {
    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[DVector<Complex64>] {
        &self.states
    }

    pub fn state(&self, j: usize) -> &DVector<Complex64> {
        &self.states[j]
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }
}

/// `states[j][k] = sqrt(p_kj)`, plus `gram[i][j] = <S_i|S_j>`.
pub fn build_memory_states(col: &TransitionColumn) -> Result<MemoryStateSet> {
    let n = col.len();
    if n > MAX_CIRCUIT_N {
        return Err(Error::Capability(format!(
            "circuit simulation limited to N <= {MAX_CIRCUIT_N}, got N = {n}"
        )));
    }
    let states: Vec<DVector<Complex64>> = (0..n)
        .map(|j| {
            DVector::from_iterator(
                n,
                (0..n).map(|k| Complex64::new(col.transition(j, k).sqrt(), 0.0)),
            )
        })
        .collect();
    let gram = DMatrix::from_fn(n, n, |i, j| states[i].dotc(&states[j]).re);
    Ok(MemoryStateSet {
        n_bits: col.n_bits(),
        states,
        gram,
    })
}

/// Controlled unitary on memory (control) and tape (target), stored as its
/// `N` diagonal blocks `V_j` with `V_j |S_0> = |S_j>`.
#[derive(Clone, Debug)]
pub struct StepUnitary {
    blocks: Vec<DMatrix<Complex64>>,
    fiducial: DVector<Complex64>,
}

impl StepUnitary {
    pub fn dim(&self) -> usize {
        self.fiducial.len()
    }

    pub fn block(&self, j: usize) -> &DMatrix<Complex64> {
        &self.blocks[j]
    }

    /// The tape's initial state, `|S_0>`.
    pub fn fiducial(&self) -> &DVector<Complex64> {
        &self.fiducial
    }

    /// The full `N^2 x N^2` matrix; row and column index is `memory * N + tape`.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut u = DMatrix::from_element(n * n, n * n, ZERO);
        for (j, b) in self.blocks.iter().enumerate() {
            u.view_mut((j * n, j * n), (n, n)).copy_from(b);
        }
        u
    }

    /// `max |U^dagger U - I|` over all entries.
    pub fn unitarity_error(&self) -> f64 {
        let u = self.matrix();
        let prod = u.adjoint() * &u;
        let mut worst: f64 = 0.0;
        for r in 0..prod.nrows() {
            for c in 0..prod.ncols() {
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((prod[(r, c)] - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Orthonormal basis whose first vector is `first`, completed with the
/// computational basis vectors in index order.
fn complete_basis(first: &DVector<Complex64>) -> Result<Vec<DVector<Complex64>>> {
    let n = first.len();
    let norm = first.norm();
    if norm < COMPLETION_TOL {
        return Err(Error::Construction(
            "cannot complete a basis from a zero vector".into(),
        ));
    }
    let mut basis = vec![first / Complex64::new(norm, 0.0)];
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::from_element(n, ZERO);
        v[i] = Complex64::new(1.0, 0.0);
        // two passes of Gram-Schmidt keep the result orthogonal to ~1e-16
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let r = v.norm();
        if r < COMPLETION_TOL {
            continue;
        }
        basis.push(v / Complex64::new(r, 0.0));
    }
    if basis.len() != n {
        return Err(Error::Construction(format!(
            "orthonormal completion found only {} of {n} vectors",
            basis.len()
        )));
    }
    Ok(basis)
}

pub fn build_step_unitary(mset: &MemoryStateSet) -> Result<StepUnitary> {
    let n = mset.dim();
    let fiducial = mset.state(0).clone();
    let from = complete_basis(&fiducial)?;
    let mut blocks = Vec::with_capacity(n);
    for j in 0..n {
        let to = complete_basis(mset.state(j))
            .map_err(|e| Error::Construction(format!("block {j}: {e}")))?;
        let mut v = DMatrix::from_element(n, n, ZERO);
        for (y, x) in to.iter().zip(&from) {
            v += y * x.adjoint();
        }
        blocks.push(v);
    }
    Ok(StepUnitary { blocks, fiducial })
}

/// Whether the tape is measured right after the step or kept coherently.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepMode {
    Measure,
    Defer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// The measured tape symbol, i.e. the new site.
    Emitted(usize),
    /// The step's tape was kept; its register position among unmeasured tapes.
    Deferred { tape: usize },
}

/// Memory plus any unmeasured tapes, with its own seeded generator.
///
/// The joint amplitude vector is indexed `((memory * N + tape_1) * N + tape_2) ...`.
#[derive(Clone, Debug)]
pub struct SimulatorState {
    n: usize,
    joint: Vec<Complex64>,
    deferred: usize,
    rng: ChaCha8Rng,
    seed: u64,
    history: Vec<usize>,
}

impl SimulatorState {
    /// Memory prepared in `|S_start>`.
    pub fn new(mset: &MemoryStateSet, start: usize, seed: u64) -> Result<Self> {
        let n = mset.dim();
        if start >= n {
            return param(format!("start site {start} out of range 0..{n}"));
        }
        Ok(Self {
            n,
            joint: mset.state(start).iter().copied().collect(),
            deferred: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            history: Vec::new(),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn history(&self) -> &[usize] {
        &self.history
    }

    pub fn deferred_tapes(&self) -> usize {
        self.deferred
    }

    pub fn norm(&self) -> f64 {
        self.joint.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The memory register, available while no tape is held unmeasured.
    pub fn memory(&self) -> Result<DVector<Complex64>> {
        if self.deferred > 0 {
            return Err(Error::Unsupported(
                "memory is entangled with unmeasured tapes".into(),
            ));
        }
        Ok(DVector::from_column_slice(&self.joint))
    }

    pub fn step(&mut self, u: &StepUnitary, mode: StepMode) -> Result<StepOutcome> {
        let n = self.n;
        if u.dim() != n {
            return param(format!(
                "unitary acts on N = {}, state has N = {n}",
                u.dim()
            ));
        }
        if mode == StepMode::Defer {
            if n > MAX_DEFER_N {
                return Err(Error::Capability(format!(
                    "deferred measurement limited to N <= {MAX_DEFER_N}, got N = {n}"
                )));
            }
            if self.deferred >= MAX_DEFER_TAPES {
                return Err(Error::Capability(format!(
                    "at most {MAX_DEFER_TAPES} unmeasured tapes fit the amplitude budget"
                )));
            }
        }

        let r = n.pow(self.deferred as u32);
        // U acting on |m>|phi>: the block V_m applied to the fiducial tape
        let images: Vec<DVector<Complex64>> = u.blocks.iter().map(|b| b * &u.fiducial).collect();
        let mut next = vec![ZERO; n * r * n];
        for m in 0..n {
            for rr in 0..r {
                let a = self.joint[m * r + rr];
                if a == ZERO {
                    continue;
                }
                for (t, img) in images[m].iter().enumerate() {
                    // swap: the tape value becomes the memory index and vice versa
                    next[(t * r + rr) * n + m] += a * img;
                }
            }
        }

        match mode {
            StepMode::Defer => {
                self.joint = next;
                self.deferred += 1;
                Ok(StepOutcome::Deferred {
                    tape: self.deferred - 1,
                })
            }
            StepMode::Measure => {
                let mut probs = vec![0.0; n];
                for (i, z) in next.iter().enumerate() {
                    probs[i % n] += z.norm_sqr();
                }
                let k = sample_cdf(
                    &cumulative(&probs),
                    self.rng.gen::<f64>() * probs.iter().sum::<f64>(),
                );
                let scale = Complex64::new(1.0 / probs[k].sqrt(), 0.0);
                self.joint = next.iter().skip(k).step_by(n).map(|z| z * scale).collect();
                self.history.push(k);
                Ok(StepOutcome::Emitted(k))
            }
        }
    }

    /// Probability of every string of the unmeasured tapes, first tape most significant.
    pub fn deferred_distribution(&self) -> Vec<f64> {
        let r = self.n.pow(self.deferred as u32);
        let mut p = vec![0.0; r];
        for (i, z) in self.joint.iter().enumerate() {
            p[i % r] += z.norm_sqr();
        }
        p
    }

    fn decode(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.deferred];
        for slot in out.iter_mut().rev() {
            *slot = idx % self.n;
            idx /= self.n;
        }
        out
    }

    /// Draws `shots` independent joint readouts of the unmeasured tapes
    /// without disturbing this state.
    pub fn sample_deferred(&self, shots: usize, seed: u64) -> Vec<Vec<usize>> {
        let cdf = cumulative(&self.deferred_distribution());
        let total = *cdf.last().unwrap_or(&1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..shots)
            .map(|_| self.decode(sample_cdf(&cdf, rng.gen::<f64>() * total)))
            .collect()
    }

    /// Measures every unmeasured tape, collapsing the memory onto the state
    /// conditioned on the observed string.
    pub fn measure_deferred(&mut self) -> Vec<usize> {
        if self.deferred == 0 {
            return Vec::new();
        }
        let r = self.n.pow(self.deferred as u32);
        let dist = self.deferred_distribution();
        let total: f64 = dist.iter().sum();
        let idx = sample_cdf(&cumulative(&dist), self.rng.gen::<f64>() * total);
        let scale = Complex64::new(1.0 / dist[idx].sqrt(), 0.0);
        self.joint = self
            .joint
            .iter()
            .skip(idx)
            .step_by(r)
            .map(|z| z * scale)
            .collect();
        let symbols = self.decode(idx);
        self.deferred = 0;
        self.history.extend_from_slice(&symbols);
        symbols
    }
}

/// Entropy of `rho = (1/N) sum_j |S_j><S_j|` from a dense Hermitian eigendecomposition.
pub fn stationary_density_entropy(mset: &MemoryStateSet) -> Result<f64> {
    let n = mset.dim();
    let w = Complex64::new(1.0 / n as f64, 0.0);
    let mut rho = DMatrix::from_element(n, n, ZERO);
    for s in mset.states() {
        rho += s * s.adjoint() * w;
    }
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = rho.symmetric_eigen();
    let spec = Spectrum::new(
        eig.eigenvalues.iter().copied().collect(),
        SpectrumMethod::DenseOracle,
        mset.n_bits(),
    )?;
    Ok(von_neumann_entropy(&spec))
}

/// Total-variation distance `1/2 sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Empirical distribution of one-step displacements `(s_{t+1} - s_t) mod N`
/// along a trajectory that starts at `start`.
pub fn displacement_histogram(start: usize, traj: &[usize], n: usize) -> Vec<f64> {
    let mut counts = vec![0usize; n];
    let mut prev = start;
    for &s in traj {
        counts[(s + n - prev) % n] += 1;
        prev = s;
    }
    let total = traj.len().max(1) as f64;
    counts.into_iter().map(|c| c as f64 / total).collect()
}

/// Header fields of a trajectory dump.
#[derive(Clone, Debug)]
pub struct TrajectoryHeader {
    pub model: String,
    pub param: Option<f64>,
    pub n_bits: u32,
    pub seed: u64,
    pub start: usize,
}

/// One `#` header line, then one symbol per line.
pub fn write_trajectory<W: Write>(mut w: W, h: &TrajectoryHeader, symbols: &[usize]) -> Result<()> {
    let param = h.param.map(|p| p.to_string()).unwrap_or_default();
    writeln!(
        w,
        "# model={} param={} n_bits={} N={} seed={} start={}",
        h.model,
        param,
        h.n_bits,
        1usize << h.n_bits,
        h.seed,
        h.start
    )?;
    for s in symbols {
        writeln!(w, "{s}")?;
    }
    Ok(())
}

/// Joint readouts as CSV, one shot per row, columns `tape1..tapeM`.
pub fn write_joint_shots<W: Write>(w: W, shots: &[Vec<usize>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let m = shots.first().map_or(0, |s| s.len());
    wtr.write_record((1..=m).map(|i| format!("tape{i}")))?;
    for s in shots {
        wtr.write_record(s.iter().map(|x| x.to_string()))?;
    }
    wtr.flush()?;
    Ok(())
}
