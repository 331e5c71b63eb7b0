//! Memory costs of simulating cyclic random walks to finite precision.
//!
//! A bead on a unit ring is kicked by a displacement drawn from a shift
//! density `P(x)` every step. Rounding the position to `n` bits gives a
//! circulant Markov chain on `N = 2^n` sites. This crate computes
//!
//! * the classical statistical complexity `C_mu` (the entropy of the causal
//!   states, which is `n` bits for generic shift densities), and
//! * the quantum memory cost `H_Q`, the von Neumann entropy of the ensemble
//!   of memory states `|S_j> = sum_k sqrt(p_kj) |k>`.
//!
//! `H_Q` is obtained in `O(N log N)` from the discrete Fourier transform of
//! `sqrt(p)`, and cross-checked against a dense eigendecomposition of the
//! Gram matrix and against the large-`N` closed forms for Gaussian and
//! top-hat shift densities. A small statevector simulator runs the quantum
//! step circuit itself and checks its output statistics against the chain.
//!
//! ```
//! use cyclic_qsim::{discretize, gram_spectrum_dft, von_neumann_entropy, ShiftModel};
//!
//! let model = ShiftModel::gaussian(0.0, 0.01).unwrap();
//! let col = discretize(&model, 10).unwrap();
//! let h_q = von_neumann_entropy(&gram_spectrum_dft(&col).unwrap());
//! assert!(h_q < 5.5 && h_q > 4.5);
//! ```

pub mod asymptotics;
pub mod circuit;
pub mod discretizer;
mod error;
pub(crate) mod quad;
pub mod shift_models;
pub mod spectral;
pub mod sweep;

pub use asymptotics::{
    asymptotic_gram_function, gaussian_asymptotic_spectrum, gaussian_entropy_bound,
    tophat_asymptotic_spectrum, tophat_entropy_bound, tophat_entropy_bound_rounded,
    AsymptoticSpectrum,
};
pub use circuit::{
    build_memory_states, build_step_unitary, stationary_density_entropy, MemoryStateSet,
    SimulatorState, StepMode, StepOutcome, StepUnitary,
};
pub use discretizer::{
    causal_structure, discretize, discretize_with, sample_classical_trajectory, CausalStructure,
    Discretization, TransitionColumn,
};
pub use error::{Error, Result};
pub use shift_models::{ModelKind, ShiftModel};
pub use spectral::{
    dense_oracle_spectrum, gram_spectrum_dft, overlap_profile, von_neumann_entropy, Spectrum,
    SpectrumMethod,
};
pub use sweep::{run_sweep, SweepConfig, SweepMode, SweepOutput, SweepRecord};
