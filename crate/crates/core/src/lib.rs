//! Time encoding of finite-rate-of-innovation signals.
//!
//! A `T`-periodic stream of `L` pulses is filtered by a sum-of-sincs kernel,
//! encoded by an integrate-and-fire time encoding machine and reconstructed
//! from the firing instants, either with the DC harmonic in the kernel
//! (matrix `A`, `K ≥ L`) or without it (matrix `B`, better conditioned,
//! `K ≥ 2L` off-grid or `K ≥ L` on a delay grid).

pub mod bench;
pub mod config;
pub mod encoder;
pub mod error;
pub mod kernel;
pub mod linalg;
pub mod model;
pub mod recovery;

pub use encoder::{encode, measurements, suggest_delta, validate_rate, FiringRecord, RateCheck, TemParams};
pub use error::{Error, Result};
pub use kernel::{bound_c, design, filter, BoundMode, FilteredSignal, KernelSpec};
pub use model::{ratio_sequence, FriSignal, FscVector, PulseShape};
pub use recovery::{
    annihilating_filter, build_matrix, omp_recover, periodize_kernel, reconstruct, reconstruct_alg1, reconstruct_alg2,
    solve_fsc, DelayModel, MatrixKind, RecoveredParams,
};
