//! Sparse Pauli-basis propagation of operators in imaginary and real time.
//!
//! Operators are stored as real-weighted sums of Pauli strings
//! ([`PauliSum`]). Imaginary-time evolution of the identity under a
//! Trotterized Hamiltonian, with truncation after every gate, gives a
//! thermal state whose energy approaches the ground energy as `tau` grows.
//!
//! ```
//! use itpp::{build_tfim, Itpp, ScheduleConfig, TfimParams, TruncationPolicy};
//!
//! let h = build_tfim(&TfimParams::new(4, 1.0, 0.5)).unwrap();
//! let schedule = ScheduleConfig::new(0.05, 8.0).unwrap();
//! let out = Itpp::new(&h, schedule)
//!     .policy(TruncationPolicy::threshold(1e-6))
//!     .run()
//!     .unwrap();
//! assert!(out.trajectory.last().unwrap().energy < -3.0);
//! ```
//!
//! The core is generic over [`Real`] (`f32` or `f64`); the `*F64` and
//! `*F32` aliases name the common instantiations.

pub mod checkpoint;
pub mod error;
pub mod models;
pub mod opsum;
pub mod oracle;
pub mod pauli;
pub mod propagate;
pub mod scalar;

pub use checkpoint::Checkpoint;
pub use error::{Error, Result};
pub use models::{build_tfim, hamiltonian_from_terms, read_term_file, Hamiltonian, TfimParams};
pub use opsum::{ComplexPauliSum, PauliSum, Term, Truncation, TruncationPolicy};
pub use pauli::{Pauli, PauliString, Phase};
pub use propagate::{
    apply_imaginary_gate, apply_real_gate, expectation, expectation_squared_state, relative_error, run_itpp,
    trotter_sequence, trotter_step_gates, GateSpec, Itpp, ItppOutcome, ScheduleConfig, Trajectory,
    TrajectoryRecord,
};
pub use scalar::Real;

pub type PauliSumF64 = PauliSum<f64>;
pub type PauliSumF32 = PauliSum<f32>;
pub type HamiltonianF64 = Hamiltonian<f64>;
pub type HamiltonianF32 = Hamiltonian<f32>;
pub type TruncationPolicyF64 = TruncationPolicy<f64>;
pub type TruncationPolicyF32 = TruncationPolicy<f32>;
pub type ScheduleConfigF64 = ScheduleConfig<f64>;
pub type ScheduleConfigF32 = ScheduleConfig<f32>;
pub type TrajectoryF64 = Trajectory<f64>;
pub type TrajectoryF32 = Trajectory<f32>;
pub type CheckpointF64 = Checkpoint<f64>;
