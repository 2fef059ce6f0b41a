//! Synthesis of SNAP-gate and displacement sequences for a truncated bosonic
//! mode.
//!
//! A target operation on a few Fock levels is approximated by a product of
//! building blocks `B(alpha, theta) = D(alpha)^dagger S(theta) D(alpha)`.
//! Sequences are built in two stages: a greedy hierarchical initializer
//! ([`init`]) followed by Adam-based co-optimization of all parameters with
//! analytic gradients ([`finetune`]). The [`native`] module converts the
//! result into the interleaved hardware form, and [`io`] runs whole jobs.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.
//!
//! ```
//! use snapcomp::{initialize, InitConfig, Problem};
//! use snapcomp::targets::{logical_op_target, Code, LogicalGate};
//!
//! let target = logical_op_target(&LogicalGate::Identity.matrix::<f64>(), Code::Trivial, 20).unwrap();
//! let problem = Problem::new(target).unwrap();
//! let (seq, _) = initialize(&problem, &InitConfig::with_length(2)).unwrap();
//! assert!((problem.fidelity(&seq).unwrap() - 1.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod finetune;
pub mod fock;
pub mod init;
pub mod io;
pub mod native;
pub mod objectives;
pub mod scalar;
pub mod sequence;
pub mod targets;

pub use error::{Error, Result};
pub use finetune::{finetune, finetune_with, FinetuneOutcome, OptimizerState, TrainConfig, TrainRecord, TrainStatus, TrainTrace};
pub use fock::{SnapPhases, StateBatch};
pub use init::{initialize, insertion_order, optimal_block, InitConfig, InitTrace};
pub use native::{from_native, to_native, NativeSequence};
pub use objectives::{ObjectiveReport, Problem};
pub use scalar::Real;
pub use sequence::{Block, BlockSequence};
pub use targets::TargetOperation;

pub type Sequence = sequence::BlockSequence<f64>;
pub type NativeGates = native::NativeSequence<f64>;
pub type Target = targets::TargetOperation<f64>;
pub type Space = fock::FockSpace<f64>;
pub type Phases = fock::SnapPhases<f64>;
pub type Matrix = fock::ComplexMatrix<f64>;
pub type State = fock::StateVector<f64>;
