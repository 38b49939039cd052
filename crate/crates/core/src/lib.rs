//! Quantum-generator behavior modeling and insider-threat scoring.
//!
//! * [`qsim`]: dense RY/CZ state-vector simulator with parameter-shift
//!   Jacobians.
//! * [`qgan`]: circuit generator trained against a classical discriminator.
//! * [`features`]: CERT-style log ingestion, daily feature extraction,
//!   normalization and a synthetic log generator.
//! * [`bde`]: convolutional scoring network, reconstruction errors,
//!   thresholds and verdicts.
//! * [`pipeline`]: configuration-driven orchestration used by the `qbde`
//!   binary.

pub mod bde;
pub mod error;
pub mod features;
pub mod optim;
pub mod pipeline;
pub mod qgan;
pub mod qsim;

pub use error::{Error, Result};
pub use qgan::{DiscriminatorNet, TrainConfig, TrainTrace};
pub use qsim::{Entangler, GeneratorParams, ProbVector, StateVector};
