//! Machine-designed collective entanglement witnesses.
//!
//! The crate samples random two-qubit and qubit-qutrit density matrices,
//! simulates two-copy collective measurements (one qubit from each copy is
//! projected onto the singlet, the remaining subsystems are measured
//! locally), trains a small neural regressor of Negativity on the
//! measurement outcomes and characterizes the resulting witness with ROC
//! curves against analytic baselines (Negativity, CHSH, fully entangled
//! fraction).
//!
//! Module map:
//!
//! - [`qlinalg`]: small dense complex matrices, Jacobi eigenvalues, Haar unitaries, seeded streams.
//! - [`states`]: random states, partial transpose, Negativity, the two-copy state.
//! - [`measure`]: local effects, singlet projection, conditional probabilities, presets.
//! - [`dataset`]: balanced generation, stratified splits, CSV + sidecar persistence.
//! - [`model`]: the `[B, 32, 16, 1]` regressor, Adam training with early stopping.
//! - [`eval`]: ROC/AUC and the analytic baseline witnesses.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod measure;
pub mod model;
pub mod qlinalg;
pub mod states;

pub use error::{Error, Result};
pub use qlinalg::{CMat, Rng, C64};
pub use states::{CollectiveState, DensityMatrix, SystemKind};
