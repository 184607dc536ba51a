//! Operational analysis of quantum and classical instruments.
//!
//! Decides atomicity and repeatability of instruments, extracts the
//! projection-valued measure behind an elementary property, computes
//! verifier states and their supports, classifies complementarity between
//! elementary properties, checks exclusion witnesses for weak compatibility
//! and runs randomized checks of verifier inclusion under post-processing.

pub mod classical;
pub mod compatibility;
pub mod complementarity;
pub mod error;
pub mod instruments;
pub mod linalg;
pub mod model;
pub mod quantum_ops;
pub mod randgen;
pub mod verifiers;

pub use error::{Error, Result};
pub use instruments::{ElementaryProperty, Instrument, OutcomePartition};
pub use linalg::{CMatrix, CVector, Subspace, SubspaceRelation, Tolerances, C64};
pub use quantum_ops::{ChoiMatrix, DensityState, QuantumOperation};
pub use randgen::SeededGenerator;
