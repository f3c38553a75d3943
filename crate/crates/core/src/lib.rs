//! Reduce a program to a 1-minimal form that keeps a model's prediction.
//!
//! The pipeline: split text into [`unit::AtomicUnit`]s ([`granularity`]),
//! run [`reduction::ddmin`] against an [`oracle::OracleClient`] with an
//! optional [`validity`] gate, then measure the result ([`analysis`]).
//! [`harness`] drives whole corpora.

pub mod analysis;
pub mod granularity;
pub mod harness;
pub mod oracle;
pub mod reduction;
pub mod unit;
pub mod validity;

pub use analysis::DdPassStats;
pub use granularity::{Granularity, Language};
pub use oracle::{OracleClient, Prediction};
pub use reduction::{ddmin, verify_one_minimal, ReductionConfig, ReductionResult};
pub use unit::{AtomicUnit, ProgramSlice, Uid, UnitKind};
