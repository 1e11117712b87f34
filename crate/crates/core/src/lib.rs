//! Privacy-budget planning for a partitioned, rotating user population.
//!
//! The crate is organised bottom-up:
//!
//! * [`rdp`] – Rényi-DP curves, conversions, composition, subsampling
//!   amplification and the per-block filter check.
//! * [`population`] – user groups, the sliding activation window, budget
//!   unlocking and per-block consumption ledgers.
//! * [`segmentation`] – request records, segments induced by a batch, and
//!   contested-segment pruning.
//! * [`allocation`] – the per-round optimization problem and its solvers.
//! * [`workload`] – the synthetic request generator.
//! * [`harness`] – the round-loop simulator, file formats, policies and reports.

pub mod allocation;
pub mod error;
pub mod exec;
pub mod harness;
pub mod population;
pub mod rdp;
pub mod segmentation;
pub mod workload;

pub use error::{Error, Result};
pub use exec::Exec;
