//! Optimal qubit mapping with SWAP absorption.
//!
//! Places and schedules the two-qubit gates of a program onto a hardware
//! coupling graph, inserting explicit SWAPs and absorbing SWAPs into
//! adjacent U(4) gates. The problem is encoded exactly as a constraint
//! system ([`encode`]), discharged through pluggable backends with outer
//! objective loops ([`solve`]), and every model is re-verified independently
//! ([`solution`]). [`bench`] generates the evaluation workloads.

pub mod arch;
pub mod bench;
pub mod encode;
pub mod error;
pub mod qprog;
pub mod solution;
pub mod solve;

pub use error::{Error, Result};
