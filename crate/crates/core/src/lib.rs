//! Reconstruction of sparse linear dynamical networks from steady-state
//! perturbation experiments.
//!
//! A network is a pair `(Q, P)` of transfer matrices with `Y = QY + PU`,
//! `Q` hollow and `P` diagonal. Each row of `[Q P]` is recovered from data as
//! a sparse solution of `[A1 A2] [x1; x2] = b`, where `x2 = P(i,i)` is known
//! to be nonzero:
//!
//! - [`network`]: network types, random and ring generators.
//! - [`experiment`]: steady-state simulation and per-row sensing systems.
//! - [`recovery`]: QR elimination of the known-nonzero block, uniqueness
//!   certificates, exhaustive `l0` and `l1` (basis pursuit) solvers, coherence.
//! - [`structure`]: what single-input experiments reveal at lower resolution.
//! - [`design`]: random, biased and targeted experiment selection.
//! - [`bench`]: reproducible benchmark tables.

pub mod bench;
pub mod cli;
pub mod design;
mod error;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod network;
pub mod recovery;
pub mod structure;

pub use error::{Error, Result};
