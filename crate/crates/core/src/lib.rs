//! Impartial k-selection from nomination graphs when the mechanism is handed
//! a (possibly wrong) prediction of the optimal set.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] holds the nomination-graph model, degree queries and the
//!   random / worst-case instance generators.
//! * [`mechanisms`] implements every selection mechanism as a single-draw
//!   executor over an explicit random stream.
//! * [`exact`] computes exact rational selection distributions by total
//!   enumeration and runs impartiality, symmetrization, correlation and
//!   upper-bound audits on top of them.
//! * [`analysis`] evaluates the closed-form consistency/robustness formulas.
//! * [`eval`] is the Monte Carlo harness used by the command-line tool.

pub mod analysis;
pub mod error;
pub mod eval;
pub mod exact;
pub mod graph;
pub mod mechanisms;
pub mod rational;

pub use error::{Error, Result};
pub use graph::{NominationGraph, Prediction};
pub use mechanisms::MechanismSpec;
pub use rational::RationalParam;
