//! Coherent information and transmission rates of a single-mode quantum
//! transmission line with memory.
//!
//! A train of qubits crosses a damped cavity one at a time. Each qubit
//! exchanges excitations with the cavity through a resonant Jaynes-Cummings
//! interaction; between crossings the cavity relaxes towards the vacuum.
//! When qubit-cavity phase correlations are lost between uses, the cavity is
//! fully described by its Fock populations, and the coherent information of
//! the whole train is the sum of per-use contributions.
//!
//! Modules, bottom up:
//!
//! - [`quantum`]: density matrices, von Neumann entropy, trace distance.
//! - [`cavity`]: population kick per channel use, damping propagator,
//!   steady state.
//! - [`channel`]: the single-use qubit map for a diagonal cavity state,
//!   entropy exchange and coherent information.
//! - [`capacity`]: memoryless capacity, input optimization over the steady
//!   state, rate sweeps and the forgetfulness probe.
//! - [`cli`]: the command-line front end that writes experiment tables as CSV.
//!
//! All times are dimensionless products with the coupling, `λ = 1`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod cavity;
pub mod channel;
pub mod cli;
mod error;
pub mod optimize;
pub mod quantum;
pub mod validate;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = nalgebra::Complex<f64>;
