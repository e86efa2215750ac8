//! Field-state simulation of light passing a chain of two-level atoms under the
//! resonant Jaynes-Cummings interaction.
//!
//! The field lives in a truncated Fock basis ([`fock`]). Each atom enters in its
//! ground state and interacts for a fixed dimensionless coupling `r = λt`
//! ([`evolution`]). After every atom the field is either traced over the atom
//! (ordinary absorption) or conditioned on the atom being found in its ground or
//! excited state ([`channels`]). Closed-form photon-number series
//! ([`oracles`]) cross-check the matrix engine, [`phase_space`] evaluates the
//! Husimi Q-function, and [`harness`] drives sweeps and the verification suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channels;
pub mod error;
pub mod evolution;
pub mod fock;
pub mod harness;
pub mod oracles;
pub mod phase_space;

pub use channels::{apply_channel, ChannelKind, ChannelOutcome};
pub use error::{Error, Result};
pub use evolution::{evolve_one_atom, EvolvedBlocks, InteractionConfig};
pub use fock::{AmplitudeVector, FieldState, InputSpec};
pub use num_complex::Complex64;
pub use phase_space::{q_function, q_peak, GridSpec, QGrid};
