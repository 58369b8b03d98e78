//! Multicore optical fibres as quantum channels.
//!
//! The crate models a `d`-core fibre with crosstalk and dephasing as a
//! channel on `d`-level states, checks that a parameter set is physical,
//! propagates states, and certifies the entanglement of the state produced
//! by sending half of a maximally entangled pair through the fibre. Diagonal
//! symmetric targets can be designed backwards into fibre parameters, and
//! their bound entanglement is assessed through the completely positive /
//! doubly nonnegative matrix cones.

pub mod cli;
pub mod cones;
pub mod entstates;
pub mod error;
pub mod matcore;
pub mod mcfchannel;
pub mod pipeline;
pub mod qstate;

pub use error::{Error, Result};
