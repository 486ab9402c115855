//! Performance analysis of an out-band energy-harvesting interweave
//! cognitive-radio link under κ-μ shadowed fading.
//!
//! - [`numerics`]: special functions, dBm conversion, quadrature.
//! - [`fading`]: the integer-parameter κ-μ shadowed gain law.
//! - [`analysis`]: closed-form effective range, transmission and outage
//!   probabilities, throughput.
//! - [`sim`]: slotted Monte Carlo simulation of the energy buffer.
//! - [`validation`]: invariant suites that pit closed forms against
//!   independent oracles.
//! - [`cli`]: configuration files, reports and the command front end.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fading;
pub mod numerics;
pub mod sim;
pub mod validation;

pub use error::{Error, Result};
