//! Exact dynamics of a two-level emitter in a one-dimensional waveguide
//! driven by a propagating single-photon wave packet: the packet-induced
//! dynamic Stark shift, the time-dependent decay rate, the equivalent
//! master equation and the detector-side interference signals.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod figures;
pub mod generator;
pub mod lindblad;
pub mod model;
pub mod numeric;
pub mod observables;
pub mod scenario;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
