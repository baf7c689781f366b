// SPDX-License-Identifier: Apache-2.0

//! Gaussian simulation of a pulsed transducer in which two radiation pulses
//! are entangled by four sequential QND interactions with a shared
//! mechanical oscillator.
//!
//! * [`gaussian`]: covariance-matrix algebra and entanglement measures.
//! * [`adiabatic`]: the ideal, adiabatically eliminated protocol and its
//!   closed-form benchmarks.
//! * [`dynamics`]: time-sliced propagation with finite cavity linewidth,
//!   mechanical bath and delay-line loss.
//! * [`optimizer`]: bounded multi-start simplex search over the per-pass
//!   parameters, and parameter sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod optimizer;
pub mod protocol;

pub use error::{Error, Result};
pub use protocol::{Pulse, SimulationResult};
