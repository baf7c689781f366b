// SPDX-License-Identifier: Apache-2.0

//! Front end for the pulsed optomechanical transducer: TOML configuration,
//! named parameter presets, CSV output and the invariant suite.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;
pub mod suite;
