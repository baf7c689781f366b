// SPDX-License-Identifier: Apache-2.0

//! Pieces shared by the adiabatic and time-resolved models: pulse labels,
//! the four-pass interaction order and the result record.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::gaussian::{log_negativity, nu_minus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pulse {
    A,
    B,
}

impl Pulse {
    pub fn index(self) -> usize {
        match self {
            Pulse::A => 0,
            Pulse::B => 1,
        }
    }
}

impl std::fmt::Display for Pulse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Pulse::A => "A",
            Pulse::B => "B",
        })
    }
}

/// Which pulse drives each of the four passes.
pub const PASS_ORDER: [Pulse; 4] = [Pulse::A, Pulse::B, Pulse::A, Pulse::B];

/// Signs of the four signed couplings `ϰ = (−g₁, +g₂, +g₃, −g₄)`. This
/// pattern closes the mediator's phase-space loop.
pub const SIGN_PATTERN: [f64; 4] = [-1.0, 1.0, 1.0, -1.0];

/// Outcome of one protocol run.
///
/// Pulse quadratures are ordered `(X_A, Y_A, X_B, Y_B)`, mechanics `(q, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub pulse_cov: DMatrix<f64>,
    pub mech_cov: DMatrix<f64>,
    /// 4x2 pulse-mechanics block.
    pub cross_cov: DMatrix<f64>,
    pub log_neg: f64,
    pub nu_minus: f64,
    /// Time step per pass; empty for the adiabatic model.
    pub dt_used: Vec<f64>,
    /// `|E_N(dt) − E_N(dt/2)|` when a refinement run was made.
    pub convergence_estimate: Option<f64>,
}

impl SimulationResult {
    /// Build from a 6x6 covariance ordered `(A, B, mech)`.
    pub(crate) fn from_three_mode(cov: &DMatrix<f64>, dt_used: Vec<f64>) -> Result<Self> {
        let pulse_cov = cov.view((0, 0), (4, 4)).into_owned();
        let nu = nu_minus(&pulse_cov)?;
        Ok(Self {
            log_neg: log_negativity(&pulse_cov)?,
            nu_minus: nu,
            mech_cov: cov.view((4, 4), (2, 2)).into_owned(),
            cross_cov: cov.view((0, 4), (4, 2)).into_owned(),
            pulse_cov,
            dt_used,
            convergence_estimate: None,
        })
    }

    /// `−log₂ ν₋` without the clamp at zero.
    pub fn signed_log_neg(&self) -> f64 {
        -self.nu_minus.log2()
    }
}
