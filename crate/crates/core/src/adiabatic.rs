// SPDX-License-Identifier: Apache-2.0

//! Ideal transducer with the cavities adiabatically eliminated and no
//! mechanical decoherence. Each pass is a single QND shear between the
//! integrated pulse mode and the mechanics; loss sits in the delay lines.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{apply_channel, loss_channel, thermal_mech_state, GaussianChannel, GaussianState};
use crate::protocol::{SimulationResult, PASS_ORDER, SIGN_PATTERN};

/// `A`: `H ∝ q·Y` (writes `q` into the field's `X`, kicks `p` by `Y`).
/// `B`: `H ∝ p·X` (writes `p` into the field's `Y`, kicks `q` by `X`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QndKind {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QndGateSpec {
    pub kind: QndKind,
    pub gain: f64,
    pub sign: f64,
}

impl QndGateSpec {
    pub fn new(kind: QndKind, gain: f64, sign: f64) -> Result<Self> {
        let spec = Self { kind, gain, sign };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.gain >= 0.0) || !self.gain.is_finite() {
            return Err(Error::parameter("gain", format!("{} is not a nonnegative number", self.gain)));
        }
        if self.sign != 1.0 && self.sign != -1.0 {
            return Err(Error::parameter("sign", format!("{} is not ±1", self.sign)));
        }
        Ok(())
    }
}

/// Four-pass ideal protocol with delay-line loss on pulse A after pass 1 and
/// on pulse B after pass 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealProtocolSpec {
    pub gains: [f64; 4],
    pub loss_after_pass1: f64,
    pub loss_after_pass2: f64,
    pub n_m0: f64,
}

impl IdealProtocolSpec {
    /// Equal gains, lossless, ground-state mechanics.
    pub fn equal(eta: f64) -> Self {
        Self {
            gains: [eta; 4],
            loss_after_pass1: 1.0,
            loss_after_pass2: 1.0,
            n_m0: 0.0,
        }
    }

    pub fn with_loss(mut self, transmittance: f64) -> Self {
        self.loss_after_pass1 = transmittance;
        self.loss_after_pass2 = transmittance;
        self
    }

    pub fn with_n_m0(mut self, n_m0: f64) -> Self {
        self.n_m0 = n_m0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (i, g) in self.gains.iter().enumerate() {
            if !(*g >= 0.0) || !g.is_finite() {
                return Err(Error::parameter(format!("gains[{i}]"), format!("{g} is not a nonnegative number")));
            }
        }
        for (name, t) in [
            ("loss_after_pass1", self.loss_after_pass1),
            ("loss_after_pass2", self.loss_after_pass2),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::parameter(name, format!("{t} is outside [0, 1]")));
            }
        }
        if !(self.n_m0 >= 0.0) || !self.n_m0.is_finite() {
            return Err(Error::parameter("n_m0", format!("{} is not a nonnegative number", self.n_m0)));
        }
        Ok(())
    }
}

/// Single-pass map on `(X, Y, q, p)` for signed gain `a = sign·η`:
///
/// * A: `X → X + a q`, `p → p − a Y`
/// * B: `Y → Y − a p`, `q → q + a X`
pub fn qnd_gate_symplectic(spec: &QndGateSpec) -> Result<GaussianChannel> {
    spec.validate()?;
    let a = spec.sign * spec.gain;
    let mut s = DMatrix::identity(4, 4);
    match spec.kind {
        QndKind::A => {
            s[(0, 2)] = a;
            s[(3, 1)] = -a;
        }
        QndKind::B => {
            s[(1, 3)] = -a;
            s[(2, 0)] = a;
        }
    }
    GaussianChannel::symplectic(s)
}

/// Lossless four-pass transfer matrix on `(X_A, Y_A, X_B, Y_B, q, p)`.
pub fn composite_transfer(gains: [f64; 4]) -> Result<DMatrix<f64>> {
    let mut total = DMatrix::identity(6, 6);
    for (pass, &gain) in gains.iter().enumerate() {
        let gate = qnd_gate_symplectic(&QndGateSpec::new(kind_of_pass(pass), gain, SIGN_PATTERN[pass])?)?;
        let pulse = PASS_ORDER[pass].index();
        let idx = [2 * pulse, 2 * pulse + 1, 4, 5];
        let mut s = DMatrix::identity(6, 6);
        for (i, &r) in idx.iter().enumerate() {
            for (j, &c) in idx.iter().enumerate() {
                s[(r, c)] = gate.transfer()[(i, j)];
            }
        }
        total = s * total;
    }
    Ok(total)
}

fn kind_of_pass(pass: usize) -> QndKind {
    match PASS_ORDER[pass] {
        crate::protocol::Pulse::A => QndKind::A,
        crate::protocol::Pulse::B => QndKind::B,
    }
}

/// Run the ideal protocol from `vacuum ⊗ vacuum ⊗ thermal(n_m0)`.
pub fn ideal_protocol(spec: &IdealProtocolSpec) -> Result<SimulationResult> {
    let state = ideal_final_state(spec)?;
    SimulationResult::from_three_mode(state.cov(), Vec::new())
}

/// Final three-mode state `(A, B, mech)` of the ideal protocol.
pub fn ideal_final_state(spec: &IdealProtocolSpec) -> Result<GaussianState> {
    spec.validate()?;
    let mut state = GaussianState::vacuum(["A", "B"])?.product(&thermal_mech_state(spec.n_m0)?)?;
    for (pass, (&gain, &sign)) in spec.gains.iter().zip(&SIGN_PATTERN).enumerate() {
        let kind = kind_of_pass(pass);
        let gate = qnd_gate_symplectic(&QndGateSpec::new(kind, gain, sign)?)?;
        let pulse = if kind == QndKind::A { 0 } else { 1 };
        state = apply_channel(&state, &gate, &[pulse, 2])?;
        let loss = match pass {
            0 => Some(spec.loss_after_pass1),
            1 => Some(spec.loss_after_pass2),
            _ => None,
        };
        if let Some(t) = loss {
            state = apply_channel(&state, &loss_channel(t, 1)?, &[pulse])?;
        }
    }
    Ok(state)
}

/// Closed-form `ν₋` of the lossless ideal transducer,
/// `√(1 − 2η⁴[√(1 + η⁻⁴) − 1])`, evaluated in the cancellation-free form
/// `√(1 − 2η² / (√(1 + η⁴) + η²))`.
pub fn nu_minus_ideal(eta: f64) -> f64 {
    if eta == 0.0 {
        return 1.0;
    }
    let e2 = eta * eta;
    (1.0 - 2.0 * e2 / ((1.0 + e2 * e2).sqrt() + e2)).sqrt()
}

/// Weak-coupling, small-loss approximation `1 − ½(1 + T)η²`.
pub fn nu_minus_small_loss(eta: f64, transmittance: f64) -> f64 {
    1.0 - 0.5 * (1.0 + transmittance) * eta * eta
}

/// Coefficient `(2/ln 2)·√T` of the linear growth of `∂E_N/∂η` near `η = 0`.
pub fn logneg_slope_origin(transmittance: f64) -> f64 {
    2.0 / std::f64::consts::LN_2 * transmittance.sqrt()
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::parameter(name, format!("{x} is not a positive number")))
    }
}

/// `η = g √(2τ/κ)`.
pub fn effective_coupling(g: f64, tau: f64, kappa: f64) -> Result<f64> {
    if !(g >= 0.0) {
        return Err(Error::parameter("g", format!("{g} is negative")));
    }
    positive("tau", tau)?;
    positive("kappa", kappa)?;
    Ok(g * (2.0 * tau / kappa).sqrt())
}

/// `η′ = √(2 g_A g_B √(τ_A τ_B / (κ_A κ_B)))`.
pub fn effective_coupling_asym(
    g_a: f64,
    g_b: f64,
    tau_a: f64,
    tau_b: f64,
    kappa_a: f64,
    kappa_b: f64,
) -> Result<f64> {
    for (name, g) in [("g_A", g_a), ("g_B", g_b)] {
        if !(g >= 0.0) {
            return Err(Error::parameter(name, format!("{g} is negative")));
        }
    }
    positive("tau_A", tau_a)?;
    positive("tau_B", tau_b)?;
    positive("kappa_A", kappa_a)?;
    positive("kappa_B", kappa_b)?;
    Ok((2.0 * g_a * g_b * (tau_a * tau_b / (kappa_a * kappa_b)).sqrt()).sqrt())
}
