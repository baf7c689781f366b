// SPDX-License-Identifier: Apache-2.0

//! Time-resolved Gaussian simulation of the four-pass protocol with finite
//! cavity linewidths, mechanical damping into a thermal bath and delay-line
//! loss.
//!
//! Each pulse is cut into `N` equal time slices, one bosonic mode per slice.
//! The global state holds the mechanics, both cavities, one sink mode per
//! cavity (absorbing what leaks out while the cavity idles) and every slice:
//!
//! ```text
//! [mech, cavA, cavB, sinkA, sinkB, A₀ … A_{N−1}, B₀ … B_{N−1}]
//! ```
//!
//! During a pass the slices of the active pulse meet the cavity one at a
//! time. A single step couples `(cavity, mechanics, slice)` through a fixed
//! 6x6 channel that depends only on the segment, so it is built once per
//! segment and applied `N` times. Two step rules are available:
//!
//! * [`Stepper::Propagator`] integrates the linear Langevin equations exactly
//!   over the step and projects the input and output fields onto the flat
//!   mode of the slice. Whatever the cavity emits into slice-internal modes
//!   orthogonal to the flat one is traced out, which makes the step slightly
//!   noisy but keeps it accurate for any `κ·dt`.
//! * [`Stepper::Splitting`] is a collision model: a cavity-slice beamsplitter
//!   with amplitude transmission `e^{−κ dt}`, then a QND shear between cavity
//!   and mechanics, then mechanical damping. The first two are exactly
//!   symplectic, so the global state stays pure without damping. The shear
//!   gain `g·√(2dt/κ)·(1 − e^{−κdt})/√(1 − e^{−2κdt})` reduces to `g·dt`
//!   for small steps and reproduces the adiabatic steady-state gain at any
//!   step size. The error is first order in `dt`.
//!
//! The output pulse modes are the flat (rectangular) superpositions of each
//! pulse's slices.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{
    apply_local, quadrature_indices, symplectic_eigenvalues, GaussianChannel, GaussianState,
    VACUUM_VARIANCE,
};
use crate::protocol::{Pulse, SimulationResult, PASS_ORDER, SIGN_PATTERN};

pub const MIN_SLICES: usize = 16;

/// Symplectic eigenvalues of intermediate states may not drop below
/// `1 − STAGE_PHYSICALITY_TOL`.
pub const STAGE_PHYSICALITY_TOL: f64 = 1e-6;

const MECH: usize = 0;
const FIRST_SLICE: usize = 5;

fn cavity_mode(p: Pulse) -> usize {
    1 + p.index()
}

fn sink_mode(p: Pulse) -> usize {
    3 + p.index()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stepper {
    #[default]
    Propagator,
    Splitting,
}

/// One pulse-mechanics interaction. Rates are in units of `κ_A`, times in
/// units of `1/κ_A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub pulse: Pulse,
    pub g: f64,
    pub sign: f64,
    pub tau: f64,
    pub kappa: f64,
    pub slices: usize,
}

impl SegmentConfig {
    /// `η = g √(2τ/κ)` for this pass.
    pub fn eta(&self) -> f64 {
        self.g * (2.0 * self.tau / self.kappa).sqrt()
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.slices as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossEvent {
    /// Index (0..4) of the segment after which the loss acts.
    pub after_segment: usize,
    pub pulse: Pulse,
    pub transmittance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub segments: [SegmentConfig; 4],
    pub gamma: f64,
    pub n_th: f64,
    pub n_m0: f64,
    pub loss_events: Vec<LossEvent>,
    pub idle_decay: bool,
    pub stepper: Stepper,
}

impl ProtocolConfig {
    /// Four equal passes through cavities of linewidth `kappa`, no bath, no
    /// loss, idle decay on.
    pub fn symmetric(g: f64, tau: f64, kappa: f64, slices: usize) -> Self {
        Self::asymmetric((g, tau, kappa), (g, tau, kappa), slices)
    }

    /// Pulse A passes use `(g_A, τ_A, κ_A)`, pulse B passes `(g_B, τ_B, κ_B)`.
    pub fn asymmetric(a: (f64, f64, f64), b: (f64, f64, f64), slices: usize) -> Self {
        let segments = std::array::from_fn(|i| {
            let pulse = PASS_ORDER[i];
            let (g, tau, kappa) = if pulse == Pulse::A { a } else { b };
            SegmentConfig {
                pulse,
                g,
                sign: SIGN_PATTERN[i],
                tau,
                kappa,
                slices,
            }
        });
        Self {
            segments,
            gamma: 0.0,
            n_th: 0.0,
            n_m0: 0.0,
            loss_events: Vec::new(),
            idle_decay: true,
            stepper: Stepper::default(),
        }
    }

    /// Thermal bath coupled at `gamma`; the mechanics starts in equilibrium
    /// with it.
    pub fn with_bath(mut self, gamma: f64, n_th: f64) -> Self {
        self.gamma = gamma;
        self.n_th = n_th;
        self.n_m0 = n_th;
        self
    }

    pub fn with_n_m0(mut self, n_m0: f64) -> Self {
        self.n_m0 = n_m0;
        self
    }

    /// Delay-line loss on A after pass 1 and on B after pass 2.
    pub fn with_delay_loss(mut self, transmittance: f64) -> Self {
        self.loss_events
            .retain(|e| !matches!((e.after_segment, e.pulse), (0, Pulse::A) | (1, Pulse::B)));
        self.loss_events.push(LossEvent {
            after_segment: 0,
            pulse: Pulse::A,
            transmittance,
        });
        self.loss_events.push(LossEvent {
            after_segment: 1,
            pulse: Pulse::B,
            transmittance,
        });
        self
    }

    pub fn with_stepper(mut self, stepper: Stepper) -> Self {
        self.stepper = stepper;
        self
    }

    pub fn with_slices(mut self, slices: usize) -> Self {
        for s in &mut self.segments {
            s.slices = slices;
        }
        self
    }

    pub fn slices(&self, pulse: Pulse) -> usize {
        self.segments[pulse.index()].slices
    }

    pub fn kappa(&self, pulse: Pulse) -> f64 {
        self.segments[pulse.index()].kappa
    }

    /// `η′` from the first A and first B pass; equals `η` when all passes
    /// share `g`, `τ` and `κ`.
    pub fn effective_coupling(&self) -> f64 {
        (self.segments[0].eta() * self.segments[1].eta()).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.segments.iter().enumerate() {
            let field = |name: &str| format!("segments[{i}].{name}");
            if s.pulse != PASS_ORDER[i] {
                return Err(Error::parameter(field("pulse"), "passes must run A, B, A, B"));
            }
            if !(s.g >= 0.0) || !s.g.is_finite() {
                return Err(Error::parameter(field("g"), format!("{} is not a nonnegative number", s.g)));
            }
            if s.sign != 1.0 && s.sign != -1.0 {
                return Err(Error::parameter(field("sign"), format!("{} is not ±1", s.sign)));
            }
            if !(s.tau > 0.0) || !s.tau.is_finite() {
                return Err(Error::parameter(field("tau"), format!("{} is not positive", s.tau)));
            }
            if !(s.kappa > 0.0) || !s.kappa.is_finite() {
                return Err(Error::parameter(field("kappa"), format!("{} is not positive", s.kappa)));
            }
            if s.slices < MIN_SLICES {
                return Err(Error::parameter(
                    field("slices"),
                    format!("{} is below the minimum of {MIN_SLICES}", s.slices),
                ));
            }
        }
        for (first, second) in [(0, 2), (1, 3)] {
            let (a, b) = (&self.segments[first], &self.segments[second]);
            if a.slices != b.slices {
                return Err(Error::parameter(
                    format!("segments[{second}].slices"),
                    format!("pulse {} uses {} slices on one pass and {} on the other", a.pulse, a.slices, b.slices),
                ));
            }
            if a.kappa != b.kappa {
                return Err(Error::parameter(
                    format!("segments[{second}].kappa"),
                    format!("pulse {} sees two different cavity linewidths", a.pulse),
                ));
            }
        }
        for (name, x) in [("gamma", self.gamma), ("n_th", self.n_th), ("n_m0", self.n_m0)] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(Error::parameter(name, format!("{x} is not a nonnegative number")));
            }
        }
        for (i, e) in self.loss_events.iter().enumerate() {
            if e.after_segment > 3 {
                return Err(Error::parameter(
                    format!("loss_events[{i}].after_segment"),
                    format!("{} is not a segment index", e.after_segment),
                ));
            }
            if !(0.0..=1.0).contains(&e.transmittance) {
                return Err(Error::parameter(
                    format!("loss_events[{i}].transmittance"),
                    format!("{} is outside [0, 1]", e.transmittance),
                ));
            }
        }
        Ok(())
    }
}

/// Per-step channel on `(X_c, Y_c, q, p, X_slice, Y_slice)`.
pub fn step_channel(
    segment: &SegmentConfig,
    gamma: f64,
    n_th: f64,
    stepper: Stepper,
) -> Result<GaussianChannel> {
    match stepper {
        Stepper::Propagator => propagator_step(segment, gamma, n_th),
        Stepper::Splitting => splitting_step(segment, gamma, n_th),
    }
}

/// Drift of `(X_c, Y_c, q, p)` during a pass.
fn drift(segment: &SegmentConfig, gamma: f64) -> DMatrix<f64> {
    let a = segment.sign * segment.g;
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = -segment.kappa;
    m[(1, 1)] = -segment.kappa;
    m[(2, 2)] = -0.5 * gamma;
    m[(3, 3)] = -0.5 * gamma;
    match segment.pulse {
        Pulse::A => {
            m[(0, 2)] = a;
            m[(3, 1)] = -a;
        }
        Pulse::B => {
            m[(1, 3)] = -a;
            m[(2, 0)] = a;
        }
    }
    m
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `∫₀ᵗ e^{Fs} W e^{Fᵀs} ds`, by Van Loan's block exponential on a short
/// interval followed by repeated doubling `Q(2h) = Q(h) + e^{Fh} Q(h) e^{Fᵀh}`.
fn noise_integral(f: &DMatrix<f64>, w: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = f.nrows();
    let mut h = t;
    let mut doublings = 0;
    while inf_norm(f) * h > 0.5 {
        h *= 0.5;
        doublings += 1;
    }
    let mut block = DMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(&(-f * h));
    block.view_mut((0, n), (n, n)).copy_from(&(w * h));
    block.view_mut((n, n), (n, n)).copy_from(&(f.transpose() * h));
    let e = block.exp();
    let e22 = e.view((n, n), (n, n)).into_owned();
    let e12 = e.view((0, n), (n, n)).into_owned();
    let mut q = e22.transpose() * e12;
    let mut step = (f * h).exp();
    for _ in 0..doublings {
        q = &q + &step * &q * step.transpose();
        step = &step * &step;
    }
    0.5 * (&q + q.transpose())
}

fn propagator_step(segment: &SegmentConfig, gamma: f64, n_th: f64) -> Result<GaussianChannel> {
    let dt = segment.dt();
    let kappa = segment.kappa;
    let root_dt = dt.sqrt();
    let coupling = (2.0 * kappa).sqrt();

    // Augmented state (z, a): z = (X_c, Y_c, q, p), a accumulates the output
    // field's projection on the slice's flat mode.
    let mut f = DMatrix::zeros(6, 6);
    f.view_mut((0, 0), (4, 4)).copy_from(&drift(segment, gamma));
    f[(4, 0)] = coupling / root_dt;
    f[(5, 1)] = coupling / root_dt;

    // Response to unit white input on the two field quadratures.
    let mut b = DMatrix::zeros(6, 2);
    b[(0, 0)] = coupling;
    b[(1, 1)] = coupling;
    b[(4, 0)] = -1.0 / root_dt;
    b[(5, 1)] = -1.0 / root_dt;

    // Flat input: constant drive b_in/√dt, carried as extra static state.
    let mut g = DMatrix::zeros(8, 8);
    g.view_mut((0, 0), (6, 6)).copy_from(&f);
    g.view_mut((0, 6), (6, 2)).copy_from(&(&b / root_dt));
    let e = (g * dt).exp();
    let mut transfer = DMatrix::zeros(6, 6);
    transfer.view_mut((0, 0), (6, 4)).copy_from(&e.view((0, 0), (6, 4)));
    transfer.view_mut((0, 4), (6, 2)).copy_from(&e.view((0, 6), (6, 2)));

    let mut w = &b * b.transpose() * VACUUM_VARIANCE;
    let bath = gamma * (2.0 * n_th + 1.0) * VACUUM_VARIANCE;
    w[(2, 2)] += bath;
    w[(3, 3)] += bath;
    let total = noise_integral(&f, &w, dt);

    // The flat input component is carried by `transfer`; the rest of the
    // white input (orthogonal slice modes, all vacuum) and the bath are noise.
    let flat = transfer.view((0, 4), (6, 2)).into_owned();
    let noise = total - &flat * flat.transpose() * VACUUM_VARIANCE;
    GaussianChannel::new(transfer, 0.5 * (&noise + noise.transpose()))
}

fn splitting_step(segment: &SegmentConfig, gamma: f64, n_th: f64) -> Result<GaussianChannel> {
    let dt = segment.dt();
    let c = (-segment.kappa * dt).exp();
    let s = (1.0 - c * c).sqrt();
    // (a) cavity/slice beamsplitter: c' = C c + S b, b' = S c − C b.
    let mut bs = DMatrix::identity(6, 6);
    for q in 0..2 {
        bs[(q, q)] = c;
        bs[(q, 4 + q)] = s;
        bs[(4 + q, q)] = s;
        bs[(4 + q, 4 + q)] = -c;
    }
    // (b) cavity/mechanics shear.
    let h = segment.sign * segment.g * (2.0 * dt / segment.kappa).sqrt() * (1.0 - c) / s;
    let mut shear = DMatrix::identity(6, 6);
    match segment.pulse {
        Pulse::A => {
            shear[(0, 2)] = h;
            shear[(3, 1)] = -h;
        }
        Pulse::B => {
            shear[(1, 3)] = -h;
            shear[(2, 0)] = h;
        }
    }
    // (c) mechanical damping towards the bath.
    let decay = (-gamma * dt).exp();
    let mut damp = DMatrix::identity(6, 6);
    damp[(2, 2)] = decay.sqrt();
    damp[(3, 3)] = decay.sqrt();
    let mut noise = DMatrix::zeros(6, 6);
    let added = (1.0 - decay) * (2.0 * n_th + 1.0) * VACUUM_VARIANCE;
    noise[(2, 2)] = added;
    noise[(3, 3)] = added;
    GaussianChannel::new(damp * shear * bs, noise)
}

/// The symplectic part `(b)·(a)` of a splitting step.
pub fn splitting_unitary_part(segment: &SegmentConfig) -> Result<GaussianChannel> {
    splitting_step(segment, 0.0, 0.0)
}

/// Beamsplitter between a cavity and its sink that leaves the cavity
/// amplitude scaled by `e^{−κ t}`.
fn idle_decay_channel(kappa: f64, t: f64) -> Result<GaussianChannel> {
    let c = (-kappa * t).exp();
    let s = (1.0 - c * c).sqrt();
    let mut m = DMatrix::zeros(4, 4);
    for q in 0..2 {
        m[(q, q)] = c;
        m[(q, 2 + q)] = s;
        m[(2 + q, q)] = s;
        m[(2 + q, 2 + q)] = -c;
    }
    GaussianChannel::symplectic(m)
}

/// Points in the protocol at which an observer sees the global state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Initial,
    AfterSegment(usize),
    AfterLoss(usize),
    AfterIdle(usize),
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stage::Initial => write!(f, "initial"),
            Stage::AfterSegment(i) => write!(f, "after pass {}", i + 1),
            Stage::AfterLoss(i) => write!(f, "after loss following pass {}", i + 1),
            Stage::AfterIdle(i) => write!(f, "after idle decay following pass {}", i + 1),
        }
    }
}

/// Global mode layout of a configuration.
#[derive(Debug, Clone)]
pub struct ModeLayout {
    slices_a: usize,
    slices_b: usize,
}

impl ModeLayout {
    pub fn new(config: &ProtocolConfig) -> Self {
        Self {
            slices_a: config.slices(Pulse::A),
            slices_b: config.slices(Pulse::B),
        }
    }

    pub fn n_modes(&self) -> usize {
        FIRST_SLICE + self.slices_a + self.slices_b
    }

    pub fn slice(&self, pulse: Pulse, k: usize) -> usize {
        match pulse {
            Pulse::A => FIRST_SLICE + k,
            Pulse::B => FIRST_SLICE + self.slices_a + k,
        }
    }

    pub fn slice_count(&self, pulse: Pulse) -> usize {
        match pulse {
            Pulse::A => self.slices_a,
            Pulse::B => self.slices_b,
        }
    }

    pub fn labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = ["mech", "cavA", "cavB", "sinkA", "sinkB"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        labels.extend((0..self.slices_a).map(|k| format!("A-slice-{k}")));
        labels.extend((0..self.slices_b).map(|k| format!("B-slice-{k}")));
        labels
    }

    /// 6 x 2n projector onto `(X_A, Y_A, X_B, Y_B, q, p)` with flat pulse
    /// modes.
    fn readout(&self) -> DMatrix<f64> {
        let mut w = DMatrix::zeros(6, 2 * self.n_modes());
        for (row, pulse) in [(0, Pulse::A), (2, Pulse::B)] {
            let n = self.slice_count(pulse);
            let weight = 1.0 / (n as f64).sqrt();
            for k in 0..n {
                let m = self.slice(pulse, k);
                w[(row, 2 * m)] = weight;
                w[(row + 1, 2 * m + 1)] = weight;
            }
        }
        w[(4, 2 * MECH)] = 1.0;
        w[(5, 2 * MECH + 1)] = 1.0;
        w
    }
}

/// Run the protocol and hand every intermediate global covariance to
/// `observer`. Returns the final global covariance.
pub fn evolve_observed<F>(config: &ProtocolConfig, mut observer: F) -> Result<DMatrix<f64>>
where
    F: FnMut(Stage, &DMatrix<f64>) -> Result<()>,
{
    config.validate()?;
    let layout = ModeLayout::new(config);
    let dim = 2 * layout.n_modes();
    let mut cov = DMatrix::identity(dim, dim) * VACUUM_VARIANCE;
    let mech0 = (2.0 * config.n_m0 + 1.0) * VACUUM_VARIANCE;
    cov[(0, 0)] = mech0;
    cov[(1, 1)] = mech0;
    observer(Stage::Initial, &cov)?;

    for (i, segment) in config.segments.iter().enumerate() {
        let step = step_channel(segment, config.gamma, config.n_th, config.stepper)?;
        let cavity = cavity_mode(segment.pulse);
        for k in 0..segment.slices {
            let idx = quadrature_indices(&[cavity, MECH, layout.slice(segment.pulse, k)]);
            apply_local(&mut cov, &idx, step.transfer(), Some(step.noise()));
        }
        observer(Stage::AfterSegment(i), &cov)?;

        let mut lossy = false;
        for event in config.loss_events.iter().filter(|e| e.after_segment == i) {
            let t = event.transmittance;
            let a = DMatrix::identity(2, 2) * t.sqrt();
            let n = DMatrix::identity(2, 2) * ((1.0 - t) * VACUUM_VARIANCE);
            for k in 0..layout.slice_count(event.pulse) {
                let idx = quadrature_indices(&[layout.slice(event.pulse, k)]);
                apply_local(&mut cov, &idx, &a, Some(&n));
            }
            lossy = true;
        }
        if lossy {
            observer(Stage::AfterLoss(i), &cov)?;
        }

        // The cavity waits out the next pass before its pulse returns.
        if config.idle_decay && i < 2 {
            let idle = idle_decay_channel(segment.kappa, config.segments[i + 1].tau)?;
            let idx = quadrature_indices(&[cavity, sink_mode(segment.pulse)]);
            apply_local(&mut cov, &idx, idle.transfer(), None);
            observer(Stage::AfterIdle(i), &cov)?;
        }
    }
    let sym = 0.5 * (&cov + cov.transpose());
    Ok(sym)
}

/// Final global state including cavities, sinks and every slice.
pub fn final_state(config: &ProtocolConfig) -> Result<GaussianState> {
    let cov = evolve_observed(config, |_, _| Ok(()))?;
    GaussianState::from_parts(cov, ModeLayout::new(config).labels())
}

/// Minimum and maximum symplectic eigenvalue at one protocol stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageSpectrum {
    pub stage: Stage,
    pub min: f64,
    pub max: f64,
}

/// Run with a physicality check after every stage. Fails with
/// [`Error::NotPhysical`] if any symplectic eigenvalue drops below
/// `1 − STAGE_PHYSICALITY_TOL`.
pub fn run_protocol_checked(config: &ProtocolConfig) -> Result<(SimulationResult, Vec<StageSpectrum>)> {
    let mut spectra = Vec::new();
    let cov = evolve_observed(config, |stage, cov| {
        let nu = symplectic_eigenvalues(cov)?;
        let min = nu.iter().copied().fold(f64::INFINITY, f64::min);
        let max = nu.iter().copied().fold(0.0, f64::max);
        if min < 1.0 - STAGE_PHYSICALITY_TOL {
            return Err(Error::NotPhysical(format!(
                "{stage}: symplectic eigenvalue {min:.10}"
            )));
        }
        spectra.push(StageSpectrum { stage, min, max });
        Ok(())
    })?;
    Ok((readout(config, &cov)?, spectra))
}

fn readout(config: &ProtocolConfig, cov: &DMatrix<f64>) -> Result<SimulationResult> {
    let w = ModeLayout::new(config).readout();
    let reduced = &w * cov * w.transpose();
    let reduced = 0.5 * (&reduced + reduced.transpose());
    let dt = config.segments.iter().map(SegmentConfig::dt).collect();
    let result = SimulationResult::from_three_mode(&reduced, dt)?;
    let nu = symplectic_eigenvalues(&result.pulse_cov)?;
    if nu[0] < 1.0 - STAGE_PHYSICALITY_TOL {
        return Err(Error::NotPhysical(format!(
            "output pulses have symplectic eigenvalue {:.10}",
            nu[0]
        )));
    }
    Ok(result)
}

/// Run the four-pass protocol and read out the flat pulse modes.
pub fn run_protocol(config: &ProtocolConfig) -> Result<SimulationResult> {
    let cov = evolve_observed(config, |_, _| Ok(()))?;
    readout(config, &cov)
}

/// Results at `levels` successive slice doublings.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub results: Vec<SimulationResult>,
    /// `|E_N(N·2^{k+1}) − E_N(N·2^k)|`.
    pub differences: Vec<f64>,
    /// First-order Richardson extrapolation `2E(2N) − E(N)` of the last
    /// two levels.
    pub extrapolated: f64,
}

impl ConvergenceReport {
    /// Ratios of consecutive differences; about 2 for first-order stepping.
    pub fn reduction_ratios(&self) -> Vec<f64> {
        self.differences.windows(2).map(|w| w[0] / w[1]).collect()
    }
}

/// Rerun `config` with slice counts `N, 2N, …, 2^{levels−1} N`.
pub fn convergence_run(config: &ProtocolConfig, levels: usize) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::parameter("levels", "need at least two refinement levels"));
    }
    config.validate()?;
    let mut results = (0..levels)
        .into_par_iter()
        .map(|level| {
            let mut refined = config.clone();
            for s in &mut refined.segments {
                s.slices <<= level;
            }
            run_protocol(&refined)
        })
        .collect::<Result<Vec<_>>>()?;
    let differences: Vec<f64> = results
        .windows(2)
        .map(|w| (w[1].log_neg - w[0].log_neg).abs())
        .collect();
    for (k, r) in results.iter_mut().enumerate() {
        r.convergence_estimate = Some(differences[k.min(differences.len() - 1)]);
    }
    let n = results.len();
    let extrapolated = 2.0 * results[n - 1].log_neg - results[n - 2].log_neg;
    Ok(ConvergenceReport {
        results,
        differences,
        extrapolated,
    })
}
