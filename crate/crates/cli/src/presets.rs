// SPDX-License-Identifier: Apache-2.0

//! Named parameter sets for the three reference scenarios.
//!
//! Rates are in units of `κ_A` (which is `κ` in the symmetric set), times in
//! `1/κ_A`.

use anyhow::{bail, Result};
use transducer_core::adiabatic::IdealProtocolSpec;
use transducer_core::dynamics::ProtocolConfig;
use transducer_core::optimizer::{Bound, SweepAxis, SweepOptimization, Template};

use crate::config::PresetName;

pub mod fig3 {
    pub const KAPPA: f64 = 1.0;
    pub const GAMMA: f64 = 1.5e-6;
    pub const G_MIN: f64 = 0.0;
    pub const G_MAX: f64 = 0.4;
    pub const TAU_MIN: f64 = 7e2;
    pub const TAU_MAX: f64 = 9e4;
    /// Duration held fixed on the coupling route.
    pub const ROUTE_TAU: f64 = TAU_MIN;
    /// Coupling held fixed on the duration route.
    pub const ROUTE_G: f64 = 0.01;
    pub const N_TH: f64 = 200.0;
}

pub mod fig4 {
    pub const KAPPA_A: f64 = 1.0;
    /// In units of `κ_A`.
    pub const KAPPA_B: f64 = 0.01;
    /// In units of `κ_B`.
    pub const GAMMA_PER_KAPPA_B: f64 = 1.5e-4;
    pub const G_A_MIN: f64 = 0.0;
    pub const G_A_MAX: f64 = 0.07;
    /// In units of `κ_B`.
    pub const G_B_MAX_PER_KAPPA_B: f64 = 0.1;
    pub const TAU_A_MIN: f64 = 2.2e2;
    pub const TAU_A_MAX: f64 = 4.4e3;
    /// In units of `1/κ_B`.
    pub const TAU_B_MIN_KAPPA_B: f64 = 2.3;
    pub const TAU_B_MAX_KAPPA_B: f64 = 113.0;
    /// Delay-line transmittance for the low-loss scan.
    pub const T_LS: f64 = 0.95;

    pub fn gamma() -> f64 {
        GAMMA_PER_KAPPA_B * KAPPA_B
    }

    pub fn g_b_max() -> f64 {
        G_B_MAX_PER_KAPPA_B * KAPPA_B
    }

    pub fn tau_b_range() -> (f64, f64) {
        (TAU_B_MIN_KAPPA_B / KAPPA_B, TAU_B_MAX_KAPPA_B / KAPPA_B)
    }
}

pub const FIG2_GRID: (f64, f64, f64) = (0.0, 3.0, 0.1);
pub const FIG3_GRID: (f64, f64, f64) = (0.4, 4.0, 0.2);
pub const FIG4_GRID: (f64, f64, f64) = (0.1, 1.3, 0.1);
pub const DEFAULT_SLICES: usize = 64;

/// One curve of a preset: a template and the axis it is swept along.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub template: Template,
    pub axis: SweepAxis,
    pub optimization: Option<SweepOptimization>,
}

/// Options shared by all presets.
#[derive(Debug, Clone, Default)]
pub struct PresetOptions {
    pub t_ls: Option<Vec<f64>>,
    pub n_th: Option<f64>,
    pub optimize: Option<bool>,
    pub slices: Option<usize>,
    pub budget: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: u64,
}

fn opt_settings(o: &PresetOptions, coupling: Option<[Bound; 4]>, duration: Option<[Bound; 4]>, cap_eta: bool) -> SweepOptimization {
    SweepOptimization {
        budget: o.budget.unwrap_or(1500),
        restarts: o.restarts.unwrap_or(4),
        seed: o.seed,
        coupling_bounds: coupling,
        duration_bounds: duration,
        cap_eta,
    }
}

/// Adiabatic curves, one per transmittance, optimized over `0 ≤ η_i ≤ η`
/// unless disabled.
pub fn fig2(o: &PresetOptions) -> Result<Vec<Series>> {
    let Some(ts) = &o.t_ls else {
        bail!("fig2 needs the delay-line transmittance(s) T_ls as input (--t-ls)");
    };
    let optimize = o.optimize.unwrap_or(true);
    Ok(ts
        .iter()
        .map(|&t| Series {
            name: format!("T={t}"),
            template: Template::Adiabatic(IdealProtocolSpec::equal(0.0).with_loss(t)),
            axis: SweepAxis::Eta,
            optimization: optimize.then(|| opt_settings(o, None, None, false)),
        })
        .collect())
}

/// Symmetric cavities with a hot bath: `η` reached by raising `g` at fixed
/// `τ`, or by raising `τ` at fixed `g`. The optional optimization acts on the
/// coupling route, with each pass capped at the row's `η`.
pub fn fig3(o: &PresetOptions) -> Result<Vec<Series>> {
    let slices = o.slices.unwrap_or(DEFAULT_SLICES);
    let n_th = o.n_th.unwrap_or(fig3::N_TH);
    let ts = o.t_ls.clone().unwrap_or_else(|| vec![1.0]);
    let optimize = o.optimize.unwrap_or(false);
    let mut out = Vec::new();
    for t in ts {
        let base = |g: f64, tau: f64| {
            let c = ProtocolConfig::symmetric(g, tau, fig3::KAPPA, slices).with_bath(fig3::GAMMA, n_th);
            if t < 1.0 {
                c.with_delay_loss(t)
            } else {
                c
            }
        };
        // Both templates sit at η = 1; the route rescales them.
        let g_route = base((fig3::KAPPA / (2.0 * fig3::ROUTE_TAU)).sqrt(), fig3::ROUTE_TAU);
        let tau_route = base(fig3::ROUTE_G, fig3::KAPPA / (2.0 * fig3::ROUTE_G * fig3::ROUTE_G));
        let suffix = if t < 1.0 { format!(",T={t}") } else { String::new() };
        out.push(Series {
            name: format!("g-route{suffix}"),
            template: Template::Dynamic(g_route),
            axis: SweepAxis::CouplingRoute,
            optimization: optimize.then(|| {
                opt_settings(
                    o,
                    Some([Bound::new(fig3::G_MIN, fig3::G_MAX); 4]),
                    Some([Bound::new(fig3::TAU_MIN, fig3::TAU_MAX); 4]),
                    true,
                )
            }),
        });
        out.push(Series {
            name: format!("tau-route{suffix}"),
            template: Template::Dynamic(tau_route),
            axis: SweepAxis::DurationRoute,
            optimization: None,
        });
    }
    Ok(out)
}

pub fn fig4_bounds() -> ([Bound; 4], [Bound; 4]) {
    let ga = Bound::new(fig4::G_A_MIN, fig4::G_A_MAX);
    let gb = Bound::new(0.0, fig4::g_b_max());
    let ta = Bound::new(fig4::TAU_A_MIN, fig4::TAU_A_MAX);
    let (lo, hi) = fig4::tau_b_range();
    let tb = Bound::new(lo, hi);
    ([ga, gb, ga, gb], [ta, tb, ta, tb])
}

/// The fig4 equal-parameter template: couplings at half their ceilings,
/// durations at the geometric centres of their ranges.
pub fn fig4_template(n_th: f64, t_ls: f64, slices: usize) -> ProtocolConfig {
    let (tb_lo, tb_hi) = fig4::tau_b_range();
    let c = ProtocolConfig::asymmetric(
        (
            0.5 * fig4::G_A_MAX,
            (fig4::TAU_A_MIN * fig4::TAU_A_MAX).sqrt(),
            fig4::KAPPA_A,
        ),
        (0.5 * fig4::g_b_max(), (tb_lo * tb_hi).sqrt(), fig4::KAPPA_B),
        slices,
    )
    .with_bath(fig4::gamma(), n_th);
    if t_ls < 1.0 {
        c.with_delay_loss(t_ls)
    } else {
        c
    }
}

/// Asymmetric cavities swept along `η′` by scaling the couplings. With a hot
/// bath each row is also optimized over all couplings and durations within
/// the preset ranges.
pub fn fig4_series(o: &PresetOptions) -> Result<Vec<Series>> {
    let slices = o.slices.unwrap_or(DEFAULT_SLICES);
    let n_th = o.n_th.unwrap_or(0.0);
    let ts = o.t_ls.clone().unwrap_or_else(|| vec![fig4::T_LS]);
    let optimize = o.optimize.unwrap_or(n_th > 0.0);
    let (g, tau) = fig4_bounds();
    Ok(ts
        .into_iter()
        .map(|t| Series {
            name: format!("T={t}"),
            template: Template::Dynamic(fig4_template(n_th, t, slices)),
            axis: SweepAxis::CouplingRoute,
            optimization: optimize.then(|| opt_settings(o, Some(g), Some(tau), false)),
        })
        .collect())
}

pub fn series(name: PresetName, o: &PresetOptions) -> Result<Vec<Series>> {
    match name {
        PresetName::Fig2 => fig2(o),
        PresetName::Fig3 => fig3(o),
        PresetName::Fig4 => fig4_series(o),
    }
}

pub fn default_grid(name: PresetName) -> (f64, f64, f64) {
    match name {
        PresetName::Fig2 => FIG2_GRID,
        PresetName::Fig3 => FIG3_GRID,
        PresetName::Fig4 => FIG4_GRID,
    }
}

/// Reject grid points whose rows would leave the preset's parameter ranges.
pub fn check_grid(name: PresetName, series: &[Series], grid: &[f64]) -> Result<()> {
    if name == PresetName::Fig2 {
        return Ok(());
    }
    let (gb, tb) = match name {
        PresetName::Fig3 => (
            [Bound::new(fig3::G_MIN, fig3::G_MAX); 4],
            [Bound::new(fig3::TAU_MIN, fig3::TAU_MAX); 4],
        ),
        _ => fig4_bounds(),
    };
    for s in series {
        for &x in grid {
            let row = transducer_core::optimizer::template_at(&s.template, s.axis, x)?;
            let Template::Dynamic(c) = row else { continue };
            for (i, seg) in c.segments.iter().enumerate() {
                let ok = (gb[i].lo..=gb[i].hi).contains(&seg.g) && (tb[i].lo..=tb[i].hi).contains(&seg.tau);
                if !ok {
                    bail!(
                        "grid: {x} puts series {} outside the preset ranges (pass {}: g = {}, tau = {})",
                        s.name,
                        i + 1,
                        seg.g,
                        seg.tau
                    );
                }
            }
        }
    }
    Ok(())
}

/// Parameter listing in `key = value` form; ranges are `[lo, hi]`.
pub fn dump(name: PresetName) -> String {
    match name {
        PresetName::Fig2 => format!(
            "preset = fig2\nmodel = adiabatic\nt_ls = required input\neta = [{}, {}] step {}\ngain_bounds = [0, eta] per pass\n",
            FIG2_GRID.0, FIG2_GRID.1, FIG2_GRID.2
        ),
        PresetName::Fig3 => format!(
            "preset = fig3\nunits = rates in kappa, times in 1/kappa\nkappa = {}\ngamma = {:e} kappa\ng = [{}, {}] kappa\ntau = [{:e}, {:e}] / kappa\nn_th = {}\ng_route_tau = {:e} / kappa\ntau_route_g = {} kappa\n",
            fig3::KAPPA,
            fig3::GAMMA,
            fig3::G_MIN,
            fig3::G_MAX,
            fig3::TAU_MIN,
            fig3::TAU_MAX,
            fig3::N_TH,
            fig3::ROUTE_TAU,
            fig3::ROUTE_G
        ),
        PresetName::Fig4 => format!(
            "preset = fig4\nunits = rates in kappa_A, times in 1/kappa_A\nkappa_A = {}\nkappa_B = {} kappa_A\ngamma = {:e} kappa_B\ng_A = [{}, {}] kappa_A\ng_B = [{}, {}] kappa_B\ntau_A = [{:e}, {:e}] / kappa_A\ntau_B = [{}, {}] / kappa_B\nt_ls = {}\n",
            fig4::KAPPA_A,
            fig4::KAPPA_B,
            fig4::GAMMA_PER_KAPPA_B,
            fig4::G_A_MIN,
            fig4::G_A_MAX,
            0,
            fig4::G_B_MAX_PER_KAPPA_B,
            fig4::TAU_A_MIN,
            fig4::TAU_A_MAX,
            fig4::TAU_B_MIN_KAPPA_B,
            fig4::TAU_B_MAX_KAPPA_B,
            fig4::T_LS
        ),
    }
}
