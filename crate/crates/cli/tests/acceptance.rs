// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use transducer_cli::presets::{self, PresetOptions};
use transducer_core::adiabatic::{composite_transfer, ideal_protocol, IdealProtocolSpec};
use transducer_core::dynamics::{
    convergence_run, final_state, run_protocol, run_protocol_checked, LossEvent, ProtocolConfig,
    Stepper,
};
use transducer_core::optimizer::{sweep, SweepRow, SweepSettings};
use transducer_core::Pulse;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// `√(1 − 2η⁴[√(1 + η⁻⁴) − 1])`, evaluated as written.
fn closed_form_nu(eta: f64) -> f64 {
    if eta == 0.0 {
        return 1.0;
    }
    let e4 = eta.powi(4);
    (1.0 - 2.0 * e4 * ((1.0 + 1.0 / e4).sqrt() - 1.0)).sqrt()
}

fn ideal_en(eta: f64, t: f64) -> f64 {
    ideal_protocol(&IdealProtocolSpec::equal(eta).with_loss(t)).unwrap().log_neg
}

fn closed_form_equivalence() -> Outcome {
    let grid: Vec<f64> = (0..50).map(|i| 3.0 * i as f64 / 49.0).collect();
    let start = Instant::now();
    let values: Vec<f64> = grid.iter().map(|&e| ideal_en(e, 1.0)).collect();
    let elapsed = start.elapsed();
    let worst = grid
        .iter()
        .zip(&values)
        .map(|(&e, v)| (v - (-closed_form_nu(e).log2()).max(0.0)).abs())
        .fold(0.0, f64::max);
    check(
        worst < 1e-10 && elapsed < Duration::from_secs(1),
        format!("max |ΔE_N| = {worst:.2e} over 50 points, {elapsed:.2?}"),
    )
}

fn composite_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for eta in [0.3, 1.0, 2.2] {
        let e2 = eta * eta;
        // Rows/columns (X_A, Y_A, X_B, Y_B, q, p).
        #[rustfmt::skip]
        let expected = DMatrix::from_row_slice(6, 6, &[
            1., 0., e2, 0., 0., 0.,
            0., 1., 0., 0., 0., 0.,
            0., 0., 1., 0., 0., 0.,
            0., -e2, 0., 1., 0., 0.,
            0., 0., 0., 0., 1., 0.,
            0., 0., 0., 0., 0., 1.,
        ]);
        let s = composite_transfer([eta; 4]).map_err(|e| e.to_string())?;
        worst = worst.max((s - expected).amax());
    }
    check(worst <= 1e-12, format!("max entry deviation {worst:.2e} at η ∈ {{0.3, 1, 2.2}}"))
}

fn mediator_elimination() -> Outcome {
    let mut adiabatic: f64 = 0.0;
    for eta in [0.5, 1.0, 2.0] {
        let cold = ideal_protocol(&IdealProtocolSpec::equal(eta)).unwrap().pulse_cov;
        for n in [10.0, 200.0] {
            let hot = ideal_protocol(&IdealProtocolSpec::equal(eta).with_n_m0(n)).unwrap().pulse_cov;
            adiabatic = adiabatic.max((&hot - &cold).amax());
        }
    }
    let base = ProtocolConfig::symmetric(0.01, 2e4, 1.0, 64);
    let en: Vec<f64> = [0.0, 10.0, 200.0]
        .iter()
        .map(|&n| run_protocol(&base.clone().with_n_m0(n)).unwrap().log_neg)
        .collect();
    let spread = en.iter().fold(f64::MIN, |a, &b| a.max(b)) - en.iter().fold(f64::MAX, |a, &b| a.min(b));
    check(
        adiabatic < 1e-10 && spread < 1e-3,
        format!("adiabatic max |ΔV| = {adiabatic:.2e}; dynamic E_N spread = {spread:.2e}"),
    )
}

fn deep_adiabatic_convergence() -> Outcome {
    let target = 3.029;
    let oracle = -closed_form_nu(2.0).log2();
    let start = Instant::now();
    let r = run_protocol(&ProtocolConfig::symmetric(0.01, 2e4, 1.0, 512)).unwrap();
    let elapsed = start.elapsed();
    let rel_target = (r.log_neg - target).abs() / target;
    let rel_oracle = (r.log_neg - oracle).abs() / oracle;

    let split = ProtocolConfig::symmetric(0.01, 2e4, 1.0, 64).with_stepper(Stepper::Splitting);
    let conv = convergence_run(&split, 5).unwrap();
    let ratios = conv.reduction_ratios();
    let shrinking = conv.differences.windows(2).all(|w| w[1] < w[0]);
    let last = *ratios.last().unwrap();
    check(
        rel_target < 0.02 && rel_oracle < 0.02 && shrinking && (last - 2.0).abs() < 0.25 && elapsed < Duration::from_secs(120),
        format!(
            "E_N(N=512) = {:.5} (closed form {oracle:.5}, off by {:.2}%) in {elapsed:.2?}; splitting |ΔE_N| {:?}, ratios {:?}",
            r.log_neg,
            100.0 * rel_oracle,
            conv.differences.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>(),
            ratios.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>()
        ),
    )
}

fn small_loss_law() -> Outcome {
    let eta = 0.05;
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for t in [1.0, 0.9, 0.8] {
        let slope = (ideal_en(eta + h, t) - ideal_en(eta - h, t)) / (2.0 * h);
        let predicted = 2.0 / std::f64::consts::LN_2 * t.sqrt() * eta;
        worst = worst.max((slope - predicted).abs() / predicted);
    }
    let nu = ideal_protocol(&IdealProtocolSpec::equal(0.1)).unwrap().nu_minus;
    let dev = (nu - 0.99).abs();
    check(
        worst < 0.05 && dev <= 0.1f64.powi(4),
        format!("worst slope deviation {:.3}%; ν₋(0.1) = {nu:.6}, |ν₋ − 0.99| = {dev:.2e}", 100.0 * worst),
    )
}

fn loss_non_monotone() -> Outcome {
    let grid: Vec<f64> = (0..=60).map(|i| 0.05 * i as f64).collect();
    let en: Vec<f64> = grid.iter().map(|&e| ideal_en(e, 0.8)).collect();
    let (imax, max) = en
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let later_below = en[imax + 1..].iter().any(|&v| v < max);
    check(
        imax > 0 && imax < en.len() - 1 && later_below,
        format!("maximum {max:.4} at η = {:.2}; E_N(3) = {:.4}", grid[imax], en[en.len() - 1]),
    )
}

fn rows(series: &presets::Series, grid: &[f64]) -> Vec<SweepRow> {
    sweep(
        &series.template,
        series.axis,
        grid,
        &SweepSettings {
            optimize: series.optimization.clone(),
            refine: false,
        },
    )
    .unwrap()
}

fn bath_asymmetry() -> Outcome {
    let grid = [0.5, 1.0, 1.5, 2.0, 2.5];
    let opts = PresetOptions {
        n_th: Some(200.0),
        slices: Some(32),
        ..PresetOptions::default()
    };
    let s = presets::fig3(&opts).unwrap();
    let g_rows = rows(&s[0], &grid);
    let tau_rows = rows(&s[1], &grid);
    let ok = g_rows.iter().zip(&tau_rows).all(|(g, t)| t.log_neg <= g.log_neg);
    check(
        ok,
        format!(
            "g-route {:?}, τ-route {:?}",
            g_rows.iter().map(|r| format!("{:.3}", r.log_neg)).collect::<Vec<_>>(),
            tau_rows.iter().map(|r| format!("{:.3}", r.log_neg)).collect::<Vec<_>>()
        ),
    )
}

fn optimization_rescue() -> Outcome {
    let grid = [0.5, 1.0, 2.0, 3.0];
    let opts = PresetOptions {
        t_ls: Some(vec![0.8]),
        n_th: Some(200.0),
        optimize: Some(true),
        slices: Some(32),
        seed: 1,
        ..PresetOptions::default()
    };
    let s = presets::fig3(&opts).unwrap();
    let r = rows(&s[0], &grid);
    let dominance = r
        .iter()
        .all(|row| row.optimized.as_ref().unwrap().log_neg >= row.log_neg - 1e-12);
    let rescued = r
        .iter()
        .any(|row| row.log_neg == 0.0 && row.optimized.as_ref().unwrap().log_neg > 0.0);
    check(
        dominance && rescued,
        format!(
            "T = 0.8, n_th = 200: equal {:?}, optimized {:?}",
            r.iter().map(|x| format!("{:.3}", x.log_neg)).collect::<Vec<_>>(),
            r.iter()
                .map(|x| format!("{:.3}", x.optimized.as_ref().unwrap().log_neg))
                .collect::<Vec<_>>()
        ),
    )
}

fn random_config(rng: &mut ChaCha8Rng) -> ProtocolConfig {
    let kb = if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.01..1.0) };
    let mut c = ProtocolConfig::asymmetric(
        (rng.random_range(0.0..0.2), rng.random_range(5.0..2000.0), 1.0),
        (rng.random_range(0.0..0.2), rng.random_range(5.0..2000.0), kb),
        16,
    );
    for s in &mut c.segments {
        s.g = rng.random_range(0.0..0.2);
        s.tau = rng.random_range(5.0..2000.0);
    }
    c.gamma = rng.random_range(0.0..1e-3);
    c.n_th = rng.random_range(0.0..300.0);
    c.n_m0 = rng.random_range(0.0..300.0);
    c.idle_decay = rng.random_bool(0.5);
    c.stepper = if rng.random_bool(0.5) { Stepper::Propagator } else { Stepper::Splitting };
    for _ in 0..rng.random_range(0..4) {
        c.loss_events.push(LossEvent {
            after_segment: rng.random_range(0..4),
            pulse: if rng.random_bool(0.5) { Pulse::A } else { Pulse::B },
            transmittance: rng.random_range(0.0..=1.0),
        });
    }
    c
}

fn physicality_fuzz() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut lowest = f64::INFINITY;
    for k in 0..1000 {
        let c = random_config(&mut rng);
        c.validate().map_err(|e| format!("config {k} invalid: {e}"))?;
        let (_, stages) = run_protocol_checked(&c).map_err(|e| format!("config {k}: {e}"))?;
        lowest = stages.iter().map(|s| s.min).fold(lowest, f64::min);
    }
    let mut worst_purity: f64 = 0.0;
    let mut propagator_mixing: f64 = 0.0;
    for _ in 0..100 {
        let mut c = random_config(&mut rng);
        c.gamma = 0.0;
        c.n_th = 0.0;
        c.n_m0 = 0.0;
        c.loss_events.clear();
        c.stepper = Stepper::Splitting;
        let nu = final_state(&c).unwrap().symplectic_eigenvalues().unwrap();
        worst_purity = nu.iter().map(|x| (x - 1.0).abs()).fold(worst_purity, f64::max);
        c.stepper = Stepper::Propagator;
        let nu = final_state(&c).unwrap().symplectic_eigenvalues().unwrap();
        propagator_mixing = nu.iter().map(|x| (x - 1.0).abs()).fold(propagator_mixing, f64::max);
    }
    check(
        lowest >= 1.0 - 1e-6 && worst_purity <= 1e-6,
        format!(
            "lowest eigenvalue over 1000 runs {lowest:.9}; splitting-stepper purity |ν − 1| ≤ {worst_purity:.2e} over 100 runs (propagator stepper: {propagator_mixing:.2e})"
        ),
    )
}

fn asymmetric_preset() -> Outcome {
    let cold = PresetOptions {
        n_th: Some(0.0),
        slices: Some(32),
        ..PresetOptions::default()
    };
    let grid: Vec<f64> = vec![0.31, 0.4, 0.6, 0.8, 1.0, 1.2, 1.3];
    let s = presets::fig4_series(&cold).unwrap();
    let low = rows(&s[0], &grid);
    let low_ok = low.iter().all(|r| r.log_neg > 0.0);

    let hot = PresetOptions {
        n_th: Some(200.0),
        slices: Some(32),
        seed: 1,
        ..PresetOptions::default()
    };
    let s = presets::fig4_series(&hot).unwrap();
    let hot_grid = [0.4, 0.8, 1.2];
    let high = rows(&s[0], &hot_grid);
    let equal_zero = high.iter().all(|r| r.log_neg == 0.0);
    let restored = high.iter().all(|r| r.optimized.as_ref().unwrap().log_neg > 0.0);
    check(
        low_ok && equal_zero && restored,
        format!(
            "n_th = 0: min E_N {:.4} for η′ ≥ 0.31; n_th = 200: equal {:?}, optimized {:?}",
            low.iter().map(|r| r.log_neg).fold(f64::INFINITY, f64::min),
            high.iter().map(|r| format!("{:.3}", r.log_neg)).collect::<Vec<_>>(),
            high.iter()
                .map(|r| format!("{:.3}", r.optimized.as_ref().unwrap().log_neg))
                .collect::<Vec<_>>()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("closed-form equivalence", closed_form_equivalence),
        ("composite-map identity", composite_identity),
        ("mediator elimination", mediator_elimination),
        ("deep-adiabatic convergence", deep_adiabatic_convergence),
        ("small-loss law", small_loss_law),
        ("loss non-monotonicity", loss_non_monotone),
        ("bath asymmetry in g vs tau", bath_asymmetry),
        ("optimization rescue", optimization_rescue),
        ("physicality fuzz", physicality_fuzz),
        ("asymmetric preset", asymmetric_preset),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2}. {name} [{:.1?}]: {detail}", i + 1, start.elapsed());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
