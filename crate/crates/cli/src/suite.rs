// SPDX-License-Identifier: Apache-2.0

//! Invariant checks run by `transducer validate`. Each check is small enough
//! to finish in well under a second.

use nalgebra::DMatrix;
use transducer_core::adiabatic::{
    composite_transfer, ideal_protocol, nu_minus_ideal, IdealProtocolSpec,
};
use transducer_core::dynamics::{
    run_protocol, run_protocol_checked, splitting_unitary_part, ProtocolConfig, Stepper,
};
use transducer_core::gaussian::{
    apply_channel, loss_channel, partial_transpose, symplectic_eigenvalues, GaussianChannel,
    GaussianState,
};
use transducer_core::optimizer::{optimize, Bound, OptimizationProblem, Parameter, Template};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn loss_semigroup() -> Outcome {
    let st = GaussianState::new(DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 2.0]), vec!["m".into()]).map_err(err)?;
    let twice = apply_channel(&apply_channel(&st, &loss_channel(0.7, 1).map_err(err)?, &[0]).map_err(err)?, &loss_channel(0.6, 1).map_err(err)?, &[0]).map_err(err)?;
    let once = apply_channel(&st, &loss_channel(0.42, 1).map_err(err)?, &[0]).map_err(err)?;
    let d = (twice.cov() - once.cov()).amax();
    ensure(d < 1e-12, format!("max deviation {d:e}"))
}

fn transpose_involution() -> Outcome {
    let labels = || vec!["a".to_string(), "b".to_string()];
    // Thermal modes of variance 3 and 1 mixed on a balanced beamsplitter:
    // classically correlated, so the transpose is again a state.
    #[rustfmt::skip]
    let cov = DMatrix::from_row_slice(4, 4, &[
        2., 0., 1., 0.,
        0., 2., 0., 1.,
        1., 0., 2., 0.,
        0., 1., 0., 2.,
    ]);
    let st = GaussianState::new(cov.clone(), labels()).map_err(err)?;
    let once = GaussianState::new(partial_transpose(&st, &[1]).map_err(err)?, labels()).map_err(err)?;
    let twice = partial_transpose(&once, &[1]).map_err(err)?;
    let d = (twice - cov).amax();
    ensure(d == 0.0, format!("max deviation {d:e}"))
}

fn rejects_amplifier_without_noise() -> Outcome {
    let gain = DMatrix::identity(2, 2) * 1.5;
    ensure(
        GaussianChannel::new(gain, DMatrix::zeros(2, 2)).is_err(),
        "noiseless amplifier rejected".into(),
    )
}

fn closed_form() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..=30 {
        let eta = 0.1 * i as f64;
        let r = ideal_protocol(&IdealProtocolSpec::equal(eta)).map_err(err)?;
        let e2 = eta * eta;
        let oracle = (1.0 + e2 * e2).sqrt() - e2;
        worst = worst.max((r.log_neg + oracle.log2()).abs());
    }
    ensure(worst < 1e-9, format!("max |ΔE_N| {worst:e}"))
}

fn composite_map() -> Outcome {
    let eta: f64 = 0.8;
    let s = composite_transfer([eta; 4]).map_err(err)?;
    let mut expected = DMatrix::identity(6, 6);
    expected[(0, 2)] = eta * eta;
    expected[(3, 1)] = -eta * eta;
    let d = (s - expected).amax();
    ensure(d < 1e-12, format!("max deviation {d:e}"))
}

fn mediator_elimination() -> Outcome {
    let cold = ideal_protocol(&IdealProtocolSpec::equal(1.5)).map_err(err)?;
    let hot = ideal_protocol(&IdealProtocolSpec::equal(1.5).with_n_m0(200.0)).map_err(err)?;
    let d = (cold.pulse_cov - hot.pulse_cov).amax();
    ensure(d < 1e-10, format!("max deviation {d:e}"))
}

fn loss_non_monotone() -> Outcome {
    let e = |eta: f64| ideal_protocol(&IdealProtocolSpec::equal(eta).with_loss(0.8)).map(|r| r.log_neg);
    let (mid, end) = (e(2.5).map_err(err)?, e(3.0).map_err(err)?);
    ensure(end < mid, format!("E_N(2.5) = {mid:.4}, E_N(3) = {end:.4}"))
}

fn splitting_symplectic() -> Outcome {
    let c = ProtocolConfig::symmetric(0.05, 200.0, 1.0, 16);
    let ch = splitting_unitary_part(&c.segments[0]).map_err(err)?;
    ensure(ch.is_symplectic(1e-12), "step transfer is symplectic to 1e-12".into())
}

fn splitting_pure() -> Outcome {
    let c = ProtocolConfig::symmetric(0.05, 200.0, 1.0, 16).with_stepper(Stepper::Splitting);
    let (_, stages) = run_protocol_checked(&c).map_err(err)?;
    let worst = stages
        .iter()
        .map(|s| (s.min - 1.0).abs().max((s.max - 1.0).abs()))
        .fold(0.0, f64::max);
    ensure(worst < 1e-6, format!("max |ν − 1| {worst:e} over {} stages", stages.len()))
}

fn bath_irrelevant_without_damping() -> Outcome {
    let c = ProtocolConfig::symmetric(0.02, 500.0, 1.0, 16);
    let a = run_protocol(&c).map_err(err)?;
    let b = run_protocol(&c.clone().with_bath(0.0, 50.0).with_n_m0(0.0)).map_err(err)?;
    ensure(a.pulse_cov == b.pulse_cov, "bit-identical pulse covariance".into())
}

fn adiabatic_consistency() -> Outcome {
    let c = ProtocolConfig::symmetric(0.01, 5000.0, 1.0, 32);
    let r = run_protocol(&c).map_err(err)?;
    let ideal = -nu_minus_ideal(1.0).log2();
    let rel = (r.log_neg - ideal).abs() / ideal;
    ensure(rel < 0.02, format!("relative deviation {rel:.2e}"))
}

fn dynamic_physicality() -> Outcome {
    let c = ProtocolConfig::symmetric(0.05, 300.0, 1.0, 16)
        .with_bath(1e-3, 20.0)
        .with_delay_loss(0.7);
    let (_, stages) = run_protocol_checked(&c).map_err(err)?;
    let min = stages.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    ensure(min >= 1.0 - 1e-6, format!("smallest symplectic eigenvalue {min:.9}"))
}

fn small_problem(seed: u64) -> OptimizationProblem {
    OptimizationProblem {
        template: Template::Adiabatic(IdealProtocolSpec::equal(2.5).with_loss(0.8)),
        free: (0..4).map(|i| (Parameter::Gain(i), Bound::new(0.0, 2.5))).collect(),
        eta_caps: None,
        budget: 250,
        restarts: 2,
        seed,
    }
}

fn optimizer_deterministic() -> Outcome {
    let a = optimize(&small_problem(4)).map_err(err)?;
    let b = optimize(&small_problem(4)).map_err(err)?;
    ensure(a == b, "identical reports".into())
}

fn optimizer_dominates() -> Outcome {
    let r = optimize(&small_problem(5)).map_err(err)?;
    ensure(
        r.best_log_neg >= r.baseline_log_neg - 1e-12 && r.restart_best.iter().all(|x| *x <= r.best_log_neg),
        format!("best {:.4}, baseline {:.4}", r.best_log_neg, r.baseline_log_neg),
    )
}

fn vacuum_spectrum() -> Outcome {
    let nu = symplectic_eigenvalues(&DMatrix::identity(6, 6)).map_err(err)?;
    let d = nu.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    ensure(d < 1e-12, format!("max |ν − 1| {d:e}"))
}

type Entry = (&'static str, &'static str, fn() -> Outcome);

/// Run every check.
pub fn run_suite() -> Vec<Check> {
    let checks: [Entry; 15] = [
        ("gaussian", "vacuum spectrum", vacuum_spectrum),
        ("gaussian", "loss semigroup", loss_semigroup),
        ("gaussian", "partial transpose involution", transpose_involution),
        ("gaussian", "complete positivity", rejects_amplifier_without_noise),
        ("adiabatic", "closed form", closed_form),
        ("adiabatic", "composite map", composite_map),
        ("adiabatic", "mediator elimination", mediator_elimination),
        ("adiabatic", "loss non-monotonicity", loss_non_monotone),
        ("dynamics", "splitting step symplectic", splitting_symplectic),
        ("dynamics", "splitting purity", splitting_pure),
        ("dynamics", "bath irrelevance at zero damping", bath_irrelevant_without_damping),
        ("dynamics", "adiabatic consistency", adiabatic_consistency),
        ("dynamics", "stage physicality", dynamic_physicality),
        ("optimizer", "determinism", optimizer_deterministic),
        ("optimizer", "dominance", optimizer_dominates),
    ];
    checks
        .into_iter()
        .map(|(module, name, f)| {
            let (passed, detail) = match f() {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            Check {
                module,
                name,
                passed,
                detail,
            }
        })
        .collect()
}

/// Exit status for a finished suite: 0 iff every check passed.
pub fn exit_code(checks: &[Check]) -> i32 {
    if checks.iter().all(|c| c.passed) {
        0
    } else {
        1
    }
}
