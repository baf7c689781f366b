// SPDX-License-Identifier: Apache-2.0

//! Bounded derivative-free maximization of the log-negativity over per-pass
//! parameters, and sweeps along the effective coupling.
//!
//! The search runs Nelder-Mead in coordinates normalized to the unit box,
//! projecting every trial point back onto the box. Before any local search
//! the template's own (equal-parameter) point and every corner of the box are
//! evaluated, so the result never falls below the baseline. The first local
//! search starts from the baseline; further restarts start from seeded
//! uniform draws.
//!
//! The target is `−log₂ ν₋`, which equals `E_N` whenever the latter is
//! positive but keeps a slope where `E_N` is clamped at zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{ideal_protocol, IdealProtocolSpec};
use crate::dynamics::{run_protocol, ProtocolConfig};
use crate::error::{Error, Result};
use crate::protocol::{Pulse, SimulationResult};

/// Normalized simplex diameter below which a local search stops.
pub const SIMPLEX_TOL: f64 = 1e-4;

const INITIAL_STEP: f64 = 0.1;

/// The model an objective evaluates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Template {
    Adiabatic(IdealProtocolSpec),
    Dynamic(ProtocolConfig),
}

impl Template {
    pub fn evaluate(&self) -> Result<SimulationResult> {
        match self {
            Template::Adiabatic(spec) => ideal_protocol(spec),
            Template::Dynamic(cfg) => run_protocol(cfg),
        }
    }

    /// `η` per pass: the gains themselves, or `g √(2τ/κ)`.
    pub fn pass_etas(&self) -> [f64; 4] {
        match self {
            Template::Adiabatic(spec) => spec.gains,
            Template::Dynamic(cfg) => std::array::from_fn(|i| cfg.segments[i].eta()),
        }
    }

    /// Parameters reported in sweep tables: the four gains, or the four
    /// couplings followed by the four durations.
    pub fn describe(&self) -> Vec<f64> {
        match self {
            Template::Adiabatic(spec) => spec.gains.to_vec(),
            Template::Dynamic(cfg) => cfg
                .segments
                .iter()
                .map(|s| s.g)
                .chain(cfg.segments.iter().map(|s| s.tau))
                .collect(),
        }
    }
}

/// A free coordinate of the search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parameter {
    /// Adiabatic gain `η_i` of pass `i`.
    Gain(usize),
    /// Coupling `g_i` of pass `i`.
    Coupling(usize),
    /// Duration `τ_i` of pass `i`.
    Duration(usize),
    /// Shared duration of both passes of one pulse.
    PulseDuration(Pulse),
}

impl Parameter {
    fn get(&self, t: &Template) -> Result<f64> {
        match (self, t) {
            (Parameter::Gain(i), Template::Adiabatic(spec)) if *i < 4 => Ok(spec.gains[*i]),
            (Parameter::Coupling(i), Template::Dynamic(cfg)) if *i < 4 => Ok(cfg.segments[*i].g),
            (Parameter::Duration(i), Template::Dynamic(cfg)) if *i < 4 => Ok(cfg.segments[*i].tau),
            (Parameter::PulseDuration(p), Template::Dynamic(cfg)) => Ok(cfg.segments[p.index()].tau),
            _ => Err(Error::parameter(
                format!("{self:?}"),
                "does not apply to this template",
            )),
        }
    }

    fn set(&self, t: &mut Template, value: f64) {
        match (self, t) {
            (Parameter::Gain(i), Template::Adiabatic(spec)) => spec.gains[*i] = value,
            (Parameter::Coupling(i), Template::Dynamic(cfg)) => cfg.segments[*i].g = value,
            (Parameter::Duration(i), Template::Dynamic(cfg)) => cfg.segments[*i].tau = value,
            (Parameter::PulseDuration(p), Template::Dynamic(cfg)) => {
                cfg.segments[p.index()].tau = value;
                cfg.segments[p.index() + 2].tau = value;
            }
            _ => unreachable!("checked by OptimizationProblem::validate"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationProblem {
    pub template: Template,
    pub free: Vec<(Parameter, Bound)>,
    /// Per-pass ceiling on `η_i = g_i √(2τ_i/κ_i)` for dynamic templates,
    /// enforced by lowering `g_i`.
    pub eta_caps: Option<[f64; 4]>,
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationReport {
    /// Free-parameter values of the best point, after any `η` cap.
    pub best_params: Vec<f64>,
    pub best_template: Template,
    pub best_log_neg: f64,
    pub best_nu_minus: f64,
    pub baseline_log_neg: f64,
    pub improvement_over_equal: f64,
    pub evaluations_used: usize,
    /// Best `E_N` of each local search, in restart order.
    pub restart_best: Vec<f64>,
    /// Best-so-far `E_N` after each evaluation, candidates first and then
    /// the restarts in order.
    pub history: Vec<f64>,
}

impl OptimizationProblem {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::parameter("restarts", "must be positive"));
        }
        for (p, b) in &self.free {
            p.get(&self.template)?;
            if !b.lo.is_finite() || !b.hi.is_finite() || b.lo > b.hi {
                return Err(Error::parameter(
                    format!("bounds of {p:?}"),
                    format!("[{}, {}] is not a finite nonempty interval", b.lo, b.hi),
                ));
            }
        }
        if let Some(caps) = &self.eta_caps {
            if !matches!(self.template, Template::Dynamic(_)) {
                return Err(Error::parameter("eta_caps", "only apply to dynamic templates"));
            }
            if caps.iter().any(|c| !(*c >= 0.0)) {
                return Err(Error::parameter("eta_caps", "caps must be nonnegative"));
            }
            if self
                .free
                .iter()
                .any(|(p, b)| matches!(p, Parameter::Coupling(_)) && b.lo != 0.0)
            {
                return Err(Error::parameter(
                    "eta_caps",
                    "capped couplings need a lower bound of zero",
                ));
            }
        }
        let need = 1 + self.corner_count() + self.restarts * self.min_local_budget();
        if self.budget < need {
            return Err(Error::parameter(
                "budget",
                format!("{} evaluations cannot cover baseline, corners and {} restarts (need {need})", self.budget, self.restarts),
            ));
        }
        Ok(())
    }

    fn active(&self) -> Vec<usize> {
        (0..self.free.len()).filter(|&i| self.free[i].1.width() > 0.0).collect()
    }

    fn corner_count(&self) -> usize {
        let d = self.active().len();
        if d == 0 {
            0
        } else {
            1usize << d
        }
    }

    fn min_local_budget(&self) -> usize {
        2 * (self.active().len() + 1)
    }

    fn baseline(&self) -> Result<Vec<f64>> {
        self.free
            .iter()
            .map(|(p, b)| {
                let x = p.get(&self.template)?;
                if b.contains(x) {
                    Ok(x)
                } else {
                    Err(Error::parameter(
                        format!("{p:?}"),
                        format!("baseline value {x} lies outside [{}, {}]", b.lo, b.hi),
                    ))
                }
            })
            .collect()
    }

    /// Configure the template at `params`, apply `η` caps, and return the
    /// configured template with the effective parameter values.
    pub fn configure(&self, params: &[f64]) -> Result<(Template, Vec<f64>)> {
        if params.len() != self.free.len() {
            return Err(Error::Dimension(format!(
                "{} parameters for {} free coordinates",
                params.len(),
                self.free.len()
            )));
        }
        let mut t = self.template.clone();
        for ((p, b), &x) in self.free.iter().zip(params) {
            if !b.contains(x) {
                return Err(Error::parameter(
                    format!("{p:?}"),
                    format!("{x} lies outside [{}, {}]", b.lo, b.hi),
                ));
            }
            p.set(&mut t, x);
        }
        if let (Some(caps), Template::Dynamic(cfg)) = (&self.eta_caps, &mut t) {
            for (seg, cap) in cfg.segments.iter_mut().zip(caps) {
                let per_unit = (2.0 * seg.tau / seg.kappa).sqrt();
                if seg.g * per_unit > *cap {
                    seg.g = cap / per_unit;
                }
            }
        }
        let effective = self
            .free
            .iter()
            .map(|(p, _)| p.get(&t))
            .collect::<Result<Vec<_>>>()?;
        Ok((t, effective))
    }

    fn evaluate(&self, params: &[f64]) -> Result<(SimulationResult, Template, Vec<f64>)> {
        let wrap = |e: Error| Error::Objective {
            params: params.to_vec(),
            source: Box::new(e),
        };
        let (t, effective) = self.configure(params).map_err(wrap)?;
        let r = t.evaluate().map_err(wrap)?;
        Ok((r, t, effective))
    }

    fn to_params(&self, u: &[f64], active: &[usize], base: &[f64]) -> Vec<f64> {
        let mut x = base.to_vec();
        for (k, &i) in active.iter().enumerate() {
            let b = &self.free[i].1;
            x[i] = (b.lo + b.width() * u[k].clamp(0.0, 1.0)).clamp(b.lo, b.hi);
        }
        x
    }

    fn to_unit(&self, x: &[f64], active: &[usize]) -> Vec<f64> {
        active
            .iter()
            .map(|&i| {
                let b = &self.free[i].1;
                (x[i] - b.lo) / b.width()
            })
            .collect()
    }
}

struct Candidate {
    signed: f64,
    result: SimulationResult,
    template: Template,
    params: Vec<f64>,
}

impl Candidate {
    fn better_than(&self, other: &Candidate) -> bool {
        self.signed > other.signed
    }
}

struct LocalRun {
    best: Candidate,
    history: Vec<f64>,
}

/// Nelder-Mead on the unit box, maximizing the signed log-negativity.
fn local_search(
    problem: &OptimizationProblem,
    active: &[usize],
    base: &[f64],
    start: Vec<f64>,
    budget: usize,
) -> Result<LocalRun> {
    let d = active.len();
    let mut history = Vec::new();
    let mut best: Option<Candidate> = None;
    let eval = |u: &[f64], history: &mut Vec<f64>, best: &mut Option<Candidate>| -> Result<f64> {
        let x = problem.to_params(u, active, base);
        let (result, template, params) = problem.evaluate(&x)?;
        let cand = Candidate {
            signed: result.signed_log_neg(),
            result,
            template,
            params,
        };
        let value = cand.signed;
        if best.as_ref().is_none_or(|b| cand.better_than(b)) {
            *best = Some(cand);
        }
        history.push(best.as_ref().map(|b| b.result.log_neg).unwrap_or(0.0));
        Ok(-value)
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(start.clone());
    for k in 0..d {
        let mut v = start.clone();
        v[k] = if v[k] + INITIAL_STEP <= 1.0 {
            v[k] + INITIAL_STEP
        } else {
            v[k] - INITIAL_STEP
        };
        simplex.push(v);
    }
    let mut values = Vec::with_capacity(d + 1);
    for v in &simplex {
        values.push(eval(v, &mut history, &mut best)?);
    }

    let project = |v: Vec<f64>| v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect::<Vec<_>>();
    while history.len() < budget {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter < SIMPLEX_TOL {
            break;
        }

        let centroid: Vec<f64> = (0..d)
            .map(|k| simplex[..d].iter().map(|v| v[k]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            project(
                centroid
                    .iter()
                    .zip(&simplex[d])
                    .map(|(c, w)| c + t * (w - c))
                    .collect(),
            )
        };

        let reflected = along(-1.0);
        let fr = eval(&reflected, &mut history, &mut best)?;
        if fr < values[0] {
            let expanded = along(-2.0);
            let fe = eval(&expanded, &mut history, &mut best)?;
            if fe < fr {
                simplex[d] = expanded;
                values[d] = fe;
            } else {
                simplex[d] = reflected;
                values[d] = fr;
            }
            continue;
        }
        if fr < values[d - 1] {
            simplex[d] = reflected;
            values[d] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[d] {
            let c = along(-0.5);
            let f = eval(&c, &mut history, &mut best)?;
            (c, f)
        } else {
            let c = along(0.5);
            let f = eval(&c, &mut history, &mut best)?;
            (c, f)
        };
        if fc < values[d].min(fr) {
            simplex[d] = contracted;
            values[d] = fc;
            continue;
        }
        for i in 1..=d {
            if history.len() >= budget {
                break;
            }
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            values[i] = eval(&shrunk, &mut history, &mut best)?;
            simplex[i] = shrunk;
        }
    }
    Ok(LocalRun {
        best: best.expect("simplex evaluated at least once"),
        history,
    })
}

/// Maximize `E_N` over the free parameters.
pub fn optimize(problem: &OptimizationProblem) -> Result<OptimizationReport> {
    problem.validate()?;
    let base = problem.baseline()?;
    let active = problem.active();

    let (baseline_result, baseline_template, baseline_params) = problem.evaluate(&base)?;
    let baseline_log_neg = baseline_result.log_neg;
    let mut best = Candidate {
        signed: baseline_result.signed_log_neg(),
        result: baseline_result,
        template: baseline_template,
        params: baseline_params,
    };
    let mut history = vec![best.result.log_neg];

    if active.is_empty() {
        return Ok(OptimizationReport {
            best_params: best.params,
            best_template: best.template,
            best_log_neg: best.result.log_neg,
            best_nu_minus: best.result.nu_minus,
            baseline_log_neg,
            improvement_over_equal: 0.0,
            evaluations_used: 1,
            restart_best: Vec::new(),
            history,
        });
    }

    let d = active.len();
    let corners: Vec<Vec<f64>> = (0..(1usize << d))
        .map(|mask| (0..d).map(|k| ((mask >> k) & 1) as f64).collect())
        .collect();
    let corner_results = corners
        .par_iter()
        .map(|u| problem.evaluate(&problem.to_params(u, &active, &base)))
        .collect::<Result<Vec<_>>>()?;
    for (result, template, params) in corner_results {
        let cand = Candidate {
            signed: result.signed_log_neg(),
            result,
            template,
            params,
        };
        if cand.better_than(&best) {
            best = cand;
        }
        history.push(best.result.log_neg);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut starts = vec![problem.to_unit(&base, &active)];
    for _ in 1..problem.restarts {
        starts.push((0..d).map(|_| rng.random::<f64>()).collect());
    }
    let local_budget = (problem.budget - history.len()) / problem.restarts;
    let runs = starts
        .into_par_iter()
        .map(|start| local_search(problem, &active, &base, start, local_budget))
        .collect::<Result<Vec<_>>>()?;

    let mut evaluations = history.len();
    let mut restart_best = Vec::with_capacity(runs.len());
    for run in runs {
        evaluations += run.history.len();
        restart_best.push(run.best.result.log_neg);
        let floor = best.result.log_neg;
        history.extend(run.history.iter().map(|&h| h.max(floor)));
        if run.best.better_than(&best) {
            best = run.best;
        }
        let last = best.result.log_neg;
        if let Some(h) = history.last_mut() {
            *h = h.max(last);
        }
    }
    // Keep the running maximum across restart boundaries.
    for i in 1..history.len() {
        history[i] = history[i].max(history[i - 1]);
    }

    Ok(OptimizationReport {
        best_params: best.params,
        best_template: best.template,
        best_log_neg: best.result.log_neg,
        best_nu_minus: best.result.nu_minus,
        baseline_log_neg,
        improvement_over_equal: best.result.log_neg - baseline_log_neg,
        evaluations_used: evaluations,
        restart_best,
        history,
    })
}

/// How the sweep coordinate sets the template.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Adiabatic template: all four gains equal to the grid value.
    Eta,
    /// Dynamic template: every coupling scaled by a common factor so that
    /// `η′` hits the grid value; durations stay fixed.
    CouplingRoute,
    /// Dynamic template: every duration scaled by a common factor so that
    /// `η′` hits the grid value; couplings stay fixed.
    DurationRoute,
}

/// Settings for per-row optimization in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptimization {
    pub budget: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Coupling bounds per pass (dynamic sweeps).
    pub coupling_bounds: Option<[Bound; 4]>,
    /// Duration bounds per pass (dynamic sweeps).
    pub duration_bounds: Option<[Bound; 4]>,
    /// Cap each pass at the row's equal-parameter `η_i`.
    pub cap_eta: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub optimize: Option<SweepOptimization>,
    /// Also run each row at doubled slice count and record `|ΔE_N|`.
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedRow {
    pub log_neg: f64,
    pub nu_minus: f64,
    pub params: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub log_neg: f64,
    pub nu_minus: f64,
    pub params: Vec<f64>,
    pub convergence_estimate: Option<f64>,
    pub optimized: Option<OptimizedRow>,
}

/// Template configured at sweep coordinate `x`.
pub fn template_at(template: &Template, axis: SweepAxis, x: f64) -> Result<Template> {
    match (axis, template) {
        (SweepAxis::Eta, Template::Adiabatic(spec)) => {
            let mut spec = spec.clone();
            spec.gains = [x; 4];
            Ok(Template::Adiabatic(spec))
        }
        (SweepAxis::CouplingRoute | SweepAxis::DurationRoute, Template::Dynamic(cfg)) => {
            let reference = cfg.effective_coupling();
            if !(reference > 0.0) {
                return Err(Error::parameter(
                    "template",
                    "routes need a template with nonzero effective coupling",
                ));
            }
            let mut cfg = cfg.clone();
            let ratio = x / reference;
            if axis == SweepAxis::CouplingRoute {
                for s in &mut cfg.segments {
                    s.g *= ratio;
                }
            } else {
                if !(x > 0.0) {
                    return Err(Error::parameter(
                        "grid",
                        "duration route needs strictly positive coordinates",
                    ));
                }
                for s in &mut cfg.segments {
                    s.tau *= ratio * ratio;
                }
            }
            Ok(Template::Dynamic(cfg))
        }
        _ => Err(Error::parameter(
            "axis",
            format!("{axis:?} does not apply to this template"),
        )),
    }
}

fn row_problem(row: &Template, x: f64, opt: &SweepOptimization) -> Result<OptimizationProblem> {
    let (free, eta_caps) = match row {
        Template::Adiabatic(_) => (
            (0..4).map(|i| (Parameter::Gain(i), Bound::new(0.0, x))).collect(),
            None,
        ),
        Template::Dynamic(_) => {
            let mut free = Vec::new();
            if let Some(b) = opt.coupling_bounds {
                free.extend((0..4).map(|i| (Parameter::Coupling(i), b[i])));
            }
            if let Some(b) = opt.duration_bounds {
                free.extend((0..4).map(|i| (Parameter::Duration(i), b[i])));
            }
            (free, opt.cap_eta.then(|| row.pass_etas()))
        }
    };
    Ok(OptimizationProblem {
        template: row.clone(),
        free,
        eta_caps,
        budget: opt.budget,
        restarts: opt.restarts,
        seed: opt.seed,
    })
}

fn refined(t: &Template) -> Option<Template> {
    match t {
        Template::Adiabatic(_) => None,
        Template::Dynamic(cfg) => {
            let mut cfg = cfg.clone();
            for s in &mut cfg.segments {
                s.slices *= 2;
            }
            Some(Template::Dynamic(cfg))
        }
    }
}

/// One row per grid point; rows are computed in parallel.
pub fn sweep(
    template: &Template,
    axis: SweepAxis,
    grid: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::parameter("grid", "is empty"));
    }
    if grid.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::parameter("grid", "coordinates must be finite and nonnegative"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::parameter("grid", "must be strictly increasing"));
    }
    grid.par_iter()
        .map(|&x| {
            let row = template_at(template, axis, x)?;
            let r = row.evaluate()?;
            let convergence_estimate = match (settings.refine, refined(&row)) {
                (true, Some(fine)) => Some((fine.evaluate()?.log_neg - r.log_neg).abs()),
                _ => None,
            };
            let optimized = match &settings.optimize {
                Some(opt) => {
                    let report = optimize(&row_problem(&row, x, opt)?)?;
                    Some(OptimizedRow {
                        log_neg: report.best_log_neg,
                        nu_minus: report.best_nu_minus,
                        params: report.best_template.describe(),
                        evaluations: report.evaluations_used,
                    })
                }
                None => None,
            };
            Ok(SweepRow {
                x,
                log_neg: r.log_neg,
                nu_minus: r.nu_minus,
                params: row.describe(),
                convergence_estimate,
                optimized,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adiabatic_problem(eta: f64, t_ls: f64, budget: usize, seed: u64) -> OptimizationProblem {
        OptimizationProblem {
            template: Template::Adiabatic(IdealProtocolSpec::equal(eta).with_loss(t_ls)),
            free: (0..4).map(|i| (Parameter::Gain(i), Bound::new(0.0, eta))).collect(),
            eta_caps: None,
            budget,
            restarts: 3,
            seed,
        }
    }

    #[test]
    fn lossless_optimum_is_the_equal_corner() {
        let eta = 0.6;
        let report = optimize(&adiabatic_problem(eta, 1.0, 600, 7)).unwrap();
        let equal = -crate::adiabatic::nu_minus_ideal(eta).log2();
        assert!((report.best_log_neg - equal).abs() < 1e-9);

        // Grid-search oracle at resolution 0.05 over the box.
        let steps = (eta / 0.05).round() as usize;
        let mut grid_best: f64 = 0.0;
        for a in 0..=steps {
            for b in 0..=steps {
                for c in 0..=steps {
                    for d in 0..=steps {
                        let g = [a, b, c, d].map(|k| k as f64 * 0.05);
                        let mut spec = IdealProtocolSpec::equal(0.0);
                        spec.gains = g;
                        grid_best = grid_best.max(ideal_protocol(&spec).unwrap().log_neg);
                    }
                }
            }
        }
        assert!(report.best_log_neg >= grid_best - 1e-12);
        assert!((grid_best - equal).abs() < 1e-9);
    }

    #[test]
    fn fixed_parameters_return_baseline() {
        let mut p = adiabatic_problem(0.7, 0.9, 10, 1);
        for (_, b) in &mut p.free {
            *b = Bound::new(0.7, 0.7);
        }
        let report = optimize(&p).unwrap();
        assert_eq!(report.evaluations_used, 1);
        assert_eq!(report.best_log_neg, report.baseline_log_neg);
        assert_eq!(report.best_params, vec![0.7; 4]);
    }

    #[test]
    fn optimization_helps_under_heavy_loss() {
        let report = optimize(&adiabatic_problem(3.0, 0.8, 800, 3)).unwrap();
        assert!(report.best_log_neg > report.baseline_log_neg + 1e-3);
        assert!(report.improvement_over_equal > 0.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = optimize(&adiabatic_problem(2.0, 0.85, 400, 42)).unwrap();
        let b = optimize(&adiabatic_problem(2.0, 0.85, 400, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn history_is_monotone_and_within_budget() {
        let p = adiabatic_problem(2.5, 0.8, 300, 5);
        let report = optimize(&p).unwrap();
        assert!(report.history.windows(2).all(|w| w[1] >= w[0]));
        assert!(report.evaluations_used <= p.budget);
        assert_eq!(report.evaluations_used, report.history.len());
        for r in &report.restart_best {
            assert!(report.best_log_neg >= *r);
        }
        for (x, (_, b)) in report.best_params.iter().zip(&p.free) {
            assert!(b.contains(*x));
        }
    }

    #[test]
    fn budget_and_bounds_are_checked() {
        assert!(optimize(&adiabatic_problem(1.0, 1.0, 10, 0)).is_err());
        let mut p = adiabatic_problem(1.0, 1.0, 500, 0);
        p.free[0].1 = Bound::new(0.0, 0.5);
        let err = optimize(&p).unwrap_err();
        assert!(err.to_string().contains("baseline"));
        let mut p = adiabatic_problem(1.0, 1.0, 500, 0);
        p.free[0].0 = Parameter::Coupling(0);
        assert!(optimize(&p).is_err());
    }

    #[test]
    fn configure_rejects_out_of_bounds() {
        let p = adiabatic_problem(1.0, 1.0, 500, 0);
        assert!(p.configure(&[0.5, 0.5, 0.5, 1.5]).is_err());
        assert!(p.configure(&[0.5, 0.5, 0.5]).is_err());
    }

    #[test]
    fn eta_caps_lower_couplings() {
        let cfg = ProtocolConfig::symmetric(0.05, 200.0, 1.0, 16);
        let p = OptimizationProblem {
            template: Template::Dynamic(cfg),
            free: vec![(Parameter::Coupling(0), Bound::new(0.0, 0.4))],
            eta_caps: Some([1.0; 4]),
            budget: 100,
            restarts: 1,
            seed: 0,
        };
        let (t, eff) = p.configure(&[0.4]).unwrap();
        assert!((t.pass_etas()[0] - 1.0).abs() < 1e-12);
        assert!((eff[0] - 1.0 / 20.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_sweep_values() {
        let t = Template::Adiabatic(IdealProtocolSpec::equal(0.0));
        let settings = SweepSettings {
            optimize: None,
            refine: false,
        };
        let rows = sweep(&t, SweepAxis::Eta, &[0.0, 0.5, 1.0], &settings).unwrap();
        assert_eq!(rows[0].log_neg, 0.0);
        assert!((rows[2].log_neg - 1.271_553_303_163_612).abs() < 1e-9);
        assert!(rows[1].log_neg > 0.0 && rows[1].log_neg < rows[2].log_neg);
        assert!(sweep(&t, SweepAxis::Eta, &[0.5, 0.5], &settings).is_err());
        assert!(sweep(&t, SweepAxis::Eta, &[], &settings).is_err());
        assert!(sweep(&t, SweepAxis::CouplingRoute, &[0.5], &settings).is_err());
    }

    #[test]
    fn optimized_sweep_dominates() {
        let t = Template::Adiabatic(IdealProtocolSpec::equal(0.0).with_loss(0.7));
        let settings = SweepSettings {
            optimize: Some(SweepOptimization {
                budget: 300,
                restarts: 2,
                seed: 11,
                coupling_bounds: None,
                duration_bounds: None,
                cap_eta: false,
            }),
            refine: false,
        };
        let rows = sweep(&t, SweepAxis::Eta, &[0.5, 1.5, 2.5, 3.0], &settings).unwrap();
        for r in rows {
            let o = r.optimized.unwrap();
            assert!(o.log_neg >= r.log_neg - 1e-12);
            assert!(o.params.iter().all(|&g| (0.0..=r.x).contains(&g)));
        }
    }

    #[test]
    fn routes_hit_the_requested_coupling() {
        let cfg = ProtocolConfig::asymmetric((0.035, 1000.0, 1.0), (0.0005, 2000.0, 0.01), 16);
        let t = Template::Dynamic(cfg);
        for axis in [SweepAxis::CouplingRoute, SweepAxis::DurationRoute] {
            let Template::Dynamic(c) = template_at(&t, axis, 0.8).unwrap() else {
                unreachable!()
            };
            assert!((c.effective_coupling() - 0.8).abs() < 1e-12, "{axis:?}");
        }
        assert!(template_at(&t, SweepAxis::DurationRoute, 0.0).is_err());
    }

    #[test]
    fn zero_coupling_sweep_is_flat() {
        let cfg = ProtocolConfig::symmetric(0.01, 100.0, 1.0, 16);
        let t = Template::Dynamic(cfg);
        let settings = SweepSettings {
            optimize: None,
            refine: true,
        };
        let rows = sweep(&t, SweepAxis::CouplingRoute, &[0.0], &settings).unwrap();
        assert_eq!(rows[0].log_neg, 0.0);
        assert_eq!(rows[0].convergence_estimate, Some(0.0));
    }
}
