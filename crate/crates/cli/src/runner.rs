// SPDX-License-Identifier: Apache-2.0

//! Turns a resolved configuration into tables or check results.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use transducer_core::optimizer::{
    optimize, sweep, OptimizationProblem, Parameter, SweepAxis, SweepOptimization, SweepRow,
    SweepSettings, Template,
};
use transducer_core::Pulse;

use crate::config::{GridSpec, Mode, PresetName, PresetSection, RunConfig};
use crate::output::{ParamLayout, Row, Table};
use crate::presets::{self, PresetOptions};
use crate::suite::{run_suite, Check};

/// Values given on the command line; each replaces the matching config key.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub plot_script: Option<PathBuf>,
    pub grid: Option<String>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub slices: Option<usize>,
    pub refine: bool,
    pub preset: Option<PresetName>,
    pub t_ls: Option<Vec<f64>>,
    pub n_th: Option<f64>,
    pub optimize: Option<bool>,
}

/// Merge the config file (if any) with the command line for `mode`.
pub fn build_config(mode: Mode, ov: &Overrides) -> Result<RunConfig> {
    let mut cfg = match &ov.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cfg.mode {
        Some(m) if m != mode => bail!("mode: config says {} but the command is {}", m.name(), mode.name()),
        _ => cfg.mode = Some(mode),
    }
    if let Some(p) = &ov.out {
        cfg.out = Some(p.clone());
    }
    if let Some(p) = &ov.plot_script {
        cfg.plot_script = Some(p.clone());
    }
    if let Some(g) = &ov.grid {
        cfg.grid = Some(GridSpec::parse_flag(g)?);
    }
    if let Some(w) = ov.workers {
        cfg.workers = Some(w);
    }
    if let Some(s) = ov.seed {
        cfg.seed = s;
    }
    if let Some(d) = cfg.dynamic.as_mut() {
        if let Some(n) = ov.slices {
            d.slices = n;
        }
        d.refine |= ov.refine;
    }
    if mode == Mode::Preset {
        let section = cfg.preset.get_or_insert_with(|| PresetSection {
            name: ov.preset.unwrap_or(PresetName::Fig3),
            t_ls: None,
            n_th: None,
            optimize: None,
            slices: None,
            refine: None,
        });
        if let Some(name) = ov.preset {
            section.name = name;
        }
        if ov.t_ls.is_some() {
            section.t_ls = ov.t_ls.clone();
        }
        if ov.n_th.is_some() {
            section.n_th = ov.n_th;
        }
        if ov.optimize.is_some() {
            section.optimize = ov.optimize;
        }
        if ov.slices.is_some() {
            section.slices = ov.slices;
        }
        if ov.refine {
            section.refine = Some(true);
        }
    } else if ov.preset.is_some() || ov.t_ls.is_some() || ov.n_th.is_some() {
        bail!("--t-ls and --n-th only apply to presets");
    }
    if mode == Mode::IdealSweep && ov.slices.is_some() {
        bail!("--slices does not apply to the adiabatic model");
    }
    cfg.validate()?;
    Ok(cfg)
}

pub enum Outcome {
    Table(Table),
    Checks(Vec<Check>),
}

fn rows_from_sweep(name: &str, sweep_rows: &[SweepRow], out: &mut Vec<Row>) {
    for r in sweep_rows {
        out.push(Row {
            series: name.to_string(),
            coupling: r.x,
            log_neg: r.log_neg,
            nu_minus: r.nu_minus,
            params: r.params.clone(),
            convergence_estimate: r.convergence_estimate,
        });
    }
    for r in sweep_rows {
        if let Some(o) = &r.optimized {
            out.push(Row {
                series: format!("{name}-optimized"),
                coupling: r.x,
                log_neg: o.log_neg,
                nu_minus: o.nu_minus,
                params: o.params.clone(),
                convergence_estimate: None,
            });
        }
    }
}

fn sweep_optimization(cfg: &RunConfig, dynamic: bool) -> Result<Option<SweepOptimization>> {
    let Some(o) = cfg.optimize.as_ref().filter(|o| o.per_point) else {
        return Ok(None);
    };
    if o.common_duration {
        bail!("optimize.common_duration: only used by the optimize command");
    }
    if dynamic {
        if o.gain_bounds.is_some() {
            bail!("optimize.gain_bounds: not used by dynamic sweeps");
        }
        if o.coupling_bounds.is_none() && o.duration_bounds.is_none() {
            bail!("optimize: dynamic sweeps need coupling_bounds, duration_bounds or both");
        }
    } else if o.gain_bounds.is_some() || o.coupling_bounds.is_some() || o.duration_bounds.is_some() || o.cap_eta {
        bail!("optimize: ideal sweeps bound each gain by the grid value; only budget, restarts and per_point apply");
    }
    Ok(Some(SweepOptimization {
        budget: o.budget,
        restarts: o.restarts,
        seed: cfg.seed,
        coupling_bounds: o.coupling_bounds(),
        duration_bounds: o.duration_bounds(),
        cap_eta: o.cap_eta,
    }))
}

fn grid(cfg: &RunConfig) -> Result<Vec<f64>> {
    cfg.grid
        .as_ref()
        .ok_or_else(|| anyhow!("grid: required"))?
        .resolve()
}

fn ideal_sweep(cfg: &RunConfig) -> Result<Table> {
    let section = cfg.ideal.clone().unwrap_or(crate::config::IdealSection {
        gains: None,
        loss_after_pass1: 1.0,
        loss_after_pass2: 1.0,
        n_m0: 0.0,
    });
    let template = Template::Adiabatic(section.spec(0.0));
    let settings = SweepSettings {
        optimize: sweep_optimization(cfg, false)?,
        refine: false,
    };
    let rows = sweep(&template, SweepAxis::Eta, &grid(cfg)?, &settings)?;
    let mut out = Vec::new();
    rows_from_sweep("equal", &rows, &mut out);
    Ok(Table {
        layout: ParamLayout::Gains,
        coupling_meaning: "eta",
        rows: out,
        notes: Vec::new(),
    })
}

fn dyn_sweep(cfg: &RunConfig) -> Result<Table> {
    let d = cfg.dynamic.as_ref().ok_or_else(|| anyhow!("dynamic: section required"))?;
    let template = Template::Dynamic(d.protocol());
    let settings = SweepSettings {
        optimize: sweep_optimization(cfg, true)?,
        refine: d.refine,
    };
    let rows = sweep(&template, d.axis, &grid(cfg)?, &settings)?;
    let mut out = Vec::new();
    rows_from_sweep("equal", &rows, &mut out);
    Ok(Table {
        layout: ParamLayout::CouplingsDurations,
        coupling_meaning: "eta_eff",
        rows: out,
        notes: vec![("axis".into(), format!("{:?}", d.axis))],
    })
}

fn coupling_of(t: &Template) -> f64 {
    match t {
        Template::Adiabatic(s) => (s.gains[0] * s.gains[1]).sqrt(),
        Template::Dynamic(c) => c.effective_coupling(),
    }
}

fn single_optimization(cfg: &RunConfig) -> Result<Table> {
    let o = cfg.optimize.as_ref().ok_or_else(|| anyhow!("optimize: section required"))?;
    let (template, free, caps, layout) = match (&cfg.ideal, &cfg.dynamic) {
        (Some(i), None) => {
            let b = o.gain_bounds().ok_or_else(|| anyhow!("optimize.gain_bounds: required"))?;
            let free = (0..4).map(|k| (Parameter::Gain(k), b[k])).collect();
            (Template::Adiabatic(i.spec(0.0)), free, None, ParamLayout::Gains)
        }
        (None, Some(d)) => {
            let t = Template::Dynamic(d.protocol());
            let mut free = Vec::new();
            if let Some(b) = o.coupling_bounds() {
                free.extend((0..4).map(|k| (Parameter::Coupling(k), b[k])));
            }
            if let Some(b) = o.duration_bounds() {
                if o.common_duration {
                    free.push((Parameter::PulseDuration(Pulse::A), b[0]));
                    free.push((Parameter::PulseDuration(Pulse::B), b[1]));
                } else {
                    free.extend((0..4).map(|k| (Parameter::Duration(k), b[k])));
                }
            }
            let caps = o.cap_eta.then(|| t.pass_etas());
            (t, free, caps, ParamLayout::CouplingsDurations)
        }
        _ => bail!("optimize: exactly one of [ideal] or [dynamic] must be present"),
    };
    let problem = OptimizationProblem {
        template: template.clone(),
        free,
        eta_caps: caps,
        budget: o.budget,
        restarts: o.restarts,
        seed: cfg.seed,
    };
    let report = optimize(&problem)?;
    let base = template.evaluate()?;
    let rows = vec![
        Row {
            series: "baseline".into(),
            coupling: coupling_of(&template),
            log_neg: base.log_neg,
            nu_minus: base.nu_minus,
            params: template.describe(),
            convergence_estimate: None,
        },
        Row {
            series: "optimized".into(),
            coupling: coupling_of(&report.best_template),
            log_neg: report.best_log_neg,
            nu_minus: report.best_nu_minus,
            params: report.best_template.describe(),
            convergence_estimate: None,
        },
    ];
    let restart_best: Vec<String> = report.restart_best.iter().map(|x| x.to_string()).collect();
    Ok(Table {
        layout,
        coupling_meaning: "eta_eff",
        rows,
        notes: vec![
            ("evaluations_used".into(), report.evaluations_used.to_string()),
            ("restart_best".into(), restart_best.join(" ")),
            ("improvement_over_equal".into(), report.improvement_over_equal.to_string()),
        ],
    })
}

fn preset_run(cfg: &RunConfig) -> Result<Table> {
    let p = cfg.preset.as_ref().ok_or_else(|| anyhow!("preset: section required"))?;
    let (budget, restarts) = match &cfg.optimize {
        Some(o) => (Some(o.budget), Some(o.restarts)),
        None => (None, None),
    };
    let opts = PresetOptions {
        t_ls: p.t_ls.clone(),
        n_th: p.n_th,
        optimize: p.optimize,
        slices: p.slices,
        budget,
        restarts,
        seed: cfg.seed,
    };
    let series = presets::series(p.name, &opts)?;
    let grid = match &cfg.grid {
        Some(g) => g.resolve()?,
        None => {
            let (a, b, h) = presets::default_grid(p.name);
            GridSpec {
                start: Some(a),
                stop: Some(b),
                step: Some(h),
                ..GridSpec::default()
            }
            .resolve()?
        }
    };
    presets::check_grid(p.name, &series, &grid)?;
    let mut rows = Vec::new();
    for s in &series {
        let settings = SweepSettings {
            optimize: s.optimization.clone(),
            refine: p.refine.unwrap_or(false),
        };
        let r = sweep(&s.template, s.axis, &grid, &settings).with_context(|| format!("series {}", s.name))?;
        rows_from_sweep(&s.name, &r, &mut rows);
    }
    let (layout, meaning) = match p.name {
        PresetName::Fig2 => (ParamLayout::Gains, "eta"),
        _ => (ParamLayout::CouplingsDurations, "eta_eff"),
    };
    let mut notes = vec![("preset".into(), format!("{:?}", p.name).to_lowercase())];
    notes.extend(
        presets::dump(p.name)
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .filter(|(k, _)| *k != "preset")
            .map(|(k, v)| (format!("preset.{k}"), v.to_string())),
    );
    Ok(Table {
        layout,
        coupling_meaning: meaning,
        rows,
        notes,
    })
}

/// Run a validated configuration.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    Ok(match cfg.mode()? {
        Mode::IdealSweep => Outcome::Table(ideal_sweep(cfg)?),
        Mode::DynSweep => Outcome::Table(dyn_sweep(cfg)?),
        Mode::Optimize => Outcome::Table(single_optimization(cfg)?),
        Mode::Preset => Outcome::Table(preset_run(cfg)?),
        Mode::Validate => Outcome::Checks(run_suite()),
    })
}
