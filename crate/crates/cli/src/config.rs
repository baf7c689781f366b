// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a TOML document, optionally overridden from the
//! command line. The grammar is documented in the repository README.
//!
//! Every section rejects unknown keys. Range checks name the offending key by
//! its dotted path.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use transducer_core::dynamics::{ProtocolConfig, Stepper};
use transducer_core::optimizer::{Bound, SweepAxis};
use transducer_core::adiabatic::IdealProtocolSpec;

/// Prefix of the metadata lines that carry the resolved configuration in a
/// CSV file.
pub const CONFIG_PREFIX: &str = "# config: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    IdealSweep,
    DynSweep,
    Optimize,
    Validate,
    Preset,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::IdealSweep => "ideal-sweep",
            Mode::DynSweep => "dyn-sweep",
            Mode::Optimize => "optimize",
            Mode::Validate => "validate",
            Mode::Preset => "preset",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    #[serde(default)]
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot_script: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ideal: Option<IdealSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dynamic: Option<DynamicSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize: Option<OptimizeSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<PresetSection>,
}

/// Either `start`/`stop` with `step` or `points`, or an explicit `values`
/// list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl GridSpec {
    /// `start:stop:step` or a comma-separated list.
    pub fn parse_flag(s: &str) -> Result<Self> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("--grid: cannot read {t:?} as a number: {e}"))
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                bail!("--grid: expected start:stop:step, got {s:?}");
            }
            Ok(Self {
                start: Some(num(parts[0])?),
                stop: Some(num(parts[1])?),
                step: Some(num(parts[2])?),
                ..Self::default()
            })
        } else {
            Ok(Self {
                values: Some(s.split(',').map(num).collect::<Result<_>>()?),
                ..Self::default()
            })
        }
    }

    pub fn resolve(&self) -> Result<Vec<f64>> {
        let values = match (self.values.as_ref(), self.start, self.stop, self.step, self.points) {
            (Some(v), None, None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(h), None) => {
                if !(h > 0.0) || !h.is_finite() {
                    bail!("grid.step: {h} is not a positive number");
                }
                if !(b >= a) {
                    bail!("grid.stop: {b} is below grid.start = {a}");
                }
                let n = ((b - a) / h + 1e-9).floor() as usize;
                (0..=n).map(|i| tidy(a + i as f64 * h)).collect()
            }
            (None, Some(a), Some(b), None, Some(n)) => {
                if n < 2 {
                    bail!("grid.points: {n} is below 2");
                }
                if !(b > a) {
                    bail!("grid.stop: {b} must exceed grid.start = {a}");
                }
                (0..n)
                    .map(|i| tidy(a + (b - a) * i as f64 / (n - 1) as f64))
                    .collect()
            }
            _ => bail!("grid: give either `values`, or `start` and `stop` with exactly one of `step` or `points`"),
        };
        if values.is_empty() {
            bail!("grid.values: empty");
        }
        if let Some(x) = values.iter().find(|x| !x.is_finite() || **x < 0.0) {
            bail!("grid.values: {x} is not a nonnegative number");
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            bail!("grid.values: must be strictly increasing");
        }
        Ok(values)
    }
}

/// Strip the last-digit noise of `a + i·h` so that `0.1·3` prints as `0.3`.
fn tidy(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdealSection {
    /// Starting gains for `optimize`; sweeps set all four to the grid value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gains: Option<[f64; 4]>,
    #[serde(default = "one")]
    pub loss_after_pass1: f64,
    #[serde(default = "one")]
    pub loss_after_pass2: f64,
    #[serde(default)]
    pub n_m0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicSection {
    #[serde(default = "one")]
    pub kappa_a: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_b: Option<f64>,
    pub g: [f64; 4],
    pub tau: [f64; 4],
    #[serde(default = "default_slices")]
    pub slices: usize,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub n_th: f64,
    /// Defaults to `n_th`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_m0: Option<f64>,
    #[serde(default = "one")]
    pub delay_loss: f64,
    #[serde(default = "yes")]
    pub idle_decay: bool,
    #[serde(default)]
    pub stepper: Stepper,
    #[serde(default = "default_axis")]
    pub axis: SweepAxis,
    #[serde(default)]
    pub refine: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    /// Optimize every sweep row as well as evaluating it.
    #[serde(default = "yes")]
    pub per_point: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gain_bounds: Option<[[f64; 2]; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coupling_bounds: Option<[[f64; 2]; 4]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_bounds: Option<[[f64; 2]; 4]>,
    /// One duration per pulse instead of one per pass.
    #[serde(default)]
    pub common_duration: bool,
    #[serde(default)]
    pub cap_eta: bool,
}

impl Default for OptimizeSection {
    fn default() -> Self {
        Self {
            budget: default_budget(),
            restarts: default_restarts(),
            per_point: true,
            gain_bounds: None,
            coupling_bounds: None,
            duration_bounds: None,
            common_duration: false,
            cap_eta: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetSection {
    pub name: PresetName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_ls: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_th: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimize: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slices: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine: Option<bool>,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_slices() -> usize {
    64
}

fn default_axis() -> SweepAxis {
    SweepAxis::CouplingRoute
}

fn default_budget() -> usize {
    2000
}

fn default_restarts() -> usize {
    4
}

fn unit_interval(field: &str, t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        bail!("{field}: {t} is outside [0, 1]");
    }
    Ok(())
}

fn nonnegative(field: &str, x: f64) -> Result<()> {
    if !(x >= 0.0) || !x.is_finite() {
        bail!("{field}: {x} is not a nonnegative number");
    }
    Ok(())
}

fn positive(field: &str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        bail!("{field}: {x} is not a positive number");
    }
    Ok(())
}

fn bounds(field: &str, b: &[[f64; 2]; 4]) -> Result<[Bound; 4]> {
    for (i, [lo, hi]) in b.iter().enumerate() {
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            bail!("{field}[{i}]: [{lo}, {hi}] is not a finite nonempty interval");
        }
    }
    Ok(b.map(|[lo, hi]| Bound::new(lo, hi)))
}

impl IdealSection {
    pub fn validate(&self) -> Result<()> {
        if let Some(g) = &self.gains {
            for (i, x) in g.iter().enumerate() {
                nonnegative(&format!("ideal.gains[{i}]"), *x)?;
            }
        }
        unit_interval("ideal.loss_after_pass1", self.loss_after_pass1)?;
        unit_interval("ideal.loss_after_pass2", self.loss_after_pass2)?;
        nonnegative("ideal.n_m0", self.n_m0)
    }

    pub fn spec(&self, eta: f64) -> IdealProtocolSpec {
        IdealProtocolSpec {
            gains: self.gains.unwrap_or([eta; 4]),
            loss_after_pass1: self.loss_after_pass1,
            loss_after_pass2: self.loss_after_pass2,
            n_m0: self.n_m0,
        }
    }
}

impl DynamicSection {
    pub fn validate(&self) -> Result<()> {
        positive("dynamic.kappa_a", self.kappa_a)?;
        if let Some(k) = self.kappa_b {
            positive("dynamic.kappa_b", k)?;
        }
        for i in 0..4 {
            nonnegative(&format!("dynamic.g[{i}]"), self.g[i])?;
            positive(&format!("dynamic.tau[{i}]"), self.tau[i])?;
        }
        if self.slices < transducer_core::dynamics::MIN_SLICES {
            bail!(
                "dynamic.slices: {} is below {}",
                self.slices,
                transducer_core::dynamics::MIN_SLICES
            );
        }
        nonnegative("dynamic.gamma", self.gamma)?;
        nonnegative("dynamic.n_th", self.n_th)?;
        if let Some(n) = self.n_m0 {
            nonnegative("dynamic.n_m0", n)?;
        }
        unit_interval("dynamic.delay_loss", self.delay_loss)?;
        if self.axis == SweepAxis::Eta {
            bail!("dynamic.axis: `eta` applies to ideal sweeps; use coupling-route or duration-route");
        }
        Ok(())
    }

    pub fn protocol(&self) -> ProtocolConfig {
        let kb = self.kappa_b.unwrap_or(self.kappa_a);
        let mut cfg = ProtocolConfig::asymmetric(
            (self.g[0], self.tau[0], self.kappa_a),
            (self.g[1], self.tau[1], kb),
            self.slices,
        )
        .with_bath(self.gamma, self.n_th)
        .with_stepper(self.stepper);
        cfg.segments[2].g = self.g[2];
        cfg.segments[2].tau = self.tau[2];
        cfg.segments[3].g = self.g[3];
        cfg.segments[3].tau = self.tau[3];
        if let Some(n) = self.n_m0 {
            cfg = cfg.with_n_m0(n);
        }
        if self.delay_loss < 1.0 {
            cfg = cfg.with_delay_loss(self.delay_loss);
        }
        cfg.idle_decay = self.idle_decay;
        cfg
    }
}

impl OptimizeSection {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            bail!("optimize.restarts: must be positive");
        }
        if self.budget == 0 {
            bail!("optimize.budget: must be positive");
        }
        if let Some(b) = &self.gain_bounds {
            let b = bounds("optimize.gain_bounds", b)?;
            if b.iter().any(|b| b.lo < 0.0) {
                bail!("optimize.gain_bounds: gains cannot be negative");
            }
        }
        if let Some(b) = &self.coupling_bounds {
            let b = bounds("optimize.coupling_bounds", b)?;
            if b.iter().any(|b| b.lo < 0.0) {
                bail!("optimize.coupling_bounds: couplings cannot be negative");
            }
        }
        if let Some(b) = &self.duration_bounds {
            let b = bounds("optimize.duration_bounds", b)?;
            if b.iter().any(|b| b.lo <= 0.0) {
                bail!("optimize.duration_bounds: durations must be positive");
            }
            if self.common_duration && (b[0] != b[2] || b[1] != b[3]) {
                bail!("optimize.duration_bounds: common_duration needs matching bounds for both passes of a pulse");
            }
        }
        Ok(())
    }

    pub fn coupling_bounds(&self) -> Option<[Bound; 4]> {
        self.coupling_bounds.map(|b| b.map(|[lo, hi]| Bound::new(lo, hi)))
    }

    pub fn duration_bounds(&self) -> Option<[Bound; 4]> {
        self.duration_bounds.map(|b| b.map(|[lo, hi]| Bound::new(lo, hi)))
    }

    pub fn gain_bounds(&self) -> Option<[Bound; 4]> {
        self.gain_bounds.map(|b| b.map(|[lo, hi]| Bound::new(lo, hi)))
    }
}

impl PresetSection {
    pub fn validate(&self) -> Result<()> {
        if let Some(ts) = &self.t_ls {
            if ts.is_empty() {
                bail!("preset.t_ls: empty");
            }
            for (i, t) in ts.iter().enumerate() {
                unit_interval(&format!("preset.t_ls[{i}]"), *t)?;
            }
        }
        if let Some(n) = self.n_th {
            nonnegative("preset.n_th", n)?;
        }
        if let Some(n) = self.slices {
            if n < transducer_core::dynamics::MIN_SLICES {
                bail!("preset.slices: {n} is below {}", transducer_core::dynamics::MIN_SLICES);
            }
        }
        if self.name == PresetName::Fig2 && self.t_ls.is_none() {
            bail!("preset.t_ls: fig2 needs at least one delay-line transmittance");
        }
        Ok(())
    }
}

impl RunConfig {
    /// Parse TOML text. Parse errors carry line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("{e}"))
    }

    /// Read a TOML file, or the configuration embedded in a CSV produced by a
    /// previous run.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let toml_text = if path.extension().is_some_and(|e| e == "csv") {
            let embedded: Vec<&str> = text
                .lines()
                .filter_map(|l| l.strip_prefix(CONFIG_PREFIX))
                .collect();
            if embedded.is_empty() {
                bail!("{}: no embedded configuration lines", path.display());
            }
            embedded.join("\n")
        } else {
            text
        };
        Self::from_toml(&toml_text).with_context(|| format!("in {}", path.display()))
    }

    /// The configuration that determines the numbers, as TOML, without
    /// output paths or worker count.
    pub fn to_embedded_toml(&self) -> Result<String> {
        let mut c = self.clone();
        c.out = None;
        c.plot_script = None;
        c.workers = None;
        Ok(toml::to_string(&c)?)
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode.ok_or_else(|| anyhow!("mode: not set"))
    }

    /// Check every present section and the sections the mode needs.
    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        if let Some(w) = self.workers {
            if w == 0 {
                bail!("workers: must be positive");
            }
        }
        if let Some(s) = &self.ideal {
            s.validate()?;
        }
        if let Some(s) = &self.dynamic {
            s.validate()?;
        }
        if let Some(s) = &self.optimize {
            s.validate()?;
        }
        if let Some(s) = &self.preset {
            s.validate()?;
        }
        if let Some(g) = &self.grid {
            g.resolve()?;
        }
        if let Some(out) = &self.out {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                if !dir.exists() {
                    std::fs::create_dir_all(dir)
                        .with_context(|| format!("out: cannot create {}", dir.display()))?;
                }
            }
        }
        match mode {
            Mode::IdealSweep => {
                self.need_grid()?;
                if self.ideal.as_ref().is_some_and(|s| s.gains.is_some()) {
                    bail!("ideal.gains: sweeps set the gains from the grid; remove the key");
                }
            }
            Mode::DynSweep => {
                self.need_grid()?;
                if self.dynamic.is_none() {
                    bail!("dynamic: section required for dyn-sweep");
                }
            }
            Mode::Optimize => {
                let opt = self.optimize.as_ref().ok_or_else(|| anyhow!("optimize: section required"))?;
                match (&self.ideal, &self.dynamic) {
                    (Some(i), None) => {
                        if i.gains.is_none() {
                            bail!("ideal.gains: required for optimize");
                        }
                        if opt.gain_bounds.is_none() {
                            bail!("optimize.gain_bounds: required for an ideal optimization");
                        }
                    }
                    (None, Some(_)) => {
                        if opt.coupling_bounds.is_none() && opt.duration_bounds.is_none() {
                            bail!("optimize: give coupling_bounds, duration_bounds or both");
                        }
                    }
                    _ => bail!("optimize: exactly one of [ideal] or [dynamic] must be present"),
                }
            }
            Mode::Preset => {
                if self.preset.is_none() {
                    bail!("preset: section required");
                }
            }
            Mode::Validate => {}
        }
        Ok(())
    }

    fn need_grid(&self) -> Result<()> {
        if self.grid.is_none() {
            bail!("grid: required for {}", self.mode()?.name());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_ideal_sweep() {
        let c = RunConfig::from_toml("mode = \"ideal-sweep\"\n[grid]\nstart = 0\nstop = 2\nstep = 0.1\n").unwrap();
        c.validate().unwrap();
        let g = c.grid.unwrap().resolve().unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[20], 2.0);
    }

    #[test]
    fn transmittance_above_one_names_the_field() {
        let c = RunConfig::from_toml(
            "mode = \"ideal-sweep\"\n[grid]\nvalues = [1.0]\n[ideal]\nloss_after_pass1 = 1.2\n",
        )
        .unwrap();
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("ideal.loss_after_pass1"), "{err}");
    }

    #[test]
    fn unknown_keys_report_position() {
        let err = RunConfig::from_toml("mode = \"validate\"\n[grid]\nstart = 0\nsteps = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 4"), "{err}");
        assert!(err.contains("steps"), "{err}");
    }

    #[test]
    fn grid_flag_forms() {
        assert_eq!(GridSpec::parse_flag("0:1:0.25").unwrap().resolve().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(GridSpec::parse_flag("0.5,1,2").unwrap().resolve().unwrap(), vec![0.5, 1.0, 2.0]);
        assert!(GridSpec::parse_flag("1,0.5").unwrap().resolve().is_err());
        assert!(GridSpec::parse_flag("0:1").is_err());
        let points = GridSpec {
            start: Some(0.0),
            stop: Some(1.0),
            points: Some(5),
            ..GridSpec::default()
        };
        assert_eq!(points.resolve().unwrap()[1], 0.25);
    }

    #[test]
    fn embedded_round_trip() {
        let text = "mode = \"dyn-sweep\"\nseed = 9\nout = \"x.csv\"\n[grid]\nvalues = [0.5, 1.0]\n[dynamic]\ng = [0.01, 0.01, 0.01, 0.01]\ntau = [700.0, 700.0, 700.0, 700.0]\ngamma = 1.5e-6\nn_th = 200\n";
        let c = RunConfig::from_toml(text).unwrap();
        c.validate().unwrap();
        let back = RunConfig::from_toml(&c.to_embedded_toml().unwrap()).unwrap();
        assert_eq!(back.out, None);
        assert_eq!(back.dynamic, c.dynamic);
        assert_eq!(back.grid, c.grid);
        assert_eq!(back.seed, 9);
    }

    #[test]
    fn mode_requirements() {
        let c = RunConfig::from_toml("mode = \"dyn-sweep\"\n[grid]\nvalues = [1.0]\n").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("dynamic"));
        let c = RunConfig::from_toml("mode = \"preset\"\n[preset]\nname = \"fig2\"\n").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("preset.t_ls"));
        let c = RunConfig::from_toml("mode = \"optimize\"\n[optimize]\n[ideal]\ngains = [1, 1, 1, 1]\n").unwrap();
        assert!(c.validate().unwrap_err().to_string().contains("gain_bounds"));
    }

    #[test]
    fn dynamic_section_builds_protocol() {
        let c = RunConfig::from_toml(
            "mode = \"dyn-sweep\"\n[grid]\nvalues = [1.0]\n[dynamic]\nkappa_b = 0.01\ng = [0.03, 0.0005, 0.02, 0.0004]\ntau = [1000, 2000, 900, 1800]\ndelay_loss = 0.9\nn_th = 5\n",
        )
        .unwrap();
        c.validate().unwrap();
        let p = c.dynamic.unwrap().protocol();
        p.validate().unwrap();
        assert_eq!(p.segments[3].g, 0.0004);
        assert_eq!(p.segments[2].tau, 900.0);
        assert_eq!(p.segments[1].kappa, 0.01);
        assert_eq!(p.n_m0, 5.0);
        assert_eq!(p.loss_events.len(), 2);
    }
}
