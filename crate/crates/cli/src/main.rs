// SPDX-License-Identifier: Apache-2.0

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use transducer_cli::config::{Mode, PresetName, RunConfig};
use transducer_cli::output::gnuplot_script;
use transducer_cli::presets;
use transducer_cli::runner::{build_config, execute, Outcome, Overrides};
use transducer_cli::suite::exit_code;

#[derive(Parser)]
#[command(name = "transducer", version, about = "Entanglement of two light pulses through a shared mechanical mode")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML configuration, or a CSV written by an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV destination; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script for the CSV.
    #[arg(long, global = true)]
    plot: Option<PathBuf>,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Worker threads for sweep rows and restarts.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Time slices per pulse for the dynamic engine.
    #[arg(long, global = true)]
    slices: Option<usize>,
    /// Rerun each dynamic row with twice the slices and report |ΔE_N|.
    #[arg(long, global = true)]
    refine: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Adiabatic model with equal gains swept over η.
    IdealSweep,
    /// Time-resolved model swept over η′.
    DynSweep,
    /// Single bounded optimization.
    Optimize,
    /// Run the invariant suite.
    Validate,
    /// Named parameter sets.
    Preset(PresetArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Fig2,
    Fig3,
    Fig4,
}

#[derive(Args)]
struct PresetArgs {
    name: PresetArg,
    /// Delay-line transmittances, comma-separated.
    #[arg(long = "t-ls", value_delimiter = ',')]
    t_ls: Option<Vec<f64>>,
    /// Bath occupation.
    #[arg(long = "n-th")]
    n_th: Option<f64>,
    /// Optimize every row.
    #[arg(long, conflicts_with = "no_optimize")]
    optimize: bool,
    #[arg(long = "no-optimize")]
    no_optimize: bool,
    /// Print the preset's parameter values and exit.
    #[arg(long)]
    dump: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg_echo: Option<RunConfig> = None;
    match run(cli, &mut cfg_echo) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(cfg) = cfg_echo.and_then(|c| c.to_embedded_toml().ok()) {
                eprintln!("configuration:\n{cfg}");
            }
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli, echo: &mut Option<RunConfig>) -> Result<i32> {
    let (mode, preset) = match &cli.command {
        Command::IdealSweep => (Mode::IdealSweep, None),
        Command::DynSweep => (Mode::DynSweep, None),
        Command::Optimize => (Mode::Optimize, None),
        Command::Validate => (Mode::Validate, None),
        Command::Preset(p) => (Mode::Preset, Some(p)),
    };
    let preset_name = preset.map(|p| match p.name {
        PresetArg::Fig2 => PresetName::Fig2,
        PresetArg::Fig3 => PresetName::Fig3,
        PresetArg::Fig4 => PresetName::Fig4,
    });
    if let (Some(p), Some(name)) = (preset, preset_name) {
        if p.dump {
            print!("{}", presets::dump(name));
            return Ok(0);
        }
    }
    let c = &cli.common;
    let ov = Overrides {
        config: c.config.clone(),
        out: c.out.clone(),
        plot_script: c.plot.clone(),
        grid: c.grid.clone(),
        workers: c.workers,
        seed: c.seed,
        slices: c.slices,
        refine: c.refine,
        preset: preset_name,
        t_ls: preset.and_then(|p| p.t_ls.clone()),
        n_th: preset.and_then(|p| p.n_th),
        optimize: preset.and_then(|p| {
            if p.optimize {
                Some(true)
            } else if p.no_optimize {
                Some(false)
            } else {
                None
            }
        }),
    };
    let cfg = build_config(mode, &ov)?;
    *echo = Some(cfg.clone());
    if let Some(w) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .context("starting worker pool")?;
    }
    if cfg.plot_script.is_some() && cfg.out.is_none() {
        bail!("--plot needs --out so the script can name the data file");
    }

    match execute(&cfg)? {
        Outcome::Checks(checks) => {
            let mut stdout = std::io::stdout().lock();
            for ch in &checks {
                let tag = if ch.passed { "PASS" } else { "FAIL" };
                writeln!(stdout, "{tag} {}/{}: {}", ch.module, ch.name, ch.detail)?;
            }
            let passed = checks.iter().filter(|c| c.passed).count();
            writeln!(stdout, "{passed} passed, {} failed", checks.len() - passed)?;
            Ok(exit_code(&checks))
        }
        Outcome::Table(table) => {
            let embedded = cfg.to_embedded_toml()?;
            let mode_name = mode.name();
            match &cfg.out {
                Some(path) => {
                    let file = std::fs::File::create(path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    table.write(std::io::BufWriter::new(file), cfg.seed, mode_name, &embedded)?;
                    if let Some(plot) = &cfg.plot_script {
                        std::fs::write(plot, gnuplot_script(&table, path))
                            .with_context(|| format!("writing {}", plot.display()))?;
                    }
                }
                None => table.write(std::io::stdout().lock(), cfg.seed, mode_name, &embedded)?,
            }
            Ok(0)
        }
    }
}
