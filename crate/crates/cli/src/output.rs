// SPDX-License-Identifier: Apache-2.0

//! CSV tables with a `#`-prefixed metadata block, and gnuplot scripts for
//! them.

use std::io::Write;
use std::path::Path;

use anyhow::Result;

use crate::config::CONFIG_PREFIX;

pub const UNITS: &str = "rates in kappa_A, times in 1/kappa_A";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamLayout {
    /// `eta1..eta4`.
    Gains,
    /// `g1..g4, tau1..tau4`.
    CouplingsDurations,
}

impl ParamLayout {
    fn columns(self) -> Vec<String> {
        match self {
            ParamLayout::Gains => (1..=4).map(|i| format!("eta{i}")).collect(),
            ParamLayout::CouplingsDurations => (1..=4)
                .map(|i| format!("g{i}"))
                .chain((1..=4).map(|i| format!("tau{i}")))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub series: String,
    pub coupling: f64,
    pub log_neg: f64,
    pub nu_minus: f64,
    pub params: Vec<f64>,
    pub convergence_estimate: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub layout: ParamLayout,
    /// What the `coupling` column holds.
    pub coupling_meaning: &'static str,
    pub rows: Vec<Row>,
    /// Extra `key = value` metadata lines.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["series".into(), "coupling".into(), "E_N".into(), "nu_minus".into()];
        h.extend(self.layout.columns());
        h.push("convergence_estimate".into());
        h
    }

    /// Write metadata, header and rows.
    pub fn write<W: Write>(&self, mut w: W, seed: u64, mode: &str, config_toml: &str) -> Result<()> {
        writeln!(w, "# tool = transducer {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# mode = {mode}")?;
        writeln!(w, "# seed = {seed}")?;
        writeln!(w, "# units = {UNITS}")?;
        writeln!(w, "# coupling = {}", self.coupling_meaning)?;
        for (k, v) in &self.notes {
            writeln!(w, "# {k} = {v}")?;
        }
        for line in config_toml.lines().filter(|l| !l.trim().is_empty()) {
            writeln!(w, "{CONFIG_PREFIX}{line}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![
                r.series.clone(),
                r.coupling.to_string(),
                r.log_neg.to_string(),
                r.nu_minus.to_string(),
            ];
            rec.extend(r.params.iter().map(|x| x.to_string()));
            rec.push(r.convergence_estimate.map(|x| x.to_string()).unwrap_or_default());
            csv.write_record(&rec)?;
        }
        csv.flush()?;
        Ok(())
    }

    /// Distinct series names in first-appearance order.
    pub fn series_names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.rows {
            if !names.contains(&r.series) {
                names.push(r.series.clone());
            }
        }
        names
    }
}

/// A gnuplot script drawing `E_N` against the coupling column, one curve per
/// series.
pub fn gnuplot_script(table: &Table, csv_path: &Path) -> String {
    let file = csv_path.display().to_string().replace('\'', "\\'");
    let mut s = String::new();
    s.push_str("set datafile separator ','\n");
    s.push_str(&format!("set xlabel '{}'\n", table.coupling_meaning));
    s.push_str("set ylabel 'E_N'\nset key top left\nset grid\n");
    let plots: Vec<String> = table
        .series_names()
        .iter()
        .map(|name| {
            format!(
                "'{file}' every ::1 using (strcol(1) eq '{n}' ? $2 : 1/0):3 with linespoints title '{n}'",
                n = name.replace('\'', "")
            )
        })
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}
