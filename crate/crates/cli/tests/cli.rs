// SPDX-License-Identifier: Apache-2.0

use std::path::Path;
use std::process::{Command, Output};

fn transducer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_transducer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn ideal_sweep_has_21_monotone_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ideal.csv");
    let o = transducer(&["ideal-sweep", "--grid", "0:2:0.1", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 21);
    let en: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(en[0], 0.0);
    assert!(en.windows(2).all(|w| w[1] > w[0]));
    assert!(text.contains("# units = rates in kappa_A, times in 1/kappa_A"));
    assert!(text.contains("# seed = 0"));
    assert!(text.contains("# tool = transducer "));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("series,coupling,E_N,nu_minus"));
    assert!(header.ends_with("convergence_estimate"));
}

#[test]
fn transmittance_above_one_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "mode = \"ideal-sweep\"\n[grid]\nvalues = [0.5]\n[ideal]\nloss_after_pass2 = 1.2\n").unwrap();
    let o = transducer(&["ideal-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("ideal.loss_after_pass2"), "{err}");
}

#[test]
fn unknown_key_reports_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    std::fs::write(&cfg, "mode = \"ideal-sweep\"\n\n[grid]\nvalues = [0.5]\nstpe = 0.1\n").unwrap();
    let o = transducer(&["ideal-sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 5") && err.contains("column"), "{err}");
    assert!(err.contains("stpe"), "{err}");
}

#[test]
fn preset_dumps_list_the_parameter_ranges() {
    let o = transducer(&["preset", "fig3", "--dump"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for s in ["gamma = 1.5e-6 kappa", "g = [0, 0.4] kappa", "tau = [7e2, 9e4] / kappa"] {
        assert!(text.contains(s), "{text}");
    }
    let o = transducer(&["preset", "fig4", "--dump"]);
    let text = String::from_utf8_lossy(&o.stdout);
    for s in [
        "kappa_B = 0.01 kappa_A",
        "gamma = 1.5e-4 kappa_B",
        "g_A = [0, 0.07] kappa_A",
        "g_B = [0, 0.1] kappa_B",
        "tau_A = [2.2e2, 4.4e3] / kappa_A",
        "tau_B = [2.3, 113] / kappa_B",
    ] {
        assert!(text.contains(s), "{text}");
    }
}

#[test]
fn fig3_preset_rows_carry_the_bath_settings() {
    let o = transducer(&["preset", "fig3", "--grid", "0.5,1", "--slices", "16"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("# preset.gamma = 1.5e-6 kappa"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 4);
    // The coupling route keeps τ at its lower bound.
    let g_route: Vec<_> = rows.iter().filter(|r| r[0] == "g-route").collect();
    assert!(g_route.iter().all(|r| r[8] == "700"));
}

#[test]
fn fig4_cold_rows_are_entangled() {
    let o = transducer(&["preset", "fig4", "--n-th", "0", "--slices", "16"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = data_rows(&String::from_utf8_lossy(&o.stdout));
    assert!(!rows.is_empty());
    for r in rows {
        let (x, en): (f64, f64) = (r[1].parse().unwrap(), r[2].parse().unwrap());
        assert!(x > 0.0 && en > 0.0, "{r:?}");
    }
}

#[test]
fn fig2_needs_transmittance() {
    let o = transducer(&["preset", "fig2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t_ls"));
    let o = transducer(&["preset", "fig2", "--t-ls", "0.9", "--grid", "0.5,1.5", "--no-optimize"]);
    assert!(o.status.success());
    assert_eq!(data_rows(&String::from_utf8_lossy(&o.stdout)).len(), 2);
}

#[test]
fn csv_reruns_reproduce_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        "mode = \"dyn-sweep\"\nseed = 17\n[grid]\nvalues = [0.5, 1.0]\n[dynamic]\ng = [0.03, 0.03, 0.03, 0.03]\ntau = [700, 700, 700, 700]\nslices = 16\ngamma = 1.5e-6\nn_th = 200\ndelay_loss = 0.8\n[optimize]\nbudget = 200\nrestarts = 2\ncoupling_bounds = [[0, 0.4], [0, 0.4], [0, 0.4], [0, 0.4]]\ncap_eta = true\n",
    )
    .unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let third = dir.path().join("third.csv");
    let o = transducer(&["dyn-sweep", "--config", cfg.to_str().unwrap(), "--out", first.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = transducer(&["dyn-sweep", "--config", cfg.to_str().unwrap(), "--out", second.to_str().unwrap()]);
    assert!(o.status.success());
    // Rerun from the metadata block of the first output alone.
    let o = transducer(&["dyn-sweep", "--config", first.to_str().unwrap(), "--out", third.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (a, b, c) = (read(&first), read(&second), read(&third));
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(data_rows(&a).len(), 4);
    assert!(a.contains("# seed = 17"));
}

#[test]
fn validate_reports_and_exits_zero() {
    let o = transducer(&["validate"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.contains("15 passed, 0 failed"), "{text}");
    assert!(!text.contains("FAIL"));
}

#[test]
fn optimize_writes_baseline_and_best() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("opt.toml");
    std::fs::write(
        &cfg,
        "mode = \"optimize\"\nseed = 3\n[ideal]\ngains = [2.5, 2.5, 2.5, 2.5]\nloss_after_pass1 = 0.8\nloss_after_pass2 = 0.8\n[optimize]\nbudget = 300\nrestarts = 2\ngain_bounds = [[0, 2.5], [0, 2.5], [0, 2.5], [0, 2.5]]\n",
    )
    .unwrap();
    let o = transducer(&["optimize", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    let rows = data_rows(&text);
    assert_eq!(rows[0][0], "baseline");
    assert_eq!(rows[1][0], "optimized");
    let (base, best): (f64, f64) = (rows[0][2].parse().unwrap(), rows[1][2].parse().unwrap());
    assert!(best > base);
    assert!(text.contains("# evaluations_used = "));
}

#[test]
fn plot_script_is_written_next_to_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sub/dir/ideal.csv");
    let plot = dir.path().join("ideal.gp");
    let o = transducer(&[
        "ideal-sweep",
        "--grid",
        "0,1",
        "--out",
        out.to_str().unwrap(),
        "--plot",
        plot.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let script = read(&plot);
    assert!(script.contains(out.to_str().unwrap()));
    assert!(script.contains("title 'equal'"));
}

#[test]
fn mode_mismatch_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "mode = \"validate\"\n").unwrap();
    let o = transducer(&["ideal-sweep", "--config", cfg.to_str().unwrap(), "--grid", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mode"));
}
