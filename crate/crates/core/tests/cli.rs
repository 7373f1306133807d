use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn kerr_ssh(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kerr-ssh"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = kerr_ssh(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: impl AsRef<Path>) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: impl AsRef<Path>) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

fn out_dir(tmp: &TempDir, name: &str) -> String {
    tmp.path().join(name).to_string_lossy().into_owned()
}

#[test]
fn undriven_steady_state_is_empty() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "s");
    ok(&["steady", "--preset", "pump-off", "--out", &out]);
    let ss = json(format!("{out}/steady_state.json"));
    assert_eq!(ss["x"].as_f64(), Some(0.0));
    assert!(Path::new(&out).join("manifest.json").exists());
}

#[test]
fn seed_branches_pick_distinct_roots() {
    let tmp = TempDir::new().unwrap();
    let lo = out_dir(&tmp, "lo");
    let hi = out_dir(&tmp, "hi");
    ok(&["steady", "--preset", "bistable", "--seed-branch", "low", "--out", &lo]);
    ok(&["steady", "--preset", "bistable", "--seed-branch", "high", "--out", &hi]);
    let roots = csv_rows(format!("{lo}/cubic_roots.csv"));
    assert_eq!(roots.len(), 3);
    let root = |k: usize| roots[k][1].parse::<f64>().unwrap();
    let x_lo = json(format!("{lo}/steady_state.json"))["x"].as_f64().unwrap();
    let x_hi = json(format!("{hi}/steady_state.json"))["x"].as_f64().unwrap();
    assert!((x_lo - root(0)).abs() < 1e-9 * root(0));
    assert!((x_hi - root(2)).abs() < 1e-9 * root(2));
}

#[test]
fn malformed_config_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let path = tmp.path().join("bad.json");
    fs::write(&path, "{\"n_b\": 6,").unwrap();
    let out = kerr_ssh(&["steady", "--config", path.to_str().unwrap(), "--out", &out_dir(&tmp, "x")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("EOF"));
}

#[test]
fn invalid_override_path_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = kerr_ssh(&["steady", "--preset", "monostable", "--set", "omega_a.40=1", "--out", &out_dir(&tmp, "x")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn overrides_apply_last_wins() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "s");
    ok(&[
        "steady", "--preset", "monostable", "--set", "kerr_u=-0.5", "--set", "omega_a.3=1.7", "--set", "kerr_u=-0.3",
        "--out", &out,
    ]);
    let cfg = json(format!("{out}/config.json"));
    assert_eq!(cfg["kerr_u"].as_f64(), Some(-0.3));
    assert_eq!(cfg["omega_a"][3].as_f64(), Some(1.7));
    let manifest = json(format!("{out}/manifest.json"));
    assert_eq!(manifest["overrides"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["command"], "steady");
}

#[test]
fn linear_sweep_has_no_hysteresis() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "s");
    ok(&[
        "sweep", "--preset", "bistable", "--set", "kerr_u=0", "--from", "0.1", "--to", "3", "--steps", "40", "--out", &out,
    ]);
    let fwd = csv_rows(format!("{out}/forward.csv"));
    let mut bwd = csv_rows(format!("{out}/backward.csv"));
    bwd.reverse();
    assert_eq!(fwd.len(), 40);
    for (f, b) in fwd.iter().zip(&bwd) {
        assert_eq!(f[0], b[0]);
        let (xf, xb): (f64, f64) = (f[1].parse().unwrap(), b[1].parse().unwrap());
        assert!((xf - xb).abs() <= 1e-9 * xf.abs().max(1e-12));
        assert_eq!(f.last().unwrap(), "0");
    }
}

#[test]
fn bistable_sweep_jumps_once_per_branch() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "s");
    ok(&["sweep", "--preset", "bistable", "--from", "0.0316", "--to", "3.16", "--steps", "200", "--out", &out]);
    let jumps = |name: &str| -> Vec<String> {
        csv_rows(format!("{out}/{name}.csv"))
            .into_iter()
            .filter(|r| r.last().unwrap() == "1")
            .map(|r| r[0].clone())
            .collect()
    };
    let (f, b) = (jumps("forward"), jumps("backward"));
    assert_eq!(f.len(), 1);
    assert_eq!(b.len(), 1);
    assert_ne!(f, b);
    let summary = json(format!("{out}/hysteresis.json"));
    assert!(summary["loop_area"].as_f64().unwrap() > 0.0);
    assert!(Path::new(&out).join("eigenvalues_vs_control.csv").exists());
}

#[test]
fn single_direction_writes_one_branch() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "s");
    ok(&[
        "sweep", "--preset", "monostable", "--from", "0.1", "--to", "1", "--steps", "5", "--direction", "forward", "--out",
        &out,
    ]);
    assert!(Path::new(&out).join("forward.csv").exists());
    assert!(!Path::new(&out).join("backward.csv").exists());
    assert!(!Path::new(&out).join("hysteresis.json").exists());
    let rows = csv_rows(format!("{out}/forward.csv"));
    assert_eq!(rows[0].len(), 6);
}

#[test]
fn one_step_sweep_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = kerr_ssh(&["sweep", "--preset", "bistable", "--from", "0.1", "--to", "1", "--steps", "1", "--out", &out_dir(&tmp, "s")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn topological_state_has_two_zero_modes() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "t");
    ok(&["topology", "--preset", "topological", "--out", &out]);
    let m = json(format!("{out}/ssh_model.json"));
    assert_eq!(m["nu"].as_i64(), Some(1));
    assert_eq!(m["zero_modes"].as_array().unwrap().len(), 2);
    assert!(m["W"].as_f64().unwrap().abs() > m["V"].as_f64().unwrap().abs());
    let profile = csv_rows(format!("{out}/edge_profile.csv"));
    assert_eq!(profile.len(), 13);
    for col in [1, 2] {
        let total: f64 = profile.iter().map(|r| r[col].parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn pump_off_topology_needs_force_and_is_trivial() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "t");
    let refused = kerr_ssh(&["topology", "--preset", "pump-off", "--out", &out]);
    assert_eq!(refused.status.code(), Some(1));
    ok(&["topology", "--preset", "pump-off", "--force", "--out", &out]);
    let m = json(format!("{out}/ssh_model.json"));
    assert_eq!(m["nu"].as_i64(), Some(0));
    assert!(m["zero_modes"].as_array().unwrap().is_empty());
}

#[test]
fn designed_sweep_lists_both_spectra_and_the_transition() {
    let tmp = TempDir::new().unwrap();
    let out = out_dir(&tmp, "t");
    ok(&[
        "topology", "--preset", "spectral", "--force", "--r-from", "0.5", "--r-to", "0.9", "--r-steps", "41", "--out", &out,
    ]);
    let rows = csv_rows(format!("{out}/spectrum.csv"));
    assert_eq!(rows.len(), 41 * (13 + 6));
    let first_r = rows[0][0].clone();
    let count = |kind: &str| rows.iter().filter(|r| r[0] == first_r && r[1] == kind).count();
    assert_eq!((count("reduced"), count("effective")), (13, 6));
    let ln2 = std::f64::consts::LN_2;
    for w in csv_rows(format!("{out}/winding.csv")) {
        let r: f64 = w[0].parse().unwrap();
        let expected = if r < ln2 { "0" } else { "1" };
        assert_eq!(w[3], expected, "r = {r}");
    }
}

#[test]
fn transmission_gap_peaks_follow_the_pump() {
    let tmp = TempDir::new().unwrap();
    let on = out_dir(&tmp, "on");
    let off = out_dir(&tmp, "off");
    let grid = ["--dp-from", "97.6", "--dp-to", "101.6", "--dp-steps", "4000"];
    ok(&[&["transmission", "--preset", "topological", "--out", &on][..], &grid].concat());
    ok(&[&["transmission", "--preset", "pump-off", "--out", &off][..], &grid].concat());
    let in_gap = |dir: &str| json(format!("{dir}/peaks.json"))["in_gap"].as_array().unwrap().len();
    assert_eq!(in_gap(&on), 2);
    assert_eq!(in_gap(&off), 0);
    let rows = csv_rows(format!("{on}/transmission.csv"));
    assert_eq!(rows.len(), 4000);
    assert_eq!(rows[0][0], "9.7599999999999994e1");
}

#[test]
fn one_point_probe_grid_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let out = kerr_ssh(&[
        "transmission", "--preset", "topological", "--dp-from", "99", "--dp-to", "100", "--dp-steps", "1", "--out",
        &out_dir(&tmp, "t"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_are_deterministic() {
    let tmp = TempDir::new().unwrap();
    let a = out_dir(&tmp, "a");
    let b = out_dir(&tmp, "b");
    for dir in [&a, &b] {
        ok(&["transmission", "--preset", "topological", "--dp-from", "99", "--dp-to", "100.5", "--dp-steps", "500", "--out", dir]);
    }
    for f in ["transmission.csv", "peaks.json", "config.json"] {
        assert_eq!(fs::read(format!("{a}/{f}")).unwrap(), fs::read(format!("{b}/{f}")).unwrap(), "{f}");
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let tmp = TempDir::new().unwrap();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        ok(&["steady", "--config", path.to_str().unwrap(), "--out", &out_dir(&tmp, "s")]);
    }
}
