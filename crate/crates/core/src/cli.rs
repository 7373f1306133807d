//! Command-line driver. Every command loads a chain config (JSON file or
//! built-in preset), applies `--set` overrides, runs one pipeline stage and
//! writes CSV/JSON artifacts plus `manifest.json` into the output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linearize::{
    edge_detuning, effective_ssh, finite_ssh_matrix, reduced_hamiltonian, squeeze_params, Frame, ReducedHamiltonian,
    ReducedMode, SSHModel, SqueezeParams, SshOptions,
};
use crate::model::{validate, ChainConfig, Site};
use crate::presets;
use crate::spectroscopy::{gap_window, peaks_in, resonances, transmission, ProbeConfig};
use crate::steadystate::{
    build_cubic_reduction, hysteresis_sweep, solve_cubic, solve_from_root, solve_steady, stability_check,
    summarize_hysteresis, Control, Direction, SeedBranch, SteadyState, SweepResult,
};
use crate::topology::{bloch_h, edge_profile, spectrum, winding_number, zero_modes, ProfileMapping, GAP_FRACTION};

#[derive(Debug, Parser)]
#[command(name = "kerr-ssh", version, about = "Kerr-driven bosonic chains as tunable SSH lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady state of the mean-field equations.
    Steady {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        seed: Seed,
    },
    /// Warm-started sweep of the drive with hysteresis detection.
    Sweep {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "rabi")]
        control: ControlArg,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long, default_value_t = 101)]
        steps: usize,
        #[arg(long, value_enum, default_value = "both")]
        direction: DirectionArg,
    },
    /// Effective SSH model, spectra and edge profiles.
    Topology {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        seed: Seed,
        /// Skip the rotating-wave and uniformity checks.
        #[arg(long)]
        force: bool,
        /// Designed sweep over r instead of the steady state: driven sites
        /// get `ξ = δ`, end sites follow the edge rule.
        #[arg(long, requires_all = ["r_to", "r_steps"])]
        r_from: Option<f64>,
        #[arg(long)]
        r_to: Option<f64>,
        #[arg(long)]
        r_steps: Option<usize>,
    },
    /// Weak-probe transmission and peaks.
    Transmission {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        seed: Seed,
        #[arg(long, allow_hyphen_values = true)]
        dp_from: f64,
        #[arg(long, allow_hyphen_values = true)]
        dp_to: f64,
        #[arg(long, default_value_t = 2001)]
        dp_steps: usize,
        /// Probed mode, e.g. `b1`.
        #[arg(long, default_value = "b1")]
        probe: Site,
    },
    /// Print a built-in configuration as JSON.
    Preset {
        #[arg(value_enum)]
        name: PresetName,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Input {
    /// Chain configuration (JSON).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<PresetName>,
    /// Override `key.path=value`; repeated keys: last wins.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct Seed {
    #[arg(long, value_enum, default_value = "low")]
    pub seed_branch: SeedArg,
    /// Start Newton from the cubic-reduction state with `|a_2|² = x`.
    #[arg(long)]
    pub x_hint: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SeedArg {
    Low,
    High,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ControlArg {
    Rabi,
    Power,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum DirectionArg {
    Forward,
    Backward,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PresetName {
    /// Topological phase, steady state at r = 0.9 (`--x-hint` in the config notes).
    Topological,
    /// The topological chain with the pump off.
    PumpOff,
    /// Weakly coupled chain with an S-shaped response.
    Bistable,
    Monostable,
    /// Chain for the designed sweep over r.
    Spectral,
}

impl PresetName {
    fn build(self) -> Result<ChainConfig> {
        Ok(match self {
            PresetName::Topological => presets::topological(0.9, 0.9)?.config,
            PresetName::PumpOff => presets::undriven(&presets::topological(0.9, 0.9)?),
            PresetName::Bistable => presets::bistable(1.0)?,
            PresetName::Monostable => presets::monostable(),
            PresetName::Spectral => presets::spectral_sweep_point(1.0).0,
        })
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub preset: Option<PresetName>,
    pub overrides: Vec<String>,
    pub arguments: Value,
    pub output_dir: PathBuf,
    pub tool_version: String,
    pub parallel: bool,
    pub wall_clock_s: f64,
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Apply `a.b.2=value` to a JSON tree. The value is parsed as JSON and
/// taken as a string when that fails.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::InvalidConfig(vec![format!("override '{spec}' is not key=value")]))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (depth, key) in keys.iter().enumerate() {
        let last = depth + 1 == keys.len();
        let bad = || Error::InvalidConfig(vec![format!("override path '{path}' does not exist at '{key}'")]);
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(key.to_string(), value);
                    return Ok(());
                }
                map.get_mut(*key).ok_or_else(bad)?
            }
            Value::Array(items) => {
                let idx: usize = key.parse().map_err(|_| bad())?;
                let slot = items.get_mut(idx).ok_or_else(bad)?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(bad()),
        };
    }
    Ok(())
}

pub fn load_config(input: &Input) -> Result<ChainConfig> {
    let mut tree = match (&input.config, input.preset) {
        (Some(path), _) => serde_json::from_str(&fs::read_to_string(path)?)?,
        (None, Some(p)) => serde_json::to_value(p.build()?)?,
        (None, None) => return Err(Error::InvalidConfig(vec!["need --config or --preset".into()])),
    };
    for o in &input.overrides {
        apply_override(&mut tree, o)?;
    }
    let config: ChainConfig = serde_json::from_value(tree)?;
    validate(&config).into_result()?;
    Ok(config)
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(name))?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn steady_state(config: &ChainConfig, seed: &Seed) -> Result<SteadyState> {
    match seed.x_hint {
        Some(x) => solve_from_root(config, x),
        None => solve_steady(
            config,
            match seed.seed_branch {
                SeedArg::Low => SeedBranch::Low,
                SeedArg::High => SeedBranch::High,
            },
        ),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    let (name, input, arguments) = match &cli.command {
        Command::Preset { name } => {
            println!("{}", serde_json::to_string_pretty(&name.build()?)?);
            return Ok(());
        }
        Command::Steady { input, seed } => ("steady", input, json!({ "seed_branch": format!("{:?}", seed.seed_branch), "x_hint": seed.x_hint })),
        Command::Sweep {
            input,
            control,
            from,
            to,
            steps,
            direction,
        } => (
            "sweep",
            input,
            json!({ "control": format!("{control:?}"), "from": from, "to": to, "steps": steps, "direction": format!("{direction:?}") }),
        ),
        Command::Topology {
            input,
            seed,
            force,
            r_from,
            r_to,
            r_steps,
        } => (
            "topology",
            input,
            json!({ "seed_branch": format!("{:?}", seed.seed_branch), "x_hint": seed.x_hint, "force": force, "r_from": r_from, "r_to": r_to, "r_steps": r_steps }),
        ),
        Command::Transmission {
            input,
            seed,
            dp_from,
            dp_to,
            dp_steps,
            probe,
        } => (
            "transmission",
            input,
            json!({ "seed_branch": format!("{:?}", seed.seed_branch), "x_hint": seed.x_hint, "dp_from": dp_from, "dp_to": dp_to, "dp_steps": dp_steps, "probe": probe.to_string() }),
        ),
    };
    let config = load_config(input)?;
    let out = &input.out;
    match &cli.command {
        Command::Steady { seed, .. } => cmd_steady(&config, seed, out)?,
        Command::Sweep {
            control,
            from,
            to,
            steps,
            direction,
            ..
        } => cmd_sweep(&config, *control, *from, *to, *steps, *direction, out)?,
        Command::Topology {
            seed,
            force,
            r_from,
            r_to,
            r_steps,
            ..
        } => {
            let grid = match (r_from, r_to, r_steps) {
                (Some(a), Some(b), Some(n)) => Some(grid(*a, *b, *n, "r-steps")?),
                _ => None,
            };
            cmd_topology(&config, seed, *force, grid, out)?
        }
        Command::Transmission {
            seed,
            dp_from,
            dp_to,
            dp_steps,
            probe,
            ..
        } => {
            let g = grid(*dp_from, *dp_to, *dp_steps, "dp-steps")?;
            cmd_transmission(&config, seed, g, *probe, out)?
        }
        Command::Preset { .. } => unreachable!(),
    }
    write_json(out, "config.json", &config)?;
    let manifest = RunManifest {
        command: name.into(),
        config_path: input.config.clone(),
        preset: input.preset,
        overrides: input.overrides.clone(),
        arguments,
        output_dir: out.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        parallel: crate::par::is_parallel(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    write_json(out, "manifest.json", &manifest)
}

fn grid(from: f64, to: f64, steps: usize, flag: &str) -> Result<Vec<f64>> {
    if steps < 2 || !(to > from) {
        return Err(Error::InvalidConfig(vec![format!(
            "--{flag} needs at least 2 points on an increasing range (got {steps} on [{from}, {to}])"
        )]));
    }
    Ok(ProbeConfig::linspace(from, to, steps).delta_p_grid)
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

pub fn cmd_steady(config: &ChainConfig, seed: &Seed, out: &Path) -> Result<()> {
    let ss = steady_state(config, seed)?;
    let det = config.detunings();
    let stability = stability_check(config, &det, &ss)?;
    prepare(out)?;
    write_json(
        out,
        "steady_state.json",
        &json!({
            "amplitudes": ss.amplitudes.0.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "a": ss.a_s().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "b": ss.b_s().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
            "x": ss.x.unwrap_or(0.0),
            "residual": ss.residual,
            "stable": ss.stable,
            "leading_eigenvalue": stability.leading().map(|z| [z.re, z.im]),
        }),
    )?;
    if let Ok(red) = build_cubic_reduction(config, &det) {
        let roots = solve_cubic(&red, config.drive_amp[0])?;
        write_csv(
            out,
            "cubic_roots.csv",
            &["index", "x", "candidate_stable"],
            roots
                .iter()
                .enumerate()
                .map(|(k, r)| vec![k.to_string(), fmt_f64(r.x), r.candidate_stable.to_string()]),
        )?;
    }
    Ok(())
}

fn sweep_rows(res: &SweepResult) -> Vec<Vec<String>> {
    res.points
        .iter()
        .map(|p| {
            let mut row = vec![fmt_f64(p.control), fmt_f64(p.x)];
            row.extend(p.r.iter().map(|r| r.map(fmt_f64).unwrap_or_default()));
            row.push(p.stable.to_string());
            row.push(u8::from(p.jump).to_string());
            row
        })
        .collect()
}

pub fn cmd_sweep(
    config: &ChainConfig,
    control: ControlArg,
    from: f64,
    to: f64,
    steps: usize,
    direction: DirectionArg,
    out: &Path,
) -> Result<()> {
    if steps < 2 {
        return Err(Error::InvalidConfig(vec![format!("--steps must be at least 2 (got {steps})")]));
    }
    let control = match control {
        ControlArg::Rabi => Control::Rabi,
        ControlArg::Power => Control::Power,
    };
    let direction = match direction {
        DirectionArg::Forward => Direction::Forward,
        DirectionArg::Backward => Direction::Backward,
        DirectionArg::Both => Direction::Both,
    };
    let results = hysteresis_sweep(config, control, from, to, steps, direction)?;
    prepare(out)?;
    let r_cols: Vec<String> = config.modes().driven().map(|s| format!("r{s}")).collect();
    let mut header = vec!["control_value", "x"];
    header.extend(r_cols.iter().map(String::as_str));
    header.extend(["stable", "jump_flag"]);
    let mut eig_rows = Vec::new();
    for res in &results {
        let branch = match res.branch {
            crate::steadystate::Branch::Forward => "forward",
            crate::steadystate::Branch::Backward => "backward",
        };
        write_csv(out, &format!("{branch}.csv"), &header, sweep_rows(res))?;
        for p in &res.points {
            let cfg = control.apply(config, p.control)?;
            let det = cfg.detunings();
            let Ok(sq) = squeeze_params(&cfg, &p.state) else { continue };
            let Ok(ReducedHamiltonian::Rwa(h)) = reduced_hamiltonian(&cfg, &det, &sq, ReducedMode::Rwa, true) else {
                continue;
            };
            for (k, e) in spectrum(&h)?.values.iter().enumerate() {
                eig_rows.push(vec![branch.to_string(), fmt_f64(p.control), k.to_string(), fmt_f64(*e)]);
            }
        }
    }
    write_csv(
        out,
        "eigenvalues_vs_control.csv",
        &["branch", "control_value", "index", "eigenvalue"],
        eig_rows,
    )?;
    if let [fwd, bwd] = results.as_slice() {
        write_json(out, "hysteresis.json", &summarize_hysteresis(fwd, bwd))?;
    }
    Ok(())
}

/// Mean detuning of the undriven interior a-modes.
fn undriven_delta(config: &ChainConfig) -> Result<f64> {
    let det = config.detunings();
    let modes = config.modes();
    let v: Vec<f64> = (1..config.n_b).filter(|i| !modes.is_driven(*i)).map(|i| det.delta_a[i]).collect();
    if v.is_empty() {
        return Err(Error::Precondition("chain has no undriven interior a-modes".into()));
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Chain and squeezing parameters of the designed point at squeezing `r`.
fn designed_point(config: &ChainConfig, r: f64) -> Result<(ChainConfig, Vec<SqueezeParams>)> {
    let small = undriven_delta(config)?;
    let det = config.detunings();
    let big = det.delta_b.iter().sum::<f64>() / det.delta_b.len() as f64;
    let mut cfg = config.clone();
    let edge = edge_detuning(big, small, r) + config.drive_freq;
    cfg.omega_a[0] = edge;
    cfg.omega_a[config.n_b] = edge;
    let sq = cfg
        .modes()
        .driven()
        .map(|s| SqueezeParams::from_r(s, r, small, std::f64::consts::PI))
        .collect();
    Ok((cfg, sq))
}

struct TopoRow {
    r: f64,
    kind: &'static str,
    index: usize,
    value: f64,
    edge_weight: f64,
}

fn spectra_at(cfg: &ChainConfig, sq: &[SqueezeParams], model: &SSHModel, force: bool) -> Result<Vec<TopoRow>> {
    let det = cfg.detunings();
    let r = model.r;
    let mut rows = Vec::new();
    let ReducedHamiltonian::Rwa(h) = reduced_hamiltonian(cfg, &det, sq, ReducedMode::Rwa, force)? else {
        unreachable!("rwa mode returns the rwa matrix")
    };
    let full = spectrum(&h)?;
    let prof = edge_profile(&full.vectors, cfg.n_b, ProfileMapping::FullChain)?;
    for (k, e) in full.values.iter().enumerate() {
        rows.push(TopoRow {
            r,
            kind: "reduced",
            index: k,
            value: *e,
            edge_weight: prof.edge_weight[k],
        });
    }
    let eff = spectrum(&finite_ssh_matrix(model, Frame::Drive))?;
    let prof = edge_profile(&eff.vectors, cfg.n_b, ProfileMapping::SshOnly)?;
    for (k, e) in eff.values.iter().enumerate() {
        rows.push(TopoRow {
            r,
            kind: "effective",
            index: k,
            value: *e,
            edge_weight: prof.edge_weight[k],
        });
    }
    Ok(rows)
}

fn model_for(cfg: &ChainConfig, sq: &[SqueezeParams], force: bool) -> Result<SSHModel> {
    let det = cfg.detunings();
    match effective_ssh(cfg, &det, sq, &SshOptions::default()) {
        Err(Error::NonUniform(problems)) if force => {
            log::warn!("non-uniform chain, averaging: {}", problems.join("; "));
            let mut m = effective_ssh(
                cfg,
                &det,
                sq,
                &SshOptions {
                    relaxed: true,
                    ..Default::default()
                },
            )?;
            // the averaged a-energy mixes in the driven sites; use the undriven δ
            if let Ok(small) = undriven_delta(cfg) {
                let mut fresh = SSHModel::from_parameters(cfg.g, m.big_delta, small, m.r, m.n_cells)?;
                fresh.warnings.append(&mut m.warnings);
                m = fresh;
            }
            m.warnings.extend(problems);
            Ok(m)
        }
        other => other,
    }
}

pub fn cmd_topology(config: &ChainConfig, seed: &Seed, force: bool, r_grid: Option<Vec<f64>>, out: &Path) -> Result<()> {
    let points: Vec<(ChainConfig, Vec<SqueezeParams>)> = match &r_grid {
        Some(g) => g.iter().map(|&r| designed_point(config, r)).collect::<Result<_>>()?,
        None => {
            let ss = steady_state(config, seed)?;
            vec![(config.clone(), squeeze_params(config, &ss)?)]
        }
    };
    let mut rows = Vec::new();
    let mut windings = Vec::new();
    let mut last = None;
    for (cfg, sq) in &points {
        let model = model_for(cfg, sq, force)?;
        rows.extend(spectra_at(cfg, sq, &model, force)?);
        // undefined where the gap closes on the k grid
        let nu = bloch_h(&model, 256).and_then(|b| winding_number(&b)).ok();
        windings.push(vec![
            fmt_f64(model.r),
            fmt_f64(model.v),
            fmt_f64(model.w),
            nu.map(|n| n.to_string()).unwrap_or_default(),
        ]);
        last = Some(model);
    }
    let model = last.expect("at least one point");
    let nu = winding_number(&bloch_h(&model, 256)?)?;
    let eff = spectrum(&finite_ssh_matrix(&model, Frame::Drive))?;
    let reference = model.reference_energy(Frame::Drive);
    let zm = zero_modes(&eff.values, &model, reference, GAP_FRACTION).ok();
    // the two modes nearest the gap centre
    let mut order: Vec<usize> = (0..eff.values.len()).collect();
    order.sort_by(|a, b| (eff.values[*a] - reference).abs().total_cmp(&(eff.values[*b] - reference).abs()));
    order.truncate(2);
    order.sort_unstable();
    let vecs: Vec<_> = order.iter().map(|&k| eff.vectors[k].clone()).collect();
    let prof = edge_profile(&vecs, config.n_b, ProfileMapping::SshOnly)?;

    prepare(out)?;
    write_json(
        out,
        "ssh_model.json",
        &json!({
            "V": model.v,
            "W": model.w,
            "Delta_r": model.delta_r,
            "r": model.r,
            "lambda_bar": model.lambda_bar,
            "nu": nu,
            "n_cells": model.n_cells,
            "Delta": model.big_delta,
            "delta": model.small_delta,
            "reference_energy": reference,
            "zero_modes": zm.as_ref().map(|z| z.indices.clone()).unwrap_or_default(),
            "gap_window": zm.as_ref().map(|z| [z.window.0, z.window.1]),
            "profile_modes": order,
            "warnings": model.warnings,
        }),
    )?;
    write_csv(
        out,
        "spectrum.csv",
        &["r", "kind", "index", "eigenvalue", "edge_weight"],
        rows.iter().map(|t| {
            vec![
                fmt_f64(t.r),
                t.kind.to_string(),
                t.index.to_string(),
                fmt_f64(t.value),
                fmt_f64(t.edge_weight),
            ]
        }),
    )?;
    if r_grid.is_some() {
        write_csv(out, "winding.csv", &["r", "V", "W", "nu"], windings)?;
    }
    let n = prof.positions.len();
    write_csv(
        out,
        "edge_profile.csv",
        &["s_position", "psi_sq_state1", "psi_sq_state2"],
        (0..n).map(|j| {
            let w = |s: usize| prof.weights.get(s).map(|v| fmt_f64(v[j])).unwrap_or_default();
            vec![fmt_f64(prof.positions[j]), w(0), w(1)]
        }),
    )?;
    Ok(())
}

pub fn cmd_transmission(config: &ChainConfig, seed: &Seed, grid: Vec<f64>, probe: Site, out: &Path) -> Result<()> {
    let ss = steady_state(config, seed)?;
    let det = config.detunings();
    let mut pc = ProbeConfig::new(grid);
    pc.probe_mode = probe;
    let spec = transmission(config, &det, &ss, &pc)?;
    let window = gap_window(config, &ss, GAP_FRACTION).ok().map(|(w, _)| w);
    let res: Vec<[f64; 2]> = resonances(config, &det, &ss)?.iter().map(|z| [z.re, z.im]).collect();
    prepare(out)?;
    write_csv(
        out,
        "transmission.csv",
        &["delta_p", "re_t", "im_t", "abs_t"],
        spec.delta_p
            .iter()
            .zip(&spec.t)
            .map(|(d, t)| vec![fmt_f64(*d), fmt_f64(t.re), fmt_f64(t.im), fmt_f64(t.norm())]),
    )?;
    write_json(
        out,
        "peaks.json",
        &json!({
            "peaks": spec.peaks,
            "gap_window": window.map(|w| [w.0, w.1]),
            "in_gap": window.map(|w| peaks_in(&spec.peaks, w)).unwrap_or_default(),
            "resonances": res,
            "x": ss.x.unwrap_or(0.0),
        }),
    )?;
    Ok(())
}
