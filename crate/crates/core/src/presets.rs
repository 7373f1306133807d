//! Ready-made chain configurations used by the examples, the CLI and the tests.
//!
//! All presets are dimensionless (`g = 1` unless noted) with the six-cell
//! chain `N = 6`.

use serde::Serialize;

use crate::error::Result;
use crate::linearize::{edge_detuning, SqueezeParams};
use crate::model::{ChainConfig, UnitMode, C64};
use crate::steadystate::build_cubic_reduction;

/// b-mode detuning of the topological presets.
pub const BIG_DELTA: f64 = 100.0;
/// `δ − Δ` of the chain driven into the topological phase.
pub const TOPO_GAP: f64 = 7.0;
/// `δ − Δ` of the spectral comparison over `r`.
pub const SWEEP_GAP: f64 = 13.0;
pub const LOSS: f64 = 0.01;

fn six_cell(omega_b: f64, omega_a: f64, loss: f64) -> ChainConfig {
    ChainConfig {
        n_b: 6,
        omega_b: vec![omega_b; 6],
        omega_a: vec![omega_a; 7],
        kerr_u: -1.0,
        g: 1.0,
        gamma: vec![loss; 6],
        kappa: vec![loss; 7],
        drive_freq: 0.0,
        drive_amp: vec![0.0; 2],
        unit_mode: UnitMode::DimensionlessG,
        rate_unit_si: None,
    }
}

/// Bare detuning of a driven site whose Bogoliubov frequency at squeezing `r`
/// equals `xi`, together with the occupation `x` that produces it.
///
/// From `Δ̃ = ξ cosh 2r`, `2|U|x = ξ sinh 2r` and `Δ̃ = Δᵃ − 4|U|x`.
pub fn driven_detuning(xi: f64, r: f64, kerr_u: f64) -> (f64, f64) {
    let x = xi * (2.0 * r).sinh() / (2.0 * kerr_u.abs());
    (xi * ((2.0 * r).cosh() + 2.0 * (2.0 * r).sinh()), x)
}

/// Chain parameters of the topological preset with geometry fixed by
/// `r_design` (driven-site detuning and end sites), driven so that the
/// steady state has squeezing `r`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TopologicalPreset {
    pub config: ChainConfig,
    /// Occupation `|a_2|²` of the intended steady state.
    pub x: f64,
    pub r: f64,
    pub r_design: f64,
}

/// Six-cell chain with `Δᵇ = Δ = 100`, undriven a-modes at `δ = Δ + 7`,
/// losses `0.01` and drive chosen so that the steady state at the intended
/// root has squeezing `r`. Geometry (driven-site detuning and end sites) is
/// laid out for `r_design`, where `ξ = δ` holds exactly.
pub fn topological(r_design: f64, r: f64) -> Result<TopologicalPreset> {
    let delta = BIG_DELTA + TOPO_GAP;
    let mut config = six_cell(BIG_DELTA, delta, LOSS);
    let (driven, _) = driven_detuning(delta, r_design, config.kerr_u);
    config.omega_a[2] = driven;
    config.omega_a[4] = driven;
    let edge = edge_detuning(BIG_DELTA, delta, r_design);
    config.omega_a[0] = edge;
    config.omega_a[6] = edge;
    // occupation that yields r at this bare detuning: with t = tanh 2r,
    // 2|U|x = t (Δᵃ − 4|U|x)  ⇒  x = t Δᵃ / (2|U|(1 + 2t))
    let t = (2.0 * r).tanh();
    let u = config.kerr_u.abs();
    let x = t * driven / (2.0 * u * (1.0 + 2.0 * t));
    let red = build_cubic_reduction(&config, &config.detunings())?;
    let drive = red.drive_sq_for(x).sqrt();
    config.drive_amp = vec![drive; 2];
    Ok(TopologicalPreset {
        config,
        x,
        r,
        r_design,
    })
}

/// The same chain with the pump off.
pub fn undriven(preset: &TopologicalPreset) -> ChainConfig {
    preset.config.with_uniform_drive(0.0)
}

/// Chain and squeezing parameters for the spectral comparison at squeezing
/// `r`: `Δ = 100`, `δ − Δ = 13`, `ξ = δ` on both driven sites, end sites
/// following `r`.
pub fn spectral_sweep_point(r: f64) -> (ChainConfig, Vec<SqueezeParams>) {
    let delta = BIG_DELTA + SWEEP_GAP;
    let mut config = six_cell(BIG_DELTA, delta, LOSS);
    let (driven, _) = driven_detuning(delta, r, config.kerr_u);
    config.omega_a[2] = driven;
    config.omega_a[4] = driven;
    let edge = edge_detuning(BIG_DELTA, delta, r);
    config.omega_a[0] = edge;
    config.omega_a[6] = edge;
    let sq = [2, 4]
        .iter()
        .map(|&s| SqueezeParams::from_r(s, r, delta, std::f64::consts::PI))
        .collect();
    (config, sq)
}

/// Weakly coupled chain whose driven sites see the effective detuning
/// `Δ̃ = 3 − 0.1i` and `U = −1`, so the reduced cubic is
/// `4x³ − 12x² + 9.01x − 𝓔² = 0`.
pub fn bistable(drive: f64) -> Result<ChainConfig> {
    let mut config = six_cell(30.0, 30.0, 0.1);
    config.g = 0.05;
    let target = C64::new(3.0, -0.1);
    config.omega_a[2] = 3.0;
    config.omega_a[4] = 3.0;
    let red = build_cubic_reduction(&config, &config.detunings())?;
    let correction = config.g * (red.chi1 + red.chi2);
    let bare = target - correction;
    for i in [2, 4] {
        config.omega_a[i] = bare.re;
        config.kappa[i] = -bare.im;
    }
    config.drive_amp = vec![drive; 2];
    Ok(config)
}

/// Strongly coupled symmetric chain with a single steady state.
pub fn monostable() -> ChainConfig {
    let mut config = six_cell(1.2, 2.0, 0.15);
    config.omega_a[2] = -1.5;
    config.omega_a[4] = -1.5;
    config.kerr_u = -0.2;
    config.g = 0.6;
    config.omega_a[3] = 1.6;
    config.omega_b[2] = 1.4;
    config.omega_b[3] = 1.4;
    config.kappa[0] = 0.3;
    config.kappa[6] = 0.3;
    config.drive_amp = vec![0.8; 2];
    config
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;
    use crate::steadystate::solve_cubic;

    #[test]
    fn presets_validate() {
        assert!(validate(&topological(0.9, 0.9).unwrap().config).is_ok());
        assert!(validate(&spectral_sweep_point(1.0).0).is_ok());
        assert!(validate(&bistable(1.0).unwrap()).is_ok());
        assert!(validate(&monostable()).is_ok());
    }

    #[test]
    fn bistable_reduction_hits_target() {
        let cfg = bistable(1.0).unwrap();
        let red = build_cubic_reduction(&cfg, &cfg.detunings()).unwrap();
        assert!((red.delta_tilde - C64::new(3.0, -0.1)).norm() < 1e-12);
        let [c3, c2, c1, c0] = red.coefficients;
        assert!((c3 - 4.0).abs() < 1e-12 && (c2 + 12.0).abs() < 1e-11 && (c1 - 9.01).abs() < 1e-11);
        assert!((c0 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn monostable_has_one_root() {
        let cfg = monostable();
        let red = build_cubic_reduction(&cfg, &cfg.detunings()).unwrap();
        assert_eq!(solve_cubic(&red, cfg.drive_amp[0]).unwrap().len(), 1);
    }

    #[test]
    fn design_point_gives_xi_equal_delta() {
        let (driven, x) = driven_detuning(107.0, 0.9, -1.0);
        let sq = SqueezeParams::from_values(2, driven - 4.0 * x, C64::new(-x, 0.0)).unwrap();
        assert!((sq.r - 0.9).abs() < 1e-12);
        assert!((sq.xi - 107.0).abs() < 1e-9);
    }
}
