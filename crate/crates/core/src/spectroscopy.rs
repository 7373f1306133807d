//! Weak-probe transmission of the linearised lossy chain and peak detection.
//!
//! For probe detuning `δ_p` the response solves `𝓜 z = e_probe` with
//! `𝓜 = i(D − δ_p 𝟙)`, `D` the lossy dynamical matrix, and
//! `t = 2γ z[probe]`. A decoupled mode probed on resonance gives `|t| = 2`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::linearize::{self, Frame, SSHModel};
use crate::model::{build_fluctuation_hamiltonian, ChainConfig, Detunings, Site, C64, I};
use crate::par;
use crate::steadystate::{stability_check, SteadyState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub delta_p_grid: Vec<f64>,
    pub probe_mode: Site,
    /// Coupling rate in `t = 2γ z`; defaults to the probed mode's loss.
    pub gamma_probe: Option<f64>,
    /// Reported only; the linear response does not depend on it.
    pub probe_power: f64,
}

impl ProbeConfig {
    pub fn new(delta_p_grid: Vec<f64>) -> Self {
        Self {
            delta_p_grid,
            probe_mode: Site::B(1),
            gamma_probe: None,
            probe_power: 0.0,
        }
    }

    pub fn linspace(from: f64, to: f64, steps: usize) -> Self {
        let h = if steps > 1 { (to - from) / (steps - 1) as f64 } else { 0.0 };
        Self::new((0..steps).map(|k| from + h * k as f64).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub delta_p: f64,
    pub abs_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransmissionSpectrum {
    pub delta_p: Vec<f64>,
    pub t: Vec<C64>,
    pub peaks: Vec<Peak>,
}

impl TransmissionSpectrum {
    pub fn abs_t(&self) -> Vec<f64> {
        self.t.iter().map(|z| z.norm()).collect()
    }
}

/// Mean of `(γ + κ) / 2` over the chain.
pub fn linewidth(config: &ChainConfig) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    0.5 * (mean(&config.gamma) + mean(&config.kappa))
}

pub fn transmission(
    config: &ChainConfig,
    det: &Detunings,
    ss: &SteadyState,
    probe: &ProbeConfig,
) -> Result<TransmissionSpectrum> {
    let grid = &probe.delta_p_grid;
    if grid.is_empty() || grid.iter().any(|d| !d.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("probe grid must be finite and strictly increasing".into()));
    }
    if config.gamma.iter().chain(&config.kappa).any(|r| !(*r > 0.0)) {
        return Err(Error::Precondition("transmission needs every decay rate > 0".into()));
    }
    let modes = config.modes();
    let k = modes
        .checked_flat(probe.probe_mode)
        .ok_or_else(|| Error::Domain(format!("probe mode {} is not in the chain", probe.probe_mode)))?;
    let stability = stability_check(config, det, ss)?;
    if !stability.stable {
        let leading = stability.leading().unwrap_or_default();
        return Err(Error::Unstable(leading));
    }
    let gamma = probe.gamma_probe.unwrap_or(match probe.probe_mode {
        Site::A(i) => config.kappa[i],
        Site::B(i) => config.gamma[i - 1],
    });
    let d = build_fluctuation_hamiltonian(config, det, &ss.amplitudes, true)?.dynamical_matrix();
    let dim = d.nrows();
    let mut e = DVector::<C64>::zeros(dim);
    e[k] = C64::new(1.0, 0.0);
    let solved = par::map(grid, |&dp| {
        let mut m = d.clone();
        for j in 0..dim {
            m[(j, j)] -= dp;
        }
        let m = m.map(|z| I * z);
        linalg::solve(m, &e).map(|z| 2.0 * gamma * z[k]).ok_or(Error::Singular(dp))
    });
    let t = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let abs: Vec<f64> = t.iter().map(|z| z.norm()).collect();
    let peaks = peak_find(grid, &abs, default_floor(&abs), 4.0 * linewidth(config));
    Ok(TransmissionSpectrum {
        delta_p: grid.clone(),
        t,
        peaks,
    })
}

/// Three times the median of `values`.
pub fn default_floor(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n.is_multiple_of(2) { 0.5 * (v[n / 2 - 1] + v[n / 2]) } else { v[n / 2] };
    3.0 * median
}

/// Local maxima of `values` above `floor`; of two maxima closer than
/// `min_separation` only the higher is kept.
pub fn peak_find(grid: &[f64], values: &[f64], floor: f64, min_separation: f64) -> Vec<Peak> {
    let n = values.len().min(grid.len());
    if n >= 2 {
        let step = grid[1] - grid[0];
        if step >= min_separation / 4.0 {
            log::warn!("probe grid step {step:.3e} is coarse against the peak separation {min_separation:.3e}");
        }
    }
    let mut candidates: Vec<Peak> = (0..n)
        .filter(|&j| {
            let left = if j > 0 { values[j - 1] } else { f64::NEG_INFINITY };
            let right = if j + 1 < n { values[j + 1] } else { f64::NEG_INFINITY };
            values[j] > floor && values[j] >= left && values[j] >= right && (values[j] > left || values[j] > right)
        })
        .map(|j| Peak {
            delta_p: grid[j],
            abs_t: values[j],
        })
        .collect();
    candidates.sort_by(|a, b| b.abs_t.total_cmp(&a.abs_t));
    let mut kept: Vec<Peak> = Vec::new();
    for c in candidates {
        if kept.iter().all(|p| (p.delta_p - c.delta_p).abs() >= min_separation) {
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.delta_p.total_cmp(&b.delta_p));
    kept
}

/// Peaks with `lo < δ_p < hi`.
pub fn peaks_in(peaks: &[Peak], window: (f64, f64)) -> Vec<Peak> {
    peaks
        .iter()
        .copied()
        .filter(|p| p.delta_p > window.0 && p.delta_p < window.1)
        .collect()
}

/// Mid-gap window of the chain at its steady state.
///
/// The effective model uses `Δ` = mean b-detuning, `δ` = mean detuning of
/// the undriven interior a-modes and `r` = mean squeezing of the driven
/// sites (zero without pump). The window is centred on the b-mode onsite
/// energy `Δ + 2Δ_r` with half-width `gap_fraction · 2|W − V|`.
pub fn gap_window(config: &ChainConfig, ss: &SteadyState, gap_fraction: f64) -> Result<((f64, f64), SSHModel)> {
    let n = config.n_b;
    let det = config.detunings();
    let undriven: Vec<f64> = (1..n).filter(|i| !config.modes().is_driven(*i)).map(|i| det.delta_a[i]).collect();
    if undriven.is_empty() {
        return Err(Error::Precondition("chain has no undriven interior a-modes".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sq: Vec<f64> = config
        .modes()
        .driven()
        .map(|s| linearize::site_squeeze(config, &det, &ss.amplitudes, s).map(|p| p.r))
        .collect::<Result<_>>()?;
    let r = if sq.is_empty() { 0.0 } else { mean(&sq) };
    let model = SSHModel::from_parameters(config.g, mean(&det.delta_b), mean(&undriven), r, n / 2)?;
    let centre = model.reference_energy(Frame::Drive);
    let half = gap_fraction * 2.0 * (model.w.abs() - model.v.abs()).abs();
    Ok(((centre - half, centre + half), model))
}

/// Eigenvalues of the lossy dynamical matrix; resonances sit near their real parts.
pub fn resonances(config: &ChainConfig, det: &Detunings, ss: &SteadyState) -> Result<Vec<C64>> {
    let d = build_fluctuation_hamiltonian(config, det, &ss.amplitudes, true)?.dynamical_matrix();
    let mut ev = linalg::eigenvalues(&d);
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    Ok(ev)
}
