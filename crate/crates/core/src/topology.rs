//! Bloch Hamiltonian and winding number of the two-band model, finite-chain
//! spectra, mid-gap mode detection and edge-localisation profiles.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::linearize::SSHModel;
use crate::model::{ModeIndex, Site, C64};

pub const GAP_TOL: f64 = 1e-6;
pub const RESIDUE_TOL: f64 = 0.01;
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Half-width of the mid-gap window as a fraction of the bulk gap `2|W − V|`.
pub const GAP_FRACTION: f64 = 0.4;
pub const B_WEIGHT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlochSample {
    pub k_grid: Vec<f64>,
    pub h: Vec<C64>,
}

impl BlochSample {
    /// Samples `f(k)` on the uniform grid `k_j = −π + 2πj/M`.
    pub fn from_fn(mk: usize, f: impl Fn(f64) -> C64) -> Self {
        let k_grid: Vec<f64> = (0..mk).map(|j| -PI + 2.0 * PI * j as f64 / mk as f64).collect();
        let h = k_grid.iter().map(|&k| f(k)).collect();
        Self { k_grid, h }
    }
}

/// `h(k) = V + W e^{−ik}`.
pub fn bloch_h(m: &SSHModel, mk: usize) -> Result<BlochSample> {
    if mk < 16 {
        return Err(Error::Domain(format!("need at least 16 k-points (got {mk})")));
    }
    Ok(BlochSample::from_fn(mk, |k| m.v + m.w * C64::from_polar(1.0, -k)))
}

/// `ν = (i/2π) ∮ h'/h dk`, accumulated from principal phase increments.
pub fn winding_number(s: &BlochSample) -> Result<i64> {
    let n = s.h.len();
    if n < 3 {
        return Err(Error::Resolution(format!("{n} samples cannot close a loop")));
    }
    let scale = s.h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let min = s.h.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if !(min > GAP_TOL * scale) {
        return Err(Error::TopologyUndefined(format!("|h(k)| reaches {min:.3e}")));
    }
    let mut total = 0.0;
    for j in 0..n {
        let step = (s.h[(j + 1) % n] / s.h[j]).arg();
        if step.abs() > PI / 2.0 {
            return Err(Error::Resolution(format!(
                "phase jumps by {step:.3} between samples {j} and {}; refine the k-grid",
                (j + 1) % n
            )));
        }
        total += step;
    }
    let raw = -total / (2.0 * PI);
    let nu = raw.round();
    if (raw - nu).abs() >= RESIDUE_TOL {
        return Err(Error::Resolution(format!("winding {raw:.4} is not close to an integer")));
    }
    Ok(nu as i64)
}

/// Ascending eigenvalues and eigenvectors (one per entry) of a Hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

pub fn spectrum(matrix: &DMatrix<C64>) -> Result<Spectrum> {
    let (values, vecs) = linalg::hermitian_eigen(matrix, HERMITIAN_TOL)?;
    let vectors = (0..vecs.ncols())
        .map(|c| vecs.column(c).iter().copied().collect())
        .collect();
    Ok(Spectrum { values, vectors })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroModes {
    pub indices: Vec<usize>,
    pub winding: i64,
    pub window: (f64, f64),
    pub warning: Option<String>,
}

/// Eigenvalues within `gap_fraction · 2|W − V|` of `reference`.
pub fn zero_modes(eigs: &[f64], model: &SSHModel, reference: f64, gap_fraction: f64) -> Result<ZeroModes> {
    let bulk_gap = 2.0 * (model.w.abs() - model.v.abs()).abs();
    let scale = model.w.abs().max(model.v.abs());
    if !(bulk_gap > 1e-12 * scale) {
        return Err(Error::TopologyUndefined("bulk gap 2|W - V| vanishes".into()));
    }
    let winding = winding_number(&bloch_h(model, 256)?)?;
    let half = gap_fraction * bulk_gap;
    let indices: Vec<usize> = eigs
        .iter()
        .enumerate()
        .filter(|(_, e)| (*e - reference).abs() < half)
        .map(|(k, _)| k)
        .collect();
    let warning = (indices.len() as i64 != 2 * winding).then(|| {
        let msg = format!(
            "{} mid-gap modes found, bulk-edge correspondence expects {}",
            indices.len(),
            2 * winding
        );
        log::warn!("{msg}");
        msg
    });
    Ok(ZeroModes {
        indices,
        winding,
        window: (reference - half, reference + half),
        warning,
    })
}

/// How eigenvector entries are laid onto the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProfileMapping {
    /// Entries are the `N` b-modes; a-sites get zero weight.
    SshOnly,
    /// Entries already cover all `2N + 1` chain sites.
    FullChain,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeProfile {
    /// `s_j = j / (2N)` for the `2N + 1` chain sites.
    pub positions: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    /// Weight on `b_1, b_2, b_{N−1}, b_N`.
    pub edge_weight: Vec<f64>,
}

pub fn edge_profile(vectors: &[Vec<C64>], n_b: usize, mapping: ProfileMapping) -> Result<EdgeProfile> {
    let modes = ModeIndex::new(n_b);
    let sites = modes.len();
    let positions = (0..sites).map(|j| j as f64 / (2 * n_b) as f64).collect();
    let mut weights = Vec::with_capacity(vectors.len());
    let mut edge_weight = Vec::with_capacity(vectors.len());
    let edge_sites = [Site::B(1), Site::B(2), Site::B(n_b - 1), Site::B(n_b)];
    for v in vectors {
        let expected = match mapping {
            ProfileMapping::SshOnly => n_b,
            ProfileMapping::FullChain => sites,
        };
        if v.len() != expected {
            return Err(Error::Shape { expected, got: v.len() });
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(Error::Domain("eigenvector has zero norm".into()));
        }
        let mut w = vec![0.0; sites];
        match mapping {
            ProfileMapping::SshOnly => {
                for (i, z) in v.iter().enumerate() {
                    w[modes.flat(Site::B(i + 1))] = z.norm_sqr() / norm;
                }
            }
            ProfileMapping::FullChain => {
                for (k, z) in v.iter().enumerate() {
                    w[k] = z.norm_sqr() / norm;
                }
            }
        }
        let mut edge_flat: Vec<usize> = edge_sites.iter().map(|s| modes.flat(*s)).collect();
        edge_flat.sort_unstable();
        edge_flat.dedup();
        edge_weight.push(edge_flat.iter().map(|&k| w[k]).sum());
        weights.push(w);
    }
    Ok(EdgeProfile {
        positions,
        weights,
        edge_weight,
    })
}

/// Fraction of `|ψ|²` on b-sites for a full-chain vector.
pub fn b_weight(vector: &[C64]) -> f64 {
    let total: f64 = vector.iter().map(|z| z.norm_sqr()).sum();
    let b: f64 = vector.iter().skip(1).step_by(2).map(|z| z.norm_sqr()).sum();
    b / total
}

/// Indices of full-chain eigenvectors with at least half their weight on b-sites.
pub fn b_dominant(spec: &Spectrum) -> Vec<usize> {
    spec.vectors
        .iter()
        .enumerate()
        .filter(|(_, v)| b_weight(v) >= B_WEIGHT_THRESHOLD)
        .map(|(k, _)| k)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linearize::{finite_ssh_matrix, Frame};
    use proptest::prelude::*;

    #[test]
    fn bloch_limits() {
        let flat = bloch_h(&SSHModel::hopping(1.0, 0.0, 3), 32).unwrap();
        assert!(flat.h.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        let ring = bloch_h(&SSHModel::hopping(0.0, 1.0, 3), 32).unwrap();
        for (k, h) in ring.k_grid.iter().zip(&ring.h) {
            assert!((h.norm() - 1.0).abs() < 1e-15);
            assert!((h - C64::from_polar(1.0, -k)).norm() < 1e-15);
        }
        let critical = bloch_h(&SSHModel::hopping(1.0, 1.0, 3), 32).unwrap();
        assert!(matches!(winding_number(&critical), Err(Error::TopologyUndefined(_))));
        assert!(bloch_h(&SSHModel::hopping(1.0, 1.0, 3), 8).is_err());
    }

    #[test]
    fn winding_values() {
        let w = |v, w| winding_number(&bloch_h(&SSHModel::hopping(v, w, 3), 64).unwrap()).unwrap();
        assert_eq!(w(1.0, 2.0), 1);
        assert_eq!(w(2.0, 1.0), 0);
        assert_eq!(w(-1.0, -2.0), 1);
        let double = BlochSample::from_fn(64, |k| C64::from_polar(1.0, -2.0 * k));
        assert_eq!(winding_number(&double).unwrap(), 2);
        let coarse = BlochSample::from_fn(16, |k| C64::from_polar(1.0, -7.0 * k));
        assert!(matches!(winding_number(&coarse), Err(Error::Resolution(_))));
    }

    #[test]
    fn spectrum_of_dimer() {
        let v = C64::new(0.3, 0.0);
        let z = C64::new(0.0, 0.0);
        let s = spectrum(&DMatrix::from_row_slice(2, 2, &[z, v, v, z])).unwrap();
        assert!((s.values[0] + 0.3).abs() < 1e-15 && (s.values[1] - 0.3).abs() < 1e-15);
        let lossy = DMatrix::from_row_slice(2, 2, &[C64::new(0.0, -0.1), v, v, z]);
        assert!(matches!(spectrum(&lossy), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn zero_mode_examples() {
        let cases = [((0.0, 1.0), 2usize), ((2.0, 1.0), 0), ((1.0, 1.8f64.exp() / 4.0), 2)];
        for ((v, w), count) in cases {
            let m = SSHModel::hopping(v, w, 3);
            let s = spectrum(&finite_ssh_matrix(&m, Frame::Rotating)).unwrap();
            let z = zero_modes(&s.values, &m, 0.0, GAP_FRACTION).unwrap();
            assert_eq!(z.indices.len(), count, "V = {v}, W = {w}");
            assert!(z.warning.is_none());
        }
        let m = SSHModel::hopping(1.0, 1.0, 3);
        assert!(zero_modes(&[0.0], &m, 0.0, GAP_FRACTION).is_err());
    }

    #[test]
    fn edge_profile_limits() {
        let m = SSHModel::hopping(0.0, 1.0, 3);
        let s = spectrum(&finite_ssh_matrix(&m, Frame::Rotating)).unwrap();
        let z = zero_modes(&s.values, &m, 0.0, GAP_FRACTION).unwrap();
        let vecs: Vec<_> = z.indices.iter().map(|&k| s.vectors[k].clone()).collect();
        let p = edge_profile(&vecs, 6, ProfileMapping::SshOnly).unwrap();
        assert_eq!(p.positions.len(), 13);
        for (w, e) in p.weights.iter().zip(&p.edge_weight) {
            assert!((e - 1.0).abs() < 1e-12);
            let ends = w[1] + w[11];
            assert!((ends - 1.0).abs() < 1e-12);
        }

        let dimers = SSHModel::hopping(1.0, 0.0, 3);
        let s = spectrum(&finite_ssh_matrix(&dimers, Frame::Rotating)).unwrap();
        // the middle dimer (b3, b4) has nothing on the outer cells
        let middle = vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ];
        let p = edge_profile(&[middle], 6, ProfileMapping::SshOnly).unwrap();
        assert!(p.edge_weight[0] <= 1.0 / 3.0);
        let all = edge_profile(&s.vectors, 6, ProfileMapping::SshOnly).unwrap();
        let total: f64 = all.edge_weight.iter().sum();
        // outer-cell weight summed over a complete basis equals the number of outer sites
        assert!((total - 4.0).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]

        #[test]
        fn winding_matches_criterion(v in -3.0f64..3.0, w in -3.0f64..3.0, c in 0.01f64..100.0) {
            prop_assume!((v.abs() - w.abs()).abs() > 1e-3);
            let m = SSHModel::hopping(v, w, 3);
            let nu = winding_number(&bloch_h(&m, 128).unwrap()).unwrap();
            prop_assert_eq!(nu, i64::from(w.abs() > v.abs()));
            let scaled = SSHModel::hopping(c * v, c * w, 3);
            prop_assert_eq!(winding_number(&bloch_h(&scaled, 128).unwrap()).unwrap(), nu);
            prop_assert_eq!(winding_number(&bloch_h(&m, 256).unwrap()).unwrap(), nu);
        }

        #[test]
        fn bulk_edge_correspondence(v in -3.0f64..3.0, w in -3.0f64..3.0) {
            let (a, b) = (v.abs(), w.abs());
            prop_assume!((a - b).abs() > 0.3 * a.max(b));
            let m = SSHModel::hopping(v, w, 3);
            let s = spectrum(&finite_ssh_matrix(&m, Frame::Rotating)).unwrap();
            let z = zero_modes(&s.values, &m, 0.0, GAP_FRACTION).unwrap();
            prop_assert_eq!(z.indices.len() as i64, 2 * z.winding);
        }

        #[test]
        fn rotating_spectrum_chiral(v in -3.0f64..3.0, w in -3.0f64..3.0) {
            let m = SSHModel::hopping(v, w, 3);
            let s = spectrum(&finite_ssh_matrix(&m, Frame::Rotating)).unwrap();
            for k in 0..6 {
                prop_assert!((s.values[k] + s.values[5 - k]).abs() < 1e-10);
            }
        }

        #[test]
        fn profile_normalised(v in -3.0f64..3.0, w in -3.0f64..3.0) {
            let m = SSHModel::hopping(v, w, 3);
            let s = spectrum(&finite_ssh_matrix(&m, Frame::Rotating)).unwrap();
            let p = edge_profile(&s.vectors, 6, ProfileMapping::SshOnly).unwrap();
            for w in &p.weights {
                prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }
}
