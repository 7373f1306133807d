//! Squeezing parameters of the driven sites, the Bogoliubov-rotated chain
//! Hamiltonian and the effective SSH model obtained by eliminating the
//! a-type modes to second order.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Amplitudes, ChainConfig, Detunings, QuadraticForm, Site, C64};
use crate::steadystate::SteadyState;

/// Phases below this are set to zero when building the Bogoliubov rotation.
pub const THETA_TOL: f64 = 1e-2;
pub const RWA_TOL: f64 = 0.25;
pub const RWA_MARGIN: f64 = 3.0;
pub const DISPERSIVE_THRESHOLD: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParams {
    /// a-index of the driven site.
    pub site: usize,
    pub u_tilde: C64,
    /// `arctan(Im Ũ / Re Ũ)`.
    pub theta: f64,
    /// Phase used in `δa = cosh r δα − e^{iφ} sinh r δα†`; `arg Ũ`, or
    /// `0`/`π` by the sign of `Re Ũ` once `|θ| < THETA_TOL`.
    pub phase: f64,
    pub delta_tilde_a: f64,
    pub r: f64,
    pub xi: f64,
    pub theta_warning: bool,
}

impl SqueezeParams {
    pub fn from_values(site: usize, delta_tilde_a: f64, u_tilde: C64) -> Result<Self> {
        let two_u = 2.0 * u_tilde.norm();
        let gap = delta_tilde_a - two_u;
        if !(gap > 1e-12 * delta_tilde_a.abs()) || !(delta_tilde_a > 0.0) {
            return Err(Error::InstabilityBoundary {
                site,
                delta_tilde: delta_tilde_a,
                two_u,
            });
        }
        let sum = delta_tilde_a + two_u;
        let theta = if u_tilde.re == 0.0 {
            if u_tilde.im == 0.0 {
                0.0
            } else {
                std::f64::consts::FRAC_PI_2.copysign(u_tilde.im)
            }
        } else {
            (u_tilde.im / u_tilde.re).atan()
        };
        let theta_warning = theta.abs() >= THETA_TOL;
        let phase = if theta_warning {
            u_tilde.arg()
        } else if u_tilde.re >= 0.0 {
            0.0
        } else {
            std::f64::consts::PI
        };
        Ok(Self {
            site,
            u_tilde,
            theta,
            phase,
            delta_tilde_a,
            r: 0.25 * (sum / gap).ln(),
            xi: (sum * gap).sqrt(),
            theta_warning,
        })
    }

    /// Parameters with prescribed `r` and `ξ`: `Δ̃ᵃ = ξ cosh 2r`, `|Ũ| = ξ sinh 2r / 2`.
    pub fn from_r(site: usize, r: f64, xi: f64, phase: f64) -> Self {
        let u = 0.5 * xi * (2.0 * r).sinh();
        Self {
            site,
            u_tilde: C64::from_polar(u, phase),
            theta: 0.0,
            phase,
            delta_tilde_a: xi * (2.0 * r).cosh(),
            r,
            xi,
            theta_warning: false,
        }
    }
}

/// Squeezing parameters of driven site `site` at the mean-field state `amps`.
pub fn site_squeeze(config: &ChainConfig, det: &Detunings, amps: &Amplitudes, site: usize) -> Result<SqueezeParams> {
    if !config.modes().is_driven(site) {
        return Err(Error::Domain(format!("a{site} is not a driven site")));
    }
    let a = amps.a(site);
    let u_tilde = config.kerr_u * a * a;
    let delta_tilde = det.delta_a[site] + 4.0 * config.kerr_u * a.norm_sqr();
    SqueezeParams::from_values(site, delta_tilde, u_tilde)
}

pub fn squeeze_params(config: &ChainConfig, ss: &SteadyState) -> Result<Vec<SqueezeParams>> {
    let modes = config.modes();
    if ss.amplitudes.0.len() != modes.len() {
        return Err(Error::Precondition(format!(
            "steady state has {} amplitudes, chain has {} modes",
            ss.amplitudes.0.len(),
            modes.len()
        )));
    }
    let det = config.detunings();
    modes
        .driven()
        .map(|site| {
            let sq = site_squeeze(config, &det, &ss.amplitudes, site)?;
            if sq.theta_warning {
                log::debug!("a{site}: squeezing phase theta = {:.3e} is not small", sq.theta);
            }
            Ok(sq)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReducedMode {
    /// Particle-conserving matrix with Bogoliubov bonds `g e^r / 2`.
    #[default]
    Rwa,
    /// Doubled matrix with `g cosh r` bonds and `−g e^{iφ} sinh r` pairing.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReducedHamiltonian {
    Rwa(DMatrix<C64>),
    Exact(QuadraticForm),
}

fn check_sites(config: &ChainConfig, sq: &[SqueezeParams]) -> Result<()> {
    let driven: Vec<usize> = config.modes().driven().collect();
    if sq.len() != driven.len() {
        return Err(Error::Shape {
            expected: driven.len(),
            got: sq.len(),
        });
    }
    if sq.iter().zip(&driven).any(|(s, d)| s.site != *d) {
        return Err(Error::Precondition("squeeze parameters must follow the driven-site order".into()));
    }
    Ok(())
}

/// Diagonal entry of a-site `i`: bare detuning, or `ξ` on a driven site.
fn a_energy(det: &Detunings, sq: &[SqueezeParams], i: usize) -> f64 {
    sq.iter().find(|s| s.site == i).map_or(det.delta_a[i], |s| s.xi)
}

/// Sites where the rotating-wave reduction is not justified.
pub fn rwa_violations(config: &ChainConfig, det: &Detunings, sq: &[SqueezeParams]) -> Vec<String> {
    let mut out = Vec::new();
    for s in sq {
        let e = (-2.0 * s.r).exp();
        if !(e < RWA_TOL) {
            out.push(format!("a{}: exp(-2r) = {e:.3} is not below {RWA_TOL}", s.site));
        }
    }
    let g = config.g;
    for k in 1..=config.n_b {
        let db = det.delta_b[k - 1];
        for j in [k - 1, k] {
            let (coupling, energy) = match sq.iter().find(|s| s.site == j) {
                Some(s) => (g * s.r.exp() / 2.0, s.xi),
                None => (g, det.delta_a[j]),
            };
            let diff = (db - energy).abs();
            let sum = (db + energy).abs();
            if RWA_MARGIN * coupling.max(g) > diff {
                out.push(format!(
                    "b{k}-a{j}: coupling {:.3} is not small against |detuning difference| {diff:.3}",
                    coupling.max(g)
                ));
            }
            if RWA_MARGIN * diff > sum {
                out.push(format!(
                    "b{k}-a{j}: |detuning difference| {diff:.3} is not small against |detuning sum| {sum:.3}"
                ));
            }
        }
    }
    out
}

/// Chain Hamiltonian after the Bogoliubov rotation of every driven site.
///
/// Ordering is the usual `[a_0, b_1, ..., a_N]` with `δα` in place of each
/// driven `a`. Unless `force` is set, the RWA form is refused when the
/// squeezing is too weak or the detuning hierarchy fails.
pub fn reduced_hamiltonian(
    config: &ChainConfig,
    det: &Detunings,
    sq: &[SqueezeParams],
    mode: ReducedMode,
    force: bool,
) -> Result<ReducedHamiltonian> {
    check_sites(config, sq)?;
    let modes = config.modes();
    let m = modes.len();
    let g = config.g;
    let mut normal = DMatrix::<C64>::zeros(m, m);
    let mut anomalous = DMatrix::<C64>::zeros(m, m);
    for i in 1..=config.n_b {
        let k = modes.flat(Site::B(i));
        normal[(k, k)] = C64::new(det.delta_b[i - 1], 0.0);
    }
    for i in 0..=config.n_b {
        let k = modes.flat(Site::A(i));
        normal[(k, k)] = C64::new(a_energy(det, sq, i), 0.0);
    }
    for (p, q) in modes.bonds() {
        let a_site = match (modes.site(p), modes.site(q)) {
            (Site::A(i), _) | (_, Site::A(i)) => i,
            _ => unreachable!("every bond joins an a-site and a b-site"),
        };
        let b_flat = if p == modes.flat(Site::A(a_site)) { q } else { p };
        let a_flat = if b_flat == p { q } else { p };
        match (sq.iter().find(|s| s.site == a_site), mode) {
            (None, _) => {
                normal[(p, q)] = C64::new(g, 0.0);
                normal[(q, p)] = C64::new(g, 0.0);
            }
            (Some(s), ReducedMode::Rwa) => {
                let c = C64::new(g * s.r.exp() / 2.0, 0.0);
                normal[(p, q)] = c;
                normal[(q, p)] = c;
            }
            (Some(s), ReducedMode::Exact) => {
                let c = C64::new(g * s.r.cosh(), 0.0);
                normal[(p, q)] = c;
                normal[(q, p)] = c;
                let pair = -g * s.r.sinh() * C64::from_polar(1.0, s.phase);
                anomalous[(b_flat, a_flat)] = pair;
                anomalous[(a_flat, b_flat)] = pair;
            }
        }
    }
    match mode {
        ReducedMode::Rwa => {
            if !force {
                let violations = rwa_violations(config, det, sq);
                if !violations.is_empty() {
                    return Err(Error::RwaRefused(violations));
                }
            }
            Ok(ReducedHamiltonian::Rwa(normal))
        }
        ReducedMode::Exact => Ok(ReducedHamiltonian::Exact(QuadraticForm {
            normal,
            anomalous,
            with_losses: false,
        })),
    }
}

/// Effective two-band model of the b-modes, all energies in config units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SSHModel {
    pub delta_r: f64,
    pub v: f64,
    pub w: f64,
    pub lambda_bar: f64,
    pub n_cells: usize,
    pub r: f64,
    pub big_delta: f64,
    pub small_delta: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SSHModel {
    /// `V = g²/(Δ−δ)`, `W = g² e^{2r} / (4(Δ−δ))`, `Δ_r = g²(4 + e^{2r}) / (8(Δ−δ))`.
    pub fn from_parameters(g: f64, big_delta: f64, small_delta: f64, r: f64, n_cells: usize) -> Result<Self> {
        let d = big_delta - small_delta;
        if d == 0.0 || !d.is_finite() {
            return Err(Error::Domain("Delta - delta must be nonzero".into()));
        }
        let e2r = (2.0 * r).exp();
        let lambda_bar = g / d;
        let mut warnings = Vec::new();
        if lambda_bar.abs() >= DISPERSIVE_THRESHOLD {
            warnings.push(format!(
                "|lambda_bar| = {:.3} is not below the dispersive threshold {DISPERSIVE_THRESHOLD}",
                lambda_bar.abs()
            ));
        }
        Ok(Self {
            delta_r: g * g * (4.0 + e2r) / (8.0 * d),
            v: g * g / d,
            w: g * g * e2r / (4.0 * d),
            lambda_bar,
            n_cells,
            r,
            big_delta,
            small_delta,
            warnings,
        })
    }

    /// Bare hopping model with no physical parameters behind it.
    pub fn hopping(v: f64, w: f64, n_cells: usize) -> Self {
        Self {
            delta_r: 0.0,
            v,
            w,
            lambda_bar: 0.0,
            n_cells,
            r: 0.0,
            big_delta: 0.0,
            small_delta: 0.0,
            warnings: Vec::new(),
        }
    }

    pub fn sites(&self) -> usize {
        2 * self.n_cells
    }

    /// Onsite energy of the b-modes in `frame`.
    pub fn reference_energy(&self, frame: Frame) -> f64 {
        match frame {
            Frame::Rotating => 0.0,
            Frame::Shifted => self.delta_r,
            Frame::Drive => self.big_delta + 2.0 * self.delta_r,
        }
    }
}

/// Energy origin of the finite SSH matrix.
///
/// `Drive` is the frame of the chain Hamiltonian: the b-mode detuning plus
/// the second-order shift `V + W = 2Δ_r` (the `+h.c.` of the onsite term).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    #[default]
    Rotating,
    Shifted,
    Drive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SshOptions {
    pub r_tol: f64,
    /// In units of `g`.
    pub uniformity_tol: f64,
    /// Skip the check of the end-site detunings.
    pub override_edges: bool,
    /// Skip every uniformity check and only average.
    pub relaxed: bool,
}

impl Default for SshOptions {
    fn default() -> Self {
        Self {
            r_tol: 0.05,
            uniformity_tol: 0.5,
            override_edges: false,
            relaxed: false,
        }
    }
}

/// End-site detuning that gives `b_1` and `b_N` the bulk onsite shift:
/// `Δᵃ_0 = Δ + 4(δ − Δ) e^{−2r}`.
pub fn edge_detuning(big_delta: f64, small_delta: f64, r: f64) -> f64 {
    big_delta + 4.0 * (small_delta - big_delta) * (-2.0 * r).exp()
}

pub fn effective_ssh(config: &ChainConfig, det: &Detunings, sq: &[SqueezeParams], opts: &SshOptions) -> Result<SSHModel> {
    check_sites(config, sq)?;
    if sq.is_empty() {
        return Err(Error::NonUniform(vec!["no driven sites to set r".into()]));
    }
    let n = config.n_b;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let big_delta = mean(&det.delta_b);
    let r = mean(&sq.iter().map(|s| s.r).collect::<Vec<_>>());
    let interior: Vec<f64> = (1..n).map(|i| a_energy(det, sq, i)).collect();
    let small_delta = mean(&interior);
    let tol = opts.uniformity_tol * config.g;
    let mut problems = Vec::new();
    if !opts.relaxed {
        for (k, d) in det.delta_b.iter().enumerate() {
            if (d - big_delta).abs() > tol {
                problems.push(format!("b{}: detuning {d} differs from mean {big_delta}", k + 1));
            }
        }
        for s in sq {
            if (s.r - r).abs() > opts.r_tol {
                problems.push(format!("a{}: r = {:.4} differs from mean {r:.4}", s.site, s.r));
            }
        }
        for (k, e) in interior.iter().enumerate() {
            if (e - small_delta).abs() > tol {
                problems.push(format!("a{}: energy {e} differs from mean {small_delta}", k + 1));
            }
        }
        if !opts.override_edges {
            let target = edge_detuning(big_delta, small_delta, r);
            for i in [0, n] {
                if (det.delta_a[i] - target).abs() > tol {
                    problems.push(format!(
                        "a{i}: edge detuning {} differs from {target:.4}",
                        det.delta_a[i]
                    ));
                }
            }
        }
    }
    if !problems.is_empty() {
        return Err(Error::NonUniform(problems));
    }
    SSHModel::from_parameters(config.g, big_delta, small_delta, r, n / 2)
}

/// Open chain of `2 n_cells` b-modes with bonds alternating `V, W, V, ...`.
pub fn finite_ssh_matrix(m: &SSHModel, frame: Frame) -> DMatrix<C64> {
    let n = m.sites();
    let e0 = m.reference_energy(frame);
    let mut out = DMatrix::from_diagonal_element(n, n, C64::new(e0, 0.0));
    for k in 0..n.saturating_sub(1) {
        let t = if k % 2 == 0 { m.v } else { m.w };
        out[(k, k + 1)] = C64::new(t, 0.0);
        out[(k + 1, k)] = C64::new(t, 0.0);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, hermitian_defect, hermitian_eigen};
    use crate::model::UnitMode;
    use proptest::prelude::*;

    fn chain_with_xi(r: f64, big: f64, small: f64) -> (ChainConfig, Vec<SqueezeParams>) {
        let edge = edge_detuning(big, small, r);
        let mut omega_a = vec![small; 7];
        omega_a[0] = edge;
        omega_a[6] = edge;
        let cfg = ChainConfig {
            n_b: 6,
            omega_b: vec![big; 6],
            omega_a,
            kerr_u: -1.0,
            g: 1.0,
            gamma: vec![0.01; 6],
            kappa: vec![0.01; 7],
            drive_freq: 0.0,
            drive_amp: vec![0.0; 2],
            unit_mode: UnitMode::DimensionlessG,
            rate_unit_si: None,
        };
        let sq = vec![
            SqueezeParams::from_r(2, r, small, std::f64::consts::PI),
            SqueezeParams::from_r(4, r, small, std::f64::consts::PI),
        ];
        (cfg, sq)
    }

    #[test]
    fn closed_form_squeezing() {
        let s = SqueezeParams::from_values(2, 5.0, C64::new(-2.0, 0.0)).unwrap();
        assert!((s.r - 3f64.ln() / 2.0).abs() < 1e-15);
        assert!((s.xi - 3.0).abs() < 1e-15);
        assert_eq!(s.theta, 0.0);
        assert_eq!(s.phase, std::f64::consts::PI);
        let free = SqueezeParams::from_values(2, 4.0, C64::new(0.0, 0.0)).unwrap();
        assert_eq!(free.r, 0.0);
        assert_eq!(free.xi, 4.0);
        let edge = SqueezeParams::from_values(2, 4.0 + 1e-15, C64::new(2.0, 0.0));
        assert!(matches!(edge, Err(Error::InstabilityBoundary { .. })));
    }

    #[test]
    fn tilted_phase_is_kept_and_flagged() {
        let s = SqueezeParams::from_values(2, 5.0, C64::from_polar(1.0, 0.3)).unwrap();
        assert!(s.theta_warning);
        assert!((s.phase - 0.3).abs() < 1e-15);
        let small = SqueezeParams::from_values(2, 5.0, C64::from_polar(1.0, std::f64::consts::PI + 0.005)).unwrap();
        assert!(!small.theta_warning);
        assert_eq!(small.phase, std::f64::consts::PI);
    }

    #[test]
    fn ssh_identities() {
        let m = SSHModel::from_parameters(1.0, 0.0, -13.0, 2f64.ln(), 3).unwrap();
        assert!((m.w - m.v).abs() < 1e-15);
        let m0 = SSHModel::from_parameters(1.0, 0.0, -13.0, 0.0, 3).unwrap();
        assert!((m0.w - m0.v / 4.0).abs() < 1e-16);
        assert!((m0.delta_r - 5.0 / (8.0 * 13.0)).abs() < 1e-16);
        let m9 = SSHModel::from_parameters(1.0, 0.0, -13.0, 0.9, 3).unwrap();
        assert!((m9.w / m9.v - 1.8f64.exp() / 4.0).abs() < 1e-12);
        assert!(m9.w / m9.v > 1.5);
    }

    #[test]
    fn dimer_and_topological_limits() {
        let dimers = finite_ssh_matrix(&SSHModel::hopping(1.0, 0.0, 3), Frame::Rotating);
        let (vals, _) = hermitian_eigen(&dimers, 1e-10).unwrap();
        for (v, e) in vals.iter().zip([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0]) {
            assert!((v - e).abs() < 1e-12);
        }
        let topo = finite_ssh_matrix(&SSHModel::hopping(0.0, 1.0, 3), Frame::Rotating);
        let (vals, _) = hermitian_eigen(&topo, 1e-10).unwrap();
        assert_eq!(vals.iter().filter(|v| v.abs() < 1e-12).count(), 2);
        let mid = finite_ssh_matrix(&SSHModel::hopping(1.0, 2.0, 3), Frame::Rotating);
        let (vals, _) = hermitian_eigen(&mid, 1e-10).unwrap();
        assert!(vals[2].abs() < 0.2 && vals[3].abs() < 0.2);
        assert!(vals[4] - vals[3] > 0.5 && vals[2] - vals[1] > 0.5);
    }

    #[test]
    fn rwa_bond_values() {
        let (cfg, sq) = chain_with_xi(2f64.ln(), 100.0, 107.0);
        // exp(-2r) sits exactly on the 0.25 limit here
        let ReducedHamiltonian::Rwa(h) = reduced_hamiltonian(&cfg, &cfg.detunings(), &sq, ReducedMode::Rwa, true).unwrap()
        else {
            unreachable!()
        };
        assert!((h[(3, 4)].re - 1.0).abs() < 1e-15);
        assert_eq!(h[(4, 4)].re, 107.0);
        assert_eq!(hermitian_defect(&h), 0.0);
    }

    #[test]
    fn exact_form_at_zero_squeezing_is_bare_chain() {
        let (cfg, sq) = chain_with_xi(0.0, 100.0, 107.0);
        let det = cfg.detunings();
        assert!(matches!(
            reduced_hamiltonian(&cfg, &det, &sq, ReducedMode::Rwa, false),
            Err(Error::RwaRefused(_))
        ));
        let ReducedHamiltonian::Exact(form) = reduced_hamiltonian(&cfg, &det, &sq, ReducedMode::Exact, false).unwrap()
        else {
            unreachable!()
        };
        assert!(form.anomalous.iter().all(|z| z.norm() == 0.0));
        for (p, q) in cfg.modes().bonds() {
            assert_eq!(form.normal[(p, q)], C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn exact_form_reproduces_fluctuation_spectrum() {
        // One driven site, coupling small: the rotated and unrotated doubled
        // matrices are related by a symplectic change of basis.
        let (cfg, _) = chain_with_xi(0.0, 100.0, 107.0);
        let mut cfg = cfg;
        cfg.kerr_u = -1.0;
        let det = cfg.detunings();
        let amp = C64::new(0.0, 1.3);
        let mut amps = Amplitudes::zeros(6);
        amps.0[4] = amp;
        amps.0[8] = amp;
        // choose bare detunings so that Δ̃ = 107 + 4U|a|² stays above 2|Ũ|
        let mut cfg2 = cfg.clone();
        cfg2.omega_a[2] = 107.0 - 4.0 * cfg.kerr_u * amp.norm_sqr();
        cfg2.omega_a[4] = cfg2.omega_a[2];
        let det2 = cfg2.detunings();
        let form = crate::model::build_fluctuation_hamiltonian(&cfg2, &det2, &amps, false).unwrap();
        let sq: Vec<_> = [2, 4].iter().map(|&s| site_squeeze(&cfg2, &det2, &amps, s).unwrap()).collect();
        let ReducedHamiltonian::Exact(rot) = reduced_hamiltonian(&cfg2, &det2, &sq, ReducedMode::Exact, true).unwrap()
        else {
            unreachable!()
        };
        let mut a: Vec<f64> = eigenvalues(&form.dynamical_matrix()).iter().map(|z| z.re).collect();
        let mut b: Vec<f64> = eigenvalues(&rot.dynamical_matrix()).iter().map(|z| z.re).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
        let _ = det;
    }

    #[test]
    fn aggregation_errors() {
        let (cfg, mut sq) = chain_with_xi(0.9, 100.0, 107.0);
        let det = cfg.detunings();
        assert!(effective_ssh(&cfg, &det, &sq, &SshOptions::default()).is_ok());
        sq[1] = SqueezeParams::from_r(4, 1.1, 107.0, std::f64::consts::PI);
        let err = effective_ssh(&cfg, &det, &sq, &SshOptions::default()).unwrap_err();
        assert!(matches!(err, Error::NonUniform(ref p) if p.iter().any(|s| s.contains("a4"))));
        let relaxed = SshOptions { relaxed: true, ..Default::default() };
        assert!((effective_ssh(&cfg, &det, &sq, &relaxed).unwrap().r - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn bogoliubov_round_trip(dt in 0.1f64..50.0, frac in 0.0f64..0.999, phase in -3.1f64..3.1) {
            let u = C64::from_polar(frac * dt / 2.0, phase);
            let s = SqueezeParams::from_values(2, dt, u).unwrap();
            prop_assert!((s.xi * (2.0 * s.r).cosh() - dt).abs() <= 1e-10 * dt);
            prop_assert!((s.xi * (2.0 * s.r).sinh() - 2.0 * u.norm()).abs() <= 1e-10 * dt);
        }

        #[test]
        fn ratio_is_scale_free(g in 0.1f64..3.0, d in 1.0f64..40.0, r in 0.0f64..2.0, c in 0.1f64..10.0) {
            let a = SSHModel::from_parameters(g, 0.0, -d, r, 3).unwrap();
            let b = SSHModel::from_parameters(g * c.sqrt(), 0.0, -d * c, r, 3).unwrap();
            prop_assert!((a.w / a.v - b.w / b.v).abs() <= 1e-12 * (a.w / a.v));
            prop_assert!((a.w / a.v - (2.0 * r).exp() / 4.0).abs() <= 1e-12 * (a.w / a.v));
        }

        #[test]
        fn shifted_spectrum_is_chiral(v in -3.0f64..3.0, w in -3.0f64..3.0, cells in 1usize..6) {
            let mut m = SSHModel::hopping(v, w, cells);
            m.delta_r = 0.7;
            let (vals, _) = hermitian_eigen(&finite_ssh_matrix(&m, Frame::Shifted), 1e-10).unwrap();
            let n = vals.len();
            for k in 0..n {
                prop_assert!(((vals[k] - 0.7) + (vals[n - 1 - k] - 0.7)).abs() < 1e-10);
            }
        }
    }
}
