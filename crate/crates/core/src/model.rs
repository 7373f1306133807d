//! Chain configuration, mode bookkeeping and the matrices built from it.
//!
//! The chain holds `N` b-modes and `N + 1` a-modes laid out as
//! `[a_0, b_1, a_1, b_2, ..., b_N, a_N]`. Every b-mode couples to its two
//! neighbouring a-modes with strength `g`; the even interior a-modes
//! `a_2, a_4, ..., a_{N-2}` carry the Kerr term and the coherent drive.
//!
//! All rates are stored in one unit system: either units of `g`
//! ([`UnitMode::DimensionlessG`]) or rad/s ([`UnitMode::Si`]). SI quantities
//! only enter through [`rabi_from_power`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Reduced Planck constant in J s.
pub const HBAR: f64 = 1.054_571_817e-34;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitMode {
    DimensionlessG,
    Si,
}

/// Physical parameters of the driven chain.
///
/// Index conventions follow the arrays: `omega_b[k]` and `gamma[k]` belong
/// to `b_{k+1}`, `omega_a[k]` and `kappa[k]` to `a_k`, and `drive_amp[j]`
/// to the driven site `a_{2(j+1)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub n_b: usize,
    pub omega_b: Vec<f64>,
    pub omega_a: Vec<f64>,
    pub kerr_u: f64,
    pub g: f64,
    pub gamma: Vec<f64>,
    pub kappa: Vec<f64>,
    pub drive_freq: f64,
    pub drive_amp: Vec<f64>,
    pub unit_mode: UnitMode,
    /// Value of one rate unit in rad/s. Only consulted when a drive power in
    /// watts has to be converted while `unit_mode` is dimensionless.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_unit_si: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub failures: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(self.failures))
        }
    }
}

pub fn validate(config: &ChainConfig) -> ValidationReport {
    let mut failures = Vec::new();
    let n = config.n_b;
    if n < 2 {
        failures.push(format!("n_b must be at least 2 (got {n})"));
    }
    if !n.is_multiple_of(2) {
        failures.push(format!("n_b must be even (got {n})"));
    }
    let n_drive = (n / 2).saturating_sub(1);
    let lengths = [
        ("omega_b", config.omega_b.len(), n),
        ("omega_a", config.omega_a.len(), n + 1),
        ("gamma", config.gamma.len(), n),
        ("kappa", config.kappa.len(), n + 1),
        ("drive_amp", config.drive_amp.len(), n_drive),
    ];
    for (name, got, want) in lengths {
        if got != want {
            failures.push(format!("{name} must have length {want} (got {got})"));
        }
    }
    if !(config.kerr_u <= 0.0) {
        failures.push(format!("U must satisfy U = -|U| (got {})", config.kerr_u));
    }
    if !(config.g > 0.0) {
        failures.push(format!("g must be positive (got {})", config.g));
    }
    for (name, rates) in [("gamma", &config.gamma), ("kappa", &config.kappa)] {
        if let Some(bad) = rates.iter().find(|r| !(**r >= 0.0)) {
            failures.push(format!("{name} entries must be >= 0 (found {bad})"));
        }
    }
    if let Some(bad) = config.drive_amp.iter().find(|e| !(**e >= 0.0)) {
        failures.push(format!("drive_amp entries must be >= 0 (found {bad})"));
    }
    let finite = config
        .omega_a
        .iter()
        .chain(&config.omega_b)
        .chain(std::iter::once(&config.drive_freq))
        .all(|v| v.is_finite());
    if !finite {
        failures.push("frequencies must be finite".to_string());
    }
    if let Some(unit) = config.rate_unit_si {
        if !(unit > 0.0) {
            failures.push(format!("rate_unit_si must be positive (got {unit})"));
        }
    }
    ValidationReport { failures }
}

/// Detunings from the drive, `Δᵇ_i = Ω_i − ω_d` and `Δᵃ_i = ω_i − ω_d`.
///
/// The a-detunings belong to the a-modes; this pairing is the one every
/// equation of motion uses.
#[derive(Clone, Debug, PartialEq)]
pub struct Detunings {
    pub delta_b: Vec<f64>,
    pub delta_a: Vec<f64>,
}

impl Detunings {
    pub fn from_config(config: &ChainConfig) -> Self {
        Self {
            delta_b: config.omega_b.iter().map(|w| w - config.drive_freq).collect(),
            delta_a: config.omega_a.iter().map(|w| w - config.drive_freq).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Site {
    /// `a_i`, `0 <= i <= N`.
    A(usize),
    /// `b_i`, `1 <= i <= N`.
    B(usize),
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Site::A(i) => write!(f, "a{i}"),
            Site::B(i) => write!(f, "b{i}"),
        }
    }
}

impl std::str::FromStr for Site {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("cannot parse site {s:?} (expected e.g. b1 or a0)"));
        let (head, tail) = s.split_at(s.len().min(1));
        let idx: usize = tail.parse().map_err(|_| bad())?;
        match head {
            "a" | "A" => Ok(Site::A(idx)),
            "b" | "B" => Ok(Site::B(idx)),
            _ => Err(bad()),
        }
    }
}

/// Interleaved ordering `[a_0, b_1, a_1, ..., b_N, a_N]`.
///
/// `a_i` sits at flat position `2i` and `b_i` at `2i - 1` (zero-based), so
/// `b_1` is the second entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModeIndex {
    n_b: usize,
}

impl ModeIndex {
    pub fn new(n_b: usize) -> Self {
        Self { n_b }
    }

    pub fn n_b(&self) -> usize {
        self.n_b
    }

    pub fn len(&self) -> usize {
        2 * self.n_b + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn flat(&self, site: Site) -> usize {
        match site {
            Site::A(i) => {
                debug_assert!(i <= self.n_b);
                2 * i
            }
            Site::B(i) => {
                debug_assert!(i >= 1 && i <= self.n_b);
                2 * i - 1
            }
        }
    }

    pub fn checked_flat(&self, site: Site) -> Option<usize> {
        match site {
            Site::A(i) if i <= self.n_b => Some(2 * i),
            Site::B(i) if i >= 1 && i <= self.n_b => Some(2 * i - 1),
            _ => None,
        }
    }

    pub fn site(&self, flat: usize) -> Site {
        debug_assert!(flat < self.len());
        if flat.is_multiple_of(2) {
            Site::A(flat / 2)
        } else {
            Site::B(flat.div_ceil(2))
        }
    }

    /// Driven Kerr sites `a_2, a_4, ..., a_{N-2}` as a-indices.
    pub fn driven(&self) -> impl Iterator<Item = usize> {
        (1..self.n_b / 2).map(|j| 2 * j)
    }

    pub fn is_driven(&self, a_index: usize) -> bool {
        a_index.is_multiple_of(2) && a_index >= 2 && a_index + 2 <= self.n_b
    }

    /// Nearest-neighbour bonds as flat index pairs `(k, k + 1)`.
    pub fn bonds(&self) -> impl Iterator<Item = (usize, usize)> {
        (0..2 * self.n_b).map(|k| (k, k + 1))
    }
}

/// Complex mean-field amplitudes in [`ModeIndex`] order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplitudes(pub Vec<C64>);

impl Amplitudes {
    pub fn zeros(n_b: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); 2 * n_b + 1])
    }

    pub fn a(&self, i: usize) -> C64 {
        self.0[2 * i]
    }

    pub fn b(&self, i: usize) -> C64 {
        self.0[2 * i - 1]
    }

    pub fn max_norm(&self) -> f64 {
        max_norm(&self.0)
    }
}

pub(crate) fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Drive power and the quantities needed to turn it into a Rabi frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveSpec {
    pub power: f64,
    pub drive_freq: f64,
    pub kappa: f64,
    pub hbar: f64,
}

impl DriveSpec {
    pub fn si(power: f64, drive_freq: f64, kappa: f64) -> Self {
        Self {
            power,
            drive_freq,
            kappa,
            hbar: HBAR,
        }
    }
}

/// `𝓔 = sqrt(2 κ P_d / (ħ ω_d))`.
pub fn rabi_from_power(d: &DriveSpec) -> Result<f64> {
    if !(d.drive_freq > 0.0) {
        return Err(Error::Domain(format!(
            "drive frequency must be positive (got {})",
            d.drive_freq
        )));
    }
    if !(d.power >= 0.0) || !(d.kappa >= 0.0) || !(d.hbar > 0.0) {
        return Err(Error::Domain(format!(
            "power and kappa must be >= 0 and hbar > 0 (got P = {}, kappa = {}, hbar = {})",
            d.power, d.kappa, d.hbar
        )));
    }
    Ok((2.0 * d.kappa * d.power / (d.hbar * d.drive_freq)).sqrt())
}

impl ChainConfig {
    pub fn modes(&self) -> ModeIndex {
        ModeIndex::new(self.n_b)
    }

    pub fn detunings(&self) -> Detunings {
        Detunings::from_config(self)
    }

    /// Drive amplitude on a-site `a_index`, zero for undriven sites.
    pub fn drive_at(&self, a_index: usize) -> f64 {
        if self.modes().is_driven(a_index) {
            self.drive_amp[a_index / 2 - 1]
        } else {
            0.0
        }
    }

    /// Rabi frequency in config units for a drive power in watts, using the
    /// leakage rate of driven site `a_index`.
    pub fn rabi_for_power(&self, power: f64, a_index: usize) -> Result<f64> {
        let scale = match (self.unit_mode, self.rate_unit_si) {
            (UnitMode::Si, _) => 1.0,
            (UnitMode::DimensionlessG, Some(unit)) => unit,
            (UnitMode::DimensionlessG, None) => {
                return Err(Error::Precondition(
                    "converting watts needs unit_mode = si or rate_unit_si".into(),
                ))
            }
        };
        let spec = DriveSpec::si(
            power,
            self.drive_freq * scale,
            self.kappa[a_index] * scale,
        );
        Ok(rabi_from_power(&spec)? / scale)
    }

    /// Copy of the configuration with every drive amplitude set to `amp`.
    pub fn with_uniform_drive(&self, amp: f64) -> Self {
        let mut out = self.clone();
        out.drive_amp.iter_mut().for_each(|e| *e = amp);
        out
    }

    /// Copy of the configuration with all drive amplitudes scaled by `factor`.
    pub fn with_scaled_drive(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.drive_amp.iter_mut().for_each(|e| *e *= factor);
        out
    }

    /// Largest of `|Δ|`, `g` and the drive amplitudes.
    pub fn max_rate(&self) -> f64 {
        let det = self.detunings();
        det.delta_a
            .iter()
            .chain(&det.delta_b)
            .map(|d| d.abs())
            .chain(std::iter::once(self.g))
            .chain(self.drive_amp.iter().copied())
            .fold(0.0, f64::max)
    }
}

/// Right-hand side of the mean-field equations in the drive frame.
///
/// `ḃ_i = −i(Δᵇ_i − iγ_i) b_i − i g (a_{i−1} + a_i)` and
/// `ȧ_i = −i(Δᵃ_i − iκ_i) a_i − i g (b_i + b_{i+1}) − 2iU |a_i|² a_i + 𝓔_i`,
/// with the Kerr and drive terms only on driven sites.
pub fn mean_field_rhs(config: &ChainConfig, det: &Detunings, state: &[C64]) -> Result<Vec<C64>> {
    let modes = config.modes();
    if state.len() != modes.len() {
        return Err(Error::Shape {
            expected: modes.len(),
            got: state.len(),
        });
    }
    let mut out = vec![C64::new(0.0, 0.0); modes.len()];
    mean_field_rhs_into(config, det, state, &mut out);
    Ok(out)
}

pub(crate) fn mean_field_rhs_into(config: &ChainConfig, det: &Detunings, state: &[C64], out: &mut [C64]) {
    let n = config.n_b;
    let g = config.g;
    for i in 1..=n {
        let k = 2 * i - 1;
        let loss = C64::new(det.delta_b[i - 1], -config.gamma[i - 1]);
        out[k] = -I * loss * state[k] - I * g * (state[k - 1] + state[k + 1]);
    }
    for i in 0..=n {
        let k = 2 * i;
        let loss = C64::new(det.delta_a[i], -config.kappa[i]);
        let mut neighbours = C64::new(0.0, 0.0);
        if i >= 1 {
            neighbours += state[k - 1];
        }
        if i < n {
            neighbours += state[k + 1];
        }
        let mut d = -I * loss * state[k] - I * g * neighbours;
        if config.modes().is_driven(i) {
            let a = state[k];
            d += -2.0 * I * config.kerr_u * a.norm_sqr() * a + config.drive_at(i);
        }
        out[k] = d;
    }
}

/// Quadratic fluctuation Hamiltonian around a mean-field state.
///
/// `normal` is the particle-conserving block `A` (with `−iγ`, `−iκ` on the
/// diagonal when built with losses) and `anomalous` the pairing block `B`,
/// so that the fluctuations obey `d/dt [δY, δY*] = −i D [δY, δY*]` with the
/// dynamical matrix `D = [[A, B], [−B*, −A*]]`.
///
/// The pairing entry on a driven site is `2Ũ = 2U (aˢ)²`: the Hamiltonian
/// term `Ũ δa†² + h.c.` contributes twice its coefficient to the equation
/// of motion, which is also what makes `ξ = sqrt(Δ̃² − 4|Ũ|²)` the
/// Bogoliubov frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub normal: DMatrix<C64>,
    pub anomalous: DMatrix<C64>,
    pub with_losses: bool,
}

impl QuadraticForm {
    pub fn dim(&self) -> usize {
        self.normal.nrows()
    }

    /// Particle-hole matrix `[[A, B], [B*, A*]]`, Hermitian when lossless.
    pub fn bdg_matrix(&self) -> DMatrix<C64> {
        let m = self.dim();
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        out.view_mut((0, 0), (m, m)).copy_from(&self.normal);
        out.view_mut((0, m), (m, m)).copy_from(&self.anomalous);
        out.view_mut((m, 0), (m, m)).copy_from(&self.anomalous.map(|z| z.conj()));
        out.view_mut((m, m), (m, m)).copy_from(&self.normal.map(|z| z.conj()));
        out
    }

    /// Dynamical matrix `[[A, B], [−B*, −A*]]` in the `[δY, δY*]` basis.
    pub fn dynamical_matrix(&self) -> DMatrix<C64> {
        let m = self.dim();
        let mut out = DMatrix::zeros(2 * m, 2 * m);
        out.view_mut((0, 0), (m, m)).copy_from(&self.normal);
        out.view_mut((0, m), (m, m)).copy_from(&self.anomalous);
        out.view_mut((m, 0), (m, m)).copy_from(&self.anomalous.map(|z| -z.conj()));
        out.view_mut((m, m), (m, m)).copy_from(&self.normal.map(|z| -z.conj()));
        out
    }

    /// Linear-stability Jacobian `−i D`.
    pub fn jacobian(&self) -> DMatrix<C64> {
        self.dynamical_matrix().map(|z| -I * z)
    }
}

pub fn build_fluctuation_hamiltonian(
    config: &ChainConfig,
    det: &Detunings,
    state: &Amplitudes,
    with_losses: bool,
) -> Result<QuadraticForm> {
    let modes = config.modes();
    let m = modes.len();
    if state.0.len() != m {
        return Err(Error::Precondition(format!(
            "steady state has {} amplitudes, chain has {m} modes",
            state.0.len()
        )));
    }
    if state.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Precondition("steady state is not finite".into()));
    }
    let mut normal = DMatrix::<C64>::zeros(m, m);
    let mut anomalous = DMatrix::<C64>::zeros(m, m);
    for i in 1..=config.n_b {
        let k = modes.flat(Site::B(i));
        let loss = if with_losses { config.gamma[i - 1] } else { 0.0 };
        normal[(k, k)] = C64::new(det.delta_b[i - 1], -loss);
    }
    for i in 0..=config.n_b {
        let k = modes.flat(Site::A(i));
        let loss = if with_losses { config.kappa[i] } else { 0.0 };
        let mut diag = det.delta_a[i];
        if modes.is_driven(i) {
            let a = state.a(i);
            diag += 4.0 * config.kerr_u * a.norm_sqr();
            anomalous[(k, k)] = 2.0 * config.kerr_u * a * a;
        }
        normal[(k, k)] = C64::new(diag, -loss);
    }
    for (p, q) in modes.bonds() {
        normal[(p, q)] = C64::new(config.g, 0.0);
        normal[(q, p)] = C64::new(config.g, 0.0);
    }
    Ok(QuadraticForm {
        normal,
        anomalous,
        with_losses,
    })
}
