//! Classical steady states of the driven chain: time integration, Newton
//! refinement, the cubic reduction of the symmetric six-cell chain,
//! drive-sweep continuation and linear stability.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::linearize;
use crate::model::{
    build_fluctuation_hamiltonian, max_norm, mean_field_rhs, mean_field_rhs_into, Amplitudes, ChainConfig,
    Detunings, Site, C64, I,
};
use crate::par;

pub const ODE_TOL: f64 = 1e-8;
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 60;
pub const JUMP_FACTOR: f64 = 5.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub amplitudes: Amplitudes,
    /// Max-norm of the mean-field right-hand side at `amplitudes`.
    pub residual: f64,
    pub stable: bool,
    /// `|a_2|²`, present whenever the chain has a driven site.
    pub x: Option<f64>,
}

impl SteadyState {
    fn assemble(config: &ChainConfig, amplitudes: Amplitudes, residual: f64) -> Self {
        let det = config.detunings();
        let stable = stability_eigenvalues(config, &det, &amplitudes)
            .map(|ev| is_stable(&ev))
            .unwrap_or(false);
        let x = (config.n_b >= 4).then(|| amplitudes.a(2).norm_sqr());
        Self {
            amplitudes,
            residual,
            stable,
            x,
        }
    }

    pub fn a_s(&self) -> Vec<C64> {
        self.amplitudes.0.iter().step_by(2).copied().collect()
    }

    pub fn b_s(&self) -> Vec<C64> {
        self.amplitudes.0.iter().skip(1).step_by(2).copied().collect()
    }
}

/// Fixed RK4 step `0.01 / max(|Δ|, g, 𝓔)`.
pub fn default_dt(config: &ChainConfig) -> f64 {
    0.01 / config.max_rate().max(f64::MIN_POSITIVE)
}

/// `2000 / min(γ, κ)`.
pub fn default_t_max(config: &ChainConfig) -> f64 {
    let min_loss = config
        .gamma
        .iter()
        .chain(&config.kappa)
        .copied()
        .fold(f64::INFINITY, f64::min);
    2000.0 / min_loss
}

/// Integrates the mean-field equations with classical RK4 until the
/// derivative max-norm drops below `tol`.
pub fn evolve_to_steady(
    config: &ChainConfig,
    initial: &Amplitudes,
    t_max: f64,
    dt: f64,
    tol: f64,
) -> Result<SteadyState> {
    config_ok(config)?;
    if config.gamma.iter().chain(&config.kappa).any(|r| *r <= 0.0) {
        return Err(Error::Precondition(
            "time integration needs every decay rate > 0".into(),
        ));
    }
    let m = config.modes().len();
    if initial.0.len() != m {
        return Err(Error::Shape {
            expected: m,
            got: initial.0.len(),
        });
    }
    if !(dt > 0.0) || !(t_max > 0.0) {
        return Err(Error::Domain(format!("need dt > 0 and t_max > 0 (got {dt}, {t_max})")));
    }
    let det = config.detunings();
    let mut y = initial.0.clone();
    let mut k1 = vec![C64::new(0.0, 0.0); m];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let steps = (t_max / dt).ceil() as usize;
    for _ in 0..steps {
        mean_field_rhs_into(config, &det, &y, &mut k1);
        let residual = max_norm(&k1);
        if residual < tol {
            return Ok(SteadyState::assemble(config, Amplitudes(y), residual));
        }
        if !residual.is_finite() {
            break;
        }
        axpy(&y, 0.5 * dt, &k1, &mut tmp);
        mean_field_rhs_into(config, &det, &tmp, &mut k2);
        axpy(&y, 0.5 * dt, &k2, &mut tmp);
        mean_field_rhs_into(config, &det, &tmp, &mut k3);
        axpy(&y, dt, &k3, &mut tmp);
        mean_field_rhs_into(config, &det, &tmp, &mut k4);
        for j in 0..m {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    mean_field_rhs_into(config, &det, &y, &mut k1);
    let residual = max_norm(&k1);
    if residual < tol {
        return Ok(SteadyState::assemble(config, Amplitudes(y), residual));
    }
    Err(Error::Timeout {
        t_max,
        residual,
        last: Box::new(Amplitudes(y)),
    })
}

fn axpy(y: &[C64], h: f64, k: &[C64], out: &mut [C64]) {
    for ((o, a), b) in out.iter_mut().zip(y).zip(k) {
        *o = a + h * b;
    }
}

fn config_ok(config: &ChainConfig) -> Result<()> {
    crate::model::validate(config).into_result()
}

/// Outcome of a Newton solve including the residual after every iteration.
#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub state: SteadyState,
    pub iterations: usize,
    pub history: Vec<f64>,
}

pub fn newton_refine(config: &ChainConfig, guess: &Amplitudes, tol: f64, max_iter: usize) -> Result<SteadyState> {
    newton_solve(config, guess, tol, max_iter).map(|r| r.state)
}

/// Damped Newton iteration on the real/imaginary split of `ż = 0`.
pub fn newton_solve(config: &ChainConfig, guess: &Amplitudes, tol: f64, max_iter: usize) -> Result<NewtonReport> {
    config_ok(config)?;
    let det = config.detunings();
    let m = config.modes().len();
    if guess.0.len() != m {
        return Err(Error::Shape {
            expected: m,
            got: guess.0.len(),
        });
    }
    if guess.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Precondition("Newton guess is not finite".into()));
    }
    let mut z = guess.0.clone();
    let mut f = mean_field_rhs(config, &det, &z)?;
    let mut history = vec![max_norm(&f)];
    let mut best = (history[0], z.clone());
    for iteration in 0..max_iter {
        let residual = max_norm(&f);
        if residual < tol {
            return Ok(NewtonReport {
                state: SteadyState::assemble(config, Amplitudes(z), residual),
                iterations: iteration,
                history,
            });
        }
        let jac = split_jacobian(config, &det, &z)?;
        let rhs = DVector::from_iterator(2 * m, f.iter().map(|v| -v.re).chain(f.iter().map(|v| -v.im)));
        let step = jac
            .lu()
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or(Error::SingularJacobian { iteration })?;
        let norm0 = l2(&f);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=30 {
            let trial: Vec<C64> = (0..m)
                .map(|j| z[j] + lambda * C64::new(step[j], step[m + j]))
                .collect();
            let ft = mean_field_rhs(config, &det, &trial)?;
            let nt = l2(&ft);
            if nt.is_finite() && nt < norm0 {
                accepted = Some((trial, ft));
                break;
            }
            lambda *= 0.5;
        }
        let Some((trial, ft)) = accepted else {
            break;
        };
        z = trial;
        f = ft;
        let r = max_norm(&f);
        history.push(r);
        if r < best.0 {
            best = (r, z.clone());
        }
    }
    let residual = max_norm(&f);
    if residual < tol {
        let iterations = history.len() - 1;
        return Ok(NewtonReport {
            state: SteadyState::assemble(config, Amplitudes(z), residual),
            iterations,
            history,
        });
    }
    Err(Error::NewtonDiverged {
        iterations: history.len() - 1,
        residual: best.0,
        best: Box::new(Amplitudes(best.1)),
    })
}

fn l2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real 2M×2M Jacobian of the split system. With `δż = Jz δz + Jc δz*`,
/// `Jz = −iA` and `Jc = −iB` from the lossy quadratic form.
fn split_jacobian(config: &ChainConfig, det: &Detunings, z: &[C64]) -> Result<DMatrix<f64>> {
    let form = build_fluctuation_hamiltonian(config, det, &Amplitudes(z.to_vec()), true)?;
    let m = z.len();
    let jz = form.normal.map(|v| -I * v);
    let jc = form.anomalous.map(|v| -I * v);
    let mut out = DMatrix::zeros(2 * m, 2 * m);
    for r in 0..m {
        for c in 0..m {
            let plus = jz[(r, c)] + jc[(r, c)];
            let minus = jz[(r, c)] - jc[(r, c)];
            out[(r, c)] = plus.re;
            out[(r, m + c)] = -minus.im;
            out[(m + r, c)] = plus.im;
            out[(m + r, m + c)] = minus.re;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub eigenvalues: Vec<C64>,
}

impl StabilityReport {
    /// Eigenvalue with the largest real part.
    pub fn leading(&self) -> Option<C64> {
        self.eigenvalues.iter().copied().max_by(|a, b| a.re.total_cmp(&b.re))
    }
}

/// Eigenvalues of the lossy linearised Jacobian `−iD` at `ss`.
pub fn stability_check(config: &ChainConfig, det: &Detunings, ss: &SteadyState) -> Result<StabilityReport> {
    let eigenvalues = stability_eigenvalues(config, det, &ss.amplitudes)?;
    Ok(StabilityReport {
        stable: is_stable(&eigenvalues),
        eigenvalues,
    })
}

fn stability_eigenvalues(config: &ChainConfig, det: &Detunings, amps: &Amplitudes) -> Result<Vec<C64>> {
    let form = build_fluctuation_hamiltonian(config, det, amps, true)?;
    let mut ev = linalg::eigenvalues(&form.jacobian());
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

/// Strict `Re λ < 0` for every eigenvalue. Values within rounding of zero
/// (relative 1e−12 of the spectral radius) count as marginal, hence unstable.
fn is_stable(ev: &[C64]) -> bool {
    let radius = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let margin = 1e-12 * radius.max(f64::MIN_POSITIVE);
    ev.iter().all(|z| z.re < -margin)
}

/// Quantities of the single-site reduction of the symmetric six-cell chain.
///
/// With `D^a_i = Δᵃ_i − iκ_i` and `D^b_i = Δᵇ_i − iγ_i`, eliminating every
/// undriven mode leaves `(Δ̃ + 2U|a_2|²) a_2 = −i𝓔`, hence the cubic
/// `4U² x³ + 4U Re(Δ̃) x² + |Δ̃|² x − 𝓔² = 0` in `x = |a_2|²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubicReduction {
    pub kerr_u: f64,
    pub delta_tilde: C64,
    pub chi1: C64,
    pub chi2: C64,
    pub eff_delta_a1: C64,
    pub eff_delta_b1: C64,
    /// Loss-inclusive detunings of the eliminated sites, kept for
    /// reconstructing the full amplitude vector.
    d_a0: C64,
    d_a3: C64,
    /// `[c3, c2, c1, c0]` at the configuration's drive.
    pub coefficients: [f64; 4],
}

impl CubicReduction {
    /// Reduction for a bare driven site with effective detuning `delta_tilde`.
    pub fn from_site(kerr_u: f64, delta_tilde: C64, drive: f64) -> Self {
        let zero = C64::new(0.0, 0.0);
        let mut out = Self {
            kerr_u,
            delta_tilde,
            chi1: zero,
            chi2: zero,
            eff_delta_a1: zero,
            eff_delta_b1: zero,
            d_a0: zero,
            d_a3: zero,
            coefficients: [0.0; 4],
        };
        out.coefficients = out.coefficients_for(drive);
        out
    }

    pub fn coefficients_for(&self, drive: f64) -> [f64; 4] {
        let u = self.kerr_u;
        [
            4.0 * u * u,
            4.0 * u * self.delta_tilde.re,
            self.delta_tilde.norm_sqr(),
            -drive * drive,
        ]
    }

    /// Drive `𝓔² = x |Δ̃ + 2Ux|²` that puts the root at `x`.
    pub fn drive_sq_for(&self, x: f64) -> f64 {
        x * (self.delta_tilde + 2.0 * self.kerr_u * x).norm_sqr()
    }
}

fn is_symmetric_six(config: &ChainConfig) -> bool {
    if config.n_b != 6 || config.drive_amp.len() != 2 {
        return false;
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
    let a_sym = (0..=6).all(|i| close(config.omega_a[i], config.omega_a[6 - i]) && close(config.kappa[i], config.kappa[6 - i]));
    let b_sym = (0..6).all(|k| close(config.omega_b[k], config.omega_b[5 - k]) && close(config.gamma[k], config.gamma[5 - k]));
    a_sym && b_sym && close(config.drive_amp[0], config.drive_amp[1])
}

pub fn build_cubic_reduction(config: &ChainConfig, det: &Detunings) -> Result<CubicReduction> {
    if !is_symmetric_six(config) {
        return Err(Error::Precondition(
            "cubic reduction needs N = 6 with mirror-symmetric detunings, losses and drive".into(),
        ));
    }
    let g = config.g;
    let da = |i: usize| C64::new(det.delta_a[i], -config.kappa[i]);
    let db = |i: usize| C64::new(det.delta_b[i - 1], -config.gamma[i - 1]);
    let scale = config.max_rate().max(config.g).max(1e-300);
    let guard = |z: C64, name: &'static str| -> Result<C64> {
        if z.norm() <= 1e-12 * scale || !z.re.is_finite() || !z.im.is_finite() {
            Err(Error::Pole(name))
        } else {
            Ok(z)
        }
    };
    let d_a0 = guard(da(0), "delta_a0 - i kappa0")?;
    let eff_delta_b1 = guard(db(1) - g * g / d_a0, "effective delta_b1")?;
    let eff_delta_a1 = guard(da(1) - g * g / eff_delta_b1, "effective delta_a1")?;
    let chi1_den = guard(db(2) - g * g / eff_delta_a1, "delta_b2 - g^2/effective delta_a1")?;
    let chi1 = -g / chi1_den;
    let d_a3 = da(3);
    let chi2_den = guard(2.0 * g * g - db(3) * d_a3, "2g^2 - delta_b3 delta_a3")?;
    let chi2 = g * d_a3 / chi2_den;
    let delta_tilde = da(2) + g * (chi1 + chi2);
    let mut out = CubicReduction {
        kerr_u: config.kerr_u,
        delta_tilde,
        chi1,
        chi2,
        eff_delta_a1,
        eff_delta_b1,
        d_a0,
        d_a3,
        coefficients: [0.0; 4],
    };
    out.coefficients = out.coefficients_for(config.drive_amp[0]);
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CubicRoot {
    pub x: f64,
    /// False for the middle root of three (negative slope of `𝓔²(x)`).
    pub candidate_stable: bool,
}

/// Non-negative real roots of the reduced cubic at drive `drive`, ascending.
pub fn solve_cubic(red: &CubicReduction, drive: f64) -> Result<Vec<CubicRoot>> {
    if !(drive >= 0.0) {
        return Err(Error::Domain(format!("drive must be >= 0 (got {drive})")));
    }
    let [c3, c2, c1, c0] = red.coefficients_for(drive);
    if c3 == 0.0 {
        if c1 == 0.0 {
            return Err(Error::DegenerateCubic("U = 0 and delta_tilde = 0".into()));
        }
        return Ok(vec![CubicRoot {
            x: -c0 / c1,
            candidate_stable: true,
        }]);
    }
    if drive == 0.0 {
        return Ok(vec![CubicRoot {
            x: 0.0,
            candidate_stable: true,
        }]);
    }
    let poly = |x: f64| ((c3 * x + c2) * x + c1) * x + c0;
    let slope = |x: f64| (3.0 * c3 * x + 2.0 * c2) * x + c1;
    let mut roots: Vec<f64> = real_cubic_roots(c3, c2, c1, c0)
        .into_iter()
        .map(|mut x| {
            for _ in 0..4 {
                let s = slope(x);
                if s == 0.0 {
                    break;
                }
                let next = x - poly(x) / s;
                if !next.is_finite() {
                    break;
                }
                x = next;
            }
            x
        })
        .filter(|x| *x > 0.0)
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * a.abs().max(b.abs()));
    let n = roots.len();
    Ok(roots
        .iter()
        .enumerate()
        .map(|(k, &x)| CubicRoot {
            x,
            candidate_stable: if n == 3 { k != 1 } else { slope(x) >= 0.0 },
        })
        .collect())
}

/// Real roots of `c3 x³ + c2 x² + c1 x + c0` by the trigonometric or
/// Cardano formula on the depressed cubic.
fn real_cubic_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let (b, c, d) = (c2 / c3, c1 / c3, c0 / c3);
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    let scale = (q * q / 4.0).max((p * p * p / 27.0).abs()).max(f64::MIN_POSITIVE);
    if p < 0.0 && disc <= 1e-12 * scale {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let phi = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    } else {
        let s = disc.max(0.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() - shift]
    }
}

/// Full amplitude vector of the symmetric six-cell chain for the cubic root `x`.
pub fn amplitudes_from_root(config: &ChainConfig, red: &CubicReduction, x: f64) -> Amplitudes {
    let g = config.g;
    let e = config.drive_amp[0];
    let mut amps = Amplitudes::zeros(6);
    let modes = config.modes();
    let a2 = -I * e / (red.delta_tilde + 2.0 * red.kerr_u * x);
    let b2 = red.chi1 * a2;
    let a1 = -g * b2 / red.eff_delta_a1;
    let b1 = -g * a1 / red.eff_delta_b1;
    let a0 = -g * b1 / red.d_a0;
    let b3 = red.chi2 * a2;
    let a3 = -2.0 * g * b3 / red.d_a3;
    let set = |amps: &mut Amplitudes, site: Site, v: C64| amps.0[modes.flat(site)] = v;
    for (left, right, v) in [
        (Site::A(0), Site::A(6), a0),
        (Site::B(1), Site::B(6), b1),
        (Site::A(1), Site::A(5), a1),
        (Site::B(2), Site::B(5), b2),
        (Site::A(2), Site::A(4), a2),
        (Site::B(3), Site::B(4), b3),
    ] {
        set(&mut amps, left, v);
        set(&mut amps, right, v);
    }
    set(&mut amps, Site::A(3), a3);
    amps
}

/// Steady state of the symmetric six-cell chain on the cubic root closest to `x_hint`.
pub fn solve_from_root(config: &ChainConfig, x_hint: f64) -> Result<SteadyState> {
    config_ok(config)?;
    let red = build_cubic_reduction(config, &config.detunings())?;
    let roots = solve_cubic(&red, config.drive_amp[0])?;
    let root = roots
        .iter()
        .min_by(|a, b| (a.x - x_hint).abs().total_cmp(&(b.x - x_hint).abs()))
        .ok_or_else(|| Error::DegenerateCubic("no non-negative root".into()))?;
    let guess = amplitudes_from_root(config, &red, root.x);
    newton_refine(config, &guess, NEWTON_TOL, NEWTON_MAX_ITER)
}

/// Which branch to land on when a drive admits several steady states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedBranch {
    #[default]
    Low,
    High,
}

/// Steady state reached by a method suited to the configuration.
///
/// The symmetric six-cell chain is seeded from the cubic roots. Other chains
/// follow a Newton continuation in the drive strength from zero, with a
/// detour through an overdriven state for the high branch.
pub fn solve_steady(config: &ChainConfig, seed: SeedBranch) -> Result<SteadyState> {
    config_ok(config)?;
    let det = config.detunings();
    if let Ok(red) = build_cubic_reduction(config, &det) {
        let roots = solve_cubic(&red, config.drive_amp[0])?;
        let pick = match seed {
            SeedBranch::Low => roots.iter().find(|r| r.candidate_stable),
            SeedBranch::High => roots.iter().rev().find(|r| r.candidate_stable),
        };
        if let Some(root) = pick {
            let guess = amplitudes_from_root(config, &red, root.x);
            if let Ok(ss) = newton_refine(config, &guess, NEWTON_TOL, NEWTON_MAX_ITER) {
                return Ok(ss);
            }
        }
    }
    let mut state = Amplitudes::zeros(config.n_b);
    let factors: Vec<f64> = match seed {
        SeedBranch::Low => (1..=20).map(|k| k as f64 / 20.0).collect(),
        SeedBranch::High => (1..=40)
            .map(|k| k as f64 / 10.0)
            .chain((0..30).map(|k| 4.0 - 3.0 * (k + 1) as f64 / 30.0))
            .collect(),
    };
    let mut last = None;
    for f in factors {
        let cfg = config.with_scaled_drive(f);
        let ss = continue_from(&cfg, &state)?;
        state = ss.amplitudes.clone();
        last = Some(ss);
    }
    match last {
        Some(ss) => Ok(ss),
        None => newton_refine(config, &state, NEWTON_TOL, NEWTON_MAX_ITER),
    }
}

/// One continuation step: Newton from `prev`; if that fails or lands on an
/// unstable state, integrate from `prev` and polish.
fn continue_from(config: &ChainConfig, prev: &Amplitudes) -> Result<SteadyState> {
    match newton_refine(config, prev, NEWTON_TOL, NEWTON_MAX_ITER) {
        Ok(ss) if ss.stable => return Ok(ss),
        Ok(_) | Err(_) => {}
    }
    let evolved = evolve_to_steady(config, prev, default_t_max(config), default_dt(config), ODE_TOL)?;
    newton_refine(config, &evolved.amplitudes, NEWTON_TOL, NEWTON_MAX_ITER)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Forward,
    Backward,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
    Both,
}

/// Swept drive quantity: Rabi frequency `𝓔` in config units, or power in watts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    Rabi,
    Power,
}

impl Control {
    pub fn apply(&self, config: &ChainConfig, value: f64) -> Result<ChainConfig> {
        match self {
            Control::Rabi => Ok(config.with_uniform_drive(value)),
            Control::Power => {
                let mut out = config.clone();
                for (j, site) in config.modes().driven().enumerate() {
                    out.drive_amp[j] = config.rabi_for_power(value, site)?;
                }
                Ok(out)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub control: f64,
    pub x: f64,
    /// Squeezing parameter per driven site; `None` past the instability boundary.
    pub r: Vec<Option<f64>>,
    pub stable: bool,
    pub jump: bool,
    pub state: SteadyState,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub branch: Branch,
    pub control: Control,
    pub points: Vec<SweepPoint>,
    pub jumps: Vec<usize>,
}

impl SweepResult {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.control).collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    /// Point at control value `c`, looked up by exact grid equality.
    pub fn at(&self, c: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.control == c)
    }
}

fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    let h = (to - from) / (steps - 1) as f64;
    (0..steps)
        .map(|k| if k + 1 == steps { to } else { from + h * k as f64 })
        .collect()
}

/// Warm-started continuation across a control grid.
pub fn hysteresis_sweep(
    config: &ChainConfig,
    control: Control,
    from: f64,
    to: f64,
    steps: usize,
    direction: Direction,
) -> Result<Vec<SweepResult>> {
    if steps < 2 {
        return Err(Error::Domain(format!("sweep needs at least 2 steps (got {steps})")));
    }
    if !(from.is_finite() && to.is_finite()) || from == to {
        return Err(Error::Domain(format!("sweep bounds must be finite and distinct ({from}, {to})")));
    }
    config_ok(config)?;
    let (lo, hi) = (from.min(to), from.max(to));
    let up = linspace(lo, hi, steps);
    let mut down = up.clone();
    down.reverse();
    match direction {
        Direction::Forward => Ok(vec![run_branch(config, control, &up, Branch::Forward)?]),
        Direction::Backward => Ok(vec![run_branch(config, control, &down, Branch::Backward)?]),
        Direction::Both => {
            let (f, b) = par::join(
                || run_branch(config, control, &up, Branch::Forward),
                || run_branch(config, control, &down, Branch::Backward),
            );
            Ok(vec![f?, b?])
        }
    }
}

fn run_branch(config: &ChainConfig, control: Control, grid: &[f64], branch: Branch) -> Result<SweepResult> {
    let mut points: Vec<SweepPoint> = Vec::with_capacity(grid.len());
    let mut prev: Option<Amplitudes> = None;
    for (index, &c) in grid.iter().enumerate() {
        let annotate = |source: Error| Error::Sweep {
            index,
            control: c,
            source: Box::new(source),
        };
        let cfg = control.apply(config, c).map_err(annotate)?;
        let ss = match &prev {
            None => {
                let seed = match branch {
                    Branch::Forward => SeedBranch::Low,
                    Branch::Backward => SeedBranch::High,
                };
                solve_steady(&cfg, seed)
            }
            Some(p) => continue_from(&cfg, p),
        }
        .map_err(annotate)?;
        let det = cfg.detunings();
        let r = cfg
            .modes()
            .driven()
            .map(|site| linearize::site_squeeze(&cfg, &det, &ss.amplitudes, site).ok().map(|s| s.r))
            .collect();
        prev = Some(ss.amplitudes.clone());
        points.push(SweepPoint {
            control: c,
            x: ss.x.unwrap_or(0.0),
            r,
            stable: ss.stable,
            jump: false,
            state: ss,
        });
    }
    let jumps = flag_jumps(&points.iter().map(|p| p.x).collect::<Vec<_>>(), JUMP_FACTOR);
    for &j in &jumps {
        points[j].jump = true;
    }
    Ok(SweepResult {
        branch,
        control,
        points,
        jumps,
    })
}

/// Indices `i` where `|x_i − x_{i−1}|` exceeds `factor` times the median
/// adjacent change.
pub fn flag_jumps(xs: &[f64], factor: f64) -> Vec<usize> {
    if xs.len() < 3 {
        return Vec::new();
    }
    let diffs: Vec<f64> = xs.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let mut sorted = diffs.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    };
    let floor = 1e-9 * xs.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let above: Vec<bool> = diffs.iter().map(|d| *d > factor * median && *d > floor).collect();
    // a run of consecutive large steps (the steep approach to a fold plus
    // the jump itself) is one event, placed at its largest step
    let mut out = Vec::new();
    let mut k = 0;
    while k < diffs.len() {
        if !above[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < diffs.len() && above[k] {
            k += 1;
        }
        let peak = (start..k).max_by(|&a, &b| diffs[a].total_cmp(&diffs[b])).unwrap();
        out.push(peak + 1);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HysteresisSummary {
    pub forward_jumps: Vec<usize>,
    pub backward_jumps: Vec<usize>,
    /// Control values of the forward and backward jumps.
    pub forward_jump_controls: Vec<f64>,
    pub backward_jump_controls: Vec<f64>,
    /// `∫ |x_backward − x_forward| d(control)` on the shared grid.
    pub loop_area: f64,
    /// Largest relative branch difference outside the bistable window.
    pub max_rel_diff_outside: f64,
    /// Control interval where the branches differ by more than 1e−6 relative.
    pub window: Option<(f64, f64)>,
}

pub fn summarize_hysteresis(forward: &SweepResult, backward: &SweepResult) -> HysteresisSummary {
    let grid = forward.grid();
    let xb: Vec<f64> = grid
        .iter()
        .map(|c| backward.at(*c).map(|p| p.x).unwrap_or(f64::NAN))
        .collect();
    let xf = forward.xs();
    let x_max = xf.iter().chain(&xb).map(|x| x.abs()).fold(0.0, f64::max);
    let rel: Vec<f64> = xf
        .iter()
        .zip(&xb)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-9 * x_max).max(1e-300))
        .collect();
    let inside: Vec<usize> = (0..grid.len()).filter(|&k| rel[k] > 1e-6).collect();
    let window = inside.first().map(|&k| (grid[k], grid[*inside.last().unwrap()]));
    let max_rel_diff_outside = (0..grid.len())
        .filter(|&k| match window {
            Some((lo, hi)) => grid[k] < lo || grid[k] > hi,
            None => true,
        })
        .map(|k| rel[k])
        .fold(0.0, f64::max);
    let loop_area = grid
        .windows(2)
        .enumerate()
        .map(|(k, w)| 0.5 * (w[1] - w[0]) * ((xb[k] - xf[k]).abs() + (xb[k + 1] - xf[k + 1]).abs()))
        .sum();
    HysteresisSummary {
        forward_jumps: forward.jumps.clone(),
        backward_jumps: backward.jumps.clone(),
        forward_jump_controls: forward.jumps.iter().map(|&j| forward.points[j].control).collect(),
        backward_jump_controls: backward.jumps.iter().map(|&j| backward.points[j].control).collect(),
        loop_area,
        max_rel_diff_outside,
        window,
    }
}
