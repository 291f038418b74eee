//! Equations of motion for the central molecule and its environment, in the
//! classical `(z, φ)` form and in the amplitude (nonlinear Schrödinger) form,
//! plus fixed-step and adaptive integrators for both.
//!
//! Flat layouts used internally:
//!
//! ```text
//!     classical : [Z, Φ, z_1, φ_1, …, z_N, φ_N]
//!     amplitude : [Re a_L, Im a_L, Re a_R, Im a_R, Re b_L1, Im b_L1, …]
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    madelung_forward, madelung_inverse, total_h_value, AmplitudeState, CouplingConvention, ModelError,
    MoleculeState, SystemEnvState, TwoLevelParams,
};
use crate::ode::{AdaptiveFailure, Dopri5, Rhs, Rk4, Singular};

/// The classical equations are singular at `|z| = 1`; refuse to evaluate
/// closer than this.
pub const SINGULARITY_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("molecule {molecule} reached |z| = {z} at t = {t}; the classical form is singular at |z| = 1, use the amplitude form")]
    Singularity { t: f64, molecule: usize, z: f64 },
    #[error("adaptive step underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Method {
    #[default]
    #[serde(rename = "rk4", alias = "rk4_fixed")]
    Rk4Fixed,
    #[serde(rename = "rk45", alias = "rk45_adaptive")]
    Rk45Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Fixed step (rk4) or initial step (rk45). Adjusted down to
    /// `t_final / ceil(t_final / dt)` so the grid ends on `t_final`.
    pub dt: f64,
    pub t_final: f64,
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Record every `record_stride`-th grid point (the final point is always
    /// recorded).
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 20.0,
            method: Method::Rk4Fixed,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            record_stride: 10,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(DynamicsError::InvalidConfig(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("t_final", self.t_final)?;
        positive("abs_tol", self.abs_tol)?;
        positive("rel_tol", self.rel_tol)?;
        if self.record_stride == 0 {
            return Err(DynamicsError::InvalidConfig("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of grid steps and the effective step.
    pub fn grid(&self) -> (usize, f64) {
        let n = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }

    /// The recorded sample instants.
    pub fn sample_times(&self) -> Vec<f64> {
        let (n, h) = self.grid();
        sample_steps(n, self.record_stride)
            .map(|k| if k == n { self.t_final } else { k as f64 * h })
            .collect()
    }
}

fn sample_steps(n: usize, stride: usize) -> impl Iterator<Item = usize> {
    (0..=n).filter(move |&k| k % stride == 0 || k == n)
}

/// Central molecule plus environment in the amplitude representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeSystem {
    pub system: AmplitudeState,
    pub system_params: TwoLevelParams,
    pub env: Vec<AmplitudeState>,
    pub env_params: Vec<TwoLevelParams>,
    pub lambdas: Vec<f64>,
}

impl AmplitudeSystem {
    /// Madelung-matched amplitudes for a classical state, every molecule
    /// gauged with `arg(a_R) = global_phase`.
    pub fn from_classical(state: &SystemEnvState, global_phase: f64) -> Result<Self, ModelError> {
        state.validate()?;
        Ok(Self {
            system: madelung_inverse(&state.system, global_phase)?,
            system_params: state.system_params,
            env: state
                .env
                .iter()
                .map(|m| madelung_inverse(m, global_phase))
                .collect::<Result<_, _>>()?,
            env_params: state.env_params.clone(),
            lambdas: state.lambdas.clone(),
        })
    }

    /// Classical view; degenerate molecules (a vanishing amplitude) get `φ = 0`.
    pub fn to_classical(&self) -> Result<SystemEnvState, ModelError> {
        Ok(SystemEnvState {
            system: madelung_forward(&self.system)?.state,
            system_params: self.system_params,
            env: self
                .env
                .iter()
                .map(|a| madelung_forward(a).map(|m| m.state))
                .collect::<Result<_, _>>()?,
            env_params: self.env_params.clone(),
            lambdas: self.lambdas.clone(),
        })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.env.len() != self.env_params.len() || self.env.len() != self.lambdas.len() {
            return Err(ModelError::LengthMismatch {
                states: self.env.len(),
                params: self.env_params.len(),
                lambdas: self.lambdas.len(),
            });
        }
        self.system.validate()?;
        self.system_params.validate()?;
        for (amp, params) in self.env.iter().zip(&self.env_params) {
            amp.validate()?;
            params.validate()?;
        }
        Ok(())
    }

    /// Largest `| |a_L|² + |a_R|² − 1 |` over all molecules.
    pub fn max_norm_error(&self) -> f64 {
        std::iter::once(&self.system)
            .chain(&self.env)
            .map(|a| (a.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn flatten(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(4 * (self.env.len() + 1));
        for amp in std::iter::once(&self.system).chain(&self.env) {
            y.extend_from_slice(&[amp.a_l.re, amp.a_l.im, amp.a_r.re, amp.a_r.im]);
        }
        y
    }

    fn with_flat(&self, y: &[f64]) -> Self {
        let amp = |c: &[f64]| AmplitudeState {
            a_l: Complex64::new(c[0], c[1]),
            a_r: Complex64::new(c[2], c[3]),
        };
        Self {
            system: amp(&y[0..4]),
            system_params: self.system_params,
            env: y[4..].chunks_exact(4).map(amp).collect(),
            env_params: self.env_params.clone(),
            lambdas: self.lambdas.clone(),
        }
    }
}

/// Population difference of the central molecule, whatever the representation.
pub trait CentralPopulation {
    fn central_z(&self) -> f64;
}

impl CentralPopulation for SystemEnvState {
    fn central_z(&self) -> f64 {
        self.system.z
    }
}

impl CentralPopulation for AmplitudeSystem {
    fn central_z(&self) -> f64 {
        self.system.population_difference()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    /// `max_t |H(t) − H(0)| / max(1, |H(0)|)` over the recorded samples.
    pub conserved_energy_drift: f64,
}

impl<S: CentralPopulation> Trajectory<S> {
    pub fn central_z(&self) -> Vec<f64> {
        self.states.iter().map(CentralPopulation::central_z).collect()
    }
}

/// Central-molecule population only, for callers that do not need the full
/// phase-space history (ensembles).
#[derive(Debug, Clone, PartialEq)]
pub struct CentralSeries {
    pub times: Vec<f64>,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MoleculeRate {
    pub z_dot: f64,
    pub phi_dot: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseSpaceVelocity {
    pub system: MoleculeRate,
    pub env: Vec<MoleculeRate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeRate {
    pub d_l: Complex64,
    pub d_r: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVelocity {
    pub system: AmplitudeRate,
    pub env: Vec<AmplitudeRate>,
}

struct Coupled {
    system: TwoLevelParams,
    env: Vec<TwoLevelParams>,
    lambdas: Vec<f64>,
    lambda_sum: f64,
    convention: CouplingConvention,
}

impl Coupled {
    fn new(system: TwoLevelParams, env: &[TwoLevelParams], lambdas: &[f64], convention: CouplingConvention) -> Self {
        Self {
            system,
            env: env.to_vec(),
            lambdas: lambdas.to_vec(),
            lambda_sum: lambdas.iter().sum(),
            convention,
        }
    }

    #[inline]
    fn env_field(&self, i: usize, central_z: f64) -> f64 {
        match self.convention {
            CouplingConvention::HamiltonianConsistent => self.lambdas[i] * central_z,
            CouplingConvention::PaperLiteral => central_z * self.lambda_sum,
        }
    }
}

struct ClassicalRhs(Coupled);

#[inline]
fn guarded_root(z: f64, molecule: usize) -> Result<f64, Singular> {
    if !(z.abs() < 1.0 - SINGULARITY_GUARD) {
        return Err(Singular { molecule, z });
    }
    Ok((1.0 - z * z).sqrt())
}

impl Rhs for ClassicalRhs {
    fn dim(&self) -> usize {
        2 + 2 * self.0.env.len()
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<(), Singular> {
        let c = &self.0;
        let (z, phi) = (y[0], y[1]);
        let root = guarded_root(z, 0)?;
        let mut field = 0.0;
        for (i, &lambda) in c.lambdas.iter().enumerate() {
            field += lambda * y[2 + 2 * i];
        }
        let (sin, cos) = phi.sin_cos();
        dy[0] = -2.0 * c.system.delta * root * sin;
        dy[1] = 2.0 * c.system.epsilon + 2.0 * c.system.delta * z * cos / root + field;
        for (i, params) in c.env.iter().enumerate() {
            let (zi, phii) = (y[2 + 2 * i], y[3 + 2 * i]);
            let root_i = guarded_root(zi, i + 1)?;
            let (sin, cos) = phii.sin_cos();
            dy[2 + 2 * i] = -2.0 * params.delta * root_i * sin;
            dy[3 + 2 * i] =
                2.0 * params.epsilon + 2.0 * params.delta * zi * cos / root_i + c.env_field(i, z);
        }
        Ok(())
    }
}

struct AmplitudeRhs(Coupled);

/// `−i H a` for `H = [[e, δ], [δ, −e]]`, written on real components.
#[inline]
fn schrodinger(a: &[f64], delta: f64, e: f64, out: &mut [f64]) {
    let h_l = (e * a[0] + delta * a[2], e * a[1] + delta * a[3]);
    let h_r = (delta * a[0] - e * a[2], delta * a[1] - e * a[3]);
    out[0] = h_l.1;
    out[1] = -h_l.0;
    out[2] = h_r.1;
    out[3] = -h_r.0;
}

#[inline]
fn pop_diff(a: &[f64]) -> f64 {
    (a[2] * a[2] + a[3] * a[3]) - (a[0] * a[0] + a[1] * a[1])
}

impl Rhs for AmplitudeRhs {
    fn dim(&self) -> usize {
        4 + 4 * self.0.env.len()
    }

    fn eval(&self, y: &[f64], dy: &mut [f64]) -> Result<(), Singular> {
        let c = &self.0;
        let central_z = pop_diff(&y[0..4]);
        let mut field = 0.0;
        for (i, &lambda) in c.lambdas.iter().enumerate() {
            let off = 4 + 4 * i;
            field += lambda * pop_diff(&y[off..off + 4]);
        }
        schrodinger(&y[0..4], c.system.delta, c.system.epsilon + 0.5 * field, &mut dy[0..4]);
        for (i, params) in c.env.iter().enumerate() {
            let off = 4 + 4 * i;
            let e = params.epsilon + 0.5 * c.env_field(i, central_z);
            schrodinger(&y[off..off + 4], params.delta, e, &mut dy[off..off + 4]);
        }
        Ok(())
    }
}

fn classical_flat(s: &SystemEnvState) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 + 2 * s.env.len());
    y.extend_from_slice(&[s.system.z, s.system.phi]);
    for m in &s.env {
        y.extend_from_slice(&[m.z, m.phi]);
    }
    y
}

fn classical_from_flat(template: &SystemEnvState, y: &[f64]) -> SystemEnvState {
    SystemEnvState {
        system: MoleculeState { z: y[0], phi: y[1] },
        system_params: template.system_params,
        env: y[2..].chunks_exact(2).map(|c| MoleculeState { z: c[0], phi: c[1] }).collect(),
        env_params: template.env_params.clone(),
        lambdas: template.lambdas.clone(),
    }
}

/// Total energy straight from the flat classical vector.
fn classical_energy(c: &Coupled, y: &[f64]) -> f64 {
    let h0 = |z: f64, phi: f64, p: &TwoLevelParams| {
        -2.0 * p.delta * (1.0 - z * z).max(0.0).sqrt() * phi.cos() + 2.0 * p.epsilon * z
    };
    let mut energy = h0(y[0], y[1], &c.system);
    let mut coupling = 0.0;
    for (i, p) in c.env.iter().enumerate() {
        energy += h0(y[2 + 2 * i], y[3 + 2 * i], p);
        coupling += c.lambdas[i] * y[2 + 2 * i];
    }
    energy + y[0] * coupling
}

/// Same functional in amplitude variables, using
/// `√(1−z²) cos φ = 2 Re(a_R a_L*)` so no phase has to be extracted.
fn amplitude_energy(c: &Coupled, y: &[f64]) -> f64 {
    let h0 = |a: &[f64], p: &TwoLevelParams| {
        let re_cross = a[2] * a[0] + a[3] * a[1];
        -4.0 * p.delta * re_cross + 2.0 * p.epsilon * pop_diff(a)
    };
    let mut energy = h0(&y[0..4], &c.system);
    let mut coupling = 0.0;
    for (i, p) in c.env.iter().enumerate() {
        let off = 4 + 4 * i;
        energy += h0(&y[off..off + 4], p);
        coupling += c.lambdas[i] * pop_diff(&y[off..off + 4]);
    }
    pop_diff(&y[0..4]) * coupling + energy
}

/// Hamilton's equations `Ż = −∂H/∂Φ`, `Φ̇ = ∂H/∂Z`, and likewise for each
/// environment molecule.
pub fn hamilton_rhs(s: &SystemEnvState, convention: CouplingConvention) -> Result<PhaseSpaceVelocity, DynamicsError> {
    s.validate()?;
    let rhs = ClassicalRhs(Coupled::new(s.system_params, &s.env_params, &s.lambdas, convention));
    let y = classical_flat(s);
    let mut dy = vec![0.0; y.len()];
    rhs.eval(&y, &mut dy)
        .map_err(|Singular { molecule, z }| DynamicsError::Singularity { t: 0.0, molecule, z })?;
    let rate = |c: &[f64]| MoleculeRate {
        z_dot: c[0],
        phi_dot: c[1],
    };
    Ok(PhaseSpaceVelocity {
        system: rate(&dy[0..2]),
        env: dy[2..].chunks_exact(2).map(rate).collect(),
    })
}

/// Time derivatives of all amplitudes under the nonlinear Schrödinger
/// equations.
pub fn amplitude_rhs(s: &AmplitudeSystem, convention: CouplingConvention) -> Result<AmplitudeVelocity, DynamicsError> {
    s.validate()?;
    let rhs = AmplitudeRhs(Coupled::new(s.system_params, &s.env_params, &s.lambdas, convention));
    let y = s.flatten();
    let mut dy = vec![0.0; y.len()];
    rhs.eval(&y, &mut dy).expect("amplitude form has no singularity");
    let rate = |c: &[f64]| AmplitudeRate {
        d_l: Complex64::new(c[0], c[1]),
        d_r: Complex64::new(c[2], c[3]),
    };
    Ok(AmplitudeVelocity {
        system: rate(&dy[0..4]),
        env: dy[4..].chunks_exact(4).map(rate).collect(),
    })
}

/// Integrates `rhs` from `y` over the configured grid, calling `sample` at
/// every recorded instant (including `t = 0`).
fn drive<R, F>(rhs: &R, y: &mut [f64], cfg: &IntegratorConfig, mut sample: F) -> Result<(), DynamicsError>
where
    R: Rhs,
    F: FnMut(f64, &[f64]),
{
    cfg.validate()?;
    debug_assert_eq!(rhs.dim(), y.len());
    let (n, h) = cfg.grid();
    let time_at = |k: usize| if k == n { cfg.t_final } else { k as f64 * h };
    sample(0.0, y);
    match cfg.method {
        Method::Rk4Fixed => {
            let mut rk = Rk4::new(y.len());
            for k in 1..=n {
                rk.step(rhs, y, h).map_err(|Singular { molecule, z }| DynamicsError::Singularity {
                    t: time_at(k - 1),
                    molecule,
                    z,
                })?;
                if k % cfg.record_stride == 0 || k == n {
                    sample(time_at(k), y);
                }
            }
        }
        Method::Rk45Adaptive => {
            let mut dp = Dopri5::new(y.len(), h, cfg.t_final, cfg.abs_tol, cfg.rel_tol);
            let mut prev = 0;
            for k in sample_steps(n, cfg.record_stride).skip(1) {
                dp.advance(rhs, y, time_at(prev), time_at(k)).map_err(|failure| match failure {
                    AdaptiveFailure::Singular {
                        t,
                        cause: Singular { molecule, z },
                    } => DynamicsError::Singularity { t, molecule, z },
                    AdaptiveFailure::Underflow { t, h } => DynamicsError::StepUnderflow { t, h },
                })?;
                sample(time_at(k), y);
                prev = k;
            }
        }
    }
    Ok(())
}

fn relative_drift(energies: &[f64]) -> f64 {
    let h0 = energies[0];
    let scale = h0.abs().max(1.0);
    energies.iter().map(|e| (e - h0).abs()).fold(0.0, f64::max) / scale
}

/// Integrates Hamilton's equations. Fails with [`DynamicsError::Singularity`]
/// if any molecule comes within [`SINGULARITY_GUARD`] of a pole.
pub fn integrate_classical(
    initial: &SystemEnvState,
    cfg: &IntegratorConfig,
    convention: CouplingConvention,
) -> Result<Trajectory<SystemEnvState>, DynamicsError> {
    initial.validate()?;
    let rhs = ClassicalRhs(Coupled::new(
        initial.system_params,
        &initial.env_params,
        &initial.lambdas,
        convention,
    ));
    let mut y = classical_flat(initial);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut energies = Vec::new();
    drive(&rhs, &mut y, cfg, |t, y| {
        times.push(t);
        energies.push(classical_energy(&rhs.0, y));
        states.push(classical_from_flat(initial, y));
    })?;
    debug_assert!((energies[0] - total_h_value(initial)).abs() < 1e-12 * (1.0 + energies[0].abs()));
    Ok(Trajectory {
        times,
        states,
        conserved_energy_drift: relative_drift(&energies),
    })
}

/// Integrates the amplitude equations. Regular everywhere, including pure
/// enantiomer states.
pub fn integrate_amplitude(
    initial: &AmplitudeSystem,
    cfg: &IntegratorConfig,
    convention: CouplingConvention,
) -> Result<Trajectory<AmplitudeSystem>, DynamicsError> {
    initial.validate()?;
    let rhs = AmplitudeRhs(Coupled::new(
        initial.system_params,
        &initial.env_params,
        &initial.lambdas,
        convention,
    ));
    let mut y = initial.flatten();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut energies = Vec::new();
    drive(&rhs, &mut y, cfg, |t, y| {
        times.push(t);
        energies.push(amplitude_energy(&rhs.0, y));
        states.push(initial.with_flat(y));
    })?;
    Ok(Trajectory {
        times,
        states,
        conserved_energy_drift: relative_drift(&energies),
    })
}

/// Amplitude integration that keeps only `Z(t)` of the central molecule.
pub fn integrate_amplitude_central(
    initial: &AmplitudeSystem,
    cfg: &IntegratorConfig,
    convention: CouplingConvention,
) -> Result<CentralSeries, DynamicsError> {
    initial.validate()?;
    let rhs = AmplitudeRhs(Coupled::new(
        initial.system_params,
        &initial.env_params,
        &initial.lambdas,
        convention,
    ));
    let mut y = initial.flatten();
    let mut times = Vec::new();
    let mut z = Vec::new();
    drive(&rhs, &mut y, cfg, |t, y| {
        times.push(t);
        z.push(pop_diff(&y[0..4]));
    })?;
    Ok(CentralSeries { times, z })
}

/// Integrates the classical and amplitude forms from Madelung-matched initial
/// conditions and returns `max_t |Z_classical(t) − Z_amplitude(t)|`.
pub fn cross_formalism_check(
    initial: &SystemEnvState,
    cfg: &IntegratorConfig,
    convention: CouplingConvention,
) -> Result<f64, DynamicsError> {
    let classical = integrate_classical(initial, cfg, convention)?;
    let amplitude = integrate_amplitude(&AmplitudeSystem::from_classical(initial, 0.0)?, cfg, convention)?;
    Ok(classical
        .central_z()
        .iter()
        .zip(amplitude.central_z())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}
