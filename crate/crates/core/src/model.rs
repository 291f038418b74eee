//! Domain types for a two-level chiral molecule and a central molecule coupled
//! to an environment of such molecules.
//!
//! Units: ħ = 1 and all energies are dimensionless model units, so times are
//! inverse model energies. The classical pair `(z, φ)` is obtained from the
//! amplitudes `(a_L, a_R)` by a Madelung transformation with
//!
//! ```text
//!     z = |a_R|² − |a_L|²        φ = arg(a_R) − arg(a_L)
//! ```
//!
//! With this orientation of the phase difference the Schrödinger equation
//! `i ȧ_L = ε a_L + δ a_R`, `i ȧ_R = δ a_L − ε a_R` maps exactly onto Hamilton's
//! equations `ż = −∂H₀/∂φ`, `φ̇ = ∂H₀/∂z` for
//! `H₀ = −2δ√(1−z²) cos φ + 2εz`. The opposite orientation yields the
//! time-reversed flow.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on `|a_L|² + |a_R|² = 1`.
pub const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("population difference {z} outside [-1, 1]")]
    PopulationOutOfRange { z: f64 },
    #[error("amplitude norm {norm} differs from 1 by more than {NORM_TOLERANCE:e}")]
    NotNormalized { norm: f64 },
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("tunneling splitting delta must be non-negative, got {0}")]
    NegativeTunneling(f64),
    #[error("environment length mismatch: {states} states, {params} parameter sets, {lambdas} couplings")]
    LengthMismatch {
        states: usize,
        params: usize,
        lambdas: usize,
    },
}

fn finite(field: &'static str, value: f64) -> Result<f64, ModelError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ModelError::NonFinite { field, value })
    }
}

/// Tunneling half-splitting `delta` and parity-violating half-splitting
/// `epsilon` of one molecule, `H = δσ_x + εσ_z` in the `{|L⟩, |R⟩}` basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelParams {
    pub delta: f64,
    pub epsilon: f64,
}

impl TwoLevelParams {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self, ModelError> {
        let params = Self { delta, epsilon };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        finite("delta", self.delta)?;
        finite("epsilon", self.epsilon)?;
        if self.delta < 0.0 {
            return Err(ModelError::NegativeTunneling(self.delta));
        }
        Ok(())
    }
}

/// Population difference `z` and phase difference `phi` of one molecule.
///
/// `phi` is stored unwrapped; compare modulo 2π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoleculeState {
    pub z: f64,
    pub phi: f64,
}

impl MoleculeState {
    pub fn new(z: f64, phi: f64) -> Result<Self, ModelError> {
        let state = Self { z, phi };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        finite("z", self.z)?;
        finite("phi", self.phi)?;
        if self.z.abs() > 1.0 {
            return Err(ModelError::PopulationOutOfRange { z: self.z });
        }
        Ok(())
    }

    /// The reflected state `(−z, −φ)`.
    pub fn mirrored(&self) -> Self {
        Self {
            z: -self.z,
            phi: -self.phi,
        }
    }
}

/// Left/right amplitudes `ψ = a_L|L⟩ + a_R|R⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeState {
    pub a_l: Complex64,
    pub a_r: Complex64,
}

impl AmplitudeState {
    pub fn new(a_l: Complex64, a_r: Complex64) -> Result<Self, ModelError> {
        let amp = Self { a_l, a_r };
        amp.validate()?;
        Ok(amp)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a_l.norm_sqr() + self.a_r.norm_sqr()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let norm = self.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(ModelError::NotNormalized { norm });
        }
        Ok(())
    }

    /// `|a_R|² − |a_L|²`, valid for any (possibly unnormalized) amplitudes.
    pub fn population_difference(&self) -> f64 {
        self.a_r.norm_sqr() - self.a_l.norm_sqr()
    }

    pub fn left() -> Self {
        Self {
            a_l: Complex64::new(1.0, 0.0),
            a_r: Complex64::new(0.0, 0.0),
        }
    }

    pub fn right() -> Self {
        Self {
            a_l: Complex64::new(0.0, 0.0),
            a_r: Complex64::new(1.0, 0.0),
        }
    }
}

/// How the environment equations pick up the central molecule's population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CouplingConvention {
    /// Each environment molecule feels `Λ_i Z`, the derivative of `Z Σ Λ_i z_i`.
    #[default]
    #[serde(rename = "hamiltonian", alias = "hamiltonian_consistent")]
    HamiltonianConsistent,
    /// Each environment molecule feels `Z Σ_j Λ_j` (`N Λ Z` for uniform
    /// couplings), as the equations of motion were printed.
    #[serde(rename = "paper", alias = "paper_literal")]
    PaperLiteral,
}

impl CouplingConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::HamiltonianConsistent => "hamiltonian",
            Self::PaperLiteral => "paper",
        }
    }
}

impl fmt::Display for CouplingConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CouplingConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hamiltonian" | "hamiltonian_consistent" => Ok(Self::HamiltonianConsistent),
            "paper" | "paper_literal" => Ok(Self::PaperLiteral),
            other => Err(format!(
                "unknown coupling convention `{other}` (expected `hamiltonian` or `paper`)"
            )),
        }
    }
}

/// Phase-space point of the central molecule plus `N` environment molecules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemEnvState {
    pub system: MoleculeState,
    pub system_params: TwoLevelParams,
    pub env: Vec<MoleculeState>,
    pub env_params: Vec<TwoLevelParams>,
    pub lambdas: Vec<f64>,
}

impl SystemEnvState {
    pub fn new(
        system: MoleculeState,
        system_params: TwoLevelParams,
        env: Vec<MoleculeState>,
        env_params: Vec<TwoLevelParams>,
        lambdas: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let state = Self {
            system,
            system_params,
            env,
            env_params,
            lambdas,
        };
        state.validate()?;
        Ok(state)
    }

    /// An isolated molecule (`N = 0`).
    pub fn isolated(system: MoleculeState, params: TwoLevelParams) -> Self {
        Self {
            system,
            system_params: params,
            env: Vec::new(),
            env_params: Vec::new(),
            lambdas: Vec::new(),
        }
    }

    pub fn n_env(&self) -> usize {
        self.env.len()
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
        for (state, params) in self.env.iter().zip(&self.env_params) {
            state.validate()?;
            params.validate()?;
        }
        for &lambda in &self.lambdas {
            finite("lambda", lambda)?;
        }
        Ok(())
    }
}

/// Result of [`madelung_forward`]. `degenerate` is set when one amplitude
/// vanishes, in which case `phi` is undefined and reported as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Madelung {
    pub state: MoleculeState,
    pub degenerate: bool,
}

/// Amplitudes to `(z, φ)` with `φ = arg(a_R) − arg(a_L)` reduced to `[0, 2π)`.
pub fn madelung_forward(amp: &AmplitudeState) -> Result<Madelung, ModelError> {
    amp.validate()?;
    let z = amp.population_difference().clamp(-1.0, 1.0);
    if amp.a_l.norm_sqr() == 0.0 || amp.a_r.norm_sqr() == 0.0 {
        return Ok(Madelung {
            state: MoleculeState { z: z.signum(), phi: 0.0 },
            degenerate: true,
        });
    }
    // arg(a_R · conj(a_L)) avoids subtracting two wrapped angles
    let phi = wrap_phase((amp.a_r * amp.a_l.conj()).arg());
    Ok(Madelung {
        state: MoleculeState { z, phi },
        degenerate: false,
    })
}

/// `(z, φ)` to amplitudes with the gauge fixed by `arg(a_R) = global_phase`.
pub fn madelung_inverse(state: &MoleculeState, global_phase: f64) -> Result<AmplitudeState, ModelError> {
    state.validate()?;
    finite("global_phase", global_phase)?;
    let mod_l = ((1.0 - state.z) / 2.0).sqrt();
    let mod_r = ((1.0 + state.z) / 2.0).sqrt();
    Ok(AmplitudeState {
        a_l: Complex64::from_polar(mod_l, global_phase - state.phi),
        a_r: Complex64::from_polar(mod_r, global_phase),
    })
}

/// Reduce an angle to `[0, 2π)`.
pub fn wrap_phase(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// `H₀ = −2δ√(1−z²) cos φ + 2εz`.
pub fn h0_value(state: &MoleculeState, params: &TwoLevelParams) -> Result<f64, ModelError> {
    state.validate()?;
    Ok(h0_unchecked(state.z, state.phi, params))
}

#[inline]
pub(crate) fn h0_unchecked(z: f64, phi: f64, params: &TwoLevelParams) -> f64 {
    -2.0 * params.delta * (1.0 - z * z).max(0.0).sqrt() * phi.cos() + 2.0 * params.epsilon * z
}

/// `H_S + Σ_i H_{E,i} + Z Σ_i Λ_i z_i`.
///
/// Assumes `s` satisfies [`SystemEnvState::validate`].
pub fn total_h_value(s: &SystemEnvState) -> f64 {
    let mut energy = h0_unchecked(s.system.z, s.system.phi, &s.system_params);
    let mut coupling = 0.0;
    for ((state, params), &lambda) in s.env.iter().zip(&s.env_params).zip(&s.lambdas) {
        energy += h0_unchecked(state.z, state.phi, params);
        coupling += lambda * state.z;
    }
    energy + s.system.z * coupling
}
