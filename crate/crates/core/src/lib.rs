//! A central two-level chiral molecule coupled to a bath of chiral molecules
//! through a bilinear `Z Σ Λ_i z_i` interaction.
//!
//! - [`model`]: parameters, states, Madelung maps and Hamiltonian values.
//! - [`dynamics`]: classical and amplitude equations of motion and integrators.
//! - [`ensemble`]: seeded, order-independent Monte Carlo averaging of `Z(t)`.
//! - [`spectra`]: mixing angle and enantiomer energy splittings.
//! - [`potentials`]: parity-odd radial potentials and chirality classification.

pub mod dynamics;
pub mod ensemble;
pub mod model;
mod ode;
pub mod potentials;
pub mod spectra;

pub use dynamics::{
    amplitude_rhs, cross_formalism_check, hamilton_rhs, integrate_amplitude, integrate_amplitude_central,
    integrate_classical, AmplitudeSystem, DynamicsError, IntegratorConfig, Method, Trajectory,
};
pub use ensemble::{
    convergence_study, run_ensemble, sample_env_initial, time_average, EnsembleConfig, EnsembleError,
    EnsembleResult,
};
pub use model::{
    h0_value, madelung_forward, madelung_inverse, total_h_value, AmplitudeState, CouplingConvention, ModelError,
    MoleculeState, SystemEnvState, TwoLevelParams,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
