//! TOML run configuration.
//!
//! ```toml
//! [system]
//! z0 = 1.0
//! phi0 = 0.0
//! delta = 1.0
//! epsilon = 0.0
//!
//! [environment]
//! n_env = 10
//! delta = 1.0
//! epsilon = 0.0
//!
//! [coupling]
//! lambda = 1.0
//! convention = "hamiltonian"   # or "paper"
//!
//! [integrator]
//! method = "rk4"               # or "rk45"
//! dt = 1e-3
//! t_final = 20.0
//! record_stride = 10
//! formalism = "amplitude"      # or "classical"
//!
//! [ensemble]
//! n_realizations = 2000
//! seed = 2024
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every key is optional; unknown keys are rejected. Command-line flags take
//! precedence over the file, which takes precedence over the defaults.

use std::path::{Path, PathBuf};

use chiral_core::dynamics::{IntegratorConfig, Method};
use chiral_core::ensemble::{EnsembleConfig, EnvSampling};
use chiral_core::model::{CouplingConvention, MoleculeState, TwoLevelParams};
use chiral_core::potentials::PotentialParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formalism {
    #[default]
    Amplitude,
    Classical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub z0: f64,
    pub phi0: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            z0: 1.0,
            phi0: 0.0,
            delta: 1.0,
            epsilon: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentSection {
    pub n_env: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub z_range: [f64; 2],
    pub phi_range: [f64; 2],
    /// Explicit initial populations for `simulate`; sampled when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi0: Option<Vec<f64>>,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        let sampling = EnvSampling::default();
        Self {
            n_env: 10,
            delta: 1.0,
            epsilon: 0.0,
            z_range: sampling.z_range,
            phi_range: sampling.phi_range,
            z0: None,
            phi0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingSection {
    pub lambda: f64,
    /// Per-molecule couplings for `simulate`; overrides `lambda` when given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    pub convention: CouplingConvention,
}

impl Default for CouplingSection {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            lambdas: None,
            convention: CouplingConvention::HamiltonianConsistent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub method: Method,
    pub dt: f64,
    pub t_final: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub record_stride: usize,
    pub formalism: Formalism,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        Self {
            method: d.method,
            dt: d.dt,
            t_final: d.t_final,
            abs_tol: d.abs_tol,
            rel_tol: d.rel_tol,
            record_stride: d.record_stride,
            formalism: Formalism::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSection {
    pub n_realizations: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Worker threads; not echoed into outputs because results do not depend
    /// on it.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        let d = EnsembleConfig::default();
        Self {
            n_realizations: d.n_realizations,
            seed: d.master_seed,
            window: None,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub plot_script: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            plot_script: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemSection,
    pub environment: EnvironmentSection,
    pub coupling: CouplingSection,
    pub integrator: IntegratorSection,
    pub ensemble: EnsembleSection,
    pub potential: PotentialParams,
    pub output: OutputSection,
}

/// Flag values that override the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub n_env: Option<usize>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub convention: Option<CouplingConvention>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid configuration: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn resolve(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut cfg = match path {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        cfg.apply(overrides);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.ensemble.seed = seed;
        }
        if let Some(n) = o.n {
            self.ensemble.n_realizations = n;
        }
        if let Some(n_env) = o.n_env {
            self.environment.n_env = n_env;
        }
        if let Some(dt) = o.dt {
            self.integrator.dt = dt;
        }
        if let Some(t_final) = o.t_final {
            self.integrator.t_final = t_final;
        }
        if let Some(convention) = o.convention {
            self.coupling.convention = convention;
        }
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(threads) = o.threads {
            self.ensemble.threads = Some(threads);
        }
    }

    pub fn integrator_config(&self) -> IntegratorConfig {
        let s = &self.integrator;
        IntegratorConfig {
            dt: s.dt,
            t_final: s.t_final,
            method: s.method,
            abs_tol: s.abs_tol,
            rel_tol: s.rel_tol,
            record_stride: s.record_stride,
        }
    }

    pub fn system_params(&self) -> TwoLevelParams {
        TwoLevelParams {
            delta: self.system.delta,
            epsilon: self.system.epsilon,
        }
    }

    pub fn env_params(&self) -> TwoLevelParams {
        TwoLevelParams {
            delta: self.environment.delta,
            epsilon: self.environment.epsilon,
        }
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        EnsembleConfig {
            n_realizations: self.ensemble.n_realizations,
            n_env: self.environment.n_env,
            master_seed: self.ensemble.seed,
            system_init: MoleculeState {
                z: self.system.z0,
                phi: self.system.phi0,
            },
            env_sampling: EnvSampling {
                z_range: self.environment.z_range,
                phi_range: self.environment.phi_range,
            },
            system_params: self.system_params(),
            env_params: self.env_params(),
            lambda: self.coupling.lambda,
            integrator: self.integrator_config(),
            convention: self.coupling.convention,
            time_average_window: self.ensemble.window,
        }
    }
}
