//! Monte Carlo averaging of the central molecule's population difference over
//! random environment initial conditions.
//!
//! Each realization draws its environment from its own ChaCha8 stream
//! (`seed = master_seed`, `stream = realization index`), so a realization's
//! trajectory does not depend on which thread runs it or in which order.
//! Realizations are integrated in the amplitude form, which stays regular for
//! pure enantiomer starts (`Z(0) = ±1`). Aggregation is a sequential reduction
//! in realization-index order.

use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{integrate_amplitude_central, AmplitudeSystem, DynamicsError, IntegratorConfig};
use crate::model::{madelung_inverse, CouplingConvention, ModelError, MoleculeState, TwoLevelParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnsembleError {
    #[error("invalid ensemble configuration: {0}")]
    InvalidConfig(String),
    #[error("realization {index} (master seed {master_seed}, stream {index}) failed: {source}")]
    Realization {
        index: usize,
        master_seed: u64,
        #[source]
        source: DynamicsError,
    },
    #[error("empty averaging window [{lo}, {hi}]")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("averaging window [{lo}, {hi}] outside sampled range [{t_min}, {t_max}]")]
    WindowOutOfRange { lo: f64, hi: f64, t_min: f64, t_max: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Ranges for the environment initial conditions: `z_i(0)` uniform on the
/// open interval `z_range`, `φ_i(0)` uniform on the half-open `phi_range`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvSampling {
    pub z_range: [f64; 2],
    pub phi_range: [f64; 2],
}

impl Default for EnvSampling {
    fn default() -> Self {
        Self {
            z_range: [-1.0, 1.0],
            phi_range: [0.0, TAU],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_realizations: usize,
    pub n_env: usize,
    pub master_seed: u64,
    pub system_init: MoleculeState,
    pub env_sampling: EnvSampling,
    pub system_params: TwoLevelParams,
    /// Shared by every environment molecule.
    pub env_params: TwoLevelParams,
    /// Uniform coupling `Λ_i = Λ`.
    pub lambda: f64,
    pub integrator: IntegratorConfig,
    pub convention: CouplingConvention,
    /// `[t_lo, t_hi]`; `None` means `[0, t_final]`.
    pub time_average_window: Option<[f64; 2]>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self::fig3(0.0)
    }
}

impl EnsembleConfig {
    /// The chirality-transmission setup: `n = 2000`, `Λ = 1`, `ε = 0`,
    /// `δ = δ_i = 1`, environment PVED `env_epsilon`, starting from a pure
    /// R enantiomer with `N = 10` partners over `t ∈ [0, 20]`.
    pub fn fig3(env_epsilon: f64) -> Self {
        Self {
            n_realizations: 2000,
            n_env: 10,
            master_seed: 2024,
            system_init: MoleculeState { z: 1.0, phi: 0.0 },
            env_sampling: EnvSampling::default(),
            system_params: TwoLevelParams {
                delta: 1.0,
                epsilon: 0.0,
            },
            env_params: TwoLevelParams {
                delta: 1.0,
                epsilon: env_epsilon,
            },
            lambda: 1.0,
            integrator: IntegratorConfig::default(),
            convention: CouplingConvention::HamiltonianConsistent,
            time_average_window: None,
        }
    }

    pub fn window(&self) -> [f64; 2] {
        self.time_average_window.unwrap_or([0.0, self.integrator.t_final])
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        let invalid = |msg: String| Err(EnsembleError::InvalidConfig(msg));
        if self.n_realizations == 0 {
            return invalid("n_realizations must be at least 1".into());
        }
        self.integrator.validate()?;
        self.system_init.validate()?;
        self.system_params.validate()?;
        self.env_params.validate()?;
        if !self.lambda.is_finite() {
            return invalid(format!("lambda must be finite, got {}", self.lambda));
        }
        let [z_lo, z_hi] = self.env_sampling.z_range;
        if !(-1.0 <= z_lo && z_lo < z_hi && z_hi <= 1.0) {
            return invalid(format!("z_range [{z_lo}, {z_hi}] must be an increasing sub-interval of [-1, 1]"));
        }
        let [p_lo, p_hi] = self.env_sampling.phi_range;
        if !(p_lo.is_finite() && p_hi.is_finite() && p_lo < p_hi) {
            return invalid(format!("phi_range [{p_lo}, {p_hi}] must be increasing and finite"));
        }
        let [lo, hi] = self.window();
        if !(lo < hi) {
            return Err(EnsembleError::EmptyWindow { lo, hi });
        }
        if lo < 0.0 || hi > self.integrator.t_final * (1.0 + 1e-12) {
            return Err(EnsembleError::WindowOutOfRange {
                lo,
                hi,
                t_min: 0.0,
                t_max: self.integrator.t_final,
            });
        }
        Ok(())
    }

    fn initial_system(&self, index: usize) -> Result<AmplitudeSystem, EnsembleError> {
        let env = sample_env_initial(self, index)
            .iter()
            .map(|m| madelung_inverse(m, 0.0))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(AmplitudeSystem {
            system: madelung_inverse(&self.system_init, 0.0)?,
            system_params: self.system_params,
            env_params: vec![self.env_params; env.len()],
            lambdas: vec![self.lambda; env.len()],
            env,
        })
    }
}

/// Environment initial conditions of one realization.
pub fn sample_env_initial(cfg: &EnsembleConfig, realization_index: usize) -> Vec<MoleculeState> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(realization_index as u64);
    let [z_lo, z_hi] = cfg.env_sampling.z_range;
    let [p_lo, p_hi] = cfg.env_sampling.phi_range;
    (0..cfg.n_env)
        .map(|_| {
            let z = loop {
                let z = rng.random_range(z_lo..z_hi);
                if z > z_lo {
                    break z;
                }
            };
            let phi = rng.random_range(p_lo..p_hi);
            MoleculeState { z, phi }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    /// `⟨Z(t)⟩_n`.
    pub mean_z: Vec<f64>,
    /// Per-time sample standard deviation across realizations.
    pub std_z: Vec<f64>,
    /// Trapezoidal mean of `mean_z` over `window`.
    pub time_avg_z: f64,
    /// Standard error of `time_avg_z` from the spread of per-realization
    /// time averages (NaN for a single realization).
    pub time_avg_std_error: f64,
    /// Oscillation amplitude of `mean_z` in the last quarter of the window
    /// divided by that in the first quarter.
    pub envelope_decay: f64,
    pub window: [f64; 2],
    #[serde(skip)]
    pub realization_time_avgs: Vec<f64>,
    pub config: EnsembleConfig,
}

fn realization_series(cfg: &EnsembleConfig, index: usize) -> Result<Vec<f64>, EnsembleError> {
    let initial = cfg.initial_system(index)?;
    integrate_amplitude_central(&initial, &cfg.integrator, cfg.convention)
        .map(|series| series.z)
        .map_err(|source| EnsembleError::Realization {
            index,
            master_seed: cfg.master_seed,
            source,
        })
}

/// Evaluates `f` for every index, in parallel when available, returning
/// results in index order.
fn map_indices<T, F>(n: usize, f: F) -> Result<Vec<T>, EnsembleError>
where
    T: Send,
    F: Fn(usize) -> Result<T, EnsembleError> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

fn mean_and_std_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult, EnsembleError> {
    cfg.validate()?;
    let times = cfg.integrator.sample_times();
    let window = cfg.window();
    let series = map_indices(cfg.n_realizations, |k| realization_series(cfg, k))?;

    let n = series.len() as f64;
    let mut mean_z = vec![0.0; times.len()];
    for s in &series {
        for (m, z) in mean_z.iter_mut().zip(s) {
            *m += z;
        }
    }
    for m in &mut mean_z {
        *m /= n;
    }
    let mut std_z = vec![0.0; times.len()];
    if series.len() > 1 {
        for s in &series {
            for ((v, z), m) in std_z.iter_mut().zip(s).zip(&mean_z) {
                *v += (z - m) * (z - m);
            }
        }
        for v in &mut std_z {
            *v = (*v / (n - 1.0)).sqrt();
        }
    }

    let realization_time_avgs = series
        .iter()
        .map(|s| time_average(&times, s, window))
        .collect::<Result<Vec<_>, _>>()?;
    let (_, time_avg_std_error) = mean_and_std_error(&realization_time_avgs);

    Ok(EnsembleResult {
        time_avg_z: time_average(&times, &mean_z, window)?,
        envelope_decay: envelope_decay(&times, &mean_z, window),
        time_avg_std_error,
        window,
        realization_time_avgs,
        times,
        mean_z,
        std_z,
        config: cfg.clone(),
    })
}

/// Runs `f` on a dedicated pool of `threads` workers. Results never depend on
/// the pool size.
#[cfg(feature = "parallel")]
pub fn with_threads<R, F>(threads: usize, f: F) -> Result<R, EnsembleError>
where
    R: Send,
    F: FnOnce() -> Result<R, EnsembleError> + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| EnsembleError::InvalidConfig(format!("cannot build thread pool: {e}")))?;
    pool.install(f)
}

/// [`run_ensemble`] on a dedicated pool of `threads` workers.
#[cfg(feature = "parallel")]
pub fn run_ensemble_with_threads(cfg: &EnsembleConfig, threads: usize) -> Result<EnsembleResult, EnsembleError> {
    with_threads(threads, || run_ensemble(cfg))
}

/// Trapezoidal mean of a sampled series over `[lo, hi]`, interpolating
/// linearly where the window cuts a sample interval.
pub fn time_average(times: &[f64], values: &[f64], window: [f64; 2]) -> Result<f64, EnsembleError> {
    let [lo, hi] = window;
    if !(lo < hi) {
        return Err(EnsembleError::EmptyWindow { lo, hi });
    }
    let (Some(&t_min), Some(&t_max)) = (times.first(), times.last()) else {
        return Err(EnsembleError::EmptyWindow { lo, hi });
    };
    let slack = 1e-12 * t_max.abs().max(1.0);
    if times.len() < 2 || lo < t_min - slack || hi > t_max + slack {
        return Err(EnsembleError::WindowOutOfRange { lo, hi, t_min, t_max });
    }
    let (lo, hi) = (lo.max(t_min), hi.min(t_max));
    let mut area = 0.0;
    for j in 0..times.len() - 1 {
        let (t0, t1) = (times[j], times[j + 1]);
        let (a, b) = (t0.max(lo), t1.min(hi));
        if b <= a {
            continue;
        }
        let at = |t: f64| values[j] + (values[j + 1] - values[j]) * (t - t0) / (t1 - t0);
        let (va, vb) = if a == t0 && b == t1 {
            (values[j], values[j + 1])
        } else {
            (at(a), at(b))
        };
        area += 0.5 * (b - a) * (va + vb);
    }
    Ok(area / (hi - lo))
}

/// Ratio of half peak-to-peak ranges in the last and first quarters of the
/// window. 1 for an undamped oscillation or a constant series.
pub fn envelope_decay(times: &[f64], values: &[f64], window: [f64; 2]) -> f64 {
    let [lo, hi] = window;
    let quarter = 0.25 * (hi - lo);
    let amplitude = |a: f64, b: f64| {
        let (min, max) = times
            .iter()
            .zip(values)
            .filter(|(t, _)| **t >= a && **t <= b)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), (_, v)| (mn.min(*v), mx.max(*v)));
        if min.is_finite() {
            0.5 * (max - min)
        } else {
            0.0
        }
    };
    let first = amplitude(lo, lo + quarter);
    let last = amplitude(hi - quarter, hi);
    if first == 0.0 {
        if last == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        last / first
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub time_avg_z: f64,
    pub std_error: f64,
}

/// Time-averaged population for growing ensembles. The `n`-realization
/// estimate is the mean over realizations `0..n`, so every row is a prefix of
/// the largest ensemble.
pub fn convergence_study(cfg: &EnsembleConfig, n_list: &[usize]) -> Result<Vec<ConvergenceRow>, EnsembleError> {
    let Some(&n_max) = n_list.last() else {
        return Err(EnsembleError::InvalidConfig("empty realization list".into()));
    };
    if n_list[0] == 0 || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EnsembleError::InvalidConfig(
            "realization counts must be positive and strictly ascending".into(),
        ));
    }
    let cfg = EnsembleConfig {
        n_realizations: n_max,
        ..cfg.clone()
    };
    cfg.validate()?;
    let times = cfg.integrator.sample_times();
    let window = cfg.window();
    let averages = map_indices(n_max, |k| {
        let series = realization_series(&cfg, k)?;
        time_average(&times, &series, window)
    })?;
    Ok(n_list
        .iter()
        .map(|&n| {
            let (time_avg_z, std_error) = mean_and_std_error(&averages[..n]);
            ConvergenceRow {
                n,
                time_avg_z,
                std_error,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn small(n: usize, n_env: usize) -> EnsembleConfig {
        EnsembleConfig {
            n_realizations: n,
            n_env,
            integrator: IntegratorConfig {
                dt: 1e-2,
                t_final: 4.0,
                record_stride: 5,
                ..Default::default()
            },
            ..EnsembleConfig::fig3(0.0)
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        let cfg = small(10, 10);
        let a = sample_env_initial(&cfg, 3);
        assert_eq!(a, sample_env_initial(&cfg, 3));
        assert_ne!(a, sample_env_initial(&cfg, 4));
        assert_eq!(a.len(), 10);
        for m in &a {
            assert!(m.z > -1.0 && m.z < 1.0);
            assert!(m.phi >= 0.0 && m.phi < TAU);
        }
        assert!(sample_env_initial(&small(10, 0), 0).is_empty());
    }

    #[test]
    fn time_average_basics() {
        let times: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let constant = vec![0.37; times.len()];
        assert_abs_diff_eq!(time_average(&times, &constant, [0.0, 10.0]).unwrap(), 0.37, epsilon = 1e-15);
        assert_abs_diff_eq!(time_average(&times, &constant, [2.05, 7.33]).unwrap(), 0.37, epsilon = 1e-14);
        let ramp: Vec<f64> = times.iter().map(|t| t / 10.0).collect();
        assert_abs_diff_eq!(time_average(&times, &ramp, [0.0, 10.0]).unwrap(), 0.5, epsilon = 1e-15);
        // linear data is integrated exactly even on a cut window
        assert_abs_diff_eq!(time_average(&times, &ramp, [1.234, 5.0]).unwrap(), 0.3117, epsilon = 1e-14);

        let n = 30_000;
        let k = 3.0;
        let times: Vec<f64> = (0..=n).map(|j| j as f64 * k * PI / n as f64).collect();
        let cos: Vec<f64> = times.iter().map(|t| (2.0 * t).cos()).collect();
        assert!(time_average(&times, &cos, [0.0, k * PI]).unwrap().abs() < 1e-10);
    }

    #[test]
    fn time_average_errors() {
        let times = [0.0, 1.0, 2.0];
        let v = [1.0, 2.0, 3.0];
        assert!(matches!(time_average(&times, &v, [1.0, 1.0]), Err(EnsembleError::EmptyWindow { .. })));
        assert!(matches!(time_average(&times, &v, [0.0, 3.0]), Err(EnsembleError::WindowOutOfRange { .. })));
    }

    #[test]
    fn envelope_of_damped_and_steady_oscillations() {
        let times: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.01).collect();
        let steady: Vec<f64> = times.iter().map(|t| (2.0 * t).cos()).collect();
        assert_abs_diff_eq!(envelope_decay(&times, &steady, [0.0, 20.0]), 1.0, epsilon = 1e-3);
        let damped: Vec<f64> = times.iter().map(|t| (-0.2 * t).exp() * (2.0 * t).cos()).collect();
        assert!(envelope_decay(&times, &damped, [0.0, 20.0]) < 0.1);
        assert_eq!(envelope_decay(&times, &vec![0.5; times.len()], [0.0, 20.0]), 1.0);
    }

    #[test]
    fn single_realization_matches_direct_integration() {
        let cfg = small(1, 3);
        let result = run_ensemble(&cfg).unwrap();
        let direct = integrate_amplitude_central(&cfg.initial_system(0).unwrap(), &cfg.integrator, cfg.convention)
            .unwrap();
        assert_eq!(result.mean_z, direct.z);
        assert!(result.std_z.iter().all(|&s| s == 0.0));
        assert!(result.time_avg_std_error.is_nan());
    }

    #[test]
    fn bad_configs_rejected() {
        let cfg = EnsembleConfig {
            n_realizations: 0,
            ..small(1, 1)
        };
        assert!(matches!(run_ensemble(&cfg), Err(EnsembleError::InvalidConfig(_))));
        let cfg = EnsembleConfig {
            time_average_window: Some([1.0, 99.0]),
            ..small(1, 1)
        };
        assert!(matches!(run_ensemble(&cfg), Err(EnsembleError::WindowOutOfRange { .. })));
        let cfg = EnsembleConfig {
            time_average_window: Some([2.0, 1.0]),
            ..small(1, 1)
        };
        assert!(matches!(run_ensemble(&cfg), Err(EnsembleError::EmptyWindow { .. })));
    }

    #[test]
    fn realization_failure_names_index_and_seed() {
        let cfg = EnsembleConfig {
            integrator: IntegratorConfig {
                method: crate::dynamics::Method::Rk45Adaptive,
                abs_tol: 1e-300,
                rel_tol: 1e-300,
                ..small(2, 1).integrator
            },
            ..small(2, 1)
        };
        match run_ensemble(&cfg) {
            Err(EnsembleError::Realization { index, master_seed, source }) => {
                assert_eq!(master_seed, cfg.master_seed);
                assert!(index < 2);
                assert!(matches!(source, DynamicsError::StepUnderflow { .. }));
            }
            other => panic!("expected realization failure, got {other:?}"),
        }
    }

    #[test]
    fn convergence_prefix_property() {
        let cfg = small(1, 2);
        let both = convergence_study(&cfg, &[5, 10]).unwrap();
        let alone = convergence_study(&cfg, &[5]).unwrap();
        assert_eq!(both[0], alone[0]);
        let single = convergence_study(&cfg, &[1]).unwrap();
        let direct = run_ensemble(&EnsembleConfig {
            n_realizations: 1,
            ..cfg.clone()
        })
        .unwrap();
        assert_abs_diff_eq!(single[0].time_avg_z, direct.time_avg_z, epsilon = 1e-14);
        assert!(convergence_study(&cfg, &[10, 5]).is_err());
        assert!(convergence_study(&cfg, &[]).is_err());
    }
}
