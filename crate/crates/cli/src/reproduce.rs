//! The central molecule's mean population for a degenerate environment
//! (`ε_i = 0`) against a strongly biased one (`ε_i = 50`), plus an optional
//! sweep over the unstated run parameters.

use chiral_core::ensemble::{EnsembleConfig, EnsembleResult};
use chiral_core::model::CouplingConvention;
use serde::Serialize;

use crate::CliError;

pub const DEGENERATE_EPSILON: f64 = 0.0;
pub const BIASED_EPSILON: f64 = 50.0;

/// Digitized plateau values and the tolerance used to call a sweep point a match.
pub const TARGET_DEGENERATE: f64 = 0.12;
pub const TARGET_BIASED: f64 = 0.30;
pub const TARGET_TOLERANCE: f64 = 0.05;

/// Envelope ratio below which the degenerate case counts as damped.
pub const DAMPING_THRESHOLD: f64 = 0.5;
/// Required separation of the two plateaus in combined standard errors.
pub const ORDERING_SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct CaseSummary {
    pub env_epsilon: f64,
    pub time_avg_z: f64,
    pub std_error: f64,
    pub envelope_decay: f64,
    pub window: [f64; 2],
}

impl CaseSummary {
    fn from_result(r: &EnsembleResult) -> Self {
        Self {
            env_epsilon: r.config.env_params.epsilon,
            time_avg_z: r.time_avg_z,
            std_error: r.time_avg_std_error,
            envelope_decay: r.envelope_decay,
            window: r.window,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig3Point {
    pub z0: f64,
    pub n_env: usize,
    pub t_final: f64,
    pub convention: CouplingConvention,
    pub n_realizations: usize,
    pub degenerate: CaseSummary,
    pub biased: CaseSummary,
    /// Both plateaus within the target tolerance.
    pub matches_targets: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub gap: f64,
    pub combined_std_error: f64,
    pub ordering_pass: bool,
    pub envelope_decay: f64,
    pub damping_pass: bool,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.ordering_pass && self.damping_pass
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Targets {
    pub degenerate: f64,
    pub biased: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Fig3Report {
    pub master_seed: u64,
    pub default: Fig3Point,
    pub verdict: Verdict,
    pub targets: Targets,
    pub sweep: Vec<Fig3Point>,
    pub matching_points: usize,
}

/// Full output of one reproduction: the report and the two default ensembles.
pub struct Fig3Run {
    pub report: Fig3Report,
    pub degenerate: EnsembleResult,
    pub biased: EnsembleResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepGrid {
    pub z0: Vec<f64>,
    pub n_env: Vec<usize>,
    pub t_final: Vec<f64>,
    pub conventions: Vec<CouplingConvention>,
    pub n_realizations: usize,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            z0: vec![1.0, 0.5],
            n_env: vec![5, 10, 20],
            t_final: vec![20.0, 50.0],
            conventions: vec![CouplingConvention::HamiltonianConsistent, CouplingConvention::PaperLiteral],
            n_realizations: 2000,
        }
    }
}

type Runner<'a> = dyn Fn(&EnsembleConfig) -> Result<EnsembleResult, CliError> + 'a;

fn run_pair(base: &EnsembleConfig, run: &Runner) -> Result<(EnsembleResult, EnsembleResult), CliError> {
    let mut degenerate = base.clone();
    degenerate.env_params.epsilon = DEGENERATE_EPSILON;
    let mut biased = base.clone();
    biased.env_params.epsilon = BIASED_EPSILON;
    Ok((run(&degenerate)?, run(&biased)?))
}

fn point(cfg: &EnsembleConfig, pair: &(EnsembleResult, EnsembleResult)) -> Fig3Point {
    let degenerate = CaseSummary::from_result(&pair.0);
    let biased = CaseSummary::from_result(&pair.1);
    let matches_targets = (degenerate.time_avg_z - TARGET_DEGENERATE).abs() <= TARGET_TOLERANCE
        && (biased.time_avg_z - TARGET_BIASED).abs() <= TARGET_TOLERANCE;
    Fig3Point {
        z0: cfg.system_init.z,
        n_env: cfg.n_env,
        t_final: cfg.integrator.t_final,
        convention: cfg.convention,
        n_realizations: cfg.n_realizations,
        degenerate,
        biased,
        matches_targets,
    }
}

pub fn verdict(p: &Fig3Point) -> Verdict {
    let gap = p.biased.time_avg_z - p.degenerate.time_avg_z;
    let combined_std_error = p.degenerate.std_error.hypot(p.biased.std_error);
    Verdict {
        gap,
        combined_std_error,
        ordering_pass: gap > ORDERING_SIGMAS * combined_std_error,
        envelope_decay: p.degenerate.envelope_decay,
        damping_pass: p.degenerate.envelope_decay < DAMPING_THRESHOLD,
    }
}

/// Runs the two default ensembles described by `base` (its environment
/// bias is replaced) and, if given, every point of `sweep`.
pub fn reproduce_fig3(base: &EnsembleConfig, sweep: Option<&SweepGrid>, run: &Runner) -> Result<Fig3Run, CliError> {
    let pair = run_pair(base, run)?;
    let default = point(base, &pair);
    let mut points = Vec::new();
    if let Some(grid) = sweep {
        for &convention in &grid.conventions {
            for &z0 in &grid.z0 {
                for &n_env in &grid.n_env {
                    for &t_final in &grid.t_final {
                        let mut cfg = base.clone();
                        cfg.convention = convention;
                        cfg.system_init.z = z0;
                        cfg.n_env = n_env;
                        cfg.integrator.t_final = t_final;
                        cfg.n_realizations = grid.n_realizations;
                        cfg.time_average_window = None;
                        let p = if same_point(&cfg, base) {
                            point(&cfg, &pair)
                        } else {
                            point(&cfg, &run_pair(&cfg, run)?)
                        };
                        points.push(p);
                    }
                }
            }
        }
    }
    let matching_points = points.iter().filter(|p| p.matches_targets).count();
    let report = Fig3Report {
        master_seed: base.master_seed,
        verdict: verdict(&default),
        default,
        targets: Targets {
            degenerate: TARGET_DEGENERATE,
            biased: TARGET_BIASED,
            tolerance: TARGET_TOLERANCE,
        },
        sweep: points,
        matching_points,
    };
    Ok(Fig3Run {
        report,
        degenerate: pair.0,
        biased: pair.1,
    })
}

fn same_point(a: &EnsembleConfig, b: &EnsembleConfig) -> bool {
    let mut a = a.clone();
    let mut b = b.clone();
    a.env_params.epsilon = 0.0;
    b.env_params.epsilon = 0.0;
    a == b
}
