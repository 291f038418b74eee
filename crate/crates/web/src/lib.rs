//! Browser bindings for the demo page in `www/`.
//!
//! Each function returns a flat `Float64Array`; the layout is given in its
//! doc comment.

use chiral_core::ensemble::{run_ensemble, EnsembleConfig};
use chiral_core::model::{CouplingConvention, MoleculeState, TwoLevelParams};
use chiral_core::potentials::i_integral;
use chiral_core::spectra::system_split;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Ensemble-averaged `Z(t)` for the default transmission setup with a chosen environment
/// bias, size and coupling. Returns `[t0, Z0, t1, Z1, …, time_avg_Z,
/// std_error]`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn ensemble_mean_z(
    n_realizations: usize,
    n_env: usize,
    env_epsilon: f64,
    lambda: f64,
    z0: f64,
    t_final: f64,
    paper_convention: bool,
    seed: u64,
) -> Result<Vec<f64>, JsError> {
    let mut cfg = EnsembleConfig::fig3(env_epsilon);
    cfg.n_realizations = n_realizations;
    cfg.n_env = n_env;
    cfg.lambda = lambda;
    cfg.system_init = MoleculeState { z: z0, phi: 0.0 };
    cfg.integrator.t_final = t_final;
    cfg.integrator.dt = 2e-3;
    cfg.integrator.record_stride = 10;
    cfg.master_seed = seed;
    if paper_convention {
        cfg.convention = CouplingConvention::PaperLiteral;
    }
    let r = run_ensemble(&cfg).map_err(js_err)?;
    let mut out: Vec<f64> = r.times.iter().zip(&r.mean_z).flat_map(|(t, z)| [*t, *z]).collect();
    out.push(r.time_avg_z);
    out.push(r.time_avg_std_error);
    Ok(out)
}

/// Central-molecule enantiomer energies against a mean environment
/// population `m` (so `Σ z_i = N m`) over `[m_min, m_max]`. Returns rows of
/// `[m, λ₊, λ₋, E_L, E_R]`.
#[wasm_bindgen]
pub fn spectrum_vs_environment(
    delta: f64,
    epsilon: f64,
    lambda: f64,
    n_env: usize,
    points: usize,
) -> Result<Vec<f64>, JsError> {
    let params = TwoLevelParams::new(delta, epsilon).map_err(js_err)?;
    if points < 2 {
        return Err(JsError::new("need at least two points"));
    }
    let mut out = Vec::with_capacity(points * 5);
    for k in 0..points {
        let m = -1.0 + 2.0 * k as f64 / (points - 1) as f64;
        let split = system_split(&params, lambda, &vec![m; n_env]);
        out.extend([m, split.lambda_plus, split.lambda_minus, split.e_l, split.e_r]);
    }
    Ok(out)
}

/// `I(r)` on a log grid over `[r_min, r_max]` (units of `1/m_e`). Returns rows
/// of `[r, I(r)]`.
#[wasm_bindgen]
pub fn i_integral_curve(r_min: f64, r_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    if !(r_min > 0.0 && r_max > r_min && points >= 2) {
        return Err(JsError::new("need 0 < r_min < r_max and at least two points"));
    }
    let ratio = (r_max / r_min).ln();
    let mut out = Vec::with_capacity(points * 2);
    for k in 0..points {
        let r = r_min * (ratio * k as f64 / (points - 1) as f64).exp();
        out.extend([r, i_integral(r).map_err(js_err)?]);
    }
    Ok(out)
}
