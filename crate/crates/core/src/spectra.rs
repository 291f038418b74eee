//! Mixing angle, block eigenvalues and enantiomer energies of a molecule
//! whose parity-violating splitting is shifted by the mean field of its
//! partners.
//!
//! The central block is `Ĥ₁ = [[ε_eff, δ], [δ, −ε_eff]]` with
//! `ε_eff = ε + ½ Λ Σ_i z_i`; an environment block uses `ε_eff = ε_i + ½ Λ Z`.
//! Eigenvalues are `±√(ε_eff² + δ²)`, which expands to
//! `√(ε² + δ² + εΛS + ¼Λ²S²)` with `S = Σ_i z_i` (the square applies to the
//! whole sum).

use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::model::TwoLevelParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectraError {
    #[error("mixing angle undefined: tunneling and parity-violating splittings are both zero")]
    Degenerate,
    #[error("matrix is not Hermitian (mismatch {0:e})")]
    NotHermitian(f64),
    #[error("non-finite spectral input")]
    NonFinite,
}

/// `θ ∈ [0, π/2]` with `tan 2θ = δ / ε_eff`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingAngle {
    pub theta: f64,
}

/// Eigenvalues and diagonal energies of one 2×2 block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySplit {
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub e_l: f64,
    pub e_r: f64,
    /// `E_L − E_R`.
    pub delta_e: f64,
    pub epsilon_eff: f64,
    /// `None` when `δ = ε_eff = 0`.
    pub theta: Option<f64>,
}

pub fn mixing_angle(delta: f64, epsilon_eff: f64) -> Result<MixingAngle, SpectraError> {
    if !delta.is_finite() || !epsilon_eff.is_finite() {
        return Err(SpectraError::NonFinite);
    }
    if delta == 0.0 && epsilon_eff == 0.0 {
        return Err(SpectraError::Degenerate);
    }
    // a negative δ only flips the relative phase of |L⟩ and |R⟩
    Ok(MixingAngle {
        theta: 0.5 * delta.abs().atan2(epsilon_eff),
    })
}

/// Energies of a block with the given tunneling splitting and effective
/// parity-violating splitting.
///
/// `E_L = E₊cos²θ + E₋sin²θ` and `E_R = E₊sin²θ + E₋cos²θ`, so
/// `E_L − E_R = 2√(ε_eff² + δ²) cos 2θ = 2ε_eff` on the `θ ∈ [0, π/2]` branch,
/// which is `⟨L|Ĥ|L⟩ − ⟨R|Ĥ|R⟩`.
pub fn block_split(delta: f64, epsilon_eff: f64) -> EnergySplit {
    let lambda = epsilon_eff.hypot(delta);
    match mixing_angle(delta, epsilon_eff) {
        Ok(MixingAngle { theta }) => {
            let (sin, cos) = theta.sin_cos();
            let (s2, c2) = (sin * sin, cos * cos);
            let e_l = lambda * c2 - lambda * s2;
            let e_r = lambda * s2 - lambda * c2;
            EnergySplit {
                lambda_plus: lambda,
                lambda_minus: -lambda,
                e_l,
                e_r,
                delta_e: e_l - e_r,
                epsilon_eff,
                theta: Some(theta),
            }
        }
        Err(_) => EnergySplit {
            lambda_plus: 0.0,
            lambda_minus: 0.0,
            e_l: 0.0,
            e_r: 0.0,
            delta_e: 0.0,
            epsilon_eff,
            theta: None,
        },
    }
}

/// Central-molecule block for an instantaneous environment configuration.
pub fn system_split(params: &TwoLevelParams, lambda: f64, env_z: &[f64]) -> EnergySplit {
    let s: f64 = env_z.iter().sum();
    block_split(params.delta, params.epsilon + 0.5 * lambda * s)
}

/// Environment-molecule block, driven by the central molecule's `Z`.
pub fn environment_split(params: &TwoLevelParams, lambda: f64, system_z: f64) -> EnergySplit {
    block_split(params.delta, params.epsilon + 0.5 * lambda * system_z)
}

/// Numerical eigen-decomposition of a Hermitian 2×2 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen2 {
    /// Descending.
    pub values: [f64; 2],
    /// `vectors[k]` belongs to `values[k]`.
    pub vectors: [[Complex64; 2]; 2],
}

/// Independent diagonalizer used to check the closed forms.
pub fn split_oracle(m: [[Complex64; 2]; 2]) -> Result<Eigen2, SpectraError> {
    if m.iter().flatten().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(SpectraError::NonFinite);
    }
    let scale = m.iter().flatten().map(|c| c.norm()).fold(1.0, f64::max);
    let mismatch = (m[0][1] - m[1][0].conj())
        .norm()
        .max(m[0][0].im.abs())
        .max(m[1][1].im.abs());
    if mismatch > 1e-12 * scale {
        return Err(SpectraError::NotHermitian(mismatch));
    }
    let matrix = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
    let eig = SymmetricEigen::new(matrix);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let column = |k: usize| [eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)]];
    Ok(Eigen2 {
        values: [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]],
        vectors: [column(order[0]), column(order[1])],
    })
}

/// `[[ε_eff, δ], [δ, −ε_eff]]` in the `{|L⟩, |R⟩}` basis.
pub fn block_matrix(delta: f64, epsilon_eff: f64) -> [[Complex64; 2]; 2] {
    let r = |x: f64| Complex64::new(x, 0.0);
    [[r(epsilon_eff), r(delta)], [r(delta), r(-epsilon_eff)]]
}
