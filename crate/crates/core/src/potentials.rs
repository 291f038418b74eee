//! Radial profiles of parity-odd electron-nucleus interactions and the
//! true/false chirality classification of interaction Hamiltonians.
//!
//! Natural units (ħ = c = 1). Energies and masses share one unit (GeV for
//! [`PotentialParams::default`]); radii passed to the functions here are in
//! units of the electron Compton length `1/m_e`. Only scalar radial factors
//! are evaluated: the spin structures (`σ̂·r̂`, `γ₅`) are left symbolic.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("radius must be positive and finite, got {0}")]
    NonPositiveRadius(f64),
    #[error("invalid potential parameter: {0}")]
    InvalidParams(String),
    #[error("quadrature did not converge (estimate {value:e} ± {error:e})")]
    NoConvergence { value: f64, error: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialParams {
    /// Fermi constant, inverse energy squared.
    pub g_fermi: f64,
    pub sin2_theta_w: f64,
    pub z_protons: u32,
    pub n_neutrons: u32,
    pub m_e: f64,
    /// Axion-like particle mass.
    pub m_phi: f64,
    /// Scalar axion-nucleon coupling.
    pub g_s_n: f64,
    /// Pseudoscalar axion-electron coupling.
    pub g_p_e: f64,
    pub alpha: f64,
}

impl Default for PotentialParams {
    /// Physical constants in GeV units, a carbon nucleus, unit axion couplings
    /// and a massless axion.
    fn default() -> Self {
        Self {
            g_fermi: 1.166_378_8e-5,
            sin2_theta_w: 0.231_22,
            z_protons: 6,
            n_neutrons: 6,
            m_e: 0.510_998_95e-3,
            m_phi: 0.0,
            g_s_n: 1.0,
            g_p_e: 1.0,
            alpha: 7.297_352_564_3e-3,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<(), PotentialError> {
        let fields = [
            ("g_fermi", self.g_fermi),
            ("sin2_theta_w", self.sin2_theta_w),
            ("m_e", self.m_e),
            ("m_phi", self.m_phi),
            ("g_s_n", self.g_s_n),
            ("g_p_e", self.g_p_e),
            ("alpha", self.alpha),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(PotentialError::InvalidParams(format!("{name} is not finite ({v})")));
        }
        if !(self.sin2_theta_w > 0.0 && self.sin2_theta_w < 1.0) {
            return Err(PotentialError::InvalidParams(format!(
                "sin2_theta_w must lie in (0, 1), got {}",
                self.sin2_theta_w
            )));
        }
        if self.m_e <= 0.0 {
            return Err(PotentialError::InvalidParams(format!("m_e must be positive, got {}", self.m_e)));
        }
        if self.m_phi < 0.0 {
            return Err(PotentialError::InvalidParams(format!("m_phi must be non-negative, got {}", self.m_phi)));
        }
        Ok(())
    }
}

fn check_radius(r: f64) -> Result<f64, PotentialError> {
    if r > 0.0 && r.is_finite() {
        Ok(r)
    } else {
        Err(PotentialError::NonPositiveRadius(r))
    }
}

/// `Q_W = (1 − 4 sin²θ_W) Z − N`.
pub fn weak_charge(z_protons: u32, n_neutrons: u32, sin2_theta_w: f64) -> f64 {
    (1.0 - 4.0 * sin2_theta_w) * f64::from(z_protons) - f64::from(n_neutrons)
}

/// Value of a quadrature together with its error estimate (quadrature plus
/// truncated tail).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Default relative tolerance for [`i_integral`].
pub const I_INTEGRAL_TOLERANCE: f64 = 1e-12;

/// `I(r) = ∫₁^∞ exp(−2xr) √(x²−1) (1 + 1/(2x²)) dx` with `r` in units of `1/m_e`.
pub fn i_integral(r: f64) -> Result<f64, PotentialError> {
    i_integral_with_tolerance(r, I_INTEGRAL_TOLERANCE).map(|q| q.value)
}

/// [`i_integral`] at a chosen relative tolerance, with its error estimate.
///
/// Integrates in `u` with `x = cosh u`, where the integrand
/// `exp(−2r cosh u) sinh²u (1 + 1/(2cosh²u))` is smooth at the lower end.
/// The upper limit grows until the analytic tail bound
/// `1.5 e^{−2rX}(X/(2r) + 1/(4r²))` falls below `1e−16` of the running total.
pub fn i_integral_with_tolerance(r: f64, rel_tol: f64) -> Result<Quadrature, PotentialError> {
    let r = check_radius(r)?;
    if !(rel_tol > 0.0) {
        return Err(PotentialError::InvalidParams(format!("tolerance must be positive, got {rel_tol}")));
    }
    let integrand = |u: f64| {
        let (sinh, cosh) = (u.sinh(), u.cosh());
        (-2.0 * r * cosh).exp() * sinh * sinh * (1.0 + 0.5 / (cosh * cosh))
    };
    let tail = |x: f64| 1.5 * (-2.0 * r * x).exp() * (x / (2.0 * r) + 0.25 / (r * r));

    let mut x_max = (40.0 / (2.0 * r)).max(2.0);
    loop {
        let q = gauss_kronrod_adaptive(&integrand, 0.0, x_max.acosh(), rel_tol, 1e-300)?;
        let bound = tail(x_max);
        if bound <= 1e-16 * q.value.abs() || q.value == 0.0 && bound < 1e-300 {
            return Ok(Quadrature {
                value: q.value,
                error: q.error + bound,
                intervals: q.intervals,
            });
        }
        x_max *= 1.5;
    }
}

/// Radial profile of the long-range part of the mixed Z⁰–γ vacuum
/// polarization potential (electron loop):
/// `G/(2√2) · Z · 2α(1 − 4sin²θ_W) m_e² / (3π² r) · I(r)`.
pub fn vacpol_longrange(r: f64, params: &PotentialParams) -> Result<f64, PotentialError> {
    params.validate()?;
    let r = check_radius(r)?;
    let r_natural = r / params.m_e;
    let prefactor = params.g_fermi / (2.0 * SQRT_2);
    let loop_factor = 2.0 * params.alpha * (1.0 - 4.0 * params.sin2_theta_w) * params.m_e * params.m_e
        / (3.0 * PI * PI * r_natural);
    Ok(prefactor * f64::from(params.z_protons) * loop_factor * i_integral(r)?)
}

/// Weight `G/(2√2)·(−Q_W)` multiplying the nucleon density in the contact term.
pub fn vacpol_contact_weight(params: &PotentialParams) -> Result<f64, PotentialError> {
    params.validate()?;
    Ok(params.g_fermi / (2.0 * SQRT_2) * -weak_charge(params.z_protons, params.n_neutrons, params.sin2_theta_w))
}

/// Coefficient of `σ̂_e·r̂` in the axion-exchange Hamiltonian:
/// `g_s g_p / (8π m_e) · (m_φ/r + 1/r²) · e^{−m_φ r}`.
pub fn axion_potential(r: f64, params: &PotentialParams) -> Result<f64, PotentialError> {
    params.validate()?;
    let r = check_radius(r)? / params.m_e;
    let coupling = params.g_s_n * params.g_p_e / (8.0 * PI * params.m_e);
    Ok(coupling * (params.m_phi / r + 1.0 / (r * r)) * (-params.m_phi * r).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl std::str::FromStr for Parity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "even" | "+" => Ok(Self::Even),
            "odd" | "-" => Ok(Self::Odd),
            other => Err(format!("expected `even` or `odd`, got `{other}`")),
        }
    }
}

/// Behaviour of an interaction under spatial inversion and time reversal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetrySignature {
    pub parity: Parity,
    pub time_reversal: Parity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChiralityClass {
    /// P-odd, T-even: can lift the degeneracy of enantiomers.
    TrulyChiral,
    /// P-odd, T-odd: cannot.
    FalselyChiral,
    Achiral,
}

impl ChiralityClass {
    pub fn generates_pved(&self) -> bool {
        matches!(self, Self::TrulyChiral)
    }
}

pub fn classify_chirality(sig: SymmetrySignature) -> ChiralityClass {
    match (sig.parity, sig.time_reversal) {
        (Parity::Odd, Parity::Even) => ChiralityClass::TrulyChiral,
        (Parity::Odd, Parity::Odd) => ChiralityClass::FalselyChiral,
        (Parity::Even, _) => ChiralityClass::Achiral,
    }
}

/// Interactions with a known signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interaction {
    /// `σ·p` contact term: time-odd axial vector times time-odd polar vector.
    WeakNeutralCurrent,
    /// `σ·r` Yukawa term: time-odd axial vector times time-even polar vector.
    AxionExchange,
    /// Z⁰–γ loop, same operator structure as the weak neutral current.
    MixedVacuumPolarization,
}

impl Interaction {
    pub fn signature(&self) -> SymmetrySignature {
        let time_reversal = match self {
            Self::WeakNeutralCurrent | Self::MixedVacuumPolarization => Parity::Even,
            Self::AxionExchange => Parity::Odd,
        };
        SymmetrySignature {
            parity: Parity::Odd,
            time_reversal,
        }
    }
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1]; odd-indexed Kronrod
// nodes (and the centre) are the Gauss nodes.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

const MAX_PANELS: usize = 4000;

/// Globally adaptive G7/K15 quadrature; the error estimate is the raw
/// Kronrod-Gauss difference summed over panels.
fn gauss_kronrod_adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Quadrature, PotentialError> {
    const INITIAL: usize = 8;
    let width = (b - a) / INITIAL as f64;
    let mut panels: Vec<Panel> = (0..INITIAL)
        .map(|k| {
            let lo = a + k as f64 * width;
            let hi = if k + 1 == INITIAL { b } else { lo + width };
            gk15(f, lo, hi)
        })
        .collect();
    loop {
        let value: f64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                error,
                intervals: panels.len(),
            });
        }
        if panels.len() >= MAX_PANELS {
            return Err(PotentialError::NoConvergence { value, error });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let Panel { a, b, .. } = panels.swap_remove(worst);
        let mid = 0.5 * (a + b);
        panels.push(gk15(f, a, mid));
        panels.push(gk15(f, mid, b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Reference values from 30-digit arbitrary-precision quadrature.
    const I_HALF: f64 = 0.675_609_073_304_530_7;
    const I_ONE: f64 = 0.084_134_587_944_573_44;
    const I_TWO: f64 = 0.004_027_227_369_651_723;

    #[test]
    fn weak_charge_examples() {
        assert_eq!(weak_charge(0, 1, 0.23), -1.0);
        assert_eq!(weak_charge(1, 0, 0.25), 0.0);
        assert_abs_diff_eq!(weak_charge(6, 6, 0.23), -5.52, epsilon = 1e-12);
    }

    #[test]
    fn i_integral_reference_values() {
        assert_relative_eq!(i_integral(0.5).unwrap(), I_HALF, max_relative = 1e-12);
        assert_relative_eq!(i_integral(1.0).unwrap(), I_ONE, max_relative = 1e-12);
        assert_relative_eq!(i_integral(2.0).unwrap(), I_TWO, max_relative = 1e-12);
    }

    #[test]
    fn i_integral_is_exponentially_suppressed() {
        // every point of the range has x ≥ 1, so I(r) carries at least e^{−2r}
        for &r in &[1.0, 3.0, 10.0, 40.0] {
            let value = i_integral(r).unwrap();
            assert!(value > 0.0);
            assert!(value < 3.0 * (-2.0 * r).exp(), "r = {r}");
        }
    }

    #[test]
    fn i_integral_domain() {
        assert_eq!(i_integral(0.0), Err(PotentialError::NonPositiveRadius(0.0)));
        assert!(i_integral(-1.0).is_err());
        assert!(i_integral(f64::NAN).is_err());
    }

    #[test]
    fn i_integral_monotone() {
        let a = i_integral(0.5).unwrap();
        let b = i_integral(1.0).unwrap();
        let c = i_integral(2.0).unwrap();
        assert!(a > b && b > c);
    }

    #[test]
    fn tolerance_halving_within_error_estimate() {
        for &r in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let coarse = i_integral_with_tolerance(r, 1e-10).unwrap();
            let fine = i_integral_with_tolerance(r, 5e-11).unwrap();
            assert!(
                (coarse.value - fine.value).abs() <= coarse.error.max(f64::EPSILON * coarse.value),
                "r = {r}: {coarse:?} vs {fine:?}"
            );
            assert!((coarse.value - fine.value).abs() / fine.value < 1e-10);
        }
    }

    #[test]
    fn vacpol_vanishes_at_quarter_weinberg() {
        let params = PotentialParams {
            sin2_theta_w: 0.25,
            ..Default::default()
        };
        for &r in &[0.3, 1.0, 4.0] {
            assert_eq!(vacpol_longrange(r, &params).unwrap(), 0.0);
        }
        let params = PotentialParams {
            z_protons: 0,
            ..Default::default()
        };
        assert_eq!(vacpol_longrange(1.0, &params).unwrap(), 0.0);
    }

    #[test]
    fn vacpol_composition() {
        let params = PotentialParams {
            z_protons: 1,
            sin2_theta_w: 0.23,
            ..Default::default()
        };
        let m_e = params.m_e;
        let expected = params.g_fermi / (2.0 * 2f64.sqrt()) * 2.0 * params.alpha * (1.0 - 0.92) * m_e * m_e
            / (3.0 * PI * PI * (1.0 / m_e))
            * I_ONE;
        assert_relative_eq!(vacpol_longrange(1.0, &params).unwrap(), expected, max_relative = 1e-11);
    }

    #[test]
    fn vacpol_scales_linearly() {
        let base = PotentialParams::default();
        let v = vacpol_longrange(0.7, &base).unwrap();
        let doubled_z = PotentialParams {
            z_protons: 2 * base.z_protons,
            ..base
        };
        assert_relative_eq!(vacpol_longrange(0.7, &doubled_z).unwrap(), 2.0 * v, max_relative = 1e-14);
        // (1 − 4s²) halves when s² moves halfway to 1/4
        let halved = PotentialParams {
            sin2_theta_w: 0.5 * (base.sin2_theta_w + 0.25),
            ..base
        };
        assert_relative_eq!(vacpol_longrange(0.7, &halved).unwrap(), 0.5 * v, max_relative = 1e-12);
    }

    #[test]
    fn contact_weight_is_minus_weak_charge() {
        let params = PotentialParams::default();
        let q = weak_charge(6, 6, params.sin2_theta_w);
        assert_relative_eq!(
            vacpol_contact_weight(&params).unwrap(),
            -q * params.g_fermi / (2.0 * 2f64.sqrt()),
            max_relative = 1e-15
        );
    }

    fn unit_axion(m_phi: f64) -> PotentialParams {
        PotentialParams {
            m_e: 1.0,
            m_phi,
            g_s_n: 8.0 * PI,
            g_p_e: 1.0,
            ..Default::default()
        }
    }

    #[test]
    fn axion_examples() {
        assert_relative_eq!(
            axion_potential(1.0, &unit_axion(1.0)).unwrap(),
            2.0 * (-1.0f64).exp(),
            max_relative = 1e-15
        );
        let massless = unit_axion(0.0);
        assert_relative_eq!(axion_potential(3.0, &massless).unwrap(), 1.0 / 9.0, max_relative = 1e-15);
        let v = axion_potential(0.8, &massless).unwrap();
        assert_relative_eq!(axion_potential(1.6, &massless).unwrap() / v, 0.25, max_relative = 1e-15);
        assert!(axion_potential(60.0, &unit_axion(1.0)).unwrap() < 1e-25);
        assert!(axion_potential(0.0, &massless).is_err());
    }

    #[test]
    fn params_validation() {
        let bad = PotentialParams {
            sin2_theta_w: 1.2,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(PotentialError::InvalidParams(_))));
        let bad = PotentialParams {
            m_phi: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn classifier_examples() {
        assert_eq!(
            classify_chirality(Interaction::WeakNeutralCurrent.signature()),
            ChiralityClass::TrulyChiral
        );
        assert_eq!(
            classify_chirality(Interaction::AxionExchange.signature()),
            ChiralityClass::FalselyChiral
        );
        assert_eq!(
            classify_chirality(Interaction::MixedVacuumPolarization.signature()),
            ChiralityClass::TrulyChiral
        );
        let sig = |p, t| SymmetrySignature {
            parity: p,
            time_reversal: t,
        };
        assert_eq!(classify_chirality(sig(Parity::Even, Parity::Even)), ChiralityClass::Achiral);
        assert_eq!(classify_chirality(sig(Parity::Even, Parity::Odd)), ChiralityClass::Achiral);
        assert!(ChiralityClass::TrulyChiral.generates_pved());
        assert!(!ChiralityClass::FalselyChiral.generates_pved());
    }
}
