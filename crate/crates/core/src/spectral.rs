//! Functional calculus of the OU generator on Hermite series.
//!
//! `-L ĥ_α = μ(α) ĥ_α` with `μ(α) = Σ α_i λ_i`, so every operator below is a
//! coefficient-wise multiplication.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::MultiIndex;
use crate::model::GaussianModel;
use crate::series::HermiteSeries;

const SERIES_CUTOFF: f64 = 1e-6;

/// `(e^{-x} - e^{-2x}) / x`, equal to 1 at `x = 0`.
pub fn smoothing_factor(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        1.0 - 1.5 * x + 7.0 / 6.0 * x * x
    } else {
        (-x).exp() * -(-x).exp_m1() / x
    }
}

/// `(1 - e^{-x}) / x`, equal to 1 at `x = 0`.
pub fn hopf_factor(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        1.0 - 0.5 * x + x * x / 6.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// A scalar function `m(μ)` of the eigenvalue of `-L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpectralMultiplier {
    /// `T_t`: `e^{-μt}`.
    Semigroup { t: f64 },
    /// `A_t = t^{-1} ∫_t^{2t} T_s ds`.
    Smoothing { t: f64 },
    /// `sqrt(α - L)`.
    SqrtGen { alpha: f64 },
    /// `(α - L)^{-1}`.
    Resolvent { alpha: f64 },
    /// `e^{-t sqrt(α - L)}`.
    PoissonSub { alpha: f64, t: f64 },
    /// `t^{-1} ∫_0^t T_s ds`.
    HopfAverage { t: f64 },
}

impl SpectralMultiplier {
    pub fn eval(&self, mu: f64) -> Result<f64> {
        use SpectralMultiplier::*;
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::Domain(format!("eigenvalue must be nonnegative, got {mu}")));
        }
        let nonneg_t = |t: f64| {
            if t.is_finite() && t >= 0.0 {
                Ok(t)
            } else {
                Err(Error::Domain(format!("time must be nonnegative, got {t}")))
            }
        };
        match *self {
            Semigroup { t } => Ok((-mu * nonneg_t(t)?).exp()),
            Smoothing { t } => Ok(smoothing_factor(mu * nonneg_t(t)?)),
            HopfAverage { t } => Ok(hopf_factor(mu * nonneg_t(t)?)),
            SqrtGen { alpha } => {
                let s = alpha + mu;
                if s < 0.0 {
                    return Err(Error::Domain(format!("sqrt of negative {s}")));
                }
                Ok(s.sqrt())
            }
            Resolvent { alpha } => {
                let s = alpha + mu;
                if s <= 0.0 {
                    return Err(Error::Domain(format!("resolvent at non-positive {s}")));
                }
                Ok(1.0 / s)
            }
            PoissonSub { alpha, t } => {
                let s = alpha + mu;
                if s < 0.0 {
                    return Err(Error::Domain(format!("sqrt of negative {s}")));
                }
                Ok((-nonneg_t(t)? * s.sqrt()).exp())
            }
        }
    }

    /// True for the multipliers bounded by one on `μ >= 0`.
    pub fn is_contraction(&self) -> bool {
        !matches!(self, SpectralMultiplier::SqrtGen { .. } | SpectralMultiplier::Resolvent { .. })
    }
}

/// `μ(α) = Σ α_i λ_i`.
pub fn eigenvalue(idx: &MultiIndex, model: &GaussianModel) -> f64 {
    idx.degrees().iter().zip(model.axes()).map(|(&a, ax)| a as f64 * ax.rate).sum()
}

pub fn apply(f: &HermiteSeries, mult: SpectralMultiplier) -> Result<HermiteSeries> {
    let model = f.model();
    for (k, _) in f.coeffs() {
        mult.eval(eigenvalue(k, model))?;
    }
    Ok(f.map_coeffs(|k, c| c * mult.eval(eigenvalue(k, model)).unwrap()))
}

/// `√(-L) f`; the constant mode is annihilated.
pub fn sqrt_neg_generator(f: &HermiteSeries) -> HermiteSeries {
    apply(f, SpectralMultiplier::SqrtGen { alpha: 0.0 }).expect("sqrt(-L) is defined on every eigenvalue")
}

/// `∂_i f`: coefficient `c(α + e_i) sqrt(α_i + 1) / sqrt(q_i)` at `α`.
pub fn partial(f: &HermiteSeries, axis: usize) -> HermiteSeries {
    let scale = 1.0 / f.model().axis(axis).variance.sqrt();
    let terms = f.coeffs().filter_map(|(k, c)| {
        let lower = k.lowered(axis)?;
        let n = k.degrees()[axis] as f64;
        Some((lower, c * n.sqrt() * scale))
    });
    HermiteSeries::from_coeffs(f.model(), f.cap().saturating_sub(1), terms).expect("lowered indices stay in range")
}

pub fn gradient(f: &HermiteSeries) -> Vec<HermiteSeries> {
    (0..f.dim()).map(|i| partial(f, i)).collect()
}

/// Largest coefficient residual of `∇_i T_t = e^{-λ_i t} T_t ∇_i` and
/// `∇_i R^α_t = R^{α+λ_i}_t ∇_i`, with `R^α_t = e^{-t sqrt(α - L)}`.
pub fn check_commutation(f: &HermiteSeries, t: f64, alpha0: f64, axis: usize) -> Result<f64> {
    if axis >= f.dim() {
        return Err(Error::Domain(format!("axis {axis} out of range")));
    }
    let lambda = f.model().axis(axis).rate;
    let lhs1 = partial(&apply(f, SpectralMultiplier::Semigroup { t })?, axis);
    let rhs1 = apply(&partial(f, axis), SpectralMultiplier::Semigroup { t })?.scaled((-lambda * t).exp());
    let lhs2 = partial(&apply(f, SpectralMultiplier::PoissonSub { alpha: alpha0, t })?, axis);
    let rhs2 = apply(&partial(f, axis), SpectralMultiplier::PoissonSub { alpha: alpha0 + lambda, t })?;
    Ok(lhs1.max_coeff_diff(&rhs1)?.max(lhs2.max_coeff_diff(&rhs2)?))
}

/// `<(α - L) f, g>` computed spectrally and as `α<f,g> + Σ_i λ_i q_i <∂_i f, ∂_i g>`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairingCheck {
    pub spectral: f64,
    pub dirichlet: f64,
    pub residual: f64,
}

pub fn dirichlet_pairing(f: &HermiteSeries, g: &HermiteSeries, alpha: f64) -> Result<PairingCheck> {
    f.check_compatible(g)?;
    let model = f.model();
    let spectral: f64 = f.coeffs().map(|(k, c)| (alpha + eigenvalue(k, model)) * c * g.coeff(k)).sum();
    let mut dirichlet = alpha * f.inner(g)?;
    for (i, ax) in model.axes().iter().enumerate() {
        dirichlet += ax.rate * ax.variance * partial(f, i).inner(&partial(g, i))?;
    }
    Ok(PairingCheck { spectral, dirichlet, residual: (spectral - dirichlet).abs() })
}
