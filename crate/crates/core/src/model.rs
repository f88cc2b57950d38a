//! Diagonal Gaussian / Ornstein-Uhlenbeck models.
//!
//! Every axis carries a decay rate `lambda_i` and a stationary variance `q_i`.
//! Two conventions coexist:
//!
//! * `Standard`: `lambda = 1`, `q = 1` on every axis. The generator is
//!   `L = Δ - <x, ∇>` and the invariant measure is `N(0, I)`.
//! * `General`: arbitrary rates with `q_i = 1 / (2 lambda_i)`. The generator is
//!   `L = ½Δ + <Ax, ∇>` with `A = -diag(lambda)`, the law of `dX = AX dt + dW`.
//!
//! In both cases `-L` acts on the scaled Hermite product `ĥ_α` by the
//! eigenvalue `Σ α_i lambda_i`, and the per-axis diffusion coefficient of the
//! associated SDE is `sqrt(2 lambda_i q_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Standard,
    General,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub rate: f64,
    pub variance: f64,
}

impl AxisSpec {
    pub fn standard() -> Self {
        AxisSpec { rate: 1.0, variance: 1.0 }
    }

    /// Axis of the general convention, `q = 1 / (2 rate)`.
    pub fn general(rate: f64) -> Self {
        AxisSpec { rate, variance: 0.5 / rate }
    }

    fn validate(&self, convention: Convention) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::InvalidModel(format!("rate must be positive, got {}", self.rate)));
        }
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::InvalidModel(format!(
                "variance must be positive, got {}",
                self.variance
            )));
        }
        match convention {
            Convention::Standard if self.rate != 1.0 || self.variance != 1.0 => Err(
                Error::InvalidModel("standard convention requires rate 1 and variance 1".into()),
            ),
            Convention::General if self.variance != 0.5 / self.rate => Err(Error::InvalidModel(
                format!("general convention requires variance 1/(2 rate), got rate {} variance {}", self.rate, self.variance),
            )),
            _ => Ok(()),
        }
    }

    /// Diffusion coefficient of the one-dimensional SDE `dX = -rate X dt + sigma dW`.
    pub fn diffusion(&self) -> f64 {
        (2.0 * self.rate * self.variance).sqrt()
    }
}

/// A centered Gaussian measure with diagonal covariance together with the
/// Ornstein-Uhlenbeck semigroup that leaves it invariant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct GaussianModel {
    axes: Vec<AxisSpec>,
    convention: Convention,
}

impl GaussianModel {
    pub fn standard(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        GaussianModel { axes: vec![AxisSpec::standard(); dimension], convention: Convention::Standard }
    }

    /// General-convention model; rates must be positive and nondecreasing.
    pub fn general(rates: &[f64]) -> Result<Self> {
        Self::from_axes(rates.iter().map(|&r| AxisSpec::general(r)).collect(), Convention::General)
    }

    pub fn from_axes(axes: Vec<AxisSpec>, convention: Convention) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidModel("dimension must be positive".into()));
        }
        for a in &axes {
            a.validate(convention)?;
        }
        if axes.windows(2).any(|w| w[1].rate < w[0].rate) {
            return Err(Error::InvalidModel("rates must be sorted nondecreasing".into()));
        }
        Ok(GaussianModel { axes, convention })
    }

    pub fn dimension(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[AxisSpec] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> AxisSpec {
        self.axes[i]
    }

    pub fn convention(&self) -> Convention {
        self.convention
    }

    pub fn is_standard(&self) -> bool {
        self.convention == Convention::Standard
    }

    /// Lower bound of the rates.
    pub fn beta(&self) -> f64 {
        self.axes[0].rate
    }

    pub fn rates(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.rate).collect()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.axes.iter().map(|a| a.variance).collect()
    }

    /// `|Q^{-1/2} h|`; Euclidean for the standard model.
    pub fn cameron_martin_norm(&self, h: &[f64]) -> f64 {
        debug_assert_eq!(h.len(), self.dimension());
        h.iter().zip(&self.axes).map(|(v, a)| v * v / a.variance).sum::<f64>().sqrt()
    }

    pub fn cameron_martin_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let h: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        self.cameron_martin_norm(&h)
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension() {
            return Err(Error::Incompatible(format!(
                "point has {} coordinates, model has dimension {}",
                x.len(),
                self.dimension()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("point must be finite".into()));
        }
        Ok(())
    }
}

/// Serialized form of a [`GaussianModel`].
///
/// ```json
/// { "convention": "standard", "dimension": 2 }
/// { "convention": "general", "rates": [1.0, 2.0, 3.0] }
/// { "convention": "general", "dimension": 3, "preset": "linear" }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub convention: Convention,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<RatePreset>,
}

/// Named rate families for the general convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatePreset {
    /// `lambda_i = 1`, so `q_i = 1/2`.
    Unit,
    /// `lambda_i = i` for `i = 1..=d`.
    Linear,
    /// `lambda_i = 2^(i-1)`.
    Geometric,
}

impl TryFrom<ModelSpec> for GaussianModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        match spec.convention {
            Convention::Standard => {
                if spec.rates.is_some() || spec.preset.is_some() {
                    return Err(Error::InvalidModel("standard convention takes no rates".into()));
                }
                let d = spec.dimension.ok_or_else(|| Error::InvalidModel("missing dimension".into()))?;
                if d == 0 {
                    return Err(Error::InvalidModel("dimension must be positive".into()));
                }
                Ok(GaussianModel::standard(d))
            }
            Convention::General => {
                let rates = match (spec.rates, spec.preset) {
                    (Some(_), Some(_)) => {
                        return Err(Error::InvalidModel("give either rates or a preset, not both".into()))
                    }
                    (Some(r), None) => r,
                    (None, preset) => {
                        let d = spec
                            .dimension
                            .ok_or_else(|| Error::InvalidModel("missing dimension".into()))?;
                        (1..=d)
                            .map(|i| match preset.unwrap_or(RatePreset::Unit) {
                                RatePreset::Unit => 1.0,
                                RatePreset::Linear => i as f64,
                                RatePreset::Geometric => 2f64.powi(i as i32 - 1),
                            })
                            .collect()
                    }
                };
                if let Some(d) = spec.dimension {
                    if d != rates.len() {
                        return Err(Error::InvalidModel(format!(
                            "dimension {d} does not match {} rates",
                            rates.len()
                        )));
                    }
                }
                GaussianModel::general(&rates)
            }
        }
    }
}

impl From<GaussianModel> for ModelSpec {
    fn from(m: GaussianModel) -> Self {
        match m.convention {
            Convention::Standard => ModelSpec {
                convention: Convention::Standard,
                dimension: Some(m.dimension()),
                rates: None,
                preset: None,
            },
            Convention::General => ModelSpec {
                convention: Convention::General,
                dimension: None,
                rates: Some(m.rates()),
                preset: None,
            },
        }
    }
}
