//! `Φ(a) = ∫_0^a log(1+t) dt`, the L log L Luxemburg norm, and the L¹ / L log L
//! inequalities between `∇f` and `√(α - L) f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mehler::{PointwiseFunction, Slack};
use crate::model::GaussianModel;
use crate::quadrature::{gauss_hermite, NodeKind, NodeSet, QuadratureGrid};
use crate::series::HermiteSeries;
use crate::spectral::{apply, SpectralMultiplier};
use crate::stats::Estimate;

/// `Φ(a) = (1 + a) ln(1 + a) - a`.
pub fn phi(a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::Domain(format!("Φ needs a >= 0, got {a}")));
    }
    Ok(phi_unchecked(a))
}

fn phi_unchecked(a: f64) -> f64 {
    if a < 1e-4 {
        a * a * (0.5 - a * (1.0 / 6.0 - a * (1.0 / 12.0 - a / 20.0)))
    } else {
        (1.0 + a) * a.ln_1p() - a
    }
}

/// `Φ(ab) <= a Φ(b) + a log(1 + a) b`.
pub fn phi_product_bound_check(a: f64, b: f64) -> Result<Slack> {
    let lhs = phi(a * b)?;
    let rhs = a * phi(b)? + a * a.ln_1p() * b;
    Ok(Slack { lhs, rhs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormMethod {
    Bisection,
    Quadrature,
    Mc,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    pub method: NormMethod,
    /// Relative width of the final bracket (bisection) or standard error (Monte Carlo).
    pub tolerance: f64,
    pub iterations: usize,
}

const BISECTION_REL_TOL: f64 = 1e-14;
const MAX_EXPANSIONS: usize = 2000;

/// `inf{λ > 0 : Σ_j w_j Φ(|v_j| / λ) <= 1}` for weighted samples.
pub fn luxemburg_from_values(values: &[f64], weights: &[f64]) -> Result<NormReport> {
    let modular = |lambda: f64| -> f64 {
        values.iter().zip(weights).map(|(v, w)| w * phi_unchecked(v.abs() / lambda)).sum()
    };
    let l1: f64 = values.iter().zip(weights).map(|(v, w)| w * v.abs()).sum();
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return Ok(NormReport { value: 0.0, method: NormMethod::Bisection, tolerance: 0.0, iterations: 0 });
    }
    let mut lo = (l1 / 10.0).max(f64::MIN_POSITIVE);
    let mut hi = 10.0 * (1.0 + sup);
    let mut iterations = 0;
    while modular(lo) <= 1.0 {
        lo /= 2.0;
        iterations += 1;
        if iterations > MAX_EXPANSIONS || lo == 0.0 {
            return Err(Error::NoConvergence("Luxemburg bracket could not be lowered".into()));
        }
    }
    while modular(hi) > 1.0 {
        hi *= 2.0;
        iterations += 1;
        if !hi.is_finite() || iterations > MAX_EXPANSIONS {
            return Err(Error::Unbounded("Φ-modular stays above 1 for every finite λ".into()));
        }
    }
    while hi - lo > BISECTION_REL_TOL * hi {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Ok(NormReport { value: 0.5 * (lo + hi), method: NormMethod::Bisection, tolerance: (hi - lo) / hi, iterations })
}

fn node_values(f: &PointwiseFunction, model: &GaussianModel, grid: &QuadratureGrid) -> Result<(NodeSet, Vec<f64>)> {
    let kinks = if model.dimension() == 1 { f.abs_kinks() } else { Vec::new() };
    let nodes = grid.nodes(model, &kinks)?;
    let vals = f.eval_nodes(&nodes);
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("{} is not finite on the grid", f.tag())));
    }
    Ok((nodes, vals))
}

pub fn luxemburg_norm(f: &PointwiseFunction, model: &GaussianModel, grid: &QuadratureGrid) -> Result<NormReport> {
    let (nodes, vals) = node_values(f, model, grid)?;
    luxemburg_from_values(&vals, nodes.weights())
}

pub fn l1_norm(f: &PointwiseFunction, model: &GaussianModel, grid: &QuadratureGrid) -> Result<Estimate> {
    let (nodes, vals) = node_values(f, model, grid)?;
    let abs: Vec<f64> = vals.iter().map(|v| v.abs()).collect();
    Ok(nodes.estimate(&abs))
}

/// Method tag for norms computed on `grid` for `model`.
pub fn norm_method(model: &GaussianModel, grid: &QuadratureGrid) -> NormMethod {
    match grid.nodes(model, &[]).map(|n| n.kind()) {
        Ok(NodeKind::MonteCarlo) => NormMethod::Mc,
        _ => NormMethod::Quadrature,
    }
}

/// `numerator / denominator` with `0/0 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

/// Denominators below this are treated as zero.
const ZERO_NORM: f64 = 1e-13;

impl Ratio {
    fn new(numerator: f64, denominator: f64) -> Result<Self> {
        let ratio = if denominator > ZERO_NORM {
            numerator / denominator
        } else if numerator <= ZERO_NORM {
            0.0
        } else {
            return Err(Error::Domain(format!("ratio {numerator}/0 is unbounded")));
        };
        Ok(Ratio { numerator, denominator, ratio })
    }
}

fn require_standard(model: &GaussianModel) -> Result<()> {
    if !model.is_standard() {
        return Err(Error::Incompatible("the L log L Poincaré ratio is defined for the standard model".into()));
    }
    Ok(())
}

/// `‖φ - ∫φ‖_{LlogL} / ‖|∇φ|‖_{LlogL}`.
pub fn poincare_check(phi_series: &HermiteSeries, grid: &QuadratureGrid) -> Result<Ratio> {
    let model = phi_series.model();
    require_standard(model)?;
    let num = luxemburg_norm(&PointwiseFunction::series(&phi_series.centered()), model, grid)?.value;
    let den = luxemburg_norm(&PointwiseFunction::gradient_norm(phi_series), model, grid)?.value;
    Ratio::new(num, den)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("α must be nonnegative, got {alpha}")));
    }
    Ok(())
}

/// `‖√(α-L) f‖_1 / (‖|∇f|‖_{LlogL} + √α ‖f‖_1)`.
pub fn meyer_forward_check(f: &HermiteSeries, alpha: f64, grid: &QuadratureGrid) -> Result<Ratio> {
    check_alpha(alpha)?;
    let model = f.model();
    let root = apply(f, SpectralMultiplier::SqrtGen { alpha })?;
    let num = l1_norm(&PointwiseFunction::series(&root), model, grid)?.value;
    let grad = luxemburg_norm(&PointwiseFunction::gradient_norm(f), model, grid)?.value;
    let l1 = if alpha > 0.0 { l1_norm(&PointwiseFunction::series(f), model, grid)?.value } else { 0.0 };
    Ratio::new(num, grad + alpha.sqrt() * l1)
}

/// `‖|∇f|‖_1 / ‖√(α-L) f‖_{LlogL}`.
pub fn meyer_reverse_check(f: &HermiteSeries, alpha: f64, grid: &QuadratureGrid) -> Result<Ratio> {
    check_alpha(alpha)?;
    let model = f.model();
    let num = l1_norm(&PointwiseFunction::gradient_norm(f), model, grid)?.value;
    let root = apply(f, SpectralMultiplier::SqrtGen { alpha })?;
    let den = luxemburg_norm(&PointwiseFunction::series(&root), model, grid)?.value;
    Ratio::new(num, den)
}

/// `α ‖(α-L)^{-1/2} f‖_1 <= √α ‖f‖_1`.
pub fn resolvent_root_l1_check(f: &HermiteSeries, alpha: f64, grid: &QuadratureGrid) -> Result<Slack> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("α must be positive, got {alpha}")));
    }
    let model = f.model();
    let inv_root = apply(&apply(f, SpectralMultiplier::SqrtGen { alpha })?, SpectralMultiplier::Resolvent { alpha })?;
    let lhs = alpha * l1_norm(&PointwiseFunction::series(&inv_root), model, grid)?.value;
    let rhs = alpha.sqrt() * l1_norm(&PointwiseFunction::series(f), model, grid)?.value;
    Ok(Slack { lhs, rhs })
}

/// `‖T_t g‖_{LlogL} <= ‖g‖_{LlogL}`.
pub fn jensen_contraction_check(g: &HermiteSeries, t: f64, grid: &QuadratureGrid) -> Result<Slack> {
    let tg = apply(g, SpectralMultiplier::Semigroup { t })?;
    let lhs = luxemburg_norm(&PointwiseFunction::series(&tg), g.model(), grid)?.value;
    let rhs = luxemburg_norm(&PointwiseFunction::series(g), g.model(), grid)?.value;
    Ok(Slack { lhs, rhs })
}

/// `|∫∫ p(R_t(x, y)) - ∫∫ p(x, y)|` under `N(0,1)^{⊗2}` for the rotation
/// `R_t(x, y) = (e^{-t}x + sqrt(1-e^{-2t}) y, -sqrt(1-e^{-2t}) x + e^{-t} y)`.
pub fn rotation_invariance_check(p: &dyn Fn(f64, f64) -> f64, t: f64, order: usize) -> Result<f64> {
    if !(t >= 0.0) || order == 0 {
        return Err(Error::Domain("rotation check needs t >= 0 and a positive order".into()));
    }
    let rule = gauss_hermite(order);
    let (c, s) = ((-t).exp(), (-(-2.0 * t).exp_m1()).sqrt());
    let (mut direct, mut pushed) = (0.0, 0.0);
    for (x, wx) in rule.nodes.iter().zip(&rule.weights) {
        for (y, wy) in rule.nodes.iter().zip(&rule.weights) {
            direct += wx * wy * p(*x, *y);
            pushed += wx * wy * p(c * x + s * y, -s * x + c * y);
        }
    }
    Ok((direct - pushed).abs())
}
