//! Pointwise evaluation of `T_t` and `A_t` through Mehler's formula, and the
//! convexity and Lipschitz estimates that need pointwise semantics.

use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::orthonormal_values;
use crate::model::GaussianModel;
use crate::quadrature::{gauss_hermite, gauss_legendre, NodeSet, QuadratureGrid};
use crate::series::{contract, HermiteSeries, Matrix};
use crate::spectral::{apply, gradient, sqrt_neg_generator, SpectralMultiplier};
use crate::stats::{mean_stderr, stream_rng, Estimate};
use crate::tgrid::TGrid;

type Closure = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
struct Dense {
    n: usize,
    data: Vec<f64>,
    inv_sd: Vec<f64>,
}

impl Dense {
    fn new(s: &HermiteSeries) -> Self {
        Dense {
            n: s.cap() + 1,
            data: s.dense(),
            inv_sd: s.model().variances().iter().map(|q| 1.0 / q.sqrt()).collect(),
        }
    }

    fn matrices(&self, axis_points: &[Vec<f64>]) -> Vec<Matrix> {
        let mut t = vec![0.0; self.n];
        axis_points
            .iter()
            .zip(&self.inv_sd)
            .map(|(pts, s)| {
                let m = pts.len();
                let mut data = vec![0.0; self.n * m];
                for (j, y) in pts.iter().enumerate() {
                    orthonormal_values(y * s, &mut t);
                    for k in 0..self.n {
                        data[k * m + j] = t[k];
                    }
                }
                Matrix { rows: self.n, cols: m, data }
            })
            .collect()
    }

    fn values(&self, axis_points: &[Vec<f64>]) -> Vec<f64> {
        contract(self.data.clone(), &self.matrices(axis_points))
    }

    /// `Σ_j W_j f(y_j)` over a tensor grid with per-axis weights.
    fn weighted(&self, axis_points: &[Vec<f64>], axis_weights: &[Vec<f64>]) -> f64 {
        let mats: Vec<Matrix> = self
            .matrices(axis_points)
            .into_iter()
            .zip(axis_weights)
            .map(|(m, w)| {
                let data = (0..m.rows).map(|k| (0..m.cols).map(|j| m.data[k * m.cols + j] * w[j]).sum()).collect();
                Matrix { rows: m.rows, cols: 1, data }
            })
            .collect();
        contract(self.data.clone(), &mats)[0]
    }
}

#[derive(Clone)]
enum Kind {
    Closure { f: Closure, kinks: Vec<f64> },
    Value(HermiteSeries, Dense),
    Modulus(HermiteSeries, Dense),
    GradientNorm(Vec<HermiteSeries>, Vec<Dense>),
}

/// A real function on `R^d` that the Mehler engine can integrate.
///
/// Series-backed variants evaluate on tensor grids by sum factorization.
#[derive(Clone)]
pub struct PointwiseFunction {
    kind: Kind,
    nonneg: bool,
    tag: String,
}

impl fmt::Debug for PointwiseFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PointwiseFunction({:?}, nonneg={})", self.tag, self.nonneg)
    }
}

impl PointwiseFunction {
    pub fn closure(tag: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        PointwiseFunction { kind: Kind::Closure { f: Arc::new(f), kinks: Vec::new() }, nonneg: false, tag: tag.into() }
    }

    /// Closure known to be nonnegative.
    pub fn nonneg_closure(tag: &str, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        PointwiseFunction { nonneg: true, ..Self::closure(tag, f) }
    }

    /// Declares points where a one-dimensional closure is not smooth.
    pub fn with_kinks(mut self, points: Vec<f64>) -> Self {
        if let Kind::Closure { kinks, .. } = &mut self.kind {
            *kinks = points;
        }
        self
    }

    pub fn series(f: &HermiteSeries) -> Self {
        PointwiseFunction { kind: Kind::Value(f.clone(), Dense::new(f)), nonneg: false, tag: "series".into() }
    }

    /// `|f|`.
    pub fn modulus(f: &HermiteSeries) -> Self {
        PointwiseFunction { kind: Kind::Modulus(f.clone(), Dense::new(f)), nonneg: true, tag: "|series|".into() }
    }

    /// Euclidean norm of the gradient, `|∇f|`.
    pub fn gradient_norm(f: &HermiteSeries) -> Self {
        let g = gradient(f);
        let d = g.iter().map(Dense::new).collect();
        PointwiseFunction { kind: Kind::GradientNorm(g, d), nonneg: true, tag: "|grad series|".into() }
    }

    /// `|√(-L) f|`.
    pub fn sqrt_generator_modulus(f: &HermiteSeries) -> Self {
        Self::modulus(&sqrt_neg_generator(f)).tagged("|sqrt(-L) series|")
    }

    pub fn tagged(mut self, tag: &str) -> Self {
        self.tag = tag.into();
        self
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.kind {
            Kind::Closure { f, .. } => f(x),
            Kind::Value(s, _) => s.eval_unchecked(x),
            Kind::Modulus(s, _) => s.eval_unchecked(x).abs(),
            Kind::GradientNorm(g, _) => g.iter().map(|s| s.eval_unchecked(x).powi(2)).sum::<f64>().sqrt(),
        }
    }

    /// Points in one dimension where the function may have a kink.
    pub fn kinks(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Closure { kinks, .. } => kinks.clone(),
            Kind::Value(..) => Vec::new(),
            Kind::Modulus(s, _) => s.sign_changes(),
            Kind::GradientNorm(g, _) if g.len() == 1 => g[0].sign_changes(),
            Kind::GradientNorm(..) => Vec::new(),
        }
    }

    /// Points in one dimension where `|f|` may have a kink.
    pub fn abs_kinks(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Value(s, _) => s.sign_changes(),
            _ => self.kinks(),
        }
    }

    /// Values at every node of `nodes`, using sum factorization on tensor grids.
    pub fn eval_nodes(&self, nodes: &NodeSet) -> Vec<f64> {
        match nodes.tensor_axes() {
            Some(axes) => self.eval_tensor(axes),
            None => nodes.points().map(|x| self.eval(x)).collect(),
        }
    }

    /// Values on a tensor grid, axis 0 slowest.
    pub fn eval_tensor(&self, axis_points: &[Vec<f64>]) -> Vec<f64> {
        match &self.kind {
            Kind::Closure { f, .. } => {
                let d = axis_points.len();
                let total: usize = axis_points.iter().map(|p| p.len()).product();
                let mut out = Vec::with_capacity(total);
                let mut idx = vec![0usize; d];
                let mut x = vec![0.0; d];
                for _ in 0..total {
                    for i in 0..d {
                        x[i] = axis_points[i][idx[i]];
                    }
                    out.push(f(&x));
                    for i in (0..d).rev() {
                        idx[i] += 1;
                        if idx[i] < axis_points[i].len() {
                            break;
                        }
                        idx[i] = 0;
                    }
                }
                out
            }
            Kind::Value(_, dense) => dense.values(axis_points),
            Kind::Modulus(_, dense) => dense.values(axis_points).into_iter().map(f64::abs).collect(),
            Kind::GradientNorm(_, dense) => {
                let mut acc: Vec<f64> = Vec::new();
                for dn in dense {
                    let v = dn.values(axis_points);
                    if acc.is_empty() {
                        acc = v.iter().map(|a| a * a).collect();
                    } else {
                        acc.iter_mut().zip(&v).for_each(|(s, a)| *s += a * a);
                    }
                }
                acc.into_iter().map(f64::sqrt).collect()
            }
        }
    }

    fn tensor_weighted(&self, axis_points: &[Vec<f64>], axis_weights: &[Vec<f64>]) -> f64 {
        if let Kind::Value(_, dense) = &self.kind {
            return dense.weighted(axis_points, axis_weights);
        }
        let values = self.eval_tensor(axis_points);
        let mats: Vec<Matrix> =
            axis_weights.iter().map(|w| Matrix { rows: w.len(), cols: 1, data: w.clone() }).collect();
        contract(values, &mats)[0]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MehlerMethod {
    /// Tensor Gauss-Hermite for `d <= 3` (composite panels at declared kinks
    /// in one dimension), Monte Carlo above.
    Quadrature,
    MonteCarlo,
}

/// Evaluator for `T_t g(x) = E g(e^{-Λt} x + sqrt(Q(1 - e^{-2Λt})) Z)`.
pub struct Mehler {
    model: GaussianModel,
    grid: QuadratureGrid,
    method: MehlerMethod,
    mc: Vec<f64>,
}

const MAX_TENSOR_DIM: usize = 3;

impl Mehler {
    pub fn new(model: &GaussianModel, grid: &QuadratureGrid, method: MehlerMethod) -> Result<Self> {
        grid.validate()?;
        let d = model.dimension();
        let mc = if method == MehlerMethod::MonteCarlo || d > MAX_TENSOR_DIM {
            let mut rng = stream_rng(grid.seed, 1);
            (0..grid.mc_samples * d).map(|_| StandardNormal.sample(&mut rng)).collect()
        } else {
            Vec::new()
        };
        Ok(Mehler { model: model.clone(), grid: grid.clone(), method, mc })
    }

    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    pub fn method(&self) -> MehlerMethod {
        self.method
    }

    fn uses_mc(&self) -> bool {
        !self.mc.is_empty()
    }

    fn coefficients(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        self.model
            .axes()
            .iter()
            .map(|a| {
                let e = (-a.rate * t).exp();
                (e, (a.variance * -(-2.0 * a.rate * t).exp_m1()).sqrt())
            })
            .unzip()
    }

    pub fn apply(&self, f: &PointwiseFunction, t: f64, x: &[f64]) -> Result<Estimate> {
        self.model.check_point(x)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("Mehler time must be positive, got {t}")));
        }
        Ok(self.estimate(f, t, x))
    }

    fn estimate(&self, f: &PointwiseFunction, t: f64, x: &[f64]) -> Estimate {
        let (a, b) = self.coefficients(t);
        let d = x.len();
        if self.uses_mc() {
            let mut y = vec![0.0; d];
            let vals: Vec<f64> = self
                .mc
                .chunks_exact(d)
                .map(|z| {
                    for i in 0..d {
                        y[i] = a[i] * x[i] + b[i] * z[i];
                    }
                    f.eval(&y)
                })
                .collect();
            let (value, stderr) = mean_stderr(&vals);
            return Estimate { value, stderr };
        }
        if d == 1 && self.grid.line_panels > 0 {
            let kinks: Vec<f64> = f.kinks().iter().map(|k| (k - a[0] * x[0]) / b[0]).collect();
            if !kinks.is_empty() {
                let std1 = GaussianModel::standard(1);
                let nodes = self.grid.nodes(&std1, &kinks).expect("grid validated at construction");
                let pts: Vec<f64> = nodes.points().map(|z| a[0] * x[0] + b[0] * z[0]).collect();
                let vals = f.eval_tensor(&[pts]);
                return Estimate::exact(nodes.sum(&vals));
            }
        }
        let rule = gauss_hermite(self.grid.order);
        let pts: Vec<Vec<f64>> = (0..d).map(|i| rule.nodes.iter().map(|z| a[i] * x[i] + b[i] * z).collect()).collect();
        let wts: Vec<Vec<f64>> = vec![rule.weights.clone(); d];
        Estimate::exact(f.tensor_weighted(&pts, &wts))
    }

    /// Point value; Monte Carlo error is dropped.
    pub(crate) fn value(&self, f: &PointwiseFunction, t: f64, x: &[f64]) -> f64 {
        if t == 0.0 {
            return f.eval(x);
        }
        self.estimate(f, t, x).value
    }

    /// `A_t g(x) = t^{-1} ∫_t^{2t} T_s g(x) ds` with 32-point Gauss-Legendre in `s`.
    pub fn smoothing(&self, f: &PointwiseFunction, t: f64, x: &[f64]) -> Result<f64> {
        self.model.check_point(x)?;
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Domain(format!("smoothing time must be positive, got {t}")));
        }
        let rule = gauss_legendre(SMOOTHING_NODES);
        let s: f64 = rule.nodes.iter().zip(&rule.weights).map(|(u, w)| w * self.value(f, t * (1.5 + 0.5 * u), x)).sum();
        Ok(0.5 * s)
    }

    /// Cumulative averages `∫_0^r T_u g(x) du` along a t-grid.
    pub fn profile(&self, f: &PointwiseFunction, x: &[f64], grid: &TGrid) -> AveragingProfile {
        let beta = self.model.beta();
        let reach = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let flat_after = (FLAT_EXPONENT + (1.0 + reach).ln()) / beta;
        AveragingProfile::build(&mut |u| self.value(f, u, x), grid, flat_after)
    }
}

const SMOOTHING_NODES: usize = 32;
const FLAT_EXPONENT: f64 = 36.0;

pub fn mehler_apply(
    f: &PointwiseFunction,
    model: &GaussianModel,
    t: f64,
    x: &[f64],
    grid: &QuadratureGrid,
    method: MehlerMethod,
) -> Result<Estimate> {
    Mehler::new(model, grid, method)?.apply(f, t, x)
}

pub fn smoothing_apply(f: &PointwiseFunction, model: &GaussianModel, t: f64, x: &[f64], grid: &QuadratureGrid) -> Result<f64> {
    Mehler::new(model, grid, MehlerMethod::Quadrature)?.smoothing(f, t, x)
}

/// `∫_0^r h(u) du` at the points of a doubling-aligned t-grid and their doubles.
///
/// `h` is sampled at 6 Gauss-Legendre nodes on half-octave panels; values at
/// grid points inside a panel integrate the panel's interpolating quintic.
/// Past `flat_after`, `h` is taken to be constant (the semigroup has reached
/// its mean to round-off).
#[derive(Clone, Debug)]
pub struct AveragingProfile {
    grid: TGrid,
    cumulative: Vec<f64>,
}

const PANEL_NODES: usize = 6;
const PANELS_PER_OCTAVE: f64 = 2.0;

impl AveragingProfile {
    pub fn build(h: &mut dyn FnMut(f64) -> f64, grid: &TGrid, flat_after: f64) -> Self {
        let k = grid.per_octave();
        let n_fine = grid.len() + k;
        let fine: Vec<f64> = (0..n_fine).map(|j| grid.point(j)).collect();
        let last = fine[n_fine - 1];
        let rule = gauss_legendre(PANEL_NODES);
        let t0 = grid.t_min();
        let mut cumulative = Vec::with_capacity(n_fine);
        // [0, t_min]
        let mut acc: f64 = rule.nodes.iter().zip(&rule.weights).map(|(z, w)| w * h(0.5 * t0 * (z + 1.0))).sum::<f64>() * 0.5 * t0;
        cumulative.push(acc);
        let mut j = 1;
        let mut i = 0;
        let mut vals = [0.0; PANEL_NODES];
        while j < n_fine {
            let a = t0 * (i as f64 / PANELS_PER_OCTAVE).exp2();
            let b = t0 * ((i + 1) as f64 / PANELS_PER_OCTAVE).exp2();
            i += 1;
            if a >= flat_after {
                let mean = h(a.max(flat_after));
                while j < n_fine {
                    cumulative.push(acc + mean * (fine[j] - a));
                    j += 1;
                }
                break;
            }
            let half = 0.5 * (b - a);
            for (v, z) in vals.iter_mut().zip(&rule.nodes) {
                *v = h(a + half * (z + 1.0));
            }
            while j < n_fine && fine[j] <= b * (1.0 + 1e-12) {
                let theta = ((fine[j] - a) / (b - a)).min(1.0);
                let w = partial_weights(&rule.nodes, theta);
                cumulative.push(acc + half * w.iter().zip(&vals).map(|(w, v)| w * v).sum::<f64>());
                j += 1;
            }
            acc += half * rule.weights.iter().zip(&vals).map(|(w, v)| w * v).sum::<f64>();
            if b > last {
                break;
            }
        }
        AveragingProfile { grid: *grid, cumulative }
    }

    pub fn grid(&self) -> &TGrid {
        &self.grid
    }

    /// `∫_0^{t_j} h`.
    pub fn cumulative(&self, j: usize) -> f64 {
        self.cumulative[j]
    }

    /// Cesàro average `t_j^{-1} ∫_0^{t_j} h`.
    pub fn hopf(&self, j: usize) -> f64 {
        self.cumulative[j] / self.grid.point(j)
    }

    /// `t_j^{-1} ∫_{t_j}^{2 t_j} h`.
    pub fn smoothing(&self, j: usize) -> f64 {
        let k = self.grid.per_octave();
        (self.cumulative[j + k] - self.cumulative[j]) / self.grid.point(j)
    }

    pub fn max_hopf(&self) -> f64 {
        (0..self.grid.len()).map(|j| self.hopf(j)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_smoothing(&self) -> f64 {
        (0..self.grid.len()).map(|j| self.smoothing(j)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Maximum over the even-indexed points only, i.e. over a grid with half
    /// the density.
    pub fn max_hopf_coarse(&self) -> f64 {
        (0..self.grid.len()).step_by(2).map(|j| self.hopf(j)).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `∫_{-1}^{-1+2θ} ℓ_j` for the Lagrange basis on `nodes`.
fn partial_weights(nodes: &[f64], theta: f64) -> [f64; PANEL_NODES] {
    let upper = -1.0 + 2.0 * theta;
    let sub = gauss_legendre(PANEL_NODES);
    let (c, h) = (0.5 * (upper - 1.0), 0.5 * (upper + 1.0));
    let mut out = [0.0; PANEL_NODES];
    for (z, w) in sub.nodes.iter().zip(&sub.weights) {
        let x = c + h * z;
        for (j, o) in out.iter_mut().enumerate() {
            let mut l = 1.0;
            for (m, xm) in nodes.iter().enumerate() {
                if m != j {
                    l *= (x - xm) / (nodes[j] - xm);
                }
            }
            *o += h * w * l;
        }
    }
    out
}

/// Both sides of an inequality `lhs <= rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slack {
    pub lhs: f64,
    pub rhs: f64,
}

impl Slack {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    /// `rhs - lhs >= -rel · |rhs|`.
    pub fn holds(&self, rel: f64) -> bool {
        self.slack() >= -rel * self.rhs.abs()
    }
}

fn require_standard(model: &GaussianModel) -> Result<()> {
    if !model.is_standard() {
        return Err(Error::Incompatible("this estimate is only available for the standard model".into()));
    }
    Ok(())
}

fn convexity_rhs(s: f64, h2: f64, t: f64, v0: f64, v1: f64) -> f64 {
    (s * (1.0 - s) * h2 / (2.0 * t)).exp() * v0.powf(1.0 - s) * v1.powf(s)
}

fn convexity_inputs(g: &PointwiseFunction, model: &GaussianModel, t: f64, x0: &[f64], x1: &[f64], s: f64) -> Result<Vec<f64>> {
    require_standard(model)?;
    if !g.is_nonneg() {
        return Err(Error::Domain("log-convexity needs a nonnegative function".into()));
    }
    model.check_point(x0)?;
    model.check_point(x1)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("interpolation parameter {s} outside [0, 1]")));
    }
    if !(t > 0.0) {
        return Err(Error::Domain("t must be positive".into()));
    }
    Ok(x0.iter().zip(x1).map(|(a, b)| (1.0 - s) * a + s * b).collect())
}

/// `T_t g(x_s) <= exp(s(1-s)|x1-x0|²/(2t)) (T_t g(x0))^{1-s} (T_t g(x1))^s`.
pub fn log_convexity_check(
    g: &PointwiseFunction,
    model: &GaussianModel,
    t: f64,
    x0: &[f64],
    x1: &[f64],
    s: f64,
    grid: &QuadratureGrid,
) -> Result<Slack> {
    let xs = convexity_inputs(g, model, t, x0, x1, s)?;
    let m = Mehler::new(model, grid, MehlerMethod::Quadrature)?;
    let h2 = model.cameron_martin_distance(x0, x1).powi(2);
    let (v0, v1) = (m.value(g, t, x0), m.value(g, t, x1));
    let lhs = if s == 0.0 { v0 } else if s == 1.0 { v1 } else { m.value(g, t, &xs) };
    Ok(Slack { lhs, rhs: convexity_rhs(s, h2, t, v0, v1) })
}

/// The same bound with `A_t` in place of `T_t`.
pub fn smoothing_log_convexity_check(
    g: &PointwiseFunction,
    model: &GaussianModel,
    t: f64,
    x0: &[f64],
    x1: &[f64],
    s: f64,
    grid: &QuadratureGrid,
) -> Result<Slack> {
    let xs = convexity_inputs(g, model, t, x0, x1, s)?;
    let m = Mehler::new(model, grid, MehlerMethod::Quadrature)?;
    let h2 = model.cameron_martin_distance(x0, x1).powi(2);
    let (v0, v1) = (m.smoothing(g, t, x0)?, m.smoothing(g, t, x1)?);
    let lhs = if s == 0.0 { v0 } else if s == 1.0 { v1 } else { m.smoothing(g, t, &xs)? };
    Ok(Slack { lhs, rhs: convexity_rhs(s, h2, t, v0, v1) })
}

/// `|A_t f(x1) - A_t f(x0)| <= |h| e^{|h|²/(4t)} (A_t|∇f|(x0) + A_t|∇f|(x1))`.
///
/// The left side is spectral, the right side pointwise.
pub fn lipschitz_bound_check(
    f: &HermiteSeries,
    t: f64,
    x0: &[f64],
    x1: &[f64],
    grid: &QuadratureGrid,
) -> Result<Slack> {
    let model = f.model();
    require_standard(model)?;
    let m = Mehler::new(model, grid, MehlerMethod::Quadrature)?;
    let at = apply(f, SpectralMultiplier::Smoothing { t })?;
    let lhs = (at.eval(x1)? - at.eval(x0)?).abs();
    let h = model.cameron_martin_distance(x0, x1);
    let gn = PointwiseFunction::gradient_norm(f);
    let rhs = h * (h * h / (4.0 * t)).exp() * (m.smoothing(&gn, t, x0)? + m.smoothing(&gn, t, x1)?);
    Ok(Slack { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::MultiIndex;
    use crate::stats::stream_rng;
    use rand::Rng;

    fn grid() -> QuadratureGrid {
        QuadratureGrid::with_order(24)
    }

    #[test]
    fn constants_and_linear() {
        let m = GaussianModel::standard(1);
        let one = PointwiseFunction::nonneg_closure("one", |_| 1.0);
        let lin = PointwiseFunction::closure("x", |x| x[0]);
        for t in [0.1f64, 1.0, 5.0] {
            let v = mehler_apply(&one, &m, t, &[0.7], &grid(), MehlerMethod::Quadrature).unwrap();
            assert!((v.value - 1.0).abs() < 1e-14);
            let v = mehler_apply(&lin, &m, t, &[0.7], &grid(), MehlerMethod::Quadrature).unwrap();
            assert!((v.value - 0.7 * (-t).exp()).abs() < 1e-14);
            let a = smoothing_apply(&lin, &m, t, &[0.7], &grid()).unwrap();
            let want = 0.7 * ((-t).exp() - (-2.0 * t).exp()) / t;
            assert!((a - want).abs() < 1e-12);
        }
    }

    #[test]
    fn agrees_with_spectral_semigroup() {
        for model in [GaussianModel::standard(2), GaussianModel::general(&[1.0, 2.0, 3.0]).unwrap()] {
            let f = HermiteSeries::random(&model, 6, &mut stream_rng(8, 0));
            let pf = PointwiseFunction::series(&f);
            let mut rng = stream_rng(8, 1);
            let mh = Mehler::new(&model, &grid(), MehlerMethod::Quadrature).unwrap();
            for t in [0.1, 1.0, 10.0] {
                let tf = apply(&f, SpectralMultiplier::Semigroup { t }).unwrap();
                let af = apply(&f, SpectralMultiplier::Smoothing { t }).unwrap();
                for _ in 0..5 {
                    let x: Vec<f64> = (0..model.dimension()).map(|_| rng.random_range(-2.0..2.0)).collect();
                    assert!((mh.apply(&pf, t, &x).unwrap().value - tf.eval(&x).unwrap()).abs() < 1e-9);
                    assert!((mh.smoothing(&pf, t, &x).unwrap() - af.eval(&x).unwrap()).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn monte_carlo_reports_error() {
        let m = GaussianModel::standard(1);
        let lin = PointwiseFunction::closure("x", |x| x[0]);
        let g = QuadratureGrid { mc_samples: 20_000, ..grid() };
        let e = mehler_apply(&lin, &m, 0.5, &[1.0], &g, MehlerMethod::MonteCarlo).unwrap();
        assert!(e.stderr > 0.0 && e.agrees_with((-0.5f64).exp(), 4.0, 0.0));
    }

    #[test]
    fn modulus_uses_kinks_in_one_dimension() {
        // T_t|x|(0) = sqrt(1 - e^{-2t}) E|Z|
        let m = GaussianModel::standard(1);
        let h1 = HermiteSeries::basis(&m, 1, MultiIndex::new(vec![1]), 1.0).unwrap();
        let pf = PointwiseFunction::modulus(&h1);
        let mh = Mehler::new(&m, &grid(), MehlerMethod::Quadrature).unwrap();
        for (t, x) in [(0.3f64, 0.0f64), (1.0, 0.8)] {
            let b: f64 = (1.0 - (-2.0 * t).exp()).sqrt();
            let mu: f64 = x * (-t).exp();
            // E|mu + bZ| = b·2φ(mu/b) + mu(2Φ(mu/b) - 1)
            let r = mu / b;
            let want = b * 2.0 * (-r * r / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
                + mu * (2.0 * crate::stats::normal_cdf(r) - 1.0);
            assert!((mh.apply(&pf, t, &[x]).unwrap().value - want).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_reproduces_closed_forms() {
        // h(u) = e^{-u}: F(r) = 1 - e^{-r}
        let g = TGrid::log_spaced(1e-3, 10.0, 16).unwrap();
        let p = AveragingProfile::build(&mut |u: f64| (-u).exp(), &g, 40.0);
        for j in 0..g.len() {
            let t = g.point(j);
            assert!((p.hopf(j) - crate::spectral::hopf_factor(t)).abs() < 1e-8, "j={j}");
            assert!((p.smoothing(j) - crate::spectral::smoothing_factor(t)).abs() < 1e-8, "j={j} {} {}", p.smoothing(j), crate::spectral::smoothing_factor(t));
        }
        // flat tail uses the mean
        let p = AveragingProfile::build(&mut |u: f64| 2.0 + (-10.0 * u).exp(), &g, 4.0);
        let j = g.len() - 1;
        let t = g.point(j);
        assert!((p.cumulative(j) - (2.0 * t + 0.1)).abs() < 1e-9);
    }

    #[test]
    fn profile_matches_pointwise_smoothing() {
        let m = GaussianModel::standard(2);
        let f = HermiteSeries::random(&m, 5, &mut stream_rng(21, 0));
        let pf = PointwiseFunction::gradient_norm(&f);
        let mh = Mehler::new(&m, &QuadratureGrid::with_order(16), MehlerMethod::Quadrature).unwrap();
        let g = TGrid::log_spaced(1e-3, 10.0, 16).unwrap();
        let x = [0.4, -0.9];
        let p = mh.profile(&pf, &x, &g);
        for j in [0, 7, 20, g.len() - 1] {
            let direct = mh.smoothing(&pf, g.point(j), &x).unwrap();
            assert!((p.smoothing(j) - direct).abs() < 1e-6 * direct.max(1.0), "j={j}");
        }
    }

    #[test]
    fn convexity_examples() {
        let m = GaussianModel::standard(1);
        let g = PointwiseFunction::nonneg_closure("1+x^2", |x| 1.0 + x[0] * x[0]);
        for s in [0.0, 1.0] {
            let sl = log_convexity_check(&g, &m, 0.5, &[-1.0], &[1.0], s, &grid()).unwrap();
            assert!(sl.slack().abs() < 1e-14);
        }
        assert!(log_convexity_check(&g, &m, 0.5, &[-1.0], &[1.0], 0.5, &grid()).unwrap().slack() >= 0.0);
        let one = PointwiseFunction::nonneg_closure("one", |_| 1.0);
        let sl = smoothing_log_convexity_check(&one, &m, 1.0, &[0.0], &[2.0], 0.3, &grid()).unwrap();
        assert!((sl.slack() - ((0.3f64 * 0.7 * 4.0 / 2.0).exp() - 1.0)).abs() < 1e-12);
        let e = PointwiseFunction::nonneg_closure("exp", |x| x[0].exp());
        assert!(smoothing_log_convexity_check(&e, &m, 1.0, &[0.0], &[1.0], 0.3, &grid()).unwrap().slack() >= 0.0);
        let gen = GaussianModel::general(&[1.0]).unwrap();
        assert!(log_convexity_check(&g, &gen, 0.5, &[-1.0], &[1.0], 0.5, &grid()).is_err());
        let signed = PointwiseFunction::closure("x", |x| x[0]);
        assert!(log_convexity_check(&signed, &m, 0.5, &[-1.0], &[1.0], 0.5, &grid()).is_err());
    }

    #[test]
    fn lipschitz_examples() {
        let m = GaussianModel::standard(1);
        let h1 = HermiteSeries::basis(&m, 1, MultiIndex::new(vec![1]), 1.0).unwrap();
        let t: f64 = 0.5;
        let sl = lipschitz_bound_check(&h1, t, &[0.2], &[1.0], &grid()).unwrap();
        let factor = ((-t).exp() - (-2.0 * t).exp()) / t;
        assert!((sl.lhs - 0.8 * factor).abs() < 1e-14);
        assert!((sl.rhs - 2.0 * 0.8 * (0.64 / (4.0 * t)).exp()).abs() < 1e-12);
        let same = lipschitz_bound_check(&h1, t, &[0.2], &[0.2], &grid()).unwrap();
        assert!(same.lhs == 0.0 && same.slack() >= 0.0);
    }
}
