//! Gauss rules, adaptive Gauss-Kronrod integration and Gaussian node sets.

use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermite::orthonormal_values;
use crate::model::GaussianModel;
use crate::stats::{mean_stderr, pairwise_sum, stream_rng, Estimate};

/// Nodes and weights of a one-dimensional rule.
#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

type Cache = OnceLock<Mutex<HashMap<usize, Arc<Rule>>>>;

fn cached(cache: &'static Cache, n: usize, build: fn(usize) -> Rule) -> Arc<Rule> {
    let map = cache.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(r) = map.lock().unwrap().get(&n) {
        return r.clone();
    }
    let rule = Arc::new(build(n));
    map.lock().unwrap().entry(n).or_insert(rule).clone()
}

/// Gauss-Hermite rule for the standard normal law: weights sum to one.
pub fn gauss_hermite(n: usize) -> Arc<Rule> {
    static CACHE: Cache = OnceLock::new();
    assert!(n > 0, "rule needs at least one node");
    cached(&CACHE, n, build_gauss_hermite)
}

/// Gauss-Legendre rule on `[-1, 1]`: weights sum to two.
pub fn gauss_legendre(n: usize) -> Arc<Rule> {
    static CACHE: Cache = OnceLock::new();
    assert!(n > 0, "rule needs at least one node");
    cached(&CACHE, n, build_gauss_legendre)
}

// Golub-Welsch on the Jacobi matrix of the orthonormal Hermite family,
// then one Newton polish per node and Christoffel weights.
fn build_gauss_hermite(n: usize) -> Rule {
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let mut nodes: Vec<f64> = jac.symmetric_eigen().eigenvalues.iter().copied().collect();
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut buf = vec![0.0; n + 1];
    let mut weights = Vec::with_capacity(n);
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            orthonormal_values(*x, &mut buf);
            let d = (n as f64).sqrt() * buf[n - 1];
            if d == 0.0 {
                break;
            }
            let step = buf[n] / d;
            *x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
        orthonormal_values(*x, &mut buf);
        weights.push(1.0 / buf[..n].iter().map(|v| v * v).sum::<f64>());
    }
    // Symmetrize to remove round-off asymmetry.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn build_gauss_legendre(n: usize) -> Rule {
    if n == 1 {
        return Rule { nodes: vec![0.0], weights: vec![2.0] };
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * d * d);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// `∫_a^b f` with an `n`-point Gauss-Legendre rule.
pub fn gauss_legendre_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let rule = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    h * rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * f(c + h * x)).sum::<f64>()
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639,
    0.949107912342758525,
    0.864864423359769073,
    0.741531185599394440,
    0.586087235467691130,
    0.405845151377397167,
    0.207784955007898468,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529225,
    0.063092092629978553,
    0.104790010322250184,
    0.140653259715525919,
    0.169004726639267903,
    0.190350578064785410,
    0.204432940075298892,
    0.209482141084727828,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [0.129484966168869693, 0.279705391489276668, 0.381830050505118945, 0.417959183673469388];

/// One Gauss-Kronrod 7/15 panel: `(integral, error estimate)`.
pub fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = WGK[7] * fc;
    let mut resg = WG[3] * fc;
    let mut resabs = resk.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, fvj) in fv.iter_mut().enumerate() {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        resk += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            resg += WG[j / 2] * (f1 + f2);
        }
        *fvj = (f1, f2);
    }
    let mean = 0.5 * resk;
    let mut resasc = WGK[7] * (fc - mean).abs();
    for (j, (f1, f2)) in fv.iter().enumerate() {
        resasc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let habs = h.abs();
    let (resk, resabs, resasc) = (resk * h, resabs * habs, resasc * habs);
    let mut err = (resk - resg * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    (resk, err)
}

/// Tolerances for adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveSpec {
    fn default() -> Self {
        AdaptiveSpec { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

impl AdaptiveSpec {
    pub fn refined(&self) -> Self {
        AdaptiveSpec {
            abs_tol: self.abs_tol / 10.0,
            rel_tol: self.rel_tol / 10.0,
            max_intervals: self.max_intervals * 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.max_intervals > 0) {
            return Err(Error::Config("adaptive tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub intervals: usize,
}

impl Quad {
    pub fn require(self, what: &str) -> Result<f64> {
        if self.converged && self.value.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::NoConvergence(format!(
                "{what}: value {} error {} after {} intervals",
                self.value, self.error, self.intervals
            )))
        }
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&o.error)
    }
}

/// Globally adaptive Gauss-Kronrod integration over consecutive `breaks`.
///
/// The breaks are where the integrand may be singular or kinked; they are
/// never evaluated.
pub fn adaptive_pieces(f: &dyn Fn(f64) -> f64, breaks: &[f64], spec: &AdaptiveSpec) -> Quad {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (value, error) = gk15(f, w[0], w[1]);
            heap.push(Panel { a: w[0], b: w[1], value, error });
        }
    }
    let total = |h: &BinaryHeap<Panel>| {
        let v: Vec<f64> = h.iter().map(|p| p.value).collect();
        let e: f64 = h.iter().map(|p| p.error).sum();
        (pairwise_sum(&v), e)
    };
    loop {
        let (value, error) = total(&heap);
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tol || heap.len() >= spec.max_intervals {
            return Quad { value, error, converged: error <= tol, intervals: heap.len() };
        }
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            let (value, error) = total(&heap);
            return Quad { value, error, converged: false, intervals: heap.len() };
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(f, a, b);
            heap.push(Panel { a, b, value, error });
        }
    }
}

pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, spec: &AdaptiveSpec) -> Quad {
    adaptive_pieces(f, &[a, b], spec)
}

/// `∫_a^b f` where `f` may blow up like `(s - a)^(-1/2)`; uses `s = a + u²`.
pub fn adaptive_sqrt_left(f: &dyn Fn(f64) -> f64, a: f64, b: f64, spec: &AdaptiveSpec) -> Quad {
    let g = |u: f64| 2.0 * u * f(a + u * u);
    adaptive(&g, 0.0, (b - a).sqrt(), spec)
}

/// `∫_a^b f` where `f` may blow up like `(b - s)^(-1/2)`; uses `s = b - u²`.
pub fn adaptive_sqrt_right(f: &dyn Fn(f64) -> f64, a: f64, b: f64, spec: &AdaptiveSpec) -> Quad {
    let g = |u: f64| 2.0 * u * f(b - u * u);
    adaptive(&g, 0.0, (b - a).sqrt(), spec)
}

/// `∫_a^b f` with inverse square-root singularities allowed at both ends.
pub fn adaptive_sqrt_both(f: &dyn Fn(f64) -> f64, a: f64, b: f64, spec: &AdaptiveSpec) -> Quad {
    let m = 0.5 * (a + b);
    let half = AdaptiveSpec { abs_tol: spec.abs_tol / 2.0, ..*spec };
    let l = adaptive_sqrt_left(f, a, m, &half);
    let r = adaptive_sqrt_right(f, m, b, &half);
    combine(l, r)
}

/// `∫_a^∞ f` through `s = a + c (1/w² - 1)`, `w ∈ (0, 1]`.
///
/// Tails decaying like `s^(-3/2)` become bounded integrands in `w`.
pub fn adaptive_tail(f: &dyn Fn(f64) -> f64, a: f64, c: f64, spec: &AdaptiveSpec) -> Quad {
    let g = |w: f64| {
        let s = a + c * (1.0 / (w * w) - 1.0);
        if !s.is_finite() {
            return 0.0;
        }
        let v = f(s) * 2.0 * c / (w * w * w);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    adaptive(&g, 0.0, 1.0, spec)
}

pub fn combine(a: Quad, b: Quad) -> Quad {
    Quad {
        value: a.value + b.value,
        error: a.error + b.error,
        converged: a.converged && b.converged,
        intervals: a.intervals + b.intervals,
    }
}

/// `∫ f(x) N(0, σ²)(dx)` on the line, split at `breaks`, tails mapped to `(0, 1]`.
pub fn gaussian_line(f: &dyn Fn(f64) -> f64, sigma: f64, breaks: &[f64], spec: &AdaptiveSpec) -> Quad {
    let dens = |x: f64| (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let g = |x: f64| f(x) * dens(x);
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|b| b.is_finite()).collect();
    if pts.is_empty() {
        pts.push(0.0);
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    let mid = adaptive_pieces(&g, &pts, spec);
    let (lo, hi) = (pts[0], *pts.last().unwrap());
    let right = adaptive_tail(&g, hi, sigma, spec);
    let mirrored = |x: f64| g(-x);
    let left = adaptive_tail(&mirrored, -lo, sigma, spec);
    combine(combine(mid, right), left)
}

/// Declared singular points and tolerances for one-dimensional integrals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveLine {
    #[serde(default)]
    pub singular_points: Vec<f64>,
    #[serde(default)]
    pub tolerances: AdaptiveSpec,
}

/// How Gaussian integrals are discretized.
///
/// Dimensions up to three use tensor Gauss-Hermite nodes (`order` per axis);
/// one-dimensional integrands with kinks use composite Gauss-Legendre panels
/// split at the kinks; higher dimensions fall back to seeded Monte Carlo.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureGrid {
    pub order: usize,
    /// Panels across `[-12σ, 12σ]` for the composite line rule; 0 ignores kinks.
    pub line_panels: usize,
    pub adaptive: Option<AdaptiveLine>,
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for QuadratureGrid {
    fn default() -> Self {
        QuadratureGrid { order: 24, line_panels: 48, adaptive: None, mc_samples: 20_000, seed: 0x5eed }
    }
}

const LINE_HALF_WIDTH: f64 = 12.0;
const LINE_PANEL_POINTS: usize = 16;
const MAX_TENSOR_DIM: usize = 3;

impl QuadratureGrid {
    pub fn with_order(order: usize) -> Self {
        QuadratureGrid { order, ..Default::default() }
    }

    pub fn with_adaptive(mut self, singular_points: Vec<f64>) -> Self {
        self.adaptive = Some(AdaptiveLine { singular_points, tolerances: AdaptiveSpec::default() });
        self
    }

    /// Doubles every resolution knob; the seed is kept.
    pub fn refined(&self) -> Self {
        QuadratureGrid {
            order: self.order * 2,
            line_panels: self.line_panels * 2,
            adaptive: self.adaptive.as_ref().map(|a| AdaptiveLine {
                singular_points: a.singular_points.clone(),
                tolerances: a.tolerances.refined(),
            }),
            mc_samples: self.mc_samples * 2,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order == 0 || self.mc_samples < 2 {
            return Err(Error::Config("quadrature order and sample count must be positive".into()));
        }
        if let Some(a) = &self.adaptive {
            a.tolerances.validate()?;
        }
        Ok(())
    }

    /// Per-axis Gauss-Hermite nodes scaled to the axis variance.
    pub fn axis_rule(&self, model: &GaussianModel, axis: usize) -> Rule {
        let base = gauss_hermite(self.order);
        let s = model.axis(axis).variance.sqrt();
        Rule { nodes: base.nodes.iter().map(|x| s * x).collect(), weights: base.weights.clone() }
    }

    /// Node set for integrating against the model's Gaussian measure.
    ///
    /// `kinks` are only used in dimension one, where they switch to the
    /// composite line rule.
    pub fn nodes(&self, model: &GaussianModel, kinks: &[f64]) -> Result<NodeSet> {
        self.validate()?;
        let d = model.dimension();
        if d == 1 && !kinks.is_empty() && self.line_panels > 0 {
            return Ok(self.line_nodes(model.axis(0).variance.sqrt(), kinks));
        }
        if d <= MAX_TENSOR_DIM {
            return Ok(self.tensor_nodes(model));
        }
        Ok(self.mc_nodes(model))
    }

    fn tensor_nodes(&self, model: &GaussianModel) -> NodeSet {
        let d = model.dimension();
        let rules: Vec<Rule> = (0..d).map(|i| self.axis_rule(model, i)).collect();
        let n = self.order.pow(d as u32);
        let mut points = Vec::with_capacity(n * d);
        let mut weights = Vec::with_capacity(n);
        let mut idx = vec![0usize; d];
        for _ in 0..n {
            let mut w = 1.0;
            for (i, r) in rules.iter().enumerate() {
                points.push(r.nodes[idx[i]]);
                w *= r.weights[idx[i]];
            }
            weights.push(w);
            for i in (0..d).rev() {
                idx[i] += 1;
                if idx[i] < self.order {
                    break;
                }
                idx[i] = 0;
            }
        }
        NodeSet { dim: d, points, weights, kind: NodeKind::Tensor, axes: Some(rules.into_iter().map(|r| r.nodes).collect()) }
    }

    fn line_nodes(&self, sigma: f64, kinks: &[f64]) -> NodeSet {
        let (lo, hi) = (-LINE_HALF_WIDTH * sigma, LINE_HALF_WIDTH * sigma);
        let mut pts: Vec<f64> = kinks.iter().copied().filter(|k| *k > lo && *k < hi).collect();
        pts.push(lo);
        pts.push(hi);
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14 * sigma);
        let width = (hi - lo) / self.line_panels as f64;
        let rule = gauss_legendre(LINE_PANEL_POINTS);
        let norm = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for w in pts.windows(2) {
            let m = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / m as f64;
            for j in 0..m {
                let a = w[0] + j as f64 * h;
                for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
                    let y = a + 0.5 * h * (x + 1.0);
                    points.push(y);
                    weights.push(0.5 * h * wt * norm * (-0.5 * (y / sigma).powi(2)).exp());
                }
            }
        }
        NodeSet { dim: 1, points, weights, kind: NodeKind::Line, axes: None }
    }

    fn mc_nodes(&self, model: &GaussianModel) -> NodeSet {
        let d = model.dimension();
        let scale: Vec<f64> = model.variances().iter().map(|q| q.sqrt()).collect();
        let mut rng = stream_rng(self.seed, 0);
        let mut points = Vec::with_capacity(self.mc_samples * d);
        for _ in 0..self.mc_samples {
            for s in &scale {
                let z: f64 = StandardNormal.sample(&mut rng);
                points.push(s * z);
            }
        }
        let w = 1.0 / self.mc_samples as f64;
        NodeSet { dim: d, points, weights: vec![w; self.mc_samples], kind: NodeKind::MonteCarlo, axes: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Tensor,
    Line,
    MonteCarlo,
}

/// Points in `R^d` with weights approximating a Gaussian measure.
#[derive(Clone, Debug)]
pub struct NodeSet {
    dim: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
    kind: NodeKind,
    axes: Option<Vec<Vec<f64>>>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    /// Per-axis nodes when the set is a tensor grid (axis 0 slowest).
    pub fn tensor_axes(&self) -> Option<&[Vec<f64>]> {
        self.axes.as_deref()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn values(&self, f: &dyn Fn(&[f64]) -> f64) -> Vec<f64> {
        self.points().map(f).collect()
    }

    /// Weighted sum of `values` (one per node).
    pub fn sum(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = values.iter().zip(&self.weights).map(|(v, w)| v * w).collect();
        pairwise_sum(&terms)
    }

    /// Like [`NodeSet::sum`], with a standard error for Monte Carlo nodes.
    pub fn estimate(&self, values: &[f64]) -> Estimate {
        match self.kind {
            NodeKind::MonteCarlo => {
                let (value, stderr) = mean_stderr(values);
                Estimate { value, stderr }
            }
            _ => Estimate::exact(self.sum(values)),
        }
    }
}

/// `∫ f dm` for the model's Gaussian measure `m`.
pub fn integrate(f: &dyn Fn(&[f64]) -> f64, model: &GaussianModel, grid: &QuadratureGrid) -> Result<Estimate> {
    grid.validate()?;
    if model.dimension() == 1 {
        if let Some(line) = &grid.adaptive {
            let g = |x: f64| f(&[x]);
            let q = gaussian_line(&g, model.axis(0).variance.sqrt(), &line.singular_points, &line.tolerances);
            return Ok(Estimate::exact(q.require("gaussian integral")?));
        }
    }
    let nodes = grid.nodes(model, &[])?;
    Ok(nodes.estimate(&nodes.values(f)))
}
