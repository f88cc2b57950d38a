//! Path simulation: OU processes, the variance-2 level process and its
//! hitting time, occupation integrals, martingale second moments, and the
//! half-stable subordination density.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::hermite::orthonormal_values;
use crate::model::GaussianModel;
use crate::quadrature::{adaptive_pieces, adaptive_tail, AdaptiveSpec, QuadratureGrid};
use crate::series::HermiteSeries;
use crate::spectral::{eigenvalue, partial};
use crate::stats::{stream_rng, Estimate, McEstimate};

pub const MAX_DT: f64 = 1e-2;
pub const ACCEPTANCE_PATHS: usize = 10_000;

/// Discretization and sampling parameters shared by every path routine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub dt: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    pub start_level: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { dt: 1e-3, horizon: 1e8, paths: ACCEPTANCE_PATHS, seed: 0x5eed, start_level: 1.0 }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::Config(format!("dt must lie in (0, {MAX_DT}], got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config("horizon must be positive and finite".into()));
        }
        if self.paths == 0 {
            return Err(Error::Config("need at least one path".into()));
        }
        if !self.start_level.is_finite() {
            return Err(Error::Config("start level must be finite".into()));
        }
        Ok(())
    }

    pub fn is_acceptance_sized(&self) -> bool {
        self.paths >= ACCEPTANCE_PATHS
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_start(mut self, level: f64) -> Self {
        self.start_level = level;
        self
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
}

/// `P_N(τ > t)` for the variance-2 Brownian motion started at `N`.
pub fn survival(n: f64, t: f64) -> f64 {
    if n <= 0.0 {
        return 0.0;
    }
    if t <= 0.0 {
        return 1.0;
    }
    erf(n / (2.0 * t.sqrt()))
}

/// `P_N(τ <= t) = 2 (1 - Φ(N / sqrt(2t)))`.
pub fn hitting_cdf(n: f64, t: f64) -> f64 {
    1.0 - survival(n, t)
}

/// `(1 - e^{-2x})/(2x) - ((1 - e^{-x})/x)²`, the conditional variance factor
/// of the OU noise integral given the Brownian increment.
fn conditional_factor(x: f64) -> f64 {
    if x < 1e-2 {
        let c = [1.0 / 12.0, -1.0 / 12.0, 17.0 / 360.0, -7.0 / 360.0, 43.0 / 6720.0, -107.0 / 60480.0];
        return x * x * c.iter().rev().fold(0.0, |acc, k| acc * x + k);
    }
    let a = -(-2.0 * x).exp_m1() / (2.0 * x);
    let b = -(-x).exp_m1() / x;
    (a - b * b).max(0.0)
}

/// Exact one-step transition of `dX_i = -λ_i X_i dt + σ_i dW_i`, `σ_i² = 2 λ_i q_i`,
/// jointly with the driving increment `ΔW_i`.
#[derive(Clone, Debug)]
struct OuStep {
    decay: Vec<f64>,
    on_w: Vec<f64>,
    free: Vec<f64>,
    w_sd: f64,
}

impl OuStep {
    fn new(model: &GaussianModel, h: f64) -> Self {
        let mut decay = Vec::new();
        let mut on_w = Vec::new();
        let mut free = Vec::new();
        for ax in model.axes() {
            let (l, q) = (ax.rate, ax.variance);
            let sigma = (2.0 * l * q).sqrt();
            let x = l * h;
            decay.push((-x).exp());
            let cov = if x < 1e-12 { h } else { -(-x).exp_m1() / l };
            on_w.push(sigma * cov / h.sqrt());
            free.push(sigma * (h * conditional_factor(x)).sqrt());
        }
        OuStep { decay, on_w, free, w_sd: h.sqrt() }
    }

    fn advance<R: Rng + ?Sized>(&self, rng: &mut R, x: &mut [f64], dw: &mut [f64]) {
        for i in 0..x.len() {
            let z1 = normal(rng);
            let z2 = normal(rng);
            x[i] = self.decay[i] * x[i] + self.on_w[i] * z1 + self.free[i] * z2;
            dw[i] = self.w_sd * z1;
        }
    }
}

/// Marginal OU transition over an arbitrary time `h`.
fn ou_jump<R: Rng + ?Sized>(rng: &mut R, model: &GaussianModel, x: &mut [f64], h: f64) {
    for (xi, ax) in x.iter_mut().zip(model.axes()) {
        let e = -(-2.0 * ax.rate * h).exp_m1();
        *xi = (-ax.rate * h).exp() * *xi + (ax.variance * e).sqrt() * normal(rng);
    }
}

fn stationary_point<R: Rng + ?Sized>(rng: &mut R, model: &GaussianModel) -> Vec<f64> {
    model.variances().iter().map(|q| q.sqrt() * normal(rng)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuInit {
    Point(Vec<f64>),
    Stationary,
}

/// OU paths on the grid `t_k = k·dt`, stored path-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OuPaths {
    dim: usize,
    dt: f64,
    steps: usize,
    data: Vec<f64>,
}

impl OuPaths {
    pub fn paths(&self) -> usize {
        self.data.len() / (self.dim * (self.steps + 1))
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn state(&self, path: usize, k: usize) -> &[f64] {
        let at = (path * (self.steps + 1) + k) * self.dim;
        &self.data[at..at + self.dim]
    }

    /// Axis `axis` of every path at step `k`.
    pub fn slice(&self, k: usize, axis: usize) -> Vec<f64> {
        (0..self.paths()).map(|p| self.state(p, k)[axis]).collect()
    }
}

const MAX_STORED: usize = 50_000_000;

/// Exact-transition OU sampling over `[0, horizon]`.
pub fn sample_ou(model: &GaussianModel, init: &OuInit, cfg: &PathConfig) -> Result<OuPaths> {
    cfg.validate()?;
    if let OuInit::Point(p) = init {
        model.check_point(p)?;
    }
    let steps = (cfg.horizon / cfg.dt).round().max(1.0) as usize;
    let d = model.dimension();
    if cfg.paths.saturating_mul(steps + 1).saturating_mul(d) > MAX_STORED {
        return Err(Error::Config("path ensemble too large to store".into()));
    }
    let stepper = OuStep::new(model, cfg.dt);
    let mut data = Vec::with_capacity(cfg.paths * (steps + 1) * d);
    let mut dw = vec![0.0; d];
    for p in 0..cfg.paths {
        let mut rng = stream_rng(cfg.seed, p as u64);
        let mut x = match init {
            OuInit::Point(v) => v.clone(),
            OuInit::Stationary => stationary_point(&mut rng, model),
        };
        data.extend_from_slice(&x);
        for _ in 0..steps {
            stepper.advance(&mut rng, &mut x, &mut dw);
            data.extend_from_slice(&x);
        }
    }
    Ok(OuPaths { dim: d, dt: cfg.dt, steps, data })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Crossing {
    /// Absorb only when the endpoint is at or below zero.
    Naive,
    /// Also absorb with the bridge crossing probability `exp(-ab/h)`.
    Bridge,
}

#[derive(Clone, Copy, Debug)]
enum Move {
    /// One grid step from `a` to `b`; when `stopped`, `b = 0` and `elapsed`
    /// is the interpolated hitting time inside the step.
    Step { a: f64, b: f64, elapsed: f64, stopped: bool },
    /// An excursion above the cap returning to it after `elapsed`.
    Skip { elapsed: f64 },
}

/// Simulates `B` from `start` until it hits zero or the horizon passes.
/// Returns the hitting time, or `None` when censored.
fn walk<R: Rng + ?Sized>(
    rng: &mut R,
    start: f64,
    dt: f64,
    horizon: f64,
    cap: f64,
    crossing: Crossing,
    mut visit: impl FnMut(&mut R, Move),
) -> Option<f64> {
    if start <= 0.0 {
        return Some(0.0);
    }
    let scale = (2.0 * dt).sqrt();
    let mut t = 0.0;
    let mut a = start;
    loop {
        if a > cap {
            let z = normal(rng);
            let delta = a - cap;
            let elapsed = delta * delta / (2.0 * z * z);
            visit(rng, Move::Skip { elapsed });
            t += elapsed;
            a = cap;
        }
        if t >= horizon {
            return None;
        }
        let b = a + scale * normal(rng);
        let hit = b <= 0.0 || (crossing == Crossing::Bridge && rng.random::<f64>() < (-a * b / dt).exp());
        if hit {
            let elapsed = dt * a / (a + b.abs());
            visit(rng, Move::Step { a, b: 0.0, elapsed, stopped: true });
            return Some(t + elapsed);
        }
        visit(rng, Move::Step { a, b, elapsed: dt, stopped: false });
        t += dt;
        a = b;
    }
}

/// Hitting times of zero for the variance-2 level process.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HittingSample {
    /// `+∞` marks a path censored at the horizon.
    pub taus: Vec<f64>,
    pub horizon: f64,
    pub dt: f64,
    /// Grid values of the first few paths, up to absorption.
    pub recorded: Vec<Vec<f64>>,
}

impl HittingSample {
    pub fn cdf(&self, t: f64) -> Estimate {
        let n = self.taus.len();
        let p = self.taus.iter().filter(|&&x| x <= t + 1e-12).count() as f64 / n as f64;
        Estimate { value: p, stderr: crate::stats::fraction_stderr(p, n) }
    }

    pub fn censored_fraction(&self) -> f64 {
        self.taus.iter().filter(|x| x.is_infinite()).count() as f64 / self.taus.len() as f64
    }
}

const RECORDED_PATHS: usize = 4;

pub fn sample_hitting(cfg: &PathConfig, crossing: Crossing) -> Result<HittingSample> {
    cfg.validate()?;
    let mut taus = Vec::with_capacity(cfg.paths);
    let mut recorded = Vec::new();
    for p in 0..cfg.paths {
        let mut rng = stream_rng(cfg.seed, p as u64);
        let mut trace = vec![cfg.start_level.max(0.0)];
        let keep = p < RECORDED_PATHS;
        let tau = walk(&mut rng, cfg.start_level, cfg.dt, cfg.horizon, f64::INFINITY, crossing, |_, mv| {
            if let (true, Move::Step { b, .. }) = (keep, mv) {
                trace.push(b);
            }
        });
        taus.push(tau.unwrap_or(f64::INFINITY));
        if keep {
            recorded.push(trace);
        }
    }
    Ok(HittingSample { taus, horizon: cfg.horizon, dt: cfg.dt, recorded })
}

/// `E_N ∫_0^τ ζ(B_s, X_s) ds` against `∫ (N ∧ a) ∫ ζ(a, x) dm(x) da`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupationReport {
    /// Absent when the right-hand side diverges.
    pub lhs: Option<McEstimate>,
    pub rhs: f64,
    pub divergent: bool,
    pub cap: f64,
    /// Bound on the mass dropped by cap skipping and horizon censoring.
    pub truncation_bound: f64,
    pub dt: f64,
    pub seed: u64,
}

impl OccupationReport {
    pub fn agrees(&self) -> bool {
        match &self.lhs {
            Some(l) => (l.mean - self.rhs).abs() <= 3.0 * l.stderr + self.truncation_bound,
            None => false,
        }
    }
}

/// Target for the mass ignored above the cap, relative to the total.
const CAP_TOLERANCE: f64 = 1e-4;

fn choose_cap(bias: impl Fn(f64) -> f64, tol: f64) -> f64 {
    let mut hi = 1.0;
    while bias(hi) > tol {
        hi *= 2.0;
        if hi > 1e4 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if bias(mid) > tol {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-3 {
            break;
        }
    }
    hi
}

pub fn occupation_check(
    zeta: &(dyn Fn(f64, &[f64]) -> f64 + Sync),
    model: &GaussianModel,
    cfg: &PathConfig,
    grid: &QuadratureGrid,
) -> Result<OccupationReport> {
    cfg.validate()?;
    grid.validate()?;
    let n = cfg.start_level.max(0.0);
    let nodes = grid.nodes(model, &[])?;
    let eta = |a: f64| nodes.sum(&nodes.values(&|x: &[f64]| zeta(a, x)));
    let eta_abs = |a: f64| nodes.sum(&nodes.values(&|x: &[f64]| zeta(a, x).abs()));
    let spec = AdaptiveSpec::default();
    let weighted = |a: f64| n.min(a) * eta(a);
    let head = if n > 0.0 { adaptive_pieces(&weighted, &[0.0, n], &spec) } else { adaptive_pieces(&weighted, &[], &spec) };
    let tail = adaptive_tail(&weighted, n, 1.0, &spec);
    let rhs = head.value + tail.value;
    let divergent = !(head.converged && tail.converged && rhs.is_finite());
    if divergent || n == 0.0 {
        return Ok(OccupationReport {
            lhs: if divergent { None } else { Some(McEstimate::from_samples(&vec![0.0; cfg.paths], 0)) },
            rhs: if divergent { f64::INFINITY } else { rhs },
            divergent,
            cap: 0.0,
            truncation_bound: 0.0,
            dt: cfg.dt,
            seed: cfg.seed,
        });
    }
    let above = |cap: f64| adaptive_tail(&|a: f64| n.min(a) * eta_abs(a), cap, 1.0, &spec).value;
    let tol = CAP_TOLERANCE * rhs.abs().max(1e-12);
    let cap = choose_cap(above, tol);
    if !cap.is_finite() {
        return Err(Error::NoConvergence("ζ decays too slowly in a for a finite cap".into()));
    }
    let below = adaptive_pieces(&|a: f64| a.min(cap) * eta_abs(a), &[0.0, cap], &spec).value
        + adaptive_tail(&|a: f64| cap * eta_abs(a), cap, 1.0, &spec).value;
    let truncation_bound = above(cap) + survival(n, cfg.horizon) * below;

    let stepper = OuStep::new(model, cfg.dt);
    let d = model.dimension();
    let mut samples = Vec::with_capacity(cfg.paths);
    let mut censored = 0;
    let mut dw = vec![0.0; d];
    for p in 0..cfg.paths {
        let mut rng = stream_rng(cfg.seed, p as u64);
        let mut x = stationary_point(&mut rng, model);
        let mut left = zeta(n.min(cap), &x);
        let mut acc = 0.0;
        let tau = walk(&mut rng, n, cfg.dt, cfg.horizon, cap, Crossing::Bridge, |rng, mv| match mv {
            Move::Skip { elapsed } => {
                ou_jump(rng, model, &mut x, elapsed);
                left = zeta(cap, &x);
            }
            Move::Step { b, elapsed, stopped, .. } => {
                if stopped {
                    ou_jump(rng, model, &mut x, elapsed);
                } else {
                    stepper.advance(rng, &mut x, &mut dw);
                }
                let right = zeta(b, &x);
                acc += 0.5 * (left + right) * elapsed;
                left = right;
            }
        });
        if tau.is_none() {
            censored += 1;
        }
        samples.push(acc);
    }
    Ok(OccupationReport {
        lhs: Some(McEstimate::from_samples(&samples, censored)),
        rhs,
        divergent: false,
        cap,
        truncation_bound,
        dt: cfg.dt,
        seed: cfg.seed,
    })
}

/// `Σ_k c_k e^{-s_k a} ĥ_k(x)` for fixed rates.
#[derive(Clone, Debug)]
struct DecayField {
    terms: Vec<(f64, f64, Vec<usize>)>,
}

impl DecayField {
    fn eval(&self, a: f64, table: &[Vec<f64>]) -> f64 {
        self.terms
            .iter()
            .map(|(c, s, deg)| c * (-s * a).exp() * deg.iter().enumerate().map(|(i, &k)| table[i][k]).product::<f64>())
            .sum()
    }

    fn max_degree(&self) -> usize {
        self.terms.iter().flat_map(|t| t.2.iter().copied()).max().unwrap_or(0)
    }
}

/// `∂_a R^β_a g` as a decay field.
fn level_derivative(g: &HermiteSeries, beta: f64) -> DecayField {
    let model = g.model();
    let terms = g
        .coeffs()
        .filter_map(|(k, c)| {
            let s = (beta + eigenvalue(k, model)).sqrt();
            (s > 0.0 && c != 0.0).then(|| (-s * c, s, k.degrees().to_vec()))
        })
        .collect();
    DecayField { terms }
}

/// `σ_i ∂_i R^α_a f = σ_i R^{α+λ_i}_a ∂_i f` for each axis.
fn spatial_gradient(f: &HermiteSeries, alpha: f64) -> Vec<DecayField> {
    let model = f.model();
    (0..f.dim())
        .map(|i| {
            let ax = model.axis(i);
            let sigma = (2.0 * ax.rate * ax.variance).sqrt();
            let di = partial(f, i);
            let terms = di
                .coeffs()
                .filter(|(_, c)| *c != 0.0)
                .map(|(k, c)| (sigma * c, (alpha + ax.rate + eigenvalue(k, model)).sqrt(), k.degrees().to_vec()))
                .collect();
            DecayField { terms }
        })
        .collect()
}

/// `∫_cap^∞ (N ∧ a) e^{-2sa} da`.
fn above_cap(cap: f64, n: f64, s: f64) -> f64 {
    let e = (-2.0 * s * cap).exp();
    if cap >= n {
        n * e / (2.0 * s)
    } else {
        cap * e / (2.0 * s) + (e - (-2.0 * s * n).exp()) / (4.0 * s * s)
    }
}

/// `∫_0^∞ (N ∧ a) e^{-2sa} da`.
fn weighted_mass(n: f64, s: f64) -> f64 {
    -(-2.0 * s * n).exp_m1() / (4.0 * s * s)
}

/// Quadratic-variation densities `w e^{-2sa}` integrated against `(N ∧ a)`.
#[derive(Clone, Debug, Default)]
struct Spectrum {
    modes: Vec<(f64, f64)>,
}

impl Spectrum {
    fn push(&mut self, weight: f64, s: f64) {
        if weight != 0.0 && s > 0.0 {
            self.modes.push((weight, s));
        }
    }

    fn expected(&self, n: f64) -> f64 {
        self.modes.iter().map(|(w, s)| w * weighted_mass(n, *s)).sum()
    }

    fn limit(&self) -> f64 {
        self.modes.iter().map(|(w, s)| w / (4.0 * s * s)).sum()
    }

    fn above(&self, cap: f64, n: f64) -> f64 {
        self.modes.iter().map(|(w, s)| w * above_cap(cap, n, *s)).sum()
    }
}

struct Simulation {
    arrow: Vec<f64>,
    up: Vec<f64>,
    censored: usize,
}

fn simulate(model: &GaussianModel, arrow: &[DecayField], up: &[DecayField], cap: f64, cfg: &PathConfig) -> Simulation {
    let d = model.dimension();
    let deg = arrow.iter().chain(up).map(DecayField::max_degree).max().unwrap_or(0);
    let inv_sd: Vec<f64> = model.variances().iter().map(|q| 1.0 / q.sqrt()).collect();
    let stepper = OuStep::new(model, cfg.dt);
    let mut table = vec![vec![0.0; deg + 1]; d];
    let mut dw = vec![0.0; d];
    let mut m_arrow = vec![0.0; arrow.len()];
    let mut grads = vec![0.0; up.len()];
    let mut out = Simulation { arrow: Vec::with_capacity(cfg.paths), up: Vec::with_capacity(cfg.paths), censored: 0 };
    for p in 0..cfg.paths {
        let mut rng = stream_rng(cfg.seed, p as u64);
        let mut x = stationary_point(&mut rng, model);
        m_arrow.iter_mut().for_each(|m| *m = 0.0);
        let mut m_up = 0.0;
        let tau = walk(&mut rng, cfg.start_level, cfg.dt, cfg.horizon, cap, Crossing::Bridge, |rng, mv| match mv {
            Move::Skip { elapsed } => ou_jump(rng, model, &mut x, elapsed),
            Move::Step { a, b, elapsed, stopped } => {
                for i in 0..d {
                    orthonormal_values(x[i] * inv_sd[i], &mut table[i]);
                }
                for (m, field) in m_arrow.iter_mut().zip(arrow) {
                    *m += field.eval(a, &table) * (b - a);
                }
                for (g, field) in grads.iter_mut().zip(up) {
                    *g = field.eval(a, &table);
                }
                if stopped {
                    let sd = elapsed.sqrt();
                    for g in grads.iter() {
                        m_up += g * sd * normal(rng);
                    }
                } else {
                    stepper.advance(rng, &mut x, &mut dw);
                    m_up += grads.iter().zip(&dw).map(|(g, w)| g * w).sum::<f64>();
                }
            }
        });
        if tau.is_none() {
            out.censored += 1;
        }
        out.arrow.push(m_arrow.iter().map(|m| m * m).sum());
        out.up.push(m_up * m_up);
    }
    out
}

/// Second moments of `M→` and `M↑` at one start level against spectral predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub start_level: f64,
    pub alpha: f64,
    pub dt: f64,
    pub seed: u64,
    pub cap: f64,
    pub arrow: McEstimate,
    pub up: McEstimate,
    /// `E_N[M→(∞)²]` for the continuous process.
    pub arrow_prediction: f64,
    pub up_prediction: f64,
    /// `N → ∞` limits.
    pub arrow_limit: f64,
    pub up_limit: f64,
    /// The `M↑` limit with the prefactor 1/4 in place of 1/2.
    pub up_limit_quarter: f64,
    /// Bounds on the second-moment mass dropped by the cap and the horizon.
    pub arrow_bias: f64,
    pub up_bias: f64,
}

impl MartingaleReport {
    pub fn arrow_agrees(&self) -> bool {
        (self.arrow.mean - self.arrow_prediction).abs() <= 3.0 * self.arrow.stderr + self.arrow_bias
    }

    pub fn up_agrees(&self) -> bool {
        (self.up.mean - self.up_prediction).abs() <= 3.0 * self.up.stderr + self.up_bias
    }

    /// Whether the quarter-prefactor limit is also within tolerance.
    pub fn quarter_agrees(&self) -> bool {
        (self.up.mean - self.up_limit_quarter).abs() <= 3.0 * self.up.stderr + self.up_bias
    }
}

fn zero_estimate(paths: usize) -> McEstimate {
    McEstimate { mean: 0.0, stderr: 0.0, paths, truncation_fraction: 0.0 }
}

/// `M→ = ∫ ∂_a u(B, X) dB` and `M↑ = ∫ ∇u(B, X)·σ dW` with `u(a) = R^α_a f`.
pub fn martingale_moment_check(f: &HermiteSeries, alpha: f64, cfg: &PathConfig) -> Result<MartingaleReport> {
    cfg.validate()?;
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain("α must be a nonnegative real".into()));
    }
    let model = f.model();
    let n = cfg.start_level.max(0.0);
    let mut qv_arrow = Spectrum::default();
    let mut qv_up = Spectrum::default();
    let mut quarter = 0.0;
    for (k, c) in f.coeffs() {
        let mu = eigenvalue(k, model);
        let s = (alpha + mu).sqrt();
        qv_arrow.push(2.0 * c * c * s * s, s);
        qv_up.push(2.0 * c * c * mu, s);
        if s > 0.0 {
            quarter += 0.25 * c * c * mu / (s * s);
        }
    }
    let tol = CAP_TOLERANCE * qv_arrow.limit().max(1e-300);
    let cap = if qv_arrow.modes.is_empty() { 0.0 } else { choose_cap(|c| qv_arrow.above(c, n) + qv_up.above(c, n), tol) };
    let censor = survival(n, cfg.horizon);
    let mut report = MartingaleReport {
        start_level: cfg.start_level,
        alpha,
        dt: cfg.dt,
        seed: cfg.seed,
        cap,
        arrow: zero_estimate(cfg.paths),
        up: zero_estimate(cfg.paths),
        arrow_prediction: qv_arrow.expected(n),
        up_prediction: qv_up.expected(n),
        arrow_limit: qv_arrow.limit(),
        up_limit: qv_up.limit(),
        up_limit_quarter: quarter,
        arrow_bias: qv_arrow.above(cap, n) + censor * qv_arrow.expected(cap),
        up_bias: qv_up.above(cap, n) + censor * qv_up.expected(cap),
    };
    if qv_arrow.modes.is_empty() || n == 0.0 {
        return Ok(report);
    }
    let sim = simulate(model, &[level_derivative(f, alpha)], &spatial_gradient(f, alpha), cap, cfg);
    report.arrow = McEstimate::from_samples(&sim.arrow, sim.censored);
    report.up = McEstimate::from_samples(&sim.up, sim.censored);
    Ok(report)
}

/// One report per start level; the distance to the limit is expected to shrink.
pub fn martingale_ladder(f: &HermiteSeries, alpha: f64, cfg: &PathConfig, levels: &[f64]) -> Result<Vec<MartingaleReport>> {
    levels.iter().map(|&n| martingale_moment_check(f, alpha, &cfg.with_start(n))).collect()
}

/// `E_N |N→_g(∞)|²` with `N→_{g,i} = ∫ ∂_a R^{α+λ_i}_a g_i (B, X) dB`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorReport {
    pub estimate: McEstimate,
    pub prediction: f64,
    pub limit: f64,
    pub bias: f64,
    pub cap: f64,
    /// Shifted resolvent parameter used for each coordinate.
    pub shifts: Vec<f64>,
}

impl VectorReport {
    pub fn agrees(&self) -> bool {
        (self.estimate.mean - self.prediction).abs() <= 3.0 * self.estimate.stderr + self.bias
    }
}

pub fn vector_moment_check(g: &[HermiteSeries], model: &GaussianModel, alpha: f64, cfg: &PathConfig) -> Result<VectorReport> {
    cfg.validate()?;
    if g.len() != model.dimension() {
        return Err(Error::Incompatible(format!("need {} components, got {}", model.dimension(), g.len())));
    }
    if g.iter().any(|gi| gi.model() != model) {
        return Err(Error::Incompatible("components belong to another model".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Domain("α must be a nonnegative real".into()));
    }
    let n = cfg.start_level.max(0.0);
    let shifts: Vec<f64> = model.rates().iter().map(|l| alpha + l).collect();
    let mut qv = Spectrum::default();
    for (gi, beta) in g.iter().zip(&shifts) {
        for (k, c) in gi.coeffs() {
            let s = (beta + eigenvalue(k, model)).sqrt();
            qv.push(2.0 * c * c * s * s, s);
        }
    }
    let cap = if qv.modes.is_empty() { 0.0 } else { choose_cap(|c| qv.above(c, n), CAP_TOLERANCE * qv.limit()) };
    let mut report = VectorReport {
        estimate: zero_estimate(cfg.paths),
        prediction: qv.expected(n),
        limit: qv.limit(),
        bias: qv.above(cap, n) + survival(n, cfg.horizon) * qv.expected(cap),
        cap,
        shifts: shifts.clone(),
    };
    if qv.modes.is_empty() || n == 0.0 {
        return Ok(report);
    }
    let fields: Vec<DecayField> = g.iter().zip(&shifts).map(|(gi, b)| level_derivative(gi, *b)).collect();
    let sim = simulate(model, &fields, &[], cap, cfg);
    report.estimate = McEstimate::from_samples(&sim.arrow, sim.censored);
    Ok(report)
}

/// `ρ_t(s) = t / (2√π) s^{-3/2} e^{-t²/(4s)}`.
pub fn subordination_density(t: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    t / (2.0 * std::f64::consts::PI.sqrt()) * s.powf(-1.5) * (-t * t / (4.0 * s)).exp()
}

/// `∫_0^∞ e^{-γs} ρ_t(s) ds`, integrated in `u = s^{-1/2}`.
pub fn subordination_laplace(t: f64, gamma: f64) -> Result<f64> {
    if !(t > 0.0 && gamma >= 0.0) {
        return Err(Error::Domain("need t > 0 and γ >= 0".into()));
    }
    let c = t / std::f64::consts::PI.sqrt();
    let g = move |u: f64| {
        if u <= 0.0 {
            return if gamma > 0.0 { 0.0 } else { c };
        }
        c * (-(t * u / 2.0).powi(2) - gamma / (u * u)).exp()
    };
    let peak = if gamma > 0.0 { (4.0 * gamma / (t * t)).powf(0.25) } else { 0.0 };
    let width = 2.0 / t;
    let mut breaks = vec![0.0];
    for k in [-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0] {
        let b = peak + k * width;
        if b > *breaks.last().unwrap() {
            breaks.push(b);
        }
    }
    let end = *breaks.last().unwrap();
    let spec = AdaptiveSpec { abs_tol: 1e-15, rel_tol: 1e-13, ..AdaptiveSpec::default() };
    let head = adaptive_pieces(&g, &breaks, &spec).require("subordination head")?;
    let tail = adaptive_tail(&g, end, width, &spec).require("subordination tail")?;
    Ok(head + tail)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCheck {
    pub t: f64,
    pub mass_residual: f64,
    /// `(γ, |∫ e^{-γs} ρ_t - e^{-t√γ}|)`.
    pub laplace_residuals: Vec<(f64, f64)>,
}

impl DensityCheck {
    pub fn max_residual(&self) -> f64 {
        self.laplace_residuals.iter().map(|r| r.1).fold(self.mass_residual, f64::max)
    }
}

pub const DENSITY_TOLERANCE: f64 = 1e-8;

pub fn validate_density(t: f64) -> Result<DensityCheck> {
    let mass_residual = (subordination_laplace(t, 0.0)? - 1.0).abs();
    let laplace_residuals = [0.25, 1.0, 4.0]
        .iter()
        .map(|&g| Ok((g, (subordination_laplace(t, g)? - (-t * g.sqrt()).exp()).abs())))
        .collect::<Result<Vec<_>>>()?;
    Ok(DensityCheck { t, mass_residual, laplace_residuals })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubordinationCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// `e^{-t√(α+μ)}` against `∫ e^{-αs} e^{-μs} ρ_t(s) ds`, after validating `ρ_t`.
pub fn subordination_check(mu: f64, alpha: f64, t: f64) -> Result<SubordinationCheck> {
    if !(mu >= 0.0 && alpha >= 0.0 && t > 0.0) {
        return Err(Error::Domain("need μ, α >= 0 and t > 0".into()));
    }
    let density = validate_density(t)?;
    if density.max_residual() > DENSITY_TOLERANCE {
        return Err(Error::NoConvergence(format!("ρ_t failed validation at t = {t}")));
    }
    let lhs = (-t * (alpha + mu).sqrt()).exp();
    let rhs = subordination_laplace(t, alpha + mu)?;
    Ok(SubordinationCheck { lhs, rhs, residual: (lhs - rhs).abs() })
}
