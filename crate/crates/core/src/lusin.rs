//! Maximal functions and the Lusin-type Lipschitz approximation.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mehler::{Mehler, PointwiseFunction, Slack};
use crate::model::GaussianModel;
use crate::orlicz::l1_norm;
use crate::quadrature::QuadratureGrid;
use crate::series::HermiteSeries;
use crate::spectral::sqrt_neg_generator;
use crate::stats::{fraction_stderr, stream_rng};
pub use crate::tgrid::TGrid;

/// `sup_t t^{-1} ∫_0^t T_s g(x) ds` over the grid.
pub fn hopf_max(g: &PointwiseFunction, mehler: &Mehler, x: &[f64], grid: &TGrid) -> Result<f64> {
    mehler.model().check_point(x)?;
    if !g.is_nonneg() {
        return Err(Error::Domain("maximal functions need a nonnegative function".into()));
    }
    Ok(mehler.profile(g, x, grid).max_hopf())
}

/// Standard-normal sample points for the model, one stream per run.
pub fn sample_points(model: &GaussianModel, n: usize, seed: u64, stream: u64) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, stream);
    let sd: Vec<f64> = model.variances().iter().map(|q| q.sqrt()).collect();
    (0..n).map(|_| sd.iter().map(|s| s * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)).collect::<Vec<f64>>()).collect()
}

/// One level of the weak-(1,1) comparison `m(sup ≥ λ) <= ‖g‖_1 / λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weak11Row {
    pub lambda: f64,
    /// Fraction of samples with grid maximum `>= λ` on the doubled grid.
    pub lhs: f64,
    /// Same fraction on the base grid.
    pub lhs_base: f64,
    pub stderr: f64,
    pub rhs: f64,
    pub samples: usize,
}

impl Weak11Row {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs + 3.0 * self.stderr
    }

    /// The base and doubled grids agree within three standard errors.
    pub fn stable(&self) -> bool {
        let se = self.stderr.max(fraction_stderr(self.lhs_base, self.samples));
        (self.lhs - self.lhs_base).abs() <= 3.0 * se
    }
}

/// Weak-(1,1) inequality for the Hopf maximal function at several levels.
///
/// Maxima are taken on `grid.refined()`; the even-indexed points reproduce
/// `grid` itself, so one pass gives both densities.
pub fn weak11_check(
    g: &PointwiseFunction,
    mehler: &Mehler,
    lambdas: &[f64],
    samples: usize,
    seed: u64,
    grid: &TGrid,
    norm_grid: &QuadratureGrid,
) -> Result<Vec<Weak11Row>> {
    if !g.is_nonneg() {
        return Err(Error::Domain("maximal functions need a nonnegative function".into()));
    }
    if lambdas.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Domain("levels must be positive".into()));
    }
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let model = mehler.model();
    let l1 = l1_norm(g, model, norm_grid)?.value;
    let fine = grid.refined();
    let mut maxima = Vec::with_capacity(samples);
    for x in sample_points(model, samples, seed, 0) {
        let p = mehler.profile(g, &x, &fine);
        maxima.push((p.max_hopf(), p.max_hopf_coarse()));
    }
    let n = samples as f64;
    Ok(lambdas
        .iter()
        .map(|&lambda| {
            let lhs = maxima.iter().filter(|m| m.0 >= lambda).count() as f64 / n;
            let lhs_base = maxima.iter().filter(|m| m.1 >= lambda).count() as f64 / n;
            Weak11Row { lambda, lhs, lhs_base, stderr: fraction_stderr(lhs, samples), rhs: l1 / lambda, samples }
        })
        .collect())
}

/// `M(x) = sup_t A_t|√(-L) f|(x) + sup_t A_t|∇f|(x)` over the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalValue {
    pub sqrt_term: f64,
    pub grad_term: f64,
}

impl MaximalValue {
    pub fn total(&self) -> f64 {
        self.sqrt_term + self.grad_term
    }
}

/// Reusable evaluator of `M` for one series.
pub struct BigM<'a> {
    mehler: &'a Mehler,
    grid: TGrid,
    sqrt_mod: PointwiseFunction,
    grad_norm: PointwiseFunction,
}

impl<'a> BigM<'a> {
    pub fn new(f: &HermiteSeries, mehler: &'a Mehler, grid: &TGrid) -> Result<Self> {
        if mehler.model() != f.model() {
            return Err(Error::Incompatible("Mehler engine built for another model".into()));
        }
        Ok(BigM {
            mehler,
            grid: *grid,
            sqrt_mod: PointwiseFunction::modulus(&sqrt_neg_generator(f)),
            grad_norm: PointwiseFunction::gradient_norm(f),
        })
    }

    pub fn eval(&self, x: &[f64]) -> Result<MaximalValue> {
        self.mehler.model().check_point(x)?;
        Ok(MaximalValue {
            sqrt_term: self.mehler.profile(&self.sqrt_mod, x, &self.grid).max_smoothing(),
            grad_term: self.mehler.profile(&self.grad_norm, x, &self.grid).max_smoothing(),
        })
    }
}

pub fn big_m(f: &HermiteSeries, mehler: &Mehler, x: &[f64], grid: &TGrid) -> Result<MaximalValue> {
    BigM::new(f, mehler, grid)?.eval(x)
}

/// Constant in `|f(x1) - f(x0)| <= C |h| (M(x0) + M(x1))`: the larger of the
/// two terms that appear at `t = |h|²`, the first one inflated for the grid.
pub fn lusin_constant(c_q: f64) -> f64 {
    (crate::kernels::GRID_SUP_FACTOR * c_q).max(0.25f64.exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub status: Status,
    pub slack: Slack,
}

fn require_standard(model: &GaussianModel) -> Result<()> {
    if !model.is_standard() {
        return Err(Error::Incompatible("the Lusin estimates are implemented for the standard model".into()));
    }
    Ok(())
}

/// `|f(x1) - f(x0)| <= C |h| (M(x0) + M(x1))`; inconclusive when `|h|²` is off the grid.
pub fn lusin_pair_check(f: &HermiteSeries, m: &BigM, x0: &[f64], x1: &[f64], c_num: f64) -> Result<PairOutcome> {
    require_standard(f.model())?;
    let h = f.model().cameron_martin_distance(x0, x1);
    if h == 0.0 {
        return Err(Error::Domain("pair points must differ".into()));
    }
    let lhs = (f.eval(x1)? - f.eval(x0)?).abs();
    if !m.grid.contains(h * h) {
        return Ok(PairOutcome { status: Status::Inconclusive, slack: Slack { lhs, rhs: f64::NAN } });
    }
    let rhs = c_num * h * (m.eval(x0)?.total() + m.eval(x1)?.total());
    let slack = Slack { lhs, rhs };
    Ok(PairOutcome { status: if slack.slack() >= 0.0 { Status::Pass } else { Status::Fail }, slack })
}

/// Anchor points carrying values of `f`, pairwise `λ`-Lipschitz in `|·|_H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorSet {
    model: GaussianModel,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    lambda: f64,
    /// Anchors dropped by the pairwise certificate.
    pub removed: usize,
}

impl AnchorSet {
    /// Keeps a maximal subset (greedily) whose pairs satisfy the Lipschitz bound.
    pub fn certified(model: &GaussianModel, points: Vec<Vec<f64>>, values: Vec<f64>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Domain("Lipschitz budget must be positive".into()));
        }
        let n = points.len();
        let mut bad: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                let d = model.cameron_martin_distance(&points[i], &points[j]);
                if (values[i] - values[j]).abs() > lambda * d {
                    bad[i].push(j);
                    bad[j].push(i);
                }
            }
        }
        let mut count: Vec<usize> = bad.iter().map(|b| b.len()).collect();
        let mut alive = vec![true; n];
        let mut removed = 0;
        loop {
            let worst = (0..n).filter(|&i| alive[i] && count[i] > 0).max_by_key(|&i| (count[i], std::cmp::Reverse(i)));
            let Some(w) = worst else { break };
            alive[w] = false;
            removed += 1;
            for &j in &bad[w] {
                if alive[j] {
                    count[j] -= 1;
                }
            }
        }
        let (points, values): (Vec<_>, Vec<_>) =
            points.into_iter().zip(values).zip(&alive).filter(|(_, a)| **a).map(|(pv, _)| pv).unzip();
        Ok(AnchorSet { model: model.clone(), points, values, lambda, removed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `g(x) = min_y (f(y) + λ |x - y|_H)` over the anchors.
pub fn mcshane_extend(anchors: &AnchorSet, x: &[f64]) -> Result<f64> {
    if anchors.is_empty() {
        return Err(Error::Empty("no anchors to extend from".into()));
    }
    anchors.model.check_point(x)?;
    Ok(anchors
        .points
        .iter()
        .zip(&anchors.values)
        .map(|(y, v)| v + anchors.lambda * anchors.model.cameron_martin_distance(x, y))
        .fold(f64::INFINITY, f64::min))
}

/// Sample points of `m` with `f` and `M` evaluated there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalSample {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub maximal: Vec<f64>,
}

pub fn sample_maximal(f: &HermiteSeries, mehler: &Mehler, samples: usize, seed: u64, grid: &TGrid) -> Result<MaximalSample> {
    let m = BigM::new(f, mehler, grid)?;
    let points = sample_points(f.model(), samples, seed, 0);
    let mut values = Vec::with_capacity(samples);
    let mut maximal = Vec::with_capacity(samples);
    for x in &points {
        values.push(f.eval(x)?);
        maximal.push(m.eval(x)?.total());
    }
    Ok(MaximalSample { points, values, maximal })
}

/// Sampled good set `{C M <= λ}` with its certificate applied.
pub fn good_set(sample: &MaximalSample, model: &GaussianModel, lambda: f64, c_num: f64) -> Result<AnchorSet> {
    if !(lambda > 0.0) {
        return Err(Error::Domain("λ must be positive".into()));
    }
    let keep: Vec<usize> = (0..sample.points.len()).filter(|&i| c_num * sample.maximal[i] <= lambda).collect();
    if keep.is_empty() {
        return Err(Error::Empty(format!("no sample satisfies C·M <= {lambda}")));
    }
    AnchorSet::certified(
        model,
        keep.iter().map(|&i| sample.points[i].clone()).collect(),
        keep.iter().map(|&i| sample.values[i]).collect(),
        lambda,
    )
}

/// Weak-(1,1) factor in the Lipschitz budget: `A_s <= 2 H_{2s}` and a
/// two-term split each cost a factor 2 on top of `C`.
pub const BUDGET_FACTOR: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LusinOutcome {
    pub epsilon: f64,
    pub lambda_used: f64,
    /// Fraction of samples outside the certified anchor set.
    pub complement_mass: f64,
    pub stderr: f64,
    pub anchors: AnchorSet,
}

impl LusinOutcome {
    pub fn within_budget(&self) -> bool {
        self.complement_mass <= self.epsilon + 3.0 * self.stderr
    }
}

/// `λ = 4 C (‖√(-L) f‖_1 + ‖∇f‖_1) / ε`.
pub fn lusin_lambda(f: &HermiteSeries, epsilon: f64, c_num: f64, grid: &QuadratureGrid) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let model = f.model();
    let a = l1_norm(&PointwiseFunction::series(&sqrt_neg_generator(f)), model, grid)?.value;
    let b = l1_norm(&PointwiseFunction::gradient_norm(f), model, grid)?.value;
    if a + b == 0.0 {
        return Err(Error::Domain("f is constant; nothing to approximate".into()));
    }
    Ok(BUDGET_FACTOR * c_num * (a + b) / epsilon)
}

/// Lusin approximation from a precomputed maximal sample.
pub fn lusin_from_sample(
    f: &HermiteSeries,
    sample: &MaximalSample,
    epsilon: f64,
    c_num: f64,
    grid: &QuadratureGrid,
) -> Result<LusinOutcome> {
    require_standard(f.model())?;
    let lambda_used = lusin_lambda(f, epsilon, c_num, grid)?;
    let anchors = good_set(sample, f.model(), lambda_used, c_num)?;
    let n = sample.points.len();
    let complement_mass = (n - anchors.len()) as f64 / n as f64;
    Ok(LusinOutcome { epsilon, lambda_used, complement_mass, stderr: fraction_stderr(complement_mass, n), anchors })
}

#[allow(clippy::too_many_arguments)]
pub fn lusin_approx(
    f: &HermiteSeries,
    mehler: &Mehler,
    epsilon: f64,
    samples: usize,
    seed: u64,
    tgrid: &TGrid,
    c_num: f64,
    grid: &QuadratureGrid,
) -> Result<LusinOutcome> {
    require_standard(f.model())?;
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("ε must lie in (0, 1), got {epsilon}")));
    }
    let sample = sample_maximal(f, mehler, samples, seed, tgrid)?;
    lusin_from_sample(f, &sample, epsilon, c_num, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::MultiIndex;
    use crate::mehler::MehlerMethod;
    use rand::Rng;

    fn std1() -> GaussianModel {
        GaussianModel::standard(1)
    }

    fn engine(m: &GaussianModel) -> Mehler {
        Mehler::new(m, &QuadratureGrid::with_order(24), MehlerMethod::Quadrature).unwrap()
    }

    fn grid() -> TGrid {
        TGrid::log_spaced(1e-3, 1e3, 16).unwrap()
    }

    #[test]
    fn hopf_examples() {
        let m = std1();
        let e = engine(&m);
        let c = PointwiseFunction::nonneg_closure("2", |_| 2.0);
        assert!((hopf_max(&c, &e, &[0.4], &grid()).unwrap() - 2.0).abs() < 1e-10);
        // T_s(x²)(0) = 1 - e^{-2s}; the Cesàro average increases toward 1.
        let sq = PointwiseFunction::nonneg_closure("x^2", |x| x[0] * x[0]);
        let h = hopf_max(&sq, &e, &[0.0], &grid()).unwrap();
        let tl = grid().point(grid().len() - 1);
        let want = 1.0 - (1.0 - (-2.0 * tl).exp()) / (2.0 * tl);
        assert!((h - want).abs() < 1e-9);
        let coarse = hopf_max(&sq, &e, &[1.7], &grid()).unwrap();
        let fine = hopf_max(&sq, &e, &[1.7], &grid().refined()).unwrap();
        assert!(fine >= coarse - 1e-12);
    }

    #[test]
    fn weak11_examples() {
        let m = std1();
        let e = engine(&m);
        let sq = PointwiseFunction::nonneg_closure("x^2", |x| x[0] * x[0]);
        let rows = weak11_check(&sq, &e, &[0.5, 4.0], 2000, 3, &grid(), &QuadratureGrid::default()).unwrap();
        assert!(rows.iter().all(|r| r.holds()));
        assert!((rows[1].rhs - 0.25).abs() < 1e-12);
        let one = PointwiseFunction::nonneg_closure("1", |_| 1.0);
        let r = weak11_check(&one, &e, &[2.0], 100, 3, &grid(), &QuadratureGrid::default()).unwrap();
        assert_eq!(r[0].lhs, 0.0);
    }

    #[test]
    fn big_m_examples() {
        let m = std1();
        let e = engine(&m);
        let c = HermiteSeries::constant(&m, 2, 3.0);
        assert_eq!(big_m(&c, &e, &[0.5], &grid()).unwrap().total(), 0.0);
        let h1 = HermiteSeries::basis(&m, 1, MultiIndex::new(vec![1]), 1.0).unwrap();
        let v = big_m(&h1, &e, &[0.5], &grid()).unwrap();
        assert!((v.grad_term - 1.0).abs() < 1e-12);
        // small-t recovery: A_t|∇f|(x) ≈ |∇f(x)|
        let f = HermiteSeries::random(&m, 5, &mut stream_rng(4, 0));
        let fine = TGrid::log_spaced(1e-4, 1e-3, 16).unwrap();
        let gn = PointwiseFunction::gradient_norm(&f);
        let p = e.profile(&gn, &[0.3], &fine);
        assert!((p.smoothing(0) - gn.eval(&[0.3])).abs() < 1e-3);
    }

    #[test]
    fn pair_examples() {
        let m = std1();
        let e = engine(&m);
        let h1 = HermiteSeries::basis(&m, 1, MultiIndex::new(vec![1]), 1.0).unwrap();
        let bm = BigM::new(&h1, &e, &grid()).unwrap();
        let c_num = lusin_constant(4.6);
        let out = lusin_pair_check(&h1, &bm, &[0.0], &[1.0], c_num).unwrap();
        assert_eq!(out.status, Status::Pass);
        assert!(out.slack.rhs > 2.0 * 0.25f64.exp());
        let far = lusin_pair_check(&h1, &bm, &[0.0], &[1e-3], c_num).unwrap();
        assert_eq!(far.status, Status::Inconclusive);
    }

    #[test]
    fn mcshane_examples() {
        let m = std1();
        let a = AnchorSet::certified(&m, vec![vec![0.0], vec![1.0]], vec![0.0, 0.0], 1.0).unwrap();
        assert_eq!(mcshane_extend(&a, &[0.5]).unwrap(), 0.5);
        assert_eq!(mcshane_extend(&a, &[1.0]).unwrap(), 0.0);
        let pts: Vec<Vec<f64>> = sample_points(&GaussianModel::standard(2), 200, 1, 0);
        let vals: Vec<f64> = pts.iter().map(|p| (3.0 * p[0]).sin() + p[1] * p[1]).collect();
        let a = AnchorSet::certified(&GaussianModel::standard(2), pts.clone(), vals, 2.0).unwrap();
        assert!(a.removed > 0 && !a.is_empty());
        for (y, v) in a.points().iter().zip(a.values()) {
            assert!((mcshane_extend(&a, y).unwrap() - v).abs() < 1e-12);
        }
        let mut rng = stream_rng(2, 0);
        for _ in 0..500 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
            let d = a.model.cameron_martin_distance(&x, &y);
            assert!((mcshane_extend(&a, &x).unwrap() - mcshane_extend(&a, &y).unwrap()).abs() <= 2.0 * d + 1e-12);
        }
        assert!(mcshane_extend(&AnchorSet::certified(&m, vec![], vec![], 1.0).unwrap(), &[0.0]).is_err());
    }

    #[test]
    fn lusin_small_run() {
        let m = std1();
        let e = engine(&m);
        let h1 = HermiteSeries::basis(&m, 1, MultiIndex::new(vec![1]), 1.0).unwrap();
        let q = QuadratureGrid::default();
        let out = lusin_approx(&h1, &e, 0.999, 200, 7, &grid(), lusin_constant(4.6), &q).unwrap();
        assert!(out.within_budget());
        let l1 = lusin_lambda(&h1, 0.2, 5.0, &q).unwrap();
        let l2 = lusin_lambda(&h1, 0.1, 5.0, &q).unwrap();
        assert!((l2 - 2.0 * l1).abs() < 1e-9 * l2);
        assert!(lusin_lambda(&h1, 1.5, 5.0, &q).is_err());
    }
}
