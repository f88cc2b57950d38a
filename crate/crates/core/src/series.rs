//! Truncated tensor-Hermite expansions.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::hermite::{indices_up_to, orthonormal_values, MultiIndex};
use crate::model::GaussianModel;
use crate::quadrature::{gauss_hermite, QuadratureGrid};

/// `Σ_α c_α ĥ_α` with `|α| <= cap`, in the orthonormal basis of the model's
/// Gaussian measure. Missing indices are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct HermiteSeries {
    model: GaussianModel,
    cap: usize,
    coeffs: BTreeMap<MultiIndex, f64>,
}

impl HermiteSeries {
    pub fn zero(model: &GaussianModel, cap: usize) -> Self {
        HermiteSeries { model: model.clone(), cap, coeffs: BTreeMap::new() }
    }

    pub fn constant(model: &GaussianModel, cap: usize, c: f64) -> Self {
        let mut s = Self::zero(model, cap);
        s.coeffs.insert(MultiIndex::zero(model.dimension()), c);
        s
    }

    /// `coeff · ĥ_idx`.
    pub fn basis(model: &GaussianModel, cap: usize, idx: MultiIndex, coeff: f64) -> Result<Self> {
        Self::from_coeffs(model, cap, [(idx, coeff)])
    }

    pub fn from_coeffs(
        model: &GaussianModel,
        cap: usize,
        coeffs: impl IntoIterator<Item = (MultiIndex, f64)>,
    ) -> Result<Self> {
        let mut s = Self::zero(model, cap);
        for (idx, c) in coeffs {
            if idx.dim() != model.dimension() {
                return Err(Error::Incompatible(format!(
                    "index {idx:?} has {} axes, model has {}",
                    idx.dim(),
                    model.dimension()
                )));
            }
            if idx.total() > cap {
                return Err(Error::Domain(format!("index {idx:?} exceeds degree cap {cap}")));
            }
            if !c.is_finite() {
                return Err(Error::Domain("coefficients must be finite".into()));
            }
            *s.coeffs.entry(idx).or_insert(0.0) += c;
        }
        Ok(s)
    }

    /// Gaussian coefficients damped by `1/(1+|α|)`, rescaled to unit L² norm.
    pub fn random<R: Rng + ?Sized>(model: &GaussianModel, cap: usize, rng: &mut R) -> Self {
        let mut s = Self::zero(model, cap);
        for idx in indices_up_to(model.dimension(), cap) {
            let z: f64 = StandardNormal.sample(rng);
            let c = z / (1.0 + idx.total() as f64);
            s.coeffs.insert(idx, c);
        }
        let n = s.l2_norm();
        if n > 0.0 {
            s = s.scaled(1.0 / n);
        }
        s
    }

    pub fn model(&self) -> &GaussianModel {
        &self.model
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn dim(&self) -> usize {
        self.model.dimension()
    }

    pub fn coeff(&self, idx: &MultiIndex) -> f64 {
        self.coeffs.get(idx).copied().unwrap_or(0.0)
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.coeffs.iter().map(|(k, v)| (k, *v))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Highest total degree with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        self.coeffs.iter().filter(|(_, c)| **c != 0.0).map(|(k, _)| k.total()).max().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.iter().all(|(k, c)| k.total() == 0 || *c == 0.0)
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &HermiteSeries) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self.coeffs.iter().map(|(k, c)| c * other.coeff(k)).sum())
    }

    /// Integral against the Gaussian measure.
    pub fn mean(&self) -> f64 {
        self.coeff(&MultiIndex::zero(self.dim()))
    }

    pub fn centered(&self) -> Self {
        let mut s = self.clone();
        s.coeffs.remove(&MultiIndex::zero(self.dim()));
        s
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map_coeffs(|_, v| c * v)
    }

    /// Applies `f(index, coeff)` to every stored coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&MultiIndex, f64) -> f64) -> Self {
        HermiteSeries {
            model: self.model.clone(),
            cap: self.cap,
            coeffs: self.coeffs.iter().map(|(k, v)| (k.clone(), f(k, *v))).collect(),
        }
    }

    pub fn add(&self, other: &HermiteSeries) -> Result<Self> {
        self.check_compatible(other)?;
        let mut s = self.clone();
        s.cap = self.cap.max(other.cap);
        for (k, v) in &other.coeffs {
            *s.coeffs.entry(k.clone()).or_insert(0.0) += v;
        }
        Ok(s)
    }

    pub fn sub(&self, other: &HermiteSeries) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    /// Largest coefficient difference, treating missing entries as zero.
    pub fn max_coeff_diff(&self, other: &HermiteSeries) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.coeffs.values().fold(0.0, |m, v| m.max(v.abs())))
    }

    pub(crate) fn check_compatible(&self, other: &HermiteSeries) -> Result<()> {
        if self.model != other.model {
            return Err(Error::Incompatible("series live on different models".into()));
        }
        Ok(())
    }

    /// Per-axis tables `ĥ_k(x_i / sqrt(q_i))`, `k <= cap`.
    fn axis_tables(&self, x: &[f64]) -> Vec<Vec<f64>> {
        x.iter()
            .zip(self.model.axes())
            .map(|(xi, a)| {
                let mut t = vec![0.0; self.cap + 1];
                orthonormal_values(xi / a.variance.sqrt(), &mut t);
                t
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.model.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64]) -> f64 {
        let tables = self.axis_tables(x);
        self.coeffs
            .iter()
            .map(|(k, c)| c * k.degrees().iter().zip(&tables).map(|(&n, t)| t[n]).product::<f64>())
            .sum()
    }

    /// Dense coefficient tensor with `cap + 1` entries per axis, axis 0 slowest.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.cap + 1;
        let d = self.dim();
        let mut out = vec![0.0; n.pow(d as u32)];
        for (k, c) in &self.coeffs {
            let pos = k.degrees().iter().fold(0, |acc, &a| acc * n + a);
            out[pos] = *c;
        }
        out
    }

    /// Values on the tensor grid `points[0] × … × points[d-1]`, axis 0 slowest.
    pub fn eval_tensor(&self, points: &[Vec<f64>]) -> Vec<f64> {
        assert_eq!(points.len(), self.dim());
        let n = self.cap + 1;
        let mats: Vec<Matrix> = points
            .iter()
            .zip(self.model.axes())
            .map(|(pts, a)| {
                let s = 1.0 / a.variance.sqrt();
                let mut data = vec![0.0; n * pts.len()];
                let mut t = vec![0.0; n];
                for (j, x) in pts.iter().enumerate() {
                    orthonormal_values(x * s, &mut t);
                    for k in 0..n {
                        data[k * pts.len() + j] = t[k];
                    }
                }
                Matrix { rows: n, cols: pts.len(), data }
            })
            .collect();
        contract(self.dense(), &mats)
    }

    /// Real sign changes of a one-dimensional series on `[-12σ, 12σ]`.
    pub fn sign_changes(&self) -> Vec<f64> {
        if self.dim() != 1 || self.is_constant() {
            return Vec::new();
        }
        let sigma = self.model.axis(0).variance.sqrt();
        let (lo, hi) = (-12.0 * sigma, 12.0 * sigma);
        let m = 4000;
        let xs: Vec<f64> = (0..=m).map(|i| lo + (hi - lo) * i as f64 / m as f64).collect();
        let vals = self.eval_tensor(std::slice::from_ref(&xs));
        let f = |x: f64| self.eval_unchecked(&[x]);
        let mut roots = Vec::new();
        for i in 0..m {
            let (fa, fb) = (vals[i], vals[i + 1]);
            if fa == 0.0 {
                roots.push(xs[i]);
            } else if fa * fb < 0.0 {
                roots.push(bisect(&f, xs[i], xs[i + 1], fa));
            }
        }
        roots
    }
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Row-major `rows × cols` matrix.
pub(crate) struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Applies `mats[i]` (shape `n_i × m_i`) along axis `i` of a row-major tensor
/// of shape `(n_0, …, n_{d-1})`, giving shape `(m_0, …, m_{d-1})`.
pub(crate) fn contract(mut t: Vec<f64>, mats: &[Matrix]) -> Vec<f64> {
    let mut shape: Vec<usize> = mats.iter().map(|m| m.rows).collect();
    assert_eq!(t.len(), shape.iter().product::<usize>());
    for (i, mat) in mats.iter().enumerate() {
        let pre: usize = shape[..i].iter().product();
        let post: usize = shape[i + 1..].iter().product();
        let (n, m) = (mat.rows, mat.cols);
        let mut out = vec![0.0; pre * m * post];
        for p in 0..pre {
            for k in 0..n {
                let src = &t[(p * n + k) * post..(p * n + k + 1) * post];
                if src.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let row = &mat.data[k * m..(k + 1) * m];
                for (j, &a) in row.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let dst = &mut out[(p * m + j) * post..(p * m + j + 1) * post];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += a * s;
                    }
                }
            }
        }
        t = out;
        shape[i] = m;
    }
    t
}

const MAX_PROJECTION_NODES: usize = 4_000_000;

/// Orthogonal projection of `f` onto `{ĥ_α : |α| <= cap}` by tensor
/// Gauss-Hermite quadrature with `grid.order` nodes per axis.
///
/// Exact for polynomials of degree `<= cap` as long as `grid.order > cap`.
pub fn project(
    f: &dyn Fn(&[f64]) -> f64,
    model: &GaussianModel,
    cap: usize,
    grid: &QuadratureGrid,
) -> Result<HermiteSeries> {
    if grid.order <= cap {
        return Err(Error::GridTooSmall { order: grid.order, cap });
    }
    let d = model.dimension();
    let m = grid.order;
    if (m as f64).powi(d as i32) > MAX_PROJECTION_NODES as f64 {
        return Err(Error::Config(format!("projection grid {m}^{d} is too large")));
    }
    let rule = gauss_hermite(m);
    let axis_points: Vec<Vec<f64>> =
        model.axes().iter().map(|a| rule.nodes.iter().map(|z| z * a.variance.sqrt()).collect()).collect();
    let total = m.pow(d as u32);
    let mut values = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    for _ in 0..total {
        for i in 0..d {
            x[i] = axis_points[i][idx[i]];
        }
        values.push(f(&x));
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < m {
                break;
            }
            idx[i] = 0;
        }
    }
    let n = cap + 1;
    let mats: Vec<Matrix> = (0..d)
        .map(|_| {
            let mut data = vec![0.0; m * n];
            let mut t = vec![0.0; n];
            for j in 0..m {
                orthonormal_values(rule.nodes[j], &mut t);
                for k in 0..n {
                    data[j * n + k] = rule.weights[j] * t[k];
                }
            }
            Matrix { rows: m, cols: n, data }
        })
        .collect();
    let dense = contract(values, &mats);
    let mut coeffs = Vec::new();
    for idx in indices_up_to(d, cap) {
        let pos = idx.degrees().iter().fold(0, |acc, &a| acc * n + a);
        coeffs.push((idx, dense[pos]));
    }
    HermiteSeries::from_coeffs(model, cap, coeffs)
}
