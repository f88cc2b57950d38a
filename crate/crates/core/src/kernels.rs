//! The kernels `K`, `U = t^{-1} ∫_t^{2t} K(·, r) dr` and `Q = s ∂_s U`, and
//! the eigenfunction identities built on them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mehler::{Mehler, PointwiseFunction, Slack};
use crate::quadrature::{adaptive, adaptive_sqrt_left, adaptive_tail, combine, AdaptiveSpec, Quad};
use crate::series::HermiteSeries;
use crate::spectral::{eigenvalue, hopf_factor, smoothing_factor};
use crate::tgrid::TGrid;

fn inv_sqrt_pi() -> f64 {
    1.0 / PI.sqrt()
}

/// Tolerances and tail handling for kernel integrals.
///
/// Integrals over `(0, ∞)` are split at the singular points, which lie at
/// `{0, t, 2t}`; the part beyond `tail_cutoff · t` is mapped onto `(0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelConfig {
    pub tolerances: AdaptiveSpec,
    pub tail_cutoff: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        KernelConfig { tolerances: AdaptiveSpec { abs_tol: 1e-13, rel_tol: 1e-12, max_intervals: 4000 }, tail_cutoff: 10.0 }
    }
}

impl KernelConfig {
    pub fn refined(&self) -> Self {
        KernelConfig { tolerances: self.tolerances.refined(), tail_cutoff: 2.0 * self.tail_cutoff }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerances.abs_tol > 0.0 && self.tolerances.rel_tol > 0.0) {
            return Err(Error::Config("kernel tolerances must be positive".into()));
        }
        if !(self.tail_cutoff >= 10.0) {
            return Err(Error::Config(format!("tail cutoff must be at least 10, got {}", self.tail_cutoff)));
        }
        Ok(())
    }
}

/// `K(s, r) = π^{-1/2} (1{s > r} (s - r)^{-1/2} - s^{-1/2})`.
pub fn kernel_k(s: f64, r: f64) -> Result<f64> {
    if !(s > 0.0) || !(r >= 0.0) {
        return Err(Error::Domain(format!("K needs s > 0 and r >= 0, got ({s}, {r})")));
    }
    let jump = if s > r { (s - r).powf(-0.5) } else { 0.0 };
    Ok(inv_sqrt_pi() * (jump - s.powf(-0.5)))
}

// Binomial series coefficients C(2n, n) / 4^n.
fn central_binomial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * (2 * k - 1) as f64 / (2 * k) as f64)
}

const SERIES_FROM: f64 = 64.0;
const SERIES_TERMS: usize = 14;

/// Closed form of `U(s, 1)` on piece `0: (0,1]`, `1: [1,2]`, `2: [2,∞)`.
fn u_piece(piece: usize, s: f64) -> f64 {
    let c = inv_sqrt_pi();
    match piece {
        0 => -c / s.sqrt(),
        1 => c * (2.0 * (s - 1.0).sqrt() - 1.0 / s.sqrt()),
        _ => c * (2.0 * ((s - 1.0).sqrt() - (s - 2.0).sqrt()) - 1.0 / s.sqrt()),
    }
}

/// `U(s, 1)`, continuous on `(0, ∞)`.
fn u_unit(s: f64) -> f64 {
    let c = inv_sqrt_pi();
    if s <= 1.0 {
        u_piece(0, s)
    } else if s <= 2.0 {
        u_piece(1, s)
    } else if s < SERIES_FROM {
        u_piece(2, s)
    } else {
        // 2 s^{1/2} Σ b_n (1 - 2^n) x^n - s^{-1/2}, x = 1/s, b_n the sqrt(1 - y) coefficients.
        let x = 1.0 / s;
        let mut sum = 0.0;
        let mut xp = 1.0;
        for n in 2..SERIES_TERMS {
            xp *= x;
            let b = -central_binomial(n) / (2 * n - 1) as f64;
            sum += 2.0 * b * (1.0 - 2f64.powi(n as i32)) * xp;
        }
        c * sum / s.sqrt()
    }
}

/// `Q(s, 1)`; undefined at `s ∈ {1, 2}`.
fn q_unit(s: f64) -> f64 {
    let c = inv_sqrt_pi();
    if s < 1.0 {
        0.5 * c / s.sqrt()
    } else if s < 2.0 {
        c * s * (1.0 / (s - 1.0).sqrt() + 0.5 * s.powf(-1.5))
    } else if s < SERIES_FROM {
        c * s * (1.0 / (s - 1.0).sqrt() - 1.0 / (s - 2.0).sqrt() + 0.5 * s.powf(-1.5))
    } else {
        let x = 1.0 / s;
        let mut sum = 0.0;
        let mut xp = x;
        for n in 2..SERIES_TERMS {
            xp *= x;
            sum += central_binomial(n) * (1.0 - 2f64.powi(n as i32)) * xp;
        }
        c * s.sqrt() * sum
    }
}

fn check_positive(s: f64, t: f64, what: &str) -> Result<()> {
    if !(s > 0.0 && t > 0.0 && s.is_finite() && t.is_finite()) {
        return Err(Error::Domain(format!("{what} needs positive finite arguments, got ({s}, {t})")));
    }
    Ok(())
}

/// `U(s, t) = t^{-1/2} U(s/t, 1)`.
pub fn kernel_u(s: f64, t: f64) -> Result<f64> {
    check_positive(s, t, "U")?;
    Ok(u_unit(s / t) / t.sqrt())
}

/// `Q(s, t) = t^{-1/2} Q(s/t, 1)`; `s = t` and `s = 2t` are rejected.
pub fn kernel_q(s: f64, t: f64) -> Result<f64> {
    check_positive(s, t, "Q")?;
    let r = s / t;
    if r == 1.0 || r == 2.0 {
        return Err(Error::Domain(format!("Q is singular at s = {s} for t = {t}")));
    }
    Ok(q_unit(r) / t.sqrt())
}

/// The two algebraically equivalent expressions of `U(s, 1)` for `s > 2`:
/// with the difference of square roots, and with its conjugate form.
pub fn u_tail_forms(s: f64) -> Result<(f64, f64)> {
    if !(s > 2.0) {
        return Err(Error::Domain(format!("tail forms need s > 2, got {s}")));
    }
    let c = inv_sqrt_pi();
    let a = c * (2.0 * ((s - 1.0).sqrt() - (s - 2.0).sqrt()) - 1.0 / s.sqrt());
    let b = c * (2.0 / ((s - 1.0).sqrt() + (s - 2.0).sqrt()) - 1.0 / s.sqrt());
    Ok((a, b))
}

/// `∫_0^∞ w(s) ds` for `w` with inverse square-root singularities at the
/// left ends of the pieces `(0, t)`, `(t, 2t)`, `(2t, 3t)`.
fn integrate_split(w: &dyn Fn(f64) -> f64, t: f64, cfg: &KernelConfig) -> Quad {
    let spec = &cfg.tolerances;
    let mut q = adaptive_sqrt_left(w, 0.0, t, spec);
    q = combine(q, adaptive_sqrt_left(w, t, 2.0 * t, spec));
    q = combine(q, adaptive_sqrt_left(w, 2.0 * t, 3.0 * t, spec));
    let cut = cfg.tail_cutoff * t;
    q = combine(q, adaptive(w, 3.0 * t, cut, spec));
    combine(q, adaptive_tail(w, cut, cut, spec))
}

/// `∫|Q(s, 1)| ds` with its pieces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QIntegral {
    pub total: f64,
    /// Contributions of `(0,1)`, `(1,2)`, `(2,∞)`.
    pub pieces: [f64; 3],
    pub error: f64,
}

pub fn q_total_integral(cfg: &KernelConfig) -> Result<QIntegral> {
    q_abs_integral(1.0, cfg)
}

/// `∫_0^∞ |Q(s, t)| ds`, integrated directly in `s` (no rescaling).
pub fn q_abs_integral(t: f64, cfg: &KernelConfig) -> Result<QIntegral> {
    cfg.validate()?;
    check_positive(t, t, "Q integral")?;
    let w = |s: f64| if s == t || s == 2.0 * t { 0.0 } else { (q_unit(s / t) / t.sqrt()).abs() };
    let spec = &cfg.tolerances;
    let p0 = adaptive_sqrt_left(&w, 0.0, t, spec);
    let p1 = adaptive_sqrt_left(&w, t, 2.0 * t, spec);
    let cut = cfg.tail_cutoff * t;
    let p2 = combine(
        combine(adaptive_sqrt_left(&w, 2.0 * t, 3.0 * t, spec), adaptive(&w, 3.0 * t, cut, spec)),
        adaptive_tail(&w, cut, cut, spec),
    );
    let pieces = [p0.require("Q on (0,t)")?, p1.require("Q on (t,2t)")?, p2.require("Q on (2t,∞)")?];
    Ok(QIntegral { total: pieces.iter().sum(), pieces, error: p0.error + p1.error + p2.error })
}

/// Both sides of a scalar identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

impl IdentityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        IdentityCheck { lhs, rhs, residual: (lhs - rhs).abs() }
    }
}

/// `e^{-μr} - 1 = √μ ∫_0^∞ K(s, r) e^{-μs} ds`.
pub fn repr_identity_check(mu: f64, r: f64, cfg: &KernelConfig) -> Result<IdentityCheck> {
    cfg.validate()?;
    check_positive(mu, r, "representation identity")?;
    let w = |s: f64| if s == r { 0.0 } else { kernel_k(s, r).unwrap_or(0.0) * (-mu * s).exp() };
    let spec = &cfg.tolerances;
    let mut q = adaptive_sqrt_left(&w, 0.0, r, spec);
    q = combine(q, adaptive_sqrt_left(&w, r, 2.0 * r, spec));
    let cut = cfg.tail_cutoff * r.max(1.0 / mu);
    if cut > 2.0 * r {
        q = combine(q, adaptive(&w, 2.0 * r, cut, spec));
    }
    q = combine(q, adaptive_tail(&w, cut.max(2.0 * r), cut.max(2.0 * r), spec));
    let integral = q.require("representation integral")?;
    Ok(IdentityCheck::new((-mu * r).exp_m1(), mu.sqrt() * integral))
}

/// Which average of the semigroup sits inside the integration-by-parts integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// `A_s`, the `[s, 2s]` average.
    Smoothing,
    /// `s^{-1} ∫_0^s T_u du`, the primitive-compatible average.
    Cesaro,
}

/// `m_{A_t}(μ) - 1 = -√μ ∫_0^∞ Q(s, t) m(s) ds` with `m` the chosen average
/// of `e^{-μ·}` at time `s`.
///
/// Integrating by parts against `d/ds (s m(s)) = e^{-μs}` gives the identity
/// for the Cesàro average; with the smoothing average the two sides differ.
pub fn smoothing_identity_check(mu: f64, t: f64, averaging: Averaging, cfg: &KernelConfig) -> Result<IdentityCheck> {
    cfg.validate()?;
    check_positive(mu, t, "integration-by-parts identity")?;
    let m = |s: f64| match averaging {
        Averaging::Smoothing => smoothing_factor(mu * s),
        Averaging::Cesaro => hopf_factor(mu * s),
    };
    let w = |s: f64| {
        let r = s / t;
        if r == 1.0 || r == 2.0 {
            0.0
        } else {
            q_unit(r) / t.sqrt() * m(s)
        }
    };
    let integral = integrate_split(&w, t, cfg).require("integration-by-parts integral")?;
    Ok(IdentityCheck::new(smoothing_factor(mu * t) - 1.0, -mu.sqrt() * integral))
}

/// Slack safety factor for the discretized supremum.
pub const GRID_SUP_FACTOR: f64 = 1.05;

/// `|A_t f(x) - f(x)| <= C √t sup_s A_s|√(-L) f|(x)` for every `t` in the grid,
/// with `C = 1.05 ∫|Q(s,1)| ds` and the supremum taken over the same grid.
pub fn pointwise_bound_check(
    f: &HermiteSeries,
    mehler: &Mehler,
    x: &[f64],
    grid: &TGrid,
    c_q: f64,
) -> Result<Vec<Slack>> {
    f.model().check_point(x)?;
    if mehler.model() != f.model() {
        return Err(Error::Incompatible("Mehler engine built for another model".into()));
    }
    let g = PointwiseFunction::sqrt_generator_modulus(f);
    let sup = mehler.profile(&g, x, grid).max_smoothing();
    let terms: Vec<(f64, f64)> = f
        .coeffs()
        .map(|(k, c)| {
            let one = HermiteSeries::basis(f.model(), f.cap(), k.clone(), 1.0).expect("index from series");
            (eigenvalue(k, f.model()), c * one.eval_unchecked(x))
        })
        .collect();
    Ok(grid
        .points()
        .into_iter()
        .map(|t| {
            let diff: f64 = terms.iter().map(|(mu, v)| (smoothing_factor(mu * t) - 1.0) * v).sum();
            Slack { lhs: diff.abs(), rhs: GRID_SUP_FACTOR * c_q * t.sqrt() * sup }
        })
        .collect())
}

/// `(s, U(s,1), Q(s,1))` on `s = 0.5 · 2^{j/8}`, `j = -40..=60`; `Q` is NaN at
/// the singular points.
pub fn kernel_table() -> Vec<(f64, f64, f64)> {
    (-40..=60)
        .map(|j| {
            let s = 0.5 * (j as f64 / 8.0).exp2();
            (s, u_unit(s), kernel_q(s, 1.0).unwrap_or(f64::NAN))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_examples() {
        assert!((kernel_k(0.25, 1.0).unwrap() + 2.0 / PI.sqrt()).abs() < 1e-15);
        assert!((kernel_k(2.0, 1.0).unwrap() - (1.0 - 0.5f64.sqrt()) / PI.sqrt()).abs() < 1e-15);
        assert!((kernel_k(4.0 * 0.7, 4.0 * 0.3).unwrap() - kernel_k(0.7, 0.3).unwrap() / 2.0).abs() < 1e-15);
        assert!(kernel_k(0.0, 1.0).is_err());
        assert!((kernel_u(0.5, 1.0).unwrap() + 2f64.sqrt() / PI.sqrt()).abs() < 1e-15);
        assert!((kernel_u(1.5, 1.0).unwrap() - (2.0 * 0.5f64.sqrt() - 1.0 / 1.5f64.sqrt()) / PI.sqrt()).abs() < 1e-15);
        assert!((kernel_u(1.0, 2.0).unwrap() - kernel_u(0.5, 1.0).unwrap() / 2f64.sqrt()).abs() < 1e-15);
        assert!((kernel_q(0.25, 1.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((kernel_q(2.0 * 3.3, 2.0 * 1.1).unwrap() - kernel_q(3.3, 1.1).unwrap() / 2f64.sqrt()).abs() < 1e-15);
        assert!(kernel_q(2.0, 1.0).is_err() && kernel_q(1.0, 1.0).is_err());
        assert!(kernel_u(-1.0, 1.0).is_err());
    }

    #[test]
    fn u_is_the_r_average_of_k() {
        for s in [0.3, 1.4, 2.5, 7.0] {
            let avg = crate::quadrature::adaptive_sqrt_right(&|r: f64| if r >= s { 0.0 } else { kernel_k(s, r).unwrap() }, 1.0f64.min(s), s.min(2.0), &AdaptiveSpec::default()).value;
            let rest = if s < 2.0 { -(2.0 - s.max(1.0)) / (PI * s).sqrt() } else { 0.0 };
            let below = if s < 1.0 { -1.0 / (PI * s).sqrt() } else { 0.0 };
            let want = if s < 1.0 { below } else { avg + rest };
            assert!((kernel_u(s, 1.0).unwrap() - want).abs() < 1e-10, "s={s}");
        }
    }

    #[test]
    fn q_is_s_times_derivative_of_u() {
        for s in [0.4, 1.3, 1.9, 2.4, 10.0, 80.0, 500.0] {
            let h = 1e-6 * s;
            let fd = (u_unit(s + h) - u_unit(s - h)) / (2.0 * h);
            assert!((q_unit(s) - s * fd).abs() < 1e-6 * q_unit(s).abs().max(1e-3), "s={s}");
        }
    }

    #[test]
    fn series_branches_are_continuous() {
        let below = SERIES_FROM * (1.0 - 1e-12);
        for (f, name) in [(u_unit as fn(f64) -> f64, "U"), (q_unit, "Q")] {
            let (a, b) = (f(below), f(SERIES_FROM));
            assert!((a - b).abs() < 1e-10 * a.abs(), "{name}: {a} {b}");
        }
    }

    #[test]
    fn continuity_and_homogeneity() {
        // one-sided limits at the piece boundaries
        assert!((u_piece(0, 1.0) - u_piece(1, 1.0)).abs() < 1e-8);
        assert!((u_piece(1, 2.0) - u_piece(2, 2.0)).abs() < 1e-8);
        for a in [0.5f64, 2.0, 10.0] {
            for (s, t) in [(0.3, 1.0), (1.7, 1.0), (5.0, 1.2)] {
                assert!((a.sqrt() * kernel_u(a * s, a * t).unwrap() - kernel_u(s, t).unwrap()).abs() < 1e-12);
                assert!((a.sqrt() * kernel_q(a * s, a * t).unwrap() - kernel_q(s, t).unwrap()).abs() < 1e-12);
                assert!((a.sqrt() * kernel_k(a * s, a * t).unwrap() - kernel_k(s, t).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tail_forms_agree_and_decay() {
        for s in [2.5, 10.0, 1e3] {
            let (a, b) = u_tail_forms(s).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        let slope = (q_unit(1e4).abs().ln() - q_unit(1e2).abs().ln()) / (1e4f64.ln() - 1e2f64.ln());
        assert!((slope + 1.5).abs() < 0.1, "{slope}");
        assert!((2.0..1e4).contains(&3.0) && q_unit(3.0) < 0.0 && q_unit(2.001) < 0.0);
    }

    #[test]
    fn q_integral_matches_closed_form() {
        // ∫|Q(s,1)| = (4/√π)(4/3 + 1/√2) using ∫U = 0 on the pieces.
        let cfg = KernelConfig::default();
        let q = q_total_integral(&cfg).unwrap();
        let closed = 4.0 / PI.sqrt() * (4.0 / 3.0 + 0.5f64.sqrt());
        assert!((q.total - closed).abs() < 1e-9, "{} {}", q.total, closed);
        assert!((q.pieces[0] - 1.0 / PI.sqrt()).abs() < 1e-12);
        for t in [0.25, 4.0] {
            let qt = q_abs_integral(t, &cfg).unwrap();
            assert!((qt.total - t.sqrt() * q.total).abs() < 1e-9);
        }
    }

    #[test]
    fn representation_identity() {
        let cfg = KernelConfig::default();
        let c = repr_identity_check(1.0, 1.0, &cfg).unwrap();
        assert!((c.lhs - ((-1.0f64).exp() - 1.0)).abs() < 1e-15 && c.residual < 1e-9);
        let c = repr_identity_check(4.0, 0.5, &cfg).unwrap();
        assert!(c.residual < 1e-9);
        let c = repr_identity_check(1e-8, 1.0, &cfg).unwrap();
        assert!(c.lhs.abs() < 1e-7 && c.residual < 1e-9);
    }

    #[test]
    fn integration_by_parts_needs_the_cesaro_average() {
        let cfg = KernelConfig::default();
        for (mu, t) in [(1.0, 1.0), (1.0, 0.25), (1.0, 4.0), (10.0, 0.1)] {
            let c = smoothing_identity_check(mu, t, Averaging::Cesaro, &cfg).unwrap();
            assert!(c.residual < 1e-9, "mu={mu} t={t} {c:?}");
        }
        let s = smoothing_identity_check(1.0, 1.0, Averaging::Smoothing, &cfg).unwrap();
        assert!((s.lhs + 0.767456).abs() < 1e-6);
        assert!(s.residual > 0.1);
    }
}
