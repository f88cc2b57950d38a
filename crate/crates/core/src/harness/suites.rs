//! The checks behind each suite, run in a fixed order.

use std::f64::consts::{E, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::config::{RunConfig, Suite};
use super::report::{CheckRecord, Status, VerificationReport};
use crate::error::{Error, Result};
use crate::hermite::MultiIndex;
use crate::kernels::{
    kernel_table, pointwise_bound_check, q_abs_integral, q_total_integral, repr_identity_check,
    smoothing_identity_check, Averaging,
};
use crate::lusin::{
    hopf_max, lusin_constant, lusin_from_sample, lusin_pair_check, mcshane_extend, sample_maximal, sample_points,
    weak11_check, BigM,
};
use crate::mc::{
    hitting_cdf, martingale_moment_check, occupation_check, sample_hitting, sample_ou, subordination_check,
    vector_moment_check, Crossing, OuInit, PathConfig,
};
use crate::mehler::{
    lipschitz_bound_check, log_convexity_check, smoothing_log_convexity_check, Mehler, MehlerMethod,
    PointwiseFunction,
};
use crate::model::GaussianModel;
use crate::orlicz::{
    jensen_contraction_check, luxemburg_norm, meyer_forward_check, meyer_reverse_check, phi,
    phi_product_bound_check, poincare_check, resolvent_root_l1_check, rotation_invariance_check,
};
use crate::quadrature::QuadratureGrid;
use crate::series::HermiteSeries;
use crate::spectral::{apply, check_commutation, dirichlet_pairing, SpectralMultiplier};
use crate::stats::{stream_rng, McEstimate};
use crate::tgrid::TGrid;

/// Shared inputs for one run.
pub struct Context {
    pub cfg: RunConfig,
    pub model: GaussianModel,
}

impl Context {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Context { cfg: cfg.clone(), model: cfg.model()? })
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        stream_rng(self.cfg.seed, stream)
    }

    fn dim(&self) -> usize {
        self.model.dimension()
    }

    fn standard(&self) -> GaussianModel {
        GaussianModel::standard(self.dim())
    }

    /// `λ_i = i`, the general-convention partner of the configured model.
    fn general(&self) -> GaussianModel {
        let rates: Vec<f64> = (1..=self.dim()).map(|i| i as f64).collect();
        GaussianModel::general(&rates).expect("positive rates")
    }

    fn grid(&self) -> &QuadratureGrid {
        &self.cfg.quadrature
    }

    fn tgrid(&self) -> &TGrid {
        &self.cfg.tgrid
    }

    fn series(&self, model: &GaussianModel, rng: &mut ChaCha8Rng) -> HermiteSeries {
        HermiteSeries::random(model, self.cfg.degree_cap, rng)
    }

    fn paths(&self, start: f64) -> PathConfig {
        self.cfg.path_config(start)
    }
}

type Check = fn(&Context) -> Result<CheckRecord>;

fn checks(suite: Suite) -> &'static [(&'static str, Check)] {
    match suite {
        Suite::Kernels => &[
            ("q-total-integral", q_total),
            ("q-unit-head", q_head),
            ("q-scaling", q_scaling),
            ("representation-identity", representation),
            ("smoothing-identity", smoothing_identity),
            ("smoothing-identity-cesaro", smoothing_identity_cesaro),
            ("kernel-curve-point", kernel_curve_point),
        ],
        Suite::Spectral => &[
            ("commutation", commutation),
            ("dirichlet-pairing", pairing),
            ("semigroup-property", semigroup_property),
            ("square-root-squares", square_root_squares),
        ],
        Suite::Mehler => &[
            ("spectral-agreement", spectral_agreement),
            ("log-convexity", log_convexity),
            ("smoothing-log-convexity", smoothing_log_convexity),
            ("lipschitz-bound", lipschitz_bound),
            ("pointwise-bound", pointwise_bound),
        ],
        Suite::Orlicz => &[
            ("phi-normalization", phi_normalization),
            ("constant-norm", constant_norm),
            ("homogeneity", homogeneity),
            ("triangle", triangle),
            ("monotonicity", monotonicity),
            ("phi-convexity", phi_convexity),
            ("phi-product-bound", phi_product),
            ("jensen-contraction", jensen),
            ("rotation-invariance", rotation),
        ],
        Suite::Meyer => &[
            ("unit-forward-value", unit_forward),
            ("forward-ratios", forward_ratios),
            ("reverse-ratios", reverse_ratios),
            ("resolvent-root-l1", resolvent_root),
            ("poincare-ratios", poincare_ratios),
        ],
        Suite::Lusin => &[
            ("weak-type-11", weak11),
            ("hopf-refinement", hopf_refinement),
            ("pair-bound", pair_bound),
            ("lusin-approximation", lusin_approximation),
        ],
        Suite::Mc => &[
            ("ou-stationary", ou_stationary),
            ("hitting-law", hitting_law),
            ("bridge-correction", bridge_correction),
            ("occupation", occupation),
            ("occupation-divergence", occupation_divergence),
            ("martingale-moments", martingale_moments),
            ("martingale-constant", martingale_constant),
            ("vector-moments", vector_moments),
            ("subordination", subordination),
        ],
    }
}

pub fn check_ids(suite: Suite) -> Vec<&'static str> {
    checks(suite).iter().map(|c| c.0).collect()
}

fn panic_message(p: &(dyn std::any::Any + Send)) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Runs one suite into `report`; failures are recorded and never abort the run.
pub fn run_suite(suite: Suite, ctx: &Context, report: &mut VerificationReport) {
    for (id, check) in checks(suite) {
        let start = Instant::now();
        let record = match catch_unwind(AssertUnwindSafe(|| check(ctx))) {
            Ok(Ok(mut r)) => {
                r.suite = suite;
                r.id = id.to_string();
                r
            }
            Ok(Err(e)) => CheckRecord::crashed(suite, id, &e.to_string()),
            Err(p) => CheckRecord::crashed(suite, id, &format!("panicked: {}", panic_message(p.as_ref()))),
        };
        report.push(record, start.elapsed().as_millis() as u64);
    }
}

/// Executes the selected suites in canonical order.
pub fn run(cfg: &RunConfig) -> Result<VerificationReport> {
    let ctx = Context::new(cfg)?;
    let mut report = VerificationReport::new(cfg);
    report.timestamp.unix_seconds =
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for suite in cfg.ordered_suites() {
        run_suite(suite, &ctx, &mut report);
    }
    std::panic::set_hook(hook);
    Ok(report)
}

fn rec(id: &str, anchor: &str) -> CheckRecord {
    CheckRecord::new(Suite::Kernels, id, anchor)
}

// kernels

const MU_GRID: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
const R_GRID: [f64; 3] = [0.1, 1.0, 10.0];

fn q_total(ctx: &Context) -> Result<CheckRecord> {
    let q = q_total_integral(&ctx.cfg.kernel)?;
    let r = q_total_integral(&ctx.cfg.kernel.refined())?;
    Ok(rec("", "integral of |Q(s,1)| over (0,∞) converges and is refinement-stable")
        .at_most((q.total - r.total).abs(), 1e-6)
        .details(json!({ "value": q.total, "refined": r.total, "pieces": q.pieces, "error": q.error })))
}

fn q_head(ctx: &Context) -> Result<CheckRecord> {
    let q = q_total_integral(&ctx.cfg.kernel)?;
    Ok(rec("", "the (0,1) part of the Q integral equals 1/sqrt(pi)")
        .at_most((q.pieces[0] - 1.0 / PI.sqrt()).abs(), 1e-8)
        .details(json!({ "value": q.pieces[0] })))
}

fn q_scaling(ctx: &Context) -> Result<CheckRecord> {
    let c = q_total_integral(&ctx.cfg.kernel)?.total;
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for t in [0.25, 4.0] {
        let v = q_abs_integral(t, &ctx.cfg.kernel)?.total;
        worst = worst.max((v - t.sqrt() * c).abs());
        rows.push(json!({ "t": t, "integral": v, "scaled": t.sqrt() * c }));
    }
    Ok(rec("", "integral of |Q(s,t)| scales like sqrt(t)").at_most(worst, 1e-6).details(json!({ "rows": rows })))
}

fn representation(ctx: &Context) -> Result<CheckRecord> {
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for mu in MU_GRID {
        for r in R_GRID {
            let c = repr_identity_check(mu, r, &ctx.cfg.kernel)?;
            worst = worst.max(c.residual);
            rows.push(json!({ "mu": mu, "r": r, "residual": c.residual }));
        }
    }
    Ok(rec("", "e^{-mu r} - 1 equals sqrt(mu) times the K-kernel Laplace integral")
        .at_most(worst, 1e-6)
        .details(json!({ "rows": rows })))
}

fn smoothing_rows(ctx: &Context, averaging: Averaging) -> Result<(f64, Vec<serde_json::Value>)> {
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for mu in MU_GRID {
        for t in R_GRID {
            let c = smoothing_identity_check(mu, t, averaging, &ctx.cfg.kernel)?;
            worst = worst.max(c.residual);
            rows.push(json!({ "mu": mu, "t": t, "lhs": c.lhs, "rhs": c.rhs, "residual": c.residual }));
        }
    }
    Ok((worst, rows))
}

fn smoothing_identity(ctx: &Context) -> Result<CheckRecord> {
    let (worst, rows) = smoothing_rows(ctx, Averaging::Smoothing)?;
    Ok(rec("", "A_t - I written as a Q-kernel integral of A_s applied to sqrt(-L)")
        .at_most(worst, 1e-6)
        .details(json!({ "rows": rows })))
}

fn smoothing_identity_cesaro(ctx: &Context) -> Result<CheckRecord> {
    let (worst, rows) = smoothing_rows(ctx, Averaging::Cesaro)?;
    Ok(rec("", "A_t - I written as a Q-kernel integral of the Cesàro average applied to sqrt(-L)")
        .at_most(worst, 1e-6)
        .details(json!({ "rows": rows })))
}

fn kernel_curve_point(_: &Context) -> Result<CheckRecord> {
    let row = kernel_table().into_iter().find(|r| r.0 == 0.5).ok_or(Error::Empty("no s = 0.5 row".into()))?;
    let want = -(2.0 / PI).sqrt();
    Ok(rec("", "U(0.5, 1) = -sqrt(2/pi)").at_most((row.1 - want).abs(), 1e-12).details(json!({ "u": row.1 })))
}

// spectral

fn both_models(ctx: &Context) -> [GaussianModel; 2] {
    [ctx.model.clone(), GaussianModel::general(&[1.0, 2.0, 3.0]).expect("positive rates")]
}

fn commutation(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(10);
    let mut worst: f64 = 0.0;
    for (k, model) in both_models(ctx).iter().cycle().take(ctx.cfg.samples.tuples).enumerate() {
        let f = ctx.series(model, &mut rng);
        let t = rng.random_range(0.01..5.0);
        let alpha = rng.random_range(0.0..3.0);
        let axis = k % model.dimension();
        worst = worst.max(check_commutation(&f, t, alpha, axis)?);
    }
    Ok(CheckRecord::new(Suite::Spectral, "", "gradient commutes with T_t and R^alpha_t up to the rate shift")
        .at_most(worst, 1e-12)
        .details(json!({ "tuples": ctx.cfg.samples.tuples })))
}

fn pairing(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(11);
    let mut worst: f64 = 0.0;
    for model in both_models(ctx) {
        for _ in 0..ctx.cfg.samples.series {
            let f = ctx.series(&model, &mut rng);
            let g = ctx.series(&model, &mut rng);
            let c = dirichlet_pairing(&f, &g, rng.random_range(0.0..2.0))?;
            worst = worst.max(c.residual / (1.0 + c.spectral.abs()));
        }
    }
    Ok(CheckRecord::new(Suite::Spectral, "", "<(alpha - L) f, g> equals alpha<f,g> plus the weighted Dirichlet form")
        .at_most(worst, 1e-12))
}

fn semigroup_property(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(12);
    let mut worst: f64 = 0.0;
    for model in both_models(ctx) {
        for _ in 0..ctx.cfg.samples.series {
            let f = ctx.series(&model, &mut rng);
            let (t, s) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
            let two = apply(&apply(&f, SpectralMultiplier::Semigroup { t })?, SpectralMultiplier::Semigroup { t: s })?;
            let one = apply(&f, SpectralMultiplier::Semigroup { t: t + s })?;
            worst = worst.max(two.max_coeff_diff(&one)?);
        }
    }
    Ok(CheckRecord::new(Suite::Spectral, "", "T_t T_s = T_{t+s}").at_most(worst, 1e-14))
}

fn square_root_squares(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(13);
    let mut worst: f64 = 0.0;
    for model in both_models(ctx) {
        for _ in 0..ctx.cfg.samples.series {
            let f = ctx.series(&model, &mut rng);
            let alpha = rng.random_range(0.0..2.0);
            let root = SpectralMultiplier::SqrtGen { alpha };
            let twice = apply(&apply(&f, root)?, root)?;
            let direct = f.map_coeffs(|k, c| c * (alpha + crate::spectral::eigenvalue(k, &model)));
            worst = worst.max(twice.max_coeff_diff(&direct)?);
        }
    }
    Ok(CheckRecord::new(Suite::Spectral, "", "sqrt(alpha - L) squared is alpha - L").at_most(worst, 1e-12))
}

// mehler

fn spectral_agreement(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(20);
    let mut worst: f64 = 0.0;
    for model in [ctx.standard(), ctx.general()] {
        let m = Mehler::new(&model, ctx.grid(), MehlerMethod::Quadrature)?;
        for _ in 0..ctx.cfg.samples.series {
            let f = ctx.series(&model, &mut rng);
            let pf = PointwiseFunction::series(&f);
            for x in sample_points(&model, ctx.cfg.samples.points, rng.random(), 0) {
                for t in [0.1, 1.0, 10.0] {
                    let tt = apply(&f, SpectralMultiplier::Semigroup { t })?.eval(&x)?;
                    let at = apply(&f, SpectralMultiplier::Smoothing { t })?.eval(&x)?;
                    worst = worst.max((m.apply(&pf, t, &x)?.value - tt).abs());
                    worst = worst.max((m.smoothing(&pf, t, &x)? - at).abs());
                }
            }
        }
    }
    Ok(CheckRecord::new(Suite::Mehler, "", "Mehler quadrature reproduces the spectral T_t and A_t").at_most(worst, 1e-7))
}

fn random_pair(rng: &mut ChaCha8Rng, d: usize) -> (Vec<f64>, Vec<f64>) {
    let x0: Vec<f64> = (0..d).map(|_| rng.random_range(-2.5..2.5)).collect();
    let x1: Vec<f64> = (0..d).map(|_| rng.random_range(-2.5..2.5)).collect();
    (x0, x1)
}

fn slack_record(id: &str, anchor: &str, slacks: &[crate::mehler::Slack]) -> CheckRecord {
    let hard = slacks.iter().filter(|s| !s.holds(1e-8)).count();
    let worst = slacks.iter().map(|s| s.slack() / s.rhs.abs().max(1e-300)).fold(f64::INFINITY, f64::min);
    CheckRecord::new(Suite::Mehler, id, anchor)
        .judged(hard == 0, worst)
        .details(json!({ "tuples": slacks.len(), "violations": hard }))
}

fn convexity_family(rng: &mut ChaCha8Rng, d: usize) -> PointwiseFunction {
    let a: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let c = rng.random_range(0.0..1.0);
    PointwiseFunction::nonneg_closure("exp-quadratic", move |x| {
        let lin: f64 = x.iter().zip(&a).map(|(xi, ai)| xi * ai).sum();
        (lin - c * x[0] * x[0] / 4.0).exp() + 0.1
    })
}

fn convexity_tuples(ctx: &Context, stream: u64, smoothing: bool) -> Result<Vec<crate::mehler::Slack>> {
    let model = ctx.standard();
    let mut rng = ctx.rng(stream);
    (0..ctx.cfg.samples.tuples)
        .map(|_| {
            let g = convexity_family(&mut rng, model.dimension());
            let (x0, x1) = random_pair(&mut rng, model.dimension());
            let t = rng.random_range(0.05..3.0);
            let s = rng.random_range(0.0..1.0);
            if smoothing {
                smoothing_log_convexity_check(&g, &model, t, &x0, &x1, s, ctx.grid())
            } else {
                log_convexity_check(&g, &model, t, &x0, &x1, s, ctx.grid())
            }
        })
        .collect()
}

fn log_convexity(ctx: &Context) -> Result<CheckRecord> {
    let slacks = convexity_tuples(ctx, 21, false)?;
    Ok(slack_record("", "T_t g is log-convex along segments up to the Cameron-Martin factor", &slacks))
}

fn smoothing_log_convexity(ctx: &Context) -> Result<CheckRecord> {
    let slacks = convexity_tuples(ctx, 22, true)?;
    Ok(slack_record("", "A_t g is log-convex along segments up to the Cameron-Martin factor", &slacks))
}

fn lipschitz_bound(ctx: &Context) -> Result<CheckRecord> {
    let model = ctx.standard();
    let mut rng = ctx.rng(23);
    let slacks = (0..ctx.cfg.samples.tuples)
        .map(|_| {
            let f = ctx.series(&model, &mut rng);
            let (x0, x1) = random_pair(&mut rng, model.dimension());
            let t = rng.random_range(0.05..3.0);
            lipschitz_bound_check(&f, t, &x0, &x1, ctx.grid())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(slack_record("", "|A_t f(x1) - A_t f(x0)| <= |h| e^{|h|^2/4t} (A_t|grad f|(x0) + A_t|grad f|(x1))", &slacks))
}

fn pointwise_bound(ctx: &Context) -> Result<CheckRecord> {
    let model = ctx.standard();
    let c_q = q_total_integral(&ctx.cfg.kernel)?.total;
    let m = Mehler::new(&model, ctx.grid(), MehlerMethod::Quadrature)?;
    let mut rng = ctx.rng(24);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    let mut count = 0;
    for _ in 0..ctx.cfg.samples.series {
        let f = ctx.series(&model, &mut rng);
        for x in sample_points(&model, ctx.cfg.samples.points, rng.random(), 0) {
            for s in pointwise_bound_check(&f, &m, &x, ctx.tgrid(), c_q)? {
                count += 1;
                if s.slack() < 0.0 {
                    violations += 1;
                }
                worst = worst.min(s.slack());
            }
        }
    }
    Ok(CheckRecord::new(Suite::Mehler, "", "|A_t f - f| <= C sqrt(t) sup_s A_s|sqrt(-L) f| over the t-grid")
        .judged(violations == 0, worst)
        .details(json!({ "c_q": c_q, "comparisons": count, "violations": violations })))
}

// orlicz

fn orec(anchor: &str) -> CheckRecord {
    CheckRecord::new(Suite::Orlicz, "", anchor)
}

fn phi_normalization(_: &Context) -> Result<CheckRecord> {
    Ok(orec("Phi(e - 1) = 1").at_most((phi(E - 1.0)? - 1.0).abs(), 1e-12))
}

fn norm_of(f: &PointwiseFunction, model: &GaussianModel, grid: &QuadratureGrid) -> Result<f64> {
    Ok(luxemburg_norm(f, model, grid)?.value)
}

fn constant_norm(ctx: &Context) -> Result<CheckRecord> {
    let mut worst: f64 = 0.0;
    for c in [0.25, 1.0, 3.0] {
        let f = PointwiseFunction::closure("c", move |_| c);
        worst = worst.max((norm_of(&f, &ctx.model, ctx.grid())? - c / (E - 1.0)).abs() / c);
    }
    Ok(orec("the norm of a constant c is c/(e - 1)").at_most(worst, 1e-10))
}

fn homogeneity(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(30);
    let mut worst: f64 = 0.0;
    for _ in 0..ctx.cfg.samples.series {
        let f = ctx.series(&ctx.model, &mut rng);
        let c = rng.random_range(-4.0..4.0);
        let a = norm_of(&PointwiseFunction::series(&f.scaled(c)), &ctx.model, ctx.grid())?;
        let b = c.abs() * norm_of(&PointwiseFunction::series(&f), &ctx.model, ctx.grid())?;
        worst = worst.max((a - b).abs() / b.max(1e-300));
    }
    Ok(orec("norm of c f equals |c| times norm of f").at_most(worst, 1e-7))
}

fn triangle(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(31);
    let mut worst = f64::INFINITY;
    for _ in 0..ctx.cfg.samples.series {
        let f = ctx.series(&ctx.model, &mut rng);
        let g = ctx.series(&ctx.model, &mut rng);
        let n = |s: &HermiteSeries| norm_of(&PointwiseFunction::series(s), &ctx.model, ctx.grid());
        let (nf, ng, nfg) = (n(&f)?, n(&g)?, n(&f.add(&g)?)?);
        worst = worst.min((nf + ng - nfg) / (nf + ng));
    }
    Ok(orec("norm of f + g is at most the sum of the norms").judged(worst >= -1e-7, worst))
}

fn monotonicity(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(32);
    let mut worst = f64::INFINITY;
    for _ in 0..ctx.cfg.samples.series {
        let f = ctx.series(&ctx.model, &mut rng);
        let h = ctx.series(&ctx.model, &mut rng);
        let small = PointwiseFunction::series(&f);
        let (f2, h2) = (f.clone(), h.clone());
        let big = PointwiseFunction::nonneg_closure("dominating", move |x| f2.eval(x).unwrap().abs() + h2.eval(x).unwrap().abs());
        let (a, b) = (norm_of(&small, &ctx.model, ctx.grid())?, norm_of(&big, &ctx.model, ctx.grid())?);
        worst = worst.min((b - a) / b);
    }
    Ok(orec("|f| <= |g| pointwise implies norm f <= norm g").judged(worst >= -1e-7, worst))
}

fn phi_convexity(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(33);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let a = rng.random_range(0.0..20.0);
        let b = rng.random_range(0.0..20.0);
        worst = worst.min(0.5 * (phi(a)? + phi(b)?) - phi(0.5 * (a + b))?);
    }
    Ok(orec("Phi is midpoint convex").judged(worst >= -1e-12, worst))
}

fn phi_product(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(34);
    let mut worst = f64::INFINITY;
    for _ in 0..1000 {
        let a = rng.random_range(0.0..10.0f64).powi(2);
        let b = rng.random_range(0.0..10.0f64).powi(2);
        let s = phi_product_bound_check(a, b)?;
        worst = worst.min(s.slack() / s.rhs.max(1e-300));
    }
    Ok(orec("the product bound for Phi(ab)").judged(worst >= -1e-12, worst))
}

fn jensen(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(35);
    let mut worst = f64::INFINITY;
    for _ in 0..ctx.cfg.samples.series {
        let g = ctx.series(&ctx.model, &mut rng);
        for t in [0.1, 1.0] {
            let s = jensen_contraction_check(&g, t, ctx.grid())?;
            worst = worst.min(s.slack() / s.rhs);
        }
    }
    Ok(orec("T_t is a contraction in the L log L norm").judged(worst >= -1e-7, worst))
}

fn rotation(_: &Context) -> Result<CheckRecord> {
    let tests: [fn(f64, f64) -> f64; 4] =
        [|x, y| x * x * y, |x, y| x.powi(4) + y.powi(3) * x, |x, y| (x - y).powi(2) * (1.0 + x * y), |x, _| x.powi(6)];
    let mut worst: f64 = 0.0;
    for p in tests {
        for t in [0.1, 0.7, 3.0] {
            worst = worst.max(rotation_invariance_check(&p, t, 24)?);
        }
    }
    Ok(orec("the Mehler rotation preserves the product Gaussian measure").at_most(worst, 1e-9))
}

// meyer

fn unit_forward(ctx: &Context) -> Result<CheckRecord> {
    let m = GaussianModel::standard(1);
    let h1 = HermiteSeries::basis(&m, 1, MultiIndex::new(vec![1]), 1.0)?;
    let r = meyer_forward_check(&h1, 0.0, ctx.grid())?;
    let want = (2.0 / PI).sqrt() * (E - 1.0);
    Ok(CheckRecord::new(Suite::Meyer, "", "forward ratio of the first Hermite function is sqrt(2/pi)(e - 1)")
        .at_most((r.ratio - want).abs(), 1e-6)
        .details(json!({ "ratio": r.ratio })))
}

#[derive(Clone, Copy)]
enum Direction {
    Forward,
    Reverse,
}

fn ratio_sweep(ctx: &Context, direction: Direction) -> Result<CheckRecord> {
    let refined = ctx.grid().refined();
    let mut rows = Vec::new();
    let (mut best, mut best_ref): (f64, f64) = (0.0, 0.0);
    for (label, model) in [("standard", ctx.standard()), ("general", ctx.general())] {
        let mut rng = ctx.rng(40);
        for i in 0..ctx.cfg.samples.series {
            let f = ctx.series(&model, &mut rng);
            for alpha in [0.0, 1.0] {
                let run = |g: &QuadratureGrid| match direction {
                    Direction::Forward => meyer_forward_check(&f, alpha, g),
                    Direction::Reverse => meyer_reverse_check(&f, alpha, g),
                };
                let (a, b) = (run(ctx.grid())?.ratio, run(&refined)?.ratio);
                best = best.max(a);
                best_ref = best_ref.max(b);
                rows.push(json!({ "function": format!("{label}-{i}"), "convention": label, "alpha": alpha, "ratio": a, "refined": b }));
            }
        }
    }
    let drift = (best - best_ref).abs() / best_ref.max(1e-300);
    let (id, anchor) = match direction {
        Direction::Forward => ("forward-ratios", "||sqrt(alpha - L) f||_1 over ||grad f||_LlogL + sqrt(alpha)||f||_1"),
        Direction::Reverse => ("reverse-ratios", "||grad f||_1 over ||sqrt(alpha - L) f||_LlogL"),
    };
    Ok(CheckRecord::new(Suite::Meyer, id, anchor)
        .judged(best.is_finite() && drift <= 0.05, best)
        .details(json!({ "max": best, "max_refined": best_ref, "relative_drift": drift, "rows": rows })))
}

fn forward_ratios(ctx: &Context) -> Result<CheckRecord> {
    ratio_sweep(ctx, Direction::Forward)
}

fn reverse_ratios(ctx: &Context) -> Result<CheckRecord> {
    ratio_sweep(ctx, Direction::Reverse)
}

fn resolvent_root(ctx: &Context) -> Result<CheckRecord> {
    let mut rng = ctx.rng(41);
    let mut worst = f64::INFINITY;
    for _ in 0..ctx.cfg.samples.series {
        let f = ctx.series(&ctx.model, &mut rng);
        let alpha = rng.random_range(0.1..3.0);
        let s = resolvent_root_l1_check(&f, alpha, ctx.grid())?;
        worst = worst.min(s.slack() / s.rhs);
    }
    Ok(CheckRecord::new(Suite::Meyer, "", "alpha ||(alpha - L)^{-1/2} f||_1 <= sqrt(alpha) ||f||_1").judged(worst >= -1e-8, worst))
}

fn poincare_ratios(ctx: &Context) -> Result<CheckRecord> {
    let model = ctx.standard();
    let refined = ctx.grid().refined();
    let mut rng = ctx.rng(42);
    let mut rows = Vec::new();
    let (mut best, mut best_ref): (f64, f64) = (0.0, 0.0);
    for i in 0..ctx.cfg.samples.series {
        let f = ctx.series(&model, &mut rng).centered();
        let (a, b) = (poincare_check(&f, ctx.grid())?.ratio, poincare_check(&f, &refined)?.ratio);
        best = best.max(a);
        best_ref = best_ref.max(b);
        rows.push(json!({ "function": format!("standard-{i}"), "convention": "standard", "alpha": null, "ratio": a, "refined": b }));
    }
    let drift = (best - best_ref).abs() / best_ref.max(1e-300);
    Ok(CheckRecord::new(Suite::Meyer, "", "||phi - mean||_LlogL over ||grad phi||_LlogL")
        .judged(best.is_finite() && drift <= 0.05, best)
        .details(json!({ "max": best, "max_refined": best_ref, "relative_drift": drift, "rows": rows })))
}

// lusin

fn weak11_family() -> Vec<PointwiseFunction> {
    vec![
        PointwiseFunction::nonneg_closure("x^2", |x| x[0] * x[0]),
        PointwiseFunction::nonneg_closure("|x|+1", |x| x[0].abs() + 1.0).with_kinks(vec![0.0]),
        PointwiseFunction::nonneg_closure("min(e^x,10)", |x| x[0].exp().min(10.0)).with_kinks(vec![10f64.ln()]),
    ]
}

fn weak11(ctx: &Context) -> Result<CheckRecord> {
    let model = GaussianModel::standard(1);
    let m = Mehler::new(&model, ctx.grid(), MehlerMethod::Quadrature)?;
    let mut rows = Vec::new();
    let (mut holds, mut stable) = (true, true);
    let mut worst = f64::INFINITY;
    for (i, g) in weak11_family().iter().enumerate() {
        let out = weak11_check(g, &m, &[0.5, 1.0, 2.0, 4.0], ctx.cfg.samples.maximal, ctx.cfg.seed ^ i as u64, ctx.tgrid(), ctx.grid())?;
        for r in out {
            holds &= r.holds();
            stable &= r.stable();
            worst = worst.min(r.rhs + 3.0 * r.stderr - r.lhs);
            rows.push(json!({ "function": g.tag(), "lambda": r.lambda, "lhs": r.lhs, "lhs_base": r.lhs_base, "stderr": r.stderr, "rhs": r.rhs }));
        }
    }
    Ok(CheckRecord::new(Suite::Lusin, "", "m(sup_t H_t g >= lambda) <= ||g||_1 / lambda")
        .judged(holds && stable, worst)
        .details(json!({ "stable_under_doubling": stable, "per_octave": ctx.tgrid().refined().per_octave(), "rows": rows })))
}

fn hopf_refinement(ctx: &Context) -> Result<CheckRecord> {
    let model = GaussianModel::standard(1);
    let m = Mehler::new(&model, ctx.grid(), MehlerMethod::Quadrature)?;
    let mut worst: f64 = 0.0;
    for g in weak11_family() {
        for x in [-1.5, 0.0, 0.4, 2.2] {
            let a = hopf_max(&g, &m, &[x], ctx.tgrid())?;
            let b = hopf_max(&g, &m, &[x], &ctx.tgrid().refined())?;
            worst = worst.max((b - a).abs() / b.abs().max(1e-300));
        }
    }
    Ok(CheckRecord::new(Suite::Lusin, "", "the maximal function is stable under t-grid doubling").at_most(worst, 1e-2))
}

fn pair_bound(ctx: &Context) -> Result<CheckRecord> {
    let model = ctx.standard();
    let m = Mehler::new(&model, ctx.grid(), MehlerMethod::Quadrature)?;
    let c_num = lusin_constant(q_total_integral(&ctx.cfg.kernel)?.total);
    let mut rng = ctx.rng(50);
    let f = ctx.series(&model, &mut rng);
    let big = BigM::new(&f, &m, ctx.tgrid())?;
    let (mut pass, mut fail, mut inconclusive) = (0, 0, 0);
    let mut worst = f64::INFINITY;
    for _ in 0..ctx.cfg.samples.pairs {
        let x0: Vec<f64> = (0..model.dimension()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let dir: Vec<f64> = (0..model.dimension()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        let len = rng.random_range(0.01..2.0);
        let x1: Vec<f64> = x0.iter().zip(&dir).map(|(a, d)| a + len * d / norm).collect();
        let out = lusin_pair_check(&f, &big, &x0, &x1, c_num)?;
        match out.status {
            Status::Pass => pass += 1,
            Status::Fail => fail += 1,
            Status::Inconclusive => inconclusive += 1,
        }
        if out.status != Status::Inconclusive {
            worst = worst.min(out.slack.slack());
        }
    }
    Ok(CheckRecord::new(Suite::Lusin, "", "|f(x1) - f(x0)| <= C |h| (M(x0) + M(x1)) with t = |h|^2 on the grid")
        .judged(fail == 0, worst)
        .details(json!({ "c_num": c_num, "pass": pass, "fail": fail, "inconclusive": inconclusive })))
}

fn lusin_approximation(ctx: &Context) -> Result<CheckRecord> {
    let model = ctx.standard();
    let m = Mehler::new(&model, ctx.grid(), MehlerMethod::Quadrature)?;
    let c_num = lusin_constant(q_total_integral(&ctx.cfg.kernel)?.total);
    let mut rng = ctx.rng(51);
    let f = ctx.series(&model, &mut rng);
    let sample = sample_maximal(&f, &m, ctx.cfg.samples.lusin, ctx.cfg.seed, ctx.tgrid())?;
    let mut rows = Vec::new();
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for &eps in &ctx.cfg.epsilons {
        let out = lusin_from_sample(&f, &sample, eps, c_num, ctx.grid())?;
        let mut interp: f64 = 0.0;
        for (y, v) in out.anchors.points().iter().zip(out.anchors.values()) {
            interp = interp.max((mcshane_extend(&out.anchors, y)? - v).abs());
        }
        let mut lip = f64::INFINITY;
        for _ in 0..ctx.cfg.samples.pairs {
            let (x0, x1) = random_pair(&mut rng, model.dimension());
            let d = model.cameron_martin_distance(&x0, &x1);
            let gap = (mcshane_extend(&out.anchors, &x0)? - mcshane_extend(&out.anchors, &x1)?).abs();
            lip = lip.min(out.lambda_used * d + 1e-12 - gap);
        }
        ok &= out.within_budget() && interp <= 1e-12 && lip >= 0.0;
        worst = worst.min(eps + 3.0 * out.stderr - out.complement_mass);
        rows.push(json!({
            "epsilon": eps, "lambda_used": out.lambda_used, "complement_mass": out.complement_mass,
            "stderr": out.stderr, "anchors": out.anchors.len(), "removed": out.anchors.removed,
            "interpolation_error": interp, "lipschitz_margin": lip,
        }));
    }
    Ok(CheckRecord::new(Suite::Lusin, "", "a lambda-Lipschitz g agrees with f off a set of mass at most epsilon")
        .judged(ok, worst)
        .details(json!({ "c_num": c_num, "samples": ctx.cfg.samples.lusin, "rows": rows })))
}

// mc

fn mrec(anchor: &str) -> CheckRecord {
    CheckRecord::new(Suite::Mc, "", anchor)
}

fn estimate_json(e: &McEstimate) -> serde_json::Value {
    json!({ "mean": e.mean, "stderr": e.stderr, "paths": e.paths, "truncation_fraction": e.truncation_fraction })
}

fn ou_stationary(ctx: &Context) -> Result<CheckRecord> {
    let model = GaussianModel::general(&[1.0]).expect("positive rate");
    let cfg = PathConfig { horizon: 1.0, dt: ctx.cfg.mc.dt.max(1e-3), ..ctx.paths(1.0) };
    let paths = sample_ou(&model, &OuInit::Stationary, &cfg)?;
    let mut worst = f64::INFINITY;
    for k in [0, paths.steps() / 2, paths.steps()] {
        let xs = paths.slice(k, 0);
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let (m1, m2) = (McEstimate::from_samples(&xs, 0), McEstimate::from_samples(&sq, 0));
        worst = worst.min(3.0 * m1.stderr - m1.mean.abs()).min(3.0 * m2.stderr - (m2.mean - 0.5).abs());
    }
    Ok(mrec("stationary OU slices have mean 0 and variance q").judged(worst >= 0.0, worst))
}

fn hitting_law(ctx: &Context) -> Result<CheckRecord> {
    let cfg = PathConfig { horizon: 2.0, ..ctx.paths(1.0) };
    let s = sample_hitting(&cfg, Crossing::Bridge)?;
    let mut rows = Vec::new();
    let mut ok = true;
    for t in [0.5, 1.0, 2.0] {
        let e = s.cdf(t);
        let want = hitting_cdf(1.0, t);
        ok &= e.agrees_with(want, 3.0, 0.0);
        rows.push(json!({ "t": t, "estimate": e.value, "stderr": e.stderr, "exact": want }));
    }
    Ok(mrec("P(tau <= t) = 2(1 - Phi(N / sqrt(2t)))").judged(ok, f64::NAN).details(json!({ "rows": rows })))
}

fn bridge_correction(ctx: &Context) -> Result<CheckRecord> {
    let cfg = PathConfig { horizon: 1.0, dt: 1e-2, ..ctx.paths(1.0) };
    let exact = hitting_cdf(1.0, 1.0);
    let naive = sample_hitting(&cfg, Crossing::Naive)?.cdf(1.0);
    let bridge = sample_hitting(&cfg, Crossing::Bridge)?.cdf(1.0);
    let gain = (naive.value - exact).abs() - (bridge.value - exact).abs();
    Ok(mrec("bridge-corrected absorption reduces hitting-probability bias at dt = 1e-2")
        .judged(gain > 2.0 * bridge.stderr, gain)
        .details(json!({ "exact": exact, "naive": naive.value, "bridge": bridge.value, "stderr": bridge.stderr })))
}

fn occupation(ctx: &Context) -> Result<CheckRecord> {
    let model = GaussianModel::general(&[1.0]).expect("positive rate");
    let r = occupation_check(&|a, _| (-a).exp(), &model, &ctx.paths(1.0), ctx.grid())?;
    let lhs = r.lhs.as_ref().ok_or(Error::Unbounded("occupation integral diverged".into()))?;
    Ok(mrec("E_N of the occupation integral equals the (N ∧ a)-weighted integral")
        .judged(r.agrees(), lhs.mean - r.rhs)
        .details(json!({ "lhs": estimate_json(lhs), "rhs": r.rhs, "cap": r.cap, "truncation_bound": r.truncation_bound })))
}

fn occupation_divergence(ctx: &Context) -> Result<CheckRecord> {
    let model = GaussianModel::general(&[1.0]).expect("positive rate");
    let r = occupation_check(&|_, _| 1.0, &model, &ctx.paths(1.0).with_paths(1), ctx.grid())?;
    Ok(mrec("a non-decaying integrand is reported as divergent").judged(r.divergent && r.lhs.is_none(), f64::NAN))
}

fn martingale_moments(ctx: &Context) -> Result<CheckRecord> {
    let model = GaussianModel::general(&[1.0]).expect("positive rate");
    let f = HermiteSeries::basis(&model, 1, MultiIndex::new(vec![1]), 1.0)?;
    let r = martingale_moment_check(&f, 1.0, &ctx.paths(2.0))?;
    Ok(mrec("second moments of the two martingale parts match the spectral predictions")
        .judged(r.arrow_agrees() && r.up_agrees(), (r.up.mean - r.up_prediction) / r.up.stderr.max(1e-300))
        .details(json!({
            "start_level": r.start_level, "alpha": r.alpha, "cap": r.cap,
            "arrow": estimate_json(&r.arrow), "arrow_prediction": r.arrow_prediction, "arrow_limit": r.arrow_limit,
            "up": estimate_json(&r.up), "up_prediction": r.up_prediction, "up_limit": r.up_limit,
            "up_limit_quarter": r.up_limit_quarter, "quarter_agrees": r.quarter_agrees(),
            "arrow_bias": r.arrow_bias, "up_bias": r.up_bias,
        })))
}

fn martingale_constant(ctx: &Context) -> Result<CheckRecord> {
    let model = GaussianModel::general(&[1.0]).expect("positive rate");
    let f = HermiteSeries::constant(&model, 1, 2.5);
    let r = martingale_moment_check(&f, 0.0, &ctx.paths(4.0))?;
    Ok(mrec("a constant with alpha = 0 gives vanishing martingales")
        .judged(r.arrow.mean.abs() <= 3.0 * r.arrow.stderr && r.up.mean.abs() <= 3.0 * r.up.stderr, r.arrow.mean))
}

fn vector_moments(ctx: &Context) -> Result<CheckRecord> {
    let model = GaussianModel::general(&[1.0, 2.0]).expect("positive rates");
    let g = vec![HermiteSeries::basis(&model, 1, MultiIndex::new(vec![1, 0]), 1.0)?, HermiteSeries::zero(&model, 1)];
    let r = vector_moment_check(&g, &model, 0.0, &ctx.paths(2.0))?;
    Ok(mrec("vector martingale second moment matches the sum of coordinate predictions")
        .judged(r.agrees(), r.estimate.mean - r.prediction)
        .details(json!({ "estimate": estimate_json(&r.estimate), "prediction": r.prediction, "limit": r.limit, "shifts": r.shifts })))
}

fn subordination(_: &Context) -> Result<CheckRecord> {
    let mut worst: f64 = 0.0;
    for gamma in [0.25, 1.0, 4.0] {
        for t in [0.5, 1.0, 2.0] {
            worst = worst.max(subordination_check(gamma, 0.0, t)?.residual);
            worst = worst.max(subordination_check(0.5 * gamma, 0.5 * gamma, t)?.residual);
        }
    }
    Ok(mrec("e^{-t sqrt(gamma)} is the Laplace transform of the half-stable density").at_most(worst, 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_has_unique_ids() {
        for s in Suite::ALL {
            let ids = check_ids(s);
            let mut sorted = ids.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), ids.len(), "{s}");
        }
    }

    #[test]
    fn empty_run() {
        let r = run(&RunConfig::default()).unwrap();
        assert_eq!(r.summary.total, 0);
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn crashing_check_is_recorded() {
        let ctx = Context::new(&RunConfig::default()).unwrap();
        let mut report = VerificationReport::new(&ctx.cfg);
        let bad: Check = |_| Err(Error::Domain("boom".into()));
        let start = Instant::now();
        let rec = match catch_unwind(AssertUnwindSafe(|| bad(&ctx))) {
            Ok(Err(e)) => CheckRecord::crashed(Suite::Mc, "x", &e.to_string()),
            _ => unreachable!(),
        };
        report.push(rec, start.elapsed().as_millis() as u64);
        assert_eq!(report.summary.failed, 1);
        assert!(report.checks[0].details["diagnostic"].as_str().unwrap().contains("boom"));
    }
}
