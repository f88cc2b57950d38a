//! Acceptance criteria. Each test writes one `criterion NN ...: PASS|FAIL` line
//! straight to stderr so it shows up even when output is captured.

use std::f64::consts::{E, PI};
use std::io::Write;
use std::time::Instant;

use ou_lusin::harness::{run, RunConfig, Suite};
use ou_lusin::hermite::MultiIndex;
use ou_lusin::kernels::{
    pointwise_bound_check, q_abs_integral, q_total_integral, repr_identity_check, smoothing_identity_check,
    Averaging, KernelConfig,
};
use ou_lusin::lusin::{lusin_constant, lusin_from_sample, mcshane_extend, sample_maximal, sample_points, weak11_check};
use ou_lusin::mc::{
    martingale_moment_check, occupation_check, subordination_check, validate_density, PathConfig, DENSITY_TOLERANCE,
};
use ou_lusin::mehler::{
    lipschitz_bound_check, log_convexity_check, smoothing_log_convexity_check, Mehler, MehlerMethod,
    PointwiseFunction, Slack,
};
use ou_lusin::model::GaussianModel;
use ou_lusin::orlicz::{luxemburg_norm, meyer_forward_check, meyer_reverse_check, phi, poincare_check};
use ou_lusin::quadrature::QuadratureGrid;
use ou_lusin::series::HermiteSeries;
use ou_lusin::spectral::{apply, check_commutation, SpectralMultiplier};
use ou_lusin::stats::stream_rng;
use ou_lusin::tgrid::TGrid;
use rand::Rng;

const MU: [f64; 5] = [0.01, 0.1, 1.0, 10.0, 100.0];
const R: [f64; 3] = [0.1, 1.0, 10.0];
const SEED: u64 = 0xacce55;

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let line = format!("criterion {n:02} {name}: {} ({detail})\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(pass, "criterion {n} failed: {detail}");
}

fn worst_rel(slacks: &[Slack]) -> (usize, f64) {
    let hard = slacks.iter().filter(|s| !s.holds(1e-8)).count();
    let worst = slacks.iter().map(|s| s.slack() / s.rhs.abs().max(1e-300)).fold(f64::INFINITY, f64::min);
    (hard, worst)
}

#[test]
fn criterion_01_representation_identity() {
    let start = Instant::now();
    let cfg = KernelConfig::default();
    let mut worst: f64 = 0.0;
    for mu in MU {
        for r in R {
            worst = worst.max(repr_identity_check(mu, r, &cfg).unwrap().residual);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(1, "representation identity", worst <= 1e-6 && secs < 5.0, format!("max residual {worst:.2e}, {secs:.2}s"));
}

#[test]
fn criterion_02_integration_by_parts_identity() {
    let start = Instant::now();
    let cfg = KernelConfig::default();
    let mut worst: f64 = 0.0;
    let mut at = (0.0, 0.0);
    for mu in MU {
        for t in R {
            let r = smoothing_identity_check(mu, t, Averaging::Smoothing, &cfg).unwrap().residual;
            if r > worst {
                worst = r;
                at = (mu, t);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        2,
        "integration-by-parts identity",
        worst <= 1e-6 && secs < 10.0,
        format!("max residual {worst:.2e} at (mu, t) = {at:?}, {secs:.2}s"),
    );
}

#[test]
fn criterion_03_kernel_integrability() {
    let cfg = KernelConfig::default();
    let q = q_total_integral(&cfg).unwrap();
    let r = q_total_integral(&cfg.refined()).unwrap();
    let stable = (q.total - r.total).abs();
    let head = (q.pieces[0] - 1.0 / PI.sqrt()).abs();
    let scaling = [0.25, 4.0]
        .iter()
        .map(|&t| (q_abs_integral(t, &cfg).unwrap().total - t.sqrt() * q.total).abs())
        .fold(0.0, f64::max);
    verdict(
        3,
        "kernel integrability",
        q.total.is_finite() && stable <= 1e-6 && head <= 1e-8 && scaling <= 1e-6,
        format!("C_Q = {:.9}, refinement {stable:.1e}, head {head:.1e}, scaling {scaling:.1e}", q.total),
    );
}

#[test]
fn criterion_04_pointwise_bound() {
    let start = Instant::now();
    let c_q = q_total_integral(&KernelConfig::default()).unwrap().total;
    let tgrid = TGrid::log_spaced(1e-4, 1e3, 64).unwrap();
    let mut rng = stream_rng(SEED, 4);
    let (mut worst, mut comparisons, mut violations) = (f64::INFINITY, 0usize, 0usize);
    for i in 0..20 {
        let d = 1 + i % 3;
        let model = GaussianModel::standard(d);
        let grid = QuadratureGrid { line_panels: 0, ..QuadratureGrid::with_order(if d == 3 { 12 } else { 24 }) };
        let mehler = Mehler::new(&model, &grid, MehlerMethod::Quadrature).unwrap();
        let f = HermiteSeries::random(&model, 8, &mut rng);
        for x in sample_points(&model, 1000, SEED, 40 + i as u64) {
            for s in pointwise_bound_check(&f, &mehler, &x, &tgrid, c_q).unwrap() {
                comparisons += 1;
                violations += usize::from(s.slack() < 0.0);
                worst = worst.min(s.slack());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        4,
        "pointwise smoothing bound",
        violations == 0 && secs < 300.0,
        format!("{comparisons} comparisons, {violations} violations, min slack {worst:.3e}, {secs:.0}s"),
    );
}

#[test]
fn criterion_05_spectral_mehler_agreement() {
    let grid = QuadratureGrid::with_order(24);
    let mut rng = stream_rng(SEED, 5);
    let mut worst: f64 = 0.0;
    for model in [GaussianModel::standard(2), GaussianModel::general(&[0.5, 2.0]).unwrap()] {
        let m = Mehler::new(&model, &grid, MehlerMethod::Quadrature).unwrap();
        for k in 0..5 {
            let f = HermiteSeries::random(&model, 8, &mut rng);
            let pf = PointwiseFunction::series(&f);
            for x in sample_points(&model, 20, SEED, 50 + k) {
                for t in [0.1, 1.0, 10.0] {
                    let tt = apply(&f, SpectralMultiplier::Semigroup { t }).unwrap().eval(&x).unwrap();
                    let at = apply(&f, SpectralMultiplier::Smoothing { t }).unwrap().eval(&x).unwrap();
                    worst = worst.max((m.apply(&pf, t, &x).unwrap().value - tt).abs());
                    worst = worst.max((m.smoothing(&pf, t, &x).unwrap() - at).abs());
                }
            }
        }
    }
    verdict(5, "spectral and Mehler agreement", worst <= 1e-7, format!("max difference {worst:.2e}"));
}

#[test]
fn criterion_06_commutation() {
    let mut rng = stream_rng(SEED, 6);
    let models = [GaussianModel::standard(2), GaussianModel::general(&[1.0, 2.0, 3.0]).unwrap()];
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let model = &models[k % 2];
        let f = HermiteSeries::random(model, 8, &mut rng);
        let t = rng.random_range(0.01..5.0);
        let alpha = rng.random_range(0.0..3.0);
        worst = worst.max(check_commutation(&f, t, alpha, k % model.dimension()).unwrap());
    }
    verdict(6, "commutation identities", worst <= 1e-12, format!("max residual {worst:.2e} over 100 tuples"));
}

fn convexity_input(rng: &mut impl Rng, model: &GaussianModel, k: usize) -> PointwiseFunction {
    let d = model.dimension();
    if k.is_multiple_of(2) {
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let c = rng.random_range(0.0..1.0);
        PointwiseFunction::nonneg_closure("exp-quadratic", move |x| {
            let lin: f64 = x.iter().zip(&a).map(|(xi, ai)| xi * ai).sum();
            (lin - c * x[0] * x[0] / 4.0).exp()
        })
    } else {
        let f = HermiteSeries::random(model, 6, rng);
        PointwiseFunction::nonneg_closure("abs-series", move |x| f.eval(x).unwrap().abs() + 0.01)
    }
}

fn pair(rng: &mut impl Rng, d: usize) -> (Vec<f64>, Vec<f64>) {
    ((0..d).map(|_| rng.random_range(-2.5..2.5)).collect(), (0..d).map(|_| rng.random_range(-2.5..2.5)).collect())
}

#[test]
fn criterion_07_convexity_and_lipschitz_bounds() {
    let grid = QuadratureGrid::with_order(24);
    let mut rng = stream_rng(SEED, 7);
    let (mut semigroup, mut smoothing, mut lipschitz) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..10_000 {
        let model = GaussianModel::standard(1 + k % 2);
        let d = model.dimension();
        let g = convexity_input(&mut rng, &model, k / 2);
        let (x0, x1) = pair(&mut rng, d);
        let (t, s) = (rng.random_range(0.05..3.0), rng.random_range(0.0..1.0));
        semigroup.push(log_convexity_check(&g, &model, t, &x0, &x1, s, &grid).unwrap());
        smoothing.push(smoothing_log_convexity_check(&g, &model, t, &x0, &x1, s, &grid).unwrap());
        let f = HermiteSeries::random(&model, 6, &mut rng);
        lipschitz.push(lipschitz_bound_check(&f, t, &x0, &x1, &grid).unwrap());
    }
    let rows = [("T_t", worst_rel(&semigroup)), ("A_t", worst_rel(&smoothing)), ("Lipschitz", worst_rel(&lipschitz))];
    let pass = rows.iter().all(|(_, (hard, _))| *hard == 0);
    let detail = rows.iter().map(|(n, (h, w))| format!("{n}: {h} violations, min rel slack {w:.2e}")).collect::<Vec<_>>();
    verdict(7, "log-convexity and Lipschitz bounds", pass, format!("10000 tuples each; {}", detail.join("; ")));
}

#[test]
fn criterion_08_weak_type_11() {
    let model = GaussianModel::standard(1);
    let mehler = Mehler::new(&model, &QuadratureGrid { line_panels: 0, ..Default::default() }, MehlerMethod::Quadrature)
        .unwrap();
    let tgrid = TGrid::log_spaced(1e-3, 1e2, 16).unwrap();
    let family = [
        PointwiseFunction::nonneg_closure("x^2", |x| x[0] * x[0]),
        PointwiseFunction::nonneg_closure("|x|+1", |x| x[0].abs() + 1.0).with_kinks(vec![0.0]),
        PointwiseFunction::nonneg_closure("min(e^x,10)", |x| x[0].exp().min(10.0)).with_kinks(vec![10f64.ln()]),
    ];
    let (mut holds, mut stable, mut worst) = (true, true, f64::INFINITY);
    for (i, g) in family.iter().enumerate() {
        let rows =
            weak11_check(g, &mehler, &[0.5, 1.0, 2.0, 4.0], 100_000, SEED + i as u64, &tgrid, &QuadratureGrid::default())
                .unwrap();
        for r in rows {
            holds &= r.holds();
            stable &= r.stable();
            worst = worst.min(r.rhs + 3.0 * r.stderr - r.lhs);
        }
    }
    verdict(
        8,
        "weak-type (1,1) maximal inequality",
        holds && stable,
        format!("3 functions x 4 levels, 1e5 samples; min margin {worst:.3e}; stable under doubling: {stable}"),
    );
}

#[test]
fn criterion_09_orlicz_machinery() {
    let grid = QuadratureGrid::default();
    let norm = |f: &PointwiseFunction, m: &GaussianModel| luxemburg_norm(f, m, &grid).unwrap().value;
    let phi_err = (phi(E - 1.0).unwrap() - 1.0).abs();
    let model1 = GaussianModel::standard(1);
    let const_err = [0.25, 1.0, 3.0]
        .iter()
        .map(|&c| (norm(&PointwiseFunction::closure("c", move |_| c), &model1) - c / (E - 1.0)).abs())
        .fold(0.0, f64::max);
    let mut rng = stream_rng(SEED, 9);
    let (mut homog, mut tri, mut mono): (f64, f64, f64) = (0.0, f64::INFINITY, f64::INFINITY);
    for k in 0..30 {
        let model = GaussianModel::standard(1 + k % 2);
        let f = HermiteSeries::random(&model, 6, &mut rng);
        let g = HermiteSeries::random(&model, 6, &mut rng);
        let c = rng.random_range(-4.0..4.0);
        let n = |s: &HermiteSeries| norm(&PointwiseFunction::series(s), &model);
        let (nf, ng) = (n(&f), n(&g));
        homog = homog.max((n(&f.scaled(c)) - c.abs() * nf).abs() / (c.abs() * nf));
        tri = tri.min(nf + ng - n(&f.add(&g).unwrap()));
        let (f2, g2) = (f.clone(), g.clone());
        let big = PointwiseFunction::nonneg_closure("dominating", move |x| f2.eval(x).unwrap().abs() + g2.eval(x).unwrap().abs());
        mono = mono.min(norm(&big, &model) - nf);
    }
    verdict(
        9,
        "Orlicz machinery",
        phi_err <= 1e-12 && const_err <= 1e-10 && homog <= 1e-7 && tri >= -1e-7 && mono >= -1e-7,
        format!("Phi(e-1) err {phi_err:.1e}, constants {const_err:.1e}, homogeneity {homog:.1e}, triangle margin {tri:.2e}, monotone margin {mono:.2e}"),
    );
}

#[test]
fn criterion_10_meyer_ratios() {
    let grid = QuadratureGrid::default();
    let refined = grid.refined();
    let mut rng = stream_rng(SEED, 10);
    let mut maxima = [[0.0f64; 2]; 2];
    let mut count = 0;
    for k in 0..100 {
        let d = 1 + k % 2;
        for model in [GaussianModel::standard(d), GaussianModel::general(&vec![1.5; d]).unwrap()] {
            let f = HermiteSeries::random(&model, 6, &mut rng);
            for alpha in [0.0, 1.0] {
                count += 1;
                for (g, slot) in [(&grid, 0), (&refined, 1)] {
                    maxima[0][slot] = maxima[0][slot].max(meyer_forward_check(&f, alpha, g).unwrap().ratio);
                    maxima[1][slot] = maxima[1][slot].max(meyer_reverse_check(&f, alpha, g).unwrap().ratio);
                }
            }
        }
    }
    let drift = |m: [f64; 2]| (m[0] - m[1]).abs() / m[1];
    let h1 = HermiteSeries::basis(&GaussianModel::standard(1), 1, MultiIndex::new(vec![1]), 1.0).unwrap();
    let unit = meyer_forward_check(&h1, 0.0, &grid).unwrap().ratio;
    let unit_err = (unit - (2.0 / PI).sqrt() * (E - 1.0)).abs();
    let finite = maxima.iter().flatten().all(|m| m.is_finite());
    verdict(
        10,
        "Meyer-type L1 ratios",
        finite && drift(maxima[0]) <= 0.05 && drift(maxima[1]) <= 0.05 && unit_err <= 1e-6,
        format!(
            "{count} cases; forward max {:.4} (drift {:.1e}), reverse max {:.4} (drift {:.1e}); unit value {unit:.6}",
            maxima[0][0],
            drift(maxima[0]),
            maxima[1][0],
            drift(maxima[1])
        ),
    );
}

#[test]
fn criterion_11_llogl_poincare() {
    let grid = QuadratureGrid::default();
    let refined = grid.refined();
    let mut rng = stream_rng(SEED, 11);
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let f = HermiteSeries::random(&GaussianModel::standard(1 + k % 2), 6, &mut rng).centered();
        a = a.max(poincare_check(&f, &grid).unwrap().ratio);
        b = b.max(poincare_check(&f, &refined).unwrap().ratio);
    }
    let drift = (a - b).abs() / b;
    verdict(11, "L log L Poincaré ratio", a.is_finite() && drift <= 0.05, format!("max ratio {a:.4}, refinement drift {drift:.1e}"));
}

#[test]
fn criterion_12_occupation_formula() {
    let start = Instant::now();
    let model = GaussianModel::general(&[1.0]).unwrap();
    let cfg = PathConfig::default().with_paths(100_000).with_dt(1e-3).with_start(1.0);
    let r = occupation_check(&|a, _| (-a).exp(), &model, &cfg, &QuadratureGrid::default()).unwrap();
    let lhs = r.lhs.expect("decaying integrand");
    let exact = 1.0 - (-1.0f64).exp();
    let secs = start.elapsed().as_secs_f64();
    verdict(
        12,
        "occupation formula",
        r.agrees() && (r.rhs - exact).abs() <= 1e-8 && secs < 600.0,
        format!("lhs {:.5} ± {:.5}, rhs {:.8}, truncation {:.1e}, {secs:.0}s", lhs.mean, lhs.stderr, r.rhs, r.truncation_bound),
    );
}

#[test]
fn criterion_13_martingale_moments() {
    let model = GaussianModel::general(&[1.0]).unwrap();
    let h1 = HermiteSeries::basis(&model, 1, MultiIndex::new(vec![1]), 1.0).unwrap();
    let cfg = PathConfig::default().with_paths(100_000).with_dt(1e-3).with_start(8.0);
    let r = martingale_moment_check(&h1, 1.0, &cfg).unwrap();
    let constant = HermiteSeries::constant(&model, 1, 1.0);
    let z = martingale_moment_check(&constant, 0.0, &cfg.with_paths(10_000)).unwrap();
    let zero_ok = z.arrow.mean.abs() <= 3.0 * z.arrow.stderr && z.up.mean.abs() <= 3.0 * z.up.stderr;
    verdict(
        13,
        "martingale second moments",
        r.arrow_agrees() && r.up_agrees() && zero_ok,
        format!(
            "arrow {:.5} ± {:.5} vs {:.5}; up {:.5} ± {:.5} vs {:.5} (limit {:.5}, quarter-prefactor limit {:.5}); centered {:.1e}, {:.1e}",
            r.arrow.mean, r.arrow.stderr, r.arrow_prediction, r.up.mean, r.up.stderr, r.up_prediction, r.up_limit,
            r.up_limit_quarter, z.arrow.mean, z.up.mean
        ),
    );
}

#[test]
fn criterion_14_subordination() {
    let mut density = 0.0f64;
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        density = density.max(validate_density(t).unwrap().max_residual());
        for gamma in [0.25, 1.0, 4.0] {
            worst = worst.max(subordination_check(gamma, 0.0, t).unwrap().residual);
        }
    }
    verdict(
        14,
        "subordination",
        density <= DENSITY_TOLERANCE && worst <= 1e-8,
        format!("density residual {density:.1e}, max residual {worst:.1e}"),
    );
}

#[test]
fn criterion_15_lusin_construction() {
    let start = Instant::now();
    let model = GaussianModel::standard(2);
    let grid = QuadratureGrid::default();
    let mehler = Mehler::new(&model, &QuadratureGrid::with_order(16), MehlerMethod::Quadrature).unwrap();
    let tgrid = TGrid::log_spaced(1e-3, 1e2, 16).unwrap();
    let c_num = lusin_constant(q_total_integral(&KernelConfig::default()).unwrap().total);
    let mut rng = stream_rng(SEED, 15);
    let mut ok = true;
    let mut rows = Vec::new();
    for k in 0..5 {
        let f = HermiteSeries::random(&model, 6, &mut rng);
        let sample = sample_maximal(&f, &mehler, 5000, SEED + k, &tgrid).unwrap();
        for eps in [0.1, 0.01] {
            let out = lusin_from_sample(&f, &sample, eps, c_num, &grid).unwrap();
            let interp = out
                .anchors
                .points()
                .iter()
                .zip(out.anchors.values())
                .map(|(y, v)| (mcshane_extend(&out.anchors, y).unwrap() - v).abs())
                .fold(0.0, f64::max);
            let mut margin = f64::INFINITY;
            for _ in 0..10_000 {
                let (x0, x1) = pair(&mut rng, 2);
                let gap = (mcshane_extend(&out.anchors, &x0).unwrap() - mcshane_extend(&out.anchors, &x1).unwrap()).abs();
                let bound = out.lambda_used * model.cameron_martin_distance(&x0, &x1);
                margin = margin.min(bound * (1.0 + 1e-12) - gap);
            }
            ok &= interp == 0.0 && margin >= 0.0 && out.within_budget();
            rows.push(format!("f{k} eps {eps}: lambda {:.1}, mass {:.4}", out.lambda_used, out.complement_mass));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(15, "Lusin construction", ok && secs < 900.0, format!("{}; {secs:.0}s", rows.join("; ")));
}

#[test]
fn criterion_16_determinism() {
    let mut cfg = RunConfig::from_json(
        r#"{"suites": ["kernels", "orlicz", "lusin", "mc"],
            "samples": {"series": 2, "points": 3, "tuples": 10, "maximal": 50, "lusin": 20, "pairs": 10},
            "mc": {"paths": 200}}"#,
    )
    .unwrap();
    cfg.quadrature.line_panels = 0;
    let a = run(&cfg).unwrap();
    let b = run(&cfg).unwrap();
    let same = a.without_timestamp() == b.without_timestamp();
    let covered = [Suite::Kernels, Suite::Orlicz, Suite::Lusin, Suite::Mc].iter().all(|s| a.has_suite(*s));
    verdict(16, "determinism", same && covered, format!("{} checks, identical: {same}", a.summary.total));
}
