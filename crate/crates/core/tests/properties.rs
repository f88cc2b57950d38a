use ou_lusin::harness::RunConfig;
use ou_lusin::hermite::MultiIndex;
use ou_lusin::lusin::{mcshane_extend, AnchorSet};
use ou_lusin::mc::survival;
use ou_lusin::mehler::PointwiseFunction;
use ou_lusin::model::GaussianModel;
use ou_lusin::orlicz::{luxemburg_norm, phi};
use ou_lusin::quadrature::QuadratureGrid;
use ou_lusin::series::HermiteSeries;
use ou_lusin::spectral::{apply, SpectralMultiplier};
use ou_lusin::stats::stream_rng;
use ou_lusin::tgrid::TGrid;
use proptest::prelude::*;

fn model_strategy() -> impl Strategy<Value = GaussianModel> {
    prop_oneof![
        (1usize..=3).prop_map(GaussianModel::standard),
        prop::collection::vec(0.2f64..4.0, 1..=3).prop_map(|mut r| {
            r.sort_by(f64::total_cmp);
            GaussianModel::general(&r).unwrap()
        }),
    ]
}

fn series_strategy(cap: usize) -> impl Strategy<Value = HermiteSeries> {
    (model_strategy(), any::<u64>()).prop_map(move |(m, seed)| HermiteSeries::random(&m, cap, &mut stream_rng(seed, 0)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_l2_norm_matches_coefficients(f in series_strategy(5)) {
        let grid = QuadratureGrid { line_panels: 0, ..QuadratureGrid::with_order(12) };
        let nodes = grid.nodes(f.model(), &[]).unwrap();
        let sq: Vec<f64> = nodes.values(&|x: &[f64]| f.eval(x).unwrap().powi(2));
        let l2 = nodes.sum(&sq).sqrt();
        prop_assert!((l2 - f.l2_norm()).abs() <= 1e-10 * (1.0 + f.l2_norm()));
    }

    #[test]
    fn semigroup_contracts_and_composes(f in series_strategy(6), t in 0.0f64..4.0, s in 0.0f64..4.0) {
        let tf = apply(&f, SpectralMultiplier::Semigroup { t }).unwrap();
        prop_assert!(tf.l2_norm() <= f.l2_norm() * (1.0 + 1e-14));
        let two = apply(&tf, SpectralMultiplier::Semigroup { t: s }).unwrap();
        let one = apply(&f, SpectralMultiplier::Semigroup { t: t + s }).unwrap();
        prop_assert!(two.max_coeff_diff(&one).unwrap() <= 1e-14);
    }

    #[test]
    fn smoothing_preserves_mean(f in series_strategy(6), t in 0.01f64..10.0) {
        let at = apply(&f, SpectralMultiplier::Smoothing { t }).unwrap();
        prop_assert!((at.mean() - f.mean()).abs() <= 1e-14);
        prop_assert!(at.l2_norm() <= f.l2_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn luxemburg_norm_is_homogeneous(seed in any::<u64>(), c in -5.0f64..5.0) {
        prop_assume!(c.abs() > 1e-3);
        let m = GaussianModel::standard(1);
        let f = HermiteSeries::random(&m, 6, &mut stream_rng(seed, 1));
        let grid = QuadratureGrid::default();
        let a = luxemburg_norm(&PointwiseFunction::series(&f.scaled(c)), &m, &grid).unwrap().value;
        let b = luxemburg_norm(&PointwiseFunction::series(&f), &m, &grid).unwrap().value;
        prop_assert!((a - c.abs() * b).abs() <= 1e-7 * a);
    }

    #[test]
    fn phi_is_increasing_and_convex(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(phi(lo).unwrap() <= phi(hi).unwrap());
        prop_assert!(phi(0.5 * (a + b)).unwrap() <= 0.5 * (phi(a).unwrap() + phi(b).unwrap()) + 1e-12);
    }

    #[test]
    fn survival_is_a_decreasing_probability(n in 0.01f64..5.0, t in 0.0f64..50.0, dt in 0.0f64..5.0) {
        let s = survival(n, t);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert!(survival(n, t + dt) <= s + 1e-15);
    }

    #[test]
    fn mcshane_extension_is_lipschitz_and_interpolates(
        pts in prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, -2.0f64..2.0), 1..40),
        lambda in 0.1f64..5.0,
        probe in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 2),
    ) {
        let m = GaussianModel::standard(2);
        let anchors = AnchorSet::certified(
            &m,
            pts.iter().map(|p| vec![p.0, p.1]).collect(),
            pts.iter().map(|p| p.2).collect(),
            lambda,
        ).unwrap();
        prop_assert!(!anchors.is_empty());
        prop_assert_eq!(anchors.len() + anchors.removed, pts.len());
        for (y, v) in anchors.points().iter().zip(anchors.values()) {
            prop_assert_eq!(mcshane_extend(&anchors, y).unwrap(), *v);
        }
        let (x0, x1) = (vec![probe[0].0, probe[0].1], vec![probe[1].0, probe[1].1]);
        let gap = (mcshane_extend(&anchors, &x0).unwrap() - mcshane_extend(&anchors, &x1).unwrap()).abs();
        prop_assert!(gap <= lambda * m.cameron_martin_distance(&x0, &x1) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn tgrid_round_trips(lo in -4i32..0, span in 1i32..6, per_decade in 16usize..80) {
        let g = TGrid::log_spaced(10f64.powi(lo), 10f64.powi(lo + span), per_decade).unwrap();
        let back: TGrid = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn run_config_round_trips(seed in any::<u64>(), cap in 1usize..=12, paths in 2usize..100_000) {
        let mut cfg = RunConfig::default().with_seed(seed);
        cfg.degree_cap = cap;
        cfg.mc.paths = paths;
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn basis_functions_are_eigenfunctions(k in 0usize..8, t in 0.0f64..3.0, rate in 0.2f64..3.0) {
        let m = GaussianModel::general(&[rate]).unwrap();
        let h = HermiteSeries::basis(&m, 8, MultiIndex::new(vec![k]), 1.0).unwrap();
        let th = apply(&h, SpectralMultiplier::Semigroup { t }).unwrap();
        prop_assert!((th.coeff(&MultiIndex::new(vec![k])) - (-(k as f64) * rate * t).exp()).abs() <= 1e-15);
    }
}
