//! Monte Carlo on the space-time process (B, X): hitting law, occupation
//! formula and the second moments of the two martingale parts.

use ou_lusin::hermite::MultiIndex;
use ou_lusin::mc::{hitting_cdf, martingale_ladder, occupation_check, sample_hitting, Crossing, PathConfig};
use ou_lusin::model::GaussianModel;
use ou_lusin::quadrature::QuadratureGrid;
use ou_lusin::series::HermiteSeries;

fn main() -> ou_lusin::error::Result<()> {
    let cfg = PathConfig::default().with_paths(4000).with_dt(2e-3);

    let hit = sample_hitting(&cfg.with_horizon(2.0), Crossing::Bridge)?;
    for t in [0.5, 1.0, 2.0] {
        let e = hit.cdf(t);
        println!("P(tau <= {t}) = {:.4} ± {:.4} (exact {:.4})", e.value, e.stderr, hitting_cdf(1.0, t));
    }

    let model = GaussianModel::general(&[1.0])?;
    let occ = occupation_check(&|a, _| (-a).exp(), &model, &cfg, &QuadratureGrid::default())?;
    if let Some(lhs) = &occ.lhs {
        println!("occupation: {:.4} ± {:.4} vs {:.6}", lhs.mean, lhs.stderr, occ.rhs);
    }

    let h1 = HermiteSeries::basis(&model, 1, MultiIndex::new(vec![1]), 1.0)?;
    println!("{:>4} {:>16} {:>10} {:>16} {:>10}", "N", "E M_arrow^2", "predicted", "E M_up^2", "predicted");
    for r in martingale_ladder(&h1, 1.0, &cfg, &[1.0, 2.0, 4.0])? {
        println!(
            "{:>4} {:>8.4} ± {:.4} {:>10.4} {:>8.4} ± {:.4} {:>10.4}",
            r.start_level, r.arrow.mean, r.arrow.stderr, r.arrow_prediction, r.up.mean, r.up.stderr, r.up_prediction
        );
    }
    Ok(())
}
