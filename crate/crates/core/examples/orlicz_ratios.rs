//! Luxemburg norms in L log L and the Meyer and Poincaré ratios.

use std::f64::consts::E;

use ou_lusin::hermite::MultiIndex;
use ou_lusin::mehler::PointwiseFunction;
use ou_lusin::model::GaussianModel;
use ou_lusin::orlicz::{l1_norm, luxemburg_norm, meyer_forward_check, meyer_reverse_check, poincare_check};
use ou_lusin::quadrature::QuadratureGrid;
use ou_lusin::series::HermiteSeries;
use ou_lusin::stats::stream_rng;

fn main() -> ou_lusin::error::Result<()> {
    let model = GaussianModel::standard(1);
    let grid = QuadratureGrid::default();

    let one = PointwiseFunction::closure("1", |_| 1.0);
    println!("|1|_LlogL = {:.12} (1/(e-1) = {:.12})", luxemburg_norm(&one, &model, &grid)?.value, 1.0 / (E - 1.0));
    let abs_x = PointwiseFunction::closure("|x|", |x| x[0].abs()).with_kinks(vec![0.0]);
    println!("|x|: L1 {:.8}, LlogL {:.8}", l1_norm(&abs_x, &model, &grid)?.value, luxemburg_norm(&abs_x, &model, &grid)?.value);

    let h1 = HermiteSeries::basis(&model, 1, MultiIndex::new(vec![1]), 1.0)?;
    println!("forward ratio of h_1: {:.8}", meyer_forward_check(&h1, 0.0, &grid)?.ratio);

    let mut rng = stream_rng(11, 0);
    println!("{:>4} {:>10} {:>10} {:>10}", "k", "forward", "reverse", "poincare");
    for k in 0..6 {
        let f = HermiteSeries::random(&model, 6, &mut rng);
        println!(
            "{k:>4} {:>10.5} {:>10.5} {:>10.5}",
            meyer_forward_check(&f, 1.0, &grid)?.ratio,
            meyer_reverse_check(&f, 1.0, &grid)?.ratio,
            poincare_check(&f.centered(), &grid)?.ratio
        );
    }
    Ok(())
}
