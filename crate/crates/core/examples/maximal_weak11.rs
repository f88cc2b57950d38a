//! Empirical weak-(1,1) check for the Hopf maximal function sup_t H_t g.

use ou_lusin::lusin::{hopf_max, weak11_check};
use ou_lusin::mehler::{Mehler, MehlerMethod, PointwiseFunction};
use ou_lusin::model::GaussianModel;
use ou_lusin::quadrature::QuadratureGrid;
use ou_lusin::tgrid::TGrid;

fn main() -> ou_lusin::error::Result<()> {
    let model = GaussianModel::standard(1);
    let grid = QuadratureGrid { line_panels: 0, ..Default::default() };
    let mehler = Mehler::new(&model, &grid, MehlerMethod::Quadrature)?;
    let tgrid = TGrid::log_spaced(1e-3, 1e2, 16)?;
    let g = PointwiseFunction::nonneg_closure("|x|+1", |x| x[0].abs() + 1.0).with_kinks(vec![0.0]);

    for x in [0.0, 1.0, 3.0] {
        println!("sup_t H_t g({x}) = {:.6}", hopf_max(&g, &mehler, &[x], &tgrid)?);
    }

    println!("{:>6} {:>10} {:>10} {:>10}", "level", "measure", "stderr", "bound");
    for r in weak11_check(&g, &mehler, &[1.0, 2.0, 4.0, 8.0], 5000, 1, &tgrid, &QuadratureGrid::default())? {
        println!("{:>6} {:>10.5} {:>10.5} {:>10.5}", r.lambda, r.lhs, r.stderr, r.rhs);
    }
    Ok(())
}
