//! Pointwise semigroup and smoothing values through the Mehler formula, and
//! the pointwise bound |A_t f - f| <= C sqrt(t) sup_s A_s|sqrt(-L) f|.

use ou_lusin::kernels::{pointwise_bound_check, q_total_integral, KernelConfig};
use ou_lusin::mehler::{Mehler, MehlerMethod, PointwiseFunction};
use ou_lusin::model::GaussianModel;
use ou_lusin::quadrature::QuadratureGrid;
use ou_lusin::series::HermiteSeries;
use ou_lusin::spectral::{apply, SpectralMultiplier};
use ou_lusin::stats::stream_rng;
use ou_lusin::tgrid::TGrid;

fn main() -> ou_lusin::error::Result<()> {
    let model = GaussianModel::standard(2);
    let mehler = Mehler::new(&model, &QuadratureGrid::with_order(24), MehlerMethod::Quadrature)?;
    let f = HermiteSeries::random(&model, 6, &mut stream_rng(3, 0));
    let pf = PointwiseFunction::series(&f);
    let x = [0.8, -1.2];

    for t in [0.01, 0.1, 1.0, 10.0] {
        let spectral = apply(&f, SpectralMultiplier::Semigroup { t })?.eval(&x)?;
        let quad = mehler.apply(&pf, t, &x)?.value;
        println!("t = {t:>5}: T_t f = {spectral:+.12} (Mehler {quad:+.12})");
    }

    // a non-polynomial input
    let bump = PointwiseFunction::nonneg_closure("bump", |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
    println!("A_1 bump(x) = {:.8}", mehler.smoothing(&bump, 1.0, &x)?);

    let c_q = q_total_integral(&KernelConfig::default())?.total;
    let grid = TGrid::log_spaced(1e-3, 1e2, 16)?;
    let slacks = pointwise_bound_check(&f, &mehler, &x, &grid, c_q)?;
    let worst = slacks.iter().map(|s| s.slack() / s.rhs).fold(f64::INFINITY, f64::min);
    println!("pointwise bound over {} grid points: min relative slack {worst:.3}", slacks.len());
    Ok(())
}
