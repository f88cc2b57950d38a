//! Gauss-Hermite tensor quadrature against product Gaussian measures.

use ou_lusin::mehler::PointwiseFunction;
use ou_lusin::model::GaussianModel;
use ou_lusin::orlicz::l1_norm;
use ou_lusin::quadrature::{integrate, QuadratureGrid};

fn main() -> ou_lusin::error::Result<()> {
    let std2 = GaussianModel::standard(2);
    let general = GaussianModel::general(&[0.5, 2.0])?;
    for order in [4, 8, 16, 32] {
        let grid = QuadratureGrid { line_panels: 0, ..QuadratureGrid::with_order(order) };
        let m4 = integrate(&|x: &[f64]| x[0].powi(4) * x[1].powi(2), &std2, &grid)?.value;
        let cos = integrate(&|x: &[f64]| (x[0] + x[1]).cos(), &std2, &grid)?.value;
        println!("order {order:>2}: E[x^4 y^2] = {m4:.12} (3), E[cos(x+y)] = {cos:.12} ({:.12})", (-1.0f64).exp());
    }
    // variances q_i = 1/(2 lambda_i) in the general convention
    let grid = QuadratureGrid::with_order(24);
    for axis in 0..2 {
        let v = integrate(&|x: &[f64]| x[axis] * x[axis], &general, &grid)?.value;
        println!("general model, axis {axis}: E[x^2] = {v:.12}");
    }
    // kinks declared on a function switch d = 1 integrals to the composite line rule
    let std1 = GaussianModel::standard(1);
    let abs = PointwiseFunction::closure("|x|", |x| x[0].abs()).with_kinks(vec![0.0]);
    let with = l1_norm(&abs, &std1, &QuadratureGrid::default())?.value;
    let plain = integrate(&|x: &[f64]| x[0].abs(), &std1, &grid)?.value;
    println!("E|x| = {with:.12} (line rule), {plain:.12} (plain order 24), sqrt(2/pi) = {:.12}", (2.0 / std::f64::consts::PI).sqrt());
    Ok(())
}
