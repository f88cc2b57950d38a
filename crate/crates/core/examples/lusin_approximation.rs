//! Lipschitz approximation of a Hermite series off a set of small Gaussian mass.

use ou_lusin::kernels::{q_total_integral, KernelConfig};
use ou_lusin::lusin::{lusin_constant, lusin_from_sample, mcshane_extend, sample_maximal};
use ou_lusin::mehler::{Mehler, MehlerMethod};
use ou_lusin::model::GaussianModel;
use ou_lusin::quadrature::QuadratureGrid;
use ou_lusin::series::HermiteSeries;
use ou_lusin::stats::stream_rng;
use ou_lusin::tgrid::TGrid;

fn main() -> ou_lusin::error::Result<()> {
    let model = GaussianModel::standard(2);
    let mehler = Mehler::new(&model, &QuadratureGrid::with_order(16), MehlerMethod::Quadrature)?;
    let f = HermiteSeries::random(&model, 6, &mut stream_rng(5, 0));
    let c_num = lusin_constant(q_total_integral(&KernelConfig::default())?.total);
    let sample = sample_maximal(&f, &mehler, 1000, 5, &TGrid::log_spaced(1e-3, 1e2, 16)?)?;

    for eps in [0.5, 0.1, 0.01] {
        let out = lusin_from_sample(&f, &sample, eps, c_num, &QuadratureGrid::default())?;
        println!(
            "eps {eps:<5} lambda {:>9.2} complement {:.4} ± {:.4}  anchors {} (removed {})",
            out.lambda_used,
            out.complement_mass,
            out.stderr,
            out.anchors.len(),
            out.anchors.removed
        );
        // exact on anchors; between anchors g is the upper envelope inf_y f(y) + lambda d(x, y)
        let y = &out.anchors.points()[0];
        let x = [0.25, -0.5];
        println!(
            "    anchor: g = {:+.6}, f = {:+.6};  off-sample: g = {:+.6}, f = {:+.6}",
            mcshane_extend(&out.anchors, y)?,
            f.eval(y)?,
            mcshane_extend(&out.anchors, &x)?,
            f.eval(&x)?
        );
    }
    Ok(())
}
