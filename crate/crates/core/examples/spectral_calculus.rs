//! Hermite expansions and the functional calculus of the OU generator.

use ou_lusin::hermite::MultiIndex;
use ou_lusin::model::GaussianModel;
use ou_lusin::series::HermiteSeries;
use ou_lusin::spectral::{apply, check_commutation, dirichlet_pairing, eigenvalue, gradient, SpectralMultiplier};
use ou_lusin::stats::stream_rng;

fn main() -> ou_lusin::error::Result<()> {
    let model = GaussianModel::general(&[1.0, 2.0, 3.0])?;
    let f = HermiteSeries::random(&model, 5, &mut stream_rng(7, 0));
    println!("f: {} modes, degree {}, |f|_2 = {:.6}", f.len(), f.degree(), f.l2_norm());

    let idx = MultiIndex::new(vec![1, 0, 2]);
    println!("eigenvalue of {:?}: {}", idx.degrees(), eigenvalue(&idx, &model));

    let x = [0.3, -0.7, 1.1];
    for (name, m) in [
        ("T_1", SpectralMultiplier::Semigroup { t: 1.0 }),
        ("A_1", SpectralMultiplier::Smoothing { t: 1.0 }),
        ("sqrt(1 - L)", SpectralMultiplier::SqrtGen { alpha: 1.0 }),
        ("(1 - L)^-1", SpectralMultiplier::Resolvent { alpha: 1.0 }),
    ] {
        println!("{name:>12} f(x) = {:+.8}", apply(&f, m)?.eval(&x)?);
    }

    let grad = gradient(&f);
    println!("grad f(x) = {:?}", grad.iter().map(|g| g.eval(&x)).collect::<Result<Vec<_>, _>>()?);

    for axis in 0..3 {
        println!("commutation residual on axis {axis}: {:.1e}", check_commutation(&f, 0.5, 0.25, axis)?);
    }
    let g = HermiteSeries::random(&model, 5, &mut stream_rng(7, 1));
    let p = dirichlet_pairing(&f, &g, 0.5)?;
    println!("pairing: spectral {:+.10}, Dirichlet {:+.10}", p.spectral, p.dirichlet);
    Ok(())
}
