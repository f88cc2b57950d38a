//! e^{-t sqrt(gamma)} as the Laplace transform of the one-sided 1/2-stable density.

use ou_lusin::mc::{subordination_check, subordination_density, validate_density};

fn main() -> ou_lusin::error::Result<()> {
    for t in [0.5, 1.0, 2.0] {
        let d = validate_density(t)?;
        println!("t = {t}: mass residual {:.1e}, peak density {:.6}", d.mass_residual, subordination_density(t, t * t / 6.0));
        for gamma in [0.25, 1.0, 4.0] {
            let c = subordination_check(gamma, 0.0, t)?;
            println!("  gamma {gamma:<5} {:.12} vs {:.12}", c.lhs, c.rhs);
        }
    }
    Ok(())
}
