//! The K, U and Q kernels, the constant C_Q and the two kernel identities.

use ou_lusin::kernels::{
    kernel_table, q_total_integral, repr_identity_check, smoothing_identity_check, Averaging, KernelConfig,
};

fn main() -> ou_lusin::error::Result<()> {
    let cfg = KernelConfig::default();
    let q = q_total_integral(&cfg)?;
    println!("C_Q = {:.10} (pieces {:?}, error {:.1e})", q.total, q.pieces, q.error);

    println!("{:>10} {:>14} {:>14}", "s", "U(s,1)", "Q(s,1)");
    for (s, u, qv) in kernel_table().into_iter().step_by(8) {
        println!("{s:>10.4} {u:>14.8} {qv:>14.8}");
    }

    for mu in [0.1, 1.0, 10.0] {
        let r = repr_identity_check(mu, 1.0, &cfg)?;
        let a = smoothing_identity_check(mu, 1.0, Averaging::Smoothing, &cfg)?;
        let c = smoothing_identity_check(mu, 1.0, Averaging::Cesaro, &cfg)?;
        println!(
            "mu = {mu:>4}: representation {:.1e}, with A_s {:.3e}, with the Cesàro average {:.1e}",
            r.residual, a.residual, c.residual
        );
    }
    Ok(())
}
