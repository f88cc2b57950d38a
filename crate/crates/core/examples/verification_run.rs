//! A programmatic verification run with CSV plot data, as the CLI does it.

use ou_lusin::harness::{run, write_plot_data, PlotKind, RunConfig};

fn main() -> ou_lusin::error::Result<()> {
    let cfg = RunConfig::from_json(
        r#"{
            "suites": ["kernels", "spectral", "meyer"],
            "samples": { "series": 3 },
            "output": "target/verification-example"
        }"#,
    )?;
    let report = run(&cfg)?;
    for c in &report.checks {
        println!("{:<8} {:<28} {:?}", c.suite, c.id, c.status);
    }
    println!("{:?}", report.summary);
    let path = report.write(&cfg.output)?;
    println!("wrote {}", path.display());
    for kind in [PlotKind::KernelCurves, PlotKind::RatioTables] {
        println!("wrote {}", write_plot_data(&report, kind, &cfg.output)?.display());
    }
    Ok(())
}
