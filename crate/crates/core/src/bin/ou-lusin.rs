use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ou_lusin::harness::plot::{write_plot_data, PlotKind};
use ou_lusin::harness::report::{VerificationReport, REPORT_FILE};
use ou_lusin::harness::{run, RunConfig, Suite};

/// Output directory override; `--out` still wins.
const OUT_ENV: &str = "OU_LUSIN_OUT";

#[derive(Parser)]
#[command(name = "ou-lusin", version, about = "Run verification suites and emit reports")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run suites (those in the config when none are named) and write report.json.
    Verify { suites: Vec<String> },
    /// Summarize an existing report.json.
    Report,
    /// Write CSV tables derived from report.json (all kinds when none are named).
    PlotData { kinds: Vec<String> },
}

enum Failure {
    Usage(String),
    Checks,
}

fn output_dir(cli: &Cli, cfg: &RunConfig) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.output.clone())
}

fn load_report(dir: &std::path::Path) -> Result<VerificationReport, Failure> {
    VerificationReport::load(&dir.join(REPORT_FILE)).map_err(|e| Failure::Usage(e.to_string()))
}

fn summarize(report: &VerificationReport) {
    for c in &report.checks {
        let value = c.value.map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into());
        println!("{:<8} {:<28} {:<12} {}", c.suite.name(), c.id, format!("{:?}", c.status).to_lowercase(), value);
    }
    let s = &report.summary;
    println!("{} checks: {} passed, {} failed, {} inconclusive", s.total, s.passed, s.failed, s.inconclusive);
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    let usage = |e: ou_lusin::error::Error| Failure::Usage(e.to_string());
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    let dir = output_dir(cli, &cfg);
    cfg.output = dir.clone();
    match &cli.command {
        Command::Verify { suites } => {
            if !suites.is_empty() {
                cfg.suites = suites.iter().map(|s| s.parse::<Suite>()).collect::<Result<_, _>>().map_err(usage)?;
            }
            let report = run(&cfg).map_err(usage)?;
            let path = report.write(&dir).map_err(usage)?;
            summarize(&report);
            println!("report: {}", path.display());
            if report.failed() {
                return Err(Failure::Checks);
            }
        }
        Command::Report => {
            let report = load_report(&dir)?;
            summarize(&report);
            if report.failed() {
                return Err(Failure::Checks);
            }
        }
        Command::PlotData { kinds } => {
            let report = load_report(&dir)?;
            let kinds: Vec<PlotKind> = if kinds.is_empty() {
                PlotKind::ALL.into_iter().filter(|k| report.has_suite(k.suite())).collect()
            } else {
                kinds.iter().map(|k| k.parse()).collect::<Result<_, _>>().map_err(usage)?
            };
            for k in kinds {
                println!("{}", write_plot_data(&report, k, &dir).map_err(usage)?.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
