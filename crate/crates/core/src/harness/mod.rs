//! Verification harness: configuration, suites, reports and plot data.

pub mod config;
pub mod plot;
pub mod report;
pub mod suites;

pub use config::{RunConfig, Suite};
pub use plot::{write_plot_data, PlotKind};
pub use report::{CheckRecord, VerificationReport};
pub use suites::run;
