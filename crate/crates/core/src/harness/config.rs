//! Run configuration, read from JSON with unknown keys rejected.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelConfig;
use crate::mc::PathConfig;
use crate::model::{Convention, GaussianModel, ModelSpec};
use crate::quadrature::QuadratureGrid;
use crate::tgrid::TGrid;

/// Suites in their canonical execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Kernels,
    Spectral,
    Mehler,
    Orlicz,
    Meyer,
    Lusin,
    Mc,
}

impl Suite {
    pub const ALL: [Suite; 7] =
        [Suite::Kernels, Suite::Spectral, Suite::Mehler, Suite::Orlicz, Suite::Meyer, Suite::Lusin, Suite::Mc];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Kernels => "kernels",
            Suite::Spectral => "spectral",
            Suite::Mehler => "mehler",
            Suite::Orlicz => "orlicz",
            Suite::Meyer => "meyer",
            Suite::Lusin => "lusin",
            Suite::Mc => "mc",
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`; expected one of kernels, spectral, mehler, orlicz, meyer, lusin, mc")))
    }
}

/// Path-simulation block; the seed lives at the top level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McBlock {
    pub dt: f64,
    pub paths: usize,
    pub horizon: f64,
}

impl Default for McBlock {
    fn default() -> Self {
        McBlock { dt: 2e-3, paths: 2000, horizon: 1e8 }
    }
}

/// Sample sizes for the randomized sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleBlock {
    /// Random series per family sweep.
    pub series: usize,
    /// Evaluation points per series.
    pub points: usize,
    /// Random tuples for the convexity and Lipschitz checks.
    pub tuples: usize,
    /// Sample points for maximal-function estimates.
    pub maximal: usize,
    /// Sample points for the Lusin construction.
    pub lusin: usize,
    /// Random pairs for Lipschitz checks.
    pub pairs: usize,
}

impl Default for SampleBlock {
    fn default() -> Self {
        SampleBlock { series: 4, points: 10, tuples: 100, maximal: 1000, lusin: 300, pairs: 200 }
    }
}

fn default_model() -> ModelSpec {
    ModelSpec { convention: Convention::Standard, dimension: Some(1), rates: None, preset: None }
}

fn default_tgrid() -> TGrid {
    TGrid::log_spaced(1e-3, 1e2, 16).expect("valid default grid")
}

fn default_output() -> PathBuf {
    PathBuf::from("ou-lusin-out")
}

/// Everything a run needs; all randomness derives from `seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    #[serde(default = "RunConfig::default_cap")]
    pub degree_cap: usize,
    #[serde(default)]
    pub quadrature: QuadratureGrid,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default = "default_tgrid")]
    pub tgrid: TGrid,
    #[serde(default)]
    pub mc: McBlock,
    #[serde(default)]
    pub samples: SampleBlock,
    #[serde(default = "RunConfig::default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub suites: Vec<Suite>,
    #[serde(default = "RunConfig::default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl RunConfig {
    fn default_cap() -> usize {
        6
    }

    fn default_seed() -> u64 {
        0x5eed
    }

    fn default_epsilons() -> Vec<f64> {
        vec![0.1, 0.01]
    }

    /// Parses and validates; errors carry the line and column of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.model()?;
        self.quadrature.validate()?;
        self.kernel.validate()?;
        self.path_config(1.0).validate()?;
        if self.degree_cap == 0 || self.degree_cap > 12 {
            return Err(Error::Config(format!("degree_cap must lie in 1..=12, got {}", self.degree_cap)));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::Config("every ε must lie in (0, 1)".into()));
        }
        let s = &self.samples;
        if s.series == 0 || s.points == 0 || s.tuples == 0 || s.maximal == 0 || s.lusin == 0 || s.pairs == 0 {
            return Err(Error::Config("sample sizes must be positive".into()));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<GaussianModel> {
        GaussianModel::try_from(self.model.clone()).map_err(|e| Error::Config(format!("model: {e}")))
    }

    pub fn path_config(&self, start_level: f64) -> PathConfig {
        PathConfig {
            dt: self.mc.dt,
            horizon: self.mc.horizon,
            paths: self.mc.paths,
            seed: self.seed,
            start_level,
        }
    }

    /// Selected suites, deduplicated, in canonical order.
    pub fn ordered_suites(&self) -> Vec<Suite> {
        let mut s = self.suites.clone();
        s.sort();
        s.dedup();
        s
    }

    /// The `--seed` override.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
