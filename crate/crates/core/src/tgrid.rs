//! Log-spaced time grids used to discretize suprema over `t > 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points `t_min · 2^{j/k}` covering `[t_min, t_max]`.
///
/// The grid is aligned with doubling: `2 t_j = t_{j+k}`, which lets
/// `A_t` be read off a cumulative integral at grid points only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TGridSpec", into = "TGridSpec")]
pub struct TGrid {
    t_min: f64,
    t_max: f64,
    per_octave: usize,
}

/// Serialized form: `{ "t_min": 1e-4, "t_max": 1e3, "per_decade": 16 }`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGridSpec {
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
}

pub const MIN_PER_DECADE: usize = 16;

impl TGrid {
    pub fn log_spaced(t_min: f64, t_max: f64, per_decade: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) {
            return Err(Error::Config(format!("bad t-grid range [{t_min}, {t_max}]")));
        }
        if per_decade < MIN_PER_DECADE {
            return Err(Error::Config(format!(
                "t-grid needs at least {MIN_PER_DECADE} points per decade, got {per_decade}"
            )));
        }
        let per_octave = (per_decade as f64 * std::f64::consts::LOG10_2).ceil() as usize;
        Ok(TGrid { t_min, t_max, per_octave })
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn per_octave(&self) -> usize {
        self.per_octave
    }

    pub fn per_decade(&self) -> f64 {
        self.per_octave as f64 / std::f64::consts::LOG10_2
    }

    /// Twice as many points per octave; a superset of `self`.
    pub fn refined(&self) -> Self {
        TGrid { per_octave: 2 * self.per_octave, ..*self }
    }

    pub fn len(&self) -> usize {
        let span = (self.t_max / self.t_min).log2() * self.per_octave as f64;
        (span - 1e-9).ceil() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, j: usize) -> f64 {
        self.t_min * (j as f64 / self.per_octave as f64).exp2()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.point(j)).collect()
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.point(self.len() - 1)
    }
}

impl TryFrom<TGridSpec> for TGrid {
    type Error = Error;

    fn try_from(s: TGridSpec) -> Result<Self> {
        TGrid::log_spaced(s.t_min, s.t_max, s.per_decade)
    }
}

impl From<TGrid> for TGridSpec {
    fn from(g: TGrid) -> Self {
        TGridSpec { t_min: g.t_min, t_max: g.t_max, per_decade: (g.per_decade() + 1e-9).floor() as usize }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_alignment() {
        let g = TGrid::log_spaced(1e-4, 1e3, 16).unwrap();
        assert_eq!(g.per_octave(), 5);
        assert!((g.point(5) - 2e-4).abs() < 1e-18);
        assert!(g.point(g.len() - 1) >= 1e3);
        assert!(g.point(g.len() - 2) < 1e3);
        assert_eq!(TGrid::log_spaced(1e-4, 1e3, 64).unwrap().per_octave(), 20);
    }

    #[test]
    fn serde_round_trip() {
        for pd in [16, 17, 20, 64, 100] {
            let g = TGrid::log_spaced(1e-3, 10.0, pd).unwrap();
            let back: TGrid = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
            assert_eq!(g, back);
        }
    }

    #[test]
    fn refinement_is_superset() {
        let g = TGrid::log_spaced(0.01, 10.0, 16).unwrap();
        let r = g.refined();
        for j in 0..g.len() {
            assert!((g.point(j) - r.point(2 * j)).abs() < 1e-15 * g.point(j));
        }
    }

    #[test]
    fn rejects_sparse_grids() {
        assert!(TGrid::log_spaced(1e-3, 1.0, 8).is_err());
        assert!(TGrid::log_spaced(1.0, 1.0, 16).is_err());
        assert!(serde_json::from_str::<TGrid>(r#"{"t_min":0.001,"t_max":10,"per_decade":20}"#).is_ok());
    }
}
