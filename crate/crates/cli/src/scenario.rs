//! Scenario configuration: the JSON schema the simulator runs from, its
//! validation rules, and conversion into core-library types.
//!
//! A scenario file pins everything a run needs — wall/window geometry,
//! anchor layout, signal model, sample count, and master seed — so that a
//! result table can be reproduced from the file plus the command line that
//! produced it. Command-line flags may override the seed, sample count,
//! SNR list, and mode; the manifest records the resolved values.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

use edgeloc_core::geometry::Point3;

/// Schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// What a run produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Position-error-bound map over nodes sampled in the building box.
    PebMap,
    /// Estimator Monte Carlo: synthetic ranges → NLS and LLS estimates.
    EstimatorMc,
    /// Exact-versus-approximate edge power ratio over an elevation grid.
    PowerRatioSweep,
}

impl Mode {
    /// Short name used in output paths and the manifest.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Mode::PebMap => "peb_map",
            Mode::EstimatorMc => "estimator_mc",
            Mode::PowerRatioSweep => "power_ratio_sweep",
        }
    }
}

/// Axis-aligned sampling box for node positions (meters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildingBox {
    /// Minimum corner `[x, y, z]`.
    pub min: [f64; 3],
    /// Maximum corner `[x, y, z]`.
    pub max: [f64; 3],
}

/// A complete simulation scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Config format version; must equal [`SCHEMA_VERSION`].
    pub schema_version: u32,
    /// What to run (subcommands override this).
    pub mode: Mode,
    /// Node sampling box; the wall is the plane y = 0, inside is y > 0.
    pub building_box: BuildingBox,
    /// Window opening height (meters).
    pub window_w: f64,
    /// Diffracting-edge span `[x1, x2]` along the wall (meters).
    pub edge_span: [f64; 2],
    /// Anchor positions `[x, y, z]`, all strictly outside (y < 0).
    pub anchors: Vec<[f64; 3]>,
    /// Effective (RMS) ranging bandwidth (Hz).
    pub bandwidth_hz: f64,
    /// Post-processing SNR grid (dB); each run sweeps all entries.
    pub snr_db_list: Vec<f64>,
    /// Monte Carlo sample count (nodes).
    pub n_samples: usize,
    /// Master seed; every sample derives its own independent RNG stream.
    pub seed: u64,
    /// Elevation grid for the power-ratio sweep (degrees). Defaults to
    /// 5°..85° in 5° steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_grid_deg: Option<Vec<f64>>,
    /// Anchor standoff from the lower edge in the power-ratio sweep
    /// (meters). Defaults to 30.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio_anchor_distance_m: Option<f64>,
}

impl Scenario {
    /// Loads and validates a scenario from a JSON file.
    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read scenario file {}", path.display()))?;
        let scenario: Scenario = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse scenario file {}", path.display()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    /// Checks every field against the rules the runners assume.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (this build reads {})",
                self.schema_version,
                SCHEMA_VERSION
            );
        }
        for (lo, hi, axis) in [
            (self.building_box.min[0], self.building_box.max[0], "x"),
            (self.building_box.min[1], self.building_box.max[1], "y"),
            (self.building_box.min[2], self.building_box.max[2], "z"),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                bail!("building_box {axis} range [{lo}, {hi}] must be finite and increasing");
            }
        }
        if self.building_box.min[1] < 0.0 {
            bail!("building_box must lie inside the wall (min y ≥ 0)");
        }
        if !(self.window_w > 0.0) || !self.window_w.is_finite() {
            bail!("window_w must be positive and finite");
        }
        let [x1, x2] = self.edge_span;
        if !(x1.is_finite() && x2.is_finite()) || x1 == x2 {
            bail!("edge_span endpoints must be finite and distinct");
        }
        if self.anchors.len() < 3 {
            bail!("at least 3 anchors are required, got {}", self.anchors.len());
        }
        for (i, a) in self.anchors.iter().enumerate() {
            if a.iter().any(|v| !v.is_finite()) {
                bail!("anchor {i} has non-finite coordinates");
            }
            if a[1] >= 0.0 {
                bail!("anchor {i} must be strictly outside the wall (y < 0), got y = {}", a[1]);
            }
        }
        if !(self.bandwidth_hz > 0.0) || !self.bandwidth_hz.is_finite() {
            bail!("bandwidth_hz must be positive and finite");
        }
        if self.snr_db_list.is_empty() {
            bail!("snr_db_list must not be empty");
        }
        if self.snr_db_list.iter().any(|s| !s.is_finite()) {
            bail!("snr_db_list entries must be finite");
        }
        if self.n_samples == 0 {
            bail!("n_samples must be positive");
        }
        if let Some(grid) = &self.theta_grid_deg {
            if grid.is_empty() {
                bail!("theta_grid_deg must not be empty when present");
            }
            for t in grid {
                if !(*t > 0.0 && *t < 90.0) {
                    bail!("theta_grid_deg entries must lie in (0, 90), got {t}");
                }
            }
        }
        if let Some(d) = self.ratio_anchor_distance_m {
            if !(d > 0.0) || !d.is_finite() {
                bail!("ratio_anchor_distance_m must be positive and finite");
            }
        }
        Ok(())
    }

    /// Anchor positions as points.
    #[must_use]
    pub fn anchor_points(&self) -> Vec<Point3> {
        self.anchors
            .iter()
            .map(|a| Point3::new(a[0], a[1], a[2]))
            .collect()
    }

    /// The elevation grid for the power-ratio sweep (degrees).
    #[must_use]
    pub fn theta_grid(&self) -> Vec<f64> {
        self.theta_grid_deg
            .clone()
            .unwrap_or_else(|| (1..=17).map(|i| f64::from(i) * 5.0).collect())
    }

    /// Anchor standoff for the power-ratio sweep (meters).
    #[must_use]
    pub fn ratio_anchor_distance(&self) -> f64 {
        self.ratio_anchor_distance_m.unwrap_or(30.0)
    }
}
