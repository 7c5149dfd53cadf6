//! Flat `key = value` (TOML) configuration covering every scenario parameter.
//!
//! ```toml
//! num_humans = 15
//! num_robots = 10
//! map_file = "store.map"   # or map_width / map_height / aisle_spacing
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use super::{MapSource, ScenarioParams};
use crate::world::{Grid, WorldError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parsing config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("map file {path}: {source}")]
    Map { path: PathBuf, source: WorldError },
    #[error("map_file cannot be combined with map_width/map_height/aisle_spacing")]
    ConflictingMap,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub map_file: Option<PathBuf>,
    pub map_width: Option<usize>,
    pub map_height: Option<usize>,
    pub aisle_spacing: Option<usize>,
    pub num_humans: Option<usize>,
    pub num_robots: Option<usize>,
    pub radio_range: Option<f64>,
    pub budget: Option<f64>,
    pub initial_offer: Option<f64>,
    pub offer_increment: Option<f64>,
    pub min_offer_lo: Option<f64>,
    pub min_offer_hi: Option<f64>,
    pub sigma: Option<f64>,
    pub robot_busy_prob: Option<f64>,
    pub requests_per_scenario: Option<usize>,
    pub demand_humans: Option<usize>,
    pub demand_robots: Option<usize>,
    pub time_step: Option<f64>,
    pub start_time: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub seed: Option<u64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Overlays the keys present in the file onto `base`. A relative
    /// `map_file` is resolved against `base_dir`.
    pub fn apply(&self, mut base: ScenarioParams, base_dir: &Path) -> Result<ScenarioParams, ConfigError> {
        let generated_keys =
            self.map_width.is_some() || self.map_height.is_some() || self.aisle_spacing.is_some();
        if let Some(file) = &self.map_file {
            if generated_keys {
                return Err(ConfigError::ConflictingMap);
            }
            base.map = MapSource::Fixed(load_map(&base_dir.join(file))?);
        } else if generated_keys {
            let (w, h, s) = match base.map {
                MapSource::Generated {
                    width,
                    height,
                    aisle_spacing,
                } => (width, height, aisle_spacing),
                MapSource::Fixed(ref g) => (g.width(), g.height(), 0),
            };
            base.map = MapSource::Generated {
                width: self.map_width.unwrap_or(w),
                height: self.map_height.unwrap_or(h),
                aisle_spacing: self.aisle_spacing.unwrap_or(s),
            };
        }

        macro_rules! overlay {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { base.$field = v; })*
            };
        }
        overlay!(
            num_humans,
            num_robots,
            radio_range,
            budget,
            initial_offer,
            offer_increment,
            min_offer_lo,
            min_offer_hi,
            sigma,
            robot_busy_prob,
            requests_per_scenario,
            demand_humans,
            demand_robots,
            time_step,
            start_time,
            seed
        );
        if let Some(a) = self.alpha {
            base.weights.alpha = a;
        }
        if let Some(b) = self.beta {
            base.weights.beta = b;
        }
        Ok(base)
    }
}

pub fn load_map(path: &Path) -> Result<Grid, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    text.parse().map_err(|source| ConfigError::Map {
        path: path.to_owned(),
        source,
    })
}
