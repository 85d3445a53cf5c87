//! HTTP front end and command-line plumbing for the matchup service.

pub mod server;

use std::path::PathBuf;
use std::str::FromStr;

use clap::Args;
use seam_core::{FieldGrid, ServiceConfig};

/// Grid resolution given as `NXxNY`, e.g. `200x200`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("grid `{s}` is not of the form NXxNY"))?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("grid `{s}`: {e}"));
        let spec = GridSpec {
            nx: parse(a)?,
            ny: parse(b)?,
        };
        if spec.nx < 2 || spec.ny < 2 {
            return Err(format!("grid `{s}` needs at least 2 nodes per axis"));
        }
        Ok(spec)
    }
}

/// Dataset options shared by every subcommand that loads data.
#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Directory of Statcast CSV exports.
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
    #[arg(long, default_value_t = 2019)]
    pub season: u16,
    /// Density grid resolution, NXxNY.
    #[arg(long, default_value = "200x200")]
    pub grid: GridSpec,
    /// Minimum season balls in play to be listed or pooled.
    #[arg(long, default_value_t = 50)]
    pub min_bip: usize,
    /// Where to cache aggregated profile tables.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
}

impl DataArgs {
    /// `SEAM_DATA_DIR`, `SEAM_SEASON`, `SEAM_GRID`, `SEAM_MIN_BIP` and
    /// `SEAM_CACHE_DIR` take precedence over the command line.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), String> {
        if let Some(v) = var("SEAM_DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = var("SEAM_SEASON") {
            self.season = v.parse().map_err(|e| format!("SEAM_SEASON: {e}"))?;
        }
        if let Some(v) = var("SEAM_GRID") {
            self.grid = v.parse()?;
        }
        if let Some(v) = var("SEAM_MIN_BIP") {
            self.min_bip = v.parse().map_err(|e| format!("SEAM_MIN_BIP: {e}"))?;
        }
        if let Some(v) = var("SEAM_CACHE_DIR") {
            self.cache_dir = Some(v.into());
        }
        Ok(())
    }

    pub fn service_config(&self) -> Result<ServiceConfig, seam_core::SeamError> {
        Ok(ServiceConfig {
            data_dir: self.data_dir.clone(),
            season: self.season,
            grid: FieldGrid::with_resolution(self.grid.nx, self.grid.ny)?,
            min_bip: self.min_bip,
            cache_dir: self.cache_dir.clone(),
            ..ServiceConfig::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parses() {
        assert_eq!("200x150".parse::<GridSpec>(), Ok(GridSpec { nx: 200, ny: 150 }));
        assert!("200".parse::<GridSpec>().is_err());
        assert!("1x5".parse::<GridSpec>().is_err());
        assert!("ax5".parse::<GridSpec>().is_err());
    }

    #[test]
    fn environment_overrides_flags() {
        let mut args = DataArgs {
            data_dir: "flag".into(),
            season: 2019,
            grid: GridSpec { nx: 200, ny: 200 },
            min_bip: 50,
            cache_dir: None,
        };
        let env = |k: &str| match k {
            "SEAM_DATA_DIR" => Some("env".to_string()),
            "SEAM_GRID" => Some("50x40".to_string()),
            "SEAM_MIN_BIP" => Some("7".to_string()),
            _ => None,
        };
        args.apply_env(env).unwrap();
        assert_eq!(args.data_dir, PathBuf::from("env"));
        assert_eq!(args.grid, GridSpec { nx: 50, ny: 40 });
        assert_eq!(args.min_bip, 7);
        assert_eq!(args.season, 2019);
        assert!(args
            .apply_env(|k| (k == "SEAM_SEASON").then(|| "x".into()))
            .is_err());
    }
}
