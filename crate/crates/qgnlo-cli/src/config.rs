//! Run configuration shared by the subcommands.

use anyhow::{bail, Result};
use clap::ValueEnum;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sos,
    Dl,
    Both,
}

impl Method {
    pub fn wants_sos(self) -> bool {
        matches!(self, Method::Sos | Method::Both)
    }

    pub fn wants_dl(self) -> bool {
        matches!(self, Method::Dl | Method::Both)
    }
}

/// Per-run numerical settings echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub method: Method,
    /// Excited states kept in the perturbation sums.
    pub modes: usize,
    /// Samples per edge for all quadratures (odd).
    pub grid_points: usize,
}

impl RunConfig {
    pub fn new(method: Method, modes: usize, grid_points: usize) -> Result<Self> {
        if modes < 1 {
            bail!("--modes must be at least 1");
        }
        if grid_points < 3 || grid_points.is_multiple_of(2) {
            bail!("--grid must be an odd point count >= 3 (even Simpson panels)");
        }
        Ok(Self {
            method,
            modes,
            grid_points,
        })
    }
}

/// Worker count: `QGNLO_WORKERS` when set, otherwise the rayon default.
pub fn worker_count() -> Option<usize> {
    std::env::var("QGNLO_WORKERS")
        .ok()
        .and_then(|v| v.parse().ok())
}
