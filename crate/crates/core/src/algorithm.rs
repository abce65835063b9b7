//! Uniform entry point over the fill algorithms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fill_ff::{ff_fill_domain, DEFAULT_ARC_POINTS};
use crate::fill_pnp::{pnp_fill, FillResult, PnpConfig};
use crate::fill_skf::{skf_fill, DEFAULT_ATTEMPTS};
use crate::geometry::{BoundaryDiscretization, Domain};
use crate::spacing::SpacingField;
use crate::spatial::IndexKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    /// Advancing-front placement with a k-d tree index.
    Pnp,
    /// Advancing-front placement with a background grid index.
    PnpGrid,
    /// Two-dimensional row-by-row front fill.
    Ff,
    /// Poisson-disk sampling of the oriented bounding box.
    Skf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Pnp,
        Algorithm::PnpGrid,
        Algorithm::Ff,
        Algorithm::Skf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Pnp => "pnp",
            Algorithm::PnpGrid => "pnp-grid",
            Algorithm::Ff => "ff",
            Algorithm::Skf => "skf",
        }
    }

    /// Spatial index used by the algorithm.
    pub fn variant(&self) -> &'static str {
        match self {
            Algorithm::Pnp | Algorithm::Ff => "kdtree",
            Algorithm::PnpGrid | Algorithm::Skf => "grid",
        }
    }

    /// Fills `domain` given its boundary discretization.
    pub fn fill(
        &self,
        domain: &Domain,
        h: &SpacingField,
        boundary: &BoundaryDiscretization,
        seed: u64,
    ) -> Result<FillResult> {
        match self {
            Algorithm::Pnp | Algorithm::PnpGrid => {
                let index = if *self == Algorithm::Pnp {
                    IndexKind::KdTree
                } else {
                    IndexKind::Grid
                };
                let cfg = PnpConfig {
                    seed,
                    index,
                    ..PnpConfig::default()
                };
                pnp_fill(domain, h, &boundary.points, &cfg)
            }
            Algorithm::Ff => {
                if domain.dim() != 2 {
                    return Err(Error::Unsupported(format!(
                        "FF supports 2-D only, got dimension {}",
                        domain.dim()
                    )));
                }
                ff_fill_domain(domain, h, DEFAULT_ARC_POINTS, boundary)
            }
            Algorithm::Skf => skf_fill(domain, h, boundary, DEFAULT_ATTEMPTS, seed),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "pnp" | "pnp-kdtree" => Ok(Algorithm::Pnp),
            "pnp-grid" => Ok(Algorithm::PnpGrid),
            "ff" => Ok(Algorithm::Ff),
            "skf" => Ok(Algorithm::Skf),
            other => Err(Error::Parse(format!(
                "unknown algorithm '{other}', expected one of pnp, pnp-grid, ff, skf"
            ))),
        }
    }
}
