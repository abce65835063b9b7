//! Node generation for meshless discretizations of implicit domains.

pub mod algorithm;
pub mod bench;
pub mod error;
pub mod fill_ff;
pub mod fill_pnp;
pub mod fill_skf;
pub mod geometry;
pub mod nodefile;
pub mod points;
pub mod quality;
pub mod rbffd;
pub mod spacing;
pub mod spatial;

pub use algorithm::Algorithm;
pub use error::{Error, Result};
pub use fill_ff::{ff_fill_box, ff_fill_domain};
pub use fill_pnp::{pnp_fill, CandidateStrategy, FillResult, PnpConfig};
pub use fill_skf::{bridson_pds, pca_obb, skf_fill, OrientedBox};
pub use geometry::{discretize_boundary, BoundaryDiscretization, Domain};
pub use nodefile::{NodeFile, NodeHeader};
pub use points::Points;
pub use spacing::{GrayImage, SpacingField};
pub use spatial::{IndexKind, KdTree, SpatialIndex};
