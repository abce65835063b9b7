//! Incremental exact nearest-neighbour structures.
//!
//! Both realizations return the exact closest stored point; among points at
//! the same distance the one inserted first wins.

mod boxtree;
mod grid;
mod kdtree;

pub use boxtree::BoxTree;
pub use grid::BackgroundGrid;
pub use kdtree::KdTree;

use crate::error::Result;
use crate::points::Points;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    /// Insertion index of the point.
    pub index: usize,
    pub distance: f64,
}

/// Contract shared by the search structures used by the fill algorithms.
pub trait SpatialIndex {
    fn dim(&self) -> usize;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores `p` and returns its insertion index.
    fn insert(&mut self, p: &[f64]) -> Result<usize>;

    /// Exact nearest stored point. Errors on an empty index.
    fn nearest(&self, q: &[f64]) -> Result<Neighbor>;

    fn point(&self, index: usize) -> &[f64];
}

/// Which search structure backs a fill.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    #[default]
    KdTree,
    Grid,
}

/// Builds a k-d tree over `points`; further points may be inserted later.
pub fn kdtree_init(points: &Points) -> KdTree {
    KdTree::build(points)
}

/// Background grid covering `[lo, hi]` with cells of size `h / sqrt(d)`.
pub fn grid_init(lo: &[f64], hi: &[f64], h: f64) -> Result<BackgroundGrid> {
    BackgroundGrid::new(lo, hi, h)
}
