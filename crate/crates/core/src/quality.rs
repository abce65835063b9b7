//! Quality measures for node sets: nearest-neighbour distance statistics,
//! distance histograms, empty-circle (hole) sizes and spacing checks.

use serde::Serialize;
use spade::{DelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};
use crate::fill_pnp::FillResult;
use crate::geometry::Domain;
use crate::points::{dist, Points};
use crate::spacing::SpacingField;
use crate::spatial::{BoxTree, KdTree, SpatialIndex};

/// Neighbour distances of one interior node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeNeighbors {
    pub index: usize,
    /// Distances to the `c` nearest other nodes, ascending.
    pub distances: Vec<f64>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NeighborStats {
    pub c: usize,
    pub margin: f64,
    #[serde(skip)]
    pub nodes: Vec<NodeNeighbors>,
    pub interior_count: usize,
    /// Mean over nodes of the mean neighbour distance.
    pub mean: f64,
    /// Population standard deviation of the per-node mean distance.
    pub std: f64,
    /// Mean over nodes of `max - min` neighbour distance.
    pub spread: f64,
}

/// Indices of nodes whose nearest boundary node is at least `margin` away.
/// With no boundary nodes every node counts as interior.
pub fn interior_indices(nodes: &Points, boundary: &Points, margin: f64) -> Result<Vec<usize>> {
    if boundary.is_empty() {
        return Ok((0..nodes.len()).collect());
    }
    let tree = BoxTree::build(boundary);
    let mut out = Vec::new();
    for (i, p) in nodes.iter().enumerate() {
        if tree.nearest(p)?.distance >= margin {
            out.push(i);
        }
    }
    Ok(out)
}

/// Distances from every interior node to its `c` nearest neighbours among
/// all nodes (the node itself excluded).
pub fn neighbor_stats(
    nodes: &Points,
    boundary: &Points,
    c: usize,
    margin: f64,
) -> Result<NeighborStats> {
    if c < 1 {
        return Err(Error::InvalidInput(
            "neighbour count c must be at least 1".into(),
        ));
    }
    if !(margin >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "margin must be non-negative, got {margin}"
        )));
    }
    let interior = interior_indices(nodes, boundary, margin)?;
    if interior.len() < c + 1 {
        return Err(Error::InvalidInput(format!(
            "{} interior nodes, need at least {}",
            interior.len(),
            c + 1
        )));
    }
    if nodes.len() < c + 1 {
        return Err(Error::InvalidInput(format!(
            "{} nodes, need at least {}",
            nodes.len(),
            c + 1
        )));
    }
    let tree = KdTree::build(nodes);
    let mut per = Vec::with_capacity(interior.len());
    for &i in &interior {
        let distances: Vec<f64> = tree
            .k_nearest(&nodes[i], c + 1)
            .into_iter()
            .filter(|n| n.index != i)
            .take(c)
            .map(|n| n.distance)
            .collect();
        let mean = distances.iter().sum::<f64>() / c as f64;
        per.push(NodeNeighbors {
            index: i,
            min: distances[0],
            max: distances[c - 1],
            mean,
            distances,
        });
    }
    let m = per.len() as f64;
    let mean = per.iter().map(|n| n.mean).sum::<f64>() / m;
    let var = per.iter().map(|n| (n.mean - mean).powi(2)).sum::<f64>() / m;
    let spread = per.iter().map(|n| n.max - n.min).sum::<f64>() / m;
    Ok(NeighborStats {
        c,
        margin,
        interior_count: per.len(),
        nodes: per,
        mean,
        std: var.sqrt(),
        spread,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending bin edges; bins are `[e_i, e_{i+1})`,
    /// the last one closed.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Distances falling outside all bins.
    pub outside: usize,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("lo,hi,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            s.push_str(&format!(
                "{:.16e},{:.16e},{}\n",
                self.edges[i],
                self.edges[i + 1],
                c
            ));
        }
        s
    }
}

/// `bins + 1` equally spaced edges from `lo` to `hi`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>> {
    if bins < 1 || !(lo < hi) {
        return Err(Error::InvalidInput(format!(
            "bad histogram range [{lo}, {hi}] with {bins} bins"
        )));
    }
    Ok((0..=bins)
        .map(|i| lo + (hi - lo) * i as f64 / bins as f64)
        .collect())
}

/// Histogram of all `c · N_interior` neighbour distances in `stats`.
pub fn distance_histogram(stats: &NeighborStats, edges: &[f64]) -> Result<Histogram> {
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput(
            "histogram edges must be strictly increasing, at least two".into(),
        ));
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0; bins];
    let mut outside = 0;
    for d in stats.nodes.iter().flat_map(|n| n.distances.iter().copied()) {
        if d < edges[0] || d > edges[bins] {
            outside += 1;
            continue;
        }
        let b = edges
            .partition_point(|e| *e <= d)
            .saturating_sub(1)
            .min(bins - 1);
        counts[b] += 1;
    }
    Ok(Histogram {
        edges: edges.to_vec(),
        counts,
        outside,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoleReport {
    #[serde(skip)]
    pub vertices: Vec<[f64; 2]>,
    #[serde(skip)]
    pub sizes: Vec<f64>,
    pub count: usize,
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Diameters of the largest empty circles centred at the Voronoi vertices
/// that lie inside `domain`.
pub fn hole_sizes_2d(nodes: &Points, domain: &Domain) -> Result<HoleReport> {
    if nodes.dim() != 2 || domain.dim() != 2 {
        return Err(Error::Unsupported(
            "hole sizes are computed in 2-D only".into(),
        ));
    }
    if nodes.len() < 3 {
        return Err(Error::Degenerate(format!(
            "need at least 3 nodes, got {}",
            nodes.len()
        )));
    }
    let mut tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    for p in nodes.iter() {
        tri.insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::InvalidInput(format!("cannot triangulate node {p:?}: {e:?}")))?;
    }
    if tri.num_inner_faces() == 0 {
        return Err(Error::Degenerate("all nodes are collinear".into()));
    }
    let (lo, hi) = domain.bbox();
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let tree = KdTree::build(nodes);
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut sizes = Vec::new();
    let mut seen = KdTree::new(2);
    for face in tri.inner_faces() {
        let cc = face.circumcenter();
        let v = [cc.x, cc.y];
        if !v.iter().all(|x| x.is_finite()) || !domain.contains(&v) {
            continue;
        }
        if let Ok(n) = seen.nearest(&v) {
            if n.distance <= 1e-12 * scale {
                continue;
            }
        }
        seen.insert(&v)?;
        sizes.push(2.0 * tree.nearest(&v)?.distance);
        vertices.push(v);
    }
    if sizes.is_empty() {
        return Err(Error::Degenerate(
            "no Voronoi vertex lies inside the domain".into(),
        ));
    }
    let min = sizes.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sizes.iter().copied().fold(0.0, f64::max);
    let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
    Ok(HoleReport {
        count: sizes.len(),
        vertices,
        sizes,
        min,
        mean,
        max,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmptyDiskReport {
    pub passed: bool,
    /// Smallest `‖p_k − p_j‖ / h(p_β(j))` over all generated `j` and `k < j`.
    pub worst_ratio: f64,
    /// `(k, j)` attaining the worst ratio.
    pub worst_pair: Option<(usize, usize)>,
    pub tolerance: f64,
}

/// Exhaustive check that every generated node keeps distance
/// `h(p_β(j))` (up to relative `1e-10`) from all earlier nodes.
pub fn verify_empty_disk(result: &FillResult, h: &SpacingField) -> Result<EmptyDiskReport> {
    let preds = result.predecessors.as_ref().ok_or_else(|| {
        Error::InvalidInput("fill result carries no predecessor information".into())
    })?;
    let tolerance = 1e-10;
    let nodes = &result.nodes;
    let mut worst = f64::INFINITY;
    let mut pair = None;
    for (off, &b) in preds.iter().enumerate() {
        let j = result.seed_count + off;
        let hb = h.eval_checked(&nodes[b])?;
        let pj = &nodes[j];
        for k in 0..j {
            let r = dist(&nodes[k], pj) / hb;
            if r < worst {
                worst = r;
                pair = Some((k, j));
            }
        }
    }
    Ok(EmptyDiskReport {
        passed: worst >= 1.0 - tolerance,
        worst_ratio: worst,
        worst_pair: pair,
        tolerance,
    })
}

const BRUTE_FORCE_LIMIT: usize = 10_000;

/// Exact minimum distance over all pairs, with the attaining pair `(i, j)`, `i < j`.
pub fn min_pairwise_distance(nodes: &Points) -> Result<(f64, (usize, usize))> {
    let n = nodes.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 nodes, got {n}"
        )));
    }
    let mut best = (f64::INFINITY, (0, 1));
    if n <= BRUTE_FORCE_LIMIT {
        for j in 1..n {
            for i in 0..j {
                let d = dist(&nodes[i], &nodes[j]);
                if d < best.0 {
                    best = (d, (i, j));
                }
            }
        }
        return Ok(best);
    }
    let mut tree = KdTree::new(nodes.dim());
    tree.insert(&nodes[0])?;
    for j in 1..n {
        let nb = tree.nearest(&nodes[j])?;
        if nb.distance < best.0 {
            best = (nb.distance, (nb.index, j));
        }
        tree.insert(&nodes[j])?;
    }
    Ok(best)
}
