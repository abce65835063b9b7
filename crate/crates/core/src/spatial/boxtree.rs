use super::Neighbor;
use crate::error::{Error, Result};
use crate::points::{dist2, Points};

const LEAF: usize = 8;
const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Node {
    start: u32,
    end: u32,
    left: u32,
    right: u32,
}

/// Static bucket k-d tree pruning with the tight bounding box of every
/// subtree. Suited to point sets concentrated on curves or surfaces, such as
/// boundary discretizations, queried from far away.
#[derive(Debug, Clone)]
pub struct BoxTree {
    dim: usize,
    points: Points,
    order: Vec<u32>,
    nodes: Vec<Node>,
    /// `lo` then `hi` of every node, `2 * dim` values each.
    bounds: Vec<f64>,
}

impl BoxTree {
    pub fn build(points: &Points) -> Self {
        let dim = points.dim();
        let mut tree = BoxTree {
            dim,
            points: points.clone(),
            order: (0..points.len() as u32).collect(),
            nodes: Vec::new(),
            bounds: Vec::new(),
        };
        if !points.is_empty() {
            tree.build_rec(0, points.len());
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build_rec(&mut self, start: usize, end: usize) -> u32 {
        let d = self.dim;
        let id = self.nodes.len() as u32;
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in &self.order[start..end] {
            for (k, &x) in self.points[i as usize].iter().enumerate() {
                lo[k] = lo[k].min(x);
                hi[k] = hi[k].max(x);
            }
        }
        self.bounds.extend_from_slice(&lo);
        self.bounds.extend_from_slice(&hi);
        self.nodes.push(Node {
            start: start as u32,
            end: end as u32,
            left: NIL,
            right: NIL,
        });
        if end - start <= LEAF {
            return id;
        }
        let axis = (0..d)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let mid = (start + end) / 2;
        let points = &self.points;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
            points[a as usize][axis].total_cmp(&points[b as usize][axis])
        });
        let left = self.build_rec(start, mid);
        let right = self.build_rec(mid, end);
        let node = &mut self.nodes[id as usize];
        node.left = left;
        node.right = right;
        id
    }

    fn box_dist2(&self, n: u32, q: &[f64]) -> f64 {
        let d = self.dim;
        let b = &self.bounds[n as usize * 2 * d..(n as usize + 1) * 2 * d];
        let mut s = 0.0;
        for k in 0..d {
            let e = (b[k] - q[k]).max(q[k] - b[d + k]).max(0.0);
            s += e * e;
        }
        s
    }

    /// Exact nearest point; ties go to the lowest index.
    pub fn nearest(&self, q: &[f64]) -> Result<Neighbor> {
        if q.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: q.len(),
            });
        }
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let mut best = (f64::INFINITY, u32::MAX);
        self.nearest_rec(0, q, &mut best);
        Ok(Neighbor {
            index: best.1 as usize,
            distance: best.0.sqrt(),
        })
    }

    fn nearest_rec(&self, n: u32, q: &[f64], best: &mut (f64, u32)) {
        let node = self.nodes[n as usize];
        if node.left == NIL {
            for &i in &self.order[node.start as usize..node.end as usize] {
                let d2 = dist2(&self.points[i as usize], q);
                if d2 < best.0 || (d2 == best.0 && i < best.1) {
                    *best = (d2, i);
                }
            }
            return;
        }
        let dl = self.box_dist2(node.left, q);
        let dr = self.box_dist2(node.right, q);
        let (first, df, second, ds) = if dl <= dr {
            (node.left, dl, node.right, dr)
        } else {
            (node.right, dr, node.left, dl)
        };
        if df <= best.0 {
            self.nearest_rec(first, q, best);
        }
        if ds <= best.0 {
            self.nearest_rec(second, q, best);
        }
    }
}
