use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Neighbor, SpatialIndex};
use crate::error::{Error, Result};
use crate::points::{dist2, Points};

const NIL: u32 = u32::MAX;

/// A subtree is rebuilt once one child holds more than this share of it.
const BALANCE: f64 = 0.75;

#[derive(Debug, Clone, Copy)]
struct Node {
    left: u32,
    right: u32,
    size: u32,
    axis: u8,
}

/// Dynamic point k-d tree: every stored point is a node splitting on one axis.
///
/// Insertions descend to a leaf; when a subtree on the insertion path becomes
/// lopsided (one child holding more than 3/4 of it) the highest such subtree
/// is rebuilt balanced around medians. Depth stays logarithmic whatever the
/// insertion order, at amortized `O(log² N)` insertion cost.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    coords: Vec<f64>,
    nodes: Vec<Node>,
    root: u32,
    path: Vec<u32>,
    scratch: Vec<u32>,
}

impl KdTree {
    pub fn new(dim: usize) -> Self {
        KdTree {
            dim,
            coords: Vec::new(),
            nodes: Vec::new(),
            root: NIL,
            path: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// Bulk-loads `points` into a balanced tree.
    pub fn build(points: &Points) -> Self {
        let mut tree = KdTree::new(points.dim());
        tree.coords = points.as_flat().to_vec();
        tree.nodes = vec![
            Node {
                left: NIL,
                right: NIL,
                size: 0,
                axis: 0,
            };
            points.len()
        ];
        let mut idx: Vec<u32> = (0..points.len() as u32).collect();
        tree.root = tree.build_rec(&mut idx);
        tree
    }

    fn build_rec(&mut self, idx: &mut [u32]) -> u32 {
        if idx.is_empty() {
            return NIL;
        }
        let d = self.dim;
        let mut axis = 0;
        let mut widest = f64::NEG_INFINITY;
        for k in 0..d {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in idx.iter() {
                let v = self.coords[i as usize * d + k];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > widest {
                widest = hi - lo;
                axis = k;
            }
        }
        let mid = idx.len() / 2;
        let coords = &self.coords;
        idx.select_nth_unstable_by(mid, |a, b| {
            coords[*a as usize * d + axis].total_cmp(&coords[*b as usize * d + axis])
        });
        let node = idx[mid];
        let (left, rest) = idx.split_at_mut(mid);
        let l = self.build_rec(left);
        let r = self.build_rec(&mut rest[1..]);
        self.nodes[node as usize] = Node {
            left: l,
            right: r,
            size: (idx.len()) as u32,
            axis: axis as u8,
        };
        node
    }

    #[inline]
    fn pt(&self, i: u32) -> &[f64] {
        let s = i as usize * self.dim;
        &self.coords[s..s + self.dim]
    }

    fn size(&self, n: u32) -> u32 {
        if n == NIL {
            0
        } else {
            self.nodes[n as usize].size
        }
    }

    /// Depth of the deepest node (root has depth 1).
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root, 1usize)];
        while let Some((n, d)) = stack.pop() {
            if n == NIL {
                continue;
            }
            best = best.max(d);
            let node = self.nodes[n as usize];
            stack.push((node.left, d + 1));
            stack.push((node.right, d + 1));
        }
        best
    }

    fn collect(&self, n: u32, out: &mut Vec<u32>) {
        let mut stack = vec![n];
        while let Some(n) = stack.pop() {
            if n == NIL {
                continue;
            }
            out.push(n);
            let node = self.nodes[n as usize];
            stack.push(node.left);
            stack.push(node.right);
        }
    }

    /// Rebuilds the subtree at `path[at]` and relinks it to its parent.
    fn rebuild(&mut self, at: usize) {
        let top = self.path[at];
        let mut ids = std::mem::take(&mut self.scratch);
        ids.clear();
        self.collect(top, &mut ids);
        let new_top = self.build_rec(&mut ids);
        self.scratch = ids;
        if at == 0 {
            self.root = new_top;
        } else {
            let parent = &mut self.nodes[self.path[at - 1] as usize];
            if parent.left == top {
                parent.left = new_top;
            } else {
                parent.right = new_top;
            }
        }
    }

    /// `off` holds the per-axis offset from `q` to the current cell and `rd`
    /// its squared norm, a lower bound on the distance to anything inside.
    fn nearest_rec(&self, n: u32, q: &[f64], off: &mut [f64], rd: f64, best: &mut (f64, u32)) {
        let node = self.nodes[n as usize];
        let p = self.pt(n);
        let d2 = dist2(p, q);
        if d2 < best.0 || (d2 == best.0 && n < best.1) {
            *best = (d2, n);
        }
        let axis = node.axis as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if near != NIL {
            self.nearest_rec(near, q, off, rd, best);
        }
        if far != NIL {
            let old = off[axis];
            let far_rd = rd - old * old + diff * diff;
            if far_rd <= best.0 {
                off[axis] = diff;
                self.nearest_rec(far, q, off, far_rd, best);
                off[axis] = old;
            }
        }
    }

    /// The `k` nearest stored points ordered by distance, then insertion index.
    pub fn k_nearest(&self, q: &[f64], k: usize) -> Vec<Neighbor> {
        if k == 0 || self.root == NIL {
            return Vec::new();
        }
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::with_capacity(k + 1);
        self.knn_rec(self.root, q, k, &mut vec![0.0; self.dim], 0.0, &mut heap);
        let mut out: Vec<HeapItem> = heap.into_vec();
        out.sort();
        out.into_iter()
            .map(|h| Neighbor {
                index: h.index as usize,
                distance: h.d2.sqrt(),
            })
            .collect()
    }

    fn knn_rec(
        &self,
        n: u32,
        q: &[f64],
        k: usize,
        off: &mut [f64],
        rd: f64,
        heap: &mut BinaryHeap<HeapItem>,
    ) {
        let node = self.nodes[n as usize];
        let p = self.pt(n);
        let item = HeapItem {
            d2: dist2(p, q),
            index: n,
        };
        if heap.len() < k {
            heap.push(item);
        } else if item < *heap.peek().unwrap() {
            heap.pop();
            heap.push(item);
        }
        let axis = node.axis as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            (node.left, node.right)
        } else {
            (node.right, node.left)
        };
        if near != NIL {
            self.knn_rec(near, q, k, off, rd, heap);
        }
        if far != NIL {
            let old = off[axis];
            let far_rd = rd - old * old + diff * diff;
            if heap.len() < k || far_rd <= heap.peek().unwrap().d2 {
                off[axis] = diff;
                self.knn_rec(far, q, k, off, far_rd, heap);
                off[axis] = old;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapItem {
    d2: f64,
    index: u32,
}

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2
            .total_cmp(&other.d2)
            .then(self.index.cmp(&other.index))
    }
}

impl SpatialIndex for KdTree {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    fn insert(&mut self, p: &[f64]) -> Result<usize> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        if self.nodes.len() >= NIL as usize {
            return Err(Error::TooLarge {
                size: self.nodes.len() + 1,
                limit: NIL as usize,
            });
        }
        let id = self.nodes.len() as u32;
        self.coords.extend_from_slice(p);
        self.nodes.push(Node {
            left: NIL,
            right: NIL,
            size: 1,
            axis: 0,
        });
        if self.root == NIL {
            self.root = id;
            return Ok(id as usize);
        }
        self.path.clear();
        let mut cur = self.root;
        loop {
            self.path.push(cur);
            let node = &mut self.nodes[cur as usize];
            node.size += 1;
            let axis = node.axis as usize;
            let go_left = p[axis] < self.coords[cur as usize * self.dim + axis];
            let next = if go_left { node.left } else { node.right };
            if next == NIL {
                let child_axis = ((axis + 1) % self.dim) as u8;
                let node = &mut self.nodes[cur as usize];
                if go_left {
                    node.left = id;
                } else {
                    node.right = id;
                }
                self.nodes[id as usize].axis = child_axis;
                break;
            }
            cur = next;
        }
        let lopsided = self.path.iter().position(|&n| {
            let node = self.nodes[n as usize];
            let heavy = self.size(node.left).max(self.size(node.right));
            node.size > 4 && heavy as f64 > BALANCE * node.size as f64
        });
        if let Some(at) = lopsided {
            self.rebuild(at);
        }
        Ok(id as usize)
    }

    fn nearest(&self, q: &[f64]) -> Result<Neighbor> {
        if self.root == NIL {
            return Err(Error::EmptyIndex);
        }
        let mut best = (f64::INFINITY, NIL);
        self.nearest_rec(self.root, q, &mut vec![0.0; self.dim], 0.0, &mut best);
        Ok(Neighbor {
            index: best.1 as usize,
            distance: best.0.sqrt(),
        })
    }

    fn point(&self, index: usize) -> &[f64] {
        self.pt(index as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_insertions_stay_shallow() {
        let mut t = KdTree::new(2);
        for i in 0..10_000 {
            t.insert(&[i as f64 * 1e-3, 0.5]).unwrap();
        }
        assert_eq!(t.len(), 10_000);
        assert!(t.depth() <= 40, "depth {}", t.depth());
        assert_eq!(t.nearest(&[5.0004, 0.5]).unwrap().index, 5000);
    }

    #[test]
    fn bulk_then_incremental() {
        let pts = Points::from_rows(2, &[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
        let mut t = KdTree::build(&pts);
        t.insert(&[0.4, 0.4]).unwrap();
        assert_eq!(t.nearest(&[0.3, 0.3]).unwrap().index, 3);
        assert_eq!(
            t.k_nearest(&[0.0, 0.0], 2)
                .iter()
                .map(|n| n.index)
                .collect::<Vec<_>>(),
            vec![0, 3]
        );
    }
}
