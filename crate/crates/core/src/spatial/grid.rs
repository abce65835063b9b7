use super::{Neighbor, SpatialIndex};
use crate::error::{Error, Result};
use crate::points::dist2;

const EMPTY: u32 = u32::MAX;

/// Uniform background grid with cell size `h / sqrt(d)`.
///
/// With points kept at least `h` apart every cell holds at most one point;
/// cells are chained lists, so denser inputs still work. Points up to `h`
/// outside the covered box are accepted and binned into the border cells.
#[derive(Debug, Clone)]
pub struct BackgroundGrid {
    dim: usize,
    origin: Vec<f64>,
    upper: Vec<f64>,
    cell: f64,
    tolerance: f64,
    shape: Vec<usize>,
    strides: Vec<usize>,
    head: Vec<u32>,
    next: Vec<u32>,
    coords: Vec<f64>,
}

impl BackgroundGrid {
    pub fn new(lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidInput(
                "grid box needs matching, non-empty corners".into(),
            ));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grid spacing must be positive, got {h}"
            )));
        }
        let dim = lo.len();
        let cell = h / (dim as f64).sqrt();
        let shape: Vec<usize> = lo
            .iter()
            .zip(hi)
            .map(|(a, b)| (((b - a) / cell).ceil() as usize).max(1))
            .collect();
        let mut strides = vec![1usize; dim];
        for k in 1..dim {
            strides[k] = strides[k - 1] * shape[k - 1];
        }
        let cells: usize = shape.iter().product();
        Ok(BackgroundGrid {
            dim,
            origin: lo.to_vec(),
            upper: hi.to_vec(),
            cell,
            tolerance: h,
            shape,
            strides,
            head: vec![EMPTY; cells],
            next: Vec::new(),
            coords: Vec::new(),
        })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    pub fn cell_count(&self) -> usize {
        self.head.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    #[inline]
    fn axis_index(&self, k: usize, x: f64) -> usize {
        let v = ((x - self.origin[k]) / self.cell).floor();
        if v <= 0.0 {
            0
        } else {
            (v as usize).min(self.shape[k] - 1)
        }
    }

    /// Grid index of the cell holding `p` (clamped to the grid).
    pub fn cell_of(&self, p: &[f64]) -> Vec<usize> {
        (0..self.dim).map(|k| self.axis_index(k, p[k])).collect()
    }

    #[inline]
    fn scan_cell(&self, lin: usize, q: &[f64], best: &mut (f64, u32)) {
        let mut i = self.head[lin];
        while i != EMPTY {
            let s = i as usize * self.dim;
            let d2 = dist2(&self.coords[s..s + self.dim], q);
            if d2 < best.0 || (d2 == best.0 && i < best.1) {
                *best = (d2, i);
            }
            i = self.next[i as usize];
        }
    }

    /// Visits every cell at Chebyshev distance exactly `r` from `center`.
    fn scan_ring(&self, center: &[usize], r: usize, q: &[f64], best: &mut (f64, u32)) {
        let d = self.dim;
        let r = r as isize;
        let lo: Vec<isize> = (0..d).map(|k| (center[k] as isize - r).max(0)).collect();
        let hi: Vec<isize> = (0..d)
            .map(|k| (center[k] as isize + r).min(self.shape[k] as isize - 1))
            .collect();
        if r == 0 {
            let lin: usize = (0..d).map(|k| center[k] * self.strides[k]).sum();
            self.scan_cell(lin, q, best);
            return;
        }
        let last = d - 1;
        let mut idx: Vec<isize> = lo.clone();
        loop {
            // outer axes fixed; decide which cells of the innermost axis lie on the ring
            let on_shell = (0..last).any(|k| (idx[k] - center[k] as isize).abs() == r);
            let base: usize = (0..last).map(|k| idx[k] as usize * self.strides[k]).sum();
            if on_shell {
                for j in lo[last]..=hi[last] {
                    self.scan_cell(base + j as usize * self.strides[last], q, best);
                }
            } else {
                let c = center[last] as isize;
                if c - r >= 0 {
                    self.scan_cell(base + (c - r) as usize * self.strides[last], q, best);
                }
                if c + r < self.shape[last] as isize {
                    self.scan_cell(base + (c + r) as usize * self.strides[last], q, best);
                }
            }
            // odometer over the outer axes
            let mut k = 0;
            loop {
                if k == last {
                    return;
                }
                idx[k] += 1;
                if idx[k] <= hi[k] {
                    break;
                }
                idx[k] = lo[k];
                k += 1;
            }
        }
    }
}

impl SpatialIndex for BackgroundGrid {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.next.len()
    }

    fn insert(&mut self, p: &[f64]) -> Result<usize> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        let outside = (0..self.dim).any(|k| {
            p[k] < self.origin[k] - self.tolerance || p[k] > self.upper[k] + self.tolerance
        }) || p.iter().any(|x| !x.is_finite());
        if outside {
            return Err(Error::OutsideIndex { point: p.to_vec() });
        }
        let lin: usize = (0..self.dim)
            .map(|k| self.axis_index(k, p[k]) * self.strides[k])
            .sum();
        let id = self.next.len() as u32;
        self.coords.extend_from_slice(p);
        self.next.push(self.head[lin]);
        self.head[lin] = id;
        Ok(id as usize)
    }

    fn nearest(&self, q: &[f64]) -> Result<Neighbor> {
        if self.next.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let center = self.cell_of(q);
        let max_r = (0..self.dim)
            .map(|k| center[k].max(self.shape[k] - 1 - center[k]))
            .max()
            .unwrap_or(0);
        let mut best = (f64::INFINITY, EMPTY);
        for r in 0..=max_r {
            self.scan_ring(&center, r, q, &mut best);
            // unvisited points are at least r cells away along some axis
            let reach = r as f64 * self.cell;
            if best.1 != EMPTY && best.0 < reach * reach {
                break;
            }
        }
        Ok(Neighbor {
            index: best.1 as usize,
            distance: best.0.sqrt(),
        })
    }

    fn point(&self, index: usize) -> &[f64] {
        &self.coords[index * self.dim..(index + 1) * self.dim]
    }
}
