//! Poisson-disk fill of an oriented bounding box followed by a half-space
//! inclusion filter against the inward-shifted boundary.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::fill_pnp::{FillResult, FillStats};
use crate::geometry::{BoundaryDiscretization, Domain};
use crate::points::{dist2, Points};
use crate::spacing::SpacingField;
use crate::spatial::BoxTree;

pub const DEFAULT_ATTEMPTS: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBox {
    pub center: DVector<f64>,
    /// Columns are the box axes.
    pub axes: DMatrix<f64>,
    pub half_extents: DVector<f64>,
}

impl OrientedBox {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        self.half_extents.iter().map(|e| 2.0 * e).product()
    }

    /// Box coordinates of a global point.
    pub fn to_local(&self, p: &[f64]) -> DVector<f64> {
        let v = DVector::from_column_slice(p) - &self.center;
        self.axes.tr_mul(&v)
    }

    pub fn to_global(&self, u: &[f64]) -> Vec<f64> {
        let v = &self.center + &self.axes * DVector::from_column_slice(u);
        v.as_slice().to_vec()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let u = self.to_local(p);
        u.iter()
            .zip(self.half_extents.iter())
            .all(|(x, e)| x.abs() <= *e)
    }

    fn fit(points: &Points, axes: DMatrix<f64>) -> OrientedBox {
        let d = points.dim();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for p in points.iter() {
            let u = axes.tr_mul(&DVector::from_column_slice(p));
            for k in 0..d {
                lo[k] = lo[k].min(u[k]);
                hi[k] = hi[k].max(u[k]);
            }
        }
        let mid = DVector::from_iterator(d, lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)));
        let half = DVector::from_iterator(d, lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a)));
        OrientedBox {
            center: &axes * mid,
            axes,
            half_extents: half,
        }
    }
}

/// Bounding box aligned with the principal axes of `points`.
///
/// Clouds with (nearly) isotropic covariance, such as the boundary of a
/// square, have no preferred principal axes; there the axis-aligned box is
/// used whenever it is the smaller of the two.
pub fn pca_obb(points: &Points) -> Result<OrientedBox> {
    let d = points.dim();
    let n = points.len();
    if n < d + 1 {
        return Err(Error::Degenerate(format!(
            "need at least {} points for a {d}-D box, got {n}",
            d + 1
        )));
    }
    let mut mean = DVector::zeros(d);
    for p in points.iter() {
        mean += DVector::from_column_slice(p);
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for p in points.iter() {
        let v = DVector::from_column_slice(p) - &mean;
        cov += &v * v.transpose();
    }
    cov /= n as f64;
    let eig = SymmetricEigen::new(cov);
    let max = eig.eigenvalues.amax();
    let (imin, min) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    if !(max > 0.0) || min <= 1e-12 * max {
        let dir: Vec<f64> = eig.eigenvectors.column(imin).iter().copied().collect();
        return Err(Error::Degenerate(format!(
            "point cloud is flat along direction {dir:?}"
        )));
    }
    let pca = OrientedBox::fit(points, eig.eigenvectors);
    let aabb = OrientedBox::fit(points, DMatrix::identity(d, d));
    Ok(if aabb.volume() <= pca.volume() * (1.0 + 1e-12) {
        aabb
    } else {
        pca
    })
}

/// Bridson's Poisson-disk sampling of `obb` with exclusion radius `h`.
///
/// Candidates are drawn area-uniformly in the annulus `[h, 2h]` around a
/// random active sample; the first acceptable one is kept, and a sample is
/// retired after `n` consecutive failures. Distances are checked in global
/// coordinates, so the returned points are at least `h` apart exactly.
pub fn bridson_pds<R: Rng + ?Sized>(
    obb: &OrientedBox,
    h: f64,
    n: usize,
    rng: &mut R,
) -> Result<Points> {
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spacing must be positive, got {h}"
        )));
    }
    if n < 1 {
        return Err(Error::InvalidInput(
            "attempt count must be at least 1".into(),
        ));
    }
    let d = obb.dim();
    let cell = h / (d as f64).sqrt();
    let shape: Vec<usize> = obb
        .half_extents
        .iter()
        .map(|e| ((2.0 * e / cell).ceil() as usize).max(1))
        .collect();
    let total: usize = shape.iter().product();
    if total > 500_000_000 {
        return Err(Error::TooLarge {
            size: total,
            limit: 500_000_000,
        });
    }
    let mut grid = vec![u32::MAX; total];
    let reach = (d as f64).sqrt().floor() as isize + 1;
    let cell_of = |u: &[f64]| -> Vec<isize> {
        (0..d)
            .map(|k| {
                let c = ((u[k] + obb.half_extents[k]) / cell).floor() as isize;
                c.clamp(0, shape[k] as isize - 1)
            })
            .collect()
    };
    let flat = |c: &[isize]| -> usize {
        let mut idx = 0;
        for k in 0..d {
            idx = idx * shape[k] + c[k] as usize;
        }
        idx
    };

    let mut local = Points::new(d);
    let mut global = Points::new(d);
    let mut u = vec![0.0; d];
    for k in 0..d {
        let e = obb.half_extents[k];
        u[k] = if e > 0.0 {
            rng.random_range(-e..e)
        } else {
            0.0
        };
    }
    grid[flat(&cell_of(&u))] = 0;
    global.push(&obb.to_global(&u));
    local.push(&u);
    let mut active = vec![0usize];

    let volume_factor = (1u64 << d.min(62)) as f64 - 1.0;
    let mut dir = vec![0.0; d];
    let mut offset = vec![0isize; d];
    while !active.is_empty() {
        let slot = rng.random_range(0..active.len());
        let i = active[slot];
        let mut found = false;
        for _ in 0..n {
            loop {
                for x in dir.iter_mut() {
                    *x = rng.sample(StandardNormal);
                }
                let len = crate::points::norm(&dir);
                if len > 1e-12 {
                    dir.iter_mut().for_each(|x| *x /= len);
                    break;
                }
            }
            let t: f64 = rng.random();
            let radius = h * (1.0 + t * volume_factor).powf(1.0 / d as f64);
            for k in 0..d {
                u[k] = local[i][k] + radius * dir[k];
            }
            if (0..d).any(|k| u[k].abs() > obb.half_extents[k]) {
                continue;
            }
            let g = obb.to_global(&u);
            let c = cell_of(&u);
            if too_close(&g, &c, h, reach, &shape, &grid, &global, &mut offset, &flat) {
                continue;
            }
            let id = global.len();
            grid[flat(&c)] = id as u32;
            global.push(&g);
            local.push(&u);
            active.push(id);
            found = true;
            break;
        }
        if !found {
            active.swap_remove(slot);
        }
    }
    Ok(global)
}

#[allow(clippy::too_many_arguments)]
fn too_close(
    g: &[f64],
    c: &[isize],
    h: f64,
    reach: isize,
    shape: &[usize],
    grid: &[u32],
    global: &Points,
    offset: &mut [isize],
    flat: &dyn Fn(&[isize]) -> usize,
) -> bool {
    let d = c.len();
    let h2 = h * h;
    offset.iter_mut().for_each(|o| *o = -reach);
    let mut cell = vec![0isize; d];
    loop {
        let mut valid = true;
        for k in 0..d {
            cell[k] = c[k] + offset[k];
            if cell[k] < 0 || cell[k] >= shape[k] as isize {
                valid = false;
            }
        }
        if valid {
            let id = grid[flat(&cell)];
            if id != u32::MAX && dist2(&global[id as usize], g) < h2 {
                return true;
            }
        }
        let mut k = 0;
        loop {
            if k == d {
                return false;
            }
            offset[k] += 1;
            if offset[k] <= reach {
                break;
            }
            offset[k] = -reach;
            k += 1;
        }
    }
}

/// Shifts the boundary inwards by `h`, samples its oriented bounding box and
/// keeps the samples lying on the inner side of their nearest shifted
/// boundary point. Boundary nodes come first in the result.
pub fn skf_fill(
    domain: &Domain,
    h: &SpacingField,
    boundary: &BoundaryDiscretization,
    n: usize,
    seed: u64,
) -> Result<FillResult> {
    let start = Instant::now();
    let hv = h.constant_value().ok_or_else(|| {
        Error::Unsupported("Poisson-disk box fill supports constant spacing only".into())
    })?;
    let d = domain.dim();
    if boundary.points.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: boundary.points.dim(),
        });
    }
    let mut shifted = Points::with_capacity(d, boundary.len());
    let mut q = vec![0.0; d];
    for (b, nrm) in boundary.points.iter().zip(boundary.normals.iter()) {
        for k in 0..d {
            q[k] = b[k] - hv * nrm[k];
        }
        shifted.push(&q);
    }
    let obb = pca_obb(&shifted)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = bridson_pds(&obb, hv, n, &mut rng)?;

    let tree = BoxTree::build(&shifted);
    let mut nodes = boundary.points.clone();
    for s in samples.iter() {
        let nb = tree.nearest(s)?;
        let b = &shifted[nb.index];
        let nrm = &boundary.normals[nb.index];
        let side: f64 = (0..d).map(|k| (s[k] - b[k]) * nrm[k]).sum();
        if side <= 0.0 {
            nodes.push(s);
        }
    }
    Ok(FillResult {
        seed_count: boundary.len(),
        predecessors: None,
        terminal: Vec::new(),
        truncated: false,
        stats: FillStats {
            elapsed: start.elapsed(),
            candidates_generated: samples.len() as u64,
            candidates_accepted: (nodes.len() - boundary.len()) as u64,
        },
        nodes,
    })
}
