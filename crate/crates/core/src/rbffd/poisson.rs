use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{Complex, DMatrix};
use serde::Serialize;

use super::sparse::{solve, CsrMatrix, SolveReport};
use super::{phs_interpolation_weights, phs_laplacian_weights_tagged, PhsConfig};
use crate::error::{Error, Result};
use crate::fill_pnp::FillResult;
use crate::geometry::Domain;
use crate::points::Points;
use crate::spatial::KdTree;

/// Largest interior block handed to the dense eigensolver.
pub const SPECTRUM_LIMIT: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    pub center: usize,
    pub neighbors: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct OperatorDiscretization {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub boundary: Vec<bool>,
    pub stencils: Vec<Stencil>,
}

/// Laplacian rows with `rhs = f` at interior nodes, identity rows with
/// `rhs = g` at boundary nodes.
pub fn assemble_poisson(
    nodes: &Points,
    boundary: &[bool],
    cfg: &PhsConfig,
    f: &dyn Fn(&[f64]) -> f64,
    g: &dyn Fn(&[f64]) -> f64,
) -> Result<OperatorDiscretization> {
    let d = nodes.dim();
    cfg.validate(d)?;
    if boundary.len() != nodes.len() {
        return Err(Error::InvalidInput(format!(
            "boundary mask has {} entries for {} nodes",
            boundary.len(),
            nodes.len()
        )));
    }
    if !boundary.iter().any(|b| *b) {
        return Err(Error::InvalidInput("no boundary node marked".into()));
    }
    if nodes.len() < cfg.nn {
        return Err(Error::InvalidInput(format!(
            "{} nodes, stencil needs {}",
            nodes.len(),
            cfg.nn
        )));
    }
    let tree = KdTree::build(nodes);
    let mut rows = Vec::with_capacity(nodes.len());
    let mut rhs = Vec::with_capacity(nodes.len());
    let mut stencils = Vec::new();
    for (i, p) in nodes.iter().enumerate() {
        if boundary[i] {
            rows.push(vec![(i, 1.0)]);
            rhs.push(g(p));
            continue;
        }
        let neighbors: Vec<usize> = tree
            .k_nearest(p, cfg.nn)
            .into_iter()
            .map(|n| n.index)
            .collect();
        let local = nodes.select(neighbors.iter().copied());
        let weights = phs_laplacian_weights_tagged(p, &local, cfg, i)?;
        rows.push(
            neighbors
                .iter()
                .copied()
                .zip(weights.iter().copied())
                .collect(),
        );
        rhs.push(f(p));
        stencils.push(Stencil {
            center: i,
            neighbors,
            weights,
        });
    }
    Ok(OperatorDiscretization {
        matrix: CsrMatrix::from_rows(rows)?,
        rhs,
        boundary: boundary.to_vec(),
        stencils,
    })
}

impl OperatorDiscretization {
    pub fn solve(&self, tol: f64) -> Result<(Vec<f64>, SolveReport)> {
        solve(&self.matrix, &self.rhs, tol)
    }
}

/// Uniform grid with spacing `step` over the bounding box, restricted to the domain.
pub fn eval_grid(domain: &Domain, step: f64) -> Result<Points> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!(
            "grid step must be positive, got {step}"
        )));
    }
    let (lo, hi) = domain.bbox();
    let d = lo.len();
    let counts: Vec<usize> = (0..d)
        .map(|k| ((hi[k] - lo[k]) / step).floor() as usize + 1)
        .collect();
    let total: usize = counts.iter().product();
    if total > 50_000_000 {
        return Err(Error::TooLarge {
            size: total,
            limit: 50_000_000,
        });
    }
    let mut out = Points::new(d);
    let mut idx = vec![0usize; d];
    let mut p = vec![0.0; d];
    for _ in 0..total {
        for k in 0..d {
            p[k] = lo[k] + step * idx[k] as f64;
        }
        if domain.contains(&p) {
            out.push(&p);
        }
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < counts[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(out)
}

/// Mean absolute difference between `exact` and the local PHS interpolant
/// of `u_h` over `grid`.
pub fn l1_error(
    nodes: &Points,
    u_h: &[f64],
    exact: &dyn Fn(&[f64]) -> f64,
    grid: &Points,
    cfg: &PhsConfig,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("evaluation grid is empty".into()));
    }
    if u_h.len() != nodes.len() {
        return Err(Error::DimensionMismatch {
            expected: nodes.len(),
            got: u_h.len(),
        });
    }
    let tree = KdTree::build(nodes);
    let nn = cfg.nn.min(nodes.len());
    let mut total = 0.0;
    for x in grid.iter() {
        let near = tree.k_nearest(x, nn);
        let center = &nodes[near[0].index];
        let ids: Vec<usize> = near.iter().map(|n| n.index).collect();
        let w = phs_interpolation_weights(center, x, &nodes.select(ids.iter().copied()), cfg)?;
        let value: f64 = w.iter().zip(&ids).map(|(w, &i)| w * u_h[i]).sum();
        total += (value - exact(x)).abs();
    }
    Ok(total / grid.len() as f64)
}

/// All eigenvalues of the interior-interior block, largest real part first.
pub fn laplacian_spectrum(system: &OperatorDiscretization) -> Result<Vec<Complex<f64>>> {
    let interior: Vec<usize> = (0..system.boundary.len())
        .filter(|&i| !system.boundary[i])
        .collect();
    let m = interior.len();
    if m > SPECTRUM_LIMIT {
        return Err(Error::TooLarge {
            size: m,
            limit: SPECTRUM_LIMIT,
        });
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut pos = vec![usize::MAX; system.boundary.len()];
    for (k, &i) in interior.iter().enumerate() {
        pos[i] = k;
    }
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (r, &i) in interior.iter().enumerate() {
        for (j, v) in system.matrix.row(i) {
            if pos[j] != usize::MAX {
                a[(r, pos[j])] += v;
            }
        }
    }
    let mut eig: Vec<Complex<f64>> = a.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(eig)
}

/// `u = Π sin(π x_k)` and its Laplacian `-d π² u`.
pub fn sine_solution(d: usize) -> (impl Fn(&[f64]) -> f64, impl Fn(&[f64]) -> f64) {
    let u = |p: &[f64]| p.iter().map(|x| (PI * x).sin()).product::<f64>();
    let f =
        move |p: &[f64]| -(d as f64) * PI * PI * p.iter().map(|x| (PI * x).sin()).product::<f64>();
    (u, f)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonReport {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L1")]
    pub l1: f64,
    pub relative_residual: f64,
    pub iterations: usize,
    pub grid_points: usize,
    pub runtime: f64,
}

/// Solves `Δu = f` with the sine solution as Dirichlet data on the nodes
/// of `fill` (seed nodes are the boundary) and reports the L¹ error on a
/// grid with spacing `grid_step`.
pub fn run_poisson(
    domain: &Domain,
    fill: &FillResult,
    cfg: &PhsConfig,
    tol: f64,
    grid_step: f64,
) -> Result<PoissonReport> {
    let start = Instant::now();
    let d = domain.dim();
    let (u, f) = sine_solution(d);
    let mask = fill.boundary_mask();
    let system = assemble_poisson(&fill.nodes, &mask, cfg, &f, &u)?;
    let (u_h, rep) = system.solve(tol)?;
    let grid = eval_grid(domain, grid_step)?;
    let l1 = l1_error(&fill.nodes, &u_h, &u, &grid, cfg)?;
    Ok(PoissonReport {
        n: fill.len(),
        l1,
        relative_residual: rep.relative_residual,
        iterations: rep.iterations,
        grid_points: grid.len(),
        runtime: start.elapsed().as_secs_f64(),
    })
}
