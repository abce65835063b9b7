//! RBF-FD discretization with polyharmonic splines and polynomial
//! augmentation, used to check that generated node sets give accurate PDE
//! solutions.

mod poisson;
mod sparse;

pub use poisson::{
    assemble_poisson, eval_grid, l1_error, laplacian_spectrum, run_poisson, sine_solution,
    OperatorDiscretization, PoissonReport, Stencil, SPECTRUM_LIMIT,
};
pub use sparse::{bicgstab, solve, CsrMatrix, Ilu0, SolveReport};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{dist, Points};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhsConfig {
    /// Exponent of the radial function: `r^k` for odd `k`, `r^k log r` for even.
    pub k: u32,
    /// Highest total degree of the augmenting monomials.
    pub m: u32,
    /// Stencil size, center included.
    pub nn: usize,
}

impl PhsConfig {
    /// `r³` with monomials up to degree 2; 15 nodes in 2-D and 42 in 3-D.
    pub fn for_dim(d: usize) -> Self {
        PhsConfig {
            k: 3,
            m: 2,
            nn: if d >= 3 { 42 } else { 15 },
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k < 3 {
            return Err(Error::InvalidInput(format!(
                "PHS exponent must be at least 3, got {}",
                self.k
            )));
        }
        let basis = monomial_count(d, self.m);
        if self.nn < basis {
            return Err(Error::InvalidInput(format!(
                "stencil of {} nodes cannot support {basis} monomials",
                self.nn
            )));
        }
        Ok(())
    }

    pub fn phi(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let k = self.k as i32;
        if self.k % 2 == 1 {
            r.powi(k)
        } else {
            r.powi(k) * r.ln()
        }
    }

    /// Laplacian of `x ↦ φ(‖x‖)` in `d` dimensions, as a function of `r`.
    pub fn laplacian_phi(&self, r: f64, d: usize) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let k = self.k as f64;
        let d = d as f64;
        let rk2 = r.powi(self.k as i32 - 2);
        if self.k % 2 == 1 {
            k * (k + d - 2.0) * rk2
        } else {
            rk2 * (k * (k + d - 2.0) * r.ln() + 2.0 * k + d - 2.0)
        }
    }
}

/// Number of monomials of total degree at most `m` in `d` variables, `C(m+d, d)`.
pub fn monomial_count(d: usize, m: u32) -> usize {
    let m = m as usize;
    (1..=d).fold(1usize, |acc, i| acc * (m + i) / i)
}

/// Exponent vectors of all monomials of total degree ≤ `m`, ordered by degree.
pub fn monomial_exponents(d: usize, m: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for deg in 0..=m {
        let mut cur = vec![0u32; d];
        compositions(deg, 0, &mut cur, &mut out);
    }
    out
}

fn compositions(left: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    let d = cur.len();
    if k == d - 1 {
        cur[k] = left;
        out.push(cur.clone());
        return;
    }
    for e in (0..=left).rev() {
        cur[k] = e;
        compositions(left - e, k + 1, cur, out);
    }
}

fn monomial(x: &[f64], e: &[u32]) -> f64 {
    x.iter().zip(e).map(|(v, p)| v.powi(*p as i32)).product()
}

fn monomial_laplacian_at_origin(e: &[u32]) -> f64 {
    let deg: u32 = e.iter().sum();
    if deg == 2 && e.contains(&2) {
        2.0
    } else {
        0.0
    }
}

/// Linear functional approximated by stencil weights.
#[derive(Debug, Clone, Copy)]
enum Target<'a> {
    LaplacianAtCenter,
    ValueAt(&'a [f64]),
}

fn stencil_weights(
    center: &[f64],
    neighbors: &Points,
    cfg: &PhsConfig,
    target: Target,
    tag: usize,
) -> Result<Vec<f64>> {
    let d = center.len();
    if neighbors.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: neighbors.dim(),
        });
    }
    let n = neighbors.len();
    let exps = monomial_exponents(d, cfg.m);
    let np = exps.len();
    if n < np {
        return Err(Error::InvalidInput(format!(
            "{n} stencil nodes cannot support {np} monomials"
        )));
    }
    let scale = neighbors
        .iter()
        .map(|p| dist(p, center))
        .fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let local: Vec<Vec<f64>> = neighbors
        .iter()
        .map(|p| p.iter().zip(center).map(|(a, c)| (a - c) / scale).collect())
        .collect();

    let size = n + np;
    let mut a = DMatrix::<f64>::zeros(size, size);
    for i in 0..n {
        for j in 0..i {
            let v = cfg.phi(dist(&local[i], &local[j]));
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
        for (q, e) in exps.iter().enumerate() {
            let v = monomial(&local[i], e);
            a[(i, n + q)] = v;
            a[(n + q, i)] = v;
        }
    }
    let mut rhs = DVector::<f64>::zeros(size);
    match target {
        Target::LaplacianAtCenter => {
            for i in 0..n {
                rhs[i] = cfg.laplacian_phi(crate::points::norm(&local[i]), d);
            }
            for (q, e) in exps.iter().enumerate() {
                rhs[n + q] = monomial_laplacian_at_origin(e);
            }
        }
        Target::ValueAt(x) => {
            let xl: Vec<f64> = x.iter().zip(center).map(|(a, c)| (a - c) / scale).collect();
            for i in 0..n {
                rhs[i] = cfg.phi(dist(&xl, &local[i]));
            }
            for (q, e) in exps.iter().enumerate() {
                rhs[n + q] = monomial(&xl, e);
            }
        }
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularStencil { center: tag })?;
    if !sol.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularStencil { center: tag });
    }
    let factor = match target {
        Target::LaplacianAtCenter => 1.0 / (scale * scale),
        Target::ValueAt(_) => 1.0,
    };
    Ok(sol.iter().take(n).map(|w| w * factor).collect())
}

/// Weights `w` with `Σ w_i u(x_i) ≈ Δu(center)`.
pub fn phs_laplacian_weights(
    center: &[f64],
    neighbors: &Points,
    cfg: &PhsConfig,
) -> Result<Vec<f64>> {
    phs_laplacian_weights_tagged(center, neighbors, cfg, 0)
}

pub(crate) fn phs_laplacian_weights_tagged(
    center: &[f64],
    neighbors: &Points,
    cfg: &PhsConfig,
    tag: usize,
) -> Result<Vec<f64>> {
    stencil_weights(center, neighbors, cfg, Target::LaplacianAtCenter, tag)
}

/// Weights `w` with `Σ w_i u(x_i) ≈ u(x)`; the stencil is centred at `center`.
pub fn phs_interpolation_weights(
    center: &[f64],
    x: &[f64],
    neighbors: &Points,
    cfg: &PhsConfig,
) -> Result<Vec<f64>> {
    stencil_weights(center, neighbors, cfg, Target::ValueAt(x), 0)
}
