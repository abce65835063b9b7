//! Compressed sparse row matrices and a preconditioned BiCGSTAB solver.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from per-row `(column, value)` lists. Duplicate columns
    /// within a row are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if c >= n {
                    return Err(Error::InvalidInput(format!(
                        "column {c} out of range in row {i}"
                    )));
                }
                if indices.len() > indptr[i] && *indices.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix {
            n,
            indptr,
            indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.values[k] * x[self.indices[k]];
            }
            y[i] = s;
        }
    }

    pub fn residual_norm(&self, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; self.n];
        self.mul_vec(x, &mut ax);
        norm(&ax.iter().zip(b).map(|(a, b)| a - b).collect::<Vec<_>>())
    }
}

/// Incomplete LU factorization with the sparsity pattern of the matrix.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for k in lu.indptr[i]..lu.indptr[i + 1] {
                if lu.indices[k] == i {
                    diag[i] = k;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::Degenerate(format!("row {i} has no diagonal entry")));
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (lu.indptr[i], lu.indptr[i + 1]);
            for k in start..end {
                pos[lu.indices[k]] = k;
            }
            for k in start..end {
                let j = lu.indices[k];
                if j >= i {
                    break;
                }
                let pivot = lu.values[diag[j]];
                if pivot == 0.0 {
                    return Err(Error::Degenerate(format!("zero pivot in row {j}")));
                }
                let factor = lu.values[k] / pivot;
                lu.values[k] = factor;
                for kk in diag[j] + 1..lu.indptr[j + 1] {
                    let col = lu.indices[kk];
                    let p = pos[col];
                    if p != usize::MAX && p >= start && p < end {
                        lu.values[p] -= factor * lu.values[kk];
                    }
                }
            }
            for k in start..end {
                pos[lu.indices[k]] = usize::MAX;
            }
            if lu.values[diag[i]] == 0.0 {
                return Err(Error::Degenerate(format!("zero pivot in row {i}")));
            }
        }
        Ok(Ilu0 { lu, diag })
    }

    /// Solves `L U z = r` in place.
    pub fn apply(&self, z: &mut [f64]) {
        let a = &self.lu;
        for i in 0..a.n {
            let mut s = z[i];
            for k in a.indptr[i]..self.diag[i] {
                s -= a.values[k] * z[a.indices[k]];
            }
            z[i] = s;
        }
        for i in (0..a.n).rev() {
            let mut s = z[i];
            for k in self.diag[i] + 1..a.indptr[i + 1] {
                s -= a.values[k] * z[a.indices[k]];
            }
            z[i] = s / a.values[self.diag[i]];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Right-preconditioned BiCGSTAB from a zero initial guess. The returned
/// residual is recomputed from the final iterate.
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    precond: &Ilu0,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((
            x,
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
            },
        ));
    }
    let mut r = b.to_vec();
    let mut iterations = 0;
    // restarts recover from breakdowns of the short recurrences
    for _restart in 0..5 {
        let r0 = r.clone();
        let mut p = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut t = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut z = vec![0.0; n];
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        while iterations < max_iter {
            iterations += 1;
            let rho_new = dot(&r0, &r);
            if rho_new.abs() < 1e-300 {
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            y.copy_from_slice(&p);
            precond.apply(&mut y);
            a.mul_vec(&y, &mut v);
            let denom = dot(&r0, &v);
            if denom.abs() < 1e-300 {
                break;
            }
            alpha = rho / denom;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            if norm(&s) <= tol * bnorm {
                for i in 0..n {
                    x[i] += alpha * y[i];
                }
                r.copy_from_slice(&s);
                break;
            }
            z.copy_from_slice(&s);
            precond.apply(&mut z);
            a.mul_vec(&z, &mut t);
            let tt = dot(&t, &t);
            if tt == 0.0 {
                break;
            }
            omega = dot(&t, &s) / tt;
            for i in 0..n {
                x[i] += alpha * y[i] + omega * z[i];
                r[i] = s[i] - omega * t[i];
            }
            if norm(&r) <= tol * bnorm || omega == 0.0 {
                break;
            }
        }
        let mut ax = vec![0.0; n];
        a.mul_vec(&x, &mut ax);
        for i in 0..n {
            r[i] = b[i] - ax[i];
        }
        let rel = norm(&r) / bnorm;
        if rel <= tol || !rel.is_finite() || iterations >= max_iter {
            break;
        }
    }
    let rel = norm(&r) / bnorm;
    if !(rel <= tol) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotConverged {
            residual: rel,
            iterations,
        });
    }
    Ok((
        x,
        SolveReport {
            iterations,
            relative_residual: rel,
        },
    ))
}

/// Solves `a x = b` to relative residual `tol` with ILU(0)-preconditioned BiCGSTAB.
pub fn solve(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    let ilu = Ilu0::new(a)?;
    bicgstab(a, b, &ilu, tol, 2000)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn laplace_1d(m: usize) -> CsrMatrix {
        let rows = (0..m)
            .map(|i| {
                let mut r = vec![(i, -2.0)];
                if i > 0 {
                    r.push((i - 1, 1.0));
                }
                if i + 1 < m {
                    r.push((i + 1, 1.0));
                }
                r
            })
            .collect();
        CsrMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn identity_solve() {
        let a = CsrMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        let (x, rep) = solve(&a, &b, 1e-12).unwrap();
        assert_eq!(x, b.to_vec());
        assert!(rep.relative_residual <= 1e-12);
    }

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let a =
            CsrMatrix::from_rows(vec![vec![(1, 2.0), (0, 1.0), (1, 3.0)], vec![(1, 1.0)]]).unwrap();
        assert_eq!(a.get(0, 1), 5.0);
        assert_eq!(a.nnz(), 3);
        assert!(CsrMatrix::from_rows(vec![vec![(3, 1.0)]]).is_err());
    }

    #[test]
    fn ilu_is_exact_on_tridiagonal() {
        let a = laplace_1d(20);
        let ilu = Ilu0::new(&a).unwrap();
        let x: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; 20];
        a.mul_vec(&x, &mut b);
        ilu.apply(&mut b);
        for (u, v) in x.iter().zip(&b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-10);
        }
    }

    #[test]
    fn nonsymmetric_system() {
        let n = 200;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 4.0)];
                if i > 0 {
                    r.push((i - 1, -1.5));
                }
                if i + 1 < n {
                    r.push((i + 1, -0.5));
                }
                if i + 7 < n {
                    r.push((i + 7, 0.3));
                }
                r
            })
            .collect();
        let a = CsrMatrix::from_rows(rows).unwrap();
        let b: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64).collect();
        let (x, rep) = solve(&a, &b, 1e-12).unwrap();
        assert!(a.residual_norm(&x, &b) / norm(&b) <= 1e-12);
        assert!(rep.iterations > 0);
    }

    #[test]
    fn singular_system_is_reported() {
        let a =
            CsrMatrix::from_rows(vec![vec![(0, 1.0), (1, 1.0)], vec![(0, 1.0), (1, 1.0)]]).unwrap();
        assert!(solve(&a, &[1.0, 2.0], 1e-10).is_err());
    }
}
