//! Symmetric sparse matrices in CSR form and a preconditioned conjugate
//! gradient solver.
//!
//! Matrices here are small (desk-scale meshes), but the solver paths are the
//! same ones a larger run would use: assembly from triplets, diagonal (Jacobi)
//! preconditioning, and deterministic iteration.

use crate::error::{Error, Result};

/// Symmetric sparse matrix stored as CSR with sorted column indices.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Builds from (row, col, value) triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet index out of range");
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Diagonal matrix from a vector.
    pub fn from_diagonal(d: &[f64]) -> Self {
        let triplets: Vec<(usize, usize, f64)> =
            d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        SparseOperator::from_triplets(d.len(), &triplets)
    }

    pub fn identity(n: usize) -> Self {
        SparseOperator::from_diagonal(&vec![1.0; n])
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    /// Iterates stored entries as (row, col, value).
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (self.col_idx[k], self.values[k]))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        y
    }

    pub fn diag(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    /// xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// xᵀ A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        let mut acc = 0.0;
        for i in 0..self.n {
            let mut row = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                row += self.values[k] * y[self.col_idx[k]];
            }
            acc += x[i] * row;
        }
        acc
    }

    /// A + B entrywise (patterns may differ).
    pub fn add(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.n, other.n);
        let mut triplets: Vec<(usize, usize, f64)> = self.entries().collect();
        triplets.extend(other.entries());
        SparseOperator::from_triplets(self.n, &triplets)
    }

    /// A + s·diag(d).
    pub fn add_scaled_diagonal(&self, d: &[f64], s: f64) -> SparseOperator {
        assert_eq!(d.len(), self.n);
        let mut triplets: Vec<(usize, usize, f64)> = self.entries().collect();
        for (i, &v) in d.iter().enumerate() {
            triplets.push((i, i, s * v));
        }
        SparseOperator::from_triplets(self.n, &triplets)
    }

    /// Submatrix on the given (sorted) index set, rows and columns.
    pub fn restrict(&self, keep: &[usize]) -> SparseOperator {
        let mut pos = vec![usize::MAX; self.n];
        for (p, &i) in keep.iter().enumerate() {
            pos[i] = p;
        }
        let mut triplets = Vec::new();
        for (p, &i) in keep.iter().enumerate() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if pos[j] != usize::MAX {
                    triplets.push((p, pos[j], self.values[k]));
                }
            }
        }
        SparseOperator::from_triplets(keep.len(), &triplets)
    }

    /// Entry-wise symmetry check (exact by default assembly; tol for callers).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        for (i, j, v) in self.entries() {
            let vt = self.row(j).find(|&(c, _)| c == i).map(|(_, w)| w);
            match vt {
                Some(w) if (w - v).abs() <= tol => {}
                _ => return false,
            }
        }
        true
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves A x = rhs for symmetric positive definite A by Jacobi-preconditioned
/// conjugate gradients, to relative residual ‖Ax − rhs‖₂ ≤ tol·‖rhs‖₂.
///
/// Deterministic given its inputs. Fails with the final residual if the
/// iteration cap (10·n + 100) is exceeded.
pub fn solve_spd(a: &SparseOperator, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    solve_spd_from(a, rhs, None, tol).map(|(x, _)| x)
}

/// As [`solve_spd`], optionally warm-started; also returns the iteration count.
pub fn solve_spd_from(
    a: &SparseOperator,
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
) -> Result<(Vec<f64>, usize)> {
    let n = a.dimension();
    assert_eq!(rhs.len(), n);
    let rhs_norm = norm2(rhs);
    if rhs_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let ax = a.matvec(&x);
    let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, v)| b - v).collect();
    let d = a.diag();
    assert!(
        d.iter().all(|&v| v > 0.0),
        "Jacobi preconditioner needs a positive diagonal"
    );
    let precond = |r: &[f64]| -> Vec<f64> { r.iter().zip(&d).map(|(v, di)| v / di).collect() };

    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n + 100;
    for iter in 0..max_iter {
        let rnorm = norm2(&r);
        if rnorm <= tol * rhs_norm {
            return Ok((x, iter));
        }
        let ap = a.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::invalid(
                "conjugate gradient: matrix is not positive definite",
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        z = precond(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rz = rz_new;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: norm2(&r) / rhs_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let a = SparseOperator::identity(4);
        let b = vec![1.0, -2.0, 3.5, 0.0];
        let x = solve_spd(&a, &b, 1e-12).unwrap();
        for (xi, bi) in x.iter().zip(&b) {
            assert!((xi - bi).abs() <= 1e-12);
        }
    }

    #[test]
    fn diagonal_system() {
        let a = SparseOperator::from_triplets(2, &[(0, 0, 2.0), (1, 1, 4.0)]);
        let x = solve_spd(&a, &[2.0, 4.0], 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() <= 1e-12);
        assert!((x[1] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn zero_rhs_returns_zero_exactly() {
        let a = SparseOperator::from_triplets(3, &[(0, 0, 2.0), (1, 1, 1.0), (2, 2, 3.0)]);
        let x = solve_spd(&a, &[0.0, 0.0, 0.0], 1e-12).unwrap();
        assert_eq!(x, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn duplicate_triplets_are_summed() {
        let a = SparseOperator::from_triplets(2, &[(0, 0, 1.0), (0, 0, 1.5), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]);
        assert_eq!(a.diag(), vec![2.5, 2.0]);
        assert!(a.is_symmetric(0.0));
    }

    #[test]
    fn restrict_takes_submatrix() {
        // [[2,-1,0],[-1,2,-1],[0,-1,2]] restricted to {0,2} is diag(2,2)
        let a = SparseOperator::from_triplets(
            3,
            &[
                (0, 0, 2.0),
                (0, 1, -1.0),
                (1, 0, -1.0),
                (1, 1, 2.0),
                (1, 2, -1.0),
                (2, 1, -1.0),
                (2, 2, 2.0),
            ],
        );
        let s = a.restrict(&[0, 2]);
        assert_eq!(s.dimension(), 2);
        assert_eq!(s.diag(), vec![2.0, 2.0]);
        assert_eq!(s.entries().count(), 2);
    }
}
