//! Dense factorization and spectral helpers backed by `faer`.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatRef, Side};

use crate::error::{RbfError, Result};

/// A pivot smaller than this times the largest initial entry is treated as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// LU factorization with row pivoting of a square matrix.
pub struct LuFactor {
    lu: PartialPivLu<f64>,
    dim: usize,
    norm1: f64,
}

impl std::fmt::Debug for LuFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactor")
            .field("dim", &self.dim)
            .field("norm1", &self.norm1)
            .finish()
    }
}

/// Factor `m`, failing with [`RbfError::SingularSystem`] at the first negligible pivot.
pub fn factorize(m: MatRef<'_, f64>) -> Result<LuFactor> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(RbfError::Domain(format!(
            "cannot factor a {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    let mut max_entry = 0.0f64;
    let mut norm1 = 0.0f64;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            let a = m[(i, j)].abs();
            if !a.is_finite() {
                return Err(RbfError::NumericalBreakdown(format!(
                    "matrix entry ({i}, {j}) is not finite"
                )));
            }
            max_entry = max_entry.max(a);
            col += a;
        }
        norm1 = norm1.max(col);
    }
    let lu = m.partial_piv_lu();
    let threshold = PIVOT_TOLERANCE * max_entry;
    let u = lu.U();
    for k in 0..n {
        let pivot = u[(k, k)];
        if !(pivot.abs() > threshold) {
            return Err(RbfError::SingularSystem {
                index: k,
                pivot,
                hint: None,
            });
        }
    }
    Ok(LuFactor { lu, dim: n, norm1 })
}

impl LuFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.dim, 1, |i, _| rhs[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_transpose(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.dim, 1, |i, _| rhs[i]);
        self.lu.solve_transpose_in_place(x.as_mut());
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }

    /// 1-norm condition estimate `||A||_1 * est(||A^-1||_1)` (Hager, with Higham's safeguard).
    pub fn condition_estimate(&self) -> f64 {
        let n = self.dim;
        if n == 0 {
            return 1.0;
        }
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0f64;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = est.max(y.iter().map(|v| v.abs()).sum());
            let signs: Vec<f64> = y
                .iter()
                .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            let z = self.solve_transpose(&signs);
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0f64), |acc, (i, v)| {
                if v.abs() > acc.1 {
                    (i, v.abs())
                } else {
                    acc
                }
            });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x.iter_mut().for_each(|v| *v = 0.0);
            x[j] = 1.0;
        }
        if n > 1 {
            let b: Vec<f64> = (0..n)
                .map(|i| {
                    let s = if i % 2 == 0 { 1.0 } else { -1.0 };
                    s * (1.0 + i as f64 / (n - 1) as f64)
                })
                .collect();
            let y = self.solve(&b);
            let alt = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
            est = est.max(alt);
        }
        self.norm1 * est
    }

    /// Diagonal of the inverse, solving against blocks of identity columns.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        const BLOCK: usize = 64;
        let n = self.dim;
        let mut diag = vec![0.0; n];
        let mut start = 0;
        while start < n {
            let width = BLOCK.min(n - start);
            let mut block = Mat::from_fn(n, width, |i, j| if i == start + j { 1.0 } else { 0.0 });
            self.lu.solve_in_place(block.as_mut());
            for j in 0..width {
                diag[start + j] = block[(start + j, j)];
            }
            start += width;
        }
        diag
    }
}

/// Ascending eigenvalues of a symmetric matrix (lower triangle is read).
pub fn symmetric_eigenvalues(m: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if m.nrows() != m.ncols() {
        return Err(RbfError::Domain(
            "eigenvalues of a non-square matrix".into(),
        ));
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut ev = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| RbfError::Eigen(format!("{e:?}")))?;
    if ev.iter().any(|v| !v.is_finite()) {
        return Err(RbfError::Eigen(
            "eigensolver returned non-finite values".into(),
        ));
    }
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}
