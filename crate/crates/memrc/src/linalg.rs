//! Small dense linear-algebra kernels used by the circuit solver and the
//! readout trainer. Systems here are at most a few hundred unknowns, so a
//! direct dense factorization is the right tool.

use ndarray::{Array1, Array2};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular (pivot {pivot:.3e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("matrix is not positive definite (diagonal {diag:.3e} at column {col})")]
    NotPositiveDefinite { col: usize, diag: f64 },
    #[error("dimension mismatch: matrix is {rows}x{cols}, rhs has length {rhs}")]
    DimensionMismatch { rows: usize, cols: usize, rhs: usize },
}

/// In-place LU factorization with partial pivoting, reusable across solves
/// with the same sparsity-free dense layout.
pub struct LuSolver {
    lu: Array2<f64>,
    perm: Vec<usize>,
    n: usize,
}

impl LuSolver {
    /// Factorizes `a` (consumed). Pivots below `abs_tol` are treated as singular.
    pub fn factorize(mut a: Array2<f64>, abs_tol: f64) -> Result<Self, LinalgError> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU requires a square matrix");
        let mut perm: Vec<usize> = (0..n).collect();

        for col in 0..n {
            // partial pivot: largest magnitude in this column at or below the diagonal
            let mut pivot_row = col;
            let mut pivot_val = a[[col, col]].abs();
            for row in col + 1..n {
                let v = a[[row, col]].abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = row;
                }
            }
            if !(pivot_val > abs_tol) {
                return Err(LinalgError::Singular { col, pivot: pivot_val });
            }
            if pivot_row != col {
                perm.swap(col, pivot_row);
                for k in 0..n {
                    let tmp = a[[col, k]];
                    a[[col, k]] = a[[pivot_row, k]];
                    a[[pivot_row, k]] = tmp;
                }
            }
            let inv_pivot = 1.0 / a[[col, col]];
            for row in col + 1..n {
                let factor = a[[row, col]] * inv_pivot;
                a[[row, col]] = factor;
                if factor != 0.0 {
                    for k in col + 1..n {
                        a[[row, k]] -= factor * a[[col, k]];
                    }
                }
            }
        }
        Ok(Self { lu: a, perm, n })
    }

    /// Releases the factorized storage so callers can recycle the allocation.
    pub fn into_matrix(self) -> Array2<f64> {
        self.lu
    }

    /// Solves `A x = b` using the stored factorization.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                rows: self.n,
                cols: self.n,
                rhs: b.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // forward substitution (unit lower triangle)
        for i in 1..self.n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc;
        }
        // back substitution
        for i in (0..self.n).rev() {
            let mut acc = x[i];
            for j in i + 1..self.n {
                acc -= self.lu[[i, j]] * x[j];
            }
            x[i] = acc / self.lu[[i, i]];
        }
        Ok(x)
    }
}

/// Solves the symmetric positive-definite system `A x = b` by Cholesky
/// factorization. Fails with `NotPositiveDefinite` when a diagonal entry
/// collapses, which for normal equations signals a rank-deficient design.
pub fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>, LinalgError> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "Cholesky requires a square matrix");
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch { rows: n, cols: n, rhs: b.len() });
    }
    // scale-aware breakdown threshold
    let max_diag = (0..n).map(|i| a[[i, i]].abs()).fold(0.0f64, f64::max);
    let tol = max_diag * 1e-13;

    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if !(diag > tol) {
            return Err(LinalgError::NotPositiveDefinite { col: j, diag });
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in j + 1..n {
            let mut acc = a[[i, j]];
            for k in 0..j {
                acc -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = acc / ljj;
        }
    }
    // L y = b
    let mut y = b.clone();
    for i in 0..n {
        let mut acc = y[i];
        for k in 0..i {
            acc -= l[[i, k]] * y[k];
        }
        y[i] = acc / l[[i, i]];
    }
    // L^T x = y
    let mut x = y;
    for i in (0..n).rev() {
        let mut acc = x[i];
        for k in i + 1..n {
            acc -= l[[k, i]] * x[k];
        }
        x[i] = acc / l[[i, i]];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn lu_solves_known_system() {
        let a = array![[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]];
        let solver = LuSolver::factorize(a.clone(), 1e-300).unwrap();
        let x = solver.solve(&[3.0, 5.0, 5.0]).unwrap();
        for (i, xi) in x.iter().enumerate() {
            let recon: f64 = (0..3).map(|j| a[[i, j]] * x[j]).sum();
            let b = [3.0, 5.0, 5.0][i];
            assert_abs_diff_eq!(recon, b, epsilon = 1e-12);
            assert!(xi.is_finite());
        }
    }

    #[test]
    fn lu_agrees_with_nalgebra_on_random_systems() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(99);
        for n in [3usize, 8, 25] {
            let mut a = Array2::<f64>::zeros((n, n));
            let mut b = vec![0.0; n];
            for i in 0..n {
                b[i] = rng.random_range(-1.0..1.0);
                for j in 0..n {
                    a[[i, j]] = rng.random_range(-1.0..1.0);
                }
                a[[i, i]] += n as f64; // diagonally dominant, well conditioned
            }
            let x = LuSolver::factorize(a.clone(), 1e-300).unwrap().solve(&b).unwrap();

            let na = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
            let nb = nalgebra::DVector::from_row_slice(&b);
            let nx = na.lu().solve(&nb).unwrap();
            for i in 0..n {
                assert_abs_diff_eq!(x[i], nx[i], epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn lu_reports_singular() {
        let a = array![[1.0, 2.0], [2.0, 4.0]];
        assert!(matches!(
            LuSolver::factorize(a, 1e-12),
            Err(LinalgError::Singular { .. })
        ));
    }

    #[test]
    fn cholesky_solves_spd_and_rejects_rank_deficient() {
        let a = array![[4.0, 2.0], [2.0, 3.0]];
        let x = solve_spd(&a, &array![8.0, 7.0]).unwrap();
        assert_abs_diff_eq!(4.0 * x[0] + 2.0 * x[1], 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(2.0 * x[0] + 3.0 * x[1], 7.0, epsilon = 1e-12);

        let deficient = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(matches!(
            solve_spd(&deficient, &array![1.0, 1.0]),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }
}
