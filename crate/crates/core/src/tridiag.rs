//! Thomas solver for tridiagonal systems. The Newton matrices assembled by
//! the flow are strictly diagonally dominant M-matrices, so no pivoting is
//! needed.

use alloc::vec::Vec;

/// Solves `A x = rhs` in place where `A` has sub-diagonal `lower[i]`
/// (coefficient of `x[i-1]` in row `i`), diagonal `diag`, super-diagonal
/// `upper[i]` (coefficient of `x[i+1]`). `lower[0]` and `upper[n-1]` are
/// ignored.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64], work: &mut Vec<f64>) {
    let n = rhs.len();
    debug_assert!(n >= 2);
    debug_assert_eq!(lower.len(), n);
    debug_assert_eq!(diag.len(), n);
    debug_assert_eq!(upper.len(), n);
    work.clear();
    work.resize(n, 0.0);
    // forward sweep
    work[0] = upper[0] / diag[0];
    rhs[0] /= diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * work[i - 1];
        work[i] = upper[i] / m;
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / m;
    }
    // back substitution
    for i in (0..n - 1).rev() {
        rhs[i] -= work[i] * rhs[i + 1];
    }
}
