//! Thomas algorithm for tridiagonal systems.

/// Solves `sub[j] x[j-1] + diag[j] x[j] + sup[j] x[j+1] = rhs[j]` in place of `rhs`.
///
/// `sub[0]` and `sup[n-1]` are ignored. The matrix is assumed diagonally dominant,
/// so no pivoting is done.
pub(crate) fn solve_in_place(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    let n = diag.len();
    debug_assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for j in 1..n {
        scratch[j] = sup[j - 1] / beta;
        beta = diag[j] - sub[j] * scratch[j];
        rhs[j] = (rhs[j] - sub[j] * rhs[j - 1]) / beta;
    }
    for j in (0..n - 1).rev() {
        rhs[j] -= scratch[j + 1] * rhs[j + 1];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // [2 1 0; 1 3 1; 0 1 2] x = [3, 5, 3] has x = [1, 1, 1].
        let mut rhs = vec![3.0, 5.0, 3.0];
        let mut s = Vec::new();
        solve_in_place(
            &[0.0, 1.0, 1.0],
            &[2.0, 3.0, 2.0],
            &[1.0, 1.0, 0.0],
            &mut rhs,
            &mut s,
        );
        for v in rhs {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }
}
