//! Tiny dense kernels for the 2–4 dimensional Newton systems.

/// Solves `a x = b` for a symmetric positive definite `a` (row-major, `k×k`, `k ≤ 4`)
/// by Cholesky factorization. Returns `None` when `a` is not positive definite.
pub(crate) fn cholesky_solve(a: &[[f64; 4]; 4], b: &[f64; 4], k: usize) -> Option<[f64; 4]> {
    let mut l = [[0.0; 4]; 4];
    for i in 0..k {
        for j in 0..=i {
            let mut sum = a[i][j];
            for p in 0..j {
                sum -= l[i][p] * l[j][p];
            }
            if i == j {
                if !(sum > 0.0) {
                    return None;
                }
                l[i][i] = libm::sqrt(sum);
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = [0.0; 4];
    for i in 0..k {
        let mut sum = b[i];
        for p in 0..i {
            sum -= l[i][p] * y[p];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = [0.0; 4];
    for i in (0..k).rev() {
        let mut sum = y[i];
        for p in i + 1..k {
            sum -= l[p][i] * x[p];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}

/// Eigenvalues `(min, max)` of the symmetric 2×2 matrix `[[a, b], [b, c]]`.
pub fn sym2_eigenvalues(a: f64, b: f64, c: f64) -> (f64, f64) {
    let mean = 0.5 * (a + c);
    let half_diff = 0.5 * (a - c);
    let radius = libm::hypot(half_diff, b);
    (mean - radius, mean + radius)
}
