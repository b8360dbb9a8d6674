//! Small dense numerics shared by the geometry and inflation code.
//!
//! Everything here works on row-major slices of at most a few dozen entries;
//! the larger optimization problems go through [`crate::conic`].

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

/// In-place Cholesky factorization of a symmetric positive definite `n×n`
/// matrix. On success the lower triangle holds `L` with `A = L Lᵀ`; the
/// strict upper triangle is zeroed.
pub(crate) fn cholesky(a: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return false;
        }
        let ljj = sqrt(diag);
        a[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
        for i in 0..j {
            a[i * n + j] = 0.0;
        }
    }
    true
}

/// Solves `L Lᵀ x = b` in place given the factor from [`cholesky`].
pub(crate) fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// `log det A` from a Cholesky factor.
pub(crate) fn cholesky_logdet(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| 2.0 * ln(l[i * n + i])).sum()
}

/// Inverse of a symmetric positive definite matrix, or `None` if the
/// factorization fails.
pub(crate) fn spd_inverse(a: &[f64], n: usize) -> Option<[f64; 9]> {
    debug_assert!(n <= 3);
    let mut l = [0.0; 9];
    l[..n * n].copy_from_slice(&a[..n * n]);
    if !cholesky(&mut l[..n * n], n) {
        return None;
    }
    let mut inv = [0.0; 9];
    for j in 0..n {
        let mut col = [0.0; 3];
        col[j] = 1.0;
        cholesky_solve(&l[..n * n], n, &mut col[..n]);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    // symmetrize against round-off
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (inv[i * n + j] + inv[j * n + i]);
            inv[i * n + j] = m;
            inv[j * n + i] = m;
        }
    }
    Some(inv)
}

/// `y = A x` for a row-major `n×n` matrix.
pub(crate) fn mat_vec(a: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    for i in 0..n {
        y[i] = (0..n).map(|k| a[i * n + k] * x[k]).sum();
    }
}

/// Solves a dense `n×n` system with partial pivoting; returns `None` when the
/// matrix is numerically singular relative to `pivot_tol`.
pub(crate) fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize, pivot_tol: f64) -> Option<()> {
    for col in 0..n {
        let (piv, pmax) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax <= pivot_tol {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        for r in (col + 1)..n {
            let f = a[r * n + col] / a[col * n + col];
            if f != 0.0 {
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for r in (0..n).rev() {
        let mut s = b[r];
        for k in (r + 1)..n {
            s -= a[r * n + k] * b[k];
        }
        b[r] = s / a[r * n + r];
    }
    Some(())
}
