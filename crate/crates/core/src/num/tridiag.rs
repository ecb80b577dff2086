//! Symmetric tridiagonal eigen tools (Sturm-sequence bisection, inverse
//! iteration) and the Thomas solve.

/// Count eigenvalues of the symmetric tridiagonal (diag, off) strictly below `lambda`.
///
/// LDLT pivots: the number of negative pivots equals the eigenvalue count.
pub fn sturm_count(diag: &[f64], off: &[f64], lambda: f64) -> usize {
    let n = diag.len();
    if n == 0 {
        return 0;
    }
    let guard = 1e-300;
    let mut count = 0usize;
    let mut q = diag[0] - lambda;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..n {
        let q_safe = if q.abs() < guard {
            if q >= 0.0 {
                guard
            } else {
                -guard
            }
        } else {
            q
        };
        q = (diag[i] - lambda) - off[i - 1] * off[i - 1] / q_safe;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest eigenvalue by Sturm bisection, to relative precision ~1e-14.
pub fn min_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let n = diag.len();
    debug_assert!(n >= 2);
    // Gershgorin bounds
    let mut lo = f64::MAX;
    let mut hi = f64::MIN;
    for i in 0..n {
        let el = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let er = if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - el - er);
        hi = hi.max(diag[i] + el + er);
    }
    lo -= 1.0;
    hi += 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 2.0 * f64::EPSILON * mid.abs().max(1.0) {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Thomas solve of a general tridiagonal system (sub, diag, sup) x = rhs.
pub fn solve(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64], x: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i - 1] * c[i - 1];
        c[i] = if i < n - 1 { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
}

/// Eigenvector for an isolated eigenvalue `lambda` of the symmetric
/// tridiagonal (diag, off), by shifted inverse iteration. Returns a unit
/// 2-norm vector.
pub fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64, iters: usize) -> Vec<f64> {
    let n = diag.len();
    // deterministic non-degenerate start
    let mut v: Vec<f64> = (0..n)
        .map(|i| 1.0 + 0.3 * ((i * 2654435761) % 97) as f64 / 97.0)
        .collect();
    let shift = lambda - 1e-11 * lambda.abs().max(1.0);
    let d_sh: Vec<f64> = diag.iter().map(|d| d - shift).collect();
    let mut w = vec![0.0; n];
    for _ in 0..iters {
        solve(off, &d_sh, off, &v, &mut w);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        for i in 0..n {
            v[i] = w[i] / norm;
        }
    }
    v
}
