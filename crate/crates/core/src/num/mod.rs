//! Small self-contained numerics used across the crate: adaptive
//! Gauss-Kronrod quadrature, a Dormand-Prince 5(4) integrator with dense
//! output, tridiagonal solvers, and fitting helpers.

pub mod fit;
pub mod ode;
pub mod quad;
pub mod tridiag;

/// Brent-style root bracketing refinement: plain bisection to `xtol`
/// followed by one secant polish. Assumes `f(lo)` and `f(hi)` have
/// opposite signs.
pub fn bisect_then_secant<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    mut f_lo: f64,
    xtol: f64,
) -> f64 {
    for _ in 0..200 {
        if hi - lo < xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    // one secant step using the bracket endpoints
    let f_hi = f(hi);
    let f_lo2 = f(lo);
    if (f_hi - f_lo2).abs() > 0.0 {
        let x = lo - f_lo2 * (hi - lo) / (f_hi - f_lo2);
        if x > lo && x < hi {
            return x;
        }
    }
    0.5 * (lo + hi)
}
