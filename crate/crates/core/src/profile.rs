//! The Kull-Anisimov density profile.
//!
//! `xi(y)` is the solution of `xi' = xi^(nu+1) (1 - xi)` normalized by
//! `xi(0) = 1/2` (all nonconstant solutions differ by a translation). The
//! implicit inverse has the exact split
//!
//! ```text
//! y(xi) = int_{1/2}^{xi} d eta / (eta^(nu+1) (1 - eta))
//!       = [sum_{j=0..m} eta^(j-nu)/(j-nu) - ln(1-eta)]  +  smooth remainder,
//! ```
//!
//! with `m = ceil(nu) + 1`, since `1/(eta^(nu+1)(1-eta)) = sum_{j<=m}
//! eta^(j-nu-1) + eta^(m-nu)/(1-eta)`. The elementary part is evaluated in
//! closed form; the remainder is tabulated once on a logit grid and
//! interpolated with exact-derivative Hermite cubics. `xi(y)` then inverts
//! the relation by a safeguarded Newton iteration in the logit variable, in
//! which `dy/ds = xi^-nu` is elementary.

use crate::error::{Error, Result};
use crate::num::quad;

/// Problem constants for one ablation-front configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Thermal conduction index (dimensionless, > 1).
    pub nu: f64,
    /// Gravity (length/time^2).
    pub g: f64,
    /// Profile length scale (length).
    pub l0: f64,
    /// Ablated-fluid density (mass/length^3).
    pub rho_a: f64,
}

impl PhysicalParams {
    pub fn new(nu: f64, g: f64, l0: f64, rho_a: f64) -> Result<Self> {
        if !(nu > 1.0) {
            return Err(Error::InvalidParameter(format!("nu must be > 1, got {nu}")));
        }
        if !(g > 0.0) || !(l0 > 0.0) || !(rho_a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "g, L0, rho_a must be > 0, got g={g}, L0={l0}, rho_a={rho_a}"
            )));
        }
        Ok(Self { nu, g, l0, rho_a })
    }

    /// Effective gradient length `L_eff = L0 (nu+1)^(nu+1) / nu^nu`, the
    /// growth-rate cap `Lambda = sqrt(g / L_eff)`, and the maximizing
    /// `xi* = nu/(nu+1)` of `xi^nu (1 - xi)`.
    pub fn l_eff_and_cap(&self) -> (f64, f64, f64) {
        let nu = self.nu;
        let l_eff = self.l0 * (nu + 1.0).powf(nu + 1.0) / nu.powf(nu);
        (l_eff, (self.g / l_eff).sqrt(), nu / (nu + 1.0))
    }
}

/// One profile evaluation at a scaled coordinate.
#[derive(Debug, Clone, Copy)]
pub struct ProfileEval {
    /// Dimensionless density fraction in (0, 1).
    pub xi: f64,
    /// d(xi)/dy = xi^(nu+1) (1 - xi).
    pub xi_dot: f64,
    /// xi^nu (1 - xi) = xi_dot / xi; physical k0 is this over L0.
    pub k0_scaled: f64,
}

/// Tabulated profile for one conduction index. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Profile {
    nu: f64,
    m: usize,
    /// logit grid s_i and the corresponding y values
    s_grid: Vec<f64>,
    y_grid: Vec<f64>,
    /// smooth remainder integral and its exact s-derivative at the nodes
    rem_int: Vec<f64>,
    rem_der: Vec<f64>,
    /// closed(1/2) offset so that y(1/2) = 0
    closed_half: f64,
    /// left asymptote constant: y = k_left - xi^-nu/nu - xi^(1-nu)/(nu-1)
    k_left: f64,
}

// logit grid from s = -34 to s = 29 in steps of 1/50, with s = 0 a node
const S_STEP: f64 = 0.02;
const N_NEG: usize = 1700;
const N_POS: usize = 1450;
const N_NODES: usize = N_NEG + N_POS + 1;

fn sigmoid(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

/// ln(xi) computed stably from the logit variable.
fn ln_xi_of_s(s: f64) -> f64 {
    -(-s).exp().ln_1p()
}

/// ln(1 - xi) computed stably from the logit variable.
fn ln_one_minus_xi_of_s(s: f64) -> f64 {
    if s > 0.0 {
        -s - (-s).exp().ln_1p()
    } else {
        -s.exp().ln_1p()
    }
}

impl Profile {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 1.0) {
            return Err(Error::InvalidParameter(format!("nu must be > 1, got {nu}")));
        }
        let m = nu.ceil() as usize + 1;
        let mut s_grid = Vec::with_capacity(N_NODES);
        for i in 0..N_NODES {
            s_grid.push((i as f64 - N_NEG as f64) * S_STEP);
        }
        // remainder integrand in s: rem(xi(s)) * xi (1 - xi)
        let integrand = |s: f64| {
            let xi = sigmoid(s);
            rem_core(xi, s, nu, m) * xi * (1.0 - xi)
        };
        // cumulative from s = 0 outward so that the value at xi = 1/2 is 0
        let i_half = s_grid.iter().position(|&s| s >= 0.0).unwrap();
        debug_assert!((s_grid[i_half]).abs() < 1e-12);
        let mut rem_int = vec![0.0; N_NODES];
        for i in (0..i_half).rev() {
            rem_int[i] =
                rem_int[i + 1] - quad::adaptive(&integrand, s_grid[i], s_grid[i + 1], 1e-15, 8);
        }
        for i in i_half + 1..N_NODES {
            rem_int[i] =
                rem_int[i - 1] + quad::adaptive(&integrand, s_grid[i - 1], s_grid[i], 1e-15, 8);
        }
        let rem_der: Vec<f64> = s_grid.iter().map(|&s| integrand(s)).collect();
        let closed_half = closed_part(0.0, nu, m);
        let mut profile = Profile {
            nu,
            m,
            y_grid: vec![0.0; N_NODES],
            s_grid,
            rem_int,
            rem_der,
            closed_half,
            k_left: 0.0,
        };
        for i in 0..N_NODES {
            profile.y_grid[i] = profile.y_of_s(profile.s_grid[i]);
        }
        // left-branch constant from the table edge
        let s0 = profile.s_grid[0];
        let xi0 = sigmoid(s0);
        profile.k_left = profile.y_grid[0] + xi0.powf(-nu) / nu + xi0.powf(1.0 - nu) / (nu - 1.0);
        Ok(profile)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// y as a function of the logit variable (table interior).
    fn y_of_s(&self, s: f64) -> f64 {
        closed_part(s, self.nu, self.m) - self.closed_half + self.rem_interp(s)
    }

    /// Hermite-cubic interpolation of the remainder integral.
    fn rem_interp(&self, s: f64) -> f64 {
        let h = self.s_grid[1] - self.s_grid[0];
        let idx = (((s - self.s_grid[0]) / h) as usize).min(N_NODES - 2);
        let s0 = self.s_grid[idx];
        let t = (s - s0) / h;
        let (p0, p1) = (self.rem_int[idx], self.rem_int[idx + 1]);
        let (m0, m1) = (self.rem_der[idx] * h, self.rem_der[idx + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        p0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + m0 * (t3 - 2.0 * t2 + t)
            + p1 * (-2.0 * t3 + 3.0 * t2)
            + m1 * (t3 - t2)
    }

    /// The profile value at scaled coordinate `y` (total on finite inputs).
    pub fn xi(&self, y: f64) -> f64 {
        if y < self.y_grid[0] {
            return self.xi_left(y);
        }
        if y > self.y_grid[N_NODES - 1] {
            let edge = 1.0 - sigmoid(self.s_grid[N_NODES - 1]);
            return 1.0 - edge * (-(y - self.y_grid[N_NODES - 1])).exp();
        }
        // bracket on the y table, then safeguarded Newton in s
        let mut lo = 0usize;
        let mut hi = N_NODES - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.y_grid[mid] <= y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (mut s_lo, mut s_hi) = (self.s_grid[lo], self.s_grid[hi]);
        let mut s = 0.5 * (s_lo + s_hi);
        for _ in 0..60 {
            let f = self.y_of_s(s) - y;
            if f > 0.0 {
                s_hi = s;
            } else {
                s_lo = s;
            }
            // dy/ds = xi^-nu  =>  Newton step = -f * xi^nu
            let step = -f * (self.nu * ln_xi_of_s(s)).exp();
            let s_new = s + step;
            let s_next = if s_new > s_lo && s_new < s_hi {
                s_new
            } else {
                0.5 * (s_lo + s_hi)
            };
            if (s_next - s).abs() < 1e-15 * s.abs().max(1.0) {
                s = s_next;
                break;
            }
            s = s_next;
        }
        sigmoid(s)
    }

    /// Left asymptotic branch: invert `y = k_left - xi^-nu/nu - xi^(1-nu)/(nu-1)`.
    fn xi_left(&self, y: f64) -> f64 {
        let nu = self.nu;
        let mut x: f64 = (nu * (self.k_left - y)).powf(-1.0 / nu);
        for _ in 0..80 {
            let f = self.k_left - x.powf(-nu) / nu - x.powf(1.0 - nu) / (nu - 1.0) - y;
            let df = x.powf(-nu - 1.0) + x.powf(-nu);
            let step = f / df;
            x -= step;
            if step.abs() < 1e-16 * x {
                break;
            }
        }
        x
    }

    /// Full evaluation at `y`.
    pub fn eval(&self, y: f64) -> ProfileEval {
        let xi = self.xi(y);
        let k0_scaled = xi.powf(self.nu) * (1.0 - xi);
        ProfileEval {
            xi,
            xi_dot: k0_scaled * xi,
            k0_scaled,
        }
    }

    /// The scaled coordinate where the profile equals `xi_target`.
    pub fn y_of_xi(&self, xi_target: f64) -> Result<f64> {
        if !(xi_target > 0.0 && xi_target < 1.0) {
            return Err(Error::Domain(format!(
                "y_of_xi: xi must be in (0,1), got {xi_target}"
            )));
        }
        let s = xi_target.ln() - (-xi_target).ln_1p();
        if s < self.s_grid[0] {
            return Ok(self.k_left
                - xi_target.powf(-self.nu) / self.nu
                - xi_target.powf(1.0 - self.nu) / (self.nu - 1.0));
        }
        if s > self.s_grid[N_NODES - 1] {
            let edge = 1.0 - sigmoid(self.s_grid[N_NODES - 1]);
            return Ok(self.y_grid[N_NODES - 1] + (edge / (1.0 - xi_target)).ln());
        }
        Ok(self.y_of_s(s))
    }
}

/// Elementary part of y(xi): sum_{j=0..m} xi^(j-nu)/(j-nu) (ln xi when
/// j = nu) minus ln(1 - xi), all in the logit variable for stability.
fn closed_part(s: f64, nu: f64, m: usize) -> f64 {
    let ln_xi = ln_xi_of_s(s);
    let mut acc = 0.0;
    for j in 0..=m {
        let p = j as f64 - nu;
        if p.abs() < 1e-12 {
            acc += ln_xi;
        } else {
            acc += (p * ln_xi).exp() / p;
        }
    }
    acc - ln_one_minus_xi_of_s(s)
}

/// (xi^(m-nu) - 1) / (1 - xi), evaluated stably (limit m - nu at xi = 1).
fn rem_core(xi: f64, s: f64, nu: f64, m: usize) -> f64 {
    let p = m as f64 - nu;
    let ln_xi = ln_xi_of_s(s);
    let num = (p * ln_xi).exp_m1();
    let den = 1.0 - xi;
    if den < 1e-12 {
        // xi -> 1: num ~ p ln xi ~ -p (1-xi)
        p * (1.0 + 0.5 * (p - 1.0) * (1.0 - xi))
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::ode::Dopri5;

    #[test]
    fn normalization_and_monotonicity() {
        let p = Profile::new(2.0).unwrap();
        assert!((p.xi(0.0) - 0.5).abs() < 1e-13);
        assert!((p.y_of_xi(0.5).unwrap()).abs() < 1e-13);
        let mut prev = 0.0;
        let mut y = -50.0;
        while y <= 20.0 {
            let xi = p.xi(y);
            assert!(xi > prev && xi < 1.0, "not increasing at y = {y}");
            prev = xi;
            y += 0.37;
        }
    }

    #[test]
    fn exact_value_nu2() {
        // for nu = 2 the relation is elementary:
        // y(xi) = [-1/(2 xi^2) - 1/xi + ln(xi/(1-xi))] - (at 1/2), so
        // y(1/4) = -8 - ln 3
        let p = Profile::new(2.0).unwrap();
        let y = p.y_of_xi(0.25).unwrap();
        assert!((y - (-8.0 - 3.0_f64.ln())).abs() < 1e-11, "{y}");
    }

    #[test]
    fn round_trip() {
        let p = Profile::new(2.0).unwrap();
        for &xi in &[1e-6, 1e-3, 0.25, 0.5, 0.9, 1.0 - 1e-9] {
            let y = p.y_of_xi(xi).unwrap();
            let back = p.xi(y);
            assert!(
                (back - xi).abs() < 1e-11 * xi.max(1e-3),
                "xi = {xi}: {back}"
            );
        }
        assert!(p.y_of_xi(0.0).is_err());
        assert!(p.y_of_xi(1.0).is_err());
    }

    #[test]
    fn monotone_y_of_xi() {
        let p = Profile::new(1.7).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..60 {
            let xi = i as f64 / 60.0;
            let y = p.y_of_xi(xi).unwrap();
            assert!(y > prev);
            prev = y;
        }
    }

    #[test]
    fn ode_residual_against_integration() {
        // independent oracle: integrate the profile ODE both ways with a
        // high-order adaptive method and compare pointwise
        for nu in [1.5, 2.0, 3.0] {
            let p = Profile::new(nu).unwrap();
            let ode = Dopri5 {
                rtol: 1e-12,
                atol: 1e-14,
                ..Default::default()
            };
            let rhs = move |_t: f64, y: &[f64], dy: &mut [f64]| {
                dy[0] = y[0].powf(nu + 1.0) * (1.0 - y[0]);
            };
            let left = ode.integrate(rhs, 0.0, -50.0, &[0.5]).unwrap();
            let right = ode.integrate(rhs, 0.0, 15.0, &[0.5]).unwrap();
            let mut out = [0.0];
            for &y in &[-45.0, -20.0, -5.0, -0.7] {
                left.sample(y, &mut out);
                let rel = (p.xi(y) - out[0]).abs() / out[0];
                assert!(rel < 1e-8, "nu={nu} y={y}: rel {rel:e}");
            }
            for &y in &[0.4, 3.0, 12.0] {
                right.sample(y, &mut out);
                let rel = (p.xi(y) - out[0]).abs() / out[0];
                assert!(rel < 1e-8, "nu={nu} y={y}: rel {rel:e}");
            }
        }
    }

    #[test]
    fn ode_residual_finite_differences() {
        let p = Profile::new(2.0).unwrap();
        // deterministic pseudo-random sample of y in [-50, 20]
        let mut state = 0x9e3779b97f4a7c15_u64;
        for _ in 0..100 {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64;
            let y = -50.0 + 70.0 * u;
            let e = p.eval(y);
            // closed-form residual is exact by construction
            assert!((e.xi_dot - e.xi.powf(3.0) * (1.0 - e.xi)).abs() < 1e-15);
            assert!((e.k0_scaled - e.xi_dot / e.xi).abs() < 1e-12 * e.k0_scaled.abs());
            // finite-difference cross-check of the derivative
            let h = 1e-5;
            let fd = (p.xi(y + h) - p.xi(y - h)) / (2.0 * h);
            assert!(
                (fd - e.xi_dot).abs() < 1e-6,
                "y = {y}: fd {fd} vs {}",
                e.xi_dot
            );
        }
    }

    #[test]
    fn asymptotes() {
        let nu = 2.0;
        let p = Profile::new(nu).unwrap();
        // left: xi * (nu(-y))^(1/nu) -> 1, slow rational convergence
        let y = -1.0e4 / nu;
        let prod = p.xi(y) * (nu * (-y)).powf(1.0 / nu);
        assert!((prod - 1.0).abs() <= 0.05, "left asymptote product {prod}");
        // right: 1 - xi <= 2 exp(-(y - y(0.9))) for y >= y(0.9)
        let y09 = p.y_of_xi(0.9).unwrap();
        let mut y = y09;
        while y < y09 + 25.0 {
            assert!(1.0 - p.xi(y) <= 2.0 * (-(y - y09)).exp());
            y += 0.9;
        }
    }

    #[test]
    fn k0_max_and_cap() {
        let nu = 2.0;
        let p = Profile::new(nu).unwrap();
        // brute-force grid scan for the argmax of k0_scaled
        let mut best = (0.0, 0.0);
        let mut y = -30.0;
        while y < 15.0 {
            let v = p.eval(y).k0_scaled;
            if v > best.1 {
                best = (y, v);
            }
            y += 1e-3;
        }
        let exact_max = nu.powf(nu) / (nu + 1.0_f64).powf(nu + 1.0);
        assert!(
            (best.1 - exact_max).abs() < 1e-8,
            "max {} vs {}",
            best.1,
            exact_max
        );
        let xi_at_max = p.xi(best.0);
        assert!(
            (xi_at_max - nu / (nu + 1.0)).abs() < 2e-3,
            "argmax xi {xi_at_max}"
        );

        let params = PhysicalParams::new(2.0, 1.0, 1.0, 1.0).unwrap();
        let (l_eff, cap, xi_star) = params.l_eff_and_cap();
        assert!((l_eff - 6.75).abs() < 1e-12);
        assert!((cap - (4.0_f64 / 27.0).sqrt()).abs() < 1e-12);
        assert!((xi_star - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn hypothesis_h_bounded() {
        // k0_scaled * xi^(-1/2) stays bounded over the sampled range (recorded bound)
        let p = Profile::new(2.0).unwrap();
        let mut sup: f64 = 0.0;
        let mut y = -200.0;
        while y < 20.0 {
            let e = p.eval(y);
            sup = sup.max(e.k0_scaled / e.xi.sqrt());
            y += 0.05;
        }
        assert!(sup.is_finite() && sup < 1.0, "observed bound {sup}");
    }

    #[test]
    fn rejects_bad_params() {
        assert!(PhysicalParams::new(0.9, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(2.0, -1.0, 1.0, 1.0).is_err());
        assert!(PhysicalParams::new(2.0, 1.0, 0.0, 1.0).is_err());
    }
}
