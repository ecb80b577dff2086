//! The solution branch bounded (up to a polynomial factor times e^(eps y))
//! as y -> -infinity, built from the Volterra fixed point for g.
//!
//! In the variable `t = -eps y` the branch is carried by
//! `g = 1 + K_eps(g)`, where
//!
//! ```text
//! R_eps(g)(s) = [int_s^inf tau(y) e^(-2y) xi(-y/eps)^(-lambda) g(y) dy] e^(2s) xi(-s/eps)^lambda
//! K_eps(g)(t) = (1 - lambda^2)/4 int_t^inf tau(s) R_eps(g)(s) ds
//! ```
//!
//! with the weight `tau(s) = xi^nu (1 - xi)/eps` at `y = -s/eps`. Both
//! nested integrals are evaluated in one right-to-left pass per application:
//! `R` solves the linear ODE `R' = (2 - lambda tau) R - tau g` backward (the
//! decaying direction), and `K` accumulates `-(tau R)`. The fixed point is
//! reached by iterating from `g = 1`; the iterates are the partial sums of a
//! normally convergent series, so convergence is unconditional.
//!
//! `(F, G)` and `(u, w)` are reconstructed from `g`, and the eps = 0 branch
//! has the hypergeometric closed form through `U0(t) =
//! 2^(-(lambda+1)/(2 nu)) U(-(1+lambda)/(2 nu), -1/nu, 2t)`:
//! `F0 = U0'/2 e^(-t)`, `G0 = (U0 - U0'/2) e^(-t)`, `F0 + G0 = U0 e^(-t)`.

use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::specfun::{gamma_fn, kummer_u, kummer_u_deriv, KummerParams};

/// Graded t-grid: spacing ~ c t at the small-t end, uniform in the body,
/// coarse in the algebraic far tail.
#[derive(Debug, Clone)]
pub struct TGrid {
    pub t0: f64,
    pub t_max: f64,
    pub nodes: Vec<f64>,
}

impl TGrid {
    /// Graded grid with relative spacing `c` (default 0.008).
    pub fn new(t0: f64, t_max: f64, c: f64) -> Result<Self> {
        if !(t0 > 0.0) || !(t_max > t0) {
            return Err(Error::Grid(format!(
                "need 0 < t0 < t_max, got [{t0}, {t_max}]"
            )));
        }
        let mut nodes = vec![t0];
        loop {
            let t = *nodes.last().unwrap();
            if t >= t_max {
                break;
            }
            let h = if t < 30.0 { c * t.clamp(t0, 2.0) } else { 0.1 };
            nodes.push((t + h).min(t_max));
        }
        Ok(Self { t0, t_max, nodes })
    }

    /// Default grid for Evans evaluations at conduction index `nu`: starts
    /// below the matching window `t = 1/(2 nu R)` and runs far enough that
    /// the algebraic tail closure is below 1e-9.
    pub fn for_window(nu: f64, t0_request: f64) -> Result<Self> {
        let window_lo = 1.0 / (2.0 * nu * crate::overdense::R_UNIFORM);
        let t0 = t0_request.min(0.8 * window_lo);
        Self::new(t0, 120.0, 0.008)
    }
}

/// Kernel weights on a grid at fixed (eps, nu): `tau` and `ln(zeta/nu)` at
/// the nodes and interval midpoints (`zeta = eps / xi^nu`; at eps = 0 the
/// limits `tau = 1/(nu s)`, `zeta/nu = s` are used).
#[derive(Debug)]
pub struct KernelWeights {
    pub nu: f64,
    pub epsilon: f64,
    pub grid: TGrid,
    tau_n: Vec<f64>,
    tau_h: Vec<f64>,
    ln_zn_n: Vec<f64>,
    ln_zn_h: Vec<f64>,
    /// d ln tau / ds at t_max, for the tail closure
    dln_tau_end: f64,
}

/// `tau(s, eps) = xi^nu (1 - xi) / eps` at `y = -s/eps`; limit `1/(nu s)`.
pub fn tau_weight(profile: &Profile, s: f64, epsilon: f64) -> f64 {
    if epsilon == 0.0 {
        return 1.0 / (profile.nu() * s);
    }
    let e = profile.eval(-s / epsilon);
    e.k0_scaled / epsilon
}

impl KernelWeights {
    pub fn new(grid: TGrid, nu: f64, epsilon: f64, profile: Option<&Profile>) -> Result<Self> {
        let n = grid.nodes.len();
        let mut tau_n = Vec::with_capacity(n);
        let mut tau_h = Vec::with_capacity(n - 1);
        let mut ln_zn_n = Vec::with_capacity(n);
        let mut ln_zn_h = Vec::with_capacity(n - 1);
        let eval = |s: f64| -> Result<(f64, f64)> {
            if epsilon == 0.0 {
                Ok((1.0 / (nu * s), s.ln()))
            } else {
                let prof = profile.ok_or_else(|| {
                    Error::InvalidParameter("profile required for eps > 0 weights".into())
                })?;
                let e = prof.eval(-s / epsilon);
                let ln_zeta_nu = epsilon.ln() - nu * e.xi.ln() - nu.ln();
                Ok((e.k0_scaled / epsilon, ln_zeta_nu))
            }
        };
        for i in 0..n {
            let (t, lz) = eval(grid.nodes[i])?;
            tau_n.push(t);
            ln_zn_n.push(lz);
            if i + 1 < n {
                let (th, lzh) = eval(0.5 * (grid.nodes[i] + grid.nodes[i + 1]))?;
                tau_h.push(th);
                ln_zn_h.push(lzh);
            }
        }
        // d ln tau/ds = -nu tau + xi tau/(1 - xi)
        let t_end = *grid.nodes.last().unwrap();
        let dln_tau_end = if epsilon == 0.0 {
            -1.0 / t_end
        } else {
            let e = profile.unwrap().eval(-t_end / epsilon);
            let tau = e.k0_scaled / epsilon;
            -nu * tau + e.xi * tau / (1.0 - e.xi)
        };
        Ok(Self {
            nu,
            epsilon,
            grid,
            tau_n,
            tau_h,
            ln_zn_n,
            ln_zn_h,
            dln_tau_end,
        })
    }

    pub fn tau_at_nodes(&self) -> &[f64] {
        &self.tau_n
    }

    /// `zeta(t_i, eps) = eps / xi^nu` at node i (equals `nu t` at eps = 0).
    pub fn zeta_at(&self, i: usize) -> f64 {
        self.nu * self.ln_zn_n[i].exp()
    }

    /// `ln(zeta/nu)` at node i.
    pub fn ln_zeta_nu_at(&self, i: usize) -> f64 {
        self.ln_zn_n[i]
    }
}

/// Cubic Lagrange interpolation of grid values at the interval midpoints.
fn half_values(nodes: &[f64], g: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut gh = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let lo = i.saturating_sub(1).min(n - 4);
        let xs = &nodes[lo..lo + 4];
        let ys = &g[lo..lo + 4];
        let x = 0.5 * (nodes[i] + nodes[i + 1]);
        let mut v = 0.0;
        for j in 0..4 {
            let mut l = 1.0;
            for k in 0..4 {
                if k != j {
                    l *= (x - xs[k]) / (xs[j] - xs[k]);
                }
            }
            v += ys[j] * l;
        }
        gh.push(v);
    }
    gh
}

/// Interpolate grid samples at an arbitrary t (cubic Lagrange).
pub fn interp_at(nodes: &[f64], values: &[f64], t: f64) -> f64 {
    let n = nodes.len();
    let idx = nodes.partition_point(|&x| x < t);
    let lo = idx.saturating_sub(2).min(n - 4);
    let xs = &nodes[lo..lo + 4];
    let ys = &values[lo..lo + 4];
    let mut v = 0.0;
    for j in 0..4 {
        let mut l = 1.0;
        for k in 0..4 {
            if k != j {
                l *= (t - xs[k]) / (xs[j] - xs[k]);
            }
        }
        v += ys[j] * l;
    }
    v
}

/// One application of the nested kernel: `(R, K_raw)` at the nodes, where
/// `K_eps(g) = (1 - lambda^2)/4 * K_raw`.
fn backward_sweep(w: &KernelWeights, lambda: f64, g: &[f64], gh: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nodes = &w.grid.nodes;
    let n = nodes.len();
    let nu = w.nu;
    let big_t = nodes[n - 1];
    let tau_e = w.tau_n[n - 1];
    let m = lambda / nu - 1.0;
    let mut r = vec![0.0; n];
    let mut k = vec![0.0; n];
    // tail closures beyond t_max, linear in g: model g(s) = g_inf + kappa/s
    // (from the last two samples) and tau(s) = tau_e (T/s)^p
    let p = -w.dln_tau_end * big_t;
    let dg = (g[n - 1] - g[n - 2]) / (nodes[n - 1] - nodes[n - 2]);
    let kappa = -dg * big_t * big_t;
    let g_inf = g[n - 1] - kappa / big_t;
    // Watson expansion of the inner integral at s = T: the integrand's
    // slowly varying factor has log-slope c1 = dln(tau)/ds + lambda tau
    let c1 = w.dln_tau_end + lambda * tau_e;
    r[n - 1] = tau_e
        * (g[n - 1] * 0.5
            + 0.25 * (g[n - 1] * c1 + dg)
            + g[n - 1] * 0.125 * m * (m - 1.0) / (big_t * big_t));
    k[n - 1] = if w.epsilon == 0.0 {
        (1.0 / (nu * nu))
            * (g_inf
                * (0.5 / big_t
                    + m / (8.0 * big_t * big_t)
                    + m * (m - 1.0) / (24.0 * big_t * big_t * big_t))
                + kappa / (4.0 * big_t * big_t))
    } else {
        tau_e
            * tau_e
            * (g_inf * big_t / (2.0 * (2.0 * p - 1.0))
                + g_inf * c1 * big_t / (8.0 * p)
                + kappa / (4.0 * p))
    };
    // backward RK4 on R' = (2 - lambda tau) R - tau g, Simpson for K
    let f = |tau_s: f64, r_: f64, g_: f64| (2.0 - lambda * tau_s) * r_ - tau_s * g_;
    for i in (0..n - 1).rev() {
        let h = nodes[i + 1] - nodes[i];
        let hh = -h;
        let (t1, tm, t0) = (w.tau_n[i + 1], w.tau_h[i], w.tau_n[i]);
        let (g1, gm, g0) = (g[i + 1], gh[i], g[i]);
        let rr = r[i + 1];
        let k1 = f(t1, rr, g1);
        let k2 = f(tm, rr + 0.5 * hh * k1, gm);
        let k3 = f(tm, rr + 0.5 * hh * k2, gm);
        let k4 = f(t0, rr + hh * k3, g0);
        r[i] = rr + hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        // R at the midpoint by an RK4 half-step (for the Simpson weight)
        let hh2 = -0.5 * h;
        let (tq, gq) = (0.5 * (t1 + tm), 0.5 * (g1 + gm));
        let q1 = k1;
        let q2 = f(tq, rr + 0.5 * hh2 * q1, gq);
        let q3 = f(tq, rr + 0.5 * hh2 * q2, gq);
        let q4 = f(tm, rr + hh2 * q3, gm);
        let r_half = rr + hh2 / 6.0 * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
        k[i] = k[i + 1] + h / 6.0 * (t0 * r[i] + 4.0 * tm * r_half + t1 * rr);
    }
    (r, k)
}

/// Result of one kernel application, `K_eps(g)` with its inner integral.
#[derive(Debug)]
pub struct KApplication {
    pub k: Vec<f64>,
    pub r: Vec<f64>,
}

/// Apply `K_eps` to grid samples of a bounded `g` (tail extended by its
/// fitted 1/s form).
pub fn apply_k(w: &KernelWeights, lambda: f64, g: &[f64]) -> KApplication {
    let gh = half_values(&w.grid.nodes, g);
    let (r, kraw) = backward_sweep(w, lambda, g, &gh);
    let pref = (1.0 - lambda * lambda) / 4.0;
    KApplication {
        k: kraw.iter().map(|v| pref * v).collect(),
        r,
    }
}

/// `Ktilde^lambda = K / (1 - lambda) = (1 + lambda)/4 * K_raw`; at
/// lambda = 1 this is the finite limit operator.
pub fn apply_ktilde(w: &KernelWeights, lambda: f64, g: &[f64]) -> Vec<f64> {
    let gh = half_values(&w.grid.nodes, g);
    let (_, kraw) = backward_sweep(w, lambda, g, &gh);
    let pref = (1.0 + lambda) / 4.0;
    kraw.iter().map(|v| pref * v).collect()
}

/// Converged Volterra fixed point `g = 1 + K_eps(g)`.
#[derive(Debug)]
pub struct GSolution {
    pub lambda: f64,
    pub epsilon: f64,
    pub g: Vec<f64>,
    pub iteration_count: usize,
    pub contraction_factor: f64,
    pub residual: f64,
}

/// Solve `g = 1 + K_eps(g)` by iteration from `g = 1` (partial sums of the
/// kernel series). Converged when the sup-norm update drops below 1e-12.
pub fn volterra_g(w: &KernelWeights, lambda: f64) -> Result<GSolution> {
    let n = w.grid.nodes.len();
    let mut g = vec![1.0; n];
    let mut last_upd = f64::INFINITY;
    let mut contraction: f64 = 0.0;
    let mut bad_streak = 0usize;
    for it in 0..200 {
        let app = apply_k(w, lambda, &g);
        let mut upd: f64 = 0.0;
        let mut gn = Vec::with_capacity(n);
        for (ki, gi) in app.k.iter().zip(&g) {
            let v = 1.0 + ki;
            upd = upd.max((v - gi).abs());
            gn.push(v);
        }
        g = gn;
        let ratio = upd / last_upd;
        if it > 0 {
            contraction = contraction.max(ratio.min(1e3));
            if ratio > 0.9 {
                bad_streak += 1;
                if bad_streak >= 5 {
                    return Err(Error::NonContraction(format!(
                        "volterra update ratio {ratio:.3} > 0.9 for 5 iterations \
                         (lambda = {lambda}, eps = {}, t0 = {})",
                        w.epsilon, w.grid.t0
                    )));
                }
            } else {
                bad_streak = 0;
            }
        }
        last_upd = upd;
        if upd < 1e-12 {
            let app = apply_k(w, lambda, &g);
            let residual = (0..n)
                .map(|i| (g[i] - 1.0 - app.k[i]).abs())
                .fold(0.0, f64::max);
            return Ok(GSolution {
                lambda,
                epsilon: w.epsilon,
                g,
                iteration_count: it + 1,
                contraction_factor: contraction,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        what: format!("volterra g at lambda = {lambda}"),
        iterations: 200,
    })
}

/// Pointwise series bound `|g| <= exp(|lambda^2 - 1|/(8 nu) zeta^-1)`
/// (which is `exp(|lambda^2 - 1|/(4 nu^2 t))` at eps = 0).
pub fn g_bound(w: &KernelWeights, lambda: f64, i: usize) -> f64 {
    ((lambda * lambda - 1.0).abs() / (8.0 * w.nu) / w.zeta_at(i)).exp()
}

/// The minus branch sampled on the t-grid, normalization `g -> 1` (C = 1).
#[derive(Debug)]
pub struct MinusBranch {
    pub lambda: f64,
    pub epsilon: f64,
    pub nodes: Vec<f64>,
    pub f: Vec<f64>,
    pub g_fn: Vec<f64>,
    /// u = F + G
    pub u: Vec<f64>,
    /// w = (lambda-1) F + (lambda+1) G;  v = xi w
    pub w: Vec<f64>,
}

impl MinusBranch {
    pub fn u_at(&self, t: f64) -> f64 {
        interp_at(&self.nodes, &self.u, t)
    }

    pub fn w_at(&self, t: f64) -> f64 {
        interp_at(&self.nodes, &self.w, t)
    }

    /// du/dt = lambda u - w (closed first-order relation).
    pub fn du_dt_at(&self, t: f64) -> f64 {
        self.lambda * self.u_at(t) - self.w_at(t)
    }
}

/// Reconstruct `(F, G, u, w)` from a converged g-solution:
/// `G = g e^(-t) (zeta/nu)^((lambda+1)/(2 nu))` and `F` from one more
/// backward accumulation of `tau (zeta/nu)^(lambda/nu) g e^(-2s)`.
pub fn reconstruct_fg(w: &KernelWeights, gsol: &GSolution) -> MinusBranch {
    let nodes = &w.grid.nodes;
    let n = nodes.len();
    let lambda = gsol.lambda;
    let nu = w.nu;
    let gh = half_values(nodes, &gsol.g);
    // Q' = 2Q - tau (zeta/nu)^(lambda/nu) g, backward;
    // F = (lambda+1)/2 Q e^{-t} (zeta/nu)^{-(lambda-1)/(2 nu)}
    let z_at = |i: usize| (w.ln_zn_n[i] * lambda / nu).exp();
    let zh_at = |i: usize| (w.ln_zn_h[i] * lambda / nu).exp();
    let mut q = vec![0.0; n];
    let tau_e = w.tau_n[n - 1];
    let dg = (gsol.g[n - 1] - gsol.g[n - 2]) / (nodes[n - 1] - nodes[n - 2]);
    // Watson closure; d ln[tau z]/ds = dln tau + lambda tau at the endpoint
    let c1 = w.dln_tau_end + lambda * tau_e;
    q[n - 1] = tau_e * z_at(n - 1) * (gsol.g[n - 1] * (0.5 + 0.25 * c1) + 0.25 * dg);
    let f = |tau_s: f64, q_: f64, z_: f64, g_: f64| 2.0 * q_ - tau_s * z_ * g_;
    for i in (0..n - 1).rev() {
        let h = -(nodes[i + 1] - nodes[i]);
        let qq = q[i + 1];
        let k1 = f(w.tau_n[i + 1], qq, z_at(i + 1), gsol.g[i + 1]);
        let k2 = f(w.tau_h[i], qq + 0.5 * h * k1, zh_at(i), gh[i]);
        let k3 = f(w.tau_h[i], qq + 0.5 * h * k2, zh_at(i), gh[i]);
        let k4 = f(w.tau_n[i], qq + h * k3, z_at(i), gsol.g[i]);
        q[i] = qq + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    let expo_g = (lambda + 1.0) / (2.0 * nu);
    let expo_f = (lambda - 1.0) / (2.0 * nu);
    let mut fv = Vec::with_capacity(n);
    let mut gv = Vec::with_capacity(n);
    let mut uv = Vec::with_capacity(n);
    let mut wv = Vec::with_capacity(n);
    for i in 0..n {
        let t = nodes[i];
        let g_big = gsol.g[i] * (-t + w.ln_zn_n[i] * expo_g).exp();
        let f_big = 0.5 * (lambda + 1.0) * q[i] * (-t - w.ln_zn_n[i] * expo_f).exp();
        fv.push(f_big);
        gv.push(g_big);
        uv.push(f_big + g_big);
        wv.push((lambda - 1.0) * f_big + (lambda + 1.0) * g_big);
    }
    MinusBranch {
        lambda,
        epsilon: w.epsilon,
        nodes: nodes.clone(),
        f: fv,
        g_fn: gv,
        u: uv,
        w: wv,
    }
}

/// The eps = 0 closed forms through the subdominant Kummer solution.
///
/// Returns `(F0, G0)` with `F0 = U0'/2 e^(-t)`, `G0 = (U0 - U0'/2) e^(-t)`,
/// so that `e^t (F0 + G0) = U0` and `G0 e^t t^(-(1+lambda)/(2 nu)) -> 1`.
pub fn hypergeom_f0g0(lambda: f64, nu: f64, t: f64) -> Result<(f64, f64)> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!(
            "hypergeom_f0g0: t must be >= 0, got {t}"
        )));
    }
    let scale = 2.0_f64.powf(-(lambda + 1.0) / (2.0 * nu));
    let p = KummerParams::for_mode(lambda, nu, 2.0 * t);
    let u0 = scale * kummer_u(p)?;
    let du0 = 2.0 * scale * kummer_u_deriv(p)?;
    let e = (-t).exp();
    Ok((0.5 * du0 * e, (u0 - 0.5 * du0) * e))
}

/// `C0(lambda) = Gamma(1 + 1/nu) / Gamma(1 + (1-lambda)/(2 nu))`, the t -> 0
/// value of `U(-(1+lambda)/(2 nu), -1/nu, 2t)`. The denominator argument
/// `(1-lambda)` rather than `(lambda-1)` is forced by the `U(a, b, 0)`
/// identity; both coincide at lambda = 1.
pub fn c0_lambda(lambda: f64, nu: f64) -> Result<f64> {
    Ok(gamma_fn(1.0 + 1.0 / nu)? / gamma_fn(1.0 + (1.0 - lambda) / (2.0 * nu))?)
}
