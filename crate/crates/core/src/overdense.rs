//! The solution branch bounded as y -> +infinity (dense-fluid side).
//!
//! In the variables `U+ = u e^(eps y)`, `V+` (with `v = V+ e^(-eps y)`) the
//! Rayleigh equation becomes the first-order system
//!
//! ```text
//! dU+/dy = eps (1 - lambda) U+ + (eps / xi) V+
//! dV+/dy = eps (lambda + 1) V+ + eps (1 - lambda^2) xi U+
//! ```
//!
//! whose unique solution with limit `(1, lambda - 1)` at +infinity is built
//! by backward adaptive integration. The small-`eps` series in
//! `zeta = eps / xi^nu` is kept only as a cross-check and as the
//! validity-region diagnostic for the matching window.

use crate::error::{Error, Result};
use crate::num::ode::{Dopri5, Solution};
use crate::profile::{PhysicalParams, Profile};

/// One transverse mode: wavenumber, eps = k L0, trial lambda = g k / gamma^2.
#[derive(Debug, Clone, Copy)]
pub struct ModeContext {
    pub k: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl ModeContext {
    pub fn new(params: &PhysicalParams, k: f64, lambda: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!("k must be > 0, got {k}")));
        }
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        let epsilon = k * params.l0;
        let gamma = (params.g * k / lambda).sqrt();
        Ok(Self {
            k,
            epsilon,
            lambda,
            gamma,
        })
    }

    /// Redundant-field consistency: gamma sqrt(lambda) = sqrt(g k).
    pub fn is_consistent(&self, params: &PhysicalParams) -> bool {
        let lhs = self.gamma * self.lambda.sqrt();
        let rhs = (params.g * self.k).sqrt();
        (lhs - rhs).abs() <= 1e-12 * rhs
    }
}

/// The branch bounded at y -> +infinity, normalized by `U+ -> 1`.
#[derive(Debug)]
pub struct PlusBranch {
    pub lambda: f64,
    pub epsilon: f64,
    /// (y, U+, V+) samples over the integration span, right to left.
    pub samples: Vec<(f64, f64, f64)>,
    pub y_right: f64,
    sol: Solution,
}

impl PlusBranch {
    /// `(U+, V+)` at `y` from the dense output.
    pub fn uv(&self, y: f64) -> (f64, f64) {
        let mut out = [0.0, 0.0];
        self.sol.sample(y, &mut out);
        (out[0], out[1])
    }

    /// `u+(y) = U+ e^(-eps y)`.
    pub fn u_plus(&self, y: f64) -> f64 {
        self.uv(y).0 * (-self.epsilon * y).exp()
    }

    /// `v+(y) = V+ e^(-eps y)`.
    pub fn v_plus(&self, y: f64) -> f64 {
        self.uv(y).1 * (-self.epsilon * y).exp()
    }

    /// `du+/dy = -eps lambda u+ + (eps/xi) v+` (closed first-order relation).
    pub fn du_plus_dy(&self, y: f64, xi: f64) -> f64 {
        let (u, v) = (self.u_plus(y), self.v_plus(y));
        -self.epsilon * self.lambda * u + self.epsilon / xi * v
    }
}

/// Build the plus branch on `[y_left, y_right]` by backward integration from
/// the asymptotic state `(1, lambda - 1)`.
///
/// `y_right` defaults to where `1 - xi <= 1e-10`; the branch is resolved
/// with rel/abs tolerances 1e-11/1e-13.
pub fn solve_plus(
    ctx: &ModeContext,
    profile: &Profile,
    y_left: f64,
    y_right_hint: Option<f64>,
) -> Result<PlusBranch> {
    let y_right = match y_right_hint {
        Some(y) => y,
        None => profile.y_of_xi(1.0 - 1e-10)?,
    };
    if y_left >= y_right {
        return Err(Error::Grid(format!(
            "empty plus-branch span [{y_left}, {y_right}]"
        )));
    }
    let eps = ctx.epsilon;
    let lambda = ctx.lambda;
    let rhs = |y: f64, uv: &[f64], d: &mut [f64]| {
        let xi = profile.xi(y);
        d[0] = eps * (1.0 - lambda) * uv[0] + eps / xi * uv[1];
        d[1] = eps * (lambda + 1.0) * uv[1] + eps * (1.0 - lambda * lambda) * xi * uv[0];
    };
    let ode = Dopri5 {
        rtol: 1e-11,
        atol: 1e-13,
        ..Default::default()
    };
    let sol = ode.integrate(rhs, y_right, y_left, &[1.0, lambda - 1.0])?;
    let mut samples = Vec::with_capacity(sol.steps.len() + 1);
    samples.push((y_right, 1.0, lambda - 1.0));
    for st in &sol.steps {
        let y = st.t0 + st.h;
        let mut out = [0.0, 0.0];
        st.eval(y, &mut out);
        samples.push((y, out[0], out[1]));
    }
    Ok(PlusBranch {
        lambda,
        epsilon: eps,
        samples,
        y_right,
        sol,
    })
}

/// First-order coefficients of the eps-expansion of `(U+, V+)`:
/// `u1 = (1-lambda)/(nu+1) (1 - xi^(nu+1))/xi^(nu+1)`,
/// `v1 = (1-lambda^2)/nu  (1 - xi^nu)/xi^nu`.
pub fn u1_v1_closed_form(lambda: f64, nu: f64, xi: f64) -> (f64, f64) {
    let xp = xi.powf(nu + 1.0);
    let xn = xi.powf(nu);
    (
        (1.0 - lambda) / (nu + 1.0) * (1.0 - xp) / xp,
        (1.0 - lambda * lambda) / nu * (1.0 - xn) / xn,
    )
}

/// `R_lambda = (|lambda - 1| + 1) max(1, |lambda + 1|)`, the geometric rate
/// of the series coefficients; `R = 15/4` uniformly on lambda in [1/2, 3/2].
pub fn r_lambda(lambda: f64) -> f64 {
    ((lambda - 1.0).abs() + 1.0) * 1.0_f64.max((lambda + 1.0).abs())
}

/// Uniform rate over the root-search bracket lambda in [1/2, 3/2].
pub const R_UNIFORM: f64 = 15.0 / 4.0;

/// Geometric tail-bound factor `R_lambda^j` of the order-j series remainder.
pub fn series_bound(lambda: f64, j: u32) -> f64 {
    r_lambda(lambda).powi(j as i32)
}

/// Truncated series state in `zeta = eps / xi^nu`, with its geometric tail bound.
#[derive(Debug, Clone, Copy)]
pub struct SeriesExpansion {
    pub zeta: f64,
    pub order: usize,
    pub tail_bound: f64,
}

impl SeriesExpansion {
    /// Tail bound `R_lambda^(j+1) zeta^(j+1) / (1 - R_lambda zeta)`, valid
    /// only in the region `zeta R_lambda < 1` (i.e. `xi >= (eps R)^(1/nu)`).
    pub fn new(lambda: f64, zeta: f64, order: usize) -> Result<Self> {
        let r = r_lambda(lambda);
        if !(zeta * r < 1.0) {
            return Err(Error::OverlapWindow(format!(
                "series invalid: zeta R_lambda = {} >= 1",
                zeta * r
            )));
        }
        let q = r * zeta;
        Ok(Self {
            zeta,
            order,
            tail_bound: q.powi(order as i32 + 1) / (1.0 - q),
        })
    }
}
