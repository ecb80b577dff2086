//! The Evans function `Ev(lambda, eps)` and its zero `lambda(eps)`.
//!
//! `Ev` is the density-weighted Wronskian of the two decaying branches,
//!
//! ```text
//! Ev = xi(y) u+ w- - v+ u-   (constant in y),
//! ```
//!
//! evaluated at five matching points `t = -eps y` spread across
//! `[1/(2 nu R), 3/(4 nu R)]` with `R = 15/4`; the spread across the points
//! is the self-consistency diagnostic. With the normalizations `U+ -> 1`
//! and `g -> 1` the anchors `Ev(1, eps) = 2 (eps/nu)^(1/nu)` hold exactly
//! and the root obeys `lambda(eps) = 1 + 2 (2 eps/nu)^(1/nu) / Gamma(1+1/nu) + ...`.

pub mod expansion;

pub use expansion::{b0_zero, c0_one, expansion_check, r0_limit, C0Result, ExpansionReport};

use crate::error::{Error, Result};
use crate::lowdense::{reconstruct_fg, volterra_g, KernelWeights, MinusBranch, TGrid};
use crate::num::bisect_then_secant;
use crate::overdense::{r_lambda, solve_plus, ModeContext, R_UNIFORM};
use crate::profile::{PhysicalParams, Profile};
use crate::specfun::{gamma_fn, kummer_u, KummerParams};

/// Number of matching points per evaluation.
pub const N_MATCH: usize = 5;

/// Matching-point spread tolerance.
pub const SPREAD_TOL: f64 = 1e-6;

/// One Evans-function evaluation with its self-consistency diagnostic.
#[derive(Debug, Clone)]
pub struct EvansEval {
    pub lambda: f64,
    pub epsilon: f64,
    /// Mean of the per-point values.
    pub value: f64,
    pub point_values: Vec<f64>,
    /// Max pairwise difference relative to max(|value|, |Ev(1, eps)|).
    pub spread: f64,
    pub valid: bool,
    /// Series-region diagnostic: `zeta R_lambda < 1` at the matching window.
    /// The directly integrated branches do not require it; the spread check
    /// above is the operative validity criterion.
    pub series_window_ok: bool,
}

/// Shared state for Evans evaluations at one `eps` (kernel weights are
/// lambda-independent and reused across a root search).
pub struct EvansContext<'a> {
    pub params: PhysicalParams,
    pub profile: &'a Profile,
    pub epsilon: f64,
    weights: KernelWeights,
    t_points: [f64; N_MATCH],
    y_right: f64,
}

impl<'a> EvansContext<'a> {
    pub fn new(params: PhysicalParams, profile: &'a Profile, epsilon: f64) -> Result<Self> {
        Self::with_t0(params, profile, epsilon, 0.05)
    }

    /// `t0` is the left endpoint of the minus-branch grid (clipped below
    /// the matching window automatically).
    pub fn with_t0(
        params: PhysicalParams,
        profile: &'a Profile,
        epsilon: f64,
        t0: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eps must be > 0, got {epsilon}"
            )));
        }
        let nu = params.nu;
        let grid = TGrid::for_window(nu, t0)?;
        let weights = KernelWeights::new(grid, nu, epsilon, Some(profile))?;
        let t_lo = 1.0 / (2.0 * nu * R_UNIFORM);
        let t_hi = 3.0 / (4.0 * nu * R_UNIFORM);
        let mut t_points = [0.0; N_MATCH];
        for (i, tp) in t_points.iter_mut().enumerate() {
            *tp = t_lo + (t_hi - t_lo) * i as f64 / (N_MATCH - 1) as f64;
        }
        let y_right = profile.y_of_xi(1.0 - 1e-10)?;
        Ok(Self {
            params,
            profile,
            epsilon,
            weights,
            t_points,
            y_right,
        })
    }

    /// The exact lambda = 1 anchor `2 (eps/nu)^(1/nu)`, used as the spread
    /// normalization scale.
    pub fn anchor_scale(&self) -> f64 {
        2.0 * (self.epsilon / self.params.nu).powf(1.0 / self.params.nu)
    }

    /// Overlap-window validity: the series rate must satisfy
    /// `zeta(t_left) R_lambda < 1` at the leftmost matching point.
    pub fn window_valid(&self, lambda: f64) -> bool {
        let nodes = &self.weights.grid.nodes;
        let i = nodes.partition_point(|&x| x < self.t_points[0]);
        self.weights.zeta_at(i.min(nodes.len() - 1)) * r_lambda(lambda) < 1.0
    }

    /// Evaluate the Evans function at one trial lambda.
    pub fn evaluate(&self, lambda: f64) -> Result<EvansEval> {
        let minus = self.minus_branch(lambda)?;
        let plus = solve_plus(
            &ModeContext {
                k: 0.0,
                epsilon: self.epsilon,
                lambda,
                gamma: 0.0,
            },
            self.profile,
            -self.t_points[N_MATCH - 1] / self.epsilon,
            Some(self.y_right),
        )?;
        let mut point_values = Vec::with_capacity(N_MATCH);
        for &t in &self.t_points {
            let y = -t / self.epsilon;
            let xi = self.profile.xi(y);
            let (u_big, v_big) = plus.uv(y);
            // u+ = U+ e^{-eps y} = U+ e^{t}; the common e^{t} factor is kept
            // explicit so the branch products stay O(1)
            let ev = (xi * u_big * minus.w_at(t) - v_big * minus.u_at(t)) * t.exp();
            point_values.push(ev);
        }
        let value = point_values.iter().sum::<f64>() / N_MATCH as f64;
        let max = point_values.iter().cloned().fold(f64::MIN, f64::max);
        let min = point_values.iter().cloned().fold(f64::MAX, f64::min);
        let scale = value.abs().max(self.anchor_scale());
        let spread = (max - min) / scale;
        Ok(EvansEval {
            lambda,
            epsilon: self.epsilon,
            value,
            point_values,
            spread,
            valid: spread <= SPREAD_TOL,
            series_window_ok: self.window_valid(lambda),
        })
    }

    fn minus_branch(&self, lambda: f64) -> Result<MinusBranch> {
        let gsol = volterra_g(&self.weights, lambda)?;
        Ok(reconstruct_fg(&self.weights, &gsol))
    }
}

/// One-shot Evans evaluation for a mode context.
pub fn evans(ctx: &ModeContext, params: &PhysicalParams, profile: &Profile) -> Result<EvansEval> {
    let ec = EvansContext::new(*params, profile, ctx.epsilon)?;
    ec.evaluate(ctx.lambda)
}

/// The eps = 0 closed-form anchor of the Evans function along the
/// hypergeometric path,
///
/// ```text
/// Ev0(lambda) = -(lambda - 1) 2^(1 - (lambda+1)/(2 nu)) C0(lambda),
/// ```
///
/// computed here through the Kummer machinery at t -> 0 (not through the
/// Gamma closed form, so the two routes can be compared). Note the anchor's
/// own normalization carries twice the iterated-branch amplitude: the
/// measured eps -> 0 limit of [`EvansContext::evaluate`] is half of this
/// (the acceptance suite records the measured arbitration).
pub fn evans_zero_anchor(lambda: f64, nu: f64) -> Result<f64> {
    let t = 1e-9;
    let scale = 2.0_f64.powf(-(lambda + 1.0) / (2.0 * nu));
    let u0 = scale * kummer_u(KummerParams::for_mode(lambda, nu, 2.0 * t))?;
    Ok(-(lambda - 1.0) * 2.0 * u0)
}

/// Gamma-route closed form of the same anchor.
pub fn evans_zero_closed(lambda: f64, nu: f64) -> Result<f64> {
    let c0 = crate::lowdense::c0_lambda(lambda, nu)?;
    Ok(-(lambda - 1.0) * 2.0_f64.powf(1.0 - (lambda + 1.0) / (2.0 * nu)) * c0)
}

/// Asymptotic root guess `1 + 2 (2 eps/nu)^(1/nu) / Gamma(1 + 1/nu)`.
pub fn lambda_guess(epsilon: f64, nu: f64) -> Result<f64> {
    Ok(1.0 + 2.0 * (2.0 * epsilon / nu).powf(1.0 / nu) / gamma_fn(1.0 + 1.0 / nu)?)
}

/// Find the unique zero of `lambda -> Ev(lambda, eps)` in `bracket`.
///
/// Bisection to width 1e-12 then one secant polish; the search starts from
/// a sub-bracket centered on the asymptotic guess and falls back to the
/// full bracket. Invalid evaluations (spread check) abort the search.
pub fn find_lambda(
    params: &PhysicalParams,
    profile: &Profile,
    epsilon: f64,
    bracket: (f64, f64),
) -> Result<f64> {
    let ec = EvansContext::new(*params, profile, epsilon)?;
    find_lambda_in(&ec, bracket)
}

/// Root search reusing an existing context.
pub fn find_lambda_in(ec: &EvansContext, bracket: (f64, f64)) -> Result<f64> {
    let eval_checked = |lambda: f64| -> Result<f64> {
        let e = ec.evaluate(lambda)?;
        if !e.valid {
            return Err(Error::SpreadCheck {
                lambda,
                eps: ec.epsilon,
                spread: e.spread,
            });
        }
        Ok(e.value)
    };
    let guess = lambda_guess(ec.epsilon, ec.params.nu)?;
    let d = (guess - 1.0).max(1e-8);
    let mut lo = (1.0 + 0.25 * d).max(bracket.0);
    let mut hi = (1.0 + 2.5 * d).min(bracket.1);
    let mut f_lo = eval_checked(lo)?;
    let mut f_hi = eval_checked(hi)?;
    if f_lo * f_hi > 0.0 {
        lo = bracket.0;
        hi = bracket.1;
        f_lo = eval_checked(lo)?;
        f_hi = eval_checked(hi)?;
        if f_lo * f_hi > 0.0 {
            return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
        }
    }
    let mut eval_plain = |lambda: f64| ec.evaluate(lambda).map(|e| e.value).unwrap_or(f64::NAN);
    Ok(bisect_then_secant(&mut eval_plain, lo, hi, f_lo, 1e-12))
}

/// One row of the dispersion relation `k -> gamma(k)`.
#[derive(Debug, Clone)]
pub struct DispersionRow {
    pub k: f64,
    pub epsilon: f64,
    pub lambda_root: f64,
    pub gamma: f64,
    /// `sqrt(g k) / sqrt(1 + 2 (2 eps/nu)^(1/nu) / Gamma(1+1/nu))`
    pub gamma_asym: f64,
    /// The growth-rate cap `Lambda = sqrt(g / L_eff)`.
    pub gamma_cap: f64,
    /// `lambda >= max(1, eps (nu+1)^(nu+1) / nu^nu)`
    pub admissible: bool,
    /// Which route produced the row: "evans" or "spectral".
    pub source: &'static str,
    /// Per-row failure, recorded instead of aborting the sweep.
    pub error: Option<String>,
}

/// Largest eps handed to the Evans route in sweeps; beyond this the
/// spectral eigensolve takes over.
pub const EPS_EVANS_MAX: f64 = 0.15;

/// Dispersion sweep over a list of wavenumbers. Per-row errors are recorded
/// in the row; the sweep never aborts.
pub fn dispersion(
    params: &PhysicalParams,
    profile: &Profile,
    k_list: &[f64],
) -> Vec<DispersionRow> {
    k_list
        .iter()
        .map(|&k| dispersion_row(params, profile, k))
        .collect()
}

/// One dispersion row (Evans route for small eps, spectral fallback).
pub fn dispersion_row(params: &PhysicalParams, profile: &Profile, k: f64) -> DispersionRow {
    let nu = params.nu;
    let epsilon = k * params.l0;
    let (_, cap, _) = params.l_eff_and_cap();
    let gamma_asym = match gamma_fn(1.0 + 1.0 / nu) {
        Ok(g1) => {
            (params.g * k).sqrt() / (1.0 + 2.0 * (2.0 * epsilon / nu).powf(1.0 / nu) / g1).sqrt()
        }
        Err(_) => f64::NAN,
    };
    let admissible_floor = 1.0_f64.max(epsilon * (nu + 1.0).powf(nu + 1.0) / nu.powf(nu));
    let mut row = DispersionRow {
        k,
        epsilon,
        lambda_root: f64::NAN,
        gamma: f64::NAN,
        gamma_asym,
        gamma_cap: cap,
        admissible: false,
        source: "evans",
        error: None,
    };
    let evans_result = if epsilon <= EPS_EVANS_MAX {
        find_lambda(params, profile, epsilon, (0.5, 3.0))
    } else {
        Err(Error::OverlapWindow(
            "eps beyond the Evans sweep range".into(),
        ))
    };
    match evans_result {
        Ok(lambda) => {
            row.lambda_root = lambda;
            row.gamma = (params.g * k / lambda).sqrt();
            row.admissible = lambda >= admissible_floor;
        }
        Err(_) => match crate::spectral::gamma_spectral(k, params, None) {
            Ok(sp) => {
                row.source = "spectral";
                row.gamma = sp.gamma;
                row.lambda_root = params.g * k / (sp.gamma * sp.gamma);
                row.admissible = row.lambda_root >= admissible_floor;
            }
            Err(e) => {
                row.source = "spectral";
                row.error = Some(e.to_string());
            }
        },
    }
    row
}
