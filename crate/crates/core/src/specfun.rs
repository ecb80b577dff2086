//! Gamma and Kummer confluent hypergeometric functions M(a,b,z), U(a,b,z).
//!
//! The low-density closed forms need U at parameters a = -(1+lambda)/(2 nu),
//! b = -1/nu, z = 2t >= 0. For nu > 1 both a and b stay in (-1, 0), which
//! keeps every power series here single-signed past the first term, so the
//! direct series are numerically stable on the whole range we use.

use crate::error::{Error, Result};

/// Parameters of a Kummer-function evaluation.
#[derive(Debug, Clone, Copy)]
pub struct KummerParams {
    pub a: f64,
    pub b: f64,
    pub z: f64,
}

impl KummerParams {
    /// Parameters for the subdominant branch at spectral parameter `lambda`,
    /// conduction index `nu`, argument `z = 2t`.
    pub fn for_mode(lambda: f64, nu: f64, z: f64) -> Self {
        Self {
            a: -(1.0 + lambda) / (2.0 * nu),
            b: -1.0 / nu,
            z,
        }
    }
}

/// Lanczos coefficients, g = 7, n = 9.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

fn lanczos_gamma(x: f64) -> f64 {
    // valid for x >= 0.5
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x - 1.0 + i as f64);
    }
    let t = x + 6.5;
    SQRT_TWO_PI * t.powf(x - 0.5) * (-t).exp() * acc
}

/// Gamma function on the real line, relative accuracy ~1e-13.
///
/// Errors at the poles x = 0, -1, -2, ...
pub fn gamma_fn(x: f64) -> Result<f64> {
    if x <= 0.0 && (x - x.round()).abs() < 1e-14 {
        return Err(Error::GammaPole(x));
    }
    if x >= 0.5 {
        Ok(lanczos_gamma(x))
    } else {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let s = (std::f64::consts::PI * x).sin();
        Ok(std::f64::consts::PI / (s * lanczos_gamma(1.0 - x)))
    }
}

/// Digamma function (for elementary constants in the expansion bookkeeping).
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln()
        - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

const MAX_TERMS: usize = 4000;

/// Kummer's M(a, b, z) by the power series with term-ratio stopping.
///
/// Errors if `b` is within 1e-6 of a nonpositive integer or if the series
/// fails to converge in the documented range.
pub fn kummer_m(p: KummerParams) -> Result<f64> {
    let KummerParams { a, b, z } = p;
    if b <= 0.5 && (b - b.round()).abs() < 1e-6 {
        return Err(Error::Domain(format!(
            "kummer_m: b = {b} too close to a nonpositive integer"
        )));
    }
    if !z.is_finite() {
        return Err(Error::Domain("kummer_m: non-finite z".into()));
    }
    let mut sum = 1.0_f64;
    let mut term = 1.0_f64;
    let mut max_abs = 1.0_f64;
    for n in 0..MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) / ((b + nf) * (nf + 1.0)) * z;
        sum += term;
        max_abs = max_abs.max(term.abs());
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && n > 2 {
            if !sum.is_finite() {
                return Err(Error::Domain(format!("kummer_m overflow at z = {z}")));
            }
            // flag catastrophic cancellation (cannot happen for a,b in (-1,0), z>=0)
            if max_abs > 1e13 * sum.abs() {
                return Err(Error::Domain(format!(
                    "kummer_m: cancellation loss at a={a}, b={b}, z={z}"
                )));
            }
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        what: format!("kummer_m series at z = {z}"),
        iterations: MAX_TERMS,
    })
}

/// Connection-formula / asymptotic crossover for U.
const Z_SWITCH: f64 = 16.0;

/// Subdominant Kummer solution U(a, b, z) for z >= 0, b non-integer.
///
/// Connection formula below `z = 16`, asymptotic series above (the
/// connection formula loses digits like e^z while the asymptotic error
/// falls like e^-z; both are ~1e-8 near the seam). At z = 0 this reduces to
/// `Gamma(1-b) / Gamma(1+a-b)`.
pub fn kummer_u(p: KummerParams) -> Result<f64> {
    let KummerParams { a, b, z } = p;
    if (b - b.round()).abs() < 1e-6 {
        return Err(Error::Domain(format!(
            "kummer_u: integer b = {b} not supported"
        )));
    }
    if z < 0.0 {
        return Err(Error::Domain("kummer_u: z must be >= 0".into()));
    }
    if z >= Z_SWITCH {
        return kummer_u_asymptotic(a, b, z);
    }
    let pref = std::f64::consts::PI / (std::f64::consts::PI * b).sin();
    // first term: M(a,b,z) / (Gamma(1+a-b) Gamma(b))
    let t1 = kummer_m(KummerParams { a, b, z })? / (gamma_fn(1.0 + a - b)? * gamma_fn(b)?);
    // second term vanishes at a pole of Gamma(a) (e.g. a a nonpositive integer)
    let t2 = if a <= 0.0 && (a - a.round()).abs() < 1e-14 {
        0.0
    } else {
        z.powf(1.0 - b)
            * kummer_m(KummerParams {
                a: 1.0 + a - b,
                b: 2.0 - b,
                z,
            })?
            / (gamma_fn(a)? * gamma_fn(2.0 - b)?)
    };
    Ok(pref * (t1 - t2))
}

/// Poincare asymptotic series U ~ z^-a sum_k (a)_k (1+a-b)_k / (k! (-z)^k),
/// truncated at the smallest term.
fn kummer_u_asymptotic(a: f64, b: f64, z: f64) -> Result<f64> {
    let mut sum = 1.0_f64;
    let mut term = 1.0_f64;
    let mut prev = f64::MAX;
    for k in 0..200 {
        let kf = k as f64;
        term *= (a + kf) * (1.0 + a - b + kf) / ((kf + 1.0) * (-z));
        if term.abs() >= prev {
            break; // smallest-term truncation
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    Ok(z.powf(-a) * sum)
}

/// d/dz U(a, b, z) = -a U(a+1, b+1, z).
pub fn kummer_u_deriv(p: KummerParams) -> Result<f64> {
    Ok(-p.a
        * kummer_u(KummerParams {
            a: p.a + 1.0,
            b: p.b + 1.0,
            z: p.z,
        })?)
}

/// d/dz M(a, b, z) = (a/b) M(a+1, b+1, z).
pub fn kummer_m_deriv(p: KummerParams) -> Result<f64> {
    Ok(p.a / p.b
        * kummer_m(KummerParams {
            a: p.a + 1.0,
            b: p.b + 1.0,
            z: p.z,
        })?)
}
