//! Dormand-Prince 5(4) adaptive integrator with 4th-order dense output.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 35.0 / 384.0 - 5179.0 / 57600.0;
const E3: f64 = 500.0 / 1113.0 - 7571.0 / 16695.0;
const E4: f64 = 125.0 / 192.0 - 393.0 / 640.0;
const E5: f64 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
const E6: f64 = 11.0 / 84.0 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous-output data for one accepted step.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub t0: f64,
    pub h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    /// Evaluate the interpolant at `t` inside the step.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
    }
}

/// Result of an integration: the endpoint state and dense output over the span.
#[derive(Debug, Clone)]
pub struct Solution {
    pub t0: f64,
    pub t_end: f64,
    pub y_end: Vec<f64>,
    pub steps: Vec<DenseStep>,
    pub n_steps: usize,
}

impl Solution {
    /// Sample the dense output at `t` (must lie within the integration span).
    pub fn sample(&self, t: f64, out: &mut [f64]) {
        debug_assert!(!self.steps.is_empty());
        let forward = self.t_end >= self.t0;
        // binary search for the step containing t
        let mut lo = 0usize;
        let mut hi = self.steps.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            let s = &self.steps[mid];
            let t1 = s.t0 + s.h;
            let contains = if forward { t <= t1 } else { t >= t1 };
            if contains {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        self.steps[lo].eval(t, out);
    }
}

/// Adaptive Dormand-Prince 5(4) with dense output.
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Record dense output (disable for long throwaway integrations).
    pub dense: bool,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            max_steps: 2_000_000,
            dense: true,
        }
    }
}

impl Dopri5 {
    /// Integrate `dy/dt = f(t, y)` from `t0` to `t1` (either direction).
    pub fn integrate<F>(&self, f: F, t0: f64, t1: f64, y0: &[f64]) -> Result<Solution>
    where
        F: Fn(f64, &[f64], &mut [f64]),
    {
        let n = y0.len();
        let dir = if t1 >= t0 { 1.0 } else { -1.0 };
        let span = (t1 - t0).abs();
        if span == 0.0 {
            return Ok(Solution {
                t0,
                t_end: t1,
                y_end: y0.to_vec(),
                steps: vec![],
                n_steps: 0,
            });
        }
        let mut t = t0;
        let mut y = y0.to_vec();
        let mut k1 = vec![0.0; n];
        f(t, &y, &mut k1);
        // initial step: h0 = 0.01 d0/d1 with d0, d1 the tolerance-scaled
        // norms of the state and of its derivative
        let rms = |v: &[f64]| -> f64 {
            (0..n)
                .map(|i| (v[i] / (self.atol + self.rtol * y[i].abs())).powi(2))
                .sum::<f64>()
                .sqrt()
                / (n as f64).sqrt()
        };
        let (d0, d1) = (rms(&y), rms(&k1));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6 * span
        } else {
            0.01 * d0 / d1
        };
        let mut h = dir * h0.min(span);
        let mut steps = Vec::new();
        let mut n_steps = 0usize;
        let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = (
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
        );
        let mut ys = vec![0.0; n];
        let mut y1 = vec![0.0; n];

        while (t1 - t) * dir > 0.0 {
            if n_steps > self.max_steps {
                return Err(Error::NoConvergence {
                    what: format!("ode integration from {t0} to {t1}"),
                    iterations: n_steps,
                });
            }
            if h.abs() < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow {
                    location: t,
                    step: h,
                });
            }
            if (t + h - t1) * dir > 0.0 {
                h = t1 - t;
            }
            for i in 0..n {
                ys[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, &ys, &mut k2);
            for i in 0..n {
                ys[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, &ys, &mut k3);
            for i in 0..n {
                ys[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, &ys, &mut k4);
            for i in 0..n {
                ys[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, &ys, &mut k5);
            for i in 0..n {
                ys[i] = y[i]
                    + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            f(t + h, &ys, &mut k6);
            for i in 0..n {
                y1[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
            }
            f(t + h, &y1, &mut k7);

            let mut err: f64 = 0.0;
            for i in 0..n {
                let e = h
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y1[i].abs());
                err += (e / sc) * (e / sc);
            }
            err = (err / n as f64).sqrt();

            if err <= 1.0 {
                if self.dense {
                    let mut rcont: [Vec<f64>; 5] = [
                        vec![0.0; n],
                        vec![0.0; n],
                        vec![0.0; n],
                        vec![0.0; n],
                        vec![0.0; n],
                    ];
                    for i in 0..n {
                        let dy = y1[i] - y[i];
                        let bspl = h * k1[i] - dy;
                        rcont[0][i] = y[i];
                        rcont[1][i] = dy;
                        rcont[2][i] = bspl;
                        rcont[3][i] = dy - h * k7[i] - bspl;
                        rcont[4][i] = h
                            * (D1 * k1[i]
                                + D3 * k3[i]
                                + D4 * k4[i]
                                + D5 * k5[i]
                                + D6 * k6[i]
                                + D7 * k7[i]);
                    }
                    steps.push(DenseStep { t0: t, h, rcont });
                }
                t += h;
                std::mem::swap(&mut y, &mut y1);
                std::mem::swap(&mut k1, &mut k7);
                n_steps += 1;
            }
            let scale = (0.9 * err.powf(-0.2)).clamp(0.2, 10.0);
            h *= scale;
        }
        Ok(Solution {
            t0,
            t_end: t,
            y_end: y,
            steps,
            n_steps,
        })
    }
}
