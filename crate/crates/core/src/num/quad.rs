//! Adaptive Gauss-Kronrod quadrature (G7K15) on finite intervals.

/// Positive 15-point Kronrod nodes (symmetric about 0).
const XGK: [f64; 8] = [
    0.0,
    0.207_784_955_007_898_47,
    0.405_845_151_377_397_17,
    0.586_087_235_467_691_1,
    0.741_531_185_599_394_4,
    0.864_864_423_359_769_1,
    0.949_107_912_342_758_5,
    0.991_455_371_120_812_6,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.209_482_141_084_727_83,
    0.204_432_940_075_298_9,
    0.190_350_578_064_785_4,
    0.169_004_726_639_267_9,
    0.140_653_259_715_525_92,
    0.104_790_010_322_250_18,
    0.063_092_092_629_978_55,
    0.022_935_322_010_529_225,
];

/// 7-point Gauss weights for the embedded rule (nodes at even Kronrod indices).
const WG: [f64; 4] = [
    0.417_959_183_673_469_4,
    0.381_830_050_505_118_94,
    0.279_705_391_489_276_7,
    0.129_484_966_168_869_7,
];

/// One G7K15 panel on [a, b]. Returns (kronrod value, error estimate).
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[0];
    let mut gauss = fc * WG[0];
    for j in 1..8 {
        let dx = half * XGK[j];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * fsum;
        if j % 2 == 0 {
            gauss += WG[j / 2] * fsum;
        }
    }
    ((kronrod * half), ((kronrod - gauss) * half).abs())
}

/// Adaptive quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
///
/// Splits the worst panel until the summed error estimate is below `tol`
/// or `max_panels` is reached; the integrand is assumed finite on [a, b].
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let (v, e) = qk15(f, a, b);
    let mut heap: Vec<(f64, f64, f64, f64)> = vec![(a, b, v, e)];
    let mut total_err = e;
    while total_err > tol && heap.len() < max_panels {
        // split the panel with the largest error estimate
        let (idx, _) = heap
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (pa, pb, _, pe) = heap.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = qk15(f, pa, mid);
        let (v2, e2) = qk15(f, mid, pb);
        total_err += e1 + e2 - pe;
        heap.push((pa, mid, v1, e1));
        heap.push((mid, pb, v2, e2));
    }
    heap.iter().map(|p| p.2).sum()
}

/// Quadrature with an exponential tail: integrates `f` on `[a, inf)` where
/// `f(s) ~ C e^(-rate s) * (slowly varying)` for large `s`. The finite part
/// `[a, cut]` is done adaptively; the tail is closed with a first-order
/// expansion of the slowly varying factor.
pub fn semi_infinite_exp<F: Fn(f64) -> f64>(f: &F, a: f64, rate: f64, tol: f64) -> f64 {
    // choose the cut so that the tail is below tol in magnitude
    let mut cut = a + 5.0 / rate;
    let mut fcut = f(cut).abs();
    while fcut / rate > 0.01 * tol && cut < a + 800.0 / rate {
        cut += 5.0 / rate;
        fcut = f(cut).abs();
    }
    let body = adaptive(f, a, cut, tol, 2000);
    // tail: f ~ f(cut) e^{-rate (s-cut)} (1 + c (s-cut)), c from a log-slope sample
    let h = 0.5 / rate;
    let f1 = f(cut + h);
    let tail = if fcut > 0.0 && f1.abs() > 0.0 {
        let c = (f1.abs().ln() - fcut.ln()) / h + rate; // residual slope beyond e^{-rate s}
        f(cut) / rate * (1.0 + c / rate)
    } else {
        0.0
    };
    body + tail
}
