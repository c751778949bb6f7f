//! One-dimensional adaptive quadrature.
//!
//! The integrands in this crate are products of Lorentzian-type peaks whose
//! widths can differ by many orders of magnitude, so a globally adaptive
//! Gauss–Kronrod scheme (7/15 pair, worst-panel-first bisection) is used
//! everywhere, seeded with caller-supplied breakpoints at the known peak
//! locations. Gauss–Legendre rules are also generated here for the
//! continuum-discretization module.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// 15-point Kronrod abscissae on [-1, 1] (positive half; odd indices are the
/// embedded 7-point Gauss nodes).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_2,
    0.063_092_092_629_978_6,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Relative/absolute tolerance pair for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub const fn new(rel: f64, abs: f64) -> Self {
        Self { rel, abs }
    }

    /// Default contract used by the spectral operations: 1e-8 relative with a
    /// 1e-14 absolute floor.
    pub const fn default_spectral() -> Self {
        Self::new(1e-8, 1e-14)
    }

    fn target(&self, value_estimate: f64) -> f64 {
        (self.rel * value_estimate.abs()).max(self.abs)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Estimated absolute error.
    pub abs_error: f64,
    /// Number of panels in the final subdivision.
    pub panels: usize,
}

/// Non-convergence diagnostic carrying the best value reached.
#[derive(Debug, Clone, Error)]
#[error(
    "quadrature did not converge: estimated error {achieved:.3e} exceeds target {requested:.3e} \
     after {panels} panels (value {value:.6e})"
)]
pub struct QuadError {
    pub achieved: f64,
    pub requested: f64,
    pub panels: usize,
    pub value: f64,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One Gauss–Kronrod 7/15 evaluation on [a, b].
///
/// Returns (integral, error estimate). The error estimate follows the
/// QUADPACK rescaling so that it is conservative for non-smooth integrands.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let fc = f(center);
    let mut res_gauss = fc * WG[3];
    let mut res_kronrod = fc * WGK[7];
    let mut res_abs = res_kronrod.abs();

    let mut fv = [0.0f64; 14];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[7 + j] = f2;
        res_kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[7 + j] - mean).abs());
    }

    let value = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

/// Globally adaptive integration of `f` over [a, b].
///
/// `breakpoints` seeds the initial subdivision; points outside (a, b) are
/// ignored. Panels are bisected worst-error-first until the accumulated error
/// estimate meets `tol` or `max_panels` is reached.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    tol: Tolerance,
    max_panels: usize,
) -> Result<QuadResult, QuadError> {
    assert!(a.is_finite() && b.is_finite() && b > a, "invalid interval");

    let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    edges.push(a);
    for &p in breakpoints {
        if p > a && p < b && p.is_finite() {
            edges.push(p);
        }
    }
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();

    let mut heap = BinaryHeap::new();
    let mut total_value = 0.0;
    let mut total_error = 0.0;
    // Error held by panels too narrow to subdivide further.
    let mut frozen_error = 0.0;
    let mut frozen_value = 0.0;
    let mut n_frozen = 0usize;

    for w in edges.windows(2) {
        let (pa, pb) = (w[0], w[1]);
        if pb <= pa {
            continue;
        }
        let (v, e) = gk15(&f, pa, pb);
        total_value += v;
        total_error += e;
        heap.push(Panel {
            a: pa,
            b: pb,
            value: v,
            error: e,
        });
    }

    loop {
        let target = tol.target(total_value + frozen_value);
        if total_error + frozen_error <= target {
            break;
        }
        if heap.len() + n_frozen >= max_panels {
            let achieved = total_error + frozen_error;
            return Err(QuadError {
                achieved,
                requested: target,
                panels: heap.len() + n_frozen,
                value: total_value + frozen_value,
            });
        }
        let Some(worst) = heap.pop() else { break };
        total_value -= worst.value;
        total_error -= worst.error;

        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Width at the floating-point floor; accept as is.
            frozen_value += worst.value;
            frozen_error += worst.error;
            n_frozen += 1;
            continue;
        }
        for (pa, pb) in [(worst.a, mid), (mid, worst.b)] {
            let (v, e) = gk15(&f, pa, pb);
            total_value += v;
            total_error += e;
            heap.push(Panel {
                a: pa,
                b: pb,
                value: v,
                error: e,
            });
        }
    }

    Ok(QuadResult {
        value: total_value + frozen_value,
        abs_error: total_error + frozen_error,
        panels: heap.len() + n_frozen,
    })
}

/// Gauss–Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre polynomial recurrence; accurate to
/// machine precision for the small orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence: p0 = 1, p1 = x.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss–Legendre nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|&xi| c + h * xi).collect(),
        w.iter().map(|&wi| h * wi).collect(),
    )
}
