//! Scalar helpers and adaptive quadrature shared by the bound evaluators.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// `log_+(z) = max(1, ln z)`.
pub fn log_plus(z: f64) -> f64 {
    if z <= core::f64::consts::E {
        1.0
    } else {
        z.ln()
    }
}

pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Quadrature settings; `breakpoints` split the range before adaptation so
/// kinks and jumps of the integrand sit on interval edges.
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { rel_tol: 1e-6, abs_tol: 1e-300, max_intervals: 4000 }
    }
}

impl Quadrature {
    /// Globally adaptive Gauss–Kronrod (7/15) integration of `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, breakpoints: &[f64]) -> Result<f64> {
        if !(a < b) {
            return Ok(0.0);
        }
        let mut edges: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
        edges.push(a);
        edges.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
        edges.push(b);
        edges.sort_by(|x, y| x.partial_cmp(y).unwrap());
        edges.dedup();

        let mut intervals: Vec<(f64, f64, f64, f64)> = edges
            .windows(2)
            .map(|w| {
                let (v, e) = gk15(&f, w[0], w[1]);
                (w[0], w[1], v, e)
            })
            .collect();

        loop {
            let total: f64 = intervals.iter().map(|iv| iv.2).sum();
            let err: f64 = intervals.iter().map(|iv| iv.3).sum();
            if !total.is_finite() || !err.is_finite() {
                return Err(Error::Quadrature { interval: (a, b), estimate: total, error: err });
            }
            if err <= self.abs_tol.max(self.rel_tol * total.abs()) {
                return Ok(total);
            }
            if intervals.len() >= self.max_intervals {
                return Err(Error::Quadrature { interval: (a, b), estimate: total, error: err });
            }
            let (worst, _) =
                intervals
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |acc, (i, iv)| if iv.3 > acc.1 { (i, iv.3) } else { acc });
            let (lo, hi, _, _) = intervals.swap_remove(worst);
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                return Err(Error::Quadrature { interval: (a, b), estimate: total, error: err });
            }
            let (v1, e1) = gk15(&f, lo, mid);
            let (v2, e2) = gk15(&f, mid, hi);
            intervals.push((lo, mid, v1, e1));
            intervals.push((mid, hi, v2, e2));
        }
    }
}

/// Median of a slice (average of the two middle order statistics for even length).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Linear-interpolation sample quantile (type 7) of already sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Mean and standard error of the mean.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    let m = mean(values);
    if k < 2 {
        return (m, 0.0);
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (k as f64 - 1.0);
    (m, (var / k as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomial_and_power_singularity() {
        let q = Quadrature::default();
        let v = q.integrate(|x| x * x, 0.0, 3.0, &[]).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let q = Quadrature { rel_tol: 1e-9, ..Quadrature::default() };
        let v = q.integrate(|x: f64| x.powf(-0.5), 1e-12, 1.0, &[]).unwrap();
        assert!((v - 2.0 * (1.0 - 1e-6)).abs() < 1e-7);
    }

    #[test]
    fn step_function_with_breakpoints_is_exact() {
        let q = Quadrature::default();
        let v = q.integrate(|x| if x < 0.3 { 2.0 } else { 1.0 }, 0.0, 1.0, &[0.3]).unwrap();
        assert!((v - 1.3).abs() < 1e-12);
    }

    #[test]
    fn log_plus_floor() {
        assert_eq!(log_plus(0.5), 1.0);
        assert_eq!(log_plus(core::f64::consts::E), 1.0);
        assert!((log_plus(100.0) - 100f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.0), 1.0);
        assert_eq!(quantile_sorted(&v, 1.0), 5.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }
}
