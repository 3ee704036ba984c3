use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::EntropyModel;
use crate::error::{Error, Result};
use crate::math::Quadrature;

const FIRST: f64 = 13.2043;
const CHAIN: f64 = 15.0850;
const GRID: usize = 64;

/// `M ↦ E[F · 1(F > M)]` for the class envelope `F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailModel {
    /// Envelope bounded by every `M` under consideration.
    Zero,
    /// `F(x) = slope · x` with `x ~ Uniform[0,1]`.
    UniformLinear { slope: f64 },
    /// `P(F > t) = (scale/t)^α` for `t ≥ scale`, `α > 1`.
    Pareto { alpha: f64, scale: f64 },
    /// Sample of envelope values.
    Empirical { samples: Vec<f64> },
}

impl TailModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::UniformLinear { slope } if *slope >= 0.0 => Ok(()),
            Self::Pareto { alpha, scale } if *alpha > 1.0 && *scale > 0.0 => Ok(()),
            Self::Empirical { samples }
                if !samples.is_empty() && samples.iter().all(|s| s.is_finite() && *s >= 0.0) =>
            {
                Ok(())
            }
            other => Err(Error::Parameter(alloc::format!("invalid tail model {other:?}"))),
        }
    }

    pub fn expectation(&self, m: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::UniformLinear { slope } => {
                if m >= *slope {
                    0.0
                } else {
                    let lo = m.max(0.0);
                    (slope * slope - lo * lo) / (2.0 * slope)
                }
            }
            Self::Pareto { alpha, scale } => {
                let t = m.max(*scale);
                alpha * scale.powf(*alpha) * t.powf(1.0 - alpha) / (alpha - 1.0)
            }
            Self::Empirical { samples } => samples.iter().filter(|&&f| f > m).sum::<f64>() / samples.len() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    /// `σ ≥ sup_f ‖f‖_{L^{1+κ}(P)}`.
    pub sigma: f64,
    pub kappa: f64,
    pub n: usize,
    pub entropy: EntropyModel,
    pub tail: TailModel,
    /// Log-grid range for the truncation level `M`.
    #[serde(default = "default_m_range")]
    pub m_range: (f64, f64),
}

pub fn default_m_range() -> (f64, f64) {
    (1e-6, 1e6)
}

/// Terms at the minimizing `(ε, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundBreakdown {
    pub t1: f64,
    /// `2ε` plus the chaining integral term.
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub t5: f64,
    pub total: f64,
    pub truncation: f64,
    pub epsilon: f64,
}

fn log_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
}

/// `∫_a^b f(x) dx` computed as `∫ f(e^u) e^u du`.
pub(crate) fn integrate_log<F: Fn(f64) -> f64>(q: &Quadrature, f: F, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    let lb: Vec<f64> = breaks.iter().map(|x| x.ln()).collect();
    q.integrate(
        |u| {
            let x = u.exp();
            f(x) * x
        },
        a.ln(),
        b.ln(),
        &lb,
    )
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::Parameter(alloc::format!("κ must lie in (0,1], got {}", self.kappa)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Parameter(alloc::format!("σ must be positive, got {}", self.sigma)));
        }
        if self.n == 0 {
            return Err(Error::Parameter("n must be >= 1".into()));
        }
        let (lo, hi) = self.m_range;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err(Error::Parameter(alloc::format!("bad M range {:?}", self.m_range)));
        }
        self.tail.validate()
    }
}

/// Maximal inequality with expected `L^{1+κ}(P_n)` covering entropy,
/// minimized over 64-point log grids in `ε` and `M`.
pub fn theorem1_bound(inputs: &BoundInputs) -> Result<BoundBreakdown> {
    inputs.validate()?;
    let BoundInputs { sigma, kappa, n, ref entropy, ref tail, m_range } = *inputs;
    let n = n as f64;
    let q = Quadrature::default();

    let upper = (0.5 * sigma).min(0.125);
    let eps_max = sigma.min(0.25);
    let eps: Vec<f64> = (0..GRID).map(|k| eps_max * 10f64.powf(-8.0 + 8.0 * k as f64 / GRID as f64)).collect();

    // I(ε) = ∫_{ε/8}^{upper} √H(x) x^{(κ−1)/2} dx, accumulated from the top down
    let integrand = |x: f64| entropy.eval(x).sqrt() * x.powf(0.5 * (kappa - 1.0));
    let mut chain = alloc::vec![0.0; GRID];
    let mut acc = 0.0;
    let mut prev = upper;
    for k in (0..GRID).rev() {
        let lo = eps[k] / 8.0;
        if lo < prev {
            acc += integrate_log(&q, integrand, lo, prev, &entropy.breakpoints(lo, prev))?;
            prev = lo;
        }
        chain[k] = acc;
    }

    let h_top = (2f64).ln() + entropy.eval(upper);
    let log_factor = (1.0 / sigma).max(4.0).log2().ceil().sqrt();
    let first_power = sigma.powf(0.5 * (1.0 + kappa)).min(2f64.powf(-(1.0 + kappa)));

    let mut best: Option<BoundBreakdown> = None;
    for m in log_grid(m_range.0, m_range.1, GRID) {
        let root = (m.powf(1.0 - kappa) / n).sqrt();
        let t1 = FIRST * root * log_factor * first_power;
        let (t2, epsilon) = eps
            .iter()
            .zip(&chain)
            .map(|(&e, &i)| (2.0 * e + CHAIN * root * i, e))
            .fold((f64::INFINITY, 0.0), |a, b| if b.0 < a.0 { b } else { a });
        let t3 = 2.0 * 2f64.sqrt() * root * sigma.powf(0.5 * (1.0 + kappa)) * h_top.sqrt();
        let t4 = 2.0 * m / (3.0 * n) * h_top;
        let t5 = 2.0 * tail.expectation(m);
        let total = t1 + t2 + t3 + t4 + t5;
        if best.is_none_or(|b| total < b.total) {
            best = Some(BoundBreakdown { t1, t2, t3, t4, t5, total, truncation: m, epsilon });
        }
    }
    best.ok_or_else(|| Error::Degenerate("empty M grid".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singleton(n: usize) -> BoundInputs {
        BoundInputs {
            sigma: 0.125,
            kappa: 1.0,
            n,
            entropy: EntropyModel::zero(),
            tail: TailModel::Zero,
            m_range: default_m_range(),
        }
    }

    #[test]
    fn singleton_class_hand_evaluation() {
        let n = 400.0;
        let b = theorem1_bound(&singleton(400)).unwrap();
        let root = 1.0 / n.sqrt();
        let t1 = 13.2043 * root * 3f64.sqrt() * 0.125;
        let t2 = 2.0 * 0.125 * 1e-8;
        let t3 = 2.0 * 2f64.sqrt() * root * 0.125 * 2f64.ln().sqrt();
        let t4 = 2.0 * 1e-6 / (3.0 * n) * 2f64.ln();
        assert!((b.t1 - t1).abs() < 1e-14);
        assert!((b.t2 - t2).abs() < 1e-20);
        assert!((b.t3 - t3).abs() < 1e-14);
        assert!((b.t4 - t4).abs() < 1e-18);
        assert_eq!(b.t5, 0.0);
        assert!((b.total - (t1 + t2 + t3 + t4)).abs() < 1e-14);
    }

    #[test]
    fn quadrupling_n_halves_singleton_bound() {
        for n in [64, 1000, 10_000] {
            let a = theorem1_bound(&singleton(n)).unwrap().total;
            let b = theorem1_bound(&singleton(4 * n)).unwrap().total;
            assert!((b / a - 0.5).abs() < 1e-6, "n = {n}: ratio {}", b / a);
        }
    }

    #[test]
    fn quadrupling_n_with_entropy() {
        let entropy = EntropyModel::parametric(3.0, 1.0, 1.0, 10.0).unwrap();
        let base =
            BoundInputs { sigma: 0.2, kappa: 1.0, n: 500, entropy, tail: TailModel::Zero, m_range: default_m_range() };
        let a = theorem1_bound(&base).unwrap().total;
        let b = theorem1_bound(&BoundInputs { n: 2000, ..base }).unwrap().total;
        let r = b / a;
        assert!((0.5..=1.0).contains(&r), "ratio {r}");
    }

    #[test]
    fn positive_and_nonincreasing_in_n() {
        let entropy = EntropyModel::parametric(2.0, 0.8, 1.0, 5.0).unwrap();
        for kappa in [0.3, 0.7, 1.0] {
            let mut last = f64::INFINITY;
            for k in 6..=14 {
                let inputs = BoundInputs {
                    sigma: 0.3,
                    kappa,
                    n: 1 << k,
                    entropy: entropy.clone(),
                    tail: TailModel::Pareto { alpha: 1.5, scale: 1.0 },
                    m_range: default_m_range(),
                };
                let b = theorem1_bound(&inputs).unwrap();
                assert!(b.total > 0.0);
                assert!(b.total <= last * (1.0 + 1e-12));
                last = b.total;
            }
        }
    }

    #[test]
    fn chaining_integral_matches_closed_form() {
        // H(x) = x^{-1}, κ = 1: ∫ x^{-1/2} = 2(√b − √a)
        let entropy = EntropyModel::parametric(1.0, 1.0, 0.0, 1.0).unwrap();
        let q = Quadrature::default();
        let v = integrate_log(&q, |x| entropy.eval(x).sqrt(), 1e-9, 0.1, &[]).unwrap();
        let exact = 2.0 * (0.1f64.sqrt() - 1e-9f64.sqrt());
        assert!((v - exact).abs() < 1e-6 * exact);
    }

    #[test]
    fn tail_models() {
        assert!((TailModel::UniformLinear { slope: 2.0 }.expectation(1.0) - 0.75).abs() < 1e-15);
        assert_eq!(TailModel::UniformLinear { slope: 2.0 }.expectation(2.0), 0.0);
        let p = TailModel::Pareto { alpha: 2.0, scale: 1.0 };
        assert!((p.expectation(0.5) - 2.0).abs() < 1e-15);
        assert!((p.expectation(4.0) - 0.5).abs() < 1e-15);
        let e = TailModel::Empirical { samples: alloc::vec![1.0, 2.0, 3.0, 4.0] };
        assert_eq!(e.expectation(2.5), 7.0 / 4.0);
        assert!(TailModel::Pareto { alpha: 1.0, scale: 1.0 }.validate().is_err());
    }

    #[test]
    fn invalid_inputs() {
        let mut b = singleton(10);
        b.kappa = 0.0;
        assert!(theorem1_bound(&b).is_err());
        let mut b = singleton(10);
        b.sigma = -1.0;
        assert!(theorem1_bound(&b).is_err());
    }
}
