//! Candidate function classes: partition sieves, truncated ReLU networks,
//! and the regression targets they are fit to.

mod partition;
mod relu;
mod sgd;

pub use partition::PartitionSieve;
pub use relu::{relu_effective_dim, relu_entropy_model, DenseLayer, ReluNet};
pub use sgd::{sgd_train, TrainOutcome, TrainSchedule};

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::bounds::EntropyModel;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Anything that maps a covariate row to a prediction.
pub trait Model {
    fn input_dim(&self) -> usize;

    /// Prediction for one row; callers guarantee the row length.
    fn predict_row(&self, x: &[f64]) -> f64;

    fn evaluate(&self, xs: &Matrix) -> Result<Vec<f64>> {
        if xs.cols() != self.input_dim() {
            return Err(Error::Shape { expected: self.input_dim(), found: xs.cols() });
        }
        Ok(xs.iter_rows().map(|x| self.predict_row(x)).collect())
    }
}

/// `sgn(v) · (|v| ∧ M)`.
pub fn truncate(v: f64, bound: f64) -> f64 {
    if v.abs() <= bound {
        v
    } else {
        bound.copysign(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SieveKind {
    PartitionSieve,
    FiniteDictionary,
    ReluNet,
}

/// Complexity metadata of a sieve: uniform bound, entropy, interpolation
/// exponent `s`, and effective dimension `D_F`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveSpec {
    pub kind: SieveKind,
    pub uniform_bound: f64,
    pub entropy: EntropyModel,
    pub interp_s: f64,
    pub effective_dim: f64,
}

impl SieveSpec {
    /// Partition of `[0,1]^d` into `K^d` cubes, reported with the Hölder
    /// entropy exponent `γ = d/α` and the conservative `s = 0`.
    pub fn partition(dim: usize, cells_per_axis: usize, holder_alpha: f64, bound: f64) -> Result<Self> {
        if dim == 0 || cells_per_axis == 0 {
            return Err(Error::Parameter("partition needs d >= 1 and K >= 1".into()));
        }
        if !(holder_alpha > 0.0) || !(bound > 0.0) {
            return Err(Error::Parameter("Hölder exponent and bound must be > 0".into()));
        }
        let cells = (cells_per_axis as f64).powi(dim as i32);
        Ok(Self {
            kind: SieveKind::PartitionSieve,
            uniform_bound: bound,
            entropy: EntropyModel::parametric(cells, dim as f64 / holder_alpha, 0.0, 1.0)?,
            interp_s: 0.0,
            effective_dim: cells,
        })
    }

    pub fn relu(depth: usize, width: usize, bound: f64, n: usize) -> Result<Self> {
        let entropy = relu_entropy_model(depth, width, bound, n)?;
        Ok(Self {
            kind: SieveKind::ReluNet,
            uniform_bound: bound,
            effective_dim: entropy.effective_dim().unwrap_or(0.0),
            entropy,
            interp_s: 0.0,
        })
    }

    pub fn with_interp_s(mut self, s: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::Parameter(alloc::format!("interpolation exponent must lie in [0,1], got {s}")));
        }
        self.interp_s = s;
        Ok(self)
    }

    /// `ñ = n / D_F`.
    pub fn effective_sample_size(&self, n: usize) -> f64 {
        n as f64 / self.effective_dim
    }

    pub fn gamma(&self) -> f64 {
        self.entropy.gamma().unwrap_or(0.0)
    }
}

/// Rate-optimal cells per axis for a Hölder-`α` target: `K_n = ⌈n^{1/(2α+d)}⌉`.
pub fn tuned_cells_per_axis(n: usize, holder_alpha: f64, dim: usize) -> usize {
    let raw = (n as f64).powf(1.0 / (2.0 * holder_alpha + dim as f64));
    // exact powers such as 512^{1/3} must not round up past the integer
    let k = (raw * (1.0 - 1e-12)).ceil();
    (k as usize).max(1)
}

/// Regression function `f₀`; all families depend on the first coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetFunction {
    /// `amplitude · sin(2π · frequency · x₁)`.
    Sine {
        amplitude: f64,
        frequency: f64,
    },
    /// Linear interpolation through `(x, y)` knots, constant outside.
    PiecewiseLinear {
        knots: Vec<(f64, f64)>,
    },
    Constant {
        value: f64,
    },
}

impl TargetFunction {
    pub fn sine(amplitude: f64, frequency: f64) -> Self {
        Self::Sine { amplitude, frequency }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let t = x[0];
        match self {
            Self::Sine { amplitude, frequency } => amplitude * (2.0 * PI * frequency * t).sin(),
            Self::Constant { value } => *value,
            Self::PiecewiseLinear { knots } => {
                if knots.is_empty() {
                    return 0.0;
                }
                if t <= knots[0].0 {
                    return knots[0].1;
                }
                for w in knots.windows(2) {
                    let ((x0, y0), (x1, y1)) = (w[0], w[1]);
                    if t <= x1 {
                        let lam = if x1 > x0 { (t - x0) / (x1 - x0) } else { 1.0 };
                        return y0 + lam * (y1 - y0);
                    }
                }
                knots[knots.len() - 1].1
            }
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Self::Sine { amplitude, .. } => amplitude.abs(),
            Self::Constant { value } => value.abs(),
            Self::PiecewiseLinear { knots } => knots.iter().map(|k| k.1.abs()).fold(0.0, f64::max),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Self::PiecewiseLinear { knots } = self {
            if knots.windows(2).any(|w| !(w[1].0 >= w[0].0)) {
                return Err(Error::Parameter("piecewise-linear knots must be sorted by x".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_is_idempotent() {
        for &v in &[-7.0, -3.0, -0.2, 0.0, 1.0, 3.0, 5.0] {
            assert_eq!(truncate(truncate(v, 3.0), 3.0), truncate(v, 3.0));
        }
        assert_eq!(truncate(5.0, 3.0), 3.0);
        assert_eq!(truncate(-5.0, 3.0), -3.0);
        assert_eq!(truncate(1.0, 3.0), 1.0);
    }

    #[test]
    fn tuned_cells() {
        assert_eq!(tuned_cells_per_axis(512, 1.0, 1), 8);
        assert_eq!(tuned_cells_per_axis(4096, 1.0, 1), 16);
        assert_eq!(tuned_cells_per_axis(1024, 1.0, 1), 11);
        assert_eq!(tuned_cells_per_axis(1, 1.0, 1), 1);
    }

    #[test]
    fn partition_metadata() {
        let s = SieveSpec::partition(2, 4, 1.0, 1.0).unwrap();
        assert_eq!(s.effective_dim, 16.0);
        assert_eq!(s.gamma(), 2.0);
        assert_eq!(s.interp_s, 0.0);
        assert_eq!(s.effective_sample_size(160), 10.0);
        assert!(s.clone().with_interp_s(1.5).is_err());
        assert_eq!(s.with_interp_s(0.5).unwrap().interp_s, 0.5);
    }

    #[test]
    fn targets() {
        let pl = TargetFunction::PiecewiseLinear { knots: alloc::vec![(0.0, 0.0), (1.0, 2.0)] };
        assert_eq!(pl.eval(&[0.25]), 0.5);
        assert_eq!(pl.eval(&[2.0]), 2.0);
        assert_eq!(pl.sup_norm(), 2.0);
        let s = TargetFunction::sine(1.0, 1.0);
        assert!((s.eval(&[0.25]) - 1.0).abs() < 1e-15);
    }
}
