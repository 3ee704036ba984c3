//! Convex losses in the prediction and their subgradients.
//!
//! Residual losses (squared, Huber, check) are functions of `u = y - f`;
//! the GLM negative log-likelihoods are `-y f + ψ(f)`.

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    Huber,
    Quantile,
    Logistic,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Huber scale (> 0) or quantile level in (0, 1); unused otherwise.
    #[serde(default)]
    pub tau: f64,
}

impl LossSpec {
    pub fn squared() -> Self {
        Self { kind: LossKind::Squared, tau: 0.0 }
    }

    pub fn huber(tau: f64) -> Result<Self> {
        let spec = Self { kind: LossKind::Huber, tau };
        spec.validate()?;
        Ok(spec)
    }

    pub fn quantile(tau: f64) -> Result<Self> {
        let spec = Self { kind: LossKind::Quantile, tau };
        spec.validate()?;
        Ok(spec)
    }

    pub fn logistic() -> Self {
        Self { kind: LossKind::Logistic, tau: 0.0 }
    }

    pub fn poisson() -> Self {
        Self { kind: LossKind::Poisson, tau: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LossKind::Huber if !(self.tau > 0.0) => {
                Err(Error::Parameter(alloc::format!("Huber tau must be > 0, got {}", self.tau)))
            }
            LossKind::Quantile if !(self.tau > 0.0 && self.tau < 1.0) => {
                Err(Error::Parameter(alloc::format!("quantile level must lie in (0,1), got {}", self.tau)))
            }
            _ => Ok(()),
        }
    }

    pub fn is_residual_loss(&self) -> bool {
        matches!(self.kind, LossKind::Squared | LossKind::Huber | LossKind::Quantile)
    }

    /// Loss at residual `u` for squared / Huber / check losses.
    pub fn residual_loss(&self, u: f64) -> f64 {
        match self.kind {
            LossKind::Squared => 0.5 * u * u,
            LossKind::Huber => huber(u, self.tau),
            LossKind::Quantile => check(u, self.tau),
            LossKind::Logistic | LossKind::Poisson => f64::NAN,
        }
    }

    /// Derivative in the residual: `u`, `clip(u, ±τ)`, `τ - I(u < 0)`.
    /// At `u = 0` the check loss selects `τ`.
    pub fn residual_subgradient(&self, u: f64) -> f64 {
        match self.kind {
            LossKind::Squared => u,
            LossKind::Huber => huber_derivative(u, self.tau),
            LossKind::Quantile => {
                if u < 0.0 {
                    self.tau - 1.0
                } else {
                    self.tau
                }
            }
            LossKind::Logistic | LossKind::Poisson => f64::NAN,
        }
    }

    /// Loss of predicting `f` for response `y`.
    pub fn value(&self, prediction: f64, response: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => -response * prediction + softplus(prediction),
            LossKind::Poisson => -response * prediction + prediction.exp(),
            _ => self.residual_loss(response - prediction),
        }
    }

    /// Subgradient with respect to the prediction `f`.
    pub fn prediction_subgradient(&self, prediction: f64, response: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => sigmoid(prediction) - response,
            LossKind::Poisson => prediction.exp() - response,
            _ => -self.residual_subgradient(response - prediction),
        }
    }
}

/// `½x²` for `|x| ≤ τ`, `τ|x| − ½τ²` beyond.
pub fn huber(x: f64, tau: f64) -> f64 {
    if x.abs() <= tau {
        0.5 * x * x
    } else {
        tau * x.abs() - 0.5 * tau * tau
    }
}

pub fn huber_derivative(x: f64, tau: f64) -> f64 {
    if x.abs() <= tau {
        x
    } else {
        tau.copysign(x)
    }
}

/// `ρ_τ(u) = u (τ − I(u < 0))`.
pub fn check(u: f64, tau: f64) -> f64 {
    if u < 0.0 {
        u * (tau - 1.0)
    } else {
        u * tau
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `(½ min ψ″, ½ max ψ″)` over `[lo, hi]` for the logistic and Poisson links.
pub fn glm_curvature_bounds(spec: &LossSpec, lo: f64, hi: f64) -> Result<(f64, f64)> {
    if !(lo <= hi) {
        return Err(Error::Domain(alloc::format!("empty range [{lo}, {hi}]")));
    }
    match spec.kind {
        LossKind::Logistic => {
            let curv = |x: f64| {
                if x.is_infinite() {
                    0.0
                } else {
                    let p = sigmoid(x);
                    p * (1.0 - p)
                }
            };
            // ψ″ is unimodal with its peak at 0
            let min = curv(lo).min(curv(hi));
            let max = if lo <= 0.0 && hi >= 0.0 { 0.25 } else { curv(lo).max(curv(hi)) };
            Ok((0.5 * min, 0.5 * max))
        }
        LossKind::Poisson => {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Domain(
                    "Poisson curvature needs a bounded prediction range (uniformly bounded sieve)".into(),
                ));
            }
            Ok((0.5 * lo.exp(), 0.5 * hi.exp()))
        }
        _ => Err(Error::Config(alloc::format!("{:?} is not a GLM loss", spec.kind))),
    }
}
