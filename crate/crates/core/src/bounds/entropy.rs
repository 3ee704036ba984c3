use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::log_plus;

/// Expected covering entropy `x ↦ H(x)` used by the bound evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum EntropyModel {
    /// `H(x) = D_F · x^{−γ} · log₊(U_F/x)^{γ′}`.
    Parametric { d_f: f64, gamma: f64, gamma_prime: f64, u_f: f64 },
    /// Step function from estimates on an increasing grid: `H(x)` takes the
    /// value at the largest grid point `≤ x`, is `cap` below the grid and the
    /// last value above it.
    Tabulated { grid: Vec<f64>, values: Vec<f64>, cap: f64 },
}

/// Right-tail concentration `ψ_n` of a class envelope, reduced to
/// `∫₀^∞ ψ_n(u) d(u^γ) ∨ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TailConcentration {
    /// `ψ(u) = min(1, u^{−p})`, which integrates to `p/(p−γ)` for `p > γ`.
    Markov { p: f64 },
    /// Precomputed `∫ψ d(u^γ)`.
    Integral { value: f64 },
}

impl TailConcentration {
    pub fn factor(&self, gamma: f64) -> Result<f64> {
        let v = match *self {
            Self::Markov { p } => {
                if !(p > gamma) {
                    return Err(Error::Domain(alloc::format!(
                        "Markov tail with p = {p} does not integrate against d(u^γ) for γ = {gamma}"
                    )));
                }
                if gamma == 0.0 {
                    1.0
                } else {
                    p / (p - gamma)
                }
            }
            Self::Integral { value } => {
                if !(value >= 0.0) || !value.is_finite() {
                    return Err(Error::Parameter(alloc::format!("tail integral must be finite and >= 0, got {value}")));
                }
                value
            }
        };
        Ok(v.max(1.0))
    }
}

impl EntropyModel {
    pub fn parametric(d_f: f64, gamma: f64, gamma_prime: f64, u_f: f64) -> Result<Self> {
        if !(d_f > 0.0) || !d_f.is_finite() {
            return Err(Error::Parameter(alloc::format!("D_F must be positive, got {d_f}")));
        }
        if !(gamma >= 0.0) || !(gamma_prime >= 0.0) {
            return Err(Error::Parameter("entropy exponents must be >= 0".into()));
        }
        if !(u_f > 0.0) {
            return Err(Error::Parameter(alloc::format!("U_F must be positive, got {u_f}")));
        }
        Ok(Self::Parametric { d_f, gamma, gamma_prime, u_f })
    }

    /// `H ≡ 0`: a singleton class.
    pub fn zero() -> Self {
        Self::Tabulated { grid: Vec::new(), values: Vec::new(), cap: 0.0 }
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>, cap: f64) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Shape { expected: grid.len(), found: values.len() });
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::Parameter("entropy grid must be positive and strictly increasing".into()));
        }
        if values.iter().chain(core::iter::once(&cap)).any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Parameter("entropy values must be finite and >= 0".into()));
        }
        Ok(Self::Tabulated { grid, values, cap })
    }

    /// Parameterized class `{f_θ}` with `log N(h, Θ, d) ≤ D_Θ h^{−γ}` and a
    /// Lipschitz envelope `G`: `H(h) ≤ D_Θ (‖G‖/h)^γ (∫ψ d(u^γ) ∨ 1)`.
    pub fn parameterized_class(d_theta: f64, gamma: f64, lipschitz_norm: f64, tail: TailConcentration) -> Result<Self> {
        if !(lipschitz_norm > 0.0) {
            return Err(Error::Parameter("Lipschitz envelope norm must be > 0".into()));
        }
        let factor = tail.factor(gamma)?;
        Self::parametric(d_theta * lipschitz_norm.powf(gamma) * factor, gamma, 0.0, 1.0)
    }

    /// Weighted uniform entropy `log N(x, F, L^∞(⟨·⟩^{−η})) ≤ D_F x^{−γ}` with
    /// moment level `μ`: `H(h) ≤ D_F (μ/h)^γ (∫ψ d(u^γ) ∨ 1)`.
    pub fn weighted_uniform(d_f: f64, gamma: f64, mu: f64, tail: TailConcentration) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::Parameter("μ must be > 0".into()));
        }
        let factor = tail.factor(gamma)?;
        Self::parametric(d_f * mu.powf(gamma) * factor, gamma, 0.0, 1.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Parametric { d_f, gamma, gamma_prime, u_f } => {
                let log_part = if *gamma_prime == 0.0 { 1.0 } else { log_plus(u_f / x).powf(*gamma_prime) };
                d_f * x.powf(-gamma) * log_part
            }
            Self::Tabulated { grid, values, cap } => {
                let idx = grid.partition_point(|g| *g <= x);
                if idx == 0 {
                    *cap
                } else {
                    values[idx - 1]
                }
            }
        }
    }

    /// Jump locations inside `[a, b]`, for piecewise quadrature.
    pub fn breakpoints(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            Self::Parametric { u_f, gamma_prime, .. } => {
                let kink = u_f / core::f64::consts::E;
                if *gamma_prime > 0.0 && kink > a && kink < b {
                    alloc::vec![kink]
                } else {
                    Vec::new()
                }
            }
            Self::Tabulated { grid, .. } => grid.iter().copied().filter(|g| *g > a && *g < b).collect(),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Self::Parametric { gamma, .. } => Some(*gamma),
            Self::Tabulated { .. } => None,
        }
    }

    pub fn gamma_prime(&self) -> Option<f64> {
        match self {
            Self::Parametric { gamma_prime, .. } => Some(*gamma_prime),
            Self::Tabulated { .. } => None,
        }
    }

    pub fn u_f(&self) -> Option<f64> {
        match self {
            Self::Parametric { u_f, .. } => Some(*u_f),
            Self::Tabulated { .. } => None,
        }
    }

    pub fn effective_dim(&self) -> Option<f64> {
        match self {
            Self::Parametric { d_f, .. } => Some(*d_f),
            Self::Tabulated { .. } => None,
        }
    }

    /// Exponent of the singularity of `H(x)^p` at zero (log factors ignored).
    pub fn singularity_exponent(&self, p: f64) -> f64 {
        match self {
            Self::Parametric { gamma, .. } => -gamma * p,
            Self::Tabulated { .. } => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parametric_hand_values() {
        let h = EntropyModel::parametric(2.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(h.eval(0.5), 4.0);
        let h = EntropyModel::parametric(1.0, 0.0, 1.0, 10.0).unwrap();
        assert!((h.eval(0.1) - 100f64.ln()).abs() < 1e-12);
        // log₊ floors at one
        assert_eq!(h.eval(9.0), 1.0);
        assert!(EntropyModel::parametric(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(EntropyModel::parametric(1.0, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn tabulated_step_function() {
        let h = EntropyModel::tabulated(alloc::vec![0.1, 0.2, 0.4], alloc::vec![3.0, 2.0, 1.0], 5.0).unwrap();
        assert_eq!(h.eval(0.05), 5.0);
        assert_eq!(h.eval(0.1), 3.0);
        assert_eq!(h.eval(0.3), 2.0);
        assert_eq!(h.eval(10.0), 1.0);
        assert_eq!(h.breakpoints(0.15, 1.0), alloc::vec![0.2, 0.4]);
        assert_eq!(EntropyModel::zero().eval(1e-9), 0.0);
        assert!(EntropyModel::tabulated(alloc::vec![0.2, 0.1], alloc::vec![1.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn class_constructors() {
        // Markov with p = 2, γ = 1 → factor 2
        let h = EntropyModel::parameterized_class(3.0, 1.0, 0.5, TailConcentration::Markov { p: 2.0 }).unwrap();
        assert!((h.eval(0.25) - 3.0 * 2.0 * 2.0).abs() < 1e-12);
        let h = EntropyModel::weighted_uniform(1.0, 2.0, 1.0, TailConcentration::Integral { value: 0.3 }).unwrap();
        assert!((h.eval(0.5) - 4.0).abs() < 1e-12);
        assert!(EntropyModel::weighted_uniform(1.0, 2.0, 1.0, TailConcentration::Markov { p: 1.5 }).is_err());
    }

    #[test]
    fn markov_factor_matches_quadrature() {
        let (p, g) = (3.0, 1.2);
        let q = crate::math::Quadrature::default();
        // ∫₀^∞ ψ(u) γ u^{γ−1} du with u = 1/t substitution on the tail
        let head = q.integrate(|u| g * u.powf(g - 1.0), 0.0, 1.0, &[]).unwrap();
        let tail = q.integrate(|t| g * t.powf(p - g - 1.0), 0.0, 1.0, &[]).unwrap();
        let f = TailConcentration::Markov { p }.factor(g).unwrap();
        assert!((head + tail - f).abs() < 1e-6);
    }

    proptest! {
        #[test]
        fn parametric_is_nonincreasing_and_nonnegative(
            d in 0.1f64..10.0, g in 0.0f64..4.0, gp in 0.0f64..2.0, u in 0.1f64..100.0,
            x in 1e-4f64..10.0, r in 1.0f64..5.0,
        ) {
            let h = EntropyModel::parametric(d, g, gp, u).unwrap();
            prop_assert!(h.eval(x) >= 0.0);
            prop_assert!(h.eval(x * r) <= h.eval(x) * (1.0 + 1e-12));
        }
    }
}
