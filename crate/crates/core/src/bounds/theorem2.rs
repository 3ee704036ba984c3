#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::EntropyModel;
use crate::error::{Error, Result};
use crate::math::{log_plus, Quadrature};

const LEAD: f64 = 127.63;
const TAIL: f64 = 104.37;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedBoundInputs {
    pub sigma: f64,
    /// Moment order; `κ = (m ∧ 2) − 1`.
    pub m: f64,
    /// `‖1/w‖_{L^{1+κ}(P)}`.
    pub inv_w_l1k: f64,
    /// `‖1/w‖_{L^m(P)}`.
    pub inv_w_lm: f64,
    /// `‖F‖_{L^∞(w)}`.
    pub f_winf: f64,
    pub entropy_p: EntropyModel,
    pub entropy_w: EntropyModel,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedBreakdown {
    pub lead: f64,
    pub tail: f64,
    pub total: f64,
    pub kappa: f64,
}

impl WeightedBoundInputs {
    pub fn kappa(&self) -> f64 {
        self.m.min(2.0) - 1.0
    }
}

/// `∫₀^a [1 + H(x)^p] dx`, refusing non-integrable singularities.
pub fn covering_integral(entropy: &EntropyModel, p: f64, a: f64, label: &str) -> Result<f64> {
    let exponent = entropy.singularity_exponent(p);
    if !(exponent > -1.0) {
        return Err(Error::Integrability {
            exponent,
            advice: alloc::format!("{label} entropy; replace m by a smaller value in (1, 2) so that γ·p < 1"),
        });
    }
    if !(a > 0.0) {
        return Ok(0.0);
    }
    let q = Quadrature::default();
    // x = a t^k makes the x^{exponent} singularity integrable to a bounded integrand
    let k = if exponent < 0.0 { 2.0 / (1.0 + exponent) } else { 1.0 };
    let breaks: alloc::vec::Vec<f64> = entropy.breakpoints(0.0, a).iter().map(|b| (b / a).powf(1.0 / k)).collect();
    let integrand = |t: f64| {
        let x = a * t.powf(k);
        let h = entropy.eval(x);
        let hp = if h > 0.0 { h.powf(p) } else { 0.0 };
        (1.0 + hp) * a * k * t.powf(k - 1.0)
    };
    q.integrate(integrand, 0.0, 1.0, &breaks)
}

/// Maximal inequality with `L^{1+κ}(P)` and weighted uniform entropies.
pub fn theorem2_bound(inputs: &WeightedBoundInputs) -> Result<WeightedBreakdown> {
    let WeightedBoundInputs { sigma, m, inv_w_l1k, inv_w_lm, f_winf, ref entropy_p, ref entropy_w, n } = *inputs;
    if !(m > 1.0) {
        return Err(Error::Parameter(alloc::format!("m must exceed 1, got {m}")));
    }
    if !(sigma > 0.0 && inv_w_l1k > 0.0 && inv_w_lm > 0.0 && f_winf > 0.0) || n == 0 {
        return Err(Error::Parameter("σ, weight norms, ‖F‖ and n must be positive".into()));
    }
    let kappa = inputs.kappa();
    let p = kappa / (1.0 + kappa);
    let q = 1.0 - 1.0 / m;
    let n = n as f64;
    let int_p = covering_integral(entropy_p, p, 2.0 * sigma, "L^{1+κ}(P)")?;
    let int_w = covering_integral(entropy_w, p, 2.0 * f_winf, "L^∞(w)")?;
    let int_wm = covering_integral(entropy_w, q, 2.0 * f_winf, "L^∞(w), order 1−1/m")?;
    let lead = LEAD / kappa * inv_w_l1k.powf(0.5 * (1.0 - kappa)) / n.powf(p)
        * int_p.powf(0.5 * (1.0 + kappa))
        * int_w.powf(0.5 * (1.0 - kappa));
    let tail = TAIL / kappa * inv_w_lm / n.powf(q) * int_wm;
    Ok(WeightedBreakdown { lead, tail, total: lead + tail, kappa })
}

/// Which closed-form case applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClosedFormBranch {
    /// `κ = 1`, `γ ∈ [0, 2)`.
    SquareIntegrableDonsker,
    /// `κ = 1`, `γ ≥ 2`.
    SquareIntegrableNonDonsker,
    /// `κ < 1`, `γ < 1 + κ`.
    HeavyDonsker,
    /// `κ < 1`, `γ ≥ 1 + κ`.
    HeavyNonDonsker,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosedFormInputs {
    pub sigma: f64,
    pub kappa: f64,
    pub m: f64,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub u_f: f64,
    pub truncation: f64,
    pub n_tilde: f64,
    /// `‖F‖_{L^m(P)}`.
    pub f_lm: f64,
}

/// Case-table evaluation of the expected-entropy bound with the suppressed
/// constant set to 1 (so only the shape is meaningful).
pub fn prop_s3_closed_form(inputs: &ClosedFormInputs) -> Result<(f64, ClosedFormBranch)> {
    let ClosedFormInputs { sigma, kappa, m, gamma, gamma_prime: gp, u_f, truncation: big_m, n_tilde: nt, f_lm } =
        *inputs;
    if !(kappa > 0.0 && kappa <= 1.0) || !(m > 1.0) || !(gamma >= 0.0) || !(gp >= 0.0) {
        return Err(Error::Parameter("need κ ∈ (0,1], m > 1, γ, γ′ >= 0".into()));
    }
    if !(sigma > 0.0 && u_f > 0.0 && big_m > 0.0 && nt > 0.0 && f_lm >= 0.0) {
        return Err(Error::Parameter("σ, U_F, M, ñ must be positive".into()));
    }
    if sigma > 0.25 {
        return Err(Error::Domain(alloc::format!("closed form requires σ <= 1/4, got {sigma}")));
    }
    let lp = log_plus(2.0 * u_f / sigma);
    let r = (m - 1.0) / m;
    if kappa == 1.0 {
        let heavy = f_lm * nt.powf(-r) * sigma.powf(-gamma * r) * lp.powf(gp * r);
        if gamma < 2.0 {
            let lead = nt.powf(-0.5) * sigma.powf(1.0 - 0.5 * gamma) * lp.powf(0.5 * gp);
            Ok((lead + heavy, ClosedFormBranch::SquareIntegrableDonsker))
        } else {
            let lead = nt.powf(-1.0 / gamma) * log_plus(u_f * nt.powf(0.5 * gamma)).powf(0.5 * gp);
            Ok((lead + heavy, ClosedFormBranch::SquareIntegrableNonDonsker))
        }
    } else {
        let ratio = big_m.powf(1.0 - kappa) / nt;
        let middle = big_m / nt * sigma.powf(-gamma) * lp.powf(gp);
        let truncation = f_lm.powf(m) / big_m.powf(m - 1.0);
        if gamma < 1.0 + kappa {
            let lead = ratio.sqrt() * sigma.powf(0.5 * (kappa + 1.0 - gamma)) * lp.powf(0.5 * gp);
            Ok((lead + middle + truncation, ClosedFormBranch::HeavyDonsker))
        } else {
            let e = 1.0 / (gamma + 1.0 - kappa);
            let scale = ratio.powf(e);
            if scale > sigma / 8.0 {
                return Err(Error::Domain(alloc::format!(
                    "(M^(1−κ)/ñ)^(1/(γ+1−κ)) = {scale} exceeds σ/8 = {}",
                    sigma / 8.0
                )));
            }
            let lead = scale * log_plus(u_f * (1.0 / ratio).powf(e)).powf(0.5 * gp);
            Ok((lead + middle + truncation, ClosedFormBranch::HeavyNonDonsker))
        }
    }
}
