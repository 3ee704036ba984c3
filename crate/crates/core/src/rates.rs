//! Closed-form convergence rates, regime classification, phase boundaries and
//! localization fixed-point solvers.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Donsker,
    NonDonsker,
    HeavyTail,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Donsker => "Donsker",
            Self::NonDonsker => "NonDonsker",
            Self::HeavyTail => "HeavyTail",
        }
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Error `≍ ñ^{−exponent}` up to constants and logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub exponent: f64,
    pub regime: Regime,
    pub e_complex: f64,
    pub e_heavy: f64,
    /// Named magnitudes, e.g. `delta_s`, `delta_b`, `confidence`.
    pub components: Vec<(String, f64)>,
    pub notes: Vec<String>,
}

impl RateResult {
    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    /// `ñ^{−exponent}`.
    pub fn scale(&self, n_tilde: f64) -> f64 {
        n_tilde.powf(-self.exponent)
    }

    /// `ñ^{−exponent}` with the logarithmic correction `log(ñ^c U^b)^{a/b}`,
    /// `b = 1/exponent`.
    pub fn scale_with_log(&self, n_tilde: f64, a: f64, c: f64, u: f64) -> Result<f64> {
        log_rate_solve(a, 1.0 / self.exponent, c, u, n_tilde)
    }
}

/// Inputs to the Huber decomposition. `v_2` is forced to `∞` when `m < 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateInputs {
    pub m: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub s: f64,
    pub n: f64,
    pub n_tilde: f64,
    pub tau: Option<f64>,
    pub bound_m: f64,
    pub v_m: f64,
    #[serde(default)]
    pub v_2: Option<f64>,
    pub delta: f64,
}

impl RateInputs {
    /// `κ = (m ∧ 2) − 1`.
    pub fn kappa(&self) -> f64 {
        self.m.min(2.0) - 1.0
    }

    pub fn effective_v2(&self) -> f64 {
        if self.m < 2.0 {
            f64::INFINITY
        } else {
            self.v_2.unwrap_or(f64::INFINITY)
        }
    }
}

fn check_rate_args(m: f64, gamma: f64, s: f64) -> Result<()> {
    if !(m > 1.0) {
        return Err(Error::Domain(alloc::format!("moment order must exceed 1, got m = {m}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(alloc::format!("entropy exponent must be finite and >= 0, got {gamma}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(alloc::format!("interpolation exponent must lie in [0,1], got {s}")));
    }
    Ok(())
}

/// Complexity exponent `1/(2+γ)` for `γ ≤ 2`, `1/(2γ)` beyond.
pub fn complexity_exponent(gamma: f64) -> f64 {
    if gamma <= 2.0 {
        1.0 / (2.0 + gamma)
    } else {
        1.0 / (2.0 * gamma)
    }
}

/// Noise exponent `1/((2−s)/(1−1/m) + sγ)`; `m = ∞` is allowed.
pub fn heavy_tail_exponent(m: f64, gamma: f64, s: f64) -> f64 {
    1.0 / ((2.0 - s) / (1.0 - 1.0 / m) + s * gamma)
}

/// Least-squares rate exponent and regime.
pub fn nplse_exponent(m: f64, gamma: f64, s: f64) -> Result<RateResult> {
    check_rate_args(m, gamma, s)?;
    let e_complex = complexity_exponent(gamma);
    let e_heavy = heavy_tail_exponent(m, gamma, s);
    let regime = if e_heavy < e_complex {
        Regime::HeavyTail
    } else if gamma < 2.0 {
        Regime::Donsker
    } else {
        Regime::NonDonsker
    };
    Ok(RateResult {
        exponent: e_complex.min(e_heavy),
        regime,
        e_complex,
        e_heavy,
        components: Vec::new(),
        notes: Vec::new(),
    })
}

/// Smallest `m` with noise exponent at least the complexity exponent.
pub fn phase_boundary_m(gamma: f64, s: f64) -> f64 {
    if gamma >= 2.0 {
        gamma / (gamma - 1.0)
    } else {
        let denom = s + (1.0 - s) * gamma;
        if denom == 0.0 {
            f64::INFINITY
        } else {
            (2.0 + (1.0 - s) * gamma) / denom
        }
    }
}

/// Which statistical-error branch the Huber estimator falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HuberBranch {
    /// `ñ^{1/m}(M + v_m^{1/m}) ≥ τ`.
    ModerateTau,
    LargeTau,
}

/// Statistical error, bias and confidence terms for Huber regression over a
/// `γ = 0` class, without suppressed constants or log factors.
pub fn huber_error_decomposition(inputs: &RateInputs) -> Result<RateResult> {
    let RateInputs { m, n, n_tilde, bound_m, v_m, delta, .. } = *inputs;
    if !(m > 1.0) {
        return Err(Error::Domain(alloc::format!("moment order must exceed 1, got m = {m}")));
    }
    if !(n_tilde > 0.0) || !(n > 0.0) || !(bound_m > 0.0) || !(v_m > 0.0) {
        return Err(Error::Parameter("n, ñ, M and v_m must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(alloc::format!("δ must lie in (0,1), got {delta}")));
    }
    let tau = inputs.tau.ok_or_else(|| Error::Parameter("Huber decomposition needs τ".into()))?;
    let tau_min = 2.0 * (2.0 * bound_m).max((2.0 * v_m).powf(1.0 / m));
    if !(tau >= tau_min) {
        return Err(Error::Precondition(alloc::format!("τ = {tau} is below 2·max(2M, (2v_m)^(1/m)) = {tau_min}")));
    }
    let v2 = inputs.effective_v2();
    let vm_root = v_m.powf(1.0 / m);
    let spread = tau.sqrt() * tau.min(v2.sqrt() + bound_m).sqrt();
    let branch = if n_tilde.powf(1.0 / m) * (bound_m + vm_root) >= tau {
        HuberBranch::ModerateTau
    } else {
        HuberBranch::LargeTau
    };
    let (delta_s, exponent, regime) = match branch {
        HuberBranch::ModerateTau => (spread / n_tilde.sqrt(), 0.5, Regime::Donsker),
        HuberBranch::LargeTau => {
            let e = 0.5 - 0.5 / m;
            ((bound_m * (bound_m + vm_root)).sqrt() * n_tilde.powf(-e), e, Regime::HeavyTail)
        }
    };
    let delta_b = v_m * tau.powf(1.0 - m);
    let confidence = spread * ((2.0 / delta).ln() / n).sqrt();
    let branch_note = match branch {
        HuberBranch::ModerateTau => "branch: moderate tau",
        HuberBranch::LargeTau => "branch: large tau",
    };
    Ok(RateResult {
        exponent,
        regime,
        e_complex: 0.5,
        e_heavy: 0.5 - 0.5 / m,
        components: alloc::vec![
            ("delta_s".into(), delta_s),
            ("delta_b".into(), delta_b),
            ("confidence".into(), confidence),
            ("total".into(), delta_s + delta_b + confidence),
        ],
        notes: alloc::vec![
            branch_note.into(),
            "log factors and constants suppressed; branch threshold uses constant 1".into(),
            "approximation error delta_a not included".into(),
        ],
    })
}

/// Ratio of the moderate-τ to the large-τ statistical error at the branch
/// threshold `ñ^{1/m}(M + v_m^{1/m}) = τ`, namely `√(min(τ, √v₂+M)/M)`.
pub fn huber_threshold_gap(tau: f64, bound_m: f64, v2: f64) -> f64 {
    (tau.min(v2.sqrt() + bound_m) / bound_m).sqrt()
}

/// `√(log(2/δ)) / √ñ`.
pub fn quantile_rate(n_tilde: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) || !(n_tilde > 0.0) {
        return Err(Error::Parameter("quantile rate needs δ in (0,1) and ñ > 0".into()));
    }
    Ok((2.0 / delta).ln().sqrt() / n_tilde.sqrt())
}

/// Minimax exponent `1/(2+γ)` for set-structured classes.
pub fn set_structured_exponent(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Domain(alloc::format!("set-structured exponent needs γ > 0, got {gamma}")));
    }
    Ok(1.0 / (2.0 + gamma))
}

/// `n^{−1/b} · log(n^c U^b)^{a/b}`.
pub fn log_rate_solve(a: f64, b: f64, c: f64, u: f64, n: f64) -> Result<f64> {
    if !(b > 0.0 && c > 0.0 && u > 0.0 && a >= 0.0) {
        return Err(Error::Parameter("log rate needs b, c, U > 0 and a >= 0".into()));
    }
    if a == 0.0 {
        return Ok(n.powf(-1.0 / b));
    }
    let l = c * n.ln() + b * u.ln();
    if !(l > 0.0) {
        return Err(Error::Domain(alloc::format!("log(n^c U^b) = {l} must be positive")));
    }
    Ok(n.powf(-1.0 / b) * l.powf(a / b))
}

const PROFILE_POINTS: usize = 64;
const REL_TOL: f64 = 1e-8;

/// `inf{x ∈ (0, x_max] : lhs(x) ≤ rhs(x)}`, assuming the feasible set is an
/// up-ray. The ray structure is checked on 64 log-spaced samples.
fn infimum_solve<L, R>(lhs: L, rhs: R, x_max: f64, monotone_lhs: bool) -> Result<f64>
where
    L: Fn(f64) -> f64,
    R: Fn(f64) -> f64,
{
    if !(x_max > 0.0) || !x_max.is_finite() {
        return Err(Error::Parameter(alloc::format!("search limit must be positive and finite, got {x_max}")));
    }
    let ok = |x: f64| lhs(x) <= rhs(x);
    let lo_edge = x_max * 1e-12;
    let xs: Vec<f64> =
        (0..PROFILE_POINTS).map(|k| lo_edge * (x_max / lo_edge).powf(k as f64 / (PROFILE_POINTS - 1) as f64)).collect();
    let values: Vec<f64> = xs.iter().map(|&x| lhs(x)).collect();
    let profile = || xs.iter().copied().zip(values.iter().copied()).collect::<Vec<_>>();
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Infeasible { profile: profile() });
    }
    if monotone_lhs && values.windows(2).any(|w| w[1] < w[0] * (1.0 - 1e-12) - 1e-300) {
        return Err(Error::Infeasible { profile: profile() });
    }
    let flags: Vec<bool> = xs.iter().map(|&x| ok(x)).collect();
    let first = match flags.iter().position(|f| *f) {
        Some(i) => i,
        None => return Err(Error::Infeasible { profile: profile() }),
    };
    if flags[first..].iter().any(|f| !*f) {
        return Err(Error::Infeasible { profile: profile() });
    }
    let (mut lo, mut hi) = if first == 0 {
        let mut hi = xs[0];
        loop {
            let next = hi * 0.5;
            if next < f64::MIN_POSITIVE {
                return Ok(0.0);
            }
            if !ok(next) {
                break (next, hi);
            }
            hi = next;
        }
    } else {
        (xs[first - 1], xs[first])
    };
    while hi - lo > REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Localization radius `inf{τ > 0 : w⁻¹(φ(τ)) ≤ τ/4}` with `τ ↦ w⁻¹(φ(τ))`
/// nondecreasing and crossing `τ/4` once in `(0, tau_max]`.
pub fn fixed_point_solve<P, W>(phi: P, w_inverse: W, tau_max: f64) -> Result<f64>
where
    P: Fn(f64) -> f64,
    W: Fn(f64) -> f64,
{
    infimum_solve(|t| w_inverse(phi(t)), |t| 0.25 * t, tau_max, true)
}

/// `σ_n(δ) = inf{σ > 0 : δ^{−1/m} φ(σ) ≤ σ²}`.
pub fn expectation_rate_solve<P>(phi: P, m: f64, delta: f64, sigma_max: f64) -> Result<f64>
where
    P: Fn(f64) -> f64,
{
    if !(m > 1.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter("need m > 1 and δ in (0,1)".into()));
    }
    let inflate = delta.powf(-1.0 / m);
    infimum_solve(|s| inflate * phi(s), |s| s * s, sigma_max, false)
}

/// Figure panels: this rate, the `s = 0` heavy-tail rate, and the
/// finite-variance Donsker-only rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    A,
    B,
    C,
}

impl core::str::FromStr for PhaseMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Self::A),
            "b" | "B" => Ok(Self::B),
            "c" | "C" => Ok(Self::C),
            other => Err(Error::Parameter(alloc::format!("unknown phase mode '{other}', expected a, b or c"))),
        }
    }
}

/// Inclusive linear grid `start, …, end` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Axis {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !start.is_finite() || !end.is_finite() || (steps > 1 && !(end >= start)) {
            return Err(Error::Parameter(alloc::format!("bad axis {start}:{end}:{steps}")));
        }
        Ok(Self { start, end, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        if self.steps == 1 {
            return alloc::vec![self.start];
        }
        let h = (self.end - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|i| if i + 1 == self.steps { self.end } else { self.start + h * i as f64 }).collect()
    }

    fn spacing(&self) -> f64 {
        if self.steps > 1 {
            (self.end - self.start) / (self.steps - 1) as f64
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub m: f64,
    pub gamma: f64,
    pub s: f64,
    pub exponent: f64,
    pub regime: Regime,
    pub e_complex: f64,
    pub e_heavy: f64,
    /// The noise and complexity exponents cross within half a grid step.
    pub boundary: bool,
}

fn mode_rate(mode: PhaseMode, m: f64, gamma: f64, s: f64) -> Result<RateResult> {
    match mode {
        PhaseMode::A => nplse_exponent(m, gamma, s),
        PhaseMode::B => {
            if !(gamma < 2.0) {
                return Err(Error::Domain(alloc::format!(
                    "mode b covers Donsker classes only (γ < 2), got γ = {gamma}"
                )));
            }
            nplse_exponent(m, gamma, 0.0).map(|mut r| {
                r.notes.push("s = 0".into());
                r
            })
        }
        PhaseMode::C => {
            if !(gamma < 2.0) {
                return Err(Error::Domain(alloc::format!(
                    "mode c covers Donsker classes only (γ < 2), got γ = {gamma}"
                )));
            }
            if !(m >= 2.0) {
                return Err(Error::Domain(alloc::format!("mode c assumes finite variance (m >= 2), got m = {m}")));
            }
            nplse_exponent(m, gamma, s)
        }
    }
}

/// Exponent and regime on the `(m, γ)` grid, row-major with `m` outermost.
pub fn phase_diagram(m_axis: &Axis, gamma_axis: &Axis, s: f64, mode: PhaseMode) -> Result<Vec<PhaseCell>> {
    let (dm, dg) = (0.5 * m_axis.spacing(), 0.5 * gamma_axis.spacing());
    let s_eff = if mode == PhaseMode::B { 0.0 } else { s };
    let mut cells = Vec::with_capacity(m_axis.steps * gamma_axis.steps);
    for &m in &m_axis.points() {
        for &gamma in &gamma_axis.points() {
            let r = mode_rate(mode, m, gamma, s)?;
            let sign = |mm: f64, gg: f64| {
                let mm = mm.max(1.0 + 1e-12);
                let gg = gg.max(0.0);
                heavy_tail_exponent(mm, gg, s_eff) >= complexity_exponent(gg)
            };
            let here = r.e_heavy >= r.e_complex;
            let boundary = [(m - dm, gamma), (m + dm, gamma), (m, gamma - dg), (m, gamma + dg)]
                .iter()
                .any(|&(mm, gg)| sign(mm, gg) != here);
            cells.push(PhaseCell {
                m,
                gamma,
                s: s_eff,
                exponent: r.exponent,
                regime: r.regime,
                e_complex: r.e_complex,
                e_heavy: r.e_heavy,
                boundary,
            });
        }
    }
    Ok(cells)
}
