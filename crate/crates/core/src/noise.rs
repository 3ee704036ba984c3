//! Seedable samplers for heavy-tailed regression noise and covariate designs.
//!
//! Every symmetric family is drawn as `sign * magnitude`, with the sign taken
//! from its own fair coin. Flipping that coin negates a sample exactly.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::gamma;
use crate::matrix::Matrix;
use crate::rng::{RngStream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    StudentT,
    SymmetricPareto,
    Cauchy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSpecRaw {
    family: NoiseFamily,
    scale: f64,
    #[serde(default = "one")]
    tail_param: f64,
}

fn one() -> f64 {
    1.0
}

/// A noise law together with the supremum of its finite absolute moments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NoiseSpecRaw", into = "NoiseSpecRaw")]
pub struct NoiseSpec {
    family: NoiseFamily,
    scale: f64,
    tail_param: f64,
    declared_m: f64,
}

impl TryFrom<NoiseSpecRaw> for NoiseSpec {
    type Error = Error;
    fn try_from(raw: NoiseSpecRaw) -> Result<Self> {
        NoiseSpec::new(raw.family, raw.scale, raw.tail_param)
    }
}

impl From<NoiseSpec> for NoiseSpecRaw {
    fn from(spec: NoiseSpec) -> Self {
        NoiseSpecRaw { family: spec.family, scale: spec.scale, tail_param: spec.tail_param }
    }
}

impl NoiseSpec {
    /// `tail_param` is ν for Student-t and α for the symmetric Pareto; it is
    /// ignored for Gaussian and Cauchy. `scale = 0` gives a noiseless design.
    pub fn new(family: NoiseFamily, scale: f64, tail_param: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(Error::Parameter(alloc::format!("noise scale must be finite and >= 0, got {scale}")));
        }
        let declared_m = match family {
            NoiseFamily::Gaussian => f64::INFINITY,
            NoiseFamily::Cauchy => 1.0,
            NoiseFamily::StudentT | NoiseFamily::SymmetricPareto => {
                if !(tail_param > 0.0) || !tail_param.is_finite() {
                    return Err(Error::Parameter(alloc::format!(
                        "tail parameter must be finite and > 0, got {tail_param}"
                    )));
                }
                tail_param
            }
        };
        Ok(Self { family, scale, tail_param, declared_m })
    }

    pub fn gaussian(scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::Gaussian, scale, 1.0)
    }

    pub fn student_t(scale: f64, dof: f64) -> Result<Self> {
        Self::new(NoiseFamily::StudentT, scale, dof)
    }

    pub fn symmetric_pareto(scale: f64, alpha: f64) -> Result<Self> {
        Self::new(NoiseFamily::SymmetricPareto, scale, alpha)
    }

    pub fn cauchy(scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::Cauchy, scale, 1.0)
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn tail_param(&self) -> f64 {
        self.tail_param
    }

    /// `sup { m : E|ξ|^m < ∞ }`. The supremum itself is never attained
    /// except for the Gaussian (`+∞`).
    pub fn declared_m(&self) -> f64 {
        self.declared_m
    }

    pub fn has_moment(&self, p: f64) -> bool {
        p < self.declared_m
    }

    /// Reject laws without a finite moment of order above one.
    pub fn require_moment_above_one(&self) -> Result<()> {
        if self.declared_m <= 1.0 {
            Err(Error::Domain(alloc::format!(
                "{:?} noise has declared_m = {} <= 1; moment-based code paths need m > 1",
                self.family,
                self.declared_m
            )))
        } else {
            Ok(())
        }
    }

    /// Closed-form `E|ξ|^p`, `None` when the moment is infinite.
    pub fn absolute_moment(&self, p: f64) -> Option<f64> {
        if !self.has_moment(p) {
            return None;
        }
        let c = self.scale.powf(p);
        let unit = match self.family {
            NoiseFamily::Gaussian => 2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / PI.sqrt(),
            NoiseFamily::StudentT => {
                let nu = self.tail_param;
                nu.powf(p / 2.0) * gamma((p + 1.0) / 2.0) * gamma((nu - p) / 2.0) / (PI.sqrt() * gamma(nu / 2.0))
            }
            NoiseFamily::SymmetricPareto => {
                let a = self.tail_param;
                gamma(p + 1.0) * gamma(a - p) / gamma(a)
            }
            NoiseFamily::Cauchy => 1.0 / (PI * p / 2.0).cos(),
        };
        Some(c * unit)
    }

    fn magnitude(&self, g: &mut StreamRng) -> f64 {
        let unit = match self.family {
            NoiseFamily::Gaussian => half_normal(g),
            NoiseFamily::StudentT => {
                let nu = self.tail_param;
                let chi2 = 2.0 * gamma_variate(g, nu / 2.0);
                half_normal(g) / (chi2 / nu).sqrt()
            }
            NoiseFamily::SymmetricPareto => g.open01().powf(-1.0 / self.tail_param) - 1.0,
            NoiseFamily::Cauchy => (0.5 * PI * g.open01()).tan(),
        };
        self.scale * unit
    }
}

fn half_normal(g: &mut StreamRng) -> f64 {
    let u1 = g.open01();
    let u2 = g.unit();
    ((-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()).abs()
}

fn standard_normal(g: &mut StreamRng) -> f64 {
    let u1 = g.open01();
    let u2 = g.unit();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Marsaglia–Tsang gamma(shape, 1), with the `U^{1/k}` boost for shape < 1.
fn gamma_variate(g: &mut StreamRng, shape: f64) -> f64 {
    if shape < 1.0 {
        let boost = g.open01().powf(1.0 / shape);
        return gamma_variate(g, shape + 1.0) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(g);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = g.open01();
        if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
            return d * v;
        }
    }
}

fn draw(spec: &NoiseSpec, stream: RngStream, n: usize, mirror: bool) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Parameter("sample size must be >= 1".into()));
    }
    let mut g = stream.generator();
    Ok((0..n)
        .map(|_| {
            let positive = g.coin() != mirror;
            let mag = spec.magnitude(&mut g);
            if positive {
                mag
            } else {
                -mag
            }
        })
        .collect())
}

/// `n` i.i.d. draws from the noise law on the given stream.
pub fn sample_noise(spec: &NoiseSpec, stream: RngStream, n: usize) -> Result<Vec<f64>> {
    draw(spec, stream, n, false)
}

/// The same draws as [`sample_noise`] with every sign driver inverted.
pub fn sample_noise_mirrored(spec: &NoiseSpec, stream: RngStream, n: usize) -> Result<Vec<f64>> {
    draw(spec, stream, n, true)
}

/// Monte-Carlo estimate of `E|ξ|^p` next to the closed form, if finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentEstimate {
    pub order: f64,
    pub monte_carlo: f64,
    pub analytic: Option<f64>,
}

/// Records `v_m` for a noise law by `samples`-draw Monte Carlo (10⁶ is the
/// intended default) alongside the analytic value where available.
pub fn moment_bound(spec: &NoiseSpec, order: f64, stream: RngStream, samples: usize) -> Result<MomentEstimate> {
    if !(order > 0.0) {
        return Err(Error::Parameter(alloc::format!("moment order must be > 0, got {order}")));
    }
    let draws = sample_noise(spec, stream, samples)?;
    let monte_carlo = draws.iter().map(|x| x.abs().powf(order)).sum::<f64>() / samples as f64;
    Ok(MomentEstimate { order, monte_carlo, analytic: spec.absolute_moment(order) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovariateFamily {
    UniformCube,
    Gaussian,
}

/// Design distribution of `X`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CovariateSpec {
    pub dim: usize,
    pub family: CovariateFamily,
    #[serde(default)]
    pub support_note: String,
}

impl CovariateSpec {
    pub fn uniform_cube(dim: usize) -> Self {
        Self { dim, family: CovariateFamily::UniformCube, support_note: "[0,1]^d".into() }
    }

    pub fn gaussian(dim: usize) -> Self {
        Self { dim, family: CovariateFamily::Gaussian, support_note: "R^d, identity covariance".into() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Parameter("covariate dimension must be >= 1".into()));
        }
        Ok(())
    }
}

/// `n × d` matrix of i.i.d. covariate rows.
pub fn sample_covariates(spec: &CovariateSpec, stream: RngStream, n: usize) -> Result<Matrix> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Parameter("sample size must be >= 1".into()));
    }
    let mut g = stream.generator();
    let data: Vec<f64> = match spec.family {
        CovariateFamily::UniformCube => (0..n * spec.dim).map(|_| g.unit()).collect(),
        CovariateFamily::Gaussian => (0..n * spec.dim).map(|_| standard_normal(&mut g)).collect(),
    };
    Matrix::from_vec(n, spec.dim, data)
}
