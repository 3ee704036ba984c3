use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::covering::{distance_matrix, Traversal};
use crate::error::{Error, Result};
use crate::math::{mean_stderr, Quadrature};
use crate::matrix::Matrix;
use crate::noise::{sample_covariates, CovariateFamily, CovariateSpec};
use crate::rng::RngStream;

pub const MAX_DICTIONARY: usize = 64;
const ENVELOPE_CHECKS: usize = 10_000;

/// Closed-form function of the first covariate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DictFunction {
    /// `scale · (x − knot)_+`.
    Ridge { scale: f64, knot: f64 },
    /// `slope · x + intercept`.
    Affine { slope: f64, intercept: f64 },
}

impl DictFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Self::Ridge { scale, knot } => scale * (x - knot).max(0.0),
            Self::Affine { slope, intercept } => slope * x + intercept,
        }
    }

    /// Mean under `Uniform[0,1]`.
    pub fn uniform_mean(&self) -> f64 {
        match *self {
            Self::Ridge { scale, knot } => {
                if knot >= 1.0 {
                    0.0
                } else if knot <= 0.0 {
                    scale * (0.5 - knot)
                } else {
                    scale * (1.0 - knot).powi(2) / 2.0
                }
            }
            Self::Affine { slope, intercept } => 0.5 * slope + intercept,
        }
    }

    fn kinks(&self) -> Vec<f64> {
        match *self {
            Self::Ridge { knot, .. } => alloc::vec![knot],
            Self::Affine { slope, intercept } if slope != 0.0 => alloc::vec![-intercept / slope],
            Self::Affine { .. } => Vec::new(),
        }
    }

    /// `‖f‖_{L^p(Uniform[0,1])}` by quadrature.
    pub fn uniform_lp_norm(&self, p: f64) -> Result<f64> {
        let q = Quadrature { rel_tol: 1e-10, ..Quadrature::default() };
        let v = q.integrate(|x| self.eval(x).abs().powf(p), 0.0, 1.0, &self.kinks())?;
        Ok(v.powf(1.0 / p))
    }
}

/// Finite test class with known population means and a dominating envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteDictionary {
    members: Vec<DictFunction>,
    population_means: Vec<f64>,
    envelope: DictFunction,
}

/// Interval used for envelope spot checks.
pub fn support(spec: &CovariateSpec) -> (f64, f64) {
    match spec.family {
        CovariateFamily::UniformCube => (0.0, 1.0),
        CovariateFamily::Gaussian => (-6.0, 6.0),
    }
}

impl FiniteDictionary {
    /// Checks `|F| ≤ 64` and `|f| ≤ F` on a 10⁴-point grid of `[lo, hi]`.
    pub fn new(
        members: Vec<DictFunction>,
        population_means: Vec<f64>,
        envelope: DictFunction,
        domain: (f64, f64),
    ) -> Result<Self> {
        if members.is_empty() || members.len() > MAX_DICTIONARY {
            return Err(Error::Parameter(alloc::format!(
                "dictionary size {} outside 1..={MAX_DICTIONARY}",
                members.len()
            )));
        }
        if population_means.len() != members.len() {
            return Err(Error::Shape { expected: members.len(), found: population_means.len() });
        }
        let (lo, hi) = domain;
        for i in 0..ENVELOPE_CHECKS {
            let x = lo + (hi - lo) * i as f64 / (ENVELOPE_CHECKS - 1) as f64;
            let cap = envelope.eval(x);
            if let Some(j) = members.iter().position(|f| f.eval(x).abs() > cap + 1e-12 * (1.0 + cap.abs())) {
                return Err(Error::Validation(alloc::format!("envelope fails to dominate member {j} at x = {x}")));
            }
        }
        Ok(Self { members, population_means, envelope })
    }

    /// Means computed in closed form under `Uniform[0,1]`.
    pub fn uniform(members: Vec<DictFunction>, envelope: DictFunction) -> Result<Self> {
        let means = members.iter().map(DictFunction::uniform_mean).collect();
        Self::new(members, means, envelope, (0.0, 1.0))
    }

    pub fn members(&self) -> &[DictFunction] {
        &self.members
    }

    pub fn population_means(&self) -> &[f64] {
        &self.population_means
    }

    pub fn envelope(&self) -> DictFunction {
        self.envelope
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `|F| × n` matrix of member values at the first coordinate of `xs`.
    pub fn evaluate(&self, xs: &Matrix) -> Matrix {
        let n = xs.rows();
        let mut data = Vec::with_capacity(self.members.len() * n);
        for f in &self.members {
            data.extend(xs.iter_rows().map(|x| f.eval(x[0])));
        }
        Matrix::from_vec(self.members.len(), n, data).expect("shape by construction")
    }
}

fn check_sampling(covariates: &CovariateSpec, n: usize) -> Result<()> {
    covariates.validate()?;
    if n == 0 {
        return Err(Error::Parameter("n must be >= 1".into()));
    }
    Ok(())
}

/// Mean and standard error of `log N(h, F, L^{1+κ}(P_n))` (greedy count) for
/// each `h`, with the same `reps` samples shared across the grid.
pub fn expected_entropy_profile(
    dictionary: &FiniteDictionary,
    covariates: &CovariateSpec,
    n: usize,
    hs: &[f64],
    kappa: f64,
    reps: usize,
    stream: RngStream,
) -> Result<Vec<(f64, f64)>> {
    check_sampling(covariates, n)?;
    if reps < 30 {
        return Err(Error::Parameter(alloc::format!("entropy estimate needs reps >= 30, got {reps}")));
    }
    if hs.iter().any(|h| !(*h > 0.0)) {
        return Err(Error::Parameter("radii must be > 0".into()));
    }
    let mut logs: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(reps); hs.len()];
    for rep in 0..reps as u64 {
        let xs = sample_covariates(covariates, RngStream::new(stream.seed, stream.stream_id.wrapping_add(rep)), n)?;
        let values = dictionary.evaluate(&xs);
        let t = Traversal::from_distances(&distance_matrix(&values, kappa));
        for (h, out) in hs.iter().zip(logs.iter_mut()) {
            out.push((t.count(*h) as f64).ln());
        }
    }
    Ok(logs.iter().map(|v| mean_stderr(v)).collect())
}

pub fn expected_entropy_estimate(
    dictionary: &FiniteDictionary,
    covariates: &CovariateSpec,
    n: usize,
    h: f64,
    kappa: f64,
    reps: usize,
    stream: RngStream,
) -> Result<(f64, f64)> {
    Ok(expected_entropy_profile(dictionary, covariates, n, &[h], kappa, reps, stream)?[0])
}

/// Monte-Carlo `E max_j |P_n f_j − P f_j|` with its standard error.
pub fn mc_sup_ep(
    dictionary: &FiniteDictionary,
    covariates: &CovariateSpec,
    n: usize,
    reps: usize,
    stream: RngStream,
) -> Result<(f64, f64)> {
    check_sampling(covariates, n)?;
    if reps < 2 {
        return Err(Error::Parameter("need at least 2 replications".into()));
    }
    let mut sups = Vec::with_capacity(reps);
    for rep in 0..reps as u64 {
        let xs = sample_covariates(covariates, RngStream::new(stream.seed, stream.stream_id.wrapping_add(rep)), n)?;
        let values = dictionary.evaluate(&xs);
        let sup = (0..values.rows())
            .map(|j| {
                let row = values.row(j);
                (row.iter().sum::<f64>() / n as f64 - dictionary.population_means[j]).abs()
            })
            .fold(0.0, f64::max);
        sups.push(sup);
    }
    Ok(mean_stderr(&sups))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unif() -> CovariateSpec {
        CovariateSpec::uniform_cube(1)
    }

    fn affine(slope: f64, intercept: f64) -> DictFunction {
        DictFunction::Affine { slope, intercept }
    }

    #[test]
    fn construction_checks() {
        let ridge = DictFunction::Ridge { scale: 2.0, knot: 0.25 };
        assert!(FiniteDictionary::uniform(alloc::vec![ridge], affine(2.0, 0.0)).is_ok());
        assert!(matches!(FiniteDictionary::uniform(alloc::vec![ridge], affine(1.0, 0.0)), Err(Error::Validation(_))));
        assert!(FiniteDictionary::uniform(alloc::vec![ridge; 65], affine(2.0, 0.0)).is_err());
        assert!((ridge.uniform_mean() - 2.0 * 0.5625 / 2.0).abs() < 1e-15);
        let p = 1.5;
        let exact = 2.0 * 0.75f64.powf((p + 1.0) / p) / (p + 1.0).powf(1.0 / p);
        assert!((ridge.uniform_lp_norm(p).unwrap() - exact).abs() < 1e-9);
    }

    #[test]
    fn degenerate_dictionaries_have_zero_deviation() {
        let zero = FiniteDictionary::uniform(alloc::vec![affine(0.0, 0.0)], affine(0.0, 0.0)).unwrap();
        assert_eq!(mc_sup_ep(&zero, &unif(), 50, 20, RngStream::new(1, 0)).unwrap(), (0.0, 0.0));
        let one = FiniteDictionary::uniform(alloc::vec![affine(0.0, 1.0)], affine(0.0, 1.0)).unwrap();
        let (m, s) = mc_sup_ep(&one, &unif(), 50, 20, RngStream::new(1, 0)).unwrap();
        assert!(m.abs() < 1e-15 && s < 1e-15);
    }

    #[test]
    fn centered_linear_half_normal_oracle() {
        let d = FiniteDictionary::uniform(alloc::vec![affine(1.0, -0.5)], affine(0.0, 0.5)).unwrap();
        let (m, s) = mc_sup_ep(&d, &unif(), 100, 4000, RngStream::new(2, 0)).unwrap();
        let exact = (1.0f64 / 12.0 / 100.0).sqrt() * (2.0 / core::f64::consts::PI).sqrt();
        assert!((m - exact).abs() < 3.0 * s, "{m} ± {s} vs {exact}");
        assert!((exact - 0.02303).abs() < 1e-5);
    }

    #[test]
    fn entropy_estimate_trivial_cases() {
        let single = FiniteDictionary::uniform(alloc::vec![affine(1.0, 0.0)], affine(1.0, 0.0)).unwrap();
        assert_eq!(
            expected_entropy_estimate(&single, &unif(), 20, 0.01, 1.0, 30, RngStream::new(3, 0)).unwrap(),
            (0.0, 0.0)
        );
        let members: Vec<DictFunction> =
            (0..6).map(|i| DictFunction::Ridge { scale: 1.0, knot: 0.15 * i as f64 }).collect();
        let d = FiniteDictionary::uniform(members, affine(1.0, 0.0)).unwrap();
        // sup-norm diameter is below 1
        assert_eq!(expected_entropy_estimate(&d, &unif(), 20, 1.0, 0.5, 30, RngStream::new(3, 0)).unwrap(), (0.0, 0.0));
        assert!(expected_entropy_estimate(&d, &unif(), 20, 0.1, 0.5, 29, RngStream::new(3, 0)).is_err());
    }

    #[test]
    fn entropy_profile_nonincreasing() {
        let members: Vec<DictFunction> =
            (0..12).map(|i| DictFunction::Ridge { scale: 0.5 + 0.1 * i as f64, knot: 0.07 * i as f64 }).collect();
        let d = FiniteDictionary::uniform(members, affine(1.7, 0.0)).unwrap();
        let hs: Vec<f64> = (1..=12).map(|i| 0.02 * i as f64).collect();
        let prof = expected_entropy_profile(&d, &unif(), 64, &hs, 0.5, 40, RngStream::new(4, 0)).unwrap();
        for w in prof.windows(2) {
            assert!(w[1].0 <= w[0].0 + 2.0 * (w[0].1 + w[1].1));
        }
    }
}
