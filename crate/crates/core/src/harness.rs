//! Experiment plans, replication runs, log-log slope fits and deviation
//! quantiles.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::erm::{fit, l2_error, FittedModel, ReluOptions, SolverOptions};
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::math::{median, quantile_sorted};
use crate::noise::{sample_covariates, sample_noise, CovariateFamily, CovariateSpec, NoiseSpec};
use crate::rng::RngStream;
use crate::sieves::{tuned_cells_per_axis, SieveSpec, TargetFunction, TrainSchedule};

const TAG_COVARIATES: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_INIT: u64 = 3;
const TAG_SHUFFLE: u64 = 4;
const TAG_EVAL: u64 = 5;

/// How the sieve grows with `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SievePolicy {
    /// `K_n = ⌈n^{1/(2α+d)}⌉` cells per axis unless `cells_per_axis` pins it.
    Partition {
        holder_alpha: f64,
        #[serde(default)]
        cells_per_axis: Option<usize>,
    },
    Relu {
        depth: usize,
        width: usize,
        epochs: usize,
        batch_size: usize,
        step_size: f64,
    },
}

/// Huber scale as a function of the effective sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TauSchedule {
    Fixed {
        tau: f64,
    },
    /// `τ_n = c · (v · ñ)^{1/m}`.
    Adaptive {
        c: f64,
        v: f64,
        m: f64,
    },
}

impl TauSchedule {
    pub fn tau(&self, n_tilde: f64) -> f64 {
        match *self {
            Self::Fixed { tau } => tau,
            Self::Adaptive { c, v, m } => c * (v * n_tilde).powf(1.0 / m),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Fixed { tau } => tau > 0.0 && tau.is_finite(),
            Self::Adaptive { c, v, m } => c > 0.0 && v > 0.0 && m > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(alloc::format!("invalid τ schedule {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossPolicy {
    Squared,
    Huber { schedule: TauSchedule },
    Quantile { level: f64 },
    Logistic,
    Poisson,
}

fn default_n_eval() -> usize {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub id: String,
    pub noise: NoiseSpec,
    pub covariates: CovariateSpec,
    pub target: TargetFunction,
    pub sieve: SievePolicy,
    pub loss: LossPolicy,
    /// Uniform bound `M` of the sieve.
    pub truncation: f64,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    #[serde(default = "default_n_eval")]
    pub n_eval: usize,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.sample_sizes.is_empty() || self.sample_sizes[0] == 0 {
            return Err(Error::Validation("sample sizes must be a nonempty list of positive counts".into()));
        }
        if self.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Validation("sample sizes must be strictly increasing".into()));
        }
        if self.replications == 0 {
            return Err(Error::Validation("replications must be >= 1".into()));
        }
        if !(self.truncation > 0.0) {
            return Err(Error::Validation("truncation must be > 0".into()));
        }
        if self.n_eval < 1000 {
            return Err(Error::Validation("n_eval must be >= 1000".into()));
        }
        self.covariates.validate()?;
        self.target.validate()?;
        match self.loss {
            LossPolicy::Squared | LossPolicy::Huber { .. } => {
                self.noise.require_moment_above_one().map_err(|e| Error::Validation(alloc::format!("{e}")))?
            }
            _ => {}
        }
        if let LossPolicy::Huber { schedule } = self.loss {
            schedule.validate()?;
        }
        if let LossPolicy::Quantile { level } = self.loss {
            LossSpec::quantile(level).map_err(|e| Error::Validation(alloc::format!("{e}")))?;
        }
        match self.sieve {
            SievePolicy::Partition { holder_alpha, cells_per_axis } => {
                if self.covariates.family != CovariateFamily::UniformCube {
                    return Err(Error::Validation("partition sieves need covariates on the unit cube".into()));
                }
                if !(holder_alpha > 0.0) || cells_per_axis == Some(0) {
                    return Err(Error::Validation("partition policy needs α > 0 and K >= 1".into()));
                }
            }
            SievePolicy::Relu { depth, width, batch_size, step_size, .. } => {
                if depth * width < 2 || batch_size == 0 || !(step_size > 0.0) {
                    return Err(Error::Validation("ReLU policy needs D·W >= 2, batch >= 1, step > 0".into()));
                }
            }
        }
        Ok(())
    }

    /// Sieve metadata at sample size `n`.
    pub fn sieve_at(&self, n: usize) -> Result<(SieveSpec, SolverOptions)> {
        match self.sieve {
            SievePolicy::Partition { holder_alpha, cells_per_axis } => {
                let d = self.covariates.dim;
                let k = cells_per_axis.unwrap_or_else(|| tuned_cells_per_axis(n, holder_alpha, d));
                let spec = SieveSpec::partition(d, k, holder_alpha, self.truncation)?;
                Ok((spec, SolverOptions { cells_per_axis: Some(k), relu: None }))
            }
            SievePolicy::Relu { depth, width, .. } => {
                Ok((SieveSpec::relu(depth, width, self.truncation, n)?, SolverOptions::default()))
            }
        }
    }

    /// Stream for replication `rep` at the `n_index`-th sample size.
    pub fn stream(&self, n_index: usize, rep: usize) -> RngStream {
        RngStream::new(self.seed, ((n_index as u64) << 32) | rep as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub plan_id: String,
    pub n: usize,
    pub rep: usize,
    pub l2_error: f64,
    pub empirical_risk: f64,
    pub tau: Option<f64>,
    pub wall_time_secs: Option<f64>,
    pub seed: u64,
    pub stream_id: u64,
}

/// One replication: sample, tune, fit, measure.
pub fn run_replication(plan: &ExperimentPlan, n_index: usize, rep: usize) -> Result<RunRecord> {
    replicate(plan, n_index, rep).map(|(record, _)| record)
}

/// [`run_replication`] that also returns the fitted model.
pub fn replicate(plan: &ExperimentPlan, n_index: usize, rep: usize) -> Result<(RunRecord, FittedModel)> {
    let n = *plan
        .sample_sizes
        .get(n_index)
        .ok_or_else(|| Error::Parameter(alloc::format!("sample-size index {n_index} out of range")))?;
    let base = plan.stream(n_index, rep);
    let xs = sample_covariates(&plan.covariates, base.derive(TAG_COVARIATES), n)?;
    let noise = sample_noise(&plan.noise, base.derive(TAG_NOISE), n)?;
    let ys: Vec<f64> = xs.iter_rows().zip(&noise).map(|(x, e)| plan.target.eval(x) + e).collect();

    let (sieve, mut opts) = plan.sieve_at(n)?;
    let n_tilde = sieve.effective_sample_size(n);
    let (loss, tau) = match plan.loss {
        LossPolicy::Squared => (LossSpec::squared(), None),
        LossPolicy::Huber { schedule } => {
            let tau = schedule.tau(n_tilde);
            (LossSpec::huber(tau)?, Some(tau))
        }
        LossPolicy::Quantile { level } => (LossSpec::quantile(level)?, None),
        LossPolicy::Logistic => (LossSpec::logistic(), None),
        LossPolicy::Poisson => (LossSpec::poisson(), None),
    };
    if let SievePolicy::Relu { depth, width, epochs, batch_size, step_size } = plan.sieve {
        opts.relu = Some(ReluOptions {
            depth,
            width,
            init: base.derive(TAG_INIT),
            schedule: TrainSchedule { epochs, batch_size, step_size, stream: base.derive(TAG_SHUFFLE) },
        });
    }
    let fitted = fit(&sieve, &xs, &ys, &loss, &opts)?;
    let eval_stream = RngStream::new(plan.seed, 0).derive(TAG_EVAL);
    let err = l2_error(&fitted.model, &plan.target, &plan.covariates, plan.n_eval, eval_stream)?;
    let record = RunRecord {
        plan_id: plan.id.clone(),
        n,
        rep,
        l2_error: err,
        empirical_risk: fitted.empirical_risk,
        tau,
        wall_time_secs: fitted.wall_time_secs,
        seed: base.seed,
        stream_id: base.stream_id,
    };
    Ok((record, fitted.model))
}

/// All records in `(n, rep)` order.
pub fn run_plan(plan: &ExperimentPlan) -> Result<Vec<RunRecord>> {
    plan.validate()?;
    let mut out = Vec::with_capacity(plan.sample_sizes.len() * plan.replications);
    for n_index in 0..plan.sample_sizes.len() {
        for rep in 0..plan.replications {
            out.push(run_replication(plan, n_index, rep)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Median,
    Mean,
}

impl core::str::FromStr for Aggregation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "median" => Ok(Self::Median),
            "mean" => Ok(Self::Mean),
            other => Err(Error::Parameter(alloc::format!("unknown aggregation '{other}', expected median or mean"))),
        }
    }
}

pub const MIN_SLOPE_POINTS: usize = 4;
pub const MIN_SLOPE_REPS: usize = 30;
pub const MIN_TAIL_REPS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr_slope: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub aggregation: Aggregation,
    /// `(n, aggregated error)` per sample size.
    pub points: Vec<(usize, f64)>,
}

/// Aggregated error per distinct `n`, in increasing `n`.
pub fn aggregate(records: &[RunRecord], aggregation: Aggregation) -> Vec<(usize, f64, usize)> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let errs: Vec<f64> = records.iter().filter(|r| r.n == n).map(|r| r.l2_error).collect();
            let v = match aggregation {
                Aggregation::Median => median(&errs),
                Aggregation::Mean => errs.iter().sum::<f64>() / errs.len() as f64,
            };
            (n, v, errs.len())
        })
        .collect()
}

/// OLS of `log(aggregated error)` on `log n`.
pub fn fit_rate(records: &[RunRecord], aggregation: Aggregation) -> Result<RateFit> {
    let groups = aggregate(records, aggregation);
    if groups.len() < MIN_SLOPE_POINTS {
        return Err(Error::Validation(alloc::format!(
            "slope fit needs >= {MIN_SLOPE_POINTS} sample sizes, got {}",
            groups.len()
        )));
    }
    if let Some(&(n, _, c)) = groups.iter().find(|g| g.2 < MIN_SLOPE_REPS) {
        return Err(Error::Validation(alloc::format!(
            "n = {n} has {c} replications; slope fits need >= {MIN_SLOPE_REPS}"
        )));
    }
    if let Some(&(n, v, _)) = groups.iter().find(|g| !(g.1 > 0.0)) {
        return Err(Error::Degenerate(alloc::format!("aggregated error at n = {n} is {v}; cannot take logs")));
    }
    let xs: Vec<f64> = groups.iter().map(|g| (g.0 as f64).ln()).collect();
    let ys: Vec<f64> = groups.iter().map(|g| g.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr_slope = (rss / (k - 2.0) / sxx).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        stderr_slope,
        n_min: groups[0].0,
        n_max: groups[groups.len() - 1].0,
        aggregation,
        points: groups.iter().map(|g| (g.0, g.1)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProfile {
    pub reps: usize,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub ratio: f64,
}

/// Deviation quantiles (linear interpolation) of a fixed-`n` error sample.
pub fn tail_profile(errors: &[f64]) -> Result<TailProfile> {
    if errors.len() < MIN_TAIL_REPS {
        return Err(Error::Validation(alloc::format!(
            "tail profile needs >= {MIN_TAIL_REPS} reps, got {}",
            errors.len()
        )));
    }
    let mut v = errors.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let p50 = quantile_sorted(&v, 0.5);
    let p99 = quantile_sorted(&v, 0.99);
    Ok(TailProfile { reps: v.len(), p50, p90: quantile_sorted(&v, 0.9), p99, ratio: p99 / p50 })
}

/// [`tail_profile`] over the records with sample size `n`.
pub fn tail_profile_at(records: &[RunRecord], n: usize) -> Result<TailProfile> {
    let errs: Vec<f64> = records.iter().filter(|r| r.n == n).map(|r| r.l2_error).collect();
    tail_profile(&errs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_noise, NoiseSpec};

    fn plan(noise: NoiseSpec, loss: LossPolicy, sizes: Vec<usize>, reps: usize) -> ExperimentPlan {
        ExperimentPlan {
            id: "t".into(),
            noise,
            covariates: CovariateSpec::uniform_cube(1),
            target: TargetFunction::sine(1.0, 1.0),
            sieve: SievePolicy::Partition { holder_alpha: 1.0, cells_per_axis: None },
            loss,
            truncation: 10.0,
            sample_sizes: sizes,
            replications: reps,
            seed: 9,
            n_eval: 2000,
        }
    }

    fn synthetic(errors: impl Fn(usize, usize) -> f64, ns: &[usize], reps: usize) -> Vec<RunRecord> {
        let mut out = Vec::new();
        for &n in ns {
            for rep in 0..reps {
                out.push(RunRecord {
                    plan_id: "s".into(),
                    n,
                    rep,
                    l2_error: errors(n, rep),
                    empirical_risk: 0.0,
                    tau: None,
                    wall_time_secs: None,
                    seed: 0,
                    stream_id: 0,
                });
            }
        }
        out
    }

    #[test]
    fn cardinality_and_determinism() {
        let p = plan(NoiseSpec::gaussian(1.0).unwrap(), LossPolicy::Squared, alloc::vec![64, 128], 3);
        let a = run_plan(&p).unwrap();
        assert_eq!(a.len(), 6);
        let b = run_plan(&p).unwrap();
        let bits = |r: &[RunRecord]| r.iter().map(|x| x.l2_error.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!((a[3].n, a[3].rep), (128, 0));
    }

    #[test]
    fn noiseless_plan_measures_approximation_error() {
        let p = plan(NoiseSpec::gaussian(0.0).unwrap(), LossPolicy::Squared, alloc::vec![64, 512, 4096], 2);
        let recs = run_plan(&p).unwrap();
        let errs: Vec<f64> = aggregate(&recs, Aggregation::Median).iter().map(|g| g.1).collect();
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
    }

    #[test]
    fn validation_errors() {
        let cauchy = NoiseSpec::cauchy(1.0).unwrap();
        let huber = LossPolicy::Huber { schedule: TauSchedule::Fixed { tau: 1.0 } };
        assert!(matches!(plan(cauchy, huber, alloc::vec![64], 1).validate(), Err(Error::Validation(_))));
        assert!(plan(cauchy, LossPolicy::Quantile { level: 0.5 }, alloc::vec![64], 1).validate().is_ok());
        let g = NoiseSpec::gaussian(1.0).unwrap();
        assert!(plan(g, LossPolicy::Squared, alloc::vec![128, 64], 1).validate().is_err());
        let mut p = plan(g, LossPolicy::Squared, alloc::vec![64], 1);
        p.covariates = CovariateSpec::gaussian(1);
        assert!(p.validate().is_err());
    }

    #[test]
    fn adaptive_tau_is_recorded() {
        let schedule = TauSchedule::Adaptive { c: 1.0, v: 1.0, m: 1.5 };
        let p =
            plan(NoiseSpec::symmetric_pareto(1.0, 1.5).unwrap(), LossPolicy::Huber { schedule }, alloc::vec![512], 1);
        let r = run_replication(&p, 0, 0).unwrap();
        // K = 8 cells: ñ = 64
        assert!((r.tau.unwrap() - 64f64.powf(1.0 / 1.5)).abs() < 1e-12);
    }

    #[test]
    fn exact_power_law_slope() {
        let ns = [512, 1024, 2048, 4096, 8192];
        let recs = synthetic(|n, _| (n as f64).powf(-1.0 / 3.0), &ns, 30);
        let f = fit_rate(&recs, Aggregation::Median).unwrap();
        assert!((f.slope + 1.0 / 3.0).abs() < 1e-12);
        let doubled = synthetic(|n, _| 2.0 * (n as f64).powf(-1.0 / 3.0), &ns, 30);
        let g = fit_rate(&doubled, Aggregation::Median).unwrap();
        assert!((g.slope - f.slope).abs() < 1e-12);
        assert!((g.intercept - f.intercept - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn perturbed_power_law_slope() {
        let ns = [256, 512, 1024, 2048, 4096, 8192];
        let noise = sample_noise(&NoiseSpec::gaussian(0.01).unwrap(), RngStream::new(5, 0), ns.len() * 30).unwrap();
        let recs = synthetic(
            |n, rep| {
                let i = ns.iter().position(|&m| m == n).unwrap();
                3.0 * (n as f64).powf(-0.5) * (1.0 + noise[i * 30 + rep])
            },
            &ns,
            30,
        );
        let f = fit_rate(&recs, Aggregation::Mean).unwrap();
        assert!((-0.52..=-0.48).contains(&f.slope), "slope {}", f.slope);
    }

    #[test]
    fn slope_fit_preconditions() {
        let few = synthetic(|n, _| 1.0 / n as f64, &[1, 2, 3], 30);
        assert!(matches!(fit_rate(&few, Aggregation::Median), Err(Error::Validation(_))));
        let thin = synthetic(|n, _| 1.0 / n as f64, &[1, 2, 3, 4], 29);
        assert!(matches!(fit_rate(&thin, Aggregation::Median), Err(Error::Validation(_))));
        let zero = synthetic(|n, _| if n == 3 { 0.0 } else { 1.0 }, &[1, 2, 3, 4], 30);
        assert!(matches!(fit_rate(&zero, Aggregation::Median), Err(Error::Degenerate(_))));
    }

    #[test]
    fn tail_profiles() {
        let flat = alloc::vec![0.7; 200];
        let t = tail_profile(&flat).unwrap();
        assert_eq!((t.p50, t.p90, t.p99, t.ratio), (0.7, 0.7, 0.7, 1.0));
        assert!(tail_profile(&flat[..199]).is_err());

        let z = sample_noise(&NoiseSpec::gaussian(1.0).unwrap(), RngStream::new(6, 0), 500).unwrap();
        let abs: Vec<f64> = z.iter().map(|v| v.abs()).collect();
        let r = tail_profile(&abs).unwrap().ratio;
        assert!((r / 3.82 - 1.0).abs() < 0.25, "ratio {r}");

        let mut heavy = 0;
        for trial in 0..20 {
            let mut g = RngStream::new(7, trial).generator();
            let e: Vec<f64> = (0..500).map(|_| g.open01().powf(-1.0 / 1.5)).collect();
            if tail_profile(&e).unwrap().ratio > 6.0 {
                heavy += 1;
            }
        }
        assert!(heavy >= 18, "{heavy}/20");
    }
}
