//! Empirical risk minimizers: exact cellwise solutions on partition sieves
//! and SGD-trained ReLU networks.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::matrix::Matrix;
use crate::noise::{sample_covariates, CovariateSpec};
use crate::rng::RngStream;
use crate::sieves::{
    sgd_train, truncate, Model, PartitionSieve, ReluNet, SieveKind, SieveSpec, TargetFunction, TrainSchedule,
};

/// Default stream for L² evaluation draws.
pub const EVAL_STREAM: RngStream = RngStream::new(0x00e7_a15e_ed00_0001, 0);

const BISECTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum FittedModel {
    Partition(PartitionSieve),
    Relu(ReluNet),
}

impl Model for FittedModel {
    fn input_dim(&self) -> usize {
        match self {
            Self::Partition(p) => p.input_dim(),
            Self::Relu(r) => r.input_dim(),
        }
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        match self {
            Self::Partition(p) => p.predict_row(x),
            Self::Relu(r) => r.predict_row(x),
        }
    }

    fn evaluate(&self, xs: &Matrix) -> Result<Vec<f64>> {
        match self {
            Self::Partition(p) => p.evaluate(xs),
            Self::Relu(r) => r.evaluate(xs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellDiagnostic {
    pub count: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FittedModel,
    pub empirical_risk: f64,
    /// One entry per cell for partition fits; empty for networks.
    pub cells: Vec<CellDiagnostic>,
    pub wall_time_secs: Option<f64>,
}

/// ReLU architecture and training schedule for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReluOptions {
    pub depth: usize,
    pub width: usize,
    pub init: RngStream,
    pub schedule: TrainSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    /// Cells per axis; inferred from `D_F = K^d` when absent.
    #[serde(default)]
    pub cells_per_axis: Option<usize>,
    #[serde(default)]
    pub relu: Option<ReluOptions>,
}

struct Timer {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Timer {
    fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    fn elapsed(&self) -> Option<f64> {
        #[cfg(feature = "std")]
        {
            Some(self.start.elapsed().as_secs_f64())
        }
        #[cfg(not(feature = "std"))]
        {
            None
        }
    }
}

fn check_data(xs: &Matrix, ys: &[f64]) -> Result<()> {
    if ys.is_empty() {
        return Err(Error::Data("no observations".into()));
    }
    if xs.rows() != ys.len() {
        return Err(Error::Shape { expected: xs.rows(), found: ys.len() });
    }
    if let Some(i) = ys.iter().position(|y| !y.is_finite()) {
        return Err(Error::Data(alloc::format!("response {i} is not finite ({})", ys[i])));
    }
    Ok(())
}

/// Root of `c ↦ Σ ℓ′_τ(y_i − c)` on `[min y − τ, max y + τ]`.
pub fn huber_location(ys: &[f64], tau: f64) -> (f64, usize) {
    let lo_y = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_y = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut lo, mut hi) = (lo_y - tau, hi_y + tau);
    let score = |c: f64| ys.iter().map(|y| (y - c).clamp(-tau, tau)).sum::<f64>();
    let mut iterations = 0;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    (0.5 * (lo + hi), iterations)
}

/// `⌈k τ⌉`-th order statistic (1-based) of `ys`.
pub fn lower_quantile(ys: &[f64], tau: f64) -> f64 {
    let mut v = ys.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = v.len();
    let rank = ((k as f64 * tau).ceil() as usize).clamp(1, k);
    v[rank - 1]
}

fn cell_value(ys: &[f64], loss: &LossSpec) -> (f64, usize) {
    let mean = || ys.iter().sum::<f64>() / ys.len() as f64;
    match loss.kind {
        LossKind::Squared => (mean(), 0),
        LossKind::Huber => huber_location(ys, loss.tau),
        LossKind::Quantile => (lower_quantile(ys, loss.tau), 0),
        LossKind::Logistic => {
            let p = mean();
            ((p / (1.0 - p)).ln(), 0)
        }
        LossKind::Poisson => (mean().ln(), 0),
    }
}

/// Exact ERM over piecewise-constant functions on `sieve`'s cells, each value
/// truncated to `[−bound, bound]`.
pub fn fit_cellwise(sieve: &PartitionSieve, xs: &Matrix, ys: &[f64], loss: &LossSpec, bound: f64) -> Result<FitResult> {
    let timer = Timer::start();
    loss.validate()?;
    check_data(xs, ys)?;
    if !(bound > 0.0) {
        return Err(Error::Parameter(alloc::format!("truncation bound must be > 0, got {bound}")));
    }
    let cells = sieve.assign(xs)?;
    let mut grouped: Vec<Vec<f64>> = alloc::vec![Vec::new(); sieve.n_cells()];
    for (c, &y) in cells.iter().zip(ys) {
        grouped[*c].push(y);
    }
    let mut values = Vec::with_capacity(grouped.len());
    let mut diagnostics = Vec::with_capacity(grouped.len());
    for group in &grouped {
        let (v, iterations) = if group.is_empty() { (0.0, 0) } else { cell_value(group, loss) };
        values.push(truncate(v, bound));
        diagnostics.push(CellDiagnostic { count: group.len(), iterations });
    }
    let fitted = PartitionSieve::with_values(sieve.dim(), sieve.cells_per_axis(), values)?;
    let risk = cells.iter().zip(ys).map(|(c, &y)| loss.value(fitted.values()[*c], y)).sum::<f64>() / ys.len() as f64;
    Ok(FitResult {
        model: FittedModel::Partition(fitted),
        empirical_risk: risk,
        cells: diagnostics,
        wall_time_secs: timer.elapsed(),
    })
}

fn infer_cells_per_axis(effective_dim: f64, dim: usize) -> Result<usize> {
    let k = effective_dim.powf(1.0 / dim as f64).round();
    if k >= 1.0 && (k.powi(dim as i32) - effective_dim).abs() < 1e-9 * effective_dim {
        Ok(k as usize)
    } else {
        Err(Error::Config(alloc::format!("D_F = {effective_dim} is not a perfect {dim}-th power; set cells_per_axis")))
    }
}

/// Dispatch on sieve kind: partition → [`fit_cellwise`], ReLU → SGD.
pub fn fit(sieve: &SieveSpec, xs: &Matrix, ys: &[f64], loss: &LossSpec, opts: &SolverOptions) -> Result<FitResult> {
    match sieve.kind {
        SieveKind::PartitionSieve => {
            let k = match opts.cells_per_axis {
                Some(k) => k,
                None => infer_cells_per_axis(sieve.effective_dim, xs.cols())?,
            };
            let partition = PartitionSieve::new(xs.cols(), k)?;
            fit_cellwise(&partition, xs, ys, loss, sieve.uniform_bound)
        }
        SieveKind::ReluNet => {
            let timer = Timer::start();
            check_data(xs, ys)?;
            let relu = opts
                .relu
                .ok_or_else(|| Error::Config("ReLU sieve requires architecture and schedule options".into()))?;
            let net = ReluNet::random(xs.cols(), relu.depth, relu.width, sieve.uniform_bound, relu.init)?;
            let outcome = sgd_train(net, xs, ys, loss, &relu.schedule)?;
            Ok(FitResult {
                model: FittedModel::Relu(outcome.net),
                empirical_risk: outcome.best_risk,
                cells: Vec::new(),
                wall_time_secs: timer.elapsed(),
            })
        }
        SieveKind::FiniteDictionary => {
            Err(Error::Config("finite dictionaries are bound test beds, not estimators".into()))
        }
    }
}

/// Monte-Carlo `‖f̂ − f₀‖_{L²(P)}` over `n_eval ≥ 1000` fresh covariate draws.
pub fn l2_error(
    model: &dyn Model,
    f0: &TargetFunction,
    covariates: &CovariateSpec,
    n_eval: usize,
    stream: RngStream,
) -> Result<f64> {
    if n_eval < 1000 {
        return Err(Error::Parameter(alloc::format!("n_eval must be >= 1000, got {n_eval}")));
    }
    let xs = sample_covariates(covariates, stream, n_eval)?;
    let preds = model.evaluate(&xs)?;
    let sq: f64 = xs.iter_rows().zip(&preds).map(|(x, p)| (p - f0.eval(x)).powi(2)).sum();
    Ok((sq / n_eval as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_noise, NoiseSpec};
    use proptest::prelude::*;

    fn one_cell(ys: &[f64], loss: &LossSpec) -> f64 {
        let xs = Matrix::column(&alloc::vec![0.5; ys.len()]);
        let fit = fit_cellwise(&PartitionSieve::new(1, 1).unwrap(), &xs, ys, loss, 1e9).unwrap();
        match fit.model {
            FittedModel::Partition(p) => p.values()[0],
            FittedModel::Relu(_) => unreachable!(),
        }
    }

    fn cell_risk(ys: &[f64], c: f64, loss: &LossSpec) -> f64 {
        ys.iter().map(|&y| loss.value(c, y)).sum()
    }

    #[test]
    fn hand_examples() {
        assert_eq!(one_cell(&[0.0, 2.0], &LossSpec::squared()), 1.0);
        assert!((one_cell(&[0.0, 2.0], &LossSpec::huber(10.0).unwrap()) - 1.0).abs() < 1e-9);
        assert_eq!(one_cell(&[1.0, 2.0, 3.0], &LossSpec::quantile(0.5).unwrap()), 2.0);
        assert_eq!(one_cell(&[4.0, 1.0, 3.0, 2.0], &LossSpec::quantile(0.5).unwrap()), 2.0);
    }

    #[test]
    fn huber_matches_grid_search() {
        let ys = [0.0, 0.0, 100.0];
        let loss = LossSpec::huber(1.0).unwrap();
        let c = one_cell(&ys, &loss);
        let mut best = (f64::INFINITY, 0.0);
        let mut g = -1.0;
        while g <= 101.0 {
            let r = cell_risk(&ys, g, &loss);
            if r < best.0 {
                best = (r, g);
            }
            g += 1e-4;
        }
        assert!((c - best.1).abs() <= 1e-4, "bisection {c}, grid {}", best.1);
        assert!((c - 0.5).abs() < 1e-9);
    }

    #[test]
    fn glm_cells_and_truncation() {
        let p = one_cell(&[0.0, 1.0, 1.0, 1.0], &LossSpec::logistic());
        assert!((p - 3f64.ln()).abs() < 1e-12);
        let l = one_cell(&[2.0, 4.0], &LossSpec::poisson());
        assert!((l - 3f64.ln()).abs() < 1e-12);
        let xs = Matrix::column(&[0.5, 0.5]);
        let fit =
            fit_cellwise(&PartitionSieve::new(1, 1).unwrap(), &xs, &[10.0, 12.0], &LossSpec::squared(), 3.0).unwrap();
        if let FittedModel::Partition(p) = &fit.model {
            assert_eq!(p.values()[0], 3.0);
        }
    }

    #[test]
    fn empty_cells_and_bad_data() {
        let xs = Matrix::column(&[0.1, 0.2]);
        let fit =
            fit_cellwise(&PartitionSieve::new(1, 4).unwrap(), &xs, &[1.0, 3.0], &LossSpec::squared(), 10.0).unwrap();
        if let FittedModel::Partition(p) = &fit.model {
            assert_eq!(p.values(), &[2.0, 0.0, 0.0, 0.0]);
        }
        assert_eq!(fit.cells[0].count, 2);
        assert_eq!(fit.cells[1].count, 0);
        let err = fit_cellwise(&PartitionSieve::new(1, 4).unwrap(), &xs, &[1.0, f64::NAN], &LossSpec::squared(), 10.0);
        assert!(matches!(err, Err(Error::Data(_))));
        let outside = Matrix::column(&[1.5]);
        assert!(fit_cellwise(&PartitionSieve::new(1, 4).unwrap(), &outside, &[1.0], &LossSpec::squared(), 1.0).is_err());
    }

    #[test]
    fn reported_risk_matches_recomputation() {
        let xs = sample_covariates(&CovariateSpec::uniform_cube(1), RngStream::new(1, 0), 500).unwrap();
        let ys = sample_noise(&NoiseSpec::student_t(1.0, 3.0).unwrap(), RngStream::new(1, 1), 500).unwrap();
        for loss in [LossSpec::squared(), LossSpec::huber(0.7).unwrap(), LossSpec::quantile(0.3).unwrap()] {
            let fit = fit_cellwise(&PartitionSieve::new(1, 7).unwrap(), &xs, &ys, &loss, 5.0).unwrap();
            let preds = fit.model.evaluate(&xs).unwrap();
            let risk = preds.iter().zip(&ys).map(|(p, &y)| loss.value(*p, y)).sum::<f64>() / ys.len() as f64;
            assert!((fit.empirical_risk - risk).abs() <= 1e-10 * risk.abs());
        }
    }

    #[test]
    fn single_cell_dispatch_is_global_mean() {
        let xs = sample_covariates(&CovariateSpec::uniform_cube(2), RngStream::new(2, 0), 50).unwrap();
        let ys: Vec<f64> = (0..50).map(|i| i as f64 / 10.0).collect();
        let sieve = SieveSpec::partition(2, 1, 1.0, 100.0).unwrap();
        let fit = fit(&sieve, &xs, &ys, &LossSpec::squared(), &SolverOptions::default()).unwrap();
        let mean = ys.iter().sum::<f64>() / 50.0;
        assert!((fit.model.predict_row(&[0.3, 0.9]) - mean).abs() < 1e-12);
    }

    #[test]
    fn relu_dispatch_fits_constant() {
        let xs = sample_covariates(&CovariateSpec::uniform_cube(1), RngStream::new(3, 0), 200).unwrap();
        let ys = alloc::vec![0.7; 200];
        let sieve = SieveSpec::relu(2, 8, 2.0, 200).unwrap();
        let opts = SolverOptions {
            cells_per_axis: None,
            relu: Some(ReluOptions {
                depth: 2,
                width: 8,
                init: RngStream::new(3, 1),
                schedule: TrainSchedule { epochs: 300, batch_size: 10, step_size: 0.1, stream: RngStream::new(3, 2) },
            }),
        };
        let fit = fit(&sieve, &xs, &ys, &LossSpec::squared(), &opts).unwrap();
        for p in fit.model.evaluate(&xs).unwrap() {
            assert!((p - 0.7).abs() < 1e-2, "prediction {p}");
        }
    }

    #[test]
    fn dictionary_is_not_an_estimator() {
        let mut sieve = SieveSpec::partition(1, 2, 1.0, 1.0).unwrap();
        sieve.kind = SieveKind::FiniteDictionary;
        let xs = Matrix::column(&[0.5]);
        assert!(matches!(
            fit(&sieve, &xs, &[0.0], &LossSpec::squared(), &SolverOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cauchy_cell_medians_concentrate() {
        let spec = NoiseSpec::cauchy(1.0).unwrap();
        let loss = LossSpec::quantile(0.5).unwrap();
        let sieve = PartitionSieve::new(1, 4).unwrap();
        let mut good = 0;
        for rep in 0..100 {
            let xs = sample_covariates(&CovariateSpec::uniform_cube(1), RngStream::new(40, rep), 4000).unwrap();
            let ys = sample_noise(&spec, RngStream::new(41, rep), 4000).unwrap();
            let fit = fit_cellwise(&sieve, &xs, &ys, &loss, 1e6).unwrap();
            if let FittedModel::Partition(p) = fit.model {
                if p.values().iter().all(|v| v.abs() < 0.2) {
                    good += 1;
                }
            }
        }
        assert!(good >= 95, "{good}/100 replications had every cell within 0.2");
    }

    #[test]
    fn l2_error_oracles() {
        let f0 = TargetFunction::PiecewiseLinear { knots: alloc::vec![(0.0, 0.0), (1.0, 1.0)] };
        let cov = CovariateSpec::uniform_cube(1);
        let halves = PartitionSieve::with_values(1, 2, alloc::vec![0.25, 0.75]).unwrap();
        let e = l2_error(&halves, &f0, &cov, 200_000, EVAL_STREAM).unwrap();
        let exact = 1.0 / 48f64.sqrt();
        assert!((e - exact).abs() < 0.02 * exact, "{e} vs {exact}");

        let c = TargetFunction::Constant { value: 0.4 };
        let same = PartitionSieve::with_values(1, 1, alloc::vec![0.4]).unwrap();
        assert_eq!(l2_error(&same, &c, &cov, 1000, EVAL_STREAM).unwrap(), 0.0);
        let off = PartitionSieve::with_values(1, 1, alloc::vec![0.9]).unwrap();
        assert!((l2_error(&off, &c, &cov, 1000, EVAL_STREAM).unwrap() - 0.5).abs() < 0.005);
        assert!(l2_error(&off, &c, &cov, 999, EVAL_STREAM).is_err());
    }

    #[test]
    fn huber_interpolates_median_to_mean() {
        let ys = [0.0, 0.3, 1.0, 4.0, 9.0];
        let mut last = f64::NEG_INFINITY;
        for k in 0..40 {
            let tau = 1e-9 * 10f64.powf(k as f64 * 0.3);
            let c = one_cell(&ys, &LossSpec::huber(tau).unwrap());
            assert!(c >= last - 1e-9);
            last = c;
        }
        let tiny = one_cell(&ys, &LossSpec::huber(1e-9).unwrap());
        assert!((tiny - 1.0).abs() < 1e-8);
        let big = one_cell(&ys, &LossSpec::huber(100.0).unwrap());
        assert!((big - 14.3 / 5.0).abs() < 1e-9);
    }

    fn responses() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-50.0f64..50.0, 1..40)
    }

    proptest! {
        #[test]
        fn perturbation_never_improves(ys in responses(), tau in 0.05f64..5.0, q in 0.05f64..0.95) {
            for loss in [LossSpec::squared(), LossSpec::huber(tau).unwrap(), LossSpec::quantile(q).unwrap()] {
                let c = one_cell(&ys, &loss);
                let r = cell_risk(&ys, c, &loss);
                let tol = 1e-9 * (1.0 + r.abs());
                prop_assert!(cell_risk(&ys, c + 1e-3, &loss) >= r - tol);
                prop_assert!(cell_risk(&ys, c - 1e-3, &loss) >= r - tol);
            }
        }

        #[test]
        fn quantile_shift_equivariance(ys in responses(), q in 0.05f64..0.95, shift in -10.0f64..10.0) {
            let loss = LossSpec::quantile(q).unwrap();
            let shifted: Vec<f64> = ys.iter().map(|y| y + shift).collect();
            prop_assert_eq!(one_cell(&shifted, &loss), one_cell(&ys, &loss) + shift);
        }

        #[test]
        fn squared_affine_equivariance(ys in responses(), a in -5.0f64..5.0, b in -10.0f64..10.0) {
            let loss = LossSpec::squared();
            let mapped: Vec<f64> = ys.iter().map(|y| a * y + b).collect();
            let lhs = one_cell(&mapped, &loss);
            let rhs = a * one_cell(&ys, &loss) + b;
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
        }
    }
}
