use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::ReluNet;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::matrix::Matrix;
use crate::rng::RngStream;

/// Plain mini-batch SGD with constant step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub step_size: f64,
    pub stream: RngStream,
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Parameter("batch size must be >= 1".into()));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::Parameter(alloc::format!("step size must be positive, got {}", self.step_size)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Best checkpoint by full empirical risk.
    pub net: ReluNet,
    pub initial_risk: f64,
    pub best_risk: f64,
    /// Empirical risk after each epoch.
    pub epoch_risks: Vec<f64>,
    pub steps: usize,
}

pub fn empirical_risk(net: &ReluNet, xs: &Matrix, ys: &[f64], loss: &LossSpec) -> f64 {
    use super::Model;
    let total: f64 = xs.iter_rows().zip(ys).map(|(x, &y)| loss.value(net.predict_row(x), y)).sum();
    total / ys.len().max(1) as f64
}

/// Train `net` on `(xs, ys)`. Each epoch visits a fresh permutation drawn
/// from `schedule.stream`; the returned network is the best epoch-end
/// iterate, never worse than the starting point.
pub fn sgd_train(
    net: ReluNet,
    xs: &Matrix,
    ys: &[f64],
    loss: &LossSpec,
    schedule: &TrainSchedule,
) -> Result<TrainOutcome> {
    loss.validate()?;
    schedule.validate()?;
    if xs.rows() != ys.len() {
        return Err(Error::Shape { expected: xs.rows(), found: ys.len() });
    }
    if xs.cols() != net.input_dim {
        return Err(Error::Shape { expected: net.input_dim, found: xs.cols() });
    }
    if ys.is_empty() {
        return Err(Error::Data("no training data".into()));
    }
    let n = ys.len();
    let initial_risk = empirical_risk(&net, xs, ys, loss);
    if !initial_risk.is_finite() {
        return Err(Error::Training { epoch: 0, step: 0, loss: initial_risk });
    }
    let mut best = net.clone();
    let mut best_risk = initial_risk;
    let mut current = net;
    let mut params = current.params();
    let mut grad = alloc::vec![0.0; params.len()];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = schedule.stream.generator();
    let mut epoch_risks = Vec::with_capacity(schedule.epochs);
    let mut steps = 0;

    for epoch in 0..schedule.epochs {
        for i in (1..n).rev() {
            let j = rng.index(i + 1);
            order.swap(i, j);
        }
        for batch in order.chunks(schedule.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_loss = 0.0;
            for &i in batch {
                batch_loss += current.accumulate_gradient(xs.row(i), ys[i], loss, &mut grad);
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training { epoch, step: steps, loss: batch_loss / batch.len() as f64 });
            }
            let scale = schedule.step_size / batch.len() as f64;
            for (p, g) in params.iter_mut().zip(&grad) {
                *p -= scale * g;
            }
            current.set_params(&params);
            steps += 1;
        }
        let risk = empirical_risk(&current, xs, ys, loss);
        if !risk.is_finite() {
            return Err(Error::Training { epoch, step: steps, loss: risk });
        }
        epoch_risks.push(risk);
        if risk < best_risk {
            best_risk = risk;
            best = current.clone();
        }
    }
    Ok(TrainOutcome { net: best, initial_risk, best_risk, epoch_risks, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{sample_covariates, sample_noise, CovariateSpec, NoiseSpec};

    fn data(n: usize, seed: u64) -> (Matrix, Vec<f64>) {
        let xs = sample_covariates(&CovariateSpec::uniform_cube(1), RngStream::new(seed, 0), n).unwrap();
        let eps = sample_noise(&NoiseSpec::gaussian(0.1).unwrap(), RngStream::new(seed, 1), n).unwrap();
        let ys = eps.iter().map(|e| 0.3 + e).collect();
        (xs, ys)
    }

    fn schedule(epochs: usize) -> TrainSchedule {
        TrainSchedule { epochs, batch_size: 16, step_size: 0.05, stream: RngStream::new(5, 0) }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let (xs, ys) = data(64, 1);
        let net = ReluNet::random(1, 2, 4, 2.0, RngStream::new(2, 0)).unwrap();
        let out = sgd_train(net.clone(), &xs, &ys, &LossSpec::squared(), &schedule(0)).unwrap();
        assert_eq!(out.net, net);
        assert_eq!(out.steps, 0);
    }

    #[test]
    fn constant_target_reaches_variance_floor() {
        let (xs, ys) = data(400, 3);
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let floor = 0.5 * ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / ys.len() as f64;
        let net = ReluNet::zeros(1, 1, 2, 1.0).unwrap();
        let sched = TrainSchedule { epochs: 60, batch_size: 20, step_size: 0.2, stream: RngStream::new(4, 0) };
        let out = sgd_train(net, &xs, &ys, &LossSpec::squared(), &sched).unwrap();
        assert!(out.best_risk - floor < 1e-3, "risk {} floor {}", out.best_risk, floor);
        assert!(out.best_risk >= floor - 1e-12);
    }

    #[test]
    fn huber_with_large_tau_tracks_squared_loss() {
        let (xs, ys) = data(128, 6);
        let net = ReluNet::random(1, 2, 4, 2.0, RngStream::new(7, 0)).unwrap();
        let a = sgd_train(net.clone(), &xs, &ys, &LossSpec::squared(), &schedule(5)).unwrap();
        let b = sgd_train(net, &xs, &ys, &LossSpec::huber(1e6).unwrap(), &schedule(5)).unwrap();
        assert_eq!(a.epoch_risks, b.epoch_risks);
        assert_eq!(a.net, b.net);
    }

    #[test]
    fn best_checkpoint_never_worse() {
        let (xs, ys) = data(128, 8);
        let net = ReluNet::random(1, 2, 4, 2.0, RngStream::new(9, 0)).unwrap();
        let sched = TrainSchedule { epochs: 5, batch_size: 4, step_size: 3.0, stream: RngStream::new(1, 0) };
        let out = sgd_train(net, &xs, &ys, &LossSpec::squared(), &sched).unwrap();
        assert!(out.best_risk <= out.initial_risk);
    }

    #[test]
    fn divergence_is_reported() {
        let (xs, mut ys) = data(32, 10);
        ys[0] = f64::INFINITY;
        let net = ReluNet::zeros(1, 1, 2, 1.0).unwrap();
        let err = sgd_train(net, &xs, &ys, &LossSpec::squared(), &schedule(1)).unwrap_err();
        assert!(matches!(err, Error::Training { .. }));
    }
}
