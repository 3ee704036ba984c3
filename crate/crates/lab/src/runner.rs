use heavyreg_core::erm::FittedModel;
use heavyreg_core::harness::{replicate, ExperimentPlan, RunRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Result, SCHEMA_VERSION};

/// Every `(n, rep)` replication in parallel; output order is `(n, rep)`.
pub fn run_plan_parallel(plan: &ExperimentPlan) -> Result<Vec<RunRecord>> {
    Ok(run_with_models(plan, false)?.0)
}

/// Parallel run that also keeps the model from replication 0 at the largest `n`.
pub fn run_with_models(plan: &ExperimentPlan, keep_model: bool) -> Result<(Vec<RunRecord>, Option<FittedModel>)> {
    plan.validate()?;
    let last = plan.sample_sizes.len() - 1;
    let jobs: Vec<(usize, usize)> =
        (0..plan.sample_sizes.len()).flat_map(|i| (0..plan.replications).map(move |r| (i, r))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(i, r)| {
            replicate(plan, i, r).map(|(rec, model)| (rec, (keep_model && i == last && r == 0).then_some(model)))
        })
        .collect::<std::result::Result<_, _>>()?;
    let mut snapshot = None;
    let mut records = Vec::with_capacity(results.len());
    for (rec, model) in results {
        if model.is_some() {
            snapshot = model;
        }
        records.push(rec);
    }
    Ok((records, snapshot))
}

/// Versioned JSON form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSnapshot {
    pub schema_version: u32,
    pub plan_id: String,
    pub n: usize,
    pub model: FittedModel,
}

impl ModelSnapshot {
    pub fn new(plan_id: &str, n: usize, model: FittedModel) -> Self {
        Self { schema_version: SCHEMA_VERSION, plan_id: plan_id.into(), n, model }
    }
}
