use std::path::Path;

use heavyreg_core::bounds::{BoundInputs, ClosedFormInputs, WeightedBoundInputs};
use heavyreg_core::harness::ExperimentPlan;
use heavyreg_core::rates::Axis;
use serde::{Deserialize, Serialize};

use crate::{LabError, Result};

/// Exactly one of the three evaluators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsConfig {
    #[serde(default)]
    pub theorem1: Option<BoundInputs>,
    #[serde(default)]
    pub theorem2: Option<WeightedBoundInputs>,
    #[serde(default)]
    pub closed_form: Option<ClosedFormInputs>,
}

impl BoundsConfig {
    pub fn validate(&self) -> Result<()> {
        let set = [self.theorem1.is_some(), self.theorem2.is_some(), self.closed_form.is_some()];
        if set.iter().filter(|s| **s).count() != 1 {
            return Err(LabError::Invalid(
                "bounds config needs exactly one of [theorem1], [theorem2], [closed_form]".into(),
            ));
        }
        Ok(())
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| LabError::Io { path: path.display().to_string(), source })
}

pub fn parse_plan(text: &str) -> Result<ExperimentPlan> {
    let plan: ExperimentPlan = toml::from_str(text)?;
    plan.validate()?;
    Ok(plan)
}

pub fn load_plan(path: &Path) -> Result<ExperimentPlan> {
    parse_plan(&read(path)?)
}

pub fn parse_bounds(text: &str) -> Result<BoundsConfig> {
    let cfg: BoundsConfig = toml::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_bounds(path: &Path) -> Result<BoundsConfig> {
    parse_bounds(&read(path)?)
}

fn parse_axis(s: &str) -> Result<Axis> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || LabError::Invalid(format!("axis '{s}' is not start:end:steps"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    Ok(Axis::new(start, end, steps)?)
}

/// `m0:m1:steps,g0:g1:steps` into the `m` and `γ` axes.
pub fn parse_grid(s: &str) -> Result<(Axis, Axis)> {
    match s.split_once(',') {
        Some((m, g)) => Ok((parse_axis(m)?, parse_axis(g)?)),
        None => Err(LabError::Invalid(format!("grid '{s}' is not m0:m1:steps,g0:g1:steps"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PLAN: &str = r#"
id = "demo"
truncation = 10.0
sample_sizes = [64, 128]
replications = 2
seed = 1

[noise]
family = "symmetric_pareto"
scale = 1.0
tail_param = 1.5

[covariates]
dim = 1
family = "uniform_cube"

[target]
kind = "sine"
amplitude = 1.0
frequency = 1.0

[sieve]
kind = "partition"
holder_alpha = 1.0

[loss]
kind = "huber"
schedule = { kind = "adaptive", c = 1.0, v = 1.0, m = 1.5 }
"#;

    #[test]
    fn plan_round_trip() {
        let plan = parse_plan(PLAN).unwrap();
        assert_eq!(plan.sample_sizes, vec![64, 128]);
        assert_eq!(plan.n_eval, 10_000);
        let again = parse_plan(&toml::to_string(&plan).unwrap()).unwrap();
        assert_eq!(plan, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_plan(&format!("{PLAN}\nextra = 1\n")).is_err());
        let typo = PLAN.replace("holder_alpha", "holder_alhpa");
        assert!(parse_plan(&typo).is_err());
        let noise_typo = PLAN.replace("tail_param", "tail");
        assert!(parse_plan(&noise_typo).is_err());
    }

    #[test]
    fn invalid_plans_are_rejected() {
        let cauchy = PLAN.replace("symmetric_pareto", "cauchy");
        assert!(matches!(parse_plan(&cauchy), Err(LabError::Core(_))));
    }

    #[test]
    fn bounds_config_needs_one_table() {
        let text = r#"
[theorem1]
sigma = 0.2
kappa = 1.0
n = 100
entropy = { form = "parametric", d_f = 1.0, gamma = 1.0, gamma_prime = 0.0, u_f = 1.0 }
tail = { kind = "zero" }
"#;
        let cfg = parse_bounds(text).unwrap();
        assert!(cfg.theorem1.is_some());
        assert!(parse_bounds("").is_err());
        assert!(parse_bounds(&text.replace("kappa", "kapa")).is_err());
        assert!(parse_bounds(&text.replace("d_f = 1.0,", "d_f = 1.0, bogus = 2.0,")).is_err());
    }

    #[test]
    fn grid_parsing() {
        let (m, g) = parse_grid("1.1:6:50,0:4:41").unwrap();
        assert_eq!((m.steps, g.steps), (50, 41));
        assert_eq!(g.points()[40], 4.0);
        assert!(parse_grid("1:2:3").is_err());
        assert!(parse_grid("1:2,0:1:2").is_err());
    }
}
