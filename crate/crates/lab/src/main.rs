use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use heavyreg_core::bounds::{prop_s3_closed_form, theorem1_bound, theorem2_bound};
use heavyreg_core::harness::{fit_rate, tail_profile_at, Aggregation, MIN_TAIL_REPS};
use heavyreg_core::rates::{nplse_exponent, phase_boundary_m, phase_diagram, PhaseMode};
use heavyreg_lab::config::{load_bounds, load_plan, parse_grid};
use heavyreg_lab::io::{read_records, write_rate_rows, write_records, RateRow};
use heavyreg_lab::runner::{run_with_models, ModelSnapshot};
use heavyreg_lab::SCHEMA_VERSION;
use serde_json::json;

#[derive(Parser)]
#[command(name = "heavyreg", version, about = "Heavy-tailed nonparametric regression: rates, bounds, simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rate exponent for one (m, gamma, s).
    Rates {
        #[arg(long)]
        m: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long)]
        json: bool,
    },
    /// Exponent surface over an (m, gamma) grid.
    Phase {
        /// m0:m1:steps,g0:g1:steps
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value = "a")]
        mode: PhaseMode,
        /// CSV destination, stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a maximal-inequality bound from a TOML description.
    Bounds {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run an experiment plan.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the log-log error slope of a records file.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "median")]
        agg: Aggregation,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Rates { m, gamma, s, json } => {
            let r = nplse_exponent(m, gamma, s)?;
            if json {
                let doc = json!({
                    "schema_version": SCHEMA_VERSION,
                    "m": m,
                    "gamma": gamma,
                    "s": s,
                    "exponent": r.exponent,
                    "regime": r.regime,
                    "e_complex": r.e_complex,
                    "e_heavy": r.e_heavy,
                    "boundary_m": finite_or_null(phase_boundary_m(gamma, s)),
                });
                writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
            } else {
                write_rate_rows(&mut out, &[RateRow::from_result(m, gamma, s, &r)])?;
            }
        }
        Command::Phase { grid, s, mode, out: path } => {
            let (m_axis, g_axis) = parse_grid(&grid)?;
            let cells = phase_diagram(&m_axis, &g_axis, s, mode)?;
            let rows: Vec<RateRow> = cells.iter().map(RateRow::from).collect();
            match path {
                Some(p) => write_rate_rows(BufWriter::new(create(&p)?), &rows)?,
                None => write_rate_rows(&mut out, &rows)?,
            }
        }
        Command::Bounds { config } => {
            let cfg = load_bounds(&config)?;
            let (terms, total, extra) = if let Some(inputs) = &cfg.theorem1 {
                let b = theorem1_bound(inputs)?;
                let terms = vec![("t1", b.t1), ("t2", b.t2), ("t3", b.t3), ("t4", b.t4), ("t5", b.t5)];
                (terms, b.total, json!({"evaluator": "theorem1", "truncation": b.truncation, "epsilon": b.epsilon}))
            } else if let Some(inputs) = &cfg.theorem2 {
                let b = theorem2_bound(inputs)?;
                (vec![("lead", b.lead), ("tail", b.tail)], b.total, json!({"evaluator": "theorem2", "kappa": b.kappa}))
            } else if let Some(inputs) = &cfg.closed_form {
                let (v, branch) = prop_s3_closed_form(inputs)?;
                (vec![], v, json!({"evaluator": "closed_form", "branch": branch}))
            } else {
                unreachable!("validated config")
            };
            writeln!(out, "{:<8} {:>14}", "term", "value")?;
            for (name, v) in &terms {
                writeln!(out, "{name:<8} {v:>14.6e}")?;
            }
            writeln!(out, "{:<8} {:>14.6e}", "total", total)?;
            let mut doc = json!({
                "schema_version": SCHEMA_VERSION,
                "terms": terms.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
                "total": total,
            });
            doc.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
            writeln!(out, "{}", serde_json::to_string(&doc)?)?;
        }
        Command::Simulate { config, out: dir } => {
            let plan = load_plan(&config)?;
            fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let (records, model) = run_with_models(&plan, true)?;
            write_records(BufWriter::new(create(&dir.join("records.csv"))?), &records)?;
            let fits: serde_json::Map<_, _> = [Aggregation::Median, Aggregation::Mean]
                .into_iter()
                .map(|agg| {
                    let key = format!("{agg:?}").to_lowercase();
                    let v = match fit_rate(&records, agg) {
                        Ok(f) => json!(f),
                        Err(e) => json!({"error": e.to_string()}),
                    };
                    (key, v)
                })
                .collect();
            let tails: Vec<_> = if plan.replications >= MIN_TAIL_REPS {
                plan.sample_sizes
                    .iter()
                    .map(|&n| tail_profile_at(&records, n).map(|t| json!({"n": n, "profile": t})))
                    .collect::<std::result::Result<_, _>>()?
            } else {
                vec![]
            };
            let summary = json!({
                "schema_version": SCHEMA_VERSION,
                "plan": plan,
                "records": records.len(),
                "rate_fit": fits,
                "tail_profiles": tails,
            });
            fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
            if let Some(model) = model {
                let n = *plan.sample_sizes.last().unwrap();
                let snap = ModelSnapshot::new(&plan.id, n, model);
                fs::write(dir.join("model_snapshot.json"), serde_json::to_string(&snap)?)?;
            }
            writeln!(out, "{} records written to {}", records.len(), dir.display())?;
        }
        Command::Fit { input, agg } => {
            let file = File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let records = read_records(file)?;
            if records.is_empty() {
                bail!("{} has no records", input.display());
            }
            let fit = fit_rate(&records, agg)?;
            let mut doc = json!(fit);
            doc.as_object_mut().unwrap().insert("schema_version".into(), json!(SCHEMA_VERSION));
            writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
        }
    }
    Ok(())
}

fn create(path: &std::path::Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}
