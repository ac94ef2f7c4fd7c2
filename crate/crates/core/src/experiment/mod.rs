//! Seeded Monte-Carlo experiment runner.
//!
//! A run walks the sweep grid, builds one scenario pipeline per grid point
//! and evaluates it for every trial under
//! `child_seed(master, grid_index, trial)`. Rows come out in (grid, trial,
//! metric) order whatever the thread schedule.

mod config;
mod output;
mod scenarios;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};

use sha2::{Digest, Sha256};

pub use config::{
    AscentParams, ExperimentConfig, LayoutParams, ModelParams, RelayParams, Scenario, Sweep,
    SweepAxis,
};
pub use output::{
    aggregate, emit_csv, emit_metadata, emit_plotdata, write_csv, write_plotdata, Aggregate,
};
pub use scenarios::{com_phases, metric_names};

use crate::error::Result;
use crate::parallel::map_trials;
use crate::rng::child_seed;

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub sweep_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialFailure {
    pub grid_index: usize,
    pub sweep_value: f64,
    pub trial: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultTable {
    pub scenario: Scenario,
    pub sweep_name: String,
    /// One row per (grid point, trial, metric). A failed trial still emits
    /// its rows, with NaN values.
    pub rows: Vec<Row>,
    pub failures: Vec<TrialFailure>,
    pub trials_run: usize,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn failure_fraction(&self) -> f64 {
        if self.trials_run == 0 {
            0.0
        } else {
            self.failures.len() as f64 / self.trials_run as f64
        }
    }

    /// Values of `metric` at `sweep_value`, in trial order.
    pub fn values(&self, sweep_value: f64, metric: &str) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.sweep_value == sweep_value && r.metric == metric)
            .map(|r| r.value)
            .collect()
    }

    /// Mean of the finite values of `metric` at `sweep_value`.
    pub fn mean(&self, sweep_value: f64, metric: &str) -> f64 {
        let v: Vec<f64> = self
            .values(sweep_value, metric)
            .into_iter()
            .filter(|x| x.is_finite())
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// SHA-256 of the canonical TOML rendering, output path excluded.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.out = None;
    Ok(hex::encode(Sha256::digest(c.to_toml_string()?.as_bytes())))
}

fn flatten(prefix: &str, value: &toml::Value, out: &mut BTreeMap<String, String>) {
    match value {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, v, out);
            }
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

fn metadata(cfg: &ExperimentConfig) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut c = cfg.clone();
    c.out = None;
    let value = toml::Value::try_from(&c).map_err(|e| crate::Error::Config(e.to_string()))?;
    flatten("config", &value, &mut out);
    let fp = crate::olp::FixedPointOptions::default();
    let tb = crate::asymptotics::TauBarOptions::default();
    let fixed = [
        ("config_hash", config_hash(cfg)?),
        ("crate_version", env!("CARGO_PKG_VERSION").to_string()),
        ("parallel", crate::parallel::is_parallel().to_string()),
        (
            "seed_derivation",
            "child_seed(master, grid_index, trial)".to_string(),
        ),
        ("olp.max_iterations", fp.max_iterations.to_string()),
        ("olp.tolerance", fp.tolerance.to_string()),
        ("tau_bar.init", tb.init.to_string()),
        ("tau_bar.tolerance", tb.tolerance.to_string()),
        ("tau_bar.max_iterations", tb.max_iterations.to_string()),
        ("ascent.initializer", "exp(j*pi/2) * ones".to_string()),
        ("ascent.projection_of_zero", "1".to_string()),
        (
            "correlation.laplace_spread",
            "standard deviation".to_string(),
        ),
        (
            "relay.si_distribution",
            "rician, uniform specular phase".to_string(),
        ),
        (
            "relay.af_gain",
            "sqrt(P_R/R) / sqrt(beta_1 P_S |h_1n|^2 + sigma^2)".to_string(),
        ),
        ("relay.multiuser_fd_si", "neglected".to_string()),
        ("failed_trial_value", "NaN".to_string()),
    ];
    for (k, v) in fixed {
        out.insert(k.to_string(), v);
    }
    Ok(out)
}

/// Runs every (grid point, trial) of `cfg`. Trial failures become NaN rows
/// plus an entry in `failures`; only configuration errors abort the run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let points: Vec<ExperimentConfig> = cfg
        .sweep
        .values
        .iter()
        .map(|&v| cfg.at(v))
        .collect::<Result<_>>()?;
    let names: Vec<Vec<String>> = points.iter().map(scenarios::metric_names).collect();
    let prepared = map_trials(&points, |p| {
        catch_unwind(AssertUnwindSafe(|| scenarios::prepare(p)))
            .unwrap_or_else(|_| {
                Err(crate::Error::Validity(
                    "pipeline construction panicked".into(),
                ))
            })
            .map_err(|e| e.to_string())
    });
    for (v, p) in cfg.sweep.values.iter().zip(&prepared) {
        if let Err(e) = p {
            log::warn!("{} = {v}: {e}", cfg.sweep.axis.name());
        }
    }
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|g| (0..cfg.trials).map(move |t| (g, t)))
        .collect();
    let outcomes = map_trials(&jobs, |&(g, t)| {
        let seed = child_seed(cfg.seed, g as u64, t as u64);
        let out = match &prepared[g] {
            Ok(p) => catch_unwind(AssertUnwindSafe(|| p.trial(seed)))
                .unwrap_or_else(|_| Err(crate::Error::Validity("trial panicked".into())))
                .map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        };
        match out {
            Ok(v) if v.len() != names[g].len() => {
                Err(format!("{} metrics for {} names", v.len(), names[g].len()))
            }
            other => other,
        }
    });
    let mut rows = Vec::with_capacity(jobs.len() * names.first().map_or(0, Vec::len));
    let mut failures = Vec::new();
    for (&(g, t), out) in jobs.iter().zip(outcomes) {
        let sweep_value = cfg.sweep.values[g];
        let seed = child_seed(cfg.seed, g as u64, t as u64);
        let values = match out {
            Ok(v) => v,
            Err(message) => {
                log::debug!("trial {t} at {sweep_value} failed: {message}");
                failures.push(TrialFailure {
                    grid_index: g,
                    sweep_value,
                    trial: t,
                    seed,
                    message,
                });
                vec![f64::NAN; names[g].len()]
            }
        };
        for (metric, value) in names[g].iter().zip(values) {
            rows.push(Row {
                sweep_value,
                trial: t,
                seed,
                metric: metric.clone(),
                value,
            });
        }
    }
    let mut metadata = metadata(cfg)?;
    metadata.insert("trials_failed".into(), failures.len().to_string());
    Ok(ResultTable {
        scenario: cfg.scenario,
        sweep_name: cfg.sweep.axis.name().to_string(),
        rows,
        trials_run: jobs.len(),
        failures,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default_for(scenario);
        cfg.trials = 2;
        cfg.model.correlation_samples = 500;
        cfg.relay.split_grid = 11;
        cfg.ascent.max_iterations = 20;
        cfg.sweep.values.truncate(2);
        match scenario {
            Scenario::RankoneMultiuser => cfg.sweep.values = vec![2.0, 4.0],
            Scenario::FullrankValidate | Scenario::OptimizePhases => {
                cfg.system.m = 4;
                cfg.system.k = 4;
                cfg.system.n = 8;
                if scenario == Scenario::OptimizePhases {
                    cfg.sweep.values = vec![4.0, 8.0];
                }
            }
            _ => {}
        }
        cfg
    }

    #[test]
    fn every_scenario_runs_cleanly() {
        for s in Scenario::ALL {
            let cfg = small(s);
            let t = run_experiment(&cfg).unwrap();
            assert!(t.failures.is_empty(), "{s}: {:?}", t.failures);
            let per_point = metric_names(&cfg.at(cfg.sweep.values[0]).unwrap()).len();
            assert_eq!(
                t.rows.len(),
                cfg.sweep.values.len() * cfg.trials * per_point,
                "{s}"
            );
            assert!(
                t.rows
                    .iter()
                    .all(|r| r.value.is_finite() || r.metric == "sinr_bound"),
                "{s}"
            );
        }
    }

    #[test]
    fn one_point_one_trial_gives_one_row_per_metric() {
        let mut cfg = small(Scenario::RelayCompare);
        cfg.trials = 1;
        cfg.sweep.values = vec![60.0];
        let t = run_experiment(&cfg).unwrap();
        assert_eq!(t.rows.len(), metric_names(&cfg).len());
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = small(Scenario::FullrankValidate);
        assert_eq!(run_experiment(&cfg).unwrap(), run_experiment(&cfg).unwrap());
    }

    #[test]
    fn unbuildable_points_fail_every_trial() {
        let mut cfg = small(Scenario::SingleUser);
        // a full-duplex relay needs two antennas
        cfg.relay.antennas = 1;
        let t = run_experiment(&cfg).unwrap();
        assert_eq!(t.failures.len(), 4);
        assert!((t.failure_fraction() - 1.0).abs() < 1e-15);
        assert!(t.rows.iter().all(|r| r.value.is_nan()));
    }

    #[test]
    fn metadata_lists_design_parameters() {
        let cfg = small(Scenario::OptimizePhases);
        let md = metadata(&cfg).unwrap();
        for key in [
            "config.ascent.shrink",
            "config.ascent.max_halvings",
            "config.model.correlation_samples",
            "config.relay.si_k_rice",
            "config.relay.split_grid",
            "config_hash",
        ] {
            assert!(md.contains_key(key), "{key}");
        }
        let mut moved = cfg.clone();
        moved.out = Some("elsewhere".into());
        assert_eq!(config_hash(&cfg).unwrap(), config_hash(&moved).unwrap());
        moved.seed += 1;
        assert_ne!(config_hash(&cfg).unwrap(), config_hash(&moved).unwrap());
    }
}
