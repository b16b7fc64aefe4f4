//! Seeded experiment runs over a task, with per-seed and aggregate results.

use std::path::{Path, PathBuf};

use dwmd_core::nettrain::{evaluate, train_uda, NetworkSpec, TrainConfig, TrainHistory};
use dwmd_core::CPolicy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Task;
use crate::error::{invalid, io_err, HarnessError, Result};

/// One experiment config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UdaExperiment {
    /// Training seeds are `1..=repeats`.
    pub repeats: u64,
    /// Seed for the synthetic task generators, shared by all repeats.
    #[serde(default)]
    pub data_seed: u64,
    /// Report directory used when none is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub task: Task,
    pub network: NetworkSpec,
    #[serde(default)]
    pub train: TrainConfig,
}

impl UdaExperiment {
    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(invalid("repeats", "must be >= 1"));
        }
        self.network.validate()?;
        self.train.validate()?;
        Ok(())
    }

    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        let exp: Self = toml::from_str(text).map_err(|e| HarnessError::Config {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        exp.validate()?;
        Ok(exp)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub target_accuracy: f64,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    /// Error text when training aborted.
    pub outcome: std::result::Result<SeedRun, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub experiment: UdaExperiment,
    pub seeds: Vec<SeedResult>,
    /// Over successful seeds only.
    pub mean_accuracy: f64,
    /// Population standard deviation over successful seeds.
    pub std_accuracy: f64,
}

impl ExperimentReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.seeds
            .iter()
            .filter_map(|s| s.outcome.as_ref().ok().map(|r| r.target_accuracy))
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.seeds.iter().filter(|s| s.outcome.is_err()).count()
    }
}

/// Mean and population standard deviation, summed in slice order.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Trains one model per seed (in parallel) and evaluates it on the target labels.
pub fn run_experiment(exp: &UdaExperiment) -> Result<ExperimentReport> {
    exp.validate()?;
    let pair = exp.task.load(exp.data_seed)?;
    if pair.target.labels.is_empty() {
        return Err(invalid("task", "target domain needs labels for evaluation"));
    }
    let seeds: Vec<SeedResult> = (1..=exp.repeats)
        .into_par_iter()
        .map(|seed| {
            let cfg = TrainConfig { seed, ..exp.train };
            let outcome = train_uda(
                &pair.source.samples,
                &pair.source.labels,
                &pair.target.samples,
                Some(&pair.target.labels),
                &exp.network,
                &cfg,
            )
            .and_then(|model| {
                let target_accuracy = evaluate(&model.network, &pair.target.samples, &pair.target.labels)?;
                Ok(SeedRun { target_accuracy, history: model.history })
            })
            .map_err(|e| e.to_string());
            SeedResult { seed, outcome }
        })
        .collect();
    let accuracies: Vec<f64> = seeds
        .iter()
        .filter_map(|s| s.outcome.as_ref().ok().map(|r| r.target_accuracy))
        .collect();
    if accuracies.is_empty() {
        let first = seeds[0].outcome.clone().err().unwrap_or_default();
        return Err(HarnessError::AllSeedsFailed { count: seeds.len(), first });
    }
    let (mean_accuracy, std_accuracy) = mean_std(&accuracies);
    Ok(ExperimentReport {
        experiment: exp.clone(),
        seeds,
        mean_accuracy,
        std_accuracy,
    })
}

/// Hyperparameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    C,
    Beta,
    N,
    Lambda,
    Psi,
    Alpha,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::C => "c",
            SweepParam::Beta => "beta",
            SweepParam::N => "n",
            SweepParam::Lambda => "lambda",
            SweepParam::Psi => "psi",
            SweepParam::Alpha => "alpha",
        }
    }

    /// Default grid; only `c` has one.
    pub fn default_values(self) -> Option<Vec<f64>> {
        match self {
            SweepParam::C => Some(vec![0.01, 0.03, 0.05, 0.07, 0.1, 0.5, 1.0]),
            _ => None,
        }
    }

    pub fn apply(self, exp: &UdaExperiment, value: f64) -> Result<UdaExperiment> {
        let mut exp = exp.clone();
        let t = &mut exp.train;
        match self {
            SweepParam::C => t.dwmd.c_policy = CPolicy::Scalar { value },
            SweepParam::Beta => t.dwmd.beta = value,
            SweepParam::N => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(invalid("n", format!("{value} is not a positive integer")));
                }
                t.dwmd.n = value as usize;
            }
            SweepParam::Lambda => t.lambda = value,
            SweepParam::Psi => t.dwmd.psi = value,
            SweepParam::Alpha => t.dwmd.alpha = value,
        }
        exp.validate()?;
        Ok(exp)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub report: ExperimentReport,
}

/// Runs the experiment once per value of `param`, in the given order.
pub fn run_sweep(exp: &UdaExperiment, param: SweepParam, values: &[f64]) -> Result<Vec<SweepPoint>> {
    if values.is_empty() {
        return Err(invalid("values", "sweep needs at least one value"));
    }
    let configs = values
        .iter()
        .map(|&v| param.apply(exp, v))
        .collect::<Result<Vec<_>>>()?;
    configs
        .iter()
        .zip(values)
        .map(|(cfg, &value)| Ok(SweepPoint { value, report: run_experiment(cfg)? }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const SMALL: &str = r#"
repeats = 2
data_seed = 3

[task]
kind = "moons"
m = 60
rotation = 30.0

[network]
layer_sizes = [2, 6, 2]
activations = ["sigmoid"]
matched_layers = [0]

[train]
epochs = 3
batch_size = 20
"#;

    #[test]
    fn config_round_trips() {
        let exp = UdaExperiment::from_toml(SMALL, Path::new("x.toml")).unwrap();
        assert_eq!(exp.train.lambda, 1.0);
        assert_eq!(exp.train.dwmd.n, 5);
        let again = UdaExperiment::from_toml(&exp.to_toml(), Path::new("y.toml")).unwrap();
        assert_eq!(exp, again);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = SMALL.replace("epochs = 3", "epochs = 3\nepoch = 4");
        let msg = UdaExperiment::from_toml(&bad, Path::new("x.toml")).unwrap_err().to_string();
        assert!(msg.contains("epoch"), "{msg}");
        let bad = SMALL.replace("data_seed = 3", "data_seed = 3\nseeds = 4");
        assert!(UdaExperiment::from_toml(&bad, Path::new("x.toml")).is_err());
        let bad = SMALL.replace("repeats = 2", "repeats = 0");
        assert!(UdaExperiment::from_toml(&bad, Path::new("x.toml")).is_err());
    }

    #[test]
    fn single_repeat_has_zero_spread() {
        let mut exp = UdaExperiment::from_toml(SMALL, Path::new("x.toml")).unwrap();
        exp.repeats = 1;
        let r = run_experiment(&exp).unwrap();
        assert_eq!(r.std_accuracy, 0.0);
        assert_eq!(r.seeds.len(), 1);
        assert_eq!(r.seeds[0].seed, 1);
    }

    #[test]
    fn failed_seeds_are_recorded() {
        let relu = SMALL.replace("\"sigmoid\"", "\"relu\"");
        let mut exp = UdaExperiment::from_toml(&relu, Path::new("x.toml")).unwrap();
        exp.train.learning_rate = 1e300;
        exp.train.epochs = 20;
        match run_experiment(&exp) {
            Err(HarnessError::AllSeedsFailed { count: 2, first }) => assert!(first.contains("diverged"), "{first}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_applies_values() {
        let exp = UdaExperiment::from_toml(SMALL, Path::new("x.toml")).unwrap();
        let e = SweepParam::N.apply(&exp, 3.0).unwrap();
        assert_eq!(e.train.dwmd.n, 3);
        assert!(SweepParam::N.apply(&exp, 2.5).is_err());
        assert!(SweepParam::Beta.apply(&exp, 2.0).is_err());
        let e = SweepParam::C.apply(&exp, 0.5).unwrap();
        assert_eq!(e.train.dwmd.c_policy, CPolicy::Scalar { value: 0.5 });
        assert_eq!(SweepParam::C.default_values().unwrap().len(), 7);
    }
}
