use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::boost::{BoostConfig, GossParams};
use crate::data::CsvSchema;
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::tree::{Growth, SplitMethod, TreeParams};
use crate::tune::{validate_space, Config, ParamSpec, TpeSettings};

/// One input dataset of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    /// Relative paths are resolved against the config file's directory.
    pub path: PathBuf,
    pub schema: CsvSchema,
    /// Hyperparameters forced for every model on this dataset, applied after
    /// the model's own initial values (e.g. `subsample`, `n_estimators`).
    #[serde(default)]
    pub overrides: Config,
}

/// The four model families of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Plain gradient boosting: exact splits, depth-wise trees.
    Gbm,
    /// Regularized boosting with sparsity-aware exact splits.
    Xgb,
    /// Leaf-wise histogram trees with one-side sampling.
    Lgbm,
    /// Oblivious histogram trees with repeated leaf refinement.
    Cat,
}

const DEPTHS: [f64; 6] = [2.0, 3.0, 4.0, 5.0, 8.0, 10.0];

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Gbm, Preset::Xgb, Preset::Lgbm, Preset::Cat];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Gbm => "gbm",
            Preset::Xgb => "xgb",
            Preset::Lgbm => "lgbm",
            Preset::Cat => "cat",
        }
    }

    /// Initial hyperparameters.
    pub fn init(self) -> BoostConfig {
        let base = BoostConfig {
            n_estimators: 150,
            learning_rate: 0.1,
            subsample: 0.75,
            ..BoostConfig::default()
        };
        let tree = TreeParams {
            colsample_bynode: 0.6,
            ..TreeParams::default()
        };
        match self {
            Preset::Gbm => BoostConfig {
                tree: TreeParams { max_depth: 3, ..tree },
                ..base
            },
            Preset::Xgb => BoostConfig {
                learning_rate: 0.3,
                tree: TreeParams {
                    max_depth: 6,
                    lambda_l2: 1.0,
                    sparsity_aware: true,
                    ..tree
                },
                ..base
            },
            Preset::Lgbm => BoostConfig {
                subsample: 1.0,
                goss: Some(GossParams {
                    top_rate: 0.2,
                    other_rate: 0.1,
                }),
                tree: TreeParams {
                    growth: Growth::LeafWise,
                    split_method: SplitMethod::Histogram,
                    max_bins: 255,
                    num_leaves: 31,
                    max_depth: 64,
                    sparsity_aware: true,
                    ..tree
                },
                ..base
            },
            Preset::Cat => BoostConfig {
                leaf_estimation_iterations: 1,
                tree: TreeParams {
                    growth: Growth::Oblivious,
                    split_method: SplitMethod::Histogram,
                    max_bins: 254,
                    max_depth: 6,
                    lambda_l2: 3.0,
                    ..tree
                },
                ..base
            },
        }
    }

    /// Search space for tuning.
    pub fn space(self) -> Vec<ParamSpec> {
        let lr = ParamSpec::loguniform("learning_rate", 0.01, 0.3);
        match self {
            Preset::Gbm => vec![
                ParamSpec::choice("max_depth", &DEPTHS),
                lr,
                ParamSpec::choice("min_samples_split", &[2.0, 5.0, 10.0]),
            ],
            Preset::Xgb => vec![
                ParamSpec::choice("max_depth", &DEPTHS),
                lr,
                ParamSpec::uniform("gamma", 0.0, 3.0),
                ParamSpec::uniform("alpha", 0.0, 1.0),
                ParamSpec::uniform("lambda", 0.0, 3.0),
            ],
            Preset::Lgbm => vec![
                ParamSpec::choice("num_leaves", &[3.0, 7.0, 15.0, 31.0, 127.0]),
                lr,
                ParamSpec::uniform("top_rate", 0.1, 0.5),
                ParamSpec::uniform("other_rate", 0.05, 0.2),
                ParamSpec::uniform("reg_alpha", 0.0, 1.0),
                ParamSpec::uniform("reg_lambda", 0.0, 3.0),
            ],
            Preset::Cat => vec![
                ParamSpec::choice("max_depth", &DEPTHS),
                ParamSpec::choice("leaf_estimation_iterations", &[1.0, 10.0]),
                ParamSpec::uniform("l2_leaf_reg", 0.0, 5.0),
            ],
        }
    }
}

/// A model family entry: a preset, optionally adjusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Defaults to the preset name.
    #[serde(default)]
    pub name: Option<String>,
    pub preset: Preset,
    /// Changes to the preset's initial hyperparameters.
    #[serde(default)]
    pub init: Config,
    /// Replaces the preset's search space.
    #[serde(default)]
    pub space: Option<Vec<ParamSpec>>,
}

impl ModelSpec {
    pub fn from_preset(preset: Preset) -> Self {
        Self {
            name: None,
            preset,
            init: Config::new(),
            space: None,
        }
    }

    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.preset.name())
    }

    pub fn init_config(&self) -> Result<BoostConfig> {
        let mut config = self.preset.init();
        config.apply_overrides(&self.init)?;
        Ok(config)
    }

    pub fn search_space(&self) -> Vec<ParamSpec> {
        self.space.clone().unwrap_or_else(|| self.preset.space())
    }
}

/// How hyperparameters are chosen on each outer training portion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Regime {
    /// Fit the initial hyperparameters.
    None,
    Tpe {
        #[serde(default = "tpe_iterations")]
        n_iter: usize,
    },
    Random {
        #[serde(default = "random_iterations")]
        n_iter: usize,
    },
}

fn tpe_iterations() -> usize {
    15
}

fn random_iterations() -> usize {
    30
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::None => "none",
            Regime::Tpe { .. } => "tpe",
            Regime::Random { .. } => "random",
        }
    }

    pub fn n_iter(&self) -> usize {
        match *self {
            Regime::None => 0,
            Regime::Tpe { n_iter } | Regime::Random { n_iter } => n_iter,
        }
    }

    /// No tuning, TPE with 15 trials and randomized search with 30.
    pub fn standard() -> Vec<Regime> {
        vec![
            Regime::None,
            Regime::Tpe {
                n_iter: tpe_iterations(),
            },
            Regime::Random {
                n_iter: random_iterations(),
            },
        ]
    }
}

fn default_models() -> Vec<ModelSpec> {
    Preset::ALL.into_iter().map(ModelSpec::from_preset).collect()
}

fn default_outer_k() -> usize {
    10
}

fn default_inner_k() -> usize {
    5
}

fn default_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    #[serde(default = "default_models")]
    pub models: Vec<ModelSpec>,
    #[serde(default = "Regime::standard")]
    pub regimes: Vec<Regime>,
    #[serde(default = "default_outer_k")]
    pub outer_k: usize,
    #[serde(default = "default_inner_k")]
    pub inner_k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub tpe: TpeSettings,
    /// Worker threads; `None` uses every core.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Reads a config file and resolves relative dataset and output paths
    /// against its directory.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        if let Some(base) = path.parent() {
            for d in &mut config.datasets {
                if d.path.is_relative() {
                    d.path = base.join(&d.path);
                }
            }
            if config.output_dir.is_relative() {
                config.output_dir = base.join(&config.output_dir);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Parameter(m));
        if self.datasets.is_empty() {
            return fail("no datasets configured".into());
        }
        if self.outer_k < 2 || self.inner_k < 2 {
            return fail(format!(
                "outer_k and inner_k must be at least 2, got {} and {}",
                self.outer_k, self.inner_k
            ));
        }
        if self.metrics.is_empty() {
            return fail("no metrics configured".into());
        }
        if self.threads == Some(0) {
            return fail("threads must be at least 1".into());
        }
        unique("dataset", self.datasets.iter().map(|d| d.name.as_str()))?;
        unique("model", self.models.iter().map(ModelSpec::name))?;
        unique("regime", self.regimes.iter().map(Regime::name))?;
        unique("metric", self.metrics.iter().map(|m| m.name()))?;
        for d in &self.datasets {
            check_name(&d.name)?;
        }
        for m in &self.models {
            check_name(m.name())?;
            for d in &self.datasets {
                let mut init = m.init_config()?;
                init.apply_overrides(&d.overrides)?;
                init.validate()?;
            }
            if self.regimes.iter().any(|r| *r != Regime::None) {
                validate_space(&m.search_space())?;
            }
        }
        for r in &self.regimes {
            if *r != Regime::None && r.n_iter() == 0 {
                return fail(format!("regime '{}' needs n_iter > 0", r.name()));
            }
        }
        Ok(())
    }
}

fn unique<'a>(what: &str, names: impl Iterator<Item = &'a str>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Parameter(format!("duplicate {what} name '{n}'")));
        }
    }
    Ok(())
}

/// Names become parts of file names.
fn check_name(name: &str) -> Result<()> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.');
    if ok && !name.contains("__") {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "name '{name}' must be non-empty ASCII letters, digits, '-', '_' or '.', without '__'"
        )))
    }
}
