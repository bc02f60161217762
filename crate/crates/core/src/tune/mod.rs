//! Hyperparameter search over a declared space: randomized search and TPE,
//! each trial scored by mean validation log loss over fixed inner folds.

mod space;
mod tpe;

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::boost::{self, BoostConfig};
use crate::data::{encode_categoricals, stratified_kfold, Dataset, FoldPlan, OrderedTargetEncoder};
use crate::error::{Error, Result};
use crate::metrics::log_loss;
use crate::seed;

pub use space::{sample_random, validate_space, Config, ParamKind, ParamSpec};
pub use tpe::{tpe_split_history, tpe_suggest, TpeSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config: Config,
    /// Mean validation log loss; `+inf` for failed trials.
    pub score: f64,
    pub fold_scores: Vec<f64>,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Trial {
    pub fn new(config: Config, score: f64, fold_scores: Vec<f64>, wall_time_s: f64, error: Option<String>) -> Self {
        Self {
            config,
            score,
            fold_scores,
            wall_time_s,
            error,
        }
    }
}

/// Trials in evaluation order; lower scores are better.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TuningHistory {
    trials: Vec<Trial>,
}

impl TuningHistory {
    pub fn push(&mut self, trial: Trial) {
        self.trials.push(trial);
    }

    pub fn trials(&self) -> &[Trial] {
        &self.trials
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Lowest score, earliest trial on ties.
    pub fn best(&self) -> Option<&Trial> {
        self.trials.iter().reduce(|best, t| if t.score < best.score { t } else { best })
    }

    pub fn best_so_far(&self) -> Vec<f64> {
        self.trials
            .iter()
            .scan(f64::INFINITY, |b, t| {
                *b = b.min(t.score);
                Some(*b)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Random,
    Tpe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneOptions {
    pub method: SearchMethod,
    pub n_iter: usize,
    pub inner_k: usize,
    pub seed: u64,
    #[serde(default)]
    pub tpe: TpeSettings,
    #[serde(default)]
    pub encoder: OrderedTargetEncoder,
}

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub best: Config,
    /// The initial configuration with the best values applied.
    pub best_config: BoostConfig,
    pub history: TuningHistory,
    pub inner_folds: FoldPlan,
}

struct InnerFold {
    train: Dataset,
    valid: Dataset,
}

fn evaluate(folds: &[InnerFold], config: &BoostConfig) -> Result<Vec<f64>> {
    folds
        .iter()
        .map(|f| {
            let model = boost::fit(&f.train, config)?;
            let proba = model.predict_proba_dataset(&f.valid)?;
            log_loss(f.valid.labels(), &proba)
        })
        .collect()
}

/// Searches `space` around `init` on `data`, which should be the training
/// portion of an outer fold. The inner folds are drawn once and shared by
/// every trial; failed trials score `+inf` and the search continues.
pub fn tune(data: &Dataset, init: &BoostConfig, space: &[ParamSpec], options: &TuneOptions) -> Result<TuneOutcome> {
    if options.inner_k < 2 {
        return Err(Error::Parameter(format!("inner_k must be at least 2, got {}", options.inner_k)));
    }
    if options.n_iter == 0 {
        return Err(Error::Parameter("n_iter must be at least 1".into()));
    }
    validate_space(space)?;
    let plan = stratified_kfold(data.labels(), options.inner_k, seed::derive_seed(options.seed, &[seed::name_key("inner-folds")]))?;
    let folds = (0..options.inner_k)
        .map(|k| {
            let train = data.select_rows(&plan.train_rows(k))?;
            let valid = data.select_rows(&plan.test_rows(k))?;
            let (train, valid) = if data.has_categorical() {
                encode_categoricals(&train, &valid, &options.encoder)?
            } else {
                (train, valid)
            };
            Ok(InnerFold { train, valid })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut history = TuningHistory::default();
    for t in 0..options.n_iter {
        let trial_seed = seed::derive_seed(options.seed, &[t as u64]);
        let sampled = match options.method {
            SearchMethod::Random => sample_random(space, trial_seed),
            SearchMethod::Tpe => tpe_suggest(space, &history, &options.tpe, trial_seed),
        };
        let start = Instant::now();
        let mut config = init.clone();
        let result = config.apply_overrides(&sampled).and_then(|_| evaluate(&folds, &config));
        let elapsed = start.elapsed().as_secs_f64();
        let trial = match result {
            Ok(scores) => {
                let mean = scores.iter().sum::<f64>() / scores.len() as f64;
                let score = if mean.is_finite() { mean } else { f64::INFINITY };
                Trial::new(sampled, score, scores, elapsed, None)
            }
            Err(e) => Trial::new(sampled, f64::INFINITY, Vec::new(), elapsed, Some(e.to_string())),
        };
        history.push(trial);
    }
    let best = history.best().map(|t| t.config.clone()).unwrap_or_default();
    let mut best_config = init.clone();
    best_config.apply_overrides(&best)?;
    Ok(TuneOutcome {
        best,
        best_config,
        history,
        inner_folds: plan,
    })
}
