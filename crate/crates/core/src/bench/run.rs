use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ModelSpec, Regime};
use crate::boost::{self, BoostConfig};
use crate::data::{encode_categoricals, load_csv, stratified_kfold, Dataset, FoldPlan, OrderedTargetEncoder};
use crate::error::{Error, Result};
use crate::metrics::{Metric, ScoreVector};
use crate::seed::{derive_seed, name_key};
use crate::tune::{tune, Config, SearchMethod, TuneOptions};

/// Scores of one outer fold of one (dataset, model, regime) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub dataset: String,
    pub model: String,
    pub regime: String,
    pub fold: usize,
    pub scores: BTreeMap<Metric, f64>,
    /// Encoding, fitting and scoring of the final model.
    pub fit_time_s: f64,
    pub tune_time_s: f64,
    pub n_trials: usize,
    /// Tuned values applied on top of the initial configuration.
    pub best: Config,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// A failure confined to one cell, or to one fold of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    pub dataset: String,
    pub model: String,
    pub regime: String,
    /// `None` when the whole cell failed.
    pub fold: Option<usize>,
    pub message: String,
}

/// The outer fold plan a cell was evaluated on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPlan {
    pub dataset: String,
    pub model: String,
    pub regime: String,
    pub plan: FoldPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metrics: Vec<Metric>,
    pub datasets: Vec<String>,
    pub models: Vec<String>,
    pub regimes: Vec<String>,
    pub outer_k: usize,
    pub seed: u64,
    pub folds: Vec<FoldRecord>,
    pub plans: Vec<CellPlan>,
    pub errors: Vec<CellError>,
    /// Wall-clock seconds for the whole run, loading excluded.
    pub elapsed_s: f64,
}

impl ExperimentReport {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Records of one cell in fold order.
    pub fn cell(&self, dataset: &str, model: &str, regime: &str) -> Vec<&FoldRecord> {
        let mut out: Vec<&FoldRecord> = self
            .folds
            .iter()
            .filter(|r| r.dataset == dataset && r.model == model && r.regime == regime)
            .collect();
        out.sort_by_key(|r| r.fold);
        out
    }
}

struct Prepared {
    name: String,
    data: Dataset,
    plan: FoldPlan,
}

struct Job<'a> {
    dataset: &'a Prepared,
    model: &'a ModelSpec,
    init: &'a BoostConfig,
    regime: Regime,
    fold: usize,
}

/// Seed of the outer fold plan of a dataset.
pub fn outer_seed(seed: u64, dataset: &str) -> u64 {
    derive_seed(seed, &[name_key("outer"), name_key(dataset)])
}

/// Runs the nested cross-validation protocol. Failures of single cells or
/// folds are recorded in the report and the run continues.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let model_names: Vec<String> = config.models.iter().map(|m| m.name().to_string()).collect();
    let regime_names: Vec<String> = config.regimes.iter().map(|r| r.name().to_string()).collect();
    let mut errors = Vec::new();
    let mut prepared = Vec::new();
    for spec in &config.datasets {
        let loaded = load_csv(&spec.path, &spec.schema).and_then(|data| {
            let plan = stratified_kfold(data.labels(), config.outer_k, outer_seed(config.seed, &spec.name))?;
            Ok((data, plan))
        });
        match loaded {
            Ok((data, plan)) => prepared.push(Prepared {
                name: spec.name.clone(),
                data,
                plan,
            }),
            Err(e) => {
                for m in &model_names {
                    for r in &regime_names {
                        errors.push(CellError {
                            dataset: spec.name.clone(),
                            model: m.clone(),
                            regime: r.clone(),
                            fold: None,
                            message: e.to_string(),
                        });
                    }
                }
            }
        }
    }

    let mut inits = Vec::new();
    for p in &prepared {
        let spec = config.datasets.iter().find(|d| d.name == p.name).expect("prepared from config");
        let mut per_model = Vec::new();
        for m in &config.models {
            let mut init = m.init_config()?;
            init.apply_overrides(&spec.overrides)?;
            init.validate()?;
            per_model.push(init);
        }
        inits.push((p, per_model));
    }

    let mut jobs = Vec::new();
    let mut plans = Vec::new();
    for (p, per_model) in &inits {
        for (model, init) in config.models.iter().zip(per_model) {
            for &regime in &config.regimes {
                plans.push(CellPlan {
                    dataset: p.name.clone(),
                    model: model.name().to_string(),
                    regime: regime.name().to_string(),
                    plan: p.plan.clone(),
                });
                for fold in 0..config.outer_k {
                    jobs.push(Job {
                        dataset: p,
                        model,
                        init,
                        regime,
                        fold,
                    });
                }
            }
        }
    }

    let start = Instant::now();
    let run_all = || -> Vec<Result<FoldRecord>> { jobs.par_iter().map(|j| run_job(config, j)).collect() };
    let results = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Parameter(format!("cannot start {n} worker threads: {e}")))?
            .install(run_all),
        None => run_all(),
    };
    let elapsed_s = start.elapsed().as_secs_f64();

    let mut folds = Vec::new();
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(r) => folds.push(r),
            Err(e) => errors.push(CellError {
                dataset: job.dataset.name.clone(),
                model: job.model.name().to_string(),
                regime: job.regime.name().to_string(),
                fold: Some(job.fold),
                message: e.to_string(),
            }),
        }
    }
    Ok(ExperimentReport {
        metrics: config.metrics.clone(),
        datasets: config.datasets.iter().map(|d| d.name.clone()).collect(),
        models: model_names,
        regimes: regime_names,
        outer_k: config.outer_k,
        seed: config.seed,
        folds,
        plans,
        errors,
        elapsed_s,
    })
}

fn run_job(config: &ExperimentConfig, job: &Job) -> Result<FoldRecord> {
    let d = name_key(&job.dataset.name);
    let m = name_key(job.model.name());
    let r = name_key(job.regime.name());
    let fold = job.fold as u64;
    let plan = &job.dataset.plan;
    let train = job.dataset.data.select_rows(&plan.train_rows(job.fold))?;
    let test = job.dataset.data.select_rows(&plan.test_rows(job.fold))?;
    let encoder = OrderedTargetEncoder::new(1.0, derive_seed(config.seed, &[name_key("encode"), d, fold]));

    let mut init = job.init.clone();
    init.seed = derive_seed(config.seed, &[name_key("fit"), d, m, fold]);

    let tune_start = Instant::now();
    let (final_config, best, n_trials) = match job.regime {
        Regime::None => (init, Config::new(), 0),
        Regime::Tpe { n_iter } | Regime::Random { n_iter } => {
            let method = match job.regime {
                Regime::Tpe { .. } => SearchMethod::Tpe,
                _ => SearchMethod::Random,
            };
            let options = TuneOptions {
                method,
                n_iter,
                inner_k: config.inner_k,
                seed: derive_seed(config.seed, &[name_key("tune"), d, m, r, fold]),
                tpe: config.tpe,
                encoder,
            };
            let out = tune(&train, &init, &job.model.search_space(), &options)?;
            (out.best_config, out.best, out.history.len())
        }
    };
    let tune_time_s = if n_trials == 0 {
        0.0
    } else {
        tune_start.elapsed().as_secs_f64()
    };

    let fit_start = Instant::now();
    let (train, test) = if train.has_categorical() {
        encode_categoricals(&train, &test, &encoder)?
    } else {
        (train, test)
    };
    let model = boost::fit(&train, &final_config)?;
    let proba = model.predict_proba_dataset(&test)?;
    let predicted = model.predict_label_dataset(&test)?;
    let fit_time_s = fit_start.elapsed().as_secs_f64();

    let vector = ScoreVector::new(test.labels().to_vec(), predicted, proba)?;
    let mut scores = BTreeMap::new();
    let mut warnings = Vec::new();
    for &metric in &config.metrics {
        let s = vector.score(metric)?;
        scores.insert(metric, s.value);
        warnings.extend(s.warnings.into_iter().map(|w| format!("{}: {w}", metric.name())));
    }
    Ok(FoldRecord {
        dataset: job.dataset.name.clone(),
        model: job.model.name().to_string(),
        regime: job.regime.name().to_string(),
        fold: job.fold,
        scores,
        fit_time_s,
        tune_time_s,
        n_trials,
        best,
        warnings,
    })
}
