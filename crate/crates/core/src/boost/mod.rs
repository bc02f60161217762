//! Gradient boosting with binomial log loss.
//!
//! Binary problems train one chain of trees on labels mapped to {-1, +1};
//! problems with more classes train one such chain per class against the
//! rest. Each iteration fits a tree to the current gradient pairs on a
//! sampled subset of rows and features, prunes it, sets its leaf values and
//! adds it to the margins with shrinkage `learning_rate`.

mod logloss;
mod sampling;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed::{self, Rng};
use crate::tree::{gamma_prune, leaf_weight, GradientPair, NodeKind, RegressionTree, TreeBuilder, TreeParams};

pub use logloss::{
    init_f0, leaf_gamma_logloss, positive_probability, pseudo_residual, pseudo_residuals,
    residual_to_gradient, row_loss, MARGIN_CLAMP,
};
pub use sampling::{goss_sample, subsample_rows, subsample_features};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GossParams {
    pub top_rate: f64,
    pub other_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BoostConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    /// Row fraction drawn per tree; ignored when `goss` is set.
    pub subsample: f64,
    /// Feature fraction drawn per tree.
    pub colsample: f64,
    pub goss: Option<GossParams>,
    /// Newton passes used to set leaf values (1 = a single step).
    pub leaf_estimation_iterations: usize,
    pub tree: TreeParams,
    pub seed: u64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.1,
            subsample: 1.0,
            colsample: 1.0,
            goss: None,
            leaf_estimation_iterations: 1,
            tree: TreeParams::default(),
            seed: 0,
        }
    }
}

fn fraction_ok(x: f64) -> bool {
    x > 0.0 && x <= 1.0
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::Parameter(format!(
                "learning_rate must lie in [0, 1], got {}",
                self.learning_rate
            )));
        }
        if !fraction_ok(self.subsample) {
            return Err(Error::Parameter(format!("subsample must lie in (0, 1], got {}", self.subsample)));
        }
        if !fraction_ok(self.colsample) {
            return Err(Error::Parameter(format!("colsample must lie in (0, 1], got {}", self.colsample)));
        }
        if let Some(g) = self.goss {
            if !(g.top_rate >= 0.0 && g.other_rate > 0.0 && g.top_rate + g.other_rate <= 1.0 + 1e-12) {
                return Err(Error::Parameter(format!(
                    "GOSS needs top_rate >= 0, other_rate > 0 and top_rate + other_rate <= 1 (got {} and {})",
                    g.top_rate, g.other_rate
                )));
            }
        }
        if self.leaf_estimation_iterations == 0 {
            return Err(Error::Parameter("leaf_estimation_iterations must be at least 1".into()));
        }
        self.tree.validate()
    }

    /// Applies named numeric overrides, as produced by a tuner.
    ///
    /// Integer-valued names are rounded. Unknown names are an error.
    pub fn apply_overrides(&mut self, values: &BTreeMap<String, f64>) -> Result<()> {
        for (name, &v) in values {
            let int = || -> Result<usize> {
                if v.is_finite() && v >= 0.0 {
                    Ok(v.round() as usize)
                } else {
                    Err(Error::Parameter(format!("{name} must be a non-negative integer, got {v}")))
                }
            };
            match name.as_str() {
                "n_estimators" => self.n_estimators = int()?,
                "learning_rate" => self.learning_rate = v,
                "subsample" => self.subsample = v,
                "colsample" | "colsample_bytree" => self.colsample = v,
                "colsample_bynode" | "colsample_bylevel" => self.tree.colsample_bynode = v,
                "top_rate" => self.goss_mut().top_rate = v,
                "other_rate" => self.goss_mut().other_rate = v,
                "leaf_estimation_iterations" => self.leaf_estimation_iterations = int()?,
                "max_depth" => self.tree.max_depth = int()?,
                "num_leaves" => self.tree.num_leaves = int()?,
                "min_samples_split" => self.tree.min_samples_split = int()?,
                "max_bins" => self.tree.max_bins = int()?,
                "gamma" => self.tree.gamma = v,
                "lambda" | "reg_lambda" | "l2_leaf_reg" => self.tree.lambda_l2 = v,
                "alpha" | "reg_alpha" => self.tree.alpha_l1 = v,
                _ => return Err(Error::Parameter(format!("unknown hyperparameter '{name}'"))),
            }
        }
        Ok(())
    }

    fn goss_mut(&mut self) -> &mut GossParams {
        self.goss.get_or_insert(GossParams {
            top_rate: 0.2,
            other_rate: 0.1,
        })
    }
}

/// One additive chain: an initial margin and its trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub f0: f64,
    pub trees: Vec<RegressionTree>,
}

const FORMAT: &str = "boostbench-ensemble";
const VERSION: u32 = 1;

/// A fitted ensemble. Binary problems have one chain scoring the second
/// class; otherwise there is one chain per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    format: String,
    version: u32,
    nu: f64,
    classes: Vec<String>,
    features: Vec<String>,
    chains: Vec<Chain>,
}

impl BoostedEnsemble {
    pub fn learning_rate(&self) -> f64 {
        self.nu
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.features.len() {
            return Err(Error::Prediction(format!(
                "row has {} features, the model was trained on {}",
                row.len(),
                self.features.len()
            )));
        }
        Ok(())
    }

    fn check_dataset(&self, data: &Dataset) -> Result<()> {
        if data.n_features() != self.features.len() {
            return Err(Error::Prediction(format!(
                "dataset has {} features, the model was trained on {}",
                data.n_features(),
                self.features.len()
            )));
        }
        if let Some((i, meta)) = data
            .schema()
            .iter()
            .enumerate()
            .find(|(i, m)| m.name != self.features[*i])
        {
            return Err(Error::Prediction(format!(
                "feature {i} is '{}', the model expects '{}'",
                meta.name, self.features[i]
            )));
        }
        Ok(())
    }

    fn margins_with(&self, leaf: impl Fn(&RegressionTree) -> f64) -> Vec<f64> {
        self.chains
            .iter()
            .map(|c| c.f0 + self.nu * c.trees.iter().map(&leaf).sum::<f64>())
            .collect()
    }

    /// Per-chain margins `F_M(x)` for a materialized row (`NaN` = missing).
    pub fn predict_margin(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        Ok(self.margins_with(|t| t.predict(row)))
    }

    pub fn predict_proba(&self, row: &[f64]) -> Result<Vec<f64>> {
        Ok(self.proba_from_margins(&self.predict_margin(row)?))
    }

    pub fn predict_label(&self, row: &[f64]) -> Result<usize> {
        Ok(self.label_from_margins(&self.predict_margin(row)?))
    }

    /// Margins for every row of `data`, one vector per row.
    pub fn predict_margin_dataset(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        self.check_dataset(data)?;
        Ok((0..data.n_rows())
            .map(|r| self.margins_with(|t| t.predict_in(data, r)))
            .collect())
    }

    /// Class probabilities for every row of `data`.
    pub fn predict_proba_dataset(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .predict_margin_dataset(data)?
            .iter()
            .map(|m| self.proba_from_margins(m))
            .collect())
    }

    pub fn predict_label_dataset(&self, data: &Dataset) -> Result<Vec<u32>> {
        Ok(self
            .predict_margin_dataset(data)?
            .iter()
            .map(|m| self.label_from_margins(m) as u32)
            .collect())
    }

    /// Binary: `[p-, p+]`. Otherwise one-vs-rest probabilities divided by
    /// their sum.
    pub fn proba_from_margins(&self, margins: &[f64]) -> Vec<f64> {
        if self.chains.len() == 1 {
            let p = positive_probability(margins[0]);
            return vec![1.0 - p, p];
        }
        let raw: Vec<f64> = margins.iter().map(|&f| positive_probability(f)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|p| p / total).collect()
    }

    /// Binary: the positive class iff `p+ > p-`. Otherwise the argmax of the
    /// raw one-vs-rest probabilities, lowest class on ties.
    pub fn label_from_margins(&self, margins: &[f64]) -> usize {
        if self.chains.len() == 1 {
            let p = positive_probability(margins[0]);
            return usize::from(p > 1.0 - p);
        }
        let mut best = 0;
        let mut best_p = f64::NEG_INFINITY;
        for (c, &f) in margins.iter().enumerate() {
            let p = positive_probability(f);
            if p > best_p {
                best = c;
                best_p = p;
            }
        }
        best
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let e: Self = serde_json::from_str(text)?;
        if e.format != FORMAT || e.version != VERSION {
            return Err(Error::Schema(format!(
                "unsupported ensemble document '{}' version {}",
                e.format, e.version
            )));
        }
        if e.chains.is_empty() || (e.chains.len() != 1 && e.chains.len() != e.classes.len()) {
            return Err(Error::Schema("chain count does not match the class list".into()));
        }
        for chain in &e.chains {
            for t in &chain.trees {
                for n in t.nodes() {
                    if let NodeKind::Split { feature, .. } = n.kind {
                        if feature as usize >= e.features.len() {
                            return Err(Error::Schema("tree feature index out of range".into()));
                        }
                    }
                }
            }
        }
        Ok(e)
    }
}

/// Fits an ensemble on every row of `data`.
pub fn fit(data: &Dataset, config: &BoostConfig) -> Result<BoostedEnsemble> {
    fit_with_trace(data, config).map(|(e, _)| e)
}

/// Like [`fit`], also returning the mean training loss before the first
/// tree and after each tree, summed over chains.
pub fn fit_with_trace(data: &Dataset, config: &BoostConfig) -> Result<(BoostedEnsemble, Vec<f64>)> {
    config.validate()?;
    if data.n_classes() < 2 {
        return Err(Error::Degenerate("at least 2 classes are required".into()));
    }
    let builder = TreeBuilder::new(data, &config.tree)?;
    let n_chains = if data.n_classes() == 2 { 1 } else { data.n_classes() };
    let mut trace = vec![0.0; config.n_estimators + 1];
    let mut chains = Vec::with_capacity(n_chains);
    for c in 0..n_chains {
        let target = if n_chains == 1 { 1 } else { c as u32 };
        let labels: Vec<f64> = data
            .labels()
            .iter()
            .map(|&l| if l == target { 1.0 } else { -1.0 })
            .collect();
        let (chain, losses) = fit_chain(data, &builder, &labels, config, c as u64)?;
        for (t, l) in trace.iter_mut().zip(losses) {
            *t += l;
        }
        chains.push(chain);
    }
    let ensemble = BoostedEnsemble {
        format: FORMAT.into(),
        version: VERSION,
        nu: config.learning_rate,
        classes: data.class_names().to_vec(),
        features: data.schema().iter().map(|m| m.name.clone()).collect(),
        chains,
    };
    Ok((ensemble, trace))
}

fn mean_loss(labels: &[f64], margins: &[f64]) -> f64 {
    labels
        .iter()
        .zip(margins)
        .map(|(&y, &f)| row_loss(y, f))
        .sum::<f64>()
        / labels.len() as f64
}

fn fit_chain(
    data: &Dataset,
    builder: &TreeBuilder<'_>,
    labels: &[f64],
    config: &BoostConfig,
    class: u64,
) -> Result<(Chain, Vec<f64>)> {
    let n = data.n_rows();
    let f0 = init_f0(labels)?;
    let mut margins = vec![f0; n];
    let mut losses = Vec::with_capacity(config.n_estimators + 1);
    losses.push(mean_loss(labels, &margins));
    let mut trees = Vec::with_capacity(config.n_estimators);
    let tp = &config.tree;
    let mut leaf_of = vec![0u32; n];

    for m in 0..config.n_estimators {
        let iter_seed = seed::derive_seed(config.seed, &[class, m as u64]);
        let mut rng: Rng = seed::rng_for(iter_seed, &[]);
        let residuals = pseudo_residuals(labels, &margins);

        let (rows, sample_weights) = match config.goss {
            Some(g) => {
                let gradients: Vec<f64> = residuals.iter().map(|r| -r).collect();
                let (rows, w) = goss_sample(&gradients, g.top_rate, g.other_rate, &mut rng)?;
                (rows, Some(w))
            }
            None => (subsample_rows(n, config.subsample, &mut rng), None),
        };
        let features = subsample_features(data.n_features(), config.colsample, &mut rng);

        let mut grads: Vec<GradientPair> = residuals
            .iter()
            .map(|&r| {
                let (g, h) = residual_to_gradient(r);
                GradientPair::new(g, h)
            })
            .collect();
        if let Some(w) = &sample_weights {
            for (&r, &wt) in rows.iter().zip(w) {
                let gp = grads[r as usize];
                grads[r as usize] = GradientPair::weighted(gp.g, gp.h, wt);
            }
        }

        let fitted = builder.fit(&grads, &rows, &features, iter_seed)?;
        let mut tree = if tp.gamma > 0.0 {
            gamma_prune(&fitted.tree, tp.gamma)
        } else {
            fitted.tree
        };

        for (r, slot) in leaf_of.iter_mut().enumerate() {
            *slot = tree.leaf_index_in(data, r) as u32;
        }
        set_leaf_values(&mut tree, &rows, &leaf_of, &residuals, &grads, labels, &margins, config, sample_weights.is_some());

        for (r, f) in margins.iter_mut().enumerate() {
            if let NodeKind::Leaf { weight } = tree.nodes()[leaf_of[r] as usize].kind {
                *f += config.learning_rate * weight;
            }
        }
        losses.push(mean_loss(labels, &margins));
        trees.push(tree);
    }
    Ok((Chain { f0, trees }, losses))
}

/// Sets each leaf from the training rows that reach it: the log-loss
/// Newton value when unregularized and unweighted, the regularized leaf
/// weight otherwise, then any further Newton passes.
#[allow(clippy::too_many_arguments)]
fn set_leaf_values(
    tree: &mut RegressionTree,
    rows: &[u32],
    leaf_of: &[u32],
    residuals: &[f64],
    grads: &[GradientPair],
    labels: &[f64],
    margins: &[f64],
    config: &BoostConfig,
    weighted: bool,
) {
    let tp = &config.tree;
    let n_nodes = tree.nodes().len();
    let mut region: Vec<Vec<u32>> = vec![Vec::new(); n_nodes];
    for &r in rows {
        region[leaf_of[r as usize] as usize].push(r);
    }
    let plain = tp.lambda_l2 == 0.0 && tp.alpha_l1 == 0.0 && !weighted;
    let mut values = vec![0.0; n_nodes];
    for (node, members) in region.iter().enumerate() {
        if !tree.nodes()[node].is_leaf() || members.is_empty() {
            continue;
        }
        values[node] = if plain {
            let res: Vec<f64> = members.iter().map(|&r| residuals[r as usize]).collect();
            leaf_gamma_logloss(&res)
        } else {
            let (g, h) = members.iter().fold((0.0, 0.0), |(g, h), &r| {
                let p = grads[r as usize];
                (g + p.g_eff(), h + p.h_eff())
            });
            leaf_weight(g, h, tp.lambda_l2, tp.alpha_l1).unwrap_or(0.0)
        };
    }
    for _ in 1..config.leaf_estimation_iterations {
        for (node, members) in region.iter().enumerate() {
            if !tree.nodes()[node].is_leaf() || members.is_empty() {
                continue;
            }
            let w = values[node];
            let (g, h) = members.iter().fold((0.0, 0.0), |(g, h), &r| {
                let ri = r as usize;
                let (gi, hi) = residual_to_gradient(pseudo_residual(labels[ri], margins[ri] + w));
                let ws = grads[ri].w_sample;
                (g + ws * gi, h + ws * hi)
            });
            let step = leaf_weight(g + tp.lambda_l2 * w, h, tp.lambda_l2, tp.alpha_l1).unwrap_or(0.0);
            values[node] = w + step;
        }
    }
    for (node, v) in values.into_iter().enumerate() {
        if tree.nodes()[node].is_leaf() {
            tree.set_leaf_weight(node, v);
        }
    }
}
