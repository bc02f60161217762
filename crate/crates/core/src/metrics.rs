//! Classification metrics: accuracy, F1, ROC AUC and log loss.

use serde::{Deserialize, Serialize};

use crate::error::{check_lengths, Error, Result};

/// Clipping bound for probabilities in [`log_loss`].
pub const LOG_LOSS_EPS: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    /// Support-weighted F1.
    F1,
    /// Support-weighted one-vs-rest AUC.
    Auc,
    LogLoss,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Accuracy, Metric::F1, Metric::Auc, Metric::LogLoss];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::F1 => "f1",
            Metric::Auc => "auc",
            Metric::LogLoss => "log_loss",
        }
    }

    pub fn higher_is_better(self) -> bool {
        !matches!(self, Metric::LogLoss)
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F1Mode {
    Binary { positive: u32 },
    Weighted,
}

/// A metric value with any warnings raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub value: f64,
    pub warnings: Vec<String>,
}

fn check_nonempty(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::UndefinedMetric("no rows to score".into()));
    }
    Ok(())
}

pub fn accuracy(truth: &[u32], predicted: &[u32]) -> Result<f64> {
    check_lengths(truth.len(), predicted.len())?;
    check_nonempty(truth.len())?;
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / truth.len() as f64)
}

fn class_f1(truth: &[u32], predicted: &[u32], class: u32) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t == class, p == class) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    if tp == 0 {
        return 0.0;
    }
    let precision = tp as f64 / (tp + fp) as f64;
    let recall = tp as f64 / (tp + fn_) as f64;
    2.0 * precision * recall / (precision + recall)
}

pub fn f1(truth: &[u32], predicted: &[u32], mode: F1Mode) -> Result<f64> {
    check_lengths(truth.len(), predicted.len())?;
    check_nonempty(truth.len())?;
    match mode {
        F1Mode::Binary { positive } => Ok(class_f1(truth, predicted, positive)),
        F1Mode::Weighted => {
            let mut classes: Vec<u32> = truth.to_vec();
            classes.sort_unstable();
            classes.dedup();
            let total: f64 = classes
                .iter()
                .map(|&c| {
                    let support = truth.iter().filter(|&&t| t == c).count() as f64;
                    support * class_f1(truth, predicted, c)
                })
                .sum();
            Ok(total / truth.len() as f64)
        }
    }
}

/// Mann-Whitney AUC: the fraction of (positive, negative) pairs ordered
/// correctly by `scores`, ties counting one half.
pub fn auc_binary(truth: &[bool], scores: &[f64]) -> Result<f64> {
    check_lengths(truth.len(), scores.len())?;
    let n_pos = truth.iter().filter(|&&t| t).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "AUC needs both positive and negative rows".into(),
        ));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::UndefinedMetric("AUC scores contain NaN".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    // Per tie group: positives beat every earlier negative and half of the
    // negatives in their own group. Counting in integers keeps this exact.
    let mut twice_wins: u128 = 0;
    let mut negatives_below: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let pos = order[i..j].iter().filter(|&&r| truth[r]).count() as u128;
        let neg = (j - i) as u128 - pos;
        twice_wins += pos * (2 * negatives_below + neg);
        negatives_below += neg;
        i = j;
    }
    Ok(twice_wins as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

/// Support-weighted mean of one-vs-rest AUCs. Classes absent from `truth`
/// are skipped with a warning and the weights renormalized.
pub fn auc_weighted_ovr(truth: &[u32], scores: &[Vec<f64>]) -> Result<Scored> {
    check_lengths(truth.len(), scores.len())?;
    check_nonempty(truth.len())?;
    let n_classes = scores[0].len();
    if n_classes < 2 {
        return Err(Error::UndefinedMetric("AUC needs at least 2 classes".into()));
    }
    if let Some(row) = scores.iter().find(|r| r.len() != n_classes) {
        return Err(Error::LengthMismatch {
            expected: n_classes,
            actual: row.len(),
        });
    }
    let mut warnings = Vec::new();
    let mut total = 0.0;
    let mut weight = 0usize;
    for c in 0..n_classes as u32 {
        let indicator: Vec<bool> = truth.iter().map(|&t| t == c).collect();
        let support = indicator.iter().filter(|&&b| b).count();
        if support == 0 || support == truth.len() {
            warnings.push(format!("class {c} skipped in weighted AUC: support {support} of {}", truth.len()));
            continue;
        }
        let column: Vec<f64> = scores.iter().map(|r| r[c as usize]).collect();
        total += support as f64 * auc_binary(&indicator, &column)?;
        weight += support;
    }
    if weight == 0 {
        return Err(Error::UndefinedMetric("no class has both positive and negative rows".into()));
    }
    Ok(Scored {
        value: total / weight as f64,
        warnings,
    })
}

/// Mean negative log probability of the true class, clipped to
/// `[eps, 1 - eps]`.
pub fn log_loss(truth: &[u32], proba: &[Vec<f64>]) -> Result<f64> {
    check_lengths(truth.len(), proba.len())?;
    check_nonempty(truth.len())?;
    let mut total = 0.0;
    for (&t, row) in truth.iter().zip(proba) {
        let p = *row.get(t as usize).ok_or_else(|| {
            Error::UndefinedMetric(format!("class {t} has no probability column"))
        })?;
        total -= p.clamp(LOG_LOSS_EPS, 1.0 - LOG_LOSS_EPS).ln();
    }
    Ok(total / truth.len() as f64)
}

/// Predictions for one evaluation fold.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub truth: Vec<u32>,
    pub predicted: Vec<u32>,
    pub proba: Vec<Vec<f64>>,
}

impl ScoreVector {
    pub fn new(truth: Vec<u32>, predicted: Vec<u32>, proba: Vec<Vec<f64>>) -> Result<Self> {
        check_lengths(truth.len(), predicted.len())?;
        check_lengths(truth.len(), proba.len())?;
        for row in &proba {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(Error::UndefinedMetric(format!("invalid probability row {row:?}")));
            }
        }
        Ok(Self {
            truth,
            predicted,
            proba,
        })
    }

    pub fn score(&self, metric: Metric) -> Result<Scored> {
        let plain = |value| Scored {
            value,
            warnings: Vec::new(),
        };
        match metric {
            Metric::Accuracy => accuracy(&self.truth, &self.predicted).map(plain),
            Metric::F1 => f1(&self.truth, &self.predicted, F1Mode::Weighted).map(plain),
            Metric::Auc => auc_weighted_ovr(&self.truth, &self.proba),
            Metric::LogLoss => log_loss(&self.truth, &self.proba).map(plain),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_auc(truth: &[bool], scores: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut pairs = 0.0;
        for (i, &ti) in truth.iter().enumerate() {
            for (j, &tj) in truth.iter().enumerate() {
                if ti && !tj {
                    pairs += 1.0;
                    num += if scores[i] > scores[j] {
                        1.0
                    } else if scores[i] == scores[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        num / pairs
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1], &[1, 0]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.75);
        assert!(matches!(accuracy(&[0], &[0, 1]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1(&[1, 0, 1], &[1, 0, 1], F1Mode::Binary { positive: 1 }).unwrap(), 1.0);
        let v = f1(&[1, 1, 0, 0], &[1, 0, 0, 0], F1Mode::Binary { positive: 1 }).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f1(&[0, 1, 2, 2], &[0, 1, 2, 2], F1Mode::Weighted).unwrap(), 1.0);
        assert_eq!(f1(&[1, 1], &[0, 0], F1Mode::Binary { positive: 1 }).unwrap(), 0.0);
    }

    #[test]
    fn auc_examples() {
        assert_eq!(auc_binary(&[true, true, false, false], &[0.9, 0.8, 0.2, 0.1]).unwrap(), 1.0);
        assert_eq!(auc_binary(&[true, false, true, false], &[0.3; 4]).unwrap(), 0.5);
        let truth = [true, true, false, false];
        let scores = [0.9, 0.4, 0.5, 0.1];
        assert_eq!(brute_auc(&truth, &scores), 0.75);
        assert_eq!(auc_binary(&truth, &scores).unwrap(), 0.75);
        assert!(matches!(auc_binary(&[true, true], &[0.1, 0.2]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn weighted_auc_examples() {
        let truth = [1, 1, 0, 0];
        let p1 = [0.9, 0.4, 0.5, 0.1];
        let proba: Vec<Vec<f64>> = p1.iter().map(|&p| vec![1.0 - p, p]).collect();
        let w = auc_weighted_ovr(&truth, &proba).unwrap();
        assert_eq!(w.value, 0.75);
        assert!(w.warnings.is_empty());

        let truth = [0, 1, 2, 0, 1, 2];
        let perfect: Vec<Vec<f64>> = truth
            .iter()
            .map(|&t| (0..3).map(|c| if c == t { 1.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(auc_weighted_ovr(&truth, &perfect).unwrap().value, 1.0);

        let truth = [0u32, 2, 1, 0, 2, 0];
        let proba = vec![
            vec![0.5, 0.3, 0.2],
            vec![0.2, 0.2, 0.6],
            vec![0.4, 0.4, 0.2],
            vec![0.3, 0.3, 0.4],
            vec![0.1, 0.5, 0.4],
            vec![0.6, 0.2, 0.2],
        ];
        let mut expected = 0.0;
        for c in 0..3u32 {
            let ind: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            let col: Vec<f64> = proba.iter().map(|r| r[c as usize]).collect();
            let support = ind.iter().filter(|&&b| b).count() as f64;
            expected += support * brute_auc(&ind, &col);
        }
        expected /= 6.0;
        assert!((auc_weighted_ovr(&truth, &proba).unwrap().value - expected).abs() < 1e-15);
    }

    #[test]
    fn weighted_auc_skips_absent_classes() {
        let truth = [0, 1, 0, 1];
        let proba = vec![
            vec![0.6, 0.2, 0.2],
            vec![0.2, 0.6, 0.2],
            vec![0.5, 0.3, 0.2],
            vec![0.3, 0.5, 0.2],
        ];
        let w = auc_weighted_ovr(&truth, &proba).unwrap();
        assert_eq!(w.value, 1.0);
        assert_eq!(w.warnings.len(), 1);
    }

    #[test]
    fn log_loss_examples() {
        let half = vec![vec![0.5, 0.5]; 4];
        assert!((log_loss(&[0, 1, 0, 1], &half).unwrap() - 2f64.ln()).abs() < 1e-15);
        let perfect = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let v = log_loss(&[1, 0], &perfect).unwrap();
        assert!(v <= -(1.0 - 1e-15f64).ln() + 1e-30);
        let v = log_loss(&[1, 0], &[vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        assert!((v - 0.3670).abs() < 1e-4);
        assert!((v + (0.8f64.ln() + 0.6f64.ln()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn score_vector_validates_rows() {
        assert!(ScoreVector::new(vec![0], vec![0], vec![vec![0.7, 0.7]]).is_err());
        let sv = ScoreVector::new(vec![0, 1], vec![0, 1], vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        assert_eq!(sv.score(Metric::Accuracy).unwrap().value, 1.0);
        assert_eq!(sv.score(Metric::Auc).unwrap().value, 1.0);
        assert_eq!("log_loss".parse::<Metric>().unwrap(), Metric::LogLoss);
    }

    fn labelled_scores() -> impl Strategy<Value = (Vec<bool>, Vec<f64>)> {
        (2usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(any::<bool>(), n),
                proptest::collection::vec(prop_oneof![0.0f64..1.0, Just(0.5), Just(0.25)], n),
            )
        })
    }

    proptest! {
        #[test]
        fn auc_matches_pair_counting((truth, scores) in labelled_scores()) {
            prop_assume!(truth.iter().any(|&t| t) && truth.iter().any(|&t| !t));
            let fast = auc_binary(&truth, &scores).unwrap();
            prop_assert!((fast - brute_auc(&truth, &scores)).abs() < 1e-12);
            let flipped: Vec<bool> = truth.iter().map(|t| !t).collect();
            let sum = fast + auc_binary(&flipped, &scores).unwrap();
            prop_assert!((sum - 1.0).abs() < 1e-12);
            let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
            prop_assert_eq!(auc_binary(&truth, &warped).unwrap(), fast);
        }

        #[test]
        fn metrics_ignore_row_order(
            rows in proptest::collection::vec((0u32..3, 0u32..3, 0.0f64..1.0), 3..40),
            rot in 0usize..40,
        ) {
            let truth: Vec<u32> = rows.iter().map(|r| r.0).collect();
            let pred: Vec<u32> = rows.iter().map(|r| r.1).collect();
            let score: Vec<f64> = rows.iter().map(|r| r.2).collect();
            let k = rot % rows.len();
            let rotate = |v: &[u32]| { let mut v = v.to_vec(); v.rotate_left(k); v };
            let mut score_r = score.clone();
            score_r.rotate_left(k);
            prop_assert_eq!(accuracy(&truth, &pred).unwrap(), accuracy(&rotate(&truth), &rotate(&pred)).unwrap());
            let a = f1(&truth, &pred, F1Mode::Weighted).unwrap();
            let b = f1(&rotate(&truth), &rotate(&pred), F1Mode::Weighted).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            let ind: Vec<bool> = truth.iter().map(|&t| t == 0).collect();
            if ind.iter().any(|&b| b) && ind.iter().any(|&b| !b) {
                let mut ind_r = ind.clone();
                ind_r.rotate_left(k);
                prop_assert_eq!(auc_binary(&ind, &score).unwrap(), auc_binary(&ind_r, &score_r).unwrap());
            }
        }

        #[test]
        fn weighted_f1_on_balanced_support_is_the_macro_mean(
            preds in proptest::collection::vec(0u32..3, 12),
        ) {
            let truth: Vec<u32> = (0..12).map(|i| i % 3).collect();
            let weighted = f1(&truth, &preds, F1Mode::Weighted).unwrap();
            let macro_mean = (0..3).map(|c| f1(&truth, &preds, F1Mode::Binary { positive: c }).unwrap()).sum::<f64>() / 3.0;
            prop_assert!((weighted - macro_mean).abs() < 1e-12);
        }
    }
}
