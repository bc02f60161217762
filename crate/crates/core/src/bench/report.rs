use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{ExperimentReport, FoldRecord};
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::stats::{friedman_test, nemenyi_cd, wilcoxon_signed_rank, Alternative, ScoreMatrix};

/// Significance level of the rank table.
pub const RANK_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// The CSV tables and per-cell fold plans.
    Csv,
    /// `digest.md`.
    Md,
    /// `report.json`, which `report` can re-render from.
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "md" => Ok(ReportFormat::Md),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Parameter(format!("unknown report format '{s}'"))),
        }
    }
}

/// A rectangular table of formatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|h| h.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Report(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Report(e.to_string()))
    }

    fn to_markdown(&self) -> String {
        let mut s = format!("| {} |\n", self.header.join(" | "));
        s += &format!("|{}\n", "---|".repeat(self.header.len()));
        for row in &self.rows {
            s += &format!("| {} |\n", row.join(" | "));
        }
        s
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Sample mean and standard deviation (`n - 1` denominator).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Relative change of `tuned` over `baseline` in percent; `None` when the
/// baseline is zero or either value is undefined.
pub fn pct_diff(tuned: f64, baseline: f64) -> Option<f64> {
    let d = 100.0 * (tuned - baseline) / baseline;
    (baseline != 0.0 && d.is_finite()).then_some(d)
}

struct CellSummary {
    n: usize,
    stats: BTreeMap<Metric, (f64, f64)>,
    fit_time_s: f64,
    tune_time_s: f64,
    trials: usize,
}

fn summarize(records: &[&FoldRecord], metrics: &[Metric]) -> CellSummary {
    let stats = metrics
        .iter()
        .map(|&m| {
            let v: Vec<f64> = records.iter().filter_map(|r| r.scores.get(&m).copied()).collect();
            (m, mean_sd(&v))
        })
        .collect();
    CellSummary {
        n: records.len(),
        stats,
        fit_time_s: records.iter().map(|r| r.fit_time_s).sum(),
        tune_time_s: records.iter().map(|r| r.tune_time_s).sum(),
        trials: records.iter().map(|r| r.n_trials).sum(),
    }
}

fn cells(report: &ExperimentReport) -> impl Iterator<Item = (&str, &str, &str)> {
    report.datasets.iter().flat_map(move |d| {
        report.models.iter().flat_map(move |m| {
            report
                .regimes
                .iter()
                .map(move |r| (d.as_str(), m.as_str(), r.as_str()))
        })
    })
}

/// `dataset, model, regime, fold, <metric>..., fit_time_s, tune_time_s, n_trials`
pub fn fold_table(report: &ExperimentReport) -> Table {
    let mut header = vec!["dataset", "model", "regime", "fold"];
    header.extend(report.metrics.iter().map(|m| m.name()));
    header.extend(["fit_time_s", "tune_time_s", "n_trials"]);
    let mut t = Table::new(&header);
    for (d, m, r) in cells(report) {
        for rec in report.cell(d, m, r) {
            let mut row = vec![d.to_string(), m.to_string(), r.to_string(), rec.fold.to_string()];
            row.extend(report.metrics.iter().map(|k| opt(rec.scores.get(k).copied())));
            row.extend([num(rec.fit_time_s), num(rec.tune_time_s), rec.n_trials.to_string()]);
            t.rows.push(row);
        }
    }
    t
}

/// `dataset, model, regime, n_folds, <metric>_mean, <metric>_sd, ...,
/// fit_time_s, tune_time_s, n_trials`; times and trials are totals over
/// the outer folds.
pub fn summary_table(report: &ExperimentReport) -> Table {
    let mut header: Vec<String> = ["dataset", "model", "regime", "n_folds"].map(String::from).to_vec();
    for m in &report.metrics {
        header.push(format!("{}_mean", m.name()));
        header.push(format!("{}_sd", m.name()));
    }
    header.extend(["fit_time_s", "tune_time_s", "n_trials"].map(String::from));
    let mut t = Table::new(&header);
    for (d, m, r) in cells(report) {
        let s = summarize(&report.cell(d, m, r), &report.metrics);
        let mut row = vec![d.to_string(), m.to_string(), r.to_string(), s.n.to_string()];
        for k in &report.metrics {
            let (mean, sd) = s.stats[k];
            row.extend([num(mean), num(sd)]);
        }
        row.extend([num(s.fit_time_s), num(s.tune_time_s), s.trials.to_string()]);
        t.rows.push(row);
    }
    t
}

/// The regime other regimes are compared against: `none` when present,
/// otherwise the first.
pub fn baseline_regime(report: &ExperimentReport) -> Option<&str> {
    report
        .regimes
        .iter()
        .find(|r| *r == "none")
        .or_else(|| report.regimes.first())
        .map(String::as_str)
}

/// `dataset, model, regime, baseline, metric, baseline_mean, mean,
/// pct_diff_mean, baseline_sd, sd, pct_diff_sd`
pub fn pct_diff_table(report: &ExperimentReport) -> Table {
    let mut t = Table::new(&[
        "dataset",
        "model",
        "regime",
        "baseline",
        "metric",
        "baseline_mean",
        "mean",
        "pct_diff_mean",
        "baseline_sd",
        "sd",
        "pct_diff_sd",
    ]);
    let Some(base) = baseline_regime(report) else {
        return t;
    };
    for (d, m, r) in cells(report) {
        if r == base {
            continue;
        }
        let b = summarize(&report.cell(d, m, base), &report.metrics);
        let s = summarize(&report.cell(d, m, r), &report.metrics);
        for k in &report.metrics {
            let (bm, bs) = b.stats[k];
            let (tm, ts) = s.stats[k];
            t.rows.push(vec![
                d.to_string(),
                m.to_string(),
                r.to_string(),
                base.to_string(),
                k.name().to_string(),
                num(bm),
                num(tm),
                opt(pct_diff(tm, bm)),
                num(bs),
                num(ts),
                opt(pct_diff(ts, bs)),
            ]);
        }
    }
    t
}

/// Label of a (model, regime) entry in the rank table.
pub fn entry_label(model: &str, regime: &str) -> String {
    format!("{model}/{regime}")
}

/// Fold-mean score matrix of one metric: datasets by (model, regime)
/// entries. Entries without scores on every dataset are left out.
pub fn score_matrix(report: &ExperimentReport, metric: Metric) -> Result<ScoreMatrix> {
    let mut entries = Vec::new();
    let mut columns = Vec::new();
    for m in &report.models {
        for r in &report.regimes {
            let col: Vec<f64> = report
                .datasets
                .iter()
                .map(|d| summarize(&report.cell(d, m, r), &[metric]).stats[&metric].0)
                .collect();
            if col.iter().all(|v| v.is_finite()) {
                entries.push(entry_label(m, r));
                columns.push(col);
            }
        }
    }
    let values = (0..report.datasets.len())
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();
    ScoreMatrix::new(report.datasets.clone(), entries, values)
}

/// `metric, entry, model, regime, mean_rank, k, n_datasets, cd, alpha,
/// friedman_chi2, friedman_p, iman_davenport_f, iman_davenport_p,
/// significantly_different_from`
///
/// Higher mean ranks are better. Two entries are flagged as different when
/// the Friedman chi-square test rejects at `alpha` and their mean ranks are
/// more than the critical difference apart. Metrics for which no matrix can
/// be formed (fewer than 2 datasets or entries) are skipped.
pub fn rank_table(report: &ExperimentReport, alpha: f64) -> Table {
    let mut t = Table::new(&[
        "metric",
        "entry",
        "model",
        "regime",
        "mean_rank",
        "k",
        "n_datasets",
        "cd",
        "alpha",
        "friedman_chi2",
        "friedman_p",
        "iman_davenport_f",
        "iman_davenport_p",
        "significantly_different_from",
    ]);
    for &metric in &report.metrics {
        let Ok(matrix) = score_matrix(report, metric) else {
            continue;
        };
        let k = matrix.models().len();
        let n = matrix.datasets().len();
        let f = friedman_test(&matrix, metric.higher_is_better());
        let cd = nemenyi_cd(k, n, alpha).ok();
        let rejects = f.chi_square.p_value < alpha;
        for (i, entry) in matrix.models().iter().enumerate() {
            let (model, regime) = entry.split_once('/').unwrap_or((entry, ""));
            let differs: Vec<&str> = match cd {
                Some(cd) if rejects => matrix
                    .models()
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| (f.mean_ranks[i] - f.mean_ranks[j]).abs() > cd)
                    .map(|(_, e)| e.as_str())
                    .collect(),
                _ => Vec::new(),
            };
            t.rows.push(vec![
                metric.name().to_string(),
                entry.clone(),
                model.to_string(),
                regime.to_string(),
                num(f.mean_ranks[i]),
                k.to_string(),
                n.to_string(),
                opt(cd),
                num(alpha),
                num(f.chi_square.statistic),
                num(f.chi_square.p_value),
                opt(f.iman_davenport.as_ref().map(|r| r.statistic)),
                opt(f.iman_davenport.as_ref().map(|r| r.p_value)),
                differs.join(";"),
            ]);
        }
    }
    t
}

/// `dataset, model, metric, regime_a, regime_b, n, statistic, p_value,
/// method`: two-sided Wilcoxon signed-rank tests between regimes on the
/// outer fold scores both regimes have.
pub fn pairwise_table(report: &ExperimentReport) -> Table {
    let mut t = Table::new(&[
        "dataset", "model", "metric", "regime_a", "regime_b", "n", "statistic", "p_value", "method",
    ]);
    for d in &report.datasets {
        for m in &report.models {
            let by_regime: Vec<BTreeMap<usize, &FoldRecord>> = report
                .regimes
                .iter()
                .map(|r| report.cell(d, m, r).into_iter().map(|rec| (rec.fold, rec)).collect())
                .collect();
            for &metric in &report.metrics {
                for a in 0..report.regimes.len() {
                    for b in a + 1..report.regimes.len() {
                        let (xs, ys): (Vec<f64>, Vec<f64>) = by_regime[a]
                            .iter()
                            .filter_map(|(fold, ra)| {
                                let rb = by_regime[b].get(fold)?;
                                Some((*ra.scores.get(&metric)?, *rb.scores.get(&metric)?))
                            })
                            .unzip();
                        if xs.is_empty() {
                            continue;
                        }
                        let Ok(w) = wilcoxon_signed_rank(&xs, &ys, Alternative::TwoSided) else {
                            continue;
                        };
                        t.rows.push(vec![
                            d.clone(),
                            m.clone(),
                            metric.name().to_string(),
                            report.regimes[a].clone(),
                            report.regimes[b].clone(),
                            xs.len().to_string(),
                            num(w.statistic),
                            num(w.p_value),
                            w.method,
                        ]);
                    }
                }
            }
        }
    }
    t
}

/// `dataset, model, regime, fold, message`; `fold` is empty for failures of
/// a whole cell.
pub fn error_table(report: &ExperimentReport) -> Table {
    let mut t = Table::new(&["dataset", "model", "regime", "fold", "message"]);
    for e in &report.errors {
        t.rows.push(vec![
            e.dataset.clone(),
            e.model.clone(),
            e.regime.clone(),
            e.fold.map(|f| f.to_string()).unwrap_or_default(),
            e.message.clone(),
        ]);
    }
    t
}

fn short(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        "-".into()
    }
}

/// Markdown overview: per-metric means, regime differences, rank tables and
/// failures.
pub fn digest(report: &ExperimentReport) -> String {
    let mut s = String::from("# Benchmark digest\n\n");
    let _ = writeln!(
        s,
        "{} datasets, {} models, {} regimes, {}-fold outer cross-validation, seed {}.",
        report.datasets.len(),
        report.models.len(),
        report.regimes.len(),
        report.outer_k,
        report.seed
    );
    let expected = report.datasets.len() * report.models.len() * report.regimes.len() * report.outer_k;
    let _ = writeln!(
        s,
        "{} of {} fold evaluations completed, {} failures recorded, {:.1} s wall clock.\n",
        report.folds.len(),
        expected,
        report.errors.len(),
        report.elapsed_s
    );

    for &metric in &report.metrics {
        let _ = writeln!(s, "## {}\n", metric.name());
        let mut header = vec!["dataset".to_string(), "model".to_string()];
        header.extend(report.regimes.iter().cloned());
        let mut t = Table::new(&header);
        for d in &report.datasets {
            for m in &report.models {
                let mut row = vec![d.clone(), m.clone()];
                for r in &report.regimes {
                    let (mean, sd) = summarize(&report.cell(d, m, r), &[metric]).stats[&metric];
                    row.push(format!("{} ± {}", short(mean), short(sd)));
                }
                t.rows.push(row);
            }
        }
        s += &t.to_markdown();
        s.push('\n');
    }

    let base = baseline_regime(report).unwrap_or("none");
    let _ = writeln!(s, "## Percentage difference of means against `{base}`\n");
    let mut header = vec!["dataset".to_string(), "model".to_string(), "regime".to_string()];
    header.extend(report.metrics.iter().map(|m| m.name().to_string()));
    let mut t = Table::new(&header);
    let pct = pct_diff_table(report);
    for chunk in pct.rows.chunks(report.metrics.len().max(1)) {
        let mut row = chunk[0][..3].to_vec();
        row.extend(chunk.iter().map(|r| r[7].parse::<f64>().map(|v| format!("{v:+.2}%")).unwrap_or("-".into())));
        t.rows.push(row);
    }
    s += &t.to_markdown();
    s.push('\n');

    let ranks = rank_table(report, RANK_ALPHA);
    let _ = writeln!(s, "## Mean ranks (higher is better)\n");
    if ranks.rows.is_empty() {
        s += "Ranking needs at least two datasets and two complete entries.\n\n";
    }
    for &metric in &report.metrics {
        let rows: Vec<&Vec<String>> = ranks.rows.iter().filter(|r| r[0] == metric.name()).collect();
        let Some(first) = rows.first() else {
            continue;
        };
        let _ = writeln!(
            s,
            "### {}\n\nFriedman chi-square {} (p = {}), critical difference {} at alpha {}.\n",
            metric.name(),
            first[9],
            first[10],
            if first[7].is_empty() { "n/a" } else { &first[7] },
            first[8]
        );
        let mut sorted = rows.clone();
        sorted.sort_by(|a, b| {
            let x: f64 = a[4].parse().unwrap_or(f64::NAN);
            let y: f64 = b[4].parse().unwrap_or(f64::NAN);
            y.total_cmp(&x)
        });
        let mut t = Table::new(&["entry", "mean rank", "significantly different from"]);
        for r in sorted {
            t.rows.push(vec![r[1].clone(), r[4].clone(), r[13].replace(';', ", ")]);
        }
        s += &t.to_markdown();
        s.push('\n');
    }

    if !report.errors.is_empty() {
        s += "## Failures\n\n";
        s += &error_table(report).to_markdown();
    }
    s
}

/// File name of the fold plan of one cell.
pub fn plan_file_name(dataset: &str, model: &str, regime: &str) -> String {
    format!("{dataset}__{model}__{regime}.json")
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

/// Writes the report into `dir` and returns the paths written.
///
/// - csv: `folds.csv`, `summary.csv`, `pct_diff.csv`, `ranks.csv`,
///   `pairwise.csv`, `errors.csv` and one `folds/<dataset>__<model>__<regime>.json`
///   fold plan per cell
/// - md: `digest.md`
/// - json: `report.json`
pub fn emit_report(report: &ExperimentReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    if report.models.is_empty() || report.datasets.is_empty() || report.regimes.is_empty() {
        return Err(Error::Report("nothing to report".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Csv => {
                write(dir, "folds.csv", &fold_table(report).to_csv()?, &mut written)?;
                write(dir, "summary.csv", &summary_table(report).to_csv()?, &mut written)?;
                write(dir, "pct_diff.csv", &pct_diff_table(report).to_csv()?, &mut written)?;
                write(dir, "ranks.csv", &rank_table(report, RANK_ALPHA).to_csv()?, &mut written)?;
                write(dir, "pairwise.csv", &pairwise_table(report).to_csv()?, &mut written)?;
                write(dir, "errors.csv", &error_table(report).to_csv()?, &mut written)?;
                let plans = dir.join("folds");
                std::fs::create_dir_all(&plans).map_err(|e| Error::io(&plans, e))?;
                for p in &report.plans {
                    let name = plan_file_name(&p.dataset, &p.model, &p.regime);
                    write(&plans, &name, &p.plan.to_json()?, &mut written)?;
                }
            }
            ReportFormat::Md => write(dir, "digest.md", &digest(report), &mut written)?,
            ReportFormat::Json => write(dir, "report.json", &report.to_json()?, &mut written)?,
        }
    }
    Ok(written)
}
