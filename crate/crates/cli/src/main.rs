use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use boostbench::bench::{emit_report, run_experiment, ExperimentConfig, ExperimentReport, ReportFormat};
use boostbench::stats::{
    friedman_test, nemenyi_cd, nemenyi_significant, wilcoxon_signed_rank, Alternative, ScoreMatrix,
};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

/// Caps the number of worker threads used by `run`.
const THREADS_ENV: &str = "BOOSTBENCH_THREADS";

#[derive(Parser)]
#[command(name = "boostbench", version, about = "Gradient boosting benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write every report file.
    Run {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-render the report of a finished run from its report.json.
    Report {
        results_dir: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Nemenyi critical difference.
    Cd {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
    /// Compare the models of a score matrix CSV (first column the dataset,
    /// one column per model).
    Compare {
        scores: PathBuf,
        #[arg(long, value_enum)]
        test: Test,
        /// Lower scores are better (e.g. log loss).
        #[arg(long)]
        lower_is_better: bool,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

#[derive(Clone, Copy, ValueEnum)]
enum Test {
    Wilcoxon,
    Friedman,
}

fn thread_cap() -> Result<Option<usize>, String> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{THREADS_ENV} must be a positive integer, got '{v}'")),
        },
        Err(_) => Ok(None),
    }
}

fn run(config: PathBuf, out: Option<PathBuf>) -> Result<Value, Vec<String>> {
    let mut config = ExperimentConfig::load(&config).map_err(|e| vec![e.to_string()])?;
    if let Some(out) = out {
        config.output_dir = out;
    }
    if let Some(cap) = thread_cap().map_err(|e| vec![e])? {
        config.threads = Some(config.threads.map_or(cap, |t| t.min(cap)));
    }
    let report = run_experiment(&config).map_err(|e| vec![e.to_string()])?;
    emit_report(
        &report,
        &config.output_dir,
        &[ReportFormat::Json, ReportFormat::Csv, ReportFormat::Md],
    )
    .map_err(|e| vec![e.to_string()])?;
    if !report.errors.is_empty() {
        return Err(report
            .errors
            .iter()
            .map(|e| {
                let fold = e.fold.map(|f| format!(" fold {f}")).unwrap_or_default();
                format!("{}/{}/{}{fold}: {}", e.dataset, e.model, e.regime, e.message)
            })
            .collect());
    }
    Ok(json!({
        "output_dir": config.output_dir,
        "folds": report.folds.len(),
        "elapsed_s": report.elapsed_s,
    }))
}

fn report(dir: PathBuf, format: Format) -> Result<Value, Vec<String>> {
    let path = dir.join("report.json");
    let text = std::fs::read_to_string(&path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let report = ExperimentReport::from_json(&text).map_err(|e| vec![e.to_string()])?;
    let format = match format {
        Format::Csv => ReportFormat::Csv,
        Format::Md => ReportFormat::Md,
    };
    let files = emit_report(&report, &dir, &[format]).map_err(|e| vec![e.to_string()])?;
    Ok(json!({ "written": files }))
}

fn compare(path: PathBuf, test: Test, lower: bool, alpha: f64) -> Result<Value, Vec<String>> {
    let file = File::open(&path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let m = ScoreMatrix::from_csv(file).map_err(|e| vec![e.to_string()])?;
    match test {
        Test::Wilcoxon => {
            let mut pairs = Vec::new();
            for i in 0..m.models().len() {
                for j in i + 1..m.models().len() {
                    let r = wilcoxon_signed_rank(&m.column(i), &m.column(j), Alternative::TwoSided)
                        .map_err(|e| vec![e.to_string()])?;
                    pairs.push(json!({
                        "a": m.models()[i],
                        "b": m.models()[j],
                        "statistic": r.statistic,
                        "p_value": r.p_value,
                        "method": r.method,
                        "significant": r.significant(alpha),
                    }));
                }
            }
            Ok(json!({ "test": "wilcoxon", "alternative": "two-sided", "pairs": pairs }))
        }
        Test::Friedman => {
            let f = friedman_test(&m, !lower);
            let cd = nemenyi_cd(m.models().len(), m.datasets().len(), alpha).map_err(|e| vec![e.to_string()])?;
            let flags = nemenyi_significant(&f.mean_ranks, cd);
            let rejects = f.chi_square.significant(alpha);
            let models: Vec<Value> = m
                .models()
                .iter()
                .enumerate()
                .map(|(i, name)| {
                    let differs: Vec<&String> = m
                        .models()
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| rejects && flags[i][j])
                        .map(|(_, n)| n)
                        .collect();
                    json!({ "model": name, "mean_rank": f.mean_ranks[i], "significantly_different_from": differs })
                })
                .collect();
            Ok(json!({
                "test": "friedman",
                "chi_square": f.chi_square,
                "iman_davenport": f.iman_davenport,
                "cd": cd,
                "alpha": alpha,
                "models": models,
            }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => run(config, out),
        Command::Report { results_dir, format } => report(results_dir, format),
        Command::Cd { k, d, alpha } => nemenyi_cd(k, d, alpha)
            .map(|cd| json!({ "k": k, "d": d, "alpha": alpha, "cd": cd }))
            .map_err(|e| vec![e.to_string()]),
        Command::Compare {
            scores,
            test,
            lower_is_better,
            alpha,
        } => compare(scores, test, lower_is_better, alpha),
    };
    match result {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("JSON values serialize"));
            ExitCode::SUCCESS
        }
        Err(errors) => {
            eprintln!("{}", json!({ "errors": errors }));
            ExitCode::FAILURE
        }
    }
}
