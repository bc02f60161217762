use std::path::Path;

use boostbench::bench::{emit_report, run_experiment, summary_table, ExperimentConfig, ReportFormat};

fn write_dataset(dir: &Path) {
    let mut csv = String::from("a,b,shade,label\n");
    for i in 0..60 {
        let shade = ["light", "dark", "mid", ""][i % 4];
        let a = if i % 13 == 0 { String::new() } else { ((i * 7) % 10).to_string() };
        csv += &format!("{a},{},{shade},{}\n", (i * 3) % 17, ["yes", "no"][usize::from((i * 7) % 10 + (i * 3) % 17 > 12)]);
    }
    std::fs::write(dir.join("small.csv"), csv).unwrap();
}

fn config(dir: &Path) -> ExperimentConfig {
    write_dataset(dir);
    let text = r#"{
        "datasets": [
            {"name": "small", "path": "small.csv",
             "schema": {"label": "label", "columns": {"shade": "categorical"}},
             "overrides": {"n_estimators": 8}},
            {"name": "absent", "path": "absent.csv", "schema": {"label": "label"}}
        ],
        "models": [{"preset": "xgb"}, {"preset": "cat", "name": "oblivious"}],
        "regimes": [{"method": "none"}, {"method": "tpe", "n_iter": 3}, {"method": "random", "n_iter": 2}],
        "outer_k": 3, "inner_k": 2, "seed": 11, "threads": 2
    }"#;
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    ExperimentConfig::load(&path).unwrap()
}

#[test]
fn small_run_is_complete_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path());
    let a = run_experiment(&cfg).unwrap();
    // The absent dataset fails as whole cells; everything else completes.
    assert_eq!(a.errors.len(), 2 * 3);
    assert!(a.errors.iter().all(|e| e.dataset == "absent" && e.fold.is_none()));
    assert_eq!(a.folds.len(), 2 * 3 * 3);
    for rec in &a.folds {
        match rec.regime.as_str() {
            "none" => assert_eq!((rec.tune_time_s, rec.n_trials), (0.0, 0)),
            "tpe" => assert_eq!(rec.n_trials, 3),
            _ => assert_eq!(rec.n_trials, 2),
        }
    }

    let mut single = cfg.clone();
    single.threads = Some(1);
    let b = run_experiment(&single).unwrap();
    let strip = |r: &boostbench::bench::ExperimentReport| {
        r.folds.iter().map(|f| (f.dataset.clone(), f.model.clone(), f.regime.clone(), f.fold, f.scores.clone(), f.best.clone())).collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));

    let out = dir.path().join("out");
    emit_report(&a, &out, &[ReportFormat::Csv, ReportFormat::Md]).unwrap();
    // Both datasets appear in the summary; the absent one with empty cells.
    assert_eq!(summary_table(&a).rows.len(), 2 * 2 * 3);
    let errors = std::fs::read_to_string(out.join("errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 1 + 6);
    assert_eq!(std::fs::read_dir(out.join("folds")).unwrap().count(), 2 * 3);
}

#[test]
fn unwritable_output_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.datasets.truncate(1);
    cfg.regimes.truncate(1);
    let report = run_experiment(&cfg).unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    assert!(emit_report(&report, &blocker.join("sub"), &[ReportFormat::Csv]).is_err());
}
