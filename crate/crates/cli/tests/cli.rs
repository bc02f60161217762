use std::path::Path;
use std::process::{Command, Output};

fn boostbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boostbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

#[test]
fn cd_prints_critical_difference() {
    let out = boostbench(&["cd", "--k", "12", "--d", "12", "--alpha", "0.05"]);
    assert!(out.status.success());
    let cd = stdout_json(&out)["cd"].as_f64().unwrap();
    assert!((cd - 4.81).abs() < 0.01);
}

#[test]
fn bad_alpha_exits_nonzero_with_error_list() {
    let out = boostbench(&["cd", "--k", "4", "--d", "5", "--alpha", "0.2"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["errors"].as_array().unwrap()[0].as_str().unwrap().contains("alpha"));
}

fn scores_file(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("scores.csv");
    std::fs::write(
        &path,
        "dataset,a,b,c\nd1,0.9,0.8,0.7\nd2,0.95,0.85,0.6\nd3,0.7,0.65,0.5\nd4,0.88,0.87,0.86\n",
    )
    .unwrap();
    path
}

#[test]
fn compare_friedman_hand_case() {
    let dir = tempfile::tempdir().unwrap();
    let path = scores_file(dir.path());
    let out = boostbench(&["compare", path.to_str().unwrap(), "--test", "friedman"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert!((v["chi_square"]["statistic"].as_f64().unwrap() - 8.0).abs() < 1e-12);
    assert_eq!(v["models"][0]["mean_rank"].as_f64().unwrap(), 3.0);
}

#[test]
fn compare_wilcoxon_lists_every_pair() {
    let dir = tempfile::tempdir().unwrap();
    let path = scores_file(dir.path());
    let out = boostbench(&["compare", path.to_str().unwrap(), "--test", "wilcoxon"]);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["pairs"].as_array().unwrap().len(), 3);
}

fn tiny_config(dir: &Path) -> std::path::PathBuf {
    let mut csv = String::from("x1,x2,color,y\n");
    for i in 0..40 {
        let color = ["red", "green", "blue"][i % 3];
        csv += &format!("{},{},{color},{}\n", i % 7, (i * 5) % 11, u8::from(i % 7 + (i * 5) % 11 > 8));
    }
    std::fs::write(dir.join("tiny.csv"), csv).unwrap();
    let config = r#"{
        "datasets": [{"name": "tiny", "path": "tiny.csv",
                      "schema": {"label": "y", "columns": {"color": "categorical"}}}],
        "models": [{"preset": "gbm", "init": {"n_estimators": 5}}],
        "regimes": [{"method": "none"}, {"method": "random", "n_iter": 2}],
        "outer_k": 3, "inner_k": 2, "seed": 1, "output_dir": "out"
    }"#;
    let path = dir.join("config.json");
    std::fs::write(&path, config).unwrap();
    path
}

#[test]
fn run_then_rerender_report() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_boostbench"))
        .args(["run", config.to_str().unwrap()])
        .env("BOOSTBENCH_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let results = dir.path().join("out");
    for f in ["report.json", "folds.csv", "summary.csv", "ranks.csv", "digest.md"] {
        assert!(results.join(f).exists(), "{f}");
    }
    std::fs::remove_file(results.join("digest.md")).unwrap();
    let out = boostbench(&["report", results.to_str().unwrap(), "--format", "md"]);
    assert!(out.status.success());
    assert!(results.join("digest.md").exists());
}

#[test]
fn invalid_thread_cap_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let config = tiny_config(dir.path());
    let out = Command::new(env!("CARGO_BIN_EXE_boostbench"))
        .args(["run", config.to_str().unwrap()])
        .env("BOOSTBENCH_THREADS", "zero")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("BOOSTBENCH_THREADS"));
}

#[test]
fn missing_config_fails_cleanly() {
    let out = boostbench(&["run", "/nonexistent/config.json"]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(!err["errors"].as_array().unwrap().is_empty());
}
