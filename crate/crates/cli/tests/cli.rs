use std::path::Path;
use std::process::{Command, Output};

fn lncass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lncass")).args(args).output().unwrap()
}

fn ok(args: &[&str]) {
    let out = lncass(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&read(path)).unwrap()
}

#[test]
fn simulate_writes_data_truth_and_groups() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("sim");
    ok(&["simulate", "--case", "p20", "--seed", "3", "--out", out.to_str().unwrap()]);
    let data = read(&out.join("data.csv"));
    let lines: Vec<&str> = data.lines().collect();
    assert_eq!(lines.len(), 101);
    assert!(lines.iter().all(|l| l.split(',').count() == 21));
    assert!(lines[0].split(',').any(|h| h == "y"));

    let truth = json(&out.join("truth.json"));
    assert_eq!(truth["beta"].as_array().unwrap().len(), 20);
    let groups = json(&out.join("groups.json"));
    assert_eq!(groups[0], 1);
    assert_eq!(groups[19], 4);
    assert_eq!(json(&out.join("config.json"))["seed"], 3);
}

#[test]
fn failure_leaves_sentinel_and_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fit");
    let res = lncass(&["fit", "--data", "/nonexistent/data.csv", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    let msg = read(&out.join("FAILED"));
    assert!(msg.contains("nonexistent"), "{msg}");

    // a later successful run into the same directory clears it
    ok(&["simulate", "--out", out.to_str().unwrap()]);
    assert!(!out.join("FAILED").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"case": "p20", "nosie_sd": 2}"#).unwrap();
    let out = tmp.path().join("o");
    let res = lncass(&["--config", cfg.to_str().unwrap(), "simulate", "--out", out.to_str().unwrap()]);
    assert!(!res.status.success());
    assert!(read(&out.join("FAILED")).contains("nosie_sd"));
}

#[test]
fn config_file_values_yield_to_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    std::fs::write(&cfg, r#"{"case": "p70", "noise-sd": 0.5, "seed": 9}"#).unwrap();
    let out = tmp.path().join("o");
    ok(&["--config", cfg.to_str().unwrap(), "simulate", "--seed", "11", "--out", out.to_str().unwrap()]);
    let echoed = json(&out.join("config.json"));
    assert_eq!(echoed["case"], "p70");
    assert_eq!(echoed["noise-sd"], 0.5);
    assert_eq!(echoed["seed"], 11);
}

#[test]
fn evaluate_truth_against_itself_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--out", sim.to_str().unwrap()]);
    let truth = json(&sim.join("truth.json"));
    let mut summary = String::from("parameter,mean,median,lower,upper,rhat,ess\n");
    for (i, b) in truth["beta"].as_array().unwrap().iter().enumerate() {
        let b = b.as_f64().unwrap();
        summary.push_str(&format!("beta[{}],{b},{b},{b},{b},1,1000\n", i + 1));
    }
    let summary_path = tmp.path().join("summary.csv");
    std::fs::write(&summary_path, summary).unwrap();
    let out = tmp.path().join("eval");
    ok(&[
        "evaluate",
        "--summary",
        summary_path.to_str().unwrap(),
        "--truth",
        sim.join("truth.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let e = json(&out.join("evaluation.json"));
    assert_eq!(e["mae_median"], 0.0);
    assert_eq!(e["mae_mean"], 0.0);
    assert_eq!(e["recovery_auc"], 1.0);
}

#[test]
fn fit_then_predict_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--out", sim.to_str().unwrap()]);
    let data = sim.join("data.csv");
    let fit = tmp.path().join("fit");
    ok(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--chains",
        "2",
        "--warmup",
        "150",
        "--draws",
        "150",
        "--draws-format",
        "binary",
        "--out",
        fit.to_str().unwrap(),
    ]);
    for f in ["config.json", "draws.bin", "summary.csv", "diagnostics.json", "model.json"] {
        assert!(fit.join(f).exists(), "missing {f}");
    }
    let diag = json(&fit.join("diagnostics.json"));
    assert_eq!(diag["chains"].as_array().unwrap().len(), 2);

    let pred = tmp.path().join("pred");
    ok(&[
        "predict",
        "--fit",
        fit.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--out",
        pred.to_str().unwrap(),
    ]);
    let text = read(&pred.join("predictions.csv"));
    let preds: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(preds.len(), 100);
    // the fitted linear model should track the simulated response
    let ys: Vec<f64> = read(&data)
        .lines()
        .skip(1)
        .map(|l| l.split(',').next_back().unwrap().parse().unwrap())
        .collect();
    let rss: f64 = preds.iter().zip(&ys).map(|(p, y)| (p - y).powi(2)).sum();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let tss: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    assert!(rss / tss < 0.5, "R² too low: {}", 1.0 - rss / tss);
}

#[test]
fn gam_fit_writes_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    ok(&["simulate", "--out", sim.to_str().unwrap()]);
    let fit = tmp.path().join("fit");
    ok(&[
        "fit",
        "--data",
        sim.join("data.csv").to_str().unwrap(),
        "--prior",
        "lncass-gam",
        "--knots",
        "3",
        "--chains",
        "1",
        "--warmup",
        "80",
        "--draws",
        "80",
        "--curve-points",
        "11",
        "--out",
        fit.to_str().unwrap(),
    ]);
    let curves: Vec<_> = std::fs::read_dir(fit.join("curves")).unwrap().collect();
    assert_eq!(curves.len(), 20);
    let first = read(&fit.join("curves").join("f_1_x1.csv"));
    assert_eq!(first.lines().count(), 12);
}

#[test]
fn screen_ranks_the_informative_gene_first() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("d.csv");
    let mut text = String::from("a,b,c,label\n");
    for i in 0..40 {
        let y = i % 2;
        let a = 1.0 + (i % 7) as f64;
        let b = 5.0 + 2.0 * y as f64 + (i % 5) as f64;
        let c = 2.0 + ((i * 5) % 11) as f64;
        text.push_str(&format!("{a},{b},{c},{y}\n"));
    }
    std::fs::write(&csv, text).unwrap();
    let out = tmp.path().join("s");
    ok(&[
        "screen",
        "--data",
        csv.to_str().unwrap(),
        "--response",
        "label",
        "--top-k",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    let screened = read(&out.join("screened.csv"));
    let header = screened.lines().next().unwrap();
    assert!(header.starts_with("b,"), "{header}");
    assert_eq!(header.split(',').count(), 3);
}
