//! End-to-end tests driving the compiled `tandem` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use tempfile::TempDir;

use tandem_cli::config::parse_config;
use tandem_cli::manifest::sha256_file;
use tandem_core::types::{EvaluationSpec, PredictionSet};
use tandem_core::{optimize_weights_mse, summarize_report, CombinerConfig};

fn tandem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tandem"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, content: &str) {
    fs::write(path, content).expect("write test file");
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&read(path)).expect("valid json")
}

const SMALL_OVERLAP: &str =
    "kind = overlap\nseed = 42\nn_train = 300\nn_test = 120\nreplicates = 3\n";

#[test]
fn simulate_writes_one_results_row_per_sweep_point() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.cfg");
    write(&config, SMALL_OVERLAP);
    let out = dir.path().join("out");
    let output = tandem(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    let results = read(&out.join("results.csv"));
    let lines: Vec<&str> = results.lines().collect();
    assert_eq!(lines.len(), 6, "header + 5 default z values:\n{results}");
    assert!(lines[0].starts_with("kind,z,replicates,c_across_mean"));

    let replicates = read(&out.join("replicates.csv"));
    assert_eq!(replicates.lines().count(), 1 + 5 * 3);
}

#[test]
fn simulate_is_byte_identical_across_runs_and_thread_counts() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.cfg");
    write(&config, SMALL_OVERLAP);
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let out = dir.path().join(name);
        let output = tandem(&[
            "--threads",
            threads,
            "simulate",
            "--config",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{output:?}");
        outputs.push((
            read(&out.join("results.csv")),
            read(&out.join("replicates.csv")),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[1], outputs[2]);
}

#[test]
fn simulate_manifest_checksums_and_config_echo_hold() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.cfg");
    write(&config, SMALL_OVERLAP);
    let out = dir.path().join("out");
    assert!(tandem(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());

    let manifest = json(&out.join("manifest.json"));
    for name in ["results.csv", "replicates.csv"] {
        let recorded = manifest["outputs"][name].as_str().unwrap();
        let actual = sha256_file(&out.join(name)).unwrap();
        assert_eq!(recorded, actual, "{name} checksum");
    }
    // the echoed config re-parses to the config the run used
    let echoed = manifest["config"].as_str().unwrap();
    let reparsed = parse_config(echoed).unwrap();
    let original = parse_config(SMALL_OVERLAP).unwrap();
    assert_eq!(reparsed, original);
    assert_eq!(manifest["seed"].as_u64(), Some(42));
}

#[test]
fn simulate_rejects_invalid_configs_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");

    let config = dir.path().join("odd.cfg");
    write(&config, "kind = overlap\nseed = 1\nsweep.z = 9\n");
    let output = tandem(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("odd"), "stderr: {stderr}");

    let config = dir.path().join("typo.cfg");
    write(&config, "kind = overlap\nseed = 1\ndgp.noise = 0.5\n");
    let output = tandem(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("dgp.noise"), "stderr: {stderr}");
}

#[test]
fn analyze_perfect_human_reports_no_complementarity() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("preds.csv");
    write(
        &csv,
        "instance_id,y,pred_h,pred_m\n0,1.5,1.5,0.0\n1,-2.0,-2.0,0.5\n2,0.25,0.25,1.0\n",
    );
    let out = dir.path().join("out");
    assert!(tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());

    let report = json(&out.join("report.json"));
    assert_eq!(report["complementary"].as_bool(), Some(false));
    assert_eq!(report["value_joint"].as_f64(), Some(0.0));
    let weights = read(&out.join("weights.csv"));
    assert_eq!(weights.lines().count(), 4);
    for line in weights.lines().skip(1) {
        assert!(line.ends_with(",1,0"), "human weight should be 1: {line}");
    }
}

#[test]
fn analyze_bracketed_instances_reproduce_the_routing_example() {
    // two instances where the machine is exactly right, two where the human
    // is: optimal weights (0, 0, 1, 1)
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("preds.csv");
    write(
        &csv,
        "instance_id,y,pred_h,pred_m\n0,0.0,1.0,0.0\n1,0.0,1.0,0.0\n2,1.0,1.0,0.0\n3,1.0,1.0,0.0\n",
    );
    let out = dir.path().join("out");
    assert!(tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let report = json(&out.join("report.json"));
    assert!((report["c_across"].as_f64().unwrap() - 0.25).abs() <= 1e-12);
    assert!(report["c_within"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn analyze_matches_in_process_summary_on_random_data() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1234);
    let n = 100;
    let mut lines = vec!["instance_id,y,pred_h,pred_m".to_string()];
    let mut y = Vec::new();
    let mut ph = Vec::new();
    let mut pm = Vec::new();
    for i in 0..n {
        let (yi, hi, mi): (f64, f64, f64) = (
            rng.random::<f64>() * 6.0 - 3.0,
            rng.random::<f64>() * 6.0 - 3.0,
            rng.random::<f64>() * 6.0 - 3.0,
        );
        lines.push(format!("{i},{yi},{hi},{mi}"));
        y.push(yi);
        ph.push(hi);
        pm.push(mi);
    }
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("preds.csv");
    write(&csv, &(lines.join("\n") + "\n"));
    let out = dir.path().join("out");
    assert!(tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());

    let preds = PredictionSet::from_predictions(y, ph, pm).unwrap();
    let weights = optimize_weights_mse(&preds, &CombinerConfig::default());
    let expected = summarize_report(&preds, &weights, &EvaluationSpec::mse()).unwrap();

    let report = json(&out.join("report.json"));
    for (field, value) in [
        ("c_across", expected.c_across),
        ("c_within", expected.c_within),
        ("value_joint", expected.value_joint),
        ("value_h", expected.value_h),
        ("value_m", expected.value_m),
    ] {
        let got = report[field].as_f64().unwrap();
        assert!((got - value).abs() <= 1e-12, "{field}: {got} vs {value}");
    }
}

#[test]
fn analyze_rejects_schema_violations_with_exit_2() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");

    let csv = dir.path().join("bad_header.csv");
    write(&csv, "id,y,pred_h,pred_m\n0,1,1,1\n");
    let output = tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));

    let csv = dir.path().join("bad_value.csv");
    write(&csv, "instance_id,y,pred_h,pred_m\n0,1.0,oops,1.0\n");
    let output = tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("row 1") && stderr.contains("pred_h"),
        "{stderr}"
    );

    let csv = dir.path().join("nonfinite.csv");
    write(&csv, "instance_id,y,pred_h,pred_m\n0,1.0,NaN,1.0\n");
    let output = tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn analyze_validates_spec_flag_combinations() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("preds.csv");
    write(&csv, "instance_id,y,pred_h,pred_m\n0,1.0,2.0,0.0\n");
    let out = dir.path().join("out");

    // --a is meaningless under mse
    let output = tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--a",
        "0.5",
    ]);
    assert_eq!(output.status.code(), Some(2));

    // blended without --theta
    let output = tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--spec-kind",
        "blended",
        "--a",
        "0.5",
        "--b",
        "0.5",
    ]);
    assert_eq!(output.status.code(), Some(2));

    // a curvature that makes the rank weights negative
    let output = tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--spec-kind",
        "rank-weighted",
        "--a",
        "0.5",
        "--b",
        "2.5",
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn metrics_reproduces_worked_examples() {
    let dir = TempDir::new().unwrap();

    let csv = dir.path().join("constant.csv");
    write(
        &csv,
        "instance_id,w_h,w_m\n0,0.3,0.7\n1,0.3,0.7\n2,0.3,0.7\n3,0.3,0.7\n",
    );
    let output = tandem(&["metrics", csv.to_str().unwrap()]);
    assert!(output.status.success());
    let parsed: serde_json::Value =
        serde_json::from_slice(&output.stdout).expect("metrics prints json");
    assert!(parsed["c_across"].as_f64().unwrap().abs() <= 1e-12);
    assert!((parsed["c_within"].as_f64().unwrap() - 0.84).abs() <= 1e-12);

    let csv = dir.path().join("routed.csv");
    write(&csv, "instance_id,w_h,w_m\n0,0,1\n1,0,1\n2,1,0\n3,1,0\n");
    let output = tandem(&["metrics", csv.to_str().unwrap()]);
    let parsed: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(parsed["c_across"].as_f64(), Some(0.25));
    assert_eq!(parsed["c_within"].as_f64(), Some(0.0));

    let csv = dir.path().join("single.csv");
    write(&csv, "instance_id,w_h,w_m\n0,0.5,0.5\n");
    let output = tandem(&["metrics", csv.to_str().unwrap()]);
    let parsed: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(parsed["c_across"].as_f64(), Some(0.0));
    assert_eq!(parsed["c_within"].as_f64(), Some(1.0));
}

#[test]
fn metrics_rejects_simplex_violations_naming_the_row() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("broken.csv");
    write(&csv, "instance_id,w_h,w_m\n0,0.5,0.5\n1,0.6,0.6\n");
    let output = tandem(&["metrics", csv.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("row 2"), "{stderr}");
}

#[test]
fn analyze_weights_feed_metrics_reproducing_the_report() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("preds.csv");
    write(
        &csv,
        "instance_id,y,pred_h,pred_m\n0,0.4,1.0,0.0\n1,-0.5,0.5,-1.5\n2,2.0,1.0,3.0\n3,0.0,0.3,0.1\n",
    );
    let out = dir.path().join("out");
    assert!(tandem(&[
        "analyze",
        csv.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let report = json(&out.join("report.json"));

    let output = tandem(&["metrics", out.join("weights.csv").to_str().unwrap()]);
    assert!(output.status.success());
    let metrics: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    for field in ["c_across", "c_within"] {
        let a = report[field].as_f64().unwrap();
        let b = metrics[field].as_f64().unwrap();
        assert!((a - b).abs() <= 1e-12, "{field}: {a} vs {b}");
    }
}

#[test]
fn simulate_runtime_failures_exit_1() {
    // valid config whose replicates cannot run: 3 training rows cannot
    // identify the 5-feature views at z = 0
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.cfg");
    write(
        &config,
        "kind = overlap\nseed = 1\nn_train = 3\nn_test = 50\nreplicates = 1\nsweep.z = 0\n",
    );
    let output = tandem(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("z=0"),
        "diagnostic names the point: {stderr}"
    );
}

#[test]
fn plotdata_emits_fig3_panels_keyed_by_alpha() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("alpha.cfg");
    write(
        &config,
        "kind = alpha\nseed = 5\nn_train = 300\nn_test = 100\nreplicates = 2\nsweep.alpha = 0,0.5,1\n",
    );
    let out = dir.path().join("out");
    assert!(tandem(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])
    .status
    .success());
    let fig3 = dir.path().join("fig3");
    assert!(tandem(&[
        "plot-data",
        out.join("results.csv").to_str().unwrap(),
        "--figure",
        "fig3",
        "--out",
        fig3.to_str().unwrap(),
    ])
    .status
    .success());
    let panel = read(&fig3.join("fig3_c_within.csv"));
    assert!(panel.starts_with("alpha,metric,mean,std\n"));
    assert_eq!(panel.lines().count(), 4);
}

#[test]
fn plotdata_emits_three_panels_for_fig2_and_four_for_fig4() {
    let dir = TempDir::new().unwrap();

    let config = dir.path().join("overlap.cfg");
    write(&config, SMALL_OVERLAP);
    let overlap_out = dir.path().join("overlap");
    assert!(tandem(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        overlap_out.to_str().unwrap(),
    ])
    .status
    .success());

    let fig2 = dir.path().join("fig2");
    assert!(tandem(&[
        "plot-data",
        overlap_out.join("results.csv").to_str().unwrap(),
        "--figure",
        "fig2",
        "--out",
        fig2.to_str().unwrap(),
    ])
    .status
    .success());
    for name in ["fig2_c_across.csv", "fig2_c_within.csv", "fig2_loss.csv"] {
        assert!(fig2.join(name).exists(), "{name} missing");
    }
    let loss = read(&fig2.join("fig2_loss.csv"));
    assert!(loss.starts_with("z,metric,mean,std\n"));
    assert_eq!(loss.lines().count(), 1 + 5 * 3, "three loss series per z");

    let config = dir.path().join("objective.cfg");
    write(
        &config,
        "kind = objective\nseed = 9\nn_train = 200\nn_test = 80\nreplicates = 1\nsweep.b = 0.5,1\nsweep.theta = 0,0.5\n",
    );
    let objective_out = dir.path().join("objective");
    assert!(tandem(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        objective_out.to_str().unwrap(),
    ])
    .status
    .success());

    let fig4 = dir.path().join("fig4");
    assert!(tandem(&[
        "plot-data",
        objective_out.join("results.csv").to_str().unwrap(),
        "--figure",
        "fig4",
        "--out",
        fig4.to_str().unwrap(),
    ])
    .status
    .success());
    for name in [
        "fig4_c_across.csv",
        "fig4_c_within.csv",
        "fig4_dg_h.csv",
        "fig4_dg_m.csv",
    ] {
        assert!(fig4.join(name).exists(), "{name} missing");
    }
    assert!(read(&fig4.join("fig4_dg_h.csv")).starts_with("b,theta,metric,mean,std\n"));

    // feeding overlap results to fig4 is a column mismatch
    let output = tandem(&[
        "plot-data",
        overlap_out.join("results.csv").to_str().unwrap(),
        "--figure",
        "fig4",
        "--out",
        dir.path().join("bad").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}
