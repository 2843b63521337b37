//! The four subcommands: simulate, analyze, metrics, plot-data.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use tandem_core::experiments::ExperimentKind;
use tandem_core::types::{Direction, EvalKind, EvaluationSpec, RankMode};
use tandem_core::{
    c_across, c_within, optimize_weights_general, optimize_weights_mse, run_experiment,
    summarize_report, CombinerConfig, Error as CoreError,
};

use crate::config::{normalize, parse_config, parse_rank_mode, parse_tie_break};
use crate::csvio::{
    fmt_f64, read_predictions, read_results, read_weights, results_header, write_replicates,
    write_results, write_weights,
};
use crate::manifest::RunManifest;

/// Errors split by exit code: usage/config problems exit 2, runtime failures
/// exit 1.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn runtime(msg: impl Into<String>) -> CliError {
    CliError::Runtime(msg.into())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))
}

pub fn cmd_simulate(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(config_path)
        .map_err(|e| usage(format!("cannot read config {}: {e}", config_path.display())))?;
    let cfg = parse_config(&text).map_err(usage)?;

    let result = run_experiment(&cfg).map_err(|e| runtime(e.to_string()))?;

    ensure_dir(out_dir)?;
    write_results(&out_dir.join("results.csv"), &result).map_err(runtime)?;
    write_replicates(&out_dir.join("replicates.csv"), &result).map_err(runtime)?;

    let mut manifest = RunManifest::new("simulate");
    manifest.seed = Some(cfg.seed);
    manifest.config = Some(normalize(&cfg));
    manifest
        .record_output(out_dir, "results.csv")
        .map_err(runtime)?;
    manifest
        .record_output(out_dir, "replicates.csv")
        .map_err(runtime)?;
    manifest.write(out_dir).map_err(runtime)
}

pub struct AnalyzeArgs {
    pub spec_kind: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub theta: Option<f64>,
    pub tie_break: String,
    pub rank_mode: String,
}

/// Evaluation echo in the report, mirroring the flags that selected it.
#[derive(Serialize)]
struct EvaluationEcho {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta: Option<f64>,
    direction: String,
    rank_mode: String,
    tie_break: String,
}

#[derive(Serialize)]
struct ReportJson {
    c_across: f64,
    c_within: f64,
    value_joint: f64,
    value_h: f64,
    value_m: f64,
    complementary: bool,
    evaluation: EvaluationEcho,
    /// What the metrics mean, so the file is self-describing.
    metrics: BTreeMap<&'static str, &'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

fn build_spec(args: &AnalyzeArgs, rank_mode: RankMode) -> Result<EvaluationSpec, CliError> {
    let forbid = |name: &str, value: Option<f64>| {
        if value.is_some() {
            Err(usage(format!(
                "--{name} does not apply to --spec-kind {}",
                args.spec_kind
            )))
        } else {
            Ok(())
        }
    };
    let require = |name: &str, value: Option<f64>| {
        value.ok_or_else(|| usage(format!("--spec-kind {} requires --{name}", args.spec_kind)))
    };
    let spec = match args.spec_kind.as_str() {
        "mse" => {
            forbid("a", args.a)?;
            forbid("b", args.b)?;
            forbid("theta", args.theta)?;
            EvaluationSpec::mse()
        }
        "rank-weighted" => {
            forbid("theta", args.theta)?;
            EvaluationSpec::rank_weighted(require("a", args.a)?, require("b", args.b)?)
                .map_err(|e| usage(e.to_string()))?
        }
        "blended" => EvaluationSpec::blended(
            require("a", args.a)?,
            require("b", args.b)?,
            require("theta", args.theta)?,
        )
        .map_err(|e| usage(e.to_string()))?,
        other => {
            return Err(usage(format!(
                "--spec-kind `{other}` is not mse | rank-weighted | blended"
            )))
        }
    };
    Ok(spec.with_rank_mode(rank_mode))
}

pub fn cmd_analyze(
    predictions_path: &Path,
    out_dir: &Path,
    args: &AnalyzeArgs,
) -> Result<(), CliError> {
    let preds = read_predictions(predictions_path).map_err(usage)?;
    let rank_mode = parse_rank_mode(&args.rank_mode).map_err(usage)?;
    let tie_break = parse_tie_break(&args.tie_break).map_err(usage)?;
    let spec = build_spec(args, rank_mode)?;
    let combiner_cfg = CombinerConfig {
        tie_break,
        ..CombinerConfig::default()
    };

    let weights = match spec.kind {
        EvalKind::Mse => optimize_weights_mse(&preds, &combiner_cfg),
        _ => optimize_weights_general(&preds, &spec, &combiner_cfg).map_err(|e| match e {
            CoreError::InvalidConfig(_) => usage(e.to_string()),
            other => runtime(other.to_string()),
        })?,
    };
    let report = summarize_report(&preds, &weights, &spec).map_err(|e| runtime(e.to_string()))?;

    ensure_dir(out_dir)?;
    write_weights(&out_dir.join("weights.csv"), preds.instance_id(), &weights).map_err(runtime)?;

    let (a, b, theta) = match spec.kind {
        EvalKind::Mse => (None, None, None),
        EvalKind::RankWeighted { a, b } => (Some(a), Some(b), None),
        EvalKind::Blended { a, b, theta } => (Some(a), Some(b), Some(theta)),
    };
    let mut metrics = BTreeMap::new();
    metrics.insert(
        "c_across",
        "population variance of the per-instance aggregation weights; high when \
         different instances are routed to different agents",
    );
    metrics.insert(
        "c_within",
        "one minus the mean squared gap between the two agents' weights; high when \
         both agents contribute to each individual decision",
    );
    let report_json = ReportJson {
        c_across: report.c_across,
        c_within: report.c_within,
        value_joint: report.value_joint,
        value_h: report.value_h,
        value_m: report.value_m,
        complementary: report.complementary,
        evaluation: EvaluationEcho {
            kind: args.spec_kind.clone(),
            a,
            b,
            theta,
            direction: match spec.direction {
                Direction::Minimize => "minimize".to_string(),
                Direction::Maximize => "maximize".to_string(),
            },
            rank_mode: args.rank_mode.clone(),
            tie_break: args.tie_break.clone(),
        },
        metrics,
        note: (preds.len() == 1)
            .then(|| "single-instance input: c_across is trivially 0".to_string()),
    };
    let json = serde_json::to_string_pretty(&report_json)
        .map_err(|e| runtime(format!("cannot serialize report: {e}")))?;
    fs::write(out_dir.join("report.json"), json + "\n")
        .map_err(|e| runtime(format!("cannot write report.json: {e}")))?;

    let mut manifest = RunManifest::new("analyze");
    manifest
        .args
        .insert("predictions".into(), predictions_path.display().to_string());
    manifest
        .args
        .insert("spec-kind".into(), args.spec_kind.clone());
    if let Some(a) = a {
        manifest.args.insert("a".into(), fmt_f64(a));
    }
    if let Some(b) = b {
        manifest.args.insert("b".into(), fmt_f64(b));
    }
    if let Some(theta) = theta {
        manifest.args.insert("theta".into(), fmt_f64(theta));
    }
    manifest
        .args
        .insert("tie-break".into(), args.tie_break.clone());
    manifest
        .args
        .insert("rank-mode".into(), args.rank_mode.clone());
    manifest
        .record_output(out_dir, "weights.csv")
        .map_err(runtime)?;
    manifest
        .record_output(out_dir, "report.json")
        .map_err(runtime)?;
    manifest.write(out_dir).map_err(runtime)
}

#[derive(Serialize)]
struct MetricsJson {
    c_across: f64,
    c_within: f64,
}

pub fn cmd_metrics(weights_path: &Path) -> Result<(), CliError> {
    let (_, weights) = read_weights(weights_path).map_err(usage)?;
    if weights.len() == 1 {
        eprintln!("note: single-instance input, c_across is trivially 0");
    }
    let out = MetricsJson {
        c_across: c_across(&weights),
        c_within: c_within(&weights),
    };
    let json = serde_json::to_string(&out)
        .map_err(|e| runtime(format!("cannot serialize metrics: {e}")))?;
    println!("{json}");
    Ok(())
}

/// Which figure's panels to carve out of a results table.
struct FigureSpec {
    kind: ExperimentKind,
    prefix: &'static str,
    x_columns: &'static [&'static str],
    /// (file stem, metric label, mean column, std column)
    panels: &'static [(&'static str, &'static str, &'static str, &'static str)],
}

fn figure_spec(figure: &str) -> Result<FigureSpec, CliError> {
    match figure {
        "fig2" => Ok(FigureSpec {
            kind: ExperimentKind::Overlap,
            prefix: "fig2",
            x_columns: &["z"],
            panels: &[
                ("c_across", "c_across", "c_across_mean", "c_across_std"),
                ("c_within", "c_within", "c_within_mean", "c_within_std"),
                ("loss", "loss_joint", "loss_joint_mean", "loss_joint_std"),
                ("loss", "loss_h", "loss_h_mean", "loss_h_std"),
                ("loss", "loss_m", "loss_m_mean", "loss_m_std"),
            ],
        }),
        "fig3" => Ok(FigureSpec {
            kind: ExperimentKind::Alpha,
            prefix: "fig3",
            x_columns: &["alpha"],
            panels: &[
                ("c_across", "c_across", "c_across_mean", "c_across_std"),
                ("c_within", "c_within", "c_within_mean", "c_within_std"),
                ("loss", "loss_joint", "loss_joint_mean", "loss_joint_std"),
                ("loss", "loss_h", "loss_h_mean", "loss_h_std"),
                ("loss", "loss_m", "loss_m_mean", "loss_m_std"),
            ],
        }),
        "fig4" => Ok(FigureSpec {
            kind: ExperimentKind::Objective,
            prefix: "fig4",
            x_columns: &["b", "theta"],
            panels: &[
                ("c_across", "c_across", "c_across_mean", "c_across_std"),
                ("c_within", "c_within", "c_within_mean", "c_within_std"),
                ("dg_h", "dG_h", "dG_h_mean", "dG_h_std"),
                ("dg_m", "dG_m", "dG_m_mean", "dG_m_std"),
            ],
        }),
        other => Err(usage(format!(
            "--figure `{other}` is not fig2 | fig3 | fig4"
        ))),
    }
}

pub fn cmd_plotdata(results_path: &Path, figure: &str, out_dir: &Path) -> Result<(), CliError> {
    let spec = figure_spec(figure)?;
    let table = read_results(results_path).map_err(usage)?;

    let expected = results_header(spec.kind);
    if table.header != expected {
        return Err(usage(format!(
            "{}: column mismatch for {figure}: expected `{}`, found `{}`",
            results_path.display(),
            expected.join(","),
            table.header.join(",")
        )));
    }
    for (i, row) in table.rows.iter().enumerate() {
        if row[0] != spec.kind.label() {
            return Err(usage(format!(
                "{}: row {}: kind `{}` does not match {figure} (expected `{}`)",
                results_path.display(),
                i + 1,
                row[0],
                spec.kind.label()
            )));
        }
    }

    ensure_dir(out_dir)?;
    let mut manifest = RunManifest::new("plot-data");
    manifest
        .args
        .insert("results".into(), results_path.display().to_string());
    manifest.args.insert("figure".into(), figure.to_string());

    let column = |name: &str| table.column(name).expect("validated header");
    let mut stems: Vec<&str> = spec.panels.iter().map(|p| p.0).collect();
    stems.dedup();
    for stem in stems {
        let file_name = format!("{}_{stem}.csv", spec.prefix);
        let path = out_dir.join(&file_name);
        let mut writer = csv::Writer::from_path(&path)
            .map_err(|e| runtime(format!("cannot create {}: {e}", path.display())))?;
        let mut header: Vec<&str> = spec.x_columns.to_vec();
        header.extend(["metric", "mean", "std"]);
        writer
            .write_record(&header)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
        for row in &table.rows {
            for &(panel_stem, metric, mean_col, std_col) in spec.panels {
                if panel_stem != stem {
                    continue;
                }
                let mut record: Vec<&str> = spec
                    .x_columns
                    .iter()
                    .map(|x| row[column(x)].as_str())
                    .collect();
                record.push(metric);
                record.push(&row[column(mean_col)]);
                record.push(&row[column(std_col)]);
                writer
                    .write_record(&record)
                    .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
            }
        }
        writer
            .flush()
            .map_err(|e| runtime(format!("cannot flush {}: {e}", path.display())))?;
        manifest
            .record_output(out_dir, &file_name)
            .map_err(runtime)?;
    }
    manifest.write(out_dir).map_err(runtime)
}
