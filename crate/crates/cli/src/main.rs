//! `tandem`: oracle analysis of two-agent prediction complementarity.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tandem_cli::commands::{
    cmd_analyze, cmd_metrics, cmd_plotdata, cmd_simulate, AnalyzeArgs, CliError,
};

#[derive(Parser)]
#[command(
    name = "tandem",
    version,
    about = "Oracle-optimal convex combination of two predictors and complementarity metrics",
    long_about = "Computes per-instance convex aggregation weights for two agents' predictions \
                  that are optimal under a chosen evaluation function, reports across-/within-\
                  instance complementarity, and runs seeded synthetic experiment sweeps.\n\n\
                  Weights are optimized with access to the true targets: results are upper \
                  bounds on joint performance, not a deployable combiner."
)]
struct Cli {
    /// Worker threads for experiment replicates (0 = automatic). The thread
    /// count never changes any output.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep from a config file and write results CSVs
    Simulate {
        /// Flat key-value config file (see README for the key list)
        #[arg(long)]
        config: PathBuf,
        /// Output directory for results.csv, replicates.csv, manifest.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute oracle weights and a complementarity report for a predictions CSV
    Analyze {
        /// CSV with header `instance_id,y,pred_h,pred_m`
        predictions: PathBuf,
        /// Output directory for weights.csv, report.json, manifest.json
        #[arg(long)]
        out: PathBuf,
        /// Evaluation function: mse | rank-weighted | blended
        #[arg(long = "spec-kind", default_value = "mse")]
        spec_kind: String,
        /// Probability-weighting fixed point (rank-weighted / blended)
        #[arg(long)]
        a: Option<f64>,
        /// Probability-weighting curvature (rank-weighted / blended)
        #[arg(long)]
        b: Option<f64>,
        /// Mix between MSE and the rank-weighted loss (blended only)
        #[arg(long)]
        theta: Option<f64>,
        /// Weight when the two predictions coincide: machine | human | half
        #[arg(long = "tie-break", default_value = "machine")]
        tie_break: String,
        /// How rank weights attach to losses: sorted | fixed_index
        #[arg(long = "rank-mode", default_value = "sorted")]
        rank_mode: String,
    },
    /// Print complementarity metrics for a weights CSV as JSON
    Metrics {
        /// CSV with header `instance_id,w_h,w_m`
        weights: PathBuf,
    },
    /// Reshape a results CSV into long-format per-panel plot data
    PlotData {
        /// results.csv produced by `simulate`
        results: PathBuf,
        /// Which figure layout to emit: fig2 | fig3 | fig4
        #[arg(long)]
        figure: String,
        /// Output directory for the panel CSVs and manifest.json
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads > 0 {
        // ignore the error if a pool already exists; determinism does not
        // depend on the thread count
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    match cli.command {
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Analyze {
            predictions,
            out,
            spec_kind,
            a,
            b,
            theta,
            tie_break,
            rank_mode,
        } => cmd_analyze(
            &predictions,
            &out,
            &AnalyzeArgs {
                spec_kind,
                a,
                b,
                theta,
                tie_break,
                rank_mode,
            },
        ),
        Command::Metrics { weights } => cmd_metrics(&weights),
        Command::PlotData {
            results,
            figure,
            out,
        } => cmd_plotdata(&results, &figure, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
