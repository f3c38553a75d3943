//! `predmin` command-line driver.

use clap::{ArgGroup, Parser, Subcommand};
use predmin::granularity::Granularity;
use predmin::harness::{
    demo_corpus, emit_plot_data, load_corpus, read_sample_csv, run_corpus, ExpectedPolicy, OracleSpec, PlotKind,
    RunConfig, ValiditySetting,
};
use predmin::oracle::MockOracleSpec;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "predmin",
    version,
    about = "Reduce programs while a model keeps its prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce every sample of a corpus
    #[command(group(ArgGroup::new("oracle").required(true).args(["oracle_cmd", "oracle_url", "mock"])))]
    #[command(group(ArgGroup::new("source").required(true).args(["corpus", "demo"])))]
    Reduce {
        /// JSON-lines corpus of samples
        #[arg(long)]
        corpus: Option<PathBuf>,

        /// Use the bundled demo corpus instead of --corpus
        #[arg(long)]
        demo: bool,

        /// Atomic unit: token or char
        #[arg(long, default_value = "token")]
        granularity: Granularity,

        /// Oracle worker command speaking JSON lines on stdin/stdout
        #[arg(long)]
        oracle_cmd: Option<String>,

        /// Oracle HTTP endpoint (POST /predict)
        #[arg(long)]
        oracle_url: Option<String>,

        /// In-process mock oracle, e.g. keyset:a,b or threshold:x:2
        #[arg(long)]
        mock: Option<MockOracleSpec>,

        /// auto, none, structural, or cmd:<path>; auto is structural for
        /// java_like token runs and none otherwise
        #[arg(long, default_value = "auto")]
        validity: ValiditySetting,

        /// Identifiers whose occurrences are never removed
        #[arg(long, value_delimiter = ',')]
        protect: Vec<String>,

        /// Output directory for traces, CSVs, and plot data
        #[arg(long, default_value = "predmin-out")]
        out_dir: PathBuf,

        #[arg(long, default_value_t = 1)]
        workers: usize,

        /// Preserve the oracle's prediction on the full text (default)
        #[arg(long, conflicts_with = "expected_field")]
        expected_from_oracle: bool,

        /// Preserve each sample's expected_label; mismatching samples are skipped
        #[arg(long)]
        expected_field: bool,

        #[arg(long)]
        max_oracle_calls: Option<u64>,
    },

    /// Re-emit plot data from a samples.csv
    Plot {
        #[arg(long)]
        samples: PathBuf,

        /// size_vs_final, pct_vs_size, score_vs_reduction, or time_vs_removed
        #[arg(long)]
        kind: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PREDMIN_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("predmin: {message}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Reduce {
            corpus,
            demo,
            granularity,
            oracle_cmd,
            oracle_url,
            mock,
            validity,
            protect,
            out_dir,
            workers,
            expected_from_oracle: _,
            expected_field,
            max_oracle_calls,
        } => {
            let samples = match (corpus, demo) {
                (Some(path), _) => load_corpus(&path).map_err(|e| format!("{}: {e}", path.display()))?,
                (None, _) => demo_corpus(),
            };
            let oracle = match (oracle_cmd, oracle_url, mock) {
                (Some(cmd), _, _) => OracleSpec::Command(cmd),
                (_, Some(url), _) => OracleSpec::Url(url),
                (_, _, Some(spec)) => OracleSpec::Mock(spec),
                _ => unreachable!("clap requires one oracle"),
            };
            let config = RunConfig {
                granularity,
                oracle,
                validity,
                protect,
                workers,
                out_dir: Some(out_dir.clone()),
                max_oracle_calls,
                expected: if expected_field {
                    ExpectedPolicy::Field
                } else {
                    ExpectedPolicy::FromOracle
                },
            };
            let report = run_corpus(&samples, &config).map_err(|e| e.to_string())?;
            let s = &report.summary;
            println!(
                "{} samples: {} reduced, {} skipped, {} failed; average reduction {}; outputs in {}",
                s.samples,
                s.reduced,
                s.skipped,
                s.failed,
                s.reduction_pct.map_or("n/a".to_string(), |r| format!("{:.2}%", r.avg)),
                out_dir.display()
            );
            for skipped in &report.skipped {
                println!("skipped {}: {}", skipped.sample_id, skipped.reason);
            }
            Ok(ExitCode::from(report.exit_code() as u8))
        }
        Command::Plot { samples, kind } => {
            let kind: PlotKind = kind.parse()?;
            let file = std::fs::File::open(&samples).map_err(|e| format!("{}: {e}", samples.display()))?;
            let rows = read_sample_csv(file).map_err(|e| e.to_string())?;
            emit_plot_data(&rows, kind, io::stdout().lock()).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
