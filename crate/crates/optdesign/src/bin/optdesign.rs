//! Command-line entry point: run experiments, verify the theory suites,
//! generate synthetic task files, and solve D-optimal designs.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
//! Set `OPTDESIGN_LOG` to control log verbosity (error..trace).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DVector;

use optdesign::harness::{run_experiment, ExperimentConfig};
use optdesign::selectors::solve_dopt;
use optdesign::tasks::{gen_arc, gen_pcfg, load_csv, write_csv, ArcKind, PcfgKind};
use optdesign::theory::{run_suite, Suite};

#[derive(Parser)]
#[command(name = "optdesign", version, about = "Optimal-design-based active example selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        /// Path to the JSON experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `output` field).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed (overrides the config's `split.seed`).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run an executable-theory suite; prints one JSON report per check.
    Verify {
        /// Suite name: all, posterior, theorem-go, eigen, concentration,
        /// objective, dopt.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a synthetic task CSV.
    GenTask {
        /// Task name: arc-expand-contract, arc-rotate, pcfg-add-subtract,
        /// pcfg-repeat.
        task: String,
        /// Number of examples (even; half per class).
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the D-optimal design for a CSV of feature rows.
    Dopt {
        /// Feature CSV (no label columns used; pass --label-col to drop one).
        #[arg(long)]
        config: PathBuf,
        /// Optional label column to exclude from the features.
        #[arg(long)]
        label_col: Option<String>,
        #[arg(long, default_value_t = true)]
        header: bool,
        /// Kiefer-Wolfowitz certificate tolerance.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_iters: usize,
    },
}

fn run(command: Command) -> optdesign::Result<bool> {
    match command {
        Command::Run { config, out, seed } => {
            let text = std::fs::read_to_string(&config)?;
            let mut cfg = ExperimentConfig::from_json(&text)?;
            if let Some(out) = out {
                cfg.output = Some(out);
            }
            if let Some(seed) = seed {
                cfg.split.seed = seed;
            }
            let records = run_experiment(&cfg)?;
            log::info!("wrote {} round records", records.len());
            Ok(true)
        }
        Command::Verify { suite, seed } => {
            let suite: Suite = suite.parse()?;
            let reports = run_suite(suite, seed);
            let mut all_passed = true;
            for report in &reports {
                println!("{}", serde_json::to_string(report)?);
                all_passed &= report.passed;
            }
            Ok(all_passed)
        }
        Command::GenTask { task, n, seed, out } => {
            let dataset = match task.as_str() {
                "arc-expand-contract" => gen_arc(ArcKind::ExpandContract, n, seed)?,
                "arc-rotate" => gen_arc(ArcKind::Rotate, n, seed)?,
                "pcfg-add-subtract" => gen_pcfg(PcfgKind::AddSubtract, n, seed)?,
                "pcfg-repeat" => gen_pcfg(PcfgKind::Repeat, n, seed)?,
                other => {
                    return Err(optdesign::Error::InvalidConfig(format!(
                        "unknown task '{other}'"
                    )));
                }
            };
            write_csv(&dataset, &out)?;
            log::info!("wrote {} examples to {}", dataset.n(), out.display());
            Ok(true)
        }
        Command::Dopt {
            config,
            label_col,
            header,
            tol,
            max_iters,
        } => {
            let labels: Vec<&str> = label_col.iter().map(|s| s.as_str()).collect();
            let features: Vec<DVector<f64>> = if labels.is_empty() {
                // no label column: read every column as a feature
                let mut reader = csv::ReaderBuilder::new()
                    .has_headers(header)
                    .from_path(&config)?;
                let mut rows = Vec::new();
                for record in reader.records() {
                    let record = record?;
                    let row: std::result::Result<Vec<f64>, _> =
                        record.iter().map(|c| c.trim().parse()).collect();
                    rows.push(DVector::from_vec(row.map_err(|_| {
                        optdesign::Error::InvalidConfig("non-numeric feature cell".into())
                    })?));
                }
                rows
            } else {
                let ds = load_csv(&config, &labels, header, false)?;
                (0..ds.n()).map(|i| ds.feature_row(i)).collect()
            };
            let design = solve_dopt(&features, tol, max_iters)?;
            println!(
                "{}",
                serde_json::json!({
                    "weights": design.weights,
                    "certificate": design.certificate,
                    "iterations": design.iterations,
                })
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("OPTDESIGN_LOG", "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap treats --help/--version as "errors" with success status
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}
