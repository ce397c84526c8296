use clap::{Parser, Subcommand};
use rmt_edge_cli::config::{ExperimentConfig, Kind};
use rmt_edge_cli::{diff, experiments, report};
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "rmt-edge",
    version,
    about = "Edge-scaling experiments for invariant random matrix ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write <kind>.csv and <kind>.json.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<Kind>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Quadrature nodes per Fredholm block.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Per-column max absolute drift between two report CSVs.
    Diff {
        a: PathBuf,
        b: PathBuf,
        /// Comma-separated subset of columns.
        #[arg(long, value_delimiter = ',')]
        columns: Option<Vec<String>>,
        /// Fail when any drift exceeds this.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn fail(code: u8, kind: &str, message: impl std::fmt::Display) -> ExitCode {
    let report = json!({ "error": { "kind": kind, "message": message.to_string() } });
    eprintln!("{report}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            kind,
            out,
            seed,
            resolution,
        } => {
            let mut cfg = match &config {
                Some(p) => match ExperimentConfig::from_path(p) {
                    Ok(c) => c,
                    Err(e) => return fail(EXIT_USAGE, "usage", e),
                },
                None => ExperimentConfig::default(),
            };
            cfg.kind = kind.or(cfg.kind);
            cfg.out = out.or(cfg.out);
            cfg.seed = seed.or(cfg.seed);
            cfg.resolution = resolution.or(cfg.resolution);
            let cfg = match cfg.resolve() {
                Ok(c) => c,
                Err(e) => return fail(EXIT_USAGE, "usage", e),
            };
            let t0 = Instant::now();
            let outcome = match experiments::run(&cfg) {
                Ok(o) => o,
                Err(e) => return fail(EXIT_FAILED, "computation", e),
            };
            let paths = report::write_outcome(
                &cfg.out,
                cfg.kind.name(),
                &cfg,
                &outcome,
                t0.elapsed().as_secs_f64(),
            );
            let (csv, meta) = match paths {
                Ok(p) => p,
                Err(e) => return fail(EXIT_FAILED, "io", e),
            };
            for c in &outcome.checks {
                let mark = if c.passed { "pass" } else { "FAIL" };
                println!(
                    "{mark}  {}: {:.3e} (limit {:.3e})",
                    c.name, c.value, c.tolerance
                );
            }
            println!("wrote {} and {}", csv.display(), meta.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED)
            }
        }
        Command::Diff {
            a,
            b,
            columns,
            tolerance,
        } => match diff::diff_reports(&a, &b, columns.as_deref()) {
            Ok(summary) => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&summary).expect("serializable")
                );
                match tolerance {
                    Some(t) if !(summary.max_drift <= t) => ExitCode::from(EXIT_FAILED),
                    _ => ExitCode::SUCCESS,
                }
            }
            Err(e) => fail(EXIT_FAILED, "diff", e),
        },
    }
}
