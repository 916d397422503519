use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use se3ad::bench::{parse_rows, run_bench, BenchConfig};
use se3ad::verify::{self, Suite};

#[derive(Parser)]
#[command(name = "se3ad", version, about = "Exact SE(3) pose Hessians by seeded forward-mode AD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Subcommand)]
enum Command {
    /// Compare the Hessian paths on a synthetic landmark problem.
    Bench {
        /// TOML config; command-line flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        landmarks: Option<usize>,
        /// Comma-separated row ids in 1..=7, or `all`.
        #[arg(long, default_value = "all")]
        rows: String,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        warmup: Option<usize>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run invariant suites; exits nonzero on any failure.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn bench(
    config: Option<PathBuf>,
    seed: Option<u64>,
    landmarks: Option<usize>,
    rows: &str,
    format: Format,
    repeats: Option<usize>,
    warmup: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = match config {
        Some(path) => {
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            BenchConfig::from_toml(&text)?
        }
        None => BenchConfig::default(),
    };
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if let Some(v) = landmarks {
        cfg.n_landmarks = v;
    }
    if let Some(v) = repeats {
        cfg.repeats = v;
    }
    if let Some(v) = warmup {
        cfg.warmup = v;
    }
    cfg.validate()?;

    let report = run_bench(&cfg, &parse_rows(rows)?)?;
    let text = match format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv(),
        Format::Table => report.to_table(),
    };
    match out {
        Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench { config, seed, landmarks, rows, format, repeats, warmup, out } => {
            bench(config, seed, landmarks, &rows, format, repeats, warmup, out)
        }
        Command::Verify { suite } => (|| {
            let suite: Suite = suite.parse()?;
            let checks = verify::run(suite);
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {} failed", checks.len(), failed);
            if failed > 0 {
                bail!("{failed} verification checks failed");
            }
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
