//! Batch CLI for sum-capacity achievability analysis of two-user MIMO
//! multiple-access channels under compute-forward coding.

use cfma::channel::{db_to_linear, sum_capacity, ChannelPair};
use cfma::experiments::{
    emit, render, run_permutation_compare, run_ra_sweep, run_table1, Artifact, Format, SweepConfig,
};
use cfma::matrix::Matrix;
use cfma::pcs::{pcs_check_with_capacity, PcsSearch};
use cfma::scs::{scs_check_with_capacity, PrecoderStrategy};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "cfma",
    about = "Compute-forward achievability analysis for two-user MIMO multiple-access channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep of achievability ratios over random channels.
    Sweep(SweepArgs),
    /// Per-power achievability verdicts for a fixed channel pair.
    Table1(TableArgs),
    /// Paired sweep comparing plain and permuted precoder search.
    PermCompare(SweepArgs),
    /// Single-instance achievability check.
    Check(CheckArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// TOML or JSON sweep configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CliFormat::Csv)]
    format: CliFormat,
    /// Override the unimodular search bound.
    #[arg(long)]
    entry_bound: Option<i64>,
}

#[derive(Args)]
struct TableArgs {
    /// TOML or JSON channel configuration; a built-in example channel
    /// pair is used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = CliFormat::Csv)]
    format: CliFormat,
    #[arg(long)]
    entry_bound: Option<i64>,
}

#[derive(Args)]
struct CheckArgs {
    /// TOML or JSON channel configuration with a `p_db` field.
    #[arg(long)]
    config: PathBuf,
    /// Which scheme to check.
    #[arg(long, value_enum, default_value_t = CliScheme::Both)]
    scheme: CliScheme,
    #[arg(long)]
    entry_bound: Option<i64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliFormat {
    Csv,
    Json,
}

impl From<CliFormat> for Format {
    fn from(f: CliFormat) -> Format {
        match f {
            CliFormat::Csv => Format::Csv,
            CliFormat::Json => Format::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliScheme {
    Scs,
    Pcs,
    Both,
}

/// Channel-instance configuration for `table1` and `check`.
#[derive(Debug, Deserialize)]
struct ChannelConfig {
    h1: Vec<Vec<f64>>,
    h2: Vec<Vec<f64>>,
    #[serde(default)]
    power_grid_db: Vec<f64>,
    #[serde(default)]
    p_db: Option<f64>,
    #[serde(default)]
    pcs_search: Option<PcsSearch>,
}

fn parse_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let is_json = path.extension().map(|e| e == "json").unwrap_or(false)
        || text.trim_start().starts_with('{');
    if is_json {
        serde_json::from_str(&text).map_err(|e| format!("invalid JSON config: {e}"))
    } else {
        toml::from_str(&text).map_err(|e| format!("invalid TOML config: {e}"))
    }
}

fn channel_from_config(cfg: &ChannelConfig) -> Result<ChannelPair, String> {
    let build = |rows: &Vec<Vec<f64>>, name: &str| -> Result<Matrix, String> {
        if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(format!("{name} must be a nonempty rectangular matrix"));
        }
        Ok(Matrix::from_rows(rows))
    };
    let h1 = build(&cfg.h1, "h1")?;
    let h2 = build(&cfg.h2, "h2")?;
    if (h1.rows(), h1.cols()) != (h2.rows(), h2.cols()) {
        return Err("h1 and h2 must share dimensions".into());
    }
    Ok(ChannelPair::new(h1, h2))
}

/// The worked example channel pair used throughout the documentation.
fn example_channels() -> ChannelPair {
    ChannelPair::new(
        Matrix::from_rows(&[vec![1.3, 1.2], vec![1.3, 1.8]]),
        Matrix::from_rows(&[vec![1.4, 1.2], vec![1.2, 1.9]]),
    )
}

fn write_artifact(artifact: &Artifact, format: Format, out: &Option<PathBuf>) -> Result<(), u8> {
    match out {
        Some(path) => emit(artifact, format, path).map_err(|e| {
            eprintln!("error: {e}");
            EXIT_IO
        }),
        None => {
            let text = render(artifact, format).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_IO
            })?;
            print!("{text}");
            Ok(())
        }
    }
}

fn run() -> Result<(), u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::Sweep(args) => {
            let mut cfg: SweepConfig = parse_config(&args.config).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_CONFIG
            })?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            if let Some(bound) = args.entry_bound {
                cfg.pcs_search.entry_bound = bound;
            }
            let curve = run_ra_sweep(&cfg).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_CONFIG
            })?;
            write_artifact(&Artifact::Sweep { config: cfg, curve }, args.format.into(), &args.out)
        }
        Command::PermCompare(args) => {
            let mut cfg: SweepConfig = parse_config(&args.config).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_CONFIG
            })?;
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            let rows = run_permutation_compare(&cfg).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_CONFIG
            })?;
            write_artifact(
                &Artifact::PermCompare { config: cfg, rows },
                args.format.into(),
                &args.out,
            )
        }
        Command::Table1(args) => {
            let (ch, mut grid, mut search) = match &args.config {
                Some(path) => {
                    let cfg: ChannelConfig = parse_config(path).map_err(|e| {
                        eprintln!("error: {e}");
                        EXIT_CONFIG
                    })?;
                    let ch = channel_from_config(&cfg).map_err(|e| {
                        eprintln!("error: {e}");
                        EXIT_CONFIG
                    })?;
                    (ch, cfg.power_grid_db.clone(), cfg.pcs_search.unwrap_or_default())
                }
                None => (example_channels(), vec![], PcsSearch::default()),
            };
            if grid.is_empty() {
                grid = (0..=24).step_by(2).map(|p| p as f64).collect();
            }
            if let Some(bound) = args.entry_bound {
                search.entry_bound = bound;
            }
            let rows = run_table1(&ch, &grid, search).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_CONFIG
            })?;
            write_artifact(
                &Artifact::Table { power_grid_db: grid, rows },
                args.format.into(),
                &args.out,
            )
        }
        Command::Check(args) => {
            let cfg: ChannelConfig = parse_config(&args.config).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_CONFIG
            })?;
            let ch = channel_from_config(&cfg).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_CONFIG
            })?;
            let p_db = cfg.p_db.ok_or_else(|| {
                eprintln!("error: check requires a p_db field in the config");
                EXIT_CONFIG
            })?;
            let mut search = cfg.pcs_search.unwrap_or_default();
            if let Some(bound) = args.entry_bound {
                search.entry_bound = bound;
            }
            let p = db_to_linear(p_db);
            let cap = sum_capacity(&ch, p).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_CONFIG
            })?;
            println!("p_db = {p_db}, sum capacity = {:.6} bits", cap.c_sum);
            if matches!(args.scheme, CliScheme::Scs | CliScheme::Both) {
                let rep = scs_check_with_capacity(
                    &ch,
                    &cap.covariances,
                    cap.c_d,
                    PrecoderStrategy::Cholesky,
                )
                .map_err(|e| {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                })?;
                match rep.gamma_witness {
                    Some(g) if rep.achievable => {
                        println!("scs: achievable (scaling ratio {g:.6})")
                    }
                    _ => println!("scs: not achievable (min residual {:.3e})", rep.g_min_rel),
                }
            }
            if matches!(args.scheme, CliScheme::Pcs | CliScheme::Both) {
                let rep = pcs_check_with_capacity(&ch, &cap.covariances, search).map_err(|e| {
                    eprintln!("error: {e}");
                    EXIT_CONFIG
                })?;
                if rep.achievable {
                    let detail = rep
                        .witness
                        .map(|w| format!(" (coefficients {:?})", w.a))
                        .unwrap_or_default();
                    println!("pcs: achievable{detail}");
                } else {
                    println!("pcs: not achievable ({} candidates tried)", rep.candidates_tried);
                }
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
