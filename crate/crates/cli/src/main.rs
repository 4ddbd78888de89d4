use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fedsim_core::config::{ConfigError, DataSource, ExperimentConfig, GridSpec};
use fedsim_core::data::{synthesize, write_csv, ColumnMapping, SynthSpec};
use fedsim_core::experiment::{inspect, run_grid, run_to_dir, ExperimentError};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_INTEGRITY: u8 = 3;

#[derive(Parser)]
#[command(name = "fedsim", version, about = "Federated time-series anomaly classification simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its run directory.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed; recorded in the resolved config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every cell of a grid, one run directory per cell.
    Grid {
        /// Base experiment config.
        #[arg(long)]
        config: PathBuf,
        /// Grid spec (pipelines and paradigm/topology cells); defaults to
        /// the 20-cell grid.
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Verify a run directory and print its summary.
    Inspect {
        run_dir: PathBuf,
    },
    /// Write a synthetic dataset as CSV.
    Synth {
        /// Synthetic spec, either bare or as the data section of an
        /// experiment config. Defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn experiment_failure(e: ExperimentError) -> ExitCode {
    let code = if e.is_validation() {
        EXIT_VALIDATION
    } else if e.is_integrity() {
        EXIT_INTEGRITY
    } else {
        EXIT_RUNTIME
    };
    fail(code, e)
}

fn config_failure(e: ConfigError) -> ExitCode {
    let code = match e {
        ConfigError::Read { .. } => EXIT_RUNTIME,
        _ => EXIT_VALIDATION,
    };
    fail(code, e)
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(config: &Path, seed: Option<u64>, out: &Path) -> ExitCode {
    let cfg = match load(config, seed) {
        Ok(c) => c,
        Err(e) => return config_failure(e),
    };
    let rounds = cfg.rounds;
    let result = run_to_dir(&cfg, out, |r| {
        let f1: f64 = r.validation.iter().map(|e| e.eval.macro_avg.f1).sum::<f64>() / r.validation.len().max(1) as f64;
        eprintln!(
            "round {}/{}: {} payloads, {} bytes, validation macro-F1 {f1:.4}",
            r.round + 1,
            rounds,
            r.payloads,
            r.bytes
        );
    });
    match result {
        Ok(run) => {
            let s = &run.report.test_summary;
            println!(
                "{}: test macro precision {:.4} recall {:.4} f1 {:.4}; {} bytes sent",
                run.config.name, s.macro_avg.precision, s.macro_avg.recall, s.macro_avg.f1, run.report.transport.bytes_sent
            );
            println!("wrote {}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => experiment_failure(e),
    }
}

fn cmd_grid(config: &Path, grid: Option<&Path>, seed: Option<u64>, out: &Path, jobs: usize) -> ExitCode {
    let base = match load(config, seed) {
        Ok(c) => c,
        Err(e) => return config_failure(e),
    };
    let spec = match grid {
        None => GridSpec::standard(),
        Some(p) => match std::fs::read_to_string(p) {
            Ok(text) => match GridSpec::from_toml(&text) {
                Ok(g) => g,
                Err(e) => return config_failure(e),
            },
            Err(e) => return fail(EXIT_RUNTIME, format!("{}: {e}", p.display())),
        },
    };
    let outcomes = match run_grid(&base, &spec, out, jobs) {
        Ok(o) => o,
        Err(e) => return experiment_failure(e),
    };
    let mut failed = 0;
    for o in &outcomes {
        match &o.result {
            Ok(r) => println!("{:<40} ok      macro-F1 {:.4}", o.config.name, r.test_summary.macro_avg.f1),
            Err(e) => {
                failed += 1;
                println!("{:<40} FAILED  {e}", o.config.name);
            }
        }
    }
    println!("{} of {} cells completed; summary in {}", outcomes.len() - failed, outcomes.len(), out.display());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_RUNTIME)
    }
}

fn cmd_inspect(dir: &Path) -> ExitCode {
    match inspect(dir) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => experiment_failure(e),
    }
}

fn synth_spec(path: &Path) -> Result<SynthSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if let Ok(cfg) = ExperimentConfig::from_toml(&text) {
        return match cfg.data.source {
            DataSource::Synthetic { synthetic } => Ok(synthetic),
            DataSource::Csv { .. } => Err(ConfigError::Invalid {
                field: "data.source".into(),
                message: "experiment config does not use synthetic data".into(),
            }),
        };
    }
    toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))
}

fn cmd_synth(config: Option<&Path>, seed: Option<u64>, out: &Path) -> ExitCode {
    let mut spec = match config.map(synth_spec).transpose() {
        Ok(s) => s.unwrap_or_default(),
        Err(e) => return config_failure(e),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Err(e) = spec.validate() {
        return fail(EXIT_VALIDATION, format!("invalid `synthetic`: {e}"));
    }
    let records = match synthesize(&spec) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_RUNTIME, e),
    };
    let mapping = ColumnMapping::generic(spec.n_features);
    let written = File::create(out)
        .map_err(|e| e.to_string())
        .and_then(|f| write_csv(BufWriter::new(f), &records, &mapping).map_err(|e| e.to_string()));
    match written {
        Ok(()) => {
            println!("wrote {} rows to {}", records.len(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let _ = std::fs::remove_file(out);
            fail(EXIT_RUNTIME, format!("{}: {e}", out.display()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    match &cli.command {
        Command::Run { config, seed, out } => cmd_run(config, *seed, out),
        Command::Grid { config, grid, seed, out, jobs } => cmd_grid(config, grid.as_deref(), *seed, out, *jobs),
        Command::Inspect { run_dir } => cmd_inspect(run_dir),
        Command::Synth { config, seed, out } => cmd_synth(config.as_deref(), *seed, out),
    }
}
